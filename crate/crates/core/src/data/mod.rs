//! Dataset manifests, deterministic train/test splits, the perturbation
//! suite and the synthetic injection oracle.

pub mod jpeg;
pub mod oracle;
pub mod perturb;

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detector::Label;
use crate::error::{DifError, Result};
use crate::image::{self, Image};

mod label_lower {
    use super::Label;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(l: &Label, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(if l.is_generated() { "generated" } else { "real" })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Label, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub path: PathBuf,
    #[serde(with = "label_lower")]
    pub label: Label,
    #[serde(default)]
    pub model_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub working_size: usize,
    pub split_seed: u64,
    pub entries: Vec<Entry>,
}

impl Manifest {
    /// Reads a manifest; relative entry paths are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DifError::io(path, e))?;
        let mut m: Manifest = serde_json::from_str(&text)
            .map_err(|e| DifError::Config(format!("manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut m.entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| DifError::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.working_size == 0 {
            return Err(DifError::Config("manifest working_size must be positive".into()));
        }
        if self.entries.is_empty() {
            return Err(DifError::Data("manifest has no entries".into()));
        }
        for e in &self.entries {
            if !e.path.exists() {
                return Err(DifError::Data(format!("manifest entry {} does not exist", e.path.display())));
            }
        }
        Ok(())
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    /// The model id of the generated entries, if they agree.
    pub fn source_model_id(&self) -> String {
        let mut ids = self.entries.iter().filter(|e| e.label.is_generated()).map(|e| e.model_id.as_str());
        match ids.next() {
            Some(first) if ids.all(|i| i == first) => first.to_string(),
            Some(_) => "mixed".into(),
            None => String::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub path: PathBuf,
    pub label: Label,
    pub model_id: String,
    pub image: Image,
}

#[derive(Clone, Debug, Default)]
pub struct Split {
    pub samples: Vec<Sample>,
}

impl Split {
    pub fn images(&self, label: Label) -> Vec<Image> {
        self.samples.iter().filter(|s| s.label == label).map(|s| s.image.clone()).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Splits {
    pub train: Split,
    pub test: Split,
    /// Entries smaller than the working size.
    pub skipped: usize,
}

/// Loads and center-crops every entry, then shuffles each class with the
/// split seed and sends the first half (rounded down) to train.
pub fn load_and_split(m: &Manifest) -> Result<Splits> {
    let mut out = Splits::default();
    for (k, label) in [Label::Real, Label::Generated].into_iter().enumerate() {
        let mut loaded = Vec::new();
        for e in m.entries.iter().filter(|e| e.label == label) {
            let img = image::load(&e.path)?;
            match image::center_crop(&img, m.working_size)? {
                Some(image) => loaded.push(Sample {
                    path: e.path.clone(),
                    label,
                    model_id: e.model_id.clone(),
                    image,
                }),
                None => {
                    log::warn!("skipping {}: smaller than {}", e.path.display(), m.working_size);
                    out.skipped += 1;
                }
            }
        }
        if loaded.is_empty() {
            return Err(DifError::Data(format!("no usable {label:?} images in manifest")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(m.split_seed);
        rng.set_stream(k as u64);
        loaded.shuffle(&mut rng);
        let test = loaded.split_off(loaded.len() / 2);
        out.train.samples.extend(loaded);
        out.test.samples.extend(test);
    }
    Ok(out)
}

/// Writes an oracle corpus as PNGs plus a manifest; returns the manifest path.
pub fn write_oracle_corpus(cfg: &oracle::OracleConfig, dir: impl AsRef<Path>, split_seed: u64, model_id: &str) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let data = oracle::generate(cfg)?;
    let mut entries = Vec::new();
    for (label, sub, images) in [(Label::Real, "real", &data.real), (Label::Generated, "generated", &data.gen)] {
        std::fs::create_dir_all(dir.join(sub)).map_err(|e| DifError::io(dir.join(sub), e))?;
        for (i, img) in images.iter().enumerate() {
            let rel = PathBuf::from(sub).join(format!("{i:05}.png"));
            image::save(dir.join(&rel), img)?;
            entries.push(Entry {
                path: rel,
                label,
                model_id: if label.is_generated() { model_id.into() } else { "real".into() },
            });
        }
    }
    let manifest = Manifest {
        working_size: cfg.size,
        split_seed,
        entries,
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dif_nn::Tensor;

    fn corpus(dir: &Path, n_real: usize, n_gen: usize, size: usize) -> Manifest {
        let mut entries = Vec::new();
        for i in 0..n_real + n_gen {
            let p = dir.join(format!("{i}.png"));
            let img = Tensor::from_fn(&[3, size, size], |k| ((k * 7 + i * 13) % 256) as f32 / 255.0);
            image::save(&p, &img).unwrap();
            entries.push(Entry {
                path: p,
                label: Label::from_generated(i >= n_real),
                model_id: "m".into(),
            });
        }
        Manifest {
            working_size: 8,
            split_seed: 42,
            entries,
        }
    }

    #[test]
    fn balanced_halves() {
        let dir = tempfile::tempdir().unwrap();
        let m = corpus(dir.path(), 4, 4, 8);
        let s = load_and_split(&m).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (4, 4));
        assert_eq!(s.train.count(Label::Real), 2);
        assert_eq!(s.test.count(Label::Generated), 2);
    }

    #[test]
    fn deterministic_and_disjoint() {
        let dir = tempfile::tempdir().unwrap();
        let m = corpus(dir.path(), 50, 50, 8);
        let (a, b) = (load_and_split(&m).unwrap(), load_and_split(&m).unwrap());
        let paths = |s: &Split| s.samples.iter().map(|x| x.path.clone()).collect::<Vec<_>>();
        assert_eq!(paths(&a.train), paths(&b.train));
        let train: std::collections::HashSet<_> = paths(&a.train).into_iter().collect();
        assert!(paths(&a.test).iter().all(|p| !train.contains(p)));
        assert_eq!(train.len() + a.test.len(), 100);
    }

    #[test]
    fn small_images_skipped_and_empty_class_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = corpus(dir.path(), 2, 2, 8);
        m.working_size = 9;
        assert!(matches!(load_and_split(&m), Err(DifError::Data(_))));
        let big = dir.path().join("big.png");
        image::save(&big, &Tensor::full(&[3, 12, 12], 0.5)).unwrap();
        m.entries.push(Entry { path: big.clone(), label: Label::Real, model_id: String::new() });
        m.entries.push(Entry { path: big, label: Label::Generated, model_id: String::new() });
        let s = load_and_split(&m).unwrap();
        assert_eq!(s.skipped, 4);
        assert_eq!(s.train.len() + s.test.len(), 2);
    }

    #[test]
    fn crop_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let src = Tensor::from_fn(&[3, 12, 12], |k| ((k * 31) % 256) as f32 / 255.0);
        image::save(&p, &src).unwrap();
        let m = Manifest {
            working_size: 6,
            split_seed: 0,
            entries: vec![
                Entry { path: p.clone(), label: Label::Real, model_id: String::new() },
                Entry { path: p, label: Label::Generated, model_id: String::new() },
            ],
        };
        let s = load_and_split(&m).unwrap();
        let got = &s.test.samples[0].image;
        let want = image::crop(&src, 3, 3, 6, 6).unwrap();
        assert_eq!(got, &want);
    }

    #[test]
    fn manifest_round_trip_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = oracle::OracleConfig {
            size: 8,
            count: 2,
            pattern: oracle::OraclePattern::new(oracle::PatternKind::Checkerboard { period: 2 }, 4.0),
            noise_sigma: 0.0,
            seed: 1,
        };
        let path = write_oracle_corpus(&cfg, dir.path(), 3, "oracle").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"generated\""));
        let m = Manifest::load(&path).unwrap();
        assert_eq!(m.count(Label::Generated), 2);
        assert_eq!(m.source_model_id(), "oracle");
        assert!(m.entries.iter().all(|e| e.path.is_absolute() || e.path.starts_with(dir.path())));
    }
}
