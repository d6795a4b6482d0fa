//! Nearest-mean hypothesis test, accuracy metrics, cross-detection and
//! lineage clustering.

use std::path::Path;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{DifError, Result};
use crate::fingerprint::{correlation, FingerprintRecord};
use crate::image::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Real,
    Generated,
}

impl Label {
    pub fn from_generated(generated: bool) -> Self {
        if generated {
            Label::Generated
        } else {
            Label::Real
        }
    }

    pub fn is_generated(self) -> bool {
        self == Label::Generated
    }
}

impl std::str::FromStr for Label {
    type Err = DifError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Ok(Label::Real),
            "generated" | "gen" | "fake" => Ok(Label::Generated),
            other => Err(DifError::Data(format!("unknown label '{other}'"))),
        }
    }
}

/// Generated iff `rho` is strictly closer to `mu_gen` than to `mu_real`.
pub fn decide(rho: f64, mu_real: f64, mu_gen: f64) -> Label {
    Label::from_generated((rho - mu_gen).abs() < (rho - mu_real).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: Label,
    /// `None` when the residual had no variance to correlate.
    pub rho: Option<f64>,
}

pub fn classify(residual: &Image, record: &FingerprintRecord) -> Result<Detection> {
    if residual.shape() != record.fingerprint.shape() {
        return Err(DifError::Data(format!(
            "residual shape {:?} does not match fingerprint {:?}",
            residual.shape(),
            record.fingerprint.shape()
        )));
    }
    match correlation(residual, &record.fingerprint, record.scope) {
        Ok(rho) => Ok(Detection {
            label: decide(rho, record.mu_real, record.mu_gen),
            rho: Some(rho),
        }),
        Err(DifError::Degenerate(_)) => Ok(Detection {
            label: Label::Real,
            rho: None,
        }),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Percent of correct decisions.
    pub accuracy: f64,
    /// Percent of generated images detected; `None` without generated images.
    pub tpr: Option<f64>,
    /// Percent of real images passed; `None` without real images.
    pub tnr: Option<f64>,
    pub n_real: usize,
    pub n_gen: usize,
    pub true_pos: usize,
    pub true_neg: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

impl Metrics {
    /// Tally `(truth, predicted)` pairs.
    pub fn from_decisions(pairs: impl IntoIterator<Item = (Label, Label)>) -> Result<Self> {
        let mut m = Metrics::default();
        for (truth, pred) in pairs {
            match (truth, pred) {
                (Label::Generated, Label::Generated) => m.true_pos += 1,
                (Label::Generated, Label::Real) => m.false_neg += 1,
                (Label::Real, Label::Real) => m.true_neg += 1,
                (Label::Real, Label::Generated) => m.false_pos += 1,
            }
        }
        m.n_gen = m.true_pos + m.false_neg;
        m.n_real = m.true_neg + m.false_pos;
        let total = m.n_gen + m.n_real;
        if total == 0 {
            return Err(DifError::Data("cannot evaluate an empty dataset".into()));
        }
        let pct = |a: usize, b: usize| (b > 0).then(|| 100.0 * a as f64 / b as f64);
        m.accuracy = 100.0 * (m.true_pos + m.true_neg) as f64 / total as f64;
        m.tpr = pct(m.true_pos, m.n_gen);
        m.tnr = pct(m.true_neg, m.n_real);
        Ok(m)
    }
}

/// Residuals of one dataset, split by class, extracted with one filter.
#[derive(Clone, Debug, Default)]
pub struct ResidualSet {
    pub id: String,
    pub filter_id: String,
    pub real: Vec<Image>,
    pub gen: Vec<Image>,
}

impl ResidualSet {
    pub fn labeled(&self) -> impl Iterator<Item = (Label, &Image)> {
        self.real
            .iter()
            .map(|r| (Label::Real, r))
            .chain(self.gen.iter().map(|r| (Label::Generated, r)))
    }

    fn working_size(&self) -> Option<usize> {
        self.labeled().next().map(|(_, r)| r.shape().last().copied().unwrap_or(0))
    }
}

pub fn evaluate(set: &ResidualSet, record: &FingerprintRecord) -> Result<Metrics> {
    let decisions = set
        .labeled()
        .map(|(truth, r)| classify(r, record).map(|d| (truth, d.label)))
        .collect::<Result<Vec<_>>>()?;
    Metrics::from_decisions(decisions)
}

/// Square table of values with ids on both axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub ids: Vec<String>,
    /// `values[i][j]`: row `i` (fingerprint), column `j` (dataset).
    pub values: Vec<Vec<f64>>,
}

impl LabeledMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| DifError::Data(format!("csv: {e}"));
        let mut header = vec!["id".to_string()];
        header.extend(self.ids.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (id, row) in self.ids.iter().zip(&self.values) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| DifError::Data(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| DifError::Data(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let csv_err = |e: csv::Error| DifError::Data(format!("csv: {e}"));
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let ids: Vec<String> = r.headers().map_err(csv_err)?.iter().skip(1).map(String::from).collect();
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.get(0) != ids.get(i).map(String::as_str) {
                return Err(DifError::Data(format!("row {i} id does not match the header order")));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<f64>().map_err(|_| DifError::Data(format!("bad value '{v}' in row {i}"))))
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        let m = Self { ids, values };
        m.check_square()?;
        Ok(m)
    }

    fn check_square(&self) -> Result<()> {
        let n = self.ids.len();
        if self.values.len() != n || self.values.iter().any(|r| r.len() != n) {
            return Err(DifError::Data(format!("matrix is not {n}x{n}")));
        }
        Ok(())
    }

    /// Cell-per-block heatmap scaled between `lo` (blue) and `hi` (red).
    pub fn save_heatmap(&self, path: impl AsRef<Path>, lo: f64, hi: f64) -> Result<()> {
        const CELL: u32 = 24;
        let n = self.ids.len() as u32;
        let mut img = RgbImage::new(n.max(1) * CELL, n.max(1) * CELL);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
                let px = Rgb([(255.0 * t) as u8, 40, (255.0 * (1.0 - t)) as u8]);
                for y in 0..CELL {
                    for x in 0..CELL {
                        img.put_pixel(j as u32 * CELL + x, i as u32 * CELL + y, px);
                    }
                }
            }
        }
        let path = path.as_ref();
        img.save(path).map_err(|e| DifError::Image {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }
}

/// `acc[i][j]`: accuracy of fingerprint `i` on dataset `j` (its real and generated halves).
pub fn cross_detect(records: &[FingerprintRecord], datasets: &[ResidualSet]) -> Result<LabeledMatrix> {
    if records.len() != datasets.len() || records.is_empty() {
        return Err(DifError::Config(format!(
            "{} fingerprints for {} datasets; cross-detection needs one per dataset",
            records.len(),
            datasets.len()
        )));
    }
    for (rec, ds) in records.iter().zip(datasets) {
        for d in datasets {
            if d.working_size() != Some(rec.working_size) {
                return Err(DifError::Config(format!(
                    "dataset '{}' is not at the working size {} of fingerprint '{}'",
                    d.id, rec.working_size, rec.source_model_id
                )));
            }
            if !d.filter_id.is_empty() && !rec.denoiser_id.is_empty() && d.filter_id != rec.denoiser_id {
                return Err(DifError::Config(format!(
                    "dataset '{}' residuals come from another denoiser than fingerprint of '{}'",
                    d.id, ds.id
                )));
            }
        }
    }
    let values = records
        .iter()
        .map(|rec| datasets.iter().map(|d| evaluate(d, rec).map(|m| m.accuracy)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(LabeledMatrix {
        ids: datasets.iter().map(|d| d.id.clone()).collect(),
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelatedPair {
    pub a: String,
    pub b: String,
    pub min_acc: f64,
    pub asymmetry: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineageReport {
    pub t_high: f64,
    pub t_sym: f64,
    pub related_pairs: Vec<RelatedPair>,
    /// Connected components of the related-pair graph, singletons included.
    pub clusters: Vec<Vec<String>>,
}

pub const DEFAULT_T_HIGH: f64 = 80.0;
pub const DEFAULT_T_SYM: f64 = 10.0;

/// Pairs with high and symmetric cross-detection, closed transitively.
pub fn lineage_clusters(m: &LabeledMatrix, t_high: f64, t_sym: f64) -> Result<LineageReport> {
    m.check_square()?;
    let n = m.ids.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut related_pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (ab, ba) = (m.get(i, j), m.get(j, i));
            let min_acc = ab.min(ba);
            let asymmetry = (ab - ba).abs();
            if min_acc >= t_high && asymmetry <= t_sym {
                related_pairs.push(RelatedPair {
                    a: m.ids[i].clone(),
                    b: m.ids[j].clone(),
                    min_acc,
                    asymmetry,
                });
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    Ok(LineageReport {
        t_high,
        t_sym,
        related_pairs,
        clusters: groups
            .into_iter()
            .map(|g| g.into_iter().map(|i| m.ids[i].clone()).collect())
            .collect(),
    })
}

/// Pairwise `|rho(F_i, F_j)|`.
pub fn fingerprint_cross_correlation(ids: &[String], fingerprints: &[Image], scope: crate::CorrelationScope) -> Result<LabeledMatrix> {
    if ids.len() != fingerprints.len() {
        return Err(DifError::Config("one id per fingerprint".into()));
    }
    let n = fingerprints.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let r = correlation(&fingerprints[i], &fingerprints[j], scope)?.abs();
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(LabeledMatrix {
        ids: ids.to_vec(),
        values,
    })
}
