use std::path::{Path, PathBuf};

use dif_core::checkpoint::sha256_hex;
use dif_core::data::oracle::{OracleConfig, OraclePattern, PatternKind};
use dif_core::data::perturb::{perturb_item, Perturbation};
use dif_core::data::{self, jpeg, load_and_split, Manifest, Split, Splits};
use dif_core::denoiser::{train_dncnn, DenoiserBundle, HighPass, ResidualFilter};
use dif_core::detector::{classify, cross_detect, evaluate, lineage_clusters, LabeledMatrix, ResidualSet};
use dif_core::fingerprint::{averaged_record, extract_fingerprint};
use dif_core::lab::{reconstruct_monochrome, score_run};
use dif_core::{image, Checkpoint, DifError, FingerprintRecord, Image, Label, Metrics, Result};
use dif_nn::ModelSpec;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::provenance::{self, FileHash, Provenance};
use crate::{Cli, Command};

struct Ctx {
    cfg: RunConfig,
    seed: Option<u64>,
    prov: Provenance,
    prov_path: Option<PathBuf>,
}

impl Ctx {
    /// Record the main output, then write provenance next to it unless a
    /// location was given explicitly.
    fn finish(mut self, main_output: Option<&Path>, summary: Value) -> Result<()> {
        self.prov.config = serde_json::to_value(&self.cfg)?;
        self.prov.summary = summary;
        let path = self.prov_path.or_else(|| main_output.map(provenance::path_for));
        if let Some(p) = path {
            self.prov.write(&p)?;
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut ctx = Ctx {
        cfg,
        seed: cli.seed,
        prov: Provenance::new(command_name(&cli.cmd), json!(args), Value::Null),
        prov_path: cli.provenance,
    };
    if let Some(c) = &cli.config {
        ctx.prov.input(c)?;
    }
    match cli.cmd {
        Command::TrainDenoiser { manifest, out, flags } => {
            flags.apply(&mut ctx.cfg.denoiser, ctx.seed);
            train_denoiser(ctx, &manifest, &out)
        }
        Command::Extract {
            manifest,
            denoiser,
            out,
            method,
            train_samples,
            flags,
        } => {
            flags.apply(&mut ctx.cfg.extraction, ctx.seed);
            extract(ctx, &manifest, &denoiser, &out, &method, train_samples)
        }
        Command::Detect {
            fingerprint,
            denoiser,
            manifest,
            image,
            split,
            out,
            csv,
        } => detect(ctx, &fingerprint, &denoiser, manifest.as_deref(), image.as_deref(), &split, out.as_deref(), csv.as_deref()),
        Command::CrossDetect {
            fingerprints,
            manifests,
            denoiser,
            ids,
            split,
            out,
            heatmap,
        } => cross(ctx, &fingerprints, &manifests, &denoiser, ids, &split, &out, heatmap.as_deref()),
        Command::Lineage { matrix, t_high, t_sym, out } => {
            if let Some(t) = t_high {
                ctx.cfg.lineage.t_high = t;
            }
            if let Some(t) = t_sym {
                ctx.cfg.lineage.t_sym = t;
            }
            lineage(ctx, &matrix, out.as_deref())
        }
        Command::MonochromeLab {
            arch,
            size,
            steps,
            gray,
            out_dir,
        } => monochrome_lab(ctx, ModelSpec::new(arch, size, cli.seed.unwrap_or(0)), steps, gray, &out_dir),
        Command::Perturb {
            in_dir,
            out_dir,
            kind,
            quality,
            sigma,
        } => {
            let p = parse_perturbation(&kind, quality, sigma, cli.seed.unwrap_or(0))?;
            perturb_dir(ctx, &in_dir, &out_dir, &p)
        }
        Command::SweepTrainSize {
            manifest,
            denoiser,
            sizes,
            out,
            flags,
        } => {
            flags.apply(&mut ctx.cfg.extraction, ctx.seed);
            sweep(ctx, &manifest, &denoiser, &sizes, &out)
        }
        Command::Oracle {
            pattern,
            amplitude,
            count,
            size,
            noise,
            model_id,
            out,
        } => {
            let cfg = OracleConfig {
                size,
                count,
                pattern: OraclePattern::new(parse_pattern(&pattern)?, amplitude),
                noise_sigma: noise,
                seed: cli.seed.unwrap_or(0),
            };
            oracle(ctx, &cfg, &model_id, &out)
        }
        Command::JpegQuality { dir } => {
            let stats = jpeg::jpeg_quality_stats(&dir)?;
            let v = serde_json::to_value(&stats)?;
            println!("{}", serde_json::to_string(&v)?);
            ctx.finish(None, v)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::TrainDenoiser { .. } => "train-denoiser",
        Command::Extract { .. } => "extract",
        Command::Detect { .. } => "detect",
        Command::CrossDetect { .. } => "cross-detect",
        Command::Lineage { .. } => "lineage",
        Command::MonochromeLab { .. } => "monochrome-lab",
        Command::Perturb { .. } => "perturb",
        Command::SweepTrainSize { .. } => "sweep-train-size",
        Command::Oracle { .. } => "oracle",
        Command::JpegQuality { .. } => "jpeg-quality",
    }
}

/// Loads, splits and hashes a manifest and every image it lists.
fn load_manifest(prov: &mut Provenance, path: &Path) -> Result<(Manifest, Splits)> {
    let m = Manifest::load(path)?;
    prov.input(path)?;
    let mut corpus = Vec::new();
    for e in &m.entries {
        let bytes = std::fs::read(&e.path).map_err(|err| DifError::io(&e.path, err))?;
        corpus.extend_from_slice(sha256_hex(&bytes).as_bytes());
    }
    prov.inputs.push(FileHash {
        path: format!("{}#images", path.display()),
        sha256: sha256_hex(&corpus),
    });
    let splits = load_and_split(&m)?;
    if splits.skipped > 0 {
        log::warn!("{} images smaller than {} were skipped", splits.skipped, m.working_size);
    }
    Ok((m, splits))
}

/// `highpass`, `highpass:SIGMA` or a denoiser checkpoint path.
fn load_filter(prov: &mut Provenance, spec: &str) -> Result<Box<dyn ResidualFilter>> {
    if let Some(rest) = spec.strip_prefix("highpass") {
        let sigma = match rest.strip_prefix(':') {
            Some(s) => s
                .parse()
                .map_err(|_| DifError::Config(format!("bad high-pass sigma '{s}'")))?,
            None if rest.is_empty() => HighPass::DEFAULT_SIGMA,
            None => return Err(DifError::Config(format!("unknown filter '{spec}'"))),
        };
        return Ok(Box::new(HighPass::new(sigma)?));
    }
    let path = Path::new(spec);
    let bundle = DenoiserBundle::from_checkpoint(&Checkpoint::read(path)?)?;
    prov.input(path)?;
    Ok(Box::new(bundle))
}

fn residuals(filter: &dyn ResidualFilter, images: &[Image]) -> Result<Vec<Image>> {
    images.iter().map(|x| filter.residual(x)).collect()
}

fn pick_split<'a>(s: &'a Splits, which: &str) -> Result<Vec<&'a data::Sample>> {
    match which {
        "test" => Ok(s.test.samples.iter().collect()),
        "train" => Ok(s.train.samples.iter().collect()),
        "all" => Ok(s.train.samples.iter().chain(&s.test.samples).collect()),
        other => Err(DifError::Config(format!("unknown split '{other}' (test, train, all)"))),
    }
}

fn residual_set(filter: &dyn ResidualFilter, id: &str, samples: &[&data::Sample]) -> Result<ResidualSet> {
    let mut set = ResidualSet {
        id: id.to_string(),
        filter_id: filter.id().to_string(),
        ..Default::default()
    };
    for s in samples {
        let r = filter.residual(&s.image)?;
        match s.label {
            Label::Real => set.real.push(r),
            Label::Generated => set.gen.push(r),
        }
    }
    Ok(set)
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v)?).map_err(|e| DifError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| DifError::io(path, e))
}

fn train_denoiser(mut ctx: Ctx, manifest: &Path, out: &Path) -> Result<()> {
    let (_, splits) = load_manifest(&mut ctx.prov, manifest)?;
    let reals = splits.train.images(Label::Real);
    let bundle = train_dncnn(&reals, &ctx.cfg.denoiser)?;
    bundle.to_checkpoint()?.write(out)?;
    ctx.prov.output(out)?;
    let summary = json!({
        "denoiser_id": bundle.id(),
        "training_images": reals.len().min(ctx.cfg.denoiser.images),
        "working_size": bundle.working_size,
        "final_loss": bundle.loss_history.last(),
    });
    println!("{summary}");
    ctx.finish(Some(out), summary)
}

fn take_per_class(split: &Split, limit: Option<usize>) -> Result<(Vec<Image>, Vec<Image>)> {
    let (mut real, mut gen) = (split.images(Label::Real), split.images(Label::Generated));
    if let Some(n) = limit {
        let per = n / 2;
        if per == 0 || per > real.len() || per > gen.len() {
            return Err(DifError::Data(format!(
                "{n} training samples requested, the split has {} real and {} generated",
                real.len(),
                gen.len()
            )));
        }
        real.truncate(per);
        gen.truncate(per);
    }
    Ok((real, gen))
}

fn fingerprint_from(
    cfg: &RunConfig,
    filter: &dyn ResidualFilter,
    real: &[Image],
    gen: &[Image],
    source: &str,
    method: &str,
) -> Result<(FingerprintRecord, Value)> {
    let (rr, rg) = (residuals(filter, real)?, residuals(filter, gen)?);
    match method {
        "extraction" => {
            let ex = extract_fingerprint(&rr, &rg, filter.id(), source, &cfg.extraction)?;
            let info = json!({ "stalled": ex.stalled, "final_loss": ex.loss_history.last() });
            Ok((ex.record, info))
        }
        "averaging" => Ok((averaged_record(&rr, &rg, filter.id(), source, cfg.extraction.scope)?, Value::Null)),
        other => Err(DifError::Config(format!("unknown method '{other}' (extraction, averaging)"))),
    }
}

fn extract(mut ctx: Ctx, manifest: &Path, denoiser: &str, out: &Path, method: &str, limit: Option<usize>) -> Result<()> {
    ctx.cfg.extraction.validate()?;
    let filter = load_filter(&mut ctx.prov, denoiser)?;
    let (m, splits) = load_manifest(&mut ctx.prov, manifest)?;
    let (real, gen) = take_per_class(&splits.train, limit)?;
    let (record, info) = fingerprint_from(&ctx.cfg, filter.as_ref(), &real, &gen, &m.source_model_id(), method)?;
    record.to_checkpoint()?.write(out)?;
    ctx.prov.output(out)?;
    let summary = json!({ "record": record, "training": info });
    println!("{}", serde_json::to_string(&summary)?);
    ctx.finish(Some(out), summary)
}

fn load_record(prov: &mut Provenance, path: &Path) -> Result<FingerprintRecord> {
    let rec = FingerprintRecord::from_checkpoint(&Checkpoint::read(path)?)?;
    prov.input(path)?;
    Ok(rec)
}

fn check_denoiser(rec: &FingerprintRecord, filter: &dyn ResidualFilter) -> Result<()> {
    if rec.denoiser_id != filter.id() {
        return Err(DifError::Config(format!(
            "fingerprint was extracted with denoiser '{}', not '{}'",
            rec.denoiser_id,
            filter.id()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct Decision {
    path: String,
    truth: Label,
    label: Label,
    rho: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn detect(
    mut ctx: Ctx,
    fingerprint: &Path,
    denoiser: &str,
    manifest: Option<&Path>,
    single: Option<&Path>,
    split: &str,
    out: Option<&Path>,
    csv_out: Option<&Path>,
) -> Result<()> {
    let rec = load_record(&mut ctx.prov, fingerprint)?;
    let filter = load_filter(&mut ctx.prov, denoiser)?;
    check_denoiser(&rec, filter.as_ref())?;

    if let Some(path) = single {
        let img = image::load(path)?;
        ctx.prov.input(path)?;
        let img = image::center_crop(&img, rec.working_size)?.ok_or_else(|| {
            DifError::Data(format!("{} is smaller than the working size {}", path.display(), rec.working_size))
        })?;
        let d = classify(&filter.residual(&img)?, &rec)?;
        let v = serde_json::to_value(d)?;
        println!("{}", serde_json::to_string(&v)?);
        if let Some(o) = out {
            write_json(o, &v)?;
            ctx.prov.output(o)?;
        }
        return ctx.finish(out, v);
    }

    let manifest = manifest.ok_or_else(|| DifError::Config("detect needs --manifest or --image".into()))?;
    let (_, splits) = load_manifest(&mut ctx.prov, manifest)?;
    let samples = pick_split(&splits, split)?;
    let mut decisions = Vec::with_capacity(samples.len());
    for s in &samples {
        let d = classify(&filter.residual(&s.image)?, &rec)?;
        decisions.push(Decision {
            path: s.path.display().to_string(),
            truth: s.label,
            label: d.label,
            rho: d.rho,
        });
    }
    let metrics = Metrics::from_decisions(decisions.iter().map(|d| (d.truth, d.label)))?;
    let v = serde_json::to_value(&metrics)?;
    println!("{}", serde_json::to_string(&v)?);
    if let Some(o) = out {
        write_json(o, &metrics)?;
        ctx.prov.output(o)?;
    }
    if let Some(c) = csv_out {
        let mut w = csv::Writer::from_path(c).map_err(|e| DifError::Data(format!("{}: {e}", c.display())))?;
        for d in &decisions {
            w.serialize(d).map_err(|e| DifError::Data(format!("{}: {e}", c.display())))?;
        }
        w.flush().map_err(|e| DifError::io(c, e))?;
        ctx.prov.output(c)?;
    }
    ctx.finish(out.or(csv_out), v)
}

#[allow(clippy::too_many_arguments)]
fn cross(
    mut ctx: Ctx,
    fingerprints: &[PathBuf],
    manifests: &[PathBuf],
    denoiser: &str,
    ids: Option<Vec<String>>,
    split: &str,
    out: &Path,
    heatmap: Option<&Path>,
) -> Result<()> {
    if fingerprints.len() != manifests.len() {
        return Err(DifError::Config(format!(
            "{} fingerprints but {} manifests",
            fingerprints.len(),
            manifests.len()
        )));
    }
    let filter = load_filter(&mut ctx.prov, denoiser)?;
    let records = fingerprints
        .iter()
        .map(|p| load_record(&mut ctx.prov, p))
        .collect::<Result<Vec<_>>>()?;
    for r in &records {
        check_denoiser(r, filter.as_ref())?;
    }
    let mut sets = Vec::new();
    let mut names = Vec::new();
    for (i, mpath) in manifests.iter().enumerate() {
        let (m, splits) = load_manifest(&mut ctx.prov, mpath)?;
        let name = match &ids {
            Some(v) => v
                .get(i)
                .cloned()
                .ok_or_else(|| DifError::Config(format!("{} ids for {} manifests", v.len(), manifests.len())))?,
            None => m.source_model_id(),
        };
        sets.push(residual_set(filter.as_ref(), &name, &pick_split(&splits, split)?)?);
        names.push(name);
    }
    let unique: std::collections::HashSet<_> = names.iter().collect();
    if unique.len() != names.len() {
        return Err(DifError::Config(format!("dataset ids are not unique: {names:?}; pass --ids")));
    }
    let matrix = cross_detect(&records, &sets)?;
    std::fs::write(out, matrix.to_csv()?).map_err(|e| DifError::io(out, e))?;
    ctx.prov.output(out)?;
    if let Some(h) = heatmap {
        matrix.save_heatmap(h, 0.0, 100.0)?;
        ctx.prov.output(h)?;
    }
    let v = serde_json::to_value(&matrix)?;
    println!("{}", serde_json::to_string(&v)?);
    ctx.finish(Some(out), v)
}

fn lineage(mut ctx: Ctx, matrix: &Path, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(matrix).map_err(|e| DifError::io(matrix, e))?;
    ctx.prov.input(matrix)?;
    let m = LabeledMatrix::from_csv(&text)?;
    let report = lineage_clusters(&m, ctx.cfg.lineage.t_high, ctx.cfg.lineage.t_sym)?;
    let v = serde_json::to_value(&report)?;
    println!("{}", serde_json::to_string(&v)?);
    if let Some(o) = out {
        write_json(o, &report)?;
        ctx.prov.output(o)?;
    }
    ctx.finish(out, v)
}

fn monochrome_lab(mut ctx: Ctx, spec: ModelSpec, steps: usize, gray: f64, dir: &Path) -> Result<()> {
    let run = reconstruct_monochrome(&spec, gray, steps, spec.seed)?;
    let (spectrum, scores) = score_run(&run)?;
    create_dir(dir)?;
    let (artifact, spec_png, scores_json) = (dir.join("artifact.png"), dir.join("spectrum.png"), dir.join("scores.json"));
    image::save(&artifact, &image::normalize_for_view(&run.artifact))?;
    spectrum.save_png(&spec_png)?;
    write_json(&scores_json, &scores)?;
    for p in [&artifact, &spec_png, &scores_json] {
        ctx.prov.output(p)?;
    }
    let v = serde_json::to_value(&scores)?;
    println!("{}", serde_json::to_string(&v)?);
    ctx.finish(Some(dir), v)
}

fn parse_perturbation(kind: &str, quality: Option<u8>, sigma: Option<f64>, seed: u64) -> Result<Perturbation> {
    let need = |what: &str| DifError::Config(format!("--kind {kind} needs --{what}"));
    let p = match kind {
        "none" => Perturbation::None,
        "jpeg" => Perturbation::Jpeg {
            quality: quality.ok_or_else(|| need("quality"))?,
        },
        "resize-half" => Perturbation::ResizeHalfNn,
        "blur" => Perturbation::GaussianBlur {
            sigma: sigma.ok_or_else(|| need("sigma"))?,
        },
        "mixed" => Perturbation::MixedRandom { seed },
        other => {
            return Err(DifError::Config(format!(
                "unknown perturbation '{other}' (none, jpeg, resize-half, blur, mixed)"
            )))
        }
    };
    p.validate()?;
    Ok(p)
}

fn is_image(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| DifError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, out)?;
        } else if is_image(&p) {
            out.push(p);
        }
    }
    Ok(())
}

/// Mirror `in_dir` into `out_dir` as PNGs; a manifest at the root is rewritten
/// to point at the new files.
fn perturb_dir(mut ctx: Ctx, in_dir: &Path, out_dir: &Path, p: &Perturbation) -> Result<()> {
    let mut files = Vec::new();
    walk(in_dir, &mut files)?;
    if files.is_empty() {
        return Err(DifError::Data(format!("no images under {}", in_dir.display())));
    }
    let mut digest = Vec::new();
    for (i, f) in files.iter().enumerate() {
        let rel = f.strip_prefix(in_dir).unwrap_or(f).with_extension("png");
        let dst = out_dir.join(&rel);
        if let Some(parent) = dst.parent() {
            create_dir(parent)?;
        }
        let img = perturb_item(&image::load(f)?, p, i)?;
        image::save(&dst, &img)?;
        digest.extend_from_slice(sha256_hex(&std::fs::read(&dst).map_err(|e| DifError::io(&dst, e))?).as_bytes());
    }
    let src_manifest = in_dir.join("manifest.json");
    if src_manifest.is_file() {
        let mut m = Manifest::load(&src_manifest)?;
        for e in &mut m.entries {
            if let Ok(rel) = e.path.strip_prefix(in_dir) {
                e.path = rel.with_extension("png");
            }
        }
        m.save(out_dir.join("manifest.json"))?;
        ctx.prov.input(&src_manifest)?;
        ctx.prov.output(&out_dir.join("manifest.json"))?;
    }
    ctx.prov.outputs.push(FileHash {
        path: format!("{}#images", out_dir.display()),
        sha256: sha256_hex(&digest),
    });
    let v = json!({ "perturbation": p, "images": files.len() });
    println!("{v}");
    ctx.finish(Some(out_dir), v)
}

#[derive(Serialize)]
struct SweepRow {
    n_s: usize,
    n_real: usize,
    n_gen: usize,
    accuracy: f64,
    tpr: Option<f64>,
    tnr: Option<f64>,
    mu_real: f64,
    mu_gen: f64,
}

fn sweep(mut ctx: Ctx, manifest: &Path, denoiser: &str, sizes: &[usize], out: &Path) -> Result<()> {
    ctx.cfg.extraction.validate()?;
    let filter = load_filter(&mut ctx.prov, denoiser)?;
    let (m, splits) = load_manifest(&mut ctx.prov, manifest)?;
    let test = residual_set(filter.as_ref(), "test", &splits.test.samples.iter().collect::<Vec<_>>())?;
    let mut rows = Vec::new();
    for &n in sizes {
        let (real, gen) = take_per_class(&splits.train, Some(n))?;
        let (rec, _) = fingerprint_from(&ctx.cfg, filter.as_ref(), &real, &gen, &m.source_model_id(), "extraction")?;
        let met = evaluate(&test, &rec)?;
        log::info!("N_S = {n}: accuracy {:.2}", met.accuracy);
        rows.push(SweepRow {
            n_s: n,
            n_real: real.len(),
            n_gen: gen.len(),
            accuracy: met.accuracy,
            tpr: met.tpr,
            tnr: met.tnr,
            mu_real: rec.mu_real,
            mu_gen: rec.mu_gen,
        });
    }
    let mut w = csv::Writer::from_path(out).map_err(|e| DifError::Data(format!("{}: {e}", out.display())))?;
    for r in &rows {
        w.serialize(r).map_err(|e| DifError::Data(format!("{}: {e}", out.display())))?;
    }
    w.flush().map_err(|e| DifError::io(out, e))?;
    ctx.prov.output(out)?;
    let v = serde_json::to_value(&rows)?;
    println!("{}", serde_json::to_string(&v)?);
    ctx.finish(Some(out), v)
}

/// `checkerboard:P`, `grid:P`, `random:SEED[:TILE]`, or a JSON pattern.
pub fn parse_pattern(s: &str) -> Result<PatternKind> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| DifError::Config(format!("pattern JSON: {e}")));
    }
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize, default: Option<u64>| -> Result<u64> {
        match parts.get(i) {
            Some(v) => v.parse().map_err(|_| DifError::Config(format!("bad number '{v}' in pattern '{s}'"))),
            None => default.ok_or_else(|| DifError::Config(format!("pattern '{s}' is missing a parameter"))),
        }
    };
    match parts[0] {
        "checkerboard" => Ok(PatternKind::Checkerboard { period: num(1, None)? as usize }),
        "grid" => Ok(PatternKind::AxisGrid { period: num(1, Some(8))? as usize }),
        "random" => Ok(PatternKind::FixedRandom {
            seed: num(1, None)?,
            tile: num(2, Some(16))? as usize,
        }),
        other => Err(DifError::Config(format!(
            "unknown pattern '{other}' (checkerboard:P, grid:P, random:SEED[:TILE] or JSON)"
        ))),
    }
}

fn oracle(mut ctx: Ctx, cfg: &OracleConfig, model_id: &str, out: &Path) -> Result<()> {
    create_dir(out)?;
    cfg.pattern.kind.render(cfg.size)?;
    let manifest = data::write_oracle_corpus(cfg, out, cfg.seed, model_id)?;
    let m = Manifest::load(&manifest)?;
    let mut digest = Vec::new();
    for e in &m.entries {
        digest.extend_from_slice(sha256_hex(&std::fs::read(&e.path).map_err(|err| DifError::io(&e.path, err))?).as_bytes());
    }
    ctx.prov.output(&manifest)?;
    ctx.prov.outputs.push(FileHash {
        path: format!("{}#images", out.display()),
        sha256: sha256_hex(&digest),
    });
    let v = json!({ "oracle": cfg, "model_id": model_id, "manifest": manifest });
    println!("{v}");
    ctx.finish(Some(out), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_shorthands() {
        assert_eq!(parse_pattern("checkerboard:4").unwrap(), PatternKind::Checkerboard { period: 4 });
        assert_eq!(parse_pattern("random:7").unwrap(), PatternKind::FixedRandom { seed: 7, tile: 16 });
        assert_eq!(parse_pattern("grid").unwrap(), PatternKind::AxisGrid { period: 8 });
        let j = r#"{"kind":"interpolated","a":{"kind":"fixed-random","seed":1,"tile":16},"b":{"kind":"fixed-random","seed":2,"tile":16},"t":0.1}"#;
        assert!(matches!(parse_pattern(j).unwrap(), PatternKind::Interpolated { .. }));
        assert!(parse_pattern("random").unwrap_err().is_config());
        assert!(parse_pattern("stripes:2").unwrap_err().is_config());
    }

    #[test]
    fn perturbation_flags() {
        assert_eq!(parse_perturbation("jpeg", Some(75), None, 0).unwrap(), Perturbation::Jpeg { quality: 75 });
        assert!(parse_perturbation("jpeg", None, None, 0).unwrap_err().is_config());
        assert!(parse_perturbation("blur", None, Some(-1.0), 0).unwrap_err().is_config());
    }
}
