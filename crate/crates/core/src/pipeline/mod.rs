//! Declarative multi-stage runs with file-based handoff and a content-hash
//! manifest.
//!
//! A config is a TOML file:
//!
//! ```toml
//! seed = 42
//! out_dir = "out"
//!
//! [[stage]]
//! name = "sim"
//! kind = "simulate"
//! t = 300
//!
//! [[stage]]
//! name = "fit"
//! kind = "estimate"
//! data = ["@sim"]
//! lags = 2
//! ```
//!
//! Inputs written as `@stage` refer to that stage's primary output and
//! `@stage:key` to a named one; anything else is a path relative to the
//! config file. Each stage writes under `out_dir/<name>/`. Stages without an
//! explicit `seed` get one derived from the master seed and their name.

pub mod stages;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use stages::*;

pub const MANIFEST: &str = "manifest.txt";
pub const FAILURE_MARKER: &str = "FAILED";
/// Overrides the config's output directory when set.
pub const OUT_DIR_ENV: &str = "SVARLAB_OUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum StageKind {
    Simulate(SimulateParams),
    Ingest(IngestParams),
    Indexes(IndexesParams),
    Estimate(EstimateParams),
    Identify(IdentifyParams),
    Irf(IrfParams),
    Hd(HdParams),
    Girf(GirfParams),
    Lp(LpParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageConfig {
    pub name: String,
    pub kind: StageKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Directory relative input paths are resolved against.
    pub base_dir: PathBuf,
    pub stages: Vec<StageConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
    #[serde(default)]
    stage: Vec<RawStage>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Deserialize)]
struct RawStage {
    name: String,
    kind: String,
    #[serde(flatten)]
    params: toml::Table,
}

fn params<T: serde::de::DeserializeOwned>(stage: &str, table: toml::Table) -> Result<T> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Stage { stage: stage.to_string(), cause: format!("invalid parameters: {e}") })
}

impl PipelineConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::parse("pipeline config", e.to_string()))?;
        let mut stages = Vec::new();
        for s in raw.stage {
            if stages.iter().any(|x: &StageConfig| x.name == s.name) {
                return Err(Error::Duplicate(format!("stage name `{}`", s.name)));
            }
            if s.name.is_empty() || s.name.contains(['/', '\\', ':', '@']) {
                return Err(Error::InvalidInput(format!("stage name {:?} is not a plain identifier", s.name)));
            }
            let kind = match s.kind.as_str() {
                "simulate" => StageKind::Simulate(params(&s.name, s.params)?),
                "ingest" => StageKind::Ingest(params(&s.name, s.params)?),
                "indexes" => StageKind::Indexes(params(&s.name, s.params)?),
                "estimate" => StageKind::Estimate(params(&s.name, s.params)?),
                "identify" => StageKind::Identify(params(&s.name, s.params)?),
                "irf" => StageKind::Irf(params(&s.name, s.params)?),
                "hd" => StageKind::Hd(params(&s.name, s.params)?),
                "girf" => StageKind::Girf(params(&s.name, s.params)?),
                "lp" => StageKind::Lp(params(&s.name, s.params)?),
                other => {
                    return Err(Error::Stage { stage: s.name, cause: format!("unknown stage kind `{other}`") })
                }
            };
            stages.push(StageConfig { name: s.name, kind });
        }
        let out_dir = if raw.out_dir.is_absolute() { raw.out_dir } else { base_dir.join(raw.out_dir) };
        Ok(Self { seed: raw.seed, out_dir, base_dir: base_dir.to_path_buf(), stages })
    }

    /// Reads a config file; relative paths inside it resolve against its
    /// directory. `SVARLAB_OUT_DIR` overrides the output directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg = Self::parse(&text, &base)?;
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
            cfg.out_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }
}

/// Files written by the stages that have run so far, by stage then key.
#[derive(Default)]
struct Outputs {
    by_stage: BTreeMap<String, Vec<(String, PathBuf)>>,
}

impl Outputs {
    fn resolve(&self, base: &Path, reference: &str) -> Result<PathBuf> {
        if let Some(rest) = reference.strip_prefix('@') {
            let (stage, key) = rest.split_once(':').map_or((rest, None), |(s, k)| (s, Some(k)));
            let outputs = self
                .by_stage
                .get(stage)
                .ok_or_else(|| Error::InvalidInput(format!("`{reference}` refers to a stage that has not run")))?;
            let found = match key {
                None => outputs.first(),
                Some(k) => outputs.iter().find(|(name, _)| name == k),
            };
            return found
                .map(|(_, p)| p.clone())
                .ok_or_else(|| Error::InvalidInput(format!("stage `{stage}` has no output `{}`", key.unwrap_or(""))));
        }
        let path = base.join(reference);
        if !path.exists() {
            return Err(Error::Missing(format!("input file {}", path.display())));
        }
        Ok(path)
    }

    fn resolve_all(&self, base: &Path, refs: &[String]) -> Result<Vec<PathBuf>> {
        refs.iter().map(|r| self.resolve(base, r)).collect()
    }
}

fn run_stage(stage: &StageConfig, cfg: &PipelineConfig, outputs: &Outputs) -> Result<Vec<(String, PathBuf)>> {
    let dir = cfg.out_dir.join(&stage.name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let seed = derive_seed(cfg.seed, &stage.name);
    let base = &cfg.base_dir;
    let file = |name: &str| dir.join(name);
    let mut out = Vec::new();
    match &stage.kind {
        StageKind::Simulate(p) => {
            run_simulate(p, seed, &file("data.csv"), Some(&file("shocks.csv")))?;
            out.push(("data".into(), file("data.csv")));
            out.push(("shocks".into(), file("shocks.csv")));
        }
        StageKind::Ingest(p) => {
            let data = outputs.resolve(base, &p.data)?;
            let schema = p.schema.as_deref().map(|s| outputs.resolve(base, s)).transpose()?;
            run_ingest(p, &data, schema.as_deref(), &file("data.csv"))?;
            out.push(("data".into(), file("data.csv")));
        }
        StageKind::Indexes(p) => {
            let panel = outputs.resolve(base, &p.panel)?;
            let schema = outputs.resolve(base, &p.schema)?;
            run_indexes(p, &panel, &schema, &file("indexes.csv"), Some(&file("bands")))?;
            out.push(("indexes".into(), file("indexes.csv")));
            out.push(("bands".into(), file("bands")));
        }
        StageKind::Estimate(p) => {
            let data = outputs.resolve_all(base, &p.data)?;
            run_estimate(p, &data, seed, &file("posterior"))?;
            out.push(("posterior".into(), file("posterior")));
        }
        StageKind::Identify(p) => {
            let posterior = outputs.resolve(base, &p.posterior)?;
            let restrictions = load_restrictions(&p.restrictions, |r| outputs.resolve(base, r))?;
            let data = outputs.resolve_all(base, &p.data)?;
            let shocks = (!data.is_empty()).then(|| file("shocks.csv"));
            run_identify(p, &posterior, &restrictions, &data, seed, &file("drawset"), shocks.as_deref())?;
            out.push(("drawset".into(), file("drawset")));
            if let Some(s) = shocks {
                out.push(("shocks".into(), s));
            }
        }
        StageKind::Irf(p) => {
            let posterior = outputs.resolve(base, &p.posterior)?;
            let drawset = outputs.resolve(base, &p.drawset)?;
            run_irf(p, &posterior, &drawset, &file("irf.csv"))?;
            out.push(("irf".into(), file("irf.csv")));
        }
        StageKind::Hd(p) => {
            let posterior = outputs.resolve(base, &p.posterior)?;
            let drawset = outputs.resolve(base, &p.drawset)?;
            let data = outputs.resolve_all(base, &p.data)?;
            run_hd(p, &posterior, &drawset, &data, &file("hd.csv"))?;
            out.push(("hd".into(), file("hd.csv")));
        }
        StageKind::Girf(p) => {
            let posterior = outputs.resolve(base, &p.posterior)?;
            run_girf(p, &posterior, &file("girf.csv"))?;
            out.push(("girf".into(), file("girf.csv")));
        }
        StageKind::Lp(p) => {
            let data = outputs.resolve_all(base, &p.data)?;
            run_lp(p, &data, &file("lp.csv"))?;
            out.push(("lp".into(), file("lp.csv")));
        }
    }
    Ok(out)
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        for e in entries {
            collect_files(&e, out)?;
        }
    } else if path.exists() {
        out.push(path.to_path_buf());
    }
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes `manifest.txt`: the master seed, then `<sha256>  <relative path>`
/// for every file the stages wrote, sorted by path.
fn write_manifest(cfg: &PipelineConfig, outputs: &Outputs) -> Result<PathBuf> {
    let mut files = Vec::new();
    for produced in outputs.by_stage.values() {
        for (_, path) in produced {
            collect_files(path, &mut files)?;
        }
    }
    files.sort();
    files.dedup();
    let mut text = format!("seed = {}\n", cfg.seed);
    for f in &files {
        let rel = f.strip_prefix(&cfg.out_dir).unwrap_or(f);
        text.push_str(&format!("{}  {}\n", sha256_file(f)?, rel.display()));
    }
    let path = cfg.out_dir.join(MANIFEST);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Runs every stage in order. On failure the outputs so far are kept, a
/// `FAILED` marker naming the stage is written, and the error is returned.
/// Returns the manifest path on success.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let marker = cfg.out_dir.join(FAILURE_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    let mut outputs = Outputs::default();
    for stage in &cfg.stages {
        info!("stage `{}`", stage.name);
        match run_stage(stage, cfg, &outputs) {
            Ok(produced) => {
                outputs.by_stage.insert(stage.name.clone(), produced);
            }
            Err(e) => {
                let err = Error::Stage { stage: stage.name.clone(), cause: e.to_string() };
                // best effort: the stage error is what the caller needs
                let _ = fs::write(&marker, format!("{err}\n"));
                let _ = write_manifest(cfg, &outputs);
                return Err(err);
            }
        }
    }
    write_manifest(cfg, &outputs)
}
