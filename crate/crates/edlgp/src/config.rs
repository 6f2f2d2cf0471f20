//! Run configuration: a flat `key = value` text format with `[dataset]`
//! and `[evolution]` sections, diffable and echoed verbatim into every run
//! directory.

use crate::error::{EdlgpError, Result};
use crate::evolve::EvolutionConfig;
use crate::sexpr::{parse_real, render_real};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    /// IDX image/label pairs (MNIST family).
    Idx,
    /// CIFAR-10 binary batches (also converted SVHN).
    Cifar,
    /// Directory of PGM files with a `path,label` manifest.
    Pgm,
    /// Canonical internal dump.
    Dump,
}

impl DataFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            DataFormat::Idx => "idx",
            DataFormat::Cifar => "cifar",
            DataFormat::Pgm => "pgm",
            DataFormat::Dump => "dump",
        }
    }

    pub fn from_str(s: &str) -> Option<DataFormat> {
        match s {
            "idx" => Some(DataFormat::Idx),
            "cifar" => Some(DataFormat::Cifar),
            "pgm" => Some(DataFormat::Pgm),
            "dump" => Some(DataFormat::Dump),
            _ => None,
        }
    }
}

/// Where the data lives and how much of it to use. For `cifar`,
/// `train_images` may be a comma-separated list of batch files and the
/// label paths are unused; for `pgm` the image paths point at manifest
/// files; for `dump` a single file per split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub format: DataFormat,
    pub name: String,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    /// Stratified few-shot subsample of the training split.
    pub per_class: Option<usize>,
    /// Stratified per-class subsample of the test split.
    pub test_subset: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            format: DataFormat::Idx,
            name: "dataset".into(),
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            per_class: None,
            test_subset: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub evolution: EvolutionConfig,
    /// Independent repeats; repeat i runs with seed + i.
    pub repeats: usize,
    /// Max concurrent fitness evaluations within a generation.
    pub parallel: usize,
    pub out_dir: PathBuf,
    /// Memoize pure subtree outputs within a generation.
    pub cache: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetConfig::default(),
            evolution: EvolutionConfig::default(),
            repeats: 1,
            parallel: 1,
            out_dir: PathBuf::from("runs/out"),
            cache: true,
        }
    }
}

fn cfg_err(line: usize, msg: impl Into<String>) -> EdlgpError {
    EdlgpError::Config(format!("line {line}: {}", msg.into()))
}

fn parse_bool(line: usize, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(cfg_err(line, format!("expected true/false, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, v: &str) -> Result<T> {
    v.parse().map_err(|_| cfg_err(line, format!("bad numeric value `{v}`")))
}

impl RunConfig {
    /// Parse the config text. Unknown keys are errors; missing keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                match name {
                    "dataset" | "evolution" => section = name.to_string(),
                    _ => return Err(cfg_err(lineno, format!("unknown section [{name}]"))),
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(cfg_err(lineno, format!("expected `key = value`, got `{line}`")));
            };
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value, lineno)?;
        }
        Ok(cfg)
    }

    /// Apply one key. `section` is "", "dataset" or "evolution"; top-level
    /// keys also resolve when a section name is given on the CLI.
    pub fn apply(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
        let ev = &mut self.evolution;
        let ds = &mut self.dataset;
        match (section, key) {
            ("", "repeats") => self.repeats = parse_num(line, value)?,
            ("", "parallel") => self.parallel = parse_num::<usize>(line, value)?.max(1),
            ("", "out_dir") => self.out_dir = PathBuf::from(value),
            ("", "cache") => self.cache = parse_bool(line, value)?,
            ("dataset", "format") => {
                ds.format = DataFormat::from_str(value)
                    .ok_or_else(|| cfg_err(line, format!("unknown format `{value}`")))?;
            }
            ("dataset", "name") => ds.name = value.to_string(),
            ("dataset", "train_images") => ds.train_images = Some(PathBuf::from(value)),
            ("dataset", "train_labels") => ds.train_labels = Some(PathBuf::from(value)),
            ("dataset", "test_images") => ds.test_images = Some(PathBuf::from(value)),
            ("dataset", "test_labels") => ds.test_labels = Some(PathBuf::from(value)),
            ("dataset", "per_class") => ds.per_class = Some(parse_num(line, value)?),
            ("dataset", "test_subset") => ds.test_subset = Some(parse_num(line, value)?),
            ("evolution", "population_size") => ev.population_size = parse_num(line, value)?,
            ("evolution", "generations") => ev.generations = parse_num(line, value)?,
            ("evolution", "crossover_rate") => ev.crossover_rate = parse_num(line, value)?,
            ("evolution", "mutation_rate") => ev.mutation_rate = parse_num(line, value)?,
            ("evolution", "elitism_rate") => ev.elitism_rate = parse_num(line, value)?,
            ("evolution", "tournament_size") => ev.tournament_size = parse_num(line, value)?,
            ("evolution", "init_depth_min") => ev.init_depth_min = parse_num(line, value)?,
            ("evolution", "init_depth_max") => ev.init_depth_max = parse_num(line, value)?,
            ("evolution", "max_depth") => ev.max_depth = parse_num(line, value)?,
            ("evolution", "seed") => ev.seed = parse_num(line, value)?,
            ("evolution", "cascade_oof") => ev.cascade_oof = parse_bool(line, value)?,
            ("evolution", "crossover_retry_limit") => {
                ev.crossover_retry_limit = parse_num(line, value)?
            }
            ("evolution", "frequency_grid") => {
                let grid: Option<Vec<f64>> = value.split(',').map(|t| parse_real(t.trim())).collect();
                ev.frequency_grid =
                    grid.ok_or_else(|| cfg_err(line, format!("bad frequency grid `{value}`")))?;
            }
            (s, k) => {
                let loc = if s.is_empty() { k.to_string() } else { format!("[{s}] {k}") };
                return Err(cfg_err(line, format!("unknown key {loc}")));
            }
        }
        Ok(())
    }

    /// Canonical text form: fixed key order, every set key written.
    /// `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "repeats = {}", self.repeats);
        let _ = writeln!(s, "parallel = {}", self.parallel);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "cache = {}", self.cache);
        let _ = writeln!(s, "\n[dataset]");
        let _ = writeln!(s, "format = {}", self.dataset.format.as_str());
        let _ = writeln!(s, "name = {}", self.dataset.name);
        for (key, path) in [
            ("train_images", &self.dataset.train_images),
            ("train_labels", &self.dataset.train_labels),
            ("test_images", &self.dataset.test_images),
            ("test_labels", &self.dataset.test_labels),
        ] {
            if let Some(p) = path {
                let _ = writeln!(s, "{key} = {}", p.display());
            }
        }
        if let Some(v) = self.dataset.per_class {
            let _ = writeln!(s, "per_class = {v}");
        }
        if let Some(v) = self.dataset.test_subset {
            let _ = writeln!(s, "test_subset = {v}");
        }
        let ev = &self.evolution;
        let _ = writeln!(s, "\n[evolution]");
        let _ = writeln!(s, "population_size = {}", ev.population_size);
        let _ = writeln!(s, "generations = {}", ev.generations);
        let _ = writeln!(s, "crossover_rate = {}", ev.crossover_rate);
        let _ = writeln!(s, "mutation_rate = {}", ev.mutation_rate);
        let _ = writeln!(s, "elitism_rate = {}", ev.elitism_rate);
        let _ = writeln!(s, "tournament_size = {}", ev.tournament_size);
        let _ = writeln!(s, "init_depth_min = {}", ev.init_depth_min);
        let _ = writeln!(s, "init_depth_max = {}", ev.init_depth_max);
        let _ = writeln!(s, "max_depth = {}", ev.max_depth);
        let _ = writeln!(s, "seed = {}", ev.seed);
        let _ = writeln!(s, "cascade_oof = {}", ev.cascade_oof);
        let _ = writeln!(s, "crossover_retry_limit = {}", ev.crossover_retry_limit);
        let grid: Vec<String> = ev.frequency_grid.iter().map(|&v| render_real(v)).collect();
        let _ = writeln!(s, "frequency_grid = {}", grid.join(", "));
        s
    }

    /// FNV-1a fingerprint of the canonical text, hex-encoded.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_text().as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
