//! Flat `key = value` experiment configuration.
//!
//! Keys not given in the file keep the value of the base configuration
//! (desk scale unless `--paper-scale` is requested).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use incoherent_core::elad::ThresholdMode;
use incoherent_core::harness::{DictionarySource, ExperimentConfig, OptimizerArm, SolverChoice};
use incoherent_core::Dictionary;

use crate::error::{Error, Result};
use crate::matrix_csv::read_matrix;

pub const KEYS: &[&str] = &[
    "n",
    "k",
    "m",
    "sparsities",
    "trials",
    "dictionary",
    "optimizers",
    "solver",
    "failure_threshold",
    "master_seed",
    "hist_bins",
    "elad_threshold",
    "elad_gamma",
    "elad_iterations",
    "altproj_t",
    "altproj_iterations",
];

/// A parsed configuration plus the file a provided dictionary came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub experiment: ExperimentConfig,
    pub dictionary_file: Option<PathBuf>,
}

impl LoadedConfig {
    pub fn from_base(experiment: ExperimentConfig) -> Self {
        Self { experiment, dictionary_file: None }
    }
}

struct Entry {
    line: usize,
    value: String,
}

fn entries(text: &str, origin: &str) -> Result<BTreeMap<String, Entry>> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(origin, idx + 1, format!("expected 'key = value', found '{line}'")))?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::parse(origin, idx + 1, format!("unknown key '{key}'")));
        }
        if out.contains_key(&key) {
            return Err(Error::parse(origin, idx + 1, format!("duplicate key '{key}'")));
        }
        out.insert(key, Entry { line: idx + 1, value: value.trim().to_string() });
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(origin: &str, e: &Entry, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    e.value.parse().map_err(|err| Error::parse(origin, e.line, format!("{key}: {err}")))
}

fn parse_sparsities(origin: &str, e: &Entry) -> Result<Vec<usize>> {
    let bad = |msg: String| Error::parse(origin, e.line, msg);
    if let Some((lo, hi)) = e.value.split_once("..=") {
        let lo: usize = lo.trim().parse().map_err(|err| bad(format!("sparsities: {err}")))?;
        let hi: usize = hi.trim().parse().map_err(|err| bad(format!("sparsities: {err}")))?;
        if lo > hi {
            return Err(bad(format!("empty range {lo}..={hi}")));
        }
        return Ok((lo..=hi).collect());
    }
    e.value
        .split(',')
        .map(|s| s.trim().parse().map_err(|err| bad(format!("sparsities: {err}"))))
        .collect()
}

fn parse_threshold(origin: &str, e: &Entry) -> Result<ThresholdMode> {
    let bad = |msg: String| Error::parse(origin, e.line, msg);
    let (kind, v) = e
        .value
        .split_once(':')
        .ok_or_else(|| bad("elad_threshold must be 'fixed:<t>' or 'relative:<percent>'".into()))?;
    let v: f64 = v.trim().parse().map_err(|err| bad(format!("elad_threshold: {err}")))?;
    match kind.trim() {
        "fixed" => Ok(ThresholdMode::Fixed(v)),
        "relative" => Ok(ThresholdMode::Relative(v)),
        other => Err(bad(format!("unknown threshold mode '{other}'"))),
    }
}

/// Parses config text. Relative dictionary paths resolve against `base_dir`.
pub fn parse_config(text: &str, origin: &str, base: ExperimentConfig, base_dir: &Path) -> Result<LoadedConfig> {
    let map = entries(text, origin)?;
    let mut cfg = base;
    let mut dictionary_file = None;

    for key in ["n", "k", "m", "trials", "hist_bins"] {
        if let Some(e) = map.get(key) {
            let v: usize = parse_num(origin, e, key)?;
            match key {
                "n" => cfg.n = v,
                "k" => cfg.k = v,
                "m" => cfg.m = v,
                "trials" => cfg.trials = v,
                _ => cfg.hist_bins = v,
            }
        }
    }
    if let Some(e) = map.get("sparsities") {
        cfg.sparsities = parse_sparsities(origin, e)?;
    }
    if let Some(e) = map.get("failure_threshold") {
        cfg.failure_threshold = parse_num(origin, e, "failure_threshold")?;
    }
    if let Some(e) = map.get("master_seed") {
        cfg.master_seed = parse_num(origin, e, "master_seed")?;
    }
    if let Some(e) = map.get("solver") {
        cfg.solver = match e.value.as_str() {
            "omp" => SolverChoice::Omp,
            "bp" => SolverChoice::Bp,
            "both" => SolverChoice::Both,
            other => return Err(Error::parse(origin, e.line, format!("unknown solver '{other}'"))),
        };
    }
    if let Some(e) = map.get("dictionary") {
        match e.value.split_once(':') {
            Some(("gaussian", seed)) => {
                cfg.dictionary = DictionarySource::Gaussian { seed: parse_num(origin, &Entry { line: e.line, value: seed.trim().into() }, "dictionary")? };
            }
            Some(("file", path)) => {
                let path = base_dir.join(path.trim());
                let d = Dictionary::new(read_matrix(&path)?)?;
                cfg.n = d.signal_dim();
                cfg.k = d.atoms();
                cfg.dictionary = DictionarySource::Provided(d);
                dictionary_file = Some(path);
            }
            _ => {
                return Err(Error::parse(
                    origin,
                    e.line,
                    "dictionary must be 'gaussian:<seed>' or 'file:<path>'",
                ))
            }
        }
        if dictionary_file.is_some() {
            for key in ["n", "k"] {
                if let Some(dim) = map.get(key) {
                    let v: usize = parse_num(origin, dim, key)?;
                    let actual = if key == "n" { cfg.n } else { cfg.k };
                    if v != actual {
                        return Err(Error::parse(origin, dim.line, format!("{key} = {v} disagrees with the dictionary file ({actual})")));
                    }
                }
            }
        }
    }

    let (mut elad_threshold, mut elad_gamma, mut elad_iterations) = (ThresholdMode::Relative(26.0), 0.6, 100);
    let (mut altproj_t, mut altproj_iterations) = (0.3, 1000);
    for arm in &cfg.optimizers {
        match arm {
            OptimizerArm::Elad { threshold, gamma, iterations } => {
                (elad_threshold, elad_gamma, elad_iterations) = (*threshold, *gamma, *iterations)
            }
            OptimizerArm::AltProj { t, iterations } => (altproj_t, altproj_iterations) = (*t, *iterations),
            _ => {}
        }
    }
    if let Some(e) = map.get("elad_threshold") {
        elad_threshold = parse_threshold(origin, e)?;
    }
    if let Some(e) = map.get("elad_gamma") {
        elad_gamma = parse_num(origin, e, "elad_gamma")?;
    }
    if let Some(e) = map.get("elad_iterations") {
        elad_iterations = parse_num(origin, e, "elad_iterations")?;
    }
    if let Some(e) = map.get("altproj_t") {
        altproj_t = parse_num(origin, e, "altproj_t")?;
    }
    if let Some(e) = map.get("altproj_iterations") {
        altproj_iterations = parse_num(origin, e, "altproj_iterations")?;
    }
    let names: Vec<String> = match map.get("optimizers") {
        Some(e) => e.value.split(',').map(|s| s.trim().to_string()).collect(),
        None => cfg.optimizers.iter().map(|a| a.name().to_string()).collect(),
    };
    let line = map.get("optimizers").map_or(0, |e| e.line);
    cfg.optimizers = names
        .iter()
        .map(|name| match name.as_str() {
            "random" => Ok(OptimizerArm::Random),
            "elad" => Ok(OptimizerArm::Elad { threshold: elad_threshold, gamma: elad_gamma, iterations: elad_iterations }),
            "sapiro" => Ok(OptimizerArm::Sapiro),
            "altproj" => Ok(OptimizerArm::AltProj { t: altproj_t, iterations: altproj_iterations }),
            other => Err(Error::parse(origin, line, format!("unknown optimizer '{other}'"))),
        })
        .collect::<Result<_>>()?;

    cfg.validate()?;
    Ok(LoadedConfig { experiment: cfg, dictionary_file })
}

pub fn load_config(path: &Path, base: ExperimentConfig) -> Result<LoadedConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, &path.display().to_string(), base, dir)
}

/// The fully resolved configuration in the same `key = value` format, with
/// the derived seeds appended as comments.
pub fn echo_config(loaded: &LoadedConfig) -> String {
    let cfg = &loaded.experiment;
    let mut out = String::new();
    let _ = writeln!(out, "n = {}", cfg.n);
    let _ = writeln!(out, "k = {}", cfg.k);
    let _ = writeln!(out, "m = {}", cfg.m);
    let s: Vec<String> = cfg.sparsities.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "sparsities = {}", s.join(","));
    let _ = writeln!(out, "trials = {}", cfg.trials);
    match (&cfg.dictionary, &loaded.dictionary_file) {
        (DictionarySource::Gaussian { seed }, _) => {
            let _ = writeln!(out, "dictionary = gaussian:{seed}");
        }
        (DictionarySource::Provided(_), Some(path)) => {
            let _ = writeln!(out, "dictionary = file:{}", path.display());
        }
        (DictionarySource::Provided(_), None) => {
            let _ = writeln!(out, "# dictionary provided in memory");
        }
    }
    let names: Vec<&str> = cfg.optimizers.iter().map(|a| a.name()).collect();
    let _ = writeln!(out, "optimizers = {}", names.join(","));
    let solver = match cfg.solver {
        SolverChoice::Omp => "omp",
        SolverChoice::Bp => "bp",
        SolverChoice::Both => "both",
    };
    let _ = writeln!(out, "solver = {solver}");
    let _ = writeln!(out, "failure_threshold = {}", cfg.failure_threshold);
    let _ = writeln!(out, "master_seed = {}", cfg.master_seed);
    let _ = writeln!(out, "hist_bins = {}", cfg.hist_bins);
    for arm in &cfg.optimizers {
        match arm {
            OptimizerArm::Elad { threshold, gamma, iterations } => {
                let t = match threshold {
                    ThresholdMode::Fixed(t) => format!("fixed:{t}"),
                    ThresholdMode::Relative(p) => format!("relative:{p}"),
                };
                let _ = writeln!(out, "elad_threshold = {t}");
                let _ = writeln!(out, "elad_gamma = {gamma}");
                let _ = writeln!(out, "elad_iterations = {iterations}");
            }
            OptimizerArm::AltProj { t, iterations } => {
                let _ = writeln!(out, "altproj_t = {t}");
                let _ = writeln!(out, "altproj_iterations = {iterations}");
            }
            _ => {}
        }
    }
    let _ = writeln!(out, "# projection_seed = {}", cfg.projection_seed());
    let _ = writeln!(out, "# optimizer_seed = {}", cfg.optimizer_seed());
    let _ = writeln!(out, "# per-trial signal seeds are listed in trials.csv");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LoadedConfig> {
        parse_config(text, "test", ExperimentConfig::desk_scale(), Path::new("."))
    }

    #[test]
    fn empty_file_keeps_defaults() {
        assert_eq!(parse("# nothing\n").unwrap().experiment, ExperimentConfig::desk_scale());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse("n = 10\nbogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("test:2"), "{err}");
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn duplicate_key_is_rejected() {
        assert!(parse("m = 4\nm = 5\n").is_err());
    }

    #[test]
    fn values_override_defaults() {
        let cfg = parse(
            "trials = 7 # few\nsparsities = 1..=3\noptimizers = random, altproj\naltproj_t = 0.4\nsolver = omp\n",
        )
        .unwrap()
        .experiment;
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.sparsities, vec![1, 2, 3]);
        assert_eq!(cfg.solver, SolverChoice::Omp);
        assert_eq!(cfg.optimizers, vec![OptimizerArm::Random, OptimizerArm::AltProj { t: 0.4, iterations: 1000 }]);
    }

    #[test]
    fn echo_parses_back_to_the_same_config() {
        let loaded = parse("trials = 9\nelad_threshold = fixed:0.45\nmaster_seed = 77\n").unwrap();
        let again = parse(&echo_config(&loaded)).unwrap();
        assert_eq!(again, loaded);
    }

    #[test]
    fn invalid_config_is_reported() {
        // Every S must stay below m.
        assert!(parse("m = 4\nsparsities = 1,4\n").is_err());
    }
}
