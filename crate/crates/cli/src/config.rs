//! Run configuration: a TOML file of flat model keys plus optional
//! `weights.*`, `sim.*`, `sweep.*` and `plan.*` sections, with command-line
//! overrides on top.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use vnfscale_core::{ModelParams, SimConfig, SweepDim, SweepParam, Weights};

use crate::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    lambda: Option<f64>,
    mu: Option<f64>,
    alpha: Option<f64>,
    theta: Option<f64>,
    n0: Option<usize>,
    k: Option<usize>,
    #[serde(rename = "K")]
    capacity: Option<usize>,
    weights: Option<WeightsSection>,
    sim: Option<SimSection>,
    sweep: Option<SweepSection>,
    plan: Option<PlanSection>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsSection {
    #[serde(default)]
    w1: f64,
    #[serde(default)]
    w2: f64,
    #[serde(default)]
    w3: f64,
    #[serde(default)]
    w4: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    horizon: Option<f64>,
    warmup: Option<f64>,
    replications: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RangeSection {
    start: f64,
    stop: f64,
    step: f64,
}

/// Swept dimensions are nested in this fixed parameter order.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    lambda: Option<RangeSection>,
    mu: Option<RangeSection>,
    alpha: Option<RangeSection>,
    theta: Option<RangeSection>,
    n0: Option<RangeSection>,
    k: Option<RangeSection>,
    #[serde(rename = "K")]
    capacity: Option<RangeSection>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub k_min: usize,
    pub k_max: usize,
    /// Upper bound on the mean instance count; unbounded when absent.
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Pretty,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub n0: Option<usize>,
    pub k: Option<usize>,
    pub capacity: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq)]
enum Origin {
    File(PathBuf),
    Flag(&'static str),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File(p) => write!(f, "{}", p.display()),
            Origin::Flag(flag) => write!(f, "{flag}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelParams,
    pub weights: Option<Weights>,
    pub sim: SimConfig,
    pub sweep: Option<Vec<SweepDim>>,
    pub plan: Option<PlanSection>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn pick<T>(
    key: &'static str,
    flag: &'static str,
    over: Option<T>,
    file: Option<T>,
    path: Option<&Path>,
    origins: &mut Vec<(&'static str, Origin)>,
) -> Result<T, Failure> {
    if let Some(v) = over {
        origins.push((key, Origin::Flag(flag)));
        return Ok(v);
    }
    if let Some(v) = file {
        origins.push((key, Origin::File(path.expect("file value implies a path").to_path_buf())));
        return Ok(v);
    }
    Err(Failure::validation(format!(
        "missing required key `{key}` (set it in the config file or pass {flag})"
    )))
}

pub fn load_config(path: Option<&Path>, over: &Overrides) -> Result<RunConfig, Failure> {
    let file = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::validation(format!("cannot read {}: {e}", p.display())))?;
            parse_file(&text).map_err(|e| Failure::validation(format!("{}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let mut origins = Vec::new();
    let model = ModelParams {
        lambda: pick("lambda", "--lambda", over.lambda, file.lambda, path, &mut origins)?,
        mu: pick("mu", "--mu", over.mu, file.mu, path, &mut origins)?,
        alpha: pick("alpha", "--alpha", over.alpha, file.alpha, path, &mut origins)?,
        theta: pick("theta", "--theta", over.theta, file.theta, path, &mut origins)?,
        n0: pick("n0", "--n0", over.n0, file.n0, path, &mut origins)?,
        k: pick("k", "--k", over.k, file.k, path, &mut origins)?,
        capacity: pick("K", "--capacity", over.capacity, file.capacity, path, &mut origins)?,
    };
    let model = model.validate().map_err(|e| {
        let locations = origins
            .iter()
            .map(|(key, origin)| format!("{key} from {origin}"))
            .collect::<Vec<_>>()
            .join(", ");
        Failure::validation(format!("{e} [{locations}]"))
    })?;

    let weights = file
        .weights
        .map(|w| Weights::new(w.w1, w.w2, w.w3, w.w4))
        .transpose()
        .map_err(|e| Failure::validation(format!("weights: {e}")))?;

    let mut sim = SimConfig::default();
    if let Some(s) = &file.sim {
        if let Some(h) = s.horizon {
            sim.horizon = h;
            sim.warmup = 0.1 * h;
        }
        if let Some(w) = s.warmup {
            sim.warmup = w;
        }
        if let Some(r) = s.replications {
            sim.replications = r;
        }
        if let Some(seed) = s.seed {
            sim.master_seed = seed;
        }
    }
    if let Some(seed) = over.seed {
        sim.master_seed = seed;
    }
    let sim = sim.validate().map_err(|e| Failure::validation(e.to_string()))?;

    let sweep = file.sweep.map(|s| {
        [
            (SweepParam::Lambda, s.lambda),
            (SweepParam::Mu, s.mu),
            (SweepParam::Alpha, s.alpha),
            (SweepParam::Theta, s.theta),
            (SweepParam::N0, s.n0),
            (SweepParam::K, s.k),
            (SweepParam::Capacity, s.capacity),
        ]
        .into_iter()
        .filter_map(|(p, r)| r.map(|r| SweepDim::new(p, r.start, r.stop, r.step)))
        .collect::<Vec<_>>()
    });

    Ok(RunConfig {
        model,
        weights,
        sim,
        sweep,
        plan: file.plan,
        out: over.out.clone().or(file.out),
        format: over.format.or(file.format).unwrap_or_default(),
    })
}

fn parse_file(text: &str) -> Result<FileConfig, toml::de::Error> {
    toml::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const DEFAULTS: &str = "lambda = 50\nmu = 1\nalpha = 0.005\ntheta = 0.01\nn0 = 110\nk = 50\nK = 250\n";

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_reference_defaults() {
        let f = write(DEFAULTS);
        let cfg = load_config(Some(f.path()), &Overrides::default()).unwrap();
        assert_eq!(cfg.model, ModelParams::new(50.0, 1.0, 0.005, 0.01, 110, 50, 250));
        assert_eq!(cfg.format, Format::Csv);
        assert!(cfg.weights.is_none());
    }

    #[test]
    fn flags_override_file() {
        let f = write(DEFAULTS);
        let over = Overrides {
            lambda: Some(60.0),
            ..Default::default()
        };
        let cfg = load_config(Some(f.path()), &over).unwrap();
        assert_eq!(cfg.model.lambda, 60.0);
        assert_eq!(cfg.model.k, 50);
        assert_eq!(cfg.model.capacity, 250);
    }

    #[test]
    fn capacity_violation_names_keys() {
        let f = write(&DEFAULTS.replace("K = 250", "K = 100"));
        let err = load_config(Some(f.path()), &Overrides::default()).unwrap_err();
        assert!(err.message.contains("K < n0+k"), "{}", err.message);
        assert!(err.message.contains("K from"), "{}", err.message);
        assert!(err.message.contains("n0 from"), "{}", err.message);
        assert_eq!(err.code, 1);
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let f = write(&format!("{DEFAULTS}lamda = 3\n"));
        let err = load_config(Some(f.path()), &Overrides::default()).unwrap_err();
        assert!(err.message.contains("lamda"), "{}", err.message);
        assert!(err.message.contains("line 8"), "{}", err.message);

        let f = write(&format!("{DEFAULTS}[sim]\nhorizn = 3\n"));
        assert!(load_config(Some(f.path()), &Overrides::default()).is_err());
    }

    #[test]
    fn missing_key_without_file() {
        let over = Overrides {
            lambda: Some(1.0),
            ..Default::default()
        };
        let err = load_config(None, &over).unwrap_err();
        assert!(err.message.contains("`mu`"), "{}", err.message);
    }

    #[test]
    fn sections() {
        let text = format!(
            "{DEFAULTS}[weights]\nw1 = 1\nw3 = 2\n[sim]\nhorizon = 1000\nreplications = 3\nseed = 9\n\
             [sweep]\nk = {{ start = 10, stop = 30, step = 10 }}\nlambda = {{ start = 50, stop = 60, step = 5 }}\n\
             [plan]\nk_min = 0\nk_max = 4\n"
        );
        let f = write(&text);
        let cfg = load_config(Some(f.path()), &Overrides { seed: Some(10), ..Default::default() }).unwrap();
        assert_eq!(cfg.weights, Some(Weights::new(1.0, 0.0, 2.0, 0.0).unwrap()));
        assert_eq!(cfg.sim.horizon, 1000.0);
        assert_eq!(cfg.sim.warmup, 100.0);
        assert_eq!(cfg.sim.replications, 3);
        assert_eq!(cfg.sim.master_seed, 10);
        let dims = cfg.sweep.unwrap();
        assert_eq!(dims[0].param, SweepParam::Lambda);
        assert_eq!(dims[1].param, SweepParam::K);
        let plan = cfg.plan.unwrap();
        assert_eq!((plan.k_min, plan.k_max, plan.budget), (0, 4, None));
    }
}
