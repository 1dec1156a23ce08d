//! Experiment configuration: component specs and the key-value config file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use ucal::adversaries::load_outcome_sequence;
use ucal::{Adversary, AdversaryKind, ForecasterKind, ProperLoss, SimplexPoint};

/// Bad flags, unknown component names or out-of-range parameters; exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

type Parsed<T> = anyhow::Result<T>;

fn number(s: &str, what: &str) -> Parsed<f64> {
    s.trim().parse::<f64>().map_err(|_| usage(format!("{what}: not a number: {s:?}")))
}

/// `ftl`, `ftpl`, `ftpl-uniform` or `static:p1,p2,...`.
pub fn parse_forecaster(spec: &str, k: usize) -> Parsed<ForecasterKind> {
    match spec.trim() {
        "ftl" => Ok(ForecasterKind::Ftl),
        "ftpl" | "ftpl-geometric" => Ok(ForecasterKind::FtplGeometric),
        "ftpl-uniform" => Ok(ForecasterKind::FtplUniform),
        other => match other.strip_prefix("static:") {
            Some(rest) => {
                let v = rest.split([',', ';']).map(|x| number(x, "static forecast")).collect::<Parsed<Vec<_>>>()?;
                if v.len() != k {
                    return Err(usage(format!("static forecast has {} entries but K = {k}", v.len())));
                }
                let p = SimplexPoint::new(v, 1e-9).map_err(|e| usage(e.to_string()))?;
                Ok(ForecasterKind::Static(p))
            }
            None => Err(usage(format!("unknown forecaster {other:?} (expected ftl, ftpl, ftpl-uniform, static:...)"))),
        },
    }
}

/// `vshaped`, `squared[:scale]`, `spherical`, `tsallis:alpha` or `mixture:w:first/second`.
pub fn parse_loss(spec: &str, k: usize) -> Parsed<ProperLoss> {
    let spec = spec.trim();
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let loss = match (name, arg) {
        ("vshaped", None) => ProperLoss::vshaped(k),
        ("spherical", None) => ProperLoss::spherical(k),
        ("squared", None) => ProperLoss::squared(k, 1.0),
        ("squared", Some(s)) => ProperLoss::squared(k, number(s, "squared scale")?),
        ("tsallis", Some(a)) => ProperLoss::tsallis(k, number(a, "tsallis alpha")?),
        ("tsallis", None) => return Err(usage("tsallis needs an exponent, e.g. tsallis:1.5")),
        ("mixture", Some(rest)) => {
            let (w, pair) = rest
                .split_once(':')
                .ok_or_else(|| usage(format!("mixture spec must be mixture:w:first/second, got {spec:?}")))?;
            let (a, b) = pair
                .split_once('/')
                .ok_or_else(|| usage(format!("mixture spec must be mixture:w:first/second, got {spec:?}")))?;
            ProperLoss::mixture(parse_loss(a, k)?, parse_loss(b, k)?, number(w, "mixture weight")?)
        }
        _ => return Err(usage(format!("unknown loss {spec:?}"))),
    };
    loss.map_err(|e| usage(e.to_string()))
}

/// `alternating`, `iid`, `fixed:path` or `greedy:loss`.
pub fn parse_adversary(spec: &str, k: usize, base_dir: &Path) -> Parsed<Adversary> {
    let spec = spec.trim();
    let kind = match spec {
        "alternating" => AdversaryKind::Alternating,
        "iid" | "iid-uniform" => AdversaryKind::IidUniform,
        other => {
            if let Some(path) = other.strip_prefix("fixed:") {
                let path = base_dir.join(path);
                AdversaryKind::Fixed(load_outcome_sequence(&path, k).map_err(|e| usage(e.to_string()))?)
            } else if let Some(loss) = other.strip_prefix("greedy:") {
                AdversaryKind::GreedyAdaptive(parse_loss(loss, k)?)
            } else {
                return Err(usage(format!(
                    "unknown adversary {other:?} (expected alternating, iid, fixed:PATH, greedy:LOSS)"
                )));
            }
        }
    };
    Adversary::new(kind, k).map_err(|e| usage(e.to_string()))
}

/// Contents of a `key = value` config file. Blank lines and `#` comments are skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub values: BTreeMap<String, String>,
    /// Directory of the file; relative `fixed:` paths resolve against it.
    pub dir: PathBuf,
}

pub const CONFIG_KEYS: &[&str] = &["experiment", "forecaster", "adversary", "loss", "K", "T", "trials", "seed", "output"];

impl ConfigFile {
    pub fn parse(text: &str) -> Parsed<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(usage(format!("config line {}: unknown key {key:?}", n + 1)));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values, dir: PathBuf::new() })
    }

    pub fn load(path: &Path) -> Parsed<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Raw experiment settings as given on the command line, before merging.
#[derive(Debug, Clone, Default)]
pub struct RawExperiment {
    pub experiment: Option<String>,
    pub forecaster: Option<String>,
    pub adversary: Option<String>,
    pub losses: Vec<String>,
    pub k: Option<usize>,
    pub horizon: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub forecaster: ForecasterKind,
    pub adversary: Adversary,
    pub losses: Vec<ProperLoss>,
    pub k: usize,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Parsed<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|_| usage(format!("config key {key}: invalid value {v:?}"))))
        .transpose()
}

impl ExperimentConfig {
    /// Merges flags over the config file (flags win) and resolves every component.
    pub fn resolve(raw: RawExperiment, file: &ConfigFile, default_experiment: &str) -> Parsed<Self> {
        let k = pick(raw.k, file, "K")?.ok_or_else(|| usage("missing --K"))?;
        let horizon = pick(raw.horizon, file, "T")?.ok_or_else(|| usage("missing --T"))?;
        let trials = pick(raw.trials, file, "trials")?.unwrap_or(1);
        let seed = pick(raw.seed, file, "seed")?.unwrap_or(0);
        if k < 2 {
            return Err(usage(format!("K must be at least 2, got {k}")));
        }
        if horizon < 1 {
            return Err(usage("T must be at least 1"));
        }
        if trials < 1 {
            return Err(usage("trials must be at least 1"));
        }
        let experiment = raw
            .experiment
            .or_else(|| file.get("experiment").map(str::to_string))
            .unwrap_or_else(|| default_experiment.to_string());
        let forecaster_spec = raw
            .forecaster
            .or_else(|| file.get("forecaster").map(str::to_string))
            .ok_or_else(|| usage("missing --forecaster"))?;
        let adversary_spec = raw
            .adversary
            .or_else(|| file.get("adversary").map(str::to_string))
            .ok_or_else(|| usage("missing --adversary"))?;
        let loss_specs: Vec<String> = if raw.losses.is_empty() {
            file.get("loss")
                .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
                .unwrap_or_default()
        } else {
            raw.losses
        };
        if loss_specs.is_empty() {
            return Err(usage("missing --loss"));
        }
        let output = raw.output.or_else(|| file.get("output").map(|p| file.dir.join(p)));

        let forecaster = parse_forecaster(&forecaster_spec, k)?;
        let adversary = parse_adversary(&adversary_spec, k, &file.dir)?;
        let losses = loss_specs.iter().map(|s| parse_loss(s, k)).collect::<Parsed<Vec<_>>>()?;
        Ok(Self { experiment, forecaster, adversary, losses, k, horizon, trials, seed, output })
    }

    /// A fixed adversary must cover every round of the longest horizon played.
    pub fn check_sequence_length(&self, horizon: usize) -> Parsed<()> {
        if let AdversaryKind::Fixed(seq) = self.adversary.kind() {
            if seq.len() < horizon {
                return Err(usage(format!("fixed sequence has {} outcomes but T = {horizon}", seq.len())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ucal::LossKind;

    fn is_usage(e: &anyhow::Error) -> bool {
        e.downcast_ref::<UsageError>().is_some()
    }

    #[test]
    fn forecaster_specs() {
        assert_eq!(parse_forecaster("ftl", 2).unwrap(), ForecasterKind::Ftl);
        assert_eq!(parse_forecaster("ftpl", 3).unwrap(), ForecasterKind::FtplGeometric);
        match parse_forecaster("static:0.25,0.75", 2).unwrap() {
            ForecasterKind::Static(p) => assert_eq!(p.probs(), &[0.25, 0.75]),
            other => panic!("{other:?}"),
        }
        assert!(is_usage(&parse_forecaster("static:0.5,0.5", 3).unwrap_err()));
        assert!(is_usage(&parse_forecaster("static:0.7,0.4", 2).unwrap_err()));
        assert!(is_usage(&parse_forecaster("hedge", 2).unwrap_err()));
    }

    #[test]
    fn loss_specs() {
        assert_eq!(parse_loss("squared", 2).unwrap().label(), "squared:1");
        assert_eq!(parse_loss("squared:0.5", 2).unwrap().label(), "squared:0.5");
        assert_eq!(parse_loss("tsallis:1.5", 3).unwrap().label(), "tsallis:1.5");
        let m = parse_loss("mixture:0.25:spherical/tsallis:1.2", 3).unwrap();
        assert!(matches!(m.kind(), LossKind::Mixture { weight, .. } if *weight == 0.25));
        assert!(is_usage(&parse_loss("tsallis:0.5", 3).unwrap_err()));
        assert!(is_usage(&parse_loss("tsallis", 3).unwrap_err()));
        assert!(is_usage(&parse_loss("log", 3).unwrap_err()));
        assert!(is_usage(&parse_loss("mixture:0.5:spherical", 3).unwrap_err()));
    }

    #[test]
    fn adversary_specs() {
        let here = Path::new(".");
        assert_eq!(parse_adversary("alternating", 2, here).unwrap().name(), "alternating");
        assert_eq!(parse_adversary("greedy:vshaped", 3, here).unwrap().name(), "greedy:vshaped");
        assert!(is_usage(&parse_adversary("fixed:/nonexistent/seq.txt", 2, here).unwrap_err()));
        assert!(is_usage(&parse_adversary("random", 2, here).unwrap_err()));
    }

    #[test]
    fn config_file_parsing() {
        let cfg = ConfigFile::parse("# demo\nforecaster = ftl\nK=2 # classes\n\nloss = vshaped, squared:0.5\n").unwrap();
        assert_eq!(cfg.get("forecaster"), Some("ftl"));
        assert_eq!(cfg.get("K"), Some("2"));
        assert!(is_usage(&ConfigFile::parse("colour = red").unwrap_err()));
        assert!(is_usage(&ConfigFile::parse("K 2").unwrap_err()));
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigFile::parse("forecaster = ftpl\nadversary = iid\nloss = vshaped,spherical\nK = 3\nT = 50\nseed = 9").unwrap();
        let raw = RawExperiment { forecaster: Some("ftl".into()), horizon: Some(10), ..Default::default() };
        let cfg = ExperimentConfig::resolve(raw, &file, "run").unwrap();
        assert_eq!(cfg.forecaster, ForecasterKind::Ftl);
        assert_eq!((cfg.k, cfg.horizon, cfg.trials, cfg.seed), (3, 10, 1, 9));
        assert_eq!(cfg.losses.len(), 2);
        assert_eq!(cfg.experiment, "run");
    }

    #[test]
    fn missing_required_settings() {
        let file = ConfigFile::default();
        let raw = RawExperiment {
            forecaster: Some("ftl".into()),
            adversary: Some("alternating".into()),
            losses: vec!["vshaped".into()],
            horizon: Some(10),
            ..Default::default()
        };
        let err = ExperimentConfig::resolve(raw.clone(), &file, "run").unwrap_err();
        assert!(is_usage(&err) && err.to_string().contains("--K"));
        let raw = RawExperiment { k: Some(1), ..raw };
        assert!(is_usage(&ExperimentConfig::resolve(raw, &file, "run").unwrap_err()));
    }
}
