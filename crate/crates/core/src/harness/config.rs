//! `key = value` experiment configs with `--key value` overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::risk::{PllLoss, DEFAULT_PROB_FLOOR};
use crate::{Error, Result};

/// How the mixture proportion is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaMode {
    Kme,
    Fixed(f64),
}

impl FromStr for ThetaMode {
    type Err = Error;

    /// `kme`, `fixed:0.7` or a bare number.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("kme") {
            return Ok(ThetaMode::Kme);
        }
        let v = s.strip_prefix("fixed:").unwrap_or(s);
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("theta must be `kme`, `fixed:<v>` or a number, got {s:?}")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Config(format!("theta {v} not in [0, 1]")));
        }
        Ok(ThetaMode::Fixed(v))
    }
}

impl fmt::Display for ThetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaMode::Kme => write!(f, "kme"),
            ThetaMode::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Labeled CSV the augmented split is built from.
    pub data: Option<PathBuf>,
    pub label_column: String,
    /// Label (as written in the CSV) of the class hidden from training.
    pub ac_class: Option<String>,
    pub test_fraction: f64,
    pub pll_loss: PllLoss,
    pub theta: ThetaMode,
    pub lambda: f64,
    pub t: u32,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Outer passes, each running `epochs` epochs.
    pub iterations: usize,
    /// Hidden width; a linear model when `None`.
    pub hidden: Option<usize>,
    pub seed: u64,
    pub trials: usize,
    /// Size of the unlabeled pool; the size of the test pool when `None`.
    pub unlabeled_count: Option<usize>,
    /// Class-prior shift intensity applied to the test distribution.
    pub shift_alpha: Option<f64>,
    /// Confidence threshold of the baseline.
    pub threshold: f64,
    pub prob_floor: f64,
    pub kme_tau: f64,
    pub kme_grid: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: None,
            label_column: "label".into(),
            ac_class: None,
            test_fraction: 0.2,
            pll_loss: PllLoss::Rc,
            theta: ThetaMode::Kme,
            lambda: 1.0,
            t: 1,
            lr: 1e-3,
            weight_decay: 1e-4,
            batch_size: 256,
            epochs: 150,
            iterations: 1,
            hidden: None,
            seed: 0,
            trials: 5,
            unlabeled_count: None,
            shift_alpha: None,
            threshold: 0.95,
            prob_floor: DEFAULT_PROB_FLOOR,
            kme_tau: 6.0,
            kme_grid: 64,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "data",
    "label_column",
    "ac_class",
    "test_fraction",
    "pll_loss",
    "theta",
    "lambda",
    "t",
    "lr",
    "weight_decay",
    "batch_size",
    "epochs",
    "iterations",
    "hidden",
    "seed",
    "trials",
    "unlabeled_count",
    "shift_alpha",
    "threshold",
    "prob_floor",
    "kme_tau",
    "kme_grid",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for `{key}`")))
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "" | "none" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

impl ExperimentConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match normalize_key(key).as_str() {
            "data" => self.data = (!value.is_empty()).then(|| PathBuf::from(value)),
            "label_column" => self.label_column = value.to_string(),
            "ac_class" => self.ac_class = (!value.is_empty()).then(|| value.to_string()),
            "test_fraction" => self.test_fraction = parse("test_fraction", value)?,
            "pll_loss" => self.pll_loss = value.parse()?,
            "theta" => self.theta = value.parse()?,
            "lambda" => self.lambda = parse("lambda", value)?,
            "t" => self.t = parse("t", value)?,
            "lr" => self.lr = parse("lr", value)?,
            "weight_decay" => self.weight_decay = parse("weight_decay", value)?,
            "batch_size" => self.batch_size = parse("batch_size", value)?,
            "epochs" => self.epochs = parse("epochs", value)?,
            "iterations" => self.iterations = parse("iterations", value)?,
            "hidden" => self.hidden = parse_optional("hidden", value)?,
            "seed" => self.seed = parse("seed", value)?,
            "trials" => self.trials = parse("trials", value)?,
            "unlabeled_count" => self.unlabeled_count = parse_optional("unlabeled_count", value)?,
            "shift_alpha" => self.shift_alpha = parse_optional("shift_alpha", value)?,
            "threshold" => self.threshold = parse("threshold", value)?,
            "prob_floor" => self.prob_floor = parse("prob_floor", value)?,
            "kme_tau" => self.kme_tau = parse("kme_tau", value)?,
            "kme_grid" => self.kme_grid = parse("kme_grid", value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Textual form of one field, the inverse of [`set`](Self::set).
    pub fn get(&self, key: &str) -> Result<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map_or("none".into(), T::to_string)
        }
        Ok(match normalize_key(key).as_str() {
            "data" => self.data.as_ref().map_or(String::new(), |p| p.display().to_string()),
            "label_column" => self.label_column.clone(),
            "ac_class" => self.ac_class.clone().unwrap_or_default(),
            "test_fraction" => self.test_fraction.to_string(),
            "pll_loss" => self.pll_loss.to_string(),
            "theta" => self.theta.to_string(),
            "lambda" => self.lambda.to_string(),
            "t" => self.t.to_string(),
            "lr" => self.lr.to_string(),
            "weight_decay" => self.weight_decay.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "epochs" => self.epochs.to_string(),
            "iterations" => self.iterations.to_string(),
            "hidden" => opt(&self.hidden),
            "seed" => self.seed.to_string(),
            "trials" => self.trials.to_string(),
            "unlabeled_count" => opt(&self.unlabeled_count),
            "shift_alpha" => opt(&self.shift_alpha),
            "threshold" => self.threshold.to_string(),
            "prob_floor" => self.prob_floor.to_string(),
            "kme_tau" => self.kme_tau.to_string(),
            "kme_grid" => self.kme_grid.to_string(),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        })
    }

    /// Config file contents for every key.
    pub fn to_config_string(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("known key")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be >= 1".into());
        }
        if self.t == 0 {
            return bad("t must be >= 1".into());
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda {} must be a non-negative number", self.lambda));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("lr must be positive and weight_decay non-negative".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} not in (0, 1)", self.test_fraction));
        }
        if let Some(a) = self.shift_alpha {
            if !(0.0..1.0).contains(&a) {
                return bad(format!("shift_alpha {a} not in [0, 1)"));
            }
        }
        if self.hidden == Some(0) {
            return bad("hidden must be positive".into());
        }
        if !(self.prob_floor > 0.0) {
            return bad("prob_floor must be positive".into());
        }
        if self.kme_grid < 2 || !(self.kme_tau > 0.0) {
            return bad("kme_grid must be >= 2 and kme_tau positive".into());
        }
        Ok(())
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

/// `(key, value, line)` triples of a `key = value` text; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let k = normalize_key(k);
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        out.push((k, v.trim().to_string(), i + 1));
    }
    Ok(out)
}

/// `--key value` or `--key=value` pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(Error::Config(format!("expected `--key value`, got {arg:?}")));
        };
        match flag.split_once('=') {
            Some((k, v)) => out.push((normalize_key(k), v.to_string())),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::Config(format!("missing value for --{flag}")))?;
                out.push((normalize_key(flag), v.clone()));
            }
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (k, v, line) in parse_pairs(text)? {
            cfg.set(&k, &v)
                .map_err(|e| Error::Config(format!("line {line}: {e}")))?;
        }
        Ok(cfg)
    }

    /// Defaults, then the optional file, then the overrides.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::from_config_str(&text)?
            }
            None => ExperimentConfig::default(),
        };
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
