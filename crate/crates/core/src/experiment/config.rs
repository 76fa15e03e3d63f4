//! Flat `key = value` experiment configuration.
//!
//! Blank lines and text after `#` are ignored. Keys:
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `dataset` | | directory of a dataset bundle |
//! | `sbm.blocks` | | comma-separated block sizes (used when `dataset` is unset) |
//! | `sbm.p_in`, `sbm.p_out` | 0.25, 0.02 | SBM edge probabilities |
//! | `sbm.feat_dim`, `sbm.feat_noise` | 32, 1.0 | SBM feature width and noise |
//! | `sbm.seed` | run seed | seed for the SBM graph |
//! | `row_normalize` | false | L1-normalize feature rows |
//! | `budget` | 20C | label count, or `<k>C` for `k` per class |
//! | `strategy` | minimax | minimax, random, degree, entropy, featprop |
//! | `hops` | 1 | neighborhood radius for minimax |
//! | `p_edge`, `p_feature` | 0.2, 0.2 | augmentation probabilities |
//! | `per_node_mask` | false | independent feature mask per node |
//! | `tau`, `lambda` | 0.5, 1.0 | objective temperature and supervision weight |
//! | `positive_views` | anchor | anchor or both |
//! | `exclude_positives` | false | drop positives from the negative sum |
//! | `max_positives` | none | cap on stored positives per node |
//! | `hidden`, `output` | 128, 128 | encoder widths |
//! | `lr` | 0.001 | Adam learning rate |
//! | `warmup_epochs` | 50 | epochs before the first query |
//! | `epochs_per_round` | 10 | epochs between queries |
//! | `max_epochs` | 200 | cap on all training epochs |
//! | `seeds` | 0 | comma-separated run seeds |
//! | `out` | none | output directory |
//! | `featprop_recluster` | false | re-cluster every round instead of once |
//! | `eval_rounds` | true | evaluate the probe after every query |
//! | `probe.lr`, `probe.max_iter`, `probe.tol` | 0.01, 2000, 1e-7 | probe training |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::augment::AugmentConfig;
use crate::dataset::SbmSpec;
use crate::error::{Error, Result};
use crate::eval::ProbeConfig;
use crate::model::AdamConfig;
use crate::objective::{ObjectiveConfig, PositiveViews};
use crate::selection::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Count(usize),
    PerClass(usize),
}

impl Budget {
    pub fn resolve(self, classes: usize) -> usize {
        match self {
            Budget::Count(b) => b,
            Budget::PerClass(k) => k * classes,
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| Error::Config(format!("invalid budget {s:?}")))
        };
        let b = match s.strip_suffix(['C', 'c']) {
            Some(k) => Budget::PerClass(parse(k)?),
            None => Budget::Count(parse(s)?),
        };
        match b {
            Budget::Count(0) | Budget::PerClass(0) => Err(Error::Config("budget must be positive".into())),
            b => Ok(b),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Count(b) => write!(f, "{b}"),
            Budget::PerClass(k) => write!(f, "{k}C"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Bundle(PathBuf),
    Sbm { spec: SbmSpec, seed: Option<u64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: Option<DataSource>,
    pub row_normalize: bool,
    pub budget: Budget,
    pub strategy: Strategy,
    pub hops: usize,
    pub augment: AugmentConfig,
    pub objective: ObjectiveConfig,
    pub max_positives: Option<usize>,
    pub hidden: usize,
    pub output: usize,
    pub adam: AdamConfig,
    pub warmup_epochs: usize,
    pub epochs_per_round: usize,
    pub max_epochs: usize,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub featprop_recluster: bool,
    pub eval_rounds: bool,
    pub probe: ProbeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: None,
            row_normalize: false,
            budget: Budget::PerClass(20),
            strategy: Strategy::Minimax,
            hops: 1,
            augment: AugmentConfig::default(),
            objective: ObjectiveConfig::default(),
            max_positives: None,
            hidden: 128,
            output: 128,
            adam: AdamConfig::default(),
            warmup_epochs: 50,
            epochs_per_round: 10,
            max_epochs: 200,
            seeds: vec![0],
            out: None,
            featprop_recluster: false,
            eval_rounds: true,
            probe: ProbeConfig::default(),
        }
    }
}

fn default_sbm() -> SbmSpec {
    SbmSpec {
        blocks: Vec::new(),
        p_in: 0.25,
        p_out: 0.02,
        feat_dim: 32,
        feat_noise: 1.0,
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = text.parse()?;
        if let Some(DataSource::Bundle(dir)) = &mut cfg.data {
            if dir.is_relative() {
                if let Some(parent) = path.parent() {
                    *dir = parent.join(&*dir);
                }
            }
        }
        Ok(cfg)
    }

    fn sbm_mut(&mut self) -> &mut SbmSpec {
        if !matches!(self.data, Some(DataSource::Sbm { .. })) {
            self.data = Some(DataSource::Sbm {
                spec: default_sbm(),
                seed: None,
            });
        }
        match &mut self.data {
            Some(DataSource::Sbm { spec, .. }) => spec,
            _ => unreachable!(),
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (key, value) = (key.trim(), value.trim());
        match key {
            "dataset" => self.data = Some(DataSource::Bundle(PathBuf::from(value))),
            "sbm.blocks" => self.sbm_mut().blocks = parse_list(key, value)?,
            "sbm.p_in" => self.sbm_mut().p_in = parse(key, value)?,
            "sbm.p_out" => self.sbm_mut().p_out = parse(key, value)?,
            "sbm.feat_dim" => self.sbm_mut().feat_dim = parse(key, value)?,
            "sbm.feat_noise" => self.sbm_mut().feat_noise = parse(key, value)?,
            "sbm.seed" => {
                let s = parse(key, value)?;
                self.sbm_mut();
                if let Some(DataSource::Sbm { seed, .. }) = &mut self.data {
                    *seed = Some(s);
                }
            }
            "row_normalize" => self.row_normalize = parse_bool(key, value)?,
            "budget" => self.budget = value.parse()?,
            "strategy" => self.strategy = value.parse()?,
            "hops" => self.hops = parse(key, value)?,
            "p_edge" => self.augment.p_edge = parse(key, value)?,
            "p_feature" => self.augment.p_feature = parse(key, value)?,
            "per_node_mask" => self.augment.per_node_mask = parse_bool(key, value)?,
            "tau" => self.objective.tau = parse(key, value)?,
            "lambda" => self.objective.lambda = parse(key, value)?,
            "positive_views" => {
                self.objective.positive_views = match value {
                    "anchor" => PositiveViews::Anchor,
                    "both" => PositiveViews::Both,
                    _ => return Err(Error::Config(format!("{key}: expected anchor or both, got {value:?}"))),
                }
            }
            "exclude_positives" => self.objective.exclude_positives_from_negatives = parse_bool(key, value)?,
            "max_positives" => {
                self.max_positives = match value {
                    "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "hidden" => self.hidden = parse(key, value)?,
            "output" => self.output = parse(key, value)?,
            "lr" => self.adam.lr = parse(key, value)?,
            "warmup_epochs" => self.warmup_epochs = parse(key, value)?,
            "epochs_per_round" => self.epochs_per_round = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "featprop_recluster" => self.featprop_recluster = parse_bool(key, value)?,
            "eval_rounds" => self.eval_rounds = parse_bool(key, value)?,
            "probe.lr" => self.probe.lr = parse(key, value)?,
            "probe.max_iter" => self.probe.max_iter = parse(key, value)?,
            "probe.tol" => self.probe.tol = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment:?}")))?;
        self.set(k, v)
    }

    /// Checks everything that does not depend on the loaded graph.
    pub fn validate(&self) -> Result<()> {
        let config = |e: Error| match e {
            Error::InvalidArgument(msg) => Error::Config(msg),
            other => other,
        };
        match &self.data {
            None => return Err(Error::Config("either dataset or sbm.blocks must be set".into())),
            Some(DataSource::Sbm { spec, .. }) => spec.validate().map_err(config)?,
            Some(DataSource::Bundle(_)) => {}
        }
        self.augment.validate().map_err(config)?;
        self.objective.validate().map_err(config)?;
        self.probe.validate().map_err(config)?;
        if self.hops == 0 {
            return Err(Error::Config("hops must be at least 1".into()));
        }
        if self.hidden == 0 || self.output == 0 {
            return Err(Error::Config("hidden and output widths must be positive".into()));
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.adam.lr)));
        }
        if self.max_positives == Some(0) {
            return Err(Error::Config("max_positives must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k, v).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", i + 1)),
                other => other,
            })?;
        }
        Ok(cfg)
    }
}
