//! The incremental annotate-and-train loop.
//!
//! Per iteration `i`: select `s_i` items from the pool (at random in the
//! first iteration, with the previous ranker afterwards), annotate them,
//! add the triplets to `D`, reset the ranker to the scenario start and
//! train on all of `D`. The selection ranker gets `epochs_selection`
//! epochs; training then continues to `epochs_evaluation` epochs and that
//! ranker is evaluated on the test queries.
//!
//! Every iteration is persisted, so a run can be interrupted and resumed
//! with identical results.

mod data;
mod run;
mod variability;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::annotation::AnnotationConfig;
use crate::budget::CostConfig;
use crate::error::{Error, Result};
use crate::evaluation::Gain;
use crate::lexical::Bm25Params;
use crate::ranker::{load_checkpoint_for, Architecture, RankerConfig, RankerState};
use crate::rng::derive_seed;
use crate::selection::{SelectionConfig, Strategy};

pub use data::DataBundle;
pub use data::{CORPUS_FILE, INDEX_FILE, QRELS_FILE, TEST_FILE, TRAIN_FILE, VALIDATION_FILE};
pub use run::{
    collect_summaries, load_states, resume, run_dir_name, run_experiment, run_experiment_with, run_strategies,
    run_summary, IterationState, RunOptions, SelectedItem,
};
/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json_file(path: &Path, value: &impl Serialize) -> Result<()> {
    data::write_json(path, value)
}

pub use variability::{evaluate_start, run_variability, untrained_baseline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Every iteration starts from seeded random weights.
    Scratch,
    /// Every iteration starts from a checkpoint trained elsewhere.
    Retrain,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Scratch => "scratch",
            Scenario::Retrain => "retrain",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scratch" => Ok(Scenario::Scratch),
            "retrain" => Ok(Scenario::Retrain),
            other => Err(Error::Config(format!("unknown scenario {other:?} (scratch|retrain)"))),
        }
    }
}

/// One flat key space for every setting of an experiment. The nested
/// configs are flattened, so a config file is a single JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Starting checkpoint, required for `retrain`.
    pub checkpoint: Option<PathBuf>,
    pub iterations: usize,
    /// Items added per iteration. Empty means `select_size` every time.
    pub schedule: Vec<usize>,
    pub master_seed: u64,
    /// Repeats of the random strategy; the other strategies run once.
    pub random_repeats: usize,
    pub variability_sizes: Vec<usize>,
    pub gain: Gain,
    /// Significance level before Bonferroni correction.
    pub alpha: f64,
    #[serde(flatten)]
    pub selection: SelectionConfig,
    #[serde(flatten)]
    pub annotation: AnnotationConfig,
    #[serde(flatten)]
    pub ranker: RankerConfig,
    #[serde(flatten)]
    pub cost: CostConfig,
    #[serde(flatten)]
    pub bm25: Bm25Params,
}

impl Default for ExperimentConfig {
    /// The published setup: 5,000 items per iteration, 15/200 epochs.
    fn default() -> Self {
        Self {
            scenario: Scenario::Scratch,
            checkpoint: None,
            iterations: 5,
            schedule: Vec::new(),
            master_seed: 0,
            random_repeats: 4,
            variability_sizes: vec![5_000, 10_000, 20_000, 50_000],
            gain: Gain::Linear,
            alpha: 0.05,
            selection: SelectionConfig {
                select_size: 5_000,
                ..SelectionConfig::default()
            },
            annotation: AnnotationConfig::default(),
            ranker: RankerConfig::default(),
            cost: CostConfig::default(),
            bm25: Bm25Params::default(),
        }
    }
}

/// Named starting points for a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Laptop scale: 20 items per iteration, 5/50 epochs, cross ranker.
    Desk,
    /// Full-size settings: 5,000 items per iteration, 15/200 epochs.
    Full,
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            other => Err(Error::Config(format!("unknown profile {other:?} (desk|full)"))),
        }
    }
}

impl ExperimentConfig {
    pub fn desk() -> Self {
        Self {
            variability_sizes: vec![25, 50, 100, 200],
            selection: SelectionConfig {
                select_size: 20,
                ..SelectionConfig::default()
            },
            ranker: RankerConfig::desk(Architecture::Cross),
            ..Self::default()
        }
    }

    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => Self::desk(),
            Profile::Full => Self::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.iterations == 0 {
            return fail("iterations must be >= 1".into());
        }
        if !self.schedule.is_empty() && self.schedule.len() != self.iterations {
            return fail(format!(
                "schedule has {} entries but iterations is {}",
                self.schedule.len(),
                self.iterations
            ));
        }
        if self.schedule.contains(&0) {
            return fail("schedule entries must be >= 1".into());
        }
        if self.scenario == Scenario::Retrain && self.checkpoint.is_none() {
            return fail("scenario retrain requires checkpoint".into());
        }
        if self.random_repeats == 0 {
            return fail("random_repeats must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.annotation.annotation_depth > self.selection.candidate_depth {
            return fail(format!(
                "annotation_depth ({}) exceeds candidate_depth ({}): the annotator walks the reranked candidates",
                self.annotation.annotation_depth, self.selection.candidate_depth
            ));
        }
        self.selection.validate()?;
        self.annotation.validate()?;
        self.ranker.validate()?;
        self.cost.validate()?;
        self.bm25.validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// `s_1..s_I`.
    pub fn sizes(&self) -> Vec<usize> {
        if self.schedule.is_empty() {
            vec![self.selection.select_size; self.iterations]
        } else {
            self.schedule.clone()
        }
    }

    /// Repeats run for `strategy`.
    pub fn repeats_for(&self, strategy: Strategy) -> usize {
        if strategy == Strategy::Random {
            self.random_repeats
        } else {
            1
        }
    }

    pub fn with_strategy(&self, strategy: Strategy) -> Self {
        let mut c = self.clone();
        c.selection.strategy = strategy;
        c
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(&self.to_value()).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }

    /// The flat JSON object, keys sorted.
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("config serializes");
        s.push('\n');
        s
    }

    /// Every key a config file may contain.
    pub fn keys() -> BTreeSet<String> {
        match Self::default().to_value() {
            Value::Object(m) => m.keys().cloned().collect(),
            _ => unreachable!("config is an object"),
        }
    }

    /// Applies a flat JSON object on top of `self`. Unknown keys are an
    /// error.
    pub fn merge_json(&self, overrides: &Map<String, Value>) -> Result<Self> {
        let known = Self::keys();
        let mut base = match self.to_value() {
            Value::Object(m) => m,
            _ => unreachable!("config is an object"),
        };
        for (k, v) in overrides {
            if !known.contains(k) {
                return Err(Error::Config(format!("unknown config key {k:?}")));
            }
            base.insert(k.clone(), v.clone());
        }
        let config: Self =
            serde_json::from_value(Value::Object(base)).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Applies `key=value` overrides; values are parsed as JSON and fall
    /// back to plain strings.
    pub fn apply_sets(&self, sets: &[String]) -> Result<Self> {
        let mut m = Map::new();
        for s in sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            m.insert(k.trim().to_string(), value);
        }
        self.merge_json(&m)
    }

    /// Reads a flat JSON config file on top of `self`.
    pub fn merge_file(&self, path: &Path) -> Result<Self> {
        let text = crate::datamodel::read_text(path)?;
        match serde_json::from_str::<Value>(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))? {
            Value::Object(m) => self.merge_json(&m),
            _ => Err(Error::parse(path, 1, "config must be a JSON object")),
        }
    }

    /// Ranker weights every iteration starts from.
    pub fn start_state(&self, repeat: usize) -> Result<RankerState> {
        match self.scenario {
            Scenario::Scratch => Ok(RankerState::new(&self.ranker, self.seed("init", &[repeat as u64]))),
            Scenario::Retrain => {
                let path = self
                    .checkpoint
                    .as_ref()
                    .ok_or_else(|| Error::Config("scenario retrain requires checkpoint".into()))?;
                load_checkpoint_for(path, &self.ranker)
            }
        }
    }

    pub(crate) fn seed(&self, label: &str, parts: &[u64]) -> u64 {
        let parts: Vec<_> = parts.iter().map(|&p| p.into()).collect();
        derive_seed(self.master_seed, label, &parts)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate() {
        ExperimentConfig::default().validate().unwrap();
        ExperimentConfig::desk().validate().unwrap();
        assert_eq!(ExperimentConfig::desk().sizes(), vec![20; 5]);
    }

    #[test]
    fn flat_json_round_trip() {
        let c = ExperimentConfig::desk();
        let v = c.to_value();
        assert!(v.get("learning_rate").is_some());
        assert!(v.get("k1").is_some());
        assert!(v.get("annotator_rate").is_some());
        let back: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.fingerprint(), c.fingerprint());
    }

    #[test]
    fn overrides() {
        let c = ExperimentConfig::desk()
            .apply_sets(&["master_seed=9".into(), "strategy=qbc".into(), "schedule=[3,3]".into(), "iterations=2".into()])
            .unwrap();
        assert_eq!(c.master_seed, 9);
        assert_eq!(c.selection.strategy, Strategy::Qbc);
        assert_eq!(c.sizes(), vec![3, 3]);
        assert_ne!(c.fingerprint(), ExperimentConfig::desk().fingerprint());
        assert!(ExperimentConfig::desk().apply_sets(&["no_such_key=1".into()]).is_err());
        assert!(ExperimentConfig::desk().apply_sets(&["schedule=[3]".into()]).is_err());
        assert!(ExperimentConfig::desk().apply_sets(&["scenario=retrain".into()]).is_err());
    }
}
