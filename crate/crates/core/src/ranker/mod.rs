//! Trainable reference rankers.
//!
//! Three architectures share one weight store and the same training loop:
//!
//! * [`Architecture::Cross`]: `s = w · φ(q, d)` over hashed joint features
//!   (query and passage seen together, scored by a linear layer).
//! * [`Architecture::Bi`]: `s = v(q) · v(d)` where `v` is the mean of learned
//!   token embeddings (independent encoding, dot-product scoring).
//! * [`Architecture::MaxSim`]: `s = Σ_j max_i e(q_j) · e(d_i)` (token-level
//!   late interaction).
//!
//! Tokens are hashed into `buckets` embedding rows of width `dim`; the cross
//! ranker hashes its features straight into `dim` weights.

mod checkpoint;
mod features;
pub mod hashing;
mod loss;
mod model;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint};
pub use features::{cross_features, PreparedCorpus, PreparedText};
pub use loss::{ranknet_grad, ranknet_loss};
pub use model::{RankerState, TrainableRanker};
pub use train::{
    batch_gradient, batch_loss, train, train_with, EarlyStopping, Optimizer, PreparedTriplet, Sgd, TrainOutcome,
    TrainParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Cross,
    Bi,
    #[serde(rename = "maxsim")]
    MaxSim,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::Cross, Architecture::Bi, Architecture::MaxSim];

    pub fn tag(self) -> &'static str {
        match self {
            Architecture::Cross => "cross",
            Architecture::Bi => "bi",
            Architecture::MaxSim => "maxsim",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Architecture::Cross => 1,
            Architecture::Bi => 2,
            Architecture::MaxSim => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Architecture::Cross),
            2 => Some(Architecture::Bi),
            3 => Some(Architecture::MaxSim),
            _ => None,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross" => Ok(Architecture::Cross),
            "bi" => Ok(Architecture::Bi),
            "maxsim" => Ok(Architecture::MaxSim),
            other => Err(Error::Config(format!("unknown architecture {other:?} (cross|bi|maxsim)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightInit {
    /// Uniform in `[−1/√dim, +1/√dim]`.
    Uniform,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerConfig {
    pub architecture: Architecture,
    pub dim: usize,
    /// Embedding rows for `bi` and `maxsim`.
    pub buckets: usize,
    pub hash_seed: u64,
    pub init: WeightInit,
    pub learning_rate: f64,
    pub epochs_selection: usize,
    pub epochs_evaluation: usize,
    pub batch_size: usize,
    pub sigma: f64,
    pub early_stopping: bool,
    pub early_stopping_every: usize,
    pub early_stopping_patience: usize,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Cross,
            dim: 256,
            buckets: 4096,
            hash_seed: 0,
            init: WeightInit::Uniform,
            learning_rate: 7e-6,
            epochs_selection: 15,
            epochs_evaluation: 200,
            batch_size: 32,
            sigma: 1.0,
            early_stopping: false,
            early_stopping_every: 10,
            early_stopping_patience: 3,
        }
    }
}

impl RankerConfig {
    /// Laptop-sized profile: 5/50 epochs and learning rates suited to
    /// hashed features.
    pub fn desk(architecture: Architecture) -> Self {
        let (learning_rate, dim) = match architecture {
            Architecture::Cross => (0.003, 4096),
            Architecture::Bi => (10.0, 32),
            Architecture::MaxSim => (1.0, 32),
        };
        Self {
            architecture,
            dim,
            buckets: 2048,
            learning_rate,
            epochs_selection: 5,
            epochs_evaluation: 50,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(format!("ranker: {m}")));
        if self.dim == 0 || self.buckets == 0 {
            return fail("dim and buckets must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.epochs_selection == 0 || self.epochs_selection > self.epochs_evaluation {
            return fail(format!(
                "need 1 <= epochs_selection ({}) <= epochs_evaluation ({})",
                self.epochs_selection, self.epochs_evaluation
            ));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma must be > 0, got {}", self.sigma));
        }
        if self.early_stopping && (self.early_stopping_every == 0 || self.early_stopping_patience == 0) {
            return fail("early stopping needs every >= 1 and patience >= 1".into());
        }
        Ok(())
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            sigma: self.sigma,
        }
    }

    pub fn early_stopping(&self) -> Option<EarlyStopping> {
        self.early_stopping.then_some(EarlyStopping {
            every: self.early_stopping_every,
            patience: self.early_stopping_patience,
        })
    }
}
