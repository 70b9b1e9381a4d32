//! What an active-learning run costs.
//!
//! ```text
//! C_A(i) = A(i) / A_h · A_C
//! C_C(i) = H_GPU(i) · G_h + H_CPU · C_h · (i − 1)
//! C(i)   = C_A(i) + C_C(i)
//! ```
//!
//! `A(i)` is the cumulative number of assessments and `H_GPU(i)` the
//! cumulative training hours. Selection compute is charged from the second
//! iteration on, since the first one always selects at random.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    /// `A_h`
    pub assessments_per_hour: f64,
    /// `A_C`
    pub annotator_rate: f64,
    /// `G_h`
    pub gpu_rate: f64,
    /// `C_h`
    pub cpu_rate: f64,
    /// `H_CPU` per iteration.
    pub cpu_hours: f64,
    /// Use the mean measured selection time instead of `cpu_hours`.
    pub cpu_hours_measured: bool,
    /// Training hours charged per triplet per epoch. `None` meters
    /// wall-clock time instead, which makes reports machine-dependent.
    pub gpu_hours_per_triplet_epoch: Option<f64>,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            assessments_per_hour: 75.0,
            annotator_rate: 50.0,
            gpu_rate: 3.060,
            cpu_rate: 0.408,
            cpu_hours: 1.0,
            cpu_hours_measured: false,
            gpu_hours_per_triplet_epoch: Some(1e-4),
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("assessments_per_hour", self.assessments_per_hour),
            ("annotator_rate", self.annotator_rate),
            ("gpu_rate", self.gpu_rate),
            ("cpu_rate", self.cpu_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("cost: {name} must be > 0, got {v}")));
            }
        }
        if !(self.cpu_hours >= 0.0 && self.cpu_hours.is_finite()) {
            return Err(Error::Config(format!("cost: cpu_hours must be >= 0, got {}", self.cpu_hours)));
        }
        if let Some(h) = self.gpu_hours_per_triplet_epoch {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("cost: gpu_hours_per_triplet_epoch must be >= 0, got {h}")));
            }
        }
        Ok(())
    }

    /// Reads a flat JSON object; missing keys keep their defaults.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = crate::datamodel::read_text(path)?;
        let config: CostConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }
}

pub fn annotation_cost(assessments: u64, config: &CostConfig) -> f64 {
    assessments as f64 / config.assessments_per_hour * config.annotator_rate
}

/// `gpu_hours` is cumulative up to iteration `i`; `cpu_hours` is the
/// per-iteration selection time.
pub fn compute_cost(gpu_hours: f64, cpu_hours: f64, i: usize, config: &CostConfig) -> Result<f64> {
    if i == 0 {
        return Err(Error::invalid("iterations are numbered from 1"));
    }
    Ok(gpu_hours * config.gpu_rate + cpu_hours * config.cpu_rate * (i - 1) as f64)
}

/// Hours spent per iteration on the two compute meters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeLedger {
    /// Training hours of iteration `i` at index `i − 1`.
    pub training_hours: Vec<f64>,
    /// Selection hours of iteration `i` at index `i − 1`.
    pub selection_hours: Vec<f64>,
}

impl TimeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, training_hours: f64, selection_hours: f64) -> Result<()> {
        if !(training_hours >= 0.0 && selection_hours >= 0.0) {
            return Err(Error::invalid("hours must be >= 0"));
        }
        self.training_hours.push(training_hours);
        self.selection_hours.push(selection_hours);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.training_hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.training_hours.is_empty()
    }

    /// `H_GPU(i)`.
    pub fn cumulative_training(&self, i: usize) -> f64 {
        self.training_hours[..i].iter().sum()
    }

    /// Mean selection time over iterations that select with a model.
    pub fn mean_selection_hours(&self) -> f64 {
        let later = self.selection_hours.get(1..).unwrap_or(&[]);
        if later.is_empty() {
            0.0
        } else {
            later.iter().sum::<f64>() / later.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub iteration: usize,
    pub assessments: u64,
    pub gpu_hours: f64,
    pub cpu_hours: f64,
    pub annotation_cost: f64,
    pub compute_cost: f64,
    pub total_cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub rows: Vec<CostRow>,
}

/// Builds the per-iteration report from cumulative assessments `A(1..=n)`
/// and the time ledger.
pub fn total_cost(cumulative_assessments: &[u64], time: &TimeLedger, config: &CostConfig) -> Result<CostReport> {
    if cumulative_assessments.len() != time.len() {
        return Err(Error::invalid(format!(
            "assessment ledger has {} iterations but the time ledger has {}",
            cumulative_assessments.len(),
            time.len()
        )));
    }
    let cpu_hours = if config.cpu_hours_measured {
        time.mean_selection_hours()
    } else {
        config.cpu_hours
    };
    let rows = cumulative_assessments
        .iter()
        .enumerate()
        .map(|(idx, &a)| {
            let i = idx + 1;
            let gpu_hours = time.cumulative_training(i);
            let c_a = annotation_cost(a, config);
            let c_c = compute_cost(gpu_hours, cpu_hours, i, config)?;
            Ok(CostRow {
                iteration: i,
                assessments: a,
                gpu_hours,
                cpu_hours,
                annotation_cost: c_a,
                compute_cost: c_c,
                total_cost: c_a + c_c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CostReport { rows })
}

impl CostReport {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["iteration", "assessments", "H_GPU", "H_CPU", "C_A", "C_C", "C_total"])?;
        for r in &self.rows {
            w.write_record([
                r.iteration.to_string(),
                r.assessments.to_string(),
                r.gpu_hours.to_string(),
                r.cpu_hours.to_string(),
                r.annotation_cost.to_string(),
                r.compute_cost.to_string(),
                r.total_cost.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
