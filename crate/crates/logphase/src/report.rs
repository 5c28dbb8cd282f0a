//! Report types shared by the validation, inequality and solver layers.
//! All of them serialize to JSON with stable field order.

use serde::{Deserialize, Serialize};

use crate::expr::Point;

/// One hypothesis line: `margin > 0` means the inequality held strictly at
/// every scanned point, `worst_point` is where the margin is smallest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisEntry {
    pub hypothesis: String,
    pub pass: bool,
    pub worst_point: Vec<f64>,
    pub margin: f64,
    /// Regime indicators (sublinear/superlinear and their sandwich
    /// conditions) are informational and do not gate `all_pass`.
    pub required: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub entries: Vec<HypothesisEntry>,
    pub all_pass: bool,
    /// Uniform floor for q + s (and the subcritical analogue).
    pub r: f64,
    /// Uniform floor for a + b.
    pub d: f64,
    pub grid_resolution: usize,
}

impl HypothesisReport {
    pub fn entry(&self, name: &str) -> Option<&HypothesisEntry> {
        self.entries.iter().find(|e| e.hypothesis == name)
    }
}

/// Outcome of a sampled inequality check. `worst_margin >= 0` means no
/// violation was seen; `witness` is the sample achieving the worst margin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub samples: usize,
    pub worst_margin: f64,
    pub witness: Vec<f64>,
    /// Empirically fitted constants, when the inequality has any.
    pub constants: Vec<(String, f64)>,
}

impl InequalityReport {
    pub fn new(name: &str, samples: usize) -> Self {
        InequalityReport {
            name: name.to_string(),
            samples,
            worst_margin: f64::INFINITY,
            witness: Vec::new(),
            constants: Vec::new(),
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst_margin >= -tol
    }

    pub fn push_constant(&mut self, name: &str, value: f64) {
        self.constants.push((name.to_string(), value));
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Fold one sample into the running worst margin.
    pub fn observe(&mut self, margin: f64, witness: &[f64]) {
        if margin < self.worst_margin {
            self.worst_margin = margin;
            self.witness = witness.to_vec();
        }
    }
}

pub fn point_vec(p: Point, dim: usize) -> Vec<f64> {
    p[..dim].to_vec()
}
