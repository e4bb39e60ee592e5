use std::ops::Deref;

use serde::{Deserialize, Serialize};

/// One candidate action vector drawn from (or refined by) the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionProposal(pub Vec<f64>);

impl ActionProposal {
    pub fn new(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        crate::numerics::all_finite(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Bit patterns of every coordinate, for exact replay comparisons.
    pub fn bits(&self) -> Vec<u64> {
        self.0.iter().map(|v| v.to_bits()).collect()
    }
}

impl Deref for ActionProposal {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ActionProposal {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
