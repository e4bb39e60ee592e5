use std::f64::consts::PI;

use super::{check_len, NumericsError, Result, RngStream};

/// Gaussian mixture with diagonal covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGmm {
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiagGmm {
    pub fn new(means: Vec<Vec<f64>>, vars: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(NumericsError::Invalid("mixture needs a component".into()));
        }
        check_len(means.len(), vars.len())?;
        check_len(means.len(), weights.len())?;
        let dim = means[0].len();
        for (m, v) in means.iter().zip(&vars) {
            check_len(dim, m.len())?;
            check_len(dim, v.len())?;
            if v.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
                return Err(NumericsError::Invalid("covariance must be positive".into()));
            }
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(NumericsError::Invalid(
                "weights must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(Self { means, vars, weights })
    }

    /// Equal-weight isotropic mixture.
    pub fn isotropic(means: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        let k = means.len();
        let vars = means.iter().map(|m| vec![sigma * sigma; m.len()]).collect();
        Self::new(means, vars, vec![1.0 / k as f64; k])
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn logpdf(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        let terms: Vec<f64> = self
            .means
            .iter()
            .zip(&self.vars)
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|((m, v), &w)| w.ln() + component_logpdf(m, v, x))
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
    }

    /// Largest log density over component centres; an upper reference for
    /// "excess" negative log-likelihood.
    pub fn peak_logpdf(&self) -> f64 {
        self.means
            .iter()
            .map(|m| self.logpdf(m).expect("dims by construction"))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut k = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        let z = rng.gauss(self.dim());
        self.means[k]
            .iter()
            .zip(&self.vars[k])
            .zip(z)
            .map(|((m, v), z)| m + v.sqrt() * z)
            .collect()
    }
}

fn component_logpdf(mean: &[f64], var: &[f64], x: &[f64]) -> f64 {
    mean.iter()
        .zip(var)
        .zip(x)
        .map(|((m, v), xi)| -0.5 * ((2.0 * PI * v).ln() + (xi - m) * (xi - m) / v))
        .sum()
}

/// `log sum_k w_k N(x; mu_k, diag(var_k))`.
pub fn gmm_logpdf(means: &[Vec<f64>], vars: &[Vec<f64>], weights: &[f64], x: &[f64]) -> Result<f64> {
    DiagGmm::new(means.to_vec(), vars.to_vec(), weights.to_vec())?.logpdf(x)
}
