use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deviation from unit sum that constructors silently absorb by renormalising.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;
/// Tolerance of the simplex invariant after construction.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A point on the probability simplex: the learner's belief over experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        Ok(Self {
            w: normalize_simplex(w, "weight vector")?,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        Ok(Self {
            w: vec![1.0 / n as f64; n],
        })
    }

    pub fn one_hot(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::InvalidWeights(format!(
                "one-hot index {index} out of range for {n} experts"
            )));
        }
        let mut w = vec![0.0; n];
        w[index] = 1.0;
        Ok(Self { w })
    }

    /// Builds weights from unnormalised log-weights (`-inf` entries become zero).
    pub fn from_log_weights(log_w: &[f64]) -> Result<Self> {
        let lse = crate::math::logsumexp(log_w);
        if !lse.is_finite() {
            return Err(Error::InvalidWeights("log-weights have no finite normaliser".into()));
        }
        let w: Vec<f64> = log_w.iter().map(|&l| (l - lse).exp()).collect();
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn get(&self, n: usize) -> f64 {
        self.w[n]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.w.iter().copied()
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.w
            .iter()
            .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
            .collect()
    }

    /// Same weights with indices rearranged: `out[i] = self[perm[i]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.w.len() {
            return Err(Error::InvalidWeights("permutation length mismatch".into()));
        }
        Self::new(perm.iter().map(|&p| self.w[p]).collect())
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.w
    }
}

/// Validates a nonnegative vector summing to one, renormalising tiny deviations.
pub(crate) fn normalize_simplex(mut w: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::InvalidWeights(format!("{what} is empty")));
    }
    if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidWeights(format!(
            "{what} entry {i} is {v}; entries must be finite and nonnegative"
        )));
    }
    let sum: f64 = crate::math::pairwise_sum(&w);
    if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
        return Err(Error::InvalidWeights(format!("{what} sums to {sum}, expected 1")));
    }
    if sum != 1.0 {
        for v in &mut w {
            *v /= sum;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renormalizes_small_drift() {
        let w = WeightVector::new(vec![0.5, 0.5 + 5e-10]).unwrap();
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < SIMPLEX_TOLERANCE);
    }

    #[test]
    fn rejects_large_drift_and_negatives() {
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
        assert!(WeightVector::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn log_weights_roundtrip() {
        let w = WeightVector::new(vec![0.25, 0.75, 0.0]).unwrap();
        let back = WeightVector::from_log_weights(&w.log_weights()).unwrap();
        for (a, b) in w.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(back.get(2), 0.0);
    }

    #[test]
    fn json_is_a_plain_array() {
        let w = WeightVector::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(serde_json::to_string(&w).unwrap(), "[0.25,0.75]");
        let bad: std::result::Result<WeightVector, _> = serde_json::from_str("[0.2,0.2]");
        assert!(bad.is_err());
    }
}
