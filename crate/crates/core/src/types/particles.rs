use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::weights::normalize_simplex;
use crate::error::{Error, Result};

/// Weighted point cloud in `R^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParticles", into = "RawParticles")]
pub struct ParticleDistributionND {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    dim: usize,
    radius: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawParticles {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
}

impl TryFrom<RawParticles> for ParticleDistributionND {
    type Error = Error;
    fn try_from(r: RawParticles) -> Result<Self> {
        match r.radius {
            Some(radius) => Self::with_radius(r.points, r.weights, radius),
            None => Self::new(r.points, r.weights),
        }
    }
}

impl From<ParticleDistributionND> for RawParticles {
    fn from(p: ParticleDistributionND) -> Self {
        RawParticles {
            points: p.points,
            weights: p.weights,
            radius: p.radius,
        }
    }
}

impl ParticleDistributionND {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidDistribution(
                "particle cloud needs matching nonempty points and weights".into(),
            ));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidDistribution("dimension must be at least 1".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidDistribution("ragged particle coordinates".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite particle coordinate".into()));
        }
        let weights = normalize_simplex(weights, "particle weights")?;
        Ok(Self {
            points,
            weights,
            dim,
            radius: None,
        })
    }

    /// Cloud declared to live in the closed ball of radius `radius` around the origin.
    pub fn with_radius(points: Vec<Vec<f64>>, weights: Vec<f64>, radius: f64) -> Result<Self> {
        let mut p = Self::new(points, weights)?;
        p.declare_radius(radius)?;
        Ok(p)
    }

    pub fn equal_weights(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len().max(1);
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        Self::new(vec![point], vec![1.0])
    }

    pub fn declare_radius(&mut self, radius: f64) -> Result<()> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("support radius {radius} must be positive")));
        }
        let limit = radius * (1.0 + 1e-12);
        if let Some(i) = self.points.iter().position(|p| norm(p) > limit) {
            return Err(Error::Domain(format!(
                "particle {i} has norm {} > radius {radius}",
                norm(&self.points[i])
            )));
        }
        self.radius = Some(radius);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    /// Largest particle norm.
    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(|p| norm(p)).fold(0.0, f64::max)
    }

    /// Projection `<x, theta>` of every particle, as sorted 1D atoms.
    pub fn project(&self, theta: &[f64]) -> Atoms1D {
        debug_assert_eq!(theta.len(), self.dim);
        let values = self.points.iter().map(|p| dot(p, theta)).collect();
        Atoms1D::from_unsorted(values, self.weights.clone())
    }

    /// `SCDF(theta, s)`: mass of the half-space `<x, theta> <= s`.
    pub fn sliced_cdf(&self, theta: &[f64], s: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| dot(p, theta) <= s)
            .map(|(_, w)| w)
            .sum::<f64>()
            .min(1.0)
    }

    /// `SQ(theta, t)`: quantile of the projection onto `theta`.
    pub fn sliced_quantile(&self, theta: &[f64], t: f64) -> f64 {
        self.project(theta).quantile_at(t)
    }

    /// Characteristic function `E exp(i <x, t>)`.
    pub fn characteristic_function(&self, t: &[f64]) -> Complex64 {
        debug_assert_eq!(t.len(), self.dim);
        let (mut re, mut im) = (0.0, 0.0);
        for (p, &w) in self.points.iter().zip(&self.weights) {
            let (s, c) = dot(p, t).sin_cos();
            re += w * c;
            im += w * s;
        }
        Complex64::new(re, im)
    }

    /// Pushes every particle through `f`, keeping weights. The support radius is dropped.
    pub fn map_points(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        Self::new(self.points.iter().map(|p| f(p)).collect(), self.weights.clone())
    }

    /// Swaps two coordinates of every particle.
    pub fn swap_coordinates(&self, i: usize, j: usize) -> Result<Self> {
        self.map_points(|p| {
            let mut q = p.to_vec();
            q.swap(i, j);
            q
        })
    }
}

/// Weighted atoms on the real line, sorted by location.
#[derive(Debug, Clone, PartialEq)]
pub struct Atoms1D {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl Atoms1D {
    pub fn from_unsorted(values: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        Self {
            values: idx.iter().map(|&i| values[i]).collect(),
            weights: idx.iter().map(|&i| weights[i]).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn quantile_at(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (&v, &w) in self.values.iter().zip(&self.weights) {
            acc += w;
            if acc >= t {
                return v;
            }
        }
        *self.values.last().unwrap()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_inputs() {
        assert!(ParticleDistributionND::new(vec![], vec![]).is_err());
        assert!(ParticleDistributionND::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
        assert!(ParticleDistributionND::new(vec![vec![0.0]], vec![0.5]).is_err());
        assert!(ParticleDistributionND::with_radius(vec![vec![3.0, 4.0]], vec![1.0], 4.9).is_err());
        assert!(ParticleDistributionND::with_radius(vec![vec![3.0, 4.0]], vec![1.0], 5.0).is_ok());
    }

    #[test]
    fn sliced_views() {
        let p = ParticleDistributionND::new(vec![vec![1.0, 0.0], vec![0.0, 2.0]], vec![0.25, 0.75]).unwrap();
        let theta = [0.0, 1.0];
        assert_eq!(p.sliced_cdf(&theta, 0.0), 0.25);
        assert_eq!(p.sliced_cdf(&theta, 2.0), 1.0);
        assert_eq!(p.sliced_quantile(&theta, 0.25), 0.0);
        assert_eq!(p.sliced_quantile(&theta, 0.3), 2.0);
    }

    #[test]
    fn characteristic_function_of_dirac() {
        let p = ParticleDistributionND::dirac(vec![0.5]).unwrap();
        let phi = p.characteristic_function(&[2.0]);
        assert!((phi.re - 1f64.cos()).abs() < 1e-15);
        assert!((phi.im - 1f64.sin()).abs() < 1e-15);
        assert!(phi.norm() <= 1.0 + 1e-15);
    }

    #[test]
    fn json_schema() {
        let p = ParticleDistributionND::new(vec![vec![0.0, 1.0]], vec![1.0]).unwrap();
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"points":[[0.0,1.0]],"weights":[1.0]}"#
        );
    }
}
