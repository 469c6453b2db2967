use serde::{Deserialize, Serialize};

use super::{GridDistribution1D, ParticleDistributionND};
use crate::error::{Error, Result};
use crate::pointwise::BoundedInterval;

/// Largest dimension supported by the tensor-grid representation.
pub const MAX_GRID_DIM: usize = 3;

/// Multivariate CDF sampled on a tensor grid, `D <= 3`.
///
/// Values are stored in row-major order (last axis fastest). Between
/// nodes the CDF is treated as multilinear for quadrature purposes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridNd", into = "RawGridNd")]
pub struct GridCdfND {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawGridNd {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl TryFrom<RawGridNd> for GridCdfND {
    type Error = Error;
    fn try_from(r: RawGridNd) -> Result<Self> {
        Self::new(r.axes, r.values)
    }
}

impl From<GridCdfND> for RawGridNd {
    fn from(g: GridCdfND) -> Self {
        RawGridNd {
            axes: g.axes,
            values: g.values,
        }
    }
}

impl GridCdfND {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let d = axes.len();
        if d == 0 {
            return Err(Error::InvalidDistribution("no axes".into()));
        }
        if d > MAX_GRID_DIM {
            return Err(Error::Unsupported(format!(
                "grid CDFs are limited to dimension {MAX_GRID_DIM}, got {d}"
            )));
        }
        for a in &axes {
            if a.len() < 2 || a.windows(2).any(|w| w[1] <= w[0]) || a.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDistribution(
                    "axes must be finite, strictly increasing, with at least two points".into(),
                ));
            }
        }
        let n: usize = axes.iter().map(Vec::len).product();
        if values.len() != n {
            return Err(Error::InvalidDistribution(format!(
                "expected {n} CDF values, got {}",
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !(v.is_finite() && (-1e-12..=1.0 + 1e-12).contains(v)))
        {
            return Err(Error::InvalidDistribution("CDF values must lie in [0, 1]".into()));
        }
        Ok(Self { axes, values })
    }

    /// Samples `f` on the tensor grid.
    pub fn from_fn(axes: Vec<Vec<f64>>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let n: usize = axes.iter().map(Vec::len).product();
        let mut values = Vec::with_capacity(n);
        let mut x = vec![0.0; axes.len()];
        for flat in 0..n {
            unflatten(&axes, flat, &mut x);
            values.push(f(&x));
        }
        Self::new(axes, values)
    }

    /// CDF of the independent product of one-dimensional marginals, sampled on their grids.
    pub fn product(marginals: &[GridDistribution1D]) -> Result<Self> {
        let axes = marginals.iter().map(|m| m.grid().to_vec()).collect();
        Self::from_fn(axes, |x| marginals.iter().zip(x).map(|(m, &xi)| m.cdf_at(xi)).product())
    }

    /// CDF of a particle cloud: `F(x) = sum_k w_k [p_k <= x componentwise]`.
    pub fn from_particles(p: &ParticleDistributionND, axes: Vec<Vec<f64>>) -> Result<Self> {
        if p.dim() != axes.len() {
            return Err(Error::Incompatible(format!(
                "cloud of dimension {} on {} axes",
                p.dim(),
                axes.len()
            )));
        }
        Self::from_fn(axes, |x| {
            p.points()
                .iter()
                .zip(p.weights())
                .filter(|(q, _)| q.iter().zip(x).all(|(qi, xi)| qi <= xi))
                .map(|(_, w)| w)
                .sum::<f64>()
                .min(1.0)
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same axes, new values (unchecked range).
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            axes: self.axes.clone(),
            values,
        }
    }

    /// The box spanned by the axes.
    pub fn domain(&self) -> Vec<BoundedInterval> {
        self.axes
            .iter()
            .map(|a| BoundedInterval::new(a[0], *a.last().unwrap()).expect("axes are increasing"))
            .collect()
    }

    /// Exchanges axes `i` and `j`.
    pub fn swap_axes(&self, i: usize, j: usize) -> Self {
        let mut axes = self.axes.clone();
        axes.swap(i, j);
        let n = self.values.len();
        let mut values = vec![0.0; n];
        let mut idx = vec![0usize; self.dim()];
        for (flat, v) in self.values.iter().enumerate() {
            unflatten_index(&self.axes, flat, &mut idx);
            idx.swap(i, j);
            values[flatten_index(&axes, &idx)] = *v;
        }
        Self { axes, values }
    }

    pub(crate) fn check_same_axes(&self, other: &GridCdfND) -> Result<()> {
        if self.axes != other.axes {
            return Err(Error::Incompatible("grid CDFs use different tensor grids".into()));
        }
        Ok(())
    }
}

pub(crate) fn unflatten_index(axes: &[Vec<f64>], mut flat: usize, idx: &mut [usize]) {
    for d in (0..axes.len()).rev() {
        let n = axes[d].len();
        idx[d] = flat % n;
        flat /= n;
    }
}

fn flatten_index(axes: &[Vec<f64>], idx: &[usize]) -> usize {
    idx.iter().zip(axes).fold(0, |acc, (&i, a)| acc * a.len() + i)
}

fn unflatten(axes: &[Vec<f64>], flat: usize, x: &mut [f64]) {
    let mut idx = vec![0usize; axes.len()];
    unflatten_index(axes, flat, &mut idx);
    for (d, &i) in idx.iter().enumerate() {
        x[d] = axes[d][i];
    }
}
