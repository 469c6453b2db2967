use serde::{Deserialize, Serialize};

use super::grid::GridDistribution1D;
use crate::error::{Error, Result};
use crate::pointwise::BoundedInterval;

/// A step quantile function.
///
/// Cell `k` covers the levels `(levels[k-1], levels[k]]` (with `levels[-1] = 0`)
/// and the quantile is `values[k]` on it. This is the left-continuous
/// quantile of a discrete distribution putting mass `levels[k] - levels[k-1]`
/// on `values[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuantile", into = "RawQuantile")]
pub struct QuantileGrid1D {
    levels: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawQuantile {
    levels: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawQuantile> for QuantileGrid1D {
    type Error = Error;
    fn try_from(r: RawQuantile) -> Result<Self> {
        Self::new(r.levels, r.values)
    }
}

impl From<QuantileGrid1D> for RawQuantile {
    fn from(q: QuantileGrid1D) -> Self {
        RawQuantile {
            levels: q.levels,
            values: q.values,
        }
    }
}

impl QuantileGrid1D {
    pub fn new(levels: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || levels.len() != values.len() {
            return Err(Error::InvalidDistribution(
                "quantile grid needs matching nonempty levels and values".into(),
            ));
        }
        if levels[0] <= 0.0 || levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDistribution(
                "quantile levels must be strictly increasing in (0, 1]".into(),
            ));
        }
        let last = *levels.last().unwrap();
        if (last - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "last quantile level is {last}, expected 1"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidDistribution(
                "quantile values must be finite and nondecreasing".into(),
            ));
        }
        let mut levels = levels;
        *levels.last_mut().unwrap() = 1.0;
        Ok(Self { levels, values })
    }

    /// Trusted constructor for tables produced inside the crate.
    pub(crate) fn from_sorted_parts(levels: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert!(!levels.is_empty());
        let mut levels = levels;
        *levels.last_mut().unwrap() = 1.0;
        Self { levels, values }
    }

    /// Discrete distribution given by `(value, mass)` atoms, sorted by value.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        atoms.retain(|a| a.1 > 0.0);
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms with positive mass".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("atom masses sum to {total}")));
        }
        let mut levels = Vec::with_capacity(atoms.len());
        let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for (x, m) in atoms {
            acc += m / total;
            if values.last() == Some(&x) {
                *levels.last_mut().unwrap() = acc;
            } else {
                levels.push(acc);
                values.push(x);
            }
        }
        Ok(Self::from_sorted_parts(levels, values))
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn quantile_at(&self, t: f64) -> f64 {
        let k = self.levels.partition_point(|&l| l < t);
        self.values[k.min(self.values.len() - 1)]
    }

    /// `(value, mass)` for every cell.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut prev = 0.0;
        self.levels.iter().zip(&self.values).map(move |(&l, &v)| {
            let m = l - prev;
            prev = l;
            (v, m)
        })
    }

    /// The represented discrete distribution as a step CDF on `domain`.
    pub fn to_grid_distribution(&self, domain: BoundedInterval) -> Result<GridDistribution1D> {
        let (lo, hi) = (self.values[0], *self.values.last().unwrap());
        if lo < domain.l() || hi > domain.r() {
            return Err(Error::Domain(format!(
                "quantile values [{lo}, {hi}] leave [{}, {}]",
                domain.l(),
                domain.r()
            )));
        }
        let mut grid = Vec::with_capacity(self.values.len() + 2);
        let mut cdf = Vec::with_capacity(self.values.len() + 2);
        if lo > domain.l() {
            grid.push(domain.l());
            cdf.push(0.0);
        }
        for (&l, &v) in self.levels.iter().zip(&self.values) {
            if grid.last() == Some(&v) {
                *cdf.last_mut().unwrap() = l;
            } else {
                grid.push(v);
                cdf.push(l);
            }
        }
        if hi < domain.r() {
            grid.push(domain.r());
            cdf.push(1.0);
        }
        GridDistribution1D::validated(grid, cdf, super::grid::Interpolation::Step, 1e-9)
    }
}

/// Sorted union of the level sets of several quantile grids.
pub fn merge_levels<'a>(grids: impl IntoIterator<Item = &'a QuantileGrid1D>) -> Vec<f64> {
    let mut all: Vec<f64> = grids.into_iter().flat_map(|q| q.levels.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_follows_cell_convention() {
        let q = QuantileGrid1D::new(vec![0.25, 1.0], vec![-1.0, 2.0]).unwrap();
        assert_eq!(q.quantile_at(0.0), -1.0);
        assert_eq!(q.quantile_at(0.25), -1.0);
        assert_eq!(q.quantile_at(0.2500001), 2.0);
        assert_eq!(q.quantile_at(1.0), 2.0);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(QuantileGrid1D::new(vec![0.5, 0.5, 1.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(QuantileGrid1D::new(vec![0.5, 1.0], vec![1.0, 0.0]).is_err());
        assert!(QuantileGrid1D::new(vec![0.5, 0.9], vec![0.0, 1.0]).is_err());
        assert!(QuantileGrid1D::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn converts_back_to_cdf() {
        let dom = BoundedInterval::new(0.0, 1.0).unwrap();
        let q = QuantileGrid1D::from_atoms(vec![(0.7, 0.5), (0.2, 0.25), (0.2, 0.25)]).unwrap();
        assert_eq!(q.values(), &[0.2, 0.7]);
        let d = q.to_grid_distribution(dom).unwrap();
        assert_eq!(d.grid(), &[0.0, 0.2, 0.7, 1.0]);
        assert_eq!(d.cdf_values(), &[0.0, 0.5, 1.0, 1.0]);
        let back = d.quantile_grid(8);
        assert_eq!(back, q);
    }
}
