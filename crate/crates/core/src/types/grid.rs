//! One-dimensional distributions stored as CDF values on a sorted grid.
//!
//! The default convention is a right-continuous step CDF: between two grid
//! points the CDF keeps the value of the left point. This makes Dirac and
//! empirical outcomes exact and matches the infimum definition of the
//! quantile function. Linear interpolation is available for smooth
//! distributions such as the uniform law.
//!
//! Grid choices (the 1024-point canonical grid, how samples are inserted)
//! are decisions of this crate; nothing in the underlying theory fixes a
//! discretisation.

use serde::{Deserialize, Serialize};

use super::quantile::QuantileGrid1D;
use crate::error::{Error, Result};
use crate::pointwise::BoundedInterval;

/// Number of points of the canonical uniform grid.
pub const CANONICAL_GRID_POINTS: usize = 1024;
/// Tolerance on the CDF invariants (range, monotonicity, unit total mass).
pub const CDF_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Piecewise-constant, right-continuous.
    #[default]
    Step,
    /// Piecewise-linear between grid points.
    Linear,
}

impl Interpolation {
    fn is_step(&self) -> bool {
        *self == Interpolation::Step
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridDistribution1D {
    grid: Vec<f64>,
    cdf: Vec<f64>,
    interpolation: Interpolation,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    grid: Vec<f64>,
    cdf: Vec<f64>,
    #[serde(default, skip_serializing_if = "Interpolation::is_step")]
    interpolation: Interpolation,
}

impl TryFrom<RawGrid> for GridDistribution1D {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        Self::with_interpolation(raw.grid, raw.cdf, raw.interpolation)
    }
}

impl From<GridDistribution1D> for RawGrid {
    fn from(d: GridDistribution1D) -> Self {
        RawGrid {
            grid: d.grid,
            cdf: d.cdf,
            interpolation: d.interpolation,
        }
    }
}

impl GridDistribution1D {
    /// Step CDF on `grid`.
    pub fn new(grid: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        Self::with_interpolation(grid, cdf, Interpolation::Step)
    }

    pub fn with_interpolation(grid: Vec<f64>, cdf: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        Self::validated(grid, cdf, interpolation, CDF_TOLERANCE)
    }

    /// Validates and repairs drift up to `tol` (clamping, running maximum, unit end value).
    pub(crate) fn validated(grid: Vec<f64>, mut cdf: Vec<f64>, interpolation: Interpolation, tol: f64) -> Result<Self> {
        check_grid(&grid)?;
        if cdf.len() != grid.len() {
            return Err(Error::InvalidDistribution(format!(
                "grid has {} points but cdf has {}",
                grid.len(),
                cdf.len()
            )));
        }
        let mut running = 0.0f64;
        for (i, v) in cdf.iter_mut().enumerate() {
            if !v.is_finite() || *v < -tol || *v > 1.0 + tol {
                return Err(Error::InvalidDistribution(format!("cdf[{i}] = {v} is outside [0, 1]")));
            }
            if *v < running - tol {
                return Err(Error::InvalidDistribution(format!(
                    "cdf decreases at index {i}: {v} < {running}"
                )));
            }
            *v = v.clamp(0.0, 1.0).max(running);
            running = *v;
        }
        let last = *cdf.last().unwrap();
        if (last - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!("cdf ends at {last}, expected 1")));
        }
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self {
            grid,
            cdf,
            interpolation,
        })
    }

    /// Evaluates `f` on the grid and wraps the result.
    pub fn from_fn(grid: Vec<f64>, interpolation: Interpolation, f: impl Fn(f64) -> f64) -> Result<Self> {
        let cdf = grid.iter().map(|&x| f(x)).collect();
        Self::with_interpolation(grid, cdf, interpolation)
    }

    /// Uniform distribution on the domain, linear interpolation on the canonical grid.
    pub fn uniform(domain: BoundedInterval) -> Self {
        let grid = canonical_grid(domain, CANONICAL_GRID_POINTS);
        let (a, w) = (domain.l(), domain.width());
        Self::from_fn(grid, Interpolation::Linear, |x| ((x - a) / w).clamp(0.0, 1.0)).expect("uniform cdf is valid")
    }

    /// Point mass at `x` on the canonical grid of `domain` (with `x` inserted).
    pub fn dirac(x: f64, domain: BoundedInterval) -> Result<Self> {
        if !domain.contains(x) {
            return Err(Error::Domain(format!(
                "dirac location {x} outside [{}, {}]",
                domain.l(),
                domain.r()
            )));
        }
        let mut grid = canonical_grid(domain, CANONICAL_GRID_POINTS);
        insert_sorted(&mut grid, x);
        Self::dirac_on_grid(x, grid)
    }

    /// Point mass at `x` on the coarsest grid spanning `domain`: `{l, x, r}`.
    pub fn point_mass(x: f64, domain: BoundedInterval) -> Result<Self> {
        domain.check(x, "point mass location")?;
        let mut grid = vec![domain.l()];
        if x > domain.l() {
            grid.push(x);
        }
        if x < domain.r() {
            grid.push(domain.r());
        }
        Self::dirac_on_grid(x, grid)
    }

    /// Step CDF on a caller-provided grid: 0 below `x`, 1 from `x` onwards.
    pub fn dirac_on_grid(x: f64, grid: Vec<f64>) -> Result<Self> {
        check_grid(&grid)?;
        if x < grid[0] || x > *grid.last().unwrap() {
            return Err(Error::Domain(format!("dirac location {x} outside the grid")));
        }
        let cdf = grid.iter().map(|&g| if g >= x { 1.0 } else { 0.0 }).collect();
        Self::new(grid, cdf)
    }

    /// Weighted empirical distribution on `domain` (grid = domain endpoints and the samples).
    pub fn from_weighted_samples(samples: &[f64], weights: &[f64], domain: BoundedInterval) -> Result<Self> {
        if samples.len() != weights.len() || samples.is_empty() {
            return Err(Error::InvalidDistribution(
                "samples and weights must be nonempty and of equal length".into(),
            ));
        }
        let weights = super::weights::normalize_simplex(weights.to_vec(), "sample weights")?;
        if let Some(x) = samples.iter().find(|&&x| !domain.contains(x)) {
            return Err(Error::Domain(format!(
                "sample {x} outside [{}, {}]",
                domain.l(),
                domain.r()
            )));
        }
        let mut pairs: Vec<(f64, f64)> = samples.iter().copied().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut grid = vec![domain.l()];
        let mut cdf = vec![0.0];
        let mut acc = 0.0;
        for (x, w) in pairs {
            acc += w;
            if x == *grid.last().unwrap() {
                *cdf.last_mut().unwrap() = acc;
            } else {
                grid.push(x);
                cdf.push(acc);
            }
        }
        if *grid.last().unwrap() < domain.r() {
            grid.push(domain.r());
            cdf.push(1.0);
        }
        Self::validated(grid, cdf, Interpolation::Step, 1e-9)
    }

    /// Equal-weight empirical distribution.
    pub fn empirical(samples: &[f64], domain: BoundedInterval) -> Result<Self> {
        let w = vec![1.0 / samples.len().max(1) as f64; samples.len()];
        Self::from_weighted_samples(samples, &w, domain)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Smallest and largest grid points.
    pub fn support_bounds(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    pub fn cdf_at(&self, x: f64) -> f64 {
        self.cdf_with(self.grid.partition_point(|&g| g <= x), x)
    }

    /// `P(X < x)`: the left limit of the CDF at `x`.
    pub fn cdf_left_limit(&self, x: f64) -> f64 {
        let le = self.grid.partition_point(|&g| g <= x);
        self.left_limit_with(self.grid.partition_point(|&g| g < x), le, x)
    }

    /// Cursor for CDF queries at nondecreasing points.
    pub fn cursor(&self) -> CdfCursor<'_> {
        CdfCursor { dist: self, le: 0 }
    }

    /// `F(x)` given `le`, the number of grid points `<= x`.
    fn cdf_with(&self, le: usize, x: f64) -> f64 {
        let n = self.grid.len();
        if le == 0 {
            return 0.0;
        }
        if le == n {
            return 1.0;
        }
        let i = le - 1;
        match self.interpolation {
            Interpolation::Step => self.cdf[i],
            Interpolation::Linear => {
                let (x0, x1) = (self.grid[i], self.grid[i + 1]);
                let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
                c0 + (c1 - c0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// `F(x-)` given the counts of grid points `< x` and `<= x`.
    fn left_limit_with(&self, lt: usize, le: usize, x: f64) -> f64 {
        let n = self.grid.len();
        if lt == 0 {
            return 0.0;
        }
        if lt == n {
            return 1.0;
        }
        match self.interpolation {
            Interpolation::Step => self.cdf[lt - 1],
            Interpolation::Linear => {
                if x == self.grid[n - 1] {
                    return self.cdf[n - 1];
                }
                self.cdf_with(le, x)
            }
        }
    }

    /// Generalised inverse `inf { x : t <= F(x) }`, clamped to the grid at `t <= 0`.
    pub fn quantile_at(&self, t: f64) -> f64 {
        let t = t.min(1.0);
        if t <= self.cdf[0] {
            return self.grid[0];
        }
        let i = self.cdf.partition_point(|&c| c < t);
        let i = i.min(self.cdf.len() - 1);
        match self.interpolation {
            Interpolation::Step => self.grid[i],
            Interpolation::Linear => {
                let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
                let (x0, x1) = (self.grid[i - 1], self.grid[i]);
                (x0 + (t - c0) / (c1 - c0) * (x1 - x0)).min(x1)
            }
        }
    }

    /// Slope of a linearly interpolated CDF.
    pub fn density_at(&self, x: f64) -> Result<f64> {
        if self.interpolation.is_step() {
            return Err(Error::Unsupported("a step CDF has point masses, not a density".into()));
        }
        let n = self.grid.len();
        if x < self.grid[0] || x >= self.grid[n - 1] {
            return Ok(0.0);
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        Ok((self.cdf[i + 1] - self.cdf[i]) / (self.grid[i + 1] - self.grid[i]))
    }

    /// Atoms `(location, mass)` of a step CDF, zero masses omitted.
    pub fn point_masses(&self) -> Result<Vec<(f64, f64)>> {
        if !self.interpolation.is_step() {
            return Err(Error::Unsupported("point masses are only defined for step CDFs".into()));
        }
        let mut prev = 0.0;
        let mut out = Vec::new();
        for (&x, &c) in self.grid.iter().zip(&self.cdf) {
            if c > prev {
                out.push((x, c - prev));
            }
            prev = c;
        }
        Ok(out)
    }

    /// Quantile function as a step table.
    ///
    /// Exact for step CDFs. A linear CDF is discretised into `nodes` equal
    /// cells, each carrying the quantile at its midpoint level.
    pub fn quantile_grid(&self, nodes: usize) -> QuantileGrid1D {
        match self.interpolation {
            Interpolation::Step => {
                let mut levels = Vec::new();
                let mut values = Vec::new();
                let mut prev = 0.0;
                for (&x, &c) in self.grid.iter().zip(&self.cdf) {
                    if c > prev {
                        levels.push(c);
                        values.push(x);
                    }
                    prev = c;
                }
                QuantileGrid1D::from_sorted_parts(levels, values)
            }
            Interpolation::Linear => {
                let k = nodes.max(1);
                let levels = (1..=k).map(|i| i as f64 / k as f64).collect();
                let values = (0..k).map(|i| self.quantile_at((i as f64 + 0.5) / k as f64)).collect();
                QuantileGrid1D::from_sorted_parts(levels, values)
            }
        }
    }
}

/// `n` equally spaced points covering `domain`, endpoints included.
pub fn canonical_grid(domain: BoundedInterval, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (a, b) = (domain.l(), domain.r());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Sorted union of several sorted grids with exact duplicates removed.
pub fn merge_grids<'a>(grids: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut grids = grids.into_iter();
    let Some(first) = grids.next() else {
        return Vec::new();
    };
    let mut acc = first.to_vec();
    acc.dedup();
    for g in grids {
        if g != acc.as_slice() {
            acc = merge_two(&acc, g);
        }
    }
    acc
}

fn merge_two(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        if out.last() != Some(&x) {
            out.push(x);
        }
    }
    out
}

/// Sequential CDF evaluation; amortised constant time per query.
#[derive(Debug, Clone)]
pub struct CdfCursor<'a> {
    dist: &'a GridDistribution1D,
    le: usize,
}

impl CdfCursor<'_> {
    /// `(P(X < x), P(X <= x))`. Queries must not decrease.
    pub fn eval(&mut self, x: f64) -> (f64, f64) {
        let g = &self.dist.grid;
        debug_assert!(self.le == 0 || g[self.le - 1] <= x, "cursor query moved backwards");
        while self.le < g.len() && g[self.le] <= x {
            self.le += 1;
        }
        let le = self.le;
        let lt = if le > 0 && g[le - 1] == x { le - 1 } else { le };
        (self.dist.left_limit_with(lt, le, x), self.dist.cdf_with(le, x))
    }
}

fn insert_sorted(grid: &mut Vec<f64>, x: f64) {
    let i = grid.partition_point(|&g| g < x);
    if i == grid.len() || grid[i] != x {
        grid.insert(i, x);
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidDistribution("grid needs at least two points".into()));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidDistribution("grid has non-finite points".into()));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidDistribution(format!(
            "grid not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}
