//! One-dimensional optimal transport through quantile functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointwise::{square_substitution_raw, BoundedInterval};
use crate::types::{GridDistribution1D, QuantileGrid1D};

/// Default number of quantile cells used to discretise linearly interpolated CDFs.
pub const DEFAULT_QUANTILE_NODES: usize = 4096;
/// Side of the probe grid for the cross-derivative condition.
pub const CROSS_DERIVATIVE_PROBE: usize = 32;

/// A transport cost `c(x, x')` on an interval.
pub trait TransportCost: Sync {
    fn cost(&self, x: f64, y: f64) -> f64;
    fn domain(&self) -> BoundedInterval;
}

/// `c(x, x') = (x - x')^2` on an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquaredCost {
    pub domain: BoundedInterval,
}

impl SquaredCost {
    pub fn new(domain: BoundedInterval) -> Self {
        Self { domain }
    }
}

impl TransportCost for SquaredCost {
    fn cost(&self, x: f64, y: f64) -> f64 {
        (x - y) * (x - y)
    }
    fn domain(&self) -> BoundedInterval {
        self.domain
    }
}

/// A cost with a pointwise substitution function, used levelwise on quantiles.
pub trait MixableCost: TransportCost {
    /// Aggregated value for weighted forecast values.
    fn substitute(&self, values: &[f64], weights: &[f64]) -> f64;
    /// Rate at which [`MixableCost::substitute`] certifies mixability.
    fn eta_mixable(&self) -> f64;
}

impl MixableCost for SquaredCost {
    fn substitute(&self, values: &[f64], weights: &[f64]) -> f64 {
        square_substitution_raw(values, weights, self.domain.l(), self.domain.r())
    }
    fn eta_mixable(&self) -> f64 {
        2.0 / (self.domain.width() * self.domain.width())
    }
}

/// Wraps a closure as a cost on `domain`.
pub struct FnCost<F> {
    pub f: F,
    pub domain: BoundedInterval,
}

impl<F: Fn(f64, f64) -> f64 + Sync> TransportCost for FnCost<F> {
    fn cost(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
    fn domain(&self) -> BoundedInterval {
        self.domain
    }
}

/// Errors unless the mixed derivative `d^2 c / dx dx'` is negative at every
/// node of a 32x32 interior probe grid (central finite differences).
pub fn check_cross_derivative(cost: &dyn TransportCost) -> Result<()> {
    let iv = cost.domain();
    let h = 1e-3 * iv.width();
    let n = CROSS_DERIVATIVE_PROBE;
    let node = |i: usize| iv.l() + iv.width() * (i as f64 + 0.5) / n as f64;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (node(i), node(j));
            let d = (cost.cost(x + h, y + h) - cost.cost(x + h, y - h) - cost.cost(x - h, y + h)
                + cost.cost(x - h, y - h))
                / (4.0 * h * h);
            if d >= 0.0 || d.is_nan() {
                return Err(Error::Configuration(format!(
                    "transport cost has cross derivative {d} >= 0 at ({x}, {y})"
                )));
            }
        }
    }
    Ok(())
}

/// `int_0^1 c(Q_a(t), Q_b(t)) dt` for step quantile functions, exact on the merged levels.
pub fn quantile_cost(a: &QuantileGrid1D, b: &QuantileGrid1D, c: impl Fn(f64, f64) -> f64) -> f64 {
    let (la, va) = (a.levels(), a.values());
    let (lb, vb) = (b.levels(), b.values());
    let (mut i, mut j) = (0, 0);
    let mut prev = 0.0;
    let mut total = 0.0;
    while i < la.len() && j < lb.len() {
        let level = la[i].min(lb[j]);
        total += (level - prev) * c(va[i], vb[j]);
        prev = level;
        if la[i] == level {
            i += 1;
        }
        if lb[j] == level {
            j += 1;
        }
    }
    total
}

/// Optimal transport cost `int_0^1 c(Q_g(t), Q_o(t)) dt` between two 1D distributions.
///
/// Step CDFs are handled exactly; linear CDFs are discretised into
/// `quantile_nodes` equal-mass cells. The cost must pass
/// [`check_cross_derivative`].
pub fn ot1d_cost(
    g: &GridDistribution1D,
    o: &GridDistribution1D,
    cost: &dyn TransportCost,
    quantile_nodes: usize,
) -> Result<f64> {
    check_cross_derivative(cost)?;
    ot1d_cost_unchecked(&g.quantile_grid(quantile_nodes), &o.quantile_grid(quantile_nodes), cost)
}

pub(crate) fn ot1d_cost_unchecked(qg: &QuantileGrid1D, qo: &QuantileGrid1D, cost: &dyn TransportCost) -> Result<f64> {
    let iv = cost.domain();
    for (q, what) in [(qg, "forecast"), (qo, "outcome")] {
        let (lo, hi) = (q.values()[0], *q.values().last().unwrap());
        if lo < iv.l() || hi > iv.r() {
            return Err(Error::Domain(format!(
                "{what} support [{lo}, {hi}] leaves [{}, {}]",
                iv.l(),
                iv.r()
            )));
        }
    }
    Ok(quantile_cost(qg, qo, |x, y| cost.cost(x, y)))
}
