//! Aggregation rules: pointwise substitutions, mixtures and quantile constructions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::losses::{
    as_grid_1d, as_quantiles, LossSpec, MixableCost, Mode, PreparedLoss, SquaredCost, DEFAULT_QUANTILE_NODES,
};
use crate::pointwise::{square_substitution_raw, BoundedInterval};
use crate::types::{
    merge_grids, merge_levels, AffineCopy, BaseMeasure, DensityGrid, Distribution, GridCdfND, GridDistribution1D,
    Interpolation, ParticleDistributionND, QuantileGrid1D, WeightVector,
};

/// Tolerance on the monotonicity of a substituted CDF.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-10;
/// Particle cap used by [`resample_stratified`] when none is given.
pub const DEFAULT_PARTICLE_CAP: usize = 10_000;

fn check_count(n: usize, w: &WeightVector) -> Result<()> {
    if n == 0 {
        return Err(Error::Size("no forecasts to aggregate".into()));
    }
    if n != w.len() {
        return Err(Error::Size(format!("{n} forecasts for {} weights", w.len())));
    }
    Ok(())
}

/// Indices of experts with positive weight.
fn active(w: &WeightVector) -> Vec<usize> {
    (0..w.len()).filter(|&n| w.get(n) > 0.0).collect()
}

fn common_interpolation(forecasts: &[&GridDistribution1D]) -> Result<Interpolation> {
    let interp = forecasts[0].interpolation();
    if forecasts.iter().any(|f| f.interpolation() != interp) {
        return Err(Error::Incompatible(
            "forecasts mix step and linear interpolation".into(),
        ));
    }
    Ok(interp)
}

/// Substitution for the CRPS applied to CDF values at every point of the merged grid.
///
/// Exact for step CDFs. For linear CDFs the substituted values are
/// interpolated linearly between merged grid points.
pub fn aggregate_crps_mixable(forecasts: &[GridDistribution1D], w: &WeightVector) -> Result<GridDistribution1D> {
    check_count(forecasts.len(), w)?;
    let (lo, hi) = forecasts[0].support_bounds();
    if forecasts.iter().any(|f| f.support_bounds() != (lo, hi)) {
        return Err(Error::Incompatible("forecasts live on different grid domains".into()));
    }
    let idx = active(w);
    let fs: Vec<&GridDistribution1D> = idx.iter().map(|&n| &forecasts[n]).collect();
    let ws: Vec<f64> = idx.iter().map(|&n| w.get(n)).collect();
    let interp = common_interpolation(&fs)?;
    let grid = merge_grids(fs.iter().map(|f| f.grid()));
    let mut values = vec![0.0; fs.len()];
    let mut cursors: Vec<_> = fs.iter().map(|f| f.cursor()).collect();
    let cdf: Vec<f64> = grid
        .iter()
        .map(|&x| {
            for (v, c) in values.iter_mut().zip(&mut cursors) {
                *v = c.eval(x).1;
            }
            square_substitution_raw(&values, &ws, 0.0, 1.0)
        })
        .collect();
    if let Some(i) = cdf.windows(2).position(|p| p[1] < p[0] - MONOTONICITY_TOLERANCE) {
        return Err(Error::Invariant(format!(
            "substituted CDF decreases at x = {}",
            grid[i + 1]
        )));
    }
    GridDistribution1D::validated(grid, cdf, interp, MONOTONICITY_TOLERANCE)
        .map_err(|e| Error::Invariant(format!("substituted CDF is invalid: {e}")))
}

/// The same substitution applied to multivariate CDF values on a shared tensor grid.
pub fn aggregate_multidim_crps_mixable(forecasts: &[GridCdfND], w: &WeightVector) -> Result<GridCdfND> {
    check_count(forecasts.len(), w)?;
    for f in &forecasts[1..] {
        forecasts[0].check_same_axes(f)?;
    }
    let idx = active(w);
    let ws: Vec<f64> = idx.iter().map(|&n| w.get(n)).collect();
    let mut values = vec![0.0; idx.len()];
    let out = (0..forecasts[0].values().len())
        .map(|k| {
            for (v, &n) in values.iter_mut().zip(&idx) {
                *v = forecasts[n].values()[k];
            }
            square_substitution_raw(&values, &ws, 0.0, 1.0)
        })
        .collect();
    Ok(forecasts[0].with_values(out))
}

/// Representations that support convex mixtures.
pub trait Mixture: Sized {
    /// `sum_n w_n forecast_n` in the representation's native coordinates.
    fn mixture(forecasts: &[Self], w: &WeightVector) -> Result<Self>;
}

/// Convex mixture of forecasts with weights `w`.
pub fn aggregate_mixture<T: Mixture + Clone>(forecasts: &[T], w: &WeightVector) -> Result<T> {
    check_count(forecasts.len(), w)?;
    if let [n] = active(w)[..] {
        return Ok(forecasts[n].clone());
    }
    T::mixture(forecasts, w)
}

impl Mixture for GridDistribution1D {
    fn mixture(forecasts: &[Self], w: &WeightVector) -> Result<Self> {
        let idx = active(w);
        let fs: Vec<&GridDistribution1D> = idx.iter().map(|&n| &forecasts[n]).collect();
        let interp = common_interpolation(&fs)?;
        let grid = merge_grids(fs.iter().map(|f| f.grid()));
        let mut cursors: Vec<_> = fs.iter().map(|f| f.cursor()).collect();
        let cdf = grid
            .iter()
            .map(|&x| cursors.iter_mut().zip(&idx).map(|(c, &n)| w.get(n) * c.eval(x).1).sum())
            .collect();
        GridDistribution1D::validated(grid, cdf, interp, 1e-9)
    }
}

impl Mixture for GridCdfND {
    fn mixture(forecasts: &[Self], w: &WeightVector) -> Result<Self> {
        for f in &forecasts[1..] {
            forecasts[0].check_same_axes(f)?;
        }
        let idx = active(w);
        let values = (0..forecasts[0].values().len())
            .map(|k| idx.iter().map(|&n| w.get(n) * forecasts[n].values()[k]).sum())
            .collect();
        GridCdfND::new(forecasts[0].axes().to_vec(), values)
    }
}

impl Mixture for DensityGrid {
    fn mixture(forecasts: &[Self], w: &WeightVector) -> Result<Self> {
        for f in &forecasts[1..] {
            forecasts[0].check_compatible(f)?;
        }
        let idx = active(w);
        let density = (0..forecasts[0].len())
            .map(|i| idx.iter().map(|&n| w.get(n) * forecasts[n].density()[i]).sum())
            .collect();
        forecasts[0].with_density(density)
    }
}

impl Mixture for ParticleDistributionND {
    fn mixture(forecasts: &[Self], w: &WeightVector) -> Result<Self> {
        let dim = forecasts[0].dim();
        if forecasts.iter().any(|f| f.dim() != dim) {
            return Err(Error::Incompatible("particle clouds of different dimensions".into()));
        }
        let idx = active(w);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &n in &idx {
            let wn = w.get(n);
            points.extend(forecasts[n].points().iter().cloned());
            weights.extend(forecasts[n].weights().iter().map(|p| wn * p));
        }
        let radius = idx
            .iter()
            .map(|&n| forecasts[n].radius())
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)));
        match radius {
            Some(r) => ParticleDistributionND::with_radius(points, weights, r),
            None => ParticleDistributionND::new(points, weights),
        }
    }
}

impl Mixture for QuantileGrid1D {
    fn mixture(forecasts: &[Self], w: &WeightVector) -> Result<Self> {
        let atoms = active(w)
            .into_iter()
            .flat_map(|n| {
                let wn = w.get(n);
                forecasts[n].atoms().map(move |(v, m)| (v, wn * m))
            })
            .collect();
        QuantileGrid1D::from_atoms(atoms)
    }
}

impl Mixture for Distribution {
    fn mixture(forecasts: &[Self], w: &WeightVector) -> Result<Self> {
        macro_rules! collect_as {
            ($variant:ident) => {
                forecasts
                    .iter()
                    .map(|f| match f {
                        Distribution::$variant(x) => Ok(x.clone()),
                        other => Err(Error::Incompatible(format!(
                            "cannot mix {} with {}",
                            forecasts[0].kind(),
                            other.kind()
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()
            };
        }
        Ok(match &forecasts[0] {
            Distribution::Grid(_) => Distribution::Grid(Mixture::mixture(&collect_as!(Grid)?, w)?),
            Distribution::Quantile(_) => Distribution::Quantile(Mixture::mixture(&collect_as!(Quantile)?, w)?),
            Distribution::GridNd(_) => Distribution::GridNd(Mixture::mixture(&collect_as!(GridNd)?, w)?),
            Distribution::Density(_) => Distribution::Density(Mixture::mixture(&collect_as!(Density)?, w)?),
            Distribution::Particles(_) | Distribution::Affine(_) => {
                let clouds = forecasts
                    .iter()
                    .map(|f| f.to_particles().map(|c| c.into_owned()))
                    .collect::<Result<Vec<_>>>()?;
                Distribution::Particles(Mixture::mixture(&clouds, w)?)
            }
        })
    }
}

/// Stratified resampling down to `cap` equally weighted particles (identity if already small enough).
pub fn resample_stratified(p: &ParticleDistributionND, cap: usize, seed: u64) -> Result<ParticleDistributionND> {
    if cap == 0 {
        return Err(Error::Configuration("particle cap must be positive".into()));
    }
    if p.len() <= cap {
        return Ok(p.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cum = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &w in p.weights() {
        acc += w;
        cum.push(acc);
    }
    let points: Vec<Vec<f64>> = (0..cap)
        .map(|k| {
            let u = (k as f64 + rng.random::<f64>()) / cap as f64 * acc;
            let i = cum.partition_point(|&c| c < u).min(p.len() - 1);
            p.points()[i].clone()
        })
        .collect();
    let w = vec![1.0 / cap as f64; cap];
    match p.radius() {
        Some(r) => ParticleDistributionND::with_radius(points, w, r),
        None => ParticleDistributionND::new(points, w),
    }
}

/// Substitution on `[0, M]` applied to density values, then projection back
/// onto densities bounded by `M` with unit total mass.
pub fn aggregate_beta2_mixable(forecasts: &[DensityGrid], w: &WeightVector, bound: f64) -> Result<DensityGrid> {
    check_count(forecasts.len(), w)?;
    let first = &forecasts[0];
    if first.base() == BaseMeasure::Discretized {
        return Err(Error::Unsupported(
            "the bounded projection is only available for finite base measures".into(),
        ));
    }
    for f in forecasts {
        first.check_compatible(f)?;
        crate::losses::density::check_bound(f, bound, "forecast")?;
    }
    let idx = active(w);
    let ws: Vec<f64> = idx.iter().map(|&n| w.get(n)).collect();
    let mut values = vec![0.0; idx.len()];
    let q: Vec<f64> = (0..first.len())
        .map(|i| {
            for (v, &n) in values.iter_mut().zip(&idx) {
                *v = forecasts[n].density()[i];
            }
            square_substitution_raw(&values, &ws, 0.0, bound)
        })
        .collect();
    let p = project_bounded_density(&q, first.mass(), bound)?;
    first.with_density(p)
}

/// Projection of `q` onto `{0 <= p <= bound, sum p mass = 1}` in the `mass`-weighted L2 norm.
///
/// The solution is `clip(q - tau, 0, bound)`; `tau` is bracketed by
/// bisection and then solved exactly on the set of unclipped coordinates.
pub fn project_bounded_density(q: &[f64], mass: &[f64], bound: f64) -> Result<Vec<f64>> {
    if q.len() != mass.len() || q.is_empty() {
        return Err(Error::Size("density and mass lengths differ".into()));
    }
    let total: f64 = mass.iter().sum();
    if bound * total < 1.0 - 1e-12 {
        return Err(Error::Domain(format!(
            "no density bounded by {bound} has unit mass over base mass {total}"
        )));
    }
    let excess = |tau: f64| -> f64 {
        q.iter()
            .zip(mass)
            .map(|(&qi, &m)| m * (qi - tau).clamp(0.0, bound))
            .sum::<f64>()
            - 1.0
    };
    let qmin = q.iter().copied().fold(f64::INFINITY, f64::min);
    let qmax = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (qmin - bound, qmax);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut tau = 0.5 * (lo + hi);
    let (mut free_mass, mut free_q, mut upper_mass) = (0.0, 0.0, 0.0);
    for (&qi, &m) in q.iter().zip(mass) {
        let v = qi - tau;
        if v >= bound {
            upper_mass += m;
        } else if v > 0.0 {
            free_mass += m;
            free_q += m * qi;
        }
    }
    if free_mass > 0.0 {
        let exact = (free_q + bound * upper_mass - 1.0) / free_mass;
        if excess(exact).abs() <= excess(tau).abs() {
            tau = exact;
        }
    }
    Ok(q.iter().map(|&qi| (qi - tau).clamp(0.0, bound)).collect())
}

/// Levelwise substituted quantile table.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileAggregate {
    levels: Vec<f64>,
    values: Vec<f64>,
}

impl QuantileAggregate {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest decrease between consecutive cells (zero for a valid quantile function).
    pub fn max_decrease(&self) -> f64 {
        self.values.windows(2).map(|p| p[0] - p[1]).fold(0.0, f64::max)
    }

    pub fn is_monotone(&self) -> bool {
        self.max_decrease() == 0.0
    }

    /// The table itself when it is nondecreasing.
    pub fn as_quantile_grid(&self) -> Option<QuantileGrid1D> {
        self.is_monotone()
            .then(|| QuantileGrid1D::from_sorted_parts(self.levels.clone(), self.values.clone()))
    }

    /// Law of `Q(t)` for `t ~ Uniform[0, 1]`, always a valid distribution.
    pub fn pushforward(&self) -> QuantileGrid1D {
        let mut prev = 0.0;
        let atoms = self
            .levels
            .iter()
            .zip(&self.values)
            .map(|(&l, &v)| {
                let m = l - prev;
                prev = l;
                (v, m)
            })
            .collect();
        QuantileGrid1D::from_atoms(atoms).expect("levels partition the unit interval")
    }

    /// `Q(t)` at one uniform level.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let t: f64 = rng.random();
        let k = self.levels.partition_point(|&l| l < t).min(self.levels.len() - 1);
        self.values[k]
    }

    /// `n` samples from a seeded stream.
    pub fn sample_n(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }
}

/// `Q(t) = Sigma_c({Q_n(t)}, w)` on the merged level set of the input tables.
pub fn aggregate_quantiles_mixable<C: MixableCost + ?Sized>(
    forecasts: &[QuantileGrid1D],
    w: &WeightVector,
    cost: &C,
) -> Result<QuantileAggregate> {
    check_count(forecasts.len(), w)?;
    let iv = cost.domain();
    for q in forecasts {
        let (lo, hi) = (q.values()[0], *q.values().last().unwrap());
        if lo < iv.l() || hi > iv.r() {
            return Err(Error::Domain(format!(
                "quantiles [{lo}, {hi}] leave [{}, {}]",
                iv.l(),
                iv.r()
            )));
        }
    }
    let idx = active(w);
    let ws: Vec<f64> = idx.iter().map(|&n| w.get(n)).collect();
    let levels = merge_levels(idx.iter().map(|&n| &forecasts[n]));
    let mut vals = vec![0.0; idx.len()];
    let values = levels
        .iter()
        .map(|&t| {
            for (v, &n) in vals.iter_mut().zip(&idx) {
                *v = forecasts[n].quantile_at(t);
            }
            cost.substitute(&vals, &ws)
        })
        .collect();
    Ok(QuantileAggregate { levels, values })
}

/// Quantile aggregation for one-dimensional transport; linear CDFs use `quantile_nodes` cells.
pub fn aggregate_ot1d_quantile<C: MixableCost + ?Sized>(
    forecasts: &[GridDistribution1D],
    w: &WeightVector,
    cost: &C,
    quantile_nodes: usize,
) -> Result<QuantileAggregate> {
    let qs: Vec<QuantileGrid1D> = forecasts.iter().map(|f| f.quantile_grid(quantile_nodes)).collect();
    aggregate_quantiles_mixable(&qs, w, cost)
}

/// `Q(t) = sum_n w_n Q_n(t)` on the merged level set.
pub fn aggregate_w2_quantiles(forecasts: &[QuantileGrid1D], w: &WeightVector) -> Result<QuantileGrid1D> {
    check_count(forecasts.len(), w)?;
    let idx = active(w);
    if idx.len() == 1 {
        return Ok(forecasts[idx[0]].clone());
    }
    let levels = merge_levels(idx.iter().map(|&n| &forecasts[n]));
    let mut values: Vec<f64> = levels
        .iter()
        .map(|&t| idx.iter().map(|&n| w.get(n) * forecasts[n].quantile_at(t)).sum())
        .collect();
    for k in 1..values.len() {
        values[k] = values[k].max(values[k - 1]);
    }
    QuantileGrid1D::new(levels, values)
}

/// Wasserstein-2 barycenter of one-dimensional distributions, as a step CDF.
pub fn aggregate_w2_barycenter(forecasts: &[GridDistribution1D], w: &WeightVector) -> Result<GridDistribution1D> {
    check_count(forecasts.len(), w)?;
    let idx = active(w);
    if idx.len() == 1 || idx.iter().all(|&n| forecasts[n] == forecasts[idx[0]]) {
        return Ok(forecasts[idx[0]].clone());
    }
    let qs: Vec<QuantileGrid1D> = forecasts
        .iter()
        .map(|f| f.quantile_grid(DEFAULT_QUANTILE_NODES))
        .collect();
    let lo = idx
        .iter()
        .map(|&n| forecasts[n].support_bounds().0)
        .fold(f64::INFINITY, f64::min);
    let hi = idx
        .iter()
        .map(|&n| forecasts[n].support_bounds().1)
        .fold(f64::NEG_INFINITY, f64::max);
    aggregate_w2_quantiles(&qs, w)?.to_grid_distribution(BoundedInterval::new(lo, hi)?)
}

/// Barycenter of copies `x -> (x - u_n) / s_n` of one reference:
/// `s = (sum w_n / s_n)^{-1}`, `u = s sum w_n u_n / s_n`.
pub fn aggregate_sw2_barycenter(scales: &[f64], shifts: &[Vec<f64>], w: &WeightVector) -> Result<(f64, Vec<f64>)> {
    check_count(scales.len(), w)?;
    if shifts.len() != scales.len() {
        return Err(Error::Size(format!(
            "{} scales for {} shifts",
            scales.len(),
            shifts.len()
        )));
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::Domain(format!("scale {s} must be positive")));
    }
    let dim = shifts[0].len();
    if shifts.iter().any(|u| u.len() != dim) {
        return Err(Error::Incompatible("shifts of different dimensions".into()));
    }
    let idx = active(w);
    if idx.len() == 1 {
        return Ok((scales[idx[0]], shifts[idx[0]].clone()));
    }
    let inv: f64 = idx.iter().map(|&n| w.get(n) / scales[n]).sum();
    let s = 1.0 / inv;
    let u = (0..dim)
        .map(|d| s * idx.iter().map(|&n| w.get(n) * shifts[n][d] / scales[n]).sum::<f64>())
        .collect();
    Ok((s, u))
}

/// [`aggregate_sw2_barycenter`] for affine copies sharing a reference cloud.
pub fn aggregate_affine(forecasts: &[AffineCopy], w: &WeightVector) -> Result<AffineCopy> {
    check_count(forecasts.len(), w)?;
    let reference = forecasts[0].reference();
    if forecasts.iter().any(|f| f.reference() != reference) {
        return Err(Error::Incompatible(
            "affine forecasts must share one reference cloud".into(),
        ));
    }
    let scales: Vec<f64> = forecasts.iter().map(AffineCopy::scale).collect();
    let shifts: Vec<Vec<f64>> = forecasts.iter().map(|f| f.shift().to_vec()).collect();
    let (s, u) = aggregate_sw2_barycenter(&scales, &shifts, w)?;
    AffineCopy::new(reference.clone(), s, u)
}

impl PreparedLoss {
    /// The learner's forecast for `mode`: the loss's substitution or mixture rule.
    pub fn aggregate(&self, mode: Mode, forecasts: &[Distribution], w: &WeightVector) -> Result<Distribution> {
        self.eta(mode)?;
        check_count(forecasts.len(), w)?;
        match (self.spec(), mode) {
            (LossSpec::Crps { domain }, Mode::Mixable) => {
                let grids = forecasts
                    .iter()
                    .map(|f| as_grid_1d(f, *domain).map(|g| g.into_owned()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(aggregate_crps_mixable(&grids, w)?.into())
            }
            (LossSpec::Crps { domain }, Mode::Expconcave) => {
                let grids = forecasts
                    .iter()
                    .map(|f| as_grid_1d(f, *domain).map(|g| g.into_owned()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(aggregate_mixture(&grids, w)?.into())
            }
            (LossSpec::MultidimCrps { .. }, Mode::Mixable) => {
                let grids = forecasts
                    .iter()
                    .map(|f| f.as_grid_nd().cloned())
                    .collect::<Result<Vec<_>>>()?;
                Ok(aggregate_multidim_crps_mixable(&grids, w)?.into())
            }
            (LossSpec::Beta2 { bound, .. }, Mode::Mixable) => {
                let ds = forecasts
                    .iter()
                    .map(|f| f.as_density().cloned())
                    .collect::<Result<Vec<_>>>()?;
                Ok(aggregate_beta2_mixable(&ds, w, *bound)?.into())
            }
            (LossSpec::Ot1d { domain, quantile_nodes }, _) => {
                let qs = forecasts
                    .iter()
                    .map(|f| as_quantiles(f, *quantile_nodes).map(|q| q.into_owned()))
                    .collect::<Result<Vec<_>>>()?;
                match mode {
                    Mode::Mixable => Ok(aggregate_quantiles_mixable(&qs, w, &SquaredCost::new(*domain))?
                        .pushforward()
                        .into()),
                    Mode::Expconcave => Ok(aggregate_w2_quantiles(&qs, w)?.into()),
                }
            }
            (LossSpec::Sw2 { .. }, _) => {
                let fs = forecasts
                    .iter()
                    .map(|f| f.as_affine().cloned())
                    .collect::<Result<Vec<_>>>()?;
                Ok(aggregate_affine(&fs, w)?.into())
            }
            _ => aggregate_mixture(forecasts, w),
        }
    }
}
