//! Seeded synthetic games: a latent truth per round, an outcome drawn from
//! it and a pool of experts forecasting around it.
//!
//! Round `t` (0-based) is generated from `derive_seed(seed, t)` alone, so
//! rounds can be produced lazily and in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::aa::{aa_try_run, GameConfig};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::math::derive_seed;
use crate::pointwise::BoundedInterval;
use crate::sampling::random_point_in_ball;
use crate::types::{
    canonical_grid, AffineCopy, BaseMeasure, DensityGrid, Distribution, GameTrace, GridCdfND, GridDistribution1D,
    Interpolation, ParticleDistributionND, QuantileGrid1D,
};

/// Dimension used for MMD games, whose loss carries no dimension of its own.
pub const DEFAULT_MMD_DIM: usize = 2;
/// Quantile levels per parametric OT1D forecast.
pub const QUANTILE_LEVELS: usize = 256;

const REFERENCE_STREAM: u64 = 0x7265_6665;
const OUTCOME_STREAM: u64 = 0;

/// How expert forecasts relate to the latent truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Truncated-Gaussian forecasts; expert `n` is offset by about `bias_scale * n / 2`,
    /// alternating in sign, so expert 0 is centred on the truth.
    BiasedGaussian,
    /// Empirical forecasts of `samples` private draws around the same offsets.
    ShiftedEmpirical,
    /// Even experts are exact before `switch_round` and off by `gap` afterwards; odd experts the reverse.
    AdversarialPair,
}

/// Expert pool parameters. Offsets and spreads are fractions of the domain
/// width (intervals, boxes) or radius (balls). On finite outcome spaces an
/// offset `b` becomes Gaussian logit noise of scale `4 b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub generator: Generator,
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default = "default_bias_scale")]
    pub bias_scale: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_gap")]
    pub gap: f64,
    /// 0-based round at which the adversarial pair swaps; `horizon / 2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_round: Option<usize>,
    #[serde(default = "default_classes")]
    pub classes: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_axis_points")]
    pub axis_points: usize,
}

fn default_spread() -> f64 {
    0.1
}
fn default_bias_scale() -> f64 {
    0.05
}
fn default_samples() -> usize {
    32
}
fn default_gap() -> f64 {
    0.3
}
fn default_classes() -> usize {
    5
}
fn default_grid_points() -> usize {
    1024
}
fn default_axis_points() -> usize {
    16
}

impl PoolSpec {
    pub fn new(generator: Generator) -> Self {
        Self {
            generator,
            spread: default_spread(),
            bias_scale: default_bias_scale(),
            samples: default_samples(),
            gap: default_gap(),
            switch_round: None,
            classes: default_classes(),
            grid_points: default_grid_points(),
            axis_points: default_axis_points(),
        }
    }

    /// Checks every parameter against its documented range.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        let range = |v: f64, lo: f64, hi: f64, what: &str, open_lo: bool| {
            let ok = v.is_finite() && v <= hi && if open_lo { v > lo } else { v >= lo };
            if ok {
                Ok(())
            } else {
                Err(Error::Configuration(format!(
                    "{what} = {v} outside {}{lo}, {hi}]",
                    if open_lo { "(" } else { "[" }
                )))
            }
        };
        range(self.spread, 0.0, 1.0, "spread", true)?;
        range(self.bias_scale, 0.0, 1.0, "bias_scale", false)?;
        range(self.gap, 0.0, 1.0, "gap", false)?;
        let count = |v: usize, lo: usize, hi: usize, what: &str| {
            if (lo..=hi).contains(&v) {
                Ok(())
            } else {
                Err(Error::Configuration(format!("{what} = {v} outside [{lo}, {hi}]")))
            }
        };
        count(self.samples, 1, 4096, "samples")?;
        count(self.classes, 2, 1024, "classes")?;
        count(self.grid_points, 2, 65_536, "grid_points")?;
        count(self.axis_points, 2, 64, "axis_points")?;
        if let Some(s) = self.switch_round {
            if s > horizon {
                return Err(Error::Configuration(format!(
                    "switch_round = {s} exceeds the horizon {horizon}"
                )));
            }
        }
        Ok(())
    }

    /// Offset of expert `n` at round `t`, as a fraction of the domain scale.
    fn offset(&self, horizon: usize, t: usize, n: usize) -> f64 {
        match self.generator {
            Generator::BiasedGaussian | Generator::ShiftedEmpirical => {
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                sign * self.bias_scale * n.div_ceil(2) as f64
            }
            Generator::AdversarialPair => {
                let late = t >= self.switch_round.unwrap_or(horizon / 2);
                if n.is_multiple_of(2) != late {
                    0.0
                } else {
                    self.gap
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Geometry {
    Interval { domain: BoundedInterval, quantiles: bool },
    Cube(Vec<BoundedInterval>),
    Ball { dim: usize, radius: f64, affine: bool },
    Classes { mass: Option<(f64, f64)> },
}

/// Synthetic expert pool and outcome stream for one game.
#[derive(Debug, Clone)]
pub struct Scenario {
    pool: PoolSpec,
    geometry: Geometry,
    n_experts: usize,
    horizon: usize,
    seed: u64,
    reference: Option<ParticleDistributionND>,
}

struct Latent {
    rng: ChaCha8Rng,
    round_seed: u64,
}

impl Scenario {
    pub fn new(config: &GameConfig, pool: PoolSpec) -> Result<Self> {
        config.validate()?;
        pool.validate(config.horizon)?;
        let geometry = match &config.loss {
            LossSpec::Crps { domain } => Geometry::Interval {
                domain: *domain,
                quantiles: false,
            },
            LossSpec::Ot1d { domain, .. } => Geometry::Interval {
                domain: *domain,
                quantiles: true,
            },
            LossSpec::MultidimCrps { domain } => Geometry::Cube(domain.clone()),
            LossSpec::Scrps { radius, dim, .. } | LossSpec::Energy { radius, dim } => Geometry::Ball {
                dim: *dim,
                radius: *radius,
                affine: false,
            },
            LossSpec::Sw2 { radius, dim, .. } => Geometry::Ball {
                dim: *dim,
                radius: *radius,
                affine: true,
            },
            LossSpec::Cfd { dim, .. } => Geometry::Ball {
                dim: *dim,
                radius: 1.0,
                affine: false,
            },
            LossSpec::Mmd { .. } => Geometry::Ball {
                dim: DEFAULT_MMD_DIM,
                radius: 1.0,
                affine: false,
            },
            LossSpec::Kl => Geometry::Classes { mass: None },
            LossSpec::Beta2 { bound, base_mass } => Geometry::Classes {
                mass: Some((*bound, *base_mass)),
            },
        };
        let reference = match &geometry {
            Geometry::Ball {
                dim,
                radius,
                affine: true,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, REFERENCE_STREAM));
                let points = (0..pool.samples)
                    .map(|_| {
                        let z = normal_vec(&mut rng, *dim, pool.spread * radius);
                        clip_to_ball(z, radius / 2.0)
                    })
                    .collect();
                Some(ParticleDistributionND::equal_weights(points)?)
            }
            _ => None,
        };
        Ok(Self {
            pool,
            geometry,
            n_experts: config.n_experts,
            horizon: config.horizon,
            seed: config.seed,
            reference,
        })
    }

    pub fn n_experts(&self) -> usize {
        self.n_experts
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn latent(&self, t: usize) -> Latent {
        let round_seed = derive_seed(self.seed, t as u64);
        Latent {
            rng: ChaCha8Rng::seed_from_u64(round_seed),
            round_seed,
        }
    }

    /// Expert forecasts for round `t` (0-based).
    pub fn experts_at(&self, t: usize) -> Result<Vec<Distribution>> {
        let mut latent = self.latent(t);
        match &self.geometry {
            Geometry::Interval { domain, quantiles } => {
                let mu = domain.l() + domain.width() * latent.rng.random_range(0.25..0.75);
                let sigma = self.pool.spread * domain.width();
                (0..self.n_experts)
                    .map(|n| {
                        let c = mu + self.offset(t, n) * domain.width();
                        let g = if self.empirical() {
                            let xs = self
                                .private_draws(&latent, n, |r| (c + sigma * gauss(r)).clamp(domain.l(), domain.r()));
                            if *quantiles {
                                return Ok(QuantileGrid1D::from_atoms(
                                    xs.iter().map(|&x| (x, 1.0 / xs.len() as f64)).collect(),
                                )?
                                .into());
                            }
                            GridDistribution1D::empirical(&xs, *domain)?
                        } else {
                            truncated_gaussian(*domain, self.pool.grid_points, c, sigma)?
                        };
                        Ok(if *quantiles {
                            g.quantile_grid(QUANTILE_LEVELS).into()
                        } else {
                            g.into()
                        })
                    })
                    .collect()
            }
            Geometry::Cube(domain) => {
                let mu: Vec<f64> = domain
                    .iter()
                    .map(|iv| iv.l() + iv.width() * latent.rng.random_range(0.25..0.75))
                    .collect();
                let axes: Vec<Vec<f64>> = domain
                    .iter()
                    .map(|iv| canonical_grid(*iv, self.pool.axis_points))
                    .collect();
                (0..self.n_experts)
                    .map(|n| {
                        let off = self.offset(t, n);
                        let centre: Vec<f64> = domain.iter().zip(&mu).map(|(iv, m)| m + off * iv.width()).collect();
                        if self.empirical() {
                            let points = self.private_draws(&latent, n, |r| {
                                domain
                                    .iter()
                                    .zip(&centre)
                                    .map(|(iv, c)| {
                                        let s = self.pool.spread * iv.width();
                                        (c + s * gauss(r)).clamp(iv.l(), iv.r())
                                    })
                                    .collect::<Vec<f64>>()
                            });
                            Ok(GridCdfND::from_particles(
                                &ParticleDistributionND::equal_weights(points)?,
                                axes.clone(),
                            )?
                            .into())
                        } else {
                            let marginals = domain
                                .iter()
                                .zip(&centre)
                                .zip(&axes)
                                .map(|((iv, c), axis)| {
                                    truncated_gaussian_on(axis, *iv, *c, self.pool.spread * iv.width())
                                })
                                .collect::<Result<Vec<_>>>()?;
                            Ok(GridCdfND::product(&marginals)?.into())
                        }
                    })
                    .collect()
            }
            Geometry::Ball { dim, radius, affine } => {
                let mu = random_point_in_ball(&mut latent.rng, *dim, radius / 4.0);
                let sigma = self.pool.spread * radius;
                let common: Vec<Vec<f64>> = (0..self.pool.samples)
                    .map(|_| normal_vec(&mut latent.rng, *dim, sigma))
                    .collect();
                (0..self.n_experts)
                    .map(|n| {
                        let mut c = mu.clone();
                        c[0] += self.offset(t, n) * radius;
                        if *affine {
                            let c = clip_to_ball(c, radius / 2.0);
                            let reference = self.reference.clone().expect("affine games carry a reference");
                            return Ok(AffineCopy::new(reference, 1.0, c.iter().map(|v| -v).collect())?.into());
                        }
                        let noise = if self.empirical() {
                            self.private_draws(&latent, n, |r| normal_vec(r, *dim, sigma))
                        } else {
                            common.clone()
                        };
                        let points = noise
                            .into_iter()
                            .map(|z| clip_to_ball(z.iter().zip(&c).map(|(a, b)| a + b).collect(), *radius))
                            .collect();
                        let k = self.pool.samples;
                        Ok(ParticleDistributionND::with_radius(points, vec![1.0 / k as f64; k], *radius)?.into())
                    })
                    .collect()
            }
            Geometry::Classes { mass } => {
                let k = self.pool.classes;
                let logits = normal_vec(&mut latent.rng, k, 2.0);
                (0..self.n_experts)
                    .map(|n| {
                        let scale = 4.0 * self.offset(t, n).abs();
                        let noise = self.private_draws(&latent, n, |r| normal_vec(r, k, scale)).remove(0);
                        let p = softmax(&logits.iter().zip(&noise).map(|(a, b)| a + b).collect::<Vec<_>>());
                        class_density(p, *mass)
                    })
                    .collect()
            }
        }
    }

    /// Outcome for round `t` (0-based), drawn from the latent truth.
    pub fn outcome_at(&self, t: usize) -> Result<Distribution> {
        let mut latent = self.latent(t);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(latent.round_seed, OUTCOME_STREAM));
        match &self.geometry {
            Geometry::Interval { domain, quantiles } => {
                let mu = domain.l() + domain.width() * latent.rng.random_range(0.25..0.75);
                let sigma = self.pool.spread * domain.width();
                let x = sample_truncated(&mut rng, mu, sigma, *domain);
                Ok(if *quantiles {
                    QuantileGrid1D::from_atoms(vec![(x, 1.0)])?.into()
                } else {
                    GridDistribution1D::point_mass(x, *domain)?.into()
                })
            }
            Geometry::Cube(domain) => {
                let marginals = domain
                    .iter()
                    .map(|iv| {
                        let mu = iv.l() + iv.width() * latent.rng.random_range(0.25..0.75);
                        let x = sample_truncated(&mut rng, mu, self.pool.spread * iv.width(), *iv);
                        let axis = canonical_grid(*iv, self.pool.axis_points);
                        let node = axis[nearest(&axis, x)];
                        GridDistribution1D::dirac_on_grid(node, axis)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(GridCdfND::product(&marginals)?.into())
            }
            Geometry::Ball { dim, radius, .. } => {
                let mu = random_point_in_ball(&mut latent.rng, *dim, radius / 4.0);
                let z = normal_vec(&mut rng, *dim, self.pool.spread * radius);
                let x = clip_to_ball(z.iter().zip(&mu).map(|(a, b)| a + b).collect(), *radius);
                Ok(ParticleDistributionND::with_radius(vec![x], vec![1.0], *radius)?.into())
            }
            Geometry::Classes { mass } => {
                let k = self.pool.classes;
                let p = softmax(&normal_vec(&mut latent.rng, k, 2.0));
                match mass {
                    None => {
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        let idx = p
                            .iter()
                            .position(|pi| {
                                acc += pi;
                                u < acc
                            })
                            .unwrap_or(k - 1);
                        let mut one_hot = vec![0.0; k];
                        one_hot[idx] = 1.0;
                        Ok(DensityGrid::probability_vector(one_hot)?.into())
                    }
                    Some(_) => class_density(p, *mass),
                }
            }
        }
    }

    /// Lazy stream of expert forecasts for rounds `0..horizon`.
    pub fn experts(&self) -> impl Iterator<Item = Result<Vec<Distribution>>> + '_ {
        (0..self.horizon).map(|t| self.experts_at(t))
    }

    /// Lazy stream of outcomes for rounds `0..horizon`.
    pub fn outcomes(&self) -> impl Iterator<Item = Result<Distribution>> + '_ {
        (0..self.horizon).map(|t| self.outcome_at(t))
    }

    fn empirical(&self) -> bool {
        self.pool.generator == Generator::ShiftedEmpirical
    }

    fn offset(&self, t: usize, n: usize) -> f64 {
        self.pool.offset(self.horizon, t, n)
    }

    fn private_draws<T>(&self, latent: &Latent, n: usize, mut draw: impl FnMut(&mut ChaCha8Rng) -> T) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(latent.round_seed, n as u64 + 1));
        (0..self.pool.samples).map(|_| draw(&mut rng)).collect()
    }
}

/// Plays a synthetic game with the given pool.
pub fn run_synthetic(config: &GameConfig, pool: PoolSpec) -> Result<GameTrace> {
    let scenario = Scenario::new(config, pool)?;
    aa_try_run(config, scenario.experts(), scenario.outcomes())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Step CDF of `N(c, sigma^2)` truncated to `domain`, on `points` equally spaced nodes.
fn truncated_gaussian(domain: BoundedInterval, points: usize, c: f64, sigma: f64) -> Result<GridDistribution1D> {
    truncated_gaussian_on(&canonical_grid(domain, points), domain, c, sigma)
}

fn truncated_gaussian_on(grid: &[f64], domain: BoundedInterval, c: f64, sigma: f64) -> Result<GridDistribution1D> {
    let lo = normal_cdf((domain.l() - c) / sigma);
    let hi = normal_cdf((domain.r() - c) / sigma);
    let z = hi - lo;
    let mut cdf: Vec<f64> = if z > 1e-300 {
        grid.iter()
            .map(|&x| ((normal_cdf((x - c) / sigma) - lo) / z).clamp(0.0, 1.0))
            .collect()
    } else {
        let edge = if c <= domain.l() { domain.l() } else { domain.r() };
        grid.iter().map(|&x| if x >= edge { 1.0 } else { 0.0 }).collect()
    };
    for k in 1..cdf.len() {
        cdf[k] = cdf[k].max(cdf[k - 1]);
    }
    *cdf.last_mut().expect("nonempty grid") = 1.0;
    GridDistribution1D::with_interpolation(grid.to_vec(), cdf, Interpolation::Step)
}

fn sample_truncated(rng: &mut ChaCha8Rng, mu: f64, sigma: f64, domain: BoundedInterval) -> f64 {
    for _ in 0..64 {
        let x = mu + sigma * gauss(rng);
        if domain.contains(x) {
            return x;
        }
    }
    mu.clamp(domain.l(), domain.r())
}

fn nearest(axis: &[f64], x: f64) -> usize {
    let k = axis.partition_point(|&a| a < x);
    if k == 0 {
        0
    } else if k == axis.len() || x - axis[k - 1] <= axis[k] - x {
        k - 1
    } else {
        k
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * gauss(rng)).collect()
}

fn clip_to_ball(x: Vec<f64>, radius: f64) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n <= radius {
        x
    } else {
        x.into_iter().map(|v| v * radius / n).collect()
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Probability vector as a density: against the counting measure, or
/// against equal cells of total `base` blended with uniform to respect `bound`.
fn class_density(p: Vec<f64>, mass: Option<(f64, f64)>) -> Result<Distribution> {
    let Some((bound, base)) = mass else {
        return Ok(DensityGrid::probability_vector(p)?.into());
    };
    let k = p.len();
    let cell = base / k as f64;
    let flat = 1.0 / base;
    let raw: Vec<f64> = p.iter().map(|pi| pi / cell).collect();
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let alpha = if peak <= bound {
        1.0
    } else {
        ((bound - flat) / (peak - flat)).clamp(0.0, 1.0)
    };
    let density = raw.iter().map(|r| alpha * r + (1.0 - alpha) * flat).collect();
    Ok(DensityGrid::new(
        (0..k).map(|i| i as f64).collect(),
        vec![cell; k],
        density,
        BaseMeasure::Finite,
    )?
    .into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aa::verify_regret_chain;
    use crate::losses::{Kernel, Mode};

    fn config(loss: LossSpec, mode: Mode, n: usize, horizon: usize) -> GameConfig {
        GameConfig {
            loss,
            mode,
            n_experts: n,
            horizon,
            seed: 11,
            prior: None,
        }
    }

    fn unit_crps() -> LossSpec {
        LossSpec::Crps {
            domain: BoundedInterval::unit(),
        }
    }

    #[test]
    fn rounds_are_reproducible_and_lazy() {
        let s = Scenario::new(
            &config(unit_crps(), Mode::Mixable, 4, 50),
            PoolSpec::new(Generator::BiasedGaussian),
        )
        .unwrap();
        assert_eq!(s.experts_at(17).unwrap(), s.experts_at(17).unwrap());
        assert_eq!(s.outcome_at(3).unwrap(), s.outcome_at(3).unwrap());
        assert_ne!(s.outcome_at(3).unwrap(), s.outcome_at(4).unwrap());
        let streamed: Vec<_> = s.experts().take(3).map(Result::unwrap).collect();
        assert_eq!(streamed[2], s.experts_at(2).unwrap());
    }

    #[test]
    fn expert_zero_is_unbiased() {
        let pool = PoolSpec::new(Generator::BiasedGaussian);
        assert_eq!(pool.offset(100, 5, 0), 0.0);
        assert!(pool.offset(100, 5, 1) > 0.0 && pool.offset(100, 5, 2) < 0.0);
        let adv = PoolSpec::new(Generator::AdversarialPair);
        assert_eq!((adv.offset(100, 10, 0), adv.offset(100, 10, 1)), (0.0, 0.3));
        assert_eq!((adv.offset(100, 60, 0), adv.offset(100, 60, 1)), (0.3, 0.0));
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        let mut p = PoolSpec::new(Generator::BiasedGaussian);
        p.spread = 0.0;
        assert!(p.validate(10).is_err());
        let mut p = PoolSpec::new(Generator::AdversarialPair);
        p.switch_round = Some(11);
        assert!(p.validate(10).is_err());
        let json = r#"{"generator": "biased-gaussian", "sprd": 0.1}"#;
        assert!(serde_json::from_str::<PoolSpec>(json).is_err());
        let json = r#"{"generator": "adversarial-pair", "gap": 0.5}"#;
        assert_eq!(serde_json::from_str::<PoolSpec>(json).unwrap().gap, 0.5);
    }

    #[test]
    fn every_loss_plays_a_short_game() {
        let unit = BoundedInterval::unit();
        let games = [
            (unit_crps(), Mode::Mixable),
            (unit_crps(), Mode::Expconcave),
            (
                LossSpec::MultidimCrps {
                    domain: vec![unit, unit],
                },
                Mode::Mixable,
            ),
            (
                LossSpec::Scrps {
                    radius: 1.0,
                    dim: 2,
                    directions: 32,
                },
                Mode::Expconcave,
            ),
            (LossSpec::Energy { radius: 1.0, dim: 3 }, Mode::Expconcave),
            (LossSpec::Kl, Mode::Mixable),
            (
                LossSpec::Beta2 {
                    bound: 3.0,
                    base_mass: 1.0,
                },
                Mode::Mixable,
            ),
            (
                LossSpec::Cfd {
                    dim: 2,
                    frequencies: 32,
                    scale: 1.0,
                    weighting: None,
                },
                Mode::Expconcave,
            ),
            (
                LossSpec::Mmd {
                    kernel: Kernel::gaussian(0.5),
                },
                Mode::Expconcave,
            ),
            (
                LossSpec::Ot1d {
                    domain: unit,
                    quantile_nodes: 512,
                },
                Mode::Mixable,
            ),
            (
                LossSpec::Ot1d {
                    domain: unit,
                    quantile_nodes: 512,
                },
                Mode::Expconcave,
            ),
            (
                LossSpec::Sw2 {
                    radius: 1.0,
                    dim: 2,
                    directions: 32,
                },
                Mode::Expconcave,
            ),
        ];
        for generator in [
            Generator::BiasedGaussian,
            Generator::ShiftedEmpirical,
            Generator::AdversarialPair,
        ] {
            for (loss, mode) in &games {
                let mut pool = PoolSpec::new(generator);
                pool.grid_points = 64;
                pool.samples = 8;
                let cfg = config(loss.clone(), *mode, 3, 6);
                let trace = run_synthetic(&cfg, pool).unwrap_or_else(|e| panic!("{} {mode:?}: {e}", loss.name()));
                let report = verify_regret_chain(&trace, trace.eta).unwrap();
                assert!(
                    report.pass,
                    "{} {mode:?} {generator:?}: {:?}",
                    loss.name(),
                    report.failures
                );
            }
        }
    }

    #[test]
    fn log_loss_outcomes_are_one_hot() {
        let s = Scenario::new(
            &config(LossSpec::Kl, Mode::Mixable, 2, 5),
            PoolSpec::new(Generator::BiasedGaussian),
        )
        .unwrap();
        let o = s.outcome_at(0).unwrap();
        let d = o.as_density().unwrap();
        assert_eq!(d.density().iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(d.density().iter().sum::<f64>(), 1.0);
    }
}
