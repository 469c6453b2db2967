//! The probabilistic losses, their rates and a prepared evaluator for games.

pub mod crps;
pub mod density;
pub mod sliced;
pub mod spectral;
pub mod transport;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

pub use crps::{crps, multidim_crps};
pub use density::{beta2_divergence, kl_divergence};
pub use sliced::{
    energy_distance, energy_scrps_constant, scrps, scrps_estimate, scrps_slices, sphere_surface_area, sw2_estimate,
    sw2_slices, sw2_squared, McEstimate, SphereDirections,
};
pub use spectral::{cfd, cfd_terms, mmd_squared, IntegralWeighting, Kernel};
pub use transport::{
    check_cross_derivative, ot1d_cost, quantile_cost, FnCost, MixableCost, SquaredCost, TransportCost,
    CROSS_DERIVATIVE_PROBE, DEFAULT_QUANTILE_NODES,
};

use crate::error::{Error, Result};
use crate::math::derive_seed;
use crate::pointwise::{BoundedInterval, EtaRate};
use crate::types::{Distribution, GridDistribution1D, ParticleDistributionND, QuantileGrid1D};

/// Default number of frozen directions or frequencies for Monte Carlo losses.
pub const DEFAULT_MC_NODES: usize = 256;

fn default_mc_nodes() -> usize {
    DEFAULT_MC_NODES
}

fn default_quantile_nodes() -> usize {
    DEFAULT_QUANTILE_NODES
}

fn default_scale() -> f64 {
    1.0
}

/// Which rate and aggregation rule a game uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mixable,
    #[serde(alias = "exp-concave", alias = "exp_concave")]
    Expconcave,
}

/// A loss together with its domain parameters.
///
/// JSON form: `{"kind": "CRPS", "domain": [0, 1]}`, `{"kind": "SCRPS", "radius": 1, "dim": 2}`, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LossSpec {
    Crps {
        domain: BoundedInterval,
    },
    MultidimCrps {
        domain: Vec<BoundedInterval>,
    },
    Scrps {
        radius: f64,
        dim: usize,
        #[serde(default = "default_mc_nodes")]
        directions: usize,
    },
    Energy {
        radius: f64,
        dim: usize,
    },
    Kl,
    #[serde(rename = "BETA2")]
    Beta2 {
        bound: f64,
        base_mass: f64,
    },
    Cfd {
        dim: usize,
        #[serde(default = "default_mc_nodes")]
        frequencies: usize,
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weighting: Option<IntegralWeighting>,
    },
    Mmd {
        kernel: Kernel,
    },
    #[serde(rename = "OT1D")]
    Ot1d {
        domain: BoundedInterval,
        #[serde(default = "default_quantile_nodes")]
        quantile_nodes: usize,
    },
    #[serde(rename = "SW2")]
    Sw2 {
        radius: f64,
        dim: usize,
        #[serde(default = "default_mc_nodes")]
        directions: usize,
    },
}

impl LossSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LossSpec::Crps { .. } => "CRPS",
            LossSpec::MultidimCrps { .. } => "MULTIDIM_CRPS",
            LossSpec::Scrps { .. } => "SCRPS",
            LossSpec::Energy { .. } => "ENERGY",
            LossSpec::Kl => "KL",
            LossSpec::Beta2 { .. } => "BETA2",
            LossSpec::Cfd { .. } => "CFD",
            LossSpec::Mmd { .. } => "MMD",
            LossSpec::Ot1d { .. } => "OT1D",
            LossSpec::Sw2 { .. } => "SW2",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Configuration(format!("{what} must be positive, got {v}")))
            }
        };
        let count = |v: usize, what: &str| {
            if v > 0 {
                Ok(())
            } else {
                Err(Error::Configuration(format!("{what} must be at least 1")))
            }
        };
        match self {
            LossSpec::Crps { .. } | LossSpec::Kl => Ok(()),
            LossSpec::MultidimCrps { domain } => {
                if domain.is_empty() || domain.len() > crate::types::MAX_GRID_DIM {
                    return Err(Error::Unsupported(format!(
                        "MULTIDIM_CRPS needs 1 to {} intervals, got {}",
                        crate::types::MAX_GRID_DIM,
                        domain.len()
                    )));
                }
                Ok(())
            }
            LossSpec::Scrps {
                radius,
                dim,
                directions,
            }
            | LossSpec::Sw2 {
                radius,
                dim,
                directions,
            } => {
                positive(*radius, "radius")?;
                count(*dim, "dim")?;
                count(*directions, "directions")
            }
            LossSpec::Energy { radius, dim } => {
                positive(*radius, "radius")?;
                count(*dim, "dim")
            }
            LossSpec::Beta2 { bound, base_mass } => {
                positive(*bound, "bound")?;
                positive(*base_mass, "base_mass")?;
                if bound * base_mass < 1.0 {
                    return Err(Error::Configuration(format!(
                        "no density bounded by {bound} integrates to 1 over base mass {base_mass}"
                    )));
                }
                Ok(())
            }
            LossSpec::Cfd {
                dim,
                frequencies,
                scale,
                weighting,
            } => {
                count(*dim, "dim")?;
                match weighting {
                    Some(w) if w.dim() != *dim => Err(Error::Configuration(format!(
                        "weighting nodes have dimension {}, loss has {dim}",
                        w.dim()
                    ))),
                    Some(_) => Ok(()),
                    None => {
                        count(*frequencies, "frequencies")?;
                        positive(*scale, "scale")
                    }
                }
            }
            LossSpec::Mmd { kernel } => kernel.validate(),
            LossSpec::Ot1d { quantile_nodes, .. } => count(*quantile_nodes, "quantile_nodes"),
        }
    }

    /// Mixability and exp-concavity rates for the configured domain.
    pub fn eta(&self) -> Result<EtaRate> {
        self.validate()?;
        let rate = |mix: f64| EtaRate::new(mix, mix / 4.0);
        match self {
            LossSpec::Crps { domain } => rate(2.0 / domain.width()),
            LossSpec::MultidimCrps { domain } => rate(2.0 / domain.iter().map(BoundedInterval::width).product::<f64>()),
            LossSpec::Scrps { radius, .. } => rate(1.0 / (2.0 * radius)),
            LossSpec::Energy { radius, dim } => rate(1.0 / (2.0 * radius * energy_scrps_constant(*dim)?)),
            LossSpec::Kl => EtaRate::new(1.0, 1.0),
            LossSpec::Beta2 { bound, base_mass } => rate(2.0 / (base_mass * bound * bound)),
            LossSpec::Cfd { .. } => EtaRate::new(0.25, 0.125),
            LossSpec::Mmd { kernel } => {
                let m = kernel.spectral_mass();
                EtaRate::new(1.0 / (4.0 * m), 1.0 / (8.0 * m))
            }
            LossSpec::Ot1d { domain, .. } => rate(2.0 / (domain.width() * domain.width())),
            LossSpec::Sw2 { radius, .. } => rate(1.0 / (2.0 * radius * radius)),
        }
    }

    /// Whether a mixable-rate aggregation rule is implemented for this loss.
    pub fn mixable_rule_available(&self) -> bool {
        matches!(
            self,
            LossSpec::Crps { .. }
                | LossSpec::MultidimCrps { .. }
                | LossSpec::Kl
                | LossSpec::Beta2 { .. }
                | LossSpec::Ot1d { .. }
        )
    }

    /// The learning rate used in `mode`, or an error if the mode has no rule.
    pub fn eta_for(&self, mode: Mode) -> Result<f64> {
        let rate = self.eta()?;
        match mode {
            Mode::Expconcave => Ok(rate.eta_expconcave),
            Mode::Mixable if self.mixable_rule_available() => Ok(rate.eta_mixable),
            Mode::Mixable => Err(Error::Unsupported(format!(
                "{} has no mixable aggregation rule; use expconcave mode",
                self.name()
            ))),
        }
    }
}

#[derive(Debug, Clone)]
enum Frozen {
    None,
    Directions(SphereDirections),
    Weighting(IntegralWeighting),
}

/// A validated loss with its Monte Carlo nodes frozen for the lifetime of a game.
#[derive(Debug, Clone)]
pub struct PreparedLoss {
    spec: LossSpec,
    frozen: Frozen,
}

impl PreparedLoss {
    pub fn new(spec: LossSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let node_seed = derive_seed(seed, 0x6c6f_7373);
        let frozen = match &spec {
            LossSpec::Scrps { dim, directions, .. } | LossSpec::Sw2 { dim, directions, .. } => {
                Frozen::Directions(SphereDirections::sample(*dim, *directions, node_seed)?)
            }
            LossSpec::Cfd {
                dim,
                frequencies,
                scale,
                weighting,
            } => Frozen::Weighting(match weighting {
                Some(w) => w.clone(),
                None => IntegralWeighting::gaussian(*dim, *frequencies, *scale, node_seed)?,
            }),
            LossSpec::Ot1d { domain, .. } => {
                check_cross_derivative(&SquaredCost::new(*domain))?;
                Frozen::None
            }
            _ => Frozen::None,
        };
        Ok(Self { spec, frozen })
    }

    pub fn spec(&self) -> &LossSpec {
        &self.spec
    }

    pub fn eta(&self, mode: Mode) -> Result<f64> {
        self.spec.eta_for(mode)
    }

    pub fn directions(&self) -> Option<&SphereDirections> {
        match &self.frozen {
            Frozen::Directions(d) => Some(d),
            _ => None,
        }
    }

    pub fn weighting(&self) -> Option<&IntegralWeighting> {
        match &self.frozen {
            Frozen::Weighting(w) => Some(w),
            _ => None,
        }
    }

    /// `lambda(forecast, outcome)`.
    pub fn evaluate(&self, forecast: &Distribution, outcome: &Distribution) -> Result<f64> {
        match (&self.spec, &self.frozen) {
            (LossSpec::Crps { domain }, _) => crps(
                &*as_grid_1d(forecast, *domain)?,
                &*as_grid_1d(outcome, *domain)?,
                *domain,
            ),
            (LossSpec::MultidimCrps { domain }, _) => {
                let (g, o) = (forecast.as_grid_nd()?, outcome.as_grid_nd()?);
                for (d, name) in [(g, "forecast"), (o, "outcome")] {
                    if d.dim() != domain.len() {
                        return Err(Error::Incompatible(format!(
                            "{name} has dimension {}, loss has {}",
                            d.dim(),
                            domain.len()
                        )));
                    }
                    for (box_iv, iv) in d.domain().iter().zip(domain) {
                        if box_iv.l() < iv.l() || box_iv.r() > iv.r() {
                            return Err(Error::Domain(format!("{name} grid leaves the loss box")));
                        }
                    }
                }
                multidim_crps(g, o)
            }
            (LossSpec::Scrps { radius, .. }, Frozen::Directions(dirs)) => {
                scrps(&*forecast.to_particles()?, &*outcome.to_particles()?, *radius, dirs)
            }
            (LossSpec::Sw2 { radius, .. }, Frozen::Directions(dirs)) => {
                sw2_squared(&*forecast.to_particles()?, &*outcome.to_particles()?, *radius, dirs)
            }
            (LossSpec::Energy { radius, dim }, _) => {
                let (g, o) = (forecast.to_particles()?, outcome.to_particles()?);
                check_particles(&g, *dim, *radius, "forecast")?;
                check_particles(&o, *dim, *radius, "outcome")?;
                energy_distance(&g, &o)
            }
            (LossSpec::Kl, _) => kl_divergence(outcome.as_density()?, forecast.as_density()?),
            (LossSpec::Beta2 { bound, base_mass }, _) => {
                let (g, o) = (forecast.as_density()?, outcome.as_density()?);
                let total = g.base_total_mass();
                if (total - base_mass).abs() > 1e-9 * base_mass.max(1.0) {
                    return Err(Error::Incompatible(format!(
                        "base measure has mass {total}, loss declares {base_mass}"
                    )));
                }
                beta2_divergence(g, o, *bound)
            }
            (LossSpec::Cfd { .. }, Frozen::Weighting(w)) => {
                cfd(&*forecast.to_particles()?, &*outcome.to_particles()?, w)
            }
            (LossSpec::Mmd { kernel }, _) => mmd_squared(&*forecast.to_particles()?, &*outcome.to_particles()?, kernel),
            (LossSpec::Ot1d { domain, quantile_nodes }, _) => transport::ot1d_cost_unchecked(
                &*as_quantiles(forecast, *quantile_nodes)?,
                &*as_quantiles(outcome, *quantile_nodes)?,
                &SquaredCost::new(*domain),
            ),
            _ => Err(Error::Invariant("loss prepared without its frozen nodes".into())),
        }
    }
}

fn check_particles(p: &ParticleDistributionND, dim: usize, radius: f64, what: &str) -> Result<()> {
    if p.dim() != dim {
        return Err(Error::Incompatible(format!(
            "{what} has dimension {}, loss has {dim}",
            p.dim()
        )));
    }
    let m = p.max_norm();
    if m > radius * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "{what} has a particle of norm {m} outside the ball of radius {radius}"
        )));
    }
    Ok(())
}

/// One-dimensional view as a CDF on `domain`.
pub(crate) fn as_grid_1d(d: &Distribution, domain: BoundedInterval) -> Result<Cow<'_, GridDistribution1D>> {
    match d {
        Distribution::Grid(g) => Ok(Cow::Borrowed(g)),
        Distribution::Quantile(q) => Ok(Cow::Owned(q.to_grid_distribution(domain)?)),
        Distribution::Particles(p) if p.dim() == 1 => {
            let samples: Vec<f64> = p.points().iter().map(|x| x[0]).collect();
            Ok(Cow::Owned(GridDistribution1D::from_weighted_samples(
                &samples,
                p.weights(),
                domain,
            )?))
        }
        other => Err(Error::Incompatible(format!(
            "expected a one-dimensional distribution, got {}",
            other.kind()
        ))),
    }
}

/// One-dimensional view as a quantile table.
pub(crate) fn as_quantiles(d: &Distribution, nodes: usize) -> Result<Cow<'_, QuantileGrid1D>> {
    match d {
        Distribution::Grid(g) => Ok(Cow::Owned(g.quantile_grid(nodes))),
        Distribution::Quantile(q) => Ok(Cow::Borrowed(q)),
        Distribution::Particles(p) if p.dim() == 1 => Ok(Cow::Owned(QuantileGrid1D::from_atoms(
            p.points()
                .iter()
                .map(|x| x[0])
                .zip(p.weights().iter().copied())
                .collect(),
        )?)),
        other => Err(Error::Incompatible(format!(
            "expected a one-dimensional distribution, got {}",
            other.kind()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::DensityGrid;

    fn unit() -> BoundedInterval {
        BoundedInterval::unit()
    }

    #[test]
    fn json_forms() {
        let s: LossSpec = serde_json::from_str(r#"{"kind":"CRPS","domain":[0,1]}"#).unwrap();
        assert_eq!(s, LossSpec::Crps { domain: unit() });
        let s: LossSpec = serde_json::from_str(r#"{"kind":"SW2","radius":1,"dim":2}"#).unwrap();
        assert_eq!(
            s,
            LossSpec::Sw2 {
                radius: 1.0,
                dim: 2,
                directions: DEFAULT_MC_NODES
            }
        );
        let s: LossSpec =
            serde_json::from_str(r#"{"kind":"MMD","kernel":{"type":"gaussian","bandwidth":0.5}}"#).unwrap();
        assert_eq!(s.eta().unwrap().eta_expconcave, 1.0 / 8.0);
        for k in ["KL", "BETA2", "OT1D", "MULTIDIM_CRPS", "ENERGY", "CFD", "SCRPS"] {
            let json = match k {
                "KL" => r#"{"kind":"KL"}"#.to_string(),
                "BETA2" => r#"{"kind":"BETA2","bound":1,"base_mass":3}"#.to_string(),
                "OT1D" => r#"{"kind":"OT1D","domain":[0,2]}"#.to_string(),
                "MULTIDIM_CRPS" => r#"{"kind":"MULTIDIM_CRPS","domain":[[0,1],[0,2]]}"#.to_string(),
                other => format!(r#"{{"kind":"{other}","radius":1,"dim":2}}"#),
            };
            let json = if k == "CFD" {
                r#"{"kind":"CFD","dim":2}"#.to_string()
            } else {
                json
            };
            let s: LossSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(s.name(), k);
        }
        assert!(serde_json::from_str::<LossSpec>(r#"{"kind":"HINGE"}"#).is_err());
    }

    #[test]
    fn rates_follow_the_table() {
        let e = LossSpec::Crps {
            domain: BoundedInterval::new(0.0, 4.0).unwrap(),
        }
        .eta()
        .unwrap();
        assert_eq!((e.eta_mixable, e.eta_expconcave), (0.5, 0.125));
        let e = LossSpec::MultidimCrps {
            domain: vec![unit(), BoundedInterval::new(0.0, 2.0).unwrap()],
        }
        .eta()
        .unwrap();
        assert_eq!((e.eta_mixable, e.eta_expconcave), (1.0, 0.25));
        let e = LossSpec::Scrps {
            radius: 2.0,
            dim: 2,
            directions: 1,
        }
        .eta()
        .unwrap();
        assert_eq!((e.eta_mixable, e.eta_expconcave), (0.25, 1.0 / 16.0));
        let e = LossSpec::Energy { radius: 1.0, dim: 3 }.eta().unwrap();
        assert!((e.eta_expconcave - 1.0 / 32.0).abs() < 1e-15);
        let e = LossSpec::Energy { radius: 1.0, dim: 2 }.eta().unwrap();
        assert!((e.eta_expconcave - 1.0 / (8.0 * std::f64::consts::PI)).abs() < 1e-15);
        let e = LossSpec::Beta2 {
            bound: 2.0,
            base_mass: 1.0,
        }
        .eta()
        .unwrap();
        assert_eq!((e.eta_mixable, e.eta_expconcave), (0.5, 0.125));
        let e = LossSpec::Ot1d {
            domain: BoundedInterval::new(-1.0, 1.0).unwrap(),
            quantile_nodes: 16,
        }
        .eta()
        .unwrap();
        assert_eq!((e.eta_mixable, e.eta_expconcave), (0.5, 0.125));
        let e = LossSpec::Sw2 {
            radius: 1.0,
            dim: 2,
            directions: 1,
        }
        .eta()
        .unwrap();
        assert_eq!(e.eta_expconcave, 0.125);
        assert_eq!(LossSpec::Kl.eta().unwrap().eta_mixable, 1.0);
        let e = LossSpec::Cfd {
            dim: 1,
            frequencies: 1,
            scale: 1.0,
            weighting: None,
        }
        .eta()
        .unwrap();
        assert_eq!((e.eta_mixable, e.eta_expconcave), (0.25, 0.125));
    }

    #[test]
    fn mixable_mode_is_rejected_without_a_rule() {
        for s in [
            LossSpec::Scrps {
                radius: 1.0,
                dim: 2,
                directions: 4,
            },
            LossSpec::Energy { radius: 1.0, dim: 2 },
            LossSpec::Mmd {
                kernel: Kernel::gaussian(1.0),
            },
            LossSpec::Sw2 {
                radius: 1.0,
                dim: 2,
                directions: 4,
            },
        ] {
            assert!(matches!(s.eta_for(Mode::Mixable), Err(Error::Unsupported(_))));
            assert!(s.eta_for(Mode::Expconcave).is_ok());
        }
    }

    #[test]
    fn infeasible_beta2_bound_is_rejected() {
        assert!(LossSpec::Beta2 {
            bound: 0.1,
            base_mass: 2.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn prepared_evaluation_dispatches() {
        let l = PreparedLoss::new(LossSpec::Crps { domain: unit() }, 1).unwrap();
        let g = Distribution::from(GridDistribution1D::uniform(unit()));
        let o = Distribution::from(ParticleDistributionND::dirac(vec![0.0]).unwrap());
        assert!((l.evaluate(&g, &o).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let l = PreparedLoss::new(LossSpec::Kl, 1).unwrap();
        let g = Distribution::from(DensityGrid::probability_vector(vec![0.5, 0.5]).unwrap());
        let o = Distribution::from(DensityGrid::probability_vector(vec![1.0, 0.0]).unwrap());
        assert!((l.evaluate(&g, &o).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(l.evaluate(&o, &g).is_err());

        let l = PreparedLoss::new(
            LossSpec::Ot1d {
                domain: unit(),
                quantile_nodes: 64,
            },
            1,
        )
        .unwrap();
        let a = Distribution::from(GridDistribution1D::dirac(0.25, unit()).unwrap());
        let b = Distribution::from(GridDistribution1D::dirac(0.75, unit()).unwrap());
        assert!((l.evaluate(&a, &b).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn frozen_nodes_are_reproducible() {
        let spec = LossSpec::Scrps {
            radius: 1.0,
            dim: 3,
            directions: 16,
        };
        let a = PreparedLoss::new(spec.clone(), 9).unwrap();
        let b = PreparedLoss::new(spec, 9).unwrap();
        assert_eq!(a.directions(), b.directions());
    }

    #[test]
    fn wrong_representation_is_incompatible() {
        let l = PreparedLoss::new(LossSpec::Kl, 1).unwrap();
        let g = Distribution::from(GridDistribution1D::uniform(unit()));
        assert!(matches!(l.evaluate(&g, &g), Err(Error::Incompatible(_))));
    }
}
