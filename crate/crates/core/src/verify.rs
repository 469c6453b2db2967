//! Certification matrix: every aggregation rule checked against its rate on
//! random instances with [`check_mixability`].

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{Kernel, LossSpec, Mode, PreparedLoss};
use crate::math::derive_seed;
use crate::oracle::{check_mixability, SLACK_TOLERANCE};
use crate::pointwise::BoundedInterval;
use crate::sampling::{
    random_grid_cdf, random_grid_cdf_nd, random_particles, random_point_in_ball, random_simplex, random_weights,
};
use crate::types::{
    canonical_grid, AffineCopy, BaseMeasure, DensityGrid, Distribution, GridCdfND, GridDistribution1D,
    ParticleDistributionND, QuantileGrid1D, WeightVector,
};

/// Trials per Monte Carlo row are the requested count divided by this factor.
pub const MC_TRIAL_DIVISOR: usize = 10;

/// Loss kinds known to the verification suite, by their serialised names.
pub const LOSS_KINDS: [&str; 10] = [
    "CRPS",
    "MULTIDIM_CRPS",
    "SCRPS",
    "ENERGY",
    "KL",
    "BETA2",
    "CFD",
    "MMD",
    "OT1D",
    "SW2",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Row {
    CrpsSubstitution,
    CrpsMixture,
    MultidimCrpsSubstitution,
    MultidimCrpsMixture,
    ScrpsMixture,
    EnergyMixture,
    KlMixture,
    Beta2Mixture,
    Beta2Projected,
    CfdMixture,
    MmdMixture,
    Ot1dQuantile,
    W2Barycenter,
    Sw2Barycenter,
}

const ROWS: [Row; 14] = [
    Row::CrpsSubstitution,
    Row::CrpsMixture,
    Row::MultidimCrpsSubstitution,
    Row::MultidimCrpsMixture,
    Row::ScrpsMixture,
    Row::EnergyMixture,
    Row::KlMixture,
    Row::Beta2Mixture,
    Row::Beta2Projected,
    Row::CfdMixture,
    Row::MmdMixture,
    Row::Ot1dQuantile,
    Row::W2Barycenter,
    Row::Sw2Barycenter,
];

fn crps_domain() -> BoundedInterval {
    BoundedInterval::new(-1.0, 2.0).expect("valid interval")
}

fn ot_domain() -> BoundedInterval {
    BoundedInterval::new(0.0, 2.0).expect("valid interval")
}

const SCRPS_RADIUS: f64 = 1.5;
const ENERGY_RADIUS: f64 = 1.0;
const SW2_RADIUS: f64 = 2.0;
const PARTICLE_RADIUS: f64 = 2.0;
const CLASSES: usize = 6;
const BETA_CELLS: usize = 5;

impl Row {
    fn rule(self) -> &'static str {
        match self {
            Row::CrpsSubstitution => "pointwise CDF substitution",
            Row::MultidimCrpsSubstitution => "pointwise CDF substitution",
            Row::Beta2Projected => "projected density substitution",
            Row::Ot1dQuantile => "pointwise quantile substitution",
            Row::W2Barycenter => "W2 barycenter",
            Row::Sw2Barycenter => "affine SW2 barycenter",
            _ => "mixture",
        }
    }

    fn mode(self) -> Mode {
        match self {
            Row::CrpsSubstitution | Row::MultidimCrpsSubstitution | Row::Beta2Projected | Row::Ot1dQuantile => {
                Mode::Mixable
            }
            _ => Mode::Expconcave,
        }
    }

    fn monte_carlo(self) -> bool {
        matches!(self, Row::ScrpsMixture | Row::CfdMixture | Row::Sw2Barycenter)
    }

    fn spec(self) -> LossSpec {
        match self {
            Row::CrpsSubstitution | Row::CrpsMixture => LossSpec::Crps { domain: crps_domain() },
            Row::MultidimCrpsSubstitution | Row::MultidimCrpsMixture => LossSpec::MultidimCrps {
                domain: vec![BoundedInterval::unit(), crps_domain()],
            },
            Row::ScrpsMixture => LossSpec::Scrps {
                radius: SCRPS_RADIUS,
                dim: 2,
                directions: crate::losses::DEFAULT_MC_NODES,
            },
            Row::EnergyMixture => LossSpec::Energy {
                radius: ENERGY_RADIUS,
                dim: 3,
            },
            Row::KlMixture => LossSpec::Kl,
            Row::Beta2Mixture | Row::Beta2Projected => LossSpec::Beta2 {
                bound: 2.0,
                base_mass: BETA_CELLS as f64,
            },
            Row::CfdMixture => LossSpec::Cfd {
                dim: 2,
                frequencies: crate::losses::DEFAULT_MC_NODES,
                scale: 1.0,
                weighting: None,
            },
            Row::MmdMixture => LossSpec::Mmd {
                kernel: Kernel::gaussian(0.7),
            },
            Row::Ot1dQuantile | Row::W2Barycenter => LossSpec::Ot1d {
                domain: ot_domain(),
                quantile_nodes: crate::losses::DEFAULT_QUANTILE_NODES,
            },
            Row::Sw2Barycenter => LossSpec::Sw2 {
                radius: SW2_RADIUS,
                dim: 2,
                directions: crate::losses::DEFAULT_MC_NODES,
            },
        }
    }

    /// Draws expert forecasts and the outcomes to check them against.
    fn instance(self, rng: &mut ChaCha8Rng) -> Result<(Vec<Distribution>, Vec<Distribution>)> {
        let n = rng.random_range(2..=4);
        match self {
            Row::CrpsSubstitution | Row::CrpsMixture => {
                let iv = crps_domain();
                let points = rng.random_range(4..=64);
                let fs = (0..n)
                    .map(|_| random_grid_cdf(rng, iv, points).map(Distribution::from))
                    .collect::<Result<_>>()?;
                let mut os = (0..96)
                    .map(|_| {
                        GridDistribution1D::point_mass(rng.random_range(iv.l()..=iv.r()), iv).map(Distribution::from)
                    })
                    .collect::<Result<Vec<_>>>()?;
                for x in [iv.l(), iv.r()] {
                    os.push(GridDistribution1D::point_mass(x, iv)?.into());
                }
                for _ in 0..2 {
                    os.push(random_grid_cdf(rng, iv, 16)?.into());
                }
                Ok((fs, os))
            }
            Row::MultidimCrpsSubstitution | Row::MultidimCrpsMixture => {
                let domain = vec![BoundedInterval::unit(), crps_domain()];
                let points = rng.random_range(3..=8);
                let fs = (0..n)
                    .map(|_| random_grid_cdf_nd(rng, &domain, points).map(Distribution::from))
                    .collect::<Result<_>>()?;
                let os = (0..40)
                    .map(|_| {
                        let marginals = domain
                            .iter()
                            .map(|iv| {
                                let axis = canonical_grid(*iv, points);
                                let x = axis[rng.random_range(0..axis.len())];
                                GridDistribution1D::dirac_on_grid(x, axis)
                            })
                            .collect::<Result<Vec<_>>>()?;
                        GridCdfND::product(&marginals).map(Distribution::from)
                    })
                    .collect::<Result<_>>()?;
                Ok((fs, os))
            }
            Row::ScrpsMixture | Row::EnergyMixture | Row::CfdMixture | Row::MmdMixture => {
                let (dim, radius) = match self {
                    Row::ScrpsMixture => (2, SCRPS_RADIUS),
                    Row::EnergyMixture => (3, ENERGY_RADIUS),
                    _ => (2, PARTICLE_RADIUS),
                };
                let fs = (0..n)
                    .map(|_| {
                        let k = rng.random_range(1..=8);
                        random_particles(rng, dim, k, radius).map(Distribution::from)
                    })
                    .collect::<Result<_>>()?;
                let os = (0..20)
                    .map(|j| {
                        if j % 4 == 3 {
                            random_particles(rng, dim, 4, radius).map(Distribution::from)
                        } else {
                            let x = random_point_in_ball(rng, dim, radius);
                            ParticleDistributionND::with_radius(vec![x], vec![1.0], radius).map(Distribution::from)
                        }
                    })
                    .collect::<Result<_>>()?;
                Ok((fs, os))
            }
            Row::KlMixture => {
                let fs = (0..n)
                    .map(|_| DensityGrid::probability_vector(random_simplex(rng, CLASSES)).map(Distribution::from))
                    .collect::<Result<_>>()?;
                let mut os: Vec<Distribution> = (0..CLASSES)
                    .map(|k| {
                        let mut e = vec![0.0; CLASSES];
                        e[k] = 1.0;
                        DensityGrid::probability_vector(e).map(Distribution::from)
                    })
                    .collect::<Result<_>>()?;
                for _ in 0..14 {
                    os.push(DensityGrid::probability_vector(random_simplex(rng, CLASSES))?.into());
                }
                Ok((fs, os))
            }
            Row::Beta2Mixture | Row::Beta2Projected => {
                let bound = 2.0;
                let mass: Vec<f64> = (0..BETA_CELLS).map(|_| rng.random_range(0.5..1.5)).collect();
                let total: f64 = mass.iter().sum();
                let mass: Vec<f64> = mass.iter().map(|m| m * BETA_CELLS as f64 / total).collect();
                let grid: Vec<f64> = (0..BETA_CELLS).map(|i| i as f64).collect();
                let template = DensityGrid::new(
                    grid.clone(),
                    mass.clone(),
                    vec![1.0 / BETA_CELLS as f64; BETA_CELLS],
                    BaseMeasure::Finite,
                )?;
                let fs = (0..n)
                    .map(|_| crate::sampling::random_density(rng, &template, bound).map(Distribution::from))
                    .collect::<Result<_>>()?;
                let mut os = Vec::new();
                for i in 0..BETA_CELLS {
                    if 1.0 / mass[i] <= bound {
                        os.push(DensityGrid::dirac(grid.clone(), mass.clone(), i, BaseMeasure::Finite)?.into());
                    }
                }
                for _ in 0..20 {
                    os.push(crate::sampling::random_density(rng, &template, bound)?.into());
                }
                Ok((fs, os))
            }
            Row::Ot1dQuantile | Row::W2Barycenter => {
                let iv = ot_domain();
                let atoms = |rng: &mut ChaCha8Rng, max: usize| {
                    let k = rng.random_range(1..=max);
                    let w = random_simplex(rng, k);
                    QuantileGrid1D::from_atoms(
                        w.into_iter()
                            .map(|wi| (rng.random_range(iv.l()..=iv.r()), wi))
                            .collect(),
                    )
                    .map(Distribution::from)
                };
                let fs = (0..n).map(|_| atoms(rng, 8)).collect::<Result<_>>()?;
                let os = (0..20)
                    .map(|j| atoms(rng, if j < 10 { 1 } else { 6 }))
                    .collect::<Result<_>>()?;
                Ok((fs, os))
            }
            Row::Sw2Barycenter => {
                let k = rng.random_range(1..=8);
                let reference = random_particles(rng, 2, k, 0.5)?;
                let fs = (0..n)
                    .map(|_| {
                        let scale = rng.random_range(0.5..=2.0);
                        let shift = random_point_in_ball(rng, 2, 0.5);
                        AffineCopy::new(reference.clone(), scale, shift).map(Distribution::from)
                    })
                    .collect::<Result<_>>()?;
                let os = (0..20)
                    .map(|_| {
                        let k = rng.random_range(1..=6);
                        random_particles(rng, 2, k, SW2_RADIUS).map(Distribution::from)
                    })
                    .collect::<Result<_>>()?;
                Ok((fs, os))
            }
        }
    }
}

/// Loss kinds to certify: `All`, or a list of serialised loss names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scope {
    All,
    Losses(Vec<String>),
}

impl Scope {
    /// Parses a comma-separated list; `all` selects every loss.
    pub fn parse(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Scope::All);
        }
        let names = s
            .split(',')
            .map(|n| n.trim().to_ascii_uppercase().replace('-', "_"))
            .filter(|n| !n.is_empty())
            .map(|n| {
                if LOSS_KINDS.contains(&n.as_str()) {
                    Ok(n)
                } else {
                    Err(Error::Configuration(format!(
                        "unknown loss kind {n}; expected one of {}",
                        LOSS_KINDS.join(", ")
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if names.is_empty() {
            return Err(Error::Configuration("empty verification scope".into()));
        }
        Ok(Scope::Losses(names))
    }

    fn includes(&self, name: &str) -> bool {
        match self {
            Scope::All => true,
            Scope::Losses(l) => l.iter().any(|n| n == name),
        }
    }
}

/// One `(loss, rule, rate)` row of the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub loss: String,
    pub mode: Mode,
    pub rule: String,
    pub eta: f64,
    pub monte_carlo: bool,
    pub trials: usize,
    pub outcomes_checked: usize,
    pub pass: bool,
    /// Smallest `exp(-eta l(agg, o)) - sum_n w_n exp(-eta l(f_n, o))` seen.
    pub worst_slack: f64,
    pub worst_trial: Option<usize>,
    pub violations: usize,
    pub errors: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
    pub tolerance: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub trials: usize,
    pub rows: Vec<VerificationRow>,
    pub pass: bool,
}

struct TrialOutcome {
    slack: f64,
    outcomes: usize,
}

fn run_trial(row: Row, seed: u64) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loss = PreparedLoss::new(row.spec(), derive_seed(seed, 1))?;
    let eta = loss.eta(row.mode())?;
    let (forecasts, outcomes) = row.instance(&mut rng)?;
    let w: WeightVector = random_weights(&mut rng, forecasts.len());
    let aggregate = loss.aggregate(row.mode(), &forecasts, &w)?;
    let report = check_mixability(
        |f: &Distribution, o: &Distribution| loss.evaluate(f, o),
        &aggregate,
        &forecasts,
        &w,
        eta,
        &outcomes,
        SLACK_TOLERANCE,
    )?;
    Ok(TrialOutcome {
        slack: report.worst_slack,
        outcomes: report.outcomes,
    })
}

fn run_row(row: Row, trials: usize, seed: u64) -> Result<VerificationRow> {
    let start = Instant::now();
    let spec = row.spec();
    let eta = spec.eta_for(row.mode())?;
    let results: Vec<Result<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|k| run_trial(row, derive_seed(seed, k as u64)))
        .collect();
    let mut worst_slack = f64::INFINITY;
    let mut worst_trial = None;
    let (mut violations, mut errors, mut outcomes_checked) = (0, 0, 0);
    let mut first_error = None;
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => {
                outcomes_checked += t.outcomes;
                if t.slack < -SLACK_TOLERANCE {
                    violations += 1;
                }
                if t.slack < worst_slack {
                    worst_slack = t.slack;
                    worst_trial = Some(k);
                }
            }
            Err(e) => {
                errors += 1;
                first_error.get_or_insert_with(|| format!("trial {k}: {e}"));
            }
        }
    }
    Ok(VerificationRow {
        loss: spec.name().to_string(),
        mode: row.mode(),
        rule: row.rule().to_string(),
        eta,
        monte_carlo: row.monte_carlo(),
        trials,
        outcomes_checked,
        pass: violations == 0 && errors == 0,
        worst_slack,
        worst_trial,
        violations,
        errors,
        first_error,
        tolerance: SLACK_TOLERANCE,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs every row in `scope` with `trials` random instances (a tenth of
/// that for rows whose loss uses Monte Carlo nodes). `trials = 0` gives an empty report.
pub fn run_verification_suite(scope: &Scope, trials: usize, seed: u64) -> Result<VerificationReport> {
    let mut rows = Vec::new();
    if trials > 0 {
        for (i, row) in ROWS.iter().enumerate() {
            if !scope.includes(row.spec().name()) {
                continue;
            }
            let n = if row.monte_carlo() {
                trials.div_ceil(MC_TRIAL_DIVISOR)
            } else {
                trials
            };
            rows.push(run_row(*row, n, derive_seed(seed, i as u64))?);
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(VerificationReport {
        seed,
        trials,
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crps_scope_passes() {
        let r = run_verification_suite(&Scope::parse("CRPS").unwrap(), 100, 7).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.pass, "{r:#?}");
        assert!(r
            .rows
            .iter()
            .all(|row| row.trials == 100 && row.outcomes_checked == 10_000));
    }

    #[test]
    fn zero_trials_is_empty() {
        let r = run_verification_suite(&Scope::All, 0, 7).unwrap();
        assert!(r.rows.is_empty() && r.pass);
    }

    #[test]
    fn every_row_passes_a_small_run() {
        let r = run_verification_suite(&Scope::All, 30, 1).unwrap();
        assert_eq!(r.rows.len(), ROWS.len());
        for row in &r.rows {
            assert!(row.pass, "{row:#?}");
            assert_eq!(row.trials, if row.monte_carlo { 3 } else { 30 });
        }
    }

    #[test]
    fn report_is_deterministic() {
        let a = run_verification_suite(&Scope::parse("KL,OT1D").unwrap(), 20, 3).unwrap();
        let b = run_verification_suite(&Scope::parse("kl, ot1d").unwrap(), 20, 3).unwrap();
        assert_eq!(a.rows.len(), 3);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!((x.worst_slack, x.worst_trial), (y.worst_slack, y.worst_trial));
        }
    }

    #[test]
    fn scope_parsing() {
        assert_eq!(Scope::parse(" ALL ").unwrap(), Scope::All);
        assert!(Scope::parse("crps,nope").is_err());
        assert!(Scope::parse(",").is_err());
        assert_eq!(
            Scope::parse("multidim-crps").unwrap(),
            Scope::Losses(vec!["MULTIDIM_CRPS".into()])
        );
    }
}
