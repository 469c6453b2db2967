//! Brute-force verifiers: mixability and Holder inequalities, discrete
//! transport solvers, Monte Carlo integration and a rate-sharpness search.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::McEstimate;
use crate::math::derive_seed;
use crate::pointwise::BoundedInterval;
use crate::sampling::random_simplex;
use crate::types::WeightVector;

/// Absolute slack tolerance for inequalities between deterministic losses.
pub const SLACK_TOLERANCE: f64 = 1e-9;
/// Largest instance handled by [`discrete_ot_bruteforce`].
pub const BRUTEFORCE_MAX: usize = 8;
/// Largest support handled by [`discrete_ot_lp`].
pub const LP_MAX: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixabilityReport {
    pub pass: bool,
    /// `min_omega [exp(-eta l(agg, omega)) - sum_n w_n exp(-eta l(f_n, omega))]`.
    pub worst_slack: f64,
    pub worst_outcome: Option<usize>,
    pub outcomes: usize,
    pub tolerance: f64,
}

/// Evaluates `exp(-eta l(agg, o)) >= sum_n w_n exp(-eta l(f_n, o))` on every outcome.
pub fn check_mixability<F, O, L>(
    loss: L,
    aggregate: &F,
    forecasts: &[F],
    w: &WeightVector,
    eta: f64,
    outcomes: &[O],
    tolerance: f64,
) -> Result<MixabilityReport>
where
    F: Sync,
    O: Sync,
    L: Fn(&F, &O) -> Result<f64> + Sync,
{
    if forecasts.len() != w.len() {
        return Err(Error::Size(format!(
            "{} forecasts for {} weights",
            forecasts.len(),
            w.len()
        )));
    }
    let slacks = outcomes
        .par_iter()
        .map(|o| {
            let lhs = (-eta * loss(aggregate, o)?).exp();
            let mut rhs = 0.0;
            for (f, wn) in forecasts.iter().zip(w.iter()) {
                if wn > 0.0 {
                    rhs += wn * (-eta * loss(f, o)?).exp();
                }
            }
            Ok(lhs - rhs)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (worst_outcome, worst_slack) =
        slacks.iter().copied().enumerate().fold(
            (None, f64::INFINITY),
            |acc, (i, s)| if s < acc.1 { (Some(i), s) } else { acc },
        );
    Ok(MixabilityReport {
        pass: worst_slack >= -tolerance,
        worst_slack,
        worst_outcome,
        outcomes: outcomes.len(),
        tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub pass: bool,
    /// Right-hand side minus left-hand side.
    pub gap: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Discrete generalised Holder inequality for `f[x][y] > 0`:
///
/// `sum_y exp(sum_x u_x log f(x, y)) v_y nu_y <= exp(sum_x u_x log(sum_y f(x, y) v_y nu_y))`.
///
/// `u` must be a probability vector; `v` and `nu` nonnegative.
pub fn check_holder(f: &[Vec<f64>], u: &[f64], v: &[f64], nu: &[f64], tolerance: f64) -> Result<HolderReport> {
    let nx = f.len();
    if nx == 0 || u.len() != nx {
        return Err(Error::Size(format!("{nx} rows of f for {} x-weights", u.len())));
    }
    let ny = f[0].len();
    if ny == 0 || f.iter().any(|r| r.len() != ny) || v.len() != ny || nu.len() != ny {
        return Err(Error::Size("f, v and nu must agree on the y-nodes".into()));
    }
    if f.iter().flatten().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain("f must be strictly positive and finite".into()));
    }
    if u.iter().chain(v).chain(nu).any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::Domain("weights must be nonnegative".into()));
    }
    let su: f64 = u.iter().sum();
    if (su - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("x-weights sum to {su}, expected 1")));
    }
    let lhs: f64 = (0..ny)
        .map(|y| {
            let e: f64 = (0..nx).map(|x| u[x] * f[x][y].ln()).sum();
            e.exp() * v[y] * nu[y]
        })
        .sum();
    let inner: f64 = (0..nx)
        .map(|x| {
            let s: f64 = (0..ny).map(|y| f[x][y] * v[y] * nu[y]).sum();
            u[x] * s.ln()
        })
        .sum();
    let rhs = inner.exp();
    let gap = rhs - lhs;
    Ok(HolderReport {
        pass: gap >= -tolerance,
        gap,
        lhs,
        rhs,
    })
}

/// Minimum over all `n!` assignments of the mean cost `(1/n) sum_i c(x_i, y_sigma(i))`.
pub fn discrete_ot_bruteforce(xs: &[f64], ys: &[f64], cost: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let n = xs.len();
    if n != ys.len() || n == 0 {
        return Err(Error::Size(format!("supports of sizes {n} and {}", ys.len())));
    }
    if n > BRUTEFORCE_MAX {
        return Err(Error::Size(format!(
            "brute force is limited to {BRUTEFORCE_MAX} points, got {n}; use the LP solver"
        )));
    }
    let best = (0..n)
        .permutations(n)
        .map(|p| p.iter().enumerate().map(|(i, &j)| cost(xs[i], ys[j])).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(best / n as f64)
}

/// Exact optimal transport cost between two weighted discrete supports,
/// solved as a min-cost flow by successive shortest paths.
pub fn discrete_ot_lp(xs: &[f64], ws: &[f64], ys: &[f64], vs: &[f64], cost: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let (n, m) = (xs.len(), ys.len());
    if n == 0 || m == 0 || ws.len() != n || vs.len() != m {
        return Err(Error::Size("supports and weights must be nonempty and aligned".into()));
    }
    if n > LP_MAX || m > LP_MAX {
        return Err(Error::Size(format!("supports are limited to {LP_MAX} points")));
    }
    for (w, what) in [(ws, "source"), (vs, "target")] {
        if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Domain(format!("{what} weights must be nonnegative")));
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("{what} weights sum to {s}, expected 1")));
        }
    }
    let mut g = FlowGraph::new(n + m + 2);
    let (src, sink) = (n + m, n + m + 1);
    for (i, (&x, &wi)) in xs.iter().zip(ws).enumerate() {
        g.add_edge(src, i, wi, 0.0);
        for (j, &y) in ys.iter().enumerate() {
            g.add_edge(i, n + j, f64::INFINITY, cost(x, y));
        }
    }
    for (j, &vj) in vs.iter().enumerate() {
        g.add_edge(n + j, sink, vj, 0.0);
    }
    let target = ws.iter().sum::<f64>().min(vs.iter().sum::<f64>());
    Ok(g.min_cost_flow(src, sink, target))
}

struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
}

struct FlowGraph {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

const FLOW_EPS: f64 = 1e-15;

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, a: usize, b: usize, cap: f64, cost: f64) {
        self.adj[a].push(self.edges.len());
        self.edges.push(Edge { to: b, cap, cost });
        self.adj[b].push(self.edges.len());
        self.edges.push(Edge {
            to: a,
            cap: 0.0,
            cost: -cost,
        });
    }

    fn min_cost_flow(&mut self, s: usize, t: usize, target: f64) -> f64 {
        let nodes = self.adj.len();
        let mut flow = 0.0;
        let mut total = 0.0;
        while flow < target - FLOW_EPS {
            let mut dist = vec![f64::INFINITY; nodes];
            let mut prev: Vec<Option<usize>> = vec![None; nodes];
            dist[s] = 0.0;
            for _ in 0..nodes {
                let mut changed = false;
                for a in 0..nodes {
                    if dist[a] == f64::INFINITY {
                        continue;
                    }
                    for &e in &self.adj[a] {
                        let edge = &self.edges[e];
                        if edge.cap > FLOW_EPS && dist[a] + edge.cost < dist[edge.to] - 1e-15 {
                            dist[edge.to] = dist[a] + edge.cost;
                            prev[edge.to] = Some(e);
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[t] == f64::INFINITY {
                break;
            }
            let mut push = target - flow;
            let mut v = t;
            while let Some(e) = prev[v] {
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while let Some(e) = prev[v] {
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                total += push * self.edges[e].cost;
                v = self.edges[e ^ 1].to;
            }
            flow += push;
        }
        total.max(0.0)
    }
}

/// Sampling domains for [`mc_integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum McDomain {
    /// Uniform law on the unit sphere of `R^dim`.
    Sphere { dim: usize },
    /// `N(0, scale^2 I)` on `R^dim`.
    Gaussian { dim: usize, scale: f64 },
}

/// Sample mean and standard error of `f` under `domain`; sample `k` uses its own seeded stream.
pub fn mc_integrate(
    f: impl Fn(&[f64]) -> f64 + Sync,
    domain: McDomain,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples < 2 {
        return Err(Error::Domain("Monte Carlo integration needs at least 2 samples".into()));
    }
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let s = derive_seed(seed, k as u64);
            let x = match domain {
                McDomain::Sphere { dim } => crate::losses::sliced::sample_unit_vector(dim, s),
                McDomain::Gaussian { dim, scale } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    (0..dim)
                        .map(|_| scale * rand_distr::Distribution::<f64>::sample(&StandardNormal, &mut rng))
                        .collect::<Vec<f64>>()
                }
            };
            f(&x)
        })
        .collect();
    Ok(McEstimate::from_samples(&values))
}

/// Loss families probed by [`sharpness_probe`]. All use point forecasts and
/// point outcomes in an interval, where the loss reduces to a power of `|x - y|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SharpnessTarget {
    /// `(x - y)^2` on an interval.
    Square { domain: BoundedInterval },
    /// CRPS between Diracs: `|x - y|`.
    Crps { domain: BoundedInterval },
    /// One-dimensional transport with square cost between Diracs: `(x - y)^2`.
    #[serde(rename = "OT1D")]
    Ot1d { domain: BoundedInterval },
}

impl SharpnessTarget {
    pub fn domain(&self) -> BoundedInterval {
        match *self {
            SharpnessTarget::Square { domain }
            | SharpnessTarget::Crps { domain }
            | SharpnessTarget::Ot1d { domain } => domain,
        }
    }

    /// The mixability rate for this family.
    pub fn eta_mixable(&self) -> f64 {
        let w = self.domain().width();
        match self {
            SharpnessTarget::Crps { .. } => 2.0 / w,
            _ => 2.0 / (w * w),
        }
    }

    fn point_loss(&self, x: f64, y: f64) -> f64 {
        match self {
            SharpnessTarget::Crps { .. } => (x - y).abs(),
            _ => (x - y) * (x - y),
        }
    }

    /// Lower bound on `min_g [alpha l(g, y1) + (1 - alpha) l(g, y2)]` over all
    /// forecasts (distributions included): the pointwise minimum of the
    /// integrand, `alpha (1 - alpha)` times `|y2 - y1|` or `(y2 - y1)^2`.
    fn combination_lower_bound(&self, alpha: f64, y1: f64, y2: f64) -> f64 {
        alpha * (1.0 - alpha) * self.point_loss(y1, y2)
    }
}

/// Budget and resolution of the sharpness search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessConfig {
    pub trials: usize,
    pub sweep_points: usize,
    pub alpha_points: usize,
    pub max_experts: usize,
    pub seed: u64,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            sweep_points: 1000,
            alpha_points: 101,
            max_experts: 4,
            seed: 0,
        }
    }
}

/// A certified failure of mixability: no aggregate can satisfy the
/// inequality at both outcomes simultaneously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessWitness {
    pub trial: usize,
    pub forecasts: Vec<f64>,
    pub weights: Vec<f64>,
    pub outcomes: [f64; 2],
    pub alpha: f64,
    /// Lower bound on the combined loss of any aggregate.
    pub combined_loss_lower_bound: f64,
    /// The same combination of mixlosses, which a valid aggregate must not exceed.
    pub combined_mixloss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub target: SharpnessTarget,
    pub eta: f64,
    pub trials_budget: usize,
    pub trials_run: usize,
    pub violation_found: bool,
    pub witness: Option<SharpnessWitness>,
    pub note: String,
}

/// Random search for instances on which `eta` is not a mixability rate.
///
/// Each trial draws point forecasts (half of them snapped to the interval
/// ends), Dirichlet weights and two outcomes from the sweep grid. If for
/// some `alpha` the combination `alpha m(y1) + (1-alpha) m(y2)` of mixlosses is
/// below the smallest achievable combined loss, every aggregate violates the
/// inequality at `y1` or `y2`. The search stops at the first such trial.
pub fn sharpness_probe(target: SharpnessTarget, eta: f64, cfg: &SharpnessConfig) -> Result<SharpnessReport> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("eta = {eta} must be positive")));
    }
    if cfg.sweep_points < 2 || cfg.alpha_points < 2 || cfg.max_experts < 2 {
        return Err(Error::Configuration(
            "sharpness search needs at least 2 sweep points, alphas and experts".into(),
        ));
    }
    let iv = target.domain();
    let sweep = crate::types::canonical_grid(iv, cfg.sweep_points);
    let chunk = 4096;
    let mut run = 0;
    let mut witness = None;
    while run < cfg.trials && witness.is_none() {
        let end = (run + chunk).min(cfg.trials);
        witness = (run..end)
            .into_par_iter()
            .map(|k| probe_trial(target, eta, cfg, &sweep, k))
            .find_first(Option::is_some)
            .flatten();
        run = match &witness {
            Some(w) => w.trial + 1,
            None => end,
        };
    }
    let note = match &witness {
        Some(_) => "violation certified".to_string(),
        None => format!("no violation found in {run} trials; absence of a counterexample is not a proof of mixability"),
    };
    Ok(SharpnessReport {
        target,
        eta,
        trials_budget: cfg.trials,
        trials_run: run,
        violation_found: witness.is_some(),
        witness,
        note,
    })
}

fn probe_trial(
    target: SharpnessTarget,
    eta: f64,
    cfg: &SharpnessConfig,
    sweep: &[f64],
    k: usize,
) -> Option<SharpnessWitness> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, k as u64));
    let iv = target.domain();
    let n = rng.random_range(2..=cfg.max_experts);
    let forecasts: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                if rng.random_bool(0.5) {
                    iv.l()
                } else {
                    iv.r()
                }
            } else {
                rng.random_range(iv.l()..=iv.r())
            }
        })
        .collect();
    let weights = random_simplex(&mut rng, n);
    let i = rng.random_range(0..sweep.len());
    let j = rng.random_range(0..sweep.len());
    let (y1, y2) = (sweep[i.min(j)], sweep[i.max(j)]);
    if y1 == y2 {
        return None;
    }
    let w = WeightVector::new(weights.clone()).ok()?;
    let m = |y: f64| {
        let losses: Vec<f64> = forecasts.iter().map(|&x| target.point_loss(x, y)).collect();
        crate::aa::mixloss(&w, &losses, eta).ok()
    };
    let (m1, m2) = (m(y1)?, m(y2)?);
    (0..cfg.alpha_points).find_map(|a| {
        let alpha = a as f64 / (cfg.alpha_points - 1) as f64;
        let bound = target.combination_lower_bound(alpha, y1, y2);
        let mix = alpha * m1 + (1.0 - alpha) * m2;
        (bound > mix + SLACK_TOLERANCE).then(|| SharpnessWitness {
            trial: k,
            forecasts: forecasts.clone(),
            weights: weights.clone(),
            outcomes: [y1, y2],
            alpha,
            combined_loss_lower_bound: bound,
            combined_mixloss: mix,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointwise::{square_loss, square_substitution};
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn unit() -> BoundedInterval {
        BoundedInterval::unit()
    }

    #[test]
    fn sole_expert_gives_zero_slack() {
        let w = WeightVector::uniform(1).unwrap();
        let outcomes: Vec<f64> = (0..11).map(|k| k as f64 / 10.0).collect();
        let r = check_mixability(
            |g: &f64, o: &f64| square_loss(*g, *o, unit()),
            &0.3,
            &[0.3],
            &w,
            2.0,
            &outcomes,
            SLACK_TOLERANCE,
        )
        .unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_slack, 0.0);
    }

    #[test]
    fn square_substitution_passes_at_the_mixable_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let iv = BoundedInterval::new(-2.0, 1.0).unwrap();
        let eta = 2.0 / (iv.width() * iv.width());
        let outcomes: Vec<f64> = crate::types::canonical_grid(iv, 1000);
        for _ in 0..200 {
            let fs: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..=1.0)).collect();
            let w = WeightVector::new(random_simplex(&mut rng, 4)).unwrap();
            let g = square_substitution(&fs, &w, iv).unwrap();
            let r = check_mixability(
                |g: &f64, o: &f64| square_loss(*g, *o, iv),
                &g,
                &fs,
                &w,
                eta,
                &outcomes,
                SLACK_TOLERANCE,
            )
            .unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn square_substitution_fails_at_four_times_the_rate() {
        let iv = unit();
        let w = WeightVector::uniform(2).unwrap();
        let fs = [0.0, 1.0];
        let g = square_substitution(&fs, &w, iv).unwrap();
        let r = check_mixability(
            |g: &f64, o: &f64| square_loss(*g, *o, iv),
            &g,
            &fs,
            &w,
            8.0,
            &[0.0, 1.0],
            SLACK_TOLERANCE,
        )
        .unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn holder_equality_cases() {
        let f = vec![vec![2.5; 3]; 4];
        let u = [0.1, 0.2, 0.3, 0.4];
        let r = check_holder(&f, &u, &[1.0, 0.5, 2.0], &[0.2, 0.2, 0.6], 1e-12).unwrap();
        assert!(r.gap.abs() < 1e-12);
        let f = vec![vec![0.3], vec![1.7], vec![4.0], vec![0.9]];
        let r = check_holder(&f, &u, &[2.0], &[0.7], 1e-12).unwrap();
        assert!(r.gap.abs() < 1e-12);
        assert!(check_holder(&[vec![0.0]], &[1.0], &[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        let sq = |a: f64, b: f64| (a - b) * (a - b);
        assert_eq!(discrete_ot_bruteforce(&[0.3, 0.9], &[0.3, 0.9], sq).unwrap(), 0.0);
        assert_eq!(discrete_ot_bruteforce(&[0.0, 1.0], &[0.0, 1.0], sq).unwrap(), 0.0);
        assert_eq!(discrete_ot_bruteforce(&[0.0, 1.0], &[1.0, 0.0], sq).unwrap(), 0.0);
        assert!(matches!(
            discrete_ot_bruteforce(&[0.0; 9], &[0.0; 9], sq),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn lp_examples() {
        let sq = |a: f64, b: f64| (a - b) * (a - b);
        let c = discrete_ot_lp(&[0.1, 0.4], &[0.3, 0.7], &[0.1, 0.4], &[0.3, 0.7], sq).unwrap();
        assert!(c.abs() < 1e-15);
        let c = discrete_ot_lp(&[0.0, 1.0], &[0.25, 0.75], &[0.5], &[1.0], sq).unwrap();
        assert!((c - 0.25).abs() < 1e-15);
        assert!(matches!(
            discrete_ot_lp(&[0.0], &[0.5], &[0.0], &[1.0], sq),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mc_integration_examples() {
        let c = mc_integrate(|_| 0.7, McDomain::Sphere { dim: 3 }, 100, 1).unwrap();
        assert_eq!((c.estimate, c.std_error), (0.7, 0.0));
        let e = mc_integrate(|t| t[0] * t[0], McDomain::Sphere { dim: 2 }, 100_000, 2).unwrap();
        assert!((e.estimate - 0.5).abs() <= 3.0 * e.std_error, "{e:?}");
        let h = mc_integrate(|t| (t[2] > 0.0) as u8 as f64, McDomain::Sphere { dim: 3 }, 100_000, 3).unwrap();
        assert!((h.estimate - 0.5).abs() <= 3.0 * h.std_error);
        let g = mc_integrate(|t| t[0] * t[0], McDomain::Gaussian { dim: 1, scale: 2.0 }, 100_000, 4).unwrap();
        assert!((g.estimate - 4.0).abs() <= 4.0 * g.std_error);
        assert!(mc_integrate(|_| 0.0, McDomain::Sphere { dim: 2 }, 1, 0).is_err());
        let a = mc_integrate(|t| t[1], McDomain::Sphere { dim: 4 }, 1000, 9).unwrap();
        let b = mc_integrate(|t| t[1], McDomain::Sphere { dim: 4 }, 1000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn probe_finds_violations_above_the_rate() {
        let cfg = SharpnessConfig {
            trials: 20_000,
            ..Default::default()
        };
        for target in [
            SharpnessTarget::Square { domain: unit() },
            SharpnessTarget::Crps {
                domain: BoundedInterval::new(0.0, 3.0).unwrap(),
            },
        ] {
            let r = sharpness_probe(target, 4.0 * target.eta_mixable(), &cfg).unwrap();
            assert!(r.violation_found, "{r:?}");
            let w = r.witness.unwrap();
            assert!(w.combined_loss_lower_bound > w.combined_mixloss);
        }
    }

    #[test]
    fn probe_is_silent_at_the_rate() {
        let cfg = SharpnessConfig {
            trials: 5_000,
            ..Default::default()
        };
        let t = SharpnessTarget::Square { domain: unit() };
        let r = sharpness_probe(t, t.eta_mixable(), &cfg).unwrap();
        assert!(!r.violation_found);
        assert_eq!(r.trials_run, 5_000);
    }

    #[test]
    fn reports_serialise() {
        let t = SharpnessTarget::Ot1d { domain: unit() };
        let r = sharpness_probe(
            t,
            8.0,
            &SharpnessConfig {
                trials: 100,
                ..Default::default()
            },
        )
        .unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"OT1D\""));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn holder_gap_is_nonnegative(seed in 0u64..u64::MAX) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (nx, ny) = (rng.random_range(1..6), rng.random_range(1..6));
            let f: Vec<Vec<f64>> = (0..nx).map(|_| (0..ny).map(|_| rng.random_range(0.01..5.0)).collect()).collect();
            let u = random_simplex(&mut rng, nx);
            let v: Vec<f64> = (0..ny).map(|_| rng.random_range(0.0..2.0)).collect();
            let nu: Vec<f64> = (0..ny).map(|_| rng.random_range(0.0..2.0)).collect();
            prop_assert!(check_holder(&f, &u, &v, &nu, SLACK_TOLERANCE).unwrap().pass);
        }

        #[test]
        fn bruteforce_equals_sorted_matching(seed in 0u64..u64::MAX) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..=6);
            let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sq = |a: f64, b: f64| (a - b) * (a - b);
            let bf = discrete_ot_bruteforce(&xs, &ys, sq).unwrap();
            xs.sort_by(f64::total_cmp);
            ys.sort_by(f64::total_cmp);
            let sorted: f64 = xs.iter().zip(&ys).map(|(a, b)| sq(*a, *b)).sum::<f64>() / n as f64;
            prop_assert!((bf - sorted).abs() < 1e-12);
            let lp = discrete_ot_lp(&xs, &vec![1.0 / n as f64; n], &ys, &vec![1.0 / n as f64; n], sq).unwrap();
            prop_assert!(lp >= 0.0 && (lp - bf).abs() < 1e-10);
        }
    }
}
