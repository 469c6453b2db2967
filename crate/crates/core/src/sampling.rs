//! Seeded generators of random forecasts, outcomes and weights.

use rand::Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};

use crate::error::Result;
use crate::pointwise::BoundedInterval;
use crate::types::{canonical_grid, DensityGrid, GridCdfND, GridDistribution1D, ParticleDistributionND, WeightVector};

/// Dirichlet(1, ..., 1) probabilities.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> WeightVector {
    WeightVector::new(random_simplex(rng, n)).expect("Dirichlet draw lies on the simplex")
}

/// Step CDF with `atoms` random atoms in `domain`.
pub fn random_step_cdf<R: Rng + ?Sized>(
    rng: &mut R,
    domain: BoundedInterval,
    atoms: usize,
) -> Result<GridDistribution1D> {
    let xs: Vec<f64> = (0..atoms.max(1))
        .map(|_| rng.random_range(domain.l()..=domain.r()))
        .collect();
    let w = random_simplex(rng, xs.len());
    GridDistribution1D::from_weighted_samples(&xs, &w, domain)
}

/// Step CDF on a shared grid of `points` nodes: random nonnegative jumps at the nodes.
pub fn random_step_cdf_on_grid<R: Rng + ?Sized>(rng: &mut R, grid: &[f64]) -> Result<GridDistribution1D> {
    let jumps = random_sparse_simplex(rng, grid.len());
    let mut acc = 0.0;
    let cdf = jumps
        .iter()
        .map(|j| {
            acc += j;
            acc.min(1.0)
        })
        .collect();
    GridDistribution1D::with_interpolation(grid.to_vec(), fix_end(cdf), Default::default())
}

fn fix_end(mut cdf: Vec<f64>) -> Vec<f64> {
    *cdf.last_mut().unwrap() = 1.0;
    cdf
}

/// Simplex vector with roughly a third of the entries zeroed, never all.
fn random_sparse_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.35) { 0.0 } else { Exp1.sample(rng) })
        .collect();
    if e.iter().all(|&v| v == 0.0) {
        e[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Random step CDF on the equally spaced grid of `points` nodes over `domain`.
pub fn random_grid_cdf<R: Rng + ?Sized>(
    rng: &mut R,
    domain: BoundedInterval,
    points: usize,
) -> Result<GridDistribution1D> {
    random_step_cdf_on_grid(rng, &canonical_grid(domain, points))
}

/// Dirac outcome at a uniform point of `domain`.
pub fn random_dirac<R: Rng + ?Sized>(rng: &mut R, domain: BoundedInterval) -> Result<GridDistribution1D> {
    GridDistribution1D::dirac(rng.random_range(domain.l()..=domain.r()), domain)
}

/// Uniform point in the ball of radius `radius` in `R^dim`.
pub fn random_point_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = z.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    z.into_iter().map(|v| v * r / n).collect()
}

/// Cloud of `n` uniform points in the ball with Dirichlet weights.
pub fn random_particles<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n: usize,
    radius: f64,
) -> Result<ParticleDistributionND> {
    let points = (0..n.max(1)).map(|_| random_point_in_ball(rng, dim, radius)).collect();
    let w = random_simplex(rng, n.max(1));
    ParticleDistributionND::with_radius(points, w, radius)
}

/// Random density against `template`'s base measure, bounded by `bound`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, template: &DensityGrid, bound: f64) -> Result<DensityGrid> {
    let mass = template.mass();
    let total: f64 = mass.iter().sum();
    let u: Vec<f64> = (0..mass.len()).map(|_| rng.random::<f64>()).collect();
    let z: f64 = u.iter().zip(mass).map(|(a, m)| a * m).sum();
    let raw: Vec<f64> = u.iter().map(|a| a / z).collect();
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let flat = 1.0 / total;
    let alpha = if peak <= bound {
        1.0
    } else {
        ((bound - flat) / (peak - flat)).clamp(0.0, 1.0)
    };
    let density = raw.iter().map(|r| alpha * r + (1.0 - alpha) * flat).collect();
    template.with_density(density)
}

/// Independent product of random step marginals on the tensor grid of `points` nodes per axis.
pub fn random_grid_cdf_nd<R: Rng + ?Sized>(
    rng: &mut R,
    domain: &[BoundedInterval],
    points: usize,
) -> Result<GridCdfND> {
    let marginals = domain
        .iter()
        .map(|iv| random_grid_cdf(rng, *iv, points))
        .collect::<Result<Vec<_>>>()?;
    GridCdfND::product(&marginals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_produce_valid_objects() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let iv = BoundedInterval::new(-1.0, 2.0).unwrap();
        for _ in 0..200 {
            let g = random_grid_cdf(&mut rng, iv, 17).unwrap();
            assert_eq!(g.support_bounds(), (-1.0, 2.0));
            random_step_cdf(&mut rng, iv, 5).unwrap();
            let p = random_particles(&mut rng, 3, 7, 2.0).unwrap();
            assert!(p.max_norm() <= 2.0);
            let t = DensityGrid::new(
                vec![0.0, 1.0, 2.0],
                vec![0.5, 1.0, 2.0],
                vec![0.4, 0.4, 0.2],
                Default::default(),
            )
            .unwrap();
            let d = random_density(&mut rng, &t, 0.5).unwrap();
            assert!(d.max_density() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let iv = BoundedInterval::unit();
        let a = random_grid_cdf(&mut ChaCha8Rng::seed_from_u64(1), iv, 9).unwrap();
        let b = random_grid_cdf(&mut ChaCha8Rng::seed_from_u64(1), iv, 9).unwrap();
        assert_eq!(a, b);
    }
}
