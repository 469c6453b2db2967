//! Losses defined through one-dimensional projections: SCRPS, sliced
//! Wasserstein-2 and the energy distance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::crps::crps_atoms;
use super::transport::quantile_cost;
use crate::error::{Error, Result};
use crate::math::{derive_seed, mean_and_std_error, pairwise_sum};
use crate::types::{norm, Atoms1D, ParticleDistributionND, QuantileGrid1D};

/// A frozen set of unit directions, drawn uniformly from the sphere by
/// normalising standard Gaussian vectors. Direction `k` uses its own RNG
/// stream derived from the seed, so the set does not depend on thread count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereDirections {
    dim: usize,
    seed: u64,
    directions: Vec<Vec<f64>>,
}

impl SphereDirections {
    pub fn sample(dim: usize, count: usize, seed: u64) -> Result<Self> {
        if dim == 0 || count == 0 {
            return Err(Error::Configuration(
                "need a positive dimension and direction count".into(),
            ));
        }
        let directions = (0..count)
            .into_par_iter()
            .map(|k| sample_unit_vector(dim, derive_seed(seed, k as u64)))
            .collect();
        Ok(Self { dim, seed, directions })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }
}

pub(crate) fn sample_unit_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&v);
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let (estimate, std_error) = mean_and_std_error(values);
        Self { estimate, std_error }
    }
}

/// Surface area `S_{D-1} = 2 pi^{D/2} / Gamma(D/2)` of the unit sphere in `R^D`.
pub fn sphere_surface_area(dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::Domain("sphere dimension must be at least 1".into()));
    }
    let h = dim as f64 / 2.0;
    Ok(2.0 * std::f64::consts::PI.powf(h) / gamma(h))
}

/// Ratio `E / SCRPS`: `(D-1) S_{D-1} / S_{D-2}` for `D > 1`, and `2` for `D = 1`.
pub fn energy_scrps_constant(dim: usize) -> Result<f64> {
    match dim {
        0 => Err(Error::Domain("dimension must be at least 1".into())),
        1 => Ok(2.0),
        d => Ok((d as f64 - 1.0) * sphere_surface_area(d)? / sphere_surface_area(d - 1)?),
    }
}

fn check_ball(p: &ParticleDistributionND, radius: f64, what: &str) -> Result<()> {
    let m = p.max_norm();
    if m > radius * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "{what} has a particle of norm {m} outside the ball of radius {radius}"
        )));
    }
    Ok(())
}

fn check_pair(
    g: &ParticleDistributionND,
    o: &ParticleDistributionND,
    radius: f64,
    dirs: &SphereDirections,
) -> Result<()> {
    if g.dim() != o.dim() || g.dim() != dirs.dim() {
        return Err(Error::Incompatible(format!(
            "dimensions {} and {} with directions in dimension {}",
            g.dim(),
            o.dim(),
            dirs.dim()
        )));
    }
    check_ball(g, radius, "forecast")?;
    check_ball(o, radius, "outcome")
}

/// Per-direction sliced CRPS values `int (SCDF_g(theta, t) - SCDF_o(theta, t))^2 dt`.
pub fn scrps_slices(
    g: &ParticleDistributionND,
    o: &ParticleDistributionND,
    radius: f64,
    dirs: &SphereDirections,
) -> Result<Vec<f64>> {
    check_pair(g, o, radius, dirs)?;
    Ok(dirs
        .directions()
        .par_iter()
        .map(|theta| crps_atoms(&g.project(theta), &o.project(theta)))
        .collect())
}

/// SCRPS averaged over the frozen directions.
pub fn scrps(
    g: &ParticleDistributionND,
    o: &ParticleDistributionND,
    radius: f64,
    dirs: &SphereDirections,
) -> Result<f64> {
    let s = scrps_slices(g, o, radius, dirs)?;
    Ok(pairwise_sum(&s) / s.len() as f64)
}

/// SCRPS with the Monte Carlo standard error over directions.
pub fn scrps_estimate(
    g: &ParticleDistributionND,
    o: &ParticleDistributionND,
    radius: f64,
    dirs: &SphereDirections,
) -> Result<McEstimate> {
    Ok(McEstimate::from_samples(&scrps_slices(g, o, radius, dirs)?))
}

fn quantiles_of(a: &Atoms1D) -> QuantileGrid1D {
    QuantileGrid1D::from_atoms(a.values().iter().copied().zip(a.weights().iter().copied()).collect())
        .expect("projected particle weights form a distribution")
}

/// Per-direction squared 1D Wasserstein-2 distances between projections.
pub fn sw2_slices(
    g: &ParticleDistributionND,
    o: &ParticleDistributionND,
    radius: f64,
    dirs: &SphereDirections,
) -> Result<Vec<f64>> {
    check_pair(g, o, radius, dirs)?;
    Ok(dirs
        .directions()
        .par_iter()
        .map(|theta| {
            let qg = quantiles_of(&g.project(theta));
            let qo = quantiles_of(&o.project(theta));
            quantile_cost(&qg, &qo, |x, y| (x - y) * (x - y))
        })
        .collect())
}

/// Squared sliced Wasserstein-2 distance averaged over the frozen directions.
pub fn sw2_squared(
    g: &ParticleDistributionND,
    o: &ParticleDistributionND,
    radius: f64,
    dirs: &SphereDirections,
) -> Result<f64> {
    let s = sw2_slices(g, o, radius, dirs)?;
    Ok(pairwise_sum(&s) / s.len() as f64)
}

pub fn sw2_estimate(
    g: &ParticleDistributionND,
    o: &ParticleDistributionND,
    radius: f64,
    dirs: &SphereDirections,
) -> Result<McEstimate> {
    Ok(McEstimate::from_samples(&sw2_slices(g, o, radius, dirs)?))
}

/// `E(g, o) = 2 E|X - Y| - E|X - X'| - E|Y - Y'|` by exact weighted double sums.
pub fn energy_distance(g: &ParticleDistributionND, o: &ParticleDistributionND) -> Result<f64> {
    if g.dim() != o.dim() {
        return Err(Error::Incompatible(format!("dimensions {} and {}", g.dim(), o.dim())));
    }
    let cross = mean_distance(g, o);
    let gg = mean_distance(g, g);
    let oo = mean_distance(o, o);
    Ok((2.0 * cross - gg - oo).max(0.0))
}

fn mean_distance(a: &ParticleDistributionND, b: &ParticleDistributionND) -> f64 {
    let rows: Vec<f64> = a
        .points()
        .par_iter()
        .zip(a.weights())
        .map(|(x, &wx)| {
            let terms: Vec<f64> = b
                .points()
                .iter()
                .zip(b.weights())
                .map(|(y, &wy)| wy * dist(x, y))
                .collect();
            wx * pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows)
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::crps::crps;
    use crate::pointwise::BoundedInterval;
    use crate::types::GridDistribution1D;
    use rand::Rng;
    use std::f64::consts::PI;

    fn cloud(rng: &mut ChaCha8Rng, m: usize, dim: usize, scale: f64) -> ParticleDistributionND {
        let pts = (0..m)
            .map(|_| (0..dim).map(|_| rng.random_range(-scale..scale)).collect())
            .collect();
        ParticleDistributionND::equal_weights(pts).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_surface_area(1).unwrap() - 2.0).abs() < 1e-14);
        assert!((sphere_surface_area(2).unwrap() - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_surface_area(3).unwrap() - 4.0 * PI).abs() < 1e-13);
        assert!((energy_scrps_constant(2).unwrap() - PI).abs() < 1e-13);
        assert!((energy_scrps_constant(3).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_area_monte_carlo() {
        // Fraction of the cube [-1,1]^3 inside the unit ball is V = S_2 / 3 / 8.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400_000;
        let inside = (0..n)
            .filter(|_| {
                let v: [f64; 3] = [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                v.iter().map(|x| x * x).sum::<f64>() <= 1.0
            })
            .count();
        let s2 = 3.0 * 8.0 * inside as f64 / n as f64;
        assert!((s2 / sphere_surface_area(3).unwrap() - 1.0).abs() < 0.005);
    }

    #[test]
    fn directions_are_unit_and_deterministic() {
        let a = SphereDirections::sample(3, 100, 9).unwrap();
        let b = SphereDirections::sample(3, 100, 9).unwrap();
        assert_eq!(a, b);
        for d in a.directions() {
            assert!((norm(d) - 1.0).abs() < 1e-14);
        }
        assert_ne!(a, SphereDirections::sample(3, 100, 10).unwrap());
    }

    #[test]
    fn zero_on_identical_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = cloud(&mut rng, 12, 3, 0.5);
        let dirs = SphereDirections::sample(3, 64, 2).unwrap();
        assert_eq!(scrps(&g, &g, 1.0, &dirs).unwrap(), 0.0);
        assert_eq!(sw2_squared(&g, &g, 1.0, &dirs).unwrap(), 0.0);
        assert!(energy_distance(&g, &g).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dirac_pairs() {
        let x = ParticleDistributionND::dirac(vec![0.3, -0.1]).unwrap();
        let y = ParticleDistributionND::dirac(vec![-0.2, 0.4]).unwrap();
        let d = ((0.5f64).powi(2) * 2.0).sqrt();
        assert!((energy_distance(&x, &y).unwrap() - 2.0 * d).abs() < 1e-14);
        let dirs = SphereDirections::sample(2, 100_000, 7).unwrap();
        let s = scrps(&x, &y, 1.0, &dirs).unwrap();
        assert!((s / (2.0 * d / PI) - 1.0).abs() < 0.01, "{s}");
        let w = sw2_squared(&x, &y, 1.0, &dirs).unwrap();
        assert!((w / (d * d / 2.0) - 1.0).abs() < 0.01, "{w}");
    }

    #[test]
    fn one_dimensional_slices_reduce_to_crps_and_ot() {
        let iv = BoundedInterval::new(-1.0, 1.0).unwrap();
        let xs = [-0.5, 0.1, 0.7];
        let ys = [0.2, 0.4];
        let g = ParticleDistributionND::equal_weights(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let o = ParticleDistributionND::equal_weights(ys.iter().map(|&x| vec![x]).collect()).unwrap();
        let dirs = SphereDirections::sample(1, 16, 0).unwrap();
        let gd = GridDistribution1D::empirical(&xs, iv).unwrap();
        let od = GridDistribution1D::empirical(&ys, iv).unwrap();
        let c = crps(&gd, &od, iv).unwrap();
        assert!((scrps(&g, &o, 1.0, &dirs).unwrap() - c).abs() < 1e-14);
        let cost = crate::losses::transport::SquaredCost::new(iv);
        let ot = crate::losses::transport::ot1d_cost(&gd, &od, &cost, 4096).unwrap();
        assert!((sw2_squared(&g, &o, 1.0, &dirs).unwrap() - ot).abs() < 1e-14);
    }

    #[test]
    fn ball_is_enforced() {
        let x = ParticleDistributionND::dirac(vec![0.9, 0.9]).unwrap();
        let dirs = SphereDirections::sample(2, 4, 0).unwrap();
        assert!(matches!(scrps(&x, &x, 1.0, &dirs), Err(Error::Domain(_))));
    }

    #[test]
    fn symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dirs = SphereDirections::sample(2, 256, 3).unwrap();
        for _ in 0..20 {
            let g = cloud(&mut rng, 7, 2, 0.7);
            let o = cloud(&mut rng, 5, 2, 0.7);
            let a = scrps(&g, &o, 1.0, &dirs).unwrap();
            let b = scrps(&o, &g, 1.0, &dirs).unwrap();
            assert!((a - b).abs() < 1e-10);
            let a = sw2_squared(&g, &o, 1.0, &dirs).unwrap();
            let b = sw2_squared(&o, &g, 1.0, &dirs).unwrap();
            assert!((a - b).abs() < 1e-10);
            let a = energy_distance(&g, &o).unwrap();
            let b = energy_distance(&o, &g).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn energy_matches_scaled_scrps_in_the_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dirs = SphereDirections::sample(2, 100_000, 12).unwrap();
        let g = cloud(&mut rng, 20, 2, 0.7);
        let o = cloud(&mut rng, 20, 2, 0.7);
        let e = energy_distance(&g, &o).unwrap();
        let s = scrps(&g, &o, 1.0, &dirs).unwrap();
        assert!((e / (PI * s) - 1.0).abs() < 0.01, "{e} {s}");
    }
}
