//! Characteristic function discrepancy and maximum mean discrepancy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{derive_seed, pairwise_sum};
use crate::types::{normalize_simplex, ParticleDistributionND};

/// Discretised weighting `u(t) d mu(t)` over frequency nodes; weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralWeighting {
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl IntegralWeighting {
    pub fn new(nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::Configuration(
                "weighting needs matching nonempty nodes and weights".into(),
            ));
        }
        let d = nodes[0].len();
        if d == 0 || nodes.iter().any(|n| n.len() != d || n.iter().any(|x| !x.is_finite())) {
            return Err(Error::Configuration("frequency nodes must share a dimension".into()));
        }
        let sum: f64 = pairwise_sum(&weights);
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Configuration(format!("weighting sums to {sum}, expected 1")));
        }
        let weights = normalize_simplex(weights, "weighting")?;
        Ok(Self { nodes, weights })
    }

    /// `count` equally weighted frequencies drawn from `N(0, scale^2 I)`.
    pub fn gaussian(dim: usize, count: usize, scale: f64, seed: u64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Configuration(format!(
                "frequency scale {scale} must be positive"
            )));
        }
        Self::sampled(dim, count, seed, |rng| {
            (0..dim)
                .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng))
                .collect()
        })
    }

    fn sampled(dim: usize, count: usize, seed: u64, draw: impl Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync) -> Result<Self> {
        if dim == 0 || count == 0 {
            return Err(Error::Configuration("need a positive dimension and node count".into()));
        }
        let nodes = (0..count)
            .into_par_iter()
            .map(|k| draw(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64))))
            .collect();
        Ok(Self {
            nodes,
            weights: vec![1.0 / count as f64; count],
        })
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Per-node squared gaps `|phi_g(t) - phi_o(t)|^2`.
pub fn cfd_terms(
    g: &ParticleDistributionND,
    o: &ParticleDistributionND,
    weighting: &IntegralWeighting,
) -> Result<Vec<f64>> {
    if g.dim() != o.dim() || g.dim() != weighting.dim() {
        return Err(Error::Incompatible(format!(
            "dimensions {} and {} with frequencies in dimension {}",
            g.dim(),
            o.dim(),
            weighting.dim()
        )));
    }
    Ok(weighting
        .nodes()
        .par_iter()
        .map(|t| (g.characteristic_function(t) - o.characteristic_function(t)).norm_sqr())
        .collect())
}

/// `CFD(g, o) = sum_k weight_k |phi_g(t_k) - phi_o(t_k)|^2`.
pub fn cfd(g: &ParticleDistributionND, o: &ParticleDistributionND, weighting: &IntegralWeighting) -> Result<f64> {
    let terms = cfd_terms(g, o, weighting)?;
    let weighted: Vec<f64> = terms.iter().zip(weighting.weights()).map(|(a, w)| a * w).collect();
    Ok(pairwise_sum(&weighted))
}

/// Translation-invariant kernels `k(x, y) = psi(x - y)` with a known spectral measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    /// `a exp(-|x - y|^2 / (2 s^2))`; spectral measure `a N(0, s^{-2} I)`.
    Gaussian {
        bandwidth: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `a exp(-|x - y| / s)` (Euclidean norm); spectral measure `a` times the
    /// multivariate Cauchy law with scale `1/s`.
    Laplacian {
        bandwidth: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Kernel {
    pub fn gaussian(bandwidth: f64) -> Self {
        Kernel::Gaussian {
            bandwidth,
            amplitude: 1.0,
        }
    }

    pub fn laplacian(bandwidth: f64) -> Self {
        Kernel::Laplacian {
            bandwidth,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (s, a) = self.parameters();
        if !(s > 0.0 && s.is_finite() && a > 0.0 && a.is_finite()) {
            return Err(Error::Configuration(format!(
                "kernel bandwidth {s} and amplitude {a} must be positive"
            )));
        }
        Ok(())
    }

    fn parameters(&self) -> (f64, f64) {
        match *self {
            Kernel::Gaussian { bandwidth, amplitude } | Kernel::Laplacian { bandwidth, amplitude } => {
                (bandwidth, amplitude)
            }
        }
    }

    /// Total mass of the spectral measure, `psi(0)`.
    pub fn spectral_mass(&self) -> f64 {
        self.parameters().1
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        match *self {
            Kernel::Gaussian { bandwidth, amplitude } => amplitude * (-sq / (2.0 * bandwidth * bandwidth)).exp(),
            Kernel::Laplacian { bandwidth, amplitude } => amplitude * (-sq.sqrt() / bandwidth).exp(),
        }
    }

    /// `count` frequencies from the normalised spectral measure, equally
    /// weighted, so that `MMD^2 = spectral_mass * CFD` under this weighting.
    pub fn spectral_weighting(&self, dim: usize, count: usize, seed: u64) -> Result<IntegralWeighting> {
        self.validate()?;
        match *self {
            Kernel::Gaussian { bandwidth, .. } => IntegralWeighting::gaussian(dim, count, 1.0 / bandwidth, seed),
            Kernel::Laplacian { bandwidth, .. } => IntegralWeighting::sampled(dim, count, seed, |rng| {
                let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                let chi: f64 = StandardNormal.sample(rng);
                let c = 1.0 / (bandwidth * chi.abs().max(1e-300));
                z.into_iter().map(|v| v * c).collect()
            }),
        }
    }
}

/// `MMD^2_k(g, o) = E k(X, X') - 2 E k(X, Y) + E k(Y, Y')` by exact double sums.
pub fn mmd_squared(g: &ParticleDistributionND, o: &ParticleDistributionND, kernel: &Kernel) -> Result<f64> {
    kernel.validate()?;
    if g.dim() != o.dim() {
        return Err(Error::Incompatible(format!("dimensions {} and {}", g.dim(), o.dim())));
    }
    let gg = mean_kernel(g, g, kernel);
    let go = mean_kernel(g, o, kernel);
    let oo = mean_kernel(o, o, kernel);
    Ok((gg - 2.0 * go + oo).max(0.0))
}

fn mean_kernel(a: &ParticleDistributionND, b: &ParticleDistributionND, k: &Kernel) -> f64 {
    let rows: Vec<f64> = a
        .points()
        .par_iter()
        .zip(a.weights())
        .map(|(x, &wx)| {
            let terms: Vec<f64> = b
                .points()
                .iter()
                .zip(b.weights())
                .map(|(y, &wy)| wy * k.eval(x, y))
                .collect();
            wx * pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn dirac(x: &[f64]) -> ParticleDistributionND {
        ParticleDistributionND::dirac(x.to_vec()).unwrap()
    }

    fn cloud(rng: &mut ChaCha8Rng, m: usize, dim: usize, shift: f64) -> ParticleDistributionND {
        let pts = (0..m)
            .map(|_| (0..dim).map(|_| shift + rng.random_range(-1.0..1.0)).collect())
            .collect();
        ParticleDistributionND::equal_weights(pts).unwrap()
    }

    #[test]
    fn weighting_validation() {
        assert!(IntegralWeighting::new(vec![vec![0.0]], vec![0.5]).is_err());
        assert!(IntegralWeighting::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
        assert!(IntegralWeighting::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn cfd_examples() {
        let w = IntegralWeighting::gaussian(1, 100_000, 1.0, 3).unwrap();
        let a = dirac(&[0.0]);
        assert_eq!(cfd(&a, &a, &w).unwrap(), 0.0);
        let d = 1.3;
        let v = cfd(&a, &dirac(&[d]), &w).unwrap();
        let exact = 2.0 * (1.0 - (-d * d / 2.0f64).exp());
        assert!((v / exact - 1.0).abs() < 0.01, "{v} {exact}");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w2 = IntegralWeighting::gaussian(2, 500, 2.0, 5).unwrap();
        for _ in 0..20 {
            let g = cloud(&mut rng, 5, 2, 0.0);
            let o = cloud(&mut rng, 4, 2, 3.0);
            let v = cfd(&g, &o, &w2).unwrap();
            assert!((0.0..=4.0).contains(&v));
            assert!((v - cfd(&o, &g, &w2).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn mmd_examples() {
        let k = Kernel::gaussian(0.7);
        let x = dirac(&[0.1, 0.2]);
        let y = dirac(&[0.5, -0.3]);
        assert_eq!(mmd_squared(&x, &x, &k).unwrap(), 0.0);
        let v = mmd_squared(&x, &y, &k).unwrap();
        assert!((v - (2.0 - 2.0 * k.eval(&[0.1, 0.2], &[0.5, -0.3]))).abs() < 1e-15);
    }

    #[test]
    fn mmd_matches_spectral_cfd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kernel in [Kernel::gaussian(1.0), Kernel::laplacian(1.5)] {
            let w = kernel.spectral_weighting(2, 100_000, 17).unwrap();
            let g = cloud(&mut rng, 10, 2, 0.0);
            let o = cloud(&mut rng, 10, 2, 0.8);
            let m = mmd_squared(&g, &o, &kernel).unwrap();
            let c = kernel.spectral_mass() * cfd(&g, &o, &w).unwrap();
            assert!((m / c - 1.0).abs() < 0.02, "{kernel:?}: {m} {c}");
        }
    }

    #[test]
    fn kernel_json() {
        let k: Kernel = serde_json::from_str(r#"{"type":"gaussian","bandwidth":0.5}"#).unwrap();
        assert_eq!(k, Kernel::gaussian(0.5));
        assert!(Kernel::gaussian(-1.0).validate().is_err());
    }
}
