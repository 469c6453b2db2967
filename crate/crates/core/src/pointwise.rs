//! Scalar and complex pointwise losses, their substitution functions and a
//! numerical exp-concavity check.
//!
//! Integral losses are built by applying these pointwise rules at every
//! point of a discretised space.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::WeightVector;

/// Step of the central finite differences used by [`expconcavity_hessian_check`].
pub const FD_STEP: f64 = 1e-4;
/// Smallest admissible eigenvalue of `H - eta * g g^T`.
pub const EIGEN_TOLERANCE: f64 = 1e-6;
/// Slack allowed when testing membership of the closed unit disc.
const DISC_TOLERANCE: f64 = 1e-12;

/// Closed interval `[l, r]` with `l < r`. Serialised as `[l, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct BoundedInterval {
    l: f64,
    r: f64,
}

impl BoundedInterval {
    pub fn new(l: f64, r: f64) -> Result<Self> {
        if !(l.is_finite() && r.is_finite() && l < r) {
            return Err(Error::Domain(format!("[{l}, {r}] is not a bounded interval")));
        }
        Ok(Self { l, r })
    }

    pub fn unit() -> Self {
        Self { l: 0.0, r: 1.0 }
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn width(&self) -> f64 {
        self.r - self.l
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.l + self.r)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.l && x <= self.r
    }

    /// Errors unless `x` lies in the interval.
    pub fn check(&self, x: f64, what: &str) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{what} {x} outside [{}, {}]", self.l, self.r)))
        }
    }
}

impl TryFrom<[f64; 2]> for BoundedInterval {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }
}

impl From<BoundedInterval> for [f64; 2] {
    fn from(iv: BoundedInterval) -> Self {
        [iv.l, iv.r]
    }
}

/// Learning rates at which a loss is mixable and exp-concave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaRate {
    pub eta_mixable: f64,
    pub eta_expconcave: f64,
}

impl EtaRate {
    pub fn new(eta_mixable: f64, eta_expconcave: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(eta_mixable) || !ok(eta_expconcave) {
            return Err(Error::Configuration(format!(
                "learning rates must be positive, got ({eta_mixable}, {eta_expconcave})"
            )));
        }
        if eta_expconcave > eta_mixable {
            return Err(Error::Configuration(format!(
                "exp-concavity rate {eta_expconcave} exceeds mixability rate {eta_mixable}"
            )));
        }
        Ok(Self {
            eta_mixable,
            eta_expconcave,
        })
    }

    /// Rates of the square loss on `iv`: `2/(r-l)^2` and `1/(2(r-l)^2)`.
    pub fn square_loss(iv: BoundedInterval) -> Self {
        let w2 = iv.width() * iv.width();
        Self {
            eta_mixable: 2.0 / w2,
            eta_expconcave: 0.5 / w2,
        }
    }

    /// Both rates divided by `factor` (the rates of `factor * loss`).
    pub fn scaled_down(self, factor: f64) -> Self {
        Self {
            eta_mixable: self.eta_mixable / factor,
            eta_expconcave: self.eta_expconcave / factor,
        }
    }
}

/// `(g - o)^2` for `g, o` in `iv`.
pub fn square_loss(g: f64, o: f64, iv: BoundedInterval) -> Result<f64> {
    iv.check(g, "forecast")?;
    iv.check(o, "outcome")?;
    Ok((g - o) * (g - o))
}

/// Substitution of the square loss on `iv`, the aggregated forecast at
/// rate `2/(r-l)^2`:
///
/// `(r+l)/2 + (r-l)/4 * log( sum w exp(-2((r-g)/(r-l))^2) / sum w exp(-2((g-l)/(r-l))^2) )`,
///
/// evaluated with log-sum-exp and clamped to `iv`.
pub fn square_substitution(forecasts: &[f64], w: &WeightVector, iv: BoundedInterval) -> Result<f64> {
    if forecasts.len() != w.len() {
        return Err(Error::Size(format!(
            "{} forecasts for {} weights",
            forecasts.len(),
            w.len()
        )));
    }
    for &g in forecasts {
        iv.check(g, "forecast")?;
    }
    Ok(square_substitution_raw(forecasts, w.as_slice(), iv.l, iv.r))
}

/// Unchecked kernel of [`square_substitution`]; zero weights are skipped.
#[inline]
pub(crate) fn square_substitution_raw(values: &[f64], weights: &[f64], l: f64, r: f64) -> f64 {
    let width = r - l;
    let mut max_a = f64::NEG_INFINITY;
    let mut max_b = f64::NEG_INFINITY;
    for (&g, &w) in values.iter().zip(weights) {
        if w > 0.0 {
            let (a, b) = exponents(g, l, r, width);
            max_a = max_a.max(a);
            max_b = max_b.max(b);
        }
    }
    let mut sa = 0.0;
    let mut sb = 0.0;
    for (&g, &w) in values.iter().zip(weights) {
        if w > 0.0 {
            let (a, b) = exponents(g, l, r, width);
            sa += w * (a - max_a).exp();
            sb += w * (b - max_b).exp();
        }
    }
    let log_ratio = (max_a + sa.ln()) - (max_b + sb.ln());
    (0.5 * (l + r) + 0.25 * width * log_ratio).clamp(l, r)
}

#[inline]
fn exponents(g: f64, l: f64, r: f64, width: f64) -> (f64, f64) {
    let u = (r - g) / width;
    let v = (g - l) / width;
    (-2.0 * u * u, -2.0 * v * v)
}

/// `-log g(k)` for a probability vector `g` and a 0-based outcome index `k`.
///
/// A zero probability on the outcome is reported as [`Error::InfiniteLoss`].
pub fn log_loss(g: &[f64], k: usize) -> Result<f64> {
    check_probability_vector(g)?;
    if k >= g.len() {
        return Err(Error::Domain(format!(
            "outcome {k} out of range for {} classes",
            g.len()
        )));
    }
    if g[k] <= 0.0 {
        return Err(Error::InfiniteLoss { outcome: k });
    }
    Ok(-g[k].ln())
}

/// Mixture `sum_n w^n g^n` of probability vectors.
pub fn log_substitution(forecasts: &[Vec<f64>], w: &WeightVector) -> Result<Vec<f64>> {
    if forecasts.len() != w.len() || forecasts.is_empty() {
        return Err(Error::Size(format!(
            "{} forecasts for {} weights",
            forecasts.len(),
            w.len()
        )));
    }
    let k = forecasts[0].len();
    for g in forecasts {
        if g.len() != k {
            return Err(Error::Incompatible("forecasts have different class counts".into()));
        }
        check_probability_vector(g)?;
    }
    let mut out = vec![0.0; k];
    for (g, wn) in forecasts.iter().zip(w.iter()) {
        for (o, p) in out.iter_mut().zip(g) {
            *o += wn * p;
        }
    }
    Ok(out)
}

fn check_probability_vector(g: &[f64]) -> Result<()> {
    if g.is_empty() || g.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Domain("forecast is not a probability vector".into()));
    }
    let s: f64 = g.iter().sum();
    if (s - 1.0).abs() > crate::types::RENORMALIZE_TOLERANCE {
        return Err(Error::Domain(format!("forecast probabilities sum to {s}")));
    }
    Ok(())
}

/// `|z - z'|^2` for `z, z'` in the closed unit disc.
pub fn complex_square_loss(z: Complex64, zp: Complex64) -> Result<f64> {
    for (v, what) in [(z, "forecast"), (zp, "outcome")] {
        if v.norm() > 1.0 + DISC_TOLERANCE {
            return Err(Error::Domain(format!("{what} {v} outside the unit disc")));
        }
    }
    Ok((z - zp).norm_sqr())
}

/// Componentwise square-loss substitution on `[-1, 1]` for the real and
/// imaginary parts; aggregates at rate `1/4`.
pub fn complex_square_substitution(forecasts: &[Complex64], w: &WeightVector) -> Result<Complex64> {
    if forecasts.len() != w.len() {
        return Err(Error::Size(format!(
            "{} forecasts for {} weights",
            forecasts.len(),
            w.len()
        )));
    }
    if let Some(z) = forecasts.iter().find(|z| z.re.abs() > 1.0 || z.im.abs() > 1.0) {
        return Err(Error::Domain(format!("forecast {z} outside the square [-1, 1]^2")));
    }
    let re: Vec<f64> = forecasts.iter().map(|z| z.re).collect();
    let im: Vec<f64> = forecasts.iter().map(|z| z.im).collect();
    Ok(Complex64::new(
        square_substitution_raw(&re, w.as_slice(), -1.0, 1.0),
        square_substitution_raw(&im, w.as_slice(), -1.0, 1.0),
    ))
}

/// A loss `lambda(g, o)` that is twice differentiable in the forecast `g` in `R^d`.
pub trait DifferentiableLoss {
    fn dim(&self) -> usize;
    fn value(&self, g: &[f64], o: &[f64]) -> f64;
}

/// Square loss on an interval, viewed as a function of a 1-vector.
#[derive(Debug, Clone, Copy)]
pub struct SquareLoss;

impl DifferentiableLoss for SquareLoss {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, g: &[f64], o: &[f64]) -> f64 {
        (g[0] - o[0]).powi(2)
    }
}

/// Complex square loss through `z -> (Re z, Im z)`.
#[derive(Debug, Clone, Copy)]
pub struct ComplexSquareLoss;

impl DifferentiableLoss for ComplexSquareLoss {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, g: &[f64], o: &[f64]) -> f64 {
        (g[0] - o[0]).powi(2) + (g[1] - o[1]).powi(2)
    }
}

/// Smallest eigenvalue of `H - eta * grad grad^T` at `(g, o)`, with the
/// Hessian and gradient of the loss in `g` taken by central differences.
pub fn expconcavity_min_eigenvalue(loss: &dyn DifferentiableLoss, eta: f64, g: &[f64], o: &[f64]) -> f64 {
    let d = loss.dim();
    let h = FD_STEP;
    let f = |delta: &[(usize, f64)]| {
        let mut x = g.to_vec();
        for &(i, s) in delta {
            x[i] += s;
        }
        loss.value(&x, o)
    };
    let f0 = f(&[]);
    let grad: Vec<f64> = (0..d).map(|i| (f(&[(i, h)]) - f(&[(i, -h)])) / (2.0 * h)).collect();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let hij = if i == j {
                (f(&[(i, h)]) - 2.0 * f0 + f(&[(i, -h)])) / (h * h)
            } else {
                (f(&[(i, h), (j, h)]) - f(&[(i, h), (j, -h)]) - f(&[(i, -h), (j, h)]) + f(&[(i, -h), (j, -h)]))
                    / (4.0 * h * h)
            };
            let v = hij - eta * grad[i] * grad[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SymmetricEigen::new(m).eigenvalues.min()
}

/// True iff `H - eta * grad grad^T` is positive semidefinite up to [`EIGEN_TOLERANCE`],
/// the second-order condition for `exp(-eta * loss)` to be concave at `g`.
pub fn expconcavity_hessian_check(loss: &dyn DifferentiableLoss, eta: f64, g: &[f64], o: &[f64]) -> bool {
    expconcavity_min_eigenvalue(loss, eta, g, o) >= -EIGEN_TOLERANCE
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> BoundedInterval {
        BoundedInterval::unit()
    }

    fn mix_slack(gbar: f64, forecasts: &[f64], w: &[f64], eta: f64, o: f64) -> f64 {
        let lhs = (-eta * (gbar - o).powi(2)).exp();
        let rhs: f64 = forecasts
            .iter()
            .zip(w)
            .map(|(g, wn)| wn * (-eta * (g - o).powi(2)).exp())
            .sum();
        lhs - rhs
    }

    #[test]
    fn interval_validation_and_json() {
        assert!(BoundedInterval::new(1.0, 1.0).is_err());
        assert!(BoundedInterval::new(0.0, f64::INFINITY).is_err());
        let iv: BoundedInterval = serde_json::from_str("[0, 2]").unwrap();
        assert_eq!(iv.width(), 2.0);
        assert_eq!(serde_json::to_string(&iv).unwrap(), "[0.0,2.0]");
        assert!(serde_json::from_str::<BoundedInterval>("[2, 0]").is_err());
    }

    #[test]
    fn eta_rate_ordering() {
        assert!(EtaRate::new(1.0, 2.0).is_err());
        assert!(EtaRate::new(0.0, 0.0).is_err());
        let r = EtaRate::square_loss(unit());
        assert_eq!((r.eta_mixable, r.eta_expconcave), (2.0, 0.5));
    }

    #[test]
    fn square_loss_examples() {
        assert_eq!(square_loss(0.5, 0.5, unit()).unwrap(), 0.0);
        assert_eq!(square_loss(0.0, 1.0, unit()).unwrap(), 1.0);
        assert!((square_loss(0.3, 0.7, unit()).unwrap() - 0.16).abs() < 1e-15);
        assert!(matches!(square_loss(1.5, 0.0, unit()), Err(Error::Domain(_))));
    }

    #[test]
    fn square_substitution_single_and_symmetric() {
        let w1 = WeightVector::uniform(1).unwrap();
        for g in [0.0, 0.13, 0.5, 0.99, 1.0] {
            assert!((square_substitution(&[g], &w1, unit()).unwrap() - g).abs() < 1e-14);
        }
        let w2 = WeightVector::uniform(2).unwrap();
        let iv = BoundedInterval::new(-3.0, 5.0).unwrap();
        let v = square_substitution(&[-1.0, 3.0], &w2, iv).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn square_substitution_pinned_instance() {
        let w = WeightVector::new(vec![0.3, 0.7]).unwrap();
        let v = square_substitution(&[0.2, 0.8], &w, unit()).unwrap();
        let num = 0.3 * (-2.0f64 * 0.64).exp() + 0.7 * (-2.0f64 * 0.04).exp();
        let den = 0.3 * (-2.0f64 * 0.04).exp() + 0.7 * (-2.0f64 * 0.64).exp();
        let expected = 0.5 + 0.25 * (num / den).ln();
        assert!((v - expected).abs() < 1e-14);
        for k in 0..1000 {
            let o = k as f64 / 999.0;
            assert!(mix_slack(v, &[0.2, 0.8], w.as_slice(), 2.0, o) >= -1e-10);
        }
    }

    #[test]
    fn square_substitution_rejects_outside() {
        let w = WeightVector::uniform(2).unwrap();
        assert!(square_substitution(&[0.5, 1.2], &w, unit()).is_err());
        assert!(square_substitution(&[0.5], &w, unit()).is_err());
    }

    #[test]
    fn square_substitution_survives_tiny_weights() {
        let w = WeightVector::new(vec![1.0 - 1e-300, 1e-300]).unwrap();
        let v = square_substitution(&[0.25, 0.75], &w, unit()).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn log_loss_examples() {
        assert_eq!(log_loss(&[1.0, 0.0, 0.0], 0).unwrap(), 0.0);
        assert!((log_loss(&[0.25; 4], 2).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!((log_loss(&[0.1, 0.9], 0).unwrap() - 10f64.ln()).abs() < 1e-12);
        assert!(matches!(
            log_loss(&[1.0, 0.0], 1),
            Err(Error::InfiniteLoss { outcome: 1 })
        ));
        assert!(log_loss(&[0.5, 0.6], 0).is_err());
    }

    #[test]
    fn log_substitution_examples() {
        let w = WeightVector::new(vec![0.25, 0.75]).unwrap();
        let out = log_substitution(&[vec![1.0, 0.0], vec![0.0, 1.0]], &w).unwrap();
        assert_eq!(out, vec![0.25, 0.75]);
        let same = log_substitution(&[vec![0.2, 0.8], vec![0.2, 0.8]], &w).unwrap();
        assert!((same[0] - 0.2).abs() < 1e-15 && (same[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn complex_loss_examples() {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(complex_square_loss(i, i).unwrap(), 0.0);
        assert_eq!(complex_square_loss(one, -one).unwrap(), 4.0);
        assert!((complex_square_loss(i, one).unwrap() - 2.0).abs() < 1e-15);
        assert!(complex_square_loss(Complex64::new(0.9, 0.9), one).is_err());
    }

    #[test]
    fn complex_substitution_examples() {
        let w = WeightVector::uniform(2).unwrap();
        let z = Complex64::new(0.3, -0.4);
        let single = complex_square_substitution(&[z], &WeightVector::uniform(1).unwrap()).unwrap();
        assert!((single - z).norm() < 1e-14);
        let sym = complex_square_substitution(&[z, -z], &w).unwrap();
        assert!(sym.norm() < 1e-14);
        let zs = [Complex64::new(0.5, 0.5), Complex64::new(-0.3, 0.1)];
        let zbar = complex_square_substitution(&zs, &w).unwrap();
        for a in 0..64 {
            for b in 0..64 {
                let o = Complex64::new(-1.0 + 2.0 * a as f64 / 63.0, -1.0 + 2.0 * b as f64 / 63.0);
                if o.norm() > 1.0 {
                    continue;
                }
                let lhs = (-0.25 * (zbar - o).norm_sqr()).exp();
                let rhs: f64 = zs.iter().map(|z| 0.5 * (-0.25 * (z - o).norm_sqr()).exp()).sum();
                assert!(lhs - rhs >= -1e-10);
            }
        }
    }

    #[test]
    fn hessian_check_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (g, o) = (rng.random::<f64>(), rng.random::<f64>());
            assert!(expconcavity_hessian_check(&SquareLoss, 0.5, &[g], &[o]));
        }
        assert!(!expconcavity_hessian_check(&SquareLoss, 10.0, &[0.0], &[1.0]));
        for _ in 0..200 {
            let z = random_disc(&mut rng);
            let zp = random_disc(&mut rng);
            assert!(expconcavity_hessian_check(&ComplexSquareLoss, 0.125, &z, &zp));
        }
    }

    fn random_disc(rng: &mut ChaCha8Rng) -> [f64; 2] {
        loop {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            if x[0] * x[0] + x[1] * x[1] <= 1.0 {
                return x;
            }
        }
    }

    #[test]
    fn hessian_check_agrees_with_chord_concavity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = 1e-3;
        for &eta in &[0.125, 0.25, 0.5, 1.0, 2.0] {
            for _ in 0..50 {
                let o = random_disc(&mut rng);
                let g = random_disc(&mut rng);
                let eig = expconcavity_min_eigenvalue(&ComplexSquareLoss, eta, &g, &o);
                let f = |x: &[f64]| (-eta * ComplexSquareLoss.value(x, &o)).exp();
                let mut worst = f64::INFINITY;
                for _ in 0..100 {
                    let dir = random_disc(&mut rng);
                    let a = [g[0] + s * dir[0], g[1] + s * dir[1]];
                    let b = [g[0] - s * dir[0], g[1] - s * dir[1]];
                    worst = worst.min(f(&g) - 0.5 * (f(&a) + f(&b)));
                }
                if expconcavity_hessian_check(&ComplexSquareLoss, eta, &g, &o) {
                    assert!(worst >= -1e-8, "eta={eta} g={g:?} o={o:?}");
                } else if eig < -0.1 {
                    assert!(worst < 0.0, "eta={eta} g={g:?} o={o:?}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn square_substitution_is_mixable(
            raw in prop::collection::vec((0.0f64..1.0, 0.01f64..1.0), 1..6),
            l in -5.0f64..5.0,
            width in 0.1f64..10.0,
        ) {
            let iv = BoundedInterval::new(l, l + width).unwrap();
            let g: Vec<f64> = raw.iter().map(|(u, _)| l + u * width).collect();
            let s: f64 = raw.iter().map(|(_, w)| w).sum();
            let w = WeightVector::new(raw.iter().map(|(_, w)| w / s).collect()).unwrap();
            let eta = 2.0 / (width * width);
            let gbar = square_substitution(&g, &w, iv).unwrap();
            prop_assert!(iv.contains(gbar));
            for k in 0..200 {
                let o = l + width * k as f64 / 199.0;
                prop_assert!(mix_slack(gbar, &g, w.as_slice(), eta, o) >= -1e-10);
            }
        }

        #[test]
        fn log_substitution_is_mixable(
            raw in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 4), 1..5),
            wraw in prop::collection::vec(0.01f64..1.0, 5),
        ) {
            let n = raw.len();
            let forecasts: Vec<Vec<f64>> = raw
                .iter()
                .map(|v| { let s: f64 = v.iter().sum(); v.iter().map(|x| x / s).collect() })
                .collect();
            let ws: f64 = wraw[..n].iter().sum();
            let w = WeightVector::new(wraw[..n].iter().map(|x| x / ws).collect()).unwrap();
            let gbar = log_substitution(&forecasts, &w).unwrap();
            for k in 0..4 {
                let lhs = (-log_loss(&gbar, k).unwrap()).exp();
                let rhs: f64 = forecasts
                    .iter()
                    .zip(w.iter())
                    .map(|(g, wn)| wn * (-log_loss(g, k).unwrap()).exp())
                    .sum();
                prop_assert!(lhs - rhs >= -1e-12);
            }
        }
    }
}
