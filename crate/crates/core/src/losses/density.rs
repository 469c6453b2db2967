//! Divergences between densities against a common base measure.

use crate::error::{Error, Result};
use crate::math::pairwise_sum;
use crate::types::DensityGrid;

/// `KL(o || g) = sum log(p_o / p_g) p_o mass`. Note the argument order: outcome first.
///
/// Fails with [`Error::AbsoluteContinuity`] where `p_o > 0 = p_g`.
pub fn kl_divergence(o: &DensityGrid, g: &DensityGrid) -> Result<f64> {
    o.check_compatible(g)?;
    let mut terms = Vec::with_capacity(o.len());
    for (i, ((&po, &pg), &m)) in o.density().iter().zip(g.density()).zip(o.mass()).enumerate() {
        if po == 0.0 {
            continue;
        }
        if pg == 0.0 {
            return Err(Error::AbsoluteContinuity { index: i });
        }
        terms.push((po / pg).ln() * po * m);
    }
    Ok(pairwise_sum(&terms).max(0.0))
}

/// `B2(g, o) = sum (p_g - p_o)^2 mass` for densities bounded by `bound`.
pub fn beta2_divergence(g: &DensityGrid, o: &DensityGrid, bound: f64) -> Result<f64> {
    g.check_compatible(o)?;
    check_bound(g, bound, "forecast")?;
    check_bound(o, bound, "outcome")?;
    let terms: Vec<f64> = g
        .density()
        .iter()
        .zip(o.density())
        .zip(g.mass())
        .map(|((a, b), m)| (a - b) * (a - b) * m)
        .collect();
    Ok(pairwise_sum(&terms))
}

pub(crate) fn check_bound(d: &DensityGrid, bound: f64, what: &str) -> Result<()> {
    let m = d.max_density();
    if m > bound * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "{what} density reaches {m}, above the bound {bound}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(p: &[f64]) -> DensityGrid {
        DensityGrid::probability_vector(p.to_vec()).unwrap()
    }

    #[test]
    fn kl_examples() {
        let a = pv(&[0.5, 0.5]);
        assert_eq!(kl_divergence(&a, &a).unwrap(), 0.0);
        let v = kl_divergence(&a, &pv(&[0.25, 0.75])).unwrap();
        assert!((v - (0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln())).abs() < 1e-15);
        assert!((v - 0.14384).abs() < 1e-5);
        let v = kl_divergence(&pv(&[1.0, 0.0]), &a).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn kl_is_asymmetric() {
        let a = pv(&[0.9, 0.1]);
        let b = pv(&[0.5, 0.5]);
        let ab = kl_divergence(&a, &b).unwrap();
        let ba = kl_divergence(&b, &a).unwrap();
        assert!((ab - ba).abs() > 1e-3);
    }

    #[test]
    fn kl_absolute_continuity() {
        let r = kl_divergence(&pv(&[0.5, 0.5]), &pv(&[1.0, 0.0]));
        assert!(matches!(r, Err(Error::AbsoluteContinuity { index: 1 })));
    }

    #[test]
    fn beta2_examples() {
        let a = pv(&[0.2, 0.8]);
        assert_eq!(beta2_divergence(&a, &a, 1.0).unwrap(), 0.0);
        let v = beta2_divergence(&a, &pv(&[0.5, 0.5]), 1.0).unwrap();
        assert!((v - 0.18).abs() < 1e-15);
        let edges = [0.0, 0.5, 1.0];
        let u = DensityGrid::lebesgue_cells(&edges, vec![1.0, 1.0]).unwrap();
        let h = DensityGrid::lebesgue_cells(&edges, vec![2.0, 0.0]).unwrap();
        assert!((beta2_divergence(&u, &h, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((beta2_divergence(&h, &u, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(beta2_divergence(&u, &h, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn incompatible_supports() {
        let a = pv(&[0.5, 0.5]);
        let b = pv(&[0.2, 0.3, 0.5]);
        assert!(matches!(kl_divergence(&a, &b), Err(Error::Incompatible(_))));
    }
}
