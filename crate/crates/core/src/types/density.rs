use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(density * mass) = 1`.
pub const DENSITY_MASS_TOLERANCE: f64 = 1e-10;

/// How the per-point masses of a [`DensityGrid`] arise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseMeasure {
    /// A finite outcome space; the masses are the measure itself.
    #[default]
    Finite,
    /// Cells of a discretised continuous measure; the grid holds cell representatives.
    Discretized,
}

/// Density `p = d(upsilon)/d(mu)` of a distribution against a base measure `mu`
/// supported on finitely many points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity", into = "RawDensity")]
pub struct DensityGrid {
    grid: Vec<f64>,
    mass: Vec<f64>,
    density: Vec<f64>,
    base: BaseMeasure,
}

#[derive(Serialize, Deserialize)]
struct RawDensity {
    grid: Vec<f64>,
    mass: Vec<f64>,
    density: Vec<f64>,
    #[serde(default)]
    base: BaseMeasure,
}

impl TryFrom<RawDensity> for DensityGrid {
    type Error = Error;
    fn try_from(r: RawDensity) -> Result<Self> {
        Self::new(r.grid, r.mass, r.density, r.base)
    }
}

impl From<DensityGrid> for RawDensity {
    fn from(d: DensityGrid) -> Self {
        RawDensity {
            grid: d.grid,
            mass: d.mass,
            density: d.density,
            base: d.base,
        }
    }
}

impl DensityGrid {
    pub fn new(grid: Vec<f64>, mass: Vec<f64>, density: Vec<f64>, base: BaseMeasure) -> Result<Self> {
        let n = grid.len();
        if n == 0 || mass.len() != n || density.len() != n {
            return Err(Error::InvalidDistribution(
                "density grid needs matching nonempty grid, mass and density".into(),
            ));
        }
        if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDistribution(
                "density grid points must be finite and strictly increasing".into(),
            ));
        }
        if let Some(i) = mass.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "base mass {} at point {i} must be positive",
                mass[i]
            )));
        }
        if let Some(i) = density.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "density {} at point {i} must be finite and nonnegative",
                density[i]
            )));
        }
        let total = total_probability(&density, &mass);
        if (total - 1.0).abs() > DENSITY_MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "density integrates to {total}, expected 1"
            )));
        }
        Ok(Self {
            grid,
            mass,
            density,
            base,
        })
    }

    /// Probability vector on `{0, .., K-1}` against the counting measure.
    pub fn probability_vector(p: Vec<f64>) -> Result<Self> {
        let k = p.len();
        Self::new((0..k).map(|i| i as f64).collect(), vec![1.0; k], p, BaseMeasure::Finite)
    }

    /// Point mass on support point `index`.
    pub fn dirac(grid: Vec<f64>, mass: Vec<f64>, index: usize, base: BaseMeasure) -> Result<Self> {
        if index >= grid.len() || mass.len() != grid.len() {
            return Err(Error::Domain(format!("dirac index {index} out of range")));
        }
        let mut density = vec![0.0; grid.len()];
        density[index] = 1.0 / mass[index];
        Self::new(grid, mass, density, base)
    }

    /// Piecewise-constant density on cells with the given edges (Lebesgue base measure).
    pub fn lebesgue_cells(edges: &[f64], density: Vec<f64>) -> Result<Self> {
        if edges.len() != density.len() + 1 {
            return Err(Error::InvalidDistribution(
                "need one more cell edge than density values".into(),
            ));
        }
        let grid = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mass = edges.windows(2).map(|w| w[1] - w[0]).collect();
        Self::new(grid, mass, density, BaseMeasure::Discretized)
    }

    /// Same support and base measure, new density values.
    pub fn with_density(&self, density: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), self.mass.clone(), density, self.base)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn base(&self) -> BaseMeasure {
        self.base
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Total mass of the base measure.
    pub fn base_total_mass(&self) -> f64 {
        crate::math::pairwise_sum(&self.mass)
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Probability of support point `i`.
    pub fn probability(&self, i: usize) -> f64 {
        self.density[i] * self.mass[i]
    }

    /// Errors unless both densities live on the same support with the same base measure.
    pub fn check_compatible(&self, other: &DensityGrid) -> Result<()> {
        if self.grid != other.grid || self.mass != other.mass || self.base != other.base {
            return Err(Error::Incompatible(
                "densities are defined against different base measures".into(),
            ));
        }
        Ok(())
    }
}

fn total_probability(density: &[f64], mass: &[f64]) -> f64 {
    let terms: Vec<f64> = density.iter().zip(mass).map(|(p, m)| p * m).collect();
    crate::math::pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_total_mass() {
        assert!(DensityGrid::probability_vector(vec![0.3, 0.7]).is_ok());
        assert!(DensityGrid::probability_vector(vec![0.3, 0.6]).is_err());
        assert!(DensityGrid::probability_vector(vec![-0.1, 1.1]).is_err());
        assert!(DensityGrid::new(vec![0.0], vec![0.0], vec![1.0], BaseMeasure::Finite).is_err());
    }

    #[test]
    fn lebesgue_cells_integrate_to_one() {
        let d = DensityGrid::lebesgue_cells(&[0.0, 0.5, 1.0], vec![2.0, 0.0]).unwrap();
        assert_eq!(d.grid(), &[0.25, 0.75]);
        assert_eq!(d.base_total_mass(), 1.0);
        assert_eq!(d.max_density(), 2.0);
        assert_eq!(d.probability(0), 1.0);
    }

    #[test]
    fn dirac_has_unit_probability() {
        let d = DensityGrid::dirac(vec![0.0, 1.0, 2.0], vec![0.5, 0.5, 2.0], 1, BaseMeasure::Finite).unwrap();
        assert_eq!(d.density(), &[0.0, 2.0, 0.0]);
    }

    #[test]
    fn compatibility() {
        let a = DensityGrid::probability_vector(vec![0.5, 0.5]).unwrap();
        let b = DensityGrid::lebesgue_cells(&[0.0, 1.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert!(a.check_compatible(&a).is_ok());
        assert!(a.check_compatible(&b).is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = DensityGrid::probability_vector(vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        let b: DensityGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }
}
