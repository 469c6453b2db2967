use serde::{Deserialize, Serialize};

use super::{DensityGrid, GridCdfND, GridDistribution1D, ParticleDistributionND, QuantileGrid1D};
use crate::error::{Error, Result};

/// A copy of a reference cloud under `x -> (x - shift) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAffine", into = "RawAffine")]
pub struct AffineCopy {
    reference: ParticleDistributionND,
    scale: f64,
    shift: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawAffine {
    reference: ParticleDistributionND,
    scale: f64,
    shift: Vec<f64>,
}

impl TryFrom<RawAffine> for AffineCopy {
    type Error = Error;
    fn try_from(r: RawAffine) -> Result<Self> {
        Self::new(r.reference, r.scale, r.shift)
    }
}

impl From<AffineCopy> for RawAffine {
    fn from(a: AffineCopy) -> Self {
        RawAffine {
            reference: a.reference,
            scale: a.scale,
            shift: a.shift,
        }
    }
}

impl AffineCopy {
    pub fn new(reference: ParticleDistributionND, scale: f64, shift: Vec<f64>) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("scale {scale} must be positive")));
        }
        if shift.len() != reference.dim() || shift.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "shift must be a finite vector of dimension {}",
                reference.dim()
            )));
        }
        Ok(Self {
            reference,
            scale,
            shift,
        })
    }

    pub fn reference(&self) -> &ParticleDistributionND {
        &self.reference
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// The transformed cloud.
    pub fn materialize(&self) -> Result<ParticleDistributionND> {
        self.reference.map_points(|x| {
            x.iter()
                .zip(&self.shift)
                .map(|(xi, ui)| (xi - ui) / self.scale)
                .collect()
        })
    }
}

/// Any forecast or outcome understood by the losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Distribution {
    Grid(GridDistribution1D),
    Quantile(QuantileGrid1D),
    GridNd(GridCdfND),
    Particles(ParticleDistributionND),
    Density(DensityGrid),
    Affine(AffineCopy),
}

impl Distribution {
    pub fn kind(&self) -> &'static str {
        match self {
            Distribution::Grid(_) => "grid",
            Distribution::Quantile(_) => "quantile",
            Distribution::GridNd(_) => "grid_nd",
            Distribution::Particles(_) => "particles",
            Distribution::Density(_) => "density",
            Distribution::Affine(_) => "affine",
        }
    }

    pub fn as_grid(&self) -> Result<&GridDistribution1D> {
        match self {
            Distribution::Grid(g) => Ok(g),
            other => Err(other.mismatch("grid")),
        }
    }

    pub fn as_grid_nd(&self) -> Result<&GridCdfND> {
        match self {
            Distribution::GridNd(g) => Ok(g),
            other => Err(other.mismatch("grid_nd")),
        }
    }

    pub fn as_density(&self) -> Result<&DensityGrid> {
        match self {
            Distribution::Density(d) => Ok(d),
            other => Err(other.mismatch("density")),
        }
    }

    pub fn as_affine(&self) -> Result<&AffineCopy> {
        match self {
            Distribution::Affine(a) => Ok(a),
            other => Err(other.mismatch("affine")),
        }
    }

    /// Particle view; affine copies are materialised.
    pub fn to_particles(&self) -> Result<std::borrow::Cow<'_, ParticleDistributionND>> {
        match self {
            Distribution::Particles(p) => Ok(std::borrow::Cow::Borrowed(p)),
            Distribution::Affine(a) => Ok(std::borrow::Cow::Owned(a.materialize()?)),
            other => Err(other.mismatch("particles")),
        }
    }

    fn mismatch(&self, expected: &str) -> Error {
        Error::Incompatible(format!("expected a {expected} distribution, got {}", self.kind()))
    }
}

impl From<GridDistribution1D> for Distribution {
    fn from(g: GridDistribution1D) -> Self {
        Distribution::Grid(g)
    }
}

impl From<QuantileGrid1D> for Distribution {
    fn from(q: QuantileGrid1D) -> Self {
        Distribution::Quantile(q)
    }
}

impl From<GridCdfND> for Distribution {
    fn from(g: GridCdfND) -> Self {
        Distribution::GridNd(g)
    }
}

impl From<ParticleDistributionND> for Distribution {
    fn from(p: ParticleDistributionND) -> Self {
        Distribution::Particles(p)
    }
}

impl From<DensityGrid> for Distribution {
    fn from(d: DensityGrid) -> Self {
        Distribution::Density(d)
    }
}

impl From<AffineCopy> for Distribution {
    fn from(a: AffineCopy) -> Self {
        Distribution::Affine(a)
    }
}
