//! Distribution representations, weight vectors and game traces.

mod density;
mod forecast;
mod grid;
pub(crate) mod grid_nd;
mod particles;
mod quantile;
mod trace;
mod weights;

pub use density::{BaseMeasure, DensityGrid, DENSITY_MASS_TOLERANCE};
pub use forecast::{AffineCopy, Distribution};
pub use grid::{
    canonical_grid, merge_grids, CdfCursor, GridDistribution1D, Interpolation, CANONICAL_GRID_POINTS, CDF_TOLERANCE,
};
pub use grid_nd::{GridCdfND, MAX_GRID_DIM};
pub use particles::{Atoms1D, ParticleDistributionND};
pub use quantile::{merge_levels, QuantileGrid1D};
pub use trace::{GameTrace, RoundRecord, ROUND_TOLERANCE, TRACE_SCHEMA_VERSION};
pub use weights::{WeightVector, RENORMALIZE_TOLERANCE, SIMPLEX_TOLERANCE};

pub(crate) use particles::norm;
pub(crate) use weights::normalize_simplex;
