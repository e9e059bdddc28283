//! Set representations and their measures: graphs over a sphere grid,
//! two-sided graphs, voxel indicators, Fraenkel asymmetry and symmetric
//! decreasing rearrangement.

pub mod asymmetry;
pub mod format;
pub mod graph;
pub mod grid;
pub mod local;
pub mod rearrange;
pub mod region;
pub mod voxel;

pub use asymmetry::{Asymmetry, AsymmetryOptions, FraenkelAsymmetry};
pub use graph::{Cell, CellSplit, GraphSet, TwoSidedGraphSet};
pub use grid::{CellBounds, GridSpec, SphereGrid};
pub use local::{Jet, Neighbor, Neighborhoods};
pub use rearrange::{capture_bound, sd_rearrangement, sd_rearrangement_voxel, CaptureBound, RadialProfile};
pub use region::Region;
pub use voxel::VoxelSet;
