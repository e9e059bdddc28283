//! Reduction of a set of small asymmetry to a nearly spherical set with
//! barycenter at the origin: annulus truncation, radial rearrangement to a
//! two-sided graph, consolidation into a signed graph, the barycenter fixed
//! point, and the explicit radial transport maps between the pieces.

pub mod barycenter;
pub mod consolidate;
pub mod pipeline;
pub mod radial;
pub mod transport;
pub mod truncate;

pub use barycenter::{adjust_barycenter, boundary_field, recenter, BarycenterFit, BarycenterOptions, Recentered};
pub use consolidate::{consolidate, split_fraction, symm_diff_ratio};
pub use pipeline::{reduce_pipeline, Branch, Check, Reduction, ReductionOptions, ReductionReport, StageSummary};
pub use radial::{radial_rearrange, RAYS_PER_AXIS};
pub use transport::{build_radial_transport, Patch, RadialTransport, RayMap, MASS_TOLERANCE};
pub use truncate::{truncate_to_annulus, Truncation, TruncationSummary};
