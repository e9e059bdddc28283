//! Energies `F(E)` and mutual energies `I(G, H)` of sets, and the deficit
//! `D(E) = F(B) - F(E)`.

use serde::{Deserialize, Serialize};

pub mod graph;
pub mod montecarlo;
pub(crate) mod pairsum;
pub mod radial;
pub mod voxel;

pub use graph::{deficit_graph, energy_graph, mutual_energy_graph};
pub use montecarlo::{mc_energy, mc_mutual_energy};
pub use radial::{radial_box_kernel, radial_box_square, radial_integrand};
pub use voxel::{deficit_voxel, energy_voxel, mutual_energy_voxel, VoxelEnergyOptions};

use crate::error::Result;
use crate::kernel::KernelParams;
use crate::sets::{GraphSet, Region, VoxelSet};

/// How an energy value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GraphQuadrature,
    VoxelConvolution,
    MonteCarlo,
}

/// An energy (or deficit) with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub method: Method,
}

/// A set in either deterministic representation.
#[derive(Debug, Clone, Copy)]
pub enum SetRef<'a> {
    Graph(&'a GraphSet),
    Voxel(&'a VoxelSet),
}

impl<'a> From<&'a GraphSet> for SetRef<'a> {
    fn from(e: &'a GraphSet) -> Self {
        SetRef::Graph(e)
    }
}

impl<'a> From<&'a VoxelSet> for SetRef<'a> {
    fn from(v: &'a VoxelSet) -> Self {
        SetRef::Voxel(v)
    }
}

/// `F(E)` by the method matching the representation.
pub fn energy<'a>(e: impl Into<SetRef<'a>>, p: &KernelParams) -> Result<EnergyEstimate> {
    match e.into() {
        SetRef::Graph(g) => energy_graph(g, p),
        SetRef::Voxel(v) => energy_voxel(v, p, &VoxelEnergyOptions::default()),
    }
}

/// `D(E)` of the volume-normalized set.
pub fn deficit<'a>(e: impl Into<SetRef<'a>>, p: &KernelParams) -> Result<EnergyEstimate> {
    match e.into() {
        SetRef::Graph(g) => deficit_graph(g, p),
        SetRef::Voxel(v) => deficit_voxel(v, p, &VoxelEnergyOptions::default()),
    }
}

/// `I(G, H)`. Two graph sets use angular pair sums; any voxel operand
/// sends both to a shared lattice and a cross-correlation.
pub fn mutual_energy<'a, 'b>(
    g: impl Into<SetRef<'a>>,
    h: impl Into<SetRef<'b>>,
    p: &KernelParams,
) -> Result<EnergyEstimate> {
    let opts = VoxelEnergyOptions::default();
    match (g.into(), h.into()) {
        (SetRef::Graph(a), SetRef::Graph(b)) => mutual_energy_graph(a, b, p),
        (SetRef::Voxel(a), SetRef::Voxel(b)) => mutual_energy_voxel(a, b, p, &opts),
        (SetRef::Voxel(a), SetRef::Graph(b)) | (SetRef::Graph(b), SetRef::Voxel(a)) => {
            let (lo, hi) = b.bounding_box();
            let mut vb = voxel::aligned_lattice(a, lo, hi)?;
            vb.fill(|x| b.contains(x));
            mutual_energy_voxel(a, &vb, p, &opts)
        }
    }
}
