//! File formats.
//!
//! Voxel sets: a JSON object
//! `{"format": "riesz-voxel", "version": 1, "dim", "origin", "spacing", "dims", "bits"}`
//! where `bits` is the base64 encoding of the occupancy packed eight cells per
//! byte, least significant bit first, in `x`-fastest cell order.
//!
//! Graph sets: `{"format": "riesz-graph", "version": 1, "grid", "center", "u", "splits"}`
//! with `grid` a [`GridSpec`] and `splits` a list of `{node, lambda, u_second}`.

use std::path::Path;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{from_slice, Point};

use super::graph::{CellSplit, GraphSet};
use super::grid::{GridSpec, SphereGrid};
use super::voxel::VoxelSet;

pub const VOXEL_FORMAT: &str = "riesz-voxel";
pub const GRAPH_FORMAT: &str = "riesz-graph";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct VoxelFile {
    format: String,
    version: u32,
    dim: usize,
    origin: Vec<f64>,
    spacing: f64,
    dims: Vec<usize>,
    bits: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SplitEntry {
    node: usize,
    lambda: f64,
    u_second: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    format: String,
    version: u32,
    grid: GridSpec,
    center: Vec<f64>,
    u: Vec<f64>,
    #[serde(default)]
    splits: Vec<SplitEntry>,
}

fn check_header(format: &str, version: u32, want: &str) -> Result<()> {
    if format != want {
        return Err(Error::Format(format!("expected format {want:?}, found {format:?}")));
    }
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported {want} version {version}")));
    }
    Ok(())
}

fn point(v: &[f64], dim: usize, what: &str) -> Result<Point> {
    if v.len() != dim {
        return Err(Error::Format(format!("{what} has {} entries, expected {dim}", v.len())));
    }
    Ok(from_slice(v))
}

pub fn voxel_to_json(v: &VoxelSet) -> Result<String> {
    let mut packed = vec![0u8; v.len().div_ceil(8)];
    for (i, &b) in v.bits().iter().enumerate() {
        if b {
            packed[i / 8] |= 1 << (i % 8);
        }
    }
    let d = v.dim();
    let file = VoxelFile {
        format: VOXEL_FORMAT.into(),
        version: FORMAT_VERSION,
        dim: d,
        origin: v.origin()[..d].to_vec(),
        spacing: v.spacing(),
        dims: v.dims()[..d].to_vec(),
        bits: STANDARD.encode(packed),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn voxel_from_json(s: &str) -> Result<VoxelSet> {
    let f: VoxelFile = serde_json::from_str(s)?;
    check_header(&f.format, f.version, VOXEL_FORMAT)?;
    let origin = point(&f.origin, f.dim, "origin")?;
    if f.dims.len() != f.dim {
        return Err(Error::Format(format!("dims has {} entries, expected {}", f.dims.len(), f.dim)));
    }
    let mut dims = [1usize; 3];
    dims[..f.dim].copy_from_slice(&f.dims);
    let n: usize = dims.iter().product();
    let packed = STANDARD
        .decode(f.bits.as_bytes())
        .map_err(|e| Error::Format(format!("bad base64 payload: {e}")))?;
    if packed.len() != n.div_ceil(8) {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            packed.len(),
            n.div_ceil(8)
        )));
    }
    let occ = (0..n).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect();
    VoxelSet::from_bits(f.dim, origin, f.spacing, dims, occ)
}

pub fn graph_to_json(e: &GraphSet) -> Result<String> {
    if e.grid().rotation().is_some() {
        return Err(Error::Format("graph sets on rotated grids cannot be serialized".into()));
    }
    let d = e.dim();
    let splits = e
        .splits()
        .iter()
        .enumerate()
        .filter_map(|(node, s)| {
            s.map(|s| SplitEntry {
                node,
                lambda: s.lambda,
                u_second: s.u_second,
            })
        })
        .collect();
    let file = GraphFile {
        format: GRAPH_FORMAT.into(),
        version: FORMAT_VERSION,
        grid: e.grid().spec(),
        center: e.center()[..d].to_vec(),
        u: e.u().to_vec(),
        splits,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn graph_from_json(s: &str) -> Result<GraphSet> {
    let f: GraphFile = serde_json::from_str(s)?;
    check_header(&f.format, f.version, GRAPH_FORMAT)?;
    let grid = Arc::new(SphereGrid::new(f.grid)?);
    let center = point(&f.center, grid.dim(), "center")?;
    let mut splits = vec![None; grid.len()];
    for s in f.splits {
        let slot = splits
            .get_mut(s.node)
            .ok_or_else(|| Error::Format(format!("split node {} out of range", s.node)))?;
        *slot = Some(CellSplit {
            lambda: s.lambda,
            u_second: s.u_second,
        });
    }
    Ok(GraphSet::with_splits(grid, f.u, splits)?.with_center(center))
}

pub fn read_voxel(path: &Path) -> Result<VoxelSet> {
    voxel_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_voxel(path: &Path, v: &VoxelSet) -> Result<()> {
    Ok(std::fs::write(path, voxel_to_json(v)?)?)
}

pub fn read_graph(path: &Path) -> Result<GraphSet> {
    graph_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_graph(path: &Path, e: &GraphSet) -> Result<()> {
    Ok(std::fs::write(path, graph_to_json(e)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ORIGIN;

    #[test]
    fn voxel_round_trip() {
        let v = VoxelSet::ball(3, [0.1, 0.0, -0.2], 0.7, 0.1).unwrap();
        let back = voxel_from_json(&voxel_to_json(&v).unwrap()).unwrap();
        assert_eq!(v, back);
        let v = VoxelSet::ball(2, ORIGIN, 1.0, 0.03).unwrap();
        assert_eq!(v, voxel_from_json(&voxel_to_json(&v).unwrap()).unwrap());
    }

    #[test]
    fn graph_round_trip() {
        let g = Arc::new(SphereGrid::for_dim(3, 6).unwrap());
        let n = g.len();
        let mut splits = vec![None; n];
        splits[4] = Some(CellSplit {
            lambda: 0.25,
            u_second: -0.02,
        });
        let u: Vec<f64> = (0..n).map(|j| 0.001 * j as f64).collect();
        let e = GraphSet::with_splits(g, u, splits).unwrap().with_center([0.1, 0.2, 0.3]);
        let back = graph_from_json(&graph_to_json(&e).unwrap()).unwrap();
        assert_eq!(back.u(), e.u());
        assert_eq!(back.splits(), e.splits());
        assert_eq!(back.center(), e.center());
    }

    #[test]
    fn malformed_inputs() {
        assert!(voxel_from_json("{").is_err());
        assert!(voxel_from_json(r#"{"format":"other","version":1,"dim":2,"origin":[0,0],"spacing":1,"dims":[1,1],"bits":"AA=="}"#).is_err());
        assert!(voxel_from_json(r#"{"format":"riesz-voxel","version":1,"dim":2,"origin":[0,0],"spacing":1,"dims":[4,4],"bits":"AA=="}"#).is_err());
        assert!(voxel_from_json(r#"{"format":"riesz-voxel","version":1,"dim":2,"origin":[0,0],"spacing":1,"dims":[2,2],"bits":"Dw=="}"#).is_ok());
    }
}
