use std::path::Path;

use riesz_core::reduction::{reduce_pipeline, BarycenterOptions, ReductionOptions, ReductionReport};
use riesz_core::sets::format::read_voxel;
use riesz_core::sets::VoxelSet;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Pipeline settings taken from the configuration.
pub fn reduction_options(cfg: &ExperimentConfig) -> ReductionOptions {
    ReductionOptions {
        eps: cfg.eps,
        grid_resolution: Some(cfg.grid),
        xi: cfg.xi,
        barycenter: BarycenterOptions {
            tolerance: cfg.tolerances.barycenter,
            ..Default::default()
        },
    }
}

/// Runs the reduction pipeline on a voxel set.
pub fn reduce_set(v: &VoxelSet, cfg: &ExperimentConfig) -> Result<ReductionReport> {
    cfg.validate()?;
    let p = cfg.params()?;
    Ok(reduce_pipeline(v, &p, &reduction_options(cfg))?.report)
}

/// Reads a voxel file and reduces it.
pub fn reduce_file(path: &Path, cfg: &ExperimentConfig) -> Result<ReductionReport> {
    let v = read_voxel(path).map_err(|e| match e {
        riesz_core::Error::Io(source) => CliError::io(path, source),
        other => CliError::Parse {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })?;
    reduce_set(&v, cfg)
}
