use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::basis::{multiplicity, HarmonicBasis};

/// One Fourier coefficient `a_{k,i}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub k: usize,
    pub i: usize,
    pub value: f64,
}

/// Harmonic coefficients of a sphere function up to a maximal degree,
/// with the `L^2` mass of everything above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub dim: usize,
    pub max_degree: usize,
    pub coefficients: Vec<Coefficient>,
    pub residual_norm: f64,
}

impl Spectrum {
    /// Spectrum with the given nonzero coefficients and no residual.
    pub fn from_modes(dim: usize, max_degree: usize, modes: &[(usize, usize, f64)]) -> Result<Self> {
        let mut coefficients: Vec<Coefficient> = (0..=max_degree)
            .flat_map(|k| (1..=multiplicity(dim, k)).map(move |i| Coefficient { k, i, value: 0.0 }))
            .collect();
        for &(k, i, value) in modes {
            let c = coefficients
                .iter_mut()
                .find(|c| c.k == k && c.i == i)
                .ok_or_else(|| Error::Domain(format!("no harmonic ({k}, {i}) of degree <= {max_degree}")))?;
            c.value = value;
        }
        Ok(Self {
            dim,
            max_degree,
            coefficients,
            residual_norm: 0.0,
        })
    }

    pub fn get(&self, k: usize, i: usize) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|c| c.k == k && c.i == i)
            .map(|c| c.value)
    }

    /// `sum_i a_{k,i}^2`.
    pub fn degree_energy(&self, k: usize) -> f64 {
        self.coefficients
            .iter()
            .filter(|c| c.k == k)
            .map(|c| c.value * c.value)
            .sum()
    }

    /// `sum a^2 + residual^2`, the `L^2` norm squared of the analyzed function.
    pub fn total_energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.value * c.value).sum::<f64>() + self.residual_norm.powi(2)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `a_{k,i} = sum_j w_j u_j y_{k,i}(x_j)`; the residual follows from Parseval.
pub fn analyze(u: &[f64], basis: &HarmonicBasis) -> Result<Spectrum> {
    let grid = basis.grid();
    if u.len() != grid.len() {
        return Err(Error::Inconsistent(format!(
            "{} values for a grid of {} nodes",
            u.len(),
            grid.len()
        )));
    }
    let w = grid.weights();
    let coefficients: Vec<Coefficient> = basis
        .labels()
        .iter()
        .zip(basis.values())
        .map(|(&(k, i), y)| Coefficient {
            k,
            i,
            value: u.iter().zip(y).zip(w).map(|((a, b), c)| a * b * c).sum(),
        })
        .collect();
    let norm2: f64 = u.iter().zip(w).map(|(a, c)| c * a * a).sum();
    let captured: f64 = coefficients.iter().map(|c| c.value * c.value).sum();
    Ok(Spectrum {
        dim: basis.dim(),
        max_degree: basis.max_degree(),
        coefficients,
        residual_norm: (norm2 - captured).max(0.0).sqrt(),
    })
}
