//! Grids, grid measures, and potentials.
//!
//! A radial model lives on the nodes of a uniform 1-D grid in the log
//! coordinate t; the product model on the tensor square of that grid.
//! Measures carry node weights plus boundary atoms: two for radial grids
//! (the slope deficits at the two cone ends), four per-edge lumps for the
//! product grid (the budget-rectangle completion).

use crate::error::{Error, Result};

/// Default convexity tolerance for admissibility checks.
pub const EPS_CONV: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Dim {
    One,
    Two,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub dim: Dim,
    /// Log-coordinate cutoff T; nodes span [-T, T].
    pub half_width: f64,
    /// Cells per axis N; N+1 nodes per axis.
    pub cells: usize,
    /// Spacing h = 2T/N.
    pub spacing: f64,
    /// Node coordinates, one axis (shared by both axes in 2-D).
    pub nodes: Vec<f64>,
}

impl Grid {
    pub fn new(dim: Dim, half_width: f64, cells: usize) -> Result<Self> {
        if half_width <= 0.0 {
            return Err(Error::BadHalfWidth(half_width));
        }
        if cells < 16 {
            return Err(Error::TooFewCells(cells));
        }
        if cells % 2 != 0 {
            return Err(Error::OddCells(cells));
        }
        let spacing = 2.0 * half_width / cells as f64;
        let nodes = (0..=cells)
            .map(|i| -half_width + spacing * i as f64)
            .collect();
        Ok(Grid {
            dim,
            half_width,
            cells,
            spacing,
            nodes,
        })
    }

    /// Number of scalar values a potential or weight field carries.
    pub fn len(&self) -> usize {
        match self.dim {
            Dim::One => self.cells + 1,
            Dim::Two => (self.cells + 1) * (self.cells + 1),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major index for 2-D grids.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.cells + 1) + j
    }
}

/// A nonnegative measure on the grid: node weights plus boundary atoms.
///
/// Radial: `atoms = [left, right]`. Product: `atoms = [left, right, bottom, top]`
/// (per-edge lumps, corners folded into the adjacent horizontal edge).
#[derive(Debug, Clone)]
pub struct GridMeasure {
    pub weights: Vec<f64>,
    pub atoms: Vec<f64>,
}

impl GridMeasure {
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.atoms.iter().sum::<f64>()
    }

    /// Most negative node weight (0 for genuinely nonnegative measures).
    pub fn negativity_defect(&self) -> f64 {
        self.weights
            .iter()
            .chain(self.atoms.iter())
            .fold(0.0_f64, |acc, &w| acc.min(w))
            .min(0.0)
            .abs()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights
            .iter()
            .chain(self.atoms.iter())
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// Check probability normalization within `tol`.
    pub fn check_probability(&self, tol: f64) -> Result<()> {
        let defect = (self.total_mass() - 1.0).abs();
        if defect > tol {
            return Err(Error::MassDefect { defect });
        }
        Ok(())
    }
}

/// Total-variation distance under the set-difference convention,
/// sup_A |mu(A) - nu(A)| = (1/2) * L1 distance.
pub fn tv_distance(a: &GridMeasure, b: &GridMeasure) -> Result<f64> {
    if a.weights.len() != b.weights.len() || a.atoms.len() != b.atoms.len() {
        return Err(Error::GridMismatch(a.weights.len(), b.weights.len()));
    }
    let mut l1 = 0.0;
    for (x, y) in a.weights.iter().zip(&b.weights) {
        l1 += (x - y).abs();
    }
    for (x, y) in a.atoms.iter().zip(&b.atoms) {
        l1 += (x - y).abs();
    }
    Ok(0.5 * l1)
}

/// L1 distance between measures (reported alongside the set-difference tv).
pub fn l1_distance(a: &GridMeasure, b: &GridMeasure) -> Result<f64> {
    Ok(2.0 * tv_distance(a, b)?)
}

/// Gauge normalization carried by a potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// phi = 0 at the grid boundary.
    Pinned,
    /// max phi = 0.
    SupNormalized,
    /// No normalization applied (e.g. after adding a constant).
    Free,
}

/// Grid values of a relative potential phi; u = u0 + phi is the convex side.
#[derive(Debug, Clone)]
pub struct Potential {
    pub values: Vec<f64>,
    pub normalization: Normalization,
    pub even_gauge: bool,
}

impl Potential {
    pub fn zero(len: usize) -> Self {
        Potential {
            values: vec![0.0; len],
            normalization: Normalization::Pinned,
            even_gauge: false,
        }
    }

    pub fn from_values(values: Vec<f64>, normalization: Normalization) -> Self {
        Potential {
            values,
            normalization,
            even_gauge: false,
        }
    }

    /// Shift so that max phi = 0.
    pub fn sup_normalized(&self) -> Potential {
        let m = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Potential {
            values: self.values.iter().map(|v| v - m).collect(),
            normalization: Normalization::SupNormalized,
            even_gauge: self.even_gauge,
        }
    }

    pub fn add_constant(&self, c: f64) -> Potential {
        Potential {
            values: self.values.iter().map(|v| v + c).collect(),
            normalization: Normalization::Free,
            even_gauge: self.even_gauge,
        }
    }
}
