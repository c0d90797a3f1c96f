//! Deterministic subdomain solvers.
//!
//! These are the schemes run on each subdomain after the interface stage:
//! Crank–Nicolson with Picard iteration for 1-d parabolic problems
//! ([`parabolic`]) and a five-point stencil with a BiCGStab solve for 2-d
//! stationary problems ([`elliptic`]). Both return a [`GridSolution`] whose
//! value layout is row-major over its axes in order.

pub mod elliptic;
pub mod parabolic;

use crate::error::{PddError, Result};

/// Solution values on a tensor-product grid.
///
/// `axes[k]` holds the coordinates along axis `k` and `values` is row-major
/// with the first axis outermost: in 1-d space-time solutions the axes are
/// `[x, t]`, in 2-d stationary ones `[x, y]`.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Scheme-level residual: the final Picard increment for parabolic
    /// solves, the true relative linear residual for elliptic ones.
    pub max_residual: f64,
}

impl GridSolution {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    /// Value at integer grid indices (one per axis).
    pub fn value(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.axes.len());
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.axes[k].len());
            flat = flat * self.axes[k].len() + i;
        }
        self.values[flat]
    }

    /// Index of the grid coordinate equal to `x` on `axis` within `tol`.
    pub fn find_coordinate(&self, axis: usize, x: f64, tol: f64) -> Result<usize> {
        self.axes[axis]
            .iter()
            .position(|&v| (v - x).abs() <= tol)
            .ok_or_else(|| {
                PddError::InvalidArgument(format!(
                    "coordinate {x} not found on axis {axis} within {tol}"
                ))
            })
    }
}
