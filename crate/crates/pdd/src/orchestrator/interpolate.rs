//! Interface interpolation: one polynomial per cut.
//!
//! The interface stage produces pointwise estimates at a handful of levels
//! per cut (time levels for evolution problems, cross-coordinates for
//! stationary strips). The deterministic stage needs boundary data at every
//! solver level, so each cut's estimates are condensed into a least-squares
//! polynomial over the level coordinate, fitted in a variable scaled to
//! `[-1, 1]` to keep the normal system well conditioned.

use crate::error::{PddError, Result};
use crate::geometry::InterfaceGrid;
use crate::numerics::{lstsq_qr, polyval};

/// Polynomial boundary closure for one cut.
#[derive(Debug, Clone)]
pub struct CutInterpolant {
    coeffs: Vec<f64>,
    center: f64,
    half_width: f64,
}

/// Default fit degree for a cut with `n_levels` data points.
pub fn default_degree(n_levels: usize) -> usize {
    n_levels.saturating_sub(1).min(4)
}

impl CutInterpolant {
    /// Least-squares fit of `values` over `levels` with the given degree.
    pub fn fit(levels: &[f64], values: &[f64], degree: usize) -> Result<Self> {
        if levels.len() != values.len() || levels.is_empty() {
            return Err(PddError::InvalidArgument(
                "interpolant: levels and values must be equally long and non-empty".into(),
            ));
        }
        if degree + 1 > levels.len() {
            return Err(PddError::InvalidArgument(format!(
                "interpolant: degree {degree} needs at least {} levels, got {}",
                degree + 1,
                levels.len()
            )));
        }
        let lo = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let center = 0.5 * (lo + hi);
        let half_width = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
        let cols = degree + 1;
        let mut a = Vec::with_capacity(levels.len() * cols);
        for &t in levels {
            let s = (t - center) / half_width;
            let mut pow = 1.0;
            for _ in 0..cols {
                a.push(pow);
                pow *= s;
            }
        }
        let coeffs = lstsq_qr(a, values.to_vec(), levels.len(), cols)?;
        Ok(Self {
            coeffs,
            center,
            half_width,
        })
    }

    pub fn eval(&self, level: f64) -> f64 {
        polyval(&self.coeffs, (level - self.center) / self.half_width)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Fit one interpolant per cut of a fully populated interface grid.
///
/// Any node still missing an estimate makes the grid unusable for the
/// deterministic stage; the error lists every such node.
pub fn interpolants_from_grid(grid: &InterfaceGrid, degree: usize) -> Result<Vec<CutInterpolant>> {
    let missing = grid.missing_nodes();
    if !missing.is_empty() {
        let mut desc: Vec<String> = missing
            .iter()
            .take(8)
            .map(|&(c, l)| {
                let (cut, level) = grid.node(c, l);
                format!("(cut {cut}, level {level})")
            })
            .collect();
        if missing.len() > desc.len() {
            desc.push(format!("... {} more", missing.len() - desc.len()));
        }
        return Err(PddError::IncompleteGrid(format!(
            "{} interface node(s) have no estimate: {}",
            missing.len(),
            desc.join(", ")
        )));
    }
    let levels = grid.levels();
    (0..grid.cuts().len())
        .map(|c| {
            let values: Vec<f64> = (0..levels.len())
                .map(|l| grid.value(c, l).expect("checked above").estimate)
                .collect();
            CutInterpolant::fit(levels, &values, degree)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{InterfaceGrid, InterfaceNodeValue};

    #[test]
    fn exact_polynomial_data_is_reproduced() {
        // Four points determine a cubic; the fit must interpolate exactly.
        let levels = [0.0, 0.5, 1.0, 1.5];
        let poly = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let values: Vec<f64> = levels.iter().map(|&t| poly(t)).collect();
        let interp = CutInterpolant::fit(&levels, &values, 3).unwrap();
        for &t in &[0.0, 0.23, 0.77, 1.5] {
            assert!((interp.eval(t) - poly(t)).abs() < 1e-10);
        }
        assert_eq!(interp.degree(), 3);
    }

    #[test]
    fn redundant_data_is_smoothed_not_interpolated() {
        // A degree-1 fit of quadratic data equals the L2-best line on the
        // sample, which differs from the data at the ends.
        let levels: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let values: Vec<f64> = levels.iter().map(|&t| t * t).collect();
        let interp = CutInterpolant::fit(&levels, &values, 1).unwrap();
        assert!((interp.eval(0.0) - 0.0).abs() > 0.05);
        let mid: f64 = values.iter().sum::<f64>() / values.len() as f64;
        assert!((interp.eval(0.5) - mid).abs() < 0.05);
    }

    #[test]
    fn default_degree_caps_at_four() {
        assert_eq!(default_degree(2), 1);
        assert_eq!(default_degree(5), 4);
        assert_eq!(default_degree(11), 4);
        assert_eq!(default_degree(1), 0);
    }

    #[test]
    fn incomplete_grids_are_refused_with_locations() {
        let grid = InterfaceGrid::from_parts(vec![-1.0, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        let mut values = vec![
            Some(InterfaceNodeValue {
                estimate: 1.0,
                std_error: 0.0,
                n_samples: 10
            });
            6
        ];
        values[4] = None;
        let grid = grid.with_values(values).unwrap();
        let err = interpolants_from_grid(&grid, 2).unwrap_err();
        match err {
            PddError::IncompleteGrid(msg) => {
                assert!(msg.contains("cut 1"), "message was: {msg}");
                assert!(msg.contains("level 0.5"), "message was: {msg}");
            }
            other => panic!("expected IncompleteGrid, got {other:?}"),
        }
    }

    #[test]
    fn complete_grids_yield_one_interpolant_per_cut() {
        let grid = InterfaceGrid::from_parts(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let values = (0..6)
            .map(|k| {
                Some(InterfaceNodeValue {
                    estimate: k as f64,
                    std_error: 0.0,
                    n_samples: 4,
                })
            })
            .collect();
        let grid = grid.with_values(values).unwrap();
        let interps = interpolants_from_grid(&grid, 1).unwrap();
        assert_eq!(interps.len(), 3);
        // Cut 1 has values 2 at level 0 and 3 at level 1.
        assert!((interps[1].eval(0.0) - 2.0).abs() < 1e-12);
        assert!((interps[1].eval(1.0) - 3.0).abs() < 1e-12);
    }
}
