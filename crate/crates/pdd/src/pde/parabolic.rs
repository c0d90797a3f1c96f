//! Crank–Nicolson solver for 1-d semilinear parabolic problems
//!
//! ```text
//! u_t = a u_xx + R(x, t, u)     on (x_lo, x_hi) x (0, T],
//! u(., 0) = u0,                 u(x_lo, t) = g_l(t),  u(x_hi, t) = g_r(t).
//! ```
//!
//! The diffusion term is averaged between time levels and the reaction term
//! is handled by Picard iteration on the implicit level, so the scheme stays
//! second order in time for smooth reactions. The implicit tridiagonal
//! system has constant coefficients; its elimination factors are computed
//! once and reused by every step and every Picard sweep.

use std::sync::Arc;

use crate::error::{PddError, Result};
use crate::pde::GridSolution;

/// Reaction term `R(x, t, u)`; the linear part `c u + f` belongs here too.
pub type ReactionFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Function of `x` only (initial datum).
pub type LineFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Function of `t` only (boundary datum).
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ParabolicProblem1d {
    pub x_lo: f64,
    pub x_hi: f64,
    /// Coefficient of `u_xx` as written in the equation.
    pub diffusion: f64,
    pub reaction: Option<ReactionFn>,
    pub initial: LineFn,
    pub left: TimeFn,
    pub right: TimeFn,
}

const PICARD_TOL: f64 = 1e-12;
const PICARD_MAX_ITERS: usize = 25;

/// Cached Thomas-elimination factors of the constant tridiagonal matrix
/// with subdiagonal `l`, diagonal `d`, superdiagonal `u`.
struct TridiagFactors {
    l: f64,
    cp: Vec<f64>,
    denom: Vec<f64>,
}

impl TridiagFactors {
    fn new(l: f64, d: f64, u: f64, m: usize) -> Result<Self> {
        let mut cp = vec![0.0; m];
        let mut denom = vec![0.0; m];
        let mut prev = d;
        for i in 0..m {
            if prev.abs() < 1e-300 {
                return Err(PddError::Divergence(
                    "tridiagonal elimination broke down; the step/mesh ratio is degenerate"
                        .into(),
                ));
            }
            denom[i] = prev;
            cp[i] = u / prev;
            prev = d - l * cp[i];
        }
        Ok(Self { l, cp, denom })
    }

    /// Solve in place; `rhs` becomes the solution.
    fn solve(&self, rhs: &mut [f64]) {
        let m = rhs.len();
        rhs[0] /= self.denom[0];
        for i in 1..m {
            rhs[i] = (rhs[i] - self.l * rhs[i - 1]) / self.denom[i];
        }
        for i in (0..m - 1).rev() {
            rhs[i] -= self.cp[i] * rhs[i + 1];
        }
    }
}

/// Solve on `nx` space intervals with a step near `dt` (adjusted so the
/// horizon is an integer number of steps), returning the solution at
/// `capture_times` (every step when `None`).
///
/// Requested capture times must coincide with time levels of the adjusted
/// step.
pub fn solve_parabolic_1d(
    problem: &ParabolicProblem1d,
    nx: usize,
    dt: f64,
    t_final: f64,
    capture_times: Option<&[f64]>,
) -> Result<GridSolution> {
    if !(problem.x_hi > problem.x_lo) {
        return Err(PddError::InvalidArgument(
            "parabolic: domain must have positive width".into(),
        ));
    }
    if !(problem.diffusion > 0.0) {
        return Err(PddError::InvalidArgument(
            "parabolic: diffusion coefficient must be positive".into(),
        ));
    }
    if nx < 2 || !(dt > 0.0) || !(t_final > 0.0) {
        return Err(PddError::InvalidArgument(
            "parabolic: need nx >= 2, dt > 0, t_final > 0".into(),
        ));
    }
    let n_steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = t_final / n_steps as f64;
    let dx = (problem.x_hi - problem.x_lo) / nx as f64;
    // Pin the right endpoint to the exact domain bound so adjacent
    // subdomains that share an interface evaluate boundary closures at
    // identical coordinates.
    let mut xs: Vec<f64> = (0..=nx).map(|i| problem.x_lo + i as f64 * dx).collect();
    xs[nx] = problem.x_hi;

    // Map capture times onto step indices.
    let captures: Vec<usize> = match capture_times {
        None => (0..=n_steps).collect(),
        Some(times) => {
            let mut out = Vec::with_capacity(times.len());
            for &t in times {
                let k = (t / dt).round();
                if k < 0.0 || k > n_steps as f64 || (t - k * dt).abs() > 1e-7 * t_final.max(dt) {
                    return Err(PddError::InvalidArgument(format!(
                        "capture time {t} does not sit on a time level (dt = {dt})"
                    )));
                }
                out.push(k as usize);
            }
            if out.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PddError::InvalidArgument(
                    "capture times must be strictly increasing".into(),
                ));
            }
            out
        }
    };
    let ts: Vec<f64> = captures.iter().map(|&k| k as f64 * dt).collect();

    let m = nx - 1; // interior unknowns
    let s = problem.diffusion * dt / (2.0 * dx * dx);
    let factors = TridiagFactors::new(-s, 1.0 + 2.0 * s, -s, m)?;

    let mut u: Vec<f64> = xs.iter().map(|&x| (problem.initial)(x)).collect();
    let n_capture = captures.len();
    let mut values = vec![0.0; (nx + 1) * n_capture];
    let mut capture_idx = 0;
    let mut store = |u: &[f64], capture_idx: &mut usize, k: usize| {
        while *capture_idx < captures.len() && captures[*capture_idx] == k {
            for (i, &v) in u.iter().enumerate() {
                values[i * n_capture + *capture_idx] = v;
            }
            *capture_idx += 1;
        }
    };
    store(&u, &mut capture_idx, 0);

    let mut explicit = vec![0.0; m];
    let mut reaction_old = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut next = vec![0.0; m];
    let mut max_residual = 0.0f64;

    for k in 0..n_steps {
        let t_old = k as f64 * dt;
        let t_new = (k + 1) as f64 * dt;
        let gl = (problem.left)(t_new);
        let gr = (problem.right)(t_new);
        for i in 0..m {
            explicit[i] = u[i + 1] + s * (u[i + 2] - 2.0 * u[i + 1] + u[i]);
            if let Some(r) = &problem.reaction {
                reaction_old[i] = r(xs[i + 1], t_old, u[i + 1]);
            }
        }
        explicit[0] += s * gl;
        explicit[m - 1] += s * gr;

        // Picard sweeps on the implicit reaction level; a single solve is
        // exact when there is no reaction.
        for i in 0..m {
            next[i] = u[i + 1]; // initial guess: previous time level
        }
        let sweeps = if problem.reaction.is_some() {
            PICARD_MAX_ITERS
        } else {
            1
        };
        let mut converged = problem.reaction.is_none();
        for _ in 0..sweeps {
            for i in 0..m {
                rhs[i] = explicit[i];
                if let Some(r) = &problem.reaction {
                    rhs[i] += 0.5 * dt * (reaction_old[i] + r(xs[i + 1], t_new, next[i]));
                }
            }
            factors.solve(&mut rhs);
            let mut delta = 0.0f64;
            for i in 0..m {
                delta = delta.max((rhs[i] - next[i]).abs());
                next[i] = rhs[i];
            }
            if !delta.is_finite() {
                return Err(PddError::Divergence(format!(
                    "parabolic: Picard iteration produced non-finite values at t = {t_new}"
                )));
            }
            if problem.reaction.is_none() {
                break;
            }
            if delta <= PICARD_TOL {
                converged = true;
                max_residual = max_residual.max(delta);
                break;
            }
        }
        if !converged {
            return Err(PddError::Divergence(format!(
                "parabolic: Picard iteration did not converge within {PICARD_MAX_ITERS} \
                 sweeps at t = {t_new}; reduce the time step"
            )));
        }
        u[0] = gl;
        u[nx] = gr;
        u[1..nx].copy_from_slice(&next);
        store(&u, &mut capture_idx, k + 1);
    }

    Ok(GridSolution {
        axes: vec![xs, ts],
        values,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn heat_problem() -> ParabolicProblem1d {
        ParabolicProblem1d {
            x_lo: 0.0,
            x_hi: 1.0,
            diffusion: 1.0,
            reaction: None,
            initial: Arc::new(|x| (PI * x).sin()),
            left: Arc::new(|_| 0.0),
            right: Arc::new(|_| 0.0),
        }
    }

    #[test]
    fn heat_equation_mode_decays_at_the_exact_rate() {
        // u(x, t) = exp(-pi^2 t) sin(pi x).
        let sol = solve_parabolic_1d(&heat_problem(), 100, 1e-4, 0.25, Some(&[0.1, 0.25]))
            .unwrap();
        for (c, &t) in sol.axes[1].clone().iter().enumerate() {
            let mut worst = 0.0f64;
            for (i, &x) in sol.axes[0].iter().enumerate() {
                let truth = (-PI * PI * t).exp() * (PI * x).sin();
                worst = worst.max((sol.value(&[i, c]) - truth).abs());
            }
            assert!(worst < 1e-3, "error {worst} at t = {t}");
        }
    }

    #[test]
    fn capture_times_select_levels_and_default_captures_all() {
        let sol = solve_parabolic_1d(&heat_problem(), 10, 0.05, 0.2, None).unwrap();
        assert_eq!(sol.axes[1].len(), 5); // t = 0.0, 0.05, ..., 0.2
        assert_eq!(sol.axes[0].len(), 11);
        let picked = solve_parabolic_1d(&heat_problem(), 10, 0.05, 0.2, Some(&[0.0, 0.1]))
            .unwrap();
        assert_eq!(picked.axes[1], vec![0.0, 0.1]);
        // The t = 0 slice is the initial datum exactly.
        for (i, &x) in picked.axes[0].iter().enumerate() {
            assert_eq!(picked.value(&[i, 0]), (PI * x).sin());
        }
        // Off-level capture times are rejected.
        assert!(
            solve_parabolic_1d(&heat_problem(), 10, 0.05, 0.2, Some(&[0.013])).is_err()
        );
    }

    #[test]
    fn semilinear_wave_profile_is_tracked() {
        // u_t = u_xx + u^2 - u with the travelling-wave solution
        // u(x, t) = 1 - (1 + exp(x/sqrt(6) - 5t/6))^(-2); exact values serve
        // as boundary data.
        let profile = |x: f64, t: f64| {
            1.0 - (1.0 + (x / 6.0f64.sqrt() - 5.0 * t / 6.0).exp()).powi(-2)
        };
        let problem = ParabolicProblem1d {
            x_lo: -5.0,
            x_hi: 5.0,
            diffusion: 1.0,
            reaction: Some(Arc::new(|_, _, u| u * u - u)),
            initial: Arc::new(move |x| profile(x, 0.0)),
            left: Arc::new(move |t| profile(-5.0, t)),
            right: Arc::new(move |t| profile(5.0, t)),
        };
        let sol = solve_parabolic_1d(&problem, 500, 1e-3, 1.0, Some(&[1.0])).unwrap();
        let mut worst = 0.0f64;
        for (i, &x) in sol.axes[0].iter().enumerate() {
            worst = worst.max((sol.value(&[i, 0]) - profile(x, 1.0)).abs());
        }
        assert!(worst < 1e-3, "semilinear error {worst}");
        assert!(sol.max_residual < 1e-11);
    }

    #[test]
    fn discrete_solution_respects_data_bounds() {
        // Pure diffusion with data in [0, 1] at mesh ratio a dt/dx^2 = 0.5:
        // every captured level stays inside the data bounds.
        let problem = ParabolicProblem1d {
            x_lo: 0.0,
            x_hi: 1.0,
            diffusion: 1.0,
            reaction: None,
            initial: Arc::new(|x| if (0.4..0.6).contains(&x) { 1.0 } else { 0.0 }),
            left: Arc::new(|_| 0.0),
            right: Arc::new(|_| 0.0),
        };
        let nx = 50usize;
        let dx = 1.0 / nx as f64;
        let dt = 0.5 * dx * dx;
        let sol = solve_parabolic_1d(&problem, nx, dt, 1000.0 * dt, None).unwrap();
        for v in &sol.values {
            assert!(
                (-1e-12..=1.0 + 1e-12).contains(v),
                "value {v} escaped the data bounds"
            );
        }
    }

    #[test]
    fn degenerate_requests_are_rejected() {
        assert!(solve_parabolic_1d(&heat_problem(), 1, 1e-3, 1.0, None).is_err());
        assert!(solve_parabolic_1d(&heat_problem(), 10, -1e-3, 1.0, None).is_err());
        let mut swapped = heat_problem();
        swapped.x_lo = 2.0;
        assert!(solve_parabolic_1d(&swapped, 10, 1e-3, 1.0, None).is_err());
    }
}
