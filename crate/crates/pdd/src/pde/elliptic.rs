//! Five-point-stencil solver for 2-d stationary problems
//!
//! ```text
//! (1/2) a11 u_xx + (1/2) a22 u_yy + b1 u_x + b2 u_y + c u + f = 0
//! ```
//!
//! on a rectangle with Dirichlet data on all four sides. Second derivatives
//! use the standard three-point formula and first derivatives the central
//! one. The negated system (positive diagonal for `c <= 0`) is assembled in
//! compressed sparse rows, row-equilibrated, and solved with BiCGStab to a
//! fixed relative residual.

use std::sync::Arc;

use crate::error::{PddError, Result};
use crate::geometry::BoxDomain;
use crate::pde::GridSolution;

/// Scalar field on the plane.
pub type PlaneFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct EllipticProblem2d {
    /// 2-d box; face kinds are ignored (the data is Dirichlet on all sides).
    pub domain: BoxDomain,
    /// Second-order coefficients `(A11, A22)`; the equation carries them
    /// with the factor 1/2.
    pub a: (f64, f64),
    pub b1: Option<PlaneFn>,
    pub b2: Option<PlaneFn>,
    pub c: Option<PlaneFn>,
    pub f: Option<PlaneFn>,
    pub dirichlet: PlaneFn,
}

/// Relative residual at which the linear solve is declared converged.
pub const LINEAR_SOLVE_RTOL: f64 = 1e-8;

const BICGSTAB_MAX_ITERS: usize = 50_000;

struct Csr {
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            *o = acc;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unpreconditioned BiCGStab to `rtol` on the given system.
fn bicgstab(a: &Csr, b: &[f64], rtol: f64) -> Result<Vec<f64>> {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for _ in 0..BICGSTAB_MAX_ITERS {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-290 {
            return Err(PddError::Divergence(
                "elliptic: BiCGStab broke down (rho vanished)".into(),
            ));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        a.matvec(&p, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= rtol * b_norm {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return Ok(x);
        }
        a.matvec(&s, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(PddError::Divergence(
                "elliptic: BiCGStab broke down (stabilizer vanished)".into(),
            ));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if !r[0].is_finite() {
            return Err(PddError::Divergence(
                "elliptic: BiCGStab produced non-finite iterates".into(),
            ));
        }
        if norm(&r) <= rtol * b_norm {
            return Ok(x);
        }
        if omega == 0.0 {
            return Err(PddError::Divergence(
                "elliptic: BiCGStab stagnated (omega vanished)".into(),
            ));
        }
    }
    Err(PddError::Divergence(format!(
        "elliptic: BiCGStab did not reach a relative residual of {rtol} within \
         {BICGSTAB_MAX_ITERS} iterations"
    )))
}

/// Solve on `nx` by `ny` mesh intervals (grid includes the boundary).
pub fn solve_elliptic_2d(
    problem: &EllipticProblem2d,
    nx: usize,
    ny: usize,
) -> Result<GridSolution> {
    if problem.domain.dim() != 2 {
        return Err(PddError::InvalidArgument(
            "elliptic: the domain must be two-dimensional".into(),
        ));
    }
    if nx < 2 || ny < 2 {
        return Err(PddError::InvalidArgument(
            "elliptic: need at least 2 mesh intervals per axis".into(),
        ));
    }
    if !(problem.a.0 > 0.0) || !(problem.a.1 > 0.0) {
        return Err(PddError::InvalidArgument(
            "elliptic: second-order coefficients must be positive".into(),
        ));
    }
    let (x_lo, y_lo) = (problem.domain.lo()[0], problem.domain.lo()[1]);
    let (x_hi, y_hi) = (problem.domain.hi()[0], problem.domain.hi()[1]);
    let dx = (x_hi - x_lo) / nx as f64;
    let dy = (y_hi - y_lo) / ny as f64;
    // Pin the far endpoints to the exact domain bounds so adjacent
    // subdomains that share an interface evaluate boundary closures at
    // identical coordinates.
    let mut xs: Vec<f64> = (0..=nx).map(|i| x_lo + i as f64 * dx).collect();
    let mut ys: Vec<f64> = (0..=ny).map(|j| y_lo + j as f64 * dy).collect();
    xs[nx] = x_hi;
    ys[ny] = y_hi;

    let eval = |field: &Option<PlaneFn>, x: f64, y: f64| field.as_ref().map_or(0.0, |f| f(x, y));

    // Interior unknowns in row-major (x outer) order.
    let mx = nx - 1;
    let my = ny - 1;
    let n_unknowns = mx * my;
    let uidx = |i: usize, j: usize| (i - 1) * my + (j - 1);

    let cx = 0.5 * problem.a.0 / (dx * dx);
    let cy = 0.5 * problem.a.1 / (dy * dy);

    let mut row_ptr = Vec::with_capacity(n_unknowns + 1);
    let mut col = Vec::with_capacity(5 * n_unknowns);
    let mut val = Vec::with_capacity(5 * n_unknowns);
    let mut rhs = vec![0.0; n_unknowns];
    row_ptr.push(0);

    for i in 1..=mx {
        for j in 1..=my {
            let (x, y) = (xs[i], ys[j]);
            let b1 = eval(&problem.b1, x, y) / (2.0 * dx);
            let b2 = eval(&problem.b2, x, y) / (2.0 * dy);
            let c = eval(&problem.c, x, y);
            // Negated equation: positive diagonal when c <= 0.
            let diag = 2.0 * cx + 2.0 * cy - c;
            let west = -(cx - b1);
            let east = -(cx + b1);
            let south = -(cy - b2);
            let north = -(cy + b2);
            let row = uidx(i, j);
            rhs[row] = eval(&problem.f, x, y);
            // Columns in increasing order: W, S, C, N, E.
            if i > 1 {
                col.push(uidx(i - 1, j));
                val.push(west);
            } else {
                rhs[row] -= west * (problem.dirichlet)(xs[0], y);
            }
            if j > 1 {
                col.push(uidx(i, j - 1));
                val.push(south);
            } else {
                rhs[row] -= south * (problem.dirichlet)(x, ys[0]);
            }
            col.push(row);
            val.push(diag);
            if j < my {
                col.push(uidx(i, j + 1));
                val.push(north);
            } else {
                rhs[row] -= north * (problem.dirichlet)(x, ys[ny]);
            }
            if i < mx {
                col.push(uidx(i + 1, j));
                val.push(east);
            } else {
                rhs[row] -= east * (problem.dirichlet)(xs[nx], y);
            }
            row_ptr.push(col.len());
        }
    }
    let mut matrix = Csr { row_ptr, col, val };

    // Row equilibration keeps BiCGStab well scaled for strongly varying c.
    for i in 0..n_unknowns {
        let lo = matrix.row_ptr[i];
        let hi = matrix.row_ptr[i + 1];
        let scale = matrix.val[lo..hi]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Err(PddError::Divergence(
                "elliptic: an assembled row is identically zero".into(),
            ));
        }
        for v in &mut matrix.val[lo..hi] {
            *v /= scale;
        }
        rhs[i] /= scale;
    }

    let interior = bicgstab(&matrix, &rhs, LINEAR_SOLVE_RTOL)?;

    // True relative residual of the equilibrated system.
    let mut check = vec![0.0; n_unknowns];
    matrix.matvec(&interior, &mut check);
    let mut rnorm = 0.0;
    for i in 0..n_unknowns {
        rnorm += (check[i] - rhs[i]) * (check[i] - rhs[i]);
    }
    let b_norm = norm(&rhs);
    let max_residual = if b_norm == 0.0 {
        0.0
    } else {
        rnorm.sqrt() / b_norm
    };

    let mut values = vec![0.0; (nx + 1) * (ny + 1)];
    for i in 0..=nx {
        for j in 0..=ny {
            let on_boundary = i == 0 || i == nx || j == 0 || j == ny;
            values[i * (ny + 1) + j] = if on_boundary {
                (problem.dirichlet)(xs[i], ys[j])
            } else {
                interior[uidx(i, j)]
            };
        }
    }

    Ok(GridSolution {
        axes: vec![xs, ys],
        values,
        max_residual,
    })
}
