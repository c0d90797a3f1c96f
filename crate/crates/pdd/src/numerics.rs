//! Small numerical building blocks shared across modules: streaming moment
//! accumulation, dense least squares, quadrature, and polynomial evaluation.

use crate::error::{PddError, Result};

/// Welford streaming accumulator for mean and variance.
#[derive(Debug, Clone, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean, `s / sqrt(n)`.
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Evaluate a polynomial with coefficients in increasing degree order.
pub fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Solve a dense linear system `A x = b` by Gaussian elimination with
/// partial pivoting. `a` is row-major `n x n` and is consumed.
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(PddError::InvalidArgument(format!(
            "solve_dense: matrix has {} entries, expected {}",
            a.len(),
            n * n
        )));
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .abs()
                    .partial_cmp(&a[j * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if a[pivot_row * n + col].abs() < f64::EPSILON * 1e3 {
            return Err(PddError::Divergence(
                "solve_dense: singular or nearly singular matrix".into(),
            ));
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

/// Least-squares solve of an overdetermined system `A x ~ b` via Householder
/// QR. `a` is row-major `rows x cols` with `rows >= cols`.
pub fn lstsq_qr(mut a: Vec<f64>, mut b: Vec<f64>, rows: usize, cols: usize) -> Result<Vec<f64>> {
    if a.len() != rows * cols || b.len() != rows || rows < cols {
        return Err(PddError::InvalidArgument(
            "lstsq_qr: inconsistent dimensions".into(),
        ));
    }
    for k in 0..cols {
        // Householder reflector for column k.
        let mut norm = 0.0;
        for i in k..rows {
            norm += a[i * cols + k] * a[i * cols + k];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return Err(PddError::Divergence(
                "lstsq_qr: rank-deficient design matrix".into(),
            ));
        }
        let alpha = if a[k * cols + k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; rows - k];
        v[0] = a[k * cols + k] - alpha;
        for i in k + 1..rows {
            v[i - k] = a[i * cols + k];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            // Apply H = I - 2 v v^T / (v^T v) to the remaining columns and b.
            for j in k..cols {
                let mut dot = 0.0;
                for i in k..rows {
                    dot += v[i - k] * a[i * cols + j];
                }
                let scale = 2.0 * dot / vnorm2;
                for i in k..rows {
                    a[i * cols + j] -= scale * v[i - k];
                }
            }
            let mut dot = 0.0;
            for i in k..rows {
                dot += v[i - k] * b[i];
            }
            let scale = 2.0 * dot / vnorm2;
            for i in k..rows {
                b[i] -= scale * v[i - k];
            }
        }
        a[k * cols + k] = alpha;
    }
    // Back substitution on the upper-triangular factor.
    let mut x = vec![0.0; cols];
    for row in (0..cols).rev() {
        let mut acc = b[row];
        for k in row + 1..cols {
            acc -= a[row * cols + k] * x[k];
        }
        let diag = a[row * cols + row];
        if diag.abs() < f64::EPSILON * 1e3 {
            return Err(PddError::Divergence(
                "lstsq_qr: rank-deficient design matrix".into(),
            ));
        }
        x[row] = acc / diag;
    }
    Ok(x)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 {
            return Err(PddError::Divergence(
                "adaptive_simpson: max recursion depth reached".into(),
            ));
        }
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)?)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 60)
}
