//! Pointwise Monte Carlo estimators for linear boundary-value problems.
//!
//! A parabolic problem
//!
//! ```text
//! u_t = (1/2) sum_ij A_ij d_ij u + sum_i b_i d_i u + c u + f    in D x (0, T]
//! u(., 0) = p                    (initial datum)
//! u = g                          (absorbing faces)
//! d_n u = phi_R u + psi_R        (reflecting faces)
//! ```
//!
//! has the stochastic representation
//!
//! ```text
//! u(x0, t0) = E[ q Y_tau + Z_tau ],
//! q = g(X_tau, t0 - tau)  if the path is absorbed at path time tau < t0,
//! q = p(X_{t0})           if the path survives to the horizon,
//! ```
//!
//! where `(X, Y, Z)` solve the path system of [`crate::sde`] with
//! coefficients evaluated at the reversed time `t0 - tau`. This module owns
//! that time reversal: problem data is supplied in problem time, and the
//! wrappers handed to the path engine translate path time on the way in.
//!
//! Stationary (elliptic) problems use the same representation without the
//! reversal or the initial datum; every path must eventually be absorbed,
//! which requires at least one absorbing face, and the zero-order
//! coefficient is assumed nonpositive so that the weight stays bounded.
//!
//! Estimates average independent replicates keyed off a [`RngStream`], so
//! the result for a given stream is identical regardless of how many threads
//! participate.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{PddError, Result};
use crate::geometry::{BoundaryEvent, BoxDomain};
use crate::numerics::Welford;
use crate::rng::RngStream;
use crate::sde::{simulate_path, DiffusionCoefficients, Horizon, PathOutcome, ScalarDrivers};

/// Scalar field of position only.
pub type SpatialField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Scalar field of position and problem time.
pub type SpaceTimeField = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// A linear boundary-value problem in stochastic-representation form.
///
/// All fields are given in problem time. `initial` is required for finite
/// horizons and ignored for stationary problems.
#[derive(Clone)]
pub struct LinearBvpSpec {
    pub domain: BoxDomain,
    pub coefficients: DiffusionCoefficients,
    pub scalars: ScalarDrivers,
    pub dirichlet: SpaceTimeField,
    pub initial: Option<SpatialField>,
    pub horizon: Horizon,
}

impl LinearBvpSpec {
    /// Time-dependent problem on `[0, t_final]` with initial datum `p`.
    pub fn parabolic(
        domain: BoxDomain,
        coefficients: DiffusionCoefficients,
        scalars: ScalarDrivers,
        dirichlet: SpaceTimeField,
        initial: SpatialField,
        t_final: f64,
    ) -> Self {
        Self {
            domain,
            coefficients,
            scalars,
            dirichlet,
            initial: Some(initial),
            horizon: Horizon::Finite(t_final),
        }
    }

    /// Stationary problem; `dirichlet` is evaluated with time argument 0.
    pub fn elliptic(
        domain: BoxDomain,
        coefficients: DiffusionCoefficients,
        scalars: ScalarDrivers,
        dirichlet: SpaceTimeField,
    ) -> Self {
        Self {
            domain,
            coefficients,
            scalars,
            dirichlet,
            initial: None,
            horizon: Horizon::Stationary,
        }
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    fn validate(&self, x0: &[f64], t0: f64) -> Result<()> {
        if x0.len() != self.domain.dim() {
            return Err(PddError::InvalidArgument(format!(
                "estimate point has dimension {}, domain has dimension {}",
                x0.len(),
                self.domain.dim()
            )));
        }
        match self.horizon {
            Horizon::Finite(t_final) => {
                if self.initial.is_none() {
                    return Err(PddError::Config(
                        "finite-horizon problem needs an initial datum".into(),
                    ));
                }
                if !(0.0..=t_final).contains(&t0) {
                    return Err(PddError::InvalidArgument(format!(
                        "estimate time {t0} outside problem horizon [0, {t_final}]"
                    )));
                }
            }
            Horizon::Stationary => {
                if !self.domain.has_absorbing_face() {
                    return Err(PddError::Unsupported(
                        "stationary problems need at least one absorbing face".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Result of a pointwise Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub elapsed_seconds: f64,
}

/// Coefficients reinterpreted in path time `tau |-> t0 - tau`.
fn reversed_coefficients(c: &DiffusionCoefficients, t0: f64) -> DiffusionCoefficients {
    let drift = c.drift.clone();
    let sigma = c.sigma.clone();
    DiffusionCoefficients {
        drift: Arc::new(move |x, tau, out| drift(x, t0 - tau, out)),
        sigma: Arc::new(move |x, tau, out| sigma(x, t0 - tau, out)),
        dim: c.dim,
        constant: c.constant,
    }
}

fn reversed_scalars(s: &ScalarDrivers, t0: f64) -> ScalarDrivers {
    fn rev(
        f: &Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
        t0: f64,
    ) -> Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync> {
        let inner = f.clone();
        Arc::new(move |x, tau| inner(x, t0 - tau))
    }
    ScalarDrivers {
        c: rev(&s.c, t0),
        f: rev(&s.f, t0),
        phi_r: rev(&s.phi_r, t0),
        psi_r: rev(&s.psi_r, t0),
    }
}

/// Score one completed path: `q * Y + Z` with `q` chosen by how the path
/// ended. `t0` is the problem time being estimated (ignored for stationary
/// specs).
pub fn score_path(spec: &LinearBvpSpec, t0: f64, outcome: &PathOutcome) -> Result<f64> {
    let state = &outcome.terminal_state;
    let q = match &outcome.exit {
        BoundaryEvent::Absorbing { hit_point, .. } => {
            let exit_time = outcome.exit_time.expect("absorbed path has an exit time");
            let problem_time = match spec.horizon {
                Horizon::Finite(_) => t0 - exit_time,
                Horizon::Stationary => 0.0,
            };
            (spec.dirichlet)(hit_point, problem_time)
        }
        BoundaryEvent::None => match &spec.initial {
            Some(p) => p(&state.x),
            None => {
                return Err(PddError::MissingDatum(
                    "path reached the horizon but the problem has no initial datum".into(),
                ))
            }
        },
        BoundaryEvent::Reflecting { .. } => {
            unreachable!("paths never terminate on a reflecting face")
        }
    };
    Ok(q * state.y + state.z)
}

/// Estimate `u(x0, t0)` by averaging `n` independent path scores.
///
/// Replicate `r` draws from `stream.with_replicate(r)`, and the reduction is
/// performed in replicate order, so the estimate is a pure function of
/// `(spec, x0, t0, n, dt, stream)` regardless of thread count.
pub fn estimate_point(
    spec: &LinearBvpSpec,
    x0: &[f64],
    t0: f64,
    n: u64,
    dt: f64,
    stream: RngStream,
) -> Result<PointEstimate> {
    spec.validate(x0, t0)?;
    if n < 2 {
        return Err(PddError::InvalidArgument(
            "estimate_point needs at least 2 samples for a standard error".into(),
        ));
    }
    let started = Instant::now();
    let (coeffs, scalars, horizon) = match spec.horizon {
        Horizon::Finite(_) => (
            reversed_coefficients(&spec.coefficients, t0),
            reversed_scalars(&spec.scalars, t0),
            Horizon::Finite(t0),
        ),
        Horizon::Stationary => (
            spec.coefficients.clone(),
            spec.scalars.clone(),
            Horizon::Stationary,
        ),
    };
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|r| {
            let outcome = simulate_path(
                x0,
                &coeffs,
                &scalars,
                &spec.domain,
                horizon,
                dt,
                stream.with_replicate(r),
            )?;
            score_path(spec, t0, &outcome)
        })
        .collect::<Result<_>>()?;
    let mut acc = Welford::new();
    for s in scores {
        acc.push(s);
    }
    Ok(PointEstimate {
        value: acc.mean(),
        std_error: acc.std_error(),
        n_samples: n,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Iteration cap for a single walk; hitting it indicates a degenerate
/// tolerance, not a plausible walk.
const MAX_WOS_JUMPS: u32 = 100_000;

/// Walk-on-spheres estimate of a harmonic function (zero drift, zero-order
/// and source terms) with Dirichlet data on an all-absorbing box.
///
/// Each jump moves to a uniform point on the largest sphere inscribed in the
/// domain; the walk stops within `eps` of the boundary and scores the datum
/// at the nearest boundary point. `eps` defaults to `1e-3` times the domain
/// diameter.
pub fn walk_on_spheres(
    domain: &BoxDomain,
    dirichlet: &SpatialField,
    x0: &[f64],
    eps: Option<f64>,
    n: u64,
    stream: RngStream,
) -> Result<PointEstimate> {
    if x0.len() != domain.dim() {
        return Err(PddError::InvalidArgument(
            "walk_on_spheres: point dimension does not match the domain".into(),
        ));
    }
    if domain
        .face_kinds()
        .iter()
        .any(|k| *k != crate::geometry::FaceKind::Absorbing)
    {
        return Err(PddError::Unsupported(
            "walk_on_spheres handles Dirichlet data only; all faces must be absorbing".into(),
        ));
    }
    if n < 2 {
        return Err(PddError::InvalidArgument(
            "walk_on_spheres needs at least 2 samples for a standard error".into(),
        ));
    }
    let eps = match eps {
        Some(e) if e > 0.0 => e,
        Some(_) => {
            return Err(PddError::InvalidArgument(
                "walk_on_spheres: tolerance must be positive".into(),
            ))
        }
        None => 1e-3 * domain.diameter(),
    };
    let started = Instant::now();
    let dim = domain.dim();
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut sampler = stream.with_replicate(r).sampler();
            let mut x = x0.to_vec();
            for _ in 0..MAX_WOS_JUMPS {
                let d = domain.boundary_distance(&x);
                if d < eps {
                    let hit = nearest_boundary_point(domain, &x);
                    return Ok(dirichlet(&hit));
                }
                // Uniform direction: normalized Gaussian vector.
                loop {
                    let mut norm2 = 0.0;
                    let mut dir = vec![0.0; dim];
                    for v in dir.iter_mut() {
                        *v = sampler.standard_normal();
                        norm2 += *v * *v;
                    }
                    if norm2 > 1e-300 {
                        let inv = d / norm2.sqrt();
                        for i in 0..dim {
                            x[i] += dir[i] * inv;
                        }
                        break;
                    }
                }
            }
            Err(PddError::Divergence(format!(
                "walk_on_spheres: no boundary contact within {MAX_WOS_JUMPS} jumps \
                 (tolerance {eps})"
            )))
        })
        .collect::<Result<_>>()?;
    let mut acc = Welford::new();
    for s in scores {
        acc.push(s);
    }
    Ok(PointEstimate {
        value: acc.mean(),
        std_error: acc.std_error(),
        n_samples: n,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Project onto the closest face of the box.
fn nearest_boundary_point(domain: &BoxDomain, x: &[f64]) -> Vec<f64> {
    let mut best_face = 0;
    let mut best_dist = f64::INFINITY;
    for face in 0..2 * domain.dim() {
        let axis = BoxDomain::face_axis(face);
        let dist = (x[axis] - domain.face_value(face)).abs();
        if dist < best_dist {
            best_dist = dist;
            best_face = face;
        }
    }
    let mut hit = x.to_vec();
    let axis = BoxDomain::face_axis(best_face);
    hit[axis] = domain.face_value(best_face);
    hit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FaceKind;

    fn constant_field(v: f64) -> SpaceTimeField {
        Arc::new(move |_, _| v)
    }

    fn unit_interval() -> BoxDomain {
        BoxDomain::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn constant_dirichlet_data_is_recovered_exactly() {
        // c = f = 0 and g identically 7: every score is exactly 7, the
        // estimate is exact and the standard error is exactly zero.
        let spec = LinearBvpSpec::elliptic(
            unit_interval(),
            DiffusionCoefficients::brownian(1, 1.0),
            ScalarDrivers::zero(),
            constant_field(7.0),
        );
        let est = estimate_point(&spec, &[0.4], 0.0, 200, 1e-2, RngStream::for_node(5, 0)).unwrap();
        assert_eq!(est.value, 7.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.n_samples, 200);
    }

    #[test]
    fn estimates_stay_within_data_bounds() {
        // With c = 0 and f = 0 every score is a sampled boundary/initial
        // value, so the estimate can never leave the data's range.
        let domain = unit_interval();
        let spec = LinearBvpSpec::parabolic(
            domain,
            DiffusionCoefficients::brownian(1, 1.0),
            ScalarDrivers::zero(),
            Arc::new(|x: &[f64], t: f64| (7.0 * x[0] + 3.0 * t).sin() * 4.0 - 1.0),
            Arc::new(|x: &[f64]| (5.0 * x[0]).cos() * 4.0 - 1.0),
            1.0,
        );
        for node in 0..4 {
            let est = estimate_point(
                &spec,
                &[0.37],
                0.8,
                500,
                1e-3,
                RngStream::for_node(808, node),
            )
            .unwrap();
            assert!(est.value >= -5.0 && est.value <= 3.0);
        }
    }

    #[test]
    fn source_term_enters_linearly_on_fixed_streams() {
        // With g = p = 0 the score reduces to Z, which is linear in f path
        // by path; identical streams make the comparison nearly exact.
        let make = |f: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>| {
            LinearBvpSpec::parabolic(
                unit_interval(),
                DiffusionCoefficients::brownian(1, 1.0),
                ScalarDrivers::volume(Arc::new(|_, _| -0.5), f),
                constant_field(0.0),
                Arc::new(|_: &[f64]| 0.0),
                0.5,
            )
        };
        let f1: SpaceTimeField = Arc::new(|x: &[f64], _| 2.0 + x[0]);
        let f2: SpaceTimeField = Arc::new(|x: &[f64], t| (x[0] * 3.0 + t).sin());
        let f12: SpaceTimeField = Arc::new(|x: &[f64], t| 2.0 + x[0] + (x[0] * 3.0 + t).sin());
        let stream = RngStream::for_node(2024, 9);
        let e1 = estimate_point(&make(f1), &[0.5], 0.4, 300, 1e-3, stream).unwrap();
        let e2 = estimate_point(&make(f2), &[0.5], 0.4, 300, 1e-3, stream).unwrap();
        let e12 = estimate_point(&make(f12), &[0.5], 0.4, 300, 1e-3, stream).unwrap();
        assert!(
            (e1.value + e2.value - e12.value).abs() < 1e-12,
            "linearity violated: {} + {} != {}",
            e1.value,
            e2.value,
            e12.value
        );
    }

    #[test]
    fn harmonic_identity_is_reproduced() {
        // g(x) = x is harmonic, so u(x0) = x0; start at the symmetric point
        // where the discrete exit test is unbiased.
        let spec = LinearBvpSpec::elliptic(
            unit_interval(),
            DiffusionCoefficients::brownian(1, 1.0),
            ScalarDrivers::zero(),
            Arc::new(|x: &[f64], _| x[0]),
        );
        let est = estimate_point(
            &spec,
            &[0.5],
            0.0,
            40_000,
            1.0 / 512.0,
            RngStream::for_node(31, 0),
        )
        .unwrap();
        assert!(
            (est.value - 0.5).abs() <= 3.0 * est.std_error,
            "estimate {} +- {} vs 0.5",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn standard_error_scales_like_inverse_sqrt_n() {
        let spec = LinearBvpSpec::elliptic(
            unit_interval(),
            DiffusionCoefficients::brownian(1, 1.0),
            ScalarDrivers::zero(),
            Arc::new(|x: &[f64], _| x[0]),
        );
        let small = estimate_point(
            &spec,
            &[0.5],
            0.0,
            2_000,
            1.0 / 64.0,
            RngStream::for_node(6, 0),
        )
        .unwrap();
        let large = estimate_point(
            &spec,
            &[0.5],
            0.0,
            32_000,
            1.0 / 64.0,
            RngStream::for_node(6, 1),
        )
        .unwrap();
        let ratio = small.std_error / large.std_error;
        assert!(
            (ratio - 4.0).abs() < 0.8,
            "se ratio {ratio} should be near 4 for a 16x sample increase"
        );
    }

    #[test]
    fn estimates_are_deterministic_across_thread_pools() {
        let spec = LinearBvpSpec::elliptic(
            unit_interval(),
            DiffusionCoefficients::brownian(1, 1.0),
            ScalarDrivers::zero(),
            Arc::new(|x: &[f64], _| x[0] * x[0]),
        );
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                estimate_point(
                    &spec,
                    &[0.3],
                    0.0,
                    2_000,
                    1.0 / 128.0,
                    RngStream::for_node(12, 3),
                )
                .unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn manufactured_stationary_problem_matches_reference_value() {
        // 2-d stationary problem with known solution
        //   u*(x, y) = 2 cos(2(y-2)x) + sin(3(x-2)y) + 3.1
        // under the operator with A = 2I, drift
        //   b = cos(x+y)/(1.1+sin(x+y)) * (1, 1)
        // and zero-order term c = -(x^2+y^2)/(1.1+sin(x+y)); the source f is
        // manufactured from those choices. Reference value at (0.5, 0.5):
        // 2.4634012064474846.
        let spec = manufactured_spec();
        let est = estimate_point(
            &spec,
            &[0.5, 0.5],
            0.0,
            6_000,
            2e-5,
            RngStream::for_node(17, 0),
        )
        .unwrap();
        let truth = 2.4634012064474846;
        let tol = 3.0 * est.std_error + 0.02;
        assert!(
            (est.value - truth).abs() < tol,
            "estimate {} +- {} vs {} (tol {})",
            est.value,
            est.std_error,
            truth,
            tol
        );
    }

    pub(crate) fn manufactured_spec() -> LinearBvpSpec {
        let domain = BoxDomain::new(
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![FaceKind::Absorbing; 4],
        )
        .unwrap();
        let truth = |x: f64, y: f64| {
            2.0 * (2.0 * (y - 2.0) * x).cos() + (3.0 * (x - 2.0) * y).sin() + 3.1
        };
        let drift = Arc::new(|p: &[f64], _t: f64, out: &mut [f64]| {
            let s = (p[0] + p[1]).sin();
            let v = (p[0] + p[1]).cos() / (1.1 + s);
            out[0] = v;
            out[1] = v;
        });
        let sigma = Arc::new(|_: &[f64], _t: f64, out: &mut [f64]| {
            let s = std::f64::consts::SQRT_2;
            out.copy_from_slice(&[s, 0.0, 0.0, s]);
        });
        let c_field = |x: f64, y: f64| -(x * x + y * y) / (1.1 + (x + y).sin());
        let source = move |x: f64, y: f64| {
            let a1 = 2.0 * (y - 2.0) * x;
            let a2 = 3.0 * (x - 2.0) * y;
            let lap = -8.0 * ((y - 2.0) * (y - 2.0) + x * x) * a1.cos()
                - 9.0 * (y * y + (x - 2.0) * (x - 2.0)) * a2.sin();
            let ux = -4.0 * (y - 2.0) * a1.sin() + 3.0 * y * a2.cos();
            let uy = -4.0 * x * a1.sin() + 3.0 * (x - 2.0) * a2.cos();
            let b = (x + y).cos() / (1.1 + (x + y).sin());
            -(lap + b * (ux + uy) + c_field(x, y) * truth(x, y))
        };
        LinearBvpSpec::elliptic(
            domain,
            DiffusionCoefficients::new(2, drift, sigma),
            ScalarDrivers::volume(
                Arc::new(move |p: &[f64], _| c_field(p[0], p[1])),
                Arc::new(move |p: &[f64], _| source(p[0], p[1])),
            ),
            Arc::new(move |p: &[f64], _| truth(p[0], p[1])),
        )
    }

    #[test]
    fn walk_on_spheres_matches_harmonic_truth() {
        // g(x, y) = x^2 - y^2 is harmonic; u(0.3, 0.7) = -0.4.
        let domain = BoxDomain::new(
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![FaceKind::Absorbing; 4],
        )
        .unwrap();
        let g: SpatialField = Arc::new(|p: &[f64]| p[0] * p[0] - p[1] * p[1]);
        let est = walk_on_spheres(
            &domain,
            &g,
            &[0.3, 0.7],
            None,
            20_000,
            RngStream::for_node(55, 0),
        )
        .unwrap();
        let tol = 3.0 * est.std_error + 0.005;
        assert!(
            (est.value + 0.4).abs() < tol,
            "wos estimate {} +- {} vs -0.4",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn walk_on_spheres_rejects_reflecting_faces() {
        let domain = BoxDomain::new(
            vec![0.0],
            vec![1.0],
            vec![FaceKind::Reflecting, FaceKind::Absorbing],
        )
        .unwrap();
        let g: SpatialField = Arc::new(|_: &[f64]| 0.0);
        let err = walk_on_spheres(&domain, &g, &[0.5], None, 10, RngStream::for_node(0, 0));
        assert!(matches!(err, Err(PddError::Unsupported(_))));
    }

    #[test]
    fn missing_initial_datum_is_rejected() {
        let mut spec = LinearBvpSpec::elliptic(
            unit_interval(),
            DiffusionCoefficients::brownian(1, 1.0),
            ScalarDrivers::zero(),
            constant_field(0.0),
        );
        spec.horizon = Horizon::Finite(1.0);
        let err = estimate_point(&spec, &[0.5], 0.5, 10, 1e-2, RngStream::for_node(0, 0));
        assert!(matches!(err, Err(PddError::Config(_))));
    }
}
