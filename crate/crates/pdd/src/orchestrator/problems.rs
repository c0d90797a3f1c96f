//! Built-in problem presets.
//!
//! Each preset bundles everything both stages need to agree on one PDE: the
//! global domain, the pathwise specification used by the interface stage
//! (a linear two-point estimate or a branching tree), the deterministic
//! ingredients for the subdomain stage, and — where one exists — a closed
//! form to measure errors against.
//!
//! The catalog holds four problems:
//!
//! * `kpp` — the semilinear front equation `u_t = u_xx + u^2 - u`, whose
//!   traveling-wave solution `u(x, t) = 1 - (1 + e^{x/sqrt(6) - 5t/6})^{-2}`
//!   is exact, with classical binary branching in the interface stage;
//! * `heat` — `u_t = u_xx` with a single sine mode, the linear sanity case;
//! * `cva` — a semilinear valuation-adjustment equation whose quartic
//!   nonconservative nonlinearity exercises marked trees and the growth
//!   assumption checker;
//! * `elliptic` — a manufactured stationary problem on the unit square with
//!   drift and a nonpositive zero-order term, exercising the linear path
//!   estimator in stationary mode and the five-point subdomain solver.

use std::sync::Arc;

use crate::branching::{AlphaCoefficient, BranchingSpec};
use crate::error::{PddError, Result};
use crate::feynman_kac::{LinearBvpSpec, SpaceTimeField, SpatialField};
use crate::geometry::{BoxDomain, FaceKind};
use crate::numerics::polyval;
use crate::pde::elliptic::{EllipticProblem2d, PlaneFn};
use crate::pde::parabolic::{LineFn, ReactionFn, TimeFn};
use crate::sde::{DiffusionCoefficients, ScalarDrivers};

/// The built-in problems, selectable by name from configs and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Kpp,
    Heat,
    Cva,
    Elliptic,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Kpp => "kpp",
            ProblemKind::Heat => "heat",
            ProblemKind::Cva => "cva",
            ProblemKind::Elliptic => "elliptic",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = PddError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kpp" => Ok(ProblemKind::Kpp),
            "heat" => Ok(ProblemKind::Heat),
            "cva" => Ok(ProblemKind::Cva),
            "elliptic" => Ok(ProblemKind::Elliptic),
            other => Err(PddError::Config(format!(
                "unknown problem kind {other:?}; expected kpp, heat, cva, or elliptic"
            ))),
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reference solution at a grid point `(x, level)`, where the level is time
/// for evolution problems and the second spatial coordinate for stationary
/// ones.
pub type ReferenceSolution = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The pathwise estimator the interface stage runs.
pub enum Stage1 {
    Linear(LinearBvpSpec),
    Branching(BranchingSpec),
}

/// Deterministic ingredients for the subdomain stage.
pub enum Stage2 {
    /// One-dimensional evolution: each subdomain becomes a tridiagonal
    /// Crank-Nicolson solve. `outer` holds the boundary closures of the two
    /// *global* faces; interface faces get interpolants at run time.
    Parabolic {
        diffusion: f64,
        reaction: Option<ReactionFn>,
        initial: LineFn,
        outer: (TimeFn, TimeFn),
    },
    /// Two-dimensional stationary problem covering the *global* domain;
    /// subdomain strips inherit its coefficients and swap in interpolants
    /// on interface faces.
    Elliptic(EllipticProblem2d),
}

/// A fully assembled problem: everything the orchestrator needs.
pub struct Preset {
    pub kind: ProblemKind,
    pub label: String,
    /// Global spatial domain (one axis for evolution problems, two for the
    /// stationary one). Decomposition always cuts axis 0.
    pub domain: BoxDomain,
    /// Final time for evolution problems; `None` marks a stationary
    /// problem, whose interface levels run along axis 1 instead of time.
    pub horizon: Option<f64>,
    pub closed_form: Option<ReferenceSolution>,
    pub stage1: Stage1,
    pub stage2: Stage2,
}

impl Preset {
    pub fn is_stationary(&self) -> bool {
        self.horizon.is_none()
    }

    /// Range of the interface level coordinate: `[0, T]` for evolution
    /// problems, the axis-1 extent for stationary ones.
    pub fn level_span(&self) -> (f64, f64) {
        match self.horizon {
            Some(t_final) => (0.0, t_final),
            None => (self.domain.lo()[1], self.domain.hi()[1]),
        }
    }
}

/// Build a preset, optionally overriding the default domain and horizon.
///
/// Domain overrides are `[lo, hi]` along the decomposition axis and apply
/// to the one-dimensional evolution problems only; the stationary problem
/// is manufactured for the unit square and refuses both overrides.
pub fn preset(kind: ProblemKind, domain: Option<&[f64]>, horizon: Option<f64>) -> Result<Preset> {
    if let Some(t) = horizon {
        if !(t > 0.0) || !t.is_finite() {
            return Err(PddError::Config(format!(
                "horizon must be positive and finite, got {t}"
            )));
        }
    }
    match kind {
        ProblemKind::Kpp => kpp_preset(interval_override(domain, [-125.0, 75.0])?, horizon),
        ProblemKind::Heat => heat_preset(interval_override(domain, [0.0, 1.0])?, horizon),
        ProblemKind::Cva => cva_preset(interval_override(domain, [-10.0, 10.0])?, horizon),
        ProblemKind::Elliptic => {
            if domain.is_some() || horizon.is_some() {
                return Err(PddError::Config(
                    "the elliptic preset is manufactured for the unit square and \
                     accepts no domain or horizon override"
                        .into(),
                ));
            }
            elliptic_preset()
        }
    }
}

fn interval_override(domain: Option<&[f64]>, default: [f64; 2]) -> Result<[f64; 2]> {
    let d = match domain {
        None => default,
        Some(&[lo, hi]) => [lo, hi],
        Some(other) => {
            return Err(PddError::Config(format!(
                "domain override must be [lo, hi], got {} value(s)",
                other.len()
            )))
        }
    };
    if !(d[0] < d[1]) || !d[0].is_finite() || !d[1].is_finite() {
        return Err(PddError::Config(format!(
            "domain [{}, {}] must be a finite interval with lo < hi",
            d[0], d[1]
        )));
    }
    Ok(d)
}

/// Traveling front of `u_t = u_xx + u^2 - u`.
fn kpp_front(x: f64, t: f64) -> f64 {
    let e = (x / 6.0_f64.sqrt() - 5.0 * t / 6.0).exp();
    let w = 1.0 + e;
    1.0 - 1.0 / (w * w)
}

fn kpp_preset(interval: [f64; 2], horizon: Option<f64>) -> Result<Preset> {
    let t_final = horizon.unwrap_or(1.0);
    let domain = BoxDomain::interval(interval[0], interval[1])?;
    let closed: ReferenceSolution = Arc::new(kpp_front);
    let terminal: SpatialField = Arc::new(|p: &[f64]| kpp_front(p[0], 0.0));
    let dirichlet: SpaceTimeField = Arc::new(|p: &[f64], t: f64| kpp_front(p[0], t));
    // Binary branching at unit rate with driver variance 2 represents the
    // reaction u^2 - u; truncating the tree to the problem domain with the
    // exact front as boundary data keeps both stages on the same problem.
    let spec = BranchingSpec::classical(
        DiffusionCoefficients::brownian(1, std::f64::consts::SQRT_2),
        1.0,
        vec![0.0, 0.0, 1.0],
        terminal,
        1.0,
    )?
    .with_domain(domain.clone(), dirichlet)?;
    let left: TimeFn = Arc::new(move |t| kpp_front(interval[0], t));
    let right: TimeFn = Arc::new(move |t| kpp_front(interval[1], t));
    Ok(Preset {
        kind: ProblemKind::Kpp,
        label: "semilinear front equation".into(),
        domain,
        horizon: Some(t_final),
        closed_form: Some(closed),
        stage1: Stage1::Branching(spec),
        stage2: Stage2::Parabolic {
            diffusion: 1.0,
            reaction: Some(Arc::new(|_x, _t, u| u * u - u)),
            initial: Arc::new(|x| kpp_front(x, 0.0)),
            outer: (left, right),
        },
    })
}

fn heat_preset(interval: [f64; 2], horizon: Option<f64>) -> Result<Preset> {
    let t_final = horizon.unwrap_or(0.25);
    let domain = BoxDomain::interval(interval[0], interval[1])?;
    let pi = std::f64::consts::PI;
    let mode = move |x: f64, t: f64| (-pi * pi * t).exp() * (pi * x).sin();
    let closed: ReferenceSolution = Arc::new(mode);
    // One sine mode of the heat equation; the closed form solves the PDE on
    // the whole line, so it doubles as exact boundary data for any interval.
    let spec = LinearBvpSpec::parabolic(
        domain.clone(),
        DiffusionCoefficients::brownian(1, std::f64::consts::SQRT_2),
        ScalarDrivers::zero(),
        Arc::new(move |p: &[f64], t: f64| mode(p[0], t)),
        Arc::new(move |p: &[f64]| mode(p[0], 0.0)),
        t_final,
    );
    let left: TimeFn = Arc::new(move |t| mode(interval[0], t));
    let right: TimeFn = Arc::new(move |t| mode(interval[1], t));
    Ok(Preset {
        kind: ProblemKind::Heat,
        label: "heat equation, single mode".into(),
        domain,
        horizon: Some(t_final),
        closed_form: Some(closed),
        stage1: Stage1::Linear(spec),
        stage2: Stage2::Parabolic {
            diffusion: 1.0,
            reaction: None,
            initial: Arc::new(move |x| mode(x, 0.0)),
            outer: (left, right),
        },
    })
}

/// Polynomial nonlinearity of the valuation-adjustment problem.
pub const CVA_NONLINEARITY: [f64; 5] = [0.0586, 0.5, 0.8199, 0.0, -0.4095];

/// Offspring law paired with [`CVA_NONLINEARITY`]: uniform over the degrees
/// that actually appear.
pub const CVA_OFFSPRING: [f64; 5] = [0.25, 0.25, 0.25, 0.0, 0.25];

fn cva_preset(interval: [f64; 2], horizon: Option<f64>) -> Result<Preset> {
    let t_final = horizon.unwrap_or(0.25);
    let domain = BoxDomain::interval(interval[0], interval[1])?;
    let alphas: Vec<AlphaCoefficient> = CVA_NONLINEARITY
        .iter()
        .map(|&a| AlphaCoefficient::constant(a))
        .collect();
    // Marked tree in free space: cosine terminal datum, quartic generator.
    // No truncation — over the horizons of interest the paths stay far from
    // any reasonable interval boundary.
    let spec = BranchingSpec::marked(
        DiffusionCoefficients::brownian(1, std::f64::consts::SQRT_2),
        1.0,
        CVA_OFFSPRING.to_vec(),
        alphas,
        Arc::new(|p: &[f64]| p[0].cos()),
        1.0,
    )?;
    let reaction: ReactionFn = Arc::new(|_x, _t, u| polyval(&CVA_NONLINEARITY, u) - u);
    let left = cva_edge_boundary(interval[0]);
    let right = cva_edge_boundary(interval[1]);
    Ok(Preset {
        kind: ProblemKind::Cva,
        label: "valuation adjustment equation".into(),
        domain,
        horizon: Some(t_final),
        closed_form: None,
        stage1: Stage1::Branching(spec),
        stage2: Stage2::Parabolic {
            diffusion: 1.0,
            reaction: Some(Arc::new(move |x, t, u| reaction(x, t, u))),
            initial: Arc::new(|x| x.cos()),
            outer: (left, right),
        },
    })
}

/// Boundary closure for the valuation problem: the reaction ODE
/// `w' = F(w) - w` started from the edge datum. Diffusion is negligible at
/// the far-away edges over the horizons of interest, so the spatially
/// frozen ODE is accurate there to within the scheme's own error.
fn cva_edge_boundary(edge: f64) -> TimeFn {
    let w0 = edge.cos();
    Arc::new(move |t: f64| {
        if t <= 0.0 {
            return w0;
        }
        let rhs = |w: f64| polyval(&CVA_NONLINEARITY, w) - w;
        let n = ((t / 5e-5).ceil() as usize).clamp(32, 200_000);
        let h = t / n as f64;
        let mut w = w0;
        for _ in 0..n {
            let k1 = rhs(w);
            let k2 = rhs(w + 0.5 * h * k1);
            let k3 = rhs(w + 0.5 * h * k2);
            let k4 = rhs(w + h * k3);
            w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        w
    })
}

fn elliptic_preset() -> Result<Preset> {
    let domain = BoxDomain::new(
        vec![0.0, 0.0],
        vec![1.0, 1.0],
        vec![FaceKind::Absorbing; 4],
    )?;
    // Manufactured stationary problem: the solution is prescribed and the
    // source is whatever the operator needs to make it exact.
    let truth = |x: f64, y: f64| {
        2.0 * (2.0 * (y - 2.0) * x).cos() + (3.0 * (x - 2.0) * y).sin() + 3.1
    };
    let c_field = |x: f64, y: f64| -(x * x + y * y) / (1.1 + (x + y).sin());
    let b_field = |x: f64, y: f64| (x + y).cos() / (1.1 + (x + y).sin());
    let source = move |x: f64, y: f64| {
        let a1 = 2.0 * (y - 2.0) * x;
        let a2 = 3.0 * (x - 2.0) * y;
        let lap = -8.0 * ((y - 2.0) * (y - 2.0) + x * x) * a1.cos()
            - 9.0 * (y * y + (x - 2.0) * (x - 2.0)) * a2.sin();
        let ux = -4.0 * (y - 2.0) * a1.sin() + 3.0 * y * a2.cos();
        let uy = -4.0 * x * a1.sin() + 3.0 * (x - 2.0) * a2.cos();
        -(lap + b_field(x, y) * (ux + uy) + c_field(x, y) * truth(x, y))
    };
    let drift = Arc::new(move |p: &[f64], _t: f64, out: &mut [f64]| {
        let v = b_field(p[0], p[1]);
        out[0] = v;
        out[1] = v;
    });
    let sigma = Arc::new(|_: &[f64], _t: f64, out: &mut [f64]| {
        let s = std::f64::consts::SQRT_2;
        out.copy_from_slice(&[s, 0.0, 0.0, s]);
    });
    let spec = LinearBvpSpec::elliptic(
        domain.clone(),
        DiffusionCoefficients::new(2, drift, sigma),
        ScalarDrivers::volume(
            Arc::new(move |p: &[f64], _| c_field(p[0], p[1])),
            Arc::new(move |p: &[f64], _| source(p[0], p[1])),
        ),
        Arc::new(move |p: &[f64], _| truth(p[0], p[1])),
    );
    let dirichlet: PlaneFn = Arc::new(truth);
    let problem = EllipticProblem2d {
        domain: domain.clone(),
        a: (2.0, 2.0),
        b1: Some(Arc::new(b_field)),
        b2: Some(Arc::new(b_field)),
        c: Some(Arc::new(c_field)),
        f: Some(Arc::new(source)),
        dirichlet,
    };
    Ok(Preset {
        kind: ProblemKind::Elliptic,
        label: "manufactured stationary problem".into(),
        domain,
        horizon: None,
        closed_form: Some(Arc::new(truth)),
        stage1: Stage1::Linear(spec),
        stage2: Stage2::Elliptic(problem),
    })
}
