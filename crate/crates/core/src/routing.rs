//! Routing probabilities of the Lily graph: closed forms, optimal routing
//! time, robustness curvature, the mirror-projector check and per-point
//! reports that compare the closed forms with full-graph evolution.
//!
//! The reduced dynamics is a five-site chain with couplings
//! `(1, b, b, 1)`, `b = beta sqrt(d)`, whose spectrum is
//! `{0, +-1, +-Omega}` with `Omega = sqrt(1 + 2 d beta^2)`. Writing
//! `A = 2 d beta^2`:
//!
//! ```text
//! P_1f(t) = [A - (A + 1) cos t + cos(Omega t)]^2 / (4 (A + 1)^2)
//! P_2r(t) = [cos t - cos(Omega t)]^2 / 4
//! ```

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{default_grid, DynamicsError, EvolutionEngine, WalkerState};
use crate::graph::max_abs;
use crate::krylov::{krylov_reduce, lily_chain, KrylovError, DEFAULT_TOL};
use crate::lily::{build_lily, LilyLayout, LilyParams, ParamError};

/// Grid step of the coarse scan in [`optimal_time`].
pub const SCAN_STEP: f64 = 1e-4;
/// Base step of the second-derivative estimate.
pub const CURVATURE_STEP: f64 = 1e-4;
const REFINE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("search window [{0}, {1}] is empty")]
    EmptyWindow(f64, f64),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transfer {
    /// Input `|1>` to the target output `|f>`.
    #[serde(rename = "1f")]
    OneToF,
    /// Input `|2>` to the target routing vertex `|r>`.
    #[serde(rename = "2r")]
    TwoToR,
}

/// `c * g(t)^2` with `g(t) = a - b cos t + s cos(omega t)`, together with its
/// first two derivatives.
#[derive(Debug, Clone, Copy)]
struct SquaredCosines {
    a: f64,
    b: f64,
    s: f64,
    omega: f64,
    c: f64,
}

impl SquaredCosines {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (sin_t, cos_t) = t.sin_cos();
        let (sin_w, cos_w) = (self.omega * t).sin_cos();
        let g = self.a - self.b * cos_t + self.s * cos_w;
        let g1 = self.b * sin_t - self.s * self.omega * sin_w;
        let g2 = self.b * cos_t - self.s * self.omega * self.omega * cos_w;
        (self.c * g * g, 2.0 * self.c * g * g1, 2.0 * self.c * (g1 * g1 + g * g2))
    }
}

/// Closed-form routing probabilities for one `(d, beta)` pair.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    p1f: SquaredCosines,
    p2r: SquaredCosines,
}

impl ClosedForm {
    /// Frequency `sqrt(1 + 2 d beta^2)`, derived from the reduced chain.
    pub fn new(d: usize, beta: f64) -> Self {
        let a = 2.0 * d as f64 * beta * beta;
        Self::with_terms(a, a + 1.0, (1.0 + a).sqrt())
    }

    /// The form with frequency `sqrt(beta^2 + 2 d)` and denominator
    /// `(beta^2 + 2 d)^2`. Coincides with [`ClosedForm::new`] only at
    /// `beta = 1`.
    pub fn paper_literal(d: usize, beta: f64) -> Self {
        let a = 2.0 * d as f64 * beta * beta;
        let b = 2.0 * d as f64 + beta * beta;
        Self::with_terms(a, b, b.sqrt())
    }

    fn with_terms(a: f64, b: f64, omega: f64) -> Self {
        ClosedForm {
            p1f: SquaredCosines {
                a,
                b,
                s: 1.0,
                omega,
                c: 0.25 / (b * b),
            },
            p2r: SquaredCosines {
                a: 0.0,
                b: -1.0,
                s: -1.0,
                omega,
                c: 0.25,
            },
        }
    }

    pub fn p1f(&self, t: f64) -> f64 {
        self.p1f.eval(t).0
    }

    pub fn p2r(&self, t: f64) -> f64 {
        self.p2r.eval(t).0
    }

    pub fn probability(&self, which: Transfer, t: f64) -> f64 {
        self.curve(which).eval(t).0
    }

    fn curve(&self, which: Transfer) -> &SquaredCosines {
        match which {
            Transfer::OneToF => &self.p1f,
            Transfer::TwoToR => &self.p2r,
        }
    }
}

pub fn closed_form_p1f(d: usize, beta: f64, t: f64) -> f64 {
    ClosedForm::new(d, beta).p1f(t)
}

pub fn closed_form_p2r(d: usize, beta: f64, t: f64) -> f64 {
    ClosedForm::new(d, beta).p2r(t)
}

/// Default search window `[0.8 pi, 1.2 pi]`.
pub fn default_window() -> (f64, f64) {
    (0.8 * PI, 1.2 * PI)
}

/// Maximize `P_1f` over `window`.
pub fn optimal_time(d: usize, beta: f64, window: (f64, f64)) -> Result<(f64, f64), RoutingError> {
    optimal_time_with(&ClosedForm::new(d, beta), window, SCAN_STEP)
}

/// Grid scan at `step`, then refinement of the best cell: a parabolic vertex
/// through the three bracketing samples seeds a Newton iteration on `P'`,
/// with bisection whenever a Newton step leaves the bracket.
pub fn optimal_time_with(
    form: &ClosedForm,
    window: (f64, f64),
    step: f64,
) -> Result<(f64, f64), RoutingError> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(RoutingError::EmptyWindow(lo, hi));
    }
    let curve = form.p1f;
    let cells = ((hi - lo) / step).ceil().max(1.0) as usize;
    let h = (hi - lo) / cells as f64;
    let at = |i: usize| if i == cells { hi } else { lo + h * i as f64 };

    let (best, _) = (0..=cells)
        .map(|i| (i, curve.eval(at(i)).0))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    if best == 0 || best == cells {
        let t = at(best);
        return Ok((t, curve.eval(t).0));
    }

    let (mut a, mut b) = (at(best - 1), at(best + 1));
    let (fa, fm, fb) = (curve.eval(a).0, curve.eval(at(best)).0, curve.eval(b).0);
    let denom = fa - 2.0 * fm + fb;
    let mut t = if denom < 0.0 {
        at(best) + 0.5 * h * (fa - fb) / denom
    } else {
        at(best)
    };
    t = t.clamp(a, b);

    for _ in 0..200 {
        let (_, d1, d2) = curve.eval(t);
        if d1 > 0.0 {
            a = t;
        } else {
            b = t;
        }
        let newton = if d2 < 0.0 { t - d1 / d2 } else { f64::NAN };
        let next = if newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let delta = (next - t).abs();
        t = next;
        if delta < REFINE_TOL || d1 == 0.0 {
            break;
        }
    }
    Ok((t, curve.eval(t).0))
}

/// Second derivative by central differences with one Richardson step.
pub fn second_derivative(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    let central = |h: f64| (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
    let coarse = central(h);
    let fine = central(0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

/// `d^2 P / dt^2` of the closed form at `t_star`.
pub fn curvature(d: usize, beta: f64, t_star: f64, which: Transfer) -> f64 {
    let form = ClosedForm::new(d, beta);
    second_derivative(|t| form.probability(which, t), t_star, CURVATURE_STEP)
}

/// Anti-diagonal exchange matrix of size `m`.
pub fn mirror(m: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(m, m, |i, j| {
        if i + j == m - 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `max |exp(-i H t) - J|` for a reduced Hamiltonian and the exchange `J`.
pub fn projector_residual(reduced_h: &DMatrix<Complex64>, t: f64) -> f64 {
    let u = EvolutionEngine::from_matrix(reduced_h).propagator(t);
    max_abs(&(u - mirror(reduced_h.nrows())))
}

/// Projector check of the reduced chain at `t = (2q + 1) pi`.
pub fn verify_projector(d: usize, beta: f64, q: usize) -> f64 {
    projector_residual(&lily_chain(d, beta), (2 * q + 1) as f64 * PI)
}

#[derive(Debug, Clone, Copy)]
pub struct RouteOptions {
    pub window: (f64, f64),
    pub paper_literal: bool,
}

impl Default for RouteOptions {
    fn default() -> Self {
        RouteOptions {
            window: default_window(),
            paper_literal: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingReport {
    pub d: usize,
    pub n: usize,
    pub beta: f64,
    pub t_star: f64,
    pub p1f_at_tstar: f64,
    pub p2r_at_tstar: f64,
    pub gap: f64,
    pub curvature_1f: f64,
    pub curvature_2r: f64,
    pub projector_residual: f64,
    pub closed_vs_numeric_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RoutingReport {
    /// A row recording a failed evaluation; numeric fields are NaN.
    pub fn failed(d: usize, n: usize, beta: f64, err: &RoutingError) -> Self {
        RoutingReport {
            d,
            n,
            beta,
            t_star: f64::NAN,
            p1f_at_tstar: f64::NAN,
            p2r_at_tstar: f64::NAN,
            gap: f64::NAN,
            curvature_1f: f64::NAN,
            curvature_2r: f64::NAN,
            projector_residual: f64::NAN,
            closed_vs_numeric_residual: f64::NAN,
            error: Some(err.to_string()),
        }
    }
}

/// Largest `|closed form - full graph|` of both routing probabilities over
/// `times`, using an already decomposed Lily Hamiltonian.
pub fn closed_vs_numeric(
    engine: &EvolutionEngine,
    params: &LilyParams,
    form: &ClosedForm,
    times: &[f64],
) -> Result<f64, RoutingError> {
    let (_, layout) = build_lily(params)?;
    let (one, two) = (layout.input1(), layout.input2());
    let (r, f) = (layout.target_routing(), layout.target_output());
    let mut worst = 0.0f64;
    for &t in times {
        let p1f = engine.transition_probability(one, f, t)?;
        let p2r = engine.transition_probability(two, r, t)?;
        worst = worst.max((p1f - form.p1f(t)).abs()).max((p2r - form.p2r(t)).abs());
    }
    Ok(worst)
}

/// Largest total probability found on the non-target routing and output
/// vertices over `times`, for walkers starting at `|1>` and at `|2>`.
pub fn silence(engine: &EvolutionEngine, layout: &LilyLayout, times: &[f64]) -> Result<f64, RoutingError> {
    let silent = layout.silent_vertices();
    let mut worst = 0.0f64;
    for start in [layout.input1(), layout.input2()] {
        let psi = WalkerState::localized(layout.n_vertices(), start)?;
        let traj = engine.trajectory(&psi)?;
        for &t in times {
            let p = traj.probabilities_at(t);
            worst = worst.max(silent.iter().map(|v| p[v.0]).sum());
        }
    }
    Ok(worst)
}

/// Fidelity of `cos a |1> + e^{i g} sin a |2>` routed onto
/// `cos a |f> + e^{i g} sin a |r>` at time `t`.
pub fn superposition_fidelity(
    engine: &EvolutionEngine,
    layout: &LilyLayout,
    alpha: f64,
    gamma: f64,
    t: f64,
) -> Result<f64, RoutingError> {
    let n = layout.n_vertices();
    let c0 = Complex64::new(alpha.cos(), 0.0);
    let c1 = Complex64::from_polar(alpha.sin(), gamma);
    let psi0 = WalkerState::superposition(n, &[(layout.input1(), c0), (layout.input2(), c1)])?;
    let psif = WalkerState::superposition(
        n,
        &[(layout.target_output(), c0), (layout.target_routing(), c1)],
    )?;
    Ok(engine.fidelity(&psi0, &psif, t)?)
}

/// Evaluate one parameter point: closed-form optimum and curvatures,
/// full-graph probabilities at that optimum, the projector residual of the
/// Krylov-reduced Hamiltonian at `t = pi`, and the closed-form versus
/// full-graph residual on the default grid.
pub fn route(d: usize, n: usize, beta: f64, options: &RouteOptions) -> Result<RoutingReport, RoutingError> {
    let params = LilyParams::new(n, d, 0, beta)?;
    let form = if options.paper_literal {
        ClosedForm::paper_literal(d, beta)
    } else {
        ClosedForm::new(d, beta)
    };
    let (t_star, _) = optimal_time_with(&form, options.window, SCAN_STEP)?;

    let (graph, layout) = build_lily(&params)?;
    let h = graph.hamiltonian();
    let engine = EvolutionEngine::new(&h);
    let p1f = engine.transition_probability(layout.input1(), layout.target_output(), t_star)?;
    let p2r = engine.transition_probability(layout.input2(), layout.target_routing(), t_star)?;

    let red = krylov_reduce(h.matrix(), layout.target_output(), DEFAULT_TOL)?;
    let proj = projector_residual(red.reduced_h(), PI);
    let residual = closed_vs_numeric(&engine, &params, &form, &default_grid())?;

    let second = |which| second_derivative(|t| form.probability(which, t), t_star, CURVATURE_STEP);
    Ok(RoutingReport {
        d,
        n,
        beta,
        t_star,
        p1f_at_tstar: p1f,
        p2r_at_tstar: p2r,
        gap: (p1f - p2r).abs(),
        curvature_1f: second(Transfer::OneToF),
        curvature_2r: second(Transfer::TwoToR),
        projector_residual: proj,
        closed_vs_numeric_residual: residual,
        error: None,
    })
}
