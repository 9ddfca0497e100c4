//! Verification records for the `verify` subcommand.

use std::f64::consts::PI;

use lily_core::dynamics::EvolutionEngine;
use lily_core::krylov::{krylov_reduce, DEFAULT_TOL as KRYLOV_TOL};
use lily_core::lily::{build_lily, LilyParams};
use lily_core::routing::{
    closed_vs_numeric, default_window, optimal_time, projector_residual, silence,
    superposition_fidelity, ClosedForm,
};
use serde::Serialize;

use crate::CliError;

/// Entry-wise tolerance for the reduced Hamiltonian against its template.
pub const REDUCED_FORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= threshold,
            Relation::AtLeast => value >= threshold,
            Relation::Equal => value == threshold,
        };
        Check {
            name: name.into(),
            value,
            relation,
            threshold,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationRecord {
    pub params: LilyParams,
    pub t_star: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationRecord {
    pub fn new(params: LilyParams, t_star: f64, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        VerificationRecord {
            params,
            t_star,
            checks,
            pass,
        }
    }
}

/// Run every perfect-routing check for one Lily instance.
///
/// Probabilities and fidelities are measured at the closed-form optimum in
/// the default window; projector residuals at `(2q + 1) pi`.
pub fn verify(p: &LilyParams, q_list: &[usize], tol: f64, grid: &[f64]) -> Result<VerificationRecord, CliError> {
    let (graph, layout) = build_lily(p)?;
    let h = graph.hamiltonian();
    let engine = EvolutionEngine::new(&h);
    let (t_star, _) = optimal_time(p.d, p.beta, default_window())?;

    let p1f = engine.transition_probability(layout.input1(), layout.target_output(), t_star)?;
    let p2r = engine.transition_probability(layout.input2(), layout.target_routing(), t_star)?;
    let mut checks = vec![
        Check::new("p1f_at_tstar", p1f, Relation::AtLeast, 1.0 - tol),
        Check::new("p2r_at_tstar", p2r, Relation::AtLeast, 1.0 - tol),
    ];

    let red = krylov_reduce(h.matrix(), layout.target_output(), KRYLOV_TOL)?;
    checks.push(Check::new("krylov_dim", red.dim() as f64, Relation::Equal, 5.0));
    if red.dim() == 5 {
        let dev = red.verify_reduced_form(p.d, p.beta)?;
        checks.push(Check::new("reduced_form_deviation", dev, Relation::AtMost, REDUCED_FORM_TOL));
        for &q in q_list {
            let t = (2 * q + 1) as f64 * PI;
            checks.push(Check::new(
                format!("projector_residual_q{q}"),
                projector_residual(red.reduced_h(), t),
                Relation::AtMost,
                tol,
            ));
        }
    }

    let residual = closed_vs_numeric(&engine, p, &ClosedForm::new(p.d, p.beta), grid)?;
    checks.push(Check::new("closed_vs_numeric", residual, Relation::AtMost, tol));
    checks.push(Check::new("non_target_population", silence(&engine, &layout, grid)?, Relation::AtMost, tol));

    // fixed (alpha, gamma) pairs covering both amplitudes and relative phases
    let worst = (0..20)
        .map(|i| {
            let alpha = 0.05 + 1.5 * i as f64 / 19.0;
            let gamma = 2.0 * PI * ((7 * i) % 20) as f64 / 20.0;
            superposition_fidelity(&engine, &layout, alpha, gamma, t_star)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(1.0f64, f64::min);
    checks.push(Check::new("superposition_fidelity_min", worst, Relation::AtLeast, 1.0 - 10.0 * tol));

    Ok(VerificationRecord::new(*p, t_star, checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lily_core::dynamics::default_grid;
    use lily_core::lily::beta_star;

    #[test]
    fn tuned_instance_passes() {
        let p = LilyParams::new(1, 2, 0, beta_star(2, 1).unwrap()).unwrap();
        let rec = verify(&p, &[0, 1, 2], 1e-10, &default_grid()).unwrap();
        for c in &rec.checks {
            assert!(c.pass, "{c:?}");
        }
        assert!(rec.pass);
    }

    #[test]
    fn untuned_instance_fails() {
        let p = LilyParams::new(2, 2, 1, 1.0).unwrap();
        let rec = verify(&p, &[0], 1e-10, &default_grid()).unwrap();
        assert!(!rec.pass);
        let proj = rec.checks.iter().find(|c| c.name == "projector_residual_q0").unwrap();
        assert!(proj.value > 0.1);
    }

    #[test]
    fn overall_status_follows_checks() {
        let p = LilyParams::new(1, 2, 0, 1.0).unwrap();
        let ok = VerificationRecord::new(p, PI, vec![Check::new("a", 1.0, Relation::AtMost, 2.0)]);
        assert!(ok.pass);
        let bad = VerificationRecord::new(
            p,
            PI,
            vec![
                Check::new("a", 1.0, Relation::AtMost, 2.0),
                Check::new("b", 1.0, Relation::AtLeast, 2.0),
            ],
        );
        assert!(!bad.pass);
    }
}
