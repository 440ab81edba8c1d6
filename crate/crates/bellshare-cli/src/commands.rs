//! The three scenario modes: closed-form verification, grid sweeps and
//! bound-probing optimization.

use bellshare::chsh::{chsh_operator, chsh_value};
use bellshare::linalg::{hermitian_eigen, ComplexMatrix};
use bellshare::predictions::{
    chsh_upper_bound, discrepancy_report, highd_cross_term, qubit_chsh_prediction, xx_prediction,
    zz_prediction,
};
use bellshare::protocol::{bilateral_state, heisenberg_dual, intermediate_state};
use bellshare::quantum::{correlation, pauli, validate_povm, SchmidtVector};
use bellshare::search::{maximize_chsh, sweep, SweepGrid, SweepRecord};
use bellshare::{Error, ProtocolParams};
use serde_json::{json, Value};

/// Equality tolerance for closed-form and dual-route comparisons.
const TOL_EQ: f64 = 1e-10;
/// Slack on the classical bound of 2.
const TOL_BOUND: f64 = 1e-9;
/// Trace and Hermiticity budget for channel outputs.
const TOL_CHANNEL: f64 = 1e-12;
/// Eigenvalues may dip this far below zero.
const TOL_POSITIVITY: f64 = 1e-10;
/// Optimizer values above 2 + this trigger the "investigate" exit code.
pub const OPTIMIZER_BOUND_SLACK: f64 = 1e-6;

/// Numeric CSV cell: 15 significant digits, '.' separator, locale-free.
fn fmt_sig15(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.14e}")
    }
}

fn fmt_schmidt(sv: &SchmidtVector) -> String {
    sv.coeffs()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn schmidt_json(sv: &SchmidtVector) -> Value {
    json!(sv.coeffs())
}

struct Check {
    name: &'static str,
    value: f64,
    threshold: Option<f64>,
    passed: bool,
    note: Option<String>,
}

impl Check {
    fn required(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold: Some(threshold),
            passed: value <= threshold,
            note: None,
        }
    }

    fn informational(name: &'static str, value: f64, note: String) -> Self {
        Self {
            name,
            value,
            threshold: None,
            passed: true,
            note: Some(note),
        }
    }

    fn failure(name: &'static str, note: String) -> Self {
        Self {
            name,
            value: f64::NAN,
            threshold: None,
            passed: false,
            note: Some(note),
        }
    }

    fn to_json(&self) -> Value {
        let mut obj = json!({
            "name": self.name,
            "passed": self.passed,
        });
        let map = obj.as_object_mut().unwrap();
        if self.value.is_finite() {
            map.insert("value".into(), json!(self.value));
        }
        if let Some(t) = self.threshold {
            map.insert("threshold".into(), json!(t));
        }
        if let Some(note) = &self.note {
            map.insert("note".into(), json!(note));
        }
        obj
    }
}

fn density_checks(tag: &'static str, rho: &ComplexMatrix) -> Vec<Check> {
    let mut checks = Vec::new();
    match rho.trace() {
        Ok(t) => checks.push(Check::required(
            match tag {
                "intermediate" => "trace_preservation_intermediate",
                _ => "trace_preservation_final",
            },
            (t.re - 1.0).abs().max(t.im.abs()),
            TOL_CHANNEL,
        )),
        Err(e) => checks.push(Check::failure("trace_preservation", e.to_string())),
    }
    checks.push(Check::required(
        match tag {
            "intermediate" => "hermiticity_intermediate",
            _ => "hermiticity_final",
        },
        rho.hermiticity_residual(),
        TOL_CHANNEL,
    ));
    match hermitian_eigen(rho) {
        Ok((eigvals, _)) => checks.push(Check::required(
            match tag {
                "intermediate" => "positivity_intermediate",
                _ => "positivity_final",
            },
            (-eigvals[0]).max(0.0),
            TOL_POSITIVITY,
        )),
        Err(e) => checks.push(Check::failure("positivity", e.to_string())),
    }
    checks
}

fn dual_route_chsh(p: &ProtocolParams) -> Result<f64, Error> {
    let op = chsh_operator(&p.setting()?);
    let after_alice = heisenberg_dual(&op, &p.alice_round()?)?;
    let after_bob = heisenberg_dual(&after_alice, &p.bob_round()?)?;
    let t = p.initial_state()?.trace_product(&after_bob)?;
    if t.im.abs() > 1e-10 {
        return Err(Error::Contract(format!(
            "dual CHSH trace has imaginary residual {:.3e}",
            t.im
        )));
    }
    Ok(t.re)
}

fn verify_point_qubit(sv: &SchmidtVector, theta: f64, gamma1: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    let evaluated: Result<(), Error> = (|| {
        let p = ProtocolParams::new(2, sv.clone(), theta, gamma1)?;
        let s1 = pauli(1)?;
        let s3 = pauli(3)?;
        let rho0 = p.initial_state()?;
        let t11 = correlation(&rho0, &s1, &s1)?;
        let t33 = correlation(&rho0, &s3, &s3)?;
        let rho1 = intermediate_state(&p)?;
        let rho2 = bilateral_state(&p)?;

        let xx = correlation(&rho2, &s1, &s1)?;
        let zz = correlation(&rho2, &s3, &s3)?;
        checks.push(Check::required(
            "xx_correlation",
            (xx - xx_prediction(theta, gamma1, t11)?).abs(),
            TOL_EQ,
        ));
        checks.push(Check::required(
            "zz_correlation",
            (zz - zz_prediction(theta, t33)?).abs(),
            TOL_EQ,
        ));

        let sim = chsh_value(&rho2, &p.setting()?)?;
        let pred = qubit_chsh_prediction(theta, gamma1, t11, t33)?;
        checks.push(Check::required("chsh_prediction", (sim - pred).abs(), TOL_EQ));
        checks.push(Check::required(
            "chsh_classical_bound",
            (sim - 2.0).max(0.0),
            TOL_BOUND,
        ));
        checks.push(Check::required(
            "chsh_theta_envelope",
            (sim - chsh_upper_bound(theta)?).max(0.0),
            TOL_EQ,
        ));
        checks.push(Check::required(
            "dual_route_agreement",
            (sim - dual_route_chsh(&p)?).abs(),
            TOL_EQ,
        ));

        checks.extend(density_checks("intermediate", &rho1));
        checks.extend(density_checks("final", &rho2));
        Ok(())
    })();
    if let Err(e) = evaluated {
        checks.push(Check::failure("evaluation", e.to_string()));
    }
    checks
}

fn verify_point_highd(d: usize, sv: &SchmidtVector, theta: f64, gamma1: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    let evaluated: Result<(), Error> = (|| {
        let p = ProtocolParams::new(d, sv.clone(), theta, gamma1)?;
        let r = discrepancy_report(&p)?;
        let cross = highd_cross_term(&p)?;

        checks.push(Check::required("cross_term", cross.abs(), TOL_EQ));
        checks.push(Check::required(
            "first_term_bound",
            (r.simulated - 2.0).max(0.0),
            TOL_BOUND,
        ));
        checks.push(Check::required(
            "dual_route_agreement",
            r.delta_sim_dual,
            TOL_EQ,
        ));
        if d == 4 {
            checks.push(Check::required(
                "closed_form_delta",
                r.delta_sim_formula,
                TOL_EQ,
            ));
        } else if r.delta_sim_formula > TOL_EQ {
            checks.push(Check::informational(
                "closed_form_delta",
                r.delta_sim_formula,
                "closed-form mismatch (informational): simulation and dual route agree; \
                 the compact closed-form expression deviates at this dimension"
                    .to_string(),
            ));
        } else {
            checks.push(Check::required(
                "closed_form_delta",
                r.delta_sim_formula,
                TOL_EQ,
            ));
        }

        checks.extend(density_checks("intermediate", &intermediate_state(&p)?));
        checks.extend(density_checks("final", &bilateral_state(&p)?));
        Ok(())
    })();
    if let Err(e) = evaluated {
        checks.push(Check::failure("evaluation", e.to_string()));
    }
    checks
}

/// Run every applicable closed-form comparison over the scenario grid.
/// Returns the JSON report and the exit code (0 all passed, 1 otherwise).
pub fn cmd_verify(
    d: usize,
    schmidt_list: &[SchmidtVector],
    thetas: &[f64],
    gammas: &[f64],
) -> (String, u8) {
    let mut points = Vec::new();
    let mut all_passed = true;
    let mut max_deltas = std::collections::BTreeMap::<&'static str, f64>::new();

    for sv in schmidt_list {
        for &theta in thetas {
            for &gamma1 in gammas {
                let checks = if d == 2 {
                    verify_point_qubit(sv, theta, gamma1)
                } else {
                    verify_point_highd(d, sv, theta, gamma1)
                };
                all_passed &= checks.iter().all(|c| c.passed);
                for c in &checks {
                    if c.value.is_finite() {
                        let entry = max_deltas.entry(c.name).or_insert(0.0);
                        *entry = entry.max(c.value);
                    }
                }
                points.push(json!({
                    "schmidt": schmidt_json(sv),
                    "theta": theta,
                    "gamma1": gamma1,
                    "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
                }));
            }
        }
    }

    let mut notes: Vec<String> = Vec::new();
    if d >= 3 {
        if let Ok(povm) = bellshare::quantum::bob_highd_povm(d, 0.5, 1) {
            if let Some(note) = validate_povm(&povm).note {
                notes.push(note.to_string());
            }
        }
    }

    let report = json!({
        "mode": "verify",
        "d": d,
        "passed": all_passed,
        "interpretation_notes": notes,
        "max_deltas": max_deltas,
        "points": points,
    });
    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    (body, if all_passed { 0 } else { 1 })
}

/// CSV header emitted by [`cmd_sweep`].
pub const SWEEP_HEADER: &str = "d,c_spec,theta,gamma1,chsh_sim,chsh_pred,bound_f,zero_term,delta";

fn sweep_row(r: &SweepRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.d,
        fmt_schmidt(&r.schmidt),
        fmt_sig15(r.theta),
        fmt_sig15(r.gamma1),
        fmt_sig15(r.chsh_sim),
        fmt_sig15(r.chsh_pred),
        fmt_sig15(r.bound),
        fmt_sig15(r.zero_term),
        fmt_sig15(r.delta),
    )
}

/// Evaluate the grid and render the CSV. Exit code: 2 on grid construction
/// errors, 1 if any point failed to evaluate, 3 if any point beats the
/// classical bound, 0 otherwise.
pub fn cmd_sweep(
    d: usize,
    schmidt_list: Vec<SchmidtVector>,
    thetas: Vec<f64>,
    gammas: Vec<f64>,
) -> Result<(String, u8), (u8, String)> {
    let grid =
        SweepGrid::new(d, schmidt_list, thetas, gammas).map_err(|e| (2u8, e.to_string()))?;
    let records = sweep(&grid);

    let mut body = String::with_capacity(64 * (records.len() + 1));
    body.push_str(SWEEP_HEADER);
    body.push('\n');
    let mut any_error = false;
    let mut bound_violated = false;
    for r in &records {
        body.push_str(&sweep_row(r));
        body.push('\n');
        any_error |= r.error.is_some();
        bound_violated |= r.chsh_sim > 2.0 + TOL_BOUND;
    }
    let code = if any_error {
        1
    } else if bound_violated {
        3
    } else {
        0
    };
    Ok((body, code))
}

/// Maximize the second-pair CHSH value and render the JSON result. Exit
/// code 3 when the best value beats 2 + 1e-6 ("investigate"), 0 otherwise.
pub fn cmd_optimize(
    d: usize,
    schmidt: &SchmidtVector,
    restarts: usize,
    budget: usize,
    seed: u64,
    theta_min: f64,
) -> Result<(String, u8), (u8, String)> {
    let result = maximize_chsh(d, schmidt, restarts, budget, seed, theta_min).map_err(|e| {
        match e {
            Error::Argument(_) => (2u8, e.to_string()),
            other => (1u8, other.to_string()),
        }
    })?;

    let report = json!({
        "mode": "optimize",
        "d": d,
        "schmidt": schmidt_json(schmidt),
        "best_params": {
            "theta": result.best_params.theta(),
            "gamma1": result.best_params.gamma1(),
        },
        "best_value": result.best_value,
        "evaluations": result.evaluations,
        "seed": result.seed,
        "flag": if result.budget_exhausted { "budget" } else { "converged" },
        "trace": result
            .trace
            .iter()
            .map(|&(theta, gamma1, value)| json!({
                "theta": theta,
                "gamma1": gamma1,
                "value": value,
            }))
            .collect::<Vec<_>>(),
    });
    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let code = if result.best_value > 2.0 + OPTIMIZER_BOUND_SLACK {
        3
    } else {
        0
    };
    Ok((body, code))
}
