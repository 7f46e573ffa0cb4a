use std::sync::Arc;

use normbranch_core::branch::{
    brezis_nirenberg_window, count_is_exact, find_rho_star, mass_supremum_probe, solve_normalized, trace_branch,
    Branch, StepPolicy,
};
use normbranch_core::pass::{bubble_norms, level_vs_eta, monotonicity_violation, mountain_pass, Cutoff, PassConfig};
use normbranch_core::shooter::Profile;
use normbranch_core::varflow::{first_mode, flow_to_minimizer, theta_curve, FlowConfig, FlowResult, Mesh};
use normbranch_core::verify::{
    bubble_asymptotics_fit, level_bounds, nehari_residual, pohozaev_residual, residual_convergence, verify_solution,
    VerificationReport,
};
use normbranch_core::{lambda1, sobolev_constant, ProblemSpec, RadialSolution, Shooter};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    BubbleArgs, Command, MinimizeArgs, NormalizedArgs, PassArgs, RhoMethod, RhoStarArgs, SolveArgs, ThetaArgs,
    VerifyArgs, Window,
};
use crate::error::{CliError, Exit};

/// What a subcommand produced.
pub struct Outcome {
    pub exit: Exit,
    pub results: Vec<Value>,
    pub verification: Value,
    pub csv: Option<String>,
}

impl Outcome {
    fn ok(results: Vec<Value>, verification: Value, csv: Option<String>) -> Self {
        Self {
            exit: Exit::Ok,
            results,
            verification,
            csv,
        }
    }

    /// Exit 3 when a certificate fails.
    fn certified(mut self, pass: bool) -> Self {
        if !pass && self.exit == Exit::Ok {
            self.exit = Exit::Failed;
        }
        self
    }
}

/// One certified solution, in branch CSV column order.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub lambda: f64,
    pub omega: f64,
    pub center_value: f64,
    pub rho: f64,
    pub energy: f64,
    pub grad_norm_sq: f64,
    pub boundary_slope: f64,
    pub pohozaev_residual: f64,
    pub nehari_residual: f64,
}

pub const ROW_COLUMNS: [&str; 9] = [
    "lambda",
    "omega",
    "center_value",
    "rho",
    "energy",
    "grad_norm_sq",
    "boundary_slope",
    "pohozaev_residual",
    "nehari_residual",
];

impl Row {
    pub fn of(sol: &RadialSolution) -> Self {
        Self {
            lambda: sol.lambda(),
            omega: sol.omega,
            center_value: sol.center_value,
            rho: sol.rho,
            energy: sol.energy,
            grad_norm_sq: sol.grad_norm_sq,
            boundary_slope: sol.boundary_slope,
            pohozaev_residual: pohozaev_residual(sol),
            nehari_residual: nehari_residual(sol),
        }
    }
}

#[derive(Serialize)]
struct SolutionOut {
    #[serde(flatten)]
    row: Row,
    lp_norm: f64,
    lq_norm: f64,
    boundary_value: f64,
    sup_norm: f64,
}

fn solution_json(sol: &RadialSolution) -> Value {
    json(&SolutionOut {
        row: Row::of(sol),
        lp_norm: sol.lp_norm,
        lq_norm: sol.lq_norm,
        boundary_value: sol.boundary_value,
        sup_norm: sol.sup_norm(),
    })
}

fn json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

fn csv_table<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let err = |e: csv::Error| CliError::failed(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::failed(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn rows_csv(rows: &[Row]) -> Result<String, CliError> {
    csv_table(&ROW_COLUMNS, rows)
}

fn profile_csv(p: &Profile) -> Result<String, CliError> {
    let rows: Vec<(f64, f64, f64)> = (0..p.len()).map(|i| (p.r[i], p.u[i], p.du[i])).collect();
    csv_table(&["r", "u", "du"], &rows)
}

fn report_json(report: &VerificationReport) -> Value {
    merge(json!({ "pass": report.pass() }), json(report))
}

/// The traced `λ` window.
pub fn resolve_window(spec: &ProblemSpec, w: &Window) -> Result<(f64, f64), CliError> {
    match (w.lambda_min, w.lambda_max) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ if spec.is_brezis_nirenberg() => Ok(brezis_nirenberg_window(spec, w.offset)),
        _ => Err(CliError::config("window needs lambda_min and lambda_max unless mu = 0 and q = 2*")),
    }
}

fn trace(spec: &ProblemSpec, w: &Window) -> Result<Branch, CliError> {
    let range = resolve_window(spec, w)?;
    Ok(trace_branch(spec, range, &StepPolicy::uniform(range, w.points))?)
}

fn branch_rows(branch: &Branch) -> Vec<Row> {
    branch.points.iter().map(|p| Row::of(&p.solution)).collect()
}

fn branch_summary(branch: &Branch, rows: &[Row]) -> Value {
    let max = |f: fn(&Row) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    json!({
        "window": [branch.window.0, branch.window.1],
        "points": rows.len(),
        "lower": branch.lower,
        "upper": branch.upper,
        "gaps": branch.gaps,
        "max_pohozaev_residual": max(|r| r.pohozaev_residual),
        "max_nehari_residual": max(|r| r.nehari_residual),
        "max_sup_jump": branch.max_sup_jump(),
    })
}

pub fn run(spec: &ProblemSpec, cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Solve(a) => solve(spec, a),
        Command::Branch(w) => branch(spec, w),
        Command::RhoStar(a) => rho_star(spec, a),
        Command::Normalized(a) => normalized(spec, a),
        Command::Minimize(a) => minimize(spec, a),
        Command::Pass(a) => pass(spec, a),
        Command::Verify(a) => verify(spec, a),
        Command::Bubbles(a) => bubbles(spec, a),
        Command::Theta(a) => theta(spec, a),
    }
}

fn solve(spec: &ProblemSpec, a: &SolveArgs) -> Result<Outcome, CliError> {
    let omega = a.omega.ok_or_else(|| CliError::config("solve needs omega"))?;
    let shooter = Shooter::new(*spec);
    let sol = match a.center_value {
        Some(c) => shooter.shoot_from(omega, c),
        None => shooter.shoot_ground_state(omega),
    }?;
    let report = verify_solution(&sol);
    let pass = report.pass();
    Ok(Outcome::ok(vec![solution_json(&sol)], report_json(&report), Some(profile_csv(&sol.profile)?)).certified(pass))
}

fn branch(spec: &ProblemSpec, w: &Window) -> Result<Outcome, CliError> {
    let b = trace(spec, w)?;
    let rows = branch_rows(&b);
    let verification = merge(json!({ "pass": true }), branch_summary(&b, &rows));
    let results = rows.iter().map(json).collect();
    Ok(Outcome::ok(results, verification, Some(rows_csv(&rows)?)))
}

fn rho_star(spec: &ProblemSpec, a: &RhoStarArgs) -> Result<Outcome, CliError> {
    match a.method {
        RhoMethod::Branch => {
            let b = trace(spec, &a.window)?;
            let star = find_rho_star(&b)?;
            let rows = branch_rows(&b);
            let first = rows.first().map_or(f64::NAN, |r| r.rho);
            let last = rows.last().map_or(f64::NAN, |r| r.rho);
            let result = merge(
                json!({
                    "rho_star": star.rho_star,
                    "lambda_star": star.lambda_star,
                    "interpolated": [star.interpolated.0, star.interpolated.1],
                }),
                solution_json(&star.solution),
            );
            let report = verify_solution(&star.solution);
            let verification = merge(
                json!({
                    "pass": report.pass(),
                    "endpoint_mass_fractions": [first / star.rho_star, last / star.rho_star],
                    "report": report,
                }),
                branch_summary(&b, &rows),
            );
            Ok(Outcome::ok(vec![result], verification, Some(rows_csv(&rows)?)).certified(report.pass()))
        }
        RhoMethod::Supremum => {
            let sup = mass_supremum_probe(spec, a.samples)?;
            let report = verify_solution(&sup.solution);
            let result = merge(
                json!({
                    "rho_sup": sup.rho_sup,
                    "omega_at_sup": sup.omega_at_sup,
                    "window": [sup.window.0, sup.window.1],
                    "samples": sup.samples,
                    "solved": sup.solved,
                    "window_excess": sup.window_excess,
                }),
                solution_json(&sup.solution),
            );
            let pass = report.pass() && sup.window_excess <= 1e-8;
            let verification = json!({ "pass": pass, "report": report });
            Ok(Outcome::ok(vec![result], verification, None).certified(pass))
        }
    }
}

fn normalized(spec: &ProblemSpec, a: &NormalizedArgs) -> Result<Outcome, CliError> {
    let rho = a.rho.ok_or_else(|| CliError::config("normalized needs rho"))?;
    let b = trace(spec, &a.window)?;
    let sols = solve_normalized(&b, rho);
    let rows: Vec<Row> = sols.iter().map(|s| Row::of(&s.solution)).collect();
    let results = sols
        .iter()
        .zip(&rows)
        .map(|(s, r)| merge(json(r), json!({ "tangency": s.tangency })))
        .collect();
    let pass = sols.iter().all(|s| verify_solution(&s.solution).pass());
    let verification = json!({
        "pass": pass,
        "rho": rho,
        "count": sols.len(),
        "count_is_exact": count_is_exact(spec),
        "branch_points": b.points.len(),
    });
    let mut out = Outcome::ok(results, verification, Some(rows_csv(&rows)?)).certified(pass);
    if sols.is_empty() {
        out.exit = Exit::Empty;
    }
    Ok(out)
}

fn mesh(spec: &ProblemSpec, intervals: usize) -> Result<Arc<Mesh>, CliError> {
    Ok(Arc::new(Mesh::new(spec.dimension, spec.radius, intervals)?))
}

fn flow_json(f: &FlowResult) -> Value {
    json!({
        "mesh_energy": f.energy,
        "mesh_omega": f.omega,
        "iterations": f.iterations,
        "constrained_grad_norm": f.constrained_grad_norm,
        "alpha": f.alpha,
        "in_alpha_interior": f.in_alpha_interior,
        "alpha_margin": f.alpha_margin,
    })
}

fn minimize(spec: &ProblemSpec, a: &MinimizeArgs) -> Result<Outcome, CliError> {
    let rho = a.rho.ok_or_else(|| CliError::config("minimize needs rho"))?;
    let m = mesh(spec, a.intervals)?;
    let cfg = FlowConfig {
        tol: a.tol,
        max_iter: a.max_iter,
        alpha: a.alpha,
        ..FlowConfig::default()
    };
    let flow = flow_to_minimizer(spec, rho, first_mode(&m, rho), &cfg)?;
    let sol = flow.polish(spec)?;
    let report = verify_solution(&sol);
    let pass = report.pass();
    let result = merge(solution_json(&sol), flow_json(&flow));
    Ok(Outcome::ok(vec![result], report_json(&report), Some(profile_csv(&sol.profile)?)).certified(pass))
}

fn pass(spec: &ProblemSpec, a: &PassArgs) -> Result<Outcome, CliError> {
    let rho = a.rho.ok_or_else(|| CliError::config("pass needs rho"))?;
    let m = mesh(spec, a.intervals)?;
    let cfg = PassConfig {
        nodes: a.nodes,
        cutoff: Cutoff::from(a.cutoff),
        near: a.near.into(),
        eps0: a.eps0,
        alpha: a.alpha,
        fine_intervals: a.fine_intervals,
        ..PassConfig::default()
    };
    let run = mountain_pass(spec, rho, &m, &cfg)?;
    let s = &run.saddle;
    let sol = Shooter::new(*spec).solve_at_mass(rho, s.omega, s.u.values()[0])?;
    let mut report = verify_solution(&sol);
    report.level_bounds = Some(level_bounds(spec, rho, sol.energy, a.delta)?);
    let mut pass = report.pass();
    let mut results = vec![merge(
        json!({
            "kind": "saddle",
            "mesh_energy": s.energy,
            "mesh_omega": s.omega,
            "newton_residual": s.newton_residual,
            "newton_iterations": s.iterations,
        }),
        solution_json(&sol),
    )];
    let g = &run.geometry;
    let mut verification = json!({
        "report": report,
        "geometry": {
            "alpha": g.alpha,
            "eps0": g.eps0,
            "near_energy": g.near_energy,
            "far_energy": g.far_energy,
            "boundary_bound": g.boundary_bound,
        },
        "initial_path_max": run.initial_max,
        "relaxed_path_max": run.relaxed.path_max(),
    });
    if let Some(min) = &run.minimizer {
        let msol = min.polish(spec)?;
        let mreport = verify_solution(&msol);
        let ordered = sol.energy > msol.energy;
        pass &= mreport.pass() && ordered;
        results.push(merge(merge(json!({ "kind": "minimizer" }), solution_json(&msol)), flow_json(min)));
        verification = merge(
            verification,
            json!({ "minimizer_report": mreport, "energy_ordered": ordered }),
        );
    }
    if let Some(grid) = &a.eta_grid {
        let levels = level_vs_eta(spec, rho, grid, &m, &cfg);
        let entries: Vec<Value> = levels
            .iter()
            .map(|l| match &l.level {
                Ok(r) => json!({ "eta": l.eta, "level": r.energy, "newton_residual": r.newton_residual }),
                Err(e) => json!({ "eta": l.eta, "error": e.to_string() }),
            })
            .collect();
        let violation = monotonicity_violation(&levels);
        pass &= violation <= 1e-8;
        verification = merge(verification, json!({ "levels": entries, "monotonicity_violation": violation }));
    }
    verification = merge(json!({ "pass": pass }), verification);
    Ok(Outcome::ok(results, verification, Some(profile_csv(&sol.profile)?)).certified(pass))
}

fn verify(spec: &ProblemSpec, a: &VerifyArgs) -> Result<Outcome, CliError> {
    let one = |omega: f64| -> (Option<Row>, Value) {
        let sol = match Shooter::new(*spec).shoot_ground_state(omega) {
            Ok(s) => s,
            Err(e) => return (None, json!({ "omega": omega, "error": e.to_string() })),
        };
        let report = verify_solution(&sol);
        let conv = match residual_convergence(&sol, a.refine_intervals) {
            Ok(c) => json(&c),
            Err(e) => json!({ "error": e.to_string() }),
        };
        let v = merge(solution_json(&sol), json!({ "report": report_json(&report), "convergence": conv }));
        (Some(Row::of(&sol)), v)
    };
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .clamp(1, a.omegas.len());
    let chunk = a.omegas.len().div_ceil(workers);
    let pairs: Vec<(Option<Row>, Value)> = std::thread::scope(|s| {
        let handles: Vec<_> = a
            .omegas
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|&w| one(w)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("verification worker panicked"))
            .collect()
    });
    let pass = pairs
        .iter()
        .filter(|(r, _)| r.is_some())
        .all(|(_, v)| v["report"]["pass"] == Value::Bool(true));
    let (rows, results): (Vec<Option<Row>>, Vec<Value>) = pairs.into_iter().unzip();
    let rows: Vec<Row> = rows.into_iter().flatten().collect();
    let verification = json!({ "pass": pass, "requested": a.omegas.len(), "solved": rows.len() });
    let mut out = Outcome::ok(results, verification, Some(rows_csv(&rows)?)).certified(pass);
    if rows.is_empty() {
        out.exit = Exit::Empty;
    }
    Ok(out)
}

fn bubbles(spec: &ProblemSpec, a: &BubbleArgs) -> Result<Outcome, CliError> {
    let n = spec.dimension;
    let cutoff = Cutoff::from(a.cutoff);
    let fit = bubble_asymptotics_fit(n, &a.eps, spec.radius, &cutoff)?;
    let norms = a
        .eps
        .iter()
        .map(|&e| bubble_norms(n, spec.radius, e, &cutoff).map(|b| (b.eps, b.grad, b.mass, b.crit)))
        .collect::<Result<Vec<_>, _>>()?;
    let tol = 0.15;
    let grad_ok = (fit.grad_slope - (n as f64 - 2.0)).abs() <= tol;
    let mass = match n {
        3 => json!({ "expected_slope": 1.0, "ok": (fit.mass_slope - 1.0).abs() <= tol }),
        4 => json!({ "log_model_preferred": fit.log_model_rms < fit.power_model_rms, "ok": fit.log_model_rms < fit.power_model_rms }),
        _ => json!({ "expected_slope": 2.0, "ok": (fit.mass_slope - 2.0).abs() <= tol }),
    };
    let pass = grad_ok && mass["ok"] == Value::Bool(true);
    let verification = json!({
        "pass": pass,
        "tolerance": tol,
        "gradient": { "expected_slope": n as f64 - 2.0, "ok": grad_ok },
        "mass": mass,
    });
    let csv = csv_table(&["eps", "grad", "mass", "crit"], &norms)?;
    Ok(Outcome::ok(vec![json(&fit)], verification, Some(csv)).certified(pass))
}

fn theta(spec: &ProblemSpec, a: &ThetaArgs) -> Result<Outcome, CliError> {
    let n = spec.dimension;
    let s = sobolev_constant(n)?;
    let l1 = lambda1(n, spec.radius);
    let m = mesh(spec, a.intervals)?;
    let grid: Vec<f64> = a.fractions.iter().map(|f| f * s).collect();
    let curve = theta_curve(&grid, &m, &FlowConfig::default())?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (pt, &f) in curve.iter().zip(&a.fractions) {
        match &pt.theta {
            Ok(t) => {
                rows.push((f, pt.eps, *t, t / l1));
                results.push(json!({ "fraction": f, "eps": pt.eps, "theta": t, "theta_over_lambda1": t / l1 }));
            }
            Err(e) => results.push(json!({ "fraction": f, "eps": pt.eps, "error": e.to_string() })),
        }
    }
    let converged = rows.len() == curve.len();
    let monotone = rows.windows(2).all(|w| w[1].2 < w[0].2);
    let pass = converged && monotone;
    let verification = json!({
        "pass": pass,
        "converged": converged,
        "monotone_decreasing": monotone,
        "lambda1": l1,
        "sobolev_constant": s,
    });
    let csv = csv_table(&["fraction", "eps", "theta", "theta_over_lambda1"], &rows)?;
    Ok(Outcome::ok(results, verification, Some(csv)).certified(pass))
}
