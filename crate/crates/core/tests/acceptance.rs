//! Acceptance report: one PASS/FAIL line per criterion, with the measured
//! numbers. Runs as a plain binary and always exits 0; failures are data.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use normbranch_core::branch::{
    brezis_nirenberg_window, find_rho_star, mass_supremum_probe, solve_normalized, trace_branch, Branch,
    StepPolicy,
};
use normbranch_core::constants::sobolev_constant;
use normbranch_core::pass::{
    level_vs_eta, lower_level_bound, monotonicity_violation, mountain_pass, upper_level_bound, Cutoff,
    NearEndpoint, PassConfig,
};
use normbranch_core::varflow::{theta_curve, FlowConfig, Mesh};
use normbranch_core::verify::{
    bubble_asymptotics_fit, multiplier_window, nehari_residual, pohozaev_residual, residual_convergence,
};
use normbranch_core::{lambda1, Classification, ProblemSpec, RadialSolution, ShootError, Shooter};

type Outcome = (bool, String);

struct Report {
    solutions: Vec<(String, f64, f64)>,
}

impl Report {
    fn record(&mut self, tag: &str, sol: &RadialSolution) {
        self.solutions.push((tag.into(), pohozaev_residual(sol), nehari_residual(sol)));
    }
}

fn bessel_j0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= -(x * x) / (4.0 * (k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn bn_branch(n: u32, points: usize) -> Branch {
    let spec = ProblemSpec::critical(n, 1.0).unwrap();
    let w = brezis_nirenberg_window(&spec, 0.01);
    trace_branch(&spec, w, &StepPolicy::uniform(w, points)).unwrap()
}

fn eigenvalues(_: &mut Report) -> Outcome {
    let e1 = rel(lambda1(1, 1.0), PI * PI / 4.0);
    let e3 = rel(lambda1(3, 1.0), PI * PI);
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if bessel_j0(a) * bessel_j0(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let j = 0.5 * (a + b);
    let e2 = rel(lambda1(2, 1.0), j * j);
    let worst = e1.max(e2).max(e3);
    (worst <= 1e-10, format!("max relative error {worst:.2e}"))
}

fn linear_shot(r: &mut Report) -> Outcome {
    let spec = ProblemSpec::linear(3, 1.0).unwrap();
    let shooter = Shooter::new(spec);
    let shot = shooter.integrate_from_center(1.0, -PI * PI).unwrap();
    let err = shot
        .profile
        .r
        .iter()
        .zip(&shot.profile.u)
        .map(|(&x, &u)| {
            let exact = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
            (u - exact).abs()
        })
        .fold(0.0, f64::max);
    let rho = normbranch_core::shooter::norms_of(&shot.profile, &spec).rho;
    let e_rho = (rho - 2.0 / PI).abs();
    if let Ok(sol) = shooter.solution(1.0, -PI * PI) {
        r.record("linear", &sol);
    }
    (
        shot.classification == Classification::Hit && err <= 1e-8 && e_rho <= 1e-10,
        format!("sup error {err:.2e}, mass error {e_rho:.2e}"),
    )
}

fn bn_window(r: &mut Report) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let s3 = Shooter::new(ProblemSpec::critical(3, 1.0).unwrap());
    let l3 = lambda1(3, 1.0);
    for f in [0.05, 0.15, 0.24] {
        let res = s3.shoot_ground_state(-f * l3);
        let good = matches!(res, Err(ShootError::NoBracket { .. }));
        ok &= good;
        if !good {
            notes.push(format!("N=3 {f}λ₁ not NoBracket"));
        }
    }
    for f in [0.30, 0.5, 0.9] {
        match s3.shoot_ground_state(-f * l3) {
            Ok(sol) => r.record("window N=3", &sol),
            Err(e) => {
                ok = false;
                notes.push(format!("N=3 {f}λ₁: {e}"));
            }
        }
    }
    let s4 = Shooter::new(ProblemSpec::critical(4, 1.0).unwrap());
    let l4 = lambda1(4, 1.0);
    for f in [0.05, 0.5, 0.95] {
        match s4.shoot_ground_state(-f * l4) {
            Ok(sol) => r.record("window N=4", &sol),
            Err(e) => {
                ok = false;
                notes.push(format!("N=4 {f}λ₁: {e}"));
            }
        }
    }
    for f in [1.02, 1.2] {
        if s4.shoot_ground_state(-f * l4).is_ok() {
            ok = false;
            notes.push(format!("N=4 {f}λ₁ solved"));
        }
    }
    let detail = if notes.is_empty() {
        "N=3 empty below λ₁/4, N=4 solvable on (0, λ₁)".to_string()
    } else {
        notes.join("; ")
    };
    (ok, detail)
}

fn dichotomy(r: &mut Report, n: u32) -> Outcome {
    let b = bn_branch(n, 50);
    let fine = bn_branch(n, 100);
    let rs = find_rho_star(&b).unwrap();
    let rs_fine = find_rho_star(&fine).unwrap();
    let stable = rel(rs.rho_star, rs_fine.rho_star);
    for p in &b.points {
        r.record("branch", &p.solution);
    }
    let lo = b.points[0].rho / rs.rho_star;
    let hi = b.points[b.points.len() - 1].rho / rs.rho_star;
    let counts: Vec<usize> = [0.5, 1.0, 1.5]
        .iter()
        .map(|f| {
            let sols = solve_normalized(&b, f * rs.rho_star);
            for s in &sols {
                r.record("normalized", &s.solution);
            }
            sols.len()
        })
        .collect();
    let ok = lo < 0.1 && hi < 0.1 && counts == [2, 1, 0] && stable <= 1e-6;
    (
        ok,
        format!(
            "N={n}: ρ* = {:.10} (50 vs 100 points {stable:.1e}), endpoint masses {:.1}% / {:.1}% of ρ*, counts {counts:?}",
            rs.rho_star,
            100.0 * lo,
            100.0 * hi
        ),
    )
}

fn identities(r: &mut Report) -> Outcome {
    let worst = r
        .solutions
        .iter()
        .fold(("", 0.0f64), |acc, (tag, p, q)| if p.max(*q) > acc.1 { (tag.as_str(), p.max(*q)) } else { acc });
    let mut orders = Vec::new();
    let cases = [
        (ProblemSpec::critical(3, 1.0).unwrap(), -0.6 * lambda1(3, 1.0)),
        (ProblemSpec::critical(4, 1.0).unwrap(), -0.5 * lambda1(4, 1.0)),
        (ProblemSpec::critical(5, 1.0).unwrap(), -0.5 * lambda1(5, 1.0)),
        (ProblemSpec::new(4, 1.0, 1.0, 3.0, 4.0).unwrap(), 3.0),
    ];
    for (spec, omega) in cases {
        let sol = Shooter::new(spec).shoot_ground_state(omega).unwrap();
        let c = residual_convergence(&sol, 400).unwrap();
        orders.push(c.pohozaev_order);
        orders.push(c.nehari_order);
    }
    let slope_ok = orders.iter().all(|o| (o - 2.0).abs() <= 0.3);
    let (lo, hi) = orders.iter().fold((f64::MAX, f64::MIN), |(a, b), &o| (a.min(o), b.max(o)));
    (
        worst.1 <= 1e-6 && slope_ok,
        format!(
            "{} solutions, worst residual {:.2e} ({}), refinement orders in [{lo:.3}, {hi:.3}]",
            r.solutions.len(),
            worst.1,
            worst.0
        ),
    )
}

fn multiplier(r: &mut Report) -> Outcome {
    let l3 = lambda1(3, 1.0);
    let l4 = lambda1(4, 1.0);
    let l5 = lambda1(5, 1.0);
    let families = [
        (ProblemSpec::new(3, 1.0, 1.0, 2.0, 6.0).unwrap(), 1.0 - 0.99 * l3, 1.0 - 0.26 * l3),
        (ProblemSpec::new(4, 1.0, 1.0, 1.5, 4.0).unwrap(), -0.99 * l4, 0.0),
        (ProblemSpec::new(5, 1.0, 0.5, 2.0, 10.0 / 3.0).unwrap(), 0.5 - 0.99 * l5, 0.5),
        (ProblemSpec::new(3, 1.0, 1.0, 3.0, 5.0).unwrap(), -0.99 * l3, 3.0 * l3),
        (ProblemSpec::critical(4, 1.0).unwrap(), -0.99 * l4, -0.01 * l4),
    ];
    let (mut total, mut regime, mut bad) = (0, 0, 0);
    let mut min_margin = f64::INFINITY;
    for (spec, lo, hi) in families {
        let shooter = Shooter::new(spec);
        for k in 0..44 {
            let omega = lo + (hi - lo) * (k as f64 + 0.5) / 44.0;
            let Ok(sol) = shooter.shoot_ground_state(omega) else { continue };
            let w = multiplier_window(&sol);
            total += 1;
            min_margin = min_margin.min(w.lower_margin);
            if w.upper_bound.is_some() {
                regime += 1;
            }
            if !w.pass {
                bad += 1;
            }
            r.record("sweep", &sol);
        }
    }
    (
        total >= 200 && bad == 0,
        format!("{total} solutions ({regime} in the bounded regime), {bad} violations, min ω + λ₁ = {min_margin:.3e}"),
    )
}

fn supremum(r: &mut Report) -> Outcome {
    let spec = ProblemSpec::new(3, 1.0, 1.0, 2.0, 6.0).unwrap();
    let coarse = mass_supremum_probe(&spec, 500).unwrap();
    let fine = mass_supremum_probe(&spec, 1000).unwrap();
    r.record("supremum", &coarse.solution);
    let l1 = lambda1(3, 1.0);
    let range = (-coarse.window.1, 0.99 * l1);
    let b = trace_branch(&spec, range, &StepPolicy::uniform(range, 60)).unwrap();
    let above = solve_normalized(&b, 2.0 * coarse.rho_sup).len();
    let drift = rel(fine.rho_sup, coarse.rho_sup);
    (
        coarse.rho_sup.is_finite() && drift <= 1e-3 && above == 0,
        format!(
            "ρSup = {:.10} at ω = {:.6}, 500 vs 1000 samples {drift:.1e}, solutions at 2ρSup: {above}",
            coarse.rho_sup, coarse.omega_at_sup
        ),
    )
}

fn bubbles(_: &mut Report) -> Outcome {
    let eps = [0.01, 0.005, 0.0025, 0.00125];
    let c = Cutoff::default();
    let f5 = bubble_asymptotics_fit(5, &eps, 1.0, &c).unwrap();
    let f3 = bubble_asymptotics_fit(3, &eps, 1.0, &c).unwrap();
    let f4 = bubble_asymptotics_fit(4, &eps, 1.0, &c).unwrap();
    let ok = (f5.grad_slope - 3.0).abs() <= 0.15
        && (f5.mass_slope - 2.0).abs() <= 0.15
        && (f3.mass_slope - 1.0).abs() <= 0.15
        && f4.log_model_rms < f4.power_model_rms;
    (
        ok,
        format!(
            "N=5 gradient {:.4}, N=5 mass {:.4}, N=3 mass {:.4}, N=4 rms ε²lnε {:.3} vs ε² {:.3}",
            f5.grad_slope, f5.mass_slope, f3.mass_slope, f4.log_model_rms, f4.power_model_rms
        ),
    )
}

fn two_solutions(r: &mut Report) -> Outcome {
    let spec = ProblemSpec::new(4, 1.0, 1.0, 3.0, 4.0).unwrap();
    let rho = 0.3;
    let mesh = Arc::new(Mesh::new(4, 1.0, 2000).unwrap());
    let cfg = PassConfig {
        near: NearEndpoint::Minimizer,
        ..PassConfig::default()
    };
    let run = mountain_pass(&spec, rho, &mesh, &cfg).unwrap();
    let min = run.minimizer.as_ref().unwrap();
    let s = &run.saddle;
    let shooter = Shooter::new(spec);
    if let Ok(p) = min.polish(&spec) {
        r.record("minimizer", &p);
    }
    if let Ok(p) = shooter.solve_at_mass(rho, s.omega, s.u.values()[0]) {
        r.record("saddle", &p);
    }
    let lower = lower_level_bound(&spec, rho, 0.0);
    let upper = upper_level_bound(&spec, rho, 0.0).unwrap();
    let ordered = s.energy > min.energy && min.in_alpha_interior;
    let sandwich = lower <= s.energy && s.energy <= upper;

    // μ = 0 control against the upper branch solution
    let crit = ProblemSpec::critical(4, 1.0).unwrap();
    let b = bn_branch(4, 50);
    let rs = find_rho_star(&b).unwrap();
    let rho0 = 0.5 * rs.rho_star;
    let sols = solve_normalized(&b, rho0);
    let upper_sol = sols.iter().max_by(|a, b| a.omega.total_cmp(&b.omega)).unwrap();
    let control = mountain_pass(
        &crit,
        rho0,
        &mesh,
        &PassConfig {
            near: NearEndpoint::Minimizer,
            fine_intervals: Some(16_000),
            ..PassConfig::default()
        },
    )
    .unwrap();
    let u = &control.saddle.u;
    let sup = u
        .mesh()
        .r
        .iter()
        .zip(u.values())
        .map(|(&x, v)| (v - upper_sol.solution.eval(x)).abs())
        .fold(0.0, f64::max);
    (
        ordered && sandwich && sup < 1e-5 && s.newton_residual <= 1e-9,
        format!(
            "I(min) = {:.6}, I(saddle) = {:.6} in [{lower:.4}, {upper:.4}], control sup distance {sup:.2e}",
            min.energy, s.energy
        ),
    )
}

fn theta(_: &mut Report) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [3u32, 4] {
        let s = sobolev_constant(n).unwrap();
        let l1 = lambda1(n, 1.0);
        let mesh = Arc::new(Mesh::new(n, 1.0, 2000).unwrap());
        let grid: Vec<f64> = (0..10).map(|k| s * (0.02 + 0.96 * k as f64 / 9.0)).collect();
        let curve = theta_curve(&grid, &mesh, &FlowConfig::default()).unwrap();
        let vals: Vec<f64> = curve.iter().map(|p| p.theta.as_ref().map_or(f64::NAN, |v| *v)).collect();
        let monotone = vals.windows(2).all(|w| w[1] < w[0]);
        let start = rel(vals[0], l1);
        let end = vals[9] / l1;
        let end_ok = if n == 4 { end < 0.1 } else { rel(vals[9], 0.25 * l1) <= 0.1 };
        ok &= monotone && start <= 0.05 && end_ok;
        parts.push(format!(
            "N={n}: monotone {monotone}, θ(0.02S) off λ₁ by {:.2}%, θ(0.98S) = {end:.4}λ₁",
            100.0 * start
        ));
    }
    (ok, parts.join("; "))
}

fn eta_levels(_: &mut Report) -> Outcome {
    let spec = ProblemSpec::new(4, 1.0, 1.0, 3.0, 4.0).unwrap();
    let mesh = Arc::new(Mesh::new(4, 1.0, 2000).unwrap());
    let grid = [0.9, 0.95, 0.99, 1.0];
    let levels = level_vs_eta(&spec, 0.3, &grid, &mesh, &PassConfig::default());
    let c: Vec<f64> = levels.iter().map(|l| l.level.as_ref().map_or(f64::NAN, |s| s.energy)).collect();
    let violation = monotonicity_violation(&levels);
    // quadratic through η < 1 extrapolated to η = 1
    let mut extra = 0.0;
    for i in 0..3 {
        let mut l = c[i];
        for j in 0..3 {
            if i != j {
                l *= (1.0 - grid[j]) / (grid[i] - grid[j]);
            }
        }
        extra += l;
    }
    let gap = rel(extra, c[3]);
    let all = c.iter().all(|v| v.is_finite());
    (
        all && violation <= 1e-8 && gap <= 1e-3,
        format!(
            "c_η = {:?}, monotonicity violation {violation:.1e}, extrapolated c₁ off by {gap:.1e}",
            c.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    )
}

type Criterion = fn(&mut Report) -> Outcome;

fn main() {
    let mut report = Report { solutions: Vec::new() };
    let criteria: [(&str, Criterion, u64); 13] = [
        ("1 eigenvalue oracles", eigenvalues, 1),
        ("2 linear shooting closed form", linear_shot, 1),
        ("3 Brezis-Nirenberg window", bn_window, 30),
        ("4 dichotomy N=3", |r| dichotomy(r, 3), 300),
        ("4 dichotomy N=4", |r| dichotomy(r, 4), 300),
        ("4 dichotomy N=5", |r| dichotomy(r, 5), 300),
        ("6 multiplier window", multiplier, 300),
        ("7 nonexistence probe", supremum, 600),
        ("8 bubble asymptotics", bubbles, 60),
        ("9 two ordered solutions", two_solutions, 600),
        ("10 theta curve", theta, 300),
        ("11 c_eta monotonicity", eta_levels, 600),
        ("5 identity certificates", identities, 600),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(|| run(&mut report)));
        let elapsed = t.elapsed();
        let (ok, detail) = match out {
            Ok(o) => o,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let in_time = elapsed <= Duration::from_secs(limit);
        let pass = ok && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {detail} [{:.1}s{}]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { String::new() } else { format!(" > {limit}s") }
        );
    }
    println!("{failed} of 13 checks failed");
}
