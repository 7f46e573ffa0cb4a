//! Mass branches of the Brezis–Nirenberg family and normalized solutions.

use normbranch_core::branch::{
    brezis_nirenberg_window, count_is_exact, find_rho_star, mass_supremum_probe, solve_normalized, trace_branch,
    EndpointStatus, StepPolicy,
};
use normbranch_core::verify::RESIDUAL_TOL;
use normbranch_core::{lambda1, BranchError, ProblemSpec, Shooter};

fn bn_branch(n: u32, points: usize) -> normbranch_core::branch::Branch {
    let spec = ProblemSpec::critical(n, 1.0).unwrap();
    let w = brezis_nirenberg_window(&spec, 0.01);
    trace_branch(&spec, w, &StepPolicy::uniform(w, points)).unwrap()
}

/// Maximum of `ρ` over a uniform warm-started sweep of `points` shots.
fn dense_sweep_max(n: u32, points: usize) -> f64 {
    let spec = ProblemSpec::critical(n, 1.0).unwrap();
    let (lo, hi) = brezis_nirenberg_window(&spec, 0.01);
    let shooter = Shooter::new(spec);
    let mut seed = None;
    let mut best = 0.0f64;
    for k in 0..points {
        let lambda = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        let sol = match seed {
            Some(a) => shooter.shoot_from(-lambda, a),
            None => shooter.shoot_ground_state(-lambda),
        }
        .unwrap();
        seed = Some(sol.center_value);
        best = best.max(sol.rho);
    }
    best
}

#[test]
fn four_dimensional_branch_is_fully_solvable() {
    let spec = ProblemSpec::critical(4, 1.0).unwrap();
    let l1 = lambda1(4, 1.0);
    let range = (0.02 * l1, 0.98 * l1);
    let b = trace_branch(&spec, range, &StepPolicy::uniform(range, 50)).unwrap();
    assert_eq!(b.points.len(), 50);
    assert!(b.gaps.is_empty());
    assert!(b.points.windows(2).all(|w| w[0].lambda < w[1].lambda));
    for p in &b.points {
        assert!(p.rho > 0.0);
        assert!(p.pohozaev_residual <= RESIDUAL_TOL && p.nehari_residual <= RESIDUAL_TOL);
        assert_eq!(p.omega, -p.lambda);
    }
}

#[test]
fn three_dimensional_range_below_quarter_eigenvalue_is_empty() {
    let spec = ProblemSpec::critical(3, 1.0).unwrap();
    let l1 = lambda1(3, 1.0);
    let range = (0.05 * l1, 0.20 * l1);
    let err = trace_branch(&spec, range, &StepPolicy::uniform(range, 10)).unwrap_err();
    assert!(matches!(err, BranchError::EmptyBranch { .. }));
}

#[test]
fn four_dimensional_masses_vanish_toward_both_ends() {
    let b = bn_branch(4, 50);
    let mid = Shooter::new(b.spec).shoot_ground_state(-0.5 * lambda1(4, 1.0)).unwrap().rho;
    assert!(b.points[0].rho < mid && b.points[49].rho < mid);
    assert_eq!((b.lower, b.upper), (EndpointStatus::Vanished, EndpointStatus::Vanished));
}

#[test]
fn rho_star_matches_dense_sweep_and_is_refinement_stable() {
    for n in [4u32, 5] {
        let coarse = find_rho_star(&bn_branch(n, 50)).unwrap();
        let fine = find_rho_star(&bn_branch(n, 100)).unwrap();
        let oracle = dense_sweep_max(n, 2000);
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(coarse.rho_star, oracle) <= 1e-4, "N={n}: {} vs {oracle}", coarse.rho_star);
        assert!(coarse.rho_star >= oracle * (1.0 - 1e-12), "refined max below a sampled value");
        assert!(rel(fine.rho_star, coarse.rho_star) <= 1e-6);
        let (lo, hi) = coarse.interpolated;
        assert!(lo > 0.0 && hi > 0.0);
        assert!(coarse.lambda_star > 0.0 && coarse.lambda_star < lambda1(n, 1.0));
    }
}

#[test]
fn dichotomy_counts_two_one_zero() {
    for n in [3u32, 4, 5] {
        let b = bn_branch(n, 50);
        assert!(count_is_exact(&b.spec));
        let rs = find_rho_star(&b).unwrap();
        let below = solve_normalized(&b, 0.5 * rs.rho_star);
        assert_eq!(below.len(), 2, "N={n}");
        assert!((below[0].omega - below[1].omega).abs() > 1e-3);
        for s in &below {
            assert!((s.solution.rho - 0.5 * rs.rho_star).abs() <= 1e-9 * rs.rho_star);
        }
        let at = solve_normalized(&b, rs.rho_star);
        assert_eq!(at.len(), 1, "N={n}");
        assert!(at[0].tangency);
        assert!((at[0].solution.rho - rs.rho_star).abs() <= 1e-6 * rs.rho_star);
        assert!(solve_normalized(&b, rs.rho_star * (1.0 - 5e-7)).len() == 1);
        assert!(solve_normalized(&b, 1.5 * rs.rho_star).is_empty(), "N={n}");
    }
}

#[test]
fn endpoint_masses_against_rho_star() {
    for n in [4u32, 5] {
        let b = bn_branch(n, 50);
        let rs = find_rho_star(&b).unwrap().rho_star;
        assert!(b.points[0].rho < 0.1 * rs && b.points[b.points.len() - 1].rho < 0.1 * rs, "N={n}");
    }
    // N = 3 vanishes like (λ₁ - λ)^{1/2} at the top: still decreasing, but
    // above the 10% mark at a 1% offset
    let b = bn_branch(3, 50);
    let rs = find_rho_star(&b).unwrap().rho_star;
    assert!(b.points[0].rho < 0.1 * rs);
    let top = b.points[b.points.len() - 1].rho;
    assert!(top < b.points[b.points.len() - 2].rho && top > 0.1 * rs);
}

#[test]
fn branch_is_continuous_under_step_halving() {
    let spec = ProblemSpec::critical(4, 1.0).unwrap();
    let l1 = lambda1(4, 1.0);
    let range = (0.3 * l1, 0.7 * l1);
    let jumps: Vec<f64> = [6usize, 11, 21, 41]
        .iter()
        .map(|&m| trace_branch(&spec, range, &StepPolicy::uniform(range, m)).unwrap().max_sup_jump())
        .collect();
    for w in jumps.windows(2) {
        let ratio = w[1] / w[0];
        assert!(ratio > 0.35 && ratio < 0.65, "{jumps:?}");
    }
}

#[test]
fn rho_star_needs_five_points_and_an_interior_max() {
    let spec = ProblemSpec::critical(4, 1.0).unwrap();
    let l1 = lambda1(4, 1.0);
    // ρ decreases on the upper part of the window
    let range = (0.7 * l1, 0.95 * l1);
    let b = trace_branch(&spec, range, &StepPolicy::uniform(range, 8)).unwrap();
    assert_eq!(find_rho_star(&b).unwrap_err(), BranchError::NoInteriorMax);
}

#[test]
fn mass_supremum_with_linear_term_is_the_shifted_threshold() {
    // μ = 1, p = 2: -Δu + (ω - 1)u = u⁵, the N = 3 problem at λ = 1 - ω
    let spec = ProblemSpec::new(3, 1.0, 1.0, 2.0, 6.0).unwrap();
    let coarse = mass_supremum_probe(&spec, 500).unwrap();
    let fine = mass_supremum_probe(&spec, 1000).unwrap();
    let rs = find_rho_star(&bn_branch(3, 50)).unwrap();
    assert!(((coarse.rho_sup - rs.rho_star) / rs.rho_star).abs() < 1e-6);
    assert!(((coarse.omega_at_sup - (1.0 - rs.lambda_star)) / rs.lambda_star).abs() < 1e-4);
    assert!(((fine.rho_sup - coarse.rho_sup) / coarse.rho_sup).abs() <= 1e-3);
    assert!(coarse.window_excess <= 1e-8);
    assert!((coarse.window.1 - 3.0 * (0.5 - 1.0 / 6.0)).abs() < 1e-12);
    // no normalized solution above the supremum
    let l1 = lambda1(3, 1.0);
    let range = (-coarse.window.1, 0.99 * l1);
    let b = trace_branch(&spec, range, &StepPolicy::uniform(range, 60)).unwrap();
    assert!(!count_is_exact(&spec));
    assert!(solve_normalized(&b, 2.0 * coarse.rho_sup).is_empty());
}

#[test]
fn mass_supremum_sublinear_is_finite_and_sweep_stable() {
    let spec = ProblemSpec::new(4, 1.0, 1.0, 1.5, 4.0).unwrap();
    let coarse = mass_supremum_probe(&spec, 500).unwrap();
    let fine = mass_supremum_probe(&spec, 1000).unwrap();
    assert!(coarse.rho_sup.is_finite() && coarse.rho_sup > 0.0);
    assert!(((fine.rho_sup - coarse.rho_sup) / coarse.rho_sup).abs() <= 1e-3);
    assert!(coarse.window_excess <= 1e-8 && fine.window_excess <= 1e-8);
}

#[test]
fn mass_supremum_rejects_other_regimes() {
    let spec = ProblemSpec::critical(4, 1.0).unwrap();
    assert!(matches!(mass_supremum_probe(&spec, 50), Err(BranchError::Param(_))));
}
