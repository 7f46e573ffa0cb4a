use std::sync::{Arc, OnceLock};

use normbranch_core::branch::{
    brezis_nirenberg_window, find_rho_star, solve_normalized, trace_branch, StepPolicy,
};
use normbranch_core::pass::{
    bubble, choose_alpha, choose_eps0, initial_path, level_vs_eta, lower_level_bound, monotonicity_violation,
    mountain_pass, refine_saddle, upper_level_bound, Cutoff, NearEndpoint, NewtonConfig,
    PassConfig, PassRun,
};
use normbranch_core::varflow::{Field, Mesh};
use normbranch_core::verify::{nehari_residual, pohozaev_residual};
use normbranch_core::{ProblemSpec, RadialSolution};
use proptest::prelude::*;

fn spec(mu: f64) -> ProblemSpec {
    ProblemSpec::new(4, 1.0, mu, 3.0, 4.0).unwrap()
}

fn mesh(n: usize) -> Arc<Mesh> {
    Arc::new(Mesh::new(4, 1.0, n).unwrap())
}

fn minimizer_run() -> &'static PassRun {
    static RUN: OnceLock<PassRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = PassConfig {
            near: NearEndpoint::Minimizer,
            ..PassConfig::default()
        };
        mountain_pass(&spec(1.0), 0.3, &mesh(2000), &cfg).unwrap()
    })
}

fn sup_diff(u: &Field, sol: &RadialSolution) -> f64 {
    u.mesh()
        .r
        .iter()
        .zip(u.values())
        .map(|(&r, v)| (v - sol.eval(r)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn saddle_lies_above_the_local_minimizer() {
    let run = minimizer_run();
    let min = run.minimizer.as_ref().unwrap();
    let s = &run.saddle;
    assert!(min.in_alpha_interior);
    assert!(s.energy > min.energy + 1.0, "{} vs {}", s.energy, min.energy);
    assert!(s.newton_residual <= 1e-9);
    assert!(s.u.min() >= 0.0);
    assert!((s.u.mass() - 0.3).abs() < 1e-12);
    assert!(run.relaxed.path_max() <= run.initial_max);
    assert!(s.energy <= run.relaxed.path_max() + 1e-8 * s.energy);
    assert!(s.energy > run.relaxed.energies[0].max(*run.relaxed.energies.last().unwrap()));
}

#[test]
fn saddle_energy_sits_inside_the_level_sandwich() {
    let run = minimizer_run();
    let sp = spec(1.0);
    let e = run.saddle.energy;
    assert!(e >= lower_level_bound(&sp, 0.3, 0.0));
    // below the compactness threshold S²/4 itself, so no remainder is needed
    let top = upper_level_bound(&sp, 0.3, 0.0).unwrap();
    assert!(e < top, "{e} vs {top}");
}

#[test]
fn polished_saddle_is_a_continuum_solution() {
    let run = minimizer_run();
    let sp = spec(1.0);
    let s = &run.saddle;
    let sol = normbranch_core::Shooter::new(sp)
        .solve_at_mass(0.3, s.omega, s.u.values()[0])
        .unwrap();
    assert!(pohozaev_residual(&sol) <= 1e-6 && nehari_residual(&sol) <= 1e-6);
    // the discrete saddle converges to it at second order
    let mut omegas = vec![s.omega];
    let mut sups = vec![sup_diff(&s.u, &sol)];
    let mut u = s.u.clone();
    for n in [4000, 8000, 16_000] {
        let r = refine_saddle(u.transfer(&mesh(n)), *omegas.last().unwrap(), &sp, 0.3, &NewtonConfig::default()).unwrap();
        omegas.push(r.omega);
        sups.push(sup_diff(&r.u, &sol));
        u = r.u;
    }
    let errs: Vec<f64> = omegas.iter().map(|w| (w - sol.omega).abs()).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}: {errs:?}");
    }
    assert!(sups.windows(2).all(|w| w[1] < 0.5 * w[0]), "{sups:?}");
    let rich = (4.0 * omegas[3] - omegas[2]) / 3.0;
    assert!((rich - sol.omega).abs() < 1e-6 * sol.omega.abs(), "{rich} vs {}", sol.omega);
}

#[test]
fn newton_fixes_an_exact_root() {
    let run = minimizer_run();
    let sp = spec(1.0);
    let s = &run.saddle;
    let again = refine_saddle(s.u.clone(), s.omega, &sp, 0.3, &NewtonConfig::default()).unwrap();
    assert!(again.iterations <= 3);
    assert!((again.omega - s.omega).abs() < 1e-9 * s.omega.abs().max(1.0));
}

#[test]
fn newton_converges_from_the_interpolated_shooter_solution() {
    let run = minimizer_run();
    let sp = spec(1.0);
    let s = &run.saddle;
    let sol = normbranch_core::Shooter::new(sp)
        .solve_at_mass(0.3, s.omega, s.u.values()[0])
        .unwrap();
    let m = s.u.mesh().clone();
    let u0 = Field::new(m.clone(), m.r.iter().map(|&r| sol.eval(r)).collect());
    let res = refine_saddle(u0, sol.omega, &sp, 0.3, &NewtonConfig::default()).unwrap();
    assert!(res.iterations <= 3, "{} steps", res.iterations);
    assert!((res.omega - s.omega).abs() < 1e-9 * s.omega.abs().max(1.0));
}

#[test]
fn noisy_start_returns_to_the_same_root() {
    let run = minimizer_run();
    let sp = spec(1.0);
    let s = &run.saddle;
    let noisy: Vec<f64> = s
        .u
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * (1.0 + 0.01 * (37.0 * i as f64).sin()))
        .collect();
    let res = refine_saddle(
        Field::new(s.u.mesh().clone(), noisy),
        s.omega * 1.01,
        &sp,
        0.3,
        &NewtonConfig::default(),
    )
    .unwrap();
    assert!((res.omega - s.omega).abs() < 1e-9 * s.omega.abs().max(1.0));
    let d = res
        .u
        .values()
        .iter()
        .zip(s.u.values())
        .fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
    assert!(d < 1e-8 * s.u.sup_norm(), "sup distance {d}");
}

#[test]
fn critical_saddle_matches_the_upper_branch_solution() {
    let sp = ProblemSpec::critical(4, 1.0).unwrap();
    let window = brezis_nirenberg_window(&sp, 0.01);
    let branch = trace_branch(&sp, window, &StepPolicy::uniform(window, 50)).unwrap();
    let star = find_rho_star(&branch).unwrap();
    let rho = 0.5 * star.rho_star;
    let sols = solve_normalized(&branch, rho);
    assert_eq!(sols.len(), 2);
    let upper = sols.iter().max_by(|a, b| a.omega.total_cmp(&b.omega)).unwrap();
    let cfg = PassConfig {
        near: NearEndpoint::Minimizer,
        fine_intervals: Some(16_000),
        ..PassConfig::default()
    };
    let run = mountain_pass(&sp, rho, &mesh(2000), &cfg).unwrap();
    let d = sup_diff(&run.saddle.u, &upper.solution);
    assert!(d < 1e-5, "sup distance {d}");
    assert!((run.saddle.omega - upper.omega).abs() < 1e-5 * upper.omega.abs());
    // the minimizer is the other branch solution
    let lower = sols.iter().min_by(|a, b| a.omega.total_cmp(&b.omega)).unwrap();
    let min = run.minimizer.as_ref().unwrap();
    assert!((min.omega - lower.omega).abs() < 1e-3 * lower.omega.abs());
}

#[test]
fn level_is_monotone_and_left_continuous_in_eta() {
    let sp = spec(1.0);
    let rho = 0.3;
    let grid = [0.9, 0.95, 0.99, 0.999, 1.0];
    let levels = level_vs_eta(&sp, rho, &grid, &mesh(2000), &PassConfig::default());
    let c: Vec<f64> = levels
        .iter()
        .map(|l| l.level.as_ref().unwrap().energy)
        .collect();
    assert!(monotonicity_violation(&levels) <= 1e-8, "{c:?}");
    for (l, &eta) in levels.iter().zip(&grid) {
        let s = sp.with_eta(eta).unwrap();
        assert!(l.level.as_ref().unwrap().energy < upper_level_bound(&s, rho, 0.0).unwrap());
    }
    let c1 = c[4];
    let gaps: Vec<f64> = c[..4].iter().map(|v| v - c1).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    // quadratic through η = 0.95, 0.99, 0.999 extrapolated to η = 1
    let xs = [grid[1], grid[2], grid[3]];
    let ys = [c[1], c[2], c[3]];
    let mut extra = 0.0;
    for i in 0..3 {
        let mut l = ys[i];
        for j in 0..3 {
            if i != j {
                l *= (1.0 - xs[j]) / (xs[i] - xs[j]);
            }
        }
        extra += l;
    }
    assert!((extra - c1).abs() < 1e-4 * c1, "{extra} vs {c1}");
}

#[test]
fn initial_path_tops_its_endpoints_and_is_stable_in_node_count() {
    let sp = spec(1.0);
    let rho = 0.3;
    let m = mesh(1000);
    let cutoff = Cutoff::default();
    let near = bubble(1.0, &sp, rho, &cutoff, &m).unwrap().v;
    let alpha = choose_alpha(&sp, rho, &near).unwrap();
    let eps0 = choose_eps0(&sp, rho, alpha, &cutoff, &m).unwrap();
    let (a, geom) = initial_path(eps0, 33, &sp, rho, alpha, &cutoff, &m).unwrap();
    let (b, _) = initial_path(eps0, 65, &sp, rho, alpha, &cutoff, &m).unwrap();
    assert!(geom.near_energy.max(geom.far_energy) < geom.boundary_bound);
    let ends = a.energies[0].max(*a.energies.last().unwrap());
    assert!(a.path_max() >= ends);
    assert!(a.nodes.iter().all(|u| (u.mass() - rho).abs() < 1e-12 * rho));
    assert!(b.path_max() >= a.path_max() - 1e-12);
    assert!((b.path_max() - a.path_max()) < 0.02 * a.path_max());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bubbles_carry_the_requested_mass(eps in 0.01f64..1.0, rho in 1e-3f64..10.0, n in 3u32..6) {
        let sp = ProblemSpec::critical(n, 1.0).unwrap();
        let m = Arc::new(Mesh::new(n, 1.0, 800).unwrap());
        let b = bubble(eps, &sp, rho, &Cutoff::default(), &m).unwrap();
        prop_assert!((b.v.mass() - rho).abs() <= 1e-12 * rho);
        prop_assert!(b.v.min() >= 0.0);
        let tail = m.r.iter().zip(b.v.values()).filter(|(&r, _)| r >= 0.75).all(|(_, &v)| v == 0.0);
        prop_assert!(tail);
    }
}
