use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use normbranch_core::{lambda1, ProblemSpec, Shooter};
use serde_json::Value;
use tempfile::TempDir;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, name: &str, body: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_normbranch"))
            .args(args)
            .env("NORMBRANCH_CACHE_DIR", self.path("cache"))
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }
}

const BN4: &str = r#"{"dimension": 4, "radius": 1.0, "mu": 0.0, "p": 4.0, "q": 4.0, "eta": 1.0}"#;
const BN3: &str = r#"{"dimension": 3, "radius": 1.0, "mu": 0.0, "p": 6.0, "q": 6.0, "eta": 1.0}"#;

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

const COLUMNS: [&str; 9] = [
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

#[test]
fn solve_reproduces_the_library_ground_state() {
    let sb = Sandbox::new();
    let cfg = sb.config("bn4.json", BN4);
    let out = sb.run(&["solve", "--config", cfg.to_str().unwrap(), "--omega", "-4.0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert_eq!(s["command"], "solve");
    assert_eq!(s["status"], "ok");
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    let r = &s["results"][0];
    let sol = Shooter::new(ProblemSpec::critical(4, 1.0).unwrap())
        .shoot_ground_state(-4.0)
        .unwrap();
    assert_eq!(r["rho"].as_f64().unwrap(), sol.rho);
    assert_eq!(r["energy"].as_f64().unwrap(), sol.energy);
    assert_eq!(r["lambda"].as_f64().unwrap(), 4.0);
    assert!(r["pohozaev_residual"].as_f64().unwrap() <= 1e-6);
    assert!(r["nehari_residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(s["verification"]["pass"], true);
}

#[test]
fn invalid_exponents_are_a_config_error() {
    let sb = Sandbox::new();
    let cfg = sb.config("bad.json", r#"{"dimension": 3, "radius": 1.0, "mu": 1.0, "p": 4.0, "q": 3.0}"#);
    let out = sb.run(&["solve", "--config", cfg.to_str().unwrap(), "--omega", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 < p <= q"));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_keys_and_foreign_blocks_are_rejected() {
    let sb = Sandbox::new();
    let unk = sb.config("unk.json", r#"{"dimension": 4, "radius": 1.0, "mu": 0.0, "p": 4.0, "q": 4.0, "seed": 3}"#);
    assert_eq!(sb.run(&["solve", "--config", unk.to_str().unwrap(), "--omega", "-4"]).status.code(), Some(4));
    let nested = sb.config(
        "nested.json",
        r#"{"dimension": 4, "radius": 1.0, "mu": 0.0, "p": 4.0, "q": 4.0, "command": {"branch": {"steps": 3}}}"#,
    );
    assert_eq!(sb.run(&["branch", "--config", nested.to_str().unwrap()]).status.code(), Some(4));
    let foreign = sb.config(
        "foreign.json",
        r#"{"dimension": 4, "radius": 1.0, "mu": 0.0, "p": 4.0, "q": 4.0, "command": {"branch": {}}}"#,
    );
    assert_eq!(sb.run(&["rho-star", "--config", foreign.to_str().unwrap()]).status.code(), Some(4));
    assert_eq!(sb.run(&["solve"]).status.code(), Some(4));
}

#[test]
fn three_dimensional_critical_problem_needs_lambda_above_a_quarter() {
    let sb = Sandbox::new();
    let cfg = sb.config("bn3.json", BN3);
    let l1 = lambda1(3, 1.0);
    let below = format!("{}", -0.2 * l1);
    let out = sb.run(&["solve", "--config", cfg.to_str().unwrap(), "--omega", &below]);
    assert_eq!(out.status.code(), Some(2));
    let s = summary(&out);
    assert_eq!(s["status"], "empty");
    assert_eq!(s["results"].as_array().unwrap().len(), 0);
    let above = format!("{}", -0.5 * l1);
    let out = sb.run(&["solve", "--config", cfg.to_str().unwrap(), "--omega", &above]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn branch_writes_fifty_certified_rows() {
    let sb = Sandbox::new();
    let cfg = sb.config("bn4.json", BN4);
    let csv = sb.path("branch.csv");
    let out = sb.run(&["branch", "--config", cfg.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&csv);
    assert_eq!(header, COLUMNS);
    assert_eq!(rows.len(), 50);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    for r in &rows {
        assert_eq!(r[1], -r[0]);
        assert!(r[7] <= 1e-6 && r[8] <= 1e-6);
    }
    assert_eq!(summary(&out)["results"].as_array().unwrap().len(), 50);
}

fn rho_star(sb: &Sandbox, cfg: &Path) -> f64 {
    let out = sb.run(&["rho-star", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    summary(&out)["results"][0]["rho_star"].as_f64().unwrap()
}

#[test]
fn normalized_counts_follow_the_dichotomy() {
    let sb = Sandbox::new();
    let cfg = sb.config("bn4.json", BN4);
    let star = rho_star(&sb, &cfg);
    let csv = sb.path("n.csv");
    let half = format!("{}", 0.5 * star);
    let out = sb.run(&["normalized", "--config", cfg.to_str().unwrap(), "--rho", &half, "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&csv);
    assert_eq!(header, COLUMNS);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!((r[3] - 0.5 * star).abs() < 1e-8 * star);
    }
    assert_eq!(summary(&out)["verification"]["count_is_exact"], true);
    let over = format!("{}", 1.5 * star);
    let out = sb.run(&["normalized", "--config", cfg.to_str().unwrap(), "--rho", &over, "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(summary(&out)["status"], "empty");
    assert_eq!(csv_rows(&csv).1.len(), 0);
}

#[test]
fn rho_star_is_byte_identical_through_the_cache() {
    let sb = Sandbox::new();
    let cfg = sb.config("bn4.json", BN4);
    let run = |tag: &str, extra: &[&str]| {
        let out_p = sb.path(&format!("{tag}.json"));
        let csv_p = sb.path(&format!("{tag}.csv"));
        let mut args = vec!["rho-star", "--config", cfg.to_str().unwrap()];
        let (o, c) = (out_p.to_str().unwrap().to_owned(), csv_p.to_str().unwrap().to_owned());
        args.extend(["--out", &o, "--csv", &c]);
        args.extend_from_slice(extra);
        let out = sb.run(&args);
        assert_eq!(out.status.code(), Some(0));
        let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
        (std::fs::read(out_p).unwrap(), std::fs::read(csv_p).unwrap(), stderr)
    };
    let first = run("a", &[]);
    let second = run("b", &[]);
    let fresh = run("c", &["--no-cache"]);
    assert!(!first.2.contains("cache hit"));
    assert!(second.2.contains("cache hit"));
    assert!(!fresh.2.contains("cache hit"));
    assert_eq!(first.0, second.0);
    assert_eq!(first.1, second.1);
    assert_eq!(first.0, fresh.0);
    assert_eq!(first.1, fresh.1);
    let entries = std::fs::read_dir(sb.path("cache")).unwrap().count();
    assert_eq!(entries, 1);
}

#[test]
fn config_hash_ignores_key_order_but_not_values() {
    let sb = Sandbox::new();
    let a = sb.config("a.json", BN4);
    let b = sb.config("b.json", r#"{"q": 4.0, "p": 4.0, "eta": 1.0, "mu": 0.0, "radius": 1.0, "dimension": 4}"#);
    let hash = |cfg: &Path, omega: &str| {
        let out = sb.run(&["solve", "--no-cache", "--config", cfg.to_str().unwrap(), "--omega", omega]);
        summary(&out)["config_hash"].as_str().unwrap().to_owned()
    };
    assert_eq!(hash(&a, "-4"), hash(&b, "-4"));
    assert_ne!(hash(&a, "-4"), hash(&a, "-3"));
    // the flag and the config block are the same run
    let block = sb.config(
        "block.json",
        r#"{"dimension": 4, "radius": 1.0, "mu": 0.0, "p": 4.0, "q": 4.0, "command": {"solve": {"omega": -4.0}}}"#,
    );
    let out = sb.run(&["solve", "--no-cache", "--config", block.to_str().unwrap()]);
    assert_eq!(summary(&out)["config_hash"].as_str().unwrap(), hash(&a, "-4"));
}

#[test]
fn pass_orders_minimizer_and_saddle() {
    let sb = Sandbox::new();
    let cfg = sb.config(
        "mp.json",
        r#"{"dimension": 4, "radius": 1.0, "mu": 1.0, "p": 3.0, "q": 4.0,
            "command": {"pass": {"near": "minimizer", "intervals": 1000}}}"#,
    );
    let out = sb.run(&["pass", "--config", cfg.to_str().unwrap(), "--rho", "0.3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    let res = s["results"].as_array().unwrap();
    assert_eq!(res[0]["kind"], "saddle");
    assert_eq!(res[1]["kind"], "minimizer");
    let (e_s, e_m) = (res[0]["energy"].as_f64().unwrap(), res[1]["energy"].as_f64().unwrap());
    assert!(e_s > e_m);
    for r in res {
        assert!((r["rho"].as_f64().unwrap() - 0.3).abs() < 1e-8);
        assert!(r["pohozaev_residual"].as_f64().unwrap() <= 1e-6);
        assert!(r["nehari_residual"].as_f64().unwrap() <= 1e-6);
    }
    let lb = &s["verification"]["report"]["level_bounds"];
    assert!(lb["lower"].as_f64().unwrap() <= e_s && e_s < lb["upper_base"].as_f64().unwrap());
}

#[test]
fn verify_reports_each_frequency_in_order() {
    let sb = Sandbox::new();
    let cfg = sb.config("bn4.json", BN4);
    let out = sb.run(&["verify", "--no-cache", "--config", cfg.to_str().unwrap(), "--omega=-1,-4,-20,-8"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    let res = s["results"].as_array().unwrap();
    assert_eq!(res.len(), 4);
    assert!(res[2]["error"].as_str().unwrap().contains("bracket"));
    for i in [0, 1, 3] {
        let conv = &res[i]["convergence"];
        assert!((conv["pohozaev_order"].as_f64().unwrap() - 2.0).abs() <= 0.3);
    }
    let omegas: Vec<f64> = [0, 1, 3].iter().map(|&i| res[i]["omega"].as_f64().unwrap()).collect();
    assert_eq!(omegas, [-1.0, -4.0, -8.0]);
    assert_eq!(s["verification"]["solved"], 3);
}

#[test]
fn supremum_method_matches_the_library_probe() {
    let sb = Sandbox::new();
    let cfg = sb.config(
        "sup.json",
        r#"{"dimension": 3, "radius": 1.0, "mu": 1.0, "p": 2.0, "q": 6.0,
            "command": {"rho-star": {"method": "supremum", "samples": 200}}}"#,
    );
    let out = sb.run(&["rho-star", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    let spec = ProblemSpec::new(3, 1.0, 1.0, 2.0, 6.0).unwrap();
    let probe = normbranch_core::branch::mass_supremum_probe(&spec, 200).unwrap();
    assert_eq!(s["results"][0]["rho_sup"].as_f64().unwrap(), probe.rho_sup);
    assert!(s["results"][0]["window_excess"].as_f64().unwrap() <= 0.0);
}
