//! End-to-end checks of the experiment harness on small configurations.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use metapop::config::{Config, ExperimentConfig};
use metapop::montecarlo::{
    run_bound_experiment, run_concentration_experiment, run_scaling_experiment, run_stochastic_comparison,
    write_manifest,
};

const BASE: &str = "
dimension = 2
r = 0.15
seed = 4
n = 300
replicates = 4
domain.kind = box
domain.params = [0, 0, 1, 1]
e.kind = constant
e.params = [0.9]
a.kind = constant
a.params = [1]
sigma.kind = constant
sigma.params = [1]
kernel.kind = uniform
kernel.params = [1]
f.kind = saturating
bounds.center = [0.5, 0.5]
bounds.radius = 0.3
bounds.alpha1 = 0.9
bounds.alpha2 = auto
bounds.beta = 1.05
bounds.beta_prime = 1.1
";

fn config(extra: &str) -> ExperimentConfig {
    let mut raw = Config::parse(BASE).unwrap();
    for line in extra.lines().filter(|l| !l.trim().is_empty()) {
        raw.apply_override(line.trim()).unwrap();
    }
    ExperimentConfig::from_config(raw).unwrap()
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn column(header: &csv::StringRecord, name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("missing column {name}"))
}

#[test]
fn bound_experiment_writes_all_outputs() {
    let cfg = config("");
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), "bounds-experiment", &cfg).unwrap();
    run_bound_experiment(&cfg).unwrap().write(dir.path()).unwrap();
    let files = read_dir(dir.path());
    for name in ["manifest", "checklist.csv", "replicates.csv", "report.csv"] {
        assert!(files.contains_key(name), "{name}");
    }
    for rep in 0..cfg.replicates {
        assert!(files.contains_key(&format!("equilibrium_{rep}.csv")));
    }
    let manifest = String::from_utf8(files["manifest"].clone()).unwrap();
    assert!(manifest.contains("seed = 4"));
}

#[test]
fn holds_flags_are_rederivable_from_equilibrium_files() {
    let cfg = config("");
    let dir = tempfile::tempdir().unwrap();
    run_bound_experiment(&cfg).unwrap().write(dir.path()).unwrap();
    let mut reps = csv::Reader::from_path(dir.path().join("replicates.csv")).unwrap();
    let h = reps.headers().unwrap().clone();
    let (rep_col, ub_col, lb_col) = (column(&h, "replicate"), column(&h, "ub_holds"), column(&h, "lb_holds"));
    for rec in reps.records() {
        let rec = rec.unwrap();
        let mut eq = csv::Reader::from_path(dir.path().join(format!("equilibrium_{}.csv", &rec[rep_col]))).unwrap();
        let eh = eq.headers().unwrap().clone();
        let (p, up, low) = (column(&eh, "p_star"), column(&eh, "p_upper"), column(&eh, "p_lower"));
        let (mut ub, mut lb) = (true, true);
        for row in eq.records() {
            let row = row.unwrap();
            let star: f64 = row[p].parse().unwrap();
            ub &= star <= row[up].parse::<f64>().unwrap();
            if !row[low].is_empty() {
                lb &= star >= row[low].parse::<f64>().unwrap();
            }
        }
        assert_eq!(rec[ub_col].parse::<bool>().unwrap(), ub);
        assert_eq!(rec[lb_col].parse::<bool>().unwrap(), lb);
    }
}

#[test]
fn weak_coupling_gives_extinction_and_upper_bound() {
    // Kernel mass 0.05 π against e = 0.9: λ(T) stays well below one.
    let cfg = config("kernel.params = [0.05]\nbounds.alpha2 = 0.6");
    let rep = run_bound_experiment(&cfg).unwrap();
    for r in &rep.replicates {
        assert_eq!(r.status, "ok");
        assert!(r.lambda_t <= 1.0, "lambda {}", r.lambda_t);
        assert!(r.rows.iter().all(|row| row.1 < 1e-8));
        assert!(r.ub_holds);
    }
}

#[test]
fn experiments_are_pure_functions_of_config_and_seed() {
    let cfg = config("replicates = 3");
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        run_bound_experiment(&cfg).unwrap().write(dir.path()).unwrap();
        read_dir(dir.path())
    };
    assert_eq!(run(), run());
}

#[test]
fn concentration_at_zero_threshold_always_exceeds() {
    let cfg = config("replicates = 50\nconcentration.t_over_h = [0, 0.5]\nr = 0.1\nn = 500");
    let rep = run_concentration_experiment(&cfg).unwrap();
    let zero = rep.cells.iter().find(|c| c.t_over_h == 0.0).unwrap();
    assert_eq!(zero.exceed, zero.replicates);
    assert!(zero.bound >= 1.0 && zero.pass());
}

#[test]
fn concentration_frequency_decreases_with_n() {
    let freq = |n: usize| {
        let cfg = config(&format!("replicates = 400\nconcentration.t_over_h = [0.6]\nr = 0.1\nn = {n}"));
        run_concentration_experiment(&cfg).unwrap().cells[0].frequency()
    };
    assert!(freq(2000) < freq(250));
}

#[test]
fn stochastic_zero_horizon_has_zero_deviation() {
    let cfg = config("stochastic.t_end = 0\nstochastic.n_sequence = [100, 200]\nreplicates = 2");
    let rep = run_stochastic_comparison(&cfg).unwrap();
    assert_eq!(rep.replicates.len(), 4);
    assert!(rep.replicates.iter().all(|r| r.global_deviation == 0.0 && r.local_deviation == 0.0 && r.events == 0));
}

#[test]
fn scaling_excluded_fraction_shrinks() {
    let text = "
dimension = 1
r = 0.1
seed = 3
replicates = 3
domain.params = [0, 1]
e.params = [0.5]
a.params = [1]
sigma.params = [1]
f.kind = saturating
bounds.center = [0.5]
bounds.radius = 0.3
bounds.alpha1 = 0.9
bounds.alpha2 = auto
bounds.beta = 1.05
bounds.beta_prime = 1.1
scaling.n_sequence = [200, 400]
scaling.gamma1 = 0
scaling.gamma2 = 0.1
scaling.c1 = 0.1
scaling.c2 = 0.001
scaling.phi = log
scaling.phi_params = [0.15]
scaling.r0 = 0.1
scaling.n0 = 200
scaling.kappa = 0.3333333333333333
scaling.k2 = 0.2
";
    let cfg = ExperimentConfig::from_config(Config::parse(text).unwrap()).unwrap();
    let rep = run_scaling_experiment(&cfg).unwrap();
    assert_eq!(rep.rows.len(), 2);
    assert!(rep.rows[1].excluded_fraction < rep.rows[0].excluded_fraction);
    let dir = tempfile::tempdir().unwrap();
    rep.write(dir.path()).unwrap();
    assert!(dir.path().join("report.csv").exists());
}
