use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::Context;
use metapop::bounds::Checklist;
use metapop::config::{Config, ExperimentConfig};
use metapop::dynamics::{largest_fixed_point, write_equilibrium_csv};
use metapop::montecarlo::{self, bound_context};
use metapop::patches::{coupling_matrix, primitivity, primitivity_probability_bound, sample_patches, Network};
use metapop::Region;

use crate::table::{shorten, sig6, Table};
use crate::{Cli, Command, Failure};

pub fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.command == Command::Report {
        return report(&cli.out);
    }
    let cfg = load(cli)?;
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let out = cli.out.as_path();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let name = command_name(cli.command);
    montecarlo::write_manifest(out, name, &cfg)?;
    match cli.command {
        Command::Sample => sample(&cfg, out),
        Command::Equilibrium => equilibrium(&cfg, out),
        Command::Approx => approx(&cfg, out),
        Command::Check => check(&cfg, out),
        Command::BoundsExperiment => bounds_experiment(&cfg, out),
        Command::Scaling => {
            let rep = montecarlo::run_scaling_experiment(&cfg)?;
            rep.write(out)?;
            Table::pairs("scaling", &rep.summary()).print();
            Ok(())
        }
        Command::Concentration => {
            let rep = montecarlo::run_concentration_experiment(&cfg)?;
            rep.write(out)?;
            Table::pairs("concentration", &rep.summary()).print();
            Ok(())
        }
        Command::Stochastic => {
            let rep = montecarlo::run_stochastic_comparison(&cfg)?;
            rep.write(out)?;
            Table::pairs("stochastic comparison", &rep.summary()).print();
            Ok(())
        }
        Command::Report => unreachable!("handled above"),
    }
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Sample => "sample",
        Command::Equilibrium => "equilibrium",
        Command::Approx => "approx",
        Command::Check => "check",
        Command::BoundsExperiment => "bounds-experiment",
        Command::Scaling => "scaling",
        Command::Concentration => "concentration",
        Command::Stochastic => "stochastic",
        Command::Report => "report",
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Validation("--config PATH is required for this command".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let mut raw = Config::parse(&text)?;
    for o in &cli.overrides {
        raw.apply_override(o)?;
    }
    if let Some(seed) = cli.seed {
        raw.set("seed", &seed.to_string())?;
    }
    Ok(ExperimentConfig::from_config(raw)?)
}

fn create(out: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = out.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn sample(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let land = &cfg.landscape;
    let patches = sample_patches(land, cfg.n, cfg.seed, 0)?;
    patches.write_csv(create(out, "patches.csv")?)?;
    let net = Network::build(land, &patches);
    let cert = primitivity(&net);
    let bound = primitivity_probability_bound(land, cfg.n, land.r, land.grid_step)?;
    Table::pairs(
        "sample",
        &[
            ("patches".into(), patches.len().to_string()),
            ("edges".into(), net.n_edges().to_string()),
            ("connected components".into(), cert.components.to_string()),
            ("primitive".into(), cert.primitive.to_string()),
            ("primitivity bound".into(), bound.get().map_or_else(|| "not applicable".into(), sig6)),
        ],
    )
    .print();
    Ok(())
}

fn equilibrium(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let land = &cfg.landscape;
    let patches = sample_patches(land, cfg.n, cfg.seed, 0)?;
    patches.write_csv(create(out, "patches.csv")?)?;
    let net = Network::build(land, &patches);
    let tm = coupling_matrix(&net, &cfg.f, cfg.perron)?;
    tm.write_csv(create(out, "tmatrix.csv")?)?;
    let fp = largest_fixed_point(&net, &cfg.f, cfg.fixed_point)?;
    write_equilibrium_csv(&net, &fp.p, create(out, "equilibrium.csv")?)?;
    let mean = fp.p.iter().sum::<f64>() / fp.p.len() as f64;
    let min = fp.p.iter().copied().fold(f64::INFINITY, f64::min);
    let max = fp.p.iter().copied().fold(0.0, f64::max);
    Table::pairs(
        "equilibrium",
        &[
            ("patches".into(), cfg.n.to_string()),
            ("edges".into(), tm.n_edges.to_string()),
            ("lambda(T)".into(), sig6(tm.lambda)),
            ("primitive".into(), tm.primitive.to_string()),
            ("iterations".into(), fp.iterations.to_string()),
            ("residual".into(), sig6(fp.residual)),
            ("mean p*".into(), sig6(mean)),
            ("min p*".into(), sig6(min)),
            ("max p*".into(), sig6(max)),
        ],
    )
    .print();
    Ok(())
}

fn approx(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let land = &cfg.landscape;
    let grid = land.grid(&Region::Whole, land.grid_step)?;
    let ctx = match cfg.bounds {
        Some(_) => Some(bound_context(cfg)?),
        None => None,
    };
    let dim = land.dim;
    let mut w = csv::Writer::from_writer(create(out, "approx.csv")?);
    let mut header: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    header.extend(["rho", "q1", "p_upper", "p_lower"].map(String::from));
    w.write_record(&header).map_err(metapop::Error::from)?;
    let mut q_min = f64::INFINITY;
    let mut q_max: f64 = 0.0;
    for z in &grid {
        let q1 = land.q_alpha(&cfg.f, z, 1.0);
        q_min = q_min.min(q1);
        q_max = q_max.max(q1);
        let (upper, lower) = match &ctx {
            Some(c) => (
                format!("{:?}", c.upper(z)),
                if c.spec.theta.contains(z) { format!("{:?}", c.lower(z)?) } else { String::new() },
            ),
            None => (String::new(), String::new()),
        };
        let mut rec: Vec<String> = z[..dim].iter().map(|v| format!("{v:?}")).collect();
        rec.extend([format!("{:?}", land.rho_at(z)), format!("{q1:?}"), upper, lower]);
        w.write_record(&rec).map_err(metapop::Error::from)?;
    }
    w.flush().context("writing approx.csv")?;
    Table::pairs(
        "local approximation",
        &[
            ("grid points".into(), grid.len().to_string()),
            ("min q1".into(), sig6(q_min)),
            ("max q1".into(), sig6(q_max)),
        ],
    )
    .print();
    Ok(())
}

fn checklist_table(list: &Checklist) -> Table {
    let mut t = Table::new(["hypothesis", "lhs", "rhs", "margin", "pass"]);
    for line in &list.lines {
        let pass = match (line.pass, line.required) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "no (informational)",
        };
        t.row([line.name.clone(), sig6(line.lhs), sig6(line.rhs), sig6(line.margin()), pass.into()]);
    }
    t
}

fn check(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let ctx = bound_context(cfg)?;
    let mut list = ctx.check_ub(cfg.n);
    list.extend(ctx.check_lb());
    list.write_csv(create(out, "checklist.csv")?)?;
    checklist_table(&list).print();
    let ub = ctx.ub_probability(cfg.n)?;
    let fmt_bound = |b: Option<f64>| b.map_or_else(|| "not applicable".to_string(), sig6);
    let mut pairs = vec![
        ("all hypotheses pass".to_string(), list.all_pass().to_string()),
        ("eta_omega".into(), sig6(ctx.eta_omega)),
        ("eta_theta".into(), sig6(ctx.eta_theta)),
        ("m".into(), sig6(ctx.m)),
        ("UB probability bound".into(), fmt_bound(ub.bound.get())),
        ("LB probability bound".into(), fmt_bound(ctx.lb_probability(cfg.n).get())),
    ];
    match ctx.two_sided(cfg.n) {
        Ok(t) => {
            pairs.push(("two-sided accuracy".into(), sig6(t.accuracy)));
            pairs.push(("two-sided bound".into(), fmt_bound(t.probability.get())));
        }
        Err(reason) => pairs.push(("two-sided bound".into(), format!("not applicable: {reason}"))),
    }
    Table::pairs("summary", &pairs).print();
    Ok(())
}

fn bounds_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let rep = montecarlo::run_bound_experiment(cfg)?;
    rep.write(out)?;
    if !rep.checklist.all_pass() {
        println!("WARNING: some hypothesis inequalities fail; the bounds below are not guaranteed\n");
        let mut failing = Checklist::default();
        failing.lines = rep.checklist.failures().into_iter().cloned().collect();
        checklist_table(&failing).print();
    }
    Table::pairs("bounds experiment", &rep.summary()).print();
    Ok(())
}

fn report(out: &Path) -> Result<(), Failure> {
    let mut found = false;
    for name in ["manifest", "checklist.csv", "report.csv"] {
        let path = out.join(name);
        if !path.exists() {
            continue;
        }
        found = true;
        println!("== {name}");
        if name == "manifest" {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            for line in text.lines().take_while(|l| !l.starts_with('#')) {
                println!("{line}");
            }
            println!();
            continue;
        }
        let mut rdr = csv::Reader::from_path(&path).map_err(metapop::Error::from)?;
        let header: Vec<String> = rdr.headers().map_err(metapop::Error::from)?.iter().map(String::from).collect();
        let mut t = Table::new(header);
        for rec in rdr.records() {
            let rec = rec.map_err(metapop::Error::from)?;
            t.row(rec.iter().map(shorten));
        }
        t.print();
    }
    if !found {
        return Err(Failure::Validation(format!("no reports found in {}", out.display())));
    }
    Ok(())
}
