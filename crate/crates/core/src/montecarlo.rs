//! Replicated experiments: envelope verification, concentration, scaling and
//! stochastic comparison, with CSV persistence.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::bounds::{corollary2_schedule, BoundContext, Checklist, ScheduleEntry, ScheduleInputs, TwoSided};
use crate::config::ExperimentConfig;
use crate::dynamics::largest_fixed_point;
use crate::error::{Error, Result};
use crate::geometry::{Ball, Point, Region};
use crate::landscape::Landscape;
use crate::patches::{coupling_matrix, primitivity, sample_patches, Network, ProbabilityBound};
use crate::rng;
use crate::stochastic::ctmc_simulate;

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Six significant digits for console tables.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.5e}")
    }
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn bound_fields(b: &ProbabilityBound) -> (String, String) {
    match b {
        ProbabilityBound::Value { value, vacuous } => (fmt(*value), vacuous.to_string()),
        ProbabilityBound::NotApplicable(_) => ("NA".into(), "NA".into()),
    }
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(dir.join(name))?)))
}

/// Writes the manifest: experiment name, version, seed and the full config.
pub fn write_manifest(dir: &Path, experiment: &str, cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = format!(
        "experiment = {experiment}\nversion = {}\nseed = {}\n# config\n{}",
        crate::VERSION,
        cfg.seed,
        cfg.raw
    );
    fs::write(dir.join("manifest"), text)?;
    Ok(())
}

/// Outcome of one replicate of the envelope experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReplicate {
    pub replicate: usize,
    pub lambda_t: f64,
    pub primitive: bool,
    pub ub_holds: bool,
    pub lb_holds: bool,
    pub n_theta: usize,
    pub n_theta_m: usize,
    pub max_interior_error: f64,
    pub within_accuracy: bool,
    pub status: String,
    /// Per patch: `(p*, p^+, p^- or NaN outside Θ, q_1, in Θ_m)`.
    pub rows: Vec<(Point, f64, f64, f64, f64, bool)>,
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub n: usize,
    pub dim: usize,
    pub checklist: Checklist,
    pub ub_bound: ProbabilityBound,
    pub lb_bound: ProbabilityBound,
    pub two_sided: std::result::Result<TwoSided, String>,
    pub eta_omega: f64,
    pub eta_theta: f64,
    pub m: f64,
    pub l_rho_omega: f64,
    pub l_rho_theta: f64,
    pub replicates: Vec<BoundReplicate>,
}

impl BoundReport {
    fn ok(&self) -> impl Iterator<Item = &BoundReplicate> {
        self.replicates.iter().filter(|r| r.status == "ok")
    }

    pub fn completed(&self) -> usize {
        self.ok().count()
    }

    pub fn ub_count(&self) -> usize {
        self.ok().filter(|r| r.ub_holds).count()
    }

    pub fn lb_count(&self) -> usize {
        self.ok().filter(|r| r.lb_holds).count()
    }

    pub fn accuracy_count(&self) -> usize {
        self.ok().filter(|r| r.within_accuracy).count()
    }

    pub fn accuracy(&self) -> Option<f64> {
        self.two_sided.as_ref().ok().map(|t| t.accuracy)
    }

    pub fn summary(&self) -> Vec<(String, String)> {
        let r = self.completed();
        let freq = |k: usize| if r == 0 { f64::NAN } else { k as f64 / r as f64 };
        let mut out = vec![
            ("replicates completed".to_string(), r.to_string()),
            ("hypotheses all pass".into(), self.checklist.all_pass().to_string()),
            ("eta_omega".into(), sig6(self.eta_omega)),
            ("eta_theta".into(), sig6(self.eta_theta)),
            ("m".into(), sig6(self.m)),
            ("UB frequency".into(), sig6(freq(self.ub_count()))),
            ("UB bound".into(), self.ub_bound.get().map_or("NA".into(), sig6)),
            ("LB frequency".into(), sig6(freq(self.lb_count()))),
            ("LB bound".into(), self.lb_bound.get().map_or("NA".into(), sig6)),
            ("interior accuracy frequency".into(), sig6(freq(self.accuracy_count()))),
        ];
        match &self.two_sided {
            Ok(t) => {
                out.push(("accuracy radius".into(), sig6(t.accuracy)));
                out.push(("two-sided bound".into(), t.probability.get().map_or("NA".into(), sig6)));
            }
            Err(reason) => out.push(("two-sided bound".into(), format!("not applicable: {reason}"))),
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.checklist.write_csv(BufWriter::new(File::create(dir.join("checklist.csv"))?))?;
        let mut w = writer(dir, "replicates.csv")?;
        w.write_record([
            "replicate",
            "lambda_T",
            "primitive",
            "ub_holds",
            "lb_holds",
            "n_theta",
            "n_theta_m",
            "max_interior_error",
            "within_accuracy",
            "status",
        ])?;
        for r in &self.replicates {
            w.write_record([
                r.replicate.to_string(),
                fmt(r.lambda_t),
                r.primitive.to_string(),
                r.ub_holds.to_string(),
                r.lb_holds.to_string(),
                r.n_theta.to_string(),
                r.n_theta_m.to_string(),
                fmt(r.max_interior_error),
                r.within_accuracy.to_string(),
                r.status.clone(),
            ])?;
        }
        w.flush()?;
        let mut w = writer(dir, "report.csv")?;
        w.write_record(["quantity", "count", "replicates", "frequency", "wilson_lo", "wilson_hi", "theory", "theory_vacuous"])?;
        let r = self.completed();
        let two = self.two_sided.as_ref().map(|t| t.probability.clone()).unwrap_or_else(|e| ProbabilityBound::NotApplicable(e.clone()));
        let prim = self.ok().filter(|x| x.primitive).count();
        for (name, k, bound) in [
            ("ub_holds", self.ub_count(), self.ub_bound.clone()),
            ("lb_holds", self.lb_count(), self.lb_bound.clone()),
            ("interior_within_accuracy", self.accuracy_count(), two),
            ("primitive", prim, ProbabilityBound::NotApplicable(String::new())),
        ] {
            let (lo, hi) = wilson_interval(k, r);
            let (theory, vac) = bound_fields(&bound);
            w.write_record([
                name.to_string(),
                k.to_string(),
                r.to_string(),
                fmt(if r == 0 { f64::NAN } else { k as f64 / r as f64 }),
                fmt(lo),
                fmt(hi),
                theory,
                vac,
            ])?;
        }
        for (name, v) in [
            ("eta_omega", self.eta_omega),
            ("eta_theta", self.eta_theta),
            ("m", self.m),
            ("l_rho_omega", self.l_rho_omega),
            ("l_rho_theta", self.l_rho_theta),
            ("accuracy", self.accuracy().unwrap_or(f64::NAN)),
        ] {
            w.write_record([name.to_string(), String::new(), String::new(), fmt(v), String::new(), String::new(), String::new(), String::new()])?;
        }
        w.flush()?;
        for rep in &self.replicates {
            let mut w = writer(dir, &format!("equilibrium_{}.csv", rep.replicate))?;
            let dim = self.dim;
            let mut header = vec!["id".to_string()];
            header.extend((1..=dim).map(|k| format!("x{k}")));
            header.extend(["p_star", "p_upper", "p_lower", "q1", "in_theta_m"].map(String::from));
            w.write_record(&header)?;
            for (i, (z, p, up, low, q1, inner)) in rep.rows.iter().enumerate() {
                let mut rec = vec![i.to_string()];
                rec.extend(z[..dim].iter().map(|c| fmt(*c)));
                rec.extend([fmt(*p), fmt(*up), if low.is_nan() { String::new() } else { fmt(*low) }, fmt(*q1), inner.to_string()]);
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

/// Builds the bound context for `cfg`, resolving `alpha2 = auto`.
pub fn bound_context(cfg: &ExperimentConfig) -> Result<BoundContext<'_>> {
    let tpl = cfg
        .bounds
        .as_ref()
        .ok_or_else(|| Error::config("this command needs the bounds.* keys"))?;
    let land = &cfg.landscape;
    let eta_theta = land.eta(&cfg.f, &Region::Ball(tpl.theta.clone()), land.grid_step)?;
    BoundContext::new(land, cfg.f, tpl.resolve(eta_theta), cfg.rho_lipschitz)
}

/// Samples patch landscapes and checks `p* <= p^+` everywhere, `p* >= p^-` on
/// `Θ`, and `|p* - q_1| <= accuracy` on `Θ_m`.
pub fn run_bound_experiment(cfg: &ExperimentConfig) -> Result<BoundReport> {
    let ctx = bound_context(cfg)?;
    let n = cfg.n;
    let mut checklist = ctx.check_ub(n);
    checklist.extend(ctx.check_lb());
    let ub = ctx.ub_probability(n)?;
    let lb_bound = ctx.lb_probability(n);
    let two_sided = ctx.two_sided(n);
    let accuracy = two_sided.as_ref().map(|t| t.accuracy).ok();
    let inner = two_sided.as_ref().map(|t| t.inner.clone()).ok();
    let replicates = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| bound_replicate(cfg, &ctx, rep, inner.as_ref(), accuracy))
        .collect();
    Ok(BoundReport {
        n,
        dim: cfg.landscape.dim,
        checklist,
        ub_bound: ub.bound,
        lb_bound,
        two_sided,
        eta_omega: ctx.eta_omega,
        eta_theta: ctx.eta_theta,
        m: ctx.m,
        l_rho_omega: ctx.omega.l_rho,
        l_rho_theta: ctx.local.l_rho,
        replicates,
    })
}

fn bound_replicate(
    cfg: &ExperimentConfig,
    ctx: &BoundContext<'_>,
    rep: usize,
    inner: Option<&Ball>,
    accuracy: Option<f64>,
) -> BoundReplicate {
    let mut out = BoundReplicate {
        replicate: rep,
        lambda_t: f64::NAN,
        primitive: false,
        ub_holds: false,
        lb_holds: false,
        n_theta: 0,
        n_theta_m: 0,
        max_interior_error: f64::NAN,
        within_accuracy: false,
        status: "ok".into(),
        rows: Vec::new(),
    };
    let land = &cfg.landscape;
    let result = (|| -> Result<()> {
        let patches = sample_patches(land, cfg.n, cfg.seed, rep as u64)?;
        let net = Network::build(land, &patches);
        let tm = coupling_matrix(&net, &cfg.f, cfg.perron)?;
        out.lambda_t = tm.lambda;
        out.primitive = tm.primitive;
        let fp = largest_fixed_point(&net, &cfg.f, cfg.fixed_point)?;
        let theta = &ctx.spec.theta;
        let rows: Vec<_> = patches
            .locations
            .par_iter()
            .zip(&fp.p)
            .map(|(z, &p)| {
                let upper = ctx.upper(z);
                let lower = if theta.contains(z) { ctx.lower(z).unwrap_or(f64::NAN) } else { f64::NAN };
                let q1 = land.q_alpha(&cfg.f, z, 1.0);
                let in_inner = inner.is_some_and(|b| b.contains(z));
                (*z, p, upper, lower, q1, in_inner)
            })
            .collect();
        out.ub_holds = rows.iter().all(|r| r.1 <= r.2);
        out.lb_holds = rows.iter().filter(|r| !r.3.is_nan()).all(|r| r.1 >= r.3);
        out.n_theta = rows.iter().filter(|r| !r.3.is_nan()).count();
        out.n_theta_m = rows.iter().filter(|r| r.5).count();
        out.max_interior_error = rows.iter().filter(|r| r.5).map(|r| (r.1 - r.4).abs()).fold(0.0, f64::max);
        out.within_accuracy = accuracy.is_some_and(|acc| out.max_interior_error <= acc);
        out.rows = rows;
        Ok(())
    })();
    if let Err(e) = result {
        out.status = format!("error: {e}");
    }
    out
}

/// One `(z, t)` cell of the concentration experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationCell {
    pub point: Point,
    pub t_over_h: f64,
    pub t: f64,
    pub exceed: usize,
    pub replicates: usize,
    pub bound: f64,
}

impl ConcentrationCell {
    pub fn frequency(&self) -> f64 {
        self.exceed as f64 / self.replicates as f64
    }

    pub fn wilson_upper(&self) -> f64 {
        wilson_interval(self.exceed, self.replicates).1
    }

    /// The one-sided check: Wilson upper limit at most the bound, or the bound
    /// is vacuous.
    pub fn pass(&self) -> bool {
        self.bound >= 1.0 || self.wilson_upper() <= self.bound
    }
}

#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    pub n: usize,
    pub dim: usize,
    pub cells: Vec<ConcentrationCell>,
}

impl ConcentrationReport {
    pub fn all_pass(&self) -> bool {
        self.cells.iter().all(ConcentrationCell::pass)
    }

    pub fn summary(&self) -> Vec<(String, String)> {
        let mut out = vec![("cells".to_string(), self.cells.len().to_string())];
        for c in &self.cells {
            out.push((
                format!("z={:?} t/H={}", &c.point[..self.dim], sig6(c.t_over_h)),
                format!("freq {} (wilson hi {}) vs bound {}", sig6(c.frequency()), sig6(c.wilson_upper()), sig6(c.bound)),
            ));
        }
        out.push(("all pass".into(), self.all_pass().to_string()));
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = writer(dir, "report.csv")?;
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("z{k}")).collect();
        header.extend(
            ["t_over_h", "t", "exceed", "replicates", "frequency", "wilson_lo", "wilson_hi", "bound", "vacuous", "pass"]
                .map(String::from),
        );
        w.write_record(&header)?;
        for c in &self.cells {
            let (lo, hi) = wilson_interval(c.exceed, c.replicates);
            let mut rec: Vec<String> = c.point[..self.dim].iter().map(|v| fmt(*v)).collect();
            rec.extend([
                fmt(c.t_over_h),
                fmt(c.t),
                c.exceed.to_string(),
                c.replicates.to_string(),
                fmt(c.frequency()),
                fmt(lo),
                fmt(hi),
                fmt(c.bound),
                (c.bound >= 1.0).to_string(),
                c.pass().to_string(),
            ]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `|(A/(n-1)) Σ_j a(z_j) c(z, z_j; r) - ρ(z)|` for `n - 1` sampled patches.
pub fn empirical_deviation(land: &Landscape, sample: &[Point], z: &Point) -> f64 {
    let r = land.r;
    let scale = land.area() / sample.len() as f64 / r.powi(land.dim as i32);
    let empirical: f64 = sample
        .iter()
        .map(|y| {
            let u = crate::geometry::distance(z, y) / r;
            land.a.eval(y) * land.kernel.eval(z, u)
        })
        .sum::<f64>()
        * scale;
    (empirical - land.rho_at(z)).abs()
}

/// Tail frequencies of the empirical-measure deviation against
/// `2 exp(-C_2 ((n-1) r^d / A) (t/H)^2)` with `h = a` and `H = a_max`.
pub fn run_concentration_experiment(cfg: &ExperimentConfig) -> Result<ConcentrationReport> {
    let land = &cfg.landscape;
    let dim = land.dim;
    let consts = land.constants(&cfg.f, &Region::Whole, Some(0.0))?;
    let cap = land.kernel.c_max * land.sigma.max * consts.v_d;
    if cfg.concentration_t_over_h.iter().any(|x| *x > cap || *x < 0.0) {
        return Err(Error::config(format!("concentration.t_over_h entries must lie in [0, {cap}]")));
    }
    let points = if cfg.concentration_points.is_empty() {
        let (lo, hi) = land.domain.bounding_box(dim);
        let mut c = [0.0; 3];
        for k in 0..dim {
            c[k] = 0.5 * (lo[k] + hi[k]);
        }
        vec![c]
    } else {
        cfg.concentration_points.clone()
    };
    for p in &points {
        land.rho(p)?;
    }
    let h = land.a.max;
    let n = cfg.n;
    let deviations: Vec<Vec<f64>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>> {
            let sample = sample_patches(land, n - 1, cfg.seed, rep as u64)?;
            Ok(points.iter().map(|z| empirical_deviation(land, &sample.locations, z)).collect())
        })
        .collect::<Result<_>>()?;
    let reach = consts.c2 * (n as f64 - 1.0) * land.r.powi(dim as i32) / land.area();
    let mut cells = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        for &x in &cfg.concentration_t_over_h {
            let t = x * h;
            cells.push(ConcentrationCell {
                point: *p,
                t_over_h: x,
                t,
                exceed: deviations.iter().filter(|d| d[pi] >= t).count(),
                replicates: cfg.replicates,
                bound: 2.0 * (-reach * x * x).exp(),
            });
        }
    }
    Ok(ConcentrationReport { n, dim, cells })
}

/// Per-`n` outcome of the scaling experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub entry: ScheduleEntry,
    pub inner_radius: f64,
    pub errors: Vec<f64>,
    pub median_error: f64,
    pub ratio: f64,
    pub excluded_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].median_error < w[0].median_error)
    }

    /// Largest over smallest error ratio along the sequence.
    pub fn ratio_spread(&self) -> f64 {
        let max = self.rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        let min = self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn summary(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for r in &self.rows {
            out.push((
                format!("n={}", r.entry.n),
                format!(
                    "r {} median error {} ratio {} schedule valid {}",
                    sig6(r.entry.r),
                    sig6(r.median_error),
                    sig6(r.ratio),
                    r.entry.valid()
                ),
            ));
        }
        out.push(("median error strictly decreasing".into(), self.strictly_decreasing().to_string()));
        out.push(("ratio spread".into(), sig6(self.ratio_spread())));
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = writer(dir, "report.csv")?;
        w.write_record([
            "n", "r", "phi", "scale", "alpha1", "alpha2", "beta", "beta_prime", "m", "mean_neighbours",
            "growth_lhs", "growth_rhs", "growth_ok", "eta_ok", "alpha_order_ok", "beta_cap_ok",
            "inner_radius", "median_error", "ratio", "excluded_fraction", "boundary_width",
        ])?;
        for r in &self.rows {
            let e = &r.entry;
            w.write_record([
                e.n.to_string(),
                fmt(e.r),
                fmt(e.phi),
                fmt(e.scale),
                fmt(e.alpha1),
                fmt(e.alpha2),
                fmt(e.beta),
                fmt(e.beta_prime),
                fmt(e.m),
                fmt(e.mean_neighbours),
                fmt(e.growth_lhs),
                fmt(e.growth_rhs),
                e.growth_ok.to_string(),
                e.eta_ok.to_string(),
                e.alpha_order_ok.to_string(),
                e.beta_cap_ok.to_string(),
                fmt(r.inner_radius),
                fmt(r.median_error),
                fmt(r.ratio),
                fmt(r.excluded_fraction),
                fmt(e.boundary_width),
            ])?;
        }
        w.flush()?;
        let mut w = writer(dir, "replicates.csv")?;
        w.write_record(["n", "replicate", "max_interior_error"])?;
        for r in &self.rows {
            for (i, e) in r.errors.iter().enumerate() {
                w.write_record([r.entry.n.to_string(), i.to_string(), fmt(*e)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

/// Runs the scaling schedule: for each `n`, the median over replicates of
/// `max_{z_i ∈ Θ_m} |p*_i - q_1(z_i)|` and its ratio to `r_n^{1-γ_1} φ_n`.
pub fn run_scaling_experiment(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let sc = cfg
        .scaling
        .as_ref()
        .ok_or_else(|| Error::config("this command needs the scaling.* keys"))?;
    let tpl = cfg
        .bounds
        .as_ref()
        .ok_or_else(|| Error::config("the scaling experiment needs bounds.center and bounds.radius for Θ"))?;
    let theta = tpl.theta.clone();
    let base = &cfg.landscape;
    let radii: Vec<f64> = sc
        .n_sequence
        .iter()
        .map(|&n| sc.r0 * (n as f64 / sc.n0).powf(-sc.kappa))
        .collect();
    let lands: Vec<Landscape> = radii.iter().map(|&r| base.clone().with_radius(r)).collect();
    let mut rows = Vec::new();
    for ((&n, land), &r) in sc.n_sequence.iter().zip(&lands).zip(&radii) {
        let eta_omega = land.eta(&cfg.f, &Region::Whole, land.grid_step)?;
        let eta_theta = land.eta(&cfg.f, &Region::Ball(theta.clone()), land.grid_step)?;
        let consts = land.constants(&cfg.f, &Region::Whole, Some(0.0))?;
        let rho = consts.rho_max;
        let (lf, c1) = (cfg.f.slope_at_zero(), cfg.f.curvature());
        let m_coefficient = land.e.min.powi(2) * eta_theta / (4.0 * rho * rho * lf * (c1 * rho + lf));
        let inputs = ScheduleInputs {
            n_sequence: sc.n_sequence.clone(),
            gamma1: sc.gamma1,
            gamma2: sc.gamma2,
            c1: sc.c1,
            c2: sc.c2,
            phi: sc.phi,
            r0: sc.r0,
            n0: sc.n0,
            kappa: sc.kappa,
            dim: land.dim,
            area: land.area(),
            eta_omega,
            eta_theta,
            m_coefficient,
        };
        let entry = corollary2_schedule(&inputs)?
            .into_iter()
            .find(|e| e.n == n)
            .expect("schedule has an entry per n");
        debug_assert!((entry.r - r).abs() < 1e-15);
        let width = match sc.k2 {
            Some(k2) => k2 * entry.r.powf(sc.gamma1) / entry.phi,
            None => 1.0 / entry.m,
        };
        let inner_radius = theta.radius - width;
        let inner = Ball::new(theta.center, inner_radius.max(0.0));
        let errors: Vec<f64> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| -> Result<f64> {
                if inner_radius <= 0.0 {
                    return Ok(f64::NAN);
                }
                let patches = sample_patches(land, n, cfg.seed, rep as u64)?;
                let net = Network::build(land, &patches);
                let fp = largest_fixed_point(&net, &cfg.f, cfg.fixed_point)?;
                Ok(patches
                    .locations
                    .iter()
                    .zip(&fp.p)
                    .filter(|(z, _)| inner.contains(z))
                    .map(|(z, p)| (p - land.q_alpha(&cfg.f, z, 1.0)).abs())
                    .fold(0.0, f64::max))
            })
            .collect::<Result<_>>()?;
        let median_error = median(&errors);
        let dim = land.dim as i32;
        let excluded_fraction = 1.0 - (inner_radius.max(0.0) / theta.radius).powi(dim);
        rows.push(ScalingRow {
            ratio: median_error / entry.scale,
            entry,
            inner_radius,
            errors,
            median_error,
            excluded_fraction,
        });
    }
    Ok(ScalingReport { rows })
}

/// One replicate of the stochastic comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticReplicate {
    pub n: usize,
    pub replicate: usize,
    pub lambda_t: f64,
    /// `sup_windows |mean_i X̄_i - mean_i p*_i|`.
    pub global_deviation: f64,
    /// `sup_windows mean_i |X̄_i - p*_i|`.
    pub local_deviation: f64,
    pub extinct: bool,
    pub events: usize,
}

#[derive(Debug, Clone)]
pub struct StochasticReport {
    pub replicates: Vec<StochasticReplicate>,
}

impl StochasticReport {
    /// `(n, median global deviation, median local deviation, extinctions)`.
    pub fn by_n(&self) -> Vec<(usize, f64, f64, usize)> {
        let mut ns: Vec<usize> = self.replicates.iter().map(|r| r.n).collect();
        ns.dedup();
        ns.into_iter()
            .map(|n| {
                let rs: Vec<_> = self.replicates.iter().filter(|r| r.n == n).collect();
                let g: Vec<f64> = rs.iter().map(|r| r.global_deviation).collect();
                let l: Vec<f64> = rs.iter().map(|r| r.local_deviation).collect();
                (n, median(&g), median(&l), rs.iter().filter(|r| r.extinct).count())
            })
            .collect()
    }

    pub fn summary(&self) -> Vec<(String, String)> {
        self.by_n()
            .into_iter()
            .map(|(n, g, l, ext)| {
                (format!("n={n}"), format!("global {} local {} extinctions {ext}", sig6(g), sig6(l)))
            })
            .collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = writer(dir, "replicates.csv")?;
        w.write_record(["n", "replicate", "lambda_T", "global_deviation", "local_deviation", "extinct", "events"])?;
        for r in &self.replicates {
            w.write_record([
                r.n.to_string(),
                r.replicate.to_string(),
                fmt(r.lambda_t),
                fmt(r.global_deviation),
                fmt(r.local_deviation),
                r.extinct.to_string(),
                r.events.to_string(),
            ])?;
        }
        w.flush()?;
        let mut w = writer(dir, "report.csv")?;
        w.write_record(["n", "median_global_deviation", "median_local_deviation", "extinctions"])?;
        for (n, g, l, e) in self.by_n() {
            w.write_record([n.to_string(), fmt(g), fmt(l), e.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Starts the continuous-time chain from independent Bernoulli(`p*_i`)
/// occupancies and records window-averaged deviations from `p*`.
pub fn run_stochastic_comparison(cfg: &ExperimentConfig) -> Result<StochasticReport> {
    let land = &cfg.landscape;
    let sc = &cfg.stochastic;
    let mut replicates = Vec::new();
    for &n in &sc.n_sequence {
        let batch: Vec<StochasticReplicate> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| -> Result<StochasticReplicate> {
                let patches = sample_patches(land, n, cfg.seed, rep as u64)?;
                let net = Network::build(land, &patches);
                let lambda_t = coupling_matrix(&net, &cfg.f, cfg.perron).map_or(f64::NAN, |t| t.lambda);
                let fp = largest_fixed_point(&net, &cfg.f, cfg.fixed_point)?;
                let mut init_rng = rng::stream(cfg.seed, &[rng::purpose::INITIAL_STATE, n as u64, rep as u64]);
                let state0: Vec<bool> = fp.p.iter().map(|&p| init_rng.random::<f64>() < p).collect();
                let mut out = StochasticReplicate {
                    n,
                    replicate: rep,
                    lambda_t,
                    global_deviation: 0.0,
                    local_deviation: 0.0,
                    extinct: false,
                    events: 0,
                };
                if sc.t_end <= 0.0 {
                    return Ok(out);
                }
                let mut ctmc_rng = rng::stream(cfg.seed, &[rng::purpose::CTMC, n as u64, rep as u64]);
                let traj = ctmc_simulate(&net, &cfg.f, &state0, sc.t_end, &mut ctmc_rng)?;
                out.events = traj.events.len();
                out.extinct = traj.extinction_time.is_some();
                let windows = (sc.t_end / sc.window).floor().max(1.0) as usize;
                let width = sc.t_end / windows as f64;
                let mut acc = vec![vec![0.0; n]; windows];
                traj.for_each_interval(|t0, t1, st| {
                    let mut a = t0;
                    while a < t1 {
                        let w = ((a / width).floor() as usize).min(windows - 1);
                        let b = t1.min((w + 1) as f64 * width);
                        if b <= a {
                            break;
                        }
                        for (x, &occ) in acc[w].iter_mut().zip(st) {
                            if occ {
                                *x += b - a;
                            }
                        }
                        a = b;
                    }
                });
                let mean_p = fp.p.iter().sum::<f64>() / n as f64;
                for w in &acc {
                    let avg: Vec<f64> = w.iter().map(|x| x / width).collect();
                    let g = (avg.iter().sum::<f64>() / n as f64 - mean_p).abs();
                    let l = avg.iter().zip(&fp.p).map(|(a, p)| (a - p).abs()).sum::<f64>() / n as f64;
                    out.global_deviation = out.global_deviation.max(g);
                    out.local_deviation = out.local_deviation.max(l);
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        replicates.extend(batch);
    }
    Ok(StochasticReport { replicates })
}

/// Empirical primitivity frequency over `cfg.replicates` patch sets.
pub fn primitivity_frequency(cfg: &ExperimentConfig) -> Result<(usize, usize)> {
    let land = &cfg.landscape;
    let hits: Vec<bool> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| -> Result<bool> {
            let patches = sample_patches(land, cfg.n, cfg.seed, rep as u64)?;
            Ok(primitivity(&Network::build(land, &patches)).primitive)
        })
        .collect::<Result<_>>()?;
    Ok((hits.iter().filter(|h| **h).count(), hits.len()))
}
