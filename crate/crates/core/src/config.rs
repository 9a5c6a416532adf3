//! Line-oriented `key = value` experiment configuration.
//!
//! Blank lines and text after `#` are ignored. Keys use dotted sections such as
//! `sigma.kind`; list values are written `[1, 2, 3]` or as whitespace/comma
//! separated numbers. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::bounds::{BoundSpec, PhiRule};
use crate::colonization::{ColonizationFunction, ColonizationKind};
use crate::dynamics::FixedPointOptions;
use crate::error::{Error, Result};
use crate::geometry::{point_from, Ball, Domain, Point};
use crate::landscape::{Field, FieldKind, GaussTerm, Kernel, KernelProfile, Landscape};
use crate::perron::PowerOptions;

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "dimension",
    "r",
    "seed",
    "n",
    "replicates",
    "domain.kind",
    "domain.params",
    "e.kind",
    "e.params",
    "e.bounds",
    "e.lipschitz",
    "a.kind",
    "a.params",
    "a.bounds",
    "a.lipschitz",
    "sigma.kind",
    "sigma.params",
    "sigma.bounds",
    "sigma.lipschitz",
    "kernel.kind",
    "kernel.params",
    "kernel.c_max",
    "rho_lipschitz",
    "quadrature.resolution",
    "grid.step",
    "f.kind",
    "f.scale",
    "bounds.center",
    "bounds.radius",
    "bounds.alpha1",
    "bounds.alpha2",
    "bounds.beta",
    "bounds.beta_prime",
    "bounds.m",
    "fixed_point.tol",
    "fixed_point.max_iter",
    "perron.tol",
    "perron.max_iter",
    "concentration.t_over_h",
    "concentration.points",
    "scaling.n_sequence",
    "scaling.gamma1",
    "scaling.gamma2",
    "scaling.c1",
    "scaling.c2",
    "scaling.phi",
    "scaling.phi_params",
    "scaling.r0",
    "scaling.n0",
    "scaling.kappa",
    "scaling.k2",
    "stochastic.t_end",
    "stochastic.window",
    "stochastic.n_sequence",
];

/// Raw configuration: an ordered map from key to value text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn unknown_key(key: &str) -> Error {
    Error::config(format!("unknown key `{key}`; valid keys: {}", KEYS.join(", ")))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}: expected `key = value`, found `{line}`", lineno + 1))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets a key, rejecting unknown ones. Used for `--override`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(unknown_key(key));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{spec}` is not of the form key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::config(format!("missing required key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| Error::config(format!("`{key}` must be a number, found `{v}`"))))
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn req_f64(&self, key: &str) -> Result<f64> {
        self.require(key)?;
        Ok(self.f64(key)?.expect("present"))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::config(format!("`{key}` must be a nonnegative integer, found `{v}`")))
            })
            .transpose()
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| v.parse::<u64>().map_err(|_| Error::config(format!("`{key}` must be an unsigned integer, found `{v}`"))))
            .transpose()
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }

    pub fn req_list(&self, key: &str) -> Result<Vec<f64>> {
        parse_list(key, self.require(key)?)
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::config(format!("`{key}` has a non-numeric entry `{s}`"))))
        .collect()
}

fn expect_len(key: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::config(format!("`{key}` needs {len} values, found {}", v.len())));
    }
    Ok(())
}

fn parse_domain(cfg: &Config, dim: usize) -> Result<Domain> {
    let params = cfg.req_list("domain.params")?;
    match cfg.get("domain.kind").unwrap_or("box") {
        "box" => {
            expect_len("domain.params", &params, 2 * dim)?;
            Ok(Domain::Box { lo: point_from(&params[..dim]), hi: point_from(&params[dim..]) })
        }
        "balls" => {
            if params.is_empty() || params.len() % (dim + 1) != 0 {
                return Err(Error::config(format!(
                    "`domain.params` for balls needs groups of {} values (centre, radius)",
                    dim + 1
                )));
            }
            Ok(Domain::Balls(
                params
                    .chunks(dim + 1)
                    .map(|c| Ball::new(point_from(&c[..dim]), c[dim]))
                    .collect(),
            ))
        }
        other => Err(Error::config(format!("unknown domain.kind `{other}` (valid: box, balls)"))),
    }
}

fn parse_field(cfg: &Config, name: &str, dim: usize, bbox: &(Point, Point)) -> Result<Field> {
    let kind_key = format!("{name}.kind");
    let params_key = format!("{name}.params");
    let params = cfg.req_list(&params_key)?;
    let kind = match cfg.get(&kind_key).unwrap_or("constant") {
        "constant" => {
            expect_len(&params_key, &params, 1)?;
            FieldKind::Constant(params[0])
        }
        "affine" => {
            expect_len(&params_key, &params, 1 + dim)?;
            FieldKind::Affine { intercept: params[0], gradient: point_from(&params[1..]) }
        }
        "bump" => {
            expect_len(&params_key, &params, 3 + dim)?;
            if !(params[2] > 0.0) {
                return Err(Error::config(format!("`{params_key}` width must be positive")));
            }
            FieldKind::Bump { base: params[0], amp: params[1], width: params[2], center: point_from(&params[3..]) }
        }
        "gaussians" => {
            let group = 2 + dim;
            if params.len() < 3 || (params.len() - 3) % group != 0 {
                return Err(Error::config(format!(
                    "`{params_key}` for gaussians needs base, lo, hi and groups of {group} values"
                )));
            }
            let terms = params[3..]
                .chunks(group)
                .map(|c| GaussTerm { weight: c[0], width: c[1], center: point_from(&c[2..]) })
                .collect();
            FieldKind::Gaussians { base: params[0], lo: params[1], hi: params[2], terms }
        }
        other => {
            return Err(Error::config(format!(
                "unknown {kind_key} `{other}` (valid: constant, affine, bump, gaussians)"
            )))
        }
    };
    let bounds = match cfg.list(&format!("{name}.bounds"))? {
        Some(b) => {
            expect_len(&format!("{name}.bounds"), &b, 2)?;
            Some((b[0], b[1]))
        }
        None => None,
    };
    let lipschitz = cfg.f64(&format!("{name}.lipschitz"))?;
    Ok(Field::new(kind, bbox, dim, bounds, lipschitz))
}

fn parse_kernel(cfg: &Config) -> Result<Kernel> {
    let params = cfg.list("kernel.params")?.unwrap_or_else(|| vec![1.0]);
    let profile = match cfg.get("kernel.kind").unwrap_or("uniform") {
        "uniform" => KernelProfile::Uniform,
        "linear" => KernelProfile::Linear,
        "quadratic" => KernelProfile::Quadratic,
        "power" => {
            expect_len("kernel.params", &params, 3)?;
            KernelProfile::Power { k0: params[1], slope: params[2] }
        }
        other => {
            return Err(Error::config(format!(
                "unknown kernel.kind `{other}` (valid: uniform, linear, quadratic, power)"
            )))
        }
    };
    if !matches!(profile, KernelProfile::Power { .. }) {
        expect_len("kernel.params", &params, 1)?;
    }
    Kernel::new(profile, params[0], cfg.f64("kernel.c_max")?)
}

/// `bounds.alpha2` may be a number or `auto`, meaning `1 - η_Θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha2 {
    Value(f64),
    OneMinusEtaTheta,
}

/// Bound parameters before `η_Θ` is known.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTemplate {
    pub theta: Ball,
    pub alpha1: f64,
    pub alpha2: Alpha2,
    pub beta: f64,
    pub beta_prime: f64,
    pub m: Option<f64>,
}

impl BoundTemplate {
    pub fn resolve(&self, eta_theta: f64) -> BoundSpec {
        BoundSpec {
            theta: self.theta.clone(),
            alpha1: self.alpha1,
            alpha2: match self.alpha2 {
                Alpha2::Value(v) => v,
                Alpha2::OneMinusEtaTheta => 1.0 - eta_theta,
            },
            beta: self.beta,
            beta_prime: self.beta_prime,
            m: self.m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub n_sequence: Vec<usize>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub phi: PhiRule,
    pub r0: f64,
    pub n0: f64,
    pub kappa: f64,
    /// Coefficient of the excluded boundary width `k2 r^{γ_1} / φ_n`; the
    /// theorem's `1/m` when absent.
    pub k2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticConfig {
    pub t_end: f64,
    pub window: f64,
    pub n_sequence: Vec<usize>,
}

/// A validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub raw: Config,
    pub landscape: Landscape,
    pub f: ColonizationFunction,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub bounds: Option<BoundTemplate>,
    pub rho_lipschitz: Option<f64>,
    pub fixed_point: FixedPointOptions,
    pub perron: PowerOptions,
    pub concentration_t_over_h: Vec<f64>,
    pub concentration_points: Vec<Point>,
    pub scaling: Option<ScalingConfig>,
    pub stochastic: StochasticConfig,
}

impl ExperimentConfig {
    pub fn from_config(raw: Config) -> Result<Self> {
        let cfg = &raw;
        let dim = cfg.usize("dimension")?.unwrap_or(2);
        crate::geometry::check_dimension(dim)?;
        let r = cfg.req_f64("r")?;
        let domain = parse_domain(cfg, dim)?;
        domain.validate(dim)?;
        let bbox = domain.bounding_box(dim);
        let e = parse_field(cfg, "e", dim, &bbox)?;
        let a = parse_field(cfg, "a", dim, &bbox)?;
        let sigma = parse_field(cfg, "sigma", dim, &bbox)?;
        let kernel = parse_kernel(cfg)?;
        let mut landscape = Landscape::new(dim, domain, e, a, sigma, kernel, r)?;
        if let Some(res) = cfg.usize("quadrature.resolution")? {
            landscape = landscape.with_quadrature_resolution(res);
        }
        if let Some(step) = cfg.f64("grid.step")? {
            if !(step > 0.0) {
                return Err(Error::config("`grid.step` must be positive"));
            }
            landscape = landscape.with_grid_step(step);
        }
        let rho_lipschitz = cfg.f64("rho_lipschitz")?;
        landscape.rho_lipschitz = rho_lipschitz;

        let kind = ColonizationKind::parse(cfg.get("f.kind").unwrap_or("saturating"))?;
        let f = ColonizationFunction::new(kind, cfg.f64_or("f.scale", 1.0)?)?;

        let n = cfg.usize("n")?.unwrap_or(1000);
        if n < 2 {
            return Err(Error::config("`n` must be at least 2"));
        }
        let replicates = cfg.usize("replicates")?.unwrap_or(1);
        if replicates < 1 {
            return Err(Error::config("`replicates` must be at least 1"));
        }
        let seed = cfg.u64("seed")?.unwrap_or(0);

        let bounds = if cfg.has("bounds.radius") {
            let center = cfg.req_list("bounds.center")?;
            expect_len("bounds.center", &center, dim)?;
            let alpha2 = match cfg.get("bounds.alpha2") {
                Some("auto") | None => Alpha2::OneMinusEtaTheta,
                Some(_) => Alpha2::Value(cfg.req_f64("bounds.alpha2")?),
            };
            let tpl = BoundTemplate {
                theta: Ball::new(point_from(&center), cfg.req_f64("bounds.radius")?),
                alpha1: cfg.req_f64("bounds.alpha1")?,
                alpha2,
                beta: cfg.req_f64("bounds.beta")?,
                beta_prime: cfg.req_f64("bounds.beta_prime")?,
                m: cfg.f64("bounds.m")?,
            };
            if let Alpha2::Value(a2) = tpl.alpha2 {
                tpl.resolve(0.0).validate().map_err(|e| match e {
                    Error::Config(msg) if a2 > tpl.alpha1 => {
                        Error::Config(format!("invariant alpha2 <= alpha1 violated: {msg}"))
                    }
                    other => other,
                })?;
            } else if !(0.5 < tpl.alpha1 && tpl.alpha1 < 1.0 && 1.0 < tpl.beta && tpl.beta < tpl.beta_prime) {
                return Err(Error::config(
                    "bounds need 1/2 < alpha1 < 1 and 1 < beta < beta_prime",
                ));
            }
            Some(tpl)
        } else {
            None
        };

        let fixed_point = FixedPointOptions {
            tol: cfg.f64_or("fixed_point.tol", 1e-10)?,
            max_iter: cfg.usize("fixed_point.max_iter")?.unwrap_or(1_000_000),
        };
        let perron = PowerOptions {
            tol: cfg.f64_or("perron.tol", 1e-10)?,
            max_iter: cfg.usize("perron.max_iter")?.unwrap_or(200_000),
        };

        let concentration_t_over_h = cfg.list("concentration.t_over_h")?.unwrap_or_default();
        let concentration_points = match cfg.list("concentration.points")? {
            Some(v) => {
                if v.len() % dim != 0 {
                    return Err(Error::config(format!("`concentration.points` needs groups of {dim} coordinates")));
                }
                v.chunks(dim).map(point_from).collect()
            }
            None => Vec::new(),
        };

        let scaling = if cfg.has("scaling.n_sequence") {
            let n_sequence = to_counts("scaling.n_sequence", &cfg.req_list("scaling.n_sequence")?)?;
            let phi_params = cfg.list("scaling.phi_params")?.unwrap_or_else(|| vec![1.0]);
            let phi = match cfg.get("scaling.phi").unwrap_or("log") {
                "log" => PhiRule::Log { c: phi_params[0] },
                "power" => {
                    expect_len("scaling.phi_params", &phi_params, 2)?;
                    PhiRule::Power { c: phi_params[0], k: phi_params[1] }
                }
                other => return Err(Error::config(format!("unknown scaling.phi `{other}` (valid: log, power)"))),
            };
            Some(ScalingConfig {
                n_sequence,
                gamma1: cfg.f64_or("scaling.gamma1", 0.0)?,
                gamma2: cfg.f64_or("scaling.gamma2", 0.1)?,
                c1: cfg.f64_or("scaling.c1", 0.1)?,
                c2: cfg.f64_or("scaling.c2", 1e-6)?,
                phi,
                r0: cfg.f64_or("scaling.r0", r)?,
                n0: cfg.f64_or("scaling.n0", n as f64)?,
                kappa: cfg.f64_or("scaling.kappa", 1.0 / (2.0 * dim as f64))?,
                k2: cfg.f64("scaling.k2")?,
            })
        } else {
            None
        };

        let stochastic = StochasticConfig {
            t_end: cfg.f64_or("stochastic.t_end", 20.0)?,
            window: cfg.f64_or("stochastic.window", 5.0)?,
            n_sequence: match cfg.list("stochastic.n_sequence")? {
                Some(v) => to_counts("stochastic.n_sequence", &v)?,
                None => vec![n],
            },
        };
        if !(stochastic.window > 0.0) || stochastic.t_end < 0.0 {
            return Err(Error::config("`stochastic.window` must be positive and `stochastic.t_end` nonnegative"));
        }

        Ok(Self {
            raw,
            landscape,
            f,
            n,
            replicates,
            seed,
            bounds,
            rho_lipschitz,
            fixed_point,
            perron,
            concentration_t_over_h,
            concentration_points,
            scaling,
            stochastic,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_config(Config::parse(text)?)
    }
}

fn to_counts(key: &str, v: &[f64]) -> Result<Vec<usize>> {
    v.iter()
        .map(|x| {
            if *x >= 2.0 && x.fract() == 0.0 {
                Ok(*x as usize)
            } else {
                Err(Error::config(format!("`{key}` entries must be integers >= 2, found {x}")))
            }
        })
        .collect()
}
