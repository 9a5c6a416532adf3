//! The local Levins approximation `q_α`, its upper and lower envelopes, the
//! hypothesis checklists with their parameter recipes, and the probability
//! bounds attached to the envelopes.

use std::f64::consts::SQRT_2;
use std::io::Write;

use rayon::prelude::*;

use crate::colonization::ColonizationFunction;
use crate::error::{Error, Result};
use crate::geometry::{distance, r_smooth_constant, Ball, Point, Region};
use crate::landscape::{Landscape, LandscapeConstants};
use crate::patches::ProbabilityBound;

/// Largest root of `x = f(xρ) / (αe + f(xρ))` on `[0, 1]`.
///
/// Zero when `f'(0) ρ <= α e`. Otherwise `g(x) = F(x) - x` is positive just
/// above zero and negative at one, with a single sign change in between, which
/// bisection locates to about `1e-15`.
pub fn q_alpha_value(f: &ColonizationFunction, rho: f64, e: f64, alpha: f64) -> f64 {
    let lf = f.slope_at_zero();
    if lf * rho <= alpha * e {
        return 0.0;
    }
    let g = |x: f64| {
        let col = f.eval(x * rho);
        col / (alpha * e + col) - x
    };
    let q_lin = 1.0 - alpha * e / (lf * rho);
    let mut lo = (0.5 * q_lin).min(1e-6);
    while g(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return 0.0;
        }
    }
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `q_α(z)` with `α > 0`.
pub fn solve_q_alpha(land: &Landscape, f: &ColonizationFunction, z: &Point, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::precondition("alpha must be positive"));
    }
    let rho = land.rho(z)?;
    Ok(q_alpha_value(f, rho, land.e.eval(z), alpha))
}

/// Region `Θ = B_x(t)` and the envelope parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSpec {
    pub theta: Ball,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub beta_prime: f64,
    /// Slope of the lower envelope near `∂Θ`; the theorem value when absent.
    pub m: Option<f64>,
}

impl BoundSpec {
    pub fn validate(&self) -> Result<()> {
        let Self { alpha1, alpha2, beta, beta_prime, .. } = *self;
        if !(0.5 < alpha2 && alpha2 <= alpha1 && alpha1 < 1.0) {
            return Err(Error::config(format!(
                "bounds.alpha1/alpha2 must satisfy 1/2 < alpha2 <= alpha1 < 1 (got alpha1 = {alpha1}, alpha2 = {alpha2})"
            )));
        }
        if !(1.0 < beta && beta < beta_prime) {
            return Err(Error::config(format!(
                "bounds.beta/beta_prime must satisfy 1 < beta < beta_prime (got {beta}, {beta_prime})"
            )));
        }
        if !(self.theta.radius > 0.0) {
            return Err(Error::config("bounds.theta radius must be positive"));
        }
        if let Some(m) = self.m {
            if !(m > 0.0) {
                return Err(Error::config("bounds.m must be positive"));
            }
        }
        Ok(())
    }
}

/// One inequality with its two sides; `margin = rhs - lhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// Informational lines do not count towards `all_pass`.
    pub required: bool,
}

impl CheckLine {
    fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, pass: lhs <= rhs, required: true }
    }

    fn lt(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, pass: lhs < rhs, required: true }
    }

    fn info(mut self) -> Self {
        self.required = false;
        self
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Which conclusion of the upper-bound theorem applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Viable,
    NowhereViable,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checklist {
    pub lines: Vec<CheckLine>,
}

impl Checklist {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().filter(|l| l.required).all(|l| l.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckLine> {
        self.lines.iter().find(|l| l.name == name)
    }

    pub fn failures(&self) -> Vec<&CheckLine> {
        self.lines.iter().filter(|l| l.required && !l.pass).collect()
    }

    pub fn extend(&mut self, other: Checklist) {
        self.lines.extend(other.lines);
    }

    /// Writes `name,lhs,rhs,pass,margin`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["name", "lhs", "rhs", "pass", "margin"])?;
        for l in &self.lines {
            out.write_record([
                l.name.clone(),
                format!("{:?}", l.lhs),
                format!("{:?}", l.rhs),
                l.pass.to_string(),
                format!("{:?}", l.margin()),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Landscape quantities shared by every bound for a fixed `(f, spec)`.
#[derive(Debug, Clone)]
pub struct BoundContext<'a> {
    pub land: &'a Landscape,
    pub f: ColonizationFunction,
    pub spec: BoundSpec,
    /// Grid spacing of the scans behind `η`, `c̄` and the `ρ` Lipschitz estimates.
    pub step: f64,
    pub l_f: f64,
    pub c1: f64,
    pub eta_omega: f64,
    pub eta_theta: f64,
    pub c_bar: f64,
    /// Constants with `L_ρ` taken over `Ω`.
    pub omega: LandscapeConstants,
    /// Constants with `L_ρ` taken over `Θ`.
    pub local: LandscapeConstants,
    pub c4: f64,
    pub m: f64,
    pub theta_inside: bool,
}

impl<'a> BoundContext<'a> {
    /// `l_rho` overrides both the landscape declaration and the grid estimates.
    pub fn new(
        land: &'a Landscape,
        f: ColonizationFunction,
        spec: BoundSpec,
        l_rho: Option<f64>,
    ) -> Result<Self> {
        spec.validate()?;
        let step = land.grid_step;
        let theta_region = Region::Ball(spec.theta.clone());
        let theta_inside = land.domain.contains_ball(&spec.theta, land.dim);
        let eta_omega = land.eta(&f, &Region::Whole, step)?;
        let eta_theta = land.eta(&f, &theta_region, step)?;
        let c_bar = land.c_bar(&theta_region, step)?;
        let omega = land.constants(&f, &Region::Whole, l_rho)?;
        let local = land.constants(&f, &theta_region, l_rho)?;
        let mut ctx = Self {
            land,
            f,
            spec,
            step,
            l_f: f.slope_at_zero(),
            c1: f.curvature(),
            eta_omega,
            eta_theta,
            c_bar,
            omega,
            local,
            c4: 0.0,
            m: 0.0,
            theta_inside,
        };
        ctx.c4 = ctx.constant_c4();
        ctx.m = ctx.spec.m.unwrap_or_else(|| ctx.theorem_m());
        Ok(ctx)
    }

    fn rho_max(&self) -> f64 {
        self.omega.rho_max
    }

    /// `e_min^2 η_Θ (β' - β) / (4 r ρ_max^2 L_f (C_1 ρ_max + L_f))`.
    pub fn theorem_m(&self) -> f64 {
        theorem_m(
            self.land.e.min,
            self.eta_theta,
            self.spec.beta_prime - self.spec.beta,
            self.land.r,
            self.rho_max(),
            self.l_f,
            self.c1,
        )
    }

    fn theta2(&self) -> f64 {
        (self.c_bar / (4.0 * self.land.kernel.c_max)).min(1.0 / SQRT_2)
    }

    /// `C_4` over `Θ`.
    pub fn constant_c4(&self) -> f64 {
        constant_c4(
            self.f.eval(self.land.a.min * self.land.sigma.min),
            self.land.dim,
            self.land.e.min,
            self.land.e.max,
            self.c_bar,
            self.land.kernel.c_max,
            self.rho_max(),
            self.l_f,
            self.c1,
        )
    }

    pub fn branch(&self) -> Branch {
        if self.l_f * self.rho_max() / self.land.e.min > 0.5 {
            Branch::Viable
        } else {
            Branch::NowhereViable
        }
    }

    /// `p^+(z) = q_{α_1}(z) ∨ (1 - α_2)`.
    pub fn upper(&self, z: &Point) -> f64 {
        self.land.q_alpha(&self.f, z, self.spec.alpha1).max(1.0 - self.spec.alpha2)
    }

    /// `p^-(z) = m (t - |z - x|) ∧ q_{β'}(z)` on `Θ`.
    pub fn lower(&self, z: &Point) -> Result<f64> {
        let depth = self.spec.theta.depth(z);
        if depth < 0.0 {
            return Err(Error::domain(format!("point {:?} lies outside Θ", &z[..self.land.dim])));
        }
        Ok((self.m * depth).min(self.land.q_alpha(&self.f, z, self.spec.beta_prime)))
    }

    /// Hypotheses of the upper-bound theorem at `n` patches.
    pub fn check_ub(&self, n: usize) -> Checklist {
        let land = self.land;
        let (a1, a2) = (self.spec.alpha1, self.spec.alpha2);
        let cover = land.covering_number(land.r / 3.0);
        let lf_rho_e = self.l_f * self.rho_max() / land.e.min;
        let lines = vec![
            CheckLine::le(
                "UB.ineq1",
                2.0 * self.l_f * self.omega.l_q * land.r * self.rho_max(),
                land.e.min * (1.0 - a1) * (a1 * self.eta_omega).max(1.0 - a2),
            ),
            CheckLine::lt("UB.n_cover", 2.0 * cover as f64, n as f64),
            CheckLine::lt("UB.alpha2_lower", 0.5, a2),
            CheckLine::le("UB.alpha_order", a2, a1),
            CheckLine::lt("UB.alpha1_upper", a1, 1.0),
            CheckLine::lt("UB.branch.viable", 0.5, lf_rho_e).info(),
        ];
        Checklist { lines }
    }

    /// Hypotheses of the lower-bound theorem, plus the underlying inequalities
    /// under both parameter recipes.
    pub fn check_lb(&self) -> Checklist {
        let land = self.land;
        let r = land.r;
        let t = self.spec.theta.radius;
        let eta = self.eta_theta;
        let (beta, beta_p) = (self.spec.beta, self.spec.beta_prime);
        let (e_min, rho, lf, c1) = (land.e.min, self.rho_max(), self.l_f, self.c1);
        let c_max = land.kernel.c_max;
        let l_q = self.local.l_q;
        let c3 = self.local.c3;
        let curv = lf * rho * rho * (c1 * rho + lf);
        let theta2 = self.theta2();
        let slope = c3 + rho / t;
        let mut lines = vec![
            CheckLine::lt("LB.theta_inside", 0.0, if self.theta_inside { 1.0 } else { -1.0 }),
            CheckLine::lt("LB.eta_positive", 0.0, eta),
            CheckLine::lt("LB.beta_lower", 1.0, beta),
            CheckLine::lt("LB.beta_order", beta, beta_p),
            CheckLine::lt("LB.beta_prime_upper", beta_p, 1.0 + eta / 2.0),
            CheckLine::lt("LB.viable", 0.5, lf * rho / e_min),
            CheckLine::le("ULB.ineq1", l_q * r, eta * eta * e_min * e_min / (32.0 * curv)),
            CheckLine::le(
                "ULB.ineq2",
                r / t,
                (self.c_bar / (4.0 * c_max))
                    .min(1.0 / SQRT_2)
                    .min(eta * e_min / (8.0 * lf * rho + 4.0 * eta * e_min)),
            ),
            CheckLine::le(
                "ULB.ineq3",
                slope * r,
                (land.a.min * land.sigma.min * self.c_bar * self.local.v_dminus1
                    * 2f64.powf(-(land.dim as f64 + 3.0) / 2.0))
                .min(eta * e_min / (4.0 * lf) * theta2),
            ),
            CheckLine::le("localLB.ineq1", l_q * r, e_min * e_min * eta * (beta_p - beta) / (4.0 * curv)),
            CheckLine::le("localLB.ineq2", r / t, e_min * (beta_p - beta) / (6.0 * lf * rho)),
            CheckLine::le(
                "LB.lb1",
                e_min * self.c4 * eta * eta * (beta - 1.0),
                lf * rho,
            ),
        ];
        if eta < 1.0 {
            let uniform = LemmaParams {
                beta_prime: 1.0 / (2.0 * (1.0 - eta)) + beta / 2.0,
                theta1: 4.0 * lf * rho / (eta * e_min),
                mr: eta * eta * e_min * e_min / (32.0 * curv),
                theta2,
            };
            lines.extend(self.lemma_lines("uniform", uniform));
        }
        let local = LemmaParams {
            beta_prime: beta_p,
            theta1: lf * rho / (e_min * (beta_p - beta)),
            mr: self.m * r,
            theta2,
        };
        lines.extend(self.lemma_lines("local", local));
        Checklist { lines }
    }

    fn lemma_lines(&self, tag: &str, p: LemmaParams) -> Vec<CheckLine> {
        let land = self.land;
        let r = land.r;
        let t = self.spec.theta.radius;
        let eta = self.eta_theta;
        let beta = self.spec.beta;
        let (e_min, rho, lf, c1) = (land.e.min, self.rho_max(), self.l_f, self.c1);
        let m = p.mr / r;
        let slope = self.local.c3 + rho / t;
        let dim = land.dim as f64;
        vec![
            CheckLine::lt(format!("LB.beta_prime_range[{tag}]"), beta, p.beta_prime),
            CheckLine::lt(format!("LB.beta_prime_cap[{tag}]"), p.beta_prime, 1.0 / (1.0 - eta)),
            CheckLine::lt(format!("LB.theta1[{tag}]"), 1.0, p.theta1),
            CheckLine::le(
                format!("LB.L0[{tag}]"),
                (1.0 + p.theta1) * p.mr,
                p.beta_prime * eta + 1.0 - p.beta_prime,
            ),
            CheckLine::le(
                format!("LB.L1[{tag}]"),
                lf * rho * m.max(self.local.l_q) * r,
                (p.beta_prime - beta) * e_min * p.theta1 * p.mr,
            ),
            CheckLine::le(
                format!("LB.L2[{tag}]"),
                lf * slope * r / p.theta2 + rho * (c1 * rho + lf) * p.theta1 * p.mr,
                e_min * (beta * eta + 1.0 - beta),
            ),
            CheckLine::le(format!("LB.theta2[{tag}]"), r / t, p.theta2.min(1.0 / (2.0 * (2.0 + p.theta1)))),
            CheckLine::le(
                format!("LB.theta2c[{tag}]"),
                slope * r,
                land.a.min
                    * self.local.v_dminus1
                    * land.sigma.min
                    * (self.c_bar - 2.0 * land.kernel.c_max * p.theta2)
                    * (1.0 - p.theta2 * p.theta2).powf((dim - 1.0) / 2.0),
            ),
        ]
    }

    /// Probability bound of the upper-bound theorem at `n` patches.
    pub fn ub_probability(&self, n: usize) -> Result<UbProbability> {
        let land = self.land;
        let nf = n as f64;
        let reach = self.omega.c2 * (nf - 1.0) * land.r.powi(land.dim as i32) / land.area();
        let branch = self.branch();
        let a_max = land.a.max;
        let exponent = match branch {
            Branch::Viable => {
                reach * land.e.min.powi(2) * (1.0 - self.spec.alpha1).powi(2)
                    / (16.0 * a_max * a_max * self.l_f * self.l_f)
            }
            Branch::NowhereViable => reach * (self.rho_max() / (2.0 * a_max)).powi(2),
        };
        let concentration = 2.0 * nf * (-exponent).exp();
        let mass = land.min_local_mass(land.r / 3.0, self.step)? / land.area();
        let tail = (-nf * mass).exp();
        let cover = land.covering_number(land.r / 3.0) as f64;
        Ok(UbProbability {
            branch,
            bound: ProbabilityBound::value(1.0 - concentration - 0.5 * nf * tail),
            concentration_term: concentration,
            covering_term_half_n: 0.5 * nf * tail,
            covering_term_cover: cover * tail,
        })
    }

    /// Probability bound of the lower-bound theorem at `n` patches.
    pub fn lb_probability(&self, n: usize) -> ProbabilityBound {
        let land = self.land;
        let nf = n as f64;
        let reach = self.local.c2 * (nf - 1.0) * land.r.powi(land.dim as i32) / land.area();
        let a_max = land.a.max;
        let exponent = reach * self.c4.powi(2) * land.e.min.powi(2) * self.eta_theta.powi(4)
            * (self.spec.beta - 1.0).powi(2)
            / (a_max * a_max * self.l_f * self.l_f);
        ProbabilityBound::value(1.0 - 2.0 * nf * (-exponent).exp())
    }

    /// The two-sided statement: inner region `Θ_m`, accuracy radius and its
    /// probability bound.
    pub fn two_sided(&self, n: usize) -> std::result::Result<TwoSided, String> {
        let land = self.land;
        let t = self.spec.theta.radius;
        if t <= land.r + 1.0 / self.m {
            return Err(format!("t = {t} does not exceed r + 1/m = {}", land.r + 1.0 / self.m));
        }
        if (self.spec.alpha2 - (1.0 - self.eta_theta)).abs() > 1e-9 {
            return Err(format!(
                "alpha2 = {} differs from 1 - eta_theta = {}",
                self.spec.alpha2,
                1.0 - self.eta_theta
            ));
        }
        let nf = n as f64;
        let a_max = land.a.max;
        let density = (nf - 1.0) * land.r.powi(land.dim as i32) / land.area();
        let rate = (self.c4.powi(2) * self.eta_theta.powi(4) * (self.spec.beta - 1.0).powi(2))
            .min((1.0 - self.spec.alpha1).powi(2) / 16.0);
        let exponent = self.local.c2.min(self.omega.c2) * density * land.e.min.powi(2)
            / (a_max * a_max * self.l_f * self.l_f)
            * rate;
        let smooth = r_smooth_constant(land.dim) * land.sigma.min * nf * land.r.powi(land.dim as i32) / land.area();
        let p = 1.0 - 4.0 * nf * (-exponent).exp() - 0.5 * nf * (-smooth).exp();
        Ok(TwoSided {
            inner: Ball::new(self.spec.theta.center, t - 1.0 / self.m),
            accuracy: (self.spec.beta_prime - self.spec.alpha1) / self.spec.alpha1,
            probability: ProbabilityBound::value(p),
        })
    }
}


/// Parameters fed to the underlying lower-bound lemma.
#[derive(Debug, Clone, Copy)]
struct LemmaParams {
    beta_prime: f64,
    theta1: f64,
    mr: f64,
    theta2: f64,
}

/// `e_min^2 η (β' - β) / (4 r ρ_max^2 L_f (C_1 ρ_max + L_f))`.
pub fn theorem_m(e_min: f64, eta: f64, gap: f64, r: f64, rho_max: f64, l_f: f64, c1: f64) -> f64 {
    e_min * e_min * eta * gap / (4.0 * r * rho_max * rho_max * l_f * (c1 * rho_max + l_f))
}

/// `C_4 = (1 ∧ f(a_min σ_min) / (2^{(d+1)/2} e_max)) (c̄/(4 c_max) ∧ 1/√2)
/// e_min^2 / (32 L_f ρ_max^2 (C_1 ρ_max + L_f))`, with `f_amin_smin = f(a_min σ_min)`.
#[allow(clippy::too_many_arguments)]
pub fn constant_c4(
    f_amin_smin: f64,
    dim: usize,
    e_min: f64,
    e_max: f64,
    c_bar: f64,
    c_max: f64,
    rho_max: f64,
    l_f: f64,
    c1: f64,
) -> f64 {
    let first = (f_amin_smin / (2f64.powf((dim as f64 + 1.0) / 2.0) * e_max)).min(1.0);
    let second = (c_bar / (4.0 * c_max)).min(1.0 / SQRT_2);
    first * second * e_min * e_min / (32.0 * l_f * rho_max * rho_max * (c1 * rho_max + l_f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UbProbability {
    pub branch: Branch,
    pub bound: ProbabilityBound,
    pub concentration_term: f64,
    /// Covering term with the `n/2` prefactor of the theorem display.
    pub covering_term_half_n: f64,
    /// Covering term with the `N(Ω, r/3)` prefactor of the primitivity bound.
    pub covering_term_cover: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSided {
    /// `Θ_m`, the points of `Θ` at distance at least `1/m` from its boundary.
    pub inner: Ball,
    pub accuracy: f64,
    pub probability: ProbabilityBound,
}

/// `q_α` tabulated on a lattice with multilinear interpolation.
#[derive(Debug, Clone)]
pub struct QGrid {
    dim: usize,
    lo: Point,
    step: f64,
    counts: [usize; 3],
    values: Vec<f64>,
}

impl QGrid {
    /// Tabulates `q_α` on the lattice covering `region` with spacing `step`.
    pub fn build(land: &Landscape, f: &ColonizationFunction, alpha: f64, region: &Region, step: f64) -> Self {
        let dim = land.dim;
        let bbox = match region {
            Region::Whole => land.domain.bounding_box(dim),
            Region::Ball(_) => region.bounding_box(dim),
        };
        let mut counts = [1usize; 3];
        for k in 0..dim {
            counts[k] = (((bbox.1[k] - bbox.0[k]) / step).ceil() as usize).max(1) + 1;
        }
        let mut nodes = Vec::with_capacity(counts.iter().product());
        for i in 0..counts[0] {
            for j in 0..counts[1] {
                for l in 0..counts[2] {
                    let idx = [i, j, l];
                    let mut p = [0.0; 3];
                    for k in 0..dim {
                        p[k] = bbox.0[k] + step * idx[k] as f64;
                    }
                    nodes.push(p);
                }
            }
        }
        let values = nodes.par_iter().map(|p| land.q_alpha(f, p, alpha)).collect();
        Self { dim, lo: bbox.0, step, counts, values }
    }

    pub fn eval(&self, z: &Point) -> f64 {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for k in 0..self.dim {
            let x = ((z[k] - self.lo[k]) / self.step).max(0.0);
            let i = (x.floor() as usize).min(self.counts[k].saturating_sub(2));
            base[k] = i;
            frac[k] = (x - i as f64).clamp(0.0, 1.0);
        }
        let corners = 1usize << self.dim;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for k in 0..self.dim {
                let bit = (c >> k) & 1;
                idx[k] = (base[k] + bit).min(self.counts[k] - 1);
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
            }
            acc += w * self.values[(idx[0] * self.counts[1] + idx[1]) * self.counts[2] + idx[2]];
        }
        acc
    }

    /// Interpolation error budget `L_q · step`.
    pub fn error_budget(&self, l_q: f64) -> f64 {
        l_q * self.step
    }
}

/// Rule for `φ_n` in the scaling schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiRule {
    /// `c ln n`
    Log { c: f64 },
    /// `c n^k`
    Power { c: f64, k: f64 },
}

impl PhiRule {
    pub fn eval(&self, n: usize) -> f64 {
        match *self {
            PhiRule::Log { c } => c * (n as f64).ln(),
            PhiRule::Power { c, k } => c * (n as f64).powf(k),
        }
    }
}

/// Inputs of the scaling schedule.
#[derive(Debug, Clone)]
pub struct ScheduleInputs {
    pub n_sequence: Vec<usize>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub phi: PhiRule,
    /// `r_n = r0 (n / n0)^{-kappa}`.
    pub r0: f64,
    pub n0: f64,
    pub kappa: f64,
    pub dim: usize,
    pub area: f64,
    /// `η_Ω`, assumed constant along the sequence.
    pub eta_omega: f64,
    /// `η_Θ` for the lower envelope.
    pub eta_theta: f64,
    /// `m r / (β' - β) = e_min^2 η_Θ / (4 ρ_max^2 L_f (C_1 ρ_max + L_f))`.
    pub m_coefficient: f64,
}

/// Parameters for one `n` of the scaling schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub n: usize,
    pub r: f64,
    pub phi: f64,
    /// `r^{1 - γ_1} φ`.
    pub scale: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub m: f64,
    pub mean_neighbours: f64,
    pub growth_lhs: f64,
    pub growth_rhs: f64,
    pub growth_ok: bool,
    pub eta_ok: bool,
    pub alpha_order_ok: bool,
    pub beta_cap_ok: bool,
    /// `1 / φ`, the shape of the excluded boundary width.
    pub boundary_width: f64,
}

impl ScheduleEntry {
    pub fn valid(&self) -> bool {
        self.growth_ok && self.eta_ok && self.alpha_order_ok && self.beta_cap_ok
    }
}

/// Per-`n` parameters with `1 - α_2 = η_Ω`, `1 - α_1 = β - 1 = β' - β = r^{1-γ_1} φ`.
pub fn corollary2_schedule(inp: &ScheduleInputs) -> Result<Vec<ScheduleEntry>> {
    if !(0.0..0.5).contains(&inp.gamma1) {
        return Err(Error::config("gamma1 must lie in [0, 1/2)"));
    }
    if inp.n_sequence.len() < 2 {
        return Err(Error::config("the scaling schedule needs at least two values of n"));
    }
    let entries: Vec<ScheduleEntry> = inp
        .n_sequence
        .iter()
        .map(|&n| {
            let r = inp.r0 * (n as f64 / inp.n0).powf(-inp.kappa);
            let phi = inp.phi.eval(n);
            let scale = r.powf(1.0 - inp.gamma1) * phi;
            let big_m = n as f64 * r.powi(inp.dim as i32) / inp.area;
            let growth_lhs = r.powf(2.0 * (1.0 + inp.gamma1)) * phi * phi * big_m;
            let growth_rhs = inp.c2 * (n as f64).ln().powf(1.0 + inp.gamma2);
            let alpha1 = 1.0 - scale;
            let alpha2 = 1.0 - inp.eta_omega;
            ScheduleEntry {
                n,
                r,
                phi,
                scale,
                alpha1,
                alpha2,
                beta: 1.0 + scale,
                beta_prime: 1.0 + 2.0 * scale,
                m: inp.m_coefficient * scale / r,
                mean_neighbours: big_m,
                growth_lhs,
                growth_rhs,
                growth_ok: growth_lhs >= growth_rhs,
                eta_ok: inp.eta_omega >= inp.c1 * r.powf(inp.gamma1),
                alpha_order_ok: alpha1 >= alpha2,
                beta_cap_ok: 2.0 * scale <= inp.eta_theta / 2.0,
                boundary_width: 1.0 / phi,
            }
        })
        .collect();
    let phis_increase = entries.windows(2).all(|w| w[1].phi > w[0].phi);
    let decay = entries
        .windows(2)
        .all(|w| w[1].r.powf(1.0 - 2.0 * inp.gamma1) * w[1].phi < w[0].r.powf(1.0 - 2.0 * inp.gamma1) * w[0].phi);
    if !phis_increase || !decay {
        return Err(Error::config(
            "schedule needs phi_n increasing and r_n^(1 - 2 gamma1) phi_n decreasing along the sequence",
        ));
    }
    Ok(entries)
}

/// Distance from `z` to `∂Θ` for `z ∈ Θ`.
pub fn boundary_distance(theta: &Ball, z: &Point) -> f64 {
    theta.radius - distance(&theta.center, z)
}
