//! Habitat geometry, the spatial model functions `e`, `a`, `σ`, the dispersal
//! kernel, and the landscape-level constants derived from them.

use rayon::prelude::*;

use crate::bounds::q_alpha_value;
use crate::colonization::ColonizationFunction;
use crate::error::{Error, Result};
use crate::geometry::{
    check_dimension, distance, lattice, r_smooth_constant, region_grid, unit_ball_volume, Ball,
    Domain, Point, Region,
};
use crate::quadrature::{gauss_legendre_on, BallRule};

/// Maximum slope of the bump profile `(1 - s^2)^2`, attained at `s = 1/sqrt(3)`.
const BUMP_SLOPE: f64 = 1.539_600_717_839_002;

/// One Gaussian term `weight * exp(-|z - center|^2 / (2 width^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussTerm {
    pub weight: f64,
    pub width: f64,
    pub center: Point,
}

/// Built-in families for the spatial functions `e`, `a` and `σ`.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Constant(f64),
    Affine { intercept: f64, gradient: Point },
    /// `base + amp * (1 - s^2)^2` for `s = |z - center| / width < 1`, else `base`.
    Bump { base: f64, amp: f64, width: f64, center: Point },
    /// `base + Σ` Gaussian terms, truncated to `[lo, hi]`.
    Gaussians { base: f64, lo: f64, hi: f64, terms: Vec<GaussTerm> },
}

impl FieldKind {
    pub fn eval(&self, z: &Point) -> f64 {
        match self {
            FieldKind::Constant(v) => *v,
            FieldKind::Affine { intercept, gradient } => {
                intercept + gradient[0] * z[0] + gradient[1] * z[1] + gradient[2] * z[2]
            }
            FieldKind::Bump { base, amp, width, center } => {
                let s = distance(z, center) / width;
                if s < 1.0 {
                    let w = 1.0 - s * s;
                    base + amp * w * w
                } else {
                    *base
                }
            }
            FieldKind::Gaussians { base, lo, hi, terms } => {
                let v = base
                    + terms
                        .iter()
                        .map(|t| {
                            let d2 = crate::geometry::distance_sq(z, &t.center);
                            t.weight * (-d2 / (2.0 * t.width * t.width)).exp()
                        })
                        .sum::<f64>();
                v.clamp(*lo, *hi)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, FieldKind::Constant(_))
    }

    /// Analytic `(min, max)` over the box `bbox` and a Lipschitz constant.
    fn analytic_constants(&self, bbox: &(Point, Point), dim: usize) -> (f64, f64, f64) {
        match self {
            FieldKind::Constant(v) => (*v, *v, 0.0),
            FieldKind::Affine { intercept, gradient } => {
                let mut lo = *intercept;
                let mut hi = *intercept;
                for k in 0..dim {
                    let (a, b) = (gradient[k] * bbox.0[k], gradient[k] * bbox.1[k]);
                    lo += a.min(b);
                    hi += a.max(b);
                }
                let norm = gradient[..dim].iter().map(|g| g * g).sum::<f64>().sqrt();
                (lo, hi, norm)
            }
            FieldKind::Bump { base, amp, width, .. } => (
                base + amp.min(0.0),
                base + amp.max(0.0),
                amp.abs() * BUMP_SLOPE / width,
            ),
            FieldKind::Gaussians { lo, hi, terms, .. } => {
                let slope = terms
                    .iter()
                    .map(|t| t.weight.abs() / (t.width * std::f64::consts::E.sqrt()))
                    .sum();
                (*lo, *hi, slope)
            }
        }
    }
}

/// A spatial model function with its bounds and Lipschitz constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub kind: FieldKind,
    pub min: f64,
    pub max: f64,
    pub lipschitz: f64,
    /// Whether `min`/`max` were supplied rather than derived from the family.
    pub declared_bounds: bool,
    pub declared_lipschitz: bool,
}

impl Field {
    pub fn constant(v: f64) -> Self {
        Self {
            kind: FieldKind::Constant(v),
            min: v,
            max: v,
            lipschitz: 0.0,
            declared_bounds: false,
            declared_lipschitz: false,
        }
    }

    /// Builds a field, deriving any constant that is not declared from the
    /// family's analytic form over the box `bbox`.
    pub fn new(
        kind: FieldKind,
        bbox: &(Point, Point),
        dim: usize,
        bounds: Option<(f64, f64)>,
        lipschitz: Option<f64>,
    ) -> Self {
        let (lo, hi, lip) = kind.analytic_constants(bbox, dim);
        let (min, max) = bounds.unwrap_or((lo, hi));
        Self {
            kind,
            min,
            max,
            lipschitz: lipschitz.unwrap_or(lip),
            declared_bounds: bounds.is_some(),
            declared_lipschitz: lipschitz.is_some(),
        }
    }

    #[inline]
    pub fn eval(&self, z: &Point) -> f64 {
        self.kind.eval(z)
    }
}

/// Radial profile shapes for the dispersal kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelProfile {
    Uniform,
    /// `1 - u`
    Linear,
    /// `1 - u^2`
    Quadratic,
    /// `(1 - u)^(k0 + slope * z_1)`, a position-dependent shape.
    Power { k0: f64, slope: f64 },
}

/// Kernel `c_z(u) = height * profile(u)` on the half-open support `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub profile: KernelProfile,
    pub height: f64,
    pub c_max: f64,
}

impl Kernel {
    pub fn new(profile: KernelProfile, height: f64, c_max: Option<f64>) -> Result<Self> {
        if !(height > 0.0) {
            return Err(Error::config("kernel height must be positive"));
        }
        let c_max = c_max.unwrap_or(height);
        if c_max < height {
            return Err(Error::config(format!(
                "kernel.c_max = {c_max} is below the kernel peak {height}"
            )));
        }
        Ok(Self { profile, height, c_max })
    }

    pub fn uniform(height: f64) -> Self {
        Self { profile: KernelProfile::Uniform, height, c_max: height }
    }

    #[inline]
    pub fn eval(&self, z: &Point, u: f64) -> f64 {
        if !(0.0..1.0).contains(&u) {
            return 0.0;
        }
        self.height
            * match self.profile {
                KernelProfile::Uniform => 1.0,
                KernelProfile::Linear => 1.0 - u,
                KernelProfile::Quadratic => 1.0 - u * u,
                KernelProfile::Power { k0, slope } => (1.0 - u).powf(k0 + slope * z[0]),
            }
    }

    pub fn is_position_dependent(&self) -> bool {
        matches!(self.profile, KernelProfile::Power { slope, .. } if slope != 0.0)
    }

    /// `∫_0^1 c_z(u) u^k du` by 64-node Gauss–Legendre.
    pub fn moment(&self, z: &Point, k: usize) -> f64 {
        let (x, w) = gauss_legendre_on(64, 0.0, 1.0);
        x.iter().zip(&w).map(|(u, w)| w * self.eval(z, *u) * u.powi(k as i32)).sum()
    }
}

/// Constants consumed by the approximation theorems.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeConstants {
    pub rho_max: f64,
    pub l_rho: f64,
    /// Whether `l_rho` came from a grid scan rather than a declaration.
    pub l_rho_estimated: bool,
    pub l_q: f64,
    pub c2: f64,
    pub c3: f64,
    pub v_d: f64,
    pub v_dminus1: f64,
}

/// Habitat, model functions, kernel and dispersal radius.
#[derive(Debug, Clone)]
pub struct Landscape {
    pub dim: usize,
    pub domain: Domain,
    pub e: Field,
    pub a: Field,
    pub sigma: Field,
    pub kernel: Kernel,
    pub r: f64,
    /// Declared Lipschitz constant of `ρ`, if any.
    pub rho_lipschitz: Option<f64>,
    /// Radial/angular resolution of the ball quadrature used for `ρ`.
    pub quadrature_resolution: usize,
    /// Spacing of grid scans.
    pub grid_step: f64,
    rule: BallRule,
    area: f64,
    interior_rho: Option<f64>,
}

impl Landscape {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dim: usize,
        domain: Domain,
        e: Field,
        a: Field,
        sigma: Field,
        kernel: Kernel,
        r: f64,
    ) -> Result<Self> {
        check_dimension(dim)?;
        domain.validate(dim)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::config("r must be positive and finite"));
        }
        for (name, f) in [("e", &e), ("a", &a), ("sigma", &sigma)] {
            if !(f.min > 0.0) || f.max < f.min {
                return Err(Error::config(format!(
                    "{name} bounds must satisfy 0 < min <= max (got {}, {})",
                    f.min, f.max
                )));
            }
            if !(f.lipschitz >= 0.0) {
                return Err(Error::config(format!("{name}.lipschitz must be nonnegative")));
            }
        }
        let resolution = if dim == 3 { 24 } else { 64 };
        let mut land = Self {
            dim,
            domain,
            e,
            a,
            sigma,
            kernel,
            r,
            rho_lipschitz: None,
            quadrature_resolution: resolution,
            grid_step: r / 8.0,
            rule: BallRule::new(dim, resolution),
            area: 0.0,
            interior_rho: None,
        };
        land.refresh();
        if !(land.area > 0.0) {
            return Err(Error::domain("habitat has zero volume"));
        }
        Ok(land)
    }

    /// Replaces the quadrature resolution and recomputes cached integrals.
    pub fn with_quadrature_resolution(mut self, resolution: usize) -> Self {
        self.quadrature_resolution = resolution.max(2);
        self.rule = BallRule::new(self.dim, self.quadrature_resolution);
        self.refresh();
        self
    }

    pub fn with_grid_step(mut self, step: f64) -> Self {
        self.grid_step = step;
        self
    }

    /// Same landscape with a different dispersal radius.
    pub fn with_radius(mut self, r: f64) -> Self {
        self.r = r;
        self.grid_step = r / 8.0;
        self.refresh();
        self
    }

    fn refresh(&mut self) {
        self.area = self.integrate_sigma();
        self.interior_rho = if self.a.kind.is_constant()
            && self.sigma.kind.is_constant()
            && !self.kernel.is_position_dependent()
        {
            let z = [0.0; 3];
            let radial = self.kernel.moment(&z, self.dim - 1);
            Some(
                self.a.eval(&z)
                    * self.sigma.eval(&z)
                    * self.dim as f64
                    * unit_ball_volume(self.dim)
                    * radial,
            )
        } else {
            None
        };
    }

    /// `A = ∫_Ω σ(y) dy`.
    pub fn area(&self) -> f64 {
        self.area
    }

    fn integrate_sigma(&self) -> f64 {
        let dim = self.dim;
        match &self.domain {
            Domain::Box { lo, hi } => {
                if let FieldKind::Constant(v) = self.sigma.kind {
                    return v * (0..dim).map(|k| hi[k] - lo[k]).product::<f64>();
                }
                let rules: Vec<_> = (0..dim).map(|k| gauss_legendre_on(64, lo[k], hi[k])).collect();
                let mut total = 0.0;
                let n = 64usize;
                let count = n.pow(dim as u32);
                for idx in 0..count {
                    let mut p = [0.0; 3];
                    let mut w = 1.0;
                    let mut rest = idx;
                    for (k, rule) in rules.iter().enumerate() {
                        let i = rest % n;
                        rest /= n;
                        p[k] = rule.0[i];
                        w *= rule.1[i];
                    }
                    total += w * self.sigma.eval(&p);
                }
                total
            }
            Domain::Balls(balls) => {
                let rule = BallRule::new(dim, 64.min(self.quadrature_resolution.max(24)));
                balls
                    .iter()
                    .map(|b| {
                        let scale = b.radius.powi(dim as i32);
                        scale
                            * rule.integrate(|node| {
                                let p = offset(&b.center, &node.offset, b.radius);
                                self.sigma.eval(&p) / self.domain.multiplicity(&p, dim) as f64
                            })
                    })
                    .sum()
            }
        }
    }

    /// Whether `B(z, radius)` lies in `Ω` by a cheap sufficient test.
    fn ball_inside(&self, z: &Point, radius: f64) -> bool {
        match &self.domain {
            Domain::Box { .. } => self.domain.contains_ball(&Ball::new(*z, radius), self.dim),
            Domain::Balls(balls) => balls
                .iter()
                .any(|b| distance(&b.center, z) + radius <= b.radius),
        }
    }

    /// `ρ(z) = ∫_Ω a(y) c(z, y; r) σ(y) dy`.
    pub fn rho(&self, z: &Point) -> Result<f64> {
        if !self.domain.contains(z, self.dim) {
            return Err(Error::domain(format!("point {:?} lies outside the habitat", &z[..self.dim])));
        }
        Ok(self.rho_at(z))
    }

    /// The `ρ` integral at any point; outside `Ω` it is still well defined.
    pub fn rho_at(&self, z: &Point) -> f64 {
        if let Some(v) = self.interior_rho {
            if self.ball_inside(z, self.r) {
                return v;
            }
        }
        let r = self.r;
        self.rule.integrate(|node| {
            let y = offset(z, &node.offset, r);
            if !self.domain.contains(&y, self.dim) {
                return 0.0;
            }
            self.a.eval(&y) * self.kernel.eval(z, node.radius) * self.sigma.eval(&y)
        })
    }

    /// Lipschitz estimate of `ρ` from axis-neighbour differences on a grid.
    pub fn estimate_l_rho(&self, region: &Region, grid_step: f64) -> Result<f64> {
        if !(grid_step > 0.0) || grid_step >= self.r / 4.0 {
            return Err(Error::precondition(format!(
                "grid step {grid_step} must lie in (0, r/4) with r = {}",
                self.r
            )));
        }
        let pts = self.grid(region, grid_step)?;
        let dim = self.dim;
        let best = pts
            .par_iter()
            .map(|p| {
                let base = self.rho_at(p);
                let mut worst = 0.0f64;
                for k in 0..dim {
                    let mut q = *p;
                    q[k] += grid_step;
                    if self.in_region(&q, region) {
                        worst = worst.max((self.rho_at(&q) - base).abs() / grid_step);
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max);
        Ok(best)
    }

    fn in_region(&self, p: &Point, region: &Region) -> bool {
        self.domain.contains(p, self.dim)
            && match region {
                Region::Whole => true,
                Region::Ball(b) => b.contains(p),
            }
    }

    /// Grid points of `region ∩ Ω` with spacing `step`; errors when empty.
    pub fn grid(&self, region: &Region, step: f64) -> Result<Vec<Point>> {
        let pts = region_grid(&self.domain, region, self.dim, step);
        if pts.is_empty() {
            return Err(Error::domain("region contains no grid points"));
        }
        Ok(pts)
    }

    /// `q_α(z)` for the landscape at `z`.
    pub fn q_alpha(&self, f: &ColonizationFunction, z: &Point, alpha: f64) -> f64 {
        q_alpha_value(f, self.rho_at(z), self.e.eval(z), alpha)
    }

    /// `min q_1` over the grid of `region` with spacing `step`.
    pub fn eta(&self, f: &ColonizationFunction, region: &Region, step: f64) -> Result<f64> {
        let pts = self.grid(region, step)?;
        Ok(pts
            .par_iter()
            .map(|z| self.q_alpha(f, z, 1.0))
            .reduce(|| f64::INFINITY, f64::min))
    }

    /// `min_z ∫_0^1 c_z(λ) λ^d dλ` over the grid of `region`.
    pub fn c_bar(&self, region: &Region, step: f64) -> Result<f64> {
        if !self.kernel.is_position_dependent() {
            return Ok(self.kernel.moment(&[0.0; 3], self.dim));
        }
        let pts = self.grid(region, step)?;
        Ok(pts
            .par_iter()
            .map(|z| self.kernel.moment(z, self.dim))
            .reduce(|| f64::INFINITY, f64::min))
    }

    /// Upper estimate of the number of balls of `radius` needed to cover `Ω`.
    ///
    /// Each cube of side `2 radius / sqrt(d)` is inscribed in a ball of that
    /// radius, so counting lattice cubes that meet `Ω` gives a valid cover.
    pub fn covering_number(&self, radius: f64) -> usize {
        let dim = self.dim;
        let side = 2.0 * radius / (dim as f64).sqrt();
        let (lo, hi) = self.domain.bounding_box(dim);
        let counts: Vec<usize> =
            (0..dim).map(|k| (((hi[k] - lo[k]) / side).ceil() as usize).max(1)).collect();
        let total: usize = counts.iter().product();
        (0..total)
            .filter(|&idx| {
                let mut c = [0.0; 3];
                let mut rest = idx;
                for k in 0..dim {
                    let i = rest % counts[k];
                    rest /= counts[k];
                    c[k] = lo[k] + (i as f64 + 0.5) * side;
                }
                self.domain.meets_cube(&c, 0.5 * side, dim)
            })
            .count()
    }

    /// `∫_Ω 1(|y - z| <= radius) σ(y) dy`.
    pub fn local_mass(&self, z: &Point, radius: f64) -> f64 {
        let scale = radius.powi(self.dim as i32);
        if let FieldKind::Constant(v) = self.sigma.kind {
            if self.ball_inside(z, radius) {
                return v * unit_ball_volume(self.dim) * scale;
            }
        }
        scale
            * self.rule.integrate(|node| {
                let y = offset(z, &node.offset, radius);
                if self.domain.contains(&y, self.dim) {
                    self.sigma.eval(&y)
                } else {
                    0.0
                }
            })
    }

    /// `min_z ∫_Ω 1(|y - z| <= radius) σ(y) dy` over the grid of `Ω`.
    pub fn min_local_mass(&self, radius: f64, step: f64) -> Result<f64> {
        let pts = self.grid(&Region::Whole, step)?;
        Ok(pts
            .par_iter()
            .map(|z| self.local_mass(z, radius))
            .reduce(|| f64::INFINITY, f64::min))
    }

    /// Exponent of the r-smooth covering bound: the grid value
    /// `n min_z A^{-1} ∫ 1(|y - z| <= r/3) σ` and the analytic lower bound
    /// `c_d σ_min n r^d / A`.
    pub fn r_smooth_exponent(&self, n: usize, r: f64, area: f64, step: f64) -> Result<(f64, f64)> {
        match self.domain.min_ball_radius() {
            None => {
                return Err(Error::precondition(
                    "r-smooth exponent needs a union-of-balls habitat",
                ))
            }
            Some(t) if t < r => {
                return Err(Error::precondition(format!(
                    "habitat ball of radius {t} is smaller than r = {r}"
                )))
            }
            _ => {}
        }
        let nf = n as f64;
        let grid = nf * self.min_local_mass(r / 3.0, step)? / area;
        let analytic = r_smooth_constant(self.dim) * self.sigma.min * nf * r.powi(self.dim as i32) / area;
        Ok((grid, analytic))
    }

    /// Theorem constants for colonization function `f`. `l_rho` overrides both
    /// the declared value and the grid estimate over `region`.
    pub fn constants(
        &self,
        f: &ColonizationFunction,
        region: &Region,
        l_rho: Option<f64>,
    ) -> Result<LandscapeConstants> {
        let d = self.dim;
        let v_d = unit_ball_volume(d);
        let v_dminus1 = unit_ball_volume(d - 1);
        let c_max = self.kernel.c_max;
        let (l_rho, estimated) = match l_rho.or(self.rho_lipschitz) {
            Some(v) => (v, false),
            None => (self.estimate_l_rho(region, self.grid_step.min(self.r / 8.0))?, true),
        };
        let l_f = f.slope_at_zero();
        Ok(LandscapeConstants {
            rho_max: self.a.max * c_max * self.sigma.max * v_d,
            l_rho,
            l_rho_estimated: estimated,
            l_q: (d as f64).sqrt() / self.e.min * (2.0 * l_f * l_rho + self.e.lipschitz),
            c2: 1.0 / (3.0 * c_max * c_max * self.sigma.max * v_d),
            c3: v_d * c_max * (self.a.max * self.sigma.lipschitz + self.sigma.max * self.a.lipschitz),
            v_d,
            v_dminus1,
        })
    }

    /// Scans the grid of `Ω` and checks each field against its bounds and its
    /// Lipschitz constant on axis-neighbour pairs.
    pub fn validate_on_grid(&self, step: f64) -> Result<()> {
        let pts = lattice(&self.domain.bounding_box(self.dim), self.dim, step);
        for (name, field) in [("e", &self.e), ("a", &self.a), ("sigma", &self.sigma)] {
            for p in pts.iter().filter(|p| self.domain.contains(p, self.dim)) {
                let v = field.eval(p);
                if v < field.min - 1e-12 || v > field.max + 1e-12 {
                    return Err(Error::config(format!(
                        "{name}({:?}) = {v} lies outside the bounds [{}, {}]",
                        &p[..self.dim],
                        field.min,
                        field.max
                    )));
                }
                for k in 0..self.dim {
                    let mut q = *p;
                    q[k] += step;
                    if self.domain.contains(&q, self.dim) {
                        let slope = (field.eval(&q) - v).abs() / step;
                        if slope > field.lipschitz * (1.0 + 1e-9) + 1e-12 {
                            return Err(Error::config(format!(
                                "{name} has slope {slope} above its Lipschitz constant {}",
                                field.lipschitz
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn offset(z: &Point, u: &Point, scale: f64) -> Point {
    [z[0] + scale * u[0], z[1] + scale * u[1], z[2] + scale * u[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_square() -> Domain {
        Domain::Box { lo: [0.0; 3], hi: [1.0, 1.0, 0.0] }
    }

    fn constant(r: f64) -> Landscape {
        Landscape::new(
            2,
            unit_square(),
            Field::constant(0.2),
            Field::constant(1.0),
            Field::constant(1.0),
            Kernel::uniform(1.0),
            r,
        )
        .unwrap()
    }

    #[test]
    fn rho_interior_and_edge() {
        let land = constant(0.1);
        assert!((land.rho(&[0.5, 0.5, 0.0]).unwrap() - PI).abs() < 1e-12);
        assert!((land.rho(&[0.0, 0.5, 0.0]).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!(land.rho(&[1.5, 0.5, 0.0]).is_err());
    }

    #[test]
    fn c_bar_values() {
        let land = constant(0.1);
        assert!((land.c_bar(&Region::Whole, 0.05).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let mut lin = land.clone();
        lin.kernel = Kernel::new(KernelProfile::Linear, 1.0, None).unwrap();
        assert!((lin.c_bar(&Region::Whole, 0.05).unwrap() - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn covering_small_cases() {
        let land = constant(0.1);
        assert_eq!(land.covering_number(1.0), 1);
        let ball = Landscape::new(
            2,
            Domain::Balls(vec![Ball::new([0.0; 3], 0.5)]),
            Field::constant(0.2),
            Field::constant(1.0),
            Field::constant(1.0),
            Kernel::uniform(1.0),
            0.1,
        )
        .unwrap();
        assert_eq!(ball.covering_number(1.0), 1);
        assert!((ball.area() - PI * 0.25).abs() < 1e-12);
    }

    #[test]
    fn area_of_affine_density() {
        let bbox = ([0.0; 3], [1.0, 1.0, 0.0]);
        let sigma = Field::new(
            FieldKind::Affine { intercept: 1.0, gradient: [0.1, 0.0, 0.0] },
            &bbox,
            2,
            None,
            None,
        );
        assert_eq!((sigma.min, sigma.max, sigma.lipschitz), (1.0, 1.1, 0.1));
        let land = Landscape::new(
            2,
            unit_square(),
            Field::constant(0.2),
            Field::constant(1.0),
            sigma,
            Kernel::uniform(1.0),
            0.1,
        )
        .unwrap();
        assert!((land.area() - 1.05).abs() < 1e-12);
    }

    #[test]
    fn constant_landscape_has_flat_interior() {
        let land = constant(0.1);
        let inner = Region::Ball(Ball::new([0.5, 0.5, 0.0], 0.2));
        assert!(land.estimate_l_rho(&inner, 0.01).unwrap() < 1e-8);
        assert!(land.estimate_l_rho(&inner, 0.1).is_err());
    }

    #[test]
    fn bump_and_gaussian_fields_respect_declared_constants() {
        let bbox = ([0.0; 3], [1.0, 1.0, 0.0]);
        let bump = Field::new(
            FieldKind::Bump { base: 1.0, amp: 0.5, width: 0.3, center: [0.5, 0.5, 0.0] },
            &bbox,
            2,
            None,
            None,
        );
        let gauss = Field::new(
            FieldKind::Gaussians {
                base: 1.0,
                lo: 0.5,
                hi: 2.0,
                terms: vec![GaussTerm { weight: 0.4, width: 0.2, center: [0.3, 0.6, 0.0] }],
            },
            &bbox,
            2,
            None,
            None,
        );
        let land = Landscape::new(2, unit_square(), bump, gauss, Field::constant(1.0), Kernel::uniform(1.0), 0.1)
            .unwrap();
        land.validate_on_grid(0.005).unwrap();
    }
}
