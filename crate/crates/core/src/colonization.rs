//! Colonization functions `f` with their slope at zero and curvature constant.

use crate::error::{Error, Result};

/// Built-in concave colonization families, each evaluated at `scale * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColonizationKind {
    /// `f(x) = x`
    Linear,
    /// `f(x) = x / (1 + x)`
    Saturating,
    /// `f(x) = 1 - exp(-x)`
    Exponential,
}

impl ColonizationKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "saturating" => Ok(Self::Saturating),
            "exponential" => Ok(Self::Exponential),
            other => Err(Error::config(format!(
                "unknown f.kind `{other}` (valid: linear, saturating, exponential)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Saturating => "saturating",
            Self::Exponential => "exponential",
        }
    }
}

/// `f(x) = g(scale * x)` for a base family `g` with `g'(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColonizationFunction {
    pub kind: ColonizationKind,
    pub scale: f64,
}

impl ColonizationFunction {
    pub fn new(kind: ColonizationKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::config("f.scale must be positive and finite"));
        }
        Ok(Self { kind, scale })
    }

    pub fn linear() -> Self {
        Self { kind: ColonizationKind::Linear, scale: 1.0 }
    }

    pub fn saturating() -> Self {
        Self { kind: ColonizationKind::Saturating, scale: 1.0 }
    }

    pub fn exponential() -> Self {
        Self { kind: ColonizationKind::Exponential, scale: 1.0 }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let s = self.scale * x;
        match self.kind {
            ColonizationKind::Linear => s,
            ColonizationKind::Saturating => s / (1.0 + s),
            ColonizationKind::Exponential => -(-s).exp_m1(),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        let s = self.scale * x;
        self.scale
            * match self.kind {
                ColonizationKind::Linear => 1.0,
                ColonizationKind::Saturating => 1.0 / ((1.0 + s) * (1.0 + s)),
                ColonizationKind::Exponential => (-s).exp(),
            }
    }

    /// `L_f = f'(0)`, which is also the Lipschitz constant of a concave `f`.
    pub fn slope_at_zero(&self) -> f64 {
        self.scale
    }

    /// `C_1` with `f(x) >= L_f x - C_1 x^2` for all `x >= 0`.
    ///
    /// `x - x^2/(1+x)` gives 1 for the saturating family and the Taylor
    /// remainder gives 1/2 for the exponential one; the linear family needs none.
    pub fn curvature(&self) -> f64 {
        let base = match self.kind {
            ColonizationKind::Linear => 0.0,
            ColonizationKind::Saturating => 1.0,
            ColonizationKind::Exponential => 0.5,
        };
        base * self.scale * self.scale
    }

    pub fn is_concave(&self) -> bool {
        true
    }

    /// Checks `f(0) = 0`, monotonicity, midpoint concavity and the curvature
    /// inequality on a grid over `[0, x_max]`.
    pub fn verify_on_grid(&self, x_max: f64, points: usize) -> Result<()> {
        if self.eval(0.0) != 0.0 {
            return Err(Error::config("f(0) must be 0"));
        }
        if !(self.slope_at_zero() > 0.0) {
            return Err(Error::config("f'(0) must be positive"));
        }
        let lf = self.slope_at_zero();
        let c1 = self.curvature();
        let h = x_max / points as f64;
        for k in 0..points {
            let a = k as f64 * h;
            let b = a + h;
            let (fa, fb) = (self.eval(a), self.eval(b));
            if fb < fa {
                return Err(Error::config(format!("f decreases on [{a}, {b}]")));
            }
            let mid = self.eval(0.5 * (a + b));
            if mid < 0.5 * (fa + fb) - 1e-12 {
                return Err(Error::config(format!("f not concave near {a}")));
            }
            if fb < lf * b - c1 * b * b - 1e-12 {
                return Err(Error::config(format!("curvature bound fails at {b}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_satisfy_assumptions() {
        for kind in [
            ColonizationKind::Linear,
            ColonizationKind::Saturating,
            ColonizationKind::Exponential,
        ] {
            for scale in [0.5, 1.0, 3.0] {
                let f = ColonizationFunction::new(kind, scale).unwrap();
                f.verify_on_grid(20.0, 4000).unwrap();
                assert_eq!(f.eval(0.0), 0.0);
                assert_eq!(f.slope_at_zero(), scale);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for f in [
            ColonizationFunction::saturating(),
            ColonizationFunction::exponential(),
            ColonizationFunction::new(ColonizationKind::Saturating, 2.5).unwrap(),
        ] {
            for x in [0.0, 0.3, 1.7, 5.0] {
                let h = 1e-6;
                let fd = (f.eval(x + h) - f.eval((x - h).max(0.0))) / (x + h - (x - h).max(0.0));
                let tol = if x == 0.0 { 1e-4 } else { 1e-6 };
                assert!((fd - f.derivative(x)).abs() < tol, "{f:?} at {x}");
            }
        }
    }

    #[test]
    fn saturating_curvature_is_one() {
        let f = ColonizationFunction::saturating();
        assert_eq!(f.curvature(), 1.0);
        // x/(1+x) - (x - x^2) = x^3/(1+x) >= 0
        for x in [0.1, 1.0, 10.0] {
            assert!(f.eval(x) >= x - x * x);
        }
    }

    #[test]
    fn rejects_bad_scale_and_kind() {
        assert!(ColonizationFunction::new(ColonizationKind::Linear, 0.0).is_err());
        assert!(ColonizationKind::parse("hill").is_err());
    }
}
