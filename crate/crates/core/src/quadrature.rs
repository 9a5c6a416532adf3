//! Gauss–Legendre rules and a polar product rule on the unit ball.

use std::f64::consts::PI;

use crate::geometry::Point;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x = 0.0;
            dp = 1.0;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = if n == 1 { 2.0 } else { 2.0 / ((1.0 - x * x) * dp * dp) };
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

/// One node of a ball rule: offset inside the unit ball, its radius and weight.
#[derive(Debug, Clone, Copy)]
pub struct BallNode {
    pub offset: Point,
    pub radius: f64,
    pub weight: f64,
}

/// Polar product rule on the unit ball of dimension 1–3.
///
/// Radial Gauss–Legendre on `(0, 1)` with the `u^{d-1}` Jacobian folded into the
/// weights; the angular part is the periodic midpoint rule in azimuth and
/// Gauss–Legendre in the polar cosine for `d = 3`. For `d = 2` with an angular
/// count divisible by four, a half-plane through the centre captures exactly
/// half of the angular nodes.
#[derive(Debug, Clone)]
pub struct BallRule {
    pub dim: usize,
    pub nodes: Vec<BallNode>,
}

impl BallRule {
    /// `resolution` radial nodes and `resolution` azimuthal nodes (rounded up to a
    /// multiple of four); `d = 3` uses `resolution / 2` polar nodes.
    pub fn new(dim: usize, resolution: usize) -> Self {
        let nr = resolution.max(2);
        let (ru, rw) = gauss_legendre_on(nr, 0.0, 1.0);
        let mut nodes = Vec::new();
        match dim {
            1 => {
                for (u, w) in ru.iter().zip(&rw) {
                    for s in [-1.0, 1.0] {
                        nodes.push(BallNode { offset: [s * u, 0.0, 0.0], radius: *u, weight: *w });
                    }
                }
            }
            2 => {
                let na = resolution.div_ceil(4).max(1) * 4;
                let dphi = 2.0 * PI / na as f64;
                for (u, w) in ru.iter().zip(&rw) {
                    for k in 0..na {
                        let phi = (k as f64 + 0.5) * dphi;
                        nodes.push(BallNode {
                            offset: [u * phi.cos(), u * phi.sin(), 0.0],
                            radius: *u,
                            weight: w * u * dphi,
                        });
                    }
                }
            }
            3 => {
                let na = resolution.div_ceil(4).max(1) * 4;
                let nt = (resolution / 2).max(2);
                let (ct, cw) = gauss_legendre(nt);
                let dphi = 2.0 * PI / na as f64;
                for (u, w) in ru.iter().zip(&rw) {
                    for (c, wc) in ct.iter().zip(&cw) {
                        let s = (1.0 - c * c).sqrt();
                        for k in 0..na {
                            let phi = (k as f64 + 0.5) * dphi;
                            nodes.push(BallNode {
                                offset: [u * s * phi.cos(), u * s * phi.sin(), u * c],
                                radius: *u,
                                weight: w * u * u * wc * dphi,
                            });
                        }
                    }
                }
            }
            _ => panic!("unsupported dimension {dim}"),
        }
        Self { dim, nodes }
    }

    /// `∫_{B(0,1)} g(u) du`.
    pub fn integrate(&self, mut g: impl FnMut(&BallNode) -> f64) -> f64 {
        self.nodes.iter().map(|n| n.weight * g(n)).sum()
    }
}
