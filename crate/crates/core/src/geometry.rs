//! Positions, habitat domains and lattice grids in dimensions 1 to 3.
//!
//! Points are stored as `[f64; 3]`; coordinates beyond the working dimension are
//! kept at zero so Euclidean distances need no dimension argument.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = [f64; 3];

pub const MAX_DIM: usize = 3;

pub fn distance(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub fn distance_sq(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Builds a point from the first `dim` entries of `coords`.
pub fn point_from(coords: &[f64]) -> Point {
    let mut p = [0.0; 3];
    for (k, c) in coords.iter().take(MAX_DIM).enumerate() {
        p[k] = *c;
    }
    p
}

pub fn check_dimension(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::config(format!("dimension must be 1, 2 or 3 (got {dim})")))
    }
}

/// Volume of the unit ball in `dim` dimensions; `v_0 = 1`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Volume of the intersection of two balls with radii `big` and `small` whose
/// centres are `sep` apart.
pub fn lens_volume(dim: usize, big: f64, small: f64, sep: f64) -> f64 {
    let (r1, r2, d) = (big, small, sep);
    if d >= r1 + r2 {
        return 0.0;
    }
    let inner = r1.min(r2);
    if d <= (r1 - r2).abs() {
        return unit_ball_volume(dim) * inner.powi(dim as i32);
    }
    match dim {
        1 => r1 + r2 - d,
        2 => {
            let a1 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
            let a2 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
            let k = (-d + r2 + r1) * (d + r2 - r1) * (d - r2 + r1) * (d + r2 + r1);
            r2 * r2 * a1 + r1 * r1 * a2 - 0.5 * k.max(0.0).sqrt()
        }
        3 => {
            PI * (r1 + r2 - d).powi(2)
                * (d * d + 2.0 * d * r2 - 3.0 * r2 * r2 + 2.0 * d * r1 + 6.0 * r2 * r1
                    - 3.0 * r1 * r1)
                / (12.0 * d)
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Geometric constant of the r-smooth covering lower bound.
///
/// Every point of an r-smooth region lies in a ball of radius at least `r`
/// contained in the region. The intersection of `B_z(r/3)` with such a ball is
/// smallest when the ball has radius exactly `r` and `z` sits on its boundary,
/// so `c_d = |B_z(1/3) ∩ B_x(1)| / 1` with `|z - x| = 1`.
pub fn r_smooth_constant(dim: usize) -> f64 {
    lens_volume(dim, 1.0, 1.0 / 3.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, p: &Point) -> bool {
        distance_sq(p, &self.center) <= self.radius * self.radius
    }

    /// Signed distance from `p` to the sphere; positive inside.
    pub fn depth(&self, p: &Point) -> f64 {
        self.radius - distance(p, &self.center)
    }
}

/// Habitat geometry: an axis-aligned box or a finite union of closed balls.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Box { lo: Point, hi: Point },
    Balls(Vec<Ball>),
}

impl Domain {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Domain::Box { lo, hi } => {
                for k in 0..dim {
                    if !(hi[k] > lo[k]) {
                        return Err(Error::domain(format!(
                            "box has zero or negative extent along axis {}",
                            k + 1
                        )));
                    }
                }
            }
            Domain::Balls(balls) => {
                if balls.is_empty() {
                    return Err(Error::domain("ball union has no balls"));
                }
                if balls.iter().any(|b| !(b.radius > 0.0)) {
                    return Err(Error::domain("ball radius must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point, dim: usize) -> bool {
        match self {
            Domain::Box { lo, hi } => (0..dim).all(|k| p[k] >= lo[k] && p[k] <= hi[k]),
            Domain::Balls(balls) => balls.iter().any(|b| b.contains(p)),
        }
    }

    /// Number of balls containing `p` (1 for boxes when inside).
    pub fn multiplicity(&self, p: &Point, dim: usize) -> usize {
        match self {
            Domain::Box { .. } => usize::from(self.contains(p, dim)),
            Domain::Balls(balls) => balls.iter().filter(|b| b.contains(p)).count(),
        }
    }

    pub fn bounding_box(&self, dim: usize) -> (Point, Point) {
        match self {
            Domain::Box { lo, hi } => (*lo, *hi),
            Domain::Balls(balls) => {
                let mut lo = [0.0; 3];
                let mut hi = [0.0; 3];
                for k in 0..dim {
                    lo[k] = balls
                        .iter()
                        .map(|b| b.center[k] - b.radius)
                        .fold(f64::INFINITY, f64::min);
                    hi[k] = balls
                        .iter()
                        .map(|b| b.center[k] + b.radius)
                        .fold(f64::NEG_INFINITY, f64::max);
                }
                (lo, hi)
            }
        }
    }

    /// Whether the closed ball lies inside the domain.
    pub fn contains_ball(&self, ball: &Ball, dim: usize) -> bool {
        match self {
            Domain::Box { lo, hi } => (0..dim).all(|k| {
                ball.center[k] - ball.radius >= lo[k] - 1e-12
                    && ball.center[k] + ball.radius <= hi[k] + 1e-12
            }),
            Domain::Balls(balls) => {
                if balls
                    .iter()
                    .any(|b| distance(&b.center, &ball.center) + ball.radius <= b.radius + 1e-12)
                {
                    return true;
                }
                // Fall back to a sampled check of the sphere and interior lattice.
                let step = ball.radius / 16.0;
                lattice(&Region::Ball(ball.clone()).bounding_box(dim), dim, step)
                    .into_iter()
                    .filter(|p| ball.contains(p))
                    .all(|p| self.contains(&p, dim))
            }
        }
    }

    /// Whether the axis-aligned cube `[c - h, c + h]^d` meets the domain.
    pub fn meets_cube(&self, center: &Point, half: f64, dim: usize) -> bool {
        match self {
            Domain::Box { lo, hi } => {
                (0..dim).all(|k| center[k] + half >= lo[k] && center[k] - half <= hi[k])
            }
            Domain::Balls(balls) => balls.iter().any(|b| {
                let mut d2 = 0.0;
                for k in 0..dim {
                    let gap = (b.center[k] - center[k]).abs() - half;
                    if gap > 0.0 {
                        d2 += gap * gap;
                    }
                }
                d2 <= b.radius * b.radius
            }),
        }
    }

    pub fn min_ball_radius(&self) -> Option<f64> {
        match self {
            Domain::Box { .. } => None,
            Domain::Balls(balls) => Some(balls.iter().map(|b| b.radius).fold(f64::INFINITY, f64::min)),
        }
    }
}

/// A region of interest: the whole domain or a ball inside it.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Whole,
    Ball(Ball),
}

impl Region {
    pub fn bounding_box(&self, dim: usize) -> (Point, Point) {
        match self {
            Region::Whole => panic!("whole-domain region has no intrinsic bounding box"),
            Region::Ball(b) => {
                let mut lo = [0.0; 3];
                let mut hi = [0.0; 3];
                for k in 0..dim {
                    lo[k] = b.center[k] - b.radius;
                    hi[k] = b.center[k] + b.radius;
                }
                (lo, hi)
            }
        }
    }
}

/// Lattice points with spacing at most `step` covering the box, endpoints included.
pub fn lattice(bbox: &(Point, Point), dim: usize, step: f64) -> Vec<Point> {
    let (lo, hi) = bbox;
    let counts: Vec<usize> = (0..dim)
        .map(|k| (((hi[k] - lo[k]) / step).ceil() as usize).max(1) + 1)
        .collect();
    let mut out = Vec::with_capacity(counts.iter().product());
    let coord = |k: usize, i: usize| {
        if counts[k] == 1 {
            lo[k]
        } else {
            lo[k] + (hi[k] - lo[k]) * i as f64 / (counts[k] - 1) as f64
        }
    };
    let n1 = counts[0];
    let n2 = if dim > 1 { counts[1] } else { 1 };
    let n3 = if dim > 2 { counts[2] } else { 1 };
    for i in 0..n1 {
        for j in 0..n2 {
            for l in 0..n3 {
                let mut p = [0.0; 3];
                p[0] = coord(0, i);
                if dim > 1 {
                    p[1] = coord(1, j);
                }
                if dim > 2 {
                    p[2] = coord(2, l);
                }
                out.push(p);
            }
        }
    }
    out
}

/// Grid points of `region ∩ domain` at the given spacing.
pub fn region_grid(domain: &Domain, region: &Region, dim: usize, step: f64) -> Vec<Point> {
    let bbox = match region {
        Region::Whole => domain.bounding_box(dim),
        Region::Ball(_) => region.bounding_box(dim),
    };
    lattice(&bbox, dim, step)
        .into_iter()
        .filter(|p| domain.contains(p, dim))
        .filter(|p| match region {
            Region::Whole => true,
            Region::Ball(b) => b.contains(p),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(3) - 4.18879020478639).abs() < 1e-12);
    }

    #[test]
    fn lens_limits() {
        // Half-space limit: a tiny ball on the boundary of a huge one is half covered.
        let v = lens_volume(2, 1e3, 1.0, 1e3);
        assert!((v - PI / 2.0).abs() < 2e-3, "{v}");
        let v3 = lens_volume(3, 1e3, 1.0, 1e3);
        assert!((v3 - 2.0 * PI / 3.0).abs() < 2e-3, "{v3}");
        assert_eq!(lens_volume(2, 1.0, 0.5, 3.0), 0.0);
        assert!((lens_volume(2, 1.0, 0.25, 0.1) - PI / 16.0).abs() < 1e-15);
    }

    #[test]
    fn r_smooth_constant_is_below_half_ball() {
        assert!((r_smooth_constant(1) - 1.0 / 3.0).abs() < 1e-15);
        for d in 2..=3 {
            let half = 0.5 * unit_ball_volume(d) * (1.0f64 / 3.0).powi(d as i32);
            let c = r_smooth_constant(d);
            assert!(c > 0.0 && c < half, "d={d} c={c} half={half}");
        }
    }

    #[test]
    fn lens_matches_monte_carlo_grid() {
        // Brute-force count on a fine lattice.
        let (r1, r2, d) = (1.0, 1.0 / 3.0, 1.0);
        let h = 0.002;
        let mut count = 0usize;
        let mut x = d - r2;
        while x <= d + r2 {
            let mut y = -r2;
            while y <= r2 {
                let p = [x, y, 0.0];
                if distance(&p, &[0.0; 3]) <= r1 && distance(&p, &[d, 0.0, 0.0]) <= r2 {
                    count += 1;
                }
                y += h;
            }
            x += h;
        }
        let approx = count as f64 * h * h;
        assert!((approx - lens_volume(2, r1, r2, d)).abs() < 2e-3);
    }

    #[test]
    fn domain_membership() {
        let dom = Domain::Box { lo: [0.0; 3], hi: [1.0, 2.0, 0.0] };
        assert!(dom.contains(&[0.5, 1.5, 0.0], 2));
        assert!(!dom.contains(&[0.5, 2.5, 0.0], 2));
        let balls = Domain::Balls(vec![
            Ball::new([0.0; 3], 1.0),
            Ball::new([1.5, 0.0, 0.0], 1.0),
        ]);
        assert_eq!(balls.multiplicity(&[0.75, 0.0, 0.0], 2), 2);
        assert!(balls.contains_ball(&Ball::new([0.2, 0.0, 0.0], 0.5), 2));
        assert!(!balls.contains_ball(&Ball::new([0.0, 0.0, 0.0], 1.2), 2));
    }

    #[test]
    fn lattice_counts() {
        let pts = lattice(&([0.0; 3], [1.0, 1.0, 0.0]), 2, 0.25);
        assert_eq!(pts.len(), 25);
    }
}
