//! Perron root of nonnegative operators by shifted power iteration.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PerronRoot {
    pub value: f64,
    /// Perron vector normalised to unit sup-norm.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// Diagonal shift used by the converged attempt.
    pub shift: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 1_000_000 }
    }
}

/// Spectral radius of a nonnegative linear operator given as `apply(x, y)`
/// writing `y = M x`.
///
/// The first attempt iterates `M` itself from the all-ones vector. Periodic
/// operators make that oscillate, so up to two restarts iterate `M + s I`
/// with `s` a fraction of `scale`, an upper bound for the spectral radius
/// such as the largest row sum.
///
/// An attempt stops when the iterate settles, or earlier once the
/// Collatz–Wielandt bracket `min_i (Mx)_i / x_i <= ρ <= max_i (Mx)_i / x_i`
/// of a positive iterate is narrower than `tol` relative to its upper end.
pub fn spectral_radius<F>(n: usize, scale: f64, opts: PowerOptions, apply: F) -> Result<PerronRoot>
where
    F: Fn(&[f64], &mut [f64]),
{
    if n == 0 {
        return Err(Error::numerical("empty operator"));
    }
    let budget = (opts.max_iter / 3).max(1);
    let mut last_residual = f64::INFINITY;
    for shift in [0.0, 0.5 * scale.max(1e-300), scale.max(1e-300)] {
        match iterate(n, shift, opts.tol, budget, &apply) {
            Ok(root) => return Ok(root),
            Err(residual) => last_residual = residual,
        }
    }
    Err(Error::Convergence { iterations: opts.max_iter, residual: last_residual })
}

fn iterate<F>(n: usize, shift: f64, tol: f64, max_iter: usize, apply: &F) -> std::result::Result<PerronRoot, f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut mu_prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        apply(&x, &mut y);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += shift * xi;
        }
        let mu = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if mu == 0.0 {
            return Ok(PerronRoot { value: 0.0, vector: x, iterations: it, shift });
        }
        if let Some((lo, hi)) = collatz_wielandt(&x, &y) {
            if hi - lo <= tol * hi.max(1.0) {
                let vector = y.iter().map(|v| v / mu).collect();
                return Ok(PerronRoot { value: 0.5 * (lo + hi) - shift, vector, iterations: it, shift });
            }
        }
        let mut change = 0.0f64;
        for (xi, yi) in x.iter_mut().zip(&y) {
            let v = yi / mu;
            change = change.max((v - *xi).abs());
            *xi = v;
        }
        let dmu = (mu - mu_prev).abs();
        residual = change.max(dmu / mu);
        if change < tol && dmu <= tol * mu.max(1.0) {
            return Ok(PerronRoot { value: mu - shift, vector: x, iterations: it, shift });
        }
        mu_prev = mu;
    }
    Err(residual)
}

/// Bracket of the spectral radius from a strictly positive `x` and `y = Mx`.
fn collatz_wielandt(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (xi, yi) in x.iter().zip(y) {
        if !(*xi > 0.0) {
            return None;
        }
        let q = yi / xi;
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(m: Vec<Vec<f64>>) -> impl Fn(&[f64], &mut [f64]) {
        move |x, y| {
            for (i, row) in m.iter().enumerate() {
                y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        }
    }

    #[test]
    fn two_by_two_cycles_need_the_shift() {
        let r = spectral_radius(2, 2.0, PowerOptions::default(), dense(vec![vec![0.0, 2.0], vec![2.0, 0.0]]))
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
        let r = spectral_radius(2, 4.0, PowerOptions::default(), dense(vec![vec![0.0, 1.0], vec![4.0, 0.0]]))
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
        assert!(r.shift > 0.0);
    }

    #[test]
    fn zero_operator() {
        let r = spectral_radius(3, 0.0, PowerOptions::default(), |_, y| y.fill(0.0)).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
