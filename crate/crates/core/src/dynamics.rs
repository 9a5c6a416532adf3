//! Deterministic dynamics on a patch network: the equilibrium operator `E_n`,
//! its restricted variant, the discrete map, the Levins ODE, and the Jacobian.

use std::io::Write;

use nalgebra::DMatrix;

use crate::colonization::ColonizationFunction;
use crate::error::{Error, Result};
use crate::geometry::Ball;
use crate::patches::Network;
use crate::perron::{spectral_radius, PowerOptions};

/// `E_n(p)_i = f(S_i(p)) / (e_i + f(S_i(p)))`.
pub fn en_apply(net: &Network, f: &ColonizationFunction, p: &[f64]) -> Vec<f64> {
    (0..net.n)
        .map(|i| {
            let g = f.eval(net.pressure(p, i));
            if g == 0.0 {
                0.0
            } else {
                g / (net.extinction[i] + g)
            }
        })
        .collect()
}

/// Membership of each patch in `theta`.
pub fn mask_in_ball(net: &Network, theta: &Ball) -> Vec<bool> {
    net.locations.iter().map(|z| theta.contains(z)).collect()
}

/// `E_{n,Θ,β}(p)_i = f(S^Θ_i(p)) / (β e_i + f(S^Θ_i(p)))`, where only source
/// patches inside `Θ` contribute. `theta = None` keeps every source.
pub fn en_restricted_apply(
    net: &Network,
    f: &ColonizationFunction,
    p: &[f64],
    theta: Option<&Ball>,
    beta: f64,
) -> Vec<f64> {
    let s = match theta {
        Some(b) => net.pressures_masked(p, &mask_in_ball(net, b)),
        None => net.pressures(p),
    };
    s.iter()
        .zip(&net.extinction)
        .map(|(&s, &e)| {
            let g = f.eval(s);
            if g == 0.0 {
                0.0
            } else {
                g / (beta * e + g)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 1_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub p: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm of the last step.
    pub residual: f64,
}

/// Largest fixed point of `E_n`, by iterating from the all-ones vector.
pub fn largest_fixed_point(net: &Network, f: &ColonizationFunction, opts: FixedPointOptions) -> Result<FixedPoint> {
    largest_fixed_point_observed(net, f, opts, |_, _| {})
}

/// As [`largest_fixed_point`], calling `observe(step, iterate)` after each step.
///
/// The iterates decrease componentwise; an increase beyond rounding is reported
/// as a numerical error.
pub fn largest_fixed_point_observed(
    net: &Network,
    f: &ColonizationFunction,
    opts: FixedPointOptions,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<FixedPoint> {
    if !(opts.tol > 0.0) {
        return Err(Error::precondition("fixed-point tolerance must be positive"));
    }
    let mut p = vec![1.0; net.n];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let next = en_apply(net, f, &p);
        residual = 0.0;
        for (i, (new, old)) in next.iter().zip(&p).enumerate() {
            if *new > old + 1e-14 * old.max(1e-300).max(1.0) {
                return Err(Error::numerical(format!(
                    "iterate increased at patch {i} in step {it}: {old} -> {new}"
                )));
            }
            residual = residual.max((old - new).abs());
        }
        p = next;
        observe(it, &p);
        if residual < opts.tol {
            return Ok(FixedPoint { p, iterations: it, residual });
        }
    }
    Err(Error::Convergence { iterations: opts.max_iter, residual })
}

/// One step of the discrete map `p_i + f(S_i)(1 - p_i) - e_i p_i`, clamped to
/// `[0, 1]`; the second value counts clamped components.
pub fn discrete_step(net: &Network, f: &ColonizationFunction, p: &[f64]) -> (Vec<f64>, usize) {
    let mut clamped = 0;
    let next = (0..net.n)
        .map(|i| {
            let v = p[i] + f.eval(net.pressure(p, i)) * (1.0 - p[i]) - net.extinction[i] * p[i];
            if !(0.0..=1.0).contains(&v) {
                clamped += 1;
            }
            v.clamp(0.0, 1.0)
        })
        .collect();
    (next, clamped)
}

/// `F_i(p) = f(S_i(p))(1 - p_i) - e_i p_i`.
pub fn vector_field(net: &Network, f: &ColonizationFunction, p: &[f64], out: &mut [f64]) {
    for i in 0..net.n {
        out[i] = f.eval(net.pressure(p, i)) * (1.0 - p[i]) - net.extinction[i] * p[i];
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    pub min_step: f64,
    /// Keep every accepted step rather than only the endpoints.
    pub record_steps: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { atol: 1e-9, rtol: 1e-9, max_steps: 10_000_000, min_step: 1e-14, record_steps: false }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// Writes `time,p_0,...,p_{n-1}`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n = self.states.first().map_or(0, Vec::len);
        let mut header = vec!["time".to_string()];
        header.extend((0..n).map(|i| format!("p_{i}")));
        out.write_record(&header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut rec = vec![format!("{t:?}")];
            rec.extend(s.iter().map(|v| format!("{v:?}")));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `dp/dt = F(p)` on `[0, t_end]` with adaptive Dormand–Prince 5(4).
pub fn ode_integrate(
    net: &Network,
    f: &ColonizationFunction,
    p0: &[f64],
    t_end: f64,
    opts: OdeOptions,
) -> Result<Trajectory> {
    if p0.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::precondition("initial state must lie in [0, 1]^n"));
    }
    let n = net.n;
    let mut traj = Trajectory { times: vec![0.0], states: vec![p0.to_vec()], ..Default::default() };
    if t_end <= 0.0 {
        return Ok(traj);
    }
    let mut y = p0.to_vec();
    let mut t = 0.0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    vector_field(net, f, &y, &mut k[0]);
    let scale0 = k[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut h = if scale0 > 0.0 { (0.01 / scale0).min(t_end) } else { t_end };
    let mut steps = 0;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::numerical(format!("ODE step budget of {} exhausted at t = {t}", opts.max_steps)));
        }
        h = h.min(t_end - t);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                stage[i] = acc;
            }
            vector_field(net, f, &stage, &mut k[s]);
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B5[s] * k[s][i];
                lo += B4[s] * k[s][i];
            }
            y5[i] = y[i] + h * hi;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (hi - lo)).abs() / sc);
        }
        steps += 1;
        if err <= 1.0 {
            t += h;
            for v in y5.iter_mut() {
                if *v < 0.0 && *v > -opts.atol {
                    *v = 0.0;
                } else if *v > 1.0 && *v < 1.0 + opts.atol {
                    *v = 1.0;
                }
            }
            std::mem::swap(&mut y, &mut y5);
            // First-same-as-last: the last stage is F at the new point.
            k.swap(0, 6);
            traj.steps += 1;
            if opts.record_steps || t >= t_end {
                traj.times.push(t);
                traj.states.push(y.clone());
            }
        } else {
            traj.rejected += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < opts.min_step && t < t_end {
            return Err(Error::numerical(format!("ODE step size underflow at t = {t}")));
        }
    }
    Ok(traj)
}

/// Dense Jacobian of the Levins vector field at `p`.
pub fn jacobian(net: &Network, f: &ColonizationFunction, p: &[f64]) -> DMatrix<f64> {
    let n = net.n;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let s = net.pressure(p, i);
        m[(i, i)] = -(f.eval(s) + net.extinction[i]);
        let slope = f.derivative(s) * (1.0 - p[i]);
        for (j, w) in net.row(i) {
            m[(i, j)] += slope * w;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sandwich {
    /// Leading eigenvalue of the Jacobian at the upper state.
    pub lambda_lo: f64,
    /// Leading eigenvalue of the Jacobian at the lower state.
    pub lambda_hi: f64,
    pub shift: f64,
    /// Both shifted Jacobians are irreducible with positive diagonal.
    pub certified: bool,
}

/// Leading eigenvalues of `J(p_upper)` and `J(p_lower)`, computed as Perron
/// roots of `C_5 I + J` with `C_5 > max_i (f(S_i(p_upper)) + e_i)`.
pub fn response_time_sandwich(
    net: &Network,
    f: &ColonizationFunction,
    p_lower: &[f64],
    p_upper: &[f64],
    opts: PowerOptions,
) -> Result<Sandwich> {
    if p_lower.iter().zip(p_upper).any(|(l, u)| l > u) {
        return Err(Error::precondition("p_lower must lie below p_upper componentwise"));
    }
    let s_up = net.pressures(p_upper);
    let shift = 1.0
        + s_up
            .iter()
            .zip(&net.extinction)
            .map(|(s, e)| f.eval(*s) + e)
            .fold(0.0, f64::max);
    let connected = crate::patches::primitivity(net).connected;
    let lead = |p: &[f64]| -> Result<(f64, bool)> {
        let s = net.pressures(p);
        let diag: Vec<f64> = (0..net.n).map(|i| shift - f.eval(s[i]) - net.extinction[i]).collect();
        let slope: Vec<f64> = (0..net.n).map(|i| f.derivative(s[i]) * (1.0 - p[i])).collect();
        let scale = (0..net.n)
            .map(|i| diag[i] + slope[i] * net.row(i).map(|(_, w)| w).sum::<f64>())
            .fold(0.0, f64::max);
        let root = spectral_radius(net.n, scale, opts, |x, y| {
            for i in 0..net.n {
                y[i] = diag[i] * x[i] + slope[i] * net.row(i).map(|(j, w)| w * x[j]).sum::<f64>();
            }
        })?;
        let irreducible = connected && slope.iter().all(|v| *v > 0.0);
        Ok((root.value - shift, irreducible))
    };
    let (lambda_lo, cert_up) = lead(p_upper)?;
    let (lambda_hi, cert_low) = lead(p_lower)?;
    Ok(Sandwich { lambda_lo, lambda_hi, shift, certified: cert_up && cert_low })
}

/// Writes `id,x1..xd,p_star`.
pub fn write_equilibrium_csv<W: Write>(net: &Network, p: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string()];
    header.extend((1..=net.dim).map(|k| format!("x{k}")));
    header.push("p_star".into());
    out.write_record(&header)?;
    for (i, (z, v)) in net.locations.iter().zip(p).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(z[..net.dim].iter().map(|c| format!("{c:?}")));
        rec.push(format!("{v:?}"));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::landscape::{Field, Kernel, Landscape};
    use crate::patches::PatchSet;

    fn colocated(n: usize, e: f64) -> Network {
        let land = Landscape::new(
            1,
            Domain::Box { lo: [0.0; 3], hi: [1.0, 0.0, 0.0] },
            Field::constant(e),
            Field::constant(1.0),
            Field::constant(1.0),
            Kernel::uniform(1.0),
            0.5,
        )
        .unwrap();
        Network::build(&land, &PatchSet::new(1, vec![[0.5, 0.0, 0.0]; n]).unwrap())
    }

    #[test]
    fn symmetric_reduction() {
        // ρ̂ = A r^{-d} c(0) a = 2.
        let net = colocated(4, 0.5);
        let f = ColonizationFunction::linear();
        let out = en_apply(&net, &f, &[0.3; 4]);
        for v in out {
            assert!((v - 0.6 / (0.5 + 0.6)).abs() < 1e-15);
        }
        let fp = largest_fixed_point(&net, &f, FixedPointOptions::default()).unwrap();
        for v in &fp.p {
            assert!((v - 0.75).abs() < 1e-9);
        }
    }

    #[test]
    fn extinction_is_fixed() {
        let net = colocated(3, 0.5);
        let f = ColonizationFunction::saturating();
        assert_eq!(en_apply(&net, &f, &[0.0; 3]), vec![0.0; 3]);
        assert_eq!(discrete_step(&net, &f, &[0.0; 3]).0, vec![0.0; 3]);
        let traj = ode_integrate(&net, &f, &[0.0; 3], 10.0, OdeOptions::default()).unwrap();
        assert_eq!(traj.last(), &[0.0; 3]);
    }

    #[test]
    fn ode_reaches_equilibrium() {
        let net = colocated(3, 0.5);
        let f = ColonizationFunction::linear();
        let traj = ode_integrate(&net, &f, &[1.0; 3], 100.0, OdeOptions::default()).unwrap();
        for v in traj.last() {
            assert!((v - 0.75).abs() < 1e-6);
        }
    }

    #[test]
    fn full_occupancy_jacobian_is_diagonal() {
        let net = colocated(3, 0.5);
        let j = jacobian(&net, &ColonizationFunction::linear(), &[1.0; 3]);
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert_eq!(j[(a, b)], 0.0);
                }
            }
        }
    }
}
