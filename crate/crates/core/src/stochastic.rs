//! Exact simulation of the incidence function chain and its continuous-time
//! analogue.

use std::io::Write;

use rand::Rng;

use crate::colonization::ColonizationFunction;
use crate::error::{Error, Result};
use crate::patches::Network;

fn occupancy_as_f64(state: &[bool]) -> Vec<f64> {
    state.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

/// One step of the discrete-time chain: an occupied patch survives with
/// probability `1 - e_i`, an empty one is colonised with probability `f(S_i(X))`.
pub fn discrete_chain_step<R: Rng>(
    net: &Network,
    f: &ColonizationFunction,
    state: &[bool],
    rng: &mut R,
) -> Result<Vec<bool>> {
    let x = occupancy_as_f64(state);
    let mut next = Vec::with_capacity(net.n);
    for i in 0..net.n {
        let col = f.eval(net.pressure(&x, i));
        if col > 1.0 {
            return Err(Error::ModelInvalid(format!(
                "colonisation probability f(S_{i}) = {col} exceeds 1 at patch {i}"
            )));
        }
        if net.extinction[i] > 1.0 {
            return Err(Error::ModelInvalid(format!(
                "extinction probability e = {} exceeds 1 at patch {i}",
                net.extinction[i]
            )));
        }
        let u: f64 = rng.random();
        next.push(if state[i] { u >= net.extinction[i] } else { u < col });
    }
    Ok(next)
}

/// Binary indexed tree over nonnegative rates.
#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    fn new(values: Vec<f64>) -> Self {
        let mut f = Self { tree: vec![0.0; values.len() + 1], values };
        f.rebuild();
        f
    }

    fn rebuild(&mut self) {
        let n = self.values.len();
        self.tree.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let mut k = i + 1;
            self.tree[k] += self.values[i];
            let parent = k + (k & k.wrapping_neg());
            if parent <= n {
                let v = self.tree[k];
                k = parent;
                self.tree[k] += v;
            }
        }
    }

    fn set(&mut self, i: usize, value: f64) {
        let delta = value - self.values[i];
        self.values[i] = value;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut k = self.values.len();
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Smallest index whose prefix sum exceeds `u`.
    fn search(&self, mut u: f64) -> usize {
        let n = self.values.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                pos = next;
                u -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

/// Event record of a continuous-time run.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub patch: usize,
    pub occupied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtmcTrajectory {
    pub initial: Vec<bool>,
    pub events: Vec<Event>,
    pub t_end: f64,
    /// Time at which every patch became empty, if it happened.
    pub extinction_time: Option<f64>,
}

impl CtmcTrajectory {
    /// Writes `time,patch_id,new_state`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["time", "patch_id", "new_state"])?;
        for ev in &self.events {
            out.write_record([format!("{:?}", ev.time), ev.patch.to_string(), u8::from(ev.occupied).to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Calls `visit(t0, t1, state)` for each interval of constant state in
    /// `[0, t_end]`.
    pub fn for_each_interval(&self, mut visit: impl FnMut(f64, f64, &[bool])) {
        let mut state = self.initial.clone();
        let mut t = 0.0;
        for ev in &self.events {
            visit(t, ev.time, &state);
            state[ev.patch] = ev.occupied;
            t = ev.time;
        }
        visit(t, self.t_end, &state);
    }
}

/// Gillespie simulation on `[0, t_end]`: empty patch `i` is colonised at rate
/// `f(S_i(X))`, occupied patch `i` goes extinct at rate `e_i`.
pub fn ctmc_simulate<R: Rng>(
    net: &Network,
    f: &ColonizationFunction,
    state0: &[bool],
    t_end: f64,
    rng: &mut R,
) -> Result<CtmcTrajectory> {
    if !(t_end > 0.0) {
        return Err(Error::precondition("t_end must be positive"));
    }
    let n = net.n;
    let mut state = state0.to_vec();
    let x = occupancy_as_f64(&state);
    let mut pressure = net.pressures(&x);
    let mut occupied_sources: Vec<usize> =
        (0..n).map(|i| net.row(i).filter(|(j, _)| state[*j]).count()).collect();
    let rate = |i: usize, st: &[bool], s: f64, cnt: usize| -> f64 {
        if st[i] {
            net.extinction[i]
        } else if cnt == 0 {
            0.0
        } else {
            f.eval(s.max(0.0))
        }
    };
    let mut tree = Fenwick::new((0..n).map(|i| rate(i, &state, pressure[i], occupied_sources[i])).collect());
    let mut occupied = state.iter().filter(|&&b| b).count();
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut extinction_time = if occupied == 0 { Some(0.0) } else { None };
    let mut since_rebuild = 0usize;
    while occupied > 0 {
        let mut total = tree.total();
        if !(total > 0.0) {
            break;
        }
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / total;
        if t > t_end {
            break;
        }
        let mut pick: f64 = rng.random::<f64>() * total;
        let mut i = tree.search(pick);
        if tree.values[i] == 0.0 {
            tree.rebuild();
            total = tree.total();
            pick = pick.min(total * (1.0 - f64::EPSILON));
            i = tree.search(pick);
        }
        let now = !state[i];
        state[i] = now;
        if now {
            occupied += 1;
        } else {
            occupied -= 1;
        }
        let sign = if now { 1.0 } else { -1.0 };
        for (k, w) in net.column(i) {
            pressure[k] += sign * w;
            if now {
                occupied_sources[k] += 1;
            } else {
                occupied_sources[k] -= 1;
            }
            if occupied_sources[k] == 0 {
                pressure[k] = 0.0;
            }
            tree.set(k, rate(k, &state, pressure[k], occupied_sources[k]));
        }
        tree.set(i, rate(i, &state, pressure[i], occupied_sources[i]));
        events.push(Event { time: t, patch: i, occupied: now });
        if occupied == 0 {
            extinction_time = Some(t);
        }
        since_rebuild += 1;
        if since_rebuild >= n.max(1024) {
            tree.rebuild();
            since_rebuild = 0;
        }
    }
    Ok(CtmcTrajectory { initial: state0.to_vec(), events, t_end, extinction_time })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyStatistics {
    /// Time-weighted occupancy of each patch over the averaging window.
    pub means: Vec<f64>,
    pub window: (f64, f64),
    pub extinct: bool,
    /// The chain was empty before the burn-in ended, so the window is empty.
    pub extinct_before_burn_in: bool,
}

/// Time-weighted per-patch occupancy over `[burn_in, end]`, where `end` is the
/// extinction time if extinction occurred and `t_end` otherwise.
pub fn occupancy_statistics(traj: &CtmcTrajectory, burn_in: f64) -> Result<OccupancyStatistics> {
    if !(traj.t_end > burn_in) {
        return Err(Error::precondition("trajectory must extend past the burn-in"));
    }
    let end = traj.extinction_time.unwrap_or(traj.t_end);
    let n = traj.initial.len();
    if end <= burn_in && traj.extinction_time.is_some() {
        return Ok(OccupancyStatistics {
            means: vec![0.0; n],
            window: (burn_in, burn_in),
            extinct: true,
            extinct_before_burn_in: true,
        });
    }
    let mut acc = vec![0.0; n];
    traj.for_each_interval(|t0, t1, st| {
        let lo = t0.max(burn_in);
        let hi = t1.min(end);
        if hi > lo {
            for (a, &b) in acc.iter_mut().zip(st) {
                if b {
                    *a += hi - lo;
                }
            }
        }
    });
    let len = end - burn_in;
    Ok(OccupancyStatistics {
        means: acc.iter().map(|a| a / len).collect(),
        window: (burn_in, end),
        extinct: traj.extinction_time.is_some(),
        extinct_before_burn_in: false,
    })
}
