//! Cross-checks of the library against independent reference computations.

mod common;

use common::*;
use metapop::bounds::{q_alpha_value, solve_q_alpha};
use metapop::dynamics::{
    discrete_step, en_apply, jacobian, largest_fixed_point, ode_integrate, response_time_sandwich,
    vector_field, FixedPointOptions, OdeOptions,
};
use metapop::patches::{coupling_matrix, sample_patches};
use metapop::perron::PowerOptions;
use metapop::rng;
use metapop::stochastic::{ctmc_simulate, discrete_chain_step};
use metapop::{ColonizationFunction, Domain, Field, FieldKind, Kernel, KernelProfile, Landscape, Network, PatchSet};
use nalgebra::DMatrix;
use rand::Rng;
use std::f64::consts::PI;

#[test]
fn q_alpha_matches_closed_forms() {
    let mut g = rng(1);
    let lin = ColonizationFunction::linear();
    let sat = ColonizationFunction::saturating();
    for _ in 0..500 {
        let rho: f64 = g.random_range(0.05..6.0);
        let e = g.random_range(0.05..3.0);
        let alpha = g.random_range(0.3..2.0);
        let want_lin = (1.0 - alpha * e / rho).max(0.0);
        let want_sat = ((rho - alpha * e) / (rho * (1.0 + alpha * e))).max(0.0);
        assert!((q_alpha_value(&lin, rho, e, alpha) - want_lin).abs() < 1e-12, "linear {rho} {e} {alpha}");
        assert!((q_alpha_value(&sat, rho, e, alpha) - want_sat).abs() < 1e-12, "saturating {rho} {e} {alpha}");
    }
}

#[test]
fn exponential_root_solves_its_equation() {
    let f = ColonizationFunction::exponential();
    let mut g = rng(2);
    for _ in 0..200 {
        let rho = g.random_range(0.5..6.0);
        let e = g.random_range(0.05..1.0);
        let q = q_alpha_value(&f, rho, e, 1.0);
        if rho > e {
            let rhs = f.eval(q * rho) / (e + f.eval(q * rho));
            assert!(q > 0.0 && (q - rhs).abs() < 1e-12);
            // No larger root: the map lies below the diagonal on (q, 1].
            for k in 1..=20 {
                let x = q + (1.0 - q) * k as f64 / 20.0;
                assert!(f.eval(x * rho) / (e + f.eval(x * rho)) <= x + 1e-12);
            }
        } else {
            assert_eq!(q, 0.0);
        }
    }
}

#[test]
fn rho_matches_kernel_integrals() {
    for (dim, vd) in [(1usize, 2.0), (2, PI), (3, 4.0 * PI / 3.0)] {
        let land = constant_landscape(dim, 0.5, 0.1);
        let centre = [0.5; 3];
        assert!((land.rho(&centre).unwrap() - vd).abs() < 1e-9, "interior d={dim}");
        let mut edge = centre;
        edge[0] = 0.0;
        assert!((land.rho(&edge).unwrap() - vd / 2.0).abs() < 2e-3, "edge d={dim}");
        // Linear profile: d v_d ∫ (1 - u) u^{d-1} du = v_d / (d + 1).
        let lin = Landscape::new(
            dim,
            unit_box(dim),
            Field::constant(0.5),
            Field::constant(1.0),
            Field::constant(1.0),
            Kernel::new(KernelProfile::Linear, 1.0, None).unwrap(),
            0.1,
        )
        .unwrap();
        assert!((lin.rho(&centre).unwrap() - vd / (dim as f64 + 1.0)).abs() < 1e-6, "linear d={dim}");
    }
}

#[test]
fn rho_of_affine_density_is_its_centre_value() {
    let bbox = ([0.0; 3], [1.0, 1.0, 0.0]);
    let sigma = Field::new(
        FieldKind::Affine { intercept: 1.0, gradient: [0.5, -0.3, 0.0] },
        &bbox,
        2,
        None,
        None,
    );
    let land = Landscape::new(2, unit_box(2), Field::constant(0.4), Field::constant(1.0), sigma, Kernel::uniform(1.0), 0.1)
        .unwrap();
    for z in [[0.3, 0.4, 0.0], [0.6, 0.7, 0.0], [0.5, 0.5, 0.0]] {
        let want = PI * (1.0 + 0.5 * z[0] - 0.3 * z[1]);
        assert!((land.rho(&z).unwrap() - want).abs() < 1e-6);
    }
}

#[test]
fn network_weights_match_dense_definition() {
    let mut g = rng(3);
    for _ in 0..20 {
        let n = g.random_range(5..60);
        let inst = random_instance(&mut g, n);
        let w = dense_weights(&inst.land, &inst.patches.locations);
        let mut sparse = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in inst.net.row(i) {
                sparse[(i, j)] = v;
            }
        }
        assert!((&sparse - &w).abs().max() < 1e-12);
        let p: Vec<f64> = (0..n).map(|_| g.random()).collect();
        let want = dense_en(&inst.land, &inst.f, &w, &inst.patches.locations, &p);
        assert!(sup_norm(&en_apply(&inst.net, &inst.f, &p), &want) < 1e-13);
    }
}

#[test]
fn perron_root_matches_dense_eigenvalues() {
    let mut g = rng(4);
    for _ in 0..30 {
        let n = g.random_range(3..40);
        let inst = random_instance(&mut g, n);
        let tm = coupling_matrix(&inst.net, &inst.f, PowerOptions::default()).unwrap();
        let w = dense_weights(&inst.land, &inst.patches.locations);
        let dense = DMatrix::from_fn(n, n, |i, j| inst.f.slope_at_zero() * w[(i, j)] / inst.land.e.min);
        let want = spectral_radius(&dense);
        assert!((tm.lambda - want).abs() < 1e-7 * want.max(1.0), "{} vs {want}", tm.lambda);
    }
}

#[test]
fn fixed_point_matches_dense_iteration() {
    let mut g = rng(5);
    for _ in 0..20 {
        let n = g.random_range(3..40);
        let inst = random_instance(&mut g, n);
        let w = dense_weights(&inst.land, &inst.patches.locations);
        let mut p = vec![1.0; n];
        for _ in 0..200_000 {
            let next = dense_en(&inst.land, &inst.f, &w, &inst.patches.locations, &p);
            let step = sup_norm(&next, &p);
            p = next;
            if step < 1e-14 {
                break;
            }
        }
        let fp = largest_fixed_point(&inst.net, &inst.f, FixedPointOptions { tol: 1e-14, max_iter: 1_000_000 }).unwrap();
        assert!(sup_norm(&fp.p, &p) < 1e-9);
    }
}

#[test]
fn logistic_pair_follows_closed_form() {
    // Two co-located patches with f(x) = x: dp/dt = w p (1 - p) - e p.
    let land = constant_landscape(1, 0.3, 0.5);
    let ps = PatchSet::new(1, vec![[0.4, 0.0, 0.0]; 2]).unwrap();
    let net = Network::build(&land, &ps);
    let f = ColonizationFunction::linear();
    let w = 1.0 / 0.5;
    let (e, p0) = (0.3, 0.1);
    let k = 1.0 - e / w;
    let traj = ode_integrate(&net, &f, &[p0, p0], 6.0, OdeOptions { record_steps: true, ..Default::default() }).unwrap();
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let want = k / (1.0 + (k / p0 - 1.0) * (-(w - e) * t).exp());
        assert!((state[0] - want).abs() < 1e-7, "t = {t}: {} vs {want}", state[0]);
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut g = rng(6);
    for _ in 0..20 {
        let n = g.random_range(3..25);
        let inst = random_instance(&mut g, n);
        let p: Vec<f64> = (0..n).map(|_| g.random_range(0.05..0.95)).collect();
        let jac = jacobian(&inst.net, &inst.f, &p);
        let h = 1e-6;
        let (mut up, mut down) = (vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            let mut pp = p.clone();
            pp[j] += h;
            vector_field(&inst.net, &inst.f, &pp, &mut up);
            pp[j] -= 2.0 * h;
            vector_field(&inst.net, &inst.f, &pp, &mut down);
            for i in 0..n {
                let fd = (up[i] - down[i]) / (2.0 * h);
                assert!((fd - jac[(i, j)]).abs() <= 1e-6 * jac[(i, j)].abs().max(1.0));
            }
        }
    }
}

#[test]
fn sandwich_brackets_dense_leading_eigenvalue() {
    let mut g = rng(7);
    let mut checked = 0;
    while checked < 15 {
        let n = g.random_range(3..30);
        let inst = random_instance(&mut g, n);
        let fp = largest_fixed_point(&inst.net, &inst.f, FixedPointOptions::default()).unwrap();
        if fp.p.iter().any(|v| *v < 1e-6) {
            continue;
        }
        let lo: Vec<f64> = fp.p.iter().map(|v| 0.8 * v).collect();
        let hi: Vec<f64> = fp.p.iter().map(|v| (1.2 * v).min(1.0)).collect();
        let sw = response_time_sandwich(&inst.net, &inst.f, &lo, &hi, PowerOptions::default()).unwrap();
        let exact = leading_real_eigenvalue(&jacobian(&inst.net, &inst.f, &fp.p));
        assert!(sw.lambda_lo <= exact + 1e-8 && exact <= sw.lambda_hi + 1e-8, "{} <= {exact} <= {}", sw.lambda_lo, sw.lambda_hi);
        assert!(exact < 0.0, "the largest equilibrium is linearly stable");
        checked += 1;
    }
}

#[test]
fn discrete_step_preserves_the_equilibrium() {
    let mut g = rng(8);
    for _ in 0..10 {
        let inst = random_instance(&mut g, 30);
        let fp = largest_fixed_point(&inst.net, &inst.f, FixedPointOptions { tol: 1e-13, max_iter: 1_000_000 }).unwrap();
        let (next, _) = discrete_step(&inst.net, &inst.f, &fp.p);
        assert!(sup_norm(&next, &fp.p) < 1e-9);
    }
}

#[test]
fn discrete_chain_one_step_marginals() {
    let land = constant_landscape(1, 0.3, 0.6);
    let ps = PatchSet::new(1, vec![[0.1, 0.0, 0.0], [0.3, 0.0, 0.0], [0.5, 0.0, 0.0], [0.7, 0.0, 0.0]]).unwrap();
    let net = Network::build(&land, &ps);
    let f = ColonizationFunction::saturating();
    let state = [true, false, true, false];
    let x: Vec<f64> = state.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let want: Vec<f64> = (0..4)
        .map(|i| if state[i] { 0.7 } else { f.eval(net.migration_pressure(&x, i).unwrap()) })
        .collect();
    let mut g = rng::stream(9, &[rng::purpose::CHAIN]);
    let trials = 200_000;
    let mut counts = [0usize; 4];
    for _ in 0..trials {
        for (c, b) in counts.iter_mut().zip(discrete_chain_step(&net, &f, &state, &mut g).unwrap()) {
            *c += usize::from(b);
        }
    }
    for i in 0..4 {
        let freq = counts[i] as f64 / trials as f64;
        let sd = (want[i] * (1.0 - want[i]) / trials as f64).sqrt();
        assert!((freq - want[i]).abs() < 5.0 * sd + 1e-12, "patch {i}: {freq} vs {}", want[i]);
    }
}

#[test]
fn discrete_chain_rejects_probabilities_above_one() {
    let land = constant_landscape(1, 1.5, 0.6);
    let ps = PatchSet::new(1, vec![[0.1, 0.0, 0.0], [0.3, 0.0, 0.0]]).unwrap();
    let net = Network::build(&land, &ps);
    let mut g = rng(10);
    assert!(discrete_chain_step(&net, &ColonizationFunction::linear(), &[true, true], &mut g).is_err());
}

/// Quasi-stationary occupancy marginals of the three-patch chain, from the
/// dense sub-generator on the seven non-empty states.
fn dense_qsd_marginals(net: &Network, f: &ColonizationFunction) -> [f64; 3] {
    let states: Vec<u8> = (1..8).collect();
    let idx = |s: u8| (s - 1) as usize;
    let mut q = DMatrix::zeros(7, 7);
    for &s in &states {
        let x: Vec<f64> = (0..3).map(|k| f64::from((s >> k) & 1)).collect();
        for i in 0..3 {
            let occupied = (s >> i) & 1 == 1;
            let rate = if occupied { net.extinction[i] } else { f.eval(net.migration_pressure(&x, i).unwrap()) };
            let target = s ^ (1 << i);
            q[(idx(s), idx(s))] -= rate;
            if target != 0 {
                q[(idx(s), idx(target))] += rate;
            }
        }
    }
    // Left Perron vector of the shifted sub-generator by power iteration.
    let shift = 10.0;
    let m = q.transpose() + DMatrix::identity(7, 7) * shift;
    let mut v = nalgebra::DVector::from_element(7, 1.0 / 7.0);
    for _ in 0..20_000 {
        v = &m * &v;
        v /= v.sum();
    }
    let mut out = [0.0; 3];
    for &s in &states {
        for (k, o) in out.iter_mut().enumerate() {
            if (s >> k) & 1 == 1 {
                *o += v[idx(s)];
            }
        }
    }
    out
}

#[test]
fn ctmc_survivors_match_quasi_stationary_marginals() {
    // Yaglom limit: the law of X(t) given survival converges to the
    // quasi-stationary distribution.
    let land = constant_landscape(1, 0.2, 0.5);
    let ps = PatchSet::new(1, vec![[0.3, 0.0, 0.0], [0.5, 0.0, 0.0], [0.75, 0.0, 0.0]]).unwrap();
    let net = Network::build(&land, &ps);
    let f = ColonizationFunction::linear();
    let want = dense_qsd_marginals(&net, &f);
    let runs: u64 = 20_000;
    let horizon = 25.0;
    let mut survivors = 0usize;
    let mut occupied = [0usize; 3];
    for k in 0..runs {
        let mut g = rng::stream(12, &[rng::purpose::CTMC, k]);
        let traj = ctmc_simulate(&net, &f, &[true, true, true], horizon, &mut g).unwrap();
        if traj.extinction_time.is_some() {
            continue;
        }
        survivors += 1;
        let mut state = traj.initial.clone();
        for ev in &traj.events {
            state[ev.patch] = ev.occupied;
        }
        for (c, s) in occupied.iter_mut().zip(&state) {
            *c += usize::from(*s);
        }
    }
    assert!(survivors as u64 > runs / 2, "{survivors} survivors");
    for k in 0..3 {
        let freq = occupied[k] as f64 / survivors as f64;
        let sd = (want[k] * (1.0 - want[k]) / survivors as f64).sqrt();
        assert!((freq - want[k]).abs() < 5.0 * sd, "patch {k}: {freq} vs {}", want[k]);
    }
}

#[test]
fn solve_q_alpha_uses_local_rho() {
    let land = constant_landscape(2, 0.5, 0.1);
    let f = ColonizationFunction::linear();
    let q = solve_q_alpha(&land, &f, &[0.5, 0.5, 0.0], 1.0).unwrap();
    assert!((q - (1.0 - 0.5 / PI)).abs() < 1e-9);
    let corner = solve_q_alpha(&land, &f, &[0.0, 0.0, 0.0], 1.0).unwrap();
    assert!((corner - (1.0 - 0.5 / (PI / 4.0))).abs() < 5e-3);
    assert!(solve_q_alpha(&land, &f, &[1.5, 0.5, 0.0], 1.0).is_err());
}

#[test]
fn balls_domain_sampling_stays_inside() {
    let domain = Domain::Balls(vec![
        metapop::Ball::new([0.3, 0.3, 0.0], 0.25),
        metapop::Ball::new([0.7, 0.6, 0.0], 0.3),
    ]);
    let land = Landscape::new(2, domain.clone(), Field::constant(0.3), Field::constant(1.0), Field::constant(1.0), Kernel::uniform(1.0), 0.1)
        .unwrap();
    let ps = sample_patches(&land, 5000, 4, 0).unwrap();
    assert!(ps.locations.iter().all(|z| domain.contains(z, 2)));
    ps.validate(&land).unwrap();
}
