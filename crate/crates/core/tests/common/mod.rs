//! Shared builders and dense reference computations for the integration tests.
#![allow(dead_code)]

use metapop::geometry::distance;
use metapop::patches::sample_patches;
use metapop::{ColonizationFunction, Domain, Field, Kernel, Landscape, Network, PatchSet, Point};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_box(dim: usize) -> Domain {
    let mut hi = [0.0; 3];
    hi[..dim].iter_mut().for_each(|v| *v = 1.0);
    Domain::Box { lo: [0.0; 3], hi }
}

pub fn constant_landscape(dim: usize, e: f64, r: f64) -> Landscape {
    Landscape::new(
        dim,
        unit_box(dim),
        Field::constant(e),
        Field::constant(1.0),
        Field::constant(1.0),
        Kernel::uniform(1.0),
        r,
    )
    .unwrap()
}

/// A small random instance: constant landscape, random `e`, `r` and patches.
pub struct Instance {
    pub land: Landscape,
    pub patches: PatchSet,
    pub net: Network,
    pub f: ColonizationFunction,
}

pub fn random_instance(rng: &mut impl Rng, n: usize) -> Instance {
    let dim = rng.random_range(1..=2);
    let e = rng.random_range(0.05..1.5);
    let r = rng.random_range(0.3..0.9);
    let land = constant_landscape(dim, e, r);
    let f = match rng.random_range(0..3) {
        0 => ColonizationFunction::linear(),
        1 => ColonizationFunction::saturating(),
        _ => ColonizationFunction::exponential(),
    };
    let patches = sample_patches(&land, n, rng.random(), 0).unwrap();
    let net = Network::build(&land, &patches);
    Instance { land, patches, net, f }
}

/// Dense `w_ij = (A / (n - 1)) a(z_j) r^{-d} c(|z_i - z_j| / r)`, computed
/// from the definition without the sparse structure.
pub fn dense_weights(land: &Landscape, locs: &[Point]) -> DMatrix<f64> {
    let n = locs.len();
    let scale = land.area() / (n as f64 - 1.0) / land.r.powi(land.dim as i32);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let u = distance(&locs[i], &locs[j]) / land.r;
        if u >= 1.0 {
            0.0
        } else {
            scale * land.a.eval(&locs[j]) * land.kernel.eval(&locs[i], u)
        }
    })
}

pub fn dense_en(land: &Landscape, f: &ColonizationFunction, w: &DMatrix<f64>, locs: &[Point], p: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|i| {
            let s: f64 = (0..p.len()).map(|j| w[(i, j)] * p[j]).sum();
            let g = f.eval(s);
            g / (land.e.eval(&locs[i]) + g)
        })
        .collect()
}

/// Eigenvalues of a matrix whose off-diagonal part is `diag(s) W` with `W`
/// symmetric and `s > 0`. Such a matrix is diagonally similar to the symmetric
/// matrix with entries `sqrt(m_ij m_ji)`, which a symmetric solver handles
/// reliably.
///
/// Rows without off-diagonal entries make the matrix block triangular; their
/// diagonal entries are eigenvalues and they are removed first.
pub fn symmetrizable_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    if let Some(i) = (0..n).find(|&i| (0..n).all(|j| j == i || m[(i, j)] == 0.0)) {
        let mut out = vec![m[(i, i)]];
        if n > 1 {
            out.extend(symmetrizable_eigenvalues(&m.clone().remove_row(i).remove_column(i)));
        }
        return out;
    }
    for i in 0..n {
        for j in 0..n {
            assert_eq!(m[(i, j)] == 0.0, m[(j, i)] == 0.0, "pattern must be symmetric");
            for k in 0..n {
                // Kolmogorov cycle condition on triangles.
                let fwd = m[(i, j)] * m[(j, k)] * m[(k, i)];
                let bwd = m[(i, k)] * m[(k, j)] * m[(j, i)];
                if i != j && j != k && i != k {
                    assert!((fwd - bwd).abs() <= 1e-9 * fwd.abs().max(bwd.abs()).max(1e-300));
                }
            }
        }
    }
    let sym = DMatrix::from_fn(n, n, |i, j| if i == j { m[(i, i)] } else { (m[(i, j)] * m[(j, i)]).sqrt() });
    nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
}

/// Largest eigenvalue of a symmetrizable matrix.
pub fn leading_real_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrizable_eigenvalues(m).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Spectral radius of a symmetrizable matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    symmetrizable_eigenvalues(m).into_iter().map(f64::abs).fold(0.0, f64::max)
}

pub fn sup_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
