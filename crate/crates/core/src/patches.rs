//! Patch sampling, the sparse coupling network, the matrix `T`, and
//! connectivity/primitivity analysis.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::colonization::ColonizationFunction;
use crate::error::{Error, Result};
use crate::geometry::{distance, point_from, Point};
use crate::landscape::Landscape;
use crate::perron::{spectral_radius, PowerOptions};
use crate::rng;

const CHUNK: usize = 1024;
const MIN_ACCEPTANCE: f64 = 1e-6;

/// Locations of `n` patches in the habitat.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub dim: usize,
    pub locations: Vec<Point>,
    /// Seed and replicate index the set was drawn with, if sampled.
    pub seed: Option<(u64, u64)>,
}

impl PatchSet {
    pub fn new(dim: usize, locations: Vec<Point>) -> Result<Self> {
        if locations.len() < 2 {
            return Err(Error::precondition("a patch set needs at least two patches"));
        }
        Ok(Self { dim, locations, seed: None })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Checks that every patch lies in the habitat.
    pub fn validate(&self, land: &Landscape) -> Result<()> {
        if let Some((i, p)) = self
            .locations
            .iter()
            .enumerate()
            .find(|(_, p)| !land.domain.contains(p, land.dim))
        {
            return Err(Error::domain(format!("patch {i} at {:?} lies outside the habitat", &p[..self.dim])));
        }
        Ok(())
    }

    /// Writes `id,x1..xd`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string()];
        header.extend((1..=self.dim).map(|k| format!("x{k}")));
        out.write_record(&header)?;
        for (i, p) in self.locations.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(p[..self.dim].iter().map(|v| format!("{v:?}")));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let dim = headers.len().saturating_sub(1);
        if dim == 0 || dim > 3 || &headers[0] != "id" {
            return Err(Error::config("patch CSV must have columns id,x1..xd with 1 <= d <= 3"));
        }
        let mut locations = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let coords = (1..=dim)
                .map(|k| {
                    rec[k]
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::config(format!("bad coordinate `{}`: {e}", &rec[k])))
                })
                .collect::<Result<Vec<_>>>()?;
            locations.push(point_from(&coords));
        }
        Self::new(dim, locations)
    }
}

/// Draws `n` i.i.d. locations with density `σ / A` by rejection against `σ_max`.
///
/// Draw `k` belongs to chunk `k / 1024`, and each chunk has its own stream keyed
/// by `(seed, replicate, chunk)`, so the result does not depend on threading.
pub fn sample_patches(land: &Landscape, n: usize, seed: u64, replicate: u64) -> Result<PatchSet> {
    if n < 2 {
        return Err(Error::precondition("n must be at least 2"));
    }
    let dim = land.dim;
    let (lo, hi) = land.domain.bounding_box(dim);
    let box_volume: f64 = (0..dim).map(|k| hi[k] - lo[k]).product();
    let acceptance = land.area() / (land.sigma.max * box_volume);
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::config(format!(
            "rejection acceptance rate {acceptance:e} is below {MIN_ACCEPTANCE:e}"
        )));
    }
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<Point>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, &[rng::purpose::PATCHES, replicate, c as u64]);
            let count = CHUNK.min(n - c * CHUNK);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let mut p = [0.0; 3];
                for k in 0..dim {
                    p[k] = lo[k] + (hi[k] - lo[k]) * rng.random::<f64>();
                }
                if !land.domain.contains(&p, dim) {
                    continue;
                }
                if rng.random::<f64>() * land.sigma.max <= land.sigma.eval(&p) {
                    out.push(p);
                }
            }
            out
        })
        .collect();
    Ok(PatchSet {
        dim,
        locations: parts.into_iter().flatten().collect(),
        seed: Some((seed, replicate)),
    })
}

/// Uniform spatial hash with cell size `cell`.
struct SpatialHash {
    cell: f64,
    dim: usize,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl SpatialHash {
    fn new(points: &[Point], dim: usize, cell: f64) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, dim, cell)).or_default().push(i);
        }
        Self { cell, dim, buckets }
    }

    fn key(p: &Point, dim: usize, cell: f64) -> [i64; 3] {
        let mut k = [0i64; 3];
        for d in 0..dim {
            k[d] = (p[d] / cell).floor() as i64;
        }
        k
    }

    /// Indices in the cells adjacent to the cell of `p`, in ascending order.
    fn candidates(&self, p: &Point) -> Vec<usize> {
        let base = Self::key(p, self.dim, self.cell);
        let span = |d: usize| if d < self.dim { -1..=1 } else { 0..=0 };
        let mut out = Vec::new();
        for dx in span(0) {
            for dy in span(1) {
                for dz in span(2) {
                    if let Some(v) = self.buckets.get(&[base[0] + dx, base[1] + dy, base[2] + dz]) {
                        out.extend_from_slice(v);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Sparse migration weights `w_ij = (A/(n-1)) a(z_j) c(z_i, z_j; r)` in CSR
/// form, plus per-patch extinction rates and the reverse adjacency.
#[derive(Debug, Clone)]
pub struct Network {
    pub n: usize,
    pub dim: usize,
    pub locations: Vec<Point>,
    pub extinction: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    /// For each `j`, the positions `k` in `cols`/`weights` with `cols[k] == j`.
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_pos: Vec<usize>,
}

impl Network {
    pub fn build(land: &Landscape, patches: &PatchSet) -> Self {
        let n = patches.len();
        let dim = land.dim;
        let r = land.r;
        let prefactor = land.area() / (n as f64 - 1.0) / r.powi(dim as i32);
        let hash = SpatialHash::new(&patches.locations, dim, r);
        let a_vals: Vec<f64> = patches.locations.iter().map(|z| land.a.eval(z)).collect();
        let rows: Vec<Vec<(usize, f64)>> = patches
            .locations
            .par_iter()
            .enumerate()
            .map(|(i, zi)| {
                hash.candidates(zi)
                    .into_iter()
                    .filter(|&j| j != i)
                    .filter_map(|j| {
                        let u = distance(zi, &patches.locations[j]) / r;
                        let c = land.kernel.eval(zi, u);
                        (c > 0.0).then(|| (j, prefactor * a_vals[j] * c))
                    })
                    .collect()
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        for row in &rows {
            for &(j, w) in row {
                cols.push(j);
                weights.push(w);
            }
            row_ptr.push(cols.len());
        }
        let mut counts = vec![0usize; n + 1];
        for &j in &cols {
            counts[j + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let mut fill = counts;
        let mut col_rows = vec![0; cols.len()];
        let mut col_pos = vec![0; cols.len()];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = cols[k];
                col_rows[fill[j]] = i;
                col_pos[fill[j]] = k;
                fill[j] += 1;
            }
        }
        Self {
            n,
            dim,
            locations: patches.locations.clone(),
            extinction: patches.locations.iter().map(|z| land.e.eval(z)).collect(),
            row_ptr,
            cols,
            weights,
            col_ptr,
            col_rows,
            col_pos,
        }
    }

    pub fn n_edges(&self) -> usize {
        self.cols.len()
    }

    /// `(j, w_ij)` for the patches `j` influencing patch `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.weights[span].iter().copied())
    }

    /// `(i, w_ij)` for the patches `i` influenced by patch `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.col_rows[k], self.weights[self.col_pos[k]]))
    }

    /// `S_i(x)`.
    pub fn migration_pressure(&self, x: &[f64], i: usize) -> Result<f64> {
        if i >= self.n {
            return Err(Error::Index { index: i, len: self.n });
        }
        Ok(self.pressure(x, i))
    }

    #[inline]
    pub(crate) fn pressure(&self, x: &[f64], i: usize) -> f64 {
        self.row(i).map(|(j, w)| w * x[j]).sum()
    }

    /// All `S_i(x)`.
    pub fn pressures(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.pressure(x, i)).collect()
    }

    /// `S_i` restricted to source patches with `mask[j]`.
    pub fn pressures_masked(&self, x: &[f64], mask: &[bool]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).filter(|(j, _)| mask[*j]).map(|(j, w)| w * x[j]).sum())
            .collect()
    }

    /// Undirected adjacency lists of the interaction graph.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = (0..self.n).map(|i| self.row(i).map(|(j, _)| j).collect()).collect();
        for i in 0..self.n {
            for (j, _) in self.column(i) {
                adj[i].push(j);
            }
            adj[i].sort_unstable();
            adj[i].dedup();
        }
        adj
    }
}

/// The matrix `T_ij = f'(0) w_ij / e(z_i)` with its Perron root and flags.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub n: usize,
    /// Rows of `(j, T_ij)`.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub lambda: f64,
    pub irreducible: bool,
    pub primitive: bool,
    pub n_edges: usize,
}

impl CouplingMatrix {
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[i][j] = v;
            }
        }
        m
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lambda_T", "primitive", "n_edges"])?;
        out.write_record([format!("{:?}", self.lambda), self.primitive.to_string(), self.n_edges.to_string()])?;
        out.flush()?;
        Ok(())
    }
}

/// Builds `T` and computes `λ(T)` and the primitivity flags.
pub fn coupling_matrix(net: &Network, f: &ColonizationFunction, opts: PowerOptions) -> Result<CouplingMatrix> {
    let lf = f.slope_at_zero();
    let rows: Vec<Vec<(usize, f64)>> = (0..net.n)
        .map(|i| net.row(i).map(|(j, w)| (j, lf * w / net.extinction[i])).collect())
        .collect();
    let lambda = lambda_of_rows(&rows, opts)?;
    let cert = primitivity(net);
    Ok(CouplingMatrix {
        n: net.n,
        n_edges: net.n_edges(),
        rows,
        lambda,
        irreducible: cert.connected,
        primitive: cert.primitive,
    })
}

/// Spectral radius of a sparse nonnegative matrix given by rows.
pub fn lambda_of_rows(rows: &[Vec<(usize, f64)>], opts: PowerOptions) -> Result<f64> {
    let scale = rows
        .iter()
        .map(|r| r.iter().map(|(_, v)| v).sum::<f64>())
        .fold(0.0, f64::max);
    spectral_radius(rows.len(), scale, opts, |x, y| {
        for (yi, row) in y.iter_mut().zip(rows) {
            *yi = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
    })
    .map(|root| root.value)
}

/// Evidence for or against primitivity of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitivityCertificate {
    pub connected: bool,
    pub components: usize,
    /// Three mutually adjacent patches, if any.
    pub triangle: Option<(usize, usize, usize)>,
    /// An odd cycle exists; for a connected graph with an edge this is
    /// equivalent to aperiodicity of `T`.
    pub non_bipartite: bool,
    pub primitive: bool,
}

/// Graph analysis of `T`'s support: patches `i ≠ j` are adjacent when
/// `|z_i - z_j| < r`. `T` is primitive exactly when this graph is connected
/// and not bipartite; a triangle is reported as a witness when present.
pub fn primitivity(net: &Network) -> PrimitivityCertificate {
    let adj = net.adjacency();
    let n = net.n;
    let mut colour = vec![u8::MAX; n];
    let mut components = 0;
    let mut non_bipartite = false;
    let mut stack = Vec::new();
    for s in 0..n {
        if colour[s] != u8::MAX {
            continue;
        }
        components += 1;
        colour[s] = 0;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if colour[w] == u8::MAX {
                    colour[w] = 1 - colour[v];
                    stack.push(w);
                } else if colour[w] == colour[v] {
                    non_bipartite = true;
                }
            }
        }
    }
    let triangle = find_triangle(&adj);
    let connected = components == 1;
    PrimitivityCertificate {
        connected,
        components,
        triangle,
        non_bipartite,
        primitive: connected && non_bipartite,
    }
}

fn find_triangle(adj: &[Vec<usize>]) -> Option<(usize, usize, usize)> {
    for (i, ni) in adj.iter().enumerate() {
        for &j in ni.iter().filter(|&&j| j > i) {
            let nj = &adj[j];
            let (mut a, mut b) = (0, 0);
            while a < ni.len() && b < nj.len() {
                match ni[a].cmp(&nj[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        if ni[a] > j {
                            return Some((i, j, ni[a]));
                        }
                        a += 1;
                        b += 1;
                    }
                }
            }
        }
    }
    None
}

/// A probability bound that may be vacuous or inapplicable.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbabilityBound {
    Value { value: f64, vacuous: bool },
    NotApplicable(String),
}

impl ProbabilityBound {
    pub fn value(v: f64) -> Self {
        ProbabilityBound::Value { value: v, vacuous: v <= 0.0 }
    }

    pub fn get(&self) -> Option<f64> {
        match self {
            ProbabilityBound::Value { value, .. } => Some(*value),
            ProbabilityBound::NotApplicable(_) => None,
        }
    }
}

/// `1 - N(Ω, r/3) exp(-n min_z A^{-1} ∫ 1(|y - z| <= r/3) σ(y) dy)`,
/// applicable when `n > 2 N(Ω, r/3)`.
pub fn primitivity_probability_bound(land: &Landscape, n: usize, r: f64, step: f64) -> Result<ProbabilityBound> {
    let cover = land.covering_number(r / 3.0);
    if n <= 2 * cover {
        return Ok(ProbabilityBound::NotApplicable(format!(
            "n = {n} does not exceed 2 N(Ω, r/3) = {}",
            2 * cover
        )));
    }
    let mass = land.min_local_mass(r / 3.0, step)? / land.area();
    Ok(ProbabilityBound::value(1.0 - cover as f64 * (-(n as f64) * mass).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::landscape::{Field, Kernel};

    fn square(r: f64) -> Landscape {
        Landscape::new(
            2,
            Domain::Box { lo: [0.0; 3], hi: [1.0, 1.0, 0.0] },
            Field::constant(0.2),
            Field::constant(1.0),
            Field::constant(1.0),
            Kernel::uniform(1.0),
            r,
        )
        .unwrap()
    }

    #[test]
    fn colocated_pair_pressure() {
        let land = square(0.1);
        let ps = PatchSet::new(2, vec![[0.5, 0.5, 0.0]; 2]).unwrap();
        let net = Network::build(&land, &ps);
        let s = net.migration_pressure(&[0.0, 1.0], 0).unwrap();
        assert!((s - 1.0 / 0.01).abs() < 1e-9);
        assert_eq!(net.migration_pressure(&[0.0, 0.0], 1).unwrap(), 0.0);
        assert!(net.migration_pressure(&[0.0, 0.0], 2).is_err());
    }

    #[test]
    fn tie_at_radius_is_not_an_edge() {
        let land = square(0.25);
        let ps = PatchSet::new(2, vec![[0.25, 0.5, 0.0], [0.5, 0.5, 0.0]]).unwrap();
        assert_eq!(Network::build(&land, &ps).n_edges(), 0);
    }

    #[test]
    fn sampling_is_reproducible() {
        let land = square(0.1);
        let a = sample_patches(&land, 3000, 11, 0).unwrap();
        let b = sample_patches(&land, 3000, 11, 0).unwrap();
        let c = sample_patches(&land, 3000, 11, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.locations, c.locations);
        a.validate(&land).unwrap();
    }

    #[test]
    fn csv_roundtrip() {
        let land = square(0.1);
        let ps = sample_patches(&land, 50, 3, 0).unwrap();
        let mut buf = Vec::new();
        ps.write_csv(&mut buf).unwrap();
        let back = PatchSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.locations, ps.locations);
    }

    #[test]
    fn triangle_and_clusters() {
        let land = square(0.1);
        let tri = PatchSet::new(2, vec![[0.5, 0.5, 0.0], [0.55, 0.5, 0.0], [0.52, 0.54, 0.0]]).unwrap();
        let cert = primitivity(&Network::build(&land, &tri));
        assert!(cert.primitive && cert.triangle.is_some());
        let two = PatchSet::new(
            2,
            vec![[0.1, 0.1, 0.0], [0.12, 0.1, 0.0], [0.11, 0.12, 0.0], [0.8, 0.8, 0.0], [0.82, 0.8, 0.0]],
        )
        .unwrap();
        let cert = primitivity(&Network::build(&land, &two));
        assert!(!cert.primitive && !cert.connected);
        assert_eq!(cert.components, 2);
    }

    #[test]
    fn primitivity_bound_gate() {
        let land = square(0.1);
        assert!(matches!(
            primitivity_probability_bound(&land, 10, 0.1, 0.05).unwrap(),
            ProbabilityBound::NotApplicable(_)
        ));
    }
}
