//! Stochastic block model specifications and the matrices derived from them.
//!
//! For `SBM(A, μ, N)` with block sizes `k`:
//!
//! ```text
//! M   = diag(μ)                      weight matrix
//! A_μ = √M A √M                      weighted probability matrix (n×n)
//! D   = diag(1_{k_1}, …, 1_{k_n})    lift matrix (N×n)
//! V   = N^{-1/2} D M^{-1/2}          isometry (N×n), column j is 1/√k_j on block j
//! W   = D A Dᵀ = N V A_μ Vᵀ          model matrix (N×N)
//! ```
//!
//! A spec always carries integral block sizes. Its derived matrices use the
//! realized measure `k/N`, so the identities above hold exactly even when the
//! nominal measure does not divide `N`.

use nalgebra::{ComplexField, DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::SymmetricOperator;

/// Default size above which [`SbmSpec::model_matrix`] refuses to materialize `W`.
pub const DEFAULT_MATERIALIZE_CAP: usize = 8000;

const MEASURE_SUM_TOL: f64 = 1e-12;

/// Probability measure on the blocks `[n]`; every entry strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMeasure(Vec<f64>);

impl BlockMeasure {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::invalid("block measure is empty"));
        }
        if let Some(m) = mu.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::invalid(format!("block measure entry {m} is not positive")));
        }
        let total: f64 = mu.iter().sum();
        if (total - 1.0).abs() > MEASURE_SUM_TOL {
            return Err(Error::invalid(format!("block measure sums to {total}, not 1")));
        }
        Ok(Self(mu))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// The realized measure `k_i / N`.
    pub fn from_block_sizes(sizes: &BlockSizes) -> Self {
        let total = sizes.total() as f64;
        Self(sizes.0.iter().map(|&k| k as f64 / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Symmetric `n×n` matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix(DMatrix<f64>);

impl ProbabilityMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::invalid(format!(
                "probability matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if let Some(x) = a.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::invalid(format!("probability {x} outside [0, 1]")));
        }
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self(a))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Integral block sizes `k_1, …, k_n`, all positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSizes(Vec<usize>);

impl BlockSizes {
    pub fn new(k: Vec<usize>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::invalid("no blocks"));
        }
        if k.contains(&0) {
            return Err(Error::invalid(format!("block sizes {k:?} contain an empty block")));
        }
        Ok(Self(k))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Offsets of the first vertex of each block, plus the total.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        let mut acc = 0;
        out.push(0);
        for &k in &self.0 {
            acc += k;
            out.push(acc);
        }
        out
    }

    /// Block index of every vertex.
    pub fn assignment(&self) -> Vec<usize> {
        self.0.iter().enumerate().flat_map(|(b, &k)| std::iter::repeat_n(b, k)).collect()
    }
}

/// Largest-remainder rounding of `μ_i N`, ties broken towards the lower block index.
pub fn block_sizes(mu: &BlockMeasure, n_vertices: usize) -> Result<BlockSizes> {
    let n = mu.len();
    if n_vertices < n {
        return Err(Error::invalid(format!("N = {n_vertices} is smaller than the number of blocks {n}")));
    }
    let exact: Vec<f64> = mu
        .as_slice()
        .iter()
        .map(|m| {
            let x = m * n_vertices as f64;
            // absorb representation error in exactly-integral products
            if (x - x.round()).abs() < 1e-9 * x.max(1.0) {
                x.round()
            } else {
                x
            }
        })
        .collect();
    let mut k: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = k.iter().sum();
    let leftover = n_vertices
        .checked_sub(assigned)
        .ok_or_else(|| Error::invalid("rounded block sizes exceed N"))?;
    let mut order: Vec<(i64, usize)> =
        exact.iter().enumerate().map(|(i, x)| (-((x - x.floor()) * 1e9).round() as i64, i)).collect();
    order.sort_unstable();
    for &(_, i) in order.iter().take(leftover) {
        k[i] += 1;
    }
    if let Some(i) = k.iter().position(|&x| x == 0) {
        return Err(Error::invalid(format!("block {i} is empty after rounding μ·N")));
    }
    Ok(BlockSizes(k))
}

/// `M = diag(μ)`.
pub fn weight_matrix(mu: &BlockMeasure) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(mu.as_slice()))
}

/// `A_μ = √M A √M`, i.e. `(A_μ)_{ij} = √(μ_i μ_j) a_{ij}`.
pub fn weighted_probability_matrix(a: &ProbabilityMatrix, mu: &BlockMeasure) -> Result<DMatrix<f64>> {
    if a.dim() != mu.len() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: mu.len() });
    }
    let mu = mu.as_slice();
    Ok(DMatrix::from_fn(a.dim(), a.dim(), |i, j| (mu[i] * mu[j]).sqrt() * a.matrix()[(i, j)]))
}

/// `D`, the `N×n` block indicator matrix.
pub fn lift_matrix(sizes: &BlockSizes) -> DMatrix<f64> {
    let assign = sizes.assignment();
    DMatrix::from_fn(assign.len(), sizes.len(), |u, j| if assign[u] == j { 1.0 } else { 0.0 })
}

/// `V`, with entry `1/√k_j` on block `j`.
pub fn isometry(sizes: &BlockSizes) -> DMatrix<f64> {
    let assign = sizes.assignment();
    let k = sizes.as_slice();
    DMatrix::from_fn(assign.len(), sizes.len(), |u, j| {
        if assign[u] == j {
            1.0 / (k[j] as f64).sqrt()
        } else {
            0.0
        }
    })
}

/// `Dx`: repeats `x_i` exactly `k_i` times.
pub fn lift_vector<T: ComplexField + Copy>(sizes: &BlockSizes, x: &DVector<T>) -> Result<DVector<T>> {
    if x.len() != sizes.len() {
        return Err(Error::DimensionMismatch { expected: sizes.len(), got: x.len() });
    }
    let assign = sizes.assignment();
    Ok(DVector::from_fn(assign.len(), |u, _| x[assign[u]]))
}

/// `Vx`.
pub fn lift_isometric<T: ComplexField + Copy>(sizes: &BlockSizes, x: &DVector<T>) -> Result<DVector<T>> {
    if x.len() != sizes.len() {
        return Err(Error::DimensionMismatch { expected: sizes.len(), got: x.len() });
    }
    let scale: Vec<T> = sizes
        .as_slice()
        .iter()
        .map(|&k| T::from_real(nalgebra::convert(1.0 / (k as f64).sqrt())))
        .collect();
    let assign = sizes.assignment();
    Ok(DVector::from_fn(assign.len(), |u, _| x[assign[u]] * scale[assign[u]]))
}

/// `Dᵀy`: sums of `y` over each block.
pub fn block_sums<T: ComplexField + Copy>(sizes: &BlockSizes, y: &DVector<T>) -> Result<DVector<T>> {
    if y.len() != sizes.total() {
        return Err(Error::DimensionMismatch { expected: sizes.total(), got: y.len() });
    }
    let off = sizes.offsets();
    Ok(DVector::from_fn(sizes.len(), |j, _| {
        y.rows(off[j], off[j + 1] - off[j]).iter().fold(T::zero(), |acc, &v| acc + v)
    }))
}

/// `Vᵀy`.
pub fn compress_vector<T: ComplexField + Copy>(sizes: &BlockSizes, y: &DVector<T>) -> Result<DVector<T>> {
    let mut s = block_sums(sizes, y)?;
    for (v, &k) in s.iter_mut().zip(sizes.as_slice()) {
        *v *= T::from_real(nalgebra::convert(1.0 / (k as f64).sqrt()));
    }
    Ok(s)
}

/// `SBM(A, μ, N)` with its integral block sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    a: ProbabilityMatrix,
    nominal: BlockMeasure,
    sizes: BlockSizes,
    measure: BlockMeasure,
}

impl SbmSpec {
    /// Block sizes come from largest-remainder rounding of `μ N`.
    pub fn new(a: DMatrix<f64>, mu: Vec<f64>, n_vertices: usize) -> Result<Self> {
        let a = ProbabilityMatrix::new(a)?;
        let nominal = BlockMeasure::new(mu)?;
        if nominal.len() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: nominal.len() });
        }
        let sizes = block_sizes(&nominal, n_vertices)?;
        let measure = BlockMeasure::from_block_sizes(&sizes);
        Ok(Self { a, nominal, sizes, measure })
    }

    pub fn from_block_sizes(a: DMatrix<f64>, sizes: Vec<usize>) -> Result<Self> {
        let a = ProbabilityMatrix::new(a)?;
        let sizes = BlockSizes::new(sizes)?;
        if sizes.len() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: sizes.len() });
        }
        let measure = BlockMeasure::from_block_sizes(&sizes);
        Ok(Self { a, nominal: measure.clone(), sizes, measure })
    }

    pub fn probability_matrix(&self) -> &ProbabilityMatrix {
        &self.a
    }

    pub fn a(&self) -> &DMatrix<f64> {
        self.a.matrix()
    }

    /// Measure the spec was requested with.
    pub fn nominal_measure(&self) -> &BlockMeasure {
        &self.nominal
    }

    /// Realized measure `k/N` used by every derived matrix.
    pub fn measure(&self) -> &BlockMeasure {
        &self.measure
    }

    pub fn block_sizes(&self) -> &BlockSizes {
        &self.sizes
    }

    pub fn n_blocks(&self) -> usize {
        self.a.dim()
    }

    pub fn n_vertices(&self) -> usize {
        self.sizes.total()
    }

    pub fn weight_matrix(&self) -> DMatrix<f64> {
        weight_matrix(&self.measure)
    }

    pub fn weighted_probability_matrix(&self) -> DMatrix<f64> {
        weighted_probability_matrix(&self.a, &self.measure).expect("dimensions checked at construction")
    }

    pub fn lift_matrix(&self) -> DMatrix<f64> {
        lift_matrix(&self.sizes)
    }

    pub fn isometry(&self) -> DMatrix<f64> {
        isometry(&self.sizes)
    }

    /// Dense `W`, refused above [`DEFAULT_MATERIALIZE_CAP`].
    pub fn model_matrix(&self) -> Result<DMatrix<f64>> {
        self.model_matrix_with_cap(DEFAULT_MATERIALIZE_CAP)
    }

    pub fn model_matrix_with_cap(&self, cap: usize) -> Result<DMatrix<f64>> {
        let n = self.n_vertices();
        if n > cap {
            return Err(Error::TooLarge { n_vertices: n, cap });
        }
        let assign = self.sizes.assignment();
        let a = self.a.matrix();
        Ok(DMatrix::from_fn(n, n, |u, v| a[(assign[u], assign[v])]))
    }

    /// `W` as the operator `y ↦ D A (Dᵀ y)`.
    pub fn model_operator(&self) -> ModelOperator<'_> {
        ModelOperator { spec: self, offsets: self.sizes.offsets() }
    }
}

/// Matrix-free model matrix.
#[derive(Debug, Clone)]
pub struct ModelOperator<'a> {
    spec: &'a SbmSpec,
    offsets: Vec<usize>,
}

impl ModelOperator<'_> {
    pub fn apply_vec<T: ComplexField + Copy>(&self, y: &DVector<T>) -> Result<DVector<T>> {
        let s = block_sums(&self.spec.sizes, y)?;
        let a = self.spec.a().map(|x| T::from_real(nalgebra::convert(x)));
        let t = a * s;
        let assign = self.spec.sizes.assignment();
        Ok(DVector::from_fn(assign.len(), |u, _| t[assign[u]]))
    }
}

impl SymmetricOperator for ModelOperator<'_> {
    fn dim(&self) -> usize {
        self.spec.n_vertices()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.spec.n_blocks();
        let mut s = vec![0.0; n];
        for (j, sj) in s.iter_mut().enumerate() {
            *sj = x[self.offsets[j]..self.offsets[j + 1]].iter().sum();
        }
        let a = self.spec.a();
        for i in 0..n {
            let t: f64 = (0..n).map(|j| a[(i, j)] * s[j]).sum();
            y[self.offsets[i]..self.offsets[i + 1]].fill(t);
        }
    }
}

/// Simple undirected graph sampled from an SBM, stored as symmetric CSR.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGraph {
    n_vertices: usize,
    sizes: BlockSizes,
    seed: u64,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

/// Uniform in `[0, 1)` from the `(seed, u, v)` keyed stream.
fn row_stream(seed: u64, u: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u as u64);
    rng
}

#[inline]
fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Samples `G ~ SBM(A, μ, N)`: for `u < v` the edge is present with
/// probability `W_{uv}`. The decision for the pair `(u, v)` reads word `2v` of
/// ChaCha stream `u` under `seed`, so the result does not depend on the
/// evaluation order. No self-loops.
pub fn sample_graph(spec: &SbmSpec, seed: u64) -> SampledGraph {
    let n = spec.n_vertices();
    assert!(n <= u32::MAX as usize, "vertex ids are stored as u32");
    let assign = spec.block_sizes().assignment();
    let a = spec.a();

    let upper: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut rng = row_stream(seed, u);
            rng.set_word_pos(2 * (u as u128 + 1));
            let bu = assign[u];
            let mut row = Vec::new();
            for v in (u + 1)..n {
                let p = a[(bu, assign[v])];
                if unit_interval(rng.next_u64()) < p {
                    row.push(v as u32);
                }
            }
            row
        })
        .collect();

    let mut degree = vec![0usize; n];
    for (u, row) in upper.iter().enumerate() {
        degree[u] += row.len();
        for &v in row {
            degree[v as usize] += 1;
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for d in &degree {
        offsets.push(offsets.last().unwrap() + d);
    }
    let mut fill = offsets[..n].to_vec();
    let mut neighbors = vec![0u32; offsets[n]];
    // Lower neighbours first, in increasing order, then upper ones.
    for (u, row) in upper.iter().enumerate() {
        for &v in row {
            let v = v as usize;
            neighbors[fill[v]] = u as u32;
            fill[v] += 1;
        }
    }
    for (u, row) in upper.iter().enumerate() {
        neighbors[fill[u]..fill[u] + row.len()].copy_from_slice(row);
        fill[u] += row.len();
    }

    SampledGraph { n_vertices: n, sizes: spec.block_sizes().clone(), seed, offsets, neighbors }
}

impl SampledGraph {
    /// Rebuilds a graph from an edge list (`u < v`, 0-based).
    pub fn from_edges(sizes: BlockSizes, seed: u64, edges: &[(usize, usize)]) -> Result<Self> {
        let n = sizes.total();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= v || v >= n {
                return Err(Error::invalid(format!("bad edge ({u}, {v}) for N = {n}")));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        let mut offsets = vec![0];
        let mut neighbors = Vec::new();
        for mut row in adj {
            row.sort_unstable();
            let before = row.len();
            row.dedup();
            if row.len() != before {
                return Err(Error::invalid("duplicate edge"));
            }
            neighbors.extend(row);
            offsets.push(neighbors.len());
        }
        Ok(Self { n_vertices: n, sizes, seed, offsets, neighbors })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn block_sizes(&self) -> &BlockSizes {
        &self.sizes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_vertices).flat_map(move |u| {
            self.neighbors(u).iter().filter(move |&&v| v as usize > u).map(move |&v| (u, v as usize))
        })
    }

    pub fn block_assignment(&self) -> Vec<usize> {
        self.sizes.assignment()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_vertices, self.n_vertices);
        for (u, v) in self.edges() {
            m[(u, v)] = 1.0;
            m[(v, u)] = 1.0;
        }
        m
    }

    /// Number of edges between blocks `i` and `j` and the number of vertex
    /// pairs they could occupy.
    pub fn block_edge_count(&self, i: usize, j: usize) -> (usize, usize) {
        let off = self.sizes.offsets();
        let k = self.sizes.as_slice();
        let mut count = 0;
        for u in off[i]..off[i + 1] {
            count += self.neighbors(u)
                .iter()
                .filter(|&&v| {
                    let v = v as usize;
                    v >= off[j] && v < off[j + 1] && (i != j || v > u)
                })
                .count();
        }
        let pairs = if i == j { k[i] * (k[i] - 1) / 2 } else { k[i] * k[j] };
        (count, pairs)
    }
}

impl SymmetricOperator for SampledGraph {
    fn dim(&self) -> usize {
        self.n_vertices
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(u, yu)| {
            *yu = self.neighbors(u).iter().map(|&v| x[v as usize]).sum();
        });
    }
}
