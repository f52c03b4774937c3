//! Symmetric eigen-decompositions, eigenvalue grouping and subspace distances.
//!
//! Spectra are stored in decreasing order of eigenvalue, which is the signed
//! ordering `λ_1 ≥ λ_2 ≥ … > 0 > … ≥ λ_{-2} ≥ λ_{-1}` with kernel values in
//! the middle.

mod lanczos;

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use lanczos::{top_bottom_eigenpairs, LanczosOptions};

/// A real symmetric linear operator given by its action on vectors.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = S x`. Both slices have length [`dim`](Self::dim).
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        y.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                let col = self.column(j);
                for i in 0..n {
                    y[i] += col[i] * xj;
                }
            }
        }
    }
}

/// Thresholds for kernel detection, eigenvalue grouping and residual checks.
/// `None` selects the default relative to the operator norm `‖S‖` and the
/// dimension `m`.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Default `m · ε_mach · ‖S‖`.
    pub zero_tol: Option<f64>,
    /// Default `1e-8 · ‖S‖`.
    pub group_tol: Option<f64>,
    /// Default `1e-8 · ‖S‖`.
    pub residual_tol: Option<f64>,
}

/// [`Tolerances`] with every value made absolute.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResolvedTolerances {
    pub zero_tol: f64,
    pub group_tol: f64,
    pub residual_tol: f64,
}

impl Tolerances {
    pub fn resolve(&self, dim: usize, norm: f64) -> Result<ResolvedTolerances> {
        let r = ResolvedTolerances {
            zero_tol: self.zero_tol.unwrap_or(dim as f64 * f64::EPSILON * norm),
            group_tol: self.group_tol.unwrap_or(1e-8 * norm),
            residual_tol: self.residual_tol.unwrap_or(1e-8 * norm),
        };
        for (name, v) in [("zero_tol", r.zero_tol), ("group_tol", r.group_tol), ("residual_tol", r.residual_tol)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} = {v} must be finite and nonnegative")));
            }
        }
        Ok(r)
    }
}

/// Eigenpairs sorted by decreasing eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
    /// `‖S v_i − λ_i v_i‖`.
    pub residuals: Vec<f64>,
    /// Eigenvalues with `|λ| ≤ zero_tol` count as kernel.
    pub zero_tol: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_zero(&self, i: usize) -> bool {
        self.values[i].abs() <= self.zero_tol
    }

    pub fn n_plus(&self) -> usize {
        self.values.iter().filter(|&&v| v > self.zero_tol).count()
    }

    pub fn n_minus(&self) -> usize {
        self.values.iter().filter(|&&v| v < -self.zero_tol).count()
    }

    /// Position of the eigenpair with signed index `i`: `1, 2, …` count the
    /// positive eigenvalues from the largest, `-1, -2, …` the negative ones
    /// from the most negative.
    pub fn signed_position(&self, i: isize) -> Option<usize> {
        if i > 0 {
            let i = i as usize;
            (i <= self.n_plus()).then(|| i - 1)
        } else if i < 0 {
            let i = i.unsigned_abs();
            (i <= self.n_minus()).then(|| self.len() - i)
        } else {
            None
        }
    }

    /// Signed index of the eigenpair at `position`, or 0 for kernel values.
    pub fn signed_index(&self, position: usize) -> isize {
        if self.values[position] > self.zero_tol {
            position as isize + 1
        } else if self.values[position] < -self.zero_tol {
            -((self.len() - position) as isize)
        } else {
            0
        }
    }

    /// Positions of the nonzero eigenvalues.
    pub fn nonzero(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_zero(i)).collect()
    }

    /// Positions of the nonzero eigenvalues by decreasing `|λ|`, positive first on ties.
    pub fn by_magnitude(&self) -> Vec<usize> {
        let mut idx = self.nonzero();
        idx.sort_by(|&a, &b| {
            let (x, y) = (self.values[a], self.values[b]);
            y.abs().total_cmp(&x.abs()).then(y.total_cmp(&x)).then(a.cmp(&b))
        });
        idx
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `index,eigenvalue,residual`; kernel rows have index 0.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "eigenvalue", "residual"])?;
        for i in 0..self.len() {
            w.write_record(&[
                self.signed_index(i).to_string(),
                format!("{:.17e}", self.values[i]),
                format!("{:.6e}", self.residuals[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Flips `v` so that its entry of largest magnitude (lowest index on ties) is positive.
pub fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Residuals `‖S v_i − λ_i v_i‖` for every column.
pub fn residuals<S: SymmetricOperator + ?Sized>(s: &S, values: &[f64], vectors: &DMatrix<f64>) -> Vec<f64> {
    let mut y = vec![0.0; s.dim()];
    values
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let v = vectors.column(i);
            s.apply(v.as_slice(), &mut y);
            y.iter().zip(v.iter()).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
        })
        .collect()
}

/// Full eigen-decomposition of a dense symmetric matrix.
///
/// Symmetry is required to `1e-12` relative to the largest entry. The result
/// is sorted by decreasing eigenvalue and every eigenvector is sign
/// canonicalized.
pub fn symmetric_eigendecomposition(s: &DMatrix<f64>, tol: &Tolerances) -> Result<Spectrum> {
    if !s.is_square() {
        return Err(Error::invalid(format!("matrix is {}x{}, not square", s.nrows(), s.ncols())));
    }
    let m = s.nrows();
    let scale = s.amax();
    let asym = (s - s.transpose()).amax();
    if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(asym));
    }
    if m == 0 {
        return Ok(Spectrum { values: vec![], vectors: DMatrix::zeros(0, 0), residuals: vec![], zero_tol: 0.0 });
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(src).iter().copied().collect();
        canonicalize_sign(&mut v);
        vectors.set_column(dst, &DVector::from_vec(v));
    }
    let norm = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let resolved = tol.resolve(m, norm)?;
    let residuals = residuals(&sym, &values, &vectors);
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > resolved.residual_tol.max(1e3 * f64::EPSILON * norm) {
        return Err(Error::Residual(format!("dense eigenpair residual {worst:e}")));
    }
    Ok(Spectrum { values, vectors, residuals, zero_tol: resolved.zero_tol })
}

/// A cluster of numerically equal nonzero eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenGroup {
    /// Mean of the clustered eigenvalues.
    pub value: f64,
    /// Positions in the source spectrum.
    pub indices: Vec<usize>,
    /// Orthonormal columns spanning the eigenspace.
    pub basis: DMatrix<f64>,
    /// Distance to the nearest other group; `+∞` when there is none.
    pub gap: f64,
}

impl EigenGroup {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }
}

/// Clusters the nonzero eigenvalues of `spectrum` transitively: consecutive
/// values closer than `group_tol` share a group. Groups follow the spectrum's
/// decreasing order.
pub fn group_eigenvalues(spectrum: &Spectrum, group_tol: f64) -> Vec<EigenGroup> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut last: Option<f64> = None;
    for i in spectrum.nonzero() {
        let v = spectrum.values[i];
        match (clusters.last_mut(), last) {
            (Some(c), Some(prev)) if (prev - v).abs() <= group_tol => c.push(i),
            _ => clusters.push(vec![i]),
        }
        last = Some(v);
    }
    let reps: Vec<f64> = clusters
        .iter()
        .map(|c| c.iter().map(|&i| spectrum.values[i]).sum::<f64>() / c.len() as f64)
        .collect();
    clusters
        .into_iter()
        .zip(&reps)
        .map(|(indices, &value)| {
            let cols: Vec<_> = indices.iter().map(|&i| spectrum.vectors.column(i)).collect();
            EigenGroup {
                value,
                gap: spectral_gap(&reps, value, 0.0),
                basis: DMatrix::from_columns(&cols),
                indices,
            }
        })
        .collect()
}

/// `γ(λ) = min{|λ − λ_i| : |λ_i − λ| > tol}`, or `+∞` if every value is within `tol`.
pub fn spectral_gap(values: &[f64], lambda: f64, tol: f64) -> f64 {
    values
        .iter()
        .map(|v| (v - lambda).abs())
        .filter(|&d| d > tol)
        .fold(f64::INFINITY, f64::min)
}

/// `Σ ⟨x, φ_i⟩ φ_i` over the orthonormal real columns `φ_i` of `basis`.
pub fn spectral_projection(basis: &DMatrix<f64>, x: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    if basis.nrows() != x.len() {
        return Err(Error::DimensionMismatch { expected: basis.nrows(), got: x.len() });
    }
    let re = x.map(|z| z.re);
    let im = x.map(|z| z.im);
    let pr = basis * (basis.tr_mul(&re));
    let pi = basis * (basis.tr_mul(&im));
    Ok(pr.zip_map(&pi, Complex64::new))
}

/// Real-signal version of [`spectral_projection`].
pub fn spectral_projection_real(basis: &DMatrix<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    if basis.nrows() != x.len() {
        return Err(Error::DimensionMismatch { expected: basis.nrows(), got: x.len() });
    }
    Ok(basis * basis.tr_mul(x))
}

/// Distances between the projections onto two subspaces of equal dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionDistance {
    /// `‖P_A − P_B‖_F = √2 ‖sin Θ‖_F`.
    pub frobenius: f64,
    /// `‖P_A − P_B‖_op`, the sine of the largest principal angle.
    pub operator: f64,
}

/// Distance between the spans of two orthonormal column sets.
pub fn projection_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<ProjectionDistance> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch { expected: a.ncols(), got: b.ncols() });
    }
    if a.ncols() == 0 {
        return Ok(ProjectionDistance { frobenius: 0.0, operator: 0.0 });
    }
    // (I − P_B) A has singular values sin θ_i.
    let r = a - b * b.tr_mul(a);
    let gram = r.tr_mul(&r);
    let top = SymmetricEigen::new(gram).eigenvalues.iter().copied().fold(0.0f64, f64::max);
    Ok(ProjectionDistance { frobenius: std::f64::consts::SQRT_2 * r.norm(), operator: top.max(0.0).sqrt().min(1.0) })
}
