//! Fourier bases for SBMs whose probability matrix is a Cayley matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::SbmFourierBasis;
use crate::error::{Error, Result};
use crate::group_harmonics::{
    cayley_eigenvalues, cayley_matrix, real_eigenpair_basis, AbelianGroup, ConnectionFunction, RealCharacterBasis,
};
use crate::sbm_model::{block_sums, lift_isometric, SbmSpec};
use crate::spectral::Tolerances;

fn check_order(group: &AbelianGroup, len: usize) -> Result<()> {
    if group.order() != len {
        return Err(Error::DimensionMismatch { expected: group.order(), got: len });
    }
    Ok(())
}

/// Character basis for uniform block sizes `N/n`. Eigenvalues of `W` are
/// `(N/n) Σ_x f(x) conj(χ(x))`; conjugate characters are combined into real
/// cosine and sine vectors.
pub fn cayley_uniform_basis(
    group: &AbelianGroup,
    f: &ConnectionFunction,
    n_vertices: usize,
    tol: &Tolerances,
) -> Result<SbmFourierBasis> {
    let n = group.order();
    if n_vertices == 0 || n_vertices % n != 0 {
        return Err(Error::invalid(format!("N = {n_vertices} is not a positive multiple of |G| = {n}")));
    }
    let spec = SbmSpec::from_block_sizes(cayley_matrix(group, f), vec![n_vertices / n; n])?;
    let phi = real_eigenpair_basis(group, f)?;
    let values: Vec<f64> = phi.eigenvalues.iter().map(|l| l / n as f64).collect();
    let norm = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let resolved = tol.resolve(n, norm)?;
    let mut keep: Vec<usize> = (0..n).filter(|&i| values[i].abs() > resolved.zero_tol).collect();
    keep.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let eigvals = keep.iter().map(|&i| values[i]).collect();
    let cols: Vec<_> = keep.iter().map(|&i| phi.vectors.column(i)).collect();
    let u0 = if cols.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&cols) };
    SbmFourierBasis::from_eigenvectors(&spec, resolved, eigvals, u0)
}

/// The reduced system `M̃Γ` in character coordinates, with
/// `M̃_{kℓ} = (1/n) Σ_j μ_j (χ_k⁻¹ χ_ℓ)(g_j)` and `Γ = diag(λ_χ)`.
#[derive(Debug, Clone)]
pub struct MTildeSystem {
    pub mu: Vec<f64>,
    pub mtilde: DMatrix<Complex64>,
    /// Cayley eigenvalues in character order.
    pub gamma: Vec<f64>,
    /// `M̃Γ`.
    pub product: DMatrix<Complex64>,
}

pub fn mtilde_system(group: &AbelianGroup, f: &ConnectionFunction, mu: &[f64]) -> Result<MTildeSystem> {
    let n = group.order();
    check_order(group, mu.len())?;
    let chars = group.character_matrix() * Complex64::from((n as f64).sqrt());
    let mut mtilde = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let s: Complex64 = (0..n).map(|j| chars[(j, k)].conj() * chars[(j, l)] * mu[j]).sum();
            mtilde[(k, l)] = s / n as f64;
        }
    }
    let gamma = cayley_eigenvalues(group, f)?;
    let g = DMatrix::from_diagonal(&DVector::from_iterator(n, gamma.iter().map(|&x| Complex64::from(x))));
    let product = &mtilde * g;
    Ok(MTildeSystem { mu: mu.to_vec(), mtilde, gamma, product })
}

impl MTildeSystem {
    /// `max |M̃ − U* M U|` with `U` the normalized character matrix.
    pub fn unitary_form_deviation(&self, group: &AbelianGroup) -> f64 {
        let u = group.character_matrix();
        let m = DMatrix::from_diagonal(&DVector::from_iterator(self.mu.len(), self.mu.iter().map(|&x| Complex64::from(x))));
        (u.adjoint() * m * u - &self.mtilde).camax()
    }

    /// `max |M̃_{kℓ} − M̃_{1,ι(χ_k⁻¹χ_ℓ)}|`.
    pub fn symmetry_deviation(&self, group: &AbelianGroup) -> f64 {
        let chars = group.characters();
        let mut worst = 0.0f64;
        for ck in &chars {
            let inv = group.character_inverse(ck);
            for cl in &chars {
                let idx = group.character_product(&inv, cl).index;
                worst = worst.max((self.mtilde[(ck.index, cl.index)] - self.mtilde[(0, idx)]).norm());
            }
        }
        worst
    }

    /// `max |M̃ − M̃*|`.
    pub fn hermitian_deviation(&self) -> f64 {
        (&self.mtilde - self.mtilde.adjoint()).camax()
    }

    /// Smallest eigenvalue of the Hermitian part of `M̃`, computed through the
    /// real symmetric embedding `[[Re, −Im], [Im, Re]]`.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.mtilde.nrows();
        let h = (&self.mtilde + self.mtilde.adjoint()) * Complex64::from(0.5);
        let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = h[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        nalgebra::SymmetricEigen::new(big).eigenvalues.min()
    }

    /// `(M̃Γ)_{kℓ} = (1/n) (𝓕f)(χ_ℓ) ⟨χ_ℓ, χ_k⟩_{ℓ²(G, μ)}` with `𝓕f` summed
    /// directly from the connection function.
    pub fn weighted_form(&self, group: &AbelianGroup, f: &ConnectionFunction) -> DMatrix<Complex64> {
        let n = group.order();
        let chars = group.character_matrix() * Complex64::from((n as f64).sqrt());
        let ft: Vec<Complex64> =
            (0..n).map(|l| (0..n).map(|x| chars[(x, l)].conj() * f.value(x)).sum()).collect();
        DMatrix::from_fn(n, n, |k, l| {
            let ip: Complex64 = (0..n).map(|j| chars[(j, l)] * chars[(j, k)].conj() * self.mu[j]).sum();
            ft[l] * ip / n as f64
        })
    }

    /// `‖M̃Γ z − λ z‖`.
    pub fn residual(&self, z: &DVector<Complex64>, lambda: f64) -> f64 {
        (&self.product * z - z * Complex64::from(lambda)).norm()
    }
}

/// An SBM basis together with its character coordinates
/// `z = (1/√N) U* Dᵀ y` for every basis vector `y`.
#[derive(Debug, Clone)]
pub struct GeneralCayleyBasis {
    pub basis: SbmFourierBasis,
    pub system: MTildeSystem,
    /// Column `j` holds the coordinates of basis column `j`.
    pub z: DMatrix<Complex64>,
    /// `‖M̃Γ z_j − λ_j z_j‖`.
    pub residuals: Vec<f64>,
}

/// Basis of `SBM(A, μ, N)` for a Cayley matrix `A`, verified against the
/// reduced system `M̃Γ z = (λ/N) z`.
pub fn general_cayley_basis(
    group: &AbelianGroup,
    f: &ConnectionFunction,
    mu: Vec<f64>,
    n_vertices: usize,
    tol: &Tolerances,
) -> Result<GeneralCayleyBasis> {
    check_order(group, mu.len())?;
    let spec = SbmSpec::new(cayley_matrix(group, f), mu, n_vertices)?;
    let basis = SbmFourierBasis::new(&spec, tol)?;
    let system = mtilde_system(group, f, spec.measure().as_slice())?;
    let u_adj = group.character_matrix().adjoint();
    let scale = Complex64::from(1.0 / (n_vertices as f64).sqrt());
    let mut z = DMatrix::<Complex64>::zeros(group.order(), basis.rank());
    let mut residuals = Vec::with_capacity(basis.rank());
    for (j, &lambda) in basis.eigenvalues().iter().enumerate() {
        let y = basis.lifted().column(j).map(Complex64::from);
        let zj = &u_adj * block_sums(spec.block_sizes(), &y)? * scale;
        let r = system.residual(&zj, lambda);
        if r > 1e-8 {
            return Err(Error::Residual(format!("M̃Γ residual {r:e} for basis vector {j}")));
        }
        residuals.push(r);
        z.set_column(j, &zj);
    }
    Ok(GeneralCayleyBasis { basis, system, z, residuals })
}

/// Eigenvectors of `W` for the measure with one large block at the identity.
#[derive(Debug, Clone)]
pub struct OneLargeBlock {
    pub spec: SbmSpec,
    /// Shared Cayley eigenvalue `γ` of the characters.
    pub gamma: f64,
    /// `N τ γ`.
    pub eigenvalue: f64,
    /// `m − 1` orthonormal columns.
    pub vectors: DMatrix<Complex64>,
    /// `‖W y − N τ γ y‖` per column.
    pub residuals: Vec<f64>,
}

/// For `μ(e) = 1 − (n−1)τ` and `μ(g) = τ` otherwise, and characters
/// `α_1, …, α_m` sharing the Cayley eigenvalue `γ`, the vectors
/// `V((i−1)χ_{α_i} − Σ_{j<i} χ_{α_j})`, `1 < i ≤ m`, are orthogonal
/// eigenvectors of `W` with eigenvalue `N τ γ`.
pub fn one_large_block_eigenvectors(
    group: &AbelianGroup,
    f: &ConnectionFunction,
    tau: f64,
    n_vertices: usize,
    characters: &[usize],
) -> Result<OneLargeBlock> {
    let n = group.order();
    let m = characters.len();
    if m < 2 {
        return Err(Error::invalid("an eigenvalue group of multiplicity at least 2 is required"));
    }
    if !(tau > 0.0 && tau < 1.0 / n as f64) {
        return Err(Error::invalid(format!("τ = {tau} must lie in (0, 1/{n})")));
    }
    let t = tau * n_vertices as f64;
    if (t - t.round()).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::invalid(format!("τN = {t} is not an integer")));
    }
    let t = t.round() as usize;
    let big = n_vertices
        .checked_sub((n - 1) * t)
        .filter(|&b| b > 0)
        .ok_or_else(|| Error::invalid("τ leaves no vertices for the identity block"))?;
    let mut sizes = vec![t; n];
    sizes[0] = big;
    let spec = SbmSpec::from_block_sizes(cayley_matrix(group, f), sizes)?;

    let eig = cayley_eigenvalues(group, f)?;
    let gamma = eig[characters[0]];
    for &c in characters {
        if c >= n {
            return Err(Error::invalid(format!("character index {c} out of range")));
        }
        if (eig[c] - gamma).abs() > 1e-10 * gamma.abs().max(1.0) {
            return Err(Error::invalid(format!("characters {} and {c} have different eigenvalues", characters[0])));
        }
    }

    let chi: Vec<DVector<Complex64>> = characters.iter().map(|&c| group.character_vector(c)).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(n_vertices, m - 1);
    for i in 1..m {
        let mut x = &chi[i] * Complex64::from(i as f64);
        for c in &chi[..i] {
            x -= c;
        }
        let y = lift_isometric(spec.block_sizes(), &x)?;
        let norm = y.norm();
        vectors.set_column(i - 1, &(y / Complex64::from(norm)));
    }

    let big_n = n_vertices as f64;
    let eigenvalue = big_n * (t as f64 / big_n) * gamma;
    let op = spec.model_operator();
    let mut residuals = Vec::with_capacity(m - 1);
    for j in 0..m - 1 {
        let y = vectors.column(j).into_owned();
        let r = (op.apply_vec(&y)? - &y * Complex64::from(eigenvalue)).norm();
        if r > 1e-8 * big_n {
            return Err(Error::Residual(format!("one-large-block vector {j} has residual {r:e}")));
        }
        residuals.push(r);
    }
    Ok(OneLargeBlock { spec, gamma, eigenvalue, vectors, residuals })
}

/// The transferred character basis `ξ_i = V φ_i`.
#[derive(Debug, Clone)]
pub struct TransferredBasis {
    pub spec: SbmSpec,
    pub phi: RealCharacterBasis,
    /// `N×n`, column `i` is `ξ_i`.
    pub xi: DMatrix<f64>,
}

pub fn transferred_character_basis(
    group: &AbelianGroup,
    f: &ConnectionFunction,
    mu: Vec<f64>,
    n_vertices: usize,
) -> Result<TransferredBasis> {
    check_order(group, mu.len())?;
    let spec = SbmSpec::new(cayley_matrix(group, f), mu, n_vertices)?;
    TransferredBasis::for_spec(group, f, spec)
}

impl TransferredBasis {
    /// Uses the block sizes of an existing spec, whose probability matrix must
    /// be the Cayley matrix of `(group, f)`.
    pub fn for_spec(group: &AbelianGroup, f: &ConnectionFunction, spec: SbmSpec) -> Result<Self> {
        check_order(group, spec.n_blocks())?;
        if (spec.a() - cayley_matrix(group, f)).amax() > 1e-15 {
            return Err(Error::invalid("spec probability matrix is not the Cayley matrix of the connection function"));
        }
        let phi = real_eigenpair_basis(group, f)?;
        let mut xi = DMatrix::zeros(spec.n_vertices(), group.order());
        for i in 0..group.order() {
            xi.set_column(i, &lift_isometric(spec.block_sizes(), &phi.vectors.column(i).into_owned())?);
        }
        Ok(Self { spec, phi, xi })
    }

    /// Agreement between `ξ_i` and the `i`-th basis vector `y_i` of `basis`
    /// (ordered by decreasing `|λ|`): the norm of the projection of `ξ_i` onto
    /// the eigenspace containing `y_i`. For a simple eigenvalue this is
    /// `|⟨ξ_i, y_i⟩|`.
    pub fn agreement(&self, basis: &SbmFourierBasis) -> Result<Vec<f64>> {
        if basis.spec().block_sizes() != self.spec.block_sizes() {
            return Err(Error::invalid("basis and transferred basis come from different block sizes"));
        }
        let order = basis.by_magnitude();
        Ok(order
            .iter()
            .take(self.xi.ncols())
            .enumerate()
            .map(|(i, &col)| {
                let g = basis.group_basis(basis.group_of(col));
                g.tr_mul(&self.xi.column(i)).norm().min(1.0)
            })
            .collect())
    }

    /// Like [`agreement`](Self::agreement), but compares `ξ_i` with every
    /// `y_j` whose position `j` lies in the Cayley eigenspace of `φ_i`. The
    /// result does not depend on the choice of real basis inside a repeated
    /// Cayley eigenvalue.
    pub fn subspace_agreement(&self, basis: &SbmFourierBasis) -> Result<Vec<f64>> {
        if basis.spec().block_sizes() != self.spec.block_sizes() {
            return Err(Error::invalid("basis and transferred basis come from different block sizes"));
        }
        let order = basis.by_magnitude();
        let m = self.xi.ncols().min(order.len());
        let ev = &self.phi.eigenvalues;
        let scale = ev.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        Ok((0..m)
            .map(|i| {
                let mut cols: Vec<usize> = Vec::new();
                for (j, &col) in order.iter().enumerate().take(m) {
                    if (ev[j] - ev[i]).abs() <= 1e-10 * scale {
                        for &c in &basis.groups()[basis.group_of(col)].columns {
                            if !cols.contains(&c) {
                                cols.push(c);
                            }
                        }
                    }
                }
                let b = DMatrix::from_columns(&cols.iter().map(|&c| basis.lifted().column(c)).collect::<Vec<_>>());
                b.tr_mul(&self.xi.column(i)).norm().min(1.0)
            })
            .collect())
    }
}
