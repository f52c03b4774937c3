//! The SBM-driven Fourier transform.
//!
//! The basis is computed from the `n×n` matrix `A_μ`: its nonzero
//! eigenvectors `U₀` are lifted to `U = V U₀`, whose columns are
//! eigenvectors of the model matrix `W` with eigenvalues `N λ`. A signal
//! `x ∈ ℂᴺ` decomposes as
//!
//! ```text
//! x̂(λ) = Σ_{i : λ_i = λ} ⟨x, U_i⟩ U_i,      x̂(0) = x − Σ_{λ≠0} x̂(λ).
//! ```

mod cayley;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sbm_model::{lift_isometric, SbmSpec};
use crate::spectral::{
    group_eigenvalues, spectral_gap, symmetric_eigendecomposition, ResolvedTolerances, Spectrum, SymmetricOperator,
    Tolerances,
};
use crate::Signal;

pub use cayley::{
    cayley_uniform_basis, general_cayley_basis, mtilde_system, one_large_block_eigenvectors,
    transferred_character_basis, GeneralCayleyBasis, MTildeSystem, OneLargeBlock, TransferredBasis,
};

/// Nonzero eigenvalues sharing one eigenspace of `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisGroup {
    /// Eigenvalue of `A_μ` (mean over the cluster).
    pub value: f64,
    /// Columns of the basis spanning the eigenspace.
    pub columns: Vec<usize>,
    /// Distance to the nearest other nonzero group, `+∞` if there is none.
    pub gap: f64,
}

/// Orthonormal eigenbasis of the range of `W`.
#[derive(Debug, Clone)]
pub struct SbmFourierBasis {
    spec: SbmSpec,
    tolerances: ResolvedTolerances,
    eigvals: Vec<f64>,
    u0: DMatrix<f64>,
    lifted: DMatrix<f64>,
    groups: Vec<BasisGroup>,
}

impl SbmFourierBasis {
    /// Decomposes `A_μ`, drops the kernel and lifts the rest through `V`.
    pub fn new(spec: &SbmSpec, tol: &Tolerances) -> Result<Self> {
        let a_mu = spec.weighted_probability_matrix();
        let spectrum = symmetric_eigendecomposition(&a_mu, tol)?;
        let norm = spectrum.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let resolved = tol.resolve(spec.n_blocks(), norm)?;
        let keep = spectrum.nonzero();
        let eigvals: Vec<f64> = keep.iter().map(|&i| spectrum.values[i]).collect();
        let cols: Vec<_> = keep.iter().map(|&i| spectrum.vectors.column(i)).collect();
        let u0 = if cols.is_empty() { DMatrix::zeros(spec.n_blocks(), 0) } else { DMatrix::from_columns(&cols) };
        Self::from_eigenvectors(spec, resolved, eigvals, u0)
    }

    /// Builds a basis from given eigenpairs of `A_μ` (values in decreasing
    /// order, orthonormal columns). The pairs are verified against `A_μ`.
    pub fn from_eigenvectors(
        spec: &SbmSpec,
        tolerances: ResolvedTolerances,
        eigvals: Vec<f64>,
        u0: DMatrix<f64>,
    ) -> Result<Self> {
        let n = spec.n_blocks();
        if u0.nrows() != n || u0.ncols() != eigvals.len() {
            return Err(Error::DimensionMismatch { expected: n, got: u0.nrows() });
        }
        if eigvals.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("eigenvalues must be in decreasing order"));
        }
        let gram = u0.tr_mul(&u0);
        let ortho = (gram - DMatrix::identity(eigvals.len(), eigvals.len())).amax();
        if ortho > 1e-10 {
            return Err(Error::Residual(format!("basis is not orthonormal (deviation {ortho:e})")));
        }
        let a_mu = spec.weighted_probability_matrix();
        for (j, &lambda) in eigvals.iter().enumerate() {
            let r = (&a_mu * u0.column(j) - u0.column(j) * lambda).norm();
            if r > tolerances.residual_tol.max(1e3 * f64::EPSILON) {
                return Err(Error::Residual(format!("A_μ eigenpair {j} has residual {r:e}")));
            }
        }

        let sizes = spec.block_sizes();
        let mut lifted = DMatrix::zeros(spec.n_vertices(), eigvals.len());
        for j in 0..eigvals.len() {
            lifted.set_column(j, &lift_isometric(sizes, &u0.column(j).into_owned())?);
        }

        let spectrum = Spectrum {
            values: eigvals.clone(),
            vectors: u0.clone(),
            residuals: vec![0.0; eigvals.len()],
            zero_tol: tolerances.zero_tol,
        };
        let groups = group_eigenvalues(&spectrum, tolerances.group_tol)
            .into_iter()
            .map(|g| BasisGroup { value: g.value, columns: g.indices, gap: g.gap })
            .collect();

        let basis = Self { spec: spec.clone(), tolerances, eigvals, u0, lifted, groups };
        basis.verify_lifted()?;
        Ok(basis)
    }

    fn verify_lifted(&self) -> Result<()> {
        let op = self.spec.model_operator();
        let big_n = self.spec.n_vertices() as f64;
        let mut y = vec![0.0; self.spec.n_vertices()];
        for (j, &lambda) in self.eigvals.iter().enumerate() {
            let col = self.lifted.column(j);
            op.apply(col.as_slice(), &mut y);
            let r = y.iter().zip(col.iter()).map(|(a, b)| (a - big_n * lambda * b).powi(2)).sum::<f64>().sqrt();
            if r > 1e-8 * big_n {
                return Err(Error::Residual(format!("lifted eigenvector {j} has W residual {r:e}")));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &SbmSpec {
        &self.spec
    }

    pub fn tolerances(&self) -> &ResolvedTolerances {
        &self.tolerances
    }

    /// `r = rank(A_μ)`.
    pub fn rank(&self) -> usize {
        self.eigvals.len()
    }

    /// Nonzero eigenvalues of `A_μ`, decreasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigvals
    }

    /// Nonzero eigenvalues of `W`, i.e. `N λ`.
    pub fn w_eigenvalues(&self) -> Vec<f64> {
        let big_n = self.spec.n_vertices() as f64;
        self.eigvals.iter().map(|l| l * big_n).collect()
    }

    /// `U₀`, the `n×r` eigenvectors of `A_μ`.
    pub fn u0(&self) -> &DMatrix<f64> {
        &self.u0
    }

    /// `U = V U₀`, the `N×r` eigenvectors of `W`.
    pub fn lifted(&self) -> &DMatrix<f64> {
        &self.lifted
    }

    pub fn groups(&self) -> &[BasisGroup] {
        &self.groups
    }

    /// Orthonormal columns spanning the eigenspace of `groups()[g]`.
    pub fn group_basis(&self, g: usize) -> DMatrix<f64> {
        let cols: Vec<_> = self.groups[g].columns.iter().map(|&c| self.lifted.column(c)).collect();
        DMatrix::from_columns(&cols)
    }

    /// Group containing basis column `column`.
    pub fn group_of(&self, column: usize) -> usize {
        self.groups.iter().position(|g| g.columns.contains(&column)).expect("every column belongs to a group")
    }

    /// Whether every nonzero eigenvalue is simple at the grouping tolerance.
    pub fn all_simple(&self) -> bool {
        self.groups.iter().all(|g| g.columns.len() == 1)
    }

    /// Columns ordered by decreasing `|λ|`, positive first on ties.
    pub fn by_magnitude(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.rank()).collect();
        idx.sort_by(|&a, &b| {
            let (x, y) = (self.eigvals[a], self.eigvals[b]);
            y.abs().total_cmp(&x.abs()).then(y.total_cmp(&x)).then(a.cmp(&b))
        });
        idx
    }

    /// `γ(λ)` among the nonzero eigenvalues of `A_μ`.
    pub fn gap(&self, lambda: f64) -> f64 {
        spectral_gap(&self.eigvals, lambda, self.tolerances.group_tol)
    }

    pub fn transform(&self, x: &Signal) -> Result<FourierResult> {
        let big_n = self.spec.n_vertices();
        if x.len() != big_n {
            return Err(Error::DimensionMismatch { expected: big_n, got: x.len() });
        }
        let re = x.map(|z| z.re);
        let im = x.map(|z| z.im);
        let cre = self.lifted.tr_mul(&re);
        let cim = self.lifted.tr_mul(&im);
        let coeffs: Vec<Complex64> = cre.iter().zip(cim.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect();

        let mut zero = x.clone();
        let mut projections = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let mut p = DVector::<Complex64>::zeros(big_n);
            for &c in &g.columns {
                let col = self.lifted.column(c);
                for (pu, &uu) in p.iter_mut().zip(col.iter()) {
                    *pu += coeffs[c] * uu;
                }
            }
            zero -= &p;
            projections.push(Projection { eigenvalue: g.value, w_eigenvalue: g.value * big_n as f64, vector: p });
        }
        let coefficients = self.all_simple().then_some(coeffs);
        Ok(FourierResult { projections, zero_component: zero, coefficients })
    }

    pub fn transform_real(&self, x: &DVector<f64>) -> Result<FourierResult> {
        self.transform(&x.map(Complex64::from))
    }
}

/// `x̂(λ)` for one distinct nonzero eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Eigenvalue of `A_μ`.
    pub eigenvalue: f64,
    /// Eigenvalue of `W`.
    pub w_eigenvalue: f64,
    pub vector: Signal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierResult {
    /// One entry per basis group, in the basis' group order.
    pub projections: Vec<Projection>,
    /// `x̂(0)`, the component in the kernel of `W`.
    pub zero_component: Signal,
    /// `⟨x, U_i⟩` per basis column; present only when every nonzero eigenvalue is simple.
    pub coefficients: Option<Vec<Complex64>>,
}

impl FourierResult {
    pub fn zero_norm(&self) -> f64 {
        self.zero_component.norm()
    }

    /// `‖x̂(0)‖² + Σ ‖x̂(λ)‖²`.
    pub fn energy(&self) -> f64 {
        self.zero_component.norm_squared() + self.projections.iter().map(|p| p.vector.norm_squared()).sum::<f64>()
    }
}

/// `x = x̂(0) + Σ_λ x̂(λ)`.
pub fn inverse_transform(result: &FourierResult) -> Signal {
    result.projections.iter().fold(result.zero_component.clone(), |acc, p| acc + &p.vector)
}

/// Graph Fourier coefficients `⟨x, φ_i⟩` for the eigenvectors at `positions`
/// of an (instance) adjacency spectrum.
pub fn graph_fourier_transform(spectrum: &Spectrum, x: &Signal, positions: &[usize]) -> Result<Vec<Complex64>> {
    if x.len() != spectrum.dim() {
        return Err(Error::DimensionMismatch { expected: spectrum.dim(), got: x.len() });
    }
    positions
        .iter()
        .map(|&i| {
            if i >= spectrum.len() {
                return Err(Error::invalid(format!(
                    "eigenvector {i} requested but only {} were computed",
                    spectrum.len()
                )));
            }
            let v = spectrum.vectors.column(i);
            Ok(x.iter().zip(v.iter()).map(|(z, &vi)| z * vi).sum())
        })
        .collect()
}

/// The step function `f_x(t) = √N x_j` on `[(j−1)/N, j/N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSignal {
    /// Function values, already scaled by `√N`.
    pub values: Vec<Complex64>,
}

impl StepSignal {
    pub fn resolution(&self) -> usize {
        self.values.len()
    }

    pub fn l2_norm(&self) -> f64 {
        step_inner_product(self, self).re.max(0.0).sqrt()
    }
}

pub fn step_embed(x: &Signal) -> StepSignal {
    let s = (x.len() as f64).sqrt();
    StepSignal { values: x.iter().map(|z| z * s).collect() }
}

/// `∫₀¹ f(t) conj(g(t)) dt`, integrating exactly over the common refinement
/// of both partitions. Breakpoints are compared as integers on the grid of
/// spacing `1/(N M)`.
pub fn step_inner_product(f: &StepSignal, g: &StepSignal) -> Complex64 {
    let (n, m) = (f.resolution() as u128, g.resolution() as u128);
    if n == 0 || m == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let total = n * m;
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos: u128 = 0;
    let mut acc = Complex64::new(0.0, 0.0);
    while pos < total {
        let end_f = (i as u128 + 1) * m;
        let end_g = (j as u128 + 1) * n;
        let end = end_f.min(end_g);
        let len = (end - pos) as f64 / total as f64;
        acc += f.values[i] * g.values[j].conj() * len;
        pos = end;
        if end == end_f {
            i += 1;
        }
        if end == end_g {
            j += 1;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, rng: &mut ChaCha8Rng) -> Signal {
        DVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn z5_spec() -> SbmSpec {
        let row = [0.2, 0.8, 0.2, 0.2, 0.8];
        let a = DMatrix::from_fn(5, 5, |i, j| row[(j + 5 - i) % 5]);
        SbmSpec::new(a, vec![1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0], 6000).unwrap()
    }

    #[test]
    fn table1_model_row() {
        let basis = SbmFourierBasis::new(&z5_spec(), &Tolerances::default()).unwrap();
        let w = basis.w_eigenvalues();
        let order = basis.by_magnitude();
        let got: Vec<f64> = order.iter().map(|&i| w[i]).collect();
        let expected = [2622.1, -1290.3, -970.82, 468.1, 370.8];
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() <= 0.1, "{g} vs {e}");
        }
    }

    #[test]
    fn constant_matrix_basis() {
        let spec = SbmSpec::new(DMatrix::from_element(3, 3, 0.4), vec![1.0 / 3.0; 3], 12).unwrap();
        let basis = SbmFourierBasis::new(&spec, &Tolerances::default()).unwrap();
        assert_eq!(basis.rank(), 1);
        assert_abs_diff_eq!(basis.w_eigenvalues()[0], 0.4 * 12.0, epsilon = 1e-12);
        for u in basis.lifted().column(0).iter() {
            assert_abs_diff_eq!(*u, 1.0 / 12f64.sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn star_graph_basis() {
        let spec = SbmSpec::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), vec![0.75, 0.25], 4).unwrap();
        let basis = SbmFourierBasis::new(&spec, &Tolerances::default()).unwrap();
        let w = spec.model_matrix().unwrap();
        for (j, lambda) in basis.w_eigenvalues().iter().enumerate() {
            let v = basis.lifted().column(j);
            assert!((&w * v - v * *lambda).norm() < 1e-12);
        }
    }

    #[test]
    fn transform_of_basis_vector() {
        let basis = SbmFourierBasis::new(&z5_spec(), &Tolerances::default()).unwrap();
        let x = basis.lifted().column(0).map(Complex64::from);
        let res = basis.transform(&x).unwrap();
        assert!((&res.projections[0].vector - &x).camax() < 1e-12);
        for p in &res.projections[1..] {
            assert!(p.vector.camax() < 1e-12);
        }
        assert!(res.zero_norm() < 1e-12);
        assert!(res.coefficients.is_some());
    }

    #[test]
    fn kernel_signal_goes_to_zero_component() {
        let spec = SbmSpec::from_block_sizes(DMatrix::from_element(2, 2, 0.5), vec![3, 2]).unwrap();
        let basis = SbmFourierBasis::new(&spec, &Tolerances::default()).unwrap();
        // orthogonal to block indicators
        let x = DVector::from_vec(vec![1.0, -1.0, 0.0, 2.0, -2.0]).map(Complex64::from);
        let res = basis.transform(&x).unwrap();
        assert!((&res.zero_component - &x).camax() < 1e-14);
    }

    #[test]
    fn inverse_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let spec = SbmSpec::new(z5_spec().a().clone(), vec![0.3, 0.1, 0.2, 0.25, 0.15], 60).unwrap();
        let basis = SbmFourierBasis::new(&spec, &Tolerances::default()).unwrap();
        for _ in 0..20 {
            let x = random_signal(60, &mut rng);
            let res = basis.transform(&x).unwrap();
            assert!((inverse_transform(&res) - &x).camax() < 1e-10);
            assert_abs_diff_eq!(res.energy(), x.norm_squared(), epsilon = 1e-10);
        }
    }

    #[test]
    fn dimension_checks() {
        let basis = SbmFourierBasis::new(&z5_spec(), &Tolerances::default()).unwrap();
        assert!(basis.transform(&DVector::zeros(10)).is_err());
    }

    #[test]
    fn graph_transform() {
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let sp = symmetric_eigendecomposition(&s, &Tolerances::default()).unwrap();
        let x = sp.vector(1).map(Complex64::from);
        let c = graph_fourier_transform(&sp, &x, &[0, 1, 2]).unwrap();
        assert!(c[0].norm() < 1e-14 && c[2].norm() < 1e-14);
        assert_abs_diff_eq!(c[1].re, 1.0, epsilon = 1e-14);
        let zero = graph_fourier_transform(&sp, &DVector::zeros(3), &[0, 1, 2]).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
        assert!(graph_fourier_transform(&sp, &x, &[3]).is_err());
    }

    #[test]
    fn step_embedding() {
        let f = step_embed(&DVector::from_vec(vec![Complex64::from(1.0), Complex64::from(0.0)]));
        assert_abs_diff_eq!(f.values[0].re, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.l2_norm(), 1.0, epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_signal(7, &mut rng);
        let y = random_signal(7, &mut rng);
        let ip = step_inner_product(&step_embed(&x), &step_embed(&y));
        let direct: Complex64 = x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum();
        assert_abs_diff_eq!((ip - direct).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(step_embed(&x).l2_norm(), x.norm(), epsilon = 1e-14);

        // f ≡ 1 at two resolutions
        let one2 = StepSignal { values: vec![Complex64::from(1.0); 2] };
        let one3 = StepSignal { values: vec![Complex64::from(1.0); 3] };
        assert_abs_diff_eq!(step_inner_product(&one2, &one3).re, 1.0, epsilon = 1e-15);
        // [0,1/2) vs [1/3,2/3): overlap 1/6
        let a = StepSignal { values: vec![Complex64::from(1.0), Complex64::from(0.0)] };
        let b = StepSignal { values: vec![Complex64::from(0.0), Complex64::from(1.0), Complex64::from(0.0)] };
        assert_abs_diff_eq!(step_inner_product(&a, &b).re, 1.0 / 6.0, epsilon = 1e-15);
    }
}
