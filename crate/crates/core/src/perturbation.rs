//! Stability of the SBM Fourier basis under changes of the block sizes.
//!
//! For `μ′_i = μ_i (1 + ε_i)` with `|ε_i| ≤ ε` and `Σ μ_i ε_i = 0`, the
//! projection onto the `λ`-eigenspace moves by at most
//!
//! ```text
//! 2^{5/2} √d ‖A_μ‖ / γ(λ) · nε + (2√3 / √μ_min) √(nε)
//! ```
//!
//! per unit signal, and the isometries satisfy `‖V − V′‖ ≤ √(3n/μ_min) √ε`.
//! The subspace estimate underneath is the Davis–Kahan bound
//! `‖P_E − P_Ẽ‖_F ≤ 2^{3/2} min{√d ‖ΔA‖, ‖ΔA‖_F} / gap`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sbm_model::{isometry, BlockMeasure, BlockSizes, SbmSpec};
use crate::spectral::{projection_distance, spectral_gap, symmetric_eigendecomposition, Spectrum, Tolerances};

/// A block measure and its relative perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurePerturbation {
    pub mu: Vec<f64>,
    pub eps_vec: Vec<f64>,
    /// `max |ε_i|`.
    pub eps: f64,
    pub mu_prime: Vec<f64>,
}

/// Independent seed for sub-task `(a, b)` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((a << 32) ^ b);
    rng.next_u64()
}

/// Checks `|ε_i| ≤ 1`, `Σ μ_i ε_i = 0` and `μ′_i > 0`.
pub fn perturb_measure_explicit(mu: &BlockMeasure, eps_vec: Vec<f64>) -> Result<MeasurePerturbation> {
    if eps_vec.len() != mu.len() {
        return Err(Error::DimensionMismatch { expected: mu.len(), got: eps_vec.len() });
    }
    let eps = eps_vec.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    if !(eps <= 1.0) {
        return Err(Error::invalid(format!("relative perturbation {eps} exceeds 1")));
    }
    let drift: f64 = mu.as_slice().iter().zip(&eps_vec).map(|(m, e)| m * e).sum();
    if drift.abs() > 1e-12 {
        return Err(Error::invalid(format!("Σ μ_i ε_i = {drift:e} is not zero")));
    }
    let mu_prime: Vec<f64> = mu.as_slice().iter().zip(&eps_vec).map(|(m, e)| m * (1.0 + e)).collect();
    if mu_prime.iter().any(|&m| m <= 0.0) {
        return Err(Error::invalid("perturbed measure has an empty block"));
    }
    Ok(MeasurePerturbation { mu: mu.as_slice().to_vec(), eps_vec, eps, mu_prime })
}

/// Random perturbation with `max |ε_i| = ε` exactly: uniform draws on
/// `(−1, 1)`, recentered to zero `μ`-mean and rescaled.
pub fn perturb_measure(mu: &BlockMeasure, eps: f64, seed: u64) -> Result<MeasurePerturbation> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("ε = {eps} must lie in (0, 1]")));
    }
    if mu.len() < 2 {
        return Err(Error::invalid("a single block cannot be perturbed with zero mean"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let raw: Vec<f64> = (0..mu.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean: f64 = mu.as_slice().iter().zip(&raw).map(|(m, e)| m * e).sum();
        let centered: Vec<f64> = raw.iter().map(|e| e - mean).collect();
        let peak = centered.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        if peak < 1e-12 {
            continue;
        }
        let mut eps_vec: Vec<f64> = centered.iter().map(|e| e * eps / peak).collect();
        // remove the rounding drift of the rescaling through the largest-weight block
        let drift: f64 = mu.as_slice().iter().zip(&eps_vec).map(|(m, e)| m * e).sum();
        let heavy = (0..mu.len()).max_by(|&a, &b| mu.as_slice()[a].total_cmp(&mu.as_slice()[b])).unwrap();
        eps_vec[heavy] -= drift / mu.as_slice()[heavy];
        if eps_vec.iter().any(|e| e.abs() > eps * (1.0 + 1e-12)) {
            continue;
        }
        return perturb_measure_explicit(mu, eps_vec);
    }
    Err(Error::invalid("could not draw a feasible perturbation"))
}

/// `√(3n/μ_min) · √ε`.
pub fn v_distance_bound(n: usize, mu_min: f64, eps: f64) -> f64 {
    (3.0 * n as f64 / mu_min).sqrt() * eps.sqrt()
}

/// Largest singular value of an `N×n` matrix, via its `n×n` Gram matrix.
fn operator_norm_tall(m: &DMatrix<f64>) -> f64 {
    if m.ncols() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.tr_mul(m)).eigenvalues.max().max(0.0).sqrt()
}

/// `‖V − V′‖_op` for two block-size vectors with the same total.
pub fn empirical_v_distance(k: &BlockSizes, k_prime: &BlockSizes) -> Result<f64> {
    if k.total() != k_prime.total() || k.len() != k_prime.len() {
        return Err(Error::invalid("block sizes must share N and n"));
    }
    Ok(operator_norm_tall(&(isometry(k) - isometry(k_prime))))
}

/// `min{λ_{r−1} − λ, λ − λ_{s+1}}` for the group at positions `r..=s`
/// (0-based) of eigenvalues sorted decreasingly; missing neighbours count as
/// `±∞`.
pub fn davis_kahan_gap(values: &[f64], r: usize, s: usize) -> Result<f64> {
    if r > s || s >= values.len() {
        return Err(Error::invalid(format!("bad eigenvalue range {r}..={s}")));
    }
    let above = if r == 0 { f64::INFINITY } else { values[r - 1] - values[r] };
    let below = if s + 1 == values.len() { f64::INFINITY } else { values[s] - values[s + 1] };
    Ok(above.min(below))
}

/// `2^{3/2} min{√d ‖ΔA‖_op, ‖ΔA‖_F} / gap`.
pub fn davis_kahan_bound(d: usize, delta_op: f64, delta_fro: f64, gap: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::ZeroGap);
    }
    Ok(2f64.powf(1.5) * ((d as f64).sqrt() * delta_op).min(delta_fro) / gap)
}

/// `2^{5/2} √d ‖A_μ‖ / γ · nε + (2√3/√μ_min) √(nε)`.
pub fn theorem45_bound(d: usize, gamma: f64, norm_amu: f64, n: usize, eps: f64, mu_min: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::ZeroGap);
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("ε = {eps} must lie in [0, 1]")));
    }
    let ne = n as f64 * eps;
    Ok(2f64.powf(2.5) * (d as f64).sqrt() * norm_amu / gamma * ne + 2.0 * 3f64.sqrt() / mu_min.sqrt() * ne.sqrt())
}

/// Measured against predicted movement of one eigenspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    /// Eigenvalue of `A_μ`.
    pub lambda: f64,
    pub d: usize,
    pub gamma: f64,
    pub norm_amu: f64,
    pub bound: f64,
    /// `‖P_E − P_E′‖_op`.
    pub empirical_op: f64,
    /// Largest `‖P_E x − P_E′ x‖` over the random unit signals.
    pub empirical_signal: f64,
    pub v_dist: f64,
    pub v_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    /// Realized `max |k′_i / k_i − 1|`.
    pub eps: f64,
    pub block_sizes: Vec<usize>,
    pub perturbed_block_sizes: Vec<usize>,
    pub rows: Vec<ReportRow>,
    /// `‖A_μ′ − A_μ‖_op`.
    pub amu_diff: f64,
    /// `2εn‖A_μ‖_op`.
    pub amu_diff_bound: f64,
}

/// Absolute allowance for eigensolver round-off when comparing measured
/// distances with bounds.
pub const BOUND_SLACK: f64 = 1e-12;

impl ReportRow {
    pub fn within_bounds(&self) -> bool {
        self.empirical_op <= self.bound + BOUND_SLACK
            && self.empirical_signal <= self.bound + BOUND_SLACK
            && self.v_dist <= self.v_bound + BOUND_SLACK
    }
}

impl PerturbationReport {
    /// Whether every measured quantity respects its bound.
    pub fn within_bounds(&self) -> bool {
        self.amu_diff <= self.amu_diff_bound * (1.0 + 1e-12) + 1e-15 && self.rows.iter().all(ReportRow::within_bounds)
    }
}

/// Clusters of nonzero eigenvalues as inclusive position ranges of the full
/// decreasing spectrum.
fn nonzero_ranges(sp: &Spectrum, group_tol: f64) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for i in sp.nonzero() {
        match out.last_mut() {
            Some((_, s)) if *s + 1 == i && (sp.values[*s] - sp.values[i]).abs() <= group_tol => *s = i,
            _ => out.push((i, i)),
        }
    }
    out
}

fn lifted_columns(sizes: &BlockSizes, sp: &Spectrum, r: usize, s: usize) -> DMatrix<f64> {
    isometry(sizes) * sp.vectors.columns(r, s - r + 1)
}

/// Compares the eigenspaces of `spec` with those of the spec whose block
/// sizes round `μ′ N`. Groups are paired by position in the decreasing
/// spectrum; a perturbed cluster that straddles the range boundary is
/// reported as a correspondence error.
pub fn perturbation_trial(
    spec: &SbmSpec,
    pert: &MeasurePerturbation,
    signals: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<PerturbationReport> {
    let n = spec.n_blocks();
    let big_n = spec.n_vertices();
    let perturbed = SbmSpec::new(spec.a().clone(), pert.mu_prime.clone(), big_n)?;
    let (k, kp) = (spec.block_sizes(), perturbed.block_sizes());
    let eps = k
        .as_slice()
        .iter()
        .zip(kp.as_slice())
        .map(|(&a, &b)| (b as f64 / a as f64 - 1.0).abs())
        .fold(0.0, f64::max);
    let mu_min = spec.measure().min();

    let a_mu = spec.weighted_probability_matrix();
    let a_mu_p = perturbed.weighted_probability_matrix();
    let sp = symmetric_eigendecomposition(&a_mu, tol)?;
    let sp_p = symmetric_eigendecomposition(&a_mu_p, tol)?;
    let norm_amu = sp.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let resolved = tol.resolve(n, norm_amu)?;
    let diff = symmetric_eigendecomposition(&(&a_mu_p - &a_mu), &Tolerances::default())?;
    let amu_diff = diff.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let v_dist = empirical_v_distance(k, kp)?;
    let v_bound = v_distance_bound(n, mu_min, eps);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<DVector<f64>> = (0..signals)
        .map(|_| {
            let x = DVector::from_fn(big_n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let nx = x.norm();
            x / nx
        })
        .collect();

    let mut rows = Vec::new();
    for (r, s) in nonzero_ranges(&sp, resolved.group_tol) {
        let straddles = |i: usize, j: usize| (sp_p.values[i] - sp_p.values[j]).abs() <= resolved.group_tol;
        if (r > 0 && straddles(r - 1, r)) || (s + 1 < n && straddles(s, s + 1)) {
            return Err(Error::Correspondence(format!(
                "perturbed eigenvalues at positions {r}..={s} are not separated from their neighbours"
            )));
        }
        let lambda = sp.values[r..=s].iter().sum::<f64>() / (s - r + 1) as f64;
        let d = s - r + 1;
        let gamma = spectral_gap(&sp.values, lambda, resolved.group_tol);
        let bound = theorem45_bound(d, gamma, norm_amu, n, eps, mu_min)?;
        let e = lifted_columns(k, &sp, r, s);
        let ep = lifted_columns(kp, &sp_p, r, s);
        let empirical_op = projection_distance(&e, &ep)?.operator;
        let empirical_signal = xs
            .iter()
            .map(|x| (&e * e.tr_mul(x) - &ep * ep.tr_mul(x)).norm())
            .fold(0.0, f64::max);
        rows.push(ReportRow { lambda, d, gamma, norm_amu, bound, empirical_op, empirical_signal, v_dist, v_bound });
    }

    Ok(PerturbationReport {
        eps,
        block_sizes: k.as_slice().to_vec(),
        perturbed_block_sizes: kp.as_slice().to_vec(),
        rows,
        amu_diff,
        amu_diff_bound: 2.0 * eps * n as f64 * norm_amu,
    })
}

/// One row of a perturbation sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub trial: usize,
    /// Requested `ε`.
    pub epsilon: f64,
    /// Realized `ε` after rounding block sizes.
    pub realized_epsilon: f64,
    #[serde(flatten)]
    pub row: ReportRow,
    pub amu_diff: f64,
    pub amu_diff_bound: f64,
}

/// Runs `trials` random perturbations for every `ε`. Trial `t` of the
/// `e`-th epsilon draws from [`derive_seed`]`(seed, e, t)`, so results do not
/// depend on scheduling. Rows are ordered by `(ε, trial, λ)` position.
pub fn perturbation_sweep(
    spec: &SbmSpec,
    epsilons: &[f64],
    trials: usize,
    signals: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<SweepRow>> {
    let tasks: Vec<(usize, usize)> = (0..epsilons.len()).flat_map(|e| (0..trials).map(move |t| (e, t))).collect();
    let chunks: Vec<Result<Vec<SweepRow>>> = tasks
        .par_iter()
        .map(|&(e, t)| {
            let eps = epsilons[e];
            let trial_seed = derive_seed(seed, e as u64, t as u64);
            let pert = if eps == 0.0 {
                perturb_measure_explicit(spec.measure(), vec![0.0; spec.n_blocks()])?
            } else {
                perturb_measure(spec.measure(), eps, trial_seed)?
            };
            let report = perturbation_trial(spec, &pert, signals, trial_seed ^ 0x9e37_79b9_7f4a_7c15, tol)?;
            Ok(report
                .rows
                .into_iter()
                .map(|row| SweepRow {
                    trial: t,
                    epsilon: eps,
                    realized_epsilon: report.eps,
                    row,
                    amu_diff: report.amu_diff,
                    amu_diff_bound: report.amu_diff_bound,
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Outcome of one Davis–Kahan check on a random symmetric pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DavisKahanTrial {
    pub d: usize,
    pub empirical: f64,
    pub bound: f64,
}

/// Draws a random symmetric `m×m` matrix with a random (possibly repeated)
/// eigenvalue group, perturbs it by a random symmetric matrix of random size
/// and compares `‖P_E − P_Ẽ‖_F` with the Davis–Kahan bound.
pub fn davis_kahan_trial(m: usize, seed: u64) -> Result<DavisKahanTrial> {
    if m < 2 {
        return Err(Error::invalid("need at least a 2×2 matrix"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let mut diag: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let d = rng.random_range(1..=m.min(3));
    let r0 = rng.random_range(0..=m - d);
    diag.sort_by(|a, b| b.total_cmp(a));
    let value = diag[r0];
    for x in diag.iter_mut().skip(r0).take(d) {
        *x = value;
    }
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(diag)) * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let h = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scale = 10f64.powf(rng.random_range(-4.0..0.0));
    let delta = (&h + h.transpose()) * (0.5 * scale);
    let b = &a + &delta;

    let sa = symmetric_eigendecomposition(&a, &Tolerances::default())?;
    let sb = symmetric_eigendecomposition(&b, &Tolerances::default())?;
    // locate the repeated group in the sorted spectrum of A
    let r = sa.values.iter().position(|&v| (v - value).abs() <= 1e-12).unwrap_or(r0);
    let s = r + d - 1;
    let gap = davis_kahan_gap(&sa.values, r, s)?;
    let dsp = symmetric_eigendecomposition(&delta, &Tolerances::default())?;
    let delta_op = dsp.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let bound = davis_kahan_bound(d, delta_op, delta.norm(), gap)?;
    let e = sa.vectors.columns(r, d).into_owned();
    let eb = sb.vectors.columns(r, d).into_owned();
    let empirical = projection_distance(&e, &eb)?.frobenius;
    Ok(DavisKahanTrial { d, empirical, bound })
}
