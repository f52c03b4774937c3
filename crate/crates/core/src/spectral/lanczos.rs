//! Thick-restart Lanczos for a few eigenpairs of largest magnitude.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{canonicalize_sign, residuals, symmetric_eigendecomposition, Spectrum, SymmetricOperator, Tolerances};
use crate::error::{Error, Result};

/// Largest `p` accepted by [`top_bottom_eigenpairs`].
pub const MAX_WANTED: usize = 32;

const DENSE_FALLBACK_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOptions {
    /// Absolute residual tolerance; default `1e-8 · ‖S‖`, with `‖S‖`
    /// estimated by the largest Ritz value.
    pub tol: Option<f64>,
    /// Kernel threshold of the returned spectrum; default `m · ε_mach · ‖S‖`.
    pub zero_tol: Option<f64>,
    pub max_matvecs: usize,
    /// Krylov subspace size before a restart; default `max(4p, p + 40)`.
    pub krylov_dim: Option<usize>,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: None, zero_tol: None, max_matvecs: 10_000, krylov_dim: None, seed: 0x5eed_1a9c_2b3d_4e5f }
    }
}

struct RitzPairs {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

struct Run<'a, S: SymmetricOperator + ?Sized> {
    op: &'a S,
    deflate: &'a [Vec<f64>],
    rng: ChaCha8Rng,
    matvecs: usize,
    max_matvecs: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn ritz_vectors(basis: &[Vec<f64>], y: &DMatrix<f64>, idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter()
        .map(|&c| {
            let mut v = vec![0.0; basis[0].len()];
            for (r, q) in basis.iter().enumerate() {
                axpy(y[(r, c)], q, &mut v);
            }
            v
        })
        .collect()
}

impl<S: SymmetricOperator + ?Sized> Run<'_, S> {
    fn project_out(&self, w: &mut [f64]) {
        for _ in 0..2 {
            for d in self.deflate {
                let c = dot(d, w);
                axpy(-c, d, w);
            }
        }
    }

    /// Random unit vector orthogonal to the deflation space and `basis`.
    fn fresh_vector(&mut self, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
        let n = self.op.dim();
        for _ in 0..8 {
            let mut v: Vec<f64> = (0..n).map(|_| self.rng.random::<f64>() - 0.5).collect();
            let before = norm(&v);
            self.project_out(&mut v);
            for _ in 0..2 {
                for q in basis {
                    let c = dot(q, &v);
                    axpy(-c, q, &mut v);
                }
            }
            let nv = norm(&v);
            if nv > 1e-10 * before {
                v.iter_mut().for_each(|x| *x /= nv);
                return Some(v);
            }
        }
        None
    }

    fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.op.apply(x, &mut y);
        self.matvecs += 1;
        self.project_out(&mut y);
        y
    }

    /// Restarted Lanczos until the `want` Ritz pairs of largest magnitude have
    /// estimated residual below the tolerance. With `cycles = Some(c)` it
    /// stops after `c` Krylov cycles and returns the current Ritz values
    /// without vectors.
    fn solve(&mut self, want: usize, krylov: usize, tol: Option<f64>, cycles: Option<usize>) -> Result<RitzPairs> {
        let available = self.op.dim() - self.deflate.len();
        let m = krylov.min(available).max(want);
        let keep = ((want + m) / 2).min(m.saturating_sub(1));
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut h = DMatrix::<f64>::zeros(m, m);
        match self.fresh_vector(&[]) {
            Some(v) => basis.push(v),
            None => return Ok(RitzPairs { values: vec![], vectors: vec![] }),
        }
        let mut cycle = 0;
        loop {
            // Extend the basis to m columns.
            let mut next: Option<Vec<f64>> = None;
            let mut beta;
            let mut no_room = false;
            let mut j = basis.len() - 1;
            loop {
                let mut w = self.apply(&basis[j]);
                for _ in 0..2 {
                    for (i, q) in basis.iter().enumerate() {
                        let c = dot(q, &w);
                        axpy(-c, q, &mut w);
                        h[(i, j)] += c;
                    }
                }
                for i in 0..j {
                    h[(j, i)] = h[(i, j)];
                }
                beta = norm(&w);
                let scale = h.amax().max(f64::MIN_POSITIVE);
                if j + 1 == m {
                    if beta > 1e-13 * scale {
                        w.iter_mut().for_each(|x| *x /= beta);
                        next = Some(w);
                    } else {
                        beta = 0.0;
                    }
                    break;
                }
                if beta > 1e-13 * scale {
                    w.iter_mut().for_each(|x| *x /= beta);
                    basis.push(w);
                } else {
                    beta = 0.0;
                    match self.fresh_vector(&basis) {
                        Some(v) => basis.push(v),
                        None => {
                            no_room = true;
                            break;
                        }
                    }
                }
                j += 1;
                if self.matvecs >= self.max_matvecs {
                    break;
                }
            }

            let size = basis.len();
            let hs = h.view((0, 0), (size, size)).into_owned();
            let eig = SymmetricEigen::new(hs);
            let mut order: Vec<usize> = (0..size).collect();
            order.sort_by(|&a, &b| {
                let (x, y) = (eig.eigenvalues[a], eig.eigenvalues[b]);
                y.abs().total_cmp(&x.abs()).then(y.total_cmp(&x)).then(a.cmp(&b))
            });
            let scale = eig.eigenvalues.amax();
            let tol_abs = tol.unwrap_or(1e-8 * scale);
            let wanted = &order[..want.min(size)];
            let est: Vec<f64> = wanted.iter().map(|&i| beta * eig.eigenvectors[(size - 1, i)].abs()).collect();
            let worst = est.iter().copied().fold(0.0, f64::max);
            cycle += 1;


            if cycles.is_some_and(|c| cycle >= c) {
                return Ok(RitzPairs { values: wanted.iter().map(|&i| eig.eigenvalues[i]).collect(), vectors: vec![] });
            }
            let exhausted = no_room || size == available && beta == 0.0;
            if worst <= tol_abs || exhausted {
                return Ok(RitzPairs { values: wanted.iter().map(|&i| eig.eigenvalues[i]).collect(), vectors: ritz_vectors(&basis, &eig.eigenvectors, wanted) });
            }
            if self.matvecs >= self.max_matvecs {
                return Err(Error::NoConvergence { matvecs: self.matvecs, residual: worst });
            }

            // Thick restart: keep the `keep` dominant Ritz vectors.
            let kept = &order[..keep.min(size)];
            let new_basis = ritz_vectors(&basis, &eig.eigenvectors, kept);
            h.fill(0.0);
            for (r, &c) in kept.iter().enumerate() {
                h[(r, r)] = eig.eigenvalues[c];
            }
            basis = new_basis;
            match next.take() {
                Some(v) => basis.push(v),
                None => match self.fresh_vector(&basis) {
                    Some(v) => basis.push(v),
                    None => {
                        return Ok(RitzPairs {
                            values: wanted.iter().map(|&i| eig.eigenvalues[i]).collect(),
                            vectors: ritz_vectors(&basis, &eig.eigenvectors, wanted),
                        })
                    }
                },
            }
        }
    }
}

fn dense_of<S: SymmetricOperator + ?Sized>(op: &S) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut y = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut y);
        m.set_column(j, &DVector::from_column_slice(&y));
        e[j] = 0.0;
    }
    (&m + m.transpose()) * 0.5
}

fn assemble<S: SymmetricOperator + ?Sized>(
    op: &S,
    mut pairs: Vec<(f64, Vec<f64>)>,
    zero_tol: Option<f64>,
) -> Spectrum {
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n = op.dim();
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors = DMatrix::zeros(n, pairs.len());
    for (j, (_, v)) in pairs.iter_mut().enumerate() {
        canonicalize_sign(v);
        vectors.set_column(j, &DVector::from_column_slice(v));
    }
    let residuals = residuals(op, &values, &vectors);
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Spectrum { values, vectors, residuals, zero_tol: zero_tol.unwrap_or(n as f64 * f64::EPSILON * scale) }
}

/// The `p` eigenpairs of largest magnitude of a symmetric operator.
///
/// Runs thick-restart Lanczos with full reorthogonalization from a seeded
/// start vector, then checks the deflated operator for eigenvalues the
/// Krylov space missed (repeated eigenvalues) and repeats with those
/// included. Operators of dimension at most 64 are solved densely.
pub fn top_bottom_eigenpairs<S: SymmetricOperator + ?Sized>(op: &S, p: usize, opts: &LanczosOptions) -> Result<Spectrum> {
    let n = op.dim();
    if p > MAX_WANTED {
        return Err(Error::invalid(format!("at most {MAX_WANTED} eigenpairs can be requested, got {p}")));
    }
    if p > n {
        return Err(Error::invalid(format!("requested {p} eigenpairs of a {n}-dimensional operator")));
    }
    if p == 0 {
        return Ok(assemble(op, vec![], opts.zero_tol));
    }

    if n <= DENSE_FALLBACK_DIM {
        let full = symmetric_eigendecomposition(&dense_of(op), &Tolerances { zero_tol: opts.zero_tol, ..Default::default() })?;
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            let (x, y) = (full.values[a], full.values[b]);
            y.abs().total_cmp(&x.abs()).then(y.total_cmp(&x)).then(a.cmp(&b))
        });
        let pairs = idx[..p].iter().map(|&i| (full.values[i], full.vector(i).as_slice().to_vec())).collect();
        return Ok(assemble(op, pairs, opts.zero_tol));
    }

    let krylov = opts.krylov_dim.unwrap_or((4 * p).max(p + 40));
    let rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut run = Run { op, deflate: &[], rng, matvecs: 0, max_matvecs: opts.max_matvecs };
    let first = run.solve(p, krylov, opts.tol, None)?;
    let mut pairs: Vec<(f64, Vec<f64>)> = first.values.into_iter().zip(first.vectors).collect();
    let (mut matvecs, mut rng) = (run.matvecs, run.rng);

    for _ in 0..=p {
        let locked: Vec<Vec<f64>> = pairs.iter().map(|p| p.1.clone()).collect();
        if locked.len() >= n {
            break;
        }
        let weakest = pairs.iter().map(|p| p.0.abs()).fold(f64::INFINITY, f64::min);
        let scale = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
        let margin = opts.tol.unwrap_or(1e-8 * scale);
        let mut probe = Run { op, deflate: &locked, rng, matvecs, max_matvecs: opts.max_matvecs.saturating_add(matvecs) };
        let glance = probe.solve(1, krylov.min(40), None, Some(1))?;
        if glance.values.first().is_none_or(|v| v.abs() <= weakest + margin) {
            break;
        }
        let found = probe.solve(1, krylov, opts.tol, None)?;
        matvecs = probe.matvecs;
        rng = probe.rng;
        if matvecs > opts.max_matvecs {
            return Err(Error::NoConvergence { matvecs, residual: f64::NAN });
        }
        let (value, vector) = (found.values[0], found.vectors[0].clone());
        if value.abs() <= weakest + margin {
            break;
        }
        pairs.push((value, vector));
        pairs.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
        pairs.truncate(p);
    }

    let spectrum = assemble(op, pairs, opts.zero_tol);
    let scale = spectrum.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol_abs = opts.tol.unwrap_or(1e-8 * scale);
    let worst = spectrum.max_residual();
    if worst > tol_abs * 10.0 {
        return Err(Error::NoConvergence { matvecs, residual: worst });
    }
    Ok(spectrum)
}
