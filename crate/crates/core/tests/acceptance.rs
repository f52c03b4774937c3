//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! `SBM_GFT_SCALE=1500` runs the sampled-graph criteria at N = 1500 with the
//! wider tolerances defined for that scale.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbm_gft::experiments as ex;
use sbm_gft::fourier::{
    cayley_uniform_basis, general_cayley_basis, inverse_transform, one_large_block_eigenvectors, SbmFourierBasis,
};
use sbm_gft::group_harmonics::{cayley_eigen_groups, AbelianGroup, ConnectionFunction};
use sbm_gft::perturbation::davis_kahan_trial;
use sbm_gft::sbm_model::SbmSpec;
use sbm_gft::spectral::{projection_distance, LanczosOptions, Tolerances};
use sbm_gft::Signal;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn scale() -> usize {
    std::env::var("SBM_GFT_SCALE").ok().and_then(|s| s.parse().ok()).unwrap_or(ex::Z5_TABLE_N)
}

// ---------------------------------------------------------------------------
// Oracles built directly from the definitions.

struct Oracle {
    n_vertices: usize,
    assign: Vec<usize>,
    a: DMatrix<f64>,
    mu: Vec<f64>,
}

impl Oracle {
    fn new(a: &DMatrix<f64>, sizes: &[usize]) -> Self {
        let assign: Vec<usize> = sizes.iter().enumerate().flat_map(|(j, &k)| std::iter::repeat_n(j, k)).collect();
        let n_vertices = assign.len();
        let mu = sizes.iter().map(|&k| k as f64 / n_vertices as f64).collect();
        Self { n_vertices, assign, a: a.clone(), mu }
    }

    fn w(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_vertices, self.n_vertices, |u, v| self.a[(self.assign[u], self.assign[v])])
    }

    fn d(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_vertices, self.a.nrows(), |u, j| if self.assign[u] == j { 1.0 } else { 0.0 })
    }

    fn m(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.mu.clone()))
    }

    fn a_mu(&self) -> DMatrix<f64> {
        let n = self.a.nrows();
        DMatrix::from_fn(n, n, |i, j| self.mu[i].sqrt() * self.mu[j].sqrt() * self.a[(i, j)])
    }

    fn v(&self) -> DMatrix<f64> {
        let n_sqrt = (self.n_vertices as f64).sqrt();
        DMatrix::from_fn(self.n_vertices, self.a.nrows(), |u, j| {
            if self.assign[u] == j {
                1.0 / (n_sqrt * self.mu[j].sqrt())
            } else {
                0.0
            }
        })
    }

    /// `W y` through block sums.
    fn apply(&self, y: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.a.nrows();
        let mut sums = vec![Complex64::new(0.0, 0.0); n];
        for (u, &b) in self.assign.iter().enumerate() {
            sums[b] += y[u];
        }
        DVector::from_fn(self.n_vertices, |u, _| (0..n).map(|j| sums[j] * self.a[(self.assign[u], j)]).sum())
    }
}

fn random_sizes(rng: &mut ChaCha8Rng, n: usize, max_n: usize) -> Vec<usize> {
    let total = rng.random_range(n..=max_n);
    let mut sizes = vec![1; n];
    for _ in n..total {
        sizes[rng.random_range(0..n)] += 1;
    }
    sizes
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random::<f64>();
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `χ(g) = exp(2πi Σ e_t g_t / m_t)` from exponent and element tuples.
fn char_value(orders: &[usize], exps: &[usize], elem: &[usize]) -> Complex64 {
    let phase: f64 = orders.iter().zip(exps).zip(elem).map(|((&m, &e), &g)| (e * g) as f64 / m as f64).sum();
    Complex64::from_polar(1.0, 2.0 * PI * phase)
}

/// Random inverse-invariant connection function.
fn random_connection(rng: &mut ChaCha8Rng, g: &AbelianGroup) -> ConnectionFunction {
    let mut values = vec![f64::NAN; g.order()];
    for i in 0..g.order() {
        if values[i].is_nan() {
            let v = rng.random::<f64>();
            let inv = g.element_index(&g.inverse(&g.element(i))).unwrap();
            values[i] = v;
            values[inv] = v;
        }
    }
    ConnectionFunction::new(g, values).unwrap()
}

const GROUPS: &[&[usize]] = &[
    &[2], &[3], &[4], &[5], &[6], &[7], &[8], &[9], &[10], &[11], &[12],
    &[2, 2], &[2, 3], &[2, 4], &[2, 5], &[2, 6], &[3, 3], &[2, 2, 2], &[2, 2, 3], &[3, 4],
];

fn table_spec() -> SbmSpec {
    ex::z5_table_spec(ex::Z5_TABLE_N).unwrap()
}

// ---------------------------------------------------------------------------

fn ac1() -> Outcome {
    let basis = SbmFourierBasis::new(&table_spec(), &Tolerances::default()).map_err(|e| e.to_string())?;
    let t = ex::Table1::from_samples(&basis, &[]);
    let expected = [2622.1, -1290.3, -970.82, 468.1, 370.8];
    let worst = t.model.iter().zip(expected).map(|(v, e)| (v - e).abs()).fold(0.0, f64::max);
    let l3 = 6000.0 / 6.0 * 1.2 * (4.0 * PI / 5.0).cos();
    let l5 = 6000.0 / 6.0 * 1.2 * (2.0 * PI / 5.0).cos();
    let (d3, d5) = ((t.model[2] - l3).abs(), (t.model[4] - l5).abs());
    check(
        worst <= 0.1 && d3 <= 1e-6 && d5 <= 1e-6 && t.model[5] == 0.0,
        format!("model row {:.2?}; max |Δ| = {worst:.3}; closed-form λ3, λ5 errors {d3:.1e}, {d5:.1e}", &t.model[..5]),
    )
}

struct Samples {
    n: usize,
    basis: SbmFourierBasis,
    spectra: Vec<ex::SampleSpectrum>,
}

fn ac2(s: &Samples) -> Outcome {
    let tol = if s.n >= ex::Z5_TABLE_N { 0.01 } else { 0.03 };
    let t = ex::Table1::from_samples(&s.basis, &s.spectra);
    let mut ok = true;
    let mut worst = 0.0f64;
    for (_, vals) in &t.samples {
        for i in 0..5 {
            let rel = (vals[i] - t.model[i]).abs() / t.model[i].abs();
            worst = worst.max(rel);
            ok &= rel <= tol;
        }
        ok &= vals[5].abs() < vals[4].abs() / 2.0;
    }
    let l6: Vec<String> = t.samples.iter().map(|(_, v)| format!("{:.1}", v[5])).collect();
    check(ok, format!("N={} seeds {:?}: max rel err {worst:.4} (tol {tol}); λ6 = [{}]", s.n, ex::DEFAULT_SEEDS, l6.join(", ")))
}

fn ac3(s: &Samples) -> Outcome {
    let floor = if s.n >= ex::Z5_TABLE_N { 0.99 } else { 0.97 };
    let rows = ex::inner_product_rows(&s.basis, &s.spectra, 5).map_err(|e| e.to_string())?;
    let min = rows.iter().map(|r| r.value).fold(1.0, f64::min);
    let per_i: Vec<String> = (1..=5)
        .map(|i| format!("{:.6}", rows.iter().filter(|r| r.i == i).map(|r| r.value).fold(1.0, f64::min)))
        .collect();
    check(rows.len() == 15 && min >= floor, format!("N={} min per i [{}]; floor {floor}", s.n, per_i.join(", ")))
}

fn ac4() -> Outcome {
    let mut worst_spec = 0.0f64;
    let mut worst_lift = 0.0f64;
    let mut worst_compress = 0.0f64;
    let mut ok = true;
    for trial in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + trial);
        let n = rng.random_range(1..=4);
        let a = random_symmetric(&mut rng, n);
        let sizes = random_sizes(&mut rng, n, 40);
        let oracle = Oracle::new(&a, &sizes);
        let big_n = oracle.n_vertices as f64;
        let tol = 1e-8 * big_n;
        let spec = SbmSpec::from_block_sizes(a.clone(), sizes.clone()).unwrap();

        let dense = SymmetricEigen::new(oracle.w());
        let w_vals = sorted_desc(dense.eigenvalues.iter().copied().collect());
        let amu_vals = SymmetricEigen::new(spec.weighted_probability_matrix()).eigenvalues;
        let mut expected: Vec<f64> = amu_vals.iter().map(|l| l * big_n).collect();
        expected.resize(oracle.n_vertices, 0.0);
        let expected = sorted_desc(expected);
        let d = w_vals.iter().zip(&expected).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst_spec = worst_spec.max(d / big_n);
        ok &= d <= tol;

        let basis = SbmFourierBasis::new(&spec, &Tolerances::default()).unwrap();
        let w = oracle.w();
        for (j, &lam) in basis.w_eigenvalues().iter().enumerate() {
            let u = basis.lifted().column(j);
            let r = (&w * u - u * lam).norm();
            worst_lift = worst_lift.max(r / big_n);
            ok &= r <= tol;
        }
        let v = oracle.v();
        let amu = oracle.a_mu();
        for (j, &lam) in dense.eigenvalues.iter().enumerate() {
            if lam.abs() <= tol {
                continue;
            }
            let x = v.tr_mul(&dense.eigenvectors.column(j));
            let r = (&amu * &x - &x * (lam / big_n)).norm() + (x.norm() - 1.0).abs();
            worst_compress = worst_compress.max(r / big_n);
            ok &= r <= tol;
        }
    }
    check(
        ok,
        format!("200 specs: spectrum {worst_spec:.1e}·N, lifted residual {worst_lift:.1e}·N, compressed residual {worst_compress:.1e}·N"),
    )
}

fn ac5() -> Outcome {
    let mut worst = [0.0f64; 6];
    for trial in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + trial);
        let n = rng.random_range(1..=6);
        let a = random_symmetric(&mut rng, n);
        let sizes = random_sizes(&mut rng, n, 60);
        let o = Oracle::new(&a, &sizes);
        let spec = SbmSpec::from_block_sizes(a.clone(), sizes).unwrap();
        let big_n = o.n_vertices as f64;
        let (w, d, m, amu) = (spec.model_matrix().unwrap(), spec.lift_matrix(), spec.weight_matrix(), spec.weighted_probability_matrix());
        let v = spec.isometry();
        let checks = [
            (&w - &d * &a * d.transpose()).amax().max((&w - o.w()).amax()).max((&d - o.d()).amax()),
            (d.tr_mul(&d) / big_n - &m).amax().max((&m - o.m()).amax()),
            (v.tr_mul(&v) - DMatrix::identity(n, n)).amax().max((&v - o.v()).amax()),
            (&v * &amu * v.transpose() - &w / big_n).amax().max((&amu - o.a_mu()).amax()),
            (v.tr_mul(&w) * &v / big_n - &amu).amax(),
            (d.singular_values().max() - (big_n * o.mu.iter().cloned().fold(0.0, f64::max)).sqrt()).abs(),
        ];
        for (w, c) in worst.iter_mut().zip(checks) {
            *w = w.max(c);
        }
    }
    let names = ["W=DADᵀ", "DᵀD/N=M", "VᵀV=I", "VA_μVᵀ=W/N", "A_μ=VᵀWV/N", "‖D‖=√(Nμmax)"];
    let detail: Vec<String> = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    check(worst.iter().all(|&w| w <= 1e-10), format!("200 specs: {}", detail.join(", ")))
}

fn ac6() -> Outcome {
    let mut worst_res = 0.0f64;
    let mut worst_dist = 0.0f64;
    let mut ok = true;
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(6000 + trial);
        let orders = GROUPS[rng.random_range(0..GROUPS.len())];
        let g = AbelianGroup::new(orders.to_vec()).unwrap();
        let n = g.order();
        let f = random_connection(&mut rng, &g);
        let per_block = rng.random_range(1..=6);
        let big_n = n * per_block;
        let oracle = Oracle::new(&sbm_gft::group_harmonics::cayley_matrix(&g, &f), &vec![per_block; n]);
        let tol = 1e-8 * big_n as f64;

        for chi in g.characters() {
            let vals: Vec<Complex64> = g.elements().iter().map(|e| char_value(orders, &chi.exponents, &e.0)).collect();
            let lam: Complex64 = (0..n).map(|x| f.value(x) * vals[x].conj()).sum::<Complex64>() * (big_n as f64 / n as f64);
            let y = DVector::from_fn(big_n, |u, _| vals[oracle.assign[u]] / (big_n as f64).sqrt());
            let r = (oracle.apply(&y) - &y * lam).norm();
            worst_res = worst_res.max(r / big_n as f64);
            ok &= r <= tol && lam.im.abs() <= 1e-12 * big_n as f64;
        }

        let theory = cayley_uniform_basis(&g, &f, big_n, &Tolerances::default()).unwrap();
        let numeric = SbmFourierBasis::new(&SbmSpec::from_block_sizes(oracle.a.clone(), vec![per_block; n]).unwrap(), &Tolerances::default()).unwrap();
        if theory.groups().len() != numeric.groups().len() {
            return Err(format!("trial {trial}: {} vs {} eigenvalue groups", theory.groups().len(), numeric.groups().len()));
        }
        for gi in 0..theory.groups().len() {
            let dist = projection_distance(&theory.group_basis(gi), &numeric.group_basis(gi)).unwrap().frobenius;
            worst_dist = worst_dist.max(dist);
            ok &= dist <= 1e-8;
        }
    }
    check(ok, format!("20 groups of order ≤ 12: residual {worst_res:.1e}·N, subspace distance {worst_dist:.1e}"))
}

fn ac7() -> Outcome {
    let (g5, f5) = ex::z5();
    let mut cases = vec![(g5.clone(), f5.clone(), ex::z5_table_mu(), ex::Z5_TABLE_N)];
    for trial in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + trial);
        let orders = GROUPS[rng.random_range(0..GROUPS.len())];
        let g = AbelianGroup::new(orders.to_vec()).unwrap();
        let f = random_connection(&mut rng, &g);
        let sizes = random_sizes(&mut rng, g.order(), 20 * g.order());
        let total: usize = sizes.iter().sum();
        let mu = sizes.iter().map(|&k| k as f64 / total as f64).collect();
        cases.push((g, f, mu, total));
    }
    let (mut unitary, mut sym, mut res, mut form) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (g, f, mu, big_n) in &cases {
        let gb = general_cayley_basis(g, f, mu.clone(), *big_n, &Tolerances::default()).map_err(|e| e.to_string())?;
        let n = g.order();
        let orders = g.factor_orders().to_vec();
        let elems = g.elements();
        let u = DMatrix::from_fn(n, n, |x, k| char_value(&orders, &g.character(k).exponents, &elems[x].0) / (n as f64).sqrt());
        let m = DMatrix::from_diagonal(&DVector::from_iterator(n, gb.basis.spec().measure().as_slice().iter().map(|&x| Complex64::from(x))));
        unitary = unitary.max((u.adjoint() * m * &u - &gb.system.mtilde).camax());
        sym = sym.max(gb.system.symmetry_deviation(g));
        res = res.max(gb.residuals.iter().cloned().fold(0.0, f64::max));
        form = form.max((gb.system.weighted_form(g, f) - &gb.system.product).camax());
    }
    check(
        unitary <= 1e-12 && sym <= 1e-12 && res <= 1e-8 && form <= 1e-12,
        format!("{} specs: M̃−U*MU {unitary:.1e}, symmetry {sym:.1e}, M̃Γ residual {res:.1e}, factorized form {form:.1e}", cases.len()),
    )
}

fn ac8() -> Outcome {
    let (g, f) = ex::z5();
    let pairs: Vec<Vec<usize>> = cayley_eigen_groups(&g, &f, 1e-10).unwrap().into_iter().map(|e| e.characters).filter(|c| c.len() == 2).collect();
    if pairs.len() != 2 {
        return Err(format!("expected two conjugate pairs, found {}", pairs.len()));
    }
    let mut cases: Vec<(f64, usize)> = vec![(1.0 / 6.0, ex::Z5_TABLE_N)];
    cases.extend((1..=20).map(|k| ((60 - k) as f64 / 300.0, ex::Z5_FIG4_N)));
    let (mut orth, mut res) = (0.0f64, 0.0f64);
    let mut values = Vec::new();
    for &(tau, big_n) in &cases {
        for chars in &pairs {
            let olb = one_large_block_eigenvectors(&g, &f, tau, big_n, chars).map_err(|e| e.to_string())?;
            let oracle = Oracle::new(olb.spec.a(), olb.spec.block_sizes().as_slice());
            let gram = olb.vectors.adjoint() * &olb.vectors;
            for i in 0..gram.nrows() {
                for j in 0..gram.ncols() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    orth = orth.max((gram[(i, j)] - Complex64::from(target)).norm());
                }
            }
            for c in 0..olb.vectors.ncols() {
                let y: DVector<Complex64> = olb.vectors.column(c).into_owned();
                let r = (oracle.apply(&y) - &y * Complex64::from(olb.eigenvalue)).norm();
                res = res.max(r / big_n as f64);
            }
            if big_n == ex::Z5_TABLE_N {
                values.push(olb.eigenvalue);
            }
        }
    }
    check(orth <= 1e-10 && res <= 1e-8, format!("{} measures × 2 pairs: orthogonality {orth:.1e}, residual {res:.1e}·N; N=6000 eigenvalues {values:.3?}", cases.len()))
}

fn ac9() -> Outcome {
    let rows = ex::run_perturb_sweep(&table_spec(), &ex::DEFAULT_EPSILONS, 100, 10, 2024, &Tolerances::default()).map_err(|e| e.to_string())?;
    let trials = rows.iter().map(|r| (r.epsilon.to_bits(), r.trial)).collect::<std::collections::BTreeSet<_>>().len();
    let bad_proj = rows.iter().filter(|r| !r.row.within_bounds()).count();
    let bad_v = rows.iter().filter(|r| !(r.row.v_dist <= r.row.v_bound)).count();
    let ratio = rows.iter().map(|r| r.row.empirical_op / r.row.bound).fold(0.0, f64::max);
    let mut bad_dk = 0;
    let mut dk_ratio = 0.0f64;
    for seed in 0..1000u64 {
        let t = davis_kahan_trial(6, 9000 + seed).map_err(|e| e.to_string())?;
        dk_ratio = dk_ratio.max(t.empirical / t.bound);
        if !(t.empirical <= t.bound) {
            bad_dk += 1;
        }
    }
    check(
        trials == 300 && bad_proj == 0 && bad_v == 0 && bad_dk == 0,
        format!(
            "{trials} trials, {} rows: projection violations {bad_proj}, V violations {bad_v} (max empirical/bound {ratio:.3}); 1000 Davis–Kahan trials: violations {bad_dk} (max ratio {dk_ratio:.3})",
            rows.len()
        ),
    )
}

fn ac10() -> Outcome {
    let fig4 = ex::run_z5_fig4(ex::Z5_FIG4_N, 20).map_err(|e| e.to_string())?;
    let again = ex::run_z5_fig4(ex::Z5_FIG4_N, 20).map_err(|e| e.to_string())?;
    let deterministic = ex::agreement_csv(&fig4, "k").render("x").unwrap() == ex::agreement_csv(&again, "k").render("x").unwrap();
    let exact = fig4.iter().filter(|r| r.k >= 1 && (r.i == 3 || r.i == 5)).map(|r| (r.value - 1.0).abs()).fold(0.0, f64::max);
    let in_range = fig4.iter().all(|r| r.value > 0.0 && r.value <= 1.0);
    let uniform = fig4.iter().filter(|r| r.k == 0).map(|r| (r.value - 1.0).abs()).fold(0.0, f64::max);

    let fig5a = ex::run_z5_fig5a(ex::Z5_FIG5A_N, 20).map_err(|e| e.to_string())?;
    let k0 = fig5a.iter().filter(|r| r.k == 0).map(|r| (r.value - 1.0).abs().max((r.subspace - 1.0).abs())).fold(0.0, f64::max);
    let fig5b = ex::run_z5_fig5b().map_err(|e| e.to_string())?;
    let min = |m: usize, sub: bool| fig5b.iter().filter(|r| r.k == m).map(|r| if sub { r.subspace } else { r.value }).fold(1.0, f64::min);
    let (m1, m2) = (min(1, true), min(2, true));
    check(
        deterministic && exact <= 1e-8 && in_range && uniform <= 1e-8 && k0 <= 1e-8 && m2 >= m1,
        format!(
            "fig4: |ξ3,5 − y3,5| dev {exact:.1e}, range ok {in_range}, uniform dev {uniform:.1e}; fig5a k=0 dev {k0:.1e}; \
             fig5b subspace min model1 {m1:.4} ≤ model2 {m2:.4} (per-vector minima {:.4} / {:.4})",
            min(1, false),
            min(2, false)
        ),
    )
}

fn ac11() -> Outcome {
    let (g, f) = ex::z5();
    let bases = [
        SbmFourierBasis::new(&table_spec(), &Tolerances::default()).unwrap(),
        cayley_uniform_basis(&g, &f, 3000, &Tolerances::default()).unwrap(),
    ];
    let (mut inv, mut pars) = (0.0f64, 0.0f64);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for s in 0..100 {
        let b = &bases[s % 2];
        let n = b.spec().n_vertices();
        let mut x: Signal = DVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        x /= Complex64::from(x.norm());
        // Give the range a visible share of the energy.
        for c in 0..b.rank() {
            x += b.lifted().column(c).map(Complex64::from) * Complex64::new(rng.random::<f64>(), rng.random::<f64>());
        }
        x /= Complex64::from(x.norm());
        let r = b.transform(&x).map_err(|e| e.to_string())?;
        inv = inv.max((inverse_transform(&r) - &x).camax());
        pars = pars.max((r.energy() - x.norm_squared()).abs());
    }
    check(inv <= 1e-10 && pars <= 1e-10, format!("100 unit signals on 2 bases: inverse error {inv:.1e}, Parseval error {pars:.1e}"))
}

fn ac12() -> Outcome {
    let rows = ex::run_convergence_check(&ex::z5_matrix(), &ex::z5_table_mu(), &ex::DEFAULT_N_LIST, &ex::CONVERGENCE_SEEDS, &LanczosOptions::default())
        .map_err(|e| e.to_string())?;
    let first: Vec<(usize, f64)> = rows.iter().filter(|r| r.group == 1).map(|r| (r.n_vertices, r.mean_distance)).collect();
    let decreasing = first.windows(2).all(|w| w[1].1 < w[0].1);
    let detail: Vec<String> = first.iter().map(|(n, d)| format!("N={n}: {d:.4}")).collect();
    check(decreasing && first.len() == ex::DEFAULT_N_LIST.len(), format!("λ1-group mean distance over 5 seeds: {}", detail.join(", ")))
}

fn run(name: &str, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
    });
    let secs = t.elapsed().as_secs_f64();
    match outcome {
        Ok(msg) => {
            println!("{name} PASS  {title} ({secs:.1}s): {msg}");
            true
        }
        Err(msg) => {
            println!("{name} FAIL  {title} ({secs:.1}s): {msg}");
            false
        }
    }
}

fn main() {
    // The harness flags passed by `cargo test` (e.g. `--quiet`) are ignored.
    let n = scale();
    let samples = (|| -> Result<Samples, String> {
        let spec = ex::z5_table_spec(n).map_err(|e| e.to_string())?;
        let basis = SbmFourierBasis::new(&spec, &Tolerances::default()).map_err(|e| e.to_string())?;
        let spectra = ex::sample_spectra(&spec, &ex::DEFAULT_SEEDS, ex::TABLE1_P, &LanczosOptions::default()).map_err(|e| e.to_string())?;
        Ok(Samples { n, basis, spectra })
    })();

    let results = [
        run("AC1", "Table 1 model row", ac1),
        run("AC2", "Table 1 sample row", || samples.as_ref().map_err(Clone::clone).and_then(ac2)),
        run("AC3", "Table 2 inner products", || samples.as_ref().map_err(Clone::clone).and_then(ac3)),
        run("AC4", "dense W vs N·spec(A_μ)", ac4),
        run("AC5", "block matrix identities", ac5),
        run("AC6", "uniform Cayley character basis", ac6),
        run("AC7", "M̃Γ reduced system", ac7),
        run("AC8", "one-large-block eigenvectors", ac8),
        run("AC9", "perturbation bounds", ac9),
        run("AC10", "transferred basis agreement", ac10),
        run("AC11", "inverse transform and Parseval", ac11),
        run("AC12", "convergence trend", ac12),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
