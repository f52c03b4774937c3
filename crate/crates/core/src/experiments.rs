//! Reproducible experiment runners on the Z₅ example and generic SBM specs.
//!
//! Every runner returns plain rows; [`CsvTable::render`] turns them into CSV
//! text whose first line is the manifest row
//! `# sbm-gft <version> config_sha256=<hash>`. Outputs depend only on the
//! configuration and seeds.

use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{SbmFourierBasis, TransferredBasis};
use crate::group_harmonics::{cayley_matrix, AbelianGroup, ConnectionFunction};
use crate::io::sha256_hex;
use crate::perturbation::{perturbation_sweep, SweepRow};
use crate::sbm_model::{sample_graph, SbmSpec};
use crate::spectral::{projection_distance, top_bottom_eigenpairs, LanczosOptions, Tolerances};

pub const Z5_TABLE_N: usize = 6000;
pub const Z5_FIG4_N: usize = 3000;
pub const Z5_FIG5A_N: usize = 150;
pub const DEFAULT_SEEDS: [u64; 3] = [1, 2, 3];
pub const DEFAULT_EPSILONS: [f64; 3] = [0.001, 0.005, 0.01];
pub const DEFAULT_N_LIST: [usize; 4] = [250, 500, 1000, 2000];
pub const CONVERGENCE_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// `Z₅` with `f = (0.2, 0.8, 0.2, 0.2, 0.8)`.
pub fn z5() -> (AbelianGroup, ConnectionFunction) {
    let g = AbelianGroup::cyclic(5).expect("Z5");
    let f = ConnectionFunction::new(&g, vec![0.2, 0.8, 0.2, 0.2, 0.8]).expect("valid connection");
    (g, f)
}

pub fn z5_matrix() -> DMatrix<f64> {
    let (g, f) = z5();
    cayley_matrix(&g, &f)
}

/// `μ = (1/3, 1/6, 1/6, 1/6, 1/6)`.
pub fn z5_table_mu() -> Vec<f64> {
    let mut mu = vec![1.0 / 6.0; 5];
    mu[0] = 1.0 / 3.0;
    mu
}

pub fn z5_table_spec(n_vertices: usize) -> Result<SbmSpec> {
    SbmSpec::new(z5_matrix(), z5_table_mu(), n_vertices)
}

/// A CSV table with a header and preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, config_sha256: &str) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(manifest_line(config_sha256) + std::str::from_utf8(&body).expect("csv is utf-8"))
    }
}

/// `# sbm-gft <version> config_sha256=<hash>` with a trailing newline.
pub fn manifest_line(config_sha256: &str) -> String {
    format!("# sbm-gft {} config_sha256={config_sha256}\n", crate::VERSION)
}

fn fmt(x: f64) -> String {
    x.to_string()
}

/// Top eigenpairs of one sampled graph, ordered by decreasing `|λ|`.
#[derive(Debug, Clone)]
pub struct SampleSpectrum {
    pub seed: u64,
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub max_residual: f64,
    pub n_edges: usize,
}

pub fn sample_spectrum(spec: &SbmSpec, seed: u64, p: usize, opts: &LanczosOptions) -> Result<SampleSpectrum> {
    let graph = sample_graph(spec, seed);
    let spectrum = top_bottom_eigenpairs(&graph, p, opts)?;
    let order = spectrum.by_magnitude();
    let values = order.iter().map(|&i| spectrum.values[i]).collect();
    let cols: Vec<_> = order.iter().map(|&i| spectrum.vectors.column(i)).collect();
    Ok(SampleSpectrum {
        seed,
        values,
        vectors: DMatrix::from_columns(&cols),
        max_residual: spectrum.max_residual(),
        n_edges: graph.n_edges(),
    })
}

pub fn sample_spectra(spec: &SbmSpec, seeds: &[u64], p: usize, opts: &LanczosOptions) -> Result<Vec<SampleSpectrum>> {
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    seeds.iter().map(|&s| sample_spectrum(spec, s, p, opts)).collect()
}

/// Model-matrix eigenvalues and sampled-graph eigenvalues, both ordered by
/// decreasing magnitude.
#[derive(Debug, Clone)]
pub struct Table1 {
    pub n_vertices: usize,
    /// Nonzero eigenvalues of `W`, padded with zeros to six entries.
    pub model: Vec<f64>,
    pub samples: Vec<(u64, Vec<f64>)>,
}

pub const TABLE1_P: usize = 6;

impl Table1 {
    pub fn from_samples(basis: &SbmFourierBasis, samples: &[SampleSpectrum]) -> Self {
        let w = basis.w_eigenvalues();
        let mut model: Vec<f64> = basis.by_magnitude().iter().map(|&c| w[c]).collect();
        model.resize(model.len().max(TABLE1_P), 0.0);
        Self {
            n_vertices: basis.spec().n_vertices(),
            model,
            samples: samples.iter().map(|s| (s.seed, s.values.clone())).collect(),
        }
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["row", "seed", "N", "lambda_1", "lambda_2", "lambda_3", "lambda_4", "lambda_5", "lambda_6"]);
        let mut model = vec!["model".into(), String::new(), self.n_vertices.to_string()];
        model.extend(self.model.iter().take(TABLE1_P).map(|&v| fmt(v)));
        t.push(model);
        for (seed, vals) in &self.samples {
            let mut row = vec!["sample".into(), seed.to_string(), self.n_vertices.to_string()];
            row.extend(vals.iter().take(TABLE1_P).map(|&v| fmt(v)));
            t.push(row);
        }
        t
    }
}

pub fn run_z5_table1(n_vertices: usize, seeds: &[u64], opts: &LanczosOptions) -> Result<Table1> {
    let spec = z5_table_spec(n_vertices)?;
    let basis = SbmFourierBasis::new(&spec, &Tolerances::default())?;
    let samples = sample_spectra(&spec, seeds, TABLE1_P, opts)?;
    Ok(Table1::from_samples(&basis, &samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerProductRow {
    pub seed: u64,
    /// 1-based position in the magnitude ordering.
    pub i: usize,
    pub value: f64,
}

/// `|⟨φ_i^graph, φ_i^SBM⟩|` for the first `count` magnitude positions. When
/// the SBM eigenvalue is repeated the norm of the projection of the graph
/// vector onto the whole eigenspace is reported instead.
pub fn inner_product_rows(basis: &SbmFourierBasis, samples: &[SampleSpectrum], count: usize) -> Result<Vec<InnerProductRow>> {
    let order = basis.by_magnitude();
    let count = count.min(order.len());
    let mut rows = Vec::new();
    for s in samples {
        if s.vectors.nrows() != basis.spec().n_vertices() || s.vectors.ncols() < count {
            return Err(Error::invalid("sample spectrum does not match the basis"));
        }
        for (i, &col) in order.iter().take(count).enumerate() {
            let b = basis.group_basis(basis.group_of(col));
            let value = b.tr_mul(&s.vectors.column(i)).norm().min(1.0);
            rows.push(InnerProductRow { seed: s.seed, i: i + 1, value });
        }
    }
    Ok(rows)
}

pub fn inner_products_csv(rows: &[InnerProductRow]) -> CsvTable {
    let mut t = CsvTable::new(&["seed", "i", "abs_inner_product"]);
    for r in rows {
        t.push(vec![r.seed.to_string(), r.i.to_string(), fmt(r.value)]);
    }
    t
}

pub fn run_z5_table2(n_vertices: usize, seeds: &[u64], opts: &LanczosOptions) -> Result<Vec<InnerProductRow>> {
    let spec = z5_table_spec(n_vertices)?;
    let basis = SbmFourierBasis::new(&spec, &Tolerances::default())?;
    let samples = sample_spectra(&spec, seeds, 5, opts)?;
    inner_product_rows(&basis, &samples, 5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementRow {
    pub k: usize,
    /// 1-based.
    pub i: usize,
    /// Norm of the projection of `ξ_i` onto the eigenspace of `y_i`.
    pub value: f64,
    /// Norm of the projection of `ξ_i` onto the span of the `y_j` sharing the
    /// Cayley eigenvalue of `φ_i`.
    pub subspace: f64,
}

/// Per-vector and subspace agreement of the transferred character basis with the SBM basis of the
/// Z₅ Cayley matrix at the given block sizes.
pub fn z5_agreement(block_sizes: Vec<usize>) -> Result<(Vec<f64>, Vec<f64>)> {
    let (g, f) = z5();
    let spec = SbmSpec::from_block_sizes(cayley_matrix(&g, &f), block_sizes)?;
    let basis = SbmFourierBasis::new(&spec, &Tolerances::default())?;
    let tb = TransferredBasis::for_spec(&g, &f, spec)?;
    Ok((tb.agreement(&basis)?, tb.subspace_agreement(&basis)?))
}

fn agreement_sweep(ks: impl Iterator<Item = usize>, sizes: impl Fn(usize) -> Vec<usize> + Sync) -> Result<Vec<AgreementRow>> {
    let ks: Vec<usize> = ks.collect();
    let per_k: Vec<Result<Vec<AgreementRow>>> = ks
        .par_iter()
        .map(|&k| {
            let (a, sub) = z5_agreement(sizes(k))?;
            Ok(a.into_iter().zip(sub).enumerate().map(|(i, (value, subspace))| AgreementRow { k, i: i + 1, value, subspace }).collect())
        })
        .collect();
    Ok(per_k.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

/// `μ₁ = (60+4k)/300`, `μ_i = (60−k)/300` for `i ≥ 2`; `k = 0` is the
/// uniform limit. `n_vertices` must be a multiple of 300.
pub fn run_z5_fig4(n_vertices: usize, max_k: usize) -> Result<Vec<AgreementRow>> {
    if n_vertices % 300 != 0 || max_k > 59 {
        return Err(Error::invalid("fig4 needs N divisible by 300 and k < 60"));
    }
    let unit = n_vertices / 300;
    agreement_sweep(0..=max_k, |k| {
        let mut s = vec![(60 - k) * unit; 5];
        s[0] = (60 + 4 * k) * unit;
        s
    })
}

/// `μ₁ = (30+2k)/150`, `μ₂ = (30+k)/150`, `μ₃..₅ = (30−k)/150`.
pub fn run_z5_fig5a(n_vertices: usize, max_k: usize) -> Result<Vec<AgreementRow>> {
    if n_vertices % 150 != 0 || max_k > 29 {
        return Err(Error::invalid("fig5a needs N divisible by 150 and k < 30"));
    }
    let unit = n_vertices / 150;
    agreement_sweep(0..=max_k, |k| {
        let mut s = vec![(30 - k) * unit; 5];
        s[0] = (30 + 2 * k) * unit;
        s[1] = (30 + k) * unit;
        s
    })
}

pub const FIG5B_MODEL1: [usize; 5] = [2000, 250, 250, 250, 250];
pub const FIG5B_MODEL2: [usize; 5] = [1350, 1344, 1102, 1102, 1102];

/// Rows with `k` = model number (1 or 2).
pub fn run_z5_fig5b() -> Result<Vec<AgreementRow>> {
    agreement_sweep(1..=2, |m| if m == 1 { FIG5B_MODEL1.to_vec() } else { FIG5B_MODEL2.to_vec() })
}

pub fn agreement_csv(rows: &[AgreementRow], key: &str) -> CsvTable {
    let mut t = CsvTable::new(&[key, "i", "agreement", "subspace_agreement"]);
    for r in rows {
        t.push(vec![r.k.to_string(), r.i.to_string(), fmt(r.value), fmt(r.subspace)]);
    }
    t
}

pub fn run_perturb_sweep(
    spec: &SbmSpec,
    epsilons: &[f64],
    trials: usize,
    signals: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<SweepRow>> {
    perturbation_sweep(spec, epsilons, trials, signals, seed, tol)
}

pub fn sweep_csv(rows: &[SweepRow]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "trial",
        "epsilon",
        "lambda",
        "d",
        "gamma",
        "bound",
        "empirical_op",
        "empirical_signal",
        "v_dist",
        "v_bound",
        "realized_epsilon",
        "amu_diff",
        "amu_diff_bound",
    ]);
    for r in rows {
        let x = &r.row;
        t.push(vec![
            r.trial.to_string(),
            fmt(r.epsilon),
            fmt(x.lambda),
            x.d.to_string(),
            fmt(x.gamma),
            fmt(x.bound),
            fmt(x.empirical_op),
            fmt(x.empirical_signal),
            fmt(x.v_dist),
            fmt(x.v_bound),
            fmt(r.realized_epsilon),
            fmt(r.amu_diff),
            fmt(r.amu_diff_bound),
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n_vertices: usize,
    /// 1-based eigenvalue group in the magnitude ordering.
    pub group: usize,
    pub lambda: f64,
    pub mean_distance: f64,
}

/// Frobenius projection distance between each SBM eigenvalue group and the
/// matching magnitude positions of a sampled graph's spectrum, averaged over
/// seeds.
pub fn run_convergence_check(
    a: &DMatrix<f64>,
    mu: &[f64],
    n_list: &[usize],
    seeds: &[u64],
    opts: &LanczosOptions,
) -> Result<Vec<ConvergenceRow>> {
    if seeds.is_empty() || n_list.is_empty() {
        return Err(Error::invalid("convergence check needs seeds and N values"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("N_list must be strictly increasing"));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let spec = SbmSpec::new(a.clone(), mu.to_vec(), n)?;
        let basis = SbmFourierBasis::new(&spec, &Tolerances::default())?;
        let order = basis.by_magnitude();
        // Groups in the order their first column appears by magnitude.
        let mut groups: Vec<usize> = Vec::new();
        for &c in &order {
            let g = basis.group_of(c);
            if !groups.contains(&g) {
                groups.push(g);
            }
        }
        let per_seed: Vec<Result<Vec<f64>>> = seeds
            .par_iter()
            .map(|&s| {
                let sample = sample_spectrum(&spec, s, basis.rank(), opts)?;
                let mut pos = 0;
                groups
                    .iter()
                    .map(|&g| {
                        let d = basis.groups()[g].columns.len();
                        let graph = sample.vectors.columns(pos, d).into_owned();
                        pos += d;
                        Ok(projection_distance(&graph, &basis.group_basis(g))?.frobenius)
                    })
                    .collect()
            })
            .collect();
        let per_seed = per_seed.into_iter().collect::<Result<Vec<_>>>()?;
        for (j, &g) in groups.iter().enumerate() {
            let mean = per_seed.iter().map(|d| d[j]).sum::<f64>() / seeds.len() as f64;
            rows.push(ConvergenceRow { n_vertices: n, group: j + 1, lambda: basis.groups()[g].value, mean_distance: mean });
        }
    }
    Ok(rows)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> CsvTable {
    let mut t = CsvTable::new(&["N", "lambda_group", "lambda", "mean_projection_distance"]);
    for r in rows {
        t.push(vec![r.n_vertices.to_string(), r.group.to_string(), fmt(r.lambda), fmt(r.mean_distance)]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputChecksum {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputChecksum>,
}

/// Writes `outputs` (file name, contents) under `dir` together with
/// `manifest.json`.
pub fn write_outputs(dir: &Path, command: &str, config_sha256: &str, started: Instant, outputs: &[(String, String)]) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut sums = Vec::new();
    for (name, contents) in outputs {
        fs::write(dir.join(name), contents)?;
        sums.push(OutputChecksum { path: name.clone(), sha256: sha256_hex(contents.as_bytes()) });
    }
    let manifest = RunManifest {
        command: command.to_string(),
        version: crate::VERSION.to_string(),
        config_sha256: config_sha256.to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: sums,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}
