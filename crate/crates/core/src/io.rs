//! JSON configuration, CSV signals and export formats.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fourier::SbmFourierBasis;
use crate::group_harmonics::{cayley_matrix, AbelianGroup, ConnectionFunction};
use crate::sbm_model::{BlockSizes, SampledGraph, SbmSpec};
use crate::spectral::{canonicalize_sign, Tolerances};
use crate::Signal;

/// Run configuration. An SBM spec is given either explicitly through `A`
/// or as a Cayley matrix through `group` and `connection`; the remaining
/// fields are options of individual subcommands.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_vertices: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<usize>,
    #[serde(rename = "N_list", default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    /// Path of a signal CSV, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }

    /// Group and connection function, when the config describes a Cayley
    /// matrix.
    pub fn cayley(&self) -> Result<Option<(AbelianGroup, ConnectionFunction)>> {
        match (&self.group, &self.connection) {
            (Some(orders), Some(conn)) => {
                let g = AbelianGroup::new(orders.clone())?;
                let map: HashMap<String, f64> = conn.iter().map(|(k, v)| (k.clone(), *v)).collect();
                let f = ConnectionFunction::from_map(&g, &map)?;
                Ok(Some((g, f)))
            }
            (None, None) => Ok(None),
            _ => Err(Error::invalid("`group` and `connection` must be given together")),
        }
    }

    pub fn probability_matrix(&self) -> Result<DMatrix<f64>> {
        match (&self.a, self.cayley()?) {
            (Some(_), Some(_)) => Err(Error::invalid("give either `A` or `group`/`connection`, not both")),
            (Some(rows), None) => matrix_from_rows(rows),
            (None, Some((g, f))) => Ok(cayley_matrix(&g, &f)),
            (None, None) => Err(Error::invalid("config has no probability matrix")),
        }
    }

    /// Builds the SBM spec. `μ` defaults to uniform and `N` to `n_default`.
    pub fn spec(&self, n_default: Option<usize>) -> Result<SbmSpec> {
        let a = self.probability_matrix()?;
        let n = a.nrows();
        let mu = self.mu.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]);
        let n_vertices = self
            .n_vertices
            .or(n_default)
            .ok_or_else(|| Error::invalid("config has no `N`"))?;
        SbmSpec::new(a, mu, n_vertices)
    }

    /// SHA-256 of the canonical serialization.
    pub fn sha256(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: r.len() });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// `{"A", "mu", "N"}` for a spec, with the nominal measure.
pub fn spec_to_config(spec: &SbmSpec) -> RunConfig {
    let a = spec.a();
    RunConfig {
        a: Some((0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()),
        mu: Some(spec.nominal_measure().as_slice().to_vec()),
        n_vertices: Some(spec.n_vertices()),
        ..Default::default()
    }
}

pub fn spec_sha256(spec: &SbmSpec) -> String {
    spec_to_config(spec).sha256()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a signal with one entry per line, either `re` or `re,im`. Blank
/// lines, `#` comments and a non-numeric header line are skipped.
pub fn read_signal_csv(text: &str) -> Result<Signal> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|s| s.parse::<f64>()).collect();
        match (parsed, fields.len()) {
            (Ok(v), 1) => values.push(Complex64::new(v[0], 0.0)),
            (Ok(v), 2) => values.push(Complex64::new(v[0], v[1])),
            (Err(_), _) if values.is_empty() => continue,
            _ => return Err(Error::invalid(format!("signal line {}: {line:?}", lineno + 1))),
        }
    }
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("signal has non-finite entries"));
    }
    Ok(DVector::from_vec(values))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphHeader {
    #[serde(rename = "N")]
    pub n_vertices: usize,
    pub k: Vec<usize>,
    pub seed: u64,
}

/// Edge list `u,v` with `u < v`, one edge per line, and its JSON header.
pub fn graph_to_csv(graph: &SampledGraph) -> (String, String) {
    let mut csv = String::from("u,v\n");
    for (u, v) in graph.edges() {
        csv.push_str(&format!("{u},{v}\n"));
    }
    let header = GraphHeader {
        n_vertices: graph.n_vertices(),
        k: graph.block_sizes().as_slice().to_vec(),
        seed: graph.seed(),
    };
    (csv, serde_json::to_string_pretty(&header).expect("header serializes") + "\n")
}

pub fn graph_from_csv(csv: &str, header: &str) -> Result<SampledGraph> {
    let header: GraphHeader = serde_json::from_str(header)?;
    let sizes = BlockSizes::new(header.k)?;
    if sizes.total() != header.n_vertices {
        return Err(Error::DimensionMismatch { expected: header.n_vertices, got: sizes.total() });
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(csv.as_bytes());
    let mut edges = Vec::new();
    for rec in rdr.deserialize::<(usize, usize)>() {
        edges.push(rec?);
    }
    SampledGraph::from_edges(sizes, header.seed, &edges)
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisMetadata {
    pub version: String,
    pub spec_sha256: String,
    #[serde(rename = "N")]
    pub n_vertices: usize,
    pub k: Vec<usize>,
    pub rank: usize,
    pub tolerances: crate::spectral::ResolvedTolerances,
}

/// One row per lifted eigenvector: `eigen_index, W_eigenvalue, v_1..v_N`,
/// with the sign fixed so the largest-magnitude entry is positive.
pub fn basis_to_csv(basis: &SbmFourierBasis) -> Result<(String, String)> {
    let n = basis.spec().n_vertices();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["eigen_index".to_string(), "W_eigenvalue".to_string()];
    header.extend((0..n).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    let wvals = basis.w_eigenvalues();
    for (c, &wv) in wvals.iter().enumerate() {
        let mut v: Vec<f64> = basis.lifted().column(c).iter().copied().collect();
        canonicalize_sign(&mut v);
        let mut rec = vec![c.to_string(), wv.to_string()];
        rec.extend(v.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let meta = BasisMetadata {
        version: crate::VERSION.to_string(),
        spec_sha256: spec_sha256(basis.spec()),
        n_vertices: n,
        k: basis.spec().block_sizes().as_slice().to_vec(),
        rank: basis.rank(),
        tolerances: *basis.tolerances(),
    };
    Ok((
        String::from_utf8(bytes).expect("csv is utf-8"),
        serde_json::to_string_pretty(&meta)? + "\n",
    ))
}
