use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use sbm_gft::experiments::{self as ex, CsvTable};
use sbm_gft::fourier::{transferred_character_basis, SbmFourierBasis};
use sbm_gft::io::{self, RunConfig};
use sbm_gft::sbm_model::sample_graph;
use sbm_gft::spectral::LanczosOptions;
use sbm_gft::{Error, Result};

#[derive(Parser)]
#[command(name = "sbm-gft", version, about = "SBM-driven graph Fourier transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for sampling and random trials; replaces `seeds` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Number of vertices; replaces `N` in the config.
    #[arg(long, global = true)]
    scale: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Export the SBM Fourier basis of a spec.
    Basis,
    /// Sample a graph from a spec.
    Sample,
    /// Transform the signal named in the config.
    Gft,
    /// Compare the transferred character basis with the SBM basis.
    CompareBases,
    /// Validate the perturbation bounds on random block-size perturbations.
    PerturbSweep,
    /// Projection distances between sampled and model eigenspaces over N.
    Convergence,
    /// Model and sampled top-6 eigenvalues for the Z5 example.
    Z5Table1,
    /// Inner products between sampled and model eigenvectors for the Z5 example.
    Z5Table2,
    /// Character/SBM basis agreement as one block grows.
    Z5Fig4,
    /// Character/SBM basis agreement on a 150-vertex family.
    Z5Fig5a,
    /// Character/SBM basis agreement for two fixed block-size models.
    Z5Fig5b,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::Sample => "sample",
            Command::Gft => "gft",
            Command::CompareBases => "compare-bases",
            Command::PerturbSweep => "perturb-sweep",
            Command::Convergence => "convergence",
            Command::Z5Table1 => "z5-table1",
            Command::Z5Table2 => "z5-table2",
            Command::Z5Fig4 => "z5-fig4",
            Command::Z5Fig5a => "z5-fig5a",
            Command::Z5Fig5b => "z5-fig5b",
        }
    }
}

#[derive(Serialize)]
struct Effective<'a> {
    command: &'a str,
    config: &'a RunConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn z5_default() -> RunConfig {
    let spec = ex::z5_table_spec(ex::Z5_TABLE_N).expect("default spec");
    io::spec_to_config(&spec)
}

fn load_config(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let needs_config = matches!(cli.command, Command::Basis | Command::Sample | Command::Gft | Command::CompareBases);
    let (mut cfg, base) = match &cli.config {
        Some(p) => (RunConfig::load(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None if needs_config => return Err(Error::invalid(format!("{} requires --config", cli.command.name()))),
        None => (RunConfig::default(), PathBuf::new()),
    };
    if let Some(s) = cli.seed {
        cfg.seeds = Some(vec![s]);
    }
    if let Some(n) = cli.scale {
        cfg.n_vertices = Some(n);
    }
    Ok((cfg, base))
}

/// Config fields for subcommands defaulting to the Z₅ table spec.
fn with_z5_spec(mut cfg: RunConfig) -> RunConfig {
    if cfg.a.is_none() && cfg.group.is_none() {
        let d = z5_default();
        cfg.a = d.a;
        cfg.mu = cfg.mu.or(d.mu);
        cfg.n_vertices = cfg.n_vertices.or(d.n_vertices);
    }
    cfg
}

fn seeds(cfg: &RunConfig, default: &[u64]) -> Result<Vec<u64>> {
    let s = cfg.seeds.clone().unwrap_or_else(|| default.to_vec());
    if s.is_empty() {
        return Err(Error::invalid("`seeds` must be non-empty"));
    }
    Ok(s)
}

fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let (cfg, base) = load_config(cli)?;
    let cfg = match cli.command {
        Command::PerturbSweep | Command::Convergence => with_z5_spec(cfg),
        _ => cfg,
    };
    let command = cli.command.name();
    let hash = io::sha256_hex(serde_json::to_string(&Effective { command, config: &cfg })?.as_bytes());
    let tol = cfg.tolerances();
    let lanczos = LanczosOptions::default();
    let csv = |name: &str, t: CsvTable| -> Result<(String, String)> { Ok((name.to_string(), t.render(&hash)?)) };

    let outputs: Vec<(String, String)> = match cli.command {
        Command::Basis => {
            let spec = cfg.spec(None)?;
            let basis = SbmFourierBasis::new(&spec, &tol)?;
            let (c, meta) = io::basis_to_csv(&basis)?;
            vec![("basis.csv".into(), ex::manifest_line(&hash) + &c), ("basis.json".into(), meta)]
        }
        Command::Sample => {
            let spec = cfg.spec(None)?;
            let seed = seeds(&cfg, &[0])?[0];
            let graph = sample_graph(&spec, seed);
            let (c, header) = io::graph_to_csv(&graph);
            vec![("edges.csv".into(), ex::manifest_line(&hash) + &c), ("graph.json".into(), header)]
        }
        Command::Gft => {
            let spec = cfg.spec(None)?;
            let path = cfg.signal.as_ref().ok_or_else(|| Error::invalid("gft requires `signal` in the config"))?;
            let x = io::read_signal_csv(&std::fs::read_to_string(base.join(path))?)?;
            let basis = SbmFourierBasis::new(&spec, &tol)?;
            let result = basis.transform(&x)?;
            let mut t = CsvTable::new(&["group", "lambda", "W_eigenvalue", "d", "norm"]);
            for (g, p) in result.projections.iter().enumerate() {
                t.push(vec![
                    (g + 1).to_string(),
                    p.eigenvalue.to_string(),
                    p.w_eigenvalue.to_string(),
                    basis.groups()[g].columns.len().to_string(),
                    p.vector.norm().to_string(),
                ]);
            }
            t.push(vec!["0".into(), "0".into(), "0".into(), (spec.n_vertices() - basis.rank()).to_string(), result.zero_norm().to_string()]);
            vec![csv("gft.csv", t)?]
        }
        Command::CompareBases => {
            let (g, f) = cfg.cayley()?.ok_or_else(|| Error::invalid("compare-bases requires `group` and `connection`"))?;
            let n = g.order();
            let mu = cfg.mu.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]);
            let n_vertices = cfg.n_vertices.ok_or_else(|| Error::invalid("config has no `N`"))?;
            let transferred = transferred_character_basis(&g, &f, mu, n_vertices)?;
            let basis = SbmFourierBasis::new(&transferred.spec, &tol)?;
            let mut t = CsvTable::new(&["i", "agreement", "subspace_agreement"]);
            let sub = transferred.subspace_agreement(&basis)?;
            for (i, v) in transferred.agreement(&basis)?.into_iter().enumerate() {
                t.push(vec![(i + 1).to_string(), v.to_string(), sub[i].to_string()]);
            }
            vec![csv("compare_bases.csv", t)?]
        }
        Command::PerturbSweep => {
            let spec = cfg.spec(None)?;
            let eps = cfg.epsilons.clone().unwrap_or_else(|| ex::DEFAULT_EPSILONS.to_vec());
            let seed = seeds(&cfg, &[0])?[0];
            let rows = ex::run_perturb_sweep(&spec, &eps, cfg.trials.unwrap_or(100), cfg.signals.unwrap_or(10), seed, &tol)?;
            let violations = rows.iter().filter(|r| !r.row.within_bounds()).count();
            println!("{} rows, {} bound violations", rows.len(), violations);
            vec![csv("perturb_sweep.csv", ex::sweep_csv(&rows))?]
        }
        Command::Convergence => {
            let a = cfg.probability_matrix()?;
            let mu = cfg.mu.clone().unwrap_or_else(|| vec![1.0 / a.nrows() as f64; a.nrows()]);
            let n_list = cfg.n_list.clone().unwrap_or_else(|| ex::DEFAULT_N_LIST.to_vec());
            let rows = ex::run_convergence_check(&a, &mu, &n_list, &seeds(&cfg, &ex::CONVERGENCE_SEEDS)?, &lanczos)?;
            vec![csv("convergence.csv", ex::convergence_csv(&rows))?]
        }
        Command::Z5Table1 | Command::Z5Table2 => {
            let n = cfg.n_vertices.unwrap_or(ex::Z5_TABLE_N);
            let spec = ex::z5_table_spec(n)?;
            let basis = SbmFourierBasis::new(&spec, &tol)?;
            let samples = ex::sample_spectra(&spec, &seeds(&cfg, &ex::DEFAULT_SEEDS)?, ex::TABLE1_P, &lanczos)?;
            if cli.command == Command::Z5Table1 {
                vec![csv("z5_table1.csv", ex::Table1::from_samples(&basis, &samples).to_csv())?]
            } else {
                vec![csv("z5_table2.csv", ex::inner_products_csv(&ex::inner_product_rows(&basis, &samples, 5)?))?]
            }
        }
        Command::Z5Fig4 => {
            let rows = ex::run_z5_fig4(cfg.n_vertices.unwrap_or(ex::Z5_FIG4_N), 20)?;
            vec![csv("z5_fig4.csv", ex::agreement_csv(&rows, "k"))?]
        }
        Command::Z5Fig5a => {
            let rows = ex::run_z5_fig5a(cfg.n_vertices.unwrap_or(ex::Z5_FIG5A_N), 20)?;
            vec![csv("z5_fig5a.csv", ex::agreement_csv(&rows, "k"))?]
        }
        Command::Z5Fig5b => vec![csv("z5_fig5b.csv", ex::agreement_csv(&ex::run_z5_fig5b()?, "model"))?],
    };

    let manifest = ex::write_outputs(&cli.out, command, &hash, started, &outputs)?;
    for o in &manifest.outputs {
        println!("{}", cli.out.join(&o.path).display());
    }
    Ok(())
}
