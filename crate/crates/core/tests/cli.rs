use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sbm_gft(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbm-gft")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn fig5b_is_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert!(sbm_gft(&["z5-fig5b"], a.path()).status.success());
    assert!(sbm_gft(&["z5-fig5b"], b.path()).status.success());
    let x = fs::read(a.path().join("z5_fig5b.csv")).unwrap();
    assert_eq!(x, fs::read(b.path().join("z5_fig5b.csv")).unwrap());
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("# sbm-gft "));
    assert_eq!(text.lines().count(), 2 + 10);

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "z5-fig5b");
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap(), sbm_gft::io::sha256_hex(text.as_bytes()));
}

#[test]
fn sample_roundtrips_through_edge_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "spec.json", r#"{"A":[[0.5,0.1],[0.1,0.5]],"mu":[0.5,0.5],"N":40}"#);
    let out = sbm_gft(&["sample", "--config", &cfg, "--seed", "9"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let edges = fs::read_to_string(dir.path().join("edges.csv")).unwrap();
    let header = fs::read_to_string(dir.path().join("graph.json")).unwrap();
    let g = sbm_gft::io::graph_from_csv(&edges, &header).unwrap();
    let spec = sbm_gft::io::RunConfig::from_json(&fs::read_to_string(&cfg).unwrap()).unwrap().spec(None).unwrap();
    assert_eq!(g.to_dense(), sbm_gft::sbm_model::sample_graph(&spec, 9).to_dense());
    assert!(header.contains("\"seed\": 9"));
}

#[test]
fn basis_and_gft_outputs() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "x.csv", "value\n1\n0\n0\n0\n");
    let cfg = write(dir.path(), "star.json", r#"{"A":[[0,1],[1,0]],"mu":[0.75,0.25],"N":4,"signal":"x.csv"}"#);
    assert!(sbm_gft(&["basis", "--config", &cfg], dir.path()).status.success());
    let basis = fs::read_to_string(dir.path().join("basis.csv")).unwrap();
    let mut lines = basis.lines();
    assert!(lines.next().unwrap().starts_with("# sbm-gft"));
    assert_eq!(lines.next().unwrap(), "eigen_index,W_eigenvalue,v0,v1,v2,v3");
    assert_eq!(lines.count(), 2);

    let out = sbm_gft(&["gft", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let gft = fs::read_to_string(dir.path().join("gft.csv")).unwrap();
    let rows: Vec<Vec<f64>> = gft
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|s| s.parse().unwrap()).collect())
        .collect();
    let energy: f64 = rows.iter().map(|r| r[4] * r[4]).sum();
    assert!((energy - 1.0).abs() < 1e-12);
    assert_eq!(rows.len(), 3);
}

#[test]
fn compare_bases_and_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "z5.json",
        r#"{"group":[5],"connection":{"0":0.2,"1":0.8,"2":0.2,"3":0.2,"4":0.8},"mu":[0.4,0.15,0.15,0.15,0.15],"N":20,"trials":3,"epsilons":[0.05]}"#,
    );
    assert!(sbm_gft(&["compare-bases", "--config", &cfg], dir.path()).status.success());
    let cmp = fs::read_to_string(dir.path().join("compare_bases.csv")).unwrap();
    let third: Vec<&str> = cmp.lines().nth(4).unwrap().split(',').collect();
    assert_eq!(third[0], "3");
    assert!((third[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-8);

    let out = sbm_gft(&["perturb-sweep", "--config", &cfg, "--seed", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 bound violations"));
    let sweep = fs::read_to_string(dir.path().join("perturb_sweep.csv")).unwrap();
    assert!(sweep.lines().nth(1).unwrap().starts_with("trial,epsilon,lambda,d,gamma,bound"));
}

#[test]
fn table1_at_small_scale() {
    let dir = TempDir::new().unwrap();
    let out = sbm_gft(&["z5-table1", "--scale", "600", "--seed", "5"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = fs::read_to_string(dir.path().join("z5_table1.csv")).unwrap();
    let lines: Vec<&str> = t.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("model,,600,"));
    assert!(lines[3].starts_with("sample,5,600,"));
}

#[test]
fn validation_failures_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let missing = sbm_gft(&["basis"], dir.path());
    assert_eq!(missing.status.code(), Some(2));

    let bad = write(dir.path(), "bad.json", r#"{"A":[[1.5]],"N":3}"#);
    let out = sbm_gft(&["basis", "--config", &bad], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.5"));

    let typo = write(dir.path(), "typo.json", r#"{"A":[[0.5]],"N":3,"sedes":[1]}"#);
    assert_eq!(sbm_gft(&["basis", "--config", &typo], dir.path()).status.code(), Some(2));

    let nofile = dir.path().join("absent.json");
    assert_eq!(sbm_gft(&["basis", "--config", nofile.to_str().unwrap()], dir.path()).status.code(), Some(2));

    assert_eq!(sbm_gft(&["z5-fig4", "--scale", "1000"], dir.path()).status.code(), Some(2));
}
