use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use specdist::io::{read_distance_matrix, write_point_cloud};
use specdist::oracle::sample_uniform_circle;
use specdist::pipeline::{estimate_matrix, EstimateRequest, QChoice};
use specdist::{ManifoldConfig, OptimizerConfig};
use tempfile::TempDir;

fn specdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specdist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_matrix(p: &Path) -> Vec<Vec<f64>> {
    let m = read_distance_matrix(fs::File::open(p).unwrap()).unwrap();
    (0..m.len()).map(|i| m.row(i).to_vec()).collect()
}

fn circle_csv(dir: &TempDir, n: usize, seed: u64) -> std::path::PathBuf {
    let p = dir.path().join("cloud.csv");
    let cloud = sample_uniform_circle(n, seed).unwrap();
    write_point_cloud(&cloud, fs::File::create(&p).unwrap()).unwrap();
    p
}

#[test]
fn two_points_are_at_least_euclidean_apart() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("two.csv");
    fs::write(&input, "x,y\n1,0\n0,1\n").unwrap();
    let output = dir.path().join("d.csv");
    let out = specdist(&[
        "estimate",
        "--input",
        path(&input),
        "--dim",
        "1",
        "--volume",
        "6.283185307179586",
        "--bandwidth",
        "0.5",
        "--q",
        "1",
        "--r",
        "1",
        "--output",
        path(&output),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let d = read_matrix(&output);
    assert_eq!(d[0][0], 0.0);
    assert_eq!(d[0][1], d[1][0]);
    assert!(d[0][1] >= 2f64.sqrt());
    assert!(stderr(&out).contains("q = 1, r = 1, rank = 1"));
}

#[test]
fn malformed_row_exits_one_naming_the_line() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "x,y\n1,0\n0,1\n-1,0\n0,-1\n0.5,0.5\nfoo,1\n").unwrap();
    let out = specdist(&[
        "baseline",
        "--input",
        path(&input),
        "--radius",
        "1",
        "--output",
        path(&dir.path().join("d.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 7"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_one() {
    let out = specdist(&["estimate", "--input", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let out = specdist(&["bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(specdist(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = specdist(&[
        "baseline",
        "--input",
        path(&dir.path().join("absent.csv")),
        "--radius",
        "1",
        "--output",
        path(&dir.path().join("d.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_radius_baseline_is_disconnected() {
    let dir = TempDir::new().unwrap();
    let input = circle_csv(&dir, 6, 3);
    let output = dir.path().join("d.csv");
    let out = specdist(&[
        "baseline",
        "--input",
        path(&input),
        "--radius",
        "0",
        "--output",
        path(&output),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&output).unwrap();
    for (i, line) in text.lines().enumerate() {
        for (j, cell) in line.split(',').enumerate() {
            if i == j {
                assert_eq!(cell.parse::<f64>().unwrap(), 0.0);
            } else {
                assert_eq!(cell, "inf");
            }
        }
    }
}

#[test]
fn estimate_is_deterministic_and_matches_library() {
    let dir = TempDir::new().unwrap();
    let n = 50;
    let input = circle_csv(&dir, n, 11);
    let h = (n as f64).powf(-0.25);
    let run = |name: &str| {
        let output = dir.path().join(name);
        let out = specdist(&[
            "estimate",
            "--input",
            path(&input),
            "--dim",
            "1",
            "--volume",
            "6.283185307179586",
            "--bandwidth",
            &h.to_string(),
            "--adaptive",
            "--seed",
            "5",
            "--samples",
            "200",
            "--refine",
            "5",
            "--output",
            path(&output),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        read_matrix(&output)
    };
    let first = run("a.csv");
    assert_eq!(first, run("b.csv"));

    let cloud = sample_uniform_circle(n, 11).unwrap();
    let req = EstimateRequest {
        manifold: ManifoldConfig::new(1, std::f64::consts::TAU, h).unwrap(),
        q: QChoice::Adaptive { epsilon: 0.0 },
        r: None,
        optimizer: OptimizerConfig {
            n_samples: 200,
            n_refine: 5,
            seed: 5,
            ..OptimizerConfig::default()
        },
    };
    let report = estimate_matrix(&cloud, &req).unwrap();
    for (i, row) in first.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(
                v.to_bits(),
                report.distances.get(i, j).to_bits(),
                "({i}, {j})"
            );
        }
    }
}

#[test]
fn no_admissible_q_exits_two() {
    let dir = TempDir::new().unwrap();
    let input = circle_csv(&dir, 8, 2);
    let out = specdist(&[
        "estimate",
        "--input",
        path(&input),
        "--dim",
        "1",
        "--volume",
        "6.283185307179586",
        "--bandwidth",
        "0.4",
        "--adaptive",
        "--epsilon",
        "1e9",
        "--output",
        path(&dir.path().join("d.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn loss_experiment_writes_rows_and_summary() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("loss.csv");
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{"n_values": [10, 20], "q_values": {{"fixed": [3], "adaptive": true}},
                "n_seeds": 2, "base_seed": 1, "output_path": {:?}}}"#,
            path(&csv)
        ),
    )
    .unwrap();
    let out = specdist(&["loss-experiment", "--config", path(&config)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = fs::read_to_string(&csv).unwrap();
    // Header plus 2 sizes x 2 q choices x 2 seeds.
    assert_eq!(rows.lines().count(), 9);
    assert!(dir.path().join("loss_summary.csv").exists());
    assert!(dir.path().join("loss_meta.json").exists());
}

#[test]
fn unknown_config_field_exits_one() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"n_values": [10], "bogus": 1}"#).unwrap();
    let out = specdist(&["loss-experiment", "--config", path(&config)]);
    assert_eq!(out.status.code(), Some(1));
}
