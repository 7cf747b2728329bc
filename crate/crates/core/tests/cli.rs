//! End-to-end runs of the `wwkde` binary.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use wwkde::densities::{DensityModel, DensityName, SeededStream};
use wwkde::experiments::{online_selection_protocol, OnlineConfig, ProtocolSettings, ReplicationGrid};
use wwkde::kernels::StandardKernel;
use wwkde::selection::SelectionResult;

fn wwkde(args: &[&str], stdin: Option<&[u8]>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_wwkde"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(bytes) = stdin {
            pipe.write_all(bytes).unwrap();
        }
    }
    child.wait_with_output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

fn write_sample(path: &Path, values: &[f64]) {
    let text: String = values.iter().map(|x| format!("{x:?}\n")).collect();
    std::fs::write(path, text).unwrap();
}

#[test]
fn estimate_of_single_observation() {
    let out = ok(&wwkde(
        &["estimate", "--kernel", "K1", "--gamma", "0.2", "--a", "-3", "--b", "3", "--points", "61"],
        Some(b"0.0\n"),
    ));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], vec!["x", "density"]);
    assert_eq!(rows.len(), 62);
    let at_zero = rows.iter().find(|r| r[0] == "0.0").expect("grid contains 0");
    assert!((at_zero[1].parse::<f64>().unwrap() - 0.398942).abs() < 1e-6);
}

#[test]
fn estimate_is_deterministic_and_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    write_sample(&input, &[0.3, -1.2, 2.5, 0.0, 0.7]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&wwkde(
            &["estimate", "--input", input.to_str().unwrap(), "--kernel", "K5", "--out", out.to_str().unwrap()],
            None,
        ));
        std::fs::read(out.join("estimate.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
    let sidecar = std::fs::read_to_string(dir.path().join("a/resolved.toml")).unwrap();
    assert!(sidecar.contains("[estimate]") && sidecar.contains("kernel = \"K5\""));

    // Feeding the resolved config back reproduces the run.
    let again = dir.path().join("c");
    ok(&wwkde(
        &["--config", dir.path().join("a/resolved.toml").to_str().unwrap(), "estimate", "--out", again.to_str().unwrap()],
        None,
    ));
    assert_eq!(run("d"), std::fs::read(again.join("estimate.csv")).unwrap());
}

#[test]
fn bad_inputs_fail_cleanly() {
    let empty = wwkde(&["estimate"], Some(b"# nothing here\n"));
    assert!(!empty.status.success());
    assert!(String::from_utf8_lossy(&empty.stderr).contains("no observations"));

    let malformed = wwkde(&["estimate"], Some(b"1.0\n2.0\nthree\n"));
    assert!(!malformed.status.success());
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("line 3"));

    let missing = wwkde(&["estimate", "--input", "/nonexistent/sample.txt"], None);
    assert!(!missing.status.success());

    let unknown = wwkde(&["estimate", "--kernel", "K2"], Some(b"0\n"));
    assert!(!unknown.status.success());

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[estimate]\ngama = 0.1\n").unwrap();
    let bad = wwkde(&["--config", config.to_str().unwrap(), "estimate"], Some(b"0\n"));
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("gama"));
}

fn f1_sample_file(dir: &Path, n: usize) -> (std::path::PathBuf, Vec<f64>) {
    let sample = DensityModel::named(DensityName::F1).unwrap().sample(SeededStream::new(4, 0), n);
    let path = dir.join("f1.txt");
    write_sample(&path, sample.observations());
    (path, sample.observations().to_vec())
}

#[test]
fn select_singleton_and_dominant_upsilon() {
    let dir = tempfile::tempdir().unwrap();
    let (input, _) = f1_sample_file(dir.path(), 200);
    let input = input.to_str().unwrap();
    let single: SelectionResult =
        serde_json::from_str(&ok(&wwkde(&["select", "--input", input, "--grid-size", "1", "--gamma-max", "0.3"], None))).unwrap();
    assert_eq!(single.chosen_gamma, 0.3);
    assert_eq!(single.per_candidate.len(), 1);

    let gl: SelectionResult = serde_json::from_str(&ok(&wwkde(
        &["select", "--input", input, "--method", "gl", "--upsilon", "1e6", "--grid-size", "8"],
        None,
    )))
    .unwrap();
    assert_eq!(gl.chosen_index, 0);

    let out = dir.path().join("sel");
    ok(&wwkde(&["select", "--input", input, "--grid-size", "8", "--out", out.to_str().unwrap()], None));
    let rows = csv_rows(&std::fs::read_to_string(out.join("criterion.csv")).unwrap());
    assert_eq!(rows[0], vec!["gamma", "criterion", "penalty", "distance"]);
    assert_eq!(rows.len(), 9);
    assert!(out.join("selection.json").exists() && out.join("resolved.toml").exists());
}

/// Independent evaluation of the LMR criterion, written from the definitions.
fn reference_lmr(xs: &[f64], grid_points: &[f64], spacing: f64, gammas: &[f64]) -> usize {
    let weights = [4.0, -6.0, 4.0, -1.0];
    let n = xs.len();
    let estimate = |gamma: f64| -> Vec<f64> {
        grid_points
            .iter()
            .map(|&x| {
                let mut s = 0.0;
                for (k, &xk) in xs.iter().enumerate() {
                    let h2 = ((k + 1) as f64).powf(-2.0 * gamma);
                    for (i, w) in weights.iter().enumerate() {
                        let v = (i + 1) as f64 * h2;
                        s += w * (-(x - xk).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
                    }
                }
                s / n as f64
            })
            .collect()
    };
    let gmax = *gammas.last().unwrap();
    let reference = estimate(gmax);
    let mut best = (0, f64::INFINITY);
    for (j, &g) in gammas.iter().enumerate() {
        let f = estimate(g);
        let dist: f64 = spacing * f.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut pen = 0.0;
        for k in 1..=n {
            let (a2, b2) = ((k as f64).powf(-2.0 * gmax), (k as f64).powf(-2.0 * g));
            for (i, wi) in weights.iter().enumerate() {
                for (l, wl) in weights.iter().enumerate() {
                    pen += wi * wl / (2.0 * PI * ((i + 1) as f64 * a2 + (l + 1) as f64 * b2)).sqrt();
                }
            }
        }
        let crit = dist + 2.0 * pen / (n * n) as f64;
        if crit < best.1 {
            best = (j, crit);
        }
    }
    best.0
}

#[test]
fn select_matches_reference_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let (input, xs) = f1_sample_file(dir.path(), 1000);
    let grid_size = 10;
    let result: SelectionResult = serde_json::from_str(&ok(&wwkde(
        &["select", "--input", input.to_str().unwrap(), "--kernel", "K7", "--grid-size", &grid_size.to_string()],
        None,
    )))
    .unwrap();
    let settings = ProtocolSettings {
        grid_size,
        ..ProtocolSettings::default()
    };
    let gammas = settings.gamma_grid().unwrap();
    let sample = wwkde::estimator::Sample::new(xs.clone()).unwrap();
    let grid = ReplicationGrid::new(&sample, &StandardKernel::K7.kernel(), &gammas, &settings).unwrap();
    let expected = reference_lmr(&xs, grid.grid.points(), grid.grid.spacing(), gammas.values());
    assert!(result.chosen_index.abs_diff(expected) <= 1, "{} vs {expected}", result.chosen_index);
}

#[test]
fn benchmark_smoke_and_seed_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&wwkde(
            &[
                "benchmark", "--density", "f1,f4", "--n", "80", "--kernel", "K1,K3", "--reps", "2", "--seed", "17",
                "--grid-size", "6", "--out", out.to_str().unwrap(),
            ],
            None,
        ));
        out
    };
    let a = run("a");
    let b = run("b");
    let table = std::fs::read_to_string(a.join("mise.csv")).unwrap();
    assert_eq!(table, std::fs::read_to_string(b.join("mise.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
    let rows = csv_rows(&table);
    assert_eq!(rows[0], vec!["density", "n", "method", "kernel", "mise", "std"]);
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        assert!(row[4].parse::<f64>().unwrap() > 0.0);
        assert!(row[5].parse::<f64>().unwrap() >= 0.0);
    }
    let resolved = std::fs::read_to_string(a.join("resolved.toml")).unwrap();
    assert!(resolved.contains("seed = 17"));
}

#[test]
fn frozen_and_trajectory_commands() {
    let frozen = ok(&wwkde(&["frozen", "--density", "f3", "--n", "60", "--reps", "2", "--grid-size", "5"], None));
    let rows = csv_rows(&frozen);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][2], "60");
    assert_eq!(rows[1][3], "120");

    let traj = ok(&wwkde(&["trajectory", "--n-start", "20", "--n", "40", "--grid-size", "7"], None));
    let rows = csv_rows(&traj);
    assert_eq!(rows[0], vec!["k", "gamma"]);
    assert_eq!(rows.len(), 22);
}

#[test]
fn stream_without_input_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let text = ok(&wwkde(&["stream", "--out", out.to_str().unwrap()], Some(b"")));
    assert_eq!(csv_rows(&text).len(), 1);
    assert!(!out.join("snapshot.csv").exists());
}

#[test]
fn stream_agrees_with_protocol_and_estimate() {
    let draws = ok(&wwkde(&["sample", "--density", "f2", "--n", "1000", "--seed", "8", "--stream-id", "3"], None));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let text = ok(&wwkde(
        &["stream", "--out", out.to_str().unwrap(), "--snapshot-every", "500"],
        Some(draws.as_bytes()),
    ));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1 + 951);
    let last = rows.last().unwrap();
    assert_eq!(last[0], "1000");
    let streamed: f64 = last[1].parse().unwrap();

    let record = online_selection_protocol(&OnlineConfig {
        density: DensityName::F2,
        kernel: StandardKernel::K1,
        n_start: 50,
        n_end: 1000,
        grid_size: 50,
        gamma_max: 0.5,
        points: 100,
        seed: 8,
        stream_id: 3,
    })
    .unwrap();
    assert_eq!(record.gammas.last().unwrap().1, streamed);
    assert!(out.join("snapshot_500.csv").exists());

    // The chosen row of the final snapshot is the batch estimate on the same grid.
    let snapshot = csv_rows(&std::fs::read_to_string(out.join("snapshot.csv")).unwrap());
    let points: Vec<f64> = snapshot[0][1..].iter().map(|s| s.parse().unwrap()).collect();
    let row = snapshot[1..]
        .iter()
        .find(|r| r[0].parse::<f64>().unwrap() == streamed)
        .expect("chosen exponent has a row");
    let est = ok(&wwkde(
        &[
            "estimate", "--gamma", &row[0], "--a", &format!("{:?}", points[0]), "--b",
            &format!("{:?}", points[points.len() - 1]), "--points", &points.len().to_string(),
        ],
        Some(draws.as_bytes()),
    ));
    let batch = csv_rows(&est);
    for (i, r) in batch[1..].iter().enumerate() {
        let x: f64 = r[0].parse().unwrap();
        assert!((x - points[i]).abs() < 1e-12);
        let v: f64 = r[1].parse().unwrap();
        let s: f64 = row[i + 1].parse().unwrap();
        assert!((v - s).abs() < 1e-10, "{v} vs {s}");
    }
}

#[test]
fn gamma_mean_and_curves_commands() {
    let table = ok(&wwkde(&["gamma-mean", "--n", "50,100", "--reps", "2", "--grid-size", "5", "--format", "csv"], None));
    let rows = csv_rows(&table);
    assert_eq!(rows[0], vec!["density", "kernel", "n", "mean_gamma", "std_gamma"]);
    assert_eq!(rows.len(), 3);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    ok(&wwkde(
        &["curves", "--n", "100", "--reps", "3", "--grid-size", "4", "--out", out.to_str().unwrap()],
        None,
    ));
    let curves = csv_rows(&std::fs::read_to_string(out.join("curves.csv")).unwrap());
    assert_eq!(curves[0].len(), 1 + 4 + 1);
    assert_eq!(curves.len(), 101);
    let beam = csv_rows(&std::fs::read_to_string(out.join("beam.csv")).unwrap());
    assert_eq!(beam[0], vec!["x", "rep0", "rep1", "rep2", "truth"]);
}
