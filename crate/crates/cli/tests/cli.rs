use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn spinsep(config: &Path, out: &Path, command: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinsep"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--command")
        .arg(command)
        .output()
        .unwrap()
}

fn setup(dir: &Path, text: &str) -> (PathBuf, PathBuf) {
    let config = dir.join("run.conf");
    fs::write(&config, text).unwrap();
    (config, dir.join("out"))
}

const SHORT: &str = "N = 3\nomega = 10\na = 1\ninitial = 2\ndt = 0.001\nt_end = 20\n";

#[test]
fn malformed_config_is_a_usage_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (config, out) = setup(dir.path(), "N = 3\nomgea = 10\n");
    let res = spinsep(&config, &out, "evolve");
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("omgea"));
    assert!(!out.exists());
}

#[test]
fn initial_index_out_of_range_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (config, out) = setup(dir.path(), "N = 3\ninitial = 9\nt_end = 1\n");
    assert_eq!(spinsep(&config, &out, "evolve").status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn unnormalized_amplitudes_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (config, out) = setup(dir.path(), "N = 2\namplitudes = 1, 1, 0, 0\nt_end = 1\n");
    assert_eq!(spinsep(&config, &out, "evolve").status.code(), Some(1));
}

#[test]
fn oracle_refuses_large_systems() {
    let dir = tempfile::tempdir().unwrap();
    let (config, out) = setup(dir.path(), "N = 11\nt_end = 1\n");
    let res = spinsep(&config, &out, "oracle");
    assert_eq!(res.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn missing_config_file_and_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    let res = spinsep(
        &dir.path().join("absent.conf"),
        &dir.path().join("out"),
        "evolve",
    );
    assert_eq!(res.status.code(), Some(1));

    let res = Command::new(env!("CARGO_BIN_EXE_spinsep"))
        .arg("--bogus")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    let res = Command::new(env!("CARGO_BIN_EXE_spinsep"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));

    let (config, out) = setup(dir.path(), SHORT);
    assert_eq!(spinsep(&config, &out, "relax").status.code(), Some(1));
}

#[test]
fn evolve_writes_headed_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let (config, out) = setup(dir.path(), SHORT);
    let res = spinsep(&config, &out, "evolve");
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let iz = fs::read_to_string(out.join("evolve_iz.csv")).unwrap();
    assert!(iz.starts_with("# spinsep"));
    let data: Vec<&str> = iz.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "t,Iz1,Iz2,Iz3");
    // t = 0 .. 20 every 10 steps of 1e-3
    assert_eq!(data.len() - 1, 2001);
    assert!(out.join("evolve_diagnostics.csv").exists());
    assert!(out.join("evolve_summary.txt").exists());
}

#[test]
fn uncoupled_spins_give_constant_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (config, out) = setup(dir.path(), "N = 3\na = 0\ninitial = 2\nt_end = 5\n");
    assert!(spinsep(&config, &out, "evolve").status.success());
    let iz = fs::read_to_string(out.join("evolve_iz.csv")).unwrap();
    let rows: Vec<Vec<f64>> = iz
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect())
        .collect();
    for row in &rows {
        assert!((row[0] + 0.5).abs() < 1e-12);
        assert!((row[1] - 0.5).abs() < 1e-12);
        assert!((row[2] - 0.5).abs() < 1e-12);
    }
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn zero_rate_jumps_match_plain_evolution() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SHORT}rate = 0\nn_trajectories = 3\nstochastic = true\n");
    let (config, out) = setup(dir.path(), &text);
    let res = spinsep(&config, &out, "jumps");
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(spinsep(&config, &out, "evolve").status.success());

    let series = data_rows(&out.join("evolve_iz.csv"));
    let stochastic = data_rows(&out.join("jumps_stochastic.csv"));
    for (spin, row) in stochastic.iter().enumerate() {
        let mean = series.iter().map(|r| r[spin + 1]).sum::<f64>() / series.len() as f64;
        // members never jump, so they all agree and the spread is zero
        assert!(
            (row[1] - mean).abs() < 1e-15,
            "spin {}: {} vs {mean}",
            spin + 1,
            row[1]
        );
        assert_eq!(row[2], 0.0);
    }
}

#[test]
fn separability_flags_three_and_five() {
    let dir = tempfile::tempdir().unwrap();
    let (config, out) = setup(dir.path(), SHORT);
    assert!(spinsep(&config, &out, "separability").status.success());
    let csv = fs::read_to_string(out.join("separability.csv")).unwrap();
    let flagged: Vec<usize> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("target"))
        .filter(|l| l.ends_with("true"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(flagged, vec![3, 5]);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SHORT}seed = 5\nrate = 1\nn_trajectories = 4\nstochastic = true\n");
    let (config, _) = setup(dir.path(), &text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(spinsep(&config, &a, "jumps").status.success());
    assert!(spinsep(&config, &b, "jumps").status.success());
    for name in ["jumps.txt", "jumps.csv", "jumps_stochastic.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}
