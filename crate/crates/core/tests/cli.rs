use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_timebin");

fn timebin(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("spawn timebin")
}

fn run_into(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    let o = timebin(&all);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("cfg.toml");
    fs::write(&p, text).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const RUNS: &[(&[&str], &[&str])] = &[
    (
        &["retrieval-sweep", "--trials", "100000"],
        &["retrieval.csv"],
    ),
    (
        &["selectivity-sweep", "--trials", "10000000"],
        &["selectivity.csv"],
    ),
    (
        &["fringe-scan", "--trials", "10000000"],
        &["fringe_scan.csv", "fringe_fit.csv"],
    ),
    (
        &["visibility-sweep", "--trials", "10000000"],
        &["visibility.csv"],
    ),
    (
        &["bell", "--trials", "200000"],
        &["bell.csv", "bell_components.csv"],
    ),
    (&["lock-sim"], &["lock_trajectory.csv", "lock_summary.csv"]),
];

#[test]
fn every_subcommand_is_deterministic() {
    for (args, files) in RUNS {
        let a = TempDir::new().unwrap();
        let b = TempDir::new().unwrap();
        run_into(a.path(), &[args, &["--seed", "9"][..]].concat());
        run_into(b.path(), &[args, &["--seed", "9"][..]].concat());
        for f in *files {
            let (x, y) = (read(a.path(), f), read(b.path(), f));
            assert!(!body(&x).is_empty(), "{f} empty");
            assert_eq!(x, y, "{f} differs between identical runs");
        }
    }
}

#[test]
fn seed_changes_sampled_output() {
    let a = timebin(&["selectivity-sweep", "--trials", "1000000", "--seed", "1"]);
    let b = timebin(&["selectivity-sweep", "--trials", "1000000", "--seed", "2"]);
    assert_ne!(
        body(&String::from_utf8_lossy(&a.stdout)),
        body(&String::from_utf8_lossy(&b.stdout))
    );
}

#[test]
fn headers_record_hash_seed_and_trials() {
    let o = timebin(&["bell", "--trials", "50000", "--seed", "17"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(
        header.starts_with("# timebin bell config_hash="),
        "{header}"
    );
    assert!(header.contains(" seed=17 "), "{header}");
    assert!(header.contains(" trials=50000"), "{header}");
    let hash = header
        .split("config_hash=")
        .nth(1)
        .unwrap()
        .split(' ')
        .next()
        .unwrap();
    assert_eq!(hash.len(), 16);

    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "mu = 0.03\n");
    let o = timebin(&[
        "bell",
        "--trials",
        "50000",
        "--seed",
        "17",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    let other = String::from_utf8(o.stdout).unwrap();
    assert!(
        !other.lines().next().unwrap().contains(hash),
        "hash must follow the configuration"
    );
}

#[test]
fn bell_events_round_trip_through_analyze() {
    let dir = TempDir::new().unwrap();
    run_into(
        dir.path(),
        &["bell", "--events", "--trials", "200000", "--seed", "4"],
    );
    let events: Vec<String> = (0..4)
        .map(|k| {
            dir.path()
                .join(format!("events_{k}.csv"))
                .to_str()
                .unwrap()
                .to_owned()
        })
        .collect();
    let again = TempDir::new().unwrap();
    let mut args = vec!["analyze"];
    args.extend(events.iter().map(String::as_str));
    run_into(again.path(), &args);
    for f in ["bell.csv", "bell_components.csv"] {
        assert_eq!(
            body(&read(dir.path(), f)),
            body(&read(again.path(), f)),
            "{f}"
        );
    }
    let hist = read(again.path(), "histogram.csv");
    assert_eq!(body(&hist).lines().count(), 13);
    assert!(read(again.path(), "correlations.csv").lines().count() >= 5);
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad_key = write_config(&dir, "not_a_key = 1\n");
    assert_eq!(
        code(&timebin(&["bell", "--config", bad_key.to_str().unwrap()])),
        2
    );
    let bad_value = write_config(&dir, "detector_efficiency = 1.5\n");
    assert_eq!(
        code(&timebin(&[
            "selectivity-sweep",
            "--config",
            bad_value.to_str().unwrap()
        ])),
        2
    );
    assert_eq!(code(&timebin(&["no-such-command"])), 2);
    assert_eq!(code(&timebin(&["bell", "--trials", "0"])), 2);
    assert_eq!(code(&timebin(&["bell", "--events"])), 2);
}

#[test]
fn truncation_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "mu = 2.0\nmu_values = [2.0]\n");
    let o2 = timebin(&[
        "visibility-sweep",
        "--trials",
        "1000",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&o2), 3, "{}", String::from_utf8_lossy(&o2.stderr));
    let o3 = timebin(&[
        "bell",
        "--trials",
        "1000",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&o3), 3, "{}", String::from_utf8_lossy(&o3.stderr));
}

#[test]
fn analysis_failures_exit_4() {
    let dir = TempDir::new().unwrap();
    let garbage = dir.path().join("garbage.csv");
    fs::write(
        &garbage,
        "# config_hash=abc seed=1 trials=10\ntrial_id,detector,peak\n1,D9+,X\n",
    )
    .unwrap();
    assert_eq!(code(&timebin(&["analyze", garbage.to_str().unwrap()])), 4);

    let empty = dir.path().join("empty.csv");
    fs::write(
        &empty,
        "# config_hash=abc seed=1 trials=10\ntrial_id,detector,peak\n",
    )
    .unwrap();
    let o = timebin(&["analyze", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}
