use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use lhv_bell::chsh::{fit_cosine_amplitude, ChshSettings};
use lhv_bell::io::{read_curve_file, write_events, OutcomeRecord};
use lhv_bell::model::Angle;
use lhv_bell::montecarlo::{draw_samples, simulate_outcomes};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lhv-bell"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn lhv-bell")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Value after `label` on the first report line that starts with it.
fn report_value(report: &str, label: &str) -> f64 {
    let line = report
        .lines()
        .find(|l| l.starts_with(label))
        .unwrap_or_else(|| panic!("no {label:?} in\n{report}"));
    line.split('=')
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn help_for_every_subcommand() {
    for sub in ["sweep", "chsh", "analyze"] {
        let o = run(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn sweep_defaults_fit_half_amplitude() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("curve.csv");
    let o = run(&["sweep", "--out-csv", path_str(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let curve = read_curve_file(&csv).unwrap();
    assert_eq!(curve.len(), 1000);
    let fit = fit_cosine_amplitude(&curve, Angle::ZERO).unwrap();
    assert!((fit.amplitude - 0.5).abs() < 0.01, "{fit:?}");
}

#[test]
fn sweep_single_point() {
    let o = run(&["sweep", "--n-points", "1", "--alpha", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let corr: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert!((corr + 0.5).abs() < 0.013, "{corr}");
}

#[test]
fn sweep_qm_analytic_is_full_cosine() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("qm.csv");
    let o = run(&[
        "sweep",
        "--model",
        "qm-analytic",
        "--n-points",
        "91",
        "--out-csv",
        path_str(&csv),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let curve = read_curve_file(&csv).unwrap();
    assert_eq!(curve.len(), 91);
    for p in &curve.points {
        assert!((p.corr + (2.0 * p.beta).cos()).abs() < 1e-15, "{p:?}");
        assert_eq!((p.stderr, p.n), (0.0, 0));
    }
}

#[test]
fn sweep_csv_is_byte_identical_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "4", "4"].iter().enumerate() {
        let csv = dir.path().join(format!("c{k}.csv"));
        let o = run(&[
            "--threads",
            threads,
            "sweep",
            "--n-pairs",
            "20000",
            "--n-points",
            "200",
            "--out-csv",
            path_str(&csv),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn sweep_svg_is_well_formed() {
    let dir = TempDir::new().unwrap();
    let svg = dir.path().join("plot.svg");
    let csv = dir.path().join("plot.csv");
    let o = run(&[
        "sweep",
        "--n-pairs",
        "5000",
        "--n-points",
        "100",
        "--out-csv",
        path_str(&csv),
        "--out-svg",
        path_str(&svg),
        "--compare-qm",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed XML");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.attribute("viewBox"), Some("0 0 800 500"));
    let count = |name: &str| doc.descendants().filter(|n| n.has_tag_name(name)).count();
    assert_eq!(count("polyline"), 2);
    assert_eq!(count("line"), 3);
    let polyline = doc
        .descendants()
        .find(|n| n.has_tag_name("polyline"))
        .unwrap();
    assert_eq!(
        polyline.attribute("points").unwrap().split(' ').count(),
        100
    );
}

#[test]
fn sweep_degrees_flag() {
    let o = run(&[
        "sweep",
        "--model",
        "lhv-analytic",
        "--degrees",
        "--n-points",
        "3",
        "--beta-end",
        "90",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    assert!((last[0] - PI / 2.0).abs() < 1e-15);
    assert!((last[1] - 0.5).abs() < 1e-15);
}

#[test]
fn sweep_config_file_and_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "n_pairs = 3000\nseed = 9\nmode = \"independent\"\nn_points = 5\n",
    )
    .unwrap();
    let o = run(&["sweep", "--config", path_str(&cfg), "--n-points", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().ends_with(",3000"));

    std::fs::write(&cfg, "n_pairs = 3000\nbogus = 1\n").unwrap();
    let o = run(&["sweep", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_usage_errors() {
    for args in [
        &["sweep", "--n-pairs", "0"][..],
        &["sweep", "--n-points", "0"],
        &["sweep", "--mode", "sometimes"],
        &["sweep", "--alpha", "abc"],
        &["sweep", "--alpha", "inf"],
        &["sweep", "--beta-start", "1", "--beta-end", "0.5"],
        &["sweep", "--model", "qm-analytic", "--emit-events", "x.txt"],
        &["--threads", "0", "sweep", "--n-points", "2"],
        &["frobnicate"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn sweep_unwritable_output() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("missing").join("curve.csv");
    let o = run(&[
        "sweep",
        "--n-points",
        "2",
        "--n-pairs",
        "10",
        "--out-csv",
        path_str(&csv),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("curve.csv"));
}

#[test]
fn chsh_maximize() {
    let o = run(&["chsh", "--model", "lhv", "--maximize", "--grid", "64"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!((report_value(&text, "|S|") - 2f64.sqrt()).abs() < 0.01);
    assert!(text.contains("verdict: satisfies |S| ≤ 2"));

    let o = run(&["chsh", "--model", "qm", "--maximize", "--grid", "64"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!((report_value(&text, "|S|") - 2.0 * 2f64.sqrt()).abs() < 0.02);
    assert!(text.contains("verdict: violates |S| ≤ 2"));
}

#[test]
fn chsh_fixed_settings() {
    let o = run(&[
        "chsh", "--model", "lhv", "-a", "0", "-A", "0", "-b", "0", "-B", "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!((report_value(&stdout(&o), "S ") + 1.0).abs() < 1e-6);

    let o = run(&[
        "chsh",
        "--model",
        "qm-mc",
        "--degrees",
        "-a",
        "0",
        "-A",
        "45",
        "-b",
        "22.5",
        "-B",
        "67.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!((report_value(&text, "|S|") - 2.828).abs() < 0.05);
    assert!(text.contains("violates"));
}

#[test]
fn chsh_usage_errors() {
    for args in [
        &["chsh"][..],
        &["chsh", "-a", "0"],
        &[
            "chsh",
            "-a",
            "0",
            "-A",
            "0",
            "-b",
            "0",
            "-B",
            "0",
            "--maximize",
        ],
        &["chsh", "--model", "lhv-mc", "--maximize"],
        &["chsh", "--maximize", "--grid", "1"],
        &["chsh", "--model", "bogus", "--maximize"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn analyze_round_trip_from_sweep_events() {
    let dir = TempDir::new().unwrap();
    let events = dir.path().join("events.txt");
    let o = run(&[
        "sweep",
        "--n-points",
        "1",
        "--emit-events",
        path_str(&events),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = dir.path().join("groups.csv");
    let o = run(&["analyze", path_str(&events), "--out-csv", path_str(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,beta,corr,stderr,n"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let corr: f64 = row[2].parse().unwrap();
    assert!((corr + 0.5).abs() < 0.013, "{corr}");
    assert_eq!(row[4], "100000");
    assert!(lines.next().is_none());
}

#[test]
fn analyze_chsh_quadruple_from_simulator() {
    let dir = TempDir::new().unwrap();
    let events = dir.path().join("quad.txt");
    let settings = ChshSettings::optimal();
    let mut records = Vec::new();
    for (k, (a, b)) in settings.pairs().into_iter().enumerate() {
        let samples = draw_samples(50_000, 11, &format!("quad-{k}")).unwrap();
        records.extend(
            simulate_outcomes(&samples, a, b)
                .into_iter()
                .map(|p| OutcomeRecord {
                    alpha: a,
                    beta: b,
                    x: p.x,
                    y: p.y,
                }),
        );
    }
    write_events(std::fs::File::create(&events).unwrap(), &records).unwrap();
    let o = run(&[
        "analyze",
        path_str(&events),
        "--out-csv",
        path_str(&dir.path().join("g.csv")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let s = report_value(&text, "|S|");
    assert!(s < 2.0 && (s - 2f64.sqrt()).abs() < 0.05, "{text}");
    assert!(text.contains("verdict: satisfies"));
}

#[test]
fn analyze_single_record() {
    let dir = TempDir::new().unwrap();
    let events = dir.path().join("one.txt");
    std::fs::write(&events, "0 0 1 1\n").unwrap();
    let o = run(&["analyze", path_str(&events)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    assert_eq!(row, vec![0.0, 0.0, 1.0, 0.0, 1.0]);
}

#[test]
fn analyze_errors() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "# ok\n0 0 1 1\n0 0 3 1\n").unwrap();
    let o = run(&["analyze", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "# nothing\n").unwrap();
    assert_eq!(run(&["analyze", path_str(&empty)]).status.code(), Some(2));

    let missing = dir.path().join("missing.txt");
    assert_eq!(run(&["analyze", path_str(&missing)]).status.code(), Some(2));

    assert_eq!(run(&["analyze"]).status.code(), Some(1));
}
