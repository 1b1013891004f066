use std::path::PathBuf;
use std::process::{Command, Output};

use fracldg::harness::{parse_csv, CSV_HEADER};

fn fracldg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracldg")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fracldg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const EX1: [&str; 13] =
    ["run", "--case", "ex1", "--beta", "1.5", "--N", "1", "--sweep", "K", "--values", "4,8", "--dt", "T/20"];

#[test]
fn successful_sweep_prints_csv() {
    let o = fracldg(&EX1);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let tables = parse_csv(&text).unwrap();
    assert_eq!(tables.len(), 1);
    let t = &tables[0];
    assert_eq!((t.case.as_str(), t.degree, t.beta, t.t_final), ("ex1", 1, 1.5, 0.5));
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows[0].order.is_none() && t.rows[1].order.is_some());
    assert!(t.rows.iter().all(|r| r.dt == 0.025 && r.theta == 0.02));
}

#[test]
fn coupled_case_reports_both_components() {
    let o = fracldg(&[
        "run",
        "--case",
        "ex4",
        "--beta",
        "1.5",
        "--N",
        "1",
        "--sweep",
        "K",
        "--values",
        "4,8",
        "--dt",
        "T/10",
        "--S",
        "5",
        "--forcing",
        "discrete",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let tables = parse_csv(&stdout(&o)).unwrap();
    let names: Vec<&str> = tables.iter().map(|t| t.case.as_str()).collect();
    assert_eq!(names, ["ex4:u1", "ex4:u2"]);
}

#[test]
fn invalid_specs_exit_with_one() {
    let bad: [&[&str]; 7] = [
        &["run", "--case", "ex9", "--beta", "1.5", "--N", "1", "--sweep", "K", "--values", "4"],
        &["run", "--case", "ex1", "--beta", "2.5", "--N", "1", "--sweep", "K", "--values", "4"],
        &["run", "--case", "ex1", "--beta", "1.5", "--sweep", "K", "--values", "4"],
        &["run", "--case", "ex1", "--beta", "1.5", "--N", "1", "--sweep", "K", "--values", "4.5"],
        &["run", "--case", "ex1", "--beta", "1.5", "--N", "1", "--sweep", "dt", "--values", "0.3"],
        &["run", "--case", "ex1", "--beta", "1.5", "--N", "1", "--sweep", "theta", "--values", "2"],
        &["run", "--config", "/nonexistent/fracldg.toml"],
    ];
    for args in bad {
        let o = fracldg(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_and_version_exit_with_zero() {
    for args in [&["--help"][..], &["run", "--help"], &["--version"]] {
        assert_eq!(fracldg(args).status.code(), Some(0));
    }
}

#[test]
fn failed_rows_exit_with_two_and_keep_the_rest() {
    // one step of size T = 1 overflows the cubic term; the fine row completes
    let o = fracldg(&[
        "run", "--case", "ex3", "--beta", "1.5", "--N", "1", "--sweep", "dt", "--values", "T,T/100", "--T", "1", "--K",
        "6", "--S", "4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("dt = 1 failed"), "{err}");
    let tables = parse_csv(&stdout(&o)).unwrap();
    assert_eq!(tables[0].rows.len(), 1);
    assert_eq!(tables[0].rows[0].value, 0.01);
    assert!(tables[0].rows[0].order.is_none());
}

#[test]
fn config_file_with_flag_overrides() {
    let cfg = scratch("sweep.toml");
    std::fs::write(
        &cfg,
        "case = \"ex1\"\nbeta = 1.5\nN = 1\nsweep = \"K\"\nvalues = [4, 8]\ndt = \"T/20\"\nformat = \"csv\"\n",
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let a = fracldg(&["run", "--config", path]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = fracldg(&["run", "--config", path, "--beta", "1.7", "--values", "4,6,8"]);
    assert_eq!(b.status.code(), Some(0));
    let (ta, tb) = (parse_csv(&stdout(&a)).unwrap(), parse_csv(&stdout(&b)).unwrap());
    assert_eq!((ta[0].beta, ta[0].rows.len()), (1.5, 2));
    assert_eq!((tb[0].beta, tb[0].rows.len()), (1.7, 3));

    std::fs::write(&cfg, "case = \"ex1\"\nunknown_key = 3\n").unwrap();
    assert_eq!(fracldg(&["run", "--config", path]).status.code(), Some(1));
}

#[test]
fn markdown_output_to_file() {
    let out = scratch("table.md");
    let mut args = EX1.to_vec();
    args.extend(["--format", "md", "--out", out.to_str().unwrap()]);
    let o = fracldg(&args);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let md = std::fs::read_to_string(&out).unwrap();
    assert!(md.contains('|') && md.contains("ex1"), "{md}");
    assert_eq!(md.lines().filter(|l| l.starts_with("| 4") || l.starts_with("| 8")).count(), 2, "{md}");
}

#[test]
fn csv_output_to_file_matches_stdout() {
    let out = scratch("table.csv");
    let mut args = EX1.to_vec();
    args.extend(["--out", out.to_str().unwrap()]);
    assert_eq!(fracldg(&args).status.code(), Some(0));
    let from_file = parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let from_stdout = parse_csv(&stdout(&fracldg(&EX1))).unwrap();
    let errs = |t: &[fracldg::harness::ErrorTable]| t[0].rows.iter().map(|r| r.l2_error).collect::<Vec<_>>();
    assert_eq!(errs(&from_file), errs(&from_stdout));
}

#[test]
fn jobs_do_not_change_results() {
    let mut args = EX1.to_vec();
    args.extend(["--jobs", "2"]);
    let a = parse_csv(&stdout(&fracldg(&args))).unwrap();
    let b = parse_csv(&stdout(&fracldg(&EX1))).unwrap();
    let key = |t: &[fracldg::harness::ErrorTable]| {
        t[0].rows.iter().map(|r| (r.value, r.l2_error, r.order)).collect::<Vec<_>>()
    };
    assert_eq!(key(&a), key(&b));
}

#[test]
fn shipped_presets_are_valid() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let raw = fracldg::harness::RawSpec::from_file(&path).unwrap();
        fracldg::harness::RunSpec::from_raw(&raw).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert_eq!(seen, 8);
}
