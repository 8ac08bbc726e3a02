use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracdiff_cli::config::{parse_raw, Overrides, SolverKind};
use fracdiff_cli::{parse_config, CliError};
use fracdiff_core::profile::Profile;
use fracdiff_core::spectral::picard_solve;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracdiff"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn config_errors(text: &str) -> Vec<String> {
    match parse_config(text) {
        Err(CliError::Config(errs)) => errs,
        other => panic!("expected validation errors, got {other:?}"),
    }
}

const MINIMAL: &str = r#"
alpha = 0.5
grid_n = 100
horizon = 1.0
time_steps = 256
diffusivity = { preset = "constant", value = 1.0 }
reaction = { preset = "constant", value = -1.0 }
initial = { preset = "bump", center = 0.5, width = 0.4, height = 2.0 }
source = { preset = "random", seed = 4, amplitude = 1.0, modes = 3 }
"#;

#[test]
fn minimal_config_parses() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!(cfg.alpha, 0.5);
    assert_eq!(cfg.grid_n, 100);
    assert_eq!(cfg.time_steps, 256);
    assert_eq!(cfg.solver, SolverKind::Picard);
    assert_eq!(cfg.tol, 1e-10);
    assert_eq!(cfg.initial, Profile::bump(0.5, 0.4, 2.0));
    for name in ["minimal.toml", "coupled.toml", "verify.toml"] {
        let text = std::fs::read_to_string(configs().join(name)).unwrap();
        parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn alpha_out_of_range_is_reported() {
    let errs = config_errors("alpha = 1.5");
    assert!(
        errs.iter().any(|e| e.contains("alpha out of (0,1)")),
        "{errs:?}"
    );
}

#[test]
fn zero_diffusivity_violates_ellipticity() {
    let errs = config_errors("diffusivity = { preset = \"constant\", value = 0.0 }");
    assert!(errs.iter().any(|e| e.contains("ellipticity")), "{errs:?}");
}

#[test]
fn all_violations_are_collected() {
    let errs = config_errors(
        r#"
alpha = -0.2
grid_n = 1
tol = 0.0
source = { preset = "values", values = [1.0, 2.0] }
"#,
    );
    assert!(errs.len() >= 3, "{errs:?}");
    let errs = config_errors(
        r#"
grid_n = 3
horizon = -1.0
initial = { preset = "values", values = [1.0] }
reaction = { preset = "bump", center = 0.5, width = 0.0, height = 1.0 }
"#,
    );
    assert_eq!(errs.len(), 3, "{errs:?}");
    assert!(errs.iter().any(|e| e.starts_with("initial")));
    assert!(errs.iter().any(|e| e.starts_with("reaction")));
}

#[test]
fn parse_errors_carry_line_and_column() {
    let msg = match parse_config("alpha = 0.5\ngrid_n = \"many\"\n") {
        Err(CliError::Parse(m)) => m,
        other => panic!("{other:?}"),
    };
    assert!(msg.contains("line 2"), "{msg}");
    assert!(matches!(
        parse_config("alhpa = 0.5"),
        Err(CliError::Parse(_))
    ));
    assert!(matches!(
        parse_config("reaction = { preset = \"gaussian\", value = 1.0 }"),
        Err(CliError::Parse(_))
    ));
}

#[test]
fn flags_override_file_and_defaults() {
    let raw = parse_raw("alpha = 0.3\ngrid_n = 50\nseed = 5").unwrap();
    let o = Overrides {
        alpha: Some(0.7),
        seed: Some(9),
        ..Overrides::default()
    };
    let cfg = raw.resolve(&o).unwrap();
    assert_eq!(cfg.alpha, 0.7);
    assert_eq!(cfg.grid_n, 50);
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.horizon, 1.0);
    // random presets are offset by the run seed
    let raw = parse_raw("reaction = { preset = \"random\", seed = 2, amplitude = 1.0, modes = 2 }")
        .unwrap();
    let cfg = raw
        .resolve(&Overrides {
            seed: Some(3),
            ..Overrides::default()
        })
        .unwrap();
    assert_eq!(cfg.reaction, Profile::random(5, 1.0, 2));
}

#[test]
fn solve_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, MINIMAL).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = [
        "--config",
        cfg_path.to_str().unwrap(),
        "--grid-n",
        "30",
        "--time-steps",
        "20",
    ];
    for out in [&a, &b] {
        let o = bin()
            .arg("solve")
            .args(common)
            .args(["--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,t,u"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21 * 30);

    let raw = parse_raw(MINIMAL).unwrap();
    let cfg = raw
        .resolve(&Overrides {
            grid_n: Some(30),
            time_steps: Some(20),
            ..Overrides::default()
        })
        .unwrap();
    let p = cfg.problem().unwrap();
    let (u, _) = picard_solve(&p, &cfg.picard_options()).unwrap();
    let nodes = p.grid().nodes();
    for (r, row) in rows.iter().enumerate() {
        let (k, i) = (r / 30, r % 30);
        assert_eq!(row[0], nodes[i]);
        assert_eq!(row[1], p.time().time(k));
        assert_eq!(row[2], u.values()[[k, i]]);
    }
}

#[test]
fn report_lists_the_summary_fields() {
    let o = run(&[
        "solve",
        "--grid-n",
        "20",
        "--time-steps",
        "10",
        "--format",
        "report",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in [
        "solver",
        "alpha",
        "grid",
        "iterations",
        "residuals",
        "min_u",
        "max_u",
        "wall_time",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["solver"], "picard");
    assert!(v["iterations"].as_u64().unwrap() >= 1);
}

#[test]
fn configured_paths_receive_both_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("u.csv");
    let report = dir.path().join("r.json");
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        format!(
            "grid_n = 10\ntime_steps = 5\n[output]\ncsv = {:?}\nreport = {:?}\n",
            csv.to_str().unwrap(),
            report.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = run(&["solve", "--config", cfg_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("x,t,u\n"));
    assert!(std::fs::read_to_string(report)
        .unwrap()
        .contains("\"wall_time\""));
}

#[test]
fn exit_codes_follow_error_kinds() {
    assert_eq!(run(&["solve", "--alpha", "1.5"]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "solve",
            "--solver",
            "spectral",
            "--grid-n",
            "10",
            "--time-steps",
            "4"
        ])
        .status
        .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "grid_n = [1\n").unwrap();
    let o = run(&["solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    let o = run(&[
        "solve",
        "--max-iter",
        "2",
        "--grid-n",
        "10",
        "--time-steps",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(3));

    let stiff = dir.path().join("stiff.toml");
    std::fs::write(
        &stiff,
        "reaction = { preset = \"constant\", value = 5000.0 }\n",
    )
    .unwrap();
    let o = run(&[
        "oracle",
        "--config",
        stiff.to_str().unwrap(),
        "--grid-n",
        "10",
        "--time-steps",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refine the time grid"));
}

#[test]
fn coupled_writes_one_column_per_species() {
    let cfg = configs().join("coupled.toml");
    let o = run(&[
        "coupled",
        "--config",
        cfg.to_str().unwrap(),
        "--time-steps",
        "20",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("x,t,u1,u2\n"));
    let min = text
        .lines()
        .skip(1)
        .flat_map(|l| {
            l.split(',')
                .skip(2)
                .map(|v| v.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(min >= -1e-10);
    // the same file through `solve` dispatches on its solver field
    let o = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--time-steps",
        "20",
    ]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), text);
}

#[test]
fn oracle_compare_prints_distance_and_order_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, MINIMAL).unwrap();
    let o = run(&[
        "oracle",
        "--compare",
        "--config",
        cfg.to_str().unwrap(),
        "--grid-n",
        "40",
        "--time-steps",
        "32",
        "--levels",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("reference: spectral"), "{text}");
    assert!(text.contains("relative L2 distance at T"));
    let table: Vec<&str> = text
        .lines()
        .skip_while(|l| *l != "K,dt,error,order")
        .collect();
    assert_eq!(table.len(), 4, "{text}");
    let order: f64 = table[3].rsplit(',').next().unwrap().parse().unwrap();
    assert!(order > 0.5 && order < 2.0, "{order}");
}

#[test]
fn verify_passes_and_reports_failures() {
    let cfg = configs().join("verify.toml");
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--trials", "6"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    assert!(text.ends_with("overall: PASS\n"));

    // solves that cannot converge are failures, so the run is not a pass
    let o = run(&[
        "verify",
        "--trials",
        "2",
        "--grid-n",
        "10",
        "--time-steps",
        "8",
        "--max-iter",
        "1",
        "--property",
        "maximum",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("overall: FAIL"));

    let o = run(&[
        "verify",
        "--trials",
        "2",
        "--grid-n",
        "10",
        "--time-steps",
        "8",
        "--format",
        "report",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["reports"].as_array().unwrap().len(), 5);
}

#[test]
fn mlf_eval_prints_values() {
    let o = run(&["mlf-eval", "--alpha", "0.5", "--z", "0", "-1"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "z,value,error_estimate,branch");
    let v: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.427_583_576_155_807).abs() < 1e-14);
    assert_eq!(
        run(&["mlf-eval", "--alpha", "0", "--z", "1"]).status.code(),
        Some(2)
    );
}
