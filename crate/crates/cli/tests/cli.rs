use std::process::{Command, Output};

use poisson_control::qbd::{limit_nu_inf_finite, solve_boundary};
use poisson_control::ModelParams;
use poisson_control_cli::spec::{parse_config, Flags, Format, Probe, VariantArg};
use poisson_control_cli::RunSpec;
use serde_json::Value;

fn pcq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let out = pcq(&a);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn lookup(doc: &Value, table: &str, key_col: &str, key: &str, col: &str) -> f64 {
    doc["tables"][table]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r[key_col] == key)
        .unwrap_or_else(|| panic!("no {key} in {table}"))[col]
        .as_f64()
        .unwrap()
}

/// Data rows of the named CSV table.
fn csv_table(text: &str, name: &str) -> Vec<Vec<String>> {
    let marker = format!("# table: {name}");
    let mut lines = text.lines().skip_while(|l| *l != marker).skip(2);
    let mut rows = Vec::new();
    for l in lines.by_ref() {
        if l.is_empty() {
            break;
        }
        rows.push(l.split(',').map(str::to_string).collect());
    }
    rows
}

#[test]
fn solve_single_server_closed_form() {
    let doc = json(&[
        "solve",
        "--variant",
        "finite",
        "--smax",
        "1",
        "--lambda",
        "1",
        "--mu",
        "2",
        "--nu",
        "1",
    ]);
    let pi00 = lookup(&doc, "summary", "quantity", "pi00", "value");
    assert!((pi00 - 1.0 / 6.0).abs() < 1e-12);
    assert_eq!(doc["spec"]["smax"], 1);
}

#[test]
fn solve_infinite_equal_means() {
    let doc = json(&[
        "solve",
        "--variant",
        "infinite",
        "--lambda",
        "1",
        "--mu",
        "1",
        "--nu",
        "1",
    ]);
    let eq = lookup(&doc, "summary", "quantity", "EQ", "value");
    let es = lookup(&doc, "summary", "quantity", "ES", "value");
    assert!((eq - es).abs() < 1e-9, "{eq} {es}");
    assert!(eq > 1.0);
}

#[test]
fn solve_mminf_pgf_on_x_axis() {
    let doc = json(&[
        "solve",
        "--variant",
        "observer-mminf",
        "--lambda",
        "1",
        "--mu",
        "1",
        "--nu",
        "1",
    ]);
    let rows = doc["tables"]["pgf"].as_array().unwrap();
    let mut seen = 0;
    for r in rows {
        if r["y"].as_f64() == Some(1.0) {
            let x = r["x"].as_f64().unwrap();
            assert!((r["value"].as_f64().unwrap() - (x - 1.0).exp()).abs() < 1e-14);
            seen += 1;
        }
    }
    assert_eq!(seen, 5);
}

#[test]
fn csv_and_json_agree() {
    let args = [
        "solve",
        "--variant",
        "finite",
        "--smax",
        "3",
        "--lambda",
        "2",
        "--nu",
        "0.4",
    ];
    let doc = json(&args);
    let out = pcq(&args);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# command=solve\n"));
    for table in ["summary", "marginals", "joint", "pgf"] {
        let csv = csv_table(&text, table);
        let js = doc["tables"][table].as_array().unwrap();
        assert_eq!(csv.len(), js.len(), "{table}");
        for (c, j) in csv.iter().zip(js) {
            for (cell, (_, v)) in c.iter().zip(j.as_object().unwrap()) {
                match v.as_f64() {
                    Some(x) => {
                        let y: f64 = cell.parse().unwrap();
                        assert!((x - y).abs() <= 1e-9 * x.abs(), "{table}: {x} vs {cell}");
                    }
                    None => assert_eq!(v.as_str().unwrap(), cell),
                }
            }
        }
    }
}

#[test]
fn validate_passes_and_fails() {
    for v in ["finite", "infinite", "observer-mm1", "observer-mminf"] {
        let mu = if v == "observer-mm1" { "2" } else { "1" };
        let out = pcq(&["validate", "--variant", v, "--mu", mu]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{v}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
    let doc = json(&["validate", "--variant", "observer-mm1", "--mu", "2"]);
    assert!(lookup(&doc, "checks", "check", "functional_eq_residual", "value") < 1e-9);
    let doc = json(&["validate", "--variant", "finite", "--smax", "2"]);
    assert!(lookup(&doc, "checks", "check", "oracle_max_abs_diff", "value") < 1e-8);
    let out = pcq(&["validate", "--variant", "finite", "--qmax", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncation too small"));
}

#[test]
fn validate_reports_failures_with_exit_5() {
    // 200 time units at load 0.95 cannot resolve E[Q]; at this seed the
    // simulation check misses by more than six half-widths
    let out = pcq(&[
        "validate",
        "--variant",
        "finite",
        "--lambda",
        "1.9",
        "--nu",
        "0.05",
        "--simulate",
        "--horizon",
        "200",
        "--batches",
        "10",
        "--seed",
        "3",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(5), "{text}");
    assert!(text.contains("sim_EQ_halfwidths,") && text.contains(",false"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sim_EQ_halfwidths"));
}

#[test]
fn sweep_schema_and_shape() {
    let out = pcq(&[
        "sweep",
        "--variant",
        "finite",
        "--smax",
        "2",
        "--lambda",
        "1",
        "--mu",
        "1",
        "--nu-range",
        "0.1:100:4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "nu,EQ,ES,EQ_err,ES_err");
    let rows: Vec<Vec<f64>> = csv_table(&text, "sweep")
        .iter()
        .map(|r| r.iter().map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for w in rows.windows(2) {
        assert!(w[1][1] < w[0][1] && w[1][2] < w[0][2]);
    }
    for r in &rows {
        assert!(r[3] < 1e-8 && r[4] < 1e-8);
    }
    let p = ModelParams::finite(1.0, 1.0, 100.0, 2);
    let tv = solve_boundary(&p)
        .unwrap()
        .to_joint_tol(1e-13)
        .unwrap()
        .tv_distance(&limit_nu_inf_finite(&p).unwrap());
    assert!(tv < 0.05);
    let last = rows.last().unwrap();
    let lim = limit_nu_inf_finite(&p).unwrap();
    assert!((last[1] - lim.mean_queue()).abs() < 0.05);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let p = path.to_str().unwrap();
    let args = [
        "simulate",
        "--variant",
        "infinite",
        "--horizon",
        "2e4",
        "--seed",
        "9",
        "--out",
        p,
    ];
    assert!(pcq(&args).status.success());
    let first = std::fs::read(&path).unwrap();
    assert!(pcq(&args).status.success());
    assert_eq!(first, std::fs::read(&path).unwrap());
}

#[test]
fn simulate_matches_closed_form() {
    let doc = json(&[
        "simulate",
        "--variant",
        "finite",
        "--smax",
        "1",
        "--lambda",
        "0.5",
        "--mu",
        "1",
        "--horizon",
        "2e5",
        "--seed",
        "2",
    ]);
    let est = lookup(&doc, "estimates", "name", "EQ", "point");
    let hw = lookup(&doc, "estimates", "name", "EQ", "half_width");
    let exact = lookup(&doc, "estimates", "name", "EQ", "analytic");
    assert!((est - exact).abs() <= 3.0 * hw, "{est} ± {hw} vs {exact}");
}

#[test]
fn conjecture_probe_axes() {
    let doc = json(&[
        "simulate",
        "--variant",
        "infinite",
        "--probe",
        "conjecture",
        "--nu",
        "0.001",
        "--horizon",
        "4e6",
    ]);
    for axis in ["q_axis", "s_axis"] {
        let v = lookup(&doc, "conjecture", "quantity", axis, "point");
        assert!((v - 0.5).abs() < 0.05, "{axis}: {v}");
    }
    let out = pcq(&[
        "simulate",
        "--variant",
        "infinite",
        "--probe",
        "conjecture",
        "--nu",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# model\nvariant=finite\nsmax=1\nlambda=0.5\nmu=2\nnu=4\n").unwrap();
    let doc = json(&["solve", "--config", cfg.to_str().unwrap(), "--nu", "2"]);
    let spec = &doc["spec"];
    assert_eq!(spec["lambda"], 0.5);
    assert_eq!(spec["mu"], 2.0);
    assert_eq!(spec["nu"], 2.0);
    assert_eq!(spec["tol"], 1e-12);
    std::fs::write(&cfg, "lambda=abc\n").unwrap();
    assert_eq!(
        pcq(&["solve", "--config", cfg.to_str().unwrap(), "--variant", "finite"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn run_spec_round_trips() {
    let file = parse_config("variant=observer-mminf\nlambda=0.1\nnu=3.3333333333333335\nprobe=fluid\n").unwrap();
    let flags = Flags {
        seed: Some(u64::MAX),
        format: Some(Format::Json),
        out: Some("a b.json".into()),
        nu_range: Some("0.1:1:3".into()),
        ..Flags::default()
    };
    let spec = RunSpec::resolve("simulate", &flags, &file).unwrap();
    assert_eq!(spec.variant, VariantArg::ObserverMminf);
    assert_eq!(spec.probe, Some(Probe::Fluid));
    assert_eq!(RunSpec::from_config(&spec.to_config()).unwrap(), spec);
    let js = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<RunSpec>(&js).unwrap(), spec);
}

#[test]
fn exit_codes() {
    assert_eq!(
        pcq(&["solve", "--variant", "observer-mm1", "--lambda", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        pcq(&["solve", "--variant", "finite", "--lambda", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(pcq(&["solve"]).status.code(), Some(2));
    assert_eq!(pcq(&["solve", "--variant", "bogus"]).status.code(), Some(2));
    assert_eq!(pcq(&["sweep", "--variant", "finite"]).status.code(), Some(2));
    let out = pcq(&["solve", "--variant", "finite", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(
        pcq(&["solve", "--variant", "finite", "--config", "/nonexistent-dir/c"])
            .status
            .code(),
        Some(4)
    );
}
