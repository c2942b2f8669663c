use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ringmice"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// A synthetic table plus a masked copy, made through the binary.
fn dataset(dir: &Path, rows: &str, rate: &str) {
    let o = run(
        dir,
        &[
            "synth",
            "--rows",
            rows,
            "--output",
            "full.csv",
            "--schema-output",
            "d.schema",
            "--seed",
            "5",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(
        dir,
        &[
            "inject",
            "--input",
            "full.csv",
            "--schema",
            "d.schema",
            "--output",
            "masked.csv",
            "--rate",
            rate,
            "--seed",
            "6",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn impute_writes_output_and_report() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    dataset(d, "400", "0.1");
    let before = fs::read(d.join("masked.csv")).unwrap();
    let o = run(
        d,
        &[
            "impute",
            "--input",
            "masked.csv",
            "--schema",
            "d.schema",
            "--strategy",
            "auto",
            "--iterations",
            "5",
            "--seed",
            "42",
            "--output",
            "out.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(d.join("masked.csv")).unwrap(), before, "input untouched");
    let out = fs::read_to_string(d.join("out.csv")).unwrap();
    assert!(
        !out.lines().skip(1).any(|l| l.split(',').any(str::is_empty)),
        "no blanks left"
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 42);
    assert_eq!(report["report"]["strategy"], "low");
    for phase in [
        "partition",
        "initial_impute",
        "cofactor",
        "delta",
        "train",
        "predict",
        "write",
    ] {
        assert!(report["report"]["timings"][phase].is_number(), "{phase}");
    }
    assert_eq!(report["report"]["snapshots"].as_array().unwrap().len(), 5);
}

#[test]
fn complete_input_round_trips_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    dataset(d, "50", "0.1");
    let o = run(
        d,
        &[
            "impute", "--input", "full.csv", "--schema", "d.schema", "--seed", "1", "--output", "same.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(d.join("same.csv")).unwrap(),
        fs::read(d.join("full.csv")).unwrap()
    );
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    dataset(d, "50", "0.1");
    let o = run(
        d,
        &[
            "impute",
            "--input",
            "masked.csv",
            "--schema",
            "nope.schema",
            "--seed",
            "1",
            "--output",
            "o.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.schema"), "{}", stderr(&o));
    // The seed is mandatory.
    let o = run(
        d,
        &[
            "impute",
            "--input",
            "masked.csv",
            "--schema",
            "d.schema",
            "--output",
            "o.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = run(
        d,
        &[
            "train", "--input", "full.csv", "--schema", "d.schema", "--target", "nope",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));
    // Refuses to overwrite its input.
    let o = run(
        d,
        &[
            "impute",
            "--input",
            "masked.csv",
            "--schema",
            "d.schema",
            "--seed",
            "1",
            "--output",
            "masked.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn data_and_numeric_errors_exit_3_and_4() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(d, "s.schema", "x,continuous\nk,categorical\n");
    write(d, "bad.csv", "x,k\n1.0,a\nhello,b\n");
    let o = run(
        d,
        &[
            "impute", "--input", "bad.csv", "--schema", "s.schema", "--seed", "1", "--output", "o.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
    let msg = stderr(&o);
    assert!(msg.contains("row 2") && msg.contains("'x'"), "{msg}");

    write(d, "one.csv", "x,k\n1.0,a\n2.0,a\n3.0,a\n");
    let o = run(
        d,
        &["train", "--input", "one.csv", "--schema", "s.schema", "--target", "k"],
    );
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn train_prints_regression_and_lda_parameters() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(d, "line.schema", "x,continuous\ny,continuous\n");
    write(d, "line.csv", "x,y\n1,2\n2,4\n3,6\n4,8\n");
    let o = run(
        d,
        &[
            "train",
            "--input",
            "line.csv",
            "--schema",
            "line.schema",
            "--target",
            "y",
            "--lambda",
            "0",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let theta: Vec<f64> = m["theta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(theta[0].abs() < 1e-4 && (theta[1] - 2.0).abs() < 1e-4, "{theta:?}");
    assert!(m["sigma2"].as_f64().unwrap() < 1e-8);

    write(d, "toy.schema", "x,continuous\nc,categorical\n");
    write(d, "toy.csv", "x,c\n1,a\n2,a\n4,b\n6,b\n");
    let o = run(
        d,
        &["train", "--input", "toy.csv", "--schema", "toy.schema", "--target", "c"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(m["class_labels"], serde_json::json!(["a", "b"]));
    let get = |k: &str, i: usize, j: Option<usize>| -> f64 {
        match j {
            Some(j) => m[k][i][j].as_f64().unwrap(),
            None => m[k][i].as_f64().unwrap(),
        }
    };
    let near = |a: f64, b: f64| (a - b).abs() < 5e-5;
    assert!(near(get("priors", 0, None), 0.5) && near(get("priors", 1, None), 0.5));
    assert!(near(get("means", 0, Some(0)), 1.5) && near(get("means", 1, Some(0)), 5.0));
    assert!(near(get("a", 0, Some(0)), 2.4) && near(get("a", 1, Some(0)), 8.0));
    assert!(near(get("b", 0, None), -2.4931) && near(get("b", 1, None), -20.6931));
}

#[test]
fn inject_masks_close_to_the_rate() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    // 1250 rows x 8 columns = 10^4 cells.
    let o = run(
        d,
        &[
            "synth",
            "--rows",
            "1250",
            "--output",
            "f.csv",
            "--schema-output",
            "f.schema",
            "--seed",
            "1",
        ],
    );
    assert!(o.status.success());
    let o = run(
        d,
        &[
            "inject",
            "--input",
            "f.csv",
            "--schema",
            "f.schema",
            "--output",
            "m.csv",
            "--rate",
            "0.2",
            "--seed",
            "3",
            "--emit-mask",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mask = fs::read_to_string(d.join("m.mask.csv")).unwrap();
    let masked = mask
        .lines()
        .skip(1)
        .flat_map(|l| l.split(','))
        .filter(|&v| v == "1")
        .count();
    assert!((1880..=2120).contains(&masked), "{masked}");
    let blanks = fs::read_to_string(d.join("m.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').map(str::to_owned).collect::<Vec<_>>())
        .filter(String::is_empty)
        .count();
    assert_eq!(blanks, masked);
}

#[test]
fn join_imputation_is_the_same_factorized_or_not() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(
        d,
        "sales.schema",
        "units,continuous\nprice,continuous\nstore,categorical,join-key\n",
    );
    write(
        d,
        "stores.schema",
        "store,categorical,join-key\nsize,continuous\nregion,categorical\n",
    );
    let mut sales = String::from("units,price,store\n");
    for i in 0..200 {
        let store = ["s1", "s2", "s3", "s4"][i % 4];
        let units = if i % 6 == 0 {
            String::new()
        } else {
            format!("{}", (i % 4) as f64 * 3.0 + (i % 5) as f64)
        };
        sales.push_str(&format!("{units},{},{store}\n", 1.0 + (i % 5) as f64));
    }
    write(d, "sales.csv", &sales);
    write(
        d,
        "stores.csv",
        "store,size,region\ns3,30,north\ns1,10,south\ns2,20,north\ns4,40,south\n",
    );
    write(
        d,
        "join.spec",
        "# fact first\nsales\nstores\nsales.store = stores.store\n",
    );
    let mut outs = Vec::new();
    for (flag, out) in [(None, "rowwise.csv"), (Some("--factorized"), "fact.csv")] {
        let mut args = vec![
            "impute",
            "--join",
            "join.spec",
            "--table",
            "sales=sales.csv,sales.schema",
            "--table",
            "stores=stores.csv,stores.schema",
            "--seed",
            "3",
            "--strategy",
            "baseline",
            "--output",
            out,
        ];
        args.extend(flag);
        let o = run(d, &args);
        assert!(o.status.success(), "{}", stderr(&o));
        outs.push(fs::read_to_string(d.join(out)).unwrap());
    }
    let parse = |s: &str| -> Vec<f64> {
        s.lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect()
    };
    let (a, b) = (parse(&outs[0]), parse(&outs[1]));
    assert_eq!(a.len(), 200);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0), "{x} vs {y}");
    }
    // The root table keeps its own columns, key included.
    assert!(outs[1].starts_with("units,price,store\n"));

    let o = run(
        d,
        &[
            "train",
            "--join",
            "join.spec",
            "--table",
            "sales=sales.csv,sales.schema",
            "--table",
            "stores=stores.csv,stores.schema",
            "--target",
            "stores.region",
            "--factorized",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "the root still has blanks: {}", stderr(&o));
}

#[test]
fn benchmark_prints_the_phase_table() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(
        d,
        "tiny.scenario",
        "name = tiny\nrows = 300\nrate = 0.1\nstrategy = baseline, low, high\nrepetitions = 1\niterations = 2\n",
    );
    let o = run(
        d,
        &[
            "benchmark",
            "--scenario",
            "tiny.scenario",
            "--report",
            "b.json",
            "--csv",
            "b.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    for s in ["baseline", "low", "high", "per-iter"] {
        assert!(table.contains(s), "{table}");
    }
    assert_eq!(fs::read_to_string(d.join("b.csv")).unwrap().lines().count(), 4);
}

#[test]
fn help_lists_every_impute_flag() {
    let o = bin().args(["impute", "--help"]).output().unwrap();
    let help = stdout(&o);
    for flag in [
        "--input",
        "--schema",
        "--join",
        "--table",
        "--factorized",
        "--sorted-dictionaries",
        "--output",
        "--strategy",
        "--iterations",
        "--seed",
        "--threads",
        "--emit-mask",
        "--report",
        "--audit",
        "--model",
    ] {
        assert!(help.contains(flag), "{flag} missing from\n{help}");
    }
}
