use super::*;
use crate::dataset::{read_csv, LoadOptions, RowSource, Schema, Table};
use crate::ring::Value;

fn table(schema: &str, csv: &str) -> Table {
    read_csv(csv.as_bytes(), &Schema::parse(schema).unwrap(), LoadOptions::default()).unwrap()
}

#[test]
fn complete_table_is_untouched() {
    let mut t = table("x,continuous\ny,continuous\n", "x,y\n1,2\n3,4\n");
    let before = t.clone();
    let report = run(&mut t, &MiceConfig::new(1)).unwrap();
    assert_eq!(t, before);
    assert_eq!(report.models_trained, 0);
}

#[test]
fn exact_line_recovers_missing_target() {
    let mut csv = String::from("x,y\n");
    for i in 0..20 {
        let x = i as f64 * 0.5;
        if i == 7 {
            csv.push_str(&format!("{x},\n"));
        } else {
            csv.push_str(&format!("{x},{}\n", 2.0 * x));
        }
    }
    let mut t = table("x,continuous\ny,continuous\n", &csv);
    let mut cfg = MiceConfig::new(3);
    cfg.gd.lambda = 0.0;
    run(&mut t, &cfg).unwrap();
    let Value::Num(y) = t.value(1, 7) else { panic!() };
    assert!((y - 7.0).abs() < 1e-3, "{y}");
}

fn mixed() -> Table {
    let mut csv = String::from("a,b,c,k\n");
    for i in 0..300u32 {
        let x = (i as f64 * 0.37).sin() * 3.0;
        let y = 0.5 * x + (i as f64 * 1.3).cos();
        let z = x - y + (i as f64 * 0.11).sin();
        let k = if x + 0.3 * y > 0.0 {
            "p"
        } else if i % 3 == 0 {
            "q"
        } else {
            "r"
        };
        let cell = |v: String, miss: bool| if miss { String::new() } else { v };
        csv.push_str(&format!(
            "{},{},{},{}\n",
            cell(format!("{x}"), i % 5 == 0),
            cell(format!("{y}"), i % 7 == 1 || i % 11 == 0),
            cell(format!("{z}"), i % 4 == 2 || i % 11 == 0),
            cell(k.to_string(), i % 6 == 3 || i % 11 == 0),
        ));
    }
    table("a,continuous\nb,continuous\nc,continuous\nk,categorical\n", &csv)
}

#[test]
fn strategies_agree() {
    let mut results = Vec::new();
    for strategy in [Strategy::Baseline, Strategy::Low, Strategy::High] {
        let mut t = mixed();
        let mut cfg = MiceConfig::new(11);
        cfg.strategy = strategy;
        cfg.audit = true;
        let report = run(&mut t, &cfg).unwrap();
        assert!(report.partitions.as_ref().is_none_or(|p| p.all_missing > 0));
        if strategy == Strategy::Low {
            assert!(report.worst_audit().unwrap() < 1e-6);
        }
        results.push(t);
    }
    let base = &results[0];
    for other in &results[1..] {
        for attr in 0..4 {
            for r in 0..base.rows() {
                match (base.value(attr, r), other.value(attr, r)) {
                    (Value::Num(a), Value::Num(b)) => {
                        assert!((a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1e-12), "{a} vs {b}")
                    }
                    (a, b) => assert_eq!(a, b),
                }
            }
        }
    }
}

#[test]
fn observed_cells_are_preserved() {
    let original = mixed();
    let mut t = original.clone();
    run(&mut t, &MiceConfig::new(5)).unwrap();
    for attr in 0..4 {
        for r in 0..t.rows() {
            if !t.is_missing(attr, r) {
                let (a, b) = (original.value(attr, r), t.value(attr, r));
                match (a, b) {
                    (Value::Num(x), Value::Num(y)) => assert_eq!(x.to_bits(), y.to_bits()),
                    _ => assert_eq!(a, b),
                }
            }
        }
    }
}
