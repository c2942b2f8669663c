use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{Column, ColumnDef, Role, Schema, Table};
use crate::error::{Error, Result};
use crate::factorized::{aggregate_join, materialize, JoinPlan, JoinSpec, NamedTable};
use crate::mice::{run, MiceConfig, PhaseTimings, Strategy};
use crate::ring::{aggregate, AttrKind};

use super::inject::{inject, InjectionSpec, Pattern};
use super::synth::{synth, SynthSpec};

/// Star-schema shape for the join aggregation benchmark.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JoinShape {
    pub dimensions: usize,
    /// Dimension size as a fraction of the fact table.
    pub dimension_fraction: f64,
    pub dimension_attrs: usize,
}

/// One benchmark scenario, read from a `key = value` file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub pattern: Pattern,
    pub rate: f64,
    pub rows: usize,
    /// Continuous predictors; the table also has a target `y` and
    /// `categorical` categorical columns.
    pub predictors: usize,
    pub categorical: usize,
    pub correlation: f64,
    pub driver: Option<String>,
    pub strategies: Vec<Strategy>,
    pub seed: u64,
    pub iterations: usize,
    pub repetitions: usize,
    pub join: Option<JoinShape>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            pattern: Pattern::Mcar,
            rate: 0.05,
            rows: 100_000,
            predictors: 7,
            categorical: 0,
            correlation: 0.9,
            driver: None,
            strategies: vec![Strategy::Baseline, Strategy::Low, Strategy::High],
            seed: 1,
            iterations: 5,
            repetitions: 3,
            join: None,
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Scenario::default();
        let mut join = JoinShape {
            dimensions: 2,
            dimension_fraction: 0.01,
            dimension_attrs: 2,
        };
        let mut joined = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("scenario line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || {
                Error::usage(format!(
                    "scenario line {}: bad value for '{key}': '{value}'",
                    lineno + 1
                ))
            };
            match key {
                "name" => s.name = value.to_string(),
                "pattern" => s.pattern = value.parse()?,
                "rate" => s.rate = value.parse().map_err(|_| bad())?,
                "rows" => s.rows = value.parse().map_err(|_| bad())?,
                "predictors" => s.predictors = value.parse().map_err(|_| bad())?,
                "categorical" => s.categorical = value.parse().map_err(|_| bad())?,
                "correlation" => s.correlation = value.parse().map_err(|_| bad())?,
                "driver" => s.driver = Some(value.to_string()),
                "strategy" | "strategies" => {
                    s.strategies = value.split(',').map(|v| v.parse()).collect::<Result<_>>()?
                }
                "seed" => s.seed = value.parse().map_err(|_| bad())?,
                "iterations" => s.iterations = value.parse().map_err(|_| bad())?,
                "repetitions" => s.repetitions = value.parse().map_err(|_| bad())?,
                "layout" => match value {
                    "join" => joined = true,
                    "single" => joined = false,
                    _ => return Err(bad()),
                },
                "dimensions" => join.dimensions = value.parse().map_err(|_| bad())?,
                "dimension_fraction" => join.dimension_fraction = value.parse().map_err(|_| bad())?,
                "dimension_attrs" => join.dimension_attrs = value.parse().map_err(|_| bad())?,
                other => {
                    return Err(Error::usage(format!(
                        "scenario line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        if s.repetitions == 0 || s.iterations == 0 || s.rows == 0 {
            return Err(Error::usage("rows, iterations and repetitions must be positive"));
        }
        if s.strategies.is_empty() {
            return Err(Error::usage("scenario lists no strategy"));
        }
        if joined {
            s.join = Some(join);
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            predictors: self.predictors,
            correlation: self.correlation,
            categorical: self.categorical,
            seed: self.seed,
            ..SynthSpec::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunTiming {
    pub repetition: usize,
    pub preprocessing_seconds: f64,
    pub iteration_seconds: Vec<f64>,
    pub mean_iteration_seconds: f64,
    pub timings: PhaseTimings,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub resolved: Strategy,
    pub median_iteration_seconds: f64,
    pub median_preprocessing_seconds: f64,
    pub median_timings: PhaseTimings,
    pub runs: Vec<RunTiming>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JoinResult {
    pub fact_rows: usize,
    pub joined_rows: usize,
    pub factorized_seconds: f64,
    pub materialized_seconds: f64,
    pub speedup: f64,
    pub max_rel_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub scenario: Scenario,
    pub missing_rate: f64,
    pub results: Vec<StrategyResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub join: Option<JoinResult>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs every strategy `repetitions` times on the same masked table and
/// reports medians.
pub fn benchmark(scenario: &Scenario) -> Result<BenchReport> {
    let complete = synth(scenario.rows, &scenario.synth_spec())?;
    let (masked, _) = inject(
        &complete,
        &InjectionSpec {
            pattern: scenario.pattern,
            rate: scenario.rate,
            targets: Vec::new(),
            driver: match scenario.pattern {
                Pattern::Mar => Some(scenario.driver.clone().unwrap_or_else(|| "x1".into())),
                _ => None,
            },
            seed: scenario.seed,
        },
    )?;
    drop(complete);
    // Repetitions run round-robin over the strategies, in reverse order on
    // every other repetition, so that drift in machine load hits every
    // strategy alike.
    let mut runs: Vec<Vec<RunTiming>> = vec![Vec::new(); scenario.strategies.len()];
    let mut resolved = scenario.strategies.clone();
    for repetition in 0..scenario.repetitions {
        let mut order: Vec<usize> = (0..scenario.strategies.len()).collect();
        if repetition % 2 == 1 {
            order.reverse();
        }
        for i in order {
            let strategy = scenario.strategies[i];
            let mut t = masked.clone();
            let mut cfg = MiceConfig::new(scenario.seed);
            cfg.strategy = strategy;
            cfg.iterations = scenario.iterations;
            let report = run(&mut t, &cfg)?;
            resolved[i] = report.strategy;
            runs[i].push(RunTiming {
                repetition,
                preprocessing_seconds: report.preprocessing_seconds,
                mean_iteration_seconds: report.mean_iteration_seconds(),
                iteration_seconds: report.iteration_seconds(),
                timings: report.timings,
            });
        }
    }
    let mut results = Vec::new();
    for ((&strategy, resolved), runs) in scenario.strategies.iter().zip(resolved).zip(runs) {
        let pick = |f: &dyn Fn(&RunTiming) -> f64| median(&runs.iter().map(f).collect::<Vec<_>>());
        let median_timings = PhaseTimings {
            partition: pick(&|r| r.timings.partition),
            initial_impute: pick(&|r| r.timings.initial_impute),
            cofactor: pick(&|r| r.timings.cofactor),
            delta: pick(&|r| r.timings.delta),
            train: pick(&|r| r.timings.train),
            predict: pick(&|r| r.timings.predict),
            write: pick(&|r| r.timings.write),
        };
        results.push(StrategyResult {
            strategy,
            resolved,
            median_iteration_seconds: pick(&|r| r.mean_iteration_seconds),
            median_preprocessing_seconds: pick(&|r| r.preprocessing_seconds),
            median_timings,
            runs,
        });
    }
    let join = match &scenario.join {
        Some(shape) => Some(join_benchmark(scenario, shape)?),
        None => None,
    };
    Ok(BenchReport {
        scenario: scenario.clone(),
        missing_rate: masked.missing_rate(),
        results,
        join,
    })
}

/// A fact table `fact(x1.., d1..)` with foreign keys into dimension tables
/// `dim1..` of `dimension_attrs` continuous attributes each.
pub fn star_schema(
    rows: usize,
    shape: &JoinShape,
    predictors: usize,
    seed: u64,
) -> Result<(Vec<NamedTable>, JoinSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim_rows = ((rows as f64 * shape.dimension_fraction).ceil() as usize).max(1);
    let mut fact_defs: Vec<ColumnDef> = (1..=predictors)
        .map(|j| ColumnDef::feature(format!("x{j}"), AttrKind::Continuous))
        .collect();
    let mut fact_cols: Vec<Column> = (0..predictors)
        .map(|_| Column::continuous((0..rows).map(|_| rng.gen::<f64>()).collect()))
        .collect();
    let mut tables = Vec::new();
    let mut spec_text = String::from("fact\n");
    let keys: Vec<String> = (0..dim_rows).map(|k| format!("k{k}")).collect();
    for d in 1..=shape.dimensions {
        fact_defs.push(ColumnDef {
            name: format!("d{d}"),
            kind: AttrKind::Categorical,
            role: Role::JoinKey,
        });
        fact_cols.push(Column::with_dictionary(
            (0..rows).map(|_| rng.gen_range(0..dim_rows as u32)).collect(),
            keys.clone(),
        ));
        let mut defs = vec![ColumnDef {
            name: "key".into(),
            kind: AttrKind::Categorical,
            role: Role::JoinKey,
        }];
        let mut cols = vec![Column::with_dictionary((0..dim_rows as u32).collect(), keys.clone())];
        for a in 1..=shape.dimension_attrs {
            defs.push(ColumnDef::feature(format!("a{a}"), AttrKind::Continuous));
            cols.push(Column::continuous((0..dim_rows).map(|_| rng.gen::<f64>()).collect()));
        }
        tables.push(NamedTable {
            name: format!("dim{d}"),
            table: Table::complete(Schema::new(defs)?, cols)?,
        });
        let _ = writeln!(spec_text, "dim{d}");
    }
    for d in 1..=shape.dimensions {
        let _ = writeln!(spec_text, "fact.d{d} = dim{d}.key");
    }
    tables.insert(
        0,
        NamedTable {
            name: "fact".into(),
            table: Table::complete(Schema::new(fact_defs)?, fact_cols)?,
        },
    );
    Ok((tables, JoinSpec::parse(&spec_text)?))
}

fn join_benchmark(scenario: &Scenario, shape: &JoinShape) -> Result<JoinResult> {
    let (tables, spec) = star_schema(scenario.rows, shape, scenario.predictors, scenario.seed)?;
    let plan = JoinPlan::new(&spec, &tables)?;
    let mut fact_times = Vec::new();
    let mut mat_times = Vec::new();
    let mut diff = 0.0f64;
    let mut joined_rows = 0;
    for _ in 0..scenario.repetitions {
        let t = Instant::now();
        let fact = aggregate_join(&plan, &tables)?;
        fact_times.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        let rows = materialize(&plan, &tables)?;
        let mat = aggregate(rows.iter(), plan.space())?;
        mat_times.push(t.elapsed().as_secs_f64());
        joined_rows = rows.len();
        diff = diff.max(fact.max_rel_diff(&mat));
    }
    let (f, m) = (median(&fact_times), median(&mat_times));
    Ok(JoinResult {
        fact_rows: scenario.rows,
        joined_rows,
        factorized_seconds: f,
        materialized_seconds: m,
        speedup: m / f,
        max_rel_diff: diff,
    })
}

impl BenchReport {
    /// Human-readable table of median phase timings.
    pub fn phase_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>12}",
            "strategy", "partition", "init", "cofactor", "delta", "train", "predict", "write", "prep", "per-iter"
        );
        for r in &self.results {
            let t = &r.median_timings;
            let _ = writeln!(
                out,
                "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>12.4}",
                r.resolved.to_string(),
                t.partition,
                t.initial_impute,
                t.cofactor,
                t.delta,
                t.train,
                t.predict,
                t.write,
                r.median_preprocessing_seconds,
                r.median_iteration_seconds
            );
        }
        if let Some(j) = &self.join {
            let _ = writeln!(
                out,
                "join: factorized {:.4}s, materialized {:.4}s, speedup {:.2}x, max rel diff {:.2e}",
                j.factorized_seconds, j.materialized_seconds, j.speedup, j.max_rel_diff
            );
        }
        out
    }

    /// One CSV line per strategy and repetition.
    pub fn timings_csv(&self) -> String {
        let mut out = String::from(
            "strategy,repetition,partition,initial_impute,cofactor,delta,train,predict,write,preprocessing,mean_iteration\n",
        );
        for r in &self.results {
            for run in &r.runs {
                let t = &run.timings;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.resolved,
                    run.repetition,
                    t.partition,
                    t.initial_impute,
                    t.cofactor,
                    t.delta,
                    t.train,
                    t.predict,
                    t.write,
                    run.preprocessing_seconds,
                    run.mean_iteration_seconds
                );
            }
        }
        out
    }
}
