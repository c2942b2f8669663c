use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value as Json;

use crate::dataset::{initial_impute, partition, PartitionMode, PartitionSet, RowSel, RowSource, Table};
use crate::error::{Error, Result};
use crate::models::{train_lda, train_ridge, Model};
use crate::ring::{to_dense, Triple, Value};

use super::config::{MiceConfig, ModelKind, Strategy};
use super::noise::noise_stream;

/// Wall time per phase, in seconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub partition: f64,
    pub initial_impute: f64,
    pub cofactor: f64,
    pub delta: f64,
    pub train: f64,
    pub predict: f64,
    pub write: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.partition + self.initial_impute + self.cofactor + self.delta + self.train + self.predict + self.write
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttrSnapshot {
    pub attr: String,
    pub model: Json,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationSnapshot {
    pub iteration: usize,
    pub seconds: f64,
    pub models: Vec<AttrSnapshot>,
    /// Largest relative difference between the maintained and the
    /// recomputed cofactor (low strategy with auditing on).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit_max_rel_diff: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PartitionSizes {
    pub complete: usize,
    pub all_missing: usize,
    pub exactly_one: usize,
    pub multi: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MiceReport {
    pub requested_strategy: Strategy,
    pub strategy: Strategy,
    pub missing_rate: f64,
    pub missing_cells: usize,
    pub incomplete_attrs: Vec<String>,
    pub iterations_run: usize,
    pub models_trained: usize,
    pub partitions: Option<PartitionSizes>,
    pub timings: PhaseTimings,
    /// Time spent before the first iteration (initial imputation,
    /// partitioning, initial cofactor).
    pub preprocessing_seconds: f64,
    pub snapshots: Vec<IterationSnapshot>,
    /// Notes such as LDA shrinkage fallbacks.
    pub notes: Vec<String>,
}

impl MiceReport {
    pub fn iteration_seconds(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.seconds).collect()
    }

    /// Mean iteration time, or 0 when nothing ran.
    pub fn mean_iteration_seconds(&self) -> f64 {
        if self.snapshots.is_empty() {
            0.0
        } else {
            self.snapshots.iter().map(|s| s.seconds).sum::<f64>() / self.snapshots.len() as f64
        }
    }

    /// Worst audit difference over all iterations, if audited.
    pub fn worst_audit(&self) -> Option<f64> {
        self.snapshots
            .iter()
            .filter_map(|s| s.audit_max_rel_diff)
            .reduce(f64::max)
    }
}

fn clock<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot += t.elapsed().as_secs_f64();
    out
}

/// Initial mean/mode imputation followed by chained-equations rounds.
/// Only originally missing cells are ever written.
pub fn run(table: &mut Table, cfg: &MiceConfig) -> Result<MiceReport> {
    let mut secs = 0.0;
    clock(&mut secs, || initial_impute(table))?;
    run_imputed(table, cfg, secs)
}

/// Runs the rounds on a source whose missing cells already hold initial
/// imputations. `initial_impute_seconds` is carried into the report.
pub fn run_imputed<S: RowSource>(source: &mut S, cfg: &MiceConfig, initial_impute_seconds: f64) -> Result<MiceReport> {
    cfg.validate(source.space())?;
    let m = source.space().len();
    let rows = source.row_count();
    let mattrs = source.mattrs();
    let missing: Vec<Vec<u32>> = (0..m)
        .map(|a| {
            if mattrs.contains(&a) {
                source.missing_rows(a)
            } else {
                Vec::new()
            }
        })
        .collect();
    let missing_cells: usize = missing.iter().map(Vec::len).sum();
    let missing_rate = if rows * m == 0 {
        0.0
    } else {
        missing_cells as f64 / (rows * m) as f64
    };
    let strategy = match cfg.strategy {
        Strategy::Auto if missing_rate <= cfg.auto_threshold => Strategy::Low,
        Strategy::Auto => Strategy::High,
        s => s,
    };
    let mut engine = Engine {
        cfg,
        mattrs: mattrs.clone(),
        missing,
        timings: PhaseTimings {
            initial_impute: initial_impute_seconds,
            ..PhaseTimings::default()
        },
        notes: Vec::new(),
        models_trained: 0,
        values: Vec::new(),
    };
    let mut report = MiceReport {
        requested_strategy: cfg.strategy,
        strategy,
        missing_rate,
        missing_cells,
        incomplete_attrs: mattrs.iter().map(|&a| source.space().name(a).to_string()).collect(),
        iterations_run: 0,
        models_trained: 0,
        partitions: None,
        timings: PhaseTimings::default(),
        preprocessing_seconds: 0.0,
        snapshots: Vec::new(),
        notes: Vec::new(),
    };
    if mattrs.is_empty() {
        report.timings = engine.timings;
        report.preprocessing_seconds = initial_impute_seconds;
        return Ok(report);
    }

    let prep = Instant::now();
    let state = match strategy {
        Strategy::Baseline => State::Baseline,
        Strategy::Low => {
            let p = clock(&mut engine.timings.partition, || {
                partition(&*source, &mattrs, PartitionMode::Low)
            })?;
            let tracked = tracked_rows(&p);
            let incomplete: Vec<u32> = {
                let mut v: Vec<u32> = p.multi.clone();
                for a in &mattrs {
                    v.extend(&p.exactly_one[*a]);
                }
                v.sort_unstable();
                v
            };
            let c = clock(&mut engine.timings.cofactor, || -> Result<Triple> {
                let mut c = p.cached_triple.clone();
                c.add_assign(&source.aggregate(RowSel::Ids(&incomplete))?)?;
                Ok(c)
            })?;
            State::Low { p, c, tracked }
        }
        Strategy::High => {
            let p = clock(&mut engine.timings.partition, || {
                partition(&*source, &mattrs, PartitionMode::High)
            })?;
            State::High { p }
        }
        Strategy::Auto => unreachable!("auto resolved above"),
    };
    report.partitions = state.partition().map(|p| PartitionSizes {
        complete: p.complete.len(),
        all_missing: p.all_missing.len(),
        exactly_one: p.exactly_one.iter().map(Vec::len).sum(),
        multi: p.multi.len(),
    });
    report.preprocessing_seconds = initial_impute_seconds + prep.elapsed().as_secs_f64();

    let mut state = state;
    let mut previous: Option<Vec<Vec<f64>>> = None;
    for iteration in 0..cfg.iterations {
        let started = Instant::now();
        let models = engine.iteration(source, &mut state, iteration)?;
        let audit = match (&state, cfg.audit) {
            (State::Low { c, tracked, .. }, true) => {
                let scratch = source.aggregate(RowSel::Ids(tracked))?;
                Some(c.max_rel_diff(&scratch))
            }
            _ => None,
        };
        let seconds = started.elapsed().as_secs_f64();
        report.snapshots.push(IterationSnapshot {
            iteration,
            seconds,
            models: models
                .iter()
                .map(|(a, model)| AttrSnapshot {
                    attr: source.space().name(*a).to_string(),
                    model: model.to_json(),
                })
                .collect(),
            audit_max_rel_diff: audit,
        });
        report.iterations_run = iteration + 1;
        let params: Vec<Vec<f64>> = models.iter().map(|(_, m)| parameters(m)).collect();
        if cfg.early_stop {
            if let Some(prev) = &previous {
                if max_relative_change(prev, &params) < 1e-4 {
                    engine
                        .notes
                        .push(format!("stopped early after iteration {}", iteration + 1));
                    break;
                }
            }
        }
        previous = Some(params);
    }
    report.timings = engine.timings;
    report.models_trained = engine.models_trained;
    report.notes = engine.notes;
    Ok(report)
}

enum State {
    Baseline,
    Low {
        p: PartitionSet,
        /// Aggregate over every row except the all-missing ones.
        c: Triple,
        tracked: Vec<u32>,
    },
    High {
        p: PartitionSet,
    },
}

impl State {
    fn partition(&self) -> Option<&PartitionSet> {
        match self {
            State::Baseline => None,
            State::Low { p, .. } | State::High { p } => Some(p),
        }
    }
}

/// Rows that are not all-missing, ascending.
fn tracked_rows(p: &PartitionSet) -> Vec<u32> {
    let mut v = p.complete.clone();
    v.extend(&p.multi);
    for rows in &p.exactly_one {
        v.extend(rows);
    }
    v.sort_unstable();
    v
}

struct Engine<'a> {
    cfg: &'a MiceConfig,
    mattrs: Vec<usize>,
    missing: Vec<Vec<u32>>,
    timings: PhaseTimings,
    notes: Vec<String>,
    models_trained: usize,
    /// Prediction buffer reused across attributes and rounds.
    values: Vec<Value>,
}

impl Engine<'_> {
    fn iteration<S: RowSource>(
        &mut self,
        source: &mut S,
        state: &mut State,
        iteration: usize,
    ) -> Result<Vec<(usize, Model)>> {
        let mut models = Vec::with_capacity(self.mattrs.len());
        for &attr in &self.mattrs.clone() {
            let model = match state {
                State::Baseline => {
                    let train = clock(&mut self.timings.cofactor, || {
                        source.aggregate(RowSel::ObservedIn(attr))
                    })?;
                    let model = self.train(&*source, &train, attr, iteration)?;
                    self.impute_missing(source, &model, attr, iteration);
                    model
                }
                State::Low { p, c, .. } => {
                    let rows = p.stream(attr);
                    let c_train = clock(&mut self.timings.delta, || -> Result<Triple> {
                        let delta = source.aggregate(RowSel::Ids(rows))?;
                        c.sub(&delta)
                    })?;
                    let model = self.train(&*source, &c_train, attr, iteration)?;
                    self.impute_missing(source, &model, attr, iteration);
                    *c = clock(&mut self.timings.delta, || -> Result<Triple> {
                        let mut next = c_train;
                        next.add_assign(&source.aggregate(RowSel::Ids(rows))?)?;
                        Ok(next)
                    })?;
                    model
                }
                State::High { p } => {
                    let train = clock(&mut self.timings.cofactor, || -> Result<Triple> {
                        let mut t = p.cached_triple.clone();
                        t.add_assign(&source.aggregate(RowSel::Ids(p.stream(attr)))?)?;
                        Ok(t)
                    })?;
                    let model = self.train(&*source, &train, attr, iteration)?;
                    self.impute_missing(source, &model, attr, iteration);
                    model
                }
            };
            models.push((attr, model));
        }
        Ok(models)
    }

    fn train<S: RowSource>(&mut self, source: &S, t: &Triple, attr: usize, iteration: usize) -> Result<Model> {
        let space = source.space();
        let ctx = |e: Error| e.context(format!("iteration {}, attribute '{}'", iteration + 1, space.name(attr)));
        if t.count() <= 0.0 {
            return Err(ctx(Error::numeric("no observed rows to train on")));
        }
        self.models_trained += 1;
        let start = Instant::now();
        let model = match self.cfg.model_for(space, attr) {
            ModelKind::Regression => {
                let cof = to_dense(t, space);
                Model::Regression(train_ridge(&cof, attr, &self.cfg.gd).map_err(ctx)?)
            }
            ModelKind::Lda => {
                let m = train_lda(t, space, attr, self.cfg.lda_shrinkage).map_err(ctx)?;
                if m.shrinkage != self.cfg.lda_shrinkage {
                    self.notes.push(format!(
                        "iteration {}, attribute '{}': covariance singular, used shrinkage {}",
                        iteration + 1,
                        space.name(attr),
                        m.shrinkage
                    ));
                }
                Model::Lda(m)
            }
        };
        self.timings.train += start.elapsed().as_secs_f64();
        Ok(model)
    }

    /// Fills every originally missing cell of `attr`. Rows missing all
    /// incomplete attributes train no model, so filling them here rather
    /// than after the round gives the same values.
    fn impute_missing<S: RowSource>(&mut self, source: &mut S, model: &Model, attr: usize, iteration: usize) {
        let rows = std::mem::take(&mut self.missing[attr]);
        self.impute(source, model, attr, &rows, iteration);
        self.missing[attr] = rows;
    }

    /// Predicts `attr` for `rows` in parallel, then writes the values.
    fn impute<S: RowSource>(&mut self, source: &mut S, model: &Model, attr: usize, rows: &[u32], iteration: usize) {
        if rows.is_empty() {
            return;
        }
        let seed = self.cfg.seed;
        let mut values = std::mem::take(&mut self.values);
        clock(&mut self.timings.predict, || {
            let src = &*source;
            let m = src.space().len();
            values.clear();
            values.resize(rows.len(), Value::Num(0.0));
            values
                .par_chunks_mut(4096)
                .zip(rows.par_chunks(4096))
                .for_each(|(out, chunk)| {
                    let mut buf = vec![Value::Num(0.0); m];
                    for (slot, &r) in out.iter_mut().zip(chunk) {
                        let r = r as usize;
                        src.read_row(r, &mut buf);
                        *slot = match model {
                            Model::Regression(reg) => {
                                let (u1, u2) = noise_stream(seed, iteration, attr, r);
                                Value::Num(reg.predict_stochastic(&buf, u1, u2))
                            }
                            Model::Lda(lda) => Value::Cat(lda.predict(&buf)),
                        };
                    }
                });
        });
        clock(&mut self.timings.write, || {
            for (&r, &v) in rows.iter().zip(&values) {
                source.write_value(attr, r as usize, v);
            }
        });
        self.values = values;
    }
}

fn parameters(model: &Model) -> Vec<f64> {
    match model {
        Model::Regression(m) => m.theta.clone(),
        Model::Lda(m) => m.a.iter().flatten().chain(&m.b).copied().collect(),
    }
}

fn max_relative_change(prev: &[Vec<f64>], next: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (a, b) in prev.iter().zip(next) {
        if a.len() != b.len() {
            return f64::INFINITY;
        }
        for (x, y) in a.iter().zip(b) {
            let scale = x.abs().max(y.abs()).max(1e-12);
            worst = worst.max((x - y).abs() / scale);
        }
    }
    worst
}
