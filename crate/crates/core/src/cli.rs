//! Command-line front end: `impute`, `train`, `inject`, `synth`, `evaluate`
//! and `benchmark`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use crate::dataset::{
    initial_impute, load_csv, write_csv, LoadOptions, RowSel, RowSource, Schema, Table, WriteOptions,
};
use crate::error::{Error, ErrorClass, Result};
use crate::evalbench::{
    benchmark, cell_quality, downstream, inject, split, synth, InjectionSpec, Pattern, Scenario, SynthSpec,
};
use crate::factorized::{aggregate_join, JoinPlan, JoinSpec, JoinedSource, NamedTable};
use crate::mice::{run, run_imputed, MiceConfig, ModelKind, Strategy};
use crate::models::{train_lda, train_ridge, GdConfig, Model};
use crate::ring::{to_dense, AttrKind, AttrSpace, ColumnLayout, Triple};

#[derive(Debug, Parser)]
#[command(
    name = "ringmice",
    version,
    about = "Chained-equations imputation over cofactor aggregates"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Impute the missing cells of a table, or of the root table of a join.
    Impute(ImputeArgs),
    /// Train one model over a complete table or join and print it as JSON.
    Train(TrainArgs),
    /// Mask cells of a complete table (MCAR, MAR or MNAR).
    Inject(InjectArgs),
    /// Generate a synthetic correlated table.
    Synth(SynthArgs),
    /// Score an imputed table against the ground truth.
    Evaluate(EvaluateArgs),
    /// Run a benchmark scenario file and print the phase table.
    Benchmark(BenchmarkArgs),
}

/// Where the data comes from: one table, or several tables joined by a
/// join spec.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV file.
    #[arg(long, required_unless_present = "join")]
    pub input: Option<PathBuf>,

    /// Schema file for --input.
    #[arg(long, required_unless_present = "join")]
    pub schema: Option<PathBuf>,

    /// Join spec; tables are given with --table.
    #[arg(long, conflicts_with_all = ["input", "schema"], requires = "table")]
    pub join: Option<PathBuf>,

    /// Table of a join, as NAME=DATA.csv,SCHEMA.schema (repeatable).
    #[arg(long = "table", value_name = "NAME=CSV,SCHEMA")]
    pub table: Vec<String>,

    /// Aggregate joins without building joined rows.
    #[arg(long)]
    pub factorized: bool,

    /// Number categorical values in sorted rather than first-seen order.
    #[arg(long)]
    pub sorted_dictionaries: bool,
}

#[derive(Debug, Args)]
pub struct GdArgs {
    /// Gradient descent step size.
    #[arg(long, default_value_t = GdConfig::default().learning_rate)]
    pub learning_rate: f64,

    /// Ridge penalty.
    #[arg(long, default_value_t = GdConfig::default().lambda)]
    pub lambda: f64,

    #[arg(long, default_value_t = GdConfig::default().max_epochs)]
    pub max_epochs: usize,

    /// Relative loss decrease that ends gradient descent.
    #[arg(long, default_value_t = GdConfig::default().tolerance)]
    pub tolerance: f64,

    /// Use the step size exactly as given instead of capping it for
    /// stability.
    #[arg(long)]
    pub fixed_step: bool,

    /// Divide the residual variance by N - M - 1 instead of N.
    #[arg(long)]
    pub dof_correction: bool,

    /// LDA covariance shrinkage in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub shrinkage: f64,
}

impl GdArgs {
    fn config(&self) -> GdConfig {
        GdConfig {
            learning_rate: self.learning_rate,
            lambda: self.lambda,
            max_epochs: self.max_epochs,
            tolerance: self.tolerance,
            auto_step: !self.fixed_step,
            dof_correction: self.dof_correction,
            ..GdConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Output CSV (for a join, the imputed root table).
    #[arg(long)]
    pub output: PathBuf,

    /// baseline, low, high or auto.
    #[arg(long, default_value = "auto")]
    pub strategy: Strategy,

    #[arg(long, default_value_t = 5)]
    pub iterations: usize,

    /// Seed of the imputation noise (required).
    #[arg(long)]
    pub seed: u64,

    /// Missing rate at or below which auto picks low.
    #[arg(long, default_value_t = 0.2)]
    pub auto_threshold: f64,

    /// Per-attribute model, as NAME=regression or NAME=lda (repeatable).
    #[arg(long = "model", value_name = "NAME=KIND")]
    pub model: Vec<String>,

    /// Stop early once parameters settle.
    #[arg(long)]
    pub early_stop: bool,

    /// Recompute the maintained aggregate every round and report the drift.
    #[arg(long)]
    pub audit: bool,

    /// Also write OUTPUT.mask.csv marking the imputed cells.
    #[arg(long)]
    pub emit_mask: bool,

    /// Report file (default: report.json next to the output).
    #[arg(long)]
    pub report: Option<PathBuf>,

    #[command(flatten)]
    pub gd: GdArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Attribute to predict; regression if continuous, LDA if categorical.
    #[arg(long)]
    pub target: String,

    #[command(flatten)]
    pub gd: GdArgs,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub schema: PathBuf,

    /// Masked CSV; masked cells are left empty.
    #[arg(long)]
    pub output: PathBuf,

    /// mcar, mar or mnar.
    #[arg(long, default_value = "mcar")]
    pub pattern: Pattern,

    /// Expected fraction of masked cells per target column.
    #[arg(long)]
    pub rate: f64,

    /// Comma-separated columns to mask (default: every feature column except
    /// the driver).
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,

    /// Column driving MAR masking.
    #[arg(long)]
    pub driver: Option<String>,

    #[arg(long)]
    pub seed: u64,

    /// Hold out this fraction of rows, unmasked, before injecting.
    #[arg(long, requires = "holdout_output")]
    pub holdout: Option<f64>,

    /// Where the held-out rows go.
    #[arg(long)]
    pub holdout_output: Option<PathBuf>,

    /// Also write the unmasked rows matching --output.
    #[arg(long)]
    pub truth_output: Option<PathBuf>,

    /// Also write OUTPUT.mask.csv.
    #[arg(long)]
    pub emit_mask: bool,

    #[arg(long)]
    pub sorted_dictionaries: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub rows: usize,

    #[arg(long)]
    pub output: PathBuf,

    /// Where to write the matching schema file.
    #[arg(long)]
    pub schema_output: PathBuf,

    #[arg(long, default_value_t = SynthSpec::default().predictors)]
    pub predictors: usize,

    #[arg(long, default_value_t = SynthSpec::default().categorical)]
    pub categorical: usize,

    #[arg(long, default_value_t = SynthSpec::default().classes)]
    pub classes: usize,

    #[arg(long, default_value_t = SynthSpec::default().correlation)]
    pub correlation: f64,

    /// Class shift in units of the predictors' independent noise.
    #[arg(long, default_value_t = SynthSpec::default().class_separation)]
    pub separation: f64,

    /// Population R² of y on the predictors.
    #[arg(long, default_value_t = SynthSpec::default().r2)]
    pub r2: f64,

    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub schema: PathBuf,

    /// The masked table that was imputed; its empty cells are scored.
    #[arg(long)]
    pub masked: PathBuf,

    #[arg(long)]
    pub imputed: PathBuf,

    #[arg(long)]
    pub truth: PathBuf,

    /// Fit a downstream ridge model of this column on the imputed table...
    #[arg(long, requires = "test")]
    pub target: Option<String>,

    /// ...and score it on these complete rows.
    #[arg(long)]
    pub test: Option<PathBuf>,

    #[arg(long)]
    pub sorted_dictionaries: bool,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Scenario file of `key = value` lines.
    #[arg(long)]
    pub scenario: PathBuf,

    /// JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// CSV of per-run timings.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Usage => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numeric => 4,
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().collect();
    match execute(&cli, &argv, &mut std::io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli, argv: &[String], out: &mut dyn Write) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::usage("--threads must be at least 1"));
        }
        // Fails only if the pool already exists, e.g. in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    match &cli.command {
        Command::Impute(a) => cmd_impute(a, argv, out),
        Command::Train(a) => {
            let json = cmd_train(a)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&json).expect("json")).map_err(io)
        }
        Command::Inject(a) => cmd_inject(a, out),
        Command::Synth(a) => cmd_synth(a),
        Command::Evaluate(a) => {
            let json = cmd_evaluate(a)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&json).expect("json")).map_err(io)
        }
        Command::Benchmark(a) => cmd_benchmark(a, out),
    }
}

fn load_opts(sorted: bool) -> LoadOptions {
    LoadOptions {
        sorted_dictionaries: sorted,
    }
}

fn load_table(data: &Path, schema: &Path, sorted: bool) -> Result<Table> {
    let schema = Schema::load(schema)?;
    if !data.exists() {
        return Err(Error::usage(format!("input file {} does not exist", data.display())));
    }
    load_csv(data, &schema, load_opts(sorted))
}

struct TableArg {
    name: String,
    data: PathBuf,
    schema: PathBuf,
}

fn parse_table_arg(s: &str) -> Result<TableArg> {
    let bad = || Error::usage(format!("--table '{s}' is not NAME=CSV,SCHEMA"));
    let (name, paths) = s.split_once('=').ok_or_else(bad)?;
    let (data, schema) = paths.split_once(',').ok_or_else(bad)?;
    if name.is_empty() || data.is_empty() || schema.is_empty() {
        return Err(bad());
    }
    Ok(TableArg {
        name: name.trim().to_string(),
        data: data.trim().into(),
        schema: schema.trim().into(),
    })
}

struct JoinInput {
    plan: JoinPlan,
    tables: Vec<NamedTable>,
    paths: Vec<PathBuf>,
}

fn load_join(spec_path: &Path, table_args: &[String], sorted: bool) -> Result<JoinInput> {
    let spec = JoinSpec::load(spec_path)?;
    let mut tables = Vec::new();
    let mut paths = Vec::new();
    for raw in table_args {
        let t = parse_table_arg(raw)?;
        if tables.iter().any(|n: &NamedTable| n.name == t.name) {
            return Err(Error::usage(format!("table '{}' given twice", t.name)));
        }
        let table = load_table(&t.data, &t.schema, sorted).map_err(|e| e.context(format!("table '{}'", t.name)))?;
        paths.push(t.data);
        tables.push(NamedTable { name: t.name, table });
    }
    let plan = JoinPlan::new(&spec, &tables)?;
    Ok(JoinInput { plan, tables, paths })
}

/// Display names of the dense cofactor columns: `attr` for continuous
/// attributes, `attr=value` for each category.
fn column_labels(space: &AttrSpace, layout: &ColumnLayout, dictionary: &dyn Fn(usize) -> Vec<String>) -> Vec<String> {
    let mut labels = vec![String::new(); layout.width];
    labels[0] = "(intercept)".into();
    for a in 0..space.len() {
        let range = layout.index_map[a].clone();
        match space.kind(a) {
            AttrKind::Continuous => {
                if !range.is_empty() {
                    labels[range.start] = space.name(a).to_string();
                }
            }
            AttrKind::Categorical => {
                let dict = dictionary(a);
                for (k, &code) in layout.dictionaries[a].iter().enumerate() {
                    let value = dict.get(code as usize).cloned().unwrap_or_else(|| code.to_string());
                    labels[range.start + k] = format!("{}={value}", space.name(a));
                }
            }
        }
    }
    labels
}

fn check_output(output: &Path, inputs: &[PathBuf]) -> Result<()> {
    let canon = |p: &Path| std::fs::canonicalize(p).ok();
    let out = canon(output);
    if out.is_some() && inputs.iter().any(|p| canon(p) == out) {
        return Err(Error::usage(format!(
            "output {} would overwrite an input file",
            output.display()
        )));
    }
    Ok(())
}

fn parse_models(specs: &[String]) -> Result<Vec<(String, ModelKind)>> {
    specs
        .iter()
        .map(|s| {
            let (name, kind) = s
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("--model '{s}' is not NAME=KIND")))?;
            let kind = match kind.trim() {
                "regression" => ModelKind::Regression,
                "lda" => ModelKind::Lda,
                other => return Err(Error::usage(format!("unknown model kind '{other}'"))),
            };
            Ok((name.trim().to_string(), kind))
        })
        .collect()
}

fn cmd_impute(a: &ImputeArgs, argv: &[String], out: &mut dyn Write) -> Result<()> {
    let mut cfg = MiceConfig::new(a.seed);
    cfg.iterations = a.iterations;
    cfg.strategy = a.strategy;
    cfg.auto_threshold = a.auto_threshold;
    cfg.gd = a.gd.config();
    cfg.lda_shrinkage = a.gd.shrinkage;
    cfg.models = parse_models(&a.model)?;
    cfg.early_stop = a.early_stop;
    cfg.audit = a.audit;

    let started = Instant::now();
    let sorted = a.input.sorted_dictionaries;
    let (table, report, inputs) = match &a.input.join {
        None => {
            let input = a.input.input.as_ref().expect("clap enforces --input");
            let schema = a.input.schema.as_ref().expect("clap enforces --schema");
            check_output(&a.output, std::slice::from_ref(input))?;
            let mut table = load_table(input, schema, sorted)?;
            let report = run(&mut table, &cfg)?;
            (table, report, vec![input.clone()])
        }
        Some(spec) => {
            let JoinInput {
                plan,
                mut tables,
                paths,
            } = load_join(spec, &a.input.table, sorted)?;
            check_output(&a.output, &paths)?;
            let root = plan.root_table();
            for (i, t) in tables.iter().enumerate() {
                if i != root && t.table.missing_cells() > 0 {
                    return Err(Error::data(format!(
                        "table '{}' has missing values; only the root table '{}' can be imputed",
                        t.name,
                        plan.root_name()
                    )));
                }
            }
            let t0 = Instant::now();
            initial_impute(&mut tables[root].table)?;
            let init = t0.elapsed().as_secs_f64();
            let mut source = JoinedSource::new(&plan, tables, a.input.factorized)?;
            let report = run_imputed(&mut source, &cfg, init)?;
            (source.into_fact(), report, paths)
        }
    };
    let t0 = Instant::now();
    write_csv(
        &table,
        &a.output,
        WriteOptions {
            blank_missing: false,
            emit_mask: a.emit_mask,
        },
    )?;
    let write_secs = t0.elapsed().as_secs_f64();

    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| a.output.with_file_name("report.json"));
    let json = json!({
        "command": argv,
        "inputs": inputs,
        "output": a.output,
        "join": a.input.join,
        "factorized": a.input.factorized,
        "sorted_dictionaries": sorted,
        "threads": rayon::current_num_threads(),
        "config": cfg,
        "output_write_seconds": write_secs,
        "wall_seconds": started.elapsed().as_secs_f64(),
        "report": report,
    });
    std::fs::write(&report_path, serde_json::to_string_pretty(&json).expect("json") + "\n")
        .map_err(|e| Error::io(&report_path, e))?;
    writeln!(
        out,
        "imputed {} cells over {} attributes with {} in {} rounds; report in {}",
        report.missing_cells,
        report.incomplete_attrs.len(),
        report.strategy,
        report.iterations_run,
        report_path.display()
    )
    .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_train(a: &TrainArgs) -> Result<Json> {
    let sorted = a.input.sorted_dictionaries;
    let (triple, space, dictionary): (Triple, AttrSpace, Box<dyn Fn(usize) -> Vec<String>>) = match &a.input.join {
        None => {
            let table = load_table(
                a.input.input.as_ref().expect("clap enforces --input"),
                a.input.schema.as_ref().expect("clap enforces --schema"),
                sorted,
            )?;
            if table.missing_cells() > 0 {
                return Err(Error::data(format!(
                    "training needs a complete table; {} cells are missing",
                    table.missing_cells()
                )));
            }
            let t = table.aggregate(RowSel::All)?;
            let space = table.space().clone();
            let dicts: Vec<Vec<String>> = (0..space.len())
                .map(|attr| table.column(table.feature_column(attr)).dictionary.clone())
                .collect();
            (t, space, Box::new(move |attr| dicts[attr].clone()))
        }
        Some(spec) => {
            let JoinInput { plan, tables, .. } = load_join(spec, &a.input.table, sorted)?;
            if let Some(t) = tables.iter().find(|t| t.table.missing_cells() > 0) {
                return Err(Error::data(format!(
                    "training needs complete tables; '{}' has missing values",
                    t.name
                )));
            }
            let t = if a.input.factorized {
                aggregate_join(&plan, &tables)?
            } else {
                let rows = crate::factorized::materialize(&plan, &tables)?;
                crate::ring::aggregate(rows.iter(), plan.space())?
            };
            let space = plan.space().clone();
            let dicts: Vec<Vec<String>> = space
                .names()
                .iter()
                .map(|qualified| {
                    tables
                        .iter()
                        .find_map(|nt| {
                            let col = qualified.strip_prefix(&nt.name)?.strip_prefix('.')?;
                            let c = nt.table.schema().index_of(col)?;
                            Some(nt.table.column(c).dictionary.clone())
                        })
                        .unwrap_or_default()
                })
                .collect();
            (t, space, Box::new(move |attr| dicts[attr].clone()))
        }
    };
    let target = space
        .index_of(&a.target)
        .ok_or_else(|| Error::usage(format!("unknown target attribute '{}'", a.target)))?;
    if triple.count() == 0.0 {
        return Err(Error::data("no rows to train on"));
    }
    let model = match space.kind(target) {
        AttrKind::Continuous => {
            let gd = a.gd.config();
            Model::Regression(train_ridge(&to_dense(&triple, &space), target, &gd)?)
        }
        AttrKind::Categorical => Model::Lda(train_lda(&triple, &space, target, a.gd.shrinkage)?),
    };
    let mut json = model.to_json();
    let obj = json.as_object_mut().expect("model json is an object");
    obj.insert("target".into(), json!(a.target));
    obj.insert("rows".into(), json!(triple.count()));
    match &model {
        Model::Regression(m) => {
            let labels = column_labels(&space, &m.layout, &dictionary);
            let names: Vec<&String> = labels
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != m.target_column)
                .map(|(_, l)| l)
                .collect();
            obj.insert("columns".into(), json!(names));
        }
        Model::Lda(m) => {
            let labels = column_labels(&space, &m.layout, &dictionary);
            let dict = dictionary(target);
            let names: Vec<String> = m
                .classes
                .iter()
                .map(|&c| dict.get(c as usize).cloned().unwrap_or_else(|| c.to_string()))
                .collect();
            obj.insert("class_labels".into(), json!(names));
            obj.insert(
                "features".into(),
                json!(m.features.iter().map(|&f| &labels[f]).collect::<Vec<_>>()),
            );
        }
    }
    Ok(json)
}

fn cmd_inject(a: &InjectArgs, out: &mut dyn Write) -> Result<()> {
    check_output(&a.output, std::slice::from_ref(&a.input))?;
    let table = load_table(&a.input, &a.schema, a.sorted_dictionaries)?;
    let (table, holdout) = match a.holdout {
        Some(f) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::usage("--holdout must lie in (0, 1)"));
            }
            let (train, test) = split(&table, 1.0 - f, a.seed)?;
            (train, Some(test))
        }
        None => (table, None),
    };
    let spec = InjectionSpec {
        pattern: a.pattern,
        rate: a.rate,
        targets: a.targets.clone(),
        driver: a.driver.clone(),
        seed: a.seed,
    };
    let (masked, truth) = inject(&table, &spec)?;
    write_csv(
        &masked,
        &a.output,
        WriteOptions {
            blank_missing: true,
            emit_mask: a.emit_mask,
        },
    )?;
    let plain = WriteOptions::default();
    if let Some(p) = &a.truth_output {
        write_csv(&truth, p, plain)?;
    }
    if let (Some(test), Some(p)) = (&holdout, &a.holdout_output) {
        write_csv(test, p, plain)?;
    }
    writeln!(
        out,
        "masked {} of {} cells ({:.4})",
        masked.missing_cells(),
        masked.rows() * masked.feature_columns().len(),
        masked.missing_rate()
    )
    .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        predictors: a.predictors,
        correlation: a.correlation,
        categorical: a.categorical,
        classes: a.classes,
        class_separation: a.separation,
        r2: a.r2,
        seed: a.seed,
    };
    let table = synth(a.rows, &spec)?;
    let mut schema = String::new();
    for c in spec.schema().columns() {
        let kind = match c.kind {
            AttrKind::Continuous => "continuous",
            AttrKind::Categorical => "categorical",
        };
        schema.push_str(&format!("{},{kind}\n", c.name));
    }
    std::fs::write(&a.schema_output, schema).map_err(|e| Error::io(&a.schema_output, e))?;
    write_csv(&table, &a.output, WriteOptions::default())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<Json> {
    let schema = Schema::load(&a.schema)?;
    let opts = load_opts(a.sorted_dictionaries);
    let masked = load_csv(&a.masked, &schema, opts)?;
    let mut imputed = load_csv(&a.imputed, &schema, opts)?;
    let truth = load_csv(&a.truth, &schema, opts)?;
    if imputed.missing_cells() > 0 {
        return Err(Error::data("the imputed table still has missing cells"));
    }
    if masked.rows() != imputed.rows() {
        return Err(Error::usage("masked and imputed tables differ in row count"));
    }
    for (c, m) in masked.masks().iter().enumerate() {
        imputed.set_mask(c, m.clone());
    }
    let mut report = cell_quality(&imputed, &truth)?;
    if let (Some(target), Some(test)) = (&a.target, &a.test) {
        let test = load_csv(test, &schema, opts)?;
        let (rmse, r2) = downstream(&imputed, &test, target, &GdConfig::default())?;
        report.downstream_rmse = Some(rmse);
        report.downstream_r2 = Some(r2);
    }
    Ok(serde_json::to_value(report).expect("json"))
}

fn cmd_benchmark(a: &BenchmarkArgs, out: &mut dyn Write) -> Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let report = benchmark(&scenario)?;
    if let Some(p) = &a.report {
        std::fs::write(p, serde_json::to_string_pretty(&report).expect("json") + "\n").map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &a.csv {
        std::fs::write(p, report.timings_csv()).map_err(|e| Error::io(p, e))?;
    }
    write!(out, "{}", report.phase_table()).map_err(|e| Error::io("<stdout>", e))
}
