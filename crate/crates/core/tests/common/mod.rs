//! Brute-force reference implementations and random inputs shared by the
//! integration and acceptance tests. Nothing here goes through the ring.
#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use ringmice::dataset::{Column, ColumnDef, Role, Schema, Table};
use ringmice::factorized::{JoinSpec, NamedTable};
use ringmice::ring::{aggregate, to_dense, AttrKind, AttrSpace, DenseCofactor, Value};

/// One column of the oracle's one-hot design: the intercept, a continuous
/// attribute, or one category of a categorical attribute.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OneHot {
    Intercept,
    Num(usize),
    Cat(usize, u32),
}

/// Design columns: intercept, then per attribute either its value or one
/// indicator per observed category in ascending code order.
pub fn design_columns(rows: &[Vec<Value>], kinds: &[AttrKind]) -> Vec<OneHot> {
    let mut cols = vec![OneHot::Intercept];
    for (a, kind) in kinds.iter().enumerate() {
        match kind {
            AttrKind::Continuous => cols.push(OneHot::Num(a)),
            AttrKind::Categorical => {
                let codes: BTreeSet<u32> = rows.iter().map(|r| r[a].as_cat().unwrap()).collect();
                cols.extend(codes.into_iter().map(|c| OneHot::Cat(a, c)));
            }
        }
    }
    cols
}

pub fn design_value(row: &[Value], col: OneHot) -> f64 {
    match col {
        OneHot::Intercept => 1.0,
        OneHot::Num(a) => row[a].as_num().unwrap(),
        OneHot::Cat(a, c) => f64::from(u8::from(row[a].as_cat().unwrap() == c)),
    }
}

/// `XᵀX` of the one-hot design, summed row by row.
pub fn gram(rows: &[Vec<Value>], cols: &[OneHot]) -> Vec<Vec<f64>> {
    let d = cols.len();
    let mut g = vec![vec![0.0; d]; d];
    let mut x = vec![0.0; d];
    for row in rows {
        for (k, &c) in cols.iter().enumerate() {
            x[k] = design_value(row, c);
        }
        for i in 0..d {
            for j in 0..d {
                g[i][j] += x[i] * x[j];
            }
        }
    }
    g
}

/// Error of `a` against `b`, relative to `max(|b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// `‖a − b‖₂ / ‖b‖₂`.
pub fn vec_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    (diff / norm).sqrt()
}

/// Largest relative error between a dense cofactor and the oracle Gram
/// matrix. Fails outright if the column sets differ.
pub fn dense_vs_gram(dense: &DenseCofactor, rows: &[Vec<Value>], kinds: &[AttrKind]) -> f64 {
    let cols = design_columns(rows, kinds);
    if dense.dim != cols.len() {
        return f64::INFINITY;
    }
    let g = gram(rows, &cols);
    let index = |c: OneHot| -> usize {
        match c {
            OneHot::Intercept => 0,
            OneHot::Num(a) => dense.layout.column_of(a, Value::Num(0.0)).unwrap(),
            OneHot::Cat(a, code) => dense.layout.column_of(a, Value::Cat(code)).unwrap(),
        }
    };
    let mut worst = 0.0f64;
    for (i, &ci) in cols.iter().enumerate() {
        for (j, &cj) in cols.iter().enumerate() {
            worst = worst.max(rel_err(dense.get(index(ci), index(cj)), g[i][j]));
        }
    }
    worst
}

pub fn random_kinds<R: Rng>(rng: &mut R, max_attrs: usize) -> Vec<AttrKind> {
    let m = rng.gen_range(1..=max_attrs);
    (0..m)
        .map(|_| {
            if rng.gen_bool(0.5) {
                AttrKind::Continuous
            } else {
                AttrKind::Categorical
            }
        })
        .collect()
}

pub fn random_value<R: Rng>(rng: &mut R, kind: AttrKind, categories: u32) -> Value {
    match kind {
        AttrKind::Continuous => Value::Num(rng.gen_range(-10.0..10.0)),
        AttrKind::Categorical => Value::Cat(rng.gen_range(0..categories)),
    }
}

pub fn random_rows<R: Rng>(rng: &mut R, n: usize, kinds: &[AttrKind], categories: u32) -> Vec<Vec<Value>> {
    (0..n)
        .map(|_| kinds.iter().map(|&k| random_value(rng, k, categories)).collect())
        .collect()
}

/// A complete table of feature columns `a0, a1, ...` holding `rows`.
pub fn table_of(rows: &[Vec<Value>], kinds: &[AttrKind]) -> Table {
    let defs = kinds
        .iter()
        .enumerate()
        .map(|(a, &k)| ColumnDef::feature(format!("a{a}"), k))
        .collect();
    let columns = kinds
        .iter()
        .enumerate()
        .map(|(a, &k)| match k {
            AttrKind::Continuous => Column::continuous(rows.iter().map(|r| r[a].as_num().unwrap()).collect()),
            AttrKind::Categorical => Column::categorical(rows.iter().map(|r| r[a].as_cat().unwrap()).collect()),
        })
        .collect();
    Table::complete(Schema::new(defs).unwrap(), columns).unwrap()
}

/// Closed-form ridge: minimizes `(1/2N)‖y − Xβ‖² + (λ/2)‖β₁..‖²` with an
/// unpenalized intercept `β₀`. `x` holds the predictors without intercept.
pub fn ridge_closed_form(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
    let n = x.len();
    let p = x[0].len() + 1;
    let design = DMatrix::from_fn(n, p, |r, c| if c == 0 { 1.0 } else { x[r][c - 1] });
    let target = DVector::from_column_slice(y);
    let mut lhs = design.transpose() * &design / n as f64;
    for k in 1..p {
        lhs[(k, k)] += lambda;
    }
    let rhs = design.transpose() * target / n as f64;
    lhs.lu()
        .solve(&rhs)
        .expect("well-conditioned")
        .iter()
        .copied()
        .collect()
}

/// A random well-conditioned regression problem: independent predictors
/// with assorted means and scales, target last.
pub fn ridge_problem<R: Rng>(rng: &mut R) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = rng.gen_range(60..400);
    let p = rng.gen_range(1..=5);
    let centers: Vec<(f64, f64)> = (0..p)
        .map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(0.5..3.0)))
        .collect();
    let beta: Vec<f64> = (0..=p).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = centers
            .iter()
            .map(|&(m, s)| Normal::new(m, s).unwrap().sample(rng))
            .collect();
        let fit = beta[0] + row.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        y.push(fit + noise.sample(rng));
        x.push(row);
    }
    (x, y)
}

/// Cofactor of the predictors with the target as the last attribute.
pub fn cofactor_of(x: &[Vec<f64>], y: &[f64]) -> DenseCofactor {
    let m = x[0].len() + 1;
    let space = AttrSpace::continuous(m);
    let rows: Vec<Vec<Value>> = x
        .iter()
        .zip(y)
        .map(|(r, &t)| r.iter().chain(std::iter::once(&t)).map(|&v| Value::Num(v)).collect())
        .collect();
    to_dense(&aggregate(rows.iter(), &space).unwrap(), &space)
}

/// Row-wise LDA statistics for a categorical `target` and continuous
/// features: priors, class means and the pooled within-class covariance
/// (maximum likelihood, divided by N). Classes in ascending code order.
pub struct LdaStats {
    pub classes: Vec<u32>,
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
}

pub fn lda_stats(rows: &[Vec<Value>], target: usize, features: &[usize]) -> LdaStats {
    let classes: Vec<u32> = rows
        .iter()
        .map(|r| r[target].as_cat().unwrap())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let p = features.len();
    let n = rows.len() as f64;
    let mut counts = vec![0.0; classes.len()];
    let mut sums = vec![vec![0.0; p]; classes.len()];
    for r in rows {
        let c = classes.binary_search(&r[target].as_cat().unwrap()).unwrap();
        counts[c] += 1.0;
        for (f, &a) in features.iter().enumerate() {
            sums[c][f] += r[a].as_num().unwrap();
        }
    }
    let means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &nc)| s.iter().map(|v| v / nc).collect())
        .collect();
    let mut sigma = vec![vec![0.0; p]; p];
    for r in rows {
        let c = classes.binary_search(&r[target].as_cat().unwrap()).unwrap();
        let d: Vec<f64> = features
            .iter()
            .enumerate()
            .map(|(f, &a)| r[a].as_num().unwrap() - means[c][f])
            .collect();
        for i in 0..p {
            for j in 0..p {
                sigma[i][j] += d[i] * d[j] / n;
            }
        }
    }
    LdaStats {
        classes,
        priors: counts.iter().map(|c| c / n).collect(),
        means,
        sigma,
    }
}

/// A random tree join: tables `t0..tk` where `t0` is the root and every
/// other table hangs off an earlier one. Each edge joins on one or two
/// key columns whose texts are drawn from a small shared domain, so key
/// codes differ between tables while texts match.
pub struct RandomJoin {
    pub tables: Vec<NamedTable>,
    pub spec: JoinSpec,
    pub parent: Vec<Option<usize>>,
    /// Per table: feature column indices and, per edge to a child, the
    /// parent key columns and child key columns.
    pub edges: Vec<(usize, usize, Vec<usize>, Vec<usize>)>,
}

pub fn random_join<R: Rng>(rng: &mut R, max_tables: usize, max_rows: usize) -> RandomJoin {
    let k = rng.gen_range(1..=max_tables);
    let parent: Vec<Option<usize>> = (0..k)
        .map(|i| if i == 0 { None } else { Some(rng.gen_range(0..i)) })
        .collect();
    // Per edge (child i): key arity and domain.
    let arity: Vec<usize> = (0..k).map(|_| if rng.gen_bool(0.3) { 2 } else { 1 }).collect();
    let domain: Vec<u32> = (0..k)
        .map(|i| {
            if arity[i] == 2 {
                rng.gen_range(3..8)
            } else {
                rng.gen_range(8..60)
            }
        })
        .collect();

    struct Build {
        defs: Vec<ColumnDef>,
        cols: Vec<Column>,
    }
    let mut builds: Vec<Build> = Vec::new();
    let mut rows_of = Vec::new();
    for _ in 0..k {
        rows_of.push(rng.gen_range(1..=max_rows));
        builds.push(Build {
            defs: Vec::new(),
            cols: Vec::new(),
        });
    }
    let key_column = |rng: &mut R, n: usize, domain: u32| -> Column {
        // Codes are first-seen positions of shuffled texts, so the same text
        // gets unrelated codes in different tables.
        let mut texts: Vec<String> = (0..domain).map(|v| format!("v{v}")).collect();
        texts.shuffle(rng);
        let codes = (0..n).map(|_| rng.gen_range(0..domain)).collect();
        Column::with_dictionary(codes, texts)
    };
    let mut edges = Vec::new();
    let mut spec_text = String::new();
    for (i, b) in builds.iter_mut().enumerate() {
        let n = rows_of[i];
        let kinds = random_kinds(rng, 2);
        for (a, &kind) in kinds.iter().enumerate() {
            b.defs.push(ColumnDef::feature(format!("f{a}"), kind));
            b.cols.push(match kind {
                AttrKind::Continuous => Column::continuous((0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()),
                AttrKind::Categorical => Column::categorical((0..n).map(|_| rng.gen_range(0..4)).collect()),
            });
        }
        spec_text.push_str(&format!("t{i}\n"));
    }
    for i in 1..k {
        let p = parent[i].unwrap();
        let mut pk = Vec::new();
        let mut ck = Vec::new();
        for part in 0..arity[i] {
            let name_p = format!("to{i}_{part}");
            let name_c = format!("up_{part}");
            let np = rows_of[p];
            let nc = rows_of[i];
            let colp = key_column(rng, np, domain[i]);
            let colc = key_column(rng, nc, domain[i]);
            builds[p].defs.push(ColumnDef {
                name: name_p.clone(),
                kind: AttrKind::Categorical,
                role: Role::JoinKey,
            });
            builds[p].cols.push(colp);
            pk.push(builds[p].cols.len() - 1);
            builds[i].defs.push(ColumnDef {
                name: name_c.clone(),
                kind: AttrKind::Categorical,
                role: Role::JoinKey,
            });
            builds[i].cols.push(colc);
            ck.push(builds[i].cols.len() - 1);
            spec_text.push_str(&format!("t{p}.{name_p} = t{i}.{name_c}\n"));
        }
        edges.push((p, i, pk, ck));
    }
    let tables = builds
        .into_iter()
        .enumerate()
        .map(|(i, b)| NamedTable {
            name: format!("t{i}"),
            table: Table::complete(Schema::new(b.defs).unwrap(), b.cols).unwrap(),
        })
        .collect();
    RandomJoin {
        tables,
        spec: JoinSpec::parse(&spec_text).unwrap(),
        parent,
        edges,
    }
}

fn text_at(t: &Table, col: usize, row: usize) -> String {
    t.column(col).render(row)
}

/// Nested-loop join, projected onto the feature columns of every table in
/// table order.
pub fn nested_loop_join(j: &RandomJoin) -> Vec<Vec<Value>> {
    let k = j.tables.len();
    // Partial tuples: the chosen row of each table bound so far.
    let mut tuples: Vec<Vec<usize>> = (0..j.tables[0].table.rows()).map(|r| vec![r]).collect();
    for i in 1..k {
        let (p, _, pk, ck) = j.edges.iter().find(|e| e.1 == i).unwrap();
        let parent = &j.tables[*p].table;
        let child = &j.tables[i].table;
        let mut next = Vec::new();
        for t in &tuples {
            let prow = t[*p];
            for crow in 0..child.rows() {
                if pk
                    .iter()
                    .zip(ck)
                    .all(|(&a, &b)| text_at(parent, a, prow) == text_at(child, b, crow))
                {
                    let mut u = t.clone();
                    u.push(crow);
                    next.push(u);
                }
            }
        }
        tuples = next;
    }
    tuples
        .iter()
        .map(|t| {
            let mut row = Vec::new();
            for (i, nt) in j.tables.iter().enumerate() {
                for &c in nt.table.feature_columns().iter() {
                    let v = nt.table.column(c).data.value(t[i]);
                    row.push(v);
                }
            }
            row
        })
        .collect()
}
