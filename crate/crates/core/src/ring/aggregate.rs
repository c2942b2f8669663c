use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::relation::{Key, RelationValue};
use super::space::{AttrKind, AttrSpace, Value};
use super::triple::{tri_index, Triple};

/// Rows per unit of parallel work. Fixed so that the merge order, and hence
/// every floating-point sum, does not depend on the thread count.
pub const CHUNK_ROWS: usize = 16_384;

/// Dense accumulator equivalent to a sum of row lifts.
///
/// Category codes index growable arrays, so codes are expected to be small
/// and dense (the dataset layer hands out dictionary codes `0..k`).
#[derive(Clone, Debug)]
pub struct Aggregator {
    kinds: Vec<AttrKind>,
    n: f64,
    s_con: Vec<f64>,
    s_cat: Vec<Vec<f64>>,
    con_con: Vec<(usize, usize)>,
    // Upper triangle over the continuous attributes, row-major, so it lines
    // up with `con_con`.
    con_con_acc: Vec<f64>,
    con: Vec<usize>,
    xs: Vec<f64>,
    // (continuous attr, categorical attr)
    con_cat: Vec<(usize, usize)>,
    con_cat_acc: Vec<Vec<f64>>,
    cat_cat: Vec<(usize, usize)>,
    cat_cat_acc: Vec<Vec<Vec<f64>>>,
    nums: Vec<f64>,
    codes: Vec<u32>,
}

#[inline]
fn bump(v: &mut Vec<f64>, code: u32, w: f64) {
    let c = code as usize;
    if c >= v.len() {
        v.resize(c + 1, 0.0);
    }
    v[c] += w;
}

fn merge_vec(a: &mut Vec<f64>, b: &[f64]) {
    if b.len() > a.len() {
        a.resize(b.len(), 0.0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

impl Aggregator {
    pub fn new(space: &AttrSpace) -> Self {
        let kinds = space.kinds().to_vec();
        let m = kinds.len();
        let mut con_con = Vec::new();
        let mut con_cat = Vec::new();
        let mut cat_cat = Vec::new();
        for i in 0..m {
            for j in i..m {
                match (kinds[i], kinds[j]) {
                    (AttrKind::Continuous, AttrKind::Continuous) => con_con.push((i, j)),
                    (AttrKind::Continuous, AttrKind::Categorical) => con_cat.push((i, j)),
                    (AttrKind::Categorical, AttrKind::Continuous) => con_cat.push((j, i)),
                    // categorical diagonal is the per-category count, already in s
                    (AttrKind::Categorical, AttrKind::Categorical) if i != j => cat_cat.push((i, j)),
                    _ => {}
                }
            }
        }
        let con: Vec<usize> = (0..m).filter(|&i| kinds[i] == AttrKind::Continuous).collect();
        Self {
            n: 0.0,
            s_con: vec![0.0; m],
            s_cat: vec![Vec::new(); m],
            con_con_acc: vec![0.0; con_con.len()],
            con_cat_acc: vec![Vec::new(); con_cat.len()],
            cat_cat_acc: vec![Vec::new(); cat_cat.len()],
            con_con,
            xs: vec![0.0; con.len()],
            con,
            con_cat,
            cat_cat,
            nums: vec![0.0; m],
            codes: vec![0; m],
            kinds,
        }
    }

    pub fn m(&self) -> usize {
        self.kinds.len()
    }

    pub fn count(&self) -> f64 {
        self.n
    }

    /// Adds the lift of one complete row.
    pub fn push(&mut self, row: &[Value]) -> Result<()> {
        let m = self.kinds.len();
        if row.len() != m {
            return Err(Error::usage(format!(
                "row has {} values, attribute space has {m}",
                row.len()
            )));
        }
        for (i, (&kind, &v)) in self.kinds.iter().zip(row).enumerate() {
            match (kind, v) {
                (AttrKind::Continuous, Value::Num(x)) => self.nums[i] = x,
                (AttrKind::Categorical, Value::Cat(c)) => self.codes[i] = c,
                _ => {
                    return Err(Error::usage(format!(
                        "attribute {i} expects a {kind:?} value, got {v:?}"
                    )))
                }
            }
        }
        self.accumulate();
        Ok(())
    }

    #[inline]
    fn accumulate(&mut self) {
        self.n += 1.0;
        for (i, &kind) in self.kinds.iter().enumerate() {
            match kind {
                AttrKind::Continuous => self.s_con[i] += self.nums[i],
                AttrKind::Categorical => bump(&mut self.s_cat[i], self.codes[i], 1.0),
            }
        }
        for (x, &i) in self.xs.iter_mut().zip(&self.con) {
            *x = self.nums[i];
        }
        let mut rest = &mut self.con_con_acc[..];
        for (a, &xa) in self.xs.iter().enumerate() {
            let (row, tail) = rest.split_at_mut(self.xs.len() - a);
            for (acc, &xb) in row.iter_mut().zip(&self.xs[a..]) {
                *acc += xa * xb;
            }
            rest = tail;
        }
        for (acc, &(i, j)) in self.con_cat_acc.iter_mut().zip(&self.con_cat) {
            bump(acc, self.codes[j], self.nums[i]);
        }
        for (acc, &(i, j)) in self.cat_cat_acc.iter_mut().zip(&self.cat_cat) {
            let ci = self.codes[i] as usize;
            if ci >= acc.len() {
                acc.resize(ci + 1, Vec::new());
            }
            bump(&mut acc[ci], self.codes[j], 1.0);
        }
    }

    /// Adds another accumulator over the same space.
    pub fn merge(&mut self, other: &Aggregator) {
        debug_assert_eq!(self.kinds, other.kinds);
        self.n += other.n;
        for (a, b) in self.s_con.iter_mut().zip(&other.s_con) {
            *a += b;
        }
        for (a, b) in self.s_cat.iter_mut().zip(&other.s_cat) {
            merge_vec(a, b);
        }
        for (a, b) in self.con_con_acc.iter_mut().zip(&other.con_con_acc) {
            *a += b;
        }
        for (a, b) in self.con_cat_acc.iter_mut().zip(&other.con_cat_acc) {
            merge_vec(a, b);
        }
        for (a, b) in self.cat_cat_acc.iter_mut().zip(&other.cat_cat_acc) {
            if b.len() > a.len() {
                a.resize(b.len(), Vec::new());
            }
            for (x, y) in a.iter_mut().zip(b) {
                merge_vec(x, y);
            }
        }
    }

    /// Converts the dense accumulator into a ring value.
    pub fn finish(&self) -> Triple {
        let m = self.kinds.len();
        let codes = |v: &[f64]| -> RelationValue {
            let mut r = RelationValue::empty();
            for (c, &w) in v.iter().enumerate() {
                r.upsert(Key::One(c as u32), w);
            }
            r
        };
        let n = RelationValue::scalar(self.n);
        let mut s = Vec::with_capacity(m);
        let mut q = vec![RelationValue::empty(); m * (m + 1) / 2];
        for i in 0..m {
            match self.kinds[i] {
                AttrKind::Continuous => s.push(RelationValue::scalar(self.s_con[i])),
                AttrKind::Categorical => {
                    let r = codes(&self.s_cat[i]);
                    q[tri_index(m, i, i)] = r.clone();
                    s.push(r);
                }
            }
        }
        for (&(i, j), &w) in self.con_con.iter().zip(&self.con_con_acc) {
            q[tri_index(m, i, j)] = RelationValue::scalar(w);
        }
        for (&(i, j), acc) in self.con_cat.iter().zip(&self.con_cat_acc) {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            q[tri_index(m, a, b)] = codes(acc);
        }
        for (&(i, j), acc) in self.cat_cat.iter().zip(&self.cat_cat_acc) {
            let mut r = RelationValue::empty();
            for (ci, row) in acc.iter().enumerate() {
                for (cj, &w) in row.iter().enumerate() {
                    r.upsert(Key::Two(ci as u32, cj as u32), w);
                }
            }
            q[tri_index(m, i, j)] = r;
        }
        Triple::from_parts(m, n, s, q)
    }
}

/// Sum of row lifts over a stream of complete rows. An empty stream yields
/// the zero triple.
pub fn aggregate<R, I>(rows: I, space: &AttrSpace) -> Result<Triple>
where
    R: AsRef<[Value]>,
    I: IntoIterator<Item = R>,
{
    let mut agg = Aggregator::new(space);
    for row in rows {
        agg.push(row.as_ref())?;
    }
    Ok(agg.finish())
}

/// Parallel aggregation over `0..len`, split into fixed `CHUNK_ROWS` ranges.
/// `fill` pushes the rows of one range; partial results are merged in range
/// order, so the output is identical for any thread count.
pub fn aggregate_chunked<F>(space: &AttrSpace, len: usize, fill: F) -> Result<Aggregator>
where
    F: Fn(Range<usize>, &mut Aggregator) -> Result<()> + Sync,
{
    let starts: Vec<usize> = (0..len).step_by(CHUNK_ROWS).collect();
    let partials: Vec<Result<Aggregator>> = starts
        .par_iter()
        .map(|&start| {
            let mut agg = Aggregator::new(space);
            fill(start..(start + CHUNK_ROWS).min(len), &mut agg)?;
            Ok(agg)
        })
        .collect();
    let mut total = Aggregator::new(space);
    for p in partials {
        total.merge(&p?);
    }
    Ok(total)
}
