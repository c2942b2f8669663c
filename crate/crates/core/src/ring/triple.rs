use crate::error::{Error, Result};

use super::relation::{Key, RelationValue};
use super::space::{AttrKind, AttrSpace, Value};

/// An element of the generalized cofactor ring: the count `n`, the
/// per-attribute sums `s` and the pairwise interactions `q`.
///
/// `q` keeps only the upper triangle (`i <= j`); the lower half is implied by
/// symmetry. Relations keyed by categories stand in for the one-hot columns
/// they would otherwise expand to.
#[derive(Clone, Debug, PartialEq)]
pub struct Triple {
    m: usize,
    n: RelationValue,
    s: Vec<RelationValue>,
    q: Vec<RelationValue>,
}

#[inline]
fn tri_len(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Packed index of `(i, j)` with `i <= j` in the upper triangle.
#[inline]
pub(crate) fn tri_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < m);
    i * m - i * i.saturating_sub(1) / 2 + (j - i)
}

impl Triple {
    /// The additive identity.
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            n: RelationValue::empty(),
            s: vec![RelationValue::empty(); m],
            q: vec![RelationValue::empty(); tri_len(m)],
        }
    }

    /// The multiplicative identity.
    pub fn one(m: usize) -> Self {
        let mut t = Self::zero(m);
        t.n = RelationValue::scalar(1.0);
        t
    }

    /// Lifts a continuous value of attribute `i`.
    pub fn lift_con(x: f64, i: usize, m: usize) -> Self {
        let mut t = Self::one(m);
        t.s[i] = RelationValue::scalar(x);
        t.q[tri_index(m, i, i)] = RelationValue::scalar(x * x);
        t
    }

    /// Lifts a category code of attribute `i`.
    pub fn lift_cat(code: u32, i: usize, m: usize) -> Self {
        let mut t = Self::one(m);
        t.s[i] = RelationValue::singleton(Key::One(code), 1.0);
        t.q[tri_index(m, i, i)] = RelationValue::singleton(Key::One(code), 1.0);
        t
    }

    /// Lifts a whole row at once. Equivalent to the product of the unary
    /// lifts of every attribute, without materializing the intermediate
    /// triples.
    pub fn lift(row: &[Option<Value>], space: &AttrSpace) -> Result<Self> {
        let m = space.len();
        if row.len() != m {
            return Err(Error::usage(format!(
                "row has {} values, attribute space has {m}",
                row.len()
            )));
        }
        let mut vals = Vec::with_capacity(m);
        for (i, v) in row.iter().enumerate() {
            let v = v.ok_or_else(|| {
                Error::usage(format!(
                    "attribute '{}' is absent; impute before lifting",
                    space.name(i)
                ))
            })?;
            check_kind(space, i, v)?;
            vals.push(v);
        }
        let mut t = Self::one(m);
        for i in 0..m {
            t.s[i] = unary(vals[i]);
            for j in i..m {
                t.q[tri_index(m, i, j)] = if i == j {
                    match vals[i] {
                        Value::Num(x) => RelationValue::scalar(x * x),
                        Value::Cat(c) => RelationValue::singleton(Key::One(c), 1.0),
                    }
                } else {
                    let mut r = RelationValue::empty();
                    r.add_join(&unary(vals[i]), &unary(vals[j]));
                    r
                };
            }
        }
        Ok(t)
    }

    pub(crate) fn from_parts(m: usize, n: RelationValue, s: Vec<RelationValue>, q: Vec<RelationValue>) -> Self {
        debug_assert_eq!(s.len(), m);
        debug_assert_eq!(q.len(), tri_len(m));
        Self { m, n, s, q }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Re-indexes into a larger attribute space: local attribute `i` becomes
    /// `positions[i]` of `m`. Positions must be strictly increasing so that
    /// the upper triangle and pair-key order are preserved.
    pub fn embed(&self, positions: &[usize], m: usize) -> Result<Triple> {
        if positions.len() != self.m
            || positions.windows(2).any(|w| w[0] >= w[1])
            || positions.last().is_some_and(|&p| p >= m)
        {
            return Err(Error::usage(
                "embedding positions must be strictly increasing and inside the target space",
            ));
        }
        let mut out = Triple::zero(m);
        out.n = self.n.clone();
        for (i, &pi) in positions.iter().enumerate() {
            out.s[pi] = self.s[i].clone();
            for (j, &pj) in positions.iter().enumerate().skip(i) {
                out.q[tri_index(m, pi, pj)] = self.q[tri_index(self.m, i, j)].clone();
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> &RelationValue {
        &self.n
    }

    /// The count `SUM(1)` as a plain number.
    pub fn count(&self) -> f64 {
        self.n.scalar_value()
    }

    pub fn s(&self, i: usize) -> &RelationValue {
        &self.s[i]
    }

    /// Interaction relation for the unordered pair `{i, j}`.
    pub fn q(&self, i: usize, j: usize) -> &RelationValue {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &self.q[tri_index(self.m, a, b)]
    }

    pub fn is_zero(&self) -> bool {
        self.n.is_empty() && self.s.iter().all(RelationValue::is_empty) && self.q.iter().all(RelationValue::is_empty)
    }

    fn check_same_space(&self, other: &Triple) -> Result<()> {
        if self.m != other.m {
            return Err(Error::usage(format!(
                "triples over different attribute spaces ({} vs {} attributes)",
                self.m, other.m
            )));
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Triple) -> Result<()> {
        self.check_same_space(other)?;
        self.n.add_assign(&other.n);
        for (a, b) in self.s.iter_mut().zip(&other.s) {
            a.add_assign(b);
        }
        for (a, b) in self.q.iter_mut().zip(&other.q) {
            a.add_assign(b);
        }
        Ok(())
    }

    pub fn add(&self, other: &Triple) -> Result<Triple> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    /// Componentwise subtraction; near-cancelling entries are pruned.
    pub fn sub_assign(&mut self, other: &Triple) -> Result<()> {
        self.check_same_space(other)?;
        self.n.sub_assign(&other.n);
        for (a, b) in self.s.iter_mut().zip(&other.s) {
            a.sub_assign(b);
        }
        for (a, b) in self.q.iter_mut().zip(&other.q) {
            a.sub_assign(b);
        }
        Ok(())
    }

    pub fn sub(&self, other: &Triple) -> Result<Triple> {
        let mut out = self.clone();
        out.sub_assign(other)?;
        Ok(out)
    }

    /// Whether attribute `i` carries any aggregate in this triple.
    fn touches(&self, i: usize) -> bool {
        !self.s[i].is_empty() || !self.q[tri_index(self.m, i, i)].is_empty()
    }

    /// Ring product. The operands must aggregate disjoint attribute sets.
    pub fn mul(&self, other: &Triple) -> Result<Triple> {
        self.check_same_space(other)?;
        let m = self.m;
        if let Some(i) = (0..m).find(|&i| self.touches(i) && other.touches(i)) {
            return Err(Error::usage(format!("triple product over overlapping attribute {i}")));
        }
        let na = self.n.scalar_value();
        let nb = other.n.scalar_value();
        let mut out = Triple::zero(m);
        out.n = RelationValue::scalar(na * nb);
        for i in 0..m {
            let s = &mut out.s[i];
            s.add_scaled(&self.s[i], nb);
            s.add_scaled(&other.s[i], na);
        }
        for i in 0..m {
            for j in i..m {
                let idx = tri_index(m, i, j);
                let q = &mut out.q[idx];
                q.add_scaled(&self.q[idx], nb);
                q.add_scaled(&other.q[idx], na);
                if i != j {
                    q.add_join(&self.s[i], &other.s[j]);
                    q.add_join(&other.s[i], &self.s[j]);
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise relative difference across all slots.
    pub fn max_rel_diff(&self, other: &Triple) -> f64 {
        assert_eq!(self.m, other.m);
        let mut worst = self.n.max_rel_diff(&other.n);
        for (a, b) in self.s.iter().zip(&other.s) {
            worst = worst.max(a.max_rel_diff(b));
        }
        for (a, b) in self.q.iter().zip(&other.q) {
            worst = worst.max(a.max_rel_diff(b));
        }
        worst
    }

    /// Debug serialization. Layout (little endian): magic `b"CTR"`, version
    /// byte, `m: u32`, then each relation of `n, s[..], q[..]` as
    /// `len: u32` followed by `(tag: u8, c0: u32, c1: u32, w: f64)` entries in
    /// key order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"CTR");
        out.push(SERIAL_VERSION);
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        for r in std::iter::once(&self.n).chain(&self.s).chain(&self.q) {
            let entries = r.sorted();
            out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
            for (k, w) in entries {
                let (tag, c0, c1) = match k {
                    Key::Unit => (0u8, 0u32, 0u32),
                    Key::One(a) => (1, a, 0),
                    Key::Two(a, b) => (2, a, b),
                };
                out.push(tag);
                out.extend_from_slice(&c0.to_le_bytes());
                out.extend_from_slice(&c1.to_le_bytes());
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Triple> {
        let bad = || Error::data("malformed triple encoding");
        let mut cur = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(bad());
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        if take(3)? != b"CTR" {
            return Err(bad());
        }
        let version = take(1)?[0];
        if version != SERIAL_VERSION {
            return Err(Error::data(format!("unsupported triple encoding version {version}")));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
        let m = u32_at(take(4)?) as usize;
        let mut rels = Vec::with_capacity(1 + m + tri_len(m));
        for _ in 0..1 + m + tri_len(m) {
            let len = u32_at(take(4)?) as usize;
            let mut r = RelationValue::empty();
            for _ in 0..len {
                let tag = take(1)?[0];
                let c0 = u32_at(take(4)?);
                let c1 = u32_at(take(4)?);
                let w = f64::from_le_bytes(take(8)?.try_into().unwrap());
                let key = match tag {
                    0 => Key::Unit,
                    1 => Key::One(c0),
                    2 => Key::Two(c0, c1),
                    _ => return Err(bad()),
                };
                r.upsert(key, w);
            }
            rels.push(r);
        }
        let q = rels.split_off(1 + m);
        let s = rels.split_off(1);
        let n = rels.pop().ok_or_else(bad)?;
        Ok(Triple::from_parts(m, n, s, q))
    }
}

const SERIAL_VERSION: u8 = 1;

fn unary(v: Value) -> RelationValue {
    match v {
        Value::Num(x) => RelationValue::scalar(x),
        Value::Cat(c) => RelationValue::singleton(Key::One(c), 1.0),
    }
}

pub(crate) fn check_kind(space: &AttrSpace, i: usize, v: Value) -> Result<()> {
    let expected = space.kind(i);
    if v.kind() != expected {
        return Err(Error::usage(format!(
            "attribute '{}' expects a {} value, got {:?}",
            space.name(i),
            match expected {
                AttrKind::Continuous => "continuous",
                AttrKind::Categorical => "categorical",
            },
            v
        )));
    }
    Ok(())
}
