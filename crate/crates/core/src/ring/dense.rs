use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::relation::Key;
use super::space::{AttrKind, AttrSpace, Value};
use super::triple::Triple;

/// Column layout of one-hot expanded attributes.
///
/// Continuous attributes occupy one column; categorical attributes one
/// column per category in `dictionaries[attr]` (ascending codes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnLayout {
    pub kinds: Vec<AttrKind>,
    pub index_map: Vec<Range<usize>>,
    pub dictionaries: Vec<Vec<u32>>,
    pub width: usize,
}

impl ColumnLayout {
    /// Column holding `value` of attribute `attr`, if it has one.
    pub fn column_of(&self, attr: usize, value: Value) -> Option<usize> {
        let range = &self.index_map[attr];
        match value {
            Value::Num(_) => Some(range.start),
            Value::Cat(c) => self.dictionaries[attr].binary_search(&c).ok().map(|k| range.start + k),
        }
    }

    /// Writes the one-hot encoding of `row` into `out` (length `width`),
    /// skipping `exclude`. Unknown categories encode as all zeros.
    pub fn encode_into(&self, row: &[Value], exclude: Option<usize>, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (attr, &v) in row.iter().enumerate() {
            if Some(attr) == exclude || self.index_map[attr].is_empty() {
                continue;
            }
            if let Some(col) = self.column_of(attr, v) {
                out[col] = match v {
                    Value::Num(x) => x,
                    Value::Cat(_) => 1.0,
                };
            }
        }
    }
}

/// The real-valued cofactor matrix of the one-hot encoded data with an
/// intercept column at index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseCofactor {
    pub dim: usize,
    /// Row-major `dim x dim`, exactly symmetric.
    pub matrix: Vec<f64>,
    /// Layout of the attribute columns; column 0 is the intercept.
    pub layout: ColumnLayout,
}

impl DenseCofactor {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.matrix[r * self.dim + c]
    }

    pub fn count(&self) -> f64 {
        self.matrix[0]
    }

    pub fn index_map(&self) -> &[Range<usize>] {
        &self.layout.index_map
    }

    pub fn dictionaries(&self) -> &[Vec<u32>] {
        &self.layout.dictionaries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// `θᵀ C θ`.
    pub fn quad_form(&self, theta: &[f64]) -> f64 {
        assert_eq!(theta.len(), self.dim);
        let mut acc = 0.0;
        for (r, row) in self.matrix.chunks(self.dim).enumerate() {
            let dot: f64 = row.iter().zip(theta).map(|(a, b)| a * b).sum();
            acc += theta[r] * dot;
        }
        acc
    }

    /// `C θ`.
    pub fn mat_vec(&self, theta: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks(self.dim)
            .map(|row| row.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Expands a triple into its dense one-hot cofactor matrix.
pub fn to_dense(t: &Triple, space: &AttrSpace) -> DenseCofactor {
    let m = space.len();
    assert_eq!(t.m(), m, "triple and attribute space disagree");

    let mut dictionaries = vec![Vec::new(); m];
    let mut index_map = Vec::with_capacity(m);
    let mut next = 1;
    for i in 0..m {
        let width = match space.kind(i) {
            AttrKind::Continuous => 1,
            AttrKind::Categorical => {
                let codes: BTreeSet<u32> = t
                    .s(i)
                    .iter()
                    .map(|(k, _)| match k {
                        Key::One(c) => c,
                        other => panic!("categorical sum keyed by {other:?}"),
                    })
                    .collect();
                dictionaries[i] = codes.into_iter().collect();
                dictionaries[i].len()
            }
        };
        index_map.push(next..next + width);
        next += width;
    }
    let dim = next;
    let layout = ColumnLayout {
        kinds: space.kinds().to_vec(),
        index_map,
        dictionaries,
        width: dim,
    };
    let col = |attr: usize, code: u32| -> Option<usize> {
        layout.dictionaries[attr]
            .binary_search(&code)
            .ok()
            .map(|k| layout.index_map[attr].start + k)
    };

    let mut matrix = vec![0.0; dim * dim];
    let mut set = |r: usize, c: usize, w: f64| {
        matrix[r * dim + c] = w;
        matrix[c * dim + r] = w;
    };
    set(0, 0, t.count());
    for i in 0..m {
        for (k, w) in t.s(i).iter() {
            let c = match k {
                Key::Unit => layout.index_map[i].start,
                Key::One(code) => match col(i, code) {
                    Some(c) => c,
                    None => continue,
                },
                Key::Two(..) => unreachable!("sum relation of arity 2"),
            };
            set(0, c, w);
        }
        for j in i..m {
            let (ki, kj) = (space.kind(i), space.kind(j));
            for (k, w) in t.q(i, j).iter() {
                let cells = match (ki, kj, k) {
                    (AttrKind::Continuous, AttrKind::Continuous, Key::Unit) => {
                        Some((layout.index_map[i].start, layout.index_map[j].start))
                    }
                    (AttrKind::Categorical, _, Key::One(c)) if i == j => col(i, c).map(|x| (x, x)),
                    (AttrKind::Continuous, AttrKind::Categorical, Key::One(c)) => {
                        col(j, c).map(|x| (layout.index_map[i].start, x))
                    }
                    (AttrKind::Categorical, AttrKind::Continuous, Key::One(c)) => {
                        col(i, c).map(|x| (x, layout.index_map[j].start))
                    }
                    (AttrKind::Categorical, AttrKind::Categorical, Key::Two(a, b)) => col(i, a).zip(col(j, b)),
                    (_, _, k) => panic!("interaction ({i},{j}) keyed by {k:?}"),
                };
                // A key missing from the dictionary is residue of a category
                // whose count cancelled to zero.
                if let Some((r, c)) = cells {
                    set(r, c, w);
                }
            }
        }
    }
    DenseCofactor { dim, matrix, layout }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::aggregate;

    #[test]
    fn continuous_pair() {
        let rows = [[Value::Num(2.0), Value::Num(3.0)], [Value::Num(1.0), Value::Num(1.0)]];
        let space = AttrSpace::continuous(2);
        let d = to_dense(&aggregate(rows.iter(), &space).unwrap(), &space);
        assert_eq!(
            d.rows(),
            vec![vec![2.0, 3.0, 4.0], vec![3.0, 5.0, 7.0], vec![4.0, 7.0, 10.0]]
        );
    }

    #[test]
    fn zero_triple_is_intercept_only() {
        let space = AttrSpace::new([("c".to_string(), AttrKind::Categorical)]);
        let d = to_dense(&Triple::zero(1), &space);
        assert_eq!(d.dim, 1);
        assert_eq!(d.matrix, vec![0.0]);
    }

    #[test]
    fn single_categorical() {
        let space = AttrSpace::new([("c".to_string(), AttrKind::Categorical)]);
        let rows = [[Value::Cat(0)], [Value::Cat(0)], [Value::Cat(1)]];
        let d = to_dense(&aggregate(rows.iter(), &space).unwrap(), &space);
        assert_eq!(
            d.rows(),
            vec![vec![3.0, 2.0, 1.0], vec![2.0, 2.0, 0.0], vec![1.0, 0.0, 1.0]]
        );
        assert_eq!(d.dictionaries()[0], vec![0, 1]);
    }

    #[test]
    fn encode_skips_unknown_category() {
        let space = AttrSpace::new([
            ("x".to_string(), AttrKind::Continuous),
            ("c".to_string(), AttrKind::Categorical),
        ]);
        let rows = [[Value::Num(1.0), Value::Cat(4)], [Value::Num(2.0), Value::Cat(9)]];
        let d = to_dense(&aggregate(rows.iter(), &space).unwrap(), &space);
        let mut out = vec![0.0; d.dim];
        d.layout.encode_into(&[Value::Num(5.0), Value::Cat(9)], None, &mut out);
        assert_eq!(out, vec![0.0, 5.0, 0.0, 1.0]);
        d.layout.encode_into(&[Value::Num(5.0), Value::Cat(3)], None, &mut out);
        assert_eq!(out, vec![0.0, 5.0, 0.0, 0.0]);
    }
}
