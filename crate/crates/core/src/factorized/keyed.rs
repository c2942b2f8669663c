use std::collections::{BTreeMap, HashMap};

use crate::dataset::Table;
use crate::error::Result;
use crate::ring::{Aggregator, AttrSpace, Triple, Value};

/// Partial aggregates grouped by a composite join-key value.
///
/// Keys are interned key ids; iteration order is the key order, so folds
/// are reproducible.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyedTriples {
    m: usize,
    map: BTreeMap<Vec<u32>, Triple>,
}

impl KeyedTriples {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            map: BTreeMap::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, key: &[u32]) -> Option<&Triple> {
        self.map.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], &Triple)> {
        self.map.iter().map(|(k, t)| (k.as_slice(), t))
    }

    /// Adds `t` into the group `key`.
    pub fn accumulate(&mut self, key: Vec<u32>, t: Triple) -> Result<()> {
        match self.map.get_mut(&key) {
            Some(acc) => acc.add_assign(&t)?,
            None => {
                self.map.insert(key, t);
            }
        }
        Ok(())
    }

    /// Sum over all groups; the zero triple when empty.
    pub fn fold(&self) -> Result<Triple> {
        let mut acc = Triple::zero(self.m);
        for t in self.map.values() {
            acc.add_assign(t)?;
        }
        Ok(acc)
    }
}

/// Groups the rows of `table` by the key ids in `keys` (one slice of per-row
/// ids per key column) and sums the lifts of the columns `attrs`, placed at
/// attribute `positions` of an `m`-attribute space.
pub fn partial_aggregate(
    table: &Table,
    keys: &[&[u32]],
    attrs: &[usize],
    positions: &[usize],
    m: usize,
) -> Result<KeyedTriples> {
    let local = AttrSpace::new(attrs.iter().map(|&c| {
        let def = &table.schema().columns()[c];
        (def.name.clone(), def.kind)
    }));
    let mut groups: HashMap<Vec<u32>, Aggregator> = HashMap::new();
    let mut key = Vec::with_capacity(keys.len());
    let mut row = vec![Value::Num(0.0); attrs.len()];
    for r in 0..table.rows() {
        key.clear();
        key.extend(keys.iter().map(|k| k[r]));
        for (slot, &c) in row.iter_mut().zip(attrs) {
            *slot = table.column(c).data.value(r);
        }
        match groups.get_mut(key.as_slice()) {
            Some(agg) => agg.push(&row)?,
            None => {
                let mut agg = Aggregator::new(&local);
                agg.push(&row)?;
                groups.insert(key.clone(), agg);
            }
        }
    }
    let mut out = KeyedTriples::new(m);
    for (k, agg) in groups {
        out.map.insert(k, agg.finish().embed(positions, m)?);
    }
    Ok(out)
}

/// Joins two keyed aggregates: for every left group whose key, restricted to
/// `left_pos`, exists on the right, multiplies the two triples. The product
/// is regrouped by the left key restricted to `out_pos`; `None` folds
/// everything under the empty key.
pub fn combine(
    left: &KeyedTriples,
    left_pos: &[usize],
    right: &KeyedTriples,
    out_pos: Option<&[usize]>,
) -> Result<KeyedTriples> {
    let mut out = KeyedTriples::new(left.m);
    let mut probe = Vec::with_capacity(left_pos.len());
    for (k, t) in &left.map {
        probe.clear();
        probe.extend(left_pos.iter().map(|&p| k[p]));
        let Some(r) = right.map.get(probe.as_slice()) else {
            continue;
        };
        let prod = t.mul(r)?;
        let key = match out_pos {
            Some(pos) => pos.iter().map(|&p| k[p]).collect(),
            None => Vec::new(),
        };
        out.accumulate(key, prod)?;
    }
    Ok(out)
}
