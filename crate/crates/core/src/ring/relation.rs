use std::collections::hash_map::{DefaultHasher, Entry};
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

/// Fixed-seed hasher so that map iteration order is reproducible run to run.
type StableState = BuildHasherDefault<DefaultHasher>;

/// Relative threshold under which a subtraction result is treated as
/// floating-point residue and dropped from the relation.
pub const PRUNE_EPS: f64 = 1e-12;

/// A tuple of category codes keying one relation entry.
///
/// Keys in a pairwise interaction are ordered by attribute index, so
/// `Two(a, b)` in `q[i][j]` (with `i < j`) holds the code of attribute `i`
/// first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    Unit,
    One(u32),
    Two(u32, u32),
}

impl Key {
    pub fn arity(self) -> usize {
        match self {
            Key::Unit => 0,
            Key::One(_) => 1,
            Key::Two(..) => 2,
        }
    }

    /// Concatenates two keys (the natural join of keys over disjoint
    /// attributes). Interactions beyond pairwise are not representable.
    pub fn join(self, other: Key) -> Key {
        match (self, other) {
            (Key::Unit, k) | (k, Key::Unit) => k,
            (Key::One(a), Key::One(b)) => Key::Two(a, b),
            _ => panic!("key join exceeds pairwise arity: {self:?} x {other:?}"),
        }
    }
}

/// A relation mapping category-code tuples to weights. Scalars are the
/// relation `{ () -> c }`; the empty relation is zero.
#[derive(Clone, Debug, Default)]
pub struct RelationValue {
    entries: HashMap<Key, f64, StableState>,
}

impl RelationValue {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn scalar(c: f64) -> Self {
        Self::singleton(Key::Unit, c)
    }

    pub fn singleton(key: Key, weight: f64) -> Self {
        let mut r = Self::default();
        r.upsert(key, weight);
        r
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Arity of the stored keys, `None` for the empty relation.
    pub fn arity(&self) -> Option<usize> {
        self.entries.keys().next().map(|k| k.arity())
    }

    pub fn get(&self, key: Key) -> f64 {
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    /// Value of the scalar entry `()`; zero when absent.
    pub fn scalar_value(&self) -> f64 {
        self.get(Key::Unit)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Key, f64)> + '_ {
        self.entries.iter().map(|(k, w)| (*k, *w))
    }

    /// Entries sorted by key, for reproducible downstream expansion.
    pub fn sorted(&self) -> Vec<(Key, f64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    /// Adds `weight` to `key`, removing the entry if it cancels exactly.
    pub fn upsert(&mut self, key: Key, weight: f64) {
        debug_assert!(
            self.arity().is_none_or(|a| a == key.arity()),
            "mixed arity in relation"
        );
        match self.entries.entry(key) {
            Entry::Occupied(mut e) => {
                let v = e.get() + weight;
                if v == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            Entry::Vacant(e) => {
                if weight != 0.0 {
                    e.insert(weight);
                }
            }
        }
    }

    /// Union with summed weights.
    pub fn add_assign(&mut self, other: &RelationValue) {
        for (k, w) in other.iter() {
            self.upsert(k, w);
        }
    }

    /// Subtraction with residue pruning: an entry whose result is below
    /// `PRUNE_EPS` times the larger operand magnitude is dropped.
    pub fn sub_assign(&mut self, other: &RelationValue) {
        for (k, w) in other.iter() {
            match self.entries.entry(k) {
                Entry::Occupied(mut e) => {
                    let a = *e.get();
                    let v = a - w;
                    if v.abs() <= PRUNE_EPS * a.abs().max(w.abs()) {
                        e.remove();
                    } else {
                        *e.get_mut() = v;
                    }
                }
                Entry::Vacant(e) => {
                    e.insert(-w);
                }
            }
        }
    }

    /// Adds `other` scaled by the scalar relation `factor` (a join with a
    /// nullary relation).
    pub fn add_scaled(&mut self, other: &RelationValue, factor: f64) {
        if factor == 0.0 {
            return;
        }
        for (k, w) in other.iter() {
            self.upsert(k, w * factor);
        }
    }

    /// Adds the join `a ⋈ b` of two relations over disjoint attributes.
    pub fn add_join(&mut self, a: &RelationValue, b: &RelationValue) {
        for (ka, wa) in a.iter() {
            for (kb, wb) in b.iter() {
                self.upsert(ka.join(kb), wa * wb);
            }
        }
    }

    /// Exact equality of supports and weights.
    pub fn exactly_eq(&self, other: &RelationValue) -> bool {
        self.entries.len() == other.entries.len() && self.iter().all(|(k, w)| other.entries.get(&k) == Some(&w))
    }

    /// Largest relative difference over the union of supports. Each entry is
    /// compared relative to the larger magnitude of the pair.
    pub fn max_rel_diff(&self, other: &RelationValue) -> f64 {
        let mut worst = 0.0f64;
        let mut check = |a: f64, b: f64| {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        };
        for (k, w) in self.iter() {
            check(w, other.get(k));
        }
        for (k, w) in other.iter() {
            if !self.entries.contains_key(&k) {
                check(0.0, w);
            }
        }
        worst
    }
}

impl PartialEq for RelationValue {
    fn eq(&self, other: &Self) -> bool {
        self.exactly_eq(other)
    }
}
