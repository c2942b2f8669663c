use std::collections::HashMap;

use crate::dataset::{ColumnData, RowSel, RowSource, Table};
use crate::error::{Error, Result};
use crate::ring::{Aggregator, AttrKind, AttrSpace, Key, Triple, Value};

use super::plan::{JoinPlan, NamedTable};

/// The root table of a join viewed as the wide joined rows, for imputing
/// the root's missing cells with the dimension attributes as predictors.
///
/// Every root row must match exactly one joined tuple of its subtrees.
/// Dimension attributes are read-only and never missing.
#[derive(Debug)]
pub struct JoinedSource {
    space: AttrSpace,
    fact: Table,
    root_attrs: Vec<usize>,
    /// Group id of each root row; rows in a group share all dimension values.
    row_group: Vec<u32>,
    groups: Vec<DimGroup>,
    factorized: bool,
}

#[derive(Debug)]
struct DimGroup {
    /// Product of the dimension subtree aggregates (count 1).
    triple: Triple,
    values: Vec<Value>,
}

impl JoinedSource {
    /// Takes ownership of the root table. With `factorized`, aggregation
    /// groups root rows by their dimension tuple and multiplies the group
    /// partials with the precomputed dimension triples; otherwise it lifts
    /// the joined rows one by one.
    pub fn new(plan: &JoinPlan, mut tables: Vec<NamedTable>, factorized: bool) -> Result<Self> {
        let root = &plan.nodes[0];
        let m = plan.space().len();
        let r = root.attrs.len();
        let subtrees = root
            .children
            .iter()
            .map(|link| plan.subtree(&tables, link.child))
            .collect::<Result<Vec<_>>>()?;
        let child_keys: Vec<Vec<&[u32]>> = root.children.iter().map(|l| plan.keys(0, &l.cols)).collect();
        let fact_rows = tables[root.table].table.rows();

        let mut group_of: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut groups = Vec::new();
        let mut row_group = Vec::with_capacity(fact_rows);
        let mut key = Vec::new();
        for row in 0..fact_rows {
            key.clear();
            for keys in &child_keys {
                key.extend(keys.iter().map(|ids| ids[row]));
            }
            if let Some(&g) = group_of.get(&key) {
                row_group.push(g);
                continue;
            }
            let mut triple = Triple::one(m);
            let mut pos = 0;
            for ((link, sub), keys) in root.children.iter().zip(&subtrees).zip(&child_keys) {
                let k = &key[pos..pos + keys.len()];
                pos += keys.len();
                let child = &plan.nodes[link.child].name;
                let t = sub.get(k).ok_or_else(|| {
                    Error::data(format!(
                        "row {} of '{}' has no matching row in '{child}'",
                        row + 1,
                        root.name
                    ))
                })?;
                if t.count() != 1.0 {
                    return Err(Error::data(format!(
                        "row {} of '{}' matches {} joined rows through '{child}'; imputation needs exactly one",
                        row + 1,
                        root.name,
                        t.count()
                    )));
                }
                triple = triple.mul(t)?;
            }
            let values = (r..m).map(|a| single_value(&triple, plan.space().kind(a), a)).collect();
            let g = groups.len() as u32;
            groups.push(DimGroup { triple, values });
            group_of.insert(key.clone(), g);
            row_group.push(g);
        }

        let fact = tables.swap_remove(root.table).table;
        Ok(Self {
            space: plan.space().clone(),
            fact,
            root_attrs: root.attrs.clone(),
            row_group,
            groups,
            factorized,
        })
    }

    pub fn fact(&self) -> &Table {
        &self.fact
    }

    pub fn into_fact(self) -> Table {
        self.fact
    }

    pub fn fact_mut(&mut self) -> &mut Table {
        &mut self.fact
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    fn aggregate_factorized(&self, sel: RowSel<'_>) -> Result<Triple> {
        let m = self.space.len();
        let r = self.root_attrs.len();
        let local = AttrSpace::new((0..r).map(|a| (self.space.name(a).to_string(), self.space.kind(a))));
        let mut partials: Vec<Option<Aggregator>> = (0..self.groups.len()).map(|_| None).collect();
        let mut buf = vec![Value::Num(0.0); r];
        let mut push = |row: usize| -> Result<()> {
            for (slot, &c) in buf.iter_mut().zip(&self.root_attrs) {
                *slot = self.fact.column(c).data.value(row);
            }
            partials[self.row_group[row] as usize]
                .get_or_insert_with(|| Aggregator::new(&local))
                .push(&buf)
        };
        match sel {
            RowSel::All => (0..self.fact.rows()).try_for_each(&mut push)?,
            RowSel::Ids(ids) => ids.iter().try_for_each(|&i| push(i as usize))?,
            RowSel::ObservedIn(attr) => (0..self.fact.rows())
                .filter(|&row| !self.is_missing(attr, row))
                .try_for_each(&mut push)?,
        }
        let positions: Vec<usize> = (0..r).collect();
        let mut total = Triple::zero(m);
        for (g, agg) in partials.into_iter().enumerate() {
            if let Some(agg) = agg {
                let part = agg.finish().embed(&positions, m)?;
                total.add_assign(&part.mul(&self.groups[g].triple)?)?;
            }
        }
        Ok(total)
    }
}

/// The value of attribute `a` in a count-1 aggregate.
fn single_value(t: &Triple, kind: AttrKind, a: usize) -> Value {
    match kind {
        AttrKind::Continuous => Value::Num(t.s(a).scalar_value()),
        AttrKind::Categorical => match t.s(a).iter().next() {
            Some((Key::One(c), _)) => Value::Cat(c),
            other => panic!("categorical sum of a single row keyed by {other:?}"),
        },
    }
}

impl RowSource for JoinedSource {
    fn space(&self) -> &AttrSpace {
        &self.space
    }

    fn row_count(&self) -> usize {
        self.fact.rows()
    }

    fn is_missing(&self, attr: usize, row: usize) -> bool {
        attr < self.root_attrs.len() && self.fact.mask(self.root_attrs[attr]).get(row)
    }

    fn read_row(&self, row: usize, out: &mut [Value]) {
        let r = self.root_attrs.len();
        for (slot, &c) in out[..r].iter_mut().zip(&self.root_attrs) {
            *slot = self.fact.column(c).data.value(row);
        }
        out[r..].copy_from_slice(&self.groups[self.row_group[row] as usize].values);
    }

    fn write_value(&mut self, attr: usize, row: usize, value: Value) {
        assert!(attr < self.root_attrs.len(), "dimension attributes are read-only");
        let col = self.root_attrs[attr];
        match (&mut self.fact.column_mut(col).data, value) {
            (ColumnData::Continuous(v), Value::Num(x)) => v[row] = x,
            (ColumnData::Categorical(v), Value::Cat(c)) => v[row] = c,
            (_, v) => panic!("kind mismatch writing {v:?} to attribute {attr}"),
        }
    }

    fn mattrs(&self) -> Vec<usize> {
        (0..self.root_attrs.len())
            .filter(|&a| self.fact.mask(self.root_attrs[a]).any())
            .collect()
    }

    fn missing_rows(&self, attr: usize) -> Vec<u32> {
        if attr >= self.root_attrs.len() {
            return Vec::new();
        }
        self.fact.mask(self.root_attrs[attr]).ones().map(|r| r as u32).collect()
    }

    fn aggregate(&self, sel: RowSel<'_>) -> Result<Triple> {
        if self.factorized {
            return self.aggregate_factorized(sel);
        }
        let m = self.space.len();
        let mut agg = Aggregator::new(&self.space);
        let mut buf = vec![Value::Num(0.0); m];
        let mut push = |row: usize| -> Result<()> {
            self.read_row(row, &mut buf);
            agg.push(&buf)
        };
        match sel {
            RowSel::All => (0..self.fact.rows()).try_for_each(&mut push)?,
            RowSel::Ids(ids) => ids.iter().try_for_each(|&i| push(i as usize))?,
            RowSel::ObservedIn(attr) => (0..self.fact.rows())
                .filter(|&row| !self.is_missing(attr, row))
                .try_for_each(&mut push)?,
        }
        Ok(agg.finish())
    }
}
