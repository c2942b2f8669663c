use std::collections::{HashMap, VecDeque};

use crate::dataset::{ColumnData, Role, Table};
use crate::error::{Error, Result};
use crate::ring::{AttrSpace, Triple, Value};

use super::keyed::{combine, partial_aggregate, KeyedTriples};
use super::spec::JoinSpec;

/// A loaded table and the name the join spec refers to it by.
#[derive(Clone, Debug)]
pub struct NamedTable {
    pub name: String,
    pub table: Table,
}

#[derive(Clone, Debug)]
pub(crate) struct ChildLink {
    pub child: usize,
    /// Columns of the parent table joined with the child's `parent_cols`.
    pub cols: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct PlanNode {
    /// Index into the table slice the plan was resolved against.
    pub table: usize,
    pub name: String,
    pub attrs: Vec<usize>,
    pub positions: Vec<usize>,
    pub parent: Option<usize>,
    pub parent_cols: Vec<usize>,
    pub children: Vec<ChildLink>,
}

/// A join spec resolved against concrete tables: the global attribute
/// space (`table.column` names, tables in spec order) and the rooted join
/// tree with interned key ids.
#[derive(Clone, Debug)]
pub struct JoinPlan {
    space: AttrSpace,
    pub(crate) nodes: Vec<PlanNode>,
    /// Interned key id per (node, column) for every join column.
    key_ids: HashMap<(usize, usize), Vec<u32>>,
}

impl JoinPlan {
    pub fn new(spec: &JoinSpec, tables: &[NamedTable]) -> Result<Self> {
        let mut nodes = Vec::with_capacity(spec.tables.len());
        let mut names = Vec::new();
        for sel in &spec.tables {
            let idx = tables
                .iter()
                .position(|t| t.name == sel.table)
                .ok_or_else(|| Error::usage(format!("join spec table '{}' was not provided", sel.table)))?;
            let table = &tables[idx].table;
            let attrs = match &sel.attrs {
                None => table.feature_columns().to_vec(),
                Some(list) => list
                    .iter()
                    .map(|a| {
                        let c = table
                            .schema()
                            .index_of(a)
                            .ok_or_else(|| Error::usage(format!("table '{}' has no column '{a}'", sel.table)))?;
                        if table.schema().columns()[c].role != Role::Feature {
                            return Err(Error::usage(format!("'{}.{a}' is not a feature column", sel.table)));
                        }
                        Ok(c)
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let mut attrs = attrs;
            attrs.sort_unstable();
            attrs.dedup();
            let positions = (names.len()..names.len() + attrs.len()).collect();
            for &c in &attrs {
                let def = &table.schema().columns()[c];
                names.push((format!("{}.{}", sel.table, def.name), def.kind));
            }
            nodes.push(PlanNode {
                table: idx,
                name: sel.table.clone(),
                attrs,
                positions,
                parent: None,
                parent_cols: Vec::new(),
                children: Vec::new(),
            });
        }
        let space = AttrSpace::new(names);

        let node_of = |name: &str| nodes.iter().position(|n: &PlanNode| n.name == name).unwrap();
        let col_of = |node: &PlanNode, col: &str| -> Result<usize> {
            tables[node.table]
                .table
                .schema()
                .index_of(col)
                .ok_or_else(|| Error::usage(format!("table '{}' has no column '{col}'", node.name)))
        };
        let mut adjacency: Vec<Vec<(usize, Vec<usize>, Vec<usize>)>> = vec![Vec::new(); nodes.len()];
        for e in &spec.edges {
            let (l, r) = (node_of(&e.left), node_of(&e.right));
            let lcols = e
                .left_keys
                .iter()
                .map(|c| col_of(&nodes[l], c))
                .collect::<Result<Vec<_>>>()?;
            let rcols = e
                .right_keys
                .iter()
                .map(|c| col_of(&nodes[r], c))
                .collect::<Result<Vec<_>>>()?;
            adjacency[l].push((r, lcols.clone(), rcols.clone()));
            adjacency[r].push((l, rcols, lcols));
        }
        if spec.edges.len() + 1 != nodes.len() {
            return Err(Error::usage(format!(
                "join spec must form a tree: {} tables need {} joins, found {}",
                nodes.len(),
                nodes.len() - 1,
                spec.edges.len()
            )));
        }
        let mut seen = vec![false; nodes.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for (w, vcols, wcols) in adjacency[v].clone() {
                if Some(w) == nodes[v].parent {
                    continue;
                }
                if seen[w] {
                    return Err(Error::usage(format!(
                        "join spec contains a cycle through table '{}'",
                        nodes[w].name
                    )));
                }
                seen[w] = true;
                nodes[w].parent = Some(v);
                nodes[w].parent_cols = wcols;
                nodes[v].children.push(ChildLink { child: w, cols: vcols });
                queue.push_back(w);
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::usage(format!(
                "table '{}' is not connected to the root '{}'",
                nodes[i].name, nodes[0].name
            )));
        }

        let mut interner: HashMap<String, u32> = HashMap::new();
        let mut key_ids = HashMap::new();
        for (v, node) in nodes.iter().enumerate() {
            let mut cols: Vec<usize> = node.parent_cols.clone();
            for link in &node.children {
                cols.extend(&link.cols);
            }
            for c in cols {
                if key_ids.contains_key(&(v, c)) {
                    continue;
                }
                let table = &tables[node.table].table;
                if table.mask(c).any() {
                    return Err(Error::data(format!(
                        "join column '{}.{}' has missing values",
                        node.name,
                        table.schema().columns()[c].name
                    )));
                }
                let col = table.column(c);
                let ids = (0..table.rows())
                    .map(|r| {
                        let text = match &col.data {
                            ColumnData::Continuous(_) => col.render(r),
                            ColumnData::Categorical(codes) => col
                                .dictionary
                                .get(codes[r] as usize)
                                .cloned()
                                .unwrap_or_else(|| codes[r].to_string()),
                        };
                        let next = interner.len() as u32;
                        *interner.entry(text).or_insert(next)
                    })
                    .collect();
                key_ids.insert((v, c), ids);
            }
        }
        Ok(Self { space, nodes, key_ids })
    }

    pub fn space(&self) -> &AttrSpace {
        &self.space
    }

    pub fn root_name(&self) -> &str {
        &self.nodes[0].name
    }

    /// Table index (into the resolving slice) of the root.
    pub fn root_table(&self) -> usize {
        self.nodes[0].table
    }

    /// Columns of the root table that are attributes, in attribute order.
    pub fn root_attrs(&self) -> &[usize] {
        &self.nodes[0].attrs
    }

    pub(crate) fn keys(&self, node: usize, cols: &[usize]) -> Vec<&[u32]> {
        cols.iter().map(|c| self.key_ids[&(node, *c)].as_slice()).collect()
    }

    /// Aggregate of the subtree rooted at `v`, grouped by its join columns
    /// towards the parent.
    pub(crate) fn subtree(&self, tables: &[NamedTable], v: usize) -> Result<KeyedTriples> {
        let node = &self.nodes[v];
        let m = self.space.len();
        let mut group_cols = node.parent_cols.clone();
        for link in &node.children {
            group_cols.extend(&link.cols);
        }
        let keys = self.keys(v, &group_cols);
        let mut acc = partial_aggregate(&tables[node.table].table, &keys, &node.attrs, &node.positions, m)?;
        let p = node.parent_cols.len();
        let mut width = group_cols.len();
        for link in &node.children {
            let right = self.subtree(tables, link.child)?;
            let k = link.cols.len();
            let match_pos: Vec<usize> = (p..p + k).collect();
            let keep: Vec<usize> = (0..p).chain(p + k..width).collect();
            acc = combine(&acc, &match_pos, &right, Some(&keep))?;
            width -= k;
        }
        Ok(acc)
    }
}

/// Cofactor triple of the join, computed bottom-up over the join tree
/// without materializing it.
pub fn aggregate_join(plan: &JoinPlan, tables: &[NamedTable]) -> Result<Triple> {
    plan.subtree(tables, 0)?.fold()
}

/// The joined rows in the plan's attribute space, for checking and for
/// small inputs. Rows come out in root-row order.
pub fn materialize(plan: &JoinPlan, tables: &[NamedTable]) -> Result<Vec<Vec<Value>>> {
    // Per child node: parent-side key -> matching child rows.
    let mut index: Vec<HashMap<Vec<u32>, Vec<usize>>> = vec![HashMap::new(); plan.nodes.len()];
    for (v, node) in plan.nodes.iter().enumerate().skip(1) {
        let keys = plan.keys(v, &node.parent_cols);
        for r in 0..tables[node.table].table.rows() {
            let k: Vec<u32> = keys.iter().map(|ids| ids[r]).collect();
            index[v].entry(k).or_default().push(r);
        }
    }
    let m = plan.space.len();
    let mut out = Vec::new();
    let root_rows = tables[plan.nodes[0].table].table.rows();
    for r in 0..root_rows {
        let mut partial = vec![vec![Value::Num(0.0); m]];
        expand(plan, tables, &index, 0, r, &mut partial);
        out.extend(partial);
    }
    Ok(out)
}

/// Fills node `v`'s attributes from row `r` into every partial row, then
/// fans out over matching child rows (cross product per child).
fn expand(
    plan: &JoinPlan,
    tables: &[NamedTable],
    index: &[HashMap<Vec<u32>, Vec<usize>>],
    v: usize,
    r: usize,
    rows: &mut Vec<Vec<Value>>,
) {
    let node = &plan.nodes[v];
    let table = &tables[node.table].table;
    for row in rows.iter_mut() {
        for (&c, &p) in node.attrs.iter().zip(&node.positions) {
            row[p] = table.column(c).data.value(r);
        }
    }
    for link in &node.children {
        let keys = plan.keys(v, &link.cols);
        let k: Vec<u32> = keys.iter().map(|ids| ids[r]).collect();
        let matches = index[link.child].get(&k).map(Vec::as_slice).unwrap_or(&[]);
        let mut next = Vec::new();
        for &cr in matches {
            let mut branch = rows.clone();
            expand(plan, tables, index, link.child, cr, &mut branch);
            next.extend(branch);
        }
        *rows = next;
        if rows.is_empty() {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{read_csv, LoadOptions, Schema};
    use crate::ring::{aggregate, to_dense};

    fn load(name: &str, schema: &str, csv: &str) -> NamedTable {
        let s = Schema::parse(schema).unwrap();
        NamedTable {
            name: name.into(),
            table: read_csv(csv.as_bytes(), &s, LoadOptions::default()).unwrap(),
        }
    }

    fn snowflake() -> Vec<NamedTable> {
        vec![
            load(
                "sales",
                "store,categorical,join-key\nunits,continuous\ncolor,categorical\n",
                "store,units,color\ns1,3,red\ns2,1,blue\ns1,2,blue\ns3,7,red\ns9,1,red\n",
            ),
            load(
                "stores",
                "store,categorical,join-key\ncity,categorical,join-key\nsize,continuous\n",
                "store,city,size\ns1,c1,10\ns2,c1,20\ns3,c2,5\ns3,c2,6\n",
            ),
            load(
                "cities",
                "city,categorical,join-key\npop,continuous\n",
                "city,pop\nc1,100\nc2,50\n",
            ),
        ]
    }

    #[test]
    fn snowflake_matches_materialized() {
        let tables = snowflake();
        let spec =
            JoinSpec::parse("sales\nstores\ncities\nsales.store = stores.store\nstores.city = cities.city\n").unwrap();
        let plan = JoinPlan::new(&spec, &tables).unwrap();
        assert_eq!(
            plan.space().names(),
            ["sales.units", "sales.color", "stores.size", "cities.pop"]
        );
        let rows = materialize(&plan, &tables).unwrap();
        // s9 dangles; s3 matches two store rows
        assert_eq!(rows.len(), 5);
        let fact = aggregate_join(&plan, &tables).unwrap();
        let oracle = aggregate(rows.iter(), plan.space()).unwrap();
        assert!(fact.max_rel_diff(&oracle) <= 1e-12);
        assert_eq!(
            to_dense(&fact, plan.space()).matrix,
            to_dense(&oracle, plan.space()).matrix
        );
    }

    #[test]
    fn cycles_and_disconnected_tables_are_rejected() {
        let tables = snowflake();
        let cyc = JoinSpec::parse(
            "sales\nstores\ncities\nsales.store = stores.store\nstores.city = cities.city\nsales.store = cities.city\n",
        )
        .unwrap();
        assert!(matches!(JoinPlan::new(&cyc, &tables), Err(Error::Usage(_))));
        let loose = JoinSpec::parse("sales\nstores\ncities\nsales.store = stores.store\n").unwrap();
        assert!(matches!(JoinPlan::new(&loose, &tables), Err(Error::Usage(_))));
    }

    #[test]
    fn no_matching_dimension_rows_give_zero() {
        let tables = vec![
            load("f", "k,categorical,join-key\nx,continuous\n", "k,x\na,1\nb,2\n"),
            load("d", "k,categorical,join-key\ny,continuous\n", "k,y\nz,1\n"),
        ];
        let spec = JoinSpec::parse("f\nd\nf.k = d.k\n").unwrap();
        let plan = JoinPlan::new(&spec, &tables).unwrap();
        assert!(aggregate_join(&plan, &tables).unwrap().is_zero());
    }
}
