use crate::error::{Error, Result};
use crate::ring::{aggregate_chunked, AttrKind, AttrSpace, Triple, Value};

use super::bitmap::Bitmap;
use super::schema::{Role, Schema};

/// Dense storage for one column.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Continuous(Vec<f64>),
    Categorical(Vec<u32>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Continuous(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> AttrKind {
        match self {
            ColumnData::Continuous(_) => AttrKind::Continuous,
            ColumnData::Categorical(_) => AttrKind::Categorical,
        }
    }

    #[inline]
    pub fn value(&self, row: usize) -> Value {
        match self {
            ColumnData::Continuous(v) => Value::Num(v[row]),
            ColumnData::Categorical(v) => Value::Cat(v[row]),
        }
    }
}

/// A column and, for categorical data, the dictionary mapping codes back to
/// their text.
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub data: ColumnData,
    pub dictionary: Vec<String>,
}

impl Column {
    pub fn continuous(values: Vec<f64>) -> Self {
        Self {
            data: ColumnData::Continuous(values),
            dictionary: Vec::new(),
        }
    }

    /// A categorical column whose dictionary is the code rendered as text.
    pub fn categorical(codes: Vec<u32>) -> Self {
        let max = codes.iter().copied().max().map_or(0, |c| c as usize + 1);
        Self {
            data: ColumnData::Categorical(codes),
            dictionary: (0..max).map(|c| c.to_string()).collect(),
        }
    }

    pub fn with_dictionary(codes: Vec<u32>, dictionary: Vec<String>) -> Self {
        Self {
            data: ColumnData::Categorical(codes),
            dictionary,
        }
    }

    /// Text form of the cell as written to CSV.
    pub fn render(&self, row: usize) -> String {
        match &self.data {
            ColumnData::Continuous(v) => format!("{}", v[row]),
            ColumnData::Categorical(v) => self
                .dictionary
                .get(v[row] as usize)
                .cloned()
                .unwrap_or_else(|| v[row].to_string()),
        }
    }
}

/// Which rows an aggregation runs over.
#[derive(Clone, Copy, Debug)]
pub enum RowSel<'a> {
    All,
    Ids(&'a [u32]),
    /// Every row whose value of the attribute was originally observed.
    ObservedIn(usize),
}

/// Row-level access to an imputation working set, in attribute space.
///
/// Attributes are the model-visible features, indexed `0..space().len()`.
pub trait RowSource: Sync {
    fn space(&self) -> &AttrSpace;

    fn row_count(&self) -> usize;

    /// Whether the attribute was originally missing in the row.
    fn is_missing(&self, attr: usize, row: usize) -> bool;

    fn read_row(&self, row: usize, out: &mut [Value]);

    fn write_value(&mut self, attr: usize, row: usize, value: Value);

    /// Attributes with at least one originally missing cell.
    fn mattrs(&self) -> Vec<usize> {
        (0..self.space().len())
            .filter(|&a| (0..self.row_count()).any(|r| self.is_missing(a, r)))
            .collect()
    }

    /// Rows where `attr` was originally missing, ascending.
    fn missing_rows(&self, attr: usize) -> Vec<u32> {
        (0..self.row_count())
            .filter(|&r| self.is_missing(attr, r))
            .map(|r| r as u32)
            .collect()
    }

    /// Cofactor triple over the selected rows. Chunked so that the result is
    /// bit-identical across thread counts.
    fn aggregate(&self, sel: RowSel<'_>) -> Result<Triple> {
        let space = self.space();
        let m = space.len();
        let agg = match sel {
            RowSel::All => aggregate_chunked(space, self.row_count(), |range, agg| {
                let mut buf = vec![Value::Num(0.0); m];
                for r in range {
                    self.read_row(r, &mut buf);
                    agg.push(&buf)?;
                }
                Ok(())
            }),
            RowSel::Ids(ids) => aggregate_chunked(space, ids.len(), |range, agg| {
                let mut buf = vec![Value::Num(0.0); m];
                for &r in &ids[range] {
                    self.read_row(r as usize, &mut buf);
                    agg.push(&buf)?;
                }
                Ok(())
            }),
            RowSel::ObservedIn(attr) => aggregate_chunked(space, self.row_count(), |range, agg| {
                let mut buf = vec![Value::Num(0.0); m];
                for r in range {
                    if !self.is_missing(attr, r) {
                        self.read_row(r, &mut buf);
                        agg.push(&buf)?;
                    }
                }
                Ok(())
            }),
        }?;
        Ok(agg.finish())
    }
}

/// Columnar table with per-column masks of originally missing cells.
///
/// Missing cells hold placeholders (`NaN` / code 0) until imputed; the masks
/// never change once loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    schema: Schema,
    columns: Vec<Column>,
    masks: Vec<Bitmap>,
    rows: usize,
    features: Vec<usize>,
    space: AttrSpace,
}

impl Table {
    pub fn new(schema: Schema, columns: Vec<Column>, masks: Vec<Bitmap>) -> Result<Self> {
        if columns.len() != schema.len() || masks.len() != schema.len() {
            return Err(Error::usage(format!(
                "schema has {} columns, got {} columns and {} masks",
                schema.len(),
                columns.len(),
                masks.len()
            )));
        }
        let rows = columns.first().map_or(0, |c| c.data.len());
        for ((def, col), mask) in schema.columns().iter().zip(&columns).zip(&masks) {
            if col.data.len() != rows || mask.len() != rows {
                return Err(Error::data(format!(
                    "column '{}' has {} values, expected {rows}",
                    def.name,
                    col.data.len()
                )));
            }
            if col.data.kind() != def.kind {
                return Err(Error::usage(format!(
                    "column '{}' storage does not match its declared kind",
                    def.name
                )));
            }
            if def.role != Role::Feature && mask.any() {
                return Err(Error::data(format!(
                    "{:?} column '{}' has missing values",
                    def.role, def.name
                )));
            }
        }
        let features = schema.feature_columns();
        let space = AttrSpace::new(
            features
                .iter()
                .map(|&c| (schema.columns()[c].name.clone(), schema.columns()[c].kind)),
        );
        Ok(Self {
            schema,
            columns,
            masks,
            rows,
            features,
            space,
        })
    }

    /// A table of feature columns with no missing cells.
    pub fn complete(schema: Schema, columns: Vec<Column>) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.data.len());
        let masks = vec![Bitmap::new(rows); columns.len()];
        Self::new(schema, columns, masks)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> &Column {
        &self.columns[idx]
    }

    pub fn column_mut(&mut self, idx: usize) -> &mut Column {
        &mut self.columns[idx]
    }

    pub fn mask(&self, col: usize) -> &Bitmap {
        &self.masks[col]
    }

    pub fn masks(&self) -> &[Bitmap] {
        &self.masks
    }

    /// Replaces the mask of a column. Only for building masked tables
    /// (injection); imputation never changes masks.
    pub fn set_mask(&mut self, col: usize, mask: Bitmap) {
        assert_eq!(mask.len(), self.rows);
        self.masks[col] = mask;
    }

    /// Column index of attribute `attr`.
    pub fn feature_column(&self, attr: usize) -> usize {
        self.features[attr]
    }

    pub fn feature_columns(&self) -> &[usize] {
        &self.features
    }

    /// Attribute index of a feature column name.
    pub fn attr_of(&self, name: &str) -> Option<usize> {
        self.space.index_of(name)
    }

    /// Attributes with at least one originally missing cell.
    pub fn mattrs(&self) -> Vec<usize> {
        (0..self.features.len())
            .filter(|&a| self.masks[self.features[a]].any())
            .collect()
    }

    pub fn missing_cells(&self) -> usize {
        self.features.iter().map(|&c| self.masks[c].count_ones()).sum()
    }

    /// Fraction of feature cells that are missing.
    pub fn missing_rate(&self) -> f64 {
        let cells = self.rows * self.features.len();
        if cells == 0 {
            0.0
        } else {
            self.missing_cells() as f64 / cells as f64
        }
    }

    pub fn value(&self, attr: usize, row: usize) -> Value {
        self.columns[self.features[attr]].data.value(row)
    }
}

impl RowSource for Table {
    fn space(&self) -> &AttrSpace {
        &self.space
    }

    fn row_count(&self) -> usize {
        self.rows
    }

    #[inline]
    fn is_missing(&self, attr: usize, row: usize) -> bool {
        self.masks[self.features[attr]].get(row)
    }

    #[inline]
    fn read_row(&self, row: usize, out: &mut [Value]) {
        for (slot, &c) in out.iter_mut().zip(&self.features) {
            *slot = self.columns[c].data.value(row);
        }
    }

    fn write_value(&mut self, attr: usize, row: usize, value: Value) {
        match (&mut self.columns[self.features[attr]].data, value) {
            (ColumnData::Continuous(v), Value::Num(x)) => v[row] = x,
            (ColumnData::Categorical(v), Value::Cat(c)) => v[row] = c,
            (_, v) => panic!("kind mismatch writing {v:?} to attribute {attr}"),
        }
    }

    fn mattrs(&self) -> Vec<usize> {
        Table::mattrs(self)
    }

    fn missing_rows(&self, attr: usize) -> Vec<u32> {
        self.masks[self.features[attr]].ones().map(|r| r as u32).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::schema::ColumnDef;

    #[test]
    fn rejects_missing_join_keys() {
        let schema = Schema::new(vec![
            ColumnDef {
                name: "k".into(),
                kind: AttrKind::Categorical,
                role: Role::JoinKey,
            },
            ColumnDef::feature("x", AttrKind::Continuous),
        ])
        .unwrap();
        let cols = vec![Column::categorical(vec![0, 1]), Column::continuous(vec![1.0, 2.0])];
        let masks = vec![Bitmap::from_bools([true, false]), Bitmap::new(2)];
        assert!(matches!(Table::new(schema, cols, masks), Err(Error::Data(_))));
    }

    #[test]
    fn attribute_view_skips_non_features() {
        let schema = Schema::new(vec![
            ColumnDef {
                name: "id".into(),
                kind: AttrKind::Categorical,
                role: Role::Id,
            },
            ColumnDef::feature("x", AttrKind::Continuous),
            ColumnDef::feature("c", AttrKind::Categorical),
        ])
        .unwrap();
        let t = Table::complete(
            schema,
            vec![
                Column::categorical(vec![0, 1]),
                Column::continuous(vec![1.5, 2.5]),
                Column::categorical(vec![3, 4]),
            ],
        )
        .unwrap();
        assert_eq!(t.space().len(), 2);
        let mut buf = vec![Value::Num(0.0); 2];
        t.read_row(1, &mut buf);
        assert_eq!(buf, vec![Value::Num(2.5), Value::Cat(4)]);
        let tri = t.aggregate(RowSel::All).unwrap();
        assert_eq!(tri.count(), 2.0);
        assert_eq!(tri.s(0).scalar_value(), 4.0);
    }
}
