use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{Bitmap, ColumnData, RowSel, RowSource, Table};
use crate::error::{Error, Result};
use crate::models::{train_ridge, GdConfig};
use crate::ring::{to_dense, Value};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnQuality {
    pub column: String,
    pub masked: usize,
    /// RMSE for continuous columns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    /// Share of wrong categories for categorical columns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    pub columns: Vec<ColumnQuality>,
    /// RMSE over every masked continuous cell.
    pub cell_rmse: f64,
    /// Error rate over every masked categorical cell.
    pub cell_error_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub downstream_rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub downstream_r2: Option<f64>,
}

/// Compares imputed cells with the ground truth at the imputed table's
/// missing positions. Row order does not matter as long as both tables use
/// the same one.
pub fn cell_quality(imputed: &Table, truth: &Table) -> Result<QualityReport> {
    if imputed.rows() != truth.rows() || imputed.schema() != truth.schema() {
        return Err(Error::usage("imputed table and ground truth differ in shape"));
    }
    let mut columns = Vec::new();
    let (mut sq, mut n_num, mut wrong, mut n_cat) = (0.0, 0usize, 0usize, 0usize);
    for &c in imputed.feature_columns() {
        let mask = imputed.mask(c);
        let masked = mask.count_ones();
        if masked == 0 {
            continue;
        }
        let name = imputed.schema().columns()[c].name.clone();
        match (&imputed.column(c).data, &truth.column(c).data) {
            (ColumnData::Continuous(a), ColumnData::Continuous(b)) => {
                let s: f64 = mask.ones().map(|r| (a[r] - b[r]).powi(2)).sum();
                sq += s;
                n_num += masked;
                columns.push(ColumnQuality {
                    column: name,
                    masked,
                    rmse: Some((s / masked as f64).sqrt()),
                    error_rate: None,
                });
            }
            (ColumnData::Categorical(a), ColumnData::Categorical(b)) => {
                let da = &imputed.column(c).dictionary;
                let db = &truth.column(c).dictionary;
                let w = mask
                    .ones()
                    .filter(|&r| da.get(a[r] as usize) != db.get(b[r] as usize))
                    .count();
                wrong += w;
                n_cat += masked;
                columns.push(ColumnQuality {
                    column: name,
                    masked,
                    rmse: None,
                    error_rate: Some(w as f64 / masked as f64),
                });
            }
            _ => return Err(Error::usage(format!("column '{name}' changed kind"))),
        }
    }
    Ok(QualityReport {
        columns,
        cell_rmse: if n_num == 0 { 0.0 } else { (sq / n_num as f64).sqrt() },
        cell_error_rate: if n_cat == 0 { 0.0 } else { wrong as f64 / n_cat as f64 },
        downstream_rmse: None,
        downstream_r2: None,
    })
}

/// Random split into a `train_fraction` part and the rest.
pub fn split(table: &Table, train_fraction: f64, seed: u64) -> Result<(Table, Table)> {
    let mut order: Vec<usize> = (0..table.rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (table.rows() as f64 * train_fraction).round() as usize;
    let (mut a, mut b) = (order[..cut].to_vec(), order[cut..].to_vec());
    a.sort_unstable();
    b.sort_unstable();
    Ok((take_rows(table, &a)?, take_rows(table, &b)?))
}

/// The listed rows of a table, masks included.
pub fn take_rows(table: &Table, rows: &[usize]) -> Result<Table> {
    let columns = table
        .columns()
        .iter()
        .map(|col| {
            let mut out = col.clone();
            out.data = match &col.data {
                ColumnData::Continuous(v) => ColumnData::Continuous(rows.iter().map(|&r| v[r]).collect()),
                ColumnData::Categorical(v) => ColumnData::Categorical(rows.iter().map(|&r| v[r]).collect()),
            };
            out
        })
        .collect();
    let masks = table
        .masks()
        .iter()
        .map(|m| Bitmap::from_bools(rows.iter().map(|&r| m.get(r))))
        .collect();
    Table::new(table.schema().clone(), columns, masks)
}

/// Fits a ridge model of `target` on the (imputed) training table and
/// reports its RMSE and R² on the test table.
pub fn downstream(train: &Table, test: &Table, target: &str, gd: &GdConfig) -> Result<(f64, f64)> {
    let attr = train
        .attr_of(target)
        .ok_or_else(|| Error::usage(format!("unknown downstream target '{target}'")))?;
    let t = train.aggregate(RowSel::All)?;
    let model = train_ridge(&to_dense(&t, train.space()), attr, gd)?;
    let m = test.space().len();
    let mut buf = vec![Value::Num(0.0); m];
    let mut truth = Vec::with_capacity(test.rows());
    let mut preds = Vec::with_capacity(test.rows());
    for r in 0..test.rows() {
        test.read_row(r, &mut buf);
        preds.push(model.predict(&buf));
        truth.push(buf[attr].as_num().expect("continuous target"));
    }
    Ok(rmse_r2(&truth, &preds))
}

/// RMSE and R² of predictions against the truth.
pub fn rmse_r2(truth: &[f64], pred: &[f64]) -> (f64, f64) {
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let ss_res: f64 = truth.iter().zip(pred).map(|(y, p)| (y - p).powi(2)).sum();
    let ss_tot: f64 = truth.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    ((ss_res / n).sqrt(), r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, Schema};

    #[test]
    fn perfect_imputation_scores_zero() {
        let s = Schema::parse("a,continuous\nk,categorical\n").unwrap();
        let t = Table::new(
            s,
            vec![
                Column::continuous(vec![1.0, 2.0, 3.0]),
                Column::categorical(vec![0, 1, 1]),
            ],
            vec![
                Bitmap::from_bools([true, false, true]),
                Bitmap::from_bools([false, true, false]),
            ],
        )
        .unwrap();
        let q = cell_quality(&t, &t).unwrap();
        assert_eq!((q.cell_rmse, q.cell_error_rate), (0.0, 0.0));
        assert_eq!(q.columns[0].masked, 2);
    }

    #[test]
    fn constant_prediction_has_no_explained_variance() {
        let truth = [1.0, 2.0, 3.0, 4.0];
        let (_, r2) = rmse_r2(&truth, &[2.5; 4]);
        assert!(r2 <= 0.0);
        let (_, r2) = rmse_r2(&truth, &[10.0; 4]);
        assert!(r2 < 0.0);
    }
}
