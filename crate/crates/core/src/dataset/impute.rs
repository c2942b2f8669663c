use crate::error::{Error, Result};

use super::table::{ColumnData, Table};

/// Sum by recursive halving; error grows with log n instead of n.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Most frequent code; ties go to the smallest code.
pub fn mode(codes: impl IntoIterator<Item = u32>) -> Option<u32> {
    let mut counts: Vec<usize> = Vec::new();
    for c in codes {
        let c = c as usize;
        if c >= counts.len() {
            counts.resize(c + 1, 0);
        }
        counts[c] += 1;
    }
    let mut best: Option<(usize, u32)> = None;
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 && best.is_none_or(|(bn, _)| n > bn) {
            best = Some((n, c as u32));
        }
    }
    best.map(|(_, c)| c)
}

/// Fills originally missing feature cells with the column mean (continuous)
/// or mode (categorical) of the observed cells. Observed cells are untouched.
pub fn initial_impute(table: &mut Table) -> Result<()> {
    let features = table.feature_columns().to_vec();
    for col in features {
        let mask = table.mask(col).clone();
        if !mask.any() {
            continue;
        }
        if mask.count_ones() == table.rows() {
            return Err(Error::data(format!(
                "column '{}' has no observed values",
                table.schema().columns()[col].name
            )));
        }
        match &mut table.column_mut(col).data {
            ColumnData::Continuous(v) => {
                let observed: Vec<f64> = (0..v.len()).filter(|&r| !mask.get(r)).map(|r| v[r]).collect();
                let mean = pairwise_sum(&observed) / observed.len() as f64;
                for r in mask.ones() {
                    v[r] = mean;
                }
            }
            ColumnData::Categorical(v) => {
                let m = mode((0..v.len()).filter(|&r| !mask.get(r)).map(|r| v[r])).expect("column has observed cells");
                for r in mask.ones() {
                    v[r] = m;
                }
            }
        }
    }
    Ok(())
}
