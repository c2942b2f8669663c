use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{pairwise_sum, Bitmap, ColumnData, Table};
use crate::error::{Error, Result};
use crate::ring::AttrKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Mcar,
    Mar,
    Mnar,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Mcar => "mcar",
            Pattern::Mar => "mar",
            Pattern::Mnar => "mnar",
        })
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mcar" => Ok(Pattern::Mcar),
            "mar" => Ok(Pattern::Mar),
            "mnar" => Ok(Pattern::Mnar),
            other => Err(Error::usage(format!(
                "unknown pattern '{other}' (expected mcar, mar or mnar)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub pattern: Pattern,
    pub rate: f64,
    /// Columns to mask; empty means every feature column except the driver.
    pub targets: Vec<String>,
    /// Continuous column whose value drives MAR masking.
    pub driver: Option<String>,
    pub seed: u64,
}

/// Masks cells of a complete table. Returns the masked copy (masked cells
/// cleared) and the untouched original as ground truth.
pub fn inject(table: &Table, spec: &InjectionSpec) -> Result<(Table, Table)> {
    if !(0.0..1.0).contains(&spec.rate) {
        return Err(Error::usage(format!("missing rate {} must lie in [0, 1)", spec.rate)));
    }
    if table.missing_cells() > 0 {
        return Err(Error::data("injection needs a complete input table"));
    }
    let schema = table.schema();
    let driver = match (&spec.driver, spec.pattern) {
        (Some(name), Pattern::Mar) => Some(continuous_column(table, name)?),
        (None, Pattern::Mar) => return Err(Error::usage("MAR injection needs a driver column")),
        _ => None,
    };
    let targets: Vec<usize> = if spec.targets.is_empty() {
        table
            .feature_columns()
            .iter()
            .copied()
            .filter(|&c| Some(c) != driver)
            .collect()
    } else {
        spec.targets
            .iter()
            .map(|name| {
                let c = schema
                    .index_of(name)
                    .ok_or_else(|| Error::usage(format!("unknown target column '{name}'")))?;
                if !table.feature_columns().contains(&c) {
                    return Err(Error::usage(format!("'{name}' is not a feature column")));
                }
                if Some(c) == driver {
                    return Err(Error::usage(format!("MAR driver '{name}' cannot also be a target")));
                }
                Ok(c)
            })
            .collect::<Result<_>>()?
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = table.rows();
    let mar_probs = match driver {
        Some(d) => Some(masking_probabilities(column_values(table, d), spec.rate)?),
        None => None,
    };
    let mut masked = table.clone();
    for &c in &targets {
        let probs = match spec.pattern {
            Pattern::Mcar => None,
            Pattern::Mar => mar_probs.clone(),
            Pattern::Mnar => {
                if schema.columns()[c].kind != AttrKind::Continuous {
                    return Err(Error::usage(format!(
                        "MNAR masking needs continuous targets; '{}' is categorical",
                        schema.columns()[c].name
                    )));
                }
                Some(masking_probabilities(column_values(table, c), spec.rate)?)
            }
        };
        let mut mask = Bitmap::new(rows);
        for r in 0..rows {
            let p = probs.as_ref().map_or(spec.rate, |p| p[r]);
            if p > 0.0 && rng.gen::<f64>() < p {
                mask.set(r, true);
            }
        }
        match &mut masked.column_mut(c).data {
            ColumnData::Continuous(v) => mask.ones().for_each(|r| v[r] = f64::NAN),
            ColumnData::Categorical(v) => mask.ones().for_each(|r| v[r] = 0),
        }
        masked.set_mask(c, mask);
    }
    Ok((masked, table.clone()))
}

fn continuous_column(table: &Table, name: &str) -> Result<usize> {
    let c = table
        .schema()
        .index_of(name)
        .ok_or_else(|| Error::usage(format!("unknown driver column '{name}'")))?;
    if table.schema().columns()[c].kind != AttrKind::Continuous {
        return Err(Error::usage(format!("driver column '{name}' must be continuous")));
    }
    Ok(c)
}

fn column_values(table: &Table, c: usize) -> &[f64] {
    match &table.column(c).data {
        ColumnData::Continuous(v) => v,
        ColumnData::Categorical(_) => unreachable!("checked continuous"),
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-row probabilities `min(1, k · sigmoid(2z))` for the standardized
/// values `z`, with `k` chosen so that the mean probability equals `rate`.
/// Without clipping `k = rate / mean(sigmoid(2z))`.
pub fn masking_probabilities(values: &[f64], rate: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n == 0 || rate == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mean = pairwise_sum(values) / n as f64;
    let centered: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let sd = (pairwise_sum(&centered) / n as f64).sqrt();
    let w: Vec<f64> = values
        .iter()
        .map(|x| sigmoid(2.0 * if sd > 0.0 { (x - mean) / sd } else { 0.0 }))
        .collect();
    let mean_w = pairwise_sum(&w) / n as f64;
    let expected = |k: f64| w.iter().map(|&x| (k * x).min(1.0)).sum::<f64>() / n as f64;
    let mut k = rate / mean_w;
    if w.iter().any(|&x| k * x > 1.0) {
        // Clipping lost mass; raise k until the clipped mean reaches the rate.
        let mut hi = k;
        while expected(hi) < rate {
            hi *= 2.0;
            if !hi.is_finite() || hi > 1e12 {
                return Err(Error::usage(format!(
                    "missing rate {rate} is unreachable with clipped probabilities"
                )));
            }
        }
        let mut lo = k;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if expected(mid) < rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        k = hi;
    }
    Ok(w.iter().map(|&x| (k * x).min(1.0)).collect())
}
