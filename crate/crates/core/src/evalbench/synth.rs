use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnDef, Schema, Table};
use crate::error::{Error, Result};
use crate::ring::AttrKind;

/// Shape of a synthetic table.
///
/// Predictors `x1..xd` are equicorrelated standard normals (correlation
/// `correlation`) shifted by the latent class of each categorical column
/// `k1..kK`. The shift moves every predictor by `class_separation` standard
/// deviations of its independent noise, with a sign pattern per categorical
/// column. The target `y = Σ β_j x_j + ε` has noise sized so that its
/// population R² equals `r2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub predictors: usize,
    pub correlation: f64,
    pub categorical: usize,
    pub classes: usize,
    pub class_separation: f64,
    pub r2: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            predictors: 6,
            correlation: 0.9,
            categorical: 1,
            classes: 3,
            class_separation: 1.0,
            r2: 0.9,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Regression weights `β_j = 1 / j`.
    pub fn beta(&self) -> Vec<f64> {
        (1..=self.predictors).map(|j| 1.0 / j as f64).collect()
    }

    /// Sign of predictor `j`'s shift for categorical column `k`: blocks of
    /// length `2^k` alternate.
    fn sign(k: usize, j: usize) -> f64 {
        if (j >> k) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn class_offset(&self, class: usize) -> f64 {
        class as f64 - (self.classes as f64 - 1.0) / 2.0
    }

    /// Variance of `Σ β_j x_j` over the population.
    pub fn signal_variance(&self) -> f64 {
        let beta = self.beta();
        let rho = self.correlation;
        let sum: f64 = beta.iter().sum();
        let sq: f64 = beta.iter().map(|b| b * b).sum();
        let mut var = rho * sum * sum + (1.0 - rho) * sq;
        let shift = self.class_separation * (1.0 - rho).sqrt();
        let class_var = (self.classes * self.classes - 1) as f64 / 12.0;
        for k in 0..self.categorical {
            let along: f64 = beta.iter().enumerate().map(|(j, b)| b * Self::sign(k, j)).sum();
            var += (shift * along).powi(2) * class_var;
        }
        var
    }

    pub fn schema(&self) -> Schema {
        let mut cols: Vec<ColumnDef> = (1..=self.predictors)
            .map(|j| ColumnDef::feature(format!("x{j}"), AttrKind::Continuous))
            .collect();
        cols.push(ColumnDef::feature("y", AttrKind::Continuous));
        cols.extend((1..=self.categorical).map(|k| ColumnDef::feature(format!("k{k}"), AttrKind::Categorical)));
        Schema::new(cols).expect("generated names are unique")
    }

    fn validate(&self) -> Result<()> {
        if self.predictors == 0 {
            return Err(Error::usage("synthetic data needs at least one predictor"));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(Error::usage("correlation must lie in [0, 1)"));
        }
        if !(self.r2 > 0.0 && self.r2 <= 1.0) {
            return Err(Error::usage("R² must lie in (0, 1]"));
        }
        if self.categorical > 0 && self.classes < 2 {
            return Err(Error::usage("categorical columns need at least 2 classes"));
        }
        Ok(())
    }
}

/// Generates `rows` rows; identical seeds give identical tables.
pub fn synth(rows: usize, spec: &SynthSpec) -> Result<Table> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.predictors;
    let rho = spec.correlation;
    let beta = spec.beta();
    let noise_sd = (spec.signal_variance() * (1.0 - spec.r2) / spec.r2).sqrt();
    let shift = spec.class_separation * (1.0 - rho).sqrt();

    let mut xs = vec![Vec::with_capacity(rows); d];
    let mut y = Vec::with_capacity(rows);
    let mut ks = vec![Vec::with_capacity(rows); spec.categorical];
    let mut classes = vec![0usize; spec.categorical];
    let mut x = vec![0.0; d];
    for _ in 0..rows {
        for (k, c) in classes.iter_mut().enumerate() {
            *c = rng.gen_range(0..spec.classes);
            ks[k].push(*c as u32);
        }
        let g: f64 = rng.sample(StandardNormal);
        for (j, xj) in x.iter_mut().enumerate() {
            let e: f64 = rng.sample(StandardNormal);
            let mut v = rho.sqrt() * g + (1.0 - rho).sqrt() * e;
            for (k, &c) in classes.iter().enumerate() {
                v += shift * SynthSpec::sign(k, j) * spec.class_offset(c);
            }
            *xj = v;
        }
        let eps: f64 = rng.sample(StandardNormal);
        let signal: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
        y.push(signal + noise_sd * eps);
        for (col, &v) in xs.iter_mut().zip(&x) {
            col.push(v);
        }
    }

    let mut columns: Vec<Column> = xs.into_iter().map(Column::continuous).collect();
    columns.push(Column::continuous(y));
    for codes in ks {
        let dict = (0..spec.classes).map(|c| format!("c{c}")).collect();
        columns.push(Column::with_dictionary(codes, dict));
    }
    Table::complete(spec.schema(), columns)
}
