use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{to_dense, AttrKind, AttrSpace, ColumnLayout, Triple, Value};

use super::linalg::solve_spd;

/// Shrinkage applied when the pooled covariance is singular without it.
pub const FALLBACK_SHRINKAGE: f64 = 1e-6;

/// Linear discriminant analysis with a shared covariance matrix.
///
/// Feature vectors are the one-hot expansion of every attribute except the
/// target, without the intercept; `features[f]` is the cofactor column of
/// feature `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub target: usize,
    pub classes: Vec<u32>,
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Row-major pooled covariance after shrinkage.
    pub sigma: Vec<f64>,
    pub shrinkage: f64,
    pub features: Vec<usize>,
    /// Features left out of the discriminant because their pooled variance
    /// is zero.
    pub dropped: Vec<usize>,
    pub layout: ColumnLayout,
}

impl LdaModel {
    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn scores(&self, row: &[Value]) -> Vec<f64> {
        let x = self.encode(row);
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() + b)
            .collect()
    }

    /// Highest-scoring class; ties resolve to the smallest class code.
    pub fn predict(&self, row: &[Value]) -> u32 {
        let scores = self.scores(row);
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        self.classes[best]
    }

    fn encode(&self, row: &[Value]) -> Vec<f64> {
        let mut dense = vec![0.0; self.layout.width];
        self.layout.encode_into(row, Some(self.target), &mut dense);
        self.features.iter().map(|&c| dense[c]).collect()
    }
}

/// Maximum-likelihood LDA parameters read off a cofactor triple.
///
/// `gamma` blends the covariance towards its diagonal. If the unshrunk
/// covariance is singular the fit is retried once with
/// [`FALLBACK_SHRINKAGE`], which is recorded in the model.
pub fn train_lda(t: &Triple, space: &AttrSpace, target: usize, gamma: f64) -> Result<LdaModel> {
    if space.kind(target) != AttrKind::Categorical {
        return Err(Error::usage(format!(
            "LDA target '{}' is not categorical",
            space.name(target)
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::usage("shrinkage must lie in [0, 1]"));
    }
    let cof = to_dense(t, space);
    let n = cof.count();
    let target_cols = cof.index_map()[target].clone();
    let classes = cof.dictionaries()[target].clone();
    if classes.len() < 2 {
        return Err(Error::numeric(format!(
            "LDA target '{}' needs at least 2 observed classes, found {}",
            space.name(target),
            classes.len()
        )));
    }
    if !(n > classes.len() as f64) {
        return Err(Error::numeric(format!(
            "LDA needs more rows ({n}) than classes ({})",
            classes.len()
        )));
    }
    let all: Vec<usize> = (1..cof.dim).filter(|c| !target_cols.contains(c)).collect();
    let p = all.len();

    let counts: Vec<f64> = target_cols.clone().map(|tc| cof.get(tc, tc)).collect();
    let priors: Vec<f64> = counts.iter().map(|&nc| nc / n).collect();
    let full_means: Vec<Vec<f64>> = target_cols
        .clone()
        .zip(&counts)
        .map(|(tc, &nc)| all.iter().map(|&f| cof.get(f, tc) / nc).collect())
        .collect();

    // Σ = (1/N) Q_feat − (1/N) Σ_c N_c μ_c μ_cᵀ
    let mut sigma = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let mut v = cof.get(all[i], all[j]) / n;
            for (mu, &nc) in full_means.iter().zip(&counts) {
                v -= nc / n * mu[i] * mu[j];
            }
            sigma[i * p + j] = v;
            sigma[j * p + i] = v;
        }
    }

    let max_var = (0..p).map(|i| sigma[i * p + i]).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..p)
        .filter(|&i| sigma[i * p + i] > 1e-12 * max_var.max(f64::MIN_POSITIVE))
        .collect();
    let dropped: Vec<usize> = (0..p).filter(|i| !keep.contains(i)).map(|i| all[i]).collect();
    let k = keep.len();
    let sub = |s: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; k * k];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                out[a * k + b] = s[i * p + j];
            }
        }
        out
    };
    let reduced = sub(&sigma);
    let means: Vec<Vec<f64>> = full_means
        .iter()
        .map(|mu| keep.iter().map(|&i| mu[i]).collect())
        .collect();
    let rhs: Vec<f64> = (0..k).flat_map(|i| means.iter().map(move |mu| mu[i])).collect();
    let nclass = classes.len();

    let shrink = |g: f64| -> Vec<f64> {
        let mut s = reduced.clone();
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    s[i * k + j] *= 1.0 - g;
                }
            }
        }
        s
    };
    let mut used = gamma;
    let mut shrunk = shrink(gamma);
    let solved = match solve_spd(&shrunk, k, &rhs, nclass) {
        Ok(x) => x,
        Err(first) if gamma == 0.0 => {
            used = FALLBACK_SHRINKAGE;
            shrunk = shrink(used);
            solve_spd(&shrunk, k, &rhs, nclass).map_err(|e| {
                e.context(format!(
                    "LDA covariance for '{}' is singular even with shrinkage {used} (unshrunk: {first})",
                    space.name(target)
                ))
            })?
        }
        Err(e) => return Err(e.context(format!("LDA covariance for '{}'", space.name(target)))),
    };

    let mut a = vec![vec![0.0; k]; nclass];
    for i in 0..k {
        for c in 0..nclass {
            a[c][i] = solved[i * nclass + c];
        }
    }
    let b: Vec<f64> = (0..nclass)
        .map(|c| {
            let quad: f64 = a[c].iter().zip(&means[c]).map(|(x, y)| x * y).sum();
            priors[c].ln() - 0.5 * quad
        })
        .collect();

    Ok(LdaModel {
        target,
        classes,
        priors,
        means,
        a,
        b,
        sigma: shrunk,
        shrinkage: used,
        features: keep.iter().map(|&i| all[i]).collect(),
        dropped,
        layout: cof.layout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::aggregate;

    fn two_class() -> (Triple, AttrSpace) {
        let space = AttrSpace::new([
            ("x".to_string(), AttrKind::Continuous),
            ("y".to_string(), AttrKind::Categorical),
        ]);
        let rows = [(1.0, 0), (2.0, 0), (4.0, 1), (6.0, 1)];
        let vals: Vec<Vec<Value>> = rows.iter().map(|&(x, c)| vec![Value::Num(x), Value::Cat(c)]).collect();
        (aggregate(vals.iter().map(|r| r.as_slice()), &space).unwrap(), space)
    }

    #[test]
    fn hand_computed_example() {
        let (t, space) = two_class();
        let m = train_lda(&t, &space, 1, 0.0).unwrap();
        let r4 = |x: f64| (x * 1e4).round() / 1e4;
        assert_eq!(m.priors, vec![0.5, 0.5]);
        assert_eq!(m.means, vec![vec![1.5], vec![5.0]]);
        assert_eq!(r4(m.sigma[0]), 0.625);
        assert_eq!((r4(m.a[0][0]), r4(m.a[1][0])), (2.4, 8.0));
        assert_eq!((r4(m.b[0]), r4(m.b[1])), (-2.4931, -20.6931));
        assert_eq!(m.predict(&[Value::Num(3.0), Value::Cat(0)]), 0);
        assert_eq!(m.predict(&[Value::Num(3.5), Value::Cat(0)]), 1);
        let boundary = (m.b[0] - m.b[1]) / (m.a[1][0] - m.a[0][0]);
        assert!((boundary - 3.25).abs() < 1e-9);
    }

    #[test]
    fn ties_go_to_smallest_class() {
        let (t, space) = two_class();
        let mut m = train_lda(&t, &space, 1, 0.0).unwrap();
        m.a = vec![vec![0.0], vec![0.0]];
        m.b = vec![1.0, 1.0];
        assert_eq!(m.predict(&[Value::Num(100.0), Value::Cat(1)]), 0);
    }

    #[test]
    fn single_class_is_rejected() {
        let space = AttrSpace::new([
            ("x".to_string(), AttrKind::Continuous),
            ("y".to_string(), AttrKind::Categorical),
        ]);
        let vals = [
            vec![Value::Num(1.0), Value::Cat(3)],
            vec![Value::Num(2.0), Value::Cat(3)],
        ];
        let t = aggregate(vals.iter().map(|r| r.as_slice()), &space).unwrap();
        assert!(train_lda(&t, &space, 1, 0.0).is_err());
    }
}
