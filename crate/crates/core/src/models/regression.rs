use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{AttrKind, ColumnLayout, DenseCofactor, Value};

use super::linalg::max_eigenvalue;

/// Batch gradient descent settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub learning_rate: f64,
    /// Ridge penalty on every coefficient except the intercept.
    pub lambda: f64,
    pub max_epochs: usize,
    /// Stop once the loss fell by less than this fraction over 5 epochs.
    pub tolerance: f64,
    pub standardize: bool,
    /// Cap the step at `1 / L` where `L` bounds the loss curvature.
    pub auto_step: bool,
    /// Divide the residual sum of squares by `N - M - 1` instead of `N`.
    pub dof_correction: bool,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            lambda: 1e-4,
            max_epochs: 10_000,
            tolerance: 1e-9,
            standardize: true,
            auto_step: true,
            dof_correction: false,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::usage("learning rate must be positive"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::usage("ridge penalty must be non-negative"));
        }
        if self.max_epochs == 0 {
            return Err(Error::usage("max_epochs must be at least 1"));
        }
        Ok(())
    }
}

const STOP_WINDOW: usize = 5;
const DIVERGENCE_EPOCHS: usize = 5;

/// Linear model over the dense cofactor columns.
///
/// `theta` is indexed like the cofactor (intercept first) and holds `-1` at
/// the target column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub target: usize,
    pub target_column: usize,
    pub theta: Vec<f64>,
    pub sigma2: f64,
    pub layout: ColumnLayout,
    pub epochs: usize,
    pub converged: bool,
}

impl RegressionModel {
    /// Coefficients without the pinned target entry.
    pub fn coefficients(&self) -> Vec<f64> {
        self.theta
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != self.target_column)
            .map(|(_, &v)| v)
            .collect()
    }

    /// `xᵀθ′` for a row in attribute space; the target's value is ignored.
    pub fn predict(&self, row: &[Value]) -> f64 {
        let mut acc = self.theta[0];
        for (attr, (&v, cols)) in row.iter().zip(&self.layout.index_map).enumerate() {
            if attr == self.target {
                continue;
            }
            match v {
                Value::Num(x) => acc += self.theta[cols.start] * x,
                Value::Cat(c) => {
                    if let Ok(k) = self.layout.dictionaries[attr].binary_search(&c) {
                        acc += self.theta[cols.start + k];
                    }
                }
            }
        }
        acc
    }

    /// Prediction plus Box-Muller noise scaled by the residual standard
    /// deviation. `u1` must lie in `(0, 1]`.
    pub fn predict_stochastic(&self, row: &[Value], u1: f64, u2: f64) -> f64 {
        let mean = self.predict(row);
        if self.sigma2 == 0.0 {
            return mean;
        }
        mean + box_muller(u1, u2) * self.sigma2.sqrt()
    }
}

/// Standard normal deviate from two uniforms, `u1` in `(0, 1]`.
pub fn box_muller(u1: f64, u2: f64) -> f64 {
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// `max(0, θᵀCθ / N)`, or over `N - M - 1` with `dof_correction`.
pub fn residual_variance(cof: &DenseCofactor, theta: &[f64], dof_correction: bool) -> f64 {
    let n = cof.count();
    if n <= 0.0 {
        return 0.0;
    }
    let mut denom = n;
    if dof_correction {
        let predictors = cof.dim.saturating_sub(2) as f64;
        if n - predictors - 1.0 > 0.0 {
            denom = n - predictors - 1.0;
        }
    }
    (cof.quad_form(theta) / denom).max(0.0)
}

/// `(1/2N) θᵀCθ + (λ/2) Σ_{k ≠ 0, target} θ_k²`.
pub fn ridge_loss(cof: &DenseCofactor, target_column: usize, theta: &[f64], lambda: f64) -> f64 {
    let n = cof.count();
    let pen: f64 = penalized(cof.dim, target_column).map(|k| theta[k] * theta[k]).sum();
    0.5 * cof.quad_form(theta) / n + 0.5 * lambda * pen
}

/// `(1/N) Cθ + λ θ_reg`, zero at the target column.
pub fn ridge_gradient(cof: &DenseCofactor, target_column: usize, theta: &[f64], lambda: f64) -> Vec<f64> {
    let n = cof.count();
    let mut g: Vec<f64> = cof.mat_vec(theta).into_iter().map(|v| v / n).collect();
    for k in penalized(cof.dim, target_column) {
        g[k] += lambda * theta[k];
    }
    g[target_column] = 0.0;
    g
}

fn penalized(dim: usize, target_column: usize) -> impl Iterator<Item = usize> {
    (1..dim).filter(move |&k| k != target_column)
}

/// Affine change of basis `u' = A u` that centers and scales every column
/// (the intercept stays 1). Stored as per-column mean and scale.
struct Basis {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Basis {
    fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    fn standardizing(cof: &DenseCofactor) -> Self {
        let n = cof.count();
        let dim = cof.dim;
        let mut mean = vec![0.0; dim];
        let mut scale = vec![1.0; dim];
        for k in 1..dim {
            let m = cof.get(0, k) / n;
            let var = cof.get(k, k) / n - m * m;
            mean[k] = m;
            // Constant columns are only centered; scaling them is undefined.
            if var > 1e-12 * (cof.get(k, k) / n).max(f64::MIN_POSITIVE) {
                scale[k] = var.sqrt();
            }
        }
        Self { mean, scale }
    }

    /// `A C Aᵀ` with `A[k][0] = -mean_k / scale_k`, `A[k][k] = 1 / scale_k`.
    fn transform(&self, cof: &DenseCofactor) -> Vec<f64> {
        let d = cof.dim;
        let c = &cof.matrix;
        // B = A C
        let mut b = vec![0.0; d * d];
        b[..d].copy_from_slice(&c[..d]);
        for k in 1..d {
            let (mk, sk) = (self.mean[k], self.scale[k]);
            for j in 0..d {
                b[k * d + j] = (c[k * d + j] - mk * c[j]) / sk;
            }
        }
        // A C Aᵀ = B Aᵀ
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            out[i * d] = b[i * d];
            for k in 1..d {
                out[i * d + k] = (b[i * d + k] - self.mean[k] * b[i * d]) / self.scale[k];
            }
        }
        // Mirror to remove rounding asymmetry.
        for i in 0..d {
            for j in i + 1..d {
                let v = 0.5 * (out[i * d + j] + out[j * d + i]);
                out[i * d + j] = v;
                out[j * d + i] = v;
            }
        }
        out
    }

    /// Maps standardized coefficients back so that `φᵀu' = θᵀu` for every
    /// row, then rescales so the target entry is `-1`.
    fn to_raw(&self, phi: &[f64], target_column: usize) -> Vec<f64> {
        let d = phi.len();
        let mut theta = vec![0.0; d];
        let mut intercept = phi[0];
        for k in 1..d {
            theta[k] = phi[k] / self.scale[k];
            intercept -= phi[k] * self.mean[k] / self.scale[k];
        }
        theta[0] = intercept;
        let t = -theta[target_column];
        theta.iter_mut().for_each(|v| *v /= t);
        theta[target_column] = -1.0;
        theta
    }
}

/// Ridge regression of the target attribute on all other columns by batch
/// gradient descent over the cofactor matrix.
pub fn train_ridge(cof: &DenseCofactor, target: usize, cfg: &GdConfig) -> Result<RegressionModel> {
    cfg.validate()?;
    let n = cof.count();
    if !(n > 0.0) {
        return Err(Error::numeric("cannot train on an empty cofactor (no training rows)"));
    }
    if cof.layout.kinds.get(target) != Some(&AttrKind::Continuous) {
        return Err(Error::usage(format!(
            "regression target {target} is not a continuous attribute"
        )));
    }
    let target_column = cof.index_map()[target].start;
    let d = cof.dim;

    let basis = if cfg.standardize {
        Basis::standardizing(cof)
    } else {
        Basis::identity(d)
    };
    let c = basis.transform(cof);
    // In the standardized basis the target is scaled by s_y; pinning its
    // coefficient to -1 there fixes the raw coefficient at -1/s_y, which
    // `to_raw` undoes. The raw penalty λθ_k² becomes λ s_y² φ_k² / s_k², and
    // the common factor s_y² drops out of the minimizer.
    let pen: Vec<f64> = (0..d)
        .map(|k| {
            if k == 0 || k == target_column {
                0.0
            } else {
                cfg.lambda / (basis.scale[k] * basis.scale[k])
            }
        })
        .collect();

    let free: Vec<usize> = (0..d).filter(|&k| k != target_column).collect();
    let step = if cfg.auto_step {
        let f = free.len();
        let mut h = vec![0.0; f * f];
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                h[a * f + b] = c[i * d + j] / n;
            }
            h[a * f + a] += pen[i];
        }
        let l = max_eigenvalue(&h, f);
        if l > 0.0 {
            cfg.learning_rate.min(1.0 / l)
        } else {
            cfg.learning_rate
        }
    } else {
        cfg.learning_rate
    };

    let mut phi = vec![0.0; d];
    phi[target_column] = -1.0;
    let mut cphi = vec![0.0; d];
    let loss_at = |phi: &[f64], cphi: &mut [f64]| -> f64 {
        for i in 0..d {
            cphi[i] = (0..d).map(|j| c[i * d + j] * phi[j]).sum();
        }
        let quad: f64 = phi.iter().zip(cphi.iter()).map(|(a, b)| a * b).sum();
        let reg: f64 = (0..d).map(|k| pen[k] * phi[k] * phi[k]).sum();
        0.5 * quad / n + 0.5 * reg
    };

    let mut history = Vec::with_capacity(cfg.max_epochs.min(1 << 16) + 1);
    let mut loss = loss_at(&phi, &mut cphi);
    history.push(loss);
    let mut increases = 0usize;
    let mut epochs = 0usize;
    let mut converged = false;
    while epochs < cfg.max_epochs {
        let mut gmax = 0.0f64;
        for &k in &free {
            let g = cphi[k] / n + pen[k] * phi[k];
            gmax = gmax.max(g.abs());
            phi[k] -= step * g;
        }
        epochs += 1;
        let next = loss_at(&phi, &mut cphi);
        if !next.is_finite() {
            return Err(divergence(cfg.learning_rate, epochs));
        }
        if next > loss {
            increases += 1;
            if increases >= DIVERGENCE_EPOCHS {
                return Err(divergence(cfg.learning_rate, epochs));
            }
        } else {
            increases = 0;
        }
        loss = next;
        history.push(loss);
        if gmax <= 1e-13 {
            converged = true;
            break;
        }
        if epochs >= STOP_WINDOW {
            let before = history[epochs - STOP_WINDOW];
            if before - loss <= cfg.tolerance * loss.abs() && before >= loss {
                converged = true;
                break;
            }
        }
    }

    let theta = basis.to_raw(&phi, target_column);
    let sigma2 = residual_variance(cof, &theta, cfg.dof_correction);
    Ok(RegressionModel {
        target,
        target_column,
        theta,
        sigma2,
        layout: cof.layout.clone(),
        epochs,
        converged,
    })
}

fn divergence(alpha: f64, epochs: usize) -> Error {
    Error::numeric(format!(
        "gradient descent diverged after {epochs} epochs; try a learning rate below {alpha}"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{aggregate, to_dense, AttrSpace};

    fn cofactor(rows: &[Vec<f64>]) -> DenseCofactor {
        let m = rows[0].len();
        let space = AttrSpace::continuous(m);
        let vals: Vec<Vec<Value>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Value::Num(x)).collect())
            .collect();
        to_dense(&aggregate(vals.iter().map(|r| r.as_slice()), &space).unwrap(), &space)
    }

    #[test]
    fn exact_line() {
        let cof = cofactor(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]);
        assert_eq!(
            cof.rows(),
            vec![vec![3.0, 6.0, 12.0], vec![6.0, 14.0, 28.0], vec![12.0, 28.0, 56.0]]
        );
        let cfg = GdConfig {
            lambda: 0.0,
            ..GdConfig::default()
        };
        let model = train_ridge(&cof, 1, &cfg).unwrap();
        let coef = model.coefficients();
        assert!(coef[0].abs() <= 1e-4 && (coef[1] - 2.0).abs() <= 1e-4, "{coef:?}");
        assert!(model.sigma2 < 1e-8);
    }

    #[test]
    fn constant_target() {
        let cof = cofactor(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![4.0, 5.0]]);
        let model = train_ridge(&cof, 1, &GdConfig::default()).unwrap();
        let coef = model.coefficients();
        assert!((coef[0] - 5.0).abs() < 1e-9 && coef[1].abs() < 1e-9, "{coef:?}");
    }

    #[test]
    fn residual_variance_cases() {
        let cof = cofactor(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]);
        assert_eq!(residual_variance(&cof, &[0.0, 2.0, -1.0], false), 0.0);
        assert_eq!(residual_variance(&cof, &[0.0, 0.0, -1.0], false), 56.0 / 3.0);
    }

    #[test]
    fn zero_variance_prediction_is_deterministic() {
        let cof = cofactor(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]);
        let mut model = train_ridge(&cof, 1, &GdConfig::default()).unwrap();
        model.sigma2 = 0.0;
        let row = [Value::Num(10.0), Value::Num(0.0)];
        assert_eq!(model.predict_stochastic(&row, 0.3, 0.7), model.predict(&row));
    }

    #[test]
    fn large_step_without_cap_diverges() {
        let cof = cofactor(&[vec![1.0, 2.0], vec![2.0, 4.5], vec![3.0, 6.0], vec![10.0, 1.0]]);
        let cfg = GdConfig {
            learning_rate: 50.0,
            auto_step: false,
            standardize: false,
            ..GdConfig::default()
        };
        let err = train_ridge(&cof, 1, &cfg).unwrap_err();
        assert!(err.to_string().contains("learning rate"), "{err}");
    }
}
