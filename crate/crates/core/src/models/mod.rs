//! Models trained from cofactor aggregates: ridge / stochastic linear
//! regression by gradient descent and linear discriminant analysis.

mod lda;
mod linalg;
mod regression;

use serde_json::{json, Value as Json};

pub use lda::{train_lda, LdaModel, FALLBACK_SHRINKAGE};
pub use linalg::{cholesky, max_eigenvalue, solve_spd, SINGULAR_RTOL};
pub use regression::{
    box_muller, residual_variance, ridge_gradient, ridge_loss, train_ridge, GdConfig, RegressionModel,
};

/// A trained imputation model for one attribute.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Regression(RegressionModel),
    Lda(LdaModel),
}

impl Model {
    /// Parameters in the fixed JSON layout used by the `train` command.
    pub fn to_json(&self) -> Json {
        match self {
            Model::Regression(m) => json!({
                "kind": "regression",
                "theta": m.coefficients(),
                "sigma2": m.sigma2,
                "epochs": m.epochs,
                "converged": m.converged,
            }),
            Model::Lda(m) => json!({
                "kind": "lda",
                "classes": m.classes,
                "priors": m.priors,
                "means": m.means,
                "a": m.a,
                "b": m.b,
                "shrinkage": m.shrinkage,
            }),
        }
    }
}
