use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::GdConfig;
use crate::ring::{AttrKind, AttrSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Rescan the observed rows of every attribute.
    Baseline,
    /// Maintain one cofactor for all rows and subtract the rows being
    /// imputed.
    Low,
    /// Cache the complete rows and add the incomplete rows observing the
    /// attribute.
    High,
    /// `Low` up to the missing-rate threshold, `High` above it.
    Auto,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Baseline => "baseline",
            Strategy::Low => "low",
            Strategy::High => "high",
            Strategy::Auto => "auto",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" => Ok(Strategy::Baseline),
            "low" => Ok(Strategy::Low),
            "high" => Ok(Strategy::High),
            "auto" => Ok(Strategy::Auto),
            other => Err(Error::usage(format!(
                "unknown strategy '{other}' (expected baseline, low, high or auto)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Regression,
    Lda,
}

impl ModelKind {
    pub fn default_for(kind: AttrKind) -> Self {
        match kind {
            AttrKind::Continuous => ModelKind::Regression,
            AttrKind::Categorical => ModelKind::Lda,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiceConfig {
    pub iterations: usize,
    pub strategy: Strategy,
    /// Overall missing rate at or below which `Auto` picks `Low`.
    pub auto_threshold: f64,
    pub gd: GdConfig,
    /// Covariance shrinkage for LDA models.
    pub lda_shrinkage: f64,
    pub seed: u64,
    /// Per-attribute model choice by attribute name.
    pub models: Vec<(String, ModelKind)>,
    /// Stop once no parameter moved by more than 1e-4 relative in an
    /// iteration.
    pub early_stop: bool,
    /// Compare the maintained cofactor (low strategy) with a recomputation
    /// after every iteration.
    pub audit: bool,
}

impl MiceConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            iterations: 5,
            strategy: Strategy::Auto,
            auto_threshold: 0.2,
            gd: GdConfig::default(),
            lda_shrinkage: 0.0,
            seed,
            models: Vec::new(),
            early_stop: false,
            audit: false,
        }
    }

    pub fn validate(&self, space: &AttrSpace) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::usage("iterations must be at least 1"));
        }
        if !(self.auto_threshold > 0.0 && self.auto_threshold < 1.0) {
            return Err(Error::usage("auto threshold must lie in (0, 1)"));
        }
        self.gd.validate()?;
        for (name, kind) in &self.models {
            let a = space
                .index_of(name)
                .ok_or_else(|| Error::usage(format!("model override for unknown attribute '{name}'")))?;
            if *kind != ModelKind::default_for(space.kind(a)) {
                return Err(Error::usage(format!(
                    "attribute '{name}' is {:?}; {kind:?} cannot model it",
                    space.kind(a)
                )));
            }
        }
        Ok(())
    }

    pub fn model_for(&self, space: &AttrSpace, attr: usize) -> ModelKind {
        self.models
            .iter()
            .find(|(n, _)| n == space.name(attr))
            .map(|&(_, k)| k)
            .unwrap_or_else(|| ModelKind::default_for(space.kind(attr)))
    }
}
