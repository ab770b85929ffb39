//! Named initial data for the experiments.

use crate::error::{Error, Result};
use crate::sublinear::Integrand;
use serde::{Deserialize, Serialize};

/// The test-function menu exposed through configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhiName {
    /// `cos x`; periodic, so rate runs use the wrap-exact periodic grid.
    Cos,
    /// `min(|x|, 2)`; constant beyond its clip radius.
    AbsClip,
    /// `exp(-x^2)`.
    Bump,
    /// The constant 1.
    Const,
}

impl PhiName {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cos" => Ok(PhiName::Cos),
            "abs_clip" => Ok(PhiName::AbsClip),
            "bump" => Ok(PhiName::Bump),
            "const" => Ok(PhiName::Const),
            other => Err(Error::InvalidConfig(format!(
                "unknown phi '{other}' (expected cos|abs_clip|bump|const)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PhiName::Cos => "cos",
            PhiName::AbsClip => "abs_clip",
            PhiName::Bump => "bump",
            PhiName::Const => "const",
        }
    }

    pub fn integrand(&self) -> Integrand {
        match self {
            PhiName::Cos => Integrand::new(|x: f64| x.cos()).with_bounds(Some(1.0), Some(1.0)),
            PhiName::AbsClip => Integrand::new(|x: f64| x.abs().min(2.0))
                .with_bounds(Some(1.0), Some(2.0))
                .with_breakpoints(&[-2.0, 0.0, 2.0]),
            PhiName::Bump => Integrand::new(|x: f64| (-x * x).exp())
                .with_bounds(Some(2.0f64.sqrt() * (-0.5f64).exp()), Some(1.0)),
            PhiName::Const => Integrand::new(|_| 1.0).with_bounds(Some(0.0), Some(1.0)),
        }
    }

    /// Lipschitz constant of the initial datum.
    pub fn lipschitz(&self) -> f64 {
        match self {
            PhiName::Cos | PhiName::AbsClip => 1.0,
            PhiName::Bump => 2.0f64.sqrt() * (-0.5f64).exp(),
            PhiName::Const => 0.0,
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            PhiName::Cos | PhiName::Bump | PhiName::Const => 1.0,
            PhiName::AbsClip => 2.0,
        }
    }

    /// Periodic data is solved on the wrap-exact periodic grid.
    pub fn is_periodic(&self) -> bool {
        matches!(self, PhiName::Cos | PhiName::Const)
    }
}
