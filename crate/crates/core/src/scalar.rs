//! Working-precision scalar abstraction.
//!
//! Iterates and matrix values of the first-order solver are stored in a
//! [`Scalar`]; reductions (dot products, norms, row sums) always accumulate
//! in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Sum + Send + Sync + Debug + Display + 'static
{
    /// Short label used in logs and reports.
    const LABEL: &'static str;

    /// Rounds an `f64` into the working precision.
    fn from_wide(v: f64) -> Self;

    /// Widens to `f64` (exact for both supported types).
    fn wide(self) -> f64;
}

impl Scalar for f64 {
    const LABEL: &'static str = "fp64";

    #[inline(always)]
    fn from_wide(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn wide(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    const LABEL: &'static str = "fp32";

    #[inline(always)]
    fn from_wide(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn wide(self) -> f64 {
        self as f64
    }
}

/// Storage precision of the iterative solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Fp32,
    #[default]
    Fp64,
}

impl Precision {
    pub fn label(self) -> &'static str {
        match self {
            Precision::Fp32 => f32::LABEL,
            Precision::Fp64 => f64::LABEL,
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fp32" | "f32" | "single" => Ok(Precision::Fp32),
            "fp64" | "f64" | "double" => Ok(Precision::Fp64),
            other => Err(format!("unknown precision `{other}` (expected fp32 or fp64)")),
        }
    }
}

impl Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
