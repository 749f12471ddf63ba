use serde::{Deserialize, Serialize};

use crate::kernel::norm2;
use crate::lp::{RowSense, StandardFormLp};

/// KKT residual mapping of `min μᵀx s.t. Ax ≥ θ, x ∈ K` at `(x, y, z)`:
///
/// ```text
/// y − Π₊(y − Ax + θ)      (identity projection on equality rows)
/// x − Π_K(x − z)
/// μ − Aᵀy − z
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResidual {
    pub primal: f64,
    pub complementarity: f64,
    pub dual: f64,
    /// Euclidean norm of the stacked residual.
    pub combined: f64,
    pub rel_primal: f64,
    pub rel_complementarity: f64,
    pub rel_dual: f64,
    /// `combined / (1 + ‖θ‖ + ‖μ‖)`.
    pub relative: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `|primal_obj − dual_obj| / (1 + |primal_obj| + |dual_obj|)`.
    pub rel_gap: f64,
}

impl KktResidual {
    /// Worst of the relative residuals and the relative gap.
    pub fn worst(&self) -> f64 {
        self.rel_primal.max(self.rel_complementarity).max(self.rel_dual).max(self.rel_gap)
    }

    pub fn is_finite(&self) -> bool {
        self.combined.is_finite() && self.primal_obj.is_finite() && self.dual_obj.is_finite()
    }

    pub(crate) fn assemble(
        primal: f64,
        complementarity: f64,
        dual: f64,
        rhs_norm: f64,
        cost_norm: f64,
        primal_obj: f64,
        dual_obj: f64,
    ) -> Self {
        let denom = 1.0 + rhs_norm + cost_norm;
        let combined = (primal * primal + complementarity * complementarity + dual * dual).sqrt();
        Self {
            primal,
            complementarity,
            dual,
            combined,
            rel_primal: primal / denom,
            rel_complementarity: complementarity / denom,
            rel_dual: dual / denom,
            relative: combined / denom,
            primal_obj,
            dual_obj,
            rel_gap: (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs() + dual_obj.abs()),
        }
    }
}

/// Contribution `min_{l ≤ x ≤ u} z x` of one column, ignoring infinite sides.
#[inline]
pub(crate) fn bound_term(z: f64, lower: f64, upper: f64) -> f64 {
    if z > 0.0 && lower.is_finite() {
        z * lower
    } else if z < 0.0 && upper.is_finite() {
        z * upper
    } else {
        0.0
    }
}

/// Evaluates the residual mapping on an LP in `f64`.
pub fn kkt_residual(lp: &StandardFormLp, x: &[f64], y: &[f64], z: &[f64]) -> KktResidual {
    let ax = lp.activity(x);
    let aty = lp.a.matvec_t(y).expect("kkt_residual: dual length");
    let primal = lp
        .sense
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let r = match s {
                RowSense::Ge => y[i] - (y[i] - ax[i] + lp.rhs[i]).max(0.0),
                RowSense::Eq => ax[i] - lp.rhs[i],
            };
            r * r
        })
        .sum::<f64>()
        .sqrt();
    let mut comp = 0.0;
    let mut dual = 0.0;
    let mut bound_obj = 0.0;
    for j in 0..lp.num_cols() {
        let proj = (x[j] - z[j]).clamp(lp.lower[j], lp.upper[j]);
        comp += (x[j] - proj) * (x[j] - proj);
        let d = lp.cost[j] - aty[j] - z[j];
        dual += d * d;
        bound_obj += bound_term(z[j], lp.lower[j], lp.upper[j]);
    }
    let primal_obj = lp.objective(x);
    let dual_obj = lp.rhs.iter().zip(y).map(|(r, v)| r * v).sum::<f64>() + bound_obj + lp.obj_offset;
    KktResidual::assemble(primal, comp.sqrt(), dual.sqrt(), norm2(&lp.rhs), norm2(&lp.cost), primal_obj, dual_obj)
}

/// Lower bound on the LP optimum from any dual vector `y`.
///
/// Equality duals are taken as given, inequality duals are clipped at zero,
/// and the bound is `θᵀy + Σ_j min_{x_j ∈ [l_j, u_j]} (μ − Aᵀy)_j x_j`. It is
/// `-∞` when a reduced cost points toward an infinite bound.
pub fn lagrangian_bound(lp: &StandardFormLp, y: &[f64]) -> f64 {
    let y: Vec<f64> = y
        .iter()
        .zip(&lp.sense)
        .map(|(v, s)| match s {
            RowSense::Ge => v.max(0.0),
            RowSense::Eq => *v,
        })
        .collect();
    let aty = lp.a.matvec_t(&y).expect("lagrangian_bound: dual length");
    let mut bound = lp.rhs.iter().zip(&y).map(|(r, v)| r * v).sum::<f64>() + lp.obj_offset;
    for j in 0..lp.num_cols() {
        let d = lp.cost[j] - aty[j];
        let term = if d > 0.0 {
            d * lp.lower[j]
        } else if d < 0.0 {
            d * lp.upper[j]
        } else {
            0.0
        };
        if term.is_nan() || term == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        bound += term;
    }
    bound
}
