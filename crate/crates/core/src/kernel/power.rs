use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{KernelError, SparseMatrix};
use crate::scalar::Scalar;

/// Multiplier applied to the converged estimate before it is used as a step bound.
pub const POWER_SAFETY_FACTOR: f64 = 1.01;

/// Result of [`power_method`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    /// Rayleigh-quotient estimate of `λ_max(A Aᵀ)`.
    pub estimate: f64,
    /// `estimate · POWER_SAFETY_FACTOR`; the value the solver uses.
    pub bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Estimates `λ_max(A Aᵀ)` by power iteration on `A Aᵀ`, applied implicitly
/// with one product of each orientation per step.
///
/// Stops once the relative change of the Rayleigh quotient drops below `tol`.
/// Hitting `max_iter` logs a warning and still returns the inflated estimate.
pub fn power_method<T: Scalar>(
    a: &SparseMatrix<T>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<PowerEstimate, KernelError> {
    let m = a.nrows();
    if m == 0 || a.nnz() == 0 {
        return Err(KernelError::ZeroMatrix);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
    normalize(&mut v);

    let mut vt = vec![T::zero(); m];
    let mut atv = vec![T::zero(); a.ncols()];
    let mut aatv = vec![T::zero(); m];
    let mut estimate = 0.0f64;

    for it in 1..=max_iter {
        for (dst, src) in vt.iter_mut().zip(&v) {
            *dst = T::from_wide(*src);
        }
        a.matvec_t_into(&vt, &mut atv);
        a.matvec_into(&atv, &mut aatv);
        // ‖Aᵀv‖² with ‖v‖ = 1
        let rayleigh: f64 = atv.iter().map(|x| x.wide() * x.wide()).sum();
        let next_norm: f64 = aatv.iter().map(|x| x.wide() * x.wide()).sum::<f64>().sqrt();
        if next_norm == 0.0 {
            // v drifted into the null space of Aᵀ; restart from a fresh vector
            v.iter_mut().for_each(|x| *x = rng.gen_range(0.5..1.5));
            normalize(&mut v);
            continue;
        }
        let change = (rayleigh - estimate).abs();
        estimate = rayleigh;
        for (dst, src) in v.iter_mut().zip(&aatv) {
            *dst = src.wide() / next_norm;
        }
        if it > 1 && change <= tol * estimate {
            return Ok(PowerEstimate {
                estimate,
                bound: estimate * POWER_SAFETY_FACTOR,
                iterations: it,
                converged: true,
            });
        }
    }
    warn!("power method stopped after {max_iter} iterations without reaching tol {tol:e}");
    Ok(PowerEstimate { estimate, bound: estimate * POWER_SAFETY_FACTOR, iterations: max_iter, converged: false })
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}
