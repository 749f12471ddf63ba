//! One Halpern–Peaceman–Rachford step.
//!
//! With `w = x + σ(Aᵀy − μ)`:
//!
//! ```text
//! x̄ = Π_K(w)
//! ȳ = Π₊(y + (θ − A(2x̄ − x)) / (λσ))
//! z̄ = (Π_K(w) − w) / σ
//! (x̂, ŷ, ẑ) = 2(x̄, ȳ, z̄) − (x, y, z)
//! (x, y, z) ← (anchor + (k+1)(x̂, ŷ, ẑ)) / (k+2)
//! ```
//!
//! `A x` and `Aᵀ y` of the current and anchor points are carried along by the
//! same affine recursion, so each step costs one product in each orientation
//! and the residual at the bar point comes for free.

use thiserror::Error;

use super::residual::{bound_term, KktResidual};
use super::scaling::WorkingLp;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("non-finite iterate at iteration {iteration}")]
pub struct NumericalFailure {
    pub iteration: usize,
}

/// Iterates of the solver in the working (scaled) space.
#[derive(Debug, Clone)]
pub struct HprState<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub anchor_x: Vec<T>,
    pub anchor_y: Vec<T>,
    pub anchor_z: Vec<T>,
    pub bar_x: Vec<T>,
    pub bar_y: Vec<T>,
    pub bar_z: Vec<T>,
    pub sigma: f64,
    pub lambda: f64,
    /// Iterations since the last restart.
    pub k: usize,
    pub iterations: usize,
    pub epoch: usize,
    ax: Vec<T>,
    aty: Vec<T>,
    anchor_ax: Vec<T>,
    anchor_aty: Vec<T>,
    bar_ax: Vec<T>,
    bar_aty: Vec<T>,
}

impl<T: Scalar> HprState<T> {
    /// Starts an epoch anchored at `(x, y, z)`.
    pub fn new(lp: &WorkingLp<T>, x: Vec<T>, y: Vec<T>, z: Vec<T>, sigma: f64, lambda: f64) -> Self {
        assert_eq!(x.len(), lp.num_cols());
        assert_eq!(z.len(), lp.num_cols());
        assert_eq!(y.len(), lp.num_rows());
        assert!(sigma > 0.0 && lambda > 0.0);
        let mut ax = vec![T::zero(); lp.num_rows()];
        let mut aty = vec![T::zero(); lp.num_cols()];
        lp.a.matvec_into(&x, &mut ax);
        lp.a.matvec_t_into(&y, &mut aty);
        Self {
            anchor_x: x.clone(),
            anchor_y: y.clone(),
            anchor_z: z.clone(),
            bar_x: x.clone(),
            bar_y: y.clone(),
            bar_z: z.clone(),
            x,
            y,
            z,
            sigma,
            lambda,
            k: 0,
            iterations: 0,
            epoch: 0,
            anchor_ax: ax.clone(),
            anchor_aty: aty.clone(),
            bar_ax: ax.clone(),
            bar_aty: aty.clone(),
            ax,
            aty,
        }
    }

    /// Re-anchors at the latest bar point and starts a new epoch.
    pub fn restart_at_bar(&mut self, lp: &WorkingLp<T>) {
        self.x.clone_from(&self.bar_x);
        self.y.clone_from(&self.bar_y);
        self.z.clone_from(&self.bar_z);
        self.anchor_x.clone_from(&self.bar_x);
        self.anchor_y.clone_from(&self.bar_y);
        self.anchor_z.clone_from(&self.bar_z);
        lp.a.matvec_into(&self.x, &mut self.ax);
        lp.a.matvec_t_into(&self.y, &mut self.aty);
        self.anchor_ax.clone_from(&self.ax);
        self.anchor_aty.clone_from(&self.aty);
        self.k = 0;
        self.epoch += 1;
    }

    /// Residual mapping at the latest bar point, in the working space.
    pub fn bar_residual(&self, lp: &WorkingLp<T>) -> KktResidual {
        residual_from_products(lp, &self.bar_x, &self.bar_y, &self.bar_z, &self.bar_ax, &self.bar_aty)
    }

    /// Residual mapping at the current point, in the working space.
    pub fn current_residual(&self, lp: &WorkingLp<T>) -> KktResidual {
        residual_from_products(lp, &self.x, &self.y, &self.z, &self.ax, &self.aty)
    }
}

fn residual_from_products<T: Scalar>(
    lp: &WorkingLp<T>,
    x: &[T],
    y: &[T],
    z: &[T],
    ax: &[T],
    aty: &[T],
) -> KktResidual {
    let mut primal = 0.0;
    let mut dual_obj = 0.0;
    for i in 0..lp.num_rows() {
        let (yi, axi, ri) = (y[i].wide(), ax[i].wide(), lp.rhs[i].wide());
        let r = if lp.is_eq[i] { axi - ri } else { yi - (yi - axi + ri).max(0.0) };
        primal += r * r;
        dual_obj += ri * yi;
    }
    let mut comp = 0.0;
    let mut dual = 0.0;
    let mut primal_obj = 0.0;
    for j in 0..lp.num_cols() {
        let (xj, zj, lo, hi) = (x[j].wide(), z[j].wide(), lp.lower[j].wide(), lp.upper[j].wide());
        let c = xj - (xj - zj).clamp(lo, hi);
        comp += c * c;
        let d = lp.cost[j].wide() - aty[j].wide() - zj;
        dual += d * d;
        primal_obj += lp.cost[j].wide() * xj;
        dual_obj += bound_term(zj, lo, hi);
    }
    KktResidual::assemble(primal.sqrt(), comp.sqrt(), dual.sqrt(), lp.rhs_norm, lp.cost_norm, primal_obj, dual_obj)
}

/// Executes one step in place.
pub fn hpr_iterate<T: Scalar>(state: &mut HprState<T>, lp: &WorkingLp<T>) -> Result<(), NumericalFailure> {
    let sigma = state.sigma;
    let s = T::from_wide(sigma);
    let dual_step = T::from_wide(1.0 / (state.lambda * sigma));
    let two = T::from_wide(2.0);

    let mut finite = 0.0f64;
    for j in 0..lp.num_cols() {
        let w = state.x[j] + s * (state.aty[j] - lp.cost[j]);
        let xb = if w < lp.lower[j] {
            lp.lower[j]
        } else if w > lp.upper[j] {
            lp.upper[j]
        } else {
            w
        };
        state.bar_x[j] = xb;
        state.bar_z[j] = T::from_wide((xb.wide() - w.wide()) / sigma);
        finite += w.wide();
    }

    lp.a.matvec_into(&state.bar_x, &mut state.bar_ax);
    for i in 0..lp.num_rows() {
        let extrapolated = two * state.bar_ax[i] - state.ax[i];
        let t = state.y[i] + dual_step * (lp.rhs[i] - extrapolated);
        state.bar_y[i] = if lp.is_eq[i] || t > T::zero() { t } else { T::zero() };
        finite += t.wide();
    }
    lp.a.matvec_t_into(&state.bar_y, &mut state.bar_aty);
    if !finite.is_finite() {
        return Err(NumericalFailure { iteration: state.iterations });
    }

    let k = state.k as f64;
    let keep = T::from_wide(1.0 / (k + 2.0));
    let step = T::from_wide((k + 1.0) / (k + 2.0));
    halpern(&mut state.x, &state.anchor_x, &state.bar_x, keep, step);
    halpern(&mut state.y, &state.anchor_y, &state.bar_y, keep, step);
    halpern(&mut state.z, &state.anchor_z, &state.bar_z, keep, step);
    halpern(&mut state.ax, &state.anchor_ax, &state.bar_ax, keep, step);
    halpern(&mut state.aty, &state.anchor_aty, &state.bar_aty, keep, step);
    state.k += 1;
    state.iterations += 1;
    Ok(())
}

/// `cur ← keep·anchor + step·(2·bar − cur)`.
#[inline]
fn halpern<T: Scalar>(cur: &mut [T], anchor: &[T], bar: &[T], keep: T, step: T) {
    let two = T::from_wide(2.0);
    for ((c, a), b) in cur.iter_mut().zip(anchor).zip(bar) {
        *c = keep * *a + step * (two * *b - *c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LpBuilder, StandardFormLp};

    fn tiny() -> StandardFormLp {
        let mut b = LpBuilder::new();
        let x = b.add_col(0.0, 2.0, 1.0);
        b.add_ge(&[(x, 1.0)], 1.0);
        b.build().unwrap()
    }

    #[test]
    fn kkt_point_is_a_fixed_point() {
        let lp = WorkingLp::<f64>::unscaled(&tiny());
        let mut st = HprState::new(&lp, vec![1.0], vec![1.0], vec![0.0], 1.0, 1.0);
        hpr_iterate(&mut st, &lp).unwrap();
        assert_eq!((st.x[0], st.y[0], st.z[0]), (1.0, 1.0, 0.0));
        assert_eq!(st.bar_residual(&lp).combined, 0.0);
    }

    #[test]
    fn first_step_from_origin() {
        let lp = WorkingLp::<f64>::unscaled(&tiny());
        let mut st = HprState::new(&lp, vec![0.0], vec![0.0], vec![0.0], 1.0, 1.0);
        hpr_iterate(&mut st, &lp).unwrap();
        // w = 0 + (0 − 1) = −1
        assert_eq!(st.bar_x[0], 0.0);
        assert_eq!(st.bar_y[0], 1.0);
        assert_eq!(st.bar_z[0], 1.0);
        // k = 0: next = ½ anchor + ½ (2 bar − cur)
        assert_eq!(st.x[0], 0.0);
        assert_eq!(st.y[0], 1.0);
        assert_eq!(st.z[0], 1.0);
        assert_eq!(st.k, 1);
    }

    #[test]
    fn cached_products_track_the_iterates() {
        let mut b = LpBuilder::new();
        let x = b.add_col(0.0, 4.0, 1.0);
        let y = b.add_col(-1.0, 3.0, -2.0);
        b.add_ge(&[(x, 1.0), (y, 2.0)], 1.0);
        b.add_eq(&[(x, 3.0), (y, -1.0)], 0.5);
        let lp = WorkingLp::<f64>::unscaled(&b.build().unwrap());
        let mut st = HprState::new(&lp, vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], 0.7, 11.0);
        for _ in 0..25 {
            hpr_iterate(&mut st, &lp).unwrap();
        }
        let ax = lp.a.matvec(&st.x).unwrap();
        let aty = lp.a.matvec_t(&st.y).unwrap();
        for (a, b) in ax.iter().zip(&st.ax) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in aty.iter().zip(&st.aty) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
