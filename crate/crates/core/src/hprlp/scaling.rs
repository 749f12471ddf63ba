//! Diagonal preconditioning of an LP before the first-order solve.
//!
//! The working problem is `Ã = D_r A D_c`, `θ̃ = D_r θ / s_b`,
//! `μ̃ = D_c μ / s_c`, bounds divided by `D_c s_b`. Solutions map back as
//! `x = s_b D_c x̃`, `y = s_c D_r ỹ`, `z = s_c D_c⁻¹ z̃`.

use crate::kernel::{norm2, SparseMatrix};
use crate::lp::{RowSense, StandardFormLp};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalingPipeline {
    /// Iterative ∞-norm equilibration.
    pub ruiz: bool,
    pub ruiz_iterations: usize,
    /// Pock–Chambolle diagonal scaling with `α = 1`.
    pub pock_chambolle: bool,
    /// Divide `θ` and `μ` by `1 + ‖·‖`.
    pub normalize: bool,
}

impl Default for ScalingPipeline {
    fn default() -> Self {
        Self { ruiz: true, ruiz_iterations: 10, pock_chambolle: true, normalize: true }
    }
}

impl ScalingPipeline {
    pub fn none() -> Self {
        Self { ruiz: false, ruiz_iterations: 0, pock_chambolle: false, normalize: false }
    }
}

/// An LP in working precision together with the factors that undo its scaling.
#[derive(Debug, Clone)]
pub struct WorkingLp<T> {
    pub a: SparseMatrix<T>,
    pub rhs: Vec<T>,
    pub cost: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub is_eq: Vec<bool>,
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    pub rhs_scale: f64,
    pub cost_scale: f64,
    /// `‖θ̃‖` and `‖μ̃‖`, used for relative residuals in the working space.
    pub rhs_norm: f64,
    pub cost_norm: f64,
}

impl<T: Scalar> WorkingLp<T> {
    /// The LP as-is, only converted to `T`.
    pub fn unscaled(lp: &StandardFormLp) -> Self {
        Self::new(lp, ScalingPipeline::none())
    }

    pub fn new(lp: &StandardFormLp, pipeline: ScalingPipeline) -> Self {
        let (m, n) = (lp.num_rows(), lp.num_cols());
        let mut a = lp.a.clone();
        let mut row_scale = vec![1.0; m];
        let mut col_scale = vec![1.0; n];

        if pipeline.ruiz {
            for _ in 0..pipeline.ruiz_iterations {
                let dr: Vec<f64> = a.row_max_abs().iter().map(|v| inv_sqrt(*v)).collect();
                let dc: Vec<f64> = a.col_max_abs().iter().map(|v| inv_sqrt(*v)).collect();
                a.scale(&dr, &dc);
                accumulate(&mut row_scale, &dr);
                accumulate(&mut col_scale, &dc);
            }
        }
        if pipeline.pock_chambolle {
            let dr: Vec<f64> = a.row_abs_sums().iter().map(|v| inv_sqrt(*v)).collect();
            let dc: Vec<f64> = a.col_abs_sums().iter().map(|v| inv_sqrt(*v)).collect();
            a.scale(&dr, &dc);
            accumulate(&mut row_scale, &dr);
            accumulate(&mut col_scale, &dc);
        }

        let rhs: Vec<f64> = lp.rhs.iter().zip(&row_scale).map(|(r, d)| r * d).collect();
        let cost: Vec<f64> = lp.cost.iter().zip(&col_scale).map(|(c, d)| c * d).collect();
        let (rhs_scale, cost_scale) =
            if pipeline.normalize { (1.0 + norm2(&rhs), 1.0 + norm2(&cost)) } else { (1.0, 1.0) };
        let rhs: Vec<f64> = rhs.iter().map(|r| r / rhs_scale).collect();
        let cost: Vec<f64> = cost.iter().map(|c| c / cost_scale).collect();
        let lower: Vec<f64> = lp.lower.iter().zip(&col_scale).map(|(l, d)| l / (d * rhs_scale)).collect();
        let upper: Vec<f64> = lp.upper.iter().zip(&col_scale).map(|(u, d)| u / (d * rhs_scale)).collect();

        let to_t = |v: &[f64]| v.iter().map(|x| T::from_wide(*x)).collect::<Vec<T>>();
        Self {
            a: a.cast(),
            rhs_norm: norm2(&rhs),
            cost_norm: norm2(&cost),
            rhs: to_t(&rhs),
            cost: to_t(&cost),
            lower: to_t(&lower),
            upper: to_t(&upper),
            is_eq: lp.sense.iter().map(|s| *s == RowSense::Eq).collect(),
            row_scale,
            col_scale,
            rhs_scale,
            cost_scale,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn unscale_x(&self, x: &[T]) -> Vec<f64> {
        x.iter().zip(&self.col_scale).map(|(v, d)| v.wide() * d * self.rhs_scale).collect()
    }

    pub fn unscale_y(&self, y: &[T]) -> Vec<f64> {
        y.iter().zip(&self.row_scale).map(|(v, d)| v.wide() * d * self.cost_scale).collect()
    }

    pub fn unscale_z(&self, z: &[T]) -> Vec<f64> {
        z.iter().zip(&self.col_scale).map(|(v, d)| v.wide() / d * self.cost_scale).collect()
    }

    pub fn scale_x(&self, x: &[f64]) -> Vec<T> {
        x.iter().zip(&self.col_scale).map(|(v, d)| T::from_wide(v / (d * self.rhs_scale))).collect()
    }

    pub fn scale_y(&self, y: &[f64]) -> Vec<T> {
        y.iter().zip(&self.row_scale).map(|(v, d)| T::from_wide(v / (d * self.cost_scale))).collect()
    }
}

fn inv_sqrt(v: f64) -> f64 {
    if v > 0.0 {
        1.0 / v.sqrt()
    } else {
        1.0
    }
}

fn accumulate(total: &mut [f64], step: &[f64]) {
    total.iter_mut().zip(step).for_each(|(t, s)| *t *= s);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LpBuilder;

    fn lp() -> StandardFormLp {
        let mut b = LpBuilder::new();
        let x = b.add_col(0.0, 400.0, 3.0);
        let y = b.add_col(-5.0, 10.0, -20.0);
        b.add_ge(&[(x, 100.0), (y, 0.5)], 40.0);
        b.add_eq(&[(x, 1.0), (y, 2000.0)], 7.0);
        b.build().unwrap()
    }

    #[test]
    fn round_trip_of_primal_and_dual_maps() {
        let lp = lp();
        let w = WorkingLp::<f64>::new(&lp, ScalingPipeline::default());
        let x = vec![1.25, -3.0];
        let back = w.unscale_x(&w.scale_x(&x));
        assert!((back[0] - x[0]).abs() < 1e-12 && (back[1] - x[1]).abs() < 1e-12);
        let y = vec![0.5, -2.0];
        let back = w.unscale_y(&w.scale_y(&y));
        assert!((back[0] - y[0]).abs() < 1e-12 && (back[1] - y[1]).abs() < 1e-12);
    }

    #[test]
    fn scaled_rows_evaluate_consistently() {
        // Ã x̃ − θ̃ equals D_r (A x − θ) / s_b
        let lp = lp();
        let w = WorkingLp::<f64>::new(&lp, ScalingPipeline::default());
        let x = vec![0.3, 0.002];
        let ax = lp.activity(&x);
        let axs = w.a.matvec(&w.scale_x(&x)).unwrap();
        for i in 0..2 {
            let expect = w.row_scale[i] * (ax[i] - lp.rhs[i]) / w.rhs_scale;
            assert!((axs[i] - w.rhs[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn equilibration_narrows_the_coefficient_range() {
        let lp = lp();
        let w = WorkingLp::<f64>::new(&lp, ScalingPipeline::default());
        assert!(w.a.coefficient_range() < lp.a.coefficient_range());
    }
}
