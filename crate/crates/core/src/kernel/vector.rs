use crate::scalar::Scalar;

/// `⟨a, b⟩` accumulated in `f64`.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.wide() * y.wide()).sum()
}

/// Euclidean norm accumulated in `f64`.
pub fn norm2<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.wide() * x.wide()).sum::<f64>().sqrt()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> f64 {
    a.iter().fold(0.0, |m, x| f64::max(m, x.wide().abs()))
}

/// `y ← α x + β y`.
pub fn axpby<T: Scalar>(alpha: T, x: &[T], beta: T, y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = alpha * *xi + beta * *yi;
    }
}

/// Componentwise clamp of `x` onto `[lo, hi]`.
pub fn project_box<T: Scalar>(x: &[T], lo: &[T], hi: &[T]) -> Vec<T> {
    let mut out = x.to_vec();
    project_box_into(&mut out, lo, hi);
    out
}

/// In-place clamp onto `[lo, hi]`; infinite bounds are allowed.
pub fn project_box_into<T: Scalar>(x: &mut [T], lo: &[T], hi: &[T]) {
    debug_assert_eq!(x.len(), lo.len());
    debug_assert_eq!(x.len(), hi.len());
    for ((xi, l), u) in x.iter_mut().zip(lo).zip(hi) {
        *xi = clamp(*xi, *l, *u);
    }
}

/// Writes the clamp of `src` into `dst`.
pub fn clamp_into<T: Scalar>(src: &[T], lo: &[T], hi: &[T], dst: &mut [T]) {
    for (((d, s), l), u) in dst.iter_mut().zip(src).zip(lo).zip(hi) {
        *d = clamp(*s, *l, *u);
    }
}

pub fn project_nonneg<T: Scalar>(y: &[T]) -> Vec<T> {
    let mut out = y.to_vec();
    project_nonneg_into(&mut out);
    out
}

pub fn project_nonneg_into<T: Scalar>(y: &mut [T]) {
    for v in y.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

#[inline(always)]
fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}
