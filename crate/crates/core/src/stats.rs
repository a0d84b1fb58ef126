//! Small descriptive statistics over scalar slices.

use crate::scalar::Scalar;

pub fn mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::nan();
    }
    xs.iter().fold(T::zero(), |a, &x| a + x) / T::from_count(xs.len())
}

/// Population variance (divides by `len`).
pub fn variance<T: Scalar>(xs: &[T]) -> T {
    let m = mean(xs);
    xs.iter().fold(T::zero(), |a, &x| a + (x - m) * (x - m)) / T::from_count(xs.len())
}

/// Standard error of the mean using the unbiased sample variance; zero for
/// fewer than two values.
pub fn standard_error<T: Scalar>(xs: &[T]) -> T {
    let n = xs.len();
    if n < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let ss = xs.iter().fold(T::zero(), |a, &x| a + (x - m) * (x - m));
    (ss / T::from_count(n - 1) / T::from_count(n)).sqrt()
}

/// Median, reordering `buf` in place. Even lengths average the two middle
/// values.
pub fn median_in_place<T: Scalar>(buf: &mut [T]) -> T {
    let n = buf.len();
    if n == 0 {
        return T::nan();
    }
    let cmp = |a: &T, b: &T| a.partial_cmp(b).expect("finite values");
    let mid = n / 2;
    let (lower, hi, _) = buf.select_nth_unstable_by(mid, cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = lower.iter().copied().fold(T::neg_infinity(), T::max);
        (lo + hi) / T::lit(2.0)
    }
}

pub fn median<T: Scalar>(xs: &[T]) -> T {
    let mut buf = xs.to_vec();
    median_in_place(&mut buf)
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
