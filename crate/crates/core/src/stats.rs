//! Small numerically careful summary statistics.
//!
//! Means are accumulated as offsets from the smallest element so a constant
//! input returns that constant bit-for-bit and results stay inside the input
//! range.

use crate::scalar::Real;

/// Arithmetic mean. Returns `None` for an empty slice.
pub fn mean<T: Real>(xs: &[T]) -> Option<T> {
    mean_iter(xs.iter().copied())
}

pub(crate) fn mean_iter<T: Real, I>(xs: I) -> Option<T>
where
    I: Iterator<Item = T> + Clone,
{
    let mut n = 0usize;
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for x in xs.clone() {
        n += 1;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if n == 0 {
        return None;
    }
    let s: T = xs.map(|x| x - lo).sum();
    Some((lo + s / T::from_usize_lossy(n)).clamp_to(lo, hi))
}

/// Population variance (divides by `n`).
pub fn variance<T: Real>(xs: &[T]) -> Option<T> {
    let m = mean(xs)?;
    let n = T::from_usize_lossy(xs.len());
    Some(xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / n)
}

/// Median of a slice; even lengths average the two middle order statistics.
pub fn median<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        Some(v[n / 2])
    } else {
        let lo = v[n / 2 - 1];
        let hi = v[n / 2];
        Some(lo + (hi - lo) * T::lit(0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mean_is_exact() {
        let xs = [0.1f64; 7];
        assert_eq!(mean(&xs), Some(0.1));
        assert_eq!(variance(&xs), Some(0.0));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median::<f64>(&[]), None);
    }
}
