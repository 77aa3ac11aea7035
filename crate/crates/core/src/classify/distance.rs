//! Bhattacharyya distance and nearest-class assignment.
//!
//! The coefficient `Σ sqrt(h1_i·h2_i)` is accumulated from per-bin terms
//! rounded to multiples of 2^-60. Integer accumulation is associative, so
//! the incremental classifier can add and remove terms as its window slides
//! and still reproduce the from-scratch sum exactly.

use super::model::ModelSet;
use crate::descriptors::Histogram;
use crate::error::{Error, Result};

/// Floor applied to the coefficient before taking the logarithm.
pub const COEFFICIENT_FLOOR: f64 = 1e-12;

/// Largest reachable distance, `-ln(COEFFICIENT_FLOOR)`.
pub fn max_distance() -> f64 {
    -COEFFICIENT_FLOOR.ln()
}

const TERM_SCALE: f64 = (1u64 << 60) as f64;

/// Fixed-point `sqrt(a·b)` for one bin.
#[inline]
pub(crate) fn term(a: f64, b: f64) -> i64 {
    ((a * b).sqrt() * TERM_SCALE).round() as i64
}

#[inline]
pub(crate) fn coefficient_from_sum(sum: i128) -> f64 {
    sum as f64 / TERM_SCALE
}

#[inline]
pub(crate) fn distance_from_sum(sum: i128) -> f64 {
    let bc = coefficient_from_sum(sum).max(COEFFICIENT_FLOOR);
    (-bc.ln()).max(0.0)
}

/// Fixed-point coefficient sum over the bins where both histograms are nonzero.
pub(crate) fn coefficient_sum(h1: &Histogram, h2: &Histogram) -> i128 {
    let (i1, w1) = (h1.indices(), h1.weights());
    let (i2, w2) = (h2.indices(), h2.weights());
    let (mut a, mut b) = (0, 0);
    let mut sum: i128 = 0;
    while a < i1.len() && b < i2.len() {
        match i1[a].cmp(&i2[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                sum += i128::from(term(w1[a], w2[b]));
                a += 1;
                b += 1;
            }
        }
    }
    sum
}

fn check_lengths(h1: &Histogram, h2: &Histogram) -> Result<()> {
    if h1.len() != h2.len() {
        return Err(Error::LayoutMismatch(format!(
            "histograms of {} and {} bins",
            h1.len(),
            h2.len()
        )));
    }
    Ok(())
}

pub fn bhattacharyya_coefficient(h1: &Histogram, h2: &Histogram) -> Result<f64> {
    check_lengths(h1, h2)?;
    Ok(coefficient_from_sum(coefficient_sum(h1, h2)))
}

/// `-ln(Σ sqrt(h1_i·h2_i))` with the coefficient floored at
/// [`COEFFICIENT_FLOOR`], so the result lies in `[0, max_distance()]`.
pub fn bhattacharyya(h1: &Histogram, h2: &Histogram) -> Result<f64> {
    check_lengths(h1, h2)?;
    Ok(distance_from_sum(coefficient_sum(h1, h2)))
}

/// Nearest class by Bhattacharyya distance. Ties go to the lowest class id.
pub fn classify_pixel(h: &Histogram, models: &ModelSet) -> Result<(u8, f64)> {
    let expected = models.config().layout_id();
    if h.layout_id() != expected || h.len() != models.config().bin_count() {
        return Err(Error::LayoutMismatch(format!(
            "histogram layout {:#x} ({} bins) does not match model layout {:#x} ({} bins)",
            h.layout_id(),
            h.len(),
            expected,
            models.config().bin_count()
        )));
    }
    let mut best = (0u8, f64::INFINITY);
    for class in models.classes() {
        let d = distance_from_sum(coefficient_sum(h, &class.histogram));
        if d < best.1 {
            best = (class.class_id, d);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(bins: &[f64]) -> Histogram {
        Histogram::from_dense(bins, 0).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let h = hist(&[0.2, 0.3, 0.5]);
        assert!(bhattacharyya(&h, &h).unwrap() < 1e-12);
        let d = hist(&[1.0, 0.0]);
        assert_eq!(bhattacharyya(&d, &d).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_hits_cap() {
        let d = bhattacharyya(&hist(&[1.0, 0.0]), &hist(&[0.0, 1.0])).unwrap();
        assert_eq!(d, max_distance());
        assert!((d - 27.631_021_115_928_547).abs() < 1e-9);
    }

    #[test]
    fn half_overlap() {
        let d = bhattacharyya(&hist(&[1.0, 0.0]), &hist(&[0.5, 0.5])).unwrap();
        assert!((d - 0.346_573_590_279_972_6).abs() < 1e-12, "{d}");
    }

    #[test]
    fn length_mismatch() {
        assert!(bhattacharyya(&hist(&[1.0]), &hist(&[0.5, 0.5])).is_err());
    }
}
