//! Per-pixel texture kernels.
//!
//! The LBP family only compares samples against the centre, so those
//! kernels accept any ordered sample type: plain `f64` brightness values or
//! the exact fixed-point samples used by the code planes.

use std::f64::consts::{FRAC_PI_2, PI};

use super::config::WldParams;
use crate::error::{Error, Result};
use crate::raster::Raster;

/// Guard used for the Weber ratio denominator when the centre is 0 DN.
pub const WLD_EPSILON: f64 = 1.0;

#[inline]
fn bits<'a, T: PartialOrd + 'a>(samples: &'a [T], center: &'a T) -> impl Iterator<Item = bool> + 'a {
    // u(x) = 1 for x >= 0
    samples.iter().map(move |s| s >= center)
}

/// `Σ u(t_i − t_c)·2^i`. Requires `samples.len() <= 32`.
pub fn lbp_code<T: PartialOrd + Copy>(samples: &[T], center: T) -> u32 {
    debug_assert!(samples.len() <= 32);
    bits(samples, &center)
        .enumerate()
        .fold(0u32, |code, (i, b)| code | (u32::from(b) << i))
}

/// Number of 0/1 transitions around the circular bit pattern, including
/// the wrap from the last sample back to the first.
pub fn uniformity<T: PartialOrd + Copy>(samples: &[T], center: T) -> u32 {
    let Some(last) = samples.last() else {
        return 0;
    };
    let mut prev = *last >= center;
    let mut transitions = 0;
    for b in bits(samples, &center) {
        transitions += u32::from(b != prev);
        prev = b;
    }
    transitions
}

/// Rotation invariant uniform code: the number of set bits for patterns
/// with at most two transitions, `P + 1` otherwise.
pub fn lbpriu_code<T: PartialOrd + Copy>(samples: &[T], center: T) -> u32 {
    if uniformity(samples, center) <= 2 {
        bits(samples, &center).filter(|&b| b).count() as u32
    } else {
        samples.len() as u32 + 1
    }
}

/// Population variance of the neighbour samples (centre excluded).
pub fn var_value(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    samples.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n
}

/// Differential excitation `arctan(Σ (I_i − I_c) / I_c)` with the
/// denominator floored at [`WLD_EPSILON`].
pub fn wld_excitation(samples: &[f64], center: f64) -> f64 {
    let diff: f64 = samples.iter().map(|s| s - center).sum();
    (diff / center.max(WLD_EPSILON)).atan()
}

/// Orientation bin from the cardinal neighbours at distance `R`:
/// `θ' = atan2(I_S − I_N, I_E − I_W)` folded into `[0, 2π)` and rounded to
/// the nearest of `T` sectors.
pub fn wld_orientation(
    raster: &Raster,
    cx: usize,
    cy: usize,
    radius: u32,
    orientations: usize,
) -> Result<usize> {
    let r = radius as usize;
    if cx < r || cy < r || cx + r >= raster.width() || cy + r >= raster.height() {
        return Err(Error::CircleOutOfBounds { cx, cy, radius });
    }
    let north = f64::from(raster.get(cx, cy - r));
    let east = f64::from(raster.get(cx + r, cy));
    let south = f64::from(raster.get(cx, cy + r));
    let west = f64::from(raster.get(cx - r, cy));
    Ok(orientation_bin(south - north, east - west, orientations))
}

/// Sector index of the gradient `(dx, dy) = (I_E − I_W, I_S − I_N)`.
pub fn orientation_bin(dy: f64, dx: f64, orientations: usize) -> usize {
    let theta = orientation_angle(dy, dx);
    let t = (theta / (2.0 * PI) * orientations as f64 + 0.5).floor() as usize;
    t % orientations
}

/// `θ'` in `[0, 2π)`; zero when both differences vanish.
pub fn orientation_angle(dy: f64, dx: f64) -> f64 {
    if dy == 0.0 && dx == 0.0 {
        return 0.0;
    }
    let theta = dy.atan2(dx);
    if theta < 0.0 {
        theta + 2.0 * PI
    } else {
        theta
    }
}

/// Flat index of `(ξ, t)` in the joint WLD histogram. Segments are the
/// outermost axis, then orientation, then sub-bin.
pub fn wld_bin(xi: f64, t: usize, params: &WldParams) -> usize {
    let (m_count, s_count) = (params.segments, params.sub_bins);
    // (ξ + π/2)·M/π, written so that ξ = 0 lands exactly on M/2
    let pos = (xi / PI + 0.5) * m_count as f64;
    let m = (pos.floor().max(0.0) as usize).min(m_count - 1);
    let s = (((pos - m as f64) * s_count as f64).floor().max(0.0) as usize).min(s_count - 1);
    m * (params.orientations * s_count) + t * s_count + s
}

/// Upper bound of the excitation interval, `π/2`.
pub const EXCITATION_LIMIT: f64 = FRAC_PI_2;

/// Equal-frequency thresholds for VAR quantization.
///
/// Threshold `k` (for `k = 1..B`) is the sorted value at index
/// `floor(k·N/B)`, so that each half-open bin `[b_{k−1}, b_k)` receives
/// `N/B` values when there are no ties. Duplicate thresholds are merged.
pub fn train_var_boundaries(values: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::InvalidConfig("VAR needs at least 2 bins".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateDistribution("non-finite VAR value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let distinct = sorted.windows(2).filter(|w| w[0] != w[1]).count() + usize::from(!sorted.is_empty());
    if distinct < 2 {
        return Err(Error::DegenerateDistribution(format!(
            "{distinct} distinct VAR values among {} training pixels",
            sorted.len()
        )));
    }
    let n = sorted.len();
    let mut thresholds: Vec<f64> = (1..bins).map(|k| sorted[k * n / bins]).collect();
    thresholds.dedup();
    Ok(thresholds)
}

/// Index of the half-open interval containing `v`: the number of
/// boundaries that are `<= v`.
pub fn quantize_var(v: f64, boundaries: &[f64]) -> usize {
    boundaries.partition_point(|&b| b <= v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(bits: &str) -> (Vec<f64>, f64) {
        (bits.chars().map(|c| if c == '1' { 6.0 } else { 4.0 }).collect(), 5.0)
    }

    #[test]
    fn lbp_examples() {
        assert_eq!(lbp_code(&[5.0; 8], 5.0), 255);
        assert_eq!(lbp_code(&[3.0; 8], 9.0), 0);
        assert_eq!(lbp_code(&[6.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0], 5.0), 1);
    }

    #[test]
    fn uniformity_examples() {
        assert_eq!(uniformity(&[5.0; 8], 5.0), 0);
        let (s, c) = pattern("10000000");
        assert_eq!(uniformity(&s, c), 2);
        let (s, c) = pattern("01010101");
        assert_eq!(uniformity(&s, c), 8);
    }

    #[test]
    fn lbpriu_examples() {
        assert_eq!(lbpriu_code(&[5.0; 8], 5.0), 8);
        let (s, c) = pattern("10000000");
        assert_eq!(lbpriu_code(&s, c), 1);
        let (s, c) = pattern("01010101");
        assert_eq!(lbpriu_code(&s, c), 9);
        let (s, c) = pattern("00000000");
        assert_eq!(lbpriu_code(&s, c), 0);
    }

    #[test]
    fn var_examples() {
        assert_eq!(var_value(&[7.0; 8]), 0.0);
        assert_eq!(var_value(&[2.0, 2.0, 4.0, 4.0]), 1.0);
        assert_eq!(var_value(&[0.0, 0.0, 0.0, 8.0]), 12.0);
    }

    #[test]
    fn excitation_examples() {
        assert_eq!(wld_excitation(&[5.0; 8], 5.0), 0.0);
        assert!((wld_excitation(&[2.0; 8], 1.0) - 8f64.atan()).abs() < 1e-12);
        assert!((wld_excitation(&[2.0; 8], 1.0) - 1.446_441_332_248_135).abs() < 1e-12);
        assert_eq!(wld_excitation(&[0.0; 8], 0.0), 0.0);
    }

    #[test]
    fn orientation_examples() {
        // east brighter than west, north == south
        assert_eq!(orientation_bin(0.0, 10.0, 8), 0);
        // dy == dx > 0 -> π/4
        assert!((orientation_angle(3.0, 3.0) - PI / 4.0).abs() < 1e-15);
        assert_eq!(orientation_bin(3.0, 3.0, 8), 1);
        assert_eq!(orientation_bin(0.0, 0.0, 8), 0);
        // just below 2π rounds back to sector 0
        assert_eq!(orientation_bin(-0.01, 10.0, 8), 0);
        assert_eq!(orientation_bin(0.0, -1.0, 8), 4);
    }

    #[test]
    fn orientation_on_raster() {
        let r = Raster::new(3, 3, 8, vec![0, 10, 0, 0, 0, 20, 0, 10, 0]).unwrap();
        assert_eq!(wld_orientation(&r, 1, 1, 1, 8).unwrap(), 0);
        let r = Raster::new(3, 3, 8, vec![0, 0, 0, 0, 0, 5, 0, 5, 0]).unwrap();
        assert_eq!(wld_orientation(&r, 1, 1, 1, 8).unwrap(), 1);
        assert!(wld_orientation(&r, 0, 1, 1, 8).is_err());
    }

    #[test]
    fn wld_bin_examples() {
        let p = WldParams::default();
        assert_eq!(wld_bin(-FRAC_PI_2, 0, &p), 0);
        assert_eq!(wld_bin(FRAC_PI_2 - 1e-12, 7, &p), 959);
        assert_eq!(wld_bin(FRAC_PI_2, 7, &p), 959);
        assert_eq!(wld_bin(0.0, 0, &p), 480);
    }

    #[test]
    fn var_boundaries_uniform() {
        let values: Vec<f64> = (0..160).map(f64::from).collect();
        let b = train_var_boundaries(&values, 16).unwrap();
        let expected: Vec<f64> = (1..16).map(|k| f64::from(10 * k)).collect();
        assert_eq!(b, expected);
    }

    #[test]
    fn var_boundaries_two_bins() {
        // floor(k·N/B) indexing puts the split between {1,2} and {3,4}
        assert_eq!(train_var_boundaries(&[4.0, 1.0, 3.0, 2.0], 2).unwrap(), vec![3.0]);
    }

    #[test]
    fn var_boundaries_degenerate() {
        assert!(matches!(
            train_var_boundaries(&[2.0; 50], 16),
            Err(Error::DegenerateDistribution(_))
        ));
        assert!(train_var_boundaries(&[], 16).is_err());
    }

    #[test]
    fn var_boundaries_merge_duplicates() {
        let mut values = vec![0.0; 90];
        values.extend((1..=10).map(f64::from));
        let b = train_var_boundaries(&values, 4).unwrap();
        assert_eq!(b, vec![0.0]);
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_var(0.0, &[1.0, 2.0, 3.0]), 0);
        assert_eq!(quantize_var(99.0, &[1.0, 2.0, 3.0]), 3);
        assert_eq!(quantize_var(15.0, &[10.0, 20.0]), 1);
        assert_eq!(quantize_var(10.0, &[10.0, 20.0]), 1);
        assert_eq!(quantize_var(20.0, &[10.0, 20.0]), 2);
    }
}
