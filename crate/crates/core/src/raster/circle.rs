//! Circular neighbourhood sampling.
//!
//! Sample `p` of a `(P, R)` circle sits at angle `2πp/P` from the +x axis,
//! turning clockwise on screen (image y grows downwards), at
//! `(cx + R cos α, cy + R sin α)`. Off-grid positions are resolved by
//! bilinear interpolation of the four surrounding pixels.
//!
//! `(8, 1)` is special: it uses the square 3×3 neighbourhood numbered
//! clockwise from the upper-left pixel, with no interpolation.
//!
//! ```text
//!   0 1 2
//!   7 c 3
//!   6 5 4
//! ```
//!
//! [`ANGULAR_INDEX_OF_SQUARE`] maps that numbering onto the angular one.
//!
//! Sub-pixel offsets are rounded to multiples of 2^-30 and the interpolation
//! is carried out in integers scaled by [`FIXED_ONE`]. Samples are therefore
//! exact rationals: adding a constant or applying a positive affine map to
//! the raster transforms every sample exactly the same way.

use std::f64::consts::PI;

use super::Raster;
use crate::error::{Error, Result};

/// Fixed-point scale of interpolated samples (a weight of 1.0).
pub const FIXED_ONE: i128 = 1 << 60;
const FRAC_BITS: u32 = 30;
const FRAC_ONE: i64 = 1 << FRAC_BITS;

const SQUARE_OFFSETS: [(i32, i32); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

/// `ANGULAR_INDEX_OF_SQUARE[i]` is the angular sample index that lies in
/// the direction of square neighbour `i` (upper-left is 225°, i.e. 5 of 8).
pub const ANGULAR_INDEX_OF_SQUARE: [usize; 8] = [5, 6, 7, 0, 1, 2, 3, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Tap {
    dx: i32,
    dy: i32,
    weight: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CirclePattern {
    points: usize,
    radius: u32,
    taps: Vec<Tap>,
    // taps[starts[p]..starts[p + 1]] belong to sample p
    starts: Vec<usize>,
}

impl CirclePattern {
    pub fn new(points: usize, radius: u32) -> Result<Self> {
        if points == 0 || radius == 0 {
            return Err(Error::InvalidConfig(format!(
                "circle needs P >= 1 and R >= 1, got P={points} R={radius}"
            )));
        }
        let mut taps = Vec::with_capacity(points * 4);
        let mut starts = Vec::with_capacity(points + 1);
        if points == 8 && radius == 1 {
            for &(dx, dy) in &SQUARE_OFFSETS {
                starts.push(taps.len());
                taps.push(Tap {
                    dx,
                    dy,
                    weight: FRAC_ONE * FRAC_ONE,
                });
            }
        } else {
            let r = f64::from(radius);
            for p in 0..points {
                starts.push(taps.len());
                let angle = 2.0 * PI * p as f64 / points as f64;
                let (ix, fx) = split_fixed(r * angle.cos());
                let (iy, fy) = split_fixed(r * angle.sin());
                let corners = [
                    (ix, iy, (FRAC_ONE - fx) * (FRAC_ONE - fy)),
                    (ix + 1, iy, fx * (FRAC_ONE - fy)),
                    (ix, iy + 1, (FRAC_ONE - fx) * fy),
                    (ix + 1, iy + 1, fx * fy),
                ];
                taps.extend(
                    corners
                        .into_iter()
                        .filter(|&(_, _, w)| w != 0)
                        .map(|(dx, dy, weight)| Tap { dx, dy, weight }),
                );
            }
        }
        starts.push(taps.len());
        Ok(CirclePattern {
            points,
            radius,
            taps,
            starts,
        })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Whether the whole circle around `(cx, cy)` lies inside a `width`×`height` grid.
    pub fn fits(&self, width: usize, height: usize, cx: usize, cy: usize) -> bool {
        let r = self.radius as usize;
        cx >= r && cy >= r && cx + r < width && cy + r < height
    }

    /// Fixed-point samples scaled by [`FIXED_ONE`]. The caller guarantees the
    /// circle fits.
    pub(crate) fn sample_fixed(&self, raster: &Raster, cx: usize, cy: usize, out: &mut [i128]) {
        debug_assert!(self.fits(raster.width(), raster.height(), cx, cy));
        let bound = self.bind(raster.width());
        bound.sample(raster.pixels(), cy * raster.width() + cx, out);
    }

    pub fn sample(&self, raster: &Raster, cx: usize, cy: usize) -> Result<Vec<f64>> {
        if !self.fits(raster.width(), raster.height(), cx, cy) {
            return Err(Error::CircleOutOfBounds {
                cx,
                cy,
                radius: self.radius,
            });
        }
        let mut fixed = vec![0i128; self.points];
        self.sample_fixed(raster, cx, cy, &mut fixed);
        Ok(fixed.into_iter().map(fixed_to_f64).collect())
    }

    pub(crate) fn bind(&self, width: usize) -> BoundPattern {
        BoundPattern {
            offsets: self
                .taps
                .iter()
                .map(|t| t.dy as isize * width as isize + t.dx as isize)
                .collect(),
            weights: self.taps.iter().map(|t| t.weight).collect(),
            starts: self.starts.clone(),
        }
    }
}

/// Splits a coordinate into integer part and a 30-bit fraction, carrying
/// when the fraction rounds up to one.
fn split_fixed(v: f64) -> (i32, i64) {
    let floor = v.floor();
    let mut frac = ((v - floor) * FRAC_ONE as f64).round() as i64;
    let mut int = floor as i32;
    if frac == FRAC_ONE {
        int += 1;
        frac = 0;
    }
    (int, frac)
}

#[inline]
pub(crate) fn fixed_to_f64(v: i128) -> f64 {
    v as f64 / FIXED_ONE as f64
}

/// A pattern with tap positions resolved to linear offsets for one raster width.
#[derive(Debug, Clone)]
pub(crate) struct BoundPattern {
    offsets: Vec<isize>,
    weights: Vec<i64>,
    starts: Vec<usize>,
}

impl BoundPattern {
    #[inline]
    pub(crate) fn sample(&self, pixels: &[u16], center: usize, out: &mut [i128]) {
        for (p, slot) in out.iter_mut().enumerate() {
            let mut acc: i128 = 0;
            for t in self.starts[p]..self.starts[p + 1] {
                let idx = (center as isize + self.offsets[t]) as usize;
                acc += i128::from(self.weights[t]) * i128::from(pixels[idx]);
            }
            *slot = acc;
        }
    }
}

/// Samples `P` values on the circle of radius `R` around `(cx, cy)`.
pub fn sample_circular(
    raster: &Raster,
    cx: usize,
    cy: usize,
    points: usize,
    radius: u32,
) -> Result<Vec<f64>> {
    CirclePattern::new(points, radius)?.sample(raster, cx, cy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_raster_gives_copies() {
        let r = Raster::filled(9, 9, 8, 77).unwrap();
        for (p, rad) in [(8, 1), (16, 2), (24, 3), (12, 4)] {
            assert_eq!(sample_circular(&r, 4, 4, p, rad).unwrap(), vec![77.0; p]);
        }
    }

    #[test]
    fn square_order_clockwise_from_upper_left() {
        let r = Raster::new(3, 3, 8, vec![1, 2, 3, 8, 0, 4, 7, 6, 5]).unwrap();
        let s = sample_circular(&r, 1, 1, 8, 1).unwrap();
        assert_eq!(s, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn square_index_mapping_matches_angles() {
        // angular sample q of 8 points at R=1 points towards SQUARE_OFFSETS[i]
        for (i, &q) in ANGULAR_INDEX_OF_SQUARE.iter().enumerate() {
            let a = 2.0 * PI * q as f64 / 8.0;
            let (dx, dy) = SQUARE_OFFSETS[i];
            assert_eq!(a.cos().signum() as i32 * (a.cos().abs() > 0.1) as i32, dx);
            assert_eq!(a.sin().signum() as i32 * (a.sin().abs() > 0.1) as i32, dy);
        }
    }

    #[test]
    fn ramp_is_reproduced() {
        let r = Raster::from_fn(11, 11, 8, |x, _| x as u16).unwrap();
        let s = sample_circular(&r, 5, 5, 16, 2).unwrap();
        for (p, v) in s.iter().enumerate() {
            let a = 2.0 * PI * p as f64 / 16.0;
            assert!((v - (5.0 + 2.0 * a.cos())).abs() < 1e-9, "p={p} v={v}");
        }
    }

    #[test]
    fn cardinal_samples_are_exact_pixels() {
        let r = Raster::from_fn(9, 9, 8, |x, y| (x * 9 + y) as u16).unwrap();
        let s = sample_circular(&r, 4, 4, 16, 3).unwrap();
        assert_eq!(s[0], f64::from(r.get(7, 4)));
        assert_eq!(s[4], f64::from(r.get(4, 7)));
        assert_eq!(s[8], f64::from(r.get(1, 4)));
        assert_eq!(s[12], f64::from(r.get(4, 1)));
    }

    #[test]
    fn out_of_bounds_circle() {
        let r = Raster::filled(5, 5, 8, 0).unwrap();
        assert!(sample_circular(&r, 1, 2, 16, 2).is_err());
        assert!(sample_circular(&r, 2, 2, 16, 2).is_ok());
        assert!(sample_circular(&r, 2, 2, 16, 3).is_err());
    }

    #[test]
    fn fixed_point_weights_sum_to_one() {
        for (p, rad) in [(8, 1), (16, 2), (24, 3), (7, 5)] {
            let pat = CirclePattern::new(p, rad).unwrap();
            for s in 0..p {
                let total: i128 = pat.taps[pat.starts[s]..pat.starts[s + 1]]
                    .iter()
                    .map(|t| i128::from(t.weight))
                    .sum();
                assert_eq!(total, FIXED_ONE);
            }
        }
    }
}
