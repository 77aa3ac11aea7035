//! Cached per-pixel code planes.

use rayon::prelude::*;

use super::config::{Component, ComponentKind, DescriptorConfig, WldParams};
use super::kernels::{lbp_code, lbpriu_code, orientation_bin, quantize_var, var_value, wld_bin, wld_excitation};
use crate::error::{Error, Result};
use crate::raster::circle::{fixed_to_f64, BoundPattern};
use crate::raster::{CirclePattern, Raster, FIXED_ONE};

/// Code of border pixels whose neighbourhood leaves the raster.
pub const INVALID_CODE: u32 = u32::MAX;

/// Per-pixel bin indices of one single-scale component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodePlane {
    width: usize,
    height: usize,
    border: usize,
    bin_count: usize,
    layout_id: u64,
    codes: Vec<u32>,
}

impl CodePlane {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Width of the sentinel band along every edge.
    pub fn border(&self) -> usize {
        self.border
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn layout_id(&self) -> u64 {
        self.layout_id
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.codes[y * self.width + x]
    }
}

/// Neighbourhood sampling for one `(P, R)` bound to a raster width.
#[derive(Debug, Clone)]
pub(crate) struct Sampler {
    pattern: BoundPattern,
    radius: usize,
    width: usize,
    fixed: Vec<i128>,
    floats: Vec<f64>,
}

impl Sampler {
    pub(crate) fn new(points: usize, radius: u32, width: usize) -> Result<Self> {
        let pattern = CirclePattern::new(points, radius)?;
        Ok(Sampler {
            pattern: pattern.bind(width),
            radius: radius as usize,
            width,
            fixed: vec![0; points],
            floats: vec![0.0; points],
        })
    }

    #[inline]
    fn load_fixed(&mut self, pixels: &[u16], x: usize, y: usize) {
        self.pattern.sample(pixels, y * self.width + x, &mut self.fixed);
    }

    #[inline]
    fn load_floats(&mut self, pixels: &[u16], x: usize, y: usize) {
        self.load_fixed(pixels, x, y);
        for (f, &v) in self.floats.iter_mut().zip(&self.fixed) {
            *f = fixed_to_f64(v);
        }
    }

    /// Raw VAR value at `(x, y)`, used when learning quantization boundaries.
    pub(crate) fn variance(&mut self, pixels: &[u16], x: usize, y: usize) -> f64 {
        self.load_floats(pixels, x, y);
        var_value(&self.floats)
    }
}

/// Computes the bin index of one component at any interior pixel.
#[derive(Debug, Clone)]
pub(crate) struct PixelCoder {
    kind: ComponentKind,
    sampler: Sampler,
    boundaries: Vec<f64>,
    wld: WldParams,
}

impl PixelCoder {
    pub(crate) fn new(component: &Component, config: &DescriptorConfig, width: usize) -> Result<Self> {
        let boundaries = if component.kind == ComponentKind::Var {
            config
                .var_boundaries_for(component.scale_index)
                .ok_or_else(|| Error::Training("VAR boundaries have not been trained".into()))?
                .to_vec()
        } else {
            Vec::new()
        };
        Ok(PixelCoder {
            kind: component.kind,
            sampler: Sampler::new(component.scale.points, component.scale.radius, width)?,
            boundaries,
            wld: config.wld,
        })
    }

    /// Bin index at interior pixel `(x, y)`.
    #[inline]
    pub(crate) fn code(&mut self, pixels: &[u16], x: usize, y: usize) -> u32 {
        let width = self.sampler.width;
        let center = pixels[y * width + x];
        match self.kind {
            ComponentKind::Lbp => {
                self.sampler.load_fixed(pixels, x, y);
                lbp_code(&self.sampler.fixed, i128::from(center) * FIXED_ONE)
            }
            ComponentKind::Lbpriu => {
                self.sampler.load_fixed(pixels, x, y);
                lbpriu_code(&self.sampler.fixed, i128::from(center) * FIXED_ONE)
            }
            ComponentKind::Var => {
                let v = self.sampler.variance(pixels, x, y);
                quantize_var(v, &self.boundaries) as u32
            }
            ComponentKind::Wld => {
                self.sampler.load_floats(pixels, x, y);
                let xi = wld_excitation(&self.sampler.floats, f64::from(center));
                let r = self.sampler.radius;
                let at = |xx: usize, yy: usize| f64::from(pixels[yy * width + xx]);
                let dy = at(x, y + r) - at(x, y - r);
                let dx = at(x + r, y) - at(x - r, y);
                let t = orientation_bin(dy, dx, self.wld.orientations);
                wld_bin(xi, t, &self.wld) as u32
            }
        }
    }
}

pub(crate) fn check_size(raster: &Raster, radius: u32) -> Result<()> {
    let need = 2 * radius as usize + 1;
    if raster.width() < need || raster.height() < need {
        return Err(Error::RasterTooSmall {
            width: raster.width(),
            height: raster.height(),
            reason: format!("radius {radius} needs at least {need}x{need}"),
        });
    }
    Ok(())
}

/// Computes the code of every pixel for one component. Rows are processed
/// in parallel on the current rayon pool; the result does not depend on
/// how rows are distributed.
pub fn code_plane(raster: &Raster, component: &Component, config: &DescriptorConfig) -> Result<CodePlane> {
    check_size(raster, component.scale.radius)?;
    let (width, height) = (raster.width(), raster.height());
    let border = component.scale.radius as usize;
    let coder = PixelCoder::new(component, config, width)?;
    let pixels = raster.pixels();
    let mut codes = vec![INVALID_CODE; width * height];
    codes
        .par_chunks_mut(width)
        .enumerate()
        .filter(|(y, _)| *y >= border && *y + border < height)
        .for_each_init(
            || coder.clone(),
            |coder, (y, row)| {
                for (x, slot) in row.iter_mut().enumerate().take(width - border).skip(border) {
                    *slot = coder.code(pixels, x, y);
                }
            },
        );
    Ok(CodePlane {
        width,
        height,
        border,
        bin_count: config.component_bin_count(component),
        layout_id: config.component_layout_id(component),
        codes,
    })
}

/// One plane per component of `config`, in concatenation order.
pub fn code_planes(raster: &Raster, config: &DescriptorConfig) -> Result<Vec<CodePlane>> {
    config
        .components()
        .iter()
        .map(|c| code_plane(raster, c, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::config::DescriptorKind;

    fn component(config: &DescriptorConfig) -> Component {
        config.components()[0]
    }

    #[test]
    fn flat_lbpriu_plane() {
        let r = Raster::filled(10, 8, 8, 40).unwrap();
        let cfg = DescriptorConfig::single(DescriptorKind::Lbpriu, 8, 1).unwrap();
        let plane = code_plane(&r, &component(&cfg), &cfg).unwrap();
        for y in 0..8 {
            for x in 0..10 {
                let interior = (1..9).contains(&x) && (1..7).contains(&y);
                assert_eq!(plane.get(x, y), if interior { 8 } else { INVALID_CODE });
            }
        }
        assert_eq!(plane.border(), 1);
        assert_eq!(plane.bin_count(), 10);
    }

    #[test]
    fn flat_wld_plane() {
        let r = Raster::filled(12, 12, 8, 90).unwrap();
        for scale in [(8, 1), (16, 2), (24, 3)] {
            let cfg = DescriptorConfig::single(DescriptorKind::Wld, scale.0, scale.1).unwrap();
            let plane = code_plane(&r, &component(&cfg), &cfg).unwrap();
            let b = scale.1 as usize;
            assert_eq!(plane.get(b, b), 480);
            assert_eq!(plane.get(11 - b, 11 - b), 480);
        }
    }

    #[test]
    fn too_small_raster() {
        let r = Raster::filled(3, 3, 8, 1).unwrap();
        let cfg = DescriptorConfig::single(DescriptorKind::Lbpriu, 16, 2).unwrap();
        assert!(matches!(
            code_plane(&r, &component(&cfg), &cfg),
            Err(Error::RasterTooSmall { .. })
        ));
    }

    #[test]
    fn var_plane_requires_boundaries() {
        let r = Raster::filled(5, 5, 8, 1).unwrap();
        let mut cfg = DescriptorConfig::single(DescriptorKind::Var, 8, 1).unwrap();
        assert!(code_plane(&r, &component(&cfg), &cfg).is_err());
        cfg.var_boundaries = vec![vec![0.5, 4.0]];
        let plane = code_plane(&r, &component(&cfg), &cfg).unwrap();
        assert_eq!(plane.get(2, 2), 0);
    }

    #[test]
    fn lbp_plane_matches_square_neighbourhood() {
        let r = Raster::new(3, 3, 8, vec![9, 1, 9, 1, 5, 9, 1, 1, 1]).unwrap();
        let cfg = DescriptorConfig::single(DescriptorKind::Lbp, 8, 1).unwrap();
        let plane = code_plane(&r, &component(&cfg), &cfg).unwrap();
        // neighbours clockwise from upper-left: 9 1 9 9 1 1 1 1
        assert_eq!(plane.get(1, 1), 0b0000_1101);
    }
}
