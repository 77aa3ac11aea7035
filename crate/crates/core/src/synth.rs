//! Deterministic synthetic texture mosaics with ground-truth masks.
//!
//! Random values come from SplitMix64 and transcendental functions from
//! `libm`, so a recipe produces the same bytes on every platform.

use std::f64::consts::PI;
use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::classify::TrainingClass;
use crate::error::{Error, Result};
use crate::raster::{check_rect, max_value, LabelMask, Raster, Rect};

/// One texture generator. Values are computed in floating point, rounded
/// to nearest (ties to even) and clipped to the raster depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TextureSpec {
    /// `mean + amplitude * sin(2π f (x cos θ + y sin θ))`, `f` in cycles per
    /// pixel, `θ` in degrees, plus Gaussian noise.
    Grating {
        frequency: f64,
        orientation: f64,
        amplitude: f64,
        mean: f64,
        #[serde(default)]
        noise: f64,
    },
    Noise { mean: f64, stddev: f64 },
    Checkerboard {
        cell: usize,
        low: f64,
        high: f64,
        #[serde(default)]
        noise: f64,
    },
    /// Scales the inner texture by a gain rising linearly from `gain_low`
    /// at the left raster edge to `gain_high` at the right edge.
    Ramp {
        gain_low: f64,
        gain_high: f64,
        inner: Box<TextureSpec>,
    },
}

impl TextureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Recipe(msg.to_string()));
        match self {
            TextureSpec::Grating { frequency, noise, .. } if !(*frequency >= 0.0) || !(*noise >= 0.0) => {
                bad("grating frequency and noise must be non-negative")
            }
            TextureSpec::Noise { stddev, .. } if !(*stddev >= 0.0) => bad("noise stddev must be non-negative"),
            TextureSpec::Checkerboard { cell, noise, .. } if *cell == 0 || !(*noise >= 0.0) => {
                bad("checkerboard cell must be positive and noise non-negative")
            }
            TextureSpec::Ramp {
                gain_low,
                gain_high,
                inner,
            } => {
                if !(*gain_low > 0.0 && *gain_high > 0.0) {
                    return bad("ramp gains must be positive");
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    fn value(&self, x: usize, y: usize, width: usize, rng: &mut Gaussian) -> f64 {
        let (fx, fy) = (x as f64, y as f64);
        match self {
            TextureSpec::Grating {
                frequency,
                orientation,
                amplitude,
                mean,
                noise,
            } => {
                let theta = orientation.to_radians();
                let phase = 2.0 * PI * frequency * (fx * libm::cos(theta) + fy * libm::sin(theta));
                mean + amplitude * libm::sin(phase) + noise * rng.next()
            }
            TextureSpec::Noise { mean, stddev } => mean + stddev * rng.next(),
            TextureSpec::Checkerboard {
                cell,
                low,
                high,
                noise,
            } => {
                let base = if (x / cell + y / cell) % 2 == 0 { low } else { high };
                base + noise * rng.next()
            }
            TextureSpec::Ramp {
                gain_low,
                gain_high,
                inner,
            } => ramp_gain(*gain_low, *gain_high, x, width) * inner.value(x, y, width, rng),
        }
    }
}

fn ramp_gain(low: f64, high: f64, x: usize, width: usize) -> f64 {
    if width <= 1 {
        low
    } else {
        low + (high - low) * x as f64 / (width - 1) as f64
    }
}

fn to_level(v: f64, max: u16) -> u16 {
    libm::rint(v).clamp(0.0, f64::from(max)) as u16
}

/// Standard normal deviates by the Box-Muller transform over SplitMix64.
struct Gaussian {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl Gaussian {
    fn new(seed: u64) -> Self {
        Gaussian {
            rng: SplitMix64::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let a = 2.0 * PI * u2;
        self.spare = Some(r * libm::sin(a));
        r * libm::cos(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Texture {
    pub name: String,
    #[serde(flatten)]
    pub spec: TextureSpec,
}

/// Area of the mosaic filled with texture `class` (1-based index into the
/// texture list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub class: u8,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Tile {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampSpec {
    pub gain_low: f64,
    pub gain_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    pub name: String,
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_depth")]
    pub depth: u8,
    pub seed: u64,
    /// Illumination ramp applied to the finished mosaic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<RampSpec>,
    #[serde(rename = "texture")]
    pub textures: Vec<Texture>,
    #[serde(rename = "tile")]
    pub tiles: Vec<Tile>,
    /// Training rectangles; the tile they fall in gives their class.
    #[serde(rename = "train", default)]
    pub training: Vec<Tile>,
}

fn default_depth() -> u8 {
    8
}

/// A generated raster with its ground truth and training rectangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Mosaic {
    pub raster: Raster,
    pub mask: LabelMask,
    pub training: Vec<TrainingClass>,
}

impl Mosaic {
    /// All training rectangles, for excluding them from accuracy counts.
    pub fn training_rects(&self) -> Vec<Rect> {
        self.training.iter().flat_map(|c| c.rects.iter().copied()).collect()
    }
}

impl Recipe {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let recipe: Recipe = toml::from_str(text).map_err(|e| Error::Recipe(e.message().to_string()))?;
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Recipe::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Recipe(e.to_string()))
    }

    pub fn with_seed(&self, seed: u64) -> Recipe {
        Recipe {
            seed,
            ..self.clone()
        }
    }

    pub fn class_count(&self) -> usize {
        self.textures.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Recipe("mosaic size must be positive".into()));
        }
        if self.depth != 8 && self.depth != 16 {
            return Err(Error::Recipe(format!("depth must be 8 or 16, got {}", self.depth)));
        }
        if self.textures.is_empty() || self.textures.len() > usize::from(u8::MAX) {
            return Err(Error::Recipe("recipe needs 1..=255 textures".into()));
        }
        for t in &self.textures {
            t.spec.validate()?;
        }
        if let Some(r) = &self.ramp {
            if !(r.gain_low > 0.0 && r.gain_high > 0.0) {
                return Err(Error::Recipe("ramp gains must be positive".into()));
            }
        }
        let k = self.textures.len();
        for t in self.tiles.iter().chain(&self.training) {
            if t.class == 0 || usize::from(t.class) > k {
                return Err(Error::Recipe(format!("class {} is not in 1..={k}", t.class)));
            }
            check_rect(&t.rect(), self.width, self.height).map_err(|e| Error::Recipe(e.to_string()))?;
        }
        for (i, a) in self.tiles.iter().enumerate() {
            if let Some(b) = self.tiles[i + 1..].iter().find(|b| a.rect().intersects(&b.rect())) {
                return Err(Error::Recipe(format!(
                    "tiles at ({},{}) and ({},{}) overlap",
                    a.x, a.y, b.x, b.y
                )));
            }
        }
        let covered: usize = self.tiles.iter().map(|t| t.w * t.h).sum();
        if covered != self.width * self.height {
            return Err(Error::Recipe(format!(
                "tiles cover {covered} of {} pixels, leaving a gap",
                self.width * self.height
            )));
        }
        Ok(())
    }

    /// Renders the mosaic. Each tile draws from its own noise stream, so
    /// tiles can be regenerated independently.
    pub fn generate(&self) -> Result<Mosaic> {
        self.validate()?;
        let (w, h) = (self.width, self.height);
        let max = max_value(self.depth);
        let mut pixels = vec![0u16; w * h];
        let mut mask = LabelMask::empty(w, h);
        for (i, tile) in self.tiles.iter().enumerate() {
            let spec = &self.textures[usize::from(tile.class) - 1].spec;
            let mut rng = Gaussian::new(tile_seed(self.seed, i));
            for y in tile.y..tile.y + tile.h {
                for x in tile.x..tile.x + tile.w {
                    let mut v = spec.value(x, y, w, &mut rng);
                    if let Some(r) = &self.ramp {
                        v *= ramp_gain(r.gain_low, r.gain_high, x, w);
                    }
                    pixels[y * w + x] = to_level(v, max);
                    mask.set(x, y, tile.class);
                }
            }
        }
        let raster = Raster::new(w, h, self.depth, pixels)?;
        let mut training: Vec<TrainingClass> = Vec::new();
        for t in &self.training {
            match training.iter_mut().find(|c| c.class_id == t.class) {
                Some(c) => c.rects.push(t.rect()),
                None => training.push(TrainingClass::new(
                    t.class,
                    self.textures[usize::from(t.class) - 1].name.clone(),
                    vec![t.rect()],
                )),
            }
        }
        training.sort_by_key(|c| c.class_id);
        Ok(Mosaic {
            raster,
            mask,
            training,
        })
    }

    /// A five-class `size`×`size` mosaic used for benchmarking: two tiles
    /// across the top, three across the bottom.
    pub fn standard(size: usize, seed: u64) -> Recipe {
        let half = size / 2;
        let third = size / 3;
        let tiles = vec![
            Tile { class: 1, x: 0, y: 0, w: half, h: half },
            Tile { class: 2, x: half, y: 0, w: size - half, h: half },
            Tile { class: 3, x: 0, y: half, w: third, h: size - half },
            Tile { class: 4, x: third, y: half, w: third, h: size - half },
            Tile { class: 5, x: 2 * third, y: half, w: size - 2 * third, h: size - half },
        ];
        let training = tiles
            .iter()
            .map(|t| {
                let (tw, th) = ((t.w / 3).max(1), (t.h / 3).max(1));
                Tile {
                    class: t.class,
                    x: t.x + (t.w - tw) / 2,
                    y: t.y + (t.h - th) / 2,
                    w: tw,
                    h: th,
                }
            })
            .collect();
        let texture = |name: &str, spec| Texture {
            name: name.to_string(),
            spec,
        };
        Recipe {
            name: format!("standard{size}"),
            width: size,
            height: size,
            depth: 8,
            seed,
            ramp: None,
            textures: vec![
                texture("smooth", TextureSpec::Noise { mean: 110.0, stddev: 6.0 }),
                texture("rough", TextureSpec::Noise { mean: 110.0, stddev: 30.0 }),
                texture(
                    "rows",
                    TextureSpec::Grating {
                        frequency: 0.15,
                        orientation: 90.0,
                        amplitude: 50.0,
                        mean: 120.0,
                        noise: 4.0,
                    },
                ),
                texture(
                    "columns",
                    TextureSpec::Grating {
                        frequency: 0.15,
                        orientation: 0.0,
                        amplitude: 50.0,
                        mean: 120.0,
                        noise: 4.0,
                    },
                ),
                texture(
                    "blocks",
                    TextureSpec::Checkerboard {
                        cell: 4,
                        low: 70.0,
                        high: 170.0,
                        noise: 5.0,
                    },
                ),
            ],
            tiles,
            training,
        }
    }
}

fn tile_seed(seed: u64, tile: usize) -> u64 {
    // one SplitMix64 step decorrelates neighbouring tile indices
    let mut z = seed ^ (tile as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Scales pixel `(x, y)` by `gain_low + (gain_high - gain_low) * x / (w - 1)`,
/// rounding to nearest (ties to even) and clipping to the depth maximum.
pub fn apply_illumination_ramp(raster: &Raster, gain_low: f64, gain_high: f64) -> Result<Raster> {
    if !(gain_low > 0.0 && gain_high > 0.0) {
        return Err(Error::Recipe("ramp gains must be positive".into()));
    }
    let (w, h) = (raster.width(), raster.height());
    let max = raster.max_value();
    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let g = ramp_gain(gain_low, gain_high, x, w);
            pixels.push(to_level(g * f64::from(raster.get(x, y)), max));
        }
    }
    Raster::new(w, h, raster.depth(), pixels)
}

/// Decomposes a label mask into one-row runs, one [`TrainingClass`] per
/// label present.
pub fn training_from_mask(mask: &LabelMask) -> Vec<TrainingClass> {
    let mut classes: Vec<TrainingClass> = Vec::new();
    for y in 0..mask.height() {
        let mut x = 0;
        while x < mask.width() {
            let label = mask.get(x, y);
            let start = x;
            while x < mask.width() && mask.get(x, y) == label {
                x += 1;
            }
            if label == 0 {
                continue;
            }
            let rect = Rect::new(start, y, x - start, 1);
            match classes.iter_mut().find(|c| c.class_id == label) {
                Some(c) => c.rects.push(rect),
                None => classes.push(TrainingClass::new(label, format!("class{label}"), vec![rect])),
            }
        }
    }
    classes.sort_by_key(|c| c.class_id);
    classes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_tile(spec: TextureSpec) -> Recipe {
        Recipe {
            name: "t".into(),
            width: 16,
            height: 8,
            depth: 8,
            seed: 7,
            ramp: None,
            textures: vec![Texture {
                name: "a".into(),
                spec,
            }],
            tiles: vec![Tile { class: 1, x: 0, y: 0, w: 16, h: 8 }],
            training: vec![],
        }
    }

    #[test]
    fn single_tile_mask() {
        let m = one_tile(TextureSpec::Noise { mean: 100.0, stddev: 20.0 }).generate().unwrap();
        assert!(m.mask.labels().iter().all(|&l| l == 1));
    }

    #[test]
    fn deterministic_per_seed() {
        let r = Recipe::standard(64, 3);
        assert_eq!(r.generate().unwrap(), r.generate().unwrap());
        assert_ne!(r.generate().unwrap().raster, r.with_seed(4).generate().unwrap().raster);
    }

    #[test]
    fn half_planes() {
        let mut r = one_tile(TextureSpec::Noise { mean: 10.0, stddev: 0.0 });
        r.textures.push(Texture {
            name: "b".into(),
            spec: TextureSpec::Noise { mean: 20.0, stddev: 0.0 },
        });
        r.tiles = vec![
            Tile { class: 1, x: 0, y: 0, w: 8, h: 8 },
            Tile { class: 2, x: 8, y: 0, w: 8, h: 8 },
        ];
        let m = r.generate().unwrap();
        assert_eq!(m.mask.get(7, 3), 1);
        assert_eq!(m.mask.get(8, 3), 2);
        assert_eq!(m.raster.get(8, 3), 20);
    }

    #[test]
    fn layout_errors() {
        let mut r = one_tile(TextureSpec::Noise { mean: 10.0, stddev: 0.0 });
        r.tiles = vec![Tile { class: 1, x: 0, y: 0, w: 8, h: 8 }];
        assert!(matches!(r.validate(), Err(Error::Recipe(m)) if m.contains("gap")));
        r.tiles = vec![
            Tile { class: 1, x: 0, y: 0, w: 16, h: 8 },
            Tile { class: 1, x: 4, y: 0, w: 2, h: 2 },
        ];
        assert!(matches!(r.validate(), Err(Error::Recipe(m)) if m.contains("overlap")));
    }

    #[test]
    fn ramp_examples() {
        let r = Raster::from_fn(5, 2, 8, |x, _| (x * 50 + 1) as u16).unwrap();
        assert_eq!(apply_illumination_ramp(&r, 1.0, 1.0).unwrap(), r);
        let half = apply_illumination_ramp(&r, 0.5, 0.5).unwrap();
        // 1/2 -> 0, 51/2 -> 26 (ties to even), 101/2 -> 50
        assert_eq!(&half.pixels()[..3], &[0, 26, 50]);
        let flat = Raster::filled(5, 1, 8, 100).unwrap();
        let ramp = apply_illumination_ramp(&flat, 1.0, 2.0).unwrap();
        assert_eq!(ramp.pixels(), &[100, 125, 150, 175, 200]);
        assert!(apply_illumination_ramp(&r, 0.0, 1.0).is_err());
    }

    #[test]
    fn recipe_toml_round_trip() {
        let r = Recipe::standard(90, 11);
        assert_eq!(Recipe::from_toml_str(&r.to_toml_string().unwrap()).unwrap(), r);
    }

    #[test]
    fn mask_runs() {
        let m = LabelMask::new(4, 2, vec![1, 1, 0, 2, 2, 2, 2, 0]).unwrap();
        let t = training_from_mask(&m);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].rects, vec![Rect::new(0, 0, 2, 1)]);
        assert_eq!(t[1].rects, vec![Rect::new(3, 0, 1, 1), Rect::new(0, 1, 3, 1)]);
    }
}
