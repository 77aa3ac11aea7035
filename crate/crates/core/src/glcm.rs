//! Gray-level co-occurrence baseline: Haralick-style statistics of small
//! moving windows, z-scored and assigned to the nearest class centroid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{checked_table, from_table, run_in_pool, to_toml, Interior, TrainingClass, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::raster::{check_rect, LabelMask, Raster, Rect};

pub const DEFAULT_GLCM_WINDOW: usize = 7;
pub const DEFAULT_LEVELS: usize = 32;
pub const DEFAULT_DISTANCES: [usize; 3] = [1, 2, 3];

/// Number of statistics per distance.
pub const STAT_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Angle {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Angle {
    pub const ALL: [Angle; 4] = [Angle::Deg0, Angle::Deg45, Angle::Deg90, Angle::Deg135];

    /// Pixel offset `(dx, dy)` at distance `d`, with y pointing down.
    pub fn offset(self, d: usize) -> (isize, isize) {
        let d = d as isize;
        match self {
            Angle::Deg0 => (d, 0),
            Angle::Deg45 => (d, -d),
            Angle::Deg90 => (0, -d),
            Angle::Deg135 => (-d, -d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlcmParams {
    pub window: usize,
    pub levels: usize,
    pub distances: Vec<usize>,
}

impl Default for GlcmParams {
    fn default() -> Self {
        GlcmParams {
            window: DEFAULT_GLCM_WINDOW,
            levels: DEFAULT_LEVELS,
            distances: DEFAULT_DISTANCES.to_vec(),
        }
    }
}

impl GlcmParams {
    pub fn validate(&self) -> Result<()> {
        if !(2..=256).contains(&self.levels) {
            return Err(Error::InvalidConfig(format!(
                "GLCM levels must be in 2..=256, got {}",
                self.levels
            )));
        }
        if self.distances.is_empty() {
            return Err(Error::InvalidConfig("GLCM needs at least one distance".into()));
        }
        if let Some(d) = self.distances.iter().find(|&&d| d == 0 || d >= self.window) {
            return Err(Error::InvalidConfig(format!(
                "GLCM distance {d} must be in 1..{}",
                self.window
            )));
        }
        Ok(())
    }

    pub fn feature_len(&self) -> usize {
        STAT_COUNT * self.distances.len()
    }
}

/// Gray level of `value` when a `depth`-bit range is split into `levels`
/// equal bins.
#[inline]
pub fn quantize_level(value: u16, depth: u8, levels: usize) -> u16 {
    ((u32::from(value) * levels as u32) >> depth) as u16
}

fn quantize(raster: &Raster, levels: usize) -> Vec<u16> {
    raster
        .pixels()
        .iter()
        .map(|&v| quantize_level(v, raster.depth(), levels))
        .collect()
}

/// A normalized symmetric co-occurrence matrix, stored as the nonzero
/// cells `(i, j, p)` in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    levels: usize,
    entries: Vec<(u16, u16, f64)>,
}

impl Glcm {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn entries(&self) -> &[(u16, u16, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .iter()
            .find(|e| usize::from(e.0) == i && usize::from(e.1) == j)
            .map_or(0.0, |e| e.2)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.levels * self.levels];
        for &(i, j, p) in &self.entries {
            m[usize::from(i) * self.levels + usize::from(j)] = p;
        }
        m
    }
}

/// Pair keys `a * levels + b` of the window, both orders of every pair.
fn pair_keys(
    q: &[u16],
    width: usize,
    rect: &Rect,
    levels: usize,
    (dx, dy): (isize, isize),
    keys: &mut Vec<u32>,
) {
    keys.clear();
    for y in rect.y..rect.y + rect.h {
        let ny = y as isize + dy;
        if ny < rect.y as isize || ny >= (rect.y + rect.h) as isize {
            continue;
        }
        for x in rect.x..rect.x + rect.w {
            let nx = x as isize + dx;
            if nx < rect.x as isize || nx >= (rect.x + rect.w) as isize {
                continue;
            }
            let a = u32::from(q[y * width + x]);
            let b = u32::from(q[ny as usize * width + nx as usize]);
            keys.push(a * levels as u32 + b);
            keys.push(b * levels as u32 + a);
        }
    }
    keys.sort_unstable();
}

fn matrix_from_keys(keys: &[u32], levels: usize) -> Glcm {
    let total = keys.len() as f64;
    let mut entries: Vec<(u16, u16, f64)> = Vec::new();
    let mut count = 0u32;
    for (n, &k) in keys.iter().enumerate() {
        count += 1;
        if keys.get(n + 1) != Some(&k) {
            let (i, j) = (k as usize / levels, k as usize % levels);
            entries.push((i as u16, j as u16, f64::from(count) / total));
            count = 0;
        }
    }
    Glcm { levels, entries }
}

/// Co-occurrence matrix of the pixels inside `rect` at distance `d` and
/// `angle`. Pairs whose second pixel leaves the rect are not counted.
pub fn glcm(raster: &Raster, rect: &Rect, levels: usize, d: usize, angle: Angle) -> Result<Glcm> {
    check_rect(rect, raster.width(), raster.height())?;
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidConfig(format!("GLCM levels must be in 2..=256, got {levels}")));
    }
    let q = quantize(raster, levels);
    let mut keys = Vec::new();
    pair_keys(&q, raster.width(), rect, levels, angle.offset(d), &mut keys);
    if keys.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no pixel pairs at distance {d} inside a {}x{} rect",
            rect.w, rect.h
        )));
    }
    Ok(matrix_from_keys(&keys, levels))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlcmStats {
    pub energy: f64,
    pub entropy: f64,
    pub contrast: f64,
    pub dissimilarity: f64,
    pub homogeneity: f64,
    pub variance: f64,
    pub shade: f64,
    pub correlation: f64,
}

impl GlcmStats {
    pub fn to_array(&self) -> [f64; STAT_COUNT] {
        [
            self.energy,
            self.entropy,
            self.contrast,
            self.dissimilarity,
            self.homogeneity,
            self.variance,
            self.shade,
            self.correlation,
        ]
    }
}

pub fn glcm_stats(m: &Glcm) -> GlcmStats {
    let mean: f64 = m.entries.iter().map(|&(i, _, p)| f64::from(i) * p).sum();
    let mut s = GlcmStats::default();
    let mut covariance = 0.0;
    for &(i, j, p) in &m.entries {
        let (fi, fj) = (f64::from(i), f64::from(j));
        let diff = fi - fj;
        s.energy += p * p;
        s.entropy -= p * p.ln();
        s.contrast += diff * diff * p;
        s.dissimilarity += diff.abs() * p;
        s.homogeneity += p / (1.0 + diff * diff);
        s.variance += (fi - mean) * (fi - mean) * p;
        s.shade += (fi + fj - 2.0 * mean).powi(3) * p;
        covariance += (fi - mean) * (fj - mean) * p;
    }
    s.correlation = if s.variance > 0.0 {
        covariance / s.variance
    } else {
        0.0
    };
    s
}

/// Statistics per distance, each averaged over the four angles.
fn features_of(q: &[u16], width: usize, rect: &Rect, params: &GlcmParams, keys: &mut Vec<u32>) -> Vec<f64> {
    let mut out = Vec::with_capacity(params.feature_len());
    for &d in &params.distances {
        let mut acc = [0.0; STAT_COUNT];
        for angle in Angle::ALL {
            pair_keys(q, width, rect, params.levels, angle.offset(d), keys);
            let stats = glcm_stats(&matrix_from_keys(keys, params.levels)).to_array();
            for (a, v) in acc.iter_mut().zip(stats) {
                *a += v;
            }
        }
        out.extend(acc.iter().map(|a| a / Angle::ALL.len() as f64));
    }
    out
}

/// Feature vector of the `params.window`-sided window centred on `(cx, cy)`.
pub fn window_features(raster: &Raster, cx: usize, cy: usize, params: &GlcmParams) -> Result<Vec<f64>> {
    params.validate()?;
    let w = params.window;
    let outside = || Error::WindowTouchesBorder { cx, cy, window: w };
    let x0 = cx.checked_sub((w - 1) / 2).ok_or_else(outside)?;
    let y0 = cy.checked_sub((w - 1) / 2).ok_or_else(outside)?;
    let rect = Rect::new(x0, y0, w, w);
    if !raster.contains(&rect) {
        return Err(outside());
    }
    let q = quantize(raster, params.levels);
    Ok(features_of(&q, raster.width(), &rect, params, &mut Vec::new()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlcmClass {
    pub class_id: u8,
    pub name: String,
    pub pixel_count: usize,
    /// Mean z-scored feature vector.
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlcmModel {
    pub params: GlcmParams,
    /// Per-feature mean and standard deviation of the training vectors.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub classes: Vec<GlcmClass>,
}

impl GlcmModel {
    pub fn window(&self) -> usize {
        self.params.window
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let n = self.params.feature_len();
        if self.mean.len() != n || self.std.len() != n {
            return Err(Error::CorruptModel(format!("normalization must have {n} entries")));
        }
        if self.std.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::CorruptModel("standard deviations must be positive".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::CorruptModel("model has no classes".into()));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if usize::from(c.class_id) != i + 1 {
                return Err(Error::CorruptModel(format!(
                    "class ids must run 1..={}, found {}",
                    self.classes.len(),
                    c.class_id
                )));
            }
            if c.centroid.len() != n {
                return Err(Error::CorruptModel(format!(
                    "class {} centroid has {} entries, expected {n}",
                    c.class_id,
                    c.centroid.len()
                )));
            }
        }
        Ok(())
    }

    fn standardize(&self, features: &mut [f64]) {
        for ((f, m), s) in features.iter_mut().zip(&self.mean).zip(&self.std) {
            *f = (*f - m) / s;
        }
    }

    /// Nearest centroid by Euclidean distance; ties go to the lowest id.
    pub fn nearest(&self, standardized: &[f64]) -> u8 {
        let mut best = (0u8, f64::INFINITY);
        for c in &self.classes {
            let d: f64 = c
                .centroid
                .iter()
                .zip(standardized)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best.1 {
                best = (c.class_id, d);
            }
        }
        best.0
    }

    pub fn to_toml_string(&self) -> Result<String> {
        to_toml(&GlcmFile {
            format_version: FORMAT_VERSION,
            window: self.params.window,
            glcm: GlcmSection {
                levels: self.params.levels,
                distances: self.params.distances.clone(),
                mean: self.mean.clone(),
                std: self.std.clone(),
            },
            classes: self
                .classes
                .iter()
                .map(|c| GlcmClassEntry {
                    id: c.class_id,
                    name: c.name.clone(),
                    pixel_count: c.pixel_count,
                    centroid: c.centroid.clone(),
                })
                .collect(),
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        GlcmModel::from_table(checked_table(text)?)
    }

    pub(crate) fn from_table(table: toml::Table) -> Result<Self> {
        let file: GlcmFile = from_table(table)?;
        let mut classes: Vec<GlcmClass> = file
            .classes
            .into_iter()
            .map(|c| GlcmClass {
                class_id: c.id,
                name: c.name,
                pixel_count: c.pixel_count,
                centroid: c.centroid,
            })
            .collect();
        classes.sort_by_key(|c| c.class_id);
        let model = GlcmModel {
            params: GlcmParams {
                window: file.window,
                levels: file.glcm.levels,
                distances: file.glcm.distances,
            },
            mean: file.glcm.mean,
            std: file.glcm.std,
            classes,
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GlcmFile {
    format_version: u32,
    window: usize,
    glcm: GlcmSection,
    #[serde(rename = "class")]
    classes: Vec<GlcmClassEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GlcmSection {
    levels: usize,
    distances: Vec<usize>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GlcmClassEntry {
    id: u8,
    #[serde(default)]
    name: String,
    pixel_count: usize,
    centroid: Vec<f64>,
}

/// Feature vectors of every training pixel whose window fits the raster.
fn training_features(
    q: &[u16],
    raster: &Raster,
    rects: &[Rect],
    params: &GlcmParams,
) -> Result<Vec<Vec<f64>>> {
    let interior = Interior::for_window(raster.width(), raster.height(), 0, params.window)?;
    let mut centres = Vec::new();
    for r in rects {
        check_rect(r, raster.width(), raster.height())?;
        centres.extend(r.pixels().filter(|&(x, y)| interior.contains(x, y)));
    }
    let w = params.window;
    Ok(centres
        .par_iter()
        .map_init(Vec::new, |keys, &(cx, cy)| {
            let rect = Rect::new(cx - (w - 1) / 2, cy - (w - 1) / 2, w, w);
            features_of(q, raster.width(), &rect, params, keys)
        })
        .collect())
}

/// Learns feature normalization and class centroids from training rects.
pub fn train_glcm(raster: &Raster, classes: &[TrainingClass], params: &GlcmParams) -> Result<GlcmModel> {
    params.validate()?;
    if classes.is_empty() {
        return Err(Error::Training("no training classes".into()));
    }
    let q = quantize(raster, params.levels);
    let mut per_class = Vec::with_capacity(classes.len());
    for class in classes {
        if class.rects.is_empty() {
            return Err(Error::Training(format!("class {} has no rectangles", class.class_id)));
        }
        let features = training_features(&q, raster, &class.rects, params)?;
        if features.is_empty() {
            return Err(Error::Training(format!(
                "class {}: no training pixel has a complete {w}x{w} window",
                class.class_id,
                w = params.window
            )));
        }
        per_class.push(features);
    }
    let n = params.feature_len();
    let total: usize = per_class.iter().map(Vec::len).sum();
    let mut mean = vec![0.0; n];
    for v in per_class.iter().flatten() {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total as f64);
    let mut std = vec![0.0; n];
    for v in per_class.iter().flatten() {
        for ((s, x), m) in std.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    for s in &mut std {
        *s = (*s / total as f64).sqrt();
        if !(*s > 0.0) {
            *s = 1.0;
        }
    }
    let mut model = GlcmModel {
        params: params.clone(),
        mean,
        std,
        classes: Vec::new(),
    };
    let mut out = Vec::with_capacity(classes.len());
    for (class, mut features) in classes.iter().zip(per_class) {
        let mut centroid = vec![0.0; n];
        for v in &mut features {
            model.standardize(v);
            for (c, x) in centroid.iter_mut().zip(v.iter()) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= features.len() as f64);
        out.push(GlcmClass {
            class_id: class.class_id,
            name: class.name.clone(),
            pixel_count: features.len(),
            centroid,
        });
    }
    out.sort_by_key(|c| c.class_id);
    model.classes = out;
    model.validate().map_err(|e| match e {
        Error::CorruptModel(msg) => Error::Training(msg),
        other => other,
    })?;
    Ok(model)
}

/// Labels every pixel whose window fits the raster; the rest stay 0.
pub fn classify_glcm(raster: &Raster, model: &GlcmModel, workers: usize) -> Result<LabelMask> {
    model.validate()?;
    let w = model.params.window;
    let interior = Interior::for_window(raster.width(), raster.height(), 0, w)?;
    let q = quantize(raster, model.params.levels);
    let width = raster.width();
    let mut mask = LabelMask::empty(width, raster.height());
    run_in_pool(workers, || {
        mask.labels_mut()
            .par_chunks_mut(width)
            .enumerate()
            .filter(|(y, _)| interior.rows.contains(y))
            .for_each_init(Vec::new, |keys, (cy, row)| {
                for cx in interior.cols.clone() {
                    let rect = Rect::new(cx - (w - 1) / 2, cy - (w - 1) / 2, w, w);
                    let mut f = features_of(&q, width, &rect, &model.params, keys);
                    model.standardize(&mut f);
                    row[cx] = model.nearest(&f);
                }
            });
        Ok(())
    })?;
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_window_stats() {
        let r = Raster::filled(9, 9, 8, 200).unwrap();
        let m = glcm(&r, &Rect::new(1, 1, 7, 7), 32, 1, Angle::Deg0).unwrap();
        assert_eq!(m.entries(), &[(25, 25, 1.0)]);
        let s = glcm_stats(&m);
        assert_eq!(s.energy, 1.0);
        assert_eq!(s.entropy, 0.0);
        assert_eq!(s.contrast, 0.0);
        assert_eq!(s.homogeneity, 1.0);
        assert_eq!(s.correlation, 0.0);
    }

    #[test]
    fn stripes_are_symmetric() {
        let r = Raster::from_fn(8, 8, 8, |x, _| if x % 2 == 0 { 0 } else { 255 }).unwrap();
        let m = glcm(&r, &Rect::new(0, 0, 8, 8), 2, 1, Angle::Deg0).unwrap();
        assert_eq!(m.to_dense(), vec![0.0, 0.5, 0.5, 0.0]);
        let s = glcm_stats(&m);
        assert_eq!(s.contrast, 1.0);
        assert_eq!(s.correlation, -1.0);
        let v = glcm(&r, &Rect::new(0, 0, 8, 8), 2, 1, Angle::Deg90).unwrap();
        assert_eq!(v.to_dense(), vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn quantization_levels() {
        assert_eq!(quantize_level(255, 8, 32), 31);
        assert_eq!(quantize_level(7, 8, 32), 0);
        assert_eq!(quantize_level(8, 8, 32), 1);
        assert_eq!(quantize_level(65535, 16, 64), 63);
    }

    #[test]
    fn params_validation() {
        assert!(GlcmParams::default().validate().is_ok());
        let p = GlcmParams {
            distances: vec![7],
            ..GlcmParams::default()
        };
        assert!(p.validate().is_err());
        let p = GlcmParams {
            levels: 1,
            ..GlcmParams::default()
        };
        assert!(p.validate().is_err());
    }
}
