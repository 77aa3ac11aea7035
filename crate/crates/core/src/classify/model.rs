//! Class histogram models built from training rectangles.

use crate::descriptors::{
    check_size, concat, run_lengths, DescriptorConfig, Histogram, PixelCoder, Sampler,
};
use crate::descriptors::{train_var_boundaries, ComponentKind};
use crate::error::{Error, Result};
use crate::raster::{Raster, Rect};

/// Default window side.
pub const DEFAULT_WINDOW: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    pub class_id: u8,
    pub name: String,
    pub histogram: Histogram,
    pub pixel_count: usize,
}

/// The classifier's prior knowledge: one histogram per class plus the
/// descriptor configuration (including trained VAR boundaries) and window.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    config: DescriptorConfig,
    window: usize,
    classes: Vec<ClassModel>,
}

impl ModelSet {
    pub fn new(config: DescriptorConfig, window: usize, mut classes: Vec<ClassModel>) -> Result<Self> {
        classes.sort_by_key(|c| c.class_id);
        let set = ModelSet {
            config,
            window,
            classes,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.config.needs_var_training() {
            return Err(Error::Training("VAR boundaries missing from model".into()));
        }
        if self.window == 0 {
            return Err(Error::Training("window side must be positive".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::Training("model has no classes".into()));
        }
        let bins = self.config.bin_count();
        let layout = self.config.layout_id();
        for (i, class) in self.classes.iter().enumerate() {
            if usize::from(class.class_id) != i + 1 {
                return Err(Error::Training(format!(
                    "class ids must run 1..={} without gaps, found {}",
                    self.classes.len(),
                    class.class_id
                )));
            }
            if class.histogram.len() != bins || class.histogram.layout_id() != layout {
                return Err(Error::LayoutMismatch(format!(
                    "class {} histogram has {} bins, layout needs {bins}",
                    class.class_id,
                    class.histogram.len()
                )));
            }
            if class.pixel_count == 0 {
                return Err(Error::Training(format!("class {} has no pixels", class.class_id)));
            }
            if !class.histogram.is_normalized() {
                return Err(Error::Training(format!(
                    "class {} histogram is not normalized",
                    class.class_id
                )));
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &DescriptorConfig {
        &self.config
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn classes(&self) -> &[ClassModel] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// Training rectangles of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingClass {
    pub class_id: u8,
    pub name: String,
    pub rects: Vec<Rect>,
}

impl TrainingClass {
    pub fn new(class_id: u8, name: impl Into<String>, rects: Vec<Rect>) -> Self {
        TrainingClass {
            class_id,
            name: name.into(),
            rects,
        }
    }
}

fn check_rects(raster: &Raster, rects: &[Rect]) -> Result<()> {
    if rects.is_empty() {
        return Err(Error::Training("no training rectangles".into()));
    }
    for r in rects {
        crate::raster::check_rect(r, raster.width(), raster.height())?;
    }
    Ok(())
}

/// Rect pixels whose neighbourhood at `radius` lies inside the raster,
/// pooled over all rects (overlaps count once per rect).
fn training_pixels<'a>(
    raster: &'a Raster,
    rects: &'a [Rect],
    radius: u32,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    let r = radius as usize;
    let (w, h) = (raster.width(), raster.height());
    rects
        .iter()
        .flat_map(Rect::pixels)
        .filter(move |&(x, y)| x >= r && y >= r && x + r < w && y + r < h)
}

/// Pools the per-pixel codes of all training rects into one normalized
/// histogram; multi-part descriptors concatenate their per-part histograms.
pub fn build_class_model(
    raster: &Raster,
    rects: &[Rect],
    config: &DescriptorConfig,
    class_id: u8,
) -> Result<ClassModel> {
    config.validate()?;
    let radius = config.max_radius();
    check_size(raster, radius)?;
    check_rects(raster, rects)?;
    let mut parts = Vec::new();
    let mut pixel_count = 0;
    for component in config.components() {
        let mut coder = PixelCoder::new(&component, config, raster.width())?;
        let mut codes: Vec<u32> = training_pixels(raster, rects, radius)
            .map(|(x, y)| coder.code(raster.pixels(), x, y))
            .collect();
        pixel_count = codes.len();
        if pixel_count == 0 {
            return Err(Error::Training(format!(
                "class {class_id}: no training pixel has a complete neighbourhood"
            )));
        }
        let (indices, counts) = run_lengths(&mut codes);
        parts.push(Histogram::from_counts(
            config.component_bin_count(&component),
            config.component_layout_id(&component),
            indices,
            &counts,
            pixel_count as f64,
        ));
    }
    Ok(ClassModel {
        class_id,
        name: String::new(),
        histogram: concat(&parts)?,
        pixel_count,
    })
}

/// Learns per-scale VAR boundaries from the training pixels of all classes.
/// Returns the config unchanged when it has no VAR part.
pub fn train_var(
    raster: &Raster,
    classes: &[TrainingClass],
    config: &DescriptorConfig,
) -> Result<DescriptorConfig> {
    let mut trained = config.clone();
    if !config.kind.uses_var() {
        return Ok(trained);
    }
    let radius = config.max_radius();
    check_size(raster, radius)?;
    let mut boundaries = Vec::with_capacity(config.scales.len());
    for component in config.components() {
        if component.kind != ComponentKind::Var {
            continue;
        }
        let mut sampler = Sampler::new(component.scale.points, component.scale.radius, raster.width())?;
        let mut values = Vec::new();
        for class in classes {
            check_rects(raster, &class.rects)?;
            values.extend(
                training_pixels(raster, &class.rects, radius)
                    .map(|(x, y)| sampler.variance(raster.pixels(), x, y)),
            );
        }
        boundaries.push(train_var_boundaries(&values, config.var_bins)?);
    }
    trained.var_boundaries = boundaries;
    trained.validate()?;
    Ok(trained)
}

/// Trains VAR boundaries if needed, then one model per class.
pub fn train_model_set(
    raster: &Raster,
    classes: &[TrainingClass],
    config: &DescriptorConfig,
    window: usize,
) -> Result<ModelSet> {
    if classes.is_empty() {
        return Err(Error::Training("no training classes".into()));
    }
    let config = if config.needs_var_training() {
        train_var(raster, classes, config)?
    } else {
        config.clone()
    };
    let models = classes
        .iter()
        .map(|class| {
            let mut model = build_class_model(raster, &class.rects, &config, class.class_id)?;
            model.name = class.name.clone();
            Ok(model)
        })
        .collect::<Result<Vec<_>>>()?;
    ModelSet::new(config, window, models)
}
