//! Timing harness comparing the naive and incremental classifiers.
//!
//! Every condition first classifies a cropped region with both paths and
//! compares the masks; only an equivalent condition is timed.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::classify::{classify_image_fast_with, classify_image_naive_with, train_model_set, Interior, ModelSet};
use crate::descriptors::{DescriptorConfig, DescriptorKind, Scale};
use crate::error::{Error, Result};
use crate::raster::{LabelMask, Raster, Rect};
use crate::synth::Recipe;

/// Default side of the region used for the equivalence check.
pub const DEFAULT_CHECK_SIZE: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimedPath {
    Naive,
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub kind: DescriptorKind,
    pub scales: Vec<Scale>,
    pub window: usize,
    /// Side of the square synthetic raster.
    pub size: usize,
    /// Paths to time; both by default.
    #[serde(default = "both_paths")]
    pub paths: Vec<TimedPath>,
    #[serde(default)]
    pub check_size: Option<usize>,
}

fn both_paths() -> Vec<TimedPath> {
    vec![TimedPath::Naive, TimedPath::Fast]
}

impl Condition {
    pub fn new(kind: DescriptorKind, scales: Vec<Scale>, window: usize, size: usize) -> Self {
        Condition {
            kind,
            scales,
            window,
            size,
            paths: both_paths(),
            check_size: None,
        }
    }

    fn scales_label(&self) -> String {
        self.scales
            .iter()
            .map(|s| format!("({s})"))
            .collect::<Vec<_>>()
            .join("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub repetitions: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "condition")]
    pub conditions: Vec<Condition>,
}

fn default_workers() -> usize {
    1
}

impl Plan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: Plan = toml::from_str(text).map_err(|e| Error::Plan(e.message().to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Plan::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 3 {
            return Err(Error::Plan(format!(
                "at least 3 repetitions are needed for a median, got {}",
                self.repetitions
            )));
        }
        if self.conditions.is_empty() {
            return Err(Error::Plan("plan has no conditions".into()));
        }
        for c in &self.conditions {
            let config = DescriptorConfig::new(c.kind, c.scales.clone()).map_err(|e| Error::Plan(e.to_string()))?;
            Interior::for_window(c.size, c.size, config.max_radius() as usize, c.window)
                .map_err(|e| Error::Plan(e.to_string()))?;
            if c.paths.is_empty() {
                return Err(Error::Plan("condition times no path".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    /// First differing pixel in row-major order, in raster coordinates.
    Diverged { x: usize, y: usize, naive: u8, fast: u8 },
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Equivalent => f.write_str("equivalent"),
            Verdict::Diverged { x, y, naive, fast } => {
                write!(f, "diverged at ({x} {y}) naive={naive} fast={fast}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub condition: Condition,
    pub workers: usize,
    pub repetitions: usize,
    /// Median seconds, `None` when the path was not timed.
    pub naive: Option<f64>,
    pub fast: Option<f64>,
    pub verdict: Verdict,
}

impl BenchRow {
    pub fn speedup(&self) -> Option<f64> {
        match (self.naive, self.fast) {
            (Some(n), Some(f)) if f > 0.0 => Some(n / f),
            _ => None,
        }
    }
}

/// Classifier signature shared by both paths: raster, models, workers.
pub type Classifier = fn(&Raster, &ModelSet, usize) -> Result<LabelMask>;

/// First pixel where the masks differ.
pub fn first_difference(naive: &LabelMask, fast: &LabelMask) -> Option<(usize, usize, u8, u8)> {
    naive
        .labels()
        .iter()
        .zip(fast.labels())
        .position(|(a, b)| a != b)
        .map(|i| {
            let (x, y) = (i % naive.width(), i / naive.width());
            (x, y, naive.labels()[i], fast.labels()[i])
        })
}

/// Compares the two classifiers on a centred `side`×`side` crop.
pub fn check_equivalence(
    raster: &Raster,
    models: &ModelSet,
    side: usize,
    workers: usize,
    naive: Classifier,
    fast: Classifier,
) -> Result<Verdict> {
    let side = side.min(raster.width()).min(raster.height());
    let rect = Rect::new((raster.width() - side) / 2, (raster.height() - side) / 2, side, side);
    let crop = raster.crop(&rect)?;
    let a = naive(&crop, models, workers)?;
    let b = fast(&crop, models, workers)?;
    Ok(match first_difference(&a, &b) {
        None => Verdict::Equivalent,
        Some((x, y, n, f)) => Verdict::Diverged {
            x: x + rect.x,
            y: y + rect.y,
            naive: n,
            fast: f,
        },
    })
}

/// Median wall time of `repetitions` calls of `f`.
pub fn median_time(repetitions: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut times: Vec<Duration> = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed());
    }
    times.sort();
    let n = times.len();
    let median = if n % 2 == 1 {
        times[n / 2].as_secs_f64()
    } else {
        (times[n / 2 - 1].as_secs_f64() + times[n / 2].as_secs_f64()) / 2.0
    };
    Ok(median)
}

/// Synthetic raster and trained models for one condition.
pub fn prepare(condition: &Condition, seed: u64) -> Result<(Raster, ModelSet)> {
    let mosaic = Recipe::standard(condition.size, seed).generate()?;
    let config = DescriptorConfig::new(condition.kind, condition.scales.clone())?;
    let models = train_model_set(&mosaic.raster, &mosaic.training, &config, condition.window)?;
    Ok((mosaic.raster, models))
}

pub fn run_condition(
    condition: &Condition,
    plan: &Plan,
    naive: Classifier,
    fast: Classifier,
) -> Result<BenchRow> {
    let (raster, models) = prepare(condition, plan.seed)?;
    let reach = 2 * models.config().max_radius() as usize + condition.window;
    let side = condition.check_size.unwrap_or(DEFAULT_CHECK_SIZE).max(reach);
    let verdict = check_equivalence(&raster, &models, side, plan.workers, naive, fast)?;
    let mut row = BenchRow {
        condition: condition.clone(),
        workers: plan.workers,
        repetitions: plan.repetitions,
        naive: None,
        fast: None,
        verdict,
    };
    if verdict != Verdict::Equivalent {
        return Ok(row);
    }
    if condition.paths.contains(&TimedPath::Naive) {
        row.naive = Some(median_time(plan.repetitions, || {
            naive(&raster, &models, plan.workers).map(drop)
        })?);
    }
    if condition.paths.contains(&TimedPath::Fast) {
        row.fast = Some(median_time(plan.repetitions, || {
            fast(&raster, &models, plan.workers).map(drop)
        })?);
    }
    Ok(row)
}

pub fn run_benchmark(plan: &Plan) -> Result<Vec<BenchRow>> {
    run_benchmark_with(plan, classify_image_naive_with, classify_image_fast_with)
}

/// Runs every condition in order with the given classifiers.
pub fn run_benchmark_with(plan: &Plan, naive: Classifier, fast: Classifier) -> Result<Vec<BenchRow>> {
    plan.validate()?;
    plan.conditions
        .iter()
        .map(|c| run_condition(c, plan, naive, fast))
        .collect()
}

pub const CSV_HEADER: &str = "kind,scales,window,size,workers,repetitions,naive_s,fast_s,speedup,verdict";

pub fn report_csv(rows: &[BenchRow]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    let secs = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.3}"));
    for r in rows {
        let c = &r.condition;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            c.kind,
            c.scales_label().replace(',', ";"),
            c.window,
            c.size,
            r.workers,
            r.repetitions,
            secs(r.naive),
            secs(r.fast),
            r.speedup().map_or_else(String::new, |v| format!("{v:.2}")),
            r.verdict
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_plan() -> Plan {
        Plan {
            repetitions: 3,
            workers: 1,
            seed: 5,
            conditions: vec![Condition::new(DescriptorKind::Wld, vec![Scale::new(8, 1)], 8, 64)],
        }
    }

    #[test]
    fn smoke_run() {
        let rows = run_benchmark(&tiny_plan()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].verdict, Verdict::Equivalent);
        assert!(rows[0].speedup().is_some());
        let csv = report_csv(&rows);
        assert!(csv.starts_with(CSV_HEADER));
        assert!(csv.contains("wld,(8;1),8,64,1,3,"));
    }

    fn broken(raster: &Raster, models: &ModelSet, workers: usize) -> Result<LabelMask> {
        let mut m = classify_image_fast_with(raster, models, workers)?;
        let (x, y) = (raster.width() / 2, raster.height() / 2);
        let l = m.get(x, y);
        m.set(x, y, l % 5 + 1);
        Ok(m)
    }

    #[test]
    fn corrupted_fast_path_is_reported() {
        let rows = run_benchmark_with(&tiny_plan(), classify_image_naive_with, broken).unwrap();
        assert!(matches!(rows[0].verdict, Verdict::Diverged { x: 32, y: 32, .. }));
        assert_eq!(rows[0].fast, None);
        assert!(report_csv(&rows).contains("diverged at (32 32)"));
    }

    #[test]
    fn plan_validation() {
        let mut p = tiny_plan();
        p.repetitions = 2;
        assert!(p.validate().is_err());
        assert!(matches!(Plan::from_toml_str("repetitions = ["), Err(Error::Plan(_))));
        let text = "repetitions = 3\n[[condition]]\nkind = \"wld\"\nscales = [{ points = 8, radius = 1 }]\nwindow = 8\nsize = 64\n";
        assert_eq!(Plan::from_toml_str(text).unwrap().conditions.len(), 1);
    }
}
