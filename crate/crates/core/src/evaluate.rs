//! Accuracy assessment against a reference mask: confusion matrix, overall
//! accuracy, Cohen's kappa and per-class errors.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{LabelMask, Rect};

/// Class-by-class counts. Rows are reference classes, columns predicted
/// classes; class `k` sits at index `k - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    /// Builds a matrix from row-major counts.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch("confusion matrix must be square".into()));
        }
        Ok(ConfusionMatrix {
            classes: k,
            counts: rows.concat(),
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Count of pixels of reference class `reference` predicted as `predicted` (both 1-based).
    pub fn get(&self, reference: usize, predicted: usize) -> u64 {
        self.counts[(reference - 1) * self.classes + predicted - 1]
    }

    pub fn add(&mut self, reference: usize, predicted: usize, n: u64) {
        self.counts[(reference - 1) * self.classes + predicted - 1] += n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|i| self.counts[i * self.classes + i]).sum()
    }

    pub fn row_total(&self, reference: usize) -> u64 {
        let start = (reference - 1) * self.classes;
        self.counts[start..start + self.classes].iter().sum()
    }

    pub fn column_total(&self, predicted: usize) -> u64 {
        (0..self.classes)
            .map(|r| self.counts[r * self.classes + predicted - 1])
            .sum()
    }

    fn non_empty_total(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::EmptyMatrix),
            n => Ok(n as f64),
        }
    }

    pub fn overall_accuracy(&self) -> Result<f64> {
        Ok(self.trace() as f64 / self.non_empty_total()?)
    }

    /// Chance agreement `Σ row_k·col_k / total²`.
    pub fn chance_agreement(&self) -> Result<f64> {
        let n = self.non_empty_total()?;
        let sum: f64 = (1..=self.classes)
            .map(|k| self.row_total(k) as f64 * self.column_total(k) as f64)
            .sum();
        Ok(sum / (n * n))
    }

    pub fn kappa(&self) -> Result<f64> {
        let po = self.overall_accuracy()?;
        let pe = self.chance_agreement()?;
        if pe >= 1.0 {
            return Err(Error::UndefinedKappa);
        }
        Ok((po - pe) / (1.0 - pe))
    }
}

/// Counts pixels labelled in both masks and outside every `exclude` rect.
/// The class count is the largest label seen in either mask.
pub fn confusion(predicted: &LabelMask, reference: &LabelMask, exclude: &[Rect]) -> Result<ConfusionMatrix> {
    if predicted.width() != reference.width() || predicted.height() != reference.height() {
        return Err(Error::DimensionMismatch(format!(
            "predicted mask is {}x{}, reference is {}x{}",
            predicted.width(),
            predicted.height(),
            reference.width(),
            reference.height()
        )));
    }
    let k = usize::from(predicted.max_label().max(reference.max_label()));
    let width = reference.width();
    let counts = reference
        .labels()
        .par_chunks(width)
        .zip(predicted.labels().par_chunks(width))
        .enumerate()
        .fold(
            || vec![0u64; k * k],
            |mut acc, (y, (r_row, p_row))| {
                for (x, (&r, &p)) in r_row.iter().zip(p_row).enumerate() {
                    if r > 0 && p > 0 && !exclude.iter().any(|e| e.contains_point(x, y)) {
                        acc[(usize::from(r) - 1) * k + usize::from(p) - 1] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; k * k],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(ConfusionMatrix { classes: k, counts })
}

/// Fraction of reference-labelled, non-excluded pixels that received a
/// prediction.
pub fn coverage(predicted: &LabelMask, reference: &LabelMask, exclude: &[Rect]) -> Result<f64> {
    if predicted.width() != reference.width() || predicted.height() != reference.height() {
        return Err(Error::DimensionMismatch("mask sizes differ".into()));
    }
    let (mut labelled, mut covered) = (0u64, 0u64);
    for y in 0..reference.height() {
        for x in 0..reference.width() {
            if reference.get(x, y) == 0 || exclude.iter().any(|e| e.contains_point(x, y)) {
                continue;
            }
            labelled += 1;
            if predicted.get(x, y) > 0 {
                covered += 1;
            }
        }
    }
    if labelled == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(covered as f64 / labelled as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassErrors {
    pub class_id: usize,
    pub reference_total: u64,
    pub predicted_total: u64,
    pub correct: u64,
    /// Share of the class's reference pixels labelled as something else.
    pub omission: Option<f64>,
    /// Share of the pixels predicted as the class that belong elsewhere.
    pub commission: Option<f64>,
}

pub fn class_errors(m: &ConfusionMatrix) -> Vec<ClassErrors> {
    (1..=m.classes())
        .map(|k| {
            let (r, p, c) = (m.row_total(k), m.column_total(k), m.get(k, k));
            let share = |total: u64| (total > 0).then(|| (total - c) as f64 / total as f64);
            ClassErrors {
                class_id: k,
                reference_total: r,
                predicted_total: p,
                correct: c,
                omission: share(r),
                commission: share(p),
            }
        })
        .collect()
}

/// Everything the report prints.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub matrix: ConfusionMatrix,
    pub overall_accuracy: f64,
    /// `None` when chance agreement is 1.
    pub kappa: Option<f64>,
    pub classes: Vec<ClassErrors>,
    pub coverage: f64,
}

pub fn assess(predicted: &LabelMask, reference: &LabelMask, exclude: &[Rect]) -> Result<Assessment> {
    let matrix = confusion(predicted, reference, exclude)?;
    let overall_accuracy = matrix.overall_accuracy()?;
    let kappa = match matrix.kappa() {
        Ok(k) => Some(k),
        Err(Error::UndefinedKappa) => None,
        Err(e) => return Err(e),
    };
    Ok(Assessment {
        classes: class_errors(&matrix),
        coverage: coverage(predicted, reference, exclude)?,
        matrix,
        overall_accuracy,
        kappa,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
}

impl Assessment {
    pub fn to_text(&self) -> String {
        let k = self.matrix.classes();
        let mut s = String::new();
        let _ = writeln!(s, "confusion matrix (rows reference, columns predicted)");
        let _ = write!(s, "{:>8}", "");
        for p in 1..=k {
            let _ = write!(s, " {:>10}", p);
        }
        s.push('\n');
        for r in 1..=k {
            let _ = write!(s, "{:>8}", r);
            for p in 1..=k {
                let _ = write!(s, " {:>10}", self.matrix.get(r, p));
            }
            s.push('\n');
        }
        let _ = writeln!(s, "class  reference  predicted  omission  commission");
        for c in &self.classes {
            let _ = writeln!(
                s,
                "{:>5}  {:>9}  {:>9}  {:>8}  {:>10}",
                c.class_id,
                c.reference_total,
                c.predicted_total,
                opt(c.omission),
                opt(c.commission)
            );
        }
        let _ = writeln!(s, "overall_accuracy {:.6}", self.overall_accuracy);
        let _ = writeln!(s, "kappa {}", opt(self.kappa));
        let _ = writeln!(s, "coverage {:.6}", self.coverage);
        s
    }

    /// Long-format CSV: `section,reference,predicted,value`.
    pub fn to_csv(&self) -> String {
        let k = self.matrix.classes();
        let mut s = String::from("section,reference,predicted,value\n");
        for r in 1..=k {
            for p in 1..=k {
                let _ = writeln!(s, "matrix,{r},{p},{}", self.matrix.get(r, p));
            }
        }
        for c in &self.classes {
            let _ = writeln!(s, "omission,{},,{}", c.class_id, opt(c.omission));
            let _ = writeln!(s, "commission,{},,{}", c.class_id, opt(c.commission));
        }
        let _ = writeln!(s, "overall_accuracy,,,{:.6}", self.overall_accuracy);
        let _ = writeln!(s, "kappa,,,{}", opt(self.kappa));
        let _ = writeln!(s, "coverage,,,{:.6}", self.coverage);
        s
    }
}
