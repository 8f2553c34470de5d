//! Classification metrics: per-class precision/recall/F1 from confusion
//! counts, macro averages, aggregation across data splits (mean and
//! population standard deviation) and plain-text comparison tables.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("prediction and gold lengths differ ({preds} vs {gold})")]
    LengthMismatch { preds: usize, gold: usize },
    #[error("class index {index} out of range for {n_classes} classes")]
    ClassOutOfRange { index: usize, n_classes: usize },
    #[error("reports disagree on class count ({0} vs {1})")]
    ShapeMismatch(usize, usize),
    #[error("cannot aggregate zero reports")]
    NoReports,
}

/// Per-class true-positive / false-positive / false-negative tallies.
/// Invariant: Σ true_pos + Σ false_neg equals the number of gold examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: Vec<u64>,
    pub false_pos: Vec<u64>,
    pub false_neg: Vec<u64>,
}

impl ConfusionCounts {
    pub fn n_classes(&self) -> usize {
        self.true_pos.len()
    }
}

pub fn confusion(
    preds: &[usize],
    gold: &[usize],
    n_classes: usize,
) -> Result<ConfusionCounts, EvalError> {
    if preds.len() != gold.len() {
        return Err(EvalError::LengthMismatch { preds: preds.len(), gold: gold.len() });
    }
    let mut counts = ConfusionCounts {
        true_pos: vec![0; n_classes],
        false_pos: vec![0; n_classes],
        false_neg: vec![0; n_classes],
    };
    for (&p, &g) in preds.iter().zip(gold) {
        for index in [p, g] {
            if index >= n_classes {
                return Err(EvalError::ClassOutOfRange { index, n_classes });
            }
        }
        if p == g {
            counts.true_pos[p] += 1;
        } else {
            counts.false_pos[p] += 1;
            counts.false_neg[g] += 1;
        }
    }
    Ok(counts)
}

/// One precision/recall/F1 triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class metrics plus their unweighted means. A class with no gold
/// examples and no predictions scores 0, not 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<Prf>,
    pub macro_avg: Prf,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn macro_f1(counts: &ConfusionCounts) -> MetricsReport {
    let per_class: Vec<Prf> = (0..counts.n_classes())
        .map(|c| {
            let tp = counts.true_pos[c];
            let precision = ratio(tp, tp + counts.false_pos[c]);
            let recall = ratio(tp, tp + counts.false_neg[c]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            Prf { precision, recall, f1 }
        })
        .collect();
    let n = per_class.len().max(1) as f64;
    let macro_avg = Prf {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
    };
    MetricsReport { per_class, macro_avg }
}

/// Population standard deviation (divide by n, not n-1).
pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

/// Mean and spread of several per-split reports of identical shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub mean: MetricsReport,
    /// Population standard deviation, elementwise.
    pub std: MetricsReport,
    pub splits: usize,
}

pub fn aggregate_splits(reports: &[MetricsReport]) -> Result<AggregateReport, EvalError> {
    let first = reports.first().ok_or(EvalError::NoReports)?;
    let n_classes = first.per_class.len();
    for r in reports {
        if r.per_class.len() != n_classes {
            return Err(EvalError::ShapeMismatch(n_classes, r.per_class.len()));
        }
    }

    let stat = |pick: &dyn Fn(&MetricsReport) -> Prf| {
        let ps: Vec<f64> = reports.iter().map(|r| pick(r).precision).collect();
        let rs: Vec<f64> = reports.iter().map(|r| pick(r).recall).collect();
        let fs: Vec<f64> = reports.iter().map(|r| pick(r).f1).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        (
            Prf { precision: mean(&ps), recall: mean(&rs), f1: mean(&fs) },
            Prf {
                precision: population_std(&ps),
                recall: population_std(&rs),
                f1: population_std(&fs),
            },
        )
    };

    let mut mean_classes = Vec::with_capacity(n_classes);
    let mut std_classes = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let (m, s) = stat(&|r: &MetricsReport| r.per_class[c]);
        mean_classes.push(m);
        std_classes.push(s);
    }
    let (macro_mean, macro_std) = stat(&|r: &MetricsReport| r.macro_avg);

    Ok(AggregateReport {
        mean: MetricsReport { per_class: mean_classes, macro_avg: macro_mean },
        std: MetricsReport { per_class: std_classes, macro_avg: macro_std },
        splits: reports.len(),
    })
}

fn prf_json(m: &Prf) -> serde_json::Value {
    serde_json::json!({"p": m.precision, "r": m.recall, "f1": m.f1})
}

/// Machine-readable report for one task.
pub fn metrics_json(task: &str, class_names: &[&str], agg: &AggregateReport) -> serde_json::Value {
    assert_eq!(class_names.len(), agg.mean.per_class.len(), "class name count");
    let classes = |report: &MetricsReport| -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = class_names
            .iter()
            .zip(&report.per_class)
            .map(|(name, m)| (name.to_string(), prf_json(m)))
            .collect();
        serde_json::Value::Object(map)
    };
    serde_json::json!({
        "task": task,
        "per_class": classes(&agg.mean),
        "macro": prf_json(&agg.mean.macro_avg),
        "splits": agg.splits,
        "std": {
            "per_class": classes(&agg.std),
            "macro": prf_json(&agg.std.macro_avg),
        },
    })
}

/// Aligned plain-text table: one row per class plus the macro average,
/// each cell `mean (std)`.
pub fn render_table(title: &str, class_names: &[&str], agg: &AggregateReport) -> String {
    assert_eq!(class_names.len(), agg.mean.per_class.len(), "class name count");
    let cell = |mean: f64, std: f64| format!("{mean:.3} ({std:.3})");
    let mut rows: Vec<[String; 4]> = Vec::new();
    rows.push([
        title.to_string(),
        "P".to_string(),
        "R".to_string(),
        "F1".to_string(),
    ]);
    let pairs = class_names
        .iter()
        .zip(agg.mean.per_class.iter().zip(&agg.std.per_class))
        .map(|(name, (m, s))| (name.to_string(), *m, *s))
        .chain(std::iter::once((
            "Macro Avg".to_string(),
            agg.mean.macro_avg,
            agg.std.macro_avg,
        )));
    for (name, m, s) in pairs {
        rows.push([
            name,
            cell(m.precision, s.precision),
            cell(m.recall, s.recall),
            cell(m.f1, s.f1),
        ]);
    }

    let mut widths = [0usize; 4];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &rows {
        let mut line = format!("{:<w$}", row[0], w = widths[0]);
        for (cell, w) in row[1..].iter().zip(&widths[1..]) {
            line.push_str(&format!("  {cell:>w$}"));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out.push_str(&format!("(mean over {} splits, population std in brackets)\n", agg.splits));
    out
}
