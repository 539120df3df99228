//! Confusion matrices, one-vs-rest metric suites and report rendering.
//!
//! Every ratio whose denominator is zero evaluates to 0 and records the
//! metric name in the suite's `degenerate` list.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], class_names: &[String]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let c = class_names.len();
    let mut counts = vec![vec![0u64; c]; c];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let label = t.max(p);
        if label >= c {
            return Err(Error::LabelOutOfRange { label, classes: c });
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        class_names: class_names.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl BinaryCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// One-vs-rest reduction for `class`.
pub fn binary_counts(cm: &ConfusionMatrix, class: usize) -> Result<BinaryCounts> {
    let c = cm.n_classes();
    if class >= c {
        return Err(Error::LabelOutOfRange { label: class, classes: c });
    }
    let tp = cm.counts[class][class];
    let fn_: u64 = (0..c).filter(|&j| j != class).map(|j| cm.counts[class][j]).sum();
    let fp: u64 = (0..c).filter(|&i| i != class).map(|i| cm.counts[i][class]).sum();
    let tn = cm.total() - tp - fn_ - fp;
    Ok(BinaryCounts { tp, fp, tn, fn_ })
}

/// The six reported metrics in table order.
pub const METRIC_NAMES: [&str; 6] = ["accuracy", "sensitivity", "specificity", "precision", "f_mean", "g_mean"];
const METRIC_LABELS: [&str; 6] = ["accuracy", "sensitivity", "specificity", "precision", "F-mean", "g-mean"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSuite {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f_mean: f64,
    pub g_mean: f64,
    /// Metrics that hit a 0/0 and were set to 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

impl MetricSuite {
    pub fn values(&self) -> [f64; 6] {
        [
            self.accuracy,
            self.sensitivity,
            self.specificity,
            self.precision,
            self.f_mean,
            self.g_mean,
        ]
    }
}

pub fn metric_suite(b: &BinaryCounts) -> Result<MetricSuite> {
    if b.total() == 0 {
        return Err(Error::EmptyCounts);
    }
    let mut degenerate = Vec::new();
    let mut ratio = |name: &str, num: u64, den: u64| {
        if den == 0 {
            degenerate.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio("accuracy", b.tp + b.tn, (b.tp + b.fp) + (b.tn + b.fn_));
    let tpr = ratio("sensitivity", b.tp, b.tp + b.fn_);
    let tnr = ratio("specificity", b.tn, b.fp + b.tn);
    let precision = ratio("precision", b.tp, b.tp + b.fp);
    let f_mean = ratio("f_mean", 2 * b.tp, 2 * b.tp + b.fp + b.fn_);
    Ok(MetricSuite {
        accuracy,
        sensitivity: tpr,
        specificity: tnr,
        precision,
        f_mean,
        g_mean: (tpr * tnr).sqrt(),
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub counts: BinaryCounts,
    pub metrics: MetricSuite,
}

/// Per-class suites plus their unweighted means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: MetricSuite,
}

pub fn macro_report(cm: &ConfusionMatrix) -> Result<MacroMetrics> {
    if cm.n_classes() == 0 || cm.total() == 0 {
        return Err(Error::EmptyCounts);
    }
    let per_class = (0..cm.n_classes())
        .map(|c| {
            let counts = binary_counts(cm, c)?;
            Ok(ClassMetrics {
                class: cm.class_names[c].clone(),
                counts,
                metrics: metric_suite(&counts)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = per_class.len() as f64;
    let mut sums = [0.0; 6];
    for pc in &per_class {
        for (s, v) in sums.iter_mut().zip(pc.metrics.values()) {
            *s += v;
        }
    }
    let [accuracy, sensitivity, specificity, precision, f_mean, g_mean] = sums.map(|s| s / k);
    let mut degenerate: Vec<String> = per_class
        .iter()
        .flat_map(|pc| pc.metrics.degenerate.iter().map(move |m| format!("{}:{}", pc.class, m)))
        .collect();
    degenerate.dedup();
    Ok(MacroMetrics {
        per_class,
        macro_avg: MetricSuite {
            accuracy,
            sensitivity,
            specificity,
            precision,
            f_mean,
            g_mean,
            degenerate,
        },
    })
}

/// Evaluation of one classifier on one test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classifier: String,
    pub averaging: String,
    pub seed: u64,
    pub n_test: u64,
    pub hyperparameters: BTreeMap<String, String>,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: MetricSuite,
}

impl EvalReport {
    pub fn new(classifier: &str, cm: ConfusionMatrix, hyperparameters: BTreeMap<String, String>, seed: u64) -> Result<Self> {
        let m = macro_report(&cm)?;
        Ok(Self {
            classifier: classifier.to_string(),
            averaging: "macro".to_string(),
            seed,
            n_test: cm.total(),
            hyperparameters,
            confusion: cm,
            per_class: m.per_class,
            macro_avg: m.macro_avg,
        })
    }
}

/// Several classifiers evaluated on the same split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reports: Vec<EvalReport>,
}

/// Table with the six metric rows and one column per report, 5 decimals.
pub fn render_comparison(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let averaging = reports.first().map_or("macro", |r| r.averaging.as_str());
    let _ = writeln!(out, "Classifier comparison ({averaging}-averaged over classes)");
    let _ = write!(out, "{:<12}", "");
    for r in reports {
        let _ = write!(out, "  {:>9}", r.classifier);
    }
    out.push('\n');
    for (i, label) in METRIC_LABELS.iter().enumerate() {
        let _ = write!(out, "{label:<12}");
        for r in reports {
            let _ = write!(out, "  {:>9.5}", r.macro_avg.values()[i]);
        }
        out.push('\n');
    }
    out
}

/// Renders serialized JSON of either a [`Comparison`] or a single [`EvalReport`].
pub fn render_json(text: &str) -> Result<String> {
    if let Ok(c) = serde_json::from_str::<Comparison>(text) {
        return Ok(render_comparison(&c.reports));
    }
    let r: EvalReport = serde_json::from_str(text)?;
    Ok(render_report(&r))
}

/// Single-classifier report: confusion matrix, per-class metrics and the macro row.
pub fn render_report(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Classifier: {}  (seed {}, {} test samples)", r.classifier, r.seed, r.n_test);
    if !r.hyperparameters.is_empty() {
        let hp: Vec<String> = r.hyperparameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "Hyperparameters: {}", hp.join(", "));
    }
    let width = r.confusion.class_names.iter().map(String::len).max().unwrap_or(0).max(10);
    let _ = writeln!(out, "\nConfusion matrix (rows = true, columns = predicted)");
    let _ = write!(out, "{:<width$}", "");
    for name in &r.confusion.class_names {
        let _ = write!(out, "  {name:>width$}");
    }
    out.push('\n');
    for (name, row) in r.confusion.class_names.iter().zip(&r.confusion.counts) {
        let _ = write!(out, "{name:<width$}");
        for c in row {
            let _ = write!(out, "  {c:>width$}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "\nMetrics (per class and {}-averaged)", r.averaging);
    let _ = write!(out, "{:<12}", "");
    for pc in &r.per_class {
        let _ = write!(out, "  {:>width$}", pc.class);
    }
    let _ = writeln!(out, "  {:>width$}", r.averaging);
    for (i, label) in METRIC_LABELS.iter().enumerate() {
        let _ = write!(out, "{label:<12}");
        for pc in &r.per_class {
            let _ = write!(out, "  {:>width$.5}", pc.metrics.values()[i]);
        }
        let _ = writeln!(out, "  {:>width$.5}", r.macro_avg.values()[i]);
    }
    if !r.macro_avg.degenerate.is_empty() {
        let _ = writeln!(out, "Degenerate (0/0 -> 0): {}", r.macro_avg.degenerate.join(", "));
    }
    out
}
