//! Evaluation: confusion matrix, per-class classification metrics, ROC/AUC,
//! latency statistics, and the serialized report bundle.
//!
//! The positive class is attack (label 1) throughout; every plot-oriented
//! output file states this in a leading comment line. Undefined ratios
//! (zero denominators) are reported as 0.0 with an explicit flag — never NaN
//! in serialized output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flowdata::DistributionReport;
use crate::neuralcore::Activation;
use crate::optimizers::OptimizerKind;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {prob} probabilities vs {labels} labels")]
    LengthMismatch { prob: usize, labels: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("ROC undefined: labels contain a single class")]
    RocSingleClass,
    #[error("latency measurement needs >= {min} repetitions, got {got}")]
    TooFewRepetitions { min: usize, got: usize },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report format: {0}")]
    Format(String),
}

// ---------------------------------------------------------------------------
// confusion matrix and classification report
// ---------------------------------------------------------------------------

/// Binary confusion counts, positive class = attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_neg: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_pos: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_neg + self.false_pos + self.false_neg + self.true_pos
    }
}

/// Classification of `probability >= threshold` as attack.
pub fn confusion_matrix(
    probabilities: &[f64],
    labels: &[u8],
    threshold: f64,
) -> Result<ConfusionMatrix, EvalError> {
    if probabilities.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            prob: probabilities.len(),
            labels: labels.len(),
        });
    }
    if probabilities.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix { true_neg: 0, false_pos: 0, false_neg: 0, true_pos: 0 };
    for (&p, &y) in probabilities.iter().zip(labels) {
        let predicted_attack = p >= threshold;
        match (predicted_attack, y) {
            (true, 1) => cm.true_pos += 1,
            (true, _) => cm.false_pos += 1,
            (false, 1) => cm.false_neg += 1,
            (false, _) => cm.true_neg += 1,
        }
    }
    Ok(cm)
}

/// One class's precision/recall/F1 with undefined-ratio flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub precision_defined: bool,
    pub recall: f64,
    pub recall_defined: bool,
    pub f1: f64,
    pub f1_defined: bool,
    pub support: usize,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, false)
    } else {
        (num as f64 / den as f64, true)
    }
}

fn class_metrics(tp: usize, fp: usize, fn_: usize, support: usize) -> ClassMetrics {
    let (precision, precision_defined) = ratio(tp, tp + fp);
    let (recall, recall_defined) = ratio(tp, tp + fn_);
    let (f1, f1_defined) = if precision_defined && recall_defined && precision + recall > 0.0 {
        (2.0 * precision * recall / (precision + recall), true)
    } else {
        (0.0, false)
    };
    ClassMetrics { precision, precision_defined, recall, recall_defined, f1, f1_defined, support }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub attack: ClassMetrics,
    pub benign: ClassMetrics,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// fp / (fp + tn): benign flows flagged as attacks.
    pub false_positive_rate: f64,
    pub false_positive_rate_defined: bool,
    pub confusion: ConfusionMatrix,
}

pub fn classification_report(cm: &ConfusionMatrix) -> ClassificationReport {
    let total = cm.total();
    debug_assert!(total > 0, "classification_report needs a non-empty matrix");
    let accuracy = (cm.true_pos + cm.true_neg) as f64 / total as f64;
    let attack = class_metrics(
        cm.true_pos,
        cm.false_pos,
        cm.false_neg,
        cm.true_pos + cm.false_neg,
    );
    // benign is the mirrored problem: its "true positives" are true negatives
    let benign = class_metrics(
        cm.true_neg,
        cm.false_neg,
        cm.false_pos,
        cm.true_neg + cm.false_pos,
    );
    let (false_positive_rate, false_positive_rate_defined) =
        ratio(cm.false_pos, cm.false_pos + cm.true_neg);
    ClassificationReport {
        accuracy,
        attack,
        benign,
        macro_precision: (attack.precision + benign.precision) / 2.0,
        macro_recall: (attack.recall + benign.recall) / 2.0,
        macro_f1: (attack.f1 + benign.f1) / 2.0,
        false_positive_rate,
        false_positive_rate_defined,
        confusion: *cm,
    }
}

// ---------------------------------------------------------------------------
// ROC curve and AUC
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (false positive rate, true positive rate), from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Threshold sweep over the unique scores in descending order (equal scores
/// collapse into one step), AUC by the trapezoidal rule. Equivalent to the
/// Mann-Whitney statistic with ties counted half.
pub fn roc_curve(probabilities: &[f64], labels: &[u8]) -> Result<RocCurve, EvalError> {
    if probabilities.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            prob: probabilities.len(),
            labels: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::RocSingleClass);
    }
    let mut order: Vec<usize> = (0..probabilities.len()).collect();
    order.sort_by(|&a, &b| {
        probabilities[b]
            .partial_cmp(&probabilities[a])
            .expect("scores must not be NaN")
            .then(a.cmp(&b))
    });
    let mut points = Vec::with_capacity(probabilities.len() + 1);
    points.push((0.0, 0.0));
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let score = probabilities[order[i]];
        // consume the whole tie group before emitting a point
        while i < order.len() && probabilities[order[i]] == score {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let mut auc = 0.0;
    for w in points.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok(RocCurve { points, auc })
}

// ---------------------------------------------------------------------------
// latency
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub count: usize,
}

pub const LATENCY_MIN_REPETITIONS: usize = 1000;
pub const LATENCY_WARMUP: usize = 100;

/// Nearest-rank percentiles over per-call wall times.
pub fn latency_stats_from_times(times_ms: &[f64]) -> LatencyStats {
    let mut sorted = times_ms.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let pct = |q: f64| {
        let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        sorted[rank - 1]
    };
    LatencyStats {
        mean_ms: sorted.iter().sum::<f64>() / sorted.len() as f64,
        p50_ms: pct(0.50),
        p95_ms: pct(0.95),
        p99_ms: pct(0.99),
        count: sorted.len(),
    }
}

/// Time a single-record inference closure: `LATENCY_WARMUP` untimed calls,
/// then `repetitions` timed ones, cycling over the sample indices.
pub fn measure_latency<F>(
    mut infer: F,
    samples: usize,
    repetitions: usize,
) -> Result<LatencyStats, EvalError>
where
    F: FnMut(usize),
{
    if repetitions < LATENCY_MIN_REPETITIONS {
        return Err(EvalError::TooFewRepetitions {
            min: LATENCY_MIN_REPETITIONS,
            got: repetitions,
        });
    }
    assert!(samples > 0, "need at least one sample record");
    for i in 0..LATENCY_WARMUP {
        infer(i % samples);
    }
    let mut times = Vec::with_capacity(repetitions);
    for i in 0..repetitions {
        let start = std::time::Instant::now();
        infer(i % samples);
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(latency_stats_from_times(&times))
}

// ---------------------------------------------------------------------------
// the optimizer/activation grid report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub accuracy: Option<f64>,
    pub error: Option<String>,
    pub seed: u64,
}

/// Accuracy per (activation row, optimizer column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub activations: Vec<Activation>,
    pub optimizers: Vec<OptimizerKind>,
    /// `cells[row][col]` matches `activations[row]` x `optimizers[col]`.
    pub cells: Vec<Vec<GridCell>>,
}

impl GridReport {
    pub fn cell(&self, act: Activation, kind: OptimizerKind) -> Option<&GridCell> {
        let row = self.activations.iter().position(|&a| a == act)?;
        let col = self.optimizers.iter().position(|&k| k == kind)?;
        Some(&self.cells[row][col])
    }
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

pub const METRICS_FORMAT_VERSION: u32 = 1;
pub const POSITIVE_CLASS_COMMENT: &str = "# positive_class=attack";

/// Everything a command wants on disk. Only the populated parts are written.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metrics: BTreeMap<String, ClassificationReport>,
    pub roc: BTreeMap<String, RocCurve>,
    pub distribution: Option<DistributionReport>,
    /// (feature name, r, defined), every feature.
    pub correlation: Option<Vec<(String, f64, bool)>>,
    pub grid: Option<GridReport>,
    pub latency: BTreeMap<String, LatencyStats>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct MetricsDocument {
    pub version: u32,
    pub positive_class: String,
    pub models: BTreeMap<String, ClassificationReport>,
}

/// Format with 6 significant digits; plain notation in a readable magnitude
/// band, scientific outside it. Never emits NaN (callers gate on defined
/// flags).
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    debug_assert!(x.is_finite(), "fmt_sig needs finite values");
    let mag = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).clamp(0, 15) as usize;
    format!("{x:.decimals$}")
}

fn write_file(path: &Path, content: &str) -> Result<(), EvalError> {
    let mut f = std::fs::File::create(path)
        .map_err(|source| EvalError::Io { path: path.to_path_buf(), source })?;
    f.write_all(content.as_bytes())
        .map_err(|source| EvalError::Io { path: path.to_path_buf(), source })
}

/// Sanitize a model name into a file-name fragment.
fn file_tag(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

pub fn render_metrics_json(metrics: &BTreeMap<String, ClassificationReport>) -> String {
    let doc = MetricsDocument {
        version: METRICS_FORMAT_VERSION,
        positive_class: "attack".to_string(),
        models: metrics.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("metrics serialize");
    s.push('\n');
    s
}

pub fn parse_metrics_json(json: &str) -> Result<MetricsDocument, EvalError> {
    serde_json::from_str(json).map_err(|e| EvalError::Format(e.to_string()))
}

pub fn render_grid_csv(grid: &GridReport) -> String {
    let mut out = String::from(POSITIVE_CLASS_COMMENT);
    out.push('\n');
    out.push_str("activation");
    for kind in &grid.optimizers {
        out.push(',');
        out.push_str(kind.name());
    }
    out.push('\n');
    for (row, act) in grid.activations.iter().enumerate() {
        out.push_str(act.name());
        for cell in &grid.cells[row] {
            out.push(',');
            match cell.accuracy {
                Some(acc) => out.push_str(&fmt_sig(acc)),
                None => out.push_str("ERR"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn render_roc_csv(curve: &RocCurve) -> String {
    let mut out = format!("{POSITIVE_CLASS_COMMENT}\nfpr,tpr\n");
    for (fpr, tpr) in &curve.points {
        out.push_str(&fmt_sig(*fpr));
        out.push(',');
        out.push_str(&fmt_sig(*tpr));
        out.push('\n');
    }
    out
}

pub fn render_confusion_csv(cm: &ConfusionMatrix) -> String {
    format!(
        "{POSITIVE_CLASS_COMMENT}\ntn,fp,fn,tp\n{},{},{},{}\n",
        cm.true_neg, cm.false_pos, cm.false_neg, cm.true_pos
    )
}

pub fn render_distribution_csv(report: &DistributionReport) -> String {
    let mut out = format!("{POSITIVE_CLASS_COMMENT}\nkind,label,count,fraction\n");
    let total: usize = report.count_benign + report.count_attack;
    for (attack_type, count) in &report.count_per_attack_type {
        out.push_str(&format!(
            "attack_type,{},{},{}\n",
            attack_type.name(),
            count,
            fmt_sig(*count as f64 / total as f64)
        ));
    }
    out.push_str(&format!(
        "binary,benign,{},{}\n",
        report.count_benign,
        fmt_sig(report.fraction_benign)
    ));
    out.push_str(&format!(
        "binary,attack,{},{}\n",
        report.count_attack,
        fmt_sig(report.fraction_attack)
    ));
    out
}

/// feature,r,defined rows sorted by |r| descending, undefined features last.
pub fn render_correlation_csv(correlation: &[(String, f64, bool)]) -> String {
    let mut rows: Vec<&(String, f64, bool)> = correlation.iter().collect();
    rows.sort_by(|a, b| {
        b.2.cmp(&a.2)
            .then(b.1.abs().partial_cmp(&a.1.abs()).expect("finite r"))
    });
    let mut out = format!("{POSITIVE_CLASS_COMMENT}\nfeature,r,defined\n");
    for (name, r, defined) in rows {
        out.push_str(&format!("{},{},{}\n", name, fmt_sig(*r), defined));
    }
    out
}

pub fn render_comparison_csv(metrics: &BTreeMap<String, ClassificationReport>) -> String {
    let mut out = format!("{POSITIVE_CLASS_COMMENT}\nmodel,accuracy,precision,recall,f1\n");
    for (name, report) in metrics {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            name,
            fmt_sig(report.accuracy),
            fmt_sig(report.attack.precision),
            fmt_sig(report.attack.recall),
            fmt_sig(report.attack.f1),
        ));
    }
    out
}

pub fn render_latency_json(latency: &BTreeMap<String, LatencyStats>) -> String {
    let mut s = serde_json::to_string_pretty(latency).expect("latency serializes");
    s.push('\n');
    s
}

/// Write every populated report into `out_dir`. Returns the files written.
pub fn render_reports(bundle: &ReportBundle, out_dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|source| EvalError::Io { path: out_dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    let mut emit = |name: String, content: String| -> Result<(), EvalError> {
        let path = out_dir.join(name);
        write_file(&path, &content)?;
        written.push(path);
        Ok(())
    };
    if !bundle.metrics.is_empty() {
        emit("metrics.json".into(), render_metrics_json(&bundle.metrics))?;
        emit("comparison.csv".into(), render_comparison_csv(&bundle.metrics))?;
        for (name, report) in &bundle.metrics {
            emit(
                format!("confusion_{}.csv", file_tag(name)),
                render_confusion_csv(&report.confusion),
            )?;
        }
    }
    for (name, curve) in &bundle.roc {
        emit(format!("roc_{}.csv", file_tag(name)), render_roc_csv(curve))?;
    }
    if let Some(distribution) = &bundle.distribution {
        emit("distribution.csv".into(), render_distribution_csv(distribution))?;
    }
    if let Some(correlation) = &bundle.correlation {
        emit("correlation.csv".into(), render_correlation_csv(correlation))?;
    }
    if let Some(grid) = &bundle.grid {
        emit("grid.csv".into(), render_grid_csv(grid))?;
    }
    if !bundle.latency.is_empty() {
        emit("latency.json".into(), render_latency_json(&bundle.latency))?;
    }
    Ok(written)
}
