//! Dataset loading, three-way classification metrics, and report rendering.
//!
//! Parse failures count toward accuracy and recall denominators but never
//! toward a predicted class, matching the scoring rule that an unparseable
//! reply is an incorrect prediction.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::judge::{CaseRecord, Judgment, Label, Method, Predicted, LABELS};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("judgments do not match cases: {0}")]
    JudgmentCaseMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Label distribution and mean whitespace-token context length of a case file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub case_count: usize,
    pub permit: usize,
    pub prohibit: usize,
    pub not_applicable: usize,
    pub mean_context_tokens: f64,
}

/// Read line-delimited case records, validating ids, labels, and contexts.
pub fn load_cases(source: &mut dyn BufRead) -> Result<(Vec<CaseRecord>, DatasetStats), EvalError> {
    let mut cases = Vec::new();
    let mut seen = BTreeSet::new();
    let mut token_total = 0usize;
    for (index, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = index + 1;
        let case: CaseRecord = serde_json::from_str(&line)
            .map_err(|e| EvalError::MalformedRecord { line: lineno, reason: e.to_string() })?;
        if case.context.trim().is_empty() {
            return Err(EvalError::MalformedRecord {
                line: lineno,
                reason: "context must be nonempty".into(),
            });
        }
        if !seen.insert(case.id.clone()) {
            return Err(EvalError::MalformedRecord {
                line: lineno,
                reason: format!("duplicate case id `{}`", case.id),
            });
        }
        token_total += case.context.split_whitespace().count();
        cases.push(case);
    }
    let stats = DatasetStats {
        case_count: cases.len(),
        permit: cases.iter().filter(|c| c.gold == Label::Permit).count(),
        prohibit: cases.iter().filter(|c| c.gold == Label::Prohibit).count(),
        not_applicable: cases.iter().filter(|c| c.gold == Label::NotApplicable).count(),
        mean_context_tokens: if cases.is_empty() {
            0.0
        } else {
            token_total as f64 / cases.len() as f64
        },
    };
    Ok((cases, stats))
}

pub fn load_cases_file(path: &std::path::Path) -> Result<(Vec<CaseRecord>, DatasetStats), EvalError> {
    let file = std::fs::File::open(path)?;
    load_cases(&mut std::io::BufReader::new(file))
}

/// Persist judgments as line-delimited JSON, ordered by (method, case id).
pub fn save_judgments(judgments: &[Judgment], sink: &mut dyn Write) -> Result<(), EvalError> {
    let mut ordered: Vec<&Judgment> = judgments.iter().collect();
    ordered.sort_by(|a, b| a.method.cmp(&b.method).then_with(|| a.case_id.cmp(&b.case_id)));
    for judgment in ordered {
        let line = serde_json::to_string(judgment)
            .map_err(|e| EvalError::JudgmentCaseMismatch(e.to_string()))?;
        writeln!(sink, "{line}")?;
    }
    Ok(())
}

pub fn load_judgments(source: &mut dyn BufRead) -> Result<Vec<Judgment>, EvalError> {
    let mut judgments = Vec::new();
    for (index, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let judgment: Judgment = serde_json::from_str(&line).map_err(|e| {
            EvalError::MalformedRecord { line: index + 1, reason: e.to_string() }
        })?;
        judgments.push(judgment);
    }
    Ok(judgments)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Row order: predicted Permit, Prohibit, Not Applicable, then the
/// parse-failure row. Columns follow the gold label order.
pub type ConfusionMatrix = [[usize; 3]; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub accuracy: f64,
    pub permit: ClassMetrics,
    pub prohibit: ClassMetrics,
    pub not_applicable: ClassMetrics,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
    pub parse_failures: usize,
    /// Zero-denominator conventions applied while computing the metrics.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub case_count: usize,
    pub methods: BTreeMap<String, MethodReport>,
}

/// Unweighted mean of per-class F1 scores.
pub fn macro_f1(f1_scores: &[f64]) -> f64 {
    if f1_scores.is_empty() {
        return 0.0;
    }
    f1_scores.iter().sum::<f64>() / f1_scores.len() as f64
}

fn predicted_row(predicted: Predicted) -> usize {
    match predicted {
        Predicted::Permit => 0,
        Predicted::Prohibit => 1,
        Predicted::NotApplicable => 2,
        Predicted::ParseFailure => 3,
    }
}

fn gold_column(label: Label) -> usize {
    match label {
        Label::Permit => 0,
        Label::Prohibit => 1,
        Label::NotApplicable => 2,
    }
}

fn label_name(label: Label) -> &'static str {
    match label {
        Label::Permit => "Permit",
        Label::Prohibit => "Prohibit",
        Label::NotApplicable => "Not Applicable",
    }
}

/// Metrics from a confusion matrix alone; shared by the judgment-driven path
/// and by tests that start from integer matrices.
pub fn report_from_confusion(confusion: ConfusionMatrix) -> MethodReport {
    let case_count: usize = confusion.iter().flatten().sum();
    let mut flags = Vec::new();
    let mut per_class = [ClassMetrics::default(); 3];
    for (index, metrics) in per_class.iter_mut().enumerate() {
        let tp = confusion[index][index];
        let predicted: usize = confusion[index].iter().sum();
        let actual: usize = confusion.iter().map(|row| row[index]).sum();
        let label = label_name(LABELS[index]);
        metrics.precision = if predicted == 0 {
            flags.push(format!("{label}: precision denominator is zero"));
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        metrics.recall = if actual == 0 {
            flags.push(format!("{label}: recall denominator is zero"));
            0.0
        } else {
            tp as f64 / actual as f64
        };
        metrics.f1 = if metrics.precision + metrics.recall == 0.0 {
            0.0
        } else {
            2.0 * metrics.precision * metrics.recall / (metrics.precision + metrics.recall)
        };
    }
    let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
    MethodReport {
        accuracy: if case_count == 0 { 0.0 } else { correct as f64 / case_count as f64 },
        permit: per_class[0],
        prohibit: per_class[1],
        not_applicable: per_class[2],
        macro_f1: macro_f1(&[per_class[0].f1, per_class[1].f1, per_class[2].f1]),
        confusion,
        parse_failures: confusion[3].iter().sum(),
        flags,
    }
}

/// Score judgments against the case gold labels. Every method present must
/// cover every case exactly once.
pub fn evaluate(judgments: &[Judgment], cases: &[CaseRecord]) -> Result<EvaluationReport, EvalError> {
    let gold: BTreeMap<&str, Label> =
        cases.iter().map(|c| (c.id.as_str(), c.gold)).collect();
    if gold.len() != cases.len() {
        return Err(EvalError::JudgmentCaseMismatch("duplicate case ids".into()));
    }

    let mut by_method: BTreeMap<Method, Vec<&Judgment>> = BTreeMap::new();
    for judgment in judgments {
        by_method.entry(judgment.method).or_default().push(judgment);
    }

    let mut methods = BTreeMap::new();
    for (method, method_judgments) in by_method {
        let mut confusion: ConfusionMatrix = [[0; 3]; 4];
        let mut covered = BTreeSet::new();
        for judgment in &method_judgments {
            let label = gold.get(judgment.case_id.as_str()).ok_or_else(|| {
                EvalError::JudgmentCaseMismatch(format!(
                    "judgment for unknown case `{}`",
                    judgment.case_id
                ))
            })?;
            if !covered.insert(judgment.case_id.as_str()) {
                return Err(EvalError::JudgmentCaseMismatch(format!(
                    "method {method} judged case `{}` twice",
                    judgment.case_id
                )));
            }
            confusion[predicted_row(judgment.predicted)][gold_column(*label)] += 1;
        }
        if covered.len() != cases.len() {
            return Err(EvalError::JudgmentCaseMismatch(format!(
                "method {method} judged {} of {} cases",
                covered.len(),
                cases.len()
            )));
        }
        methods.insert(method.slug().to_string(), report_from_confusion(confusion));
    }
    Ok(EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        case_count: cases.len(),
        methods,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TextTable,
    Structured,
}

/// Percentage with two decimals, rounding halves up.
pub fn percent(value: f64) -> f64 {
    (value * 10000.0).round() / 100.0
}

/// Render the report: a text table in the class-by-metric layout, or the
/// versioned JSON document.
pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            let mut json =
                serde_json::to_string_pretty(report).expect("report serializes");
            json.push('\n');
            json
        }
        ReportFormat::TextTable => {
            let mut lines = Vec::new();
            lines.push(format!("cases: {}", report.case_count));
            lines.push(format!(
                "{:<14} | {:^23} | {:^23} | {:^23} | {:>6} | {:>6} | {:>5}",
                "method", "Permit", "Prohibit", "Not Applicable", "acc", "ma-f1", "fail"
            ));
            let labels = format!("{:>7} {:>7} {:>7}", "P", "R", "F1");
            lines.push(format!(
                "{:<14} | {labels} | {labels} | {labels} | {:>6} | {:>6} | {:>5}",
                "", "", "", ""
            ));
            lines.push(format!(
                "{}-+-{}-+-{}-+-{}-+-{}-+-{}-+-{}",
                "-".repeat(14),
                "-".repeat(23),
                "-".repeat(23),
                "-".repeat(23),
                "-".repeat(6),
                "-".repeat(6),
                "-".repeat(5)
            ));
            for (name, method) in &report.methods {
                let class = |m: &ClassMetrics| {
                    format!(
                        "{:>7.2} {:>7.2} {:>7.2}",
                        percent(m.precision),
                        percent(m.recall),
                        percent(m.f1)
                    )
                };
                lines.push(format!(
                    "{:<14} | {} | {} | {} | {:>6.2} | {:>6.2} | {:>5}",
                    name,
                    class(&method.permit),
                    class(&method.prohibit),
                    class(&method.not_applicable),
                    percent(method.accuracy),
                    percent(method.macro_f1),
                    method.parse_failures,
                ));
            }
            let mut out = String::new();
            for line in lines {
                out.push_str(line.trim_end());
                out.push('\n');
            }
            out
        }
    }
}
