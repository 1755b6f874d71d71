//! Ranking and regression metrics, the long-format metric record and its CSV
//! form.
//!
//! PR-AUC is average precision. Tied scores are resolved by taking the
//! expected precision over all orderings inside each tie group, so the value
//! never depends on input order.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("undefined metric: {0}")]
pub struct UndefinedMetric(pub String);

fn is_pos(v: f64) -> bool {
    v > 0.5
}

fn counts(labels: &[f64]) -> (usize, usize) {
    let p = labels.iter().filter(|&&v| is_pos(v)).count();
    (p, labels.len() - p)
}

/// Indices sorted by descending score, grouped into runs of equal score.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Mann–Whitney statistic with midranks.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64, UndefinedMetric> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let (p, n) = counts(labels);
    if p == 0 || n == 0 {
        return Err(UndefinedMetric(format!("roc_auc needs both classes ({p} positives, {n} negatives)")));
    }
    // ascending ranks, so walk the descending groups from the back
    let groups = tie_groups(scores);
    let mut rank_sum = 0.0;
    let mut below = 0usize;
    for g in groups.iter().rev() {
        let mid = below as f64 + (g.len() as f64 + 1.0) / 2.0;
        rank_sum += mid * g.iter().filter(|&&i| is_pos(labels[i])).count() as f64;
        below += g.len();
    }
    let pf = p as f64;
    Ok((rank_sum - pf * (pf + 1.0) / 2.0) / (pf * n as f64))
}

/// Average precision with tie-group expected counts.
pub fn pr_auc(scores: &[f64], labels: &[f64]) -> Result<f64, UndefinedMetric> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let (p, _) = counts(labels);
    if p == 0 {
        return Err(UndefinedMetric("pr_auc needs at least one positive".into()));
    }
    let mut seen = 0usize;
    let mut tp = 0usize;
    let mut total = 0.0;
    for g in tie_groups(scores) {
        let size = g.len();
        let a = g.iter().filter(|&&i| is_pos(labels[i])).count();
        if a > 0 {
            // a positive at slot j of the group has on average (j-1)(a-1)/(size-1)
            // other positives ahead of it inside the group
            let share = if size > 1 { (a - 1) as f64 / (size - 1) as f64 } else { 0.0 };
            let mut s = 0.0;
            for j in 1..=size {
                s += (tp as f64 + 1.0 + (j - 1) as f64 * share) / (seen + j) as f64;
            }
            total += a as f64 / size as f64 * s;
        }
        seen += size;
        tp += a;
    }
    Ok(total / p as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassReport {
    pub p0: f64,
    pub r0: f64,
    pub p1: f64,
    pub r1: f64,
    /// Which of (p0, r0, p1, r1) hit 0/0 and were set to 0.
    pub zero_division: [bool; 4],
}

impl ClassReport {
    pub fn flag_for(&self, metric: MetricName) -> bool {
        match metric {
            MetricName::P0 => self.zero_division[0],
            MetricName::R0 => self.zero_division[1],
            MetricName::P1 => self.zero_division[2],
            MetricName::R1 => self.zero_division[3],
            _ => false,
        }
    }
}

/// Per-class precision and recall for predictions `score >= threshold`.
pub fn class_precision_recall(scores: &[f64], labels: &[f64], threshold: f64) -> ClassReport {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, is_pos(y)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { (0.0, true) } else { (a as f64 / b as f64, false) };
    let (p0, z0) = ratio(tn, tn + fn_);
    let (r0, z1) = ratio(tn, tn + fp);
    let (p1, z2) = ratio(tp, tp + fp);
    let (r1, z3) = ratio(tp, tp + fn_);
    ClassReport {
        p0,
        r0,
        p1,
        r1,
        zero_division: [z0, z1, z2, z3],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionReport {
    pub mae: f64,
    pub pearson: Result<f64, UndefinedMetric>,
}

pub fn regression_metrics(pred: &[f64], target: &[f64]) -> RegressionReport {
    assert_eq!(pred.len(), target.len(), "prediction and target differ in length");
    assert!(!pred.is_empty(), "regression metrics need at least one row");
    let n = pred.len() as f64;
    let mae = pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
    RegressionReport {
        mae,
        pearson: pearson(pred, target),
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, UndefinedMetric> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(UndefinedMetric("pearson needs non-zero variance on both sides".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// PR-AUC over the positive rate; 1.0 means no better than random.
pub fn prevalence_enrichment(pr_auc_value: f64, labels: &[f64]) -> Result<f64, UndefinedMetric> {
    let (p, _) = counts(labels);
    if p == 0 {
        return Err(UndefinedMetric("enrichment needs at least one positive".into()));
    }
    Ok(pr_auc_value / (p as f64 / labels.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    PrAuc,
    RocAuc,
    P0,
    R0,
    P1,
    R1,
    Mae,
    Pearson,
}

impl MetricName {
    pub const ALL: [MetricName; 8] = [
        MetricName::PrAuc,
        MetricName::RocAuc,
        MetricName::P0,
        MetricName::R0,
        MetricName::P1,
        MetricName::R1,
        MetricName::Mae,
        MetricName::Pearson,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::PrAuc => "pr_auc",
            MetricName::RocAuc => "roc_auc",
            MetricName::P0 => "p0",
            MetricName::R0 => "r0",
            MetricName::P1 => "p1",
            MetricName::R1 => "r1",
            MetricName::Mae => "mae",
            MetricName::Pearson => "pearson",
        }
    }

    /// Lower is better only for MAE.
    pub fn higher_is_better(self) -> bool {
        self != MetricName::Mae
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric '{s}'"))
    }
}

/// Model families, in tie-break precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "ML")]
    Ml,
    #[serde(rename = "GNN")]
    Gnn,
    #[serde(rename = "Sequence")]
    Sequence,
    #[serde(rename = "LLM-SAR")]
    LlmSar,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Ml, Family::Gnn, Family::Sequence, Family::LlmSar];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Ml => "ML",
            Family::Gnn => "GNN",
            Family::Sequence => "Sequence",
            Family::LlmSar => "LLM-SAR",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ML" | "ml" => Ok(Family::Ml),
            "GNN" | "gnn" => Ok(Family::Gnn),
            "Sequence" | "sequence" | "Seq" => Ok(Family::Sequence),
            "LLM-SAR" | "llm-sar" | "SAR" => Ok(Family::LlmSar),
            other => Err(format!("unknown family '{other}'")),
        }
    }
}

/// One (task, model, fold, metric) value. `None` marks an undefined metric;
/// the reason is in `flags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub task: String,
    pub model: String,
    pub family: Family,
    pub fold: usize,
    pub metric: MetricName,
    pub value: Option<f64>,
    pub flags: String,
}

pub const METRICS_HEADER: [&str; 7] = ["task", "model", "family", "fold", "metric", "value", "flags"];

/// Records sorted by (task, model, fold, metric) and rendered with exact
/// float round-trip formatting.
pub fn metrics_csv_string(records: &[MetricRecord]) -> String {
    let mut sorted: Vec<&MetricRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (&a.task, &a.model, a.fold, a.metric).cmp(&(&b.task, &b.model, b.fold, b.metric)));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER).expect("in-memory write");
    for r in sorted {
        let value = r.value.map(|v| format!("{v:?}")).unwrap_or_default();
        w.write_record([
            r.task.as_str(),
            r.model.as_str(),
            r.family.as_str(),
            &r.fold.to_string(),
            r.metric.as_str(),
            &value,
            &r.flags,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn write_metrics_csv(path: &Path, records: &[MetricRecord]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(metrics_csv_string(records).as_bytes())
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsCsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Field { line: usize, message: String },
}

pub fn read_metrics_csv<R: std::io::Read>(reader: R) -> Result<Vec<MetricRecord>, MetricsCsvError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let cols: Vec<Option<usize>> = METRICS_HEADER.iter().map(|h| col(h)).collect();
    if cols[..6].iter().any(Option::is_none) {
        return Err(MetricsCsvError::Field {
            line: 1,
            message: format!("header must contain {}", METRICS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let field = |c: usize| rec.get(cols[c].unwrap()).unwrap_or("").trim();
        let err = |message: String| MetricsCsvError::Field { line, message };
        let value = match field(5) {
            "" | "NA" | "nan" => None,
            v => Some(v.parse::<f64>().map_err(|e| err(format!("value '{v}': {e}")))?),
        };
        out.push(MetricRecord {
            task: field(0).to_string(),
            model: field(1).to_string(),
            family: field(2).parse().map_err(err)?,
            fold: field(3).parse().map_err(|e| err(format!("fold: {e}")))?,
            metric: field(4).parse().map_err(err)?,
            value,
            flags: cols[6].and_then(|c| rec.get(c)).unwrap_or("").to_string(),
        });
    }
    Ok(out)
}
