use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{sha256_hex, Binarization, HarnessError, TaskSpec, Unit};
use crate::datasplit::{deduplicate, SplitError, TaskDataset, TaskKind};

/// What ingestion kept and dropped for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub file: String,
    pub kind: TaskKind,
    pub raw_rows: usize,
    /// Rows whose target cell was empty or not a number.
    pub missing_target: usize,
    pub parse_dropped: usize,
    pub dedup_removed: usize,
    pub conflict_removed: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_rate: Option<f64>,
    /// Digest of the canonical SMILES and labels, in record order.
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct IngestedTask {
    pub dataset: TaskDataset,
    pub summary: DatasetSummary,
}

fn label_for(rule: &Binarization, value: f64, row_unit: Option<Unit>) -> f64 {
    let v = match (row_unit, rule.units) {
        (Some(from), Some(to)) => from.convert(value, to),
        _ => value,
    };
    if rule.comparator.holds(v, rule.threshold) {
        1.0
    } else {
        0.0
    }
}

/// Reads a task CSV: parse, canonicalize, binarize when a rule is given,
/// then deduplicate.
pub fn ingest_dataset(path: &Path, spec: &TaskSpec, largest_fragment: bool) -> Result<IngestedTask, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::Data(format!("task '{}': cannot read {}: {e}", spec.name, path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| HarnessError::Schema(format!("{}: {e}", path.display())))?
        .clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            HarnessError::Schema(format!(
                "{}: column '{name}' not found (have: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let smiles_col = find(&spec.smiles_column)?;
    let target_col = find(spec.target_column())?;
    let unit_col = match spec.binarize.as_ref().and_then(|b| b.unit_column.as_deref()) {
        Some(c) => Some(find(c)?),
        None => None,
    };

    let mut rows = Vec::new();
    let mut raw_rows = 0;
    let mut missing_target = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Schema(format!("{}: {e}", path.display())))?;
        raw_rows += 1;
        let smiles = rec.get(smiles_col).unwrap_or("").to_string();
        let raw = rec.get(target_col).unwrap_or("");
        let Ok(value) = raw.parse::<f64>() else {
            log::warn!("task {}: row {} has no numeric target ('{raw}')", spec.name, i + 2);
            missing_target += 1;
            continue;
        };
        if !value.is_finite() {
            missing_target += 1;
            continue;
        }
        let label = match &spec.binarize {
            Some(rule) => {
                let row_unit = match unit_col {
                    Some(c) => {
                        let u = rec.get(c).unwrap_or("");
                        Some(Unit::parse(u).ok_or_else(|| {
                            HarnessError::Data(format!("{}: row {}: unknown unit '{u}'", path.display(), i + 2))
                        })?)
                    }
                    None => None,
                };
                label_for(rule, value, row_unit)
            }
            None => value,
        };
        rows.push((smiles, label));
    }
    if rows.is_empty() {
        return Err(HarnessError::EmptyDataset(format!(
            "task '{}': {} has no usable rows",
            spec.name,
            path.display()
        )));
    }
    let dataset = deduplicate(&spec.name, &rows, spec.kind, largest_fragment).map_err(|e| match e {
        SplitError::EmptyDataset(t) => HarnessError::EmptyDataset(format!("task '{t}': no parsable molecules")),
        other => HarnessError::Data(format!("task '{}': {other}", spec.name)),
    })?;
    let mut digest_input = String::new();
    for r in &dataset.records {
        digest_input.push_str(&r.smiles);
        digest_input.push('\t');
        digest_input.push_str(&format!("{:?}\n", r.label));
    }
    let p = &dataset.provenance;
    let summary = DatasetSummary {
        file: path.display().to_string(),
        kind: spec.kind,
        raw_rows,
        missing_target,
        parse_dropped: p.parse_dropped,
        dedup_removed: p.dedup_removed,
        conflict_removed: p.conflict_removed,
        n: dataset.len(),
        positive_rate: dataset.positive_rate(),
        sha256: sha256_hex(digest_input.as_bytes()),
    };
    log::info!(
        "task {}: {} rows -> {} molecules{}",
        spec.name,
        raw_rows,
        summary.n,
        summary
            .positive_rate
            .map(|r| format!(", positive rate {r:.3}"))
            .unwrap_or_default()
    );
    Ok(IngestedTask { dataset, summary })
}
