//! Fold-averaged rule table.

use std::collections::BTreeMap;

use super::{Direction, SarRule};

#[derive(Debug, Clone, PartialEq)]
pub struct RuleTableRow {
    pub endpoint: String,
    pub rule_id: String,
    pub predicate: String,
    pub direction: Direction,
    pub mean_delta: f64,
    pub mean_support: f64,
    /// (Δ, support) per fold; `None` where the rule was not induced.
    pub per_fold: Vec<Option<(f64, f64)>>,
}

impl RuleTableRow {
    pub fn folds_present(&self) -> usize {
        self.per_fold.iter().flatten().count()
    }
}

/// Groups induced rules by id across folds and averages Δ and support over
/// the folds in which the rule was induced.
pub fn export_rule_table(endpoint: &str, folds: &[Vec<SarRule>]) -> Vec<RuleTableRow> {
    let mut by_id: BTreeMap<&str, (String, Vec<Option<(f64, f64)>>)> = BTreeMap::new();
    for (f, rules) in folds.iter().enumerate() {
        for r in rules {
            let Some(s) = r.stats else { continue };
            let entry = by_id
                .entry(&r.id)
                .or_insert_with(|| (r.predicate.source(), vec![None; folds.len()]));
            entry.1[f] = Some((s.delta, s.support));
        }
    }
    let mut rows: Vec<RuleTableRow> = by_id
        .into_iter()
        .map(|(id, (predicate, per_fold))| {
            let present: Vec<(f64, f64)> = per_fold.iter().flatten().copied().collect();
            let k = present.len() as f64;
            let mean_delta = present.iter().map(|p| p.0).sum::<f64>() / k;
            let mean_support = present.iter().map(|p| p.1).sum::<f64>() / k;
            RuleTableRow {
                endpoint: endpoint.to_string(),
                rule_id: id.to_string(),
                predicate,
                direction: Direction::of(mean_delta),
                mean_delta,
                mean_support,
                per_fold,
            }
        })
        .collect();
    sort_rows(&mut rows);
    rows
}

fn sort_rows(rows: &mut [RuleTableRow]) {
    rows.sort_by(|a, b| {
        a.endpoint
            .cmp(&b.endpoint)
            .then_with(|| b.mean_delta.abs().total_cmp(&a.mean_delta.abs()))
            .then_with(|| a.rule_id.cmp(&b.rule_id))
    });
}

/// CSV with per-fold columns for `k` folds. No rows gives a header-only file.
pub fn rule_table_csv(rows: &[RuleTableRow], k: usize) -> String {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "endpoint",
        "rule_id",
        "predicate",
        "direction",
        "mean_delta_active_rate",
        "mean_support",
        "folds_present",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for f in 0..k {
        header.push(format!("fold{f}_delta"));
        header.push(format!("fold{f}_support"));
    }
    w.write_record(&header).expect("in-memory write");
    for r in &sorted {
        let mut rec = vec![
            r.endpoint.clone(),
            r.rule_id.clone(),
            r.predicate.clone(),
            r.direction.as_str().to_string(),
            format!("{:?}", r.mean_delta),
            format!("{:?}", r.mean_support),
            r.folds_present().to_string(),
        ];
        for f in 0..k {
            match r.per_fold.get(f).copied().flatten() {
                Some((d, s)) => {
                    rec.push(format!("{d:?}"));
                    rec.push(format!("{s:?}"));
                }
                None => {
                    rec.push(String::new());
                    rec.push(String::new());
                }
            }
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
