//! Fold-mean aggregation, per-column ranking, family winner counts and table
//! emission.
//!
//! Ranking always uses full-precision means; values are rounded to three
//! decimals only when a table is written. Exact ties at rank 1 are broken by
//! family precedence (ML, GNN, Sequence, LLM-SAR) and then by model id, and
//! every such tie is reported.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::metrics::{Family, MetricName, MetricRecord};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("task '{0}' has no task group")]
    UnmappedTask(String),
    #[error("model '{model}' appears under families {first} and {second}")]
    InconsistentFamily {
        model: String,
        first: Family,
        second: Family,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatedCell {
    pub task: String,
    pub model: String,
    pub family: Family,
    pub metric: MetricName,
    /// `None` when every fold was undefined.
    pub mean: Option<f64>,
    pub folds_used: usize,
    pub folds_excluded: usize,
    /// Dense rank inside the (task, metric) column.
    pub rank: Option<usize>,
    pub winner: bool,
}

/// Arithmetic mean over defined folds per (task, model, metric). Output is
/// sorted by task, metric, family, model.
pub fn fold_mean(records: &[MetricRecord]) -> Vec<AggregatedCell> {
    let mut acc: BTreeMap<(&str, MetricName, Family, &str), (f64, usize, usize)> = BTreeMap::new();
    // sum in fold order so the result does not depend on record order
    let mut sorted: Vec<&MetricRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.fold);
    for r in sorted {
        let e = acc.entry((&r.task, r.metric, r.family, &r.model)).or_insert((0.0, 0, 0));
        match r.value {
            Some(v) if v.is_finite() => {
                e.0 += v;
                e.1 += 1;
            }
            _ => e.2 += 1,
        }
    }
    acc.into_iter()
        .map(|((task, metric, family, model), (sum, used, excluded))| AggregatedCell {
            task: task.to_string(),
            model: model.to_string(),
            family,
            metric,
            mean: (used > 0).then(|| sum / used as f64),
            folds_used: used,
            folds_excluded: excluded,
            rank: None,
            winner: false,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TieWarning {
    pub task: String,
    pub metric: MetricName,
    pub value: f64,
    pub models: Vec<String>,
    pub chosen: String,
    pub cross_family: bool,
}

impl std::fmt::Display for TieWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "tie at rank 1 for {} {} ({}): {}; chose {}",
            self.task,
            self.metric,
            self.value,
            self.models.join(", "),
            self.chosen
        )?;
        if self.cross_family {
            f.write_str(" by family precedence")?;
        }
        Ok(())
    }
}

fn better(metric: MetricName, a: f64, b: f64) -> std::cmp::Ordering {
    if metric.higher_is_better() {
        b.total_cmp(&a)
    } else {
        a.total_cmp(&b)
    }
}

/// Dense ranks per (task, metric) column and a unique winner per column.
pub fn rank_annotate(cells: &mut [AggregatedCell]) -> Vec<TieWarning> {
    let mut columns: BTreeMap<(String, MetricName), Vec<usize>> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        columns.entry((c.task.clone(), c.metric)).or_default().push(i);
    }
    let mut warnings = Vec::new();
    for ((task, metric), idx) in columns {
        let mut defined: Vec<usize> = idx.into_iter().filter(|&i| cells[i].mean.is_some()).collect();
        defined.sort_by(|&a, &b| {
            better(metric, cells[a].mean.unwrap(), cells[b].mean.unwrap())
                .then(cells[a].family.cmp(&cells[b].family))
                .then(cells[a].model.cmp(&cells[b].model))
        });
        let mut rank = 0;
        let mut last: Option<f64> = None;
        for &i in &defined {
            let v = cells[i].mean.unwrap();
            if last != Some(v) {
                rank += 1;
                last = Some(v);
            }
            cells[i].rank = Some(rank);
        }
        if let Some(&first) = defined.first() {
            cells[first].winner = true;
            let tied: Vec<usize> = defined.iter().copied().filter(|&i| cells[i].rank == Some(1)).collect();
            if tied.len() > 1 {
                let fams: BTreeSet<Family> = tied.iter().map(|&i| cells[i].family).collect();
                let w = TieWarning {
                    task: task.clone(),
                    metric,
                    value: cells[first].mean.unwrap(),
                    models: tied.iter().map(|&i| cells[i].model.clone()).collect(),
                    chosen: cells[first].model.clone(),
                    cross_family: fams.len() > 1,
                };
                log::warn!("{w}");
                warnings.push(w);
            }
        }
    }
    warnings
}

/// Task → group mapping with a stable group order.
#[derive(Debug, Clone, Default)]
pub struct TaskGroups {
    groups: Vec<(String, Vec<String>)>,
}

impl TaskGroups {
    pub fn new() -> Self {
        TaskGroups::default()
    }

    pub fn insert(&mut self, task: &str, group: &str) {
        for (_, tasks) in self.groups.iter_mut() {
            tasks.retain(|t| t != task);
        }
        match self.groups.iter_mut().find(|(g, _)| g == group) {
            Some((_, tasks)) => tasks.push(task.to_string()),
            None => self.groups.push((group.to_string(), vec![task.to_string()])),
        }
        self.groups.retain(|(_, t)| !t.is_empty());
    }

    pub fn group_of(&self, task: &str) -> Option<&str> {
        self.groups
            .iter()
            .find(|(_, tasks)| tasks.iter().any(|t| t == task))
            .map(|(g, _)| g.as_str())
    }

    pub fn groups(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.groups.iter().map(|(g, t)| (g.as_str(), t.as_slice()))
    }

    /// Reads a `task,group` CSV; file order fixes group and task order.
    pub fn read_csv(path: &Path) -> Result<Self, ReportError> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut g = TaskGroups::new();
        for rec in rdr.records() {
            let rec = rec?;
            g.insert(rec.get(0).unwrap_or("").trim(), rec.get(1).unwrap_or("").trim());
        }
        Ok(g)
    }
}

/// Metrics that enter winner counting, in table order.
pub const RANKED_METRICS: [MetricName; 4] = [MetricName::PrAuc, MetricName::RocAuc, MetricName::Mae, MetricName::Pearson];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinnerRow {
    pub group: String,
    pub metric: MetricName,
    pub columns: usize,
    /// Indexed like [`Family::ALL`].
    pub wins: [usize; 4],
    pub leading: String,
}

pub fn metric_label(m: MetricName) -> &'static str {
    match m {
        MetricName::PrAuc => "PR-AUC",
        MetricName::RocAuc => "ROC-AUC",
        MetricName::Mae => "MAE",
        MetricName::Pearson => "Pearson",
        MetricName::P0 => "P(0)",
        MetricName::R0 => "R(0)",
        MetricName::P1 => "P(1)",
        MetricName::R1 => "R(1)",
    }
}

/// Leading families joined with "/" in precedence order.
pub fn leading_label(wins: &[usize; 4]) -> String {
    let max = *wins.iter().max().unwrap_or(&0);
    if max == 0 {
        return "-".into();
    }
    Family::ALL
        .iter()
        .zip(wins)
        .filter(|(_, &w)| w == max)
        .map(|(f, _)| f.as_str())
        .collect::<Vec<_>>()
        .join("/")
}

/// Counts, per (group, metric), the columns whose rank-1 model belongs to
/// each family. Cells must already be ranked.
pub fn winner_counts(cells: &[AggregatedCell], groups: &TaskGroups) -> Result<Vec<WinnerRow>, ReportError> {
    let mut families: BTreeMap<&str, Family> = BTreeMap::new();
    for c in cells {
        if let Some(&f) = families.get(c.model.as_str()) {
            if f != c.family {
                return Err(ReportError::InconsistentFamily {
                    model: c.model.clone(),
                    first: f,
                    second: c.family,
                });
            }
        }
        families.insert(&c.model, c.family);
        if groups.group_of(&c.task).is_none() {
            return Err(ReportError::UnmappedTask(c.task.clone()));
        }
    }
    let mut rows = Vec::new();
    for (group, tasks) in groups.groups() {
        for metric in RANKED_METRICS {
            let mut wins = [0usize; 4];
            let mut columns = 0;
            for task in tasks {
                let col: Vec<&AggregatedCell> = cells.iter().filter(|c| &c.task == task && c.metric == metric).collect();
                if col.is_empty() {
                    continue;
                }
                columns += 1;
                if let Some(w) = col.iter().find(|c| c.winner) {
                    wins[Family::ALL.iter().position(|f| *f == w.family).unwrap()] += 1;
                }
            }
            if columns > 0 {
                rows.push(WinnerRow {
                    group: group.to_string(),
                    metric,
                    columns,
                    leading: leading_label(&wins),
                    wins,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

pub fn fmt3(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.3}"),
        None => "NA".into(),
    }
}

/// A rendered table: header plus rows of plain cell text, and per-cell ranks
/// for markdown emphasis.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Rank of each value inside a cell (two for combined regression cells).
    pub ranks: Vec<Vec<Vec<Option<usize>>>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Markdown with rank 1 in bold and ranks 2-3 in italics.
    pub fn to_markdown(&self) -> String {
        let mut s = format!("### {}\n\n| {} |\n|", self.title, self.header.join(" | "));
        for _ in &self.header {
            s.push_str("---|");
        }
        s.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, text)| {
                    let ranks = self.ranks.get(r).and_then(|x| x.get(c));
                    match ranks {
                        Some(rk) if !rk.is_empty() => text
                            .split(" / ")
                            .zip(rk)
                            .map(|(part, k)| match k {
                                Some(1) => format!("**{part}**"),
                                Some(2) | Some(3) => format!("_{part}_"),
                                _ => part.to_string(),
                            })
                            .collect::<Vec<_>>()
                            .join(" / "),
                        _ => text.clone(),
                    }
                })
                .collect();
            let _ = writeln!(s, "| {} |", cells.join(" | "));
        }
        s
    }
}

pub fn winner_table(rows: &[WinnerRow]) -> Table {
    let mut header: Vec<String> = vec!["Task group".into(), "Metric".into(), "n".into()];
    header.extend(Family::ALL.iter().map(|f| f.as_str().to_string()));
    header.push("Leading".into());
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.group.clone(), metric_label(r.metric).to_string(), r.columns.to_string()];
            v.extend(r.wins.iter().map(|w| w.to_string()));
            v.push(r.leading.clone());
            v
        })
        .collect();
    Table {
        name: "winner_counts".into(),
        title: "Columns won per model family".into(),
        header,
        ranks: vec![Vec::new(); body.len()],
        rows: body,
    }
}

fn model_order(cells: &[&AggregatedCell]) -> Vec<(Family, String)> {
    let set: BTreeSet<(Family, String)> = cells.iter().map(|c| (c.family, c.model.clone())).collect();
    set.into_iter().collect()
}

/// Model-by-task matrix for one metric over the given tasks.
pub fn metric_matrix(name: &str, title: &str, cells: &[AggregatedCell], tasks: &[String], metric: MetricName) -> Table {
    let cols: Vec<&String> = tasks
        .iter()
        .filter(|t| cells.iter().any(|c| &c.task == *t && c.metric == metric))
        .collect();
    let relevant: Vec<&AggregatedCell> = cells
        .iter()
        .filter(|c| c.metric == metric && cols.contains(&&c.task))
        .collect();
    let mut header = vec!["Family".to_string(), "Model".to_string()];
    header.extend(cols.iter().map(|t| t.to_string()));
    let mut rows = Vec::new();
    let mut ranks = Vec::new();
    for (family, model) in model_order(&relevant) {
        let mut row = vec![family.as_str().to_string(), model.clone()];
        let mut rk = vec![Vec::new(), Vec::new()];
        for t in &cols {
            let cell = relevant.iter().find(|c| &c.task == *t && c.model == model);
            row.push(fmt3(cell.and_then(|c| c.mean)));
            rk.push(vec![cell.and_then(|c| c.rank)]);
        }
        rows.push(row);
        ranks.push(rk);
    }
    Table {
        name: name.into(),
        title: title.into(),
        header,
        rows,
        ranks,
    }
}

/// Regression matrix with "MAE / Pearson" cells.
pub fn regression_matrix(name: &str, cells: &[AggregatedCell], tasks: &[String]) -> Table {
    let cols: Vec<&String> = tasks
        .iter()
        .filter(|t| cells.iter().any(|c| &c.task == *t && c.metric == MetricName::Mae))
        .collect();
    let relevant: Vec<&AggregatedCell> = cells
        .iter()
        .filter(|c| matches!(c.metric, MetricName::Mae | MetricName::Pearson) && cols.contains(&&c.task))
        .collect();
    let mut header = vec!["Family".to_string(), "Model".to_string()];
    header.extend(cols.iter().map(|t| format!("{t} (MAE / Pearson)")));
    let mut rows = Vec::new();
    let mut ranks = Vec::new();
    for (family, model) in model_order(&relevant) {
        let mut row = vec![family.as_str().to_string(), model.clone()];
        let mut rk = vec![Vec::new(), Vec::new()];
        for t in &cols {
            let get = |m: MetricName| relevant.iter().find(|c| &c.task == *t && c.model == model && c.metric == m);
            let (mae, r) = (get(MetricName::Mae), get(MetricName::Pearson));
            row.push(format!("{} / {}", fmt3(mae.and_then(|c| c.mean)), fmt3(r.and_then(|c| c.mean))));
            rk.push(vec![mae.and_then(|c| c.rank), r.and_then(|c| c.rank)]);
        }
        rows.push(row);
        ranks.push(rk);
    }
    Table {
        name: name.into(),
        title: "Regression: MAE / Pearson".into(),
        header,
        rows,
        ranks,
    }
}

/// Class-recall diagnostics (P(0), R(0), P(1), R(1) fold means), long form.
pub fn diagnostics_table(cells: &[AggregatedCell]) -> Table {
    let header: Vec<String> = ["Task", "Family", "Model", "P(0)", "R(0)", "P(1)", "R(1)"].iter().map(|s| s.to_string()).collect();
    let mut keys: BTreeSet<(String, Family, String)> = BTreeSet::new();
    for c in cells.iter().filter(|c| matches!(c.metric, MetricName::P0 | MetricName::R0 | MetricName::P1 | MetricName::R1)) {
        keys.insert((c.task.clone(), c.family, c.model.clone()));
    }
    let rows: Vec<Vec<String>> = keys
        .into_iter()
        .map(|(task, family, model)| {
            let mut row = vec![task.clone(), family.as_str().to_string(), model.clone()];
            for m in [MetricName::P0, MetricName::R0, MetricName::P1, MetricName::R1] {
                let v = cells.iter().find(|c| c.task == task && c.model == model && c.metric == m).and_then(|c| c.mean);
                row.push(fmt3(v));
            }
            row
        })
        .collect();
    Table {
        name: "class_recall".into(),
        title: "Class-specific precision and recall at threshold 0.5".into(),
        header,
        ranks: vec![Vec::new(); rows.len()],
        rows,
    }
}

/// Everything the report writes, before formatting.
#[derive(Debug, Clone)]
pub struct Report {
    pub cells: Vec<AggregatedCell>,
    pub winners: Vec<WinnerRow>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    pub ties: Vec<TieWarning>,
}

/// Aggregates, ranks and lays out all tables. Groups named "Tox21" get their
/// own classification matrices; every other classification group shares one.
pub fn build_report(records: &[MetricRecord], groups: &TaskGroups) -> Result<Report, ReportError> {
    let mut cells = fold_mean(records);
    let ties = rank_annotate(&mut cells);
    let winners = winner_counts(&cells, groups)?;
    let mut notes = Vec::new();
    for c in cells.iter().filter(|c| c.mean.is_none()) {
        notes.push(format!("{} / {} / {}: every fold undefined, cell left blank", c.task, c.model, c.metric));
    }
    let excluded: usize = cells.iter().map(|c| c.folds_excluded).sum();
    if excluded > 0 {
        notes.push(format!("{excluded} undefined fold value(s) excluded from fold means"));
    }
    let has = |tasks: &[String], m: MetricName| cells.iter().any(|c| c.metric == m && tasks.contains(&c.task));
    let mut main_tasks = Vec::new();
    let mut tox_tasks = Vec::new();
    let mut reg_tasks = Vec::new();
    for (g, tasks) in groups.groups() {
        for t in tasks {
            if has(std::slice::from_ref(t), MetricName::Mae) {
                reg_tasks.push(t.clone());
            } else if g.eq_ignore_ascii_case("tox21") {
                tox_tasks.push(t.clone());
            } else {
                main_tasks.push(t.clone());
            }
        }
    }
    let mut tables = vec![winner_table(&winners)];
    for (metric, tag) in [(MetricName::PrAuc, "pr_auc"), (MetricName::RocAuc, "roc_auc")] {
        if has(&main_tasks, metric) {
            tables.push(metric_matrix(
                &format!("classification_{tag}"),
                &format!("Classification {}", metric_label(metric)),
                &cells,
                &main_tasks,
                metric,
            ));
        }
        if has(&tox_tasks, metric) {
            tables.push(metric_matrix(
                &format!("tox21_{tag}"),
                &format!("Tox21 {}", metric_label(metric)),
                &cells,
                &tox_tasks,
                metric,
            ));
        } else {
            notes.push(format!("Tox21 {} table omitted: no Tox21 tasks in the input", metric_label(metric)));
        }
    }
    if has(&reg_tasks, MetricName::Mae) {
        tables.push(regression_matrix("regression_mae_pearson", &cells, &reg_tasks));
    } else {
        notes.push("regression table omitted: no regression tasks in the input".into());
    }
    let diag = diagnostics_table(&cells);
    if !diag.rows.is_empty() {
        tables.push(diag);
    }
    for w in &ties {
        notes.push(w.to_string());
    }
    Ok(Report {
        cells,
        winners,
        tables,
        notes,
        ties,
    })
}

/// Writes every table in `format` under `dir`, plus `fold_means.csv` and
/// `notes.txt`. Returns the written paths.
pub fn emit_tables(report: &Report, dir: &Path, format: Format) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut md_all = String::new();
    for t in &report.tables {
        let (ext, body) = match format {
            Format::Csv => ("csv", t.to_csv()),
            Format::Markdown => ("md", t.to_markdown()),
        };
        let path = dir.join(format!("{}.{ext}", t.name));
        std::fs::write(&path, &body)?;
        written.push(path);
        if format == Format::Markdown {
            md_all.push_str(&body);
            md_all.push('\n');
        }
    }
    if format == Format::Markdown {
        if !report.notes.is_empty() {
            md_all.push_str("### Notes\n\n");
            for n in &report.notes {
                let _ = writeln!(md_all, "- {n}");
            }
        }
        let path = dir.join("report.md");
        std::fs::write(&path, md_all)?;
        written.push(path);
    }
    let mut w = csv::Writer::from_path(dir.join("fold_means.csv"))?;
    w.write_record(["task", "model", "family", "metric", "mean", "folds_used", "folds_excluded", "rank", "winner"])?;
    for c in &report.cells {
        w.write_record([
            c.task.as_str(),
            c.model.as_str(),
            c.family.as_str(),
            c.metric.as_str(),
            &c.mean.map(|v| format!("{v:?}")).unwrap_or_default(),
            &c.folds_used.to_string(),
            &c.folds_excluded.to_string(),
            &c.rank.map(|r| r.to_string()).unwrap_or_default(),
            if c.winner { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    written.push(dir.join("fold_means.csv"));
    let notes: String = report.notes.iter().map(|n| format!("{n}\n")).collect();
    std::fs::write(dir.join("notes.txt"), notes)?;
    written.push(dir.join("notes.txt"));
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(task: &str, model: &str, family: Family, fold: usize, metric: MetricName, value: Option<f64>) -> MetricRecord {
        MetricRecord {
            task: task.into(),
            model: model.into(),
            family,
            fold,
            metric,
            value,
            flags: String::new(),
        }
    }

    #[test]
    fn fold_mean_examples() {
        let recs: Vec<MetricRecord> = (0..5).map(|f| rec("t", "m", Family::Ml, f, MetricName::RocAuc, Some(0.8))).collect();
        let c = fold_mean(&recs);
        assert!((c[0].mean.unwrap() - 0.8).abs() < 1e-15);
        let vals = [Some(1.0), Some(0.0), None, Some(1.0), Some(0.0)];
        let recs: Vec<MetricRecord> = vals.iter().enumerate().map(|(f, v)| rec("t", "m", Family::Ml, f, MetricName::RocAuc, *v)).collect();
        let c = fold_mean(&recs);
        assert_eq!(c[0].mean, Some(0.5));
        assert_eq!((c[0].folds_used, c[0].folds_excluded), (4, 1));
        let none: Vec<MetricRecord> = (0..3).map(|f| rec("t", "m", Family::Ml, f, MetricName::PrAuc, None)).collect();
        assert_eq!(fold_mean(&none)[0].mean, None);
    }

    #[test]
    fn ranks_follow_orientation() {
        let recs = vec![
            rec("t", "a", Family::Ml, 0, MetricName::RocAuc, Some(0.9)),
            rec("t", "b", Family::Ml, 0, MetricName::RocAuc, Some(0.8)),
            rec("t", "c", Family::Ml, 0, MetricName::RocAuc, Some(0.7)),
            rec("t", "a", Family::Ml, 0, MetricName::Mae, Some(0.5)),
            rec("t", "b", Family::Ml, 0, MetricName::Mae, Some(0.4)),
        ];
        let mut cells = fold_mean(&recs);
        assert!(rank_annotate(&mut cells).is_empty());
        let rank = |m: &str, metric| cells.iter().find(|c| c.model == m && c.metric == metric).unwrap().rank.unwrap();
        assert_eq!([rank("a", MetricName::RocAuc), rank("b", MetricName::RocAuc), rank("c", MetricName::RocAuc)], [1, 2, 3]);
        assert_eq!([rank("b", MetricName::Mae), rank("a", MetricName::Mae)], [1, 2]);
    }

    #[test]
    fn ties_share_rank_and_warn() {
        let recs = vec![
            rec("t", "seq", Family::Sequence, 0, MetricName::RocAuc, Some(0.8)),
            rec("t", "gnn", Family::Gnn, 0, MetricName::RocAuc, Some(0.8)),
            rec("t", "ml", Family::Ml, 0, MetricName::RocAuc, Some(0.7)),
        ];
        let mut cells = fold_mean(&recs);
        let ties = rank_annotate(&mut cells);
        assert_eq!(ties.len(), 1);
        assert!(ties[0].cross_family);
        assert_eq!(ties[0].chosen, "gnn");
        let gnn = cells.iter().find(|c| c.model == "gnn").unwrap();
        let seq = cells.iter().find(|c| c.model == "seq").unwrap();
        let ml = cells.iter().find(|c| c.model == "ml").unwrap();
        assert_eq!((gnn.rank, seq.rank, ml.rank), (Some(1), Some(1), Some(2)));
        assert!(gnn.winner && !seq.winner);
    }

    #[test]
    fn leading_label_renders_ties() {
        assert_eq!(leading_label(&[2, 2, 1, 0]), "ML/GNN");
        assert_eq!(leading_label(&[1, 3, 1, 0]), "GNN");
        assert_eq!(leading_label(&[0, 0, 0, 0]), "-");
    }

    #[test]
    fn single_model_wins_everything() {
        let mut groups = TaskGroups::new();
        groups.insert("a", "G");
        groups.insert("b", "G");
        let recs = vec![
            rec("a", "m", Family::LlmSar, 0, MetricName::PrAuc, Some(0.1)),
            rec("b", "m", Family::LlmSar, 0, MetricName::PrAuc, Some(0.2)),
        ];
        let mut cells = fold_mean(&recs);
        rank_annotate(&mut cells);
        let rows = winner_counts(&cells, &groups).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].wins, [0, 0, 0, 2]);
        assert_eq!(rows[0].leading, "LLM-SAR");
    }

    #[test]
    fn unmapped_task_and_family_conflict_are_errors() {
        let groups = TaskGroups::new();
        let mut cells = fold_mean(&[rec("a", "m", Family::Ml, 0, MetricName::PrAuc, Some(0.1))]);
        rank_annotate(&mut cells);
        assert!(matches!(winner_counts(&cells, &groups), Err(ReportError::UnmappedTask(_))));
        let mut groups = TaskGroups::new();
        groups.insert("a", "G");
        groups.insert("b", "G");
        let mut cells = fold_mean(&[
            rec("a", "m", Family::Ml, 0, MetricName::PrAuc, Some(0.1)),
            rec("b", "m", Family::Gnn, 0, MetricName::PrAuc, Some(0.1)),
        ]);
        rank_annotate(&mut cells);
        assert!(matches!(winner_counts(&cells, &groups), Err(ReportError::InconsistentFamily { .. })));
    }

    #[test]
    fn regression_cells_and_rounding() {
        let mut groups = TaskGroups::new();
        groups.insert("Caco2", "ADMET regression");
        let recs = vec![
            rec("Caco2", "et", Family::Ml, 0, MetricName::Mae, Some(0.4013)),
            rec("Caco2", "et", Family::Ml, 0, MetricName::Pearson, Some(0.66149)),
            rec("Caco2", "gin", Family::Gnn, 0, MetricName::Mae, Some(1.16)),
            rec("Caco2", "gin", Family::Gnn, 0, MetricName::Pearson, Some(0.267)),
        ];
        let rep = build_report(&recs, &groups).unwrap();
        let t = rep.tables.iter().find(|t| t.name == "regression_mae_pearson").unwrap();
        assert_eq!(t.rows[0][2], "0.401 / 0.661");
        assert!(t.to_markdown().contains("**0.401** / **0.661**"));
        assert!(rep.notes.iter().any(|n| n.contains("Tox21")));
        assert!(!rep.tables.iter().any(|t| t.name.starts_with("tox21")));
    }

    #[test]
    fn markdown_and_csv_share_numbers() {
        let mut groups = TaskGroups::new();
        groups.insert("a", "G");
        groups.insert("b", "Tox21");
        let mut recs = Vec::new();
        for (i, m) in ["x", "y", "z", "w"].iter().enumerate() {
            for t in ["a", "b"] {
                recs.push(rec(t, m, Family::ALL[i], 0, MetricName::PrAuc, Some(0.1 + 0.123456 * i as f64)));
            }
        }
        let rep = build_report(&recs, &groups).unwrap();
        let re = regex::Regex::new(r"\d+\.\d{3}").unwrap();
        for t in &rep.tables {
            let csv = t.to_csv();
            let a: Vec<&str> = re.find_iter(&csv).map(|m| m.as_str()).collect();
            let md = t.to_markdown();
            let b: Vec<&str> = re.find_iter(&md).map(|m| m.as_str()).collect();
            assert_eq!(a, b, "{}", t.name);
        }
    }
}
