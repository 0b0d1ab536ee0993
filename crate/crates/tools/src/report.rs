//! Summary tables, error histograms and per-sequence records.
//!
//! Outputs written by [`write_report`]:
//!
//! * `report.csv`: `method,category,motions,mean_pct,median_pct`
//! * `report.txt`: the same numbers as an aligned table, one block per
//!   motion count, plus the share of zero-error sequences per method
//! * `hist_<method>_m<motions>.csv`: `bin_left,bin_right,count`

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use scc_core::evaluation::{aggregate, error_histogram, uniform_edges, Category, EvalRecord, Group, Histogram};
use scc_core::reference::reference_rows;
use scc_core::SccError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("records line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] SccError),
}

/// Error of one method on one sequence, averaged over `runs` trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub method: String,
    pub sequence_id: String,
    #[serde(with = "category_name")]
    pub category: Category,
    pub motions: usize,
    pub error_pct: f64,
    pub runs: usize,
    /// Mean wall time per trial in seconds, only recorded on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_runtime_s: Option<f64>,
}

mod category_name {
    use scc_core::evaluation::Category;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Category, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(c.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Category, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(D::Error::custom)
    }
}

impl SequenceResult {
    fn eval_record(&self) -> EvalRecord {
        EvalRecord {
            sequence_id: self.sequence_id.clone(),
            category: self.category,
            k: self.motions,
            error_pct: self.error_pct,
            runs: self.runs,
            mean_runtime: self.mean_runtime_s.unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub group: Group,
    pub motions: usize,
    pub mean_pct: f64,
    pub median_pct: f64,
}

/// Methods in order of first appearance.
fn methods(results: &[SequenceResult]) -> Vec<&str> {
    let mut seen = Vec::new();
    for r in results {
        if !seen.contains(&r.method.as_str()) {
            seen.push(r.method.as_str());
        }
    }
    seen
}

fn records_of(results: &[SequenceResult], method: &str) -> Vec<EvalRecord> {
    results
        .iter()
        .filter(|r| r.method == method)
        .map(SequenceResult::eval_record)
        .collect()
}

/// Mean and median per method, motion count and category.
pub fn summarize(results: &[SequenceResult]) -> Result<Vec<ReportRow>, ReportError> {
    let mut rows = Vec::new();
    for method in methods(results) {
        for a in aggregate(&records_of(results, method))? {
            rows.push(ReportRow {
                method: method.to_string(),
                group: a.group,
                motions: a.motions,
                mean_pct: a.mean_pct,
                median_pct: a.median_pct,
            });
        }
    }
    Ok(rows)
}

/// Appends the bundled published rows for every motion count in `rows`.
pub fn join_reference(rows: &mut Vec<ReportRow>) {
    let motions: BTreeSet<usize> = rows.iter().map(|r| r.motions).collect();
    for k in motions {
        for reference in reference_rows(k) {
            let groups = [Category::Checkerboard, Category::Traffic, Category::Other]
                .map(Group::Category)
                .into_iter()
                .chain([Group::All]);
            for group in groups {
                if let Some((mean, median)) = reference.get(group) {
                    rows.push(ReportRow {
                        method: reference.method.to_string(),
                        group,
                        motions: k,
                        mean_pct: mean,
                        median_pct: median,
                    });
                }
            }
        }
    }
}

/// Method names such as `SCC (3,4)` contain commas and come out quoted.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "category", "motions", "mean_pct", "median_pct"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.group.to_string(),
            r.motions.to_string(),
            format!("{:.4}", r.mean_pct),
            format!("{:.4}", r.median_pct),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn aligned(table: &[Vec<String>]) -> String {
    let cols = table.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| table.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in table {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// One block per motion count: methods down, `mean median` per group across.
pub fn report_table(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    let motions: BTreeSet<usize> = rows.iter().map(|r| r.motions).collect();
    for k in motions {
        let block: Vec<&ReportRow> = rows.iter().filter(|r| r.motions == k).collect();
        let groups: BTreeSet<Group> = block.iter().map(|r| r.group).collect();
        let mut names: Vec<&str> = Vec::new();
        for r in &block {
            if !names.contains(&r.method.as_str()) {
                names.push(&r.method);
            }
        }
        let mut head = vec![String::new()];
        let mut sub = vec!["method".to_string()];
        for g in &groups {
            head.push(g.to_string());
            head.push(String::new());
            sub.push("mean".into());
            sub.push("median".into());
        }
        let mut table = vec![head, sub];
        for name in names {
            let mut line = vec![name.to_string()];
            for g in &groups {
                match block.iter().find(|r| r.method == name && r.group == *g) {
                    Some(r) => {
                        line.push(format!("{:.2}", r.mean_pct));
                        line.push(format!("{:.2}", r.median_pct));
                    }
                    None => line.extend(["-".to_string(), "-".to_string()]),
                }
            }
            table.push(line);
        }
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "{k} motions (misclassification %)");
        out.push_str(&aligned(&table));
    }
    out
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_left,bin_right,count\n");
    for (w, count) in h.edges.windows(2).zip(&h.counts) {
        let _ = writeln!(out, "{},{},{}", w[0], w[1], count);
    }
    out
}

/// Histogram of per-sequence errors for each method and motion count.
pub fn histograms(
    results: &[SequenceResult],
    bin_width: f64,
) -> Result<Vec<(String, usize, Histogram)>, ReportError> {
    let edges = uniform_edges(bin_width)?;
    let mut out = Vec::new();
    for method in methods(results) {
        let motions: BTreeSet<usize> = results
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.motions)
            .collect();
        for k in motions {
            let errors: Vec<f64> = results
                .iter()
                .filter(|r| r.method == method && r.motions == k)
                .map(|r| r.error_pct)
                .collect();
            out.push((method.to_string(), k, error_histogram(&errors, &edges)?));
        }
    }
    Ok(out)
}

/// `SCC (3,4K)` becomes `scc_3_4k`.
pub fn slug(method: &str) -> String {
    let mut s = String::new();
    for ch in method.chars() {
        if ch.is_ascii_alphanumeric() {
            s.push(ch.to_ascii_lowercase());
        } else if !s.is_empty() && !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_end_matches('_').to_string()
}

pub fn records_jsonl(results: &[SequenceResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<SequenceResult>, ReportError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ReportError::Record {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub reference: bool,
    pub bin_width: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            reference: false,
            bin_width: 2.0,
        }
    }
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, ReportError> {
    fs::write(&path, contents).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes the CSV, text table and histograms into `out`, returning the
/// files written.
pub fn write_report(
    out: &Path,
    results: &[SequenceResult],
    options: &ReportOptions,
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(out).map_err(|source| ReportError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let mut rows = summarize(results)?;
    if options.reference {
        join_reference(&mut rows);
    }
    let hists = histograms(results, options.bin_width)?;
    let mut text = report_table(&rows);
    text.push_str("\nzero-error sequences\n");
    let mut table = vec![vec!["method".to_string(), "motions".into(), "sequences".into(), "share %".into()]];
    for (method, k, h) in &hists {
        let total: usize = h.counts.iter().sum();
        table.push(vec![method.clone(), k.to_string(), total.to_string(), format!("{:.2}", h.zero_share_pct)]);
    }
    text.push_str(&aligned(&table));

    let mut written = vec![
        write_file(out.join("report.csv"), &report_csv(&rows))?,
        write_file(out.join("report.txt"), &text)?,
    ];
    for (method, k, h) in &hists {
        let name = format!("hist_{}_m{k}.csv", slug(method));
        written.push(write_file(out.join(name), &histogram_csv(h))?);
    }
    Ok(written)
}
