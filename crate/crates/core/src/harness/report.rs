use std::str::FromStr;

use super::BenchmarkReport;
use crate::metrics::MetricsRow;

/// Headline columns in their fixed order.
pub const COLUMNS: [&str; 6] = [
    "Best Exist Rate",
    "Correct Exist Rate",
    "Score",
    "Valid Search %",
    "Valid Action %",
    "Preference Elicited (Active/Passive)",
];

const EXTRA_COLUMNS: [&str; 5] = ["Max-over-k Score", "Mean Turns", "Weighted Score", "Mean First Index", "Coverage"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Comma-separated rows.
    Tabular,
    /// The full report as JSON.
    Structured,
    /// Aligned plain-text table.
    Human,
}

#[derive(Debug, thiserror::Error)]
#[error("UNSUPPORTED_FORMAT: `{0}` (expected csv, json or table)")]
pub struct UnsupportedFormat(pub String);

impl FromStr for ReportFormat {
    type Err = UnsupportedFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" | "tabular" => Ok(ReportFormat::Tabular),
            "json" | "structured" => Ok(ReportFormat::Structured),
            "table" | "human" | "text" => Ok(ReportFormat::Human),
            other => Err(UnsupportedFormat(other.to_string())),
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn cells(row: &MetricsRow) -> Vec<String> {
    vec![
        row.group.clone(),
        row.episodes.to_string(),
        pct(row.best_exist_rate),
        pct(row.correct_exist_rate),
        pct(row.score),
        pct(row.valid_search_rate),
        pct(row.valid_action_rate),
        format!("{}/{}", pct(row.active_elicited), pct(row.passive_elicited)),
        pct(row.max_over_k_score),
        format!("{:.2}", row.mean_turns),
        pct(row.timing.mean_weighted_score),
        format!("{:.2}", row.timing.mean_first_index),
        pct(row.timing.coverage),
    ]
}

fn header() -> Vec<&'static str> {
    let mut h = vec!["Group", "Episodes"];
    h.extend(COLUMNS);
    h.extend(EXTRA_COLUMNS);
    h
}

/// Rows shown in tables: the overall row then each group. A report with no
/// episodes renders as the header alone.
fn rows(report: &BenchmarkReport) -> Vec<Vec<String>> {
    if report.episodes.is_empty() {
        return Vec::new();
    }
    std::iter::once(&report.overall).chain(&report.groups).map(cells).collect()
}

/// Renders a report. Rates are percentages with two decimals in the tabular
/// and human formats; the structured format keeps full precision.
pub fn render_report(report: &BenchmarkReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ReportFormat::Tabular => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header()).expect("in-memory write");
            for r in rows(report) {
                w.write_record(&r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
        ReportFormat::Human => {
            let head = header();
            let body = rows(report);
            let widths: Vec<usize> = (0..head.len())
                .map(|i| body.iter().map(|r| r[i].len()).chain([head[i].len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: Vec<&str>| {
                cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join(" | ")
            };
            let mut out = String::new();
            if let Some(knob) = &report.meta.options.knob {
                out.push_str(&format!("setting: {knob}\n"));
            }
            out.push_str(&format!(
                "adapter: {}  simulator: {}  mode: {}  k: {}\n",
                report.meta.adapter, report.meta.simulator, report.meta.config.mode, report.meta.options.k
            ));
            out.push_str(line(head.clone()).trim_end());
            out.push('\n');
            out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
            out.push('\n');
            for r in &body {
                out.push_str(line(r.iter().map(String::as_str).collect()).trim_end());
                out.push('\n');
            }
            out
        }
    }
}
