//! Aggregate tables: per-parameter medians and first/third quartiles.
//!
//! Quartiles use linear interpolation between order statistics (the
//! "type 7" rule), which is documented here because different conventions
//! move the numbers slightly.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::run::ExperimentReport;
use crate::stats::quantile_type7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuartileSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl QuartileSummary {
    pub fn from_values(values: &[f64]) -> Self {
        QuartileSummary {
            median: quantile_type7(values, 0.5),
            q1: quantile_type7(values, 0.25),
            q3: quantile_type7(values, 0.75),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub label: String,
    pub parameter: String,
    pub summary: QuartileSummary,
}

/// Merge several reports into one comparison table. Every report must
/// cover the same parameter set.
pub fn summarize_reports(reports: &[ExperimentReport]) -> Result<Vec<SummaryRow>> {
    if reports.is_empty() {
        return Err(Error::invalid("reports", "need at least one report"));
    }
    let reference: BTreeSet<&String> = reports[0].aggregate.keys().collect();
    for r in &reports[1..] {
        let keys: BTreeSet<&String> = r.aggregate.keys().collect();
        if keys != reference {
            return Err(Error::invalid(
                "reports",
                format!(
                    "incompatible parameter sets: {:?} vs {:?}",
                    reference, keys
                ),
            ));
        }
    }
    let mut rows = Vec::new();
    for report in reports {
        for (param, summary) in &report.aggregate {
            rows.push(SummaryRow {
                label: report.algorithm.clone(),
                parameter: param.clone(),
                summary: *summary,
            });
        }
    }
    Ok(rows)
}

/// CSV form: `algorithm,parameter,median,q1,q3`.
pub fn write_summary_csv(rows: &[SummaryRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "algorithm,parameter,median,q1,q3")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.label, row.parameter, row.summary.median, row.summary.q1, row.summary.q3
        )?;
    }
    Ok(())
}

/// Aligned text table for terminals.
pub fn write_summary_text(rows: &[SummaryRow], out: &mut dyn Write) -> std::io::Result<()> {
    let mut widths = [9usize, 9];
    for row in rows {
        widths[0] = widths[0].max(row.label.len());
        widths[1] = widths[1].max(row.parameter.len());
    }
    writeln!(
        out,
        "{:<w0$}  {:<w1$}  {:>12}  {:>12}  {:>12}",
        "algorithm",
        "parameter",
        "median",
        "q1",
        "q3",
        w0 = widths[0],
        w1 = widths[1]
    )?;
    for row in rows {
        writeln!(
            out,
            "{:<w0$}  {:<w1$}  {:>12.6}  {:>12.6}  {:>12.6}",
            row.label,
            row.parameter,
            row.summary.median,
            row.summary.q1,
            row.summary.q3,
            w0 = widths[0],
            w1 = widths[1]
        )?;
    }
    Ok(())
}

/// The single-report aggregate CSV written next to `report.json`.
pub fn write_aggregate_csv(report: &ExperimentReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "parameter,median,q1,q3")?;
    for (param, s) in &report.aggregate {
        writeln!(out, "{},{},{},{}", param, s.median, s.q1, s.q3)?;
    }
    Ok(())
}
