//! Report rows and their CSV, JSON and plain-text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use namescarcity_core::multiplicity::{classify, qvalues_for_results, QValueConfig};
use namescarcity_core::strata::{CommonProportion, RegionSummary};
use namescarcity_core::ScarcityResult;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub stratum: String,
    pub group: String,
    /// Short code shown in tables; the group label itself.
    pub code: String,
    pub n_people: usize,
    pub n_distinct: usize,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub highly_significant: bool,
    pub skipped: bool,
    pub hits: Option<u64>,
    pub pool_size: usize,
    pub pool_distinct: usize,
}

/// One analysis batch: a stratum tested with its own pool and q-values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub stratum: String,
    pub pi0_hat: Option<f64>,
    pub rows: Vec<ReportRow>,
}

impl Batch {
    pub fn build(stratum: &str, results: &[ScarcityResult], qcfg: &QValueConfig, alpha: f64) -> CliResult<Batch> {
        let report = qvalues_for_results(results, qcfg)?;
        let classified = classify(results, report.as_ref(), alpha)?;
        let rows = classified
            .into_iter()
            .map(|c| ReportRow {
                stratum: stratum.to_string(),
                code: c.result.group.clone(),
                group: c.result.group,
                n_people: c.result.n_people,
                n_distinct: c.result.n_distinct,
                p: c.result.p_hat,
                q: c.q,
                highly_significant: c.highly_significant,
                skipped: c.result.skipped,
                hits: c.result.hits,
                pool_size: c.result.pool_size,
                pool_distinct: c.result.pool_distinct,
            })
            .collect();
        Ok(Batch { stratum: stratum.to_string(), pi0_hat: report.map(|r| r.pi0_hat), rows })
    }

    pub fn row(&self, group: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.group == group)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub kind: String,
    pub provenance: BTreeMap<String, serde_json::Value>,
    pub batches: Vec<Batch>,
    pub common_proportion: Option<CommonProportion>,
    pub region_summary: Option<RegionSummary>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long-format rows, one per (stratum, group). Floats use the shortest
/// representation that reads back to the same value.
pub fn write_rows_csv<W: Write>(rows: &[&ReportRow], sink: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["stratum", "group", "code", "n_people", "n_distinct", "p", "q", "highly_significant", "skipped"])?;
    for r in rows {
        w.write_record([
            r.stratum.clone(),
            r.group.clone(),
            r.code.clone(),
            r.n_people.to_string(),
            r.n_distinct.to_string(),
            opt(r.p),
            opt(r.q),
            r.highly_significant.to_string(),
            r.skipped.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Human rendering of a p-value. Estimates with no simulated sample at or
/// below the observed count print as `<1/S`; others below 0.001 as `<0.001`.
pub fn format_p(p: Option<f64>, hits: Option<u64>, n_sims: usize) -> String {
    match (p, hits) {
        (None, _) => "-".to_string(),
        (Some(_), Some(0)) => format!("<{}", significant(1.0 / n_sims as f64, 3)),
        (Some(p), _) if p < 0.001 => "<0.001".to_string(),
        (Some(p), _) => {
            let s = format!("{p:.3}");
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        }
    }
}

/// `x > 0` rounded to `digits` significant digits, trailing zeros dropped.
fn significant(x: f64, digits: i32) -> String {
    let decimals = (digits - 1 - x.log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl AnalysisReport {
    /// Wide text table: one row per group, one p column per batch, plus
    /// the region counts when a sweep was run. Highly significant cells
    /// carry a trailing `*`.
    pub fn render_table(&self, n_sims: usize) -> String {
        let mut groups: Vec<&str> = Vec::new();
        for b in &self.batches {
            for r in &b.rows {
                if !groups.contains(&r.group.as_str()) {
                    groups.push(&r.group);
                }
            }
        }
        let mut header = vec!["Group".to_string(), "N".to_string(), "L".to_string()];
        for b in &self.batches {
            header.push(if b.stratum == "all" { "p".to_string() } else { format!("{}-p", b.stratum) });
        }
        if self.region_summary.is_some() {
            header.push("Prop. Regions".into());
            header.push("Count".into());
        }
        let mut rows = vec![header];
        for g in groups {
            let first = self.batches.iter().find_map(|b| b.row(g));
            let mut row = vec![
                g.to_string(),
                first.map(|r| r.n_people.to_string()).unwrap_or_default(),
                first.map(|r| r.n_distinct.to_string()).unwrap_or_default(),
            ];
            for b in &self.batches {
                row.push(match b.row(g) {
                    Some(r) => {
                        let mut cell = format_p(r.p, r.hits, n_sims);
                        if r.highly_significant {
                            cell.push('*');
                        }
                        cell
                    }
                    None => "-".into(),
                });
            }
            if let Some(summary) = &self.region_summary {
                let count = summary.groups.get(g);
                row.push(
                    count
                        .and_then(|c| c.proportion)
                        .map(|p| format!("{:.3}", p).trim_end_matches('0').trim_end_matches('.').to_string())
                        .unwrap_or_else(|| "-".into()),
                );
                row.push(count.map(|c| c.count_label()).unwrap_or_else(|| "0/0".into()));
            }
            rows.push(row);
        }
        let widths: Vec<usize> =
            (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (i, row) in rows.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
            if i == 0 {
                let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            }
        }
        out
    }
}
