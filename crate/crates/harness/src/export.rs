//! Metric and rank CSV files.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context};
use crowdgen_core::metrics::{Metric, MetricReport, ModelRanks};

pub const METRICS_FILE: &str = "metrics.csv";
pub const RANKS_FILE: &str = "ranks.csv";
pub const OVERALL_FILE: &str = "ranks_overall.csv";
pub const GROUPED_FILE: &str = "metrics_grouped.csv";

pub const METRICS_HEADER: &str = "scenario_id,model_id,dtw,aa,ao";
pub const RANKS_HEADER: &str = "model_id,metric,mean_rank";
pub const OVERALL_HEADER: &str = "model_id,overall_rank";
pub const GROUPED_HEADER: &str = "model_id,group,n,dtw_mean,dtw_std,aa_mean,aa_std,ao_mean,ao_std";

/// Grouping key of a scenario id: `x-<kind>-d<density>` for standard
/// scenarios, otherwise the text before the first dash.
pub fn scenario_group(id: &str) -> String {
    if id.starts_with("x-") {
        if let Some(k) = id.rfind("-s") {
            return id[..k].to_string();
        }
    }
    id.split('-').next().unwrap_or(id).to_string()
}

pub fn write_metrics<W: Write>(reports: &[MetricReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in reports {
        writeln!(w, "{},{},{},{},{}", r.scenario_id, r.model_id, r.dtw, r.aa, r.ao)?;
    }
    Ok(())
}

pub fn read_metrics<R: BufRead>(r: R) -> anyhow::Result<Vec<MetricReport>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != METRICS_HEADER {
                bail!("line 1: expected header {METRICS_HEADER:?}");
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 5 {
            bail!("line {}: expected 5 columns, found {}", i + 1, c.len());
        }
        let ctx = || format!("line {}", i + 1);
        out.push(MetricReport {
            scenario_id: c[0].to_string(),
            model_id: c[1].to_string(),
            dtw: c[2].parse().with_context(ctx)?,
            aa: c[3].parse().with_context(ctx)?,
            ao: c[4].parse().with_context(ctx)?,
        });
    }
    Ok(out)
}

pub fn write_ranks<W: Write>(ranks: &[ModelRanks], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{RANKS_HEADER}")?;
    for r in ranks {
        for m in Metric::ALL {
            writeln!(w, "{},{m},{}", r.model_id, r.get(m))?;
        }
    }
    Ok(())
}

pub fn write_overall<W: Write>(ranks: &[ModelRanks], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{OVERALL_HEADER}")?;
    for r in ranks {
        writeln!(w, "{},{}", r.model_id, r.overall)?;
    }
    Ok(())
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per model and scenario group: count, then mean and std of each metric.
pub fn write_grouped<W: Write>(reports: &[MetricReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{GROUPED_HEADER}")?;
    let mut groups: BTreeMap<(&str, String), Vec<&MetricReport>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((r.model_id.as_str(), scenario_group(&r.scenario_id)))
            .or_default()
            .push(r);
    }
    for ((model, group), rs) in &groups {
        write!(w, "{model},{group},{}", rs.len())?;
        for m in Metric::ALL {
            let vals: Vec<f64> = rs.iter().map(|r| m.value(r)).collect();
            let (mean, std) = mean_std(&vals);
            write!(w, ",{mean},{std}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Writes every CSV into `dir` and returns the file names.
pub fn export_results(reports: &[MetricReport], ranks: &[ModelRanks], dir: &Path) -> anyhow::Result<Vec<String>> {
    if reports.is_empty() {
        bail!("no metric reports to export");
    }
    std::fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    write_metrics(reports, &mut buf)?;
    std::fs::write(dir.join(METRICS_FILE), &buf)?;
    buf.clear();
    write_ranks(ranks, &mut buf)?;
    std::fs::write(dir.join(RANKS_FILE), &buf)?;
    buf.clear();
    write_overall(ranks, &mut buf)?;
    std::fs::write(dir.join(OVERALL_FILE), &buf)?;
    buf.clear();
    write_grouped(reports, &mut buf)?;
    std::fs::write(dir.join(GROUPED_FILE), &buf)?;
    Ok([METRICS_FILE, RANKS_FILE, OVERALL_FILE, GROUPED_FILE]
        .map(String::from)
        .to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups() {
        assert_eq!(scenario_group("x-evacuation1-d10-s3"), "x-evacuation1-d10");
        assert_eq!(scenario_group("g-17"), "g");
        assert_eq!(scenario_group("real-w2"), "real");
    }

    #[test]
    fn std_of_constant_is_zero() {
        assert_eq!(mean_std(&[2.5, 2.5, 2.5]), (2.5, 0.0));
    }
}
