//! CSV and JSON emission with a fixed schema:
//! `experiment,kind,n,N,c_num,c_den,beta,trials,master_seed,metric_name,metric_value,stderr`
//! — one row per metric, UTF-8, LF line endings, '.' decimal separator,
//! 17 significant digits.

use std::io::Write;
use std::path::Path;

use crate::diagnostics::{C0Report, NormCheck, ResidualReport, VarianceScalingTable};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, MpEvalConfig, OutputFormat};
use crate::harness::runner::SweepResult;
use crate::mp_law::{ComplexPoint, MpLaw};

/// One emitted metric.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricRow {
    pub experiment: String,
    pub kind: String,
    pub n: u64,
    #[serde(rename = "N")]
    pub cols: u64,
    pub c_num: u64,
    pub c_den: u64,
    pub beta: u64,
    pub trials: u64,
    pub master_seed: u64,
    pub metric_name: String,
    pub metric_value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EmittedReport {
    pub rows: Vec<MetricRow>,
}

/// 17 significant digits, enough to reproduce any f64 exactly.
pub fn format_g17(x: f64) -> String {
    format!("{x:.16e}")
}

const HEADER: &str =
    "experiment,kind,n,N,c_num,c_den,beta,trials,master_seed,metric_name,metric_value,stderr";

fn base_row(cfg: &ExperimentConfig, n: usize, cols: usize, beta: usize) -> MetricRow {
    MetricRow {
        experiment: cfg.experiment.as_str().to_string(),
        kind: cfg.kind.as_str().to_string(),
        n: n as u64,
        cols: cols as u64,
        c_num: cfg.aspect_num,
        c_den: cfg.aspect_den,
        beta: beta as u64,
        trials: cfg.trials,
        master_seed: cfg.master_seed,
        metric_name: String::new(),
        metric_value: 0.0,
        stderr: 0.0,
    }
}

fn with_metric(mut row: MetricRow, name: &str, value: f64, stderr: f64) -> MetricRow {
    row.metric_name = name.to_string();
    row.metric_value = value;
    row.stderr = stderr;
    row
}

pub fn rows_from_sweep(cfg: &ExperimentConfig, result: &SweepResult) -> Vec<MetricRow> {
    let mut rows = Vec::with_capacity(2 * result.rows.len());
    for r in &result.rows {
        let base = base_row(cfg, r.n, r.cols, cfg.beta);
        rows.push(with_metric(
            base.clone(),
            "kdist_mean_single",
            r.kdist_mean_single,
            r.se,
        ));
        rows.push(with_metric(base, "kdist_of_average", r.kdist_of_average, 0.0));
    }
    rows
}

pub fn rows_from_diagnose(cfg: &ExperimentConfig, reports: &[(usize, C0Report)]) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    for (n, report) in reports {
        let spec_cols = *n * cfg.aspect_num as usize / cfg.aspect_den as usize;
        let base = base_row(cfg, *n, spec_cols, cfg.beta);
        let se = &report.standard_errors;
        for (name, value, stderr) in [
            ("q_hat", report.q_hat, se.q_hat),
            ("pair_corr_sup", report.pair_corr_sup, se.pair_corr_sup),
            ("quad_mixed_sup", report.quad_mixed_sup, se.quad_mixed_sup),
            ("rho_hat", report.rho_hat, se.rho_hat),
            (
                "fourth_moment_max",
                report.fourth_moment_max,
                se.fourth_moment_max,
            ),
        ] {
            rows.push(with_metric(base.clone(), name, value, stderr));
        }
    }
    rows
}

pub fn rows_from_residual(
    cfg: &ExperimentConfig,
    reports: &[(usize, ResidualReport)],
) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    for (n, report) in reports {
        let spec_cols = *n * cfg.aspect_num as usize / cfg.aspect_den as usize;
        let base = base_row(cfg, *n, spec_cols, cfg.beta);
        rows.push(with_metric(
            base,
            "sup_residual",
            report.sup_residual,
            report.residual_se,
        ));
    }
    rows
}

pub fn rows_from_varcheck(cfg: &ExperimentConfig, table: &VarianceScalingTable) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    for cell in &table.rows {
        let cols = cell.n * cfg.aspect_num as usize / cfg.aspect_den as usize;
        let base = base_row(cfg, cell.n, cols, cell.beta);
        // relative MC error of a sample variance: sqrt(2/(T-1))
        let rel = if cell.trials >= 2 {
            (2.0 / (cell.trials as f64 - 1.0)).sqrt()
        } else {
            0.0
        };
        rows.push(with_metric(
            base.clone(),
            "var_hat",
            cell.var_hat,
            cell.var_hat * rel,
        ));
        rows.push(with_metric(
            base,
            "normalized",
            cell.normalized,
            cell.normalized * rel,
        ));
    }
    rows
}

pub fn rows_from_normcheck(cfg: &ExperimentConfig, reports: &[(usize, NormCheck)]) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    for (n, report) in reports {
        let spec_cols = *n * cfg.aspect_num as usize / cfg.aspect_den as usize;
        let base = base_row(cfg, *n, spec_cols, cfg.beta);
        rows.push(with_metric(
            base.clone(),
            "mean_norm",
            report.mean_norm,
            report.mean_se,
        ));
        rows.push(with_metric(base, "max_norm", report.max_norm, 0.0));
    }
    rows
}

/// Pointwise law evaluation rows for plotting: density and CDF on an x grid,
/// plus the Stieltjes transform along `x + i v_im` when requested. The
/// abscissa is carried inside the metric name (`density@<x>`).
pub fn rows_from_mp_eval(cfg: &MpEvalConfig) -> Result<Vec<MetricRow>> {
    let c = cfg.aspect_num as f64 / cfg.aspect_den as f64;
    let law = MpLaw::new(c)?;
    let x_min = cfg.x_min.unwrap_or(law.a() - 0.5);
    let x_max = cfg.x_max.unwrap_or(law.b() + 0.5);
    if !(x_max > x_min) {
        return Err(Error::Config(format!(
            "x_max = {x_max} must exceed x_min = {x_min}"
        )));
    }
    let base = MetricRow {
        experiment: "MP_EVAL".to_string(),
        kind: "MP_LAW".to_string(),
        n: 0,
        cols: 0,
        c_num: cfg.aspect_num,
        c_den: cfg.aspect_den,
        beta: 0,
        trials: 0,
        master_seed: 0,
        metric_name: String::new(),
        metric_value: 0.0,
        stderr: 0.0,
    };
    let mut rows = Vec::new();
    for i in 0..cfg.points {
        let x = x_min + (x_max - x_min) * i as f64 / (cfg.points - 1) as f64;
        let tag = format_g17(x);
        rows.push(with_metric(
            base.clone(),
            &format!("density@{tag}"),
            law.density(x),
            0.0,
        ));
        rows.push(with_metric(base.clone(), &format!("cdf@{tag}"), law.cdf(x), 0.0));
        if let Some(v) = cfg.v_im {
            let m = law.stieltjes_closed(ComplexPoint::new(x, v))?;
            rows.push(with_metric(
                base.clone(),
                &format!("stieltjes_re@{tag}"),
                m.re,
                0.0,
            ));
            rows.push(with_metric(
                base.clone(),
                &format!("stieltjes_im@{tag}"),
                m.im,
                0.0,
            ));
        }
    }
    Ok(rows)
}

/// Writes the report in the requested format; CSV is the fixed schema above,
/// JSON is a field-for-field mirror of the same rows.
pub fn write_report(rows: &[MetricRow], w: &mut impl Write, format: OutputFormat) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            w.write_all(HEADER.as_bytes())?;
            w.write_all(b"\n")?;
            for r in rows {
                let line = format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.experiment,
                    r.kind,
                    r.n,
                    r.cols,
                    r.c_num,
                    r.c_den,
                    r.beta,
                    r.trials,
                    r.master_seed,
                    r.metric_name,
                    format_g17(r.metric_value),
                    format_g17(r.stderr),
                );
                w.write_all(line.as_bytes())?;
            }
        }
        OutputFormat::Json => {
            let report = EmittedReport { rows: rows.to_vec() };
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            w.write_all(text.as_bytes())?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Writes the report to a file path.
pub fn emit(rows: &[MetricRow], path: &Path, format: OutputFormat) -> Result<()> {
    let mut buf = Vec::new();
    write_report(rows, &mut buf, format).expect("in-memory write cannot fail");
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Parses a JSON report produced by [`write_report`].
pub fn parse_report(text: &str) -> Result<EmittedReport> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}
