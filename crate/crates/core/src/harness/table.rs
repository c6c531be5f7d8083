//! Long-format CSV tables.
//!
//! A file starts with `#` comment lines (code version, the resolved config
//! and the sentinel legend), then a header row, then one row per seed and
//! one summary row per (grid point, estimator, loss). Numbers use the
//! shortest representation that round-trips. Sentinels:
//!
//! * `inf`: the quantity is infinite;
//! * `na`: the quantity does not apply or could not be computed;
//! * `fail:<reason>`: the estimator failed for this cell.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::theory::{Divergence, TheoryReport};

use super::config::SweepConfig;

pub const INF: &str = "inf";
pub const NA: &str = "na";
pub const FAIL_PREFIX: &str = "fail:";
pub const OK: &str = "ok";

pub const SWEEP_COLUMNS: [&str; 24] = [
    "row_type",
    "experiment",
    "sweep_value",
    "estimator",
    "loss",
    "path",
    "k",
    "n",
    "dim",
    "seed",
    "log_z_hat",
    "true_log_z",
    "squared_error",
    "mse",
    "mse_se",
    "n_ok",
    "n_failed",
    "theory_mse",
    "fr_over_n",
    "no_anneal_lower",
    "geometric_upper",
    "arithmetic_lower",
    "oracle_upper",
    "status",
];

/// Formats a number, mapping infinities and NaN to sentinels.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        NA.to_string()
    } else if v.is_infinite() {
        if v > 0.0 { INF.to_string() } else { format!("-{INF}") }
    } else {
        format!("{v}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), num)
}

pub fn div(v: Divergence) -> String {
    match v {
        Divergence::Finite(x) => num(x),
        Divergence::Infinite => INF.to_string(),
    }
}

/// Parses a numeric field: `inf` is infinity, `na` is `None`.
pub fn parse_num(s: &str) -> Result<Option<f64>> {
    match s {
        NA => Ok(None),
        INF => Ok(Some(f64::INFINITY)),
        _ if s == format!("-{INF}") => Ok(Some(f64::NEG_INFINITY)),
        _ if s.starts_with(FAIL_PREFIX) => Ok(None),
        _ => s
            .parse()
            .map(Some)
            .map_err(|_| Error::Io(format!("malformed number `{s}`"))),
    }
}

/// Quantities shared by every row of one (grid point, estimator, loss).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellTheory {
    pub theory_mse: Option<Divergence>,
    pub fr_over_n: Option<f64>,
    pub no_anneal_lower: f64,
    pub geometric_upper: f64,
    pub arithmetic_lower: Option<f64>,
    pub oracle_upper: f64,
}

/// One seed's estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub experiment: String,
    pub sweep_value: f64,
    pub estimator: String,
    pub loss: String,
    pub path: String,
    pub k: usize,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    /// `Err` holds the failure reason.
    pub log_z_hat: std::result::Result<f64, String>,
    pub true_log_z: f64,
}

impl SweepRow {
    pub fn squared_error(&self) -> Option<f64> {
        self.log_z_hat.as_ref().ok().map(|v| (v - self.true_log_z).powi(2))
    }
}

/// Aggregate over the seeds of one (grid point, estimator, loss).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub sweep_value: f64,
    pub estimator: String,
    pub loss: String,
    pub path: String,
    pub k: usize,
    pub n: usize,
    pub dim: usize,
    pub true_log_z: f64,
    pub mse: Option<f64>,
    pub mse_se: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
    pub theory: CellTheory,
}

impl SummaryRow {
    /// Mean and standard error of the successful squared errors, in seed
    /// order.
    pub fn from_rows(rows: &[SweepRow], theory: CellTheory) -> Self {
        let first = &rows[0];
        let errs: Vec<f64> = rows.iter().filter_map(SweepRow::squared_error).collect();
        let n_ok = errs.len();
        let (mse, mse_se) = if n_ok >= 2 {
            let m = errs.iter().sum::<f64>() / n_ok as f64;
            let var = errs.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n_ok - 1) as f64;
            (Some(m), Some((var / n_ok as f64).sqrt()))
        } else {
            (None, None)
        };
        SummaryRow {
            experiment: first.experiment.clone(),
            sweep_value: first.sweep_value,
            estimator: first.estimator.clone(),
            loss: first.loss.clone(),
            path: first.path.clone(),
            k: first.k,
            n: first.n,
            dim: first.dim,
            true_log_z: first.true_log_z,
            mse,
            mse_se,
            n_ok,
            n_failed: rows.len() - n_ok,
            theory,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepTable {
    pub seeds: Vec<SweepRow>,
    pub summaries: Vec<SummaryRow>,
}

fn header(config: &SweepConfig) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# abe {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(h, "# config:");
    for line in config.to_toml().lines() {
        let _ = writeln!(h, "#   {line}");
    }
    let _ = writeln!(
        h,
        "# sentinels: {INF} = infinite, {NA} = not applicable or not computable, {FAIL_PREFIX}<reason> = estimator failed"
    );
    h
}

impl SweepTable {
    /// Seed rows first, in cell order, then the summaries.
    pub fn write<W: Write>(&self, config: &SweepConfig, mut out: W) -> Result<()> {
        out.write_all(header(config).as_bytes())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_COLUMNS)?;
        for r in &self.seeds {
            let (hat, sq, status) = match &r.log_z_hat {
                Ok(v) => (num(*v), opt(r.squared_error()), OK.to_string()),
                Err(reason) => (NA.to_string(), NA.to_string(), format!("{FAIL_PREFIX}{reason}")),
            };
            w.write_record([
                "seed".to_string(),
                r.experiment.clone(),
                num(r.sweep_value),
                r.estimator.clone(),
                r.loss.clone(),
                r.path.clone(),
                r.k.to_string(),
                r.n.to_string(),
                r.dim.to_string(),
                r.seed.to_string(),
                hat,
                num(r.true_log_z),
                sq,
                NA.into(),
                NA.into(),
                NA.into(),
                NA.into(),
                NA.into(),
                NA.into(),
                NA.into(),
                NA.into(),
                NA.into(),
                NA.into(),
                status,
            ])?;
        }
        for s in &self.summaries {
            let t = &s.theory;
            let status = if s.n_failed == 0 {
                OK.to_string()
            } else {
                format!("{FAIL_PREFIX}{} of {} seeds failed", s.n_failed, s.n_ok + s.n_failed)
            };
            w.write_record([
                "summary".to_string(),
                s.experiment.clone(),
                num(s.sweep_value),
                s.estimator.clone(),
                s.loss.clone(),
                s.path.clone(),
                s.k.to_string(),
                s.n.to_string(),
                s.dim.to_string(),
                NA.into(),
                NA.into(),
                num(s.true_log_z),
                NA.into(),
                opt(s.mse),
                opt(s.mse_se),
                s.n_ok.to_string(),
                s.n_failed.to_string(),
                t.theory_mse.map_or_else(|| NA.to_string(), div),
                opt(t.fr_over_n),
                num(t.no_anneal_lower),
                num(t.geometric_upper),
                opt(t.arithmetic_lower),
                num(t.oracle_upper),
                status,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_string(&self, config: &SweepConfig) -> Result<String> {
        let mut buf = Vec::new();
        self.write(config, &mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn save(&self, config: &SweepConfig, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string(config)?)?;
        Ok(())
    }
}

pub const THEORY_COLUMNS: [&str; 26] = [
    "experiment",
    "sweep_value",
    "path",
    "k",
    "n",
    "dim",
    "true_log_z",
    "d_chi2_fwd",
    "d_chi2_rev",
    "d_hellinger2",
    "d_harmonic",
    "epsilon",
    "fisher_rao_length",
    "mse_pred_is",
    "mse_pred_revis",
    "mse_pred_nce",
    "mse_pred_is_revis",
    "mse_pred_annealed",
    "alpha_h",
    "optimal_mse",
    "distance",
    "no_anneal_lower",
    "geometric_upper",
    "arithmetic_lower",
    "oracle_upper",
    "status",
];

/// One theory report per (grid point, path), or the reason it failed.
#[derive(Debug, Clone)]
pub struct TheoryRow {
    pub sweep_value: f64,
    pub path: String,
    pub k: usize,
    pub n: usize,
    pub dim: usize,
    pub true_log_z: f64,
    pub report: std::result::Result<TheoryReport, String>,
}

pub fn write_theory<W: Write>(rows: &[TheoryRow], config: &SweepConfig, mut out: W) -> Result<()> {
    out.write_all(header(config).as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(THEORY_COLUMNS)?;
    for r in rows {
        let mut rec = vec![
            config.experiment.name().to_string(),
            num(r.sweep_value),
            r.path.clone(),
            r.k.to_string(),
            r.n.to_string(),
            r.dim.to_string(),
            num(r.true_log_z),
        ];
        match &r.report {
            Ok(t) => {
                let b = &t.mse_pred_binary;
                rec.extend([
                    div(t.d_chi2_fwd),
                    div(t.d_chi2_rev),
                    num(t.d_hellinger2),
                    num(t.d_harmonic),
                    num(t.epsilon),
                    opt(t.fisher_rao_length),
                    div(b.is),
                    div(b.rev_is),
                    div(b.nce),
                    div(b.is_rev_is),
                    t.mse_pred_annealed.map_or_else(|| NA.to_string(), div),
                    num(t.alpha_h),
                    num(t.optimal_mse),
                    num(t.bounds.distance),
                    num(t.bounds.no_anneal_lower),
                    num(t.bounds.geometric_upper),
                    opt(t.bounds.arithmetic_lower),
                    num(t.bounds.oracle_upper),
                    OK.to_string(),
                ]);
            }
            Err(reason) => {
                rec.extend(std::iter::repeat_n(NA.to_string(), THEORY_COLUMNS.len() - rec.len() - 1));
                rec.push(format!("{FAIL_PREFIX}{reason}"));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A summary row as read back from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryPoint {
    pub sweep_value: f64,
    pub estimator: String,
    pub loss: String,
    pub mse: Option<f64>,
    pub theory_mse: Option<f64>,
}

/// Reads the summary rows of a sweep CSV.
pub fn read_summaries<R: std::io::Read>(input: R) -> Result<Vec<SummaryPoint>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Io(format!("missing column `{name}`")))
    };
    let (row_type, x, est, loss, mse, theory) = (
        col("row_type")?,
        col("sweep_value")?,
        col("estimator")?,
        col("loss")?,
        col("mse")?,
        col("theory_mse")?,
    );
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Io("short row".into()));
        if field(row_type)? != "summary" {
            continue;
        }
        out.push(SummaryPoint {
            sweep_value: parse_num(field(x)?)?.ok_or_else(|| Error::Io("summary row without sweep value".into()))?,
            estimator: field(est)?.to_string(),
            loss: field(loss)?.to_string(),
            mse: parse_num(field(mse)?)?,
            theory_mse: parse_num(field(theory)?)?,
        });
    }
    Ok(out)
}
