use std::fs;
use std::path::Path;

use safebai::bai::{RunRecord, RunStatus, Variant};
use safebai::theory::{complexity_report, ComplexityReport, ReportParams};

use crate::aggregate::{aggregate, AggregateRow};
use crate::config::{ExperimentConfig, Sweep, SweepParameter};
use crate::error::{Error, Result};
use crate::output::{
    ensure_dir, run_file_name, write_aggregate_csv, write_run_csv, write_series_csv, write_table1_csv, Manifest,
    Series, Table1Row,
};
use crate::runner::run_replications;
use crate::svg::line_plot;

/// What a command produced; `truncated` counts runs that hit the round cap.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub rows: Vec<AggregateRow>,
    pub truncated: usize,
}

fn truncated(records: &[RunRecord]) -> usize {
    records.iter().filter(|r| r.status == RunStatus::Truncated).count()
}

fn summarize(cfg: &ExperimentConfig, records: &[RunRecord], parameter: &str, value: f64) -> Result<AggregateRow> {
    let inst = cfg.build_instance()?;
    Ok(aggregate(records, &inst, cfg.epsilon(), cfg.fingerprint(), parameter, value))
}

/// Theory calculators evaluated at the instance's true safe coefficients.
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<ComplexityReport> {
    let inst = cfg.build_instance()?;
    let algo = cfg.algo_config(&inst);
    let params = ReportParams {
        epsilon: algo.epsilon,
        delta_r: algo.delta_r,
        delta_s: algo.delta_s_prime,
        noise_r: algo.noise_r,
        lambda: algo.lambda,
    };
    complexity_report(&inst, &inst.max_safe_coefficients(), &params).map_err(|e| Error::Config(e.to_string()))
}

/// Per-run CSVs, a one-row aggregate and a manifest.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path, workers: Option<usize>) -> Result<Outcome> {
    let records = run_replications(cfg, workers)?;
    ensure_dir(out)?;
    let mut files = vec![];
    for (i, r) in records.iter().enumerate() {
        let name = run_file_name(i);
        write_run_csv(&out.join(&name), r)?;
        files.push(name);
    }
    let row = summarize(cfg, &records, "run", f64::NAN)?;
    write_aggregate_csv(&out.join("aggregate.csv"), std::slice::from_ref(&row))?;
    files.push("aggregate.csv".into());
    let report = if cfg.experiment.report { Some(cmd_bounds(cfg)?) } else { None };
    Manifest::new("run", cfg, files, report).write(&out.join("manifest.json"))?;
    Ok(Outcome { rows: vec![row], truncated: truncated(&records) })
}

/// The unsafe baseline against the conservative safe variant, both at the
/// configured settings.
pub fn cmd_table1(cfg: &ExperimentConfig, out: &Path, workers: Option<usize>) -> Result<(Vec<Table1Row>, Outcome)> {
    let inst = cfg.build_instance()?;
    let k = inst.num_arms();
    let t_fe = cfg.algorithm.t_fe;
    let fe = if t_fe % k == 0 { format!("{k}x{}", t_fe / k) } else { t_fe.to_string() };
    let mut rows = vec![];
    let mut table = vec![];
    let mut trunc = 0;
    for (name, variant) in [("LinGapE", Variant::Lingape), ("Safe-LinGapE", Variant::SafeConservative)] {
        let mut c = cfg.clone();
        c.algorithm.variant = variant;
        let records = run_replications(&c, workers)?;
        trunc += truncated(&records);
        let row = summarize(&c, &records, name, f64::NAN)?;
        table.push(Table1Row {
            algorithm: name.into(),
            forced_exploration: fe.clone(),
            mean_tau: row.mean_tau,
            unsafe_pct: 100.0 * row.mean_unsafe_fraction,
        });
        rows.push(row);
    }
    ensure_dir(out)?;
    write_table1_csv(&out.join("table1.csv"), &table)?;
    write_aggregate_csv(&out.join("table1_aggregate.csv"), &rows)?;
    let files = vec!["table1.csv".into(), "table1_aggregate.csv".into()];
    Manifest::new("table1", cfg, files, None).write(&out.join("manifest.json"))?;
    Ok((table, Outcome { rows, truncated: trunc }))
}

/// Aggregate rows for the swept settings; nothing is written.
pub fn sweep_rows(
    cfg: &ExperimentConfig,
    param: SweepParameter,
    values: &[f64],
    workers: Option<usize>,
) -> Result<Outcome> {
    let mut rows = vec![];
    let mut trunc = 0;
    for v in values {
        let c = cfg.with_value(param, *v)?;
        c.validate()?;
        let records = run_replications(&c, workers)?;
        trunc += truncated(&records);
        rows.push(summarize(&c, &records, param.name(), *v)?);
    }
    Ok(Outcome { rows, truncated: trunc })
}

fn series(rows: &[AggregateRow], f: impl Fn(&AggregateRow) -> (f64, f64, f64)) -> Series {
    let mut s = Series { x: vec![], mean: vec![], min: vec![], max: vec![] };
    for r in rows {
        let (mean, lo, hi) = f(r);
        s.x.push(r.value);
        s.mean.push(mean);
        s.min.push(lo);
        s.max.push(hi);
    }
    s
}

/// One aggregate row per value, plus plots of stopping time, violation
/// ratio and the second arm's coefficient, each with its data as CSV.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    param: SweepParameter,
    values: &[f64],
    out: &Path,
    workers: Option<usize>,
) -> Result<Outcome> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let outcome = sweep_rows(cfg, param, values, workers)?;
    ensure_dir(out)?;
    let p = param.name();
    let base = format!("sweep_{p}");
    let mut files = vec![format!("{base}.csv")];
    write_aggregate_csv(&out.join(&files[0]), &outcome.rows)?;
    let plots = [
        ("tau", "Stopping time", series(&outcome.rows, |r| (r.mean_tau, r.min_tau, r.max_tau))),
        (
            "unsafe",
            "Ratio of safety violations",
            series(&outcome.rows, |r| (r.mean_unsafe_fraction, r.min_unsafe_fraction, r.max_unsafe_fraction)),
        ),
        (
            "gamma2",
            "Safety coefficient of arm 2",
            series(&outcome.rows, |r| (r.mean_gamma_bar[1], r.min_gamma_bar[1], r.max_gamma_bar[1])),
        ),
    ];
    for (suffix, label, s) in plots {
        let csv_name = format!("{base}_{suffix}.csv");
        let svg_name = format!("{base}_{suffix}.svg");
        write_series_csv(&out.join(&csv_name), p, &s)?;
        let svg = line_plot(&format!("{label} against {p}"), p, label, &s);
        fs::write(out.join(&svg_name), svg).map_err(|e| Error::io(&out.join(&svg_name), e))?;
        files.push(csv_name);
        files.push(svg_name);
    }
    let mut echo = cfg.clone();
    echo.experiment.sweep = Some(Sweep { parameter: param, values: values.to_vec() });
    Manifest::new("sweep", &echo, files, None).write(&out.join("manifest.json"))?;
    Ok(outcome)
}
