use serde::Serialize;

use super::{coupling_setup, parallel_map, report_header, Verdict};
use crate::config::ExperimentConfig;
use crate::coupling::{sweep_sups, CouplingBundle};
use crate::output::{fmt_float, ExperimentOutput, Table};
use crate::rng::RngStream;
use crate::stats::{bootstrap_loglog_slope, median_ci, ols, quantile_sorted, sorted, Z95};
use crate::{Error, Result};

/// Minimum number of horizons for a slope fit.
pub const MIN_HORIZONS: usize = 4;
/// Allowed excess of the fitted slope over `1/p`.
pub const SLOPE_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationQuantiles {
    pub t: f64,
    pub q10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
    pub median_ci: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub intercept: f64,
    pub per_t: Vec<DeviationQuantiles>,
    /// `1/p + 0.1`.
    pub threshold: f64,
    pub verdict: Verdict,
    /// `deviations[i][r]`: sup-deviation of replication `r` up to `t_grid[i]`.
    #[serde(skip)]
    pub deviations: Vec<Vec<f64>>,
}

/// For each replication, one bundle covering the largest horizon; running
/// sup-deviations are read off at every horizon of the grid.
pub(crate) fn deviation_samples(cfg: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    let greeks = coupling_setup(cfg)?;
    let ts = &cfg.experiment.t_grid;
    let t_max = *ts.last().unwrap();
    let per_rep = parallel_map(cfg.experiment.replications as u64, |r| {
        let b = CouplingBundle::build(&cfg.model, &greeks, cfg.coupling.mode, t_max, cfg.rng.root_seed, r)?;
        let sups = sweep_sups(&b, ts, cfg.experiment.grid_step, false)?;
        Ok(sups.into_iter().map(|s| s.deviation).collect::<Vec<f64>>())
    })?;
    Ok((0..ts.len()).map(|i| per_rep.iter().map(|v| v[i]).collect()).collect())
}

/// Log-log regression of the median sup-deviation on the horizon.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateFit> {
    let ts = &cfg.experiment.t_grid;
    if ts.len() < MIN_HORIZONS {
        return Err(Error::ConfigInvalid(format!(
            "rate fit needs at least {MIN_HORIZONS} horizons, t_grid has {}",
            ts.len()
        )));
    }
    let deviations = deviation_samples(cfg)?;
    let per_t: Vec<DeviationQuantiles> = ts
        .iter()
        .zip(&deviations)
        .map(|(&t, d)| {
            let s = sorted(d);
            DeviationQuantiles {
                t,
                q10: quantile_sorted(&s, 0.1),
                q25: quantile_sorted(&s, 0.25),
                median: quantile_sorted(&s, 0.5),
                q75: quantile_sorted(&s, 0.75),
                q90: quantile_sorted(&s, 0.9),
                median_ci: median_ci(&s, Z95),
            }
        })
        .collect();
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = per_t.iter().map(|q| q.median.max(f64::MIN_POSITIVE).ln()).collect();
    let fit = ols(&lx, &ly)?;
    let slope_ci = bootstrap_loglog_slope(
        ts,
        &deviations,
        cfg.experiment.bootstrap,
        RngStream::reserved(cfg.rng.root_seed, 0),
    )?;
    let threshold = 1.0 / cfg.experiment.p + SLOPE_MARGIN;
    Ok(RateFit {
        slope: fit.slope,
        slope_ci,
        intercept: fit.intercept,
        per_t,
        threshold,
        verdict: Verdict::from_bool(fit.slope <= threshold),
        deviations,
    })
}

impl RateFit {
    pub fn to_output(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        let mut results = Table::new(&[
            "t",
            "replications",
            "q10",
            "q25",
            "median",
            "q75",
            "q90",
            "median_ci_low",
            "median_ci_high",
        ]);
        let mut plot = Table::new(&["t", "median_deviation"]);
        for (q, d) in self.per_t.iter().zip(&self.deviations) {
            results.push(vec![
                fmt_float(q.t),
                d.len().to_string(),
                fmt_float(q.q10),
                fmt_float(q.q25),
                fmt_float(q.median),
                fmt_float(q.q75),
                fmt_float(q.q90),
                fmt_float(q.median_ci.0),
                fmt_float(q.median_ci.1),
            ]);
            plot.push(vec![fmt_float(q.t), fmt_float(q.median)]);
        }
        let mut report = report_header(cfg, "rate");
        report.insert("fit".into(), serde_json::to_value(self)?);
        report.insert("verdict".into(), self.verdict.as_str().into());
        Ok(ExperimentOutput {
            snapshot: cfg.snapshot()?,
            results,
            report: report.into(),
            plots: vec![("rate".into(), plot)],
        })
    }
}
