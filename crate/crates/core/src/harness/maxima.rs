use serde::Serialize;

use super::{parallel_map, report_header, Verdict};
use crate::config::ExperimentConfig;
use crate::output::{fmt_float, ExperimentOutput, Table};
use crate::rng::{RngStream, StreamRole};
use crate::stats::{median_ci, quantile_sorted, sorted, Z95};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximaRow {
    pub n: u64,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximaTrend {
    pub rows: Vec<MaximaRow>,
    /// Every step is a decrease or stays inside the previous interval.
    pub nonincreasing: bool,
    /// The last interval lies strictly below the first.
    pub overall_decrease: bool,
    pub verdict: Verdict,
}

/// Median of `max_{k<=n} eta_k / n^{1/p}` over replications, with the cycle
/// counts `n` taken from the rounded horizons of `t_grid`.
///
/// Each replication draws one cycle sequence and reads the running maximum
/// at every `n`.
pub fn maxima_scaling_experiment(cfg: &ExperimentConfig) -> Result<MaximaTrend> {
    cfg.validate()?;
    let ns: Vec<u64> = cfg.experiment.t_grid.iter().map(|t| t.round() as u64).collect();
    if ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] == 0 {
        return Err(Error::ConfigInvalid("cycle counts from t_grid must be distinct and positive".into()));
    }
    let sampler = cfg.model.sampler()?;
    let n_max = *ns.last().unwrap();
    let inv_p = 1.0 / cfg.experiment.p;
    let per_rep = parallel_map(cfg.experiment.replications as u64, |r| {
        let mut rng = RngStream::replication(cfg.rng.root_seed, r, StreamRole::Cycles).rng();
        let mut out = Vec::with_capacity(ns.len());
        let mut running = 0.0_f64;
        let mut next = 0;
        for k in 1..=n_max {
            running = running.max(sampler.sample(&mut rng).eta());
            if k == ns[next] {
                out.push(running / (k as f64).powf(inv_p));
                next += 1;
            }
        }
        Ok(out)
    })?;
    let rows: Vec<MaximaRow> = ns
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let s = sorted(&per_rep.iter().map(|v| v[i]).collect::<Vec<_>>());
            let (ci_low, ci_high) = median_ci(&s, Z95);
            MaximaRow {
                n,
                median: quantile_sorted(&s, 0.5),
                ci_low,
                ci_high,
            }
        })
        .collect();
    let nonincreasing = rows.windows(2).all(|w| w[1].median < w[0].median || w[1].median <= w[0].ci_high);
    let overall_decrease = rows.len() >= 2 && rows.last().unwrap().ci_high < rows[0].ci_low;
    Ok(MaximaTrend {
        rows,
        nonincreasing,
        overall_decrease,
        verdict: Verdict::from_bool(nonincreasing && overall_decrease),
    })
}

impl MaximaTrend {
    pub fn to_output(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        let mut results = Table::new(&["n", "median_ratio", "ci_low", "ci_high"]);
        let mut plot = Table::new(&["n", "median_ratio"]);
        for r in &self.rows {
            results.push(vec![r.n.to_string(), fmt_float(r.median), fmt_float(r.ci_low), fmt_float(r.ci_high)]);
            plot.push(vec![r.n.to_string(), fmt_float(r.median)]);
        }
        let mut report = report_header(cfg, "maxima");
        report.insert("nonincreasing".into(), self.nonincreasing.into());
        report.insert("overall_decrease".into(), self.overall_decrease.into());
        report.insert("verdict".into(), self.verdict.as_str().into());
        Ok(ExperimentOutput {
            snapshot: cfg.snapshot()?,
            results,
            report: report.into(),
            plots: vec![("maxima".into(), plot)],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::ModelSpec;

    #[test]
    fn constant_cycles_give_power_decay() {
        let model = ModelSpec::IidSums {
            tau: 1.0,
            mean: vec![1.0],
            sd: 0.0,
        };
        let mut cfg = ExperimentConfig::minimal(model, 3.0);
        cfg.experiment.t_grid = vec![16.0, 64.0, 256.0];
        cfg.experiment.replications = 50;
        let trend = maxima_scaling_experiment(&cfg).unwrap();
        for r in &trend.rows {
            assert!((r.median - (r.n as f64).powf(-1.0 / 3.0)).abs() < 1e-12);
        }
        assert!(trend.verdict.is_pass());
    }
}
