//! Monte Carlo experiments.
//!
//! Replications run in parallel on the current rayon pool. Replication `r`
//! draws only from streams keyed by `(root_seed, r)`, and results are
//! collected in index order, so every experiment is bit-reproducible under
//! any worker count. Callers pick the worker count by installing a pool, as
//! the CLI does for `--workers`.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::coupling::check_mode;
use crate::generators::reference_greeks;
use crate::greeks::Greeks;
use crate::Result;

pub mod certify;
pub mod inspect;
pub mod maxima;
pub mod phis;
pub mod rate;
pub mod tail;

pub use certify::{certify_bound, CertPoint, CertificationRecord, CERTIFIABLE};
pub use maxima::{maxima_scaling_experiment, MaximaRow, MaximaTrend};
pub use phis::{run_phi_diagnostics, IndicatorRow, PhiReport, PhiTail};
pub use rate::{run_rate_experiment, DeviationQuantiles, RateFit};
pub use tail::{fit_constant_a, run_tail_experiment, TailEstimate, TailReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

/// Runs `f(0..n)` in parallel and returns the results in index order.
pub fn parallel_map<T, F>(n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Parameters used to build couplings: closed forms where available, the
/// fixed-seed simulation oracle otherwise.
pub fn experiment_greeks(cfg: &ExperimentConfig) -> Result<Greeks> {
    reference_greeks(&cfg.model, cfg.experiment.p, cfg.coupling.oracle_cycles)
}

/// Validation shared by the coupling-based experiments.
pub(crate) fn coupling_setup(cfg: &ExperimentConfig) -> Result<Greeks> {
    cfg.validate()?;
    check_mode(&cfg.model, cfg.coupling.mode)?;
    experiment_greeks(cfg)
}

/// Fields every report starts with.
pub(crate) fn report_header(cfg: &ExperimentConfig, experiment: &str) -> serde_json::Map<String, serde_json::Value> {
    let mut m = serde_json::Map::new();
    m.insert("experiment".into(), experiment.into());
    m.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("model".into(), cfg.model.family().into());
    m.insert("coupling_mode".into(), cfg.coupling.mode.as_str().into());
    m.insert("p".into(), cfg.experiment.p.into());
    m.insert("root_seed".into(), cfg.rng.root_seed.into());
    m.insert("replications".into(), (cfg.experiment.replications as u64).into());
    m
}
