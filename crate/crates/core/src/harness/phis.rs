use serde::Serialize;

use super::tail::TailEstimate;
use super::{coupling_setup, parallel_map, report_header, Verdict};
use crate::bounds::poisson_inverse_tail;
use crate::config::ExperimentConfig;
use crate::coupling::phi::IDENTITY_TOL;
use crate::coupling::{sweep_sups, CouplingBundle, HorizonSups};
use crate::generators::eta_moment;
use crate::model::invert_counting;
use crate::output::{fmt_float, ExperimentOutput, Table};
use crate::stats::{wilson, Z95};
use crate::Result;

/// Cap on the cycles used for the `E eta^p` oracle.
const ETA_ORACLE_CYCLES: usize = 1_000_000;

/// Tail of one term (`q = 1..=8`) or of the total deviation (`q = 0`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiTail {
    pub q: usize,
    #[serde(flatten)]
    pub estimate: TailEstimate,
}

/// Frequencies of the two regularity events at horizon `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorRow {
    pub t: f64,
    /// `N^{-1}(t/gamma) > 2t/mu`.
    pub inverse_hits: u64,
    pub inverse_ci: (f64, f64),
    /// Poisson-inverse bound evaluated at `x = t / log t`.
    pub inverse_bound: f64,
    /// `m(t) > 2t/mu`.
    pub renewal_hits: u64,
    pub renewal_ci: (f64, f64),
    pub replications: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiReport {
    pub tails: Vec<PhiTail>,
    pub indicators: Vec<IndicatorRow>,
    pub eta_moment: f64,
    pub max_residual: f64,
    pub max_triangle_excess: f64,
    /// `max_i |beta_i| gamma`, the uniform bound on the last term.
    pub phi8_bound: f64,
    pub phi8_ok: bool,
    pub renewal_term_ok: bool,
    pub indicator_ok: bool,
    pub triangle_ok: bool,
    pub verdict: Verdict,
}

impl PhiReport {
    /// The `q`-th term's tails (`q = 0` for the total deviation).
    pub fn term(&self, q: usize) -> impl Iterator<Item = &PhiTail> {
        self.tails.iter().filter(move |r| r.q == q)
    }

    /// The term with the largest `ci_high x^p / t` at each `(t, x)`.
    pub fn dominant_terms(&self) -> Vec<(f64, f64, usize)> {
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        for r in self.tails.iter().filter(|r| r.q > 0) {
            let key = (r.estimate.t, r.estimate.x);
            match out.iter_mut().find(|o| (o.0, o.1) == key) {
                Some(o) => {
                    let best = self.find(o.2, key).map_or(0.0, |b| b.estimate.normalized_high);
                    if r.estimate.normalized_high > best {
                        o.2 = r.q;
                    }
                }
                None => out.push((key.0, key.1, r.q)),
            }
        }
        out
    }

    fn find(&self, q: usize, key: (f64, f64)) -> Option<&PhiTail> {
        self.tails.iter().find(|r| r.q == q && (r.estimate.t, r.estimate.x) == key)
    }
}

struct RepPhis {
    sups: Vec<HorizonSups>,
    inverse: Vec<bool>,
    renewal: Vec<bool>,
}

/// Per-term tail tables, the regularity-event frequencies, and reconciliation
/// checks between the recorded terms and the total deviation.
pub fn run_phi_diagnostics(cfg: &ExperimentConfig) -> Result<PhiReport> {
    let greeks = coupling_setup(cfg)?;
    let ts = &cfg.experiment.t_grid;
    let t_max = *ts.last().unwrap();
    let (mu, gamma) = (greeks.mu, greeks.gamma);
    let reps = parallel_map(cfg.experiment.replications as u64, |r| {
        let b = CouplingBundle::build(&cfg.model, &greeks, cfg.coupling.mode, t_max, cfg.rng.root_seed, r)?;
        let sups = sweep_sups(&b, ts, cfg.experiment.grid_step, true)?;
        let mut inverse = Vec::with_capacity(ts.len());
        let mut renewal = Vec::with_capacity(ts.len());
        for &t in ts {
            inverse.push(invert_counting(&b.n, t / gamma)? > 2.0 * t / mu);
            renewal.push(b.m(t) as f64 > 2.0 * t / mu);
        }
        Ok(RepPhis { sups, inverse, renewal })
    })?;

    let p = cfg.experiment.p;
    let n = reps.len() as u64;
    let eta_p = eta_moment(&cfg.model, p, cfg.coupling.oracle_cycles.min(ETA_ORACLE_CYCLES))?;
    let phi8_bound = greeks.beta.iter().fold(0.0_f64, |a, b| a.max(b.abs())) * gamma;

    let mut tails = Vec::new();
    let mut indicators = Vec::new();
    let mut renewal_term_ok = true;
    let mut phi8_ok = true;
    for (i, &t) in ts.iter().enumerate() {
        let count = |pred: &dyn Fn(&RepPhis) -> bool| reps.iter().filter(|r| pred(r)).count() as u64;
        let inverse_hits = count(&|r| r.inverse[i]);
        let renewal_hits = count(&|r| r.renewal[i]);
        let renewal_ci = wilson(renewal_hits, n, Z95);
        indicators.push(IndicatorRow {
            t,
            inverse_hits,
            inverse_ci: wilson(inverse_hits, n, Z95),
            inverse_bound: poisson_inverse_tail(t, t / t.ln(), gamma)?.value,
            renewal_hits,
            renewal_ci,
            replications: n,
        });
        for g in cfg.x_grid(t)? {
            for q in 0..=8 {
                let hits = count(&|r| {
                    let s = &r.sups[i];
                    let v = if q == 0 { s.deviation } else { s.phi[q - 1] };
                    v >= g.x
                });
                let est = TailEstimate::new(t, g.x, g.region, hits, n, p);
                if q == 1 {
                    let allowance = renewal_ci.1 + (2.0 * t + mu) / mu * eta_p * g.x.powf(-p);
                    renewal_term_ok &= est.ci_low <= allowance;
                }
                if q == 8 && g.x > phi8_bound {
                    phi8_ok &= hits == 0;
                }
                tails.push(PhiTail { q, estimate: est });
            }
        }
    }
    phi8_ok &= reps
        .iter()
        .all(|r| r.sups.iter().all(|s| s.phi[7] <= phi8_bound * (1.0 + 1e-12) + 1e-12));

    let last = |f: &dyn Fn(&HorizonSups) -> f64| reps.iter().map(|r| f(r.sups.last().unwrap())).fold(0.0, f64::max);
    let max_residual = last(&|s| s.residual);
    let max_triangle_excess = last(&|s| s.triangle_excess);
    let max_s = last(&|s| s.max_abs_s);
    let triangle_ok = max_triangle_excess <= IDENTITY_TOL * (1.0 + max_s);
    let indicator_ok = indicators.iter().all(|r| r.inverse_ci.0 <= r.inverse_bound);
    Ok(PhiReport {
        tails,
        indicators,
        eta_moment: eta_p,
        max_residual,
        max_triangle_excess,
        phi8_bound,
        phi8_ok,
        renewal_term_ok,
        indicator_ok,
        triangle_ok,
        verdict: Verdict::from_bool(phi8_ok && renewal_term_ok && indicator_ok && triangle_ok),
    })
}

impl PhiReport {
    pub fn to_output(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        let mut results = Table::new(&[
            "term", "t", "x", "region", "hits", "replications", "p_hat", "ci_low", "ci_high", "normalized",
        ]);
        for r in &self.tails {
            let e = &r.estimate;
            let term = if r.q == 0 { "deviation".to_string() } else { format!("phi{}", r.q) };
            results.push(vec![
                term,
                fmt_float(e.t),
                fmt_float(e.x),
                e.region.as_str().into(),
                e.hits.to_string(),
                e.replications.to_string(),
                fmt_float(e.p_hat),
                fmt_float(e.ci_low),
                fmt_float(e.ci_high),
                fmt_float(e.normalized),
            ]);
        }
        let mut plots = Vec::new();
        for q in 1..=8 {
            let mut t = Table::new(&["x", "normalized"]);
            for r in self.term(q) {
                t.push(vec![fmt_float(r.estimate.x), fmt_float(r.estimate.normalized)]);
            }
            plots.push((format!("phi{q}"), t));
        }
        let mut report = report_header(cfg, "phis");
        report.insert("indicators".into(), serde_json::to_value(&self.indicators)?);
        for (k, v) in [
            ("eta_moment", self.eta_moment),
            ("max_residual", self.max_residual),
            ("max_triangle_excess", self.max_triangle_excess),
            ("phi8_bound", self.phi8_bound),
        ] {
            report.insert(k.into(), v.into());
        }
        for (k, v) in [
            ("phi8_ok", self.phi8_ok),
            ("renewal_term_ok", self.renewal_term_ok),
            ("indicator_ok", self.indicator_ok),
            ("triangle_ok", self.triangle_ok),
        ] {
            report.insert(k.into(), v.into());
        }
        report.insert("dominant_terms".into(), serde_json::to_value(self.dominant_terms())?);
        report.insert("verdict".into(), self.verdict.as_str().into());
        Ok(ExperimentOutput {
            snapshot: cfg.snapshot()?,
            results,
            report: report.into(),
            plots,
        })
    }
}
