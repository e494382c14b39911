//! Certification of the closed-form inequalities against independent oracles.
//!
//! Each certifier evaluates a bound from [`crate::bounds`] and compares it
//! with the best available computation of the probability it controls:
//! exact distribution functions where they exist, exhaustive enumeration for
//! tiny discrete instances, and Monte Carlo with a standard error otherwise.
//! A point passes when `lhs <= bound + 3 se` (`se = 0` for exact oracles).

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::Serialize;

use super::{parallel_map, Verdict};
use crate::bounds::{
    block_maximal_tail, brownian_grid_increment_tail, brownian_sup_tail, poisson_inverse_tail, random_sum_m0,
    random_sum_nagaev_tail, renewal_count_tail, LaplaceTau, TailMoments,
};
use crate::output::{fmt_float, Table};
use crate::rng::{RngStream, StreamRole};
use crate::special::{brownian_abs_sup_tail, GammaQuantile};
use crate::{Error, Result};

/// Bounds that have a certifier.
pub const CERTIFIABLE: [&str; 6] = [
    "poisson-inverse-tail",
    "renewal-count-tail",
    "block-maximal-tail",
    "random-sum-nagaev-tail",
    "brownian-sup-tail",
    "brownian-grid-increment-tail",
];

/// Monte Carlo replications per independent block.
const BLOCK: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertPoint {
    pub params: BTreeMap<String, f64>,
    pub oracle: String,
    pub lhs: f64,
    pub lhs_se: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

impl CertPoint {
    fn new(params: &[(&str, f64)], oracle: &str, lhs: f64, lhs_se: f64, bound: f64) -> Self {
        Self {
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            oracle: oracle.into(),
            lhs,
            lhs_se,
            bound,
            verdict: Verdict::from_bool(lhs <= bound + 3.0 * lhs_se),
        }
    }
}

impl CertPoint {
    /// `(lhs + 3 se) / bound`; at most 1 on passing points.
    pub fn tightness(&self) -> f64 {
        let lhs = self.lhs + 3.0 * self.lhs_se;
        if self.bound > 0.0 {
            lhs / self.bound
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationRecord {
    pub name: String,
    pub points: Vec<CertPoint>,
    /// Extra exact quantities (e.g. `M0`).
    pub constants: BTreeMap<String, f64>,
    pub verdict: Verdict,
}

impl CertificationRecord {
    pub fn summary_line(&self) -> String {
        let worst = self
            .points
            .iter()
            .max_by(|a, b| a.tightness().total_cmp(&b.tightness()))
            .expect("certification without points");
        format!(
            "{} {}: {} points, tightest lhs={} (se {}) vs bound={}",
            self.verdict.as_str(),
            self.name,
            self.points.len(),
            fmt_float(worst.lhs),
            fmt_float(worst.lhs_se),
            fmt_float(worst.bound)
        )
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["name", "params", "oracle", "lhs", "lhs_se", "bound", "verdict"]);
        for p in &self.points {
            let params = p.params.iter().map(|(k, v)| format!("{k}={}", fmt_float(*v))).collect::<Vec<_>>();
            t.push(vec![
                self.name.clone(),
                params.join(";"),
                p.oracle.clone(),
                fmt_float(p.lhs),
                fmt_float(p.lhs_se),
                fmt_float(p.bound),
                p.verdict.as_str().into(),
            ]);
        }
        t
    }
}

/// Certifies the bound `name` at `params`,
/// falling back to the standard lattice of each certifier for missing keys.
pub fn certify_bound(name: &str, params: &BTreeMap<String, f64>, root_seed: u64) -> Result<CertificationRecord> {
    let key = name.to_ascii_lowercase().replace('_', "-");
    let cert = *CERTIFIABLE
        .iter()
        .find(|c| **c == key)
        .ok_or_else(|| Error::UnknownBound(name.to_string()))?;
    let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
    let mut constants = BTreeMap::new();
    let points = match cert {
        "poisson-inverse-tail" => certify_poisson_inverse(params, get("gamma", 1.0), get("lambda", 1.0))?,
        "renewal-count-tail" => vec![certify_renewal_count(get("t", 20.0), get("rate", 1.0), get("reps", 1e6) as u64, root_seed)?],
        "block-maximal-tail" => vec![certify_block_maximal(get("n", 16.0) as usize, get("x", 4.0), get("p", 3.0), get("c", 1.0))?],
        "random-sum-nagaev-tail" => {
            let t = get("t", 10.0);
            let rate = get("rate", 1.0);
            constants.insert("M0".into(), random_sum_m0(&LaplaceTau::Exponential { rate })? as f64);
            vec![certify_random_sum(t, get("x", t / t.ln()), rate, get("p", 3.0), get("reps", 1e5) as u64, root_seed)?]
        }
        "brownian-sup-tail" => certify_brownian_sup(params, get("d", 1.0) as usize)?,
        "brownian-grid-increment-tail" => certify_grid_increment(params, get("mc_reps", 20_000.0) as u64, get("mc_step", 1e-3), root_seed)?,
        _ => unreachable!(),
    };
    let verdict = Verdict::from_bool(points.iter().all(|p| p.verdict.is_pass()));
    Ok(CertificationRecord {
        name: cert.to_string(),
        points,
        constants,
        verdict,
    })
}

/// Counts successes of `trial` over `reps` replications split into
/// fixed-size blocks with their own streams.
fn mc_count<F>(reps: u64, root_seed: u64, trial: F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync + Send,
{
    let blocks = reps.div_ceil(BLOCK);
    let counts = parallel_map(blocks, |b| {
        let mut rng = RngStream::replication(root_seed, b, StreamRole::Aux).rng();
        let len = BLOCK.min(reps - b * BLOCK);
        Ok((0..len).filter(|_| trial(&mut rng)).count() as u64)
    })?;
    Ok(counts.into_iter().sum())
}

fn binomial_se(hits: u64, n: u64) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

fn lattice(params: &BTreeMap<String, f64>, key: &str, default: &[f64]) -> Vec<f64> {
    params.get(key).map_or_else(|| default.to_vec(), |v| vec![*v])
}

/// `P(Gamma([t/gamma] + 1, lambda) >= 2t/mu)` against `2 (e/2)^{-x/gamma}` at `x = t / log t`.
fn certify_poisson_inverse(params: &BTreeMap<String, f64>, gamma: f64, lambda: f64) -> Result<Vec<CertPoint>> {
    let mu = gamma * lambda;
    lattice(params, "t", &[64.0, 256.0, 1024.0])
        .into_iter()
        .map(|t| {
            let x = params.get("x").copied().unwrap_or(t / t.ln());
            let shape = (t / gamma).floor() + 1.0;
            let lhs = GammaQuantile::new(shape, 1.0 / lambda).sf(2.0 * t / mu);
            let bound = poisson_inverse_tail(t, x, gamma)?.value;
            Ok(CertPoint::new(&[("t", t), ("x", x), ("gamma", gamma), ("lambda", lambda)], "exact-gamma-cdf", lhs, 0.0, bound))
        })
        .collect()
}

/// `P(m(t) > 2t/mu)` for exponential durations, by simulation.
fn certify_renewal_count(t: f64, rate: f64, reps: u64, root_seed: u64) -> Result<CertPoint> {
    let mu = 1.0 / rate;
    let bound = renewal_count_tail(t, 1.0, mu, &LaplaceTau::Exponential { rate })?;
    let limit = (2.0 * t / mu).floor() as u64;
    let exp = Exp::new(rate).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let hits = mc_count(reps, root_seed, |rng| {
        let mut time = 0.0;
        for _ in 0..=limit {
            time += exp.sample(rng);
            if time > t {
                return false;
            }
        }
        true
    })?;
    let (p, se) = binomial_se(hits, reps);
    Ok(CertPoint::new(&[("t", t), ("rate", rate), ("reps", reps as f64)], "monte-carlo", p, se, bound.value))
}

/// Exhaustive enumeration of `P(max_j max_{k<=x} (Q_{j+k} - Q_j) >= x)` for
/// Rademacher steps.
pub fn block_maximal_enumeration(n: usize, x: f64) -> Result<f64> {
    if n == 0 || n > 24 {
        return Err(Error::InvalidParameter(format!("enumeration needs 1 <= n <= 24, got {n}")));
    }
    let w = x.floor() as usize;
    let mut hits = 0u64;
    let mut q = vec![0i64; n + 1];
    for bits in 0u32..(1u32 << n) {
        for k in 0..n {
            q[k + 1] = q[k] + if bits >> k & 1 == 1 { 1 } else { -1 };
        }
        let hit = (0..n).any(|j| (1..=w.min(n - j)).any(|k| (q[j + k] - q[j]) as f64 >= x));
        hits += hit as u64;
    }
    Ok(hits as f64 / f64::from(1u32 << n))
}

fn certify_block_maximal(n: usize, x: f64, p: f64, c: f64) -> Result<CertPoint> {
    let moments = TailMoments {
        n: n as f64,
        p,
        abs_moment_p: 1.0,
        variance: 1.0,
        laplace_tau: None,
    };
    let bound = block_maximal_tail(&moments, x, c)?.value;
    let lhs = block_maximal_enumeration(n, x)?;
    Ok(CertPoint::new(&[("n", n as f64), ("x", x), ("p", p), ("c", c)], "enumeration", lhs, 0.0, bound))
}

fn normal_abs_moment(p: f64) -> f64 {
    use statrs::function::gamma::gamma;
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

/// `P(max_{k <= m(t)+1} |Q_k| > x)` for exponential durations and standard
/// normal summands, by simulation.
fn certify_random_sum(t: f64, x: f64, rate: f64, p: f64, reps: u64, root_seed: u64) -> Result<CertPoint> {
    let moments = TailMoments {
        n: t,
        p,
        abs_moment_p: normal_abs_moment(p),
        variance: 1.0,
        laplace_tau: Some(LaplaceTau::Exponential { rate }),
    };
    let bound = random_sum_nagaev_tail(t, x, &moments)?.value;
    let exp = Exp::new(rate).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let hits = mc_count(reps, root_seed, |rng| {
        let mut m = 0u64;
        let mut time = exp.sample(rng);
        while time <= t {
            m += 1;
            time += exp.sample(rng);
        }
        let mut q = 0.0_f64;
        for _ in 0..=m {
            let z: f64 = StandardNormal.sample(rng);
            q += z;
            if q.abs() > x {
                return true;
            }
        }
        false
    })?;
    let (ph, se) = binomial_se(hits, reps);
    Ok(CertPoint::new(
        &[("t", t), ("x", x), ("rate", rate), ("p", p), ("reps", reps as f64)],
        "monte-carlo",
        ph,
        se,
        bound,
    ))
}

/// Union-bound upper oracle for `P(sup_{u<=t} |W_u| > x/2)` (exact for `d = 1`).
fn certify_brownian_sup(params: &BTreeMap<String, f64>, d: usize) -> Result<Vec<CertPoint>> {
    let mut out = Vec::new();
    for t in lattice(params, "t", &[10.0, 100.0, 1e3, 1e4, 1e5]) {
        let base = (t / t.ln()).max(std::f64::consts::E);
        let xs = params
            .get("x")
            .map_or_else(|| [1.01, 1.5, 2.0, 4.0, 8.0].iter().map(|r| r * base).collect(), |x| vec![*x]);
        for x in xs {
            let bound = brownian_sup_tail(t, x, d)?.value;
            let coord = brownian_abs_sup_tail(x / (2.0 * t.sqrt()));
            let lhs = (d as f64 * coord).min(1.0);
            let oracle = if d == 1 { "exact-reflection" } else { "union-reflection" };
            out.push(CertPoint::new(&[("t", t), ("x", x), ("d", d as f64)], oracle, lhs, 0.0, bound));
        }
    }
    Ok(out)
}

/// Exact `P(sup_{u<=t} |B_u - B_[u]| >= x)`: independent Brownian pieces on
/// the unit intervals and the final fractional one.
pub fn grid_increment_exact(t: f64, x: f64) -> f64 {
    let whole = t.floor();
    let frac = t - whole;
    let stay_unit = 1.0 - brownian_abs_sup_tail(x);
    let stay_frac = if frac > 0.0 { 1.0 - brownian_abs_sup_tail(x / frac.sqrt()) } else { 1.0 };
    1.0 - stay_unit.powf(whole) * stay_frac
}

fn certify_grid_increment(params: &BTreeMap<String, f64>, mc_reps: u64, step: f64, root_seed: u64) -> Result<Vec<CertPoint>> {
    let mut out = Vec::new();
    let ts = lattice(params, "t", &[1.0, 10.0, 100.0, 1e3, 1e4]);
    let xs = lattice(params, "x", &[2.0, 3.0, 4.0, 5.0, 6.0]);
    for &t in &ts {
        for &x in &xs {
            let bound = brownian_grid_increment_tail(t, x)?.value;
            out.push(CertPoint::new(&[("t", t), ("x", x)], "exact-reflection", grid_increment_exact(t, x), 0.0, bound));
        }
    }
    if mc_reps > 0 {
        let t = params.get("t").copied().unwrap_or(10.0);
        let x = params.get("x").copied().unwrap_or(3.0);
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::InvalidParameter(format!("mc_step must lie in (0, 1], got {step}")));
        }
        let per_unit = (1.0 / step).round() as u64;
        let steps = (t * per_unit as f64).round() as u64;
        let sd = step.sqrt();
        let seed = root_seed ^ 0x1e7;
        let hits = mc_count(mc_reps, seed, |rng| {
            let mut offset = 0.0_f64;
            for k in 0..steps {
                if k % per_unit == 0 {
                    offset = 0.0;
                }
                let z: f64 = StandardNormal.sample(rng);
                offset += sd * z;
                if offset.abs() >= x {
                    return true;
                }
            }
            false
        })?;
        let (p, se) = binomial_se(hits, mc_reps);
        let bound = brownian_grid_increment_tail(t, x)?.value;
        out.push(CertPoint::new(
            &[("t", t), ("x", x), ("mc_reps", mc_reps as f64), ("mc_step", step)],
            "monte-carlo",
            p,
            se,
            bound,
        ));
    }
    Ok(out)
}
