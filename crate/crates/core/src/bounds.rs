//! Closed-form tail inequalities with explicit validity regions.
//!
//! Every calculator returns a [`BoundResult`]: the bound (capped at 1), the
//! region of `(t, x)` it was evaluated in, and the constants that entered it.
//! The moderate-deviation inequalities live in the *pair* region
//! `x <= t / log t`; the random-sum and Brownian-supremum bounds live in the
//! complementary *large-deviation* region.

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// `x <= t / log t`.
    Pair,
    /// `x > t / log t`.
    LargeDeviation,
    /// No region restriction.
    All,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Pair => "pair",
            Region::LargeDeviation => "large-deviation",
            Region::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub value: f64,
    pub region: Region,
    pub constants_used: BTreeMap<String, f64>,
}

impl BoundResult {
    fn new(raw: f64, region: Region, mut constants: BTreeMap<String, f64>) -> Self {
        constants.insert("uncapped".into(), raw);
        Self {
            value: raw.clamp(0.0, 1.0),
            region,
            constants_used: constants,
        }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants_used.get(name).copied()
    }

    /// `name=value;...` rendering of the constants.
    pub fn constants_string(&self) -> String {
        self.constants_used
            .iter()
            .map(|(k, v)| format!("{k}={}", crate::output::fmt_float(*v)))
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn consts<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Laplace transform `b -> E exp(-b tau)` of a nonnegative duration.
#[derive(Debug, Clone, PartialEq)]
pub enum LaplaceTau {
    Exponential { rate: f64 },
    Gamma { shape: f64, scale: f64 },
    Constant(f64),
    /// Empirical transform of a duration sample.
    Empirical(Vec<f64>),
}

impl LaplaceTau {
    pub fn eval(&self, b: f64) -> f64 {
        match self {
            LaplaceTau::Exponential { rate } => rate / (rate + b),
            LaplaceTau::Gamma { shape, scale } => (1.0 + b * scale).powf(-shape),
            LaplaceTau::Constant(c) => (-b * c).exp(),
            LaplaceTau::Empirical(xs) => xs.iter().map(|t| (-b * t).exp()).sum::<f64>() / xs.len() as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            LaplaceTau::Exponential { rate } => *rate > 0.0,
            LaplaceTau::Gamma { shape, scale } => *shape > 0.0 && *scale > 0.0,
            LaplaceTau::Constant(c) => *c > 0.0,
            LaplaceTau::Empirical(xs) => !xs.is_empty() && xs.iter().all(|t| *t >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid Laplace transform {self:?}")))
        }
    }
}

/// Moment inputs of the sum inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct TailMoments {
    /// Number of summands `n` (or horizon `t` for random sums).
    pub n: f64,
    pub p: f64,
    /// `E |X_1|^p`.
    pub abs_moment_p: f64,
    pub variance: f64,
    pub laplace_tau: Option<LaplaceTau>,
}

impl TailMoments {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 2.0) {
            return Err(Error::InvalidParameter(format!("p must be > 2, got {}", self.p)));
        }
        if !(self.abs_moment_p >= 0.0) || !(self.variance >= 0.0) || !self.abs_moment_p.is_finite() {
            return Err(Error::InvalidParameter("moments must be finite and nonnegative".into()));
        }
        if let Some(l) = &self.laplace_tau {
            l.validate()?;
        }
        Ok(())
    }
}

/// `x <= t / log t` is the pair region.
pub fn validity_region(t: f64, x: f64) -> Result<Region> {
    if !(t >= E) {
        return Err(Error::Domain(format!("t must be >= e, got {t}")));
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x must be > 0, got {x}")));
    }
    Ok(if x <= t / t.ln() { Region::Pair } else { Region::LargeDeviation })
}

fn require(t: f64, x: f64, want: Region) -> Result<()> {
    let got = validity_region(t, x)?;
    if got != want {
        return Err(Error::RegionViolation {
            t,
            x,
            reason: format!("requires the {} region, got {}", want.as_str(), got.as_str()),
        });
    }
    Ok(())
}

/// Bound on `P(N^{-1}(t/gamma) >= 2t/mu)`: `2 (e/2)^{-x/gamma}`.
///
/// The Chernoff form `e^{-t/gamma} 2^{[t/gamma] + 1}` it is derived from is
/// reported as `chernoff_form`.
pub fn poisson_inverse_tail(t: f64, x: f64, gamma: f64) -> Result<BoundResult> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("x must be >= 0, got {x}")));
    }
    if x > 0.0 {
        require(t, x, Region::Pair)?;
    } else if !(t >= E) {
        return Err(Error::Domain(format!("t must be >= e, got {t}")));
    }
    let raw = 2.0 * (-(x / gamma) * (1.0 - std::f64::consts::LN_2)).exp();
    let levels = (t / gamma).floor() + 1.0;
    let chernoff = (-t / gamma + levels * std::f64::consts::LN_2).exp();
    Ok(BoundResult::new(raw, Region::Pair, consts([("gamma", gamma), ("chernoff_form", chernoff)])))
}

/// `(b*, exp(b* mu/2) L(b*))` minimizing `b mu/2 + ln L(b)` over `[0, 100/mu]`.
fn best_b(mu: f64, laplace: &LaplaceTau) -> Result<(f64, f64)> {
    let phi = |b: f64| b * mu / 2.0 + laplace.eval(b).ln();
    let (mut lo, mut hi) = (0.0, 100.0 / mu);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut c = lo + r * (hi - lo);
    let (mut fa, mut fc) = (phi(a), phi(c));
    for _ in 0..200 {
        if fa < fc {
            hi = c;
            c = a;
            fc = fa;
            a = hi - r * (hi - lo);
            fa = phi(a);
        } else {
            lo = a;
            a = c;
            fa = fc;
            c = lo + r * (hi - lo);
            fc = phi(c);
        }
        if hi - lo < 1e-12 * (1.0 + hi) {
            break;
        }
    }
    let b = 0.5 * (lo + hi);
    let best = phi(b);
    if !(best < 0.0) || !(b > 0.0) {
        return Err(Error::NoFeasibleB { best: best.exp() });
    }
    Ok((b, best.exp()))
}

/// Bound on `P(m(t) > 2t/mu)`.
///
/// `value` is the t-form `e^{bt} L(b)^{[2t/mu]}`; the x-form
/// `L(b)^{-1} (e^{b mu/2} L(b))^{2x/mu}` is reported as `x_form`.
pub fn renewal_count_tail(t: f64, x: f64, mu: f64, laplace: &LaplaceTau) -> Result<BoundResult> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be > 0, got {mu}")));
    }
    laplace.validate()?;
    require(t, x, Region::Pair)?;
    let (b, feas) = best_b(mu, laplace)?;
    let lb = laplace.eval(b);
    let t_form = (b * t + (2.0 * t / mu).floor() * lb.ln()).exp();
    let x_form = (-lb.ln() + 2.0 * x / mu * feas.ln()).exp();
    Ok(BoundResult::new(
        t_form,
        Region::Pair,
        consts([
            ("b", b),
            ("laplace_b", lb),
            ("feasibility", feas),
            ("t_form", t_form),
            ("x_form", x_form),
            ("mu", mu),
        ]),
    ))
}

/// Bound on `P(sup_{u<=t} |B_u - B_[u]| >= x)`: `4(t+1) e^{-x^2/2}`.
pub fn brownian_grid_increment_tail(t: f64, x: f64) -> Result<BoundResult> {
    if !(t >= 1.0) || !(x > 0.0) {
        return Err(Error::Domain(format!("requires t >= 1 and x > 0, got t={t}, x={x}")));
    }
    let raw = 4.0 * (t + 1.0) * (-x * x / 2.0).exp();
    Ok(BoundResult::new(raw, Region::All, BTreeMap::new()))
}

/// `C_1(p) = (1 + 2/p)^p`.
pub fn nagaev_c1(p: f64) -> f64 {
    (1.0 + 2.0 / p).powf(p)
}

/// `C_2(p) = 2 e^{-p} (p + 2)^{-2}`.
pub fn nagaev_c2(p: f64) -> f64 {
    2.0 * (-p).exp() / (p + 2.0).powi(2)
}

fn nagaev_raw(n: f64, x: f64, m: &TailMoments) -> f64 {
    let poly = nagaev_c1(m.p) * n * m.abs_moment_p * x.powf(-m.p);
    let gauss = if m.variance > 0.0 {
        2.0 * (-nagaev_c2(m.p) * x * x / (n * m.variance)).exp()
    } else {
        0.0
    };
    poly + gauss
}

/// Fuk-Nagaev bound on `P(|Q_n| >= x)` for centered i.i.d. summands.
pub fn nagaev_tail(m: &TailMoments, x: f64) -> Result<BoundResult> {
    m.validate()?;
    if !(m.n >= 1.0) || !(x > 0.0) {
        return Err(Error::Domain(format!("requires n >= 1 and x > 0, got n={}, x={x}", m.n)));
    }
    let raw = nagaev_raw(m.n, x, m);
    Ok(BoundResult::new(
        raw,
        Region::All,
        consts([("C1", nagaev_c1(m.p)), ("C2", nagaev_c2(m.p)), ("n", m.n), ("p", m.p)]),
    ))
}

/// Bound on `P(max_{j<=n} max_{k<=x, j+k<=n} (Q_{j+k} - Q_j) >= x)`:
/// `3 (n/[x] + 1) max_{k<=[x]} min(1, Nagaev(k, x/9))`, valid for
/// `c n^{1/p} <= x <= n`.
pub fn block_maximal_tail(m: &TailMoments, x: f64, c: f64) -> Result<BoundResult> {
    m.validate()?;
    let n = m.n;
    let lower = c * n.powf(1.0 / m.p);
    if !(x >= 1.0) || x > n || x < lower {
        return Err(Error::RegionViolation {
            t: n,
            x,
            reason: format!("requires max(1, c n^(1/p) = {lower}) <= x <= n"),
        });
    }
    let blocks = (x.floor()) as usize;
    let inner = (1..=blocks)
        .map(|k| nagaev_raw(k as f64, x / 9.0, m).min(1.0))
        .fold(0.0, f64::max);
    let factor = 3.0 * (n / x.floor() + 1.0);
    Ok(BoundResult::new(
        factor * inner,
        Region::All,
        consts([
            ("C1", nagaev_c1(m.p)),
            ("C2", nagaev_c2(m.p)),
            ("ottaviani_factor", factor),
            ("max_nagaev", inner),
            ("c", c),
        ]),
    ))
}

/// Smallest integer `M_0 >= 1` with `L(1)^{M_0/2} < 1/e`.
pub fn random_sum_m0(laplace: &LaplaceTau) -> Result<u64> {
    laplace.validate()?;
    let l1 = laplace.eval(1.0);
    if !(l1 < 1.0) {
        return Err(Error::Infeasible(format!("E exp(-tau) = {l1} is not < 1")));
    }
    if l1 <= 0.0 {
        return Ok(1);
    }
    let r = 2.0 / (-l1.ln());
    Ok((r.floor() as u64 + 1).max(1))
}

/// Bound on `P(max_{k <= m(t)+1} |Q_k| > x)` for random sums, `x >= t/log t`.
///
/// `R_0 = min(1, 3 Nagaev(M_0 t + 1, x/3))` (Levy-Ottaviani then Fuk-Nagaev)
/// plus `x^{-p} sum_{M >= M_0} ((M+2)t)^p E|X|^p e^t L(1)^{[Mt]}`.
pub fn random_sum_nagaev_tail(t: f64, x: f64, m: &TailMoments) -> Result<BoundResult> {
    m.validate()?;
    if !(t >= E) {
        return Err(Error::Domain(format!("t must be >= e, got {t}")));
    }
    if !(x >= t / t.ln()) {
        return Err(Error::RegionViolation {
            t,
            x,
            reason: "requires x >= t / log t".into(),
        });
    }
    let laplace = m
        .laplace_tau
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("random-sum bound needs the Laplace transform of tau".into()))?;
    let m0 = random_sum_m0(laplace)?;
    let l1 = laplace.eval(1.0);
    let horizon = (m0 as f64 * t + 1.0).floor();
    let r0 = (3.0 * nagaev_raw(horizon, x / 3.0, m)).min(1.0);
    let ln_mom = m.abs_moment_p.ln();
    let mut total = 0.0;
    let mut terms = 0u64;
    let mut last = f64::INFINITY;
    let mut ratio = 0.0_f64;
    let mut mm = m0;
    if m.abs_moment_p > 0.0 && l1 > 0.0 {
        loop {
            let mf = mm as f64;
            let ln_term = m.p * ((mf + 2.0) * t).ln() + ln_mom + t + (mf * t).floor() * l1.ln();
            let term = ln_term.exp();
            if last.is_finite() && last > 0.0 {
                ratio = term / last;
            }
            total += term;
            terms += 1;
            last = term;
            if term < 1e-300 || (ratio < 1.0 && term <= 1e-17 * total && terms > 2) || terms > 1_000_000 {
                break;
            }
            mm += 1;
        }
    }
    let tail_bound = if ratio < 1.0 { last * ratio / (1.0 - ratio) } else { 0.0 };
    let series = total * x.powf(-m.p);
    Ok(BoundResult::new(
        r0 + series,
        Region::LargeDeviation,
        consts([
            ("M0", m0 as f64),
            ("laplace_1", l1),
            ("R0", r0),
            ("series", series),
            ("series_terms", terms as f64),
            ("series_tail_bound", tail_bound * x.powf(-m.p)),
            ("last_ratio", ratio),
            ("C1", nagaev_c1(m.p)),
            ("C2", nagaev_c2(m.p)),
        ]),
    ))
}

/// Bound on `P(sup_{u<=t} |W_u| > x/2)` for a `d`-dimensional standard Wiener
/// process in the large-deviation region: `4d e^{-x/(16 log x)}`.
pub fn brownian_sup_tail(t: f64, x: f64, d: usize) -> Result<BoundResult> {
    require(t, x, Region::LargeDeviation)?;
    if !(x > E) || d == 0 {
        return Err(Error::RegionViolation {
            t,
            x,
            reason: "requires x > e and d >= 1".into(),
        });
    }
    let raw = 4.0 * d as f64 * (-x / (16.0 * x.ln())).exp();
    Ok(BoundResult::new(raw, Region::LargeDeviation, consts([("d", d as f64)])))
}

/// Constants turning an exponential bound `A e^{-B (x - C log t)}` into a
/// power bound `a0 t x^{-p}` on `x >= c t^{1/p}`, `t >= e`; returns `(c, a0)`
/// with `c = C p`.
///
/// For fixed `t`, `e^{-Bx} x^p` peaks at `x = p/B`; along the boundary
/// `x = c t^{1/p}` the ratio decreases in `t` for `t >= 1`. The supremum is
/// therefore attained at `t = e` or where `c t^{1/p}` crosses `p/B`.
pub fn exp_to_power(a: f64, b: f64, c_rate: f64, p: f64) -> Result<(f64, f64)> {
    if !(a >= 0.0) || !(b > 0.0) || !(c_rate > 0.0) || !(p > 2.0) {
        return Err(Error::InvalidParameter(format!(
            "requires A >= 0, B > 0, C > 0, p > 2; got A={a}, B={b}, C={c_rate}, p={p}"
        )));
    }
    let c = c_rate * p;
    let f = |t: f64, x: f64| a * (-b * x + b * c_rate * t.ln() + p * x.ln() - t.ln()).exp();
    let peak = p / b;
    let mut a0 = f(E, peak.max(c * E.powf(1.0 / p)));
    let t_cross = (peak / c).powf(p);
    if t_cross >= E {
        a0 = a0.max(f(t_cross, peak));
    }
    Ok((c, a0))
}

/// Names accepted by [`evaluate_named`].
pub const BOUND_NAMES: [&str; 10] = [
    "validity-region",
    "poisson-inverse-tail",
    "renewal-count-tail",
    "brownian-grid-increment-tail",
    "nagaev-tail",
    "block-maximal-tail",
    "random-sum-m0",
    "random-sum-nagaev-tail",
    "brownian-sup-tail",
    "exp-to-power",
];

fn get(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("missing parameter --{key}")))
}

fn laplace_from(params: &BTreeMap<String, f64>) -> Result<LaplaceTau> {
    if let Some(&rate) = params.get("rate") {
        Ok(LaplaceTau::Exponential { rate })
    } else if let (Some(&shape), Some(&scale)) = (params.get("shape"), params.get("scale")) {
        Ok(LaplaceTau::Gamma { shape, scale })
    } else if let Some(&c) = params.get("tau") {
        Ok(LaplaceTau::Constant(c))
    } else {
        Err(Error::InvalidParameter(
            "Laplace transform of tau needs --rate, --shape/--scale, or --tau".into(),
        ))
    }
}

fn moments_from(params: &BTreeMap<String, f64>, scale_key: &str) -> Result<TailMoments> {
    Ok(TailMoments {
        n: get(params, scale_key)?,
        p: get(params, "p")?,
        abs_moment_p: get(params, "abs_moment")?,
        variance: get(params, "variance")?,
        laplace_tau: laplace_from(params).ok(),
    })
}

/// Evaluates a bound by registry name from named numeric parameters.
pub fn evaluate_named(name: &str, params: &BTreeMap<String, f64>) -> Result<BoundResult> {
    let name = name.to_ascii_lowercase().replace('_', "-");
    match name.as_str() {
        "validity-region" => {
            let region = validity_region(get(params, "t")?, get(params, "x")?)?;
            Ok(BoundResult {
                value: f64::NAN,
                region,
                constants_used: BTreeMap::new(),
            })
        }
        "poisson-inverse-tail" => poisson_inverse_tail(get(params, "t")?, get(params, "x")?, get(params, "gamma")?),
        "renewal-count-tail" => renewal_count_tail(
            get(params, "t")?,
            get(params, "x")?,
            get(params, "mu")?,
            &laplace_from(params)?,
        ),
        "brownian-grid-increment-tail" => brownian_grid_increment_tail(get(params, "t")?, get(params, "x")?),
        "nagaev-tail" => nagaev_tail(&moments_from(params, "n")?, get(params, "x")?),
        "block-maximal-tail" => block_maximal_tail(
            &moments_from(params, "n")?,
            get(params, "x")?,
            params.get("c").copied().unwrap_or(1.0),
        ),
        "random-sum-m0" => {
            let m0 = random_sum_m0(&laplace_from(params)?)?;
            Ok(BoundResult {
                value: m0 as f64,
                region: Region::All,
                constants_used: consts([("M0", m0 as f64)]),
            })
        }
        "random-sum-nagaev-tail" => {
            let t = get(params, "t")?;
            let mut m = moments_from(params, "t")?;
            m.laplace_tau = Some(laplace_from(params)?);
            random_sum_nagaev_tail(t, get(params, "x")?, &m)
        }
        "brownian-sup-tail" => brownian_sup_tail(
            get(params, "t")?,
            get(params, "x")?,
            params.get("d").copied().unwrap_or(1.0) as usize,
        ),
        "exp-to-power" => {
            let (c, a0) = exp_to_power(get(params, "A")?, get(params, "B")?, get(params, "C")?, get(params, "p")?)?;
            Ok(BoundResult {
                value: a0,
                region: Region::All,
                constants_used: consts([("c", c), ("a0", a0)]),
            })
        }
        _ => Err(Error::UnknownBound(name)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(n: f64, p: f64) -> TailMoments {
        TailMoments {
            n,
            p,
            abs_moment_p: 1.0,
            variance: 1.0,
            laplace_tau: None,
        }
    }

    #[test]
    fn regions() {
        assert_eq!(validity_region(E, 1.0).unwrap(), Region::Pair);
        assert_eq!(validity_region(100.0, 50.0).unwrap(), Region::LargeDeviation);
        assert_eq!(validity_region(100.0, 10.0).unwrap(), Region::Pair);
        assert!(matches!(validity_region(2.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn poisson_inverse_values() {
        let r = poisson_inverse_tail(100.0, 10.0, 1.0).unwrap();
        assert!((r.value - 2.0 * (E / 2.0).powf(-10.0)).abs() < 1e-15);
        assert!((r.value - 0.0930).abs() < 1e-4);
        assert_eq!(poisson_inverse_tail(100.0, 0.0, 1.0).unwrap().value, 1.0);
        assert!(matches!(poisson_inverse_tail(100.0, 50.0, 1.0), Err(Error::RegionViolation { .. })));
    }

    #[test]
    fn renewal_tail_exponential() {
        let l = LaplaceTau::Exponential { rate: 1.0 };
        // e^{b mu/2} L(b) at b = 1
        assert!(((0.5f64).exp() / 2.0 - 0.824).abs() < 1e-3);
        let r = renewal_count_tail(20.0, 5.0, 1.0, &l).unwrap();
        assert!((r.constant("b").unwrap() - 1.0).abs() < 1e-6);
        let want = 20f64.exp() * 2f64.powi(-40);
        assert!((r.value / want - 1.0).abs() < 1e-9, "{} vs {want}", r.value);
        assert!((r.value - 4.41e-4).abs() < 1e-6);
        assert!(r.constant("x_form").unwrap() > 0.0);
    }

    #[test]
    fn grid_increment_values() {
        let r = brownian_grid_increment_tail(1.0, 3.0).unwrap();
        assert!((r.value - 8.0 * (-4.5f64).exp()).abs() < 1e-15);
        assert!((brownian_grid_increment_tail(10.0, 3.0).unwrap().value - 44.0 * (-4.5f64).exp()).abs() < 1e-14);
        assert!(brownian_grid_increment_tail(10.0, 60.0).unwrap().value == 0.0);
    }

    #[test]
    fn nagaev_constants_and_cap() {
        let r = nagaev_tail(&two_point(100.0, 3.0), 50.0).unwrap();
        assert!((r.constant("C1").unwrap() - 125.0 / 27.0).abs() < 1e-12);
        assert!((r.constant("C2").unwrap() - 2.0 * (-3f64).exp() / 25.0).abs() < 1e-15);
        assert_eq!(nagaev_tail(&two_point(100.0, 3.0), 1e-6).unwrap().value, 1.0);
        let normal = TailMoments {
            n: 1.0,
            p: 3.0,
            abs_moment_p: 2.0 * (2.0 / std::f64::consts::PI).sqrt(),
            variance: 1.0,
            laplace_tau: None,
        };
        assert!(nagaev_tail(&normal, 5.0).unwrap().value >= 5.7e-7);
    }

    #[test]
    fn block_maximal_region_and_monotonicity() {
        let m = two_point(1000.0, 3.0);
        assert!(block_maximal_tail(&m, 5.0, 1.0).is_err());
        assert!(block_maximal_tail(&m, 2000.0, 1.0).is_err());
        let mut prev = f64::INFINITY;
        for x in 10..=1000 {
            let v = block_maximal_tail(&m, x as f64, 1.0).unwrap().constant("uncapped").unwrap();
            assert!(v <= prev * (1.0 + 1e-12), "x={x}");
            prev = v;
        }
    }

    #[test]
    fn m0_examples() {
        assert_eq!(random_sum_m0(&LaplaceTau::Exponential { rate: 1.0 }).unwrap(), 3);
        assert_eq!(random_sum_m0(&LaplaceTau::Constant(10.0)).unwrap(), 1);
        assert_eq!(random_sum_m0(&LaplaceTau::Exponential { rate: 100.0 }).unwrap(), 201);
    }

    #[test]
    fn random_sum_series_converges() {
        let m = TailMoments {
            n: 10.0,
            p: 3.0,
            abs_moment_p: 2.0 * (2.0 / std::f64::consts::PI).sqrt(),
            variance: 1.0,
            laplace_tau: Some(LaplaceTau::Exponential { rate: 1.0 }),
        };
        let x = 10.0 / 10f64.ln();
        let r = random_sum_nagaev_tail(10.0, x, &m).unwrap();
        assert!(r.value.is_finite());
        assert_eq!(r.constant("M0").unwrap(), 3.0);
        assert!(r.constant("last_ratio").unwrap() < 1.0);
        assert!(r.constant("series_tail_bound").unwrap() <= 1e-12 * r.constant("series").unwrap());
        assert!(random_sum_nagaev_tail(10.0, 1.0, &m).is_err());
    }

    #[test]
    fn brownian_sup_values() {
        let r = brownian_sup_tail(100.0, 100.0, 1).unwrap();
        assert_eq!(r.value, 1.0);
        assert!((r.constant("uncapped").unwrap() - 4.0 * (-100.0 / (16.0 * 100f64.ln())).exp()).abs() < 1e-12);
        let r = brownian_sup_tail(1000.0, 1e4, 1).unwrap();
        assert!((r.value / (4.0 * (-1e4 / (16.0 * 1e4f64.ln())).exp()) - 1.0).abs() < 1e-12);
        assert!(brownian_sup_tail(1000.0, 10.0, 1).is_err());
    }

    #[test]
    fn exp_to_power_dominates_lattice() {
        assert_eq!(exp_to_power(1.0, 1.0, 2.0, 3.0).unwrap().0, 6.0);
        for &(a, b, c, p) in &[(1.0, 1.0, 2.0, 3.0), (5.0, 0.2, 0.5, 2.5), (0.3, 3.0, 1.0, 4.0), (2.0, 0.05, 10.0, 3.0)] {
            let (cc, a0) = exp_to_power(a, b, c, p).unwrap();
            for i in 0..60 {
                let t = E * 1.3f64.powi(i);
                let x0 = cc * t.powf(1.0 / p);
                for j in 0..80 {
                    let x = x0 * 1.1f64.powi(j);
                    let lhs = a * (-b * (x - c * t.ln())).exp();
                    assert!(lhs <= a0 * t * x.powf(-p) * (1.0 + 1e-9), "A={a} B={b} C={c} p={p} t={t} x={x}");
                }
            }
        }
        assert_eq!(exp_to_power(0.0, 1.0, 1.0, 3.0).unwrap().1, 0.0);
    }

    #[test]
    fn registry_lookup() {
        let mut p = BTreeMap::new();
        p.insert("t".to_string(), 100.0);
        p.insert("x".to_string(), 10.0);
        p.insert("gamma".to_string(), 1.0);
        assert!(evaluate_named("poisson-inverse-tail", &p).is_ok());
        assert!(matches!(evaluate_named("nope", &p), Err(Error::UnknownBound(_))));
    }
}
