//! Model catalog.
//!
//! | family           | cycle law                                                   | p_max |
//! |------------------|-------------------------------------------------------------|-------|
//! | `iid-sums`       | `tau = const`, `xi = mean + sd Z`                           | inf   |
//! | `gamma-gaussian` | `tau ~ Gamma(shape, scale)`, `xi = beta tau + m + V^{1/2} G` | inf   |
//! | `pareto-cycle`   | `tau = 1 + Pareto(index)`, `xi = a tau + c + b Z`           | index |
//! | `mm1-busy-cycle` | idle + busy period of an M/M/1 queue                        | inf   |
//! | `compound-jump`  | `tau ~ Exp(rate)`, Poisson Gaussian jumps inside the cycle   | inf   |
//!
//! `p_max` is the supremum of the finite moment orders of `tau` and `eta`.
//! The Pareto part uses the classic form `P(X > s) = s^{-index}` for `s >= 1`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::greeks::{estimate_greeks, CycleMoments, Greeks};
use crate::linalg::{from_rows, matrix_sqrt_psd};
use crate::model::{CyclePath, Interpolation};
use crate::rng::RngStream;
use crate::special::{normal_sf, GammaQuantile};
use crate::{Error, Result};

/// Largest supported process dimension.
pub const MAX_DIM: usize = 8;
/// Seed of the long-run simulation oracle used when no closed form exists.
pub const ORACLE_SEED: u64 = 0x5EED_0F_0AC1E;
/// Default cycle count of the simulation oracle.
pub const ORACLE_CYCLES: usize = 10_000_000;

/// How a cycle's increment accrues over the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Accrual {
    /// Linearly from 0 to `xi` over `[0, tau]`.
    #[default]
    Linear,
    /// In a single jump at the end of the cycle.
    Jump,
}

impl Accrual {
    fn interpolation(self) -> Interpolation {
        match self {
            Accrual::Linear => Interpolation::PiecewiseLinear,
            Accrual::Jump => Interpolation::PiecewiseConstant,
        }
    }
}

/// Reward accumulated by the M/M/1 model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mm1Reward {
    /// Cumulative number of departures.
    #[default]
    Departures,
    /// Integral of the number in system.
    Area,
}

fn one() -> f64 {
    1.0
}
fn zero() -> f64 {
    0.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn zeros1() -> Vec<f64> {
    vec![0.0]
}
fn ones1() -> Vec<f64> {
    vec![1.0]
}
fn identity1() -> Vec<Vec<f64>> {
    vec![vec![1.0]]
}
fn pareto_default_index() -> f64 {
    3.5
}

/// A model family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    IidSums {
        #[serde(default = "one")]
        tau: f64,
        #[serde(default = "zeros1")]
        mean: Vec<f64>,
        #[serde(default = "one")]
        sd: f64,
    },
    GammaGaussian {
        #[serde(default = "two")]
        shape: f64,
        #[serde(default = "half")]
        scale: f64,
        #[serde(default = "ones1")]
        beta: Vec<f64>,
        #[serde(default = "zeros1")]
        noise_mean: Vec<f64>,
        #[serde(default = "identity1")]
        noise_cov: Vec<Vec<f64>>,
        #[serde(default)]
        accrual: Accrual,
    },
    ParetoCycle {
        #[serde(default = "pareto_default_index")]
        index: f64,
        #[serde(default = "one")]
        slope: f64,
        #[serde(default = "zero")]
        offset: f64,
        #[serde(default = "one")]
        noise_sd: f64,
        #[serde(default)]
        accrual: Accrual,
    },
    Mm1BusyCycle {
        #[serde(default = "half")]
        arrival_rate: f64,
        #[serde(default = "one")]
        service_rate: f64,
        #[serde(default)]
        reward: Mm1Reward,
    },
    CompoundJump {
        #[serde(default = "one")]
        cycle_rate: f64,
        #[serde(default = "two")]
        jump_rate: f64,
        #[serde(default = "ones1")]
        jump_mean: Vec<f64>,
        #[serde(default = "identity1")]
        jump_cov: Vec<Vec<f64>>,
    },
}

impl ModelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::IidSums { .. } => "iid-sums",
            ModelSpec::GammaGaussian { .. } => "gamma-gaussian",
            ModelSpec::ParetoCycle { .. } => "pareto-cycle",
            ModelSpec::Mm1BusyCycle { .. } => "mm1-busy-cycle",
            ModelSpec::CompoundJump { .. } => "compound-jump",
        }
    }

    /// Catalog default for a family name.
    pub fn default_for(family: &str) -> Result<Self> {
        let src = format!("family = \"{family}\"");
        toml::from_str(&src).map_err(|e| Error::InvalidParameter(format!("unknown model family {family:?}: {e}")))
    }

    pub fn dimension(&self) -> usize {
        match self {
            ModelSpec::IidSums { mean, .. } => mean.len(),
            ModelSpec::GammaGaussian { beta, .. } => beta.len(),
            ModelSpec::ParetoCycle { .. } | ModelSpec::Mm1BusyCycle { .. } => 1,
            ModelSpec::CompoundJump { jump_mean, .. } => jump_mean.len(),
        }
    }

    pub fn p_max(&self) -> f64 {
        match self {
            ModelSpec::ParetoCycle { index, .. } => *index,
            _ => f64::INFINITY,
        }
    }

    /// Whether cycle durations are random (required by the Greeks).
    pub fn has_random_tau(&self) -> bool {
        !matches!(self, ModelSpec::IidSums { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("{}: {msg}", self.family())));
        let pos = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{}: {name} must be positive and finite, got {v}", self.family())))
            }
        };
        let d = self.dimension();
        if d == 0 || d > MAX_DIM {
            return bad(format!("dimension must be in 1..={MAX_DIM}, got {d}"));
        }
        match self {
            ModelSpec::IidSums { tau, mean, sd } => {
                pos("tau", *tau)?;
                if !(*sd >= 0.0) || mean.iter().any(|m| !m.is_finite()) {
                    return bad("sd must be >= 0 and mean finite".into());
                }
            }
            ModelSpec::GammaGaussian {
                shape,
                scale,
                beta,
                noise_mean,
                noise_cov,
                ..
            } => {
                pos("shape", *shape)?;
                pos("scale", *scale)?;
                if noise_mean.len() != d {
                    return bad(format!("noise_mean has length {}, expected {d}", noise_mean.len()));
                }
                check_cov("noise_cov", noise_cov, d).map_err(|e| Error::InvalidParameter(format!("gamma-gaussian: {e}")))?;
                if beta.iter().chain(noise_mean).any(|v| !v.is_finite()) {
                    return bad("non-finite coefficients".into());
                }
            }
            ModelSpec::ParetoCycle {
                index,
                slope,
                offset,
                noise_sd,
                ..
            } => {
                if !(*index > 2.0) || !index.is_finite() {
                    return bad(format!("index must be finite and > 2, got {index}"));
                }
                if !(*noise_sd >= 0.0) || !slope.is_finite() || !offset.is_finite() {
                    return bad("noise_sd must be >= 0, slope/offset finite".into());
                }
            }
            ModelSpec::Mm1BusyCycle {
                arrival_rate,
                service_rate,
                ..
            } => {
                pos("arrival_rate", *arrival_rate)?;
                pos("service_rate", *service_rate)?;
                if arrival_rate >= service_rate {
                    return bad(format!("unstable queue: arrival_rate {arrival_rate} >= service_rate {service_rate}"));
                }
            }
            ModelSpec::CompoundJump {
                cycle_rate,
                jump_rate,
                jump_mean,
                jump_cov,
            } => {
                pos("cycle_rate", *cycle_rate)?;
                pos("jump_rate", *jump_rate)?;
                if d > 3 {
                    return bad(format!("dimension must be <= 3, got {d}"));
                }
                if jump_mean.iter().any(|v| !v.is_finite()) {
                    return bad("non-finite jump_mean".into());
                }
                check_cov("jump_cov", jump_cov, d).map_err(|e| Error::InvalidParameter(format!("compound-jump: {e}")))?;
            }
        }
        Ok(())
    }

    /// Prepares a sampler (validates and precomputes matrix roots).
    pub fn sampler(&self) -> Result<CycleSampler> {
        self.validate()?;
        let prepared = match self {
            ModelSpec::GammaGaussian { noise_cov, .. } => Prepared::Root(matrix_sqrt_psd(&from_rows(noise_cov)?)?),
            ModelSpec::CompoundJump { jump_cov, .. } => Prepared::Root(matrix_sqrt_psd(&from_rows(jump_cov)?)?),
            _ => Prepared::None,
        };
        let gamma_quantile = match self {
            ModelSpec::GammaGaussian { shape, scale, .. } => Some(GammaQuantile::new(*shape, *scale)),
            _ => None,
        };
        Ok(CycleSampler {
            spec: self.clone(),
            prepared,
            gamma_quantile,
        })
    }
}

fn check_cov(name: &str, rows: &[Vec<f64>], d: usize) -> Result<()> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidParameter(format!("{name} must be {d}x{d}")));
    }
    matrix_sqrt_psd(&from_rows(rows)?)?;
    Ok(())
}

#[derive(Debug, Clone)]
enum Prepared {
    None,
    Root(DMatrix<f64>),
}

/// A validated model ready to draw cycles.
#[derive(Debug, Clone)]
pub struct CycleSampler {
    spec: ModelSpec,
    prepared: Prepared,
    gamma_quantile: Option<GammaQuantile>,
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform on `(0, 1]`.
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

impl CycleSampler {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    fn root(&self) -> &DMatrix<f64> {
        match &self.prepared {
            Prepared::Root(r) => r,
            Prepared::None => unreachable!("family without a covariance root"),
        }
    }

    /// Draws one cycle.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> CyclePath {
        let d = self.dimension();
        let cycle = match &self.spec {
            ModelSpec::IidSums { tau, mean, sd } => {
                let xi = mean.iter().map(|m| m + sd * std_normal(rng)).collect();
                CyclePath::single(*tau, xi, Interpolation::PiecewiseConstant)
            }
            ModelSpec::GammaGaussian {
                shape,
                scale,
                beta,
                noise_mean,
                accrual,
                ..
            } => {
                let tau = Gamma::new(*shape, *scale).expect("validated").sample(rng).max(f64::MIN_POSITIVE);
                let g: Vec<f64> = (0..d).map(|_| std_normal(rng)).collect();
                self.gamma_gaussian_cycle(tau, &g, beta, noise_mean, *accrual)
            }
            ModelSpec::ParetoCycle {
                index,
                slope,
                offset,
                noise_sd,
                accrual,
            } => {
                let tau = 1.0 + open_uniform(rng).powf(-1.0 / index);
                let z = std_normal(rng);
                CyclePath::single(tau, vec![slope * tau + offset + noise_sd * z], accrual.interpolation())
            }
            ModelSpec::Mm1BusyCycle {
                arrival_rate,
                service_rate,
                reward,
            } => return mm1_cycle(*arrival_rate, *service_rate, *reward, rng),
            ModelSpec::CompoundJump {
                cycle_rate,
                jump_rate,
                jump_mean,
                ..
            } => return self.compound_cycle(*cycle_rate, *jump_rate, jump_mean, rng),
        };
        cycle.expect("sampler produced an invalid cycle")
    }

    fn gamma_gaussian_cycle(
        &self,
        tau: f64,
        g: &[f64],
        beta: &[f64],
        noise_mean: &[f64],
        accrual: Accrual,
    ) -> Result<CyclePath> {
        let noise = self.root() * DVector::from_column_slice(g);
        let xi = (0..g.len()).map(|i| beta[i] * tau + noise_mean[i] + noise[i]).collect();
        CyclePath::single(tau, xi, accrual.interpolation())
    }

    fn compound_cycle(&self, cycle_rate: f64, jump_rate: f64, jump_mean: &[f64], rng: &mut ChaCha8Rng) -> CyclePath {
        let d = jump_mean.len();
        let tau = Exp::new(cycle_rate).expect("validated").sample(rng).max(f64::MIN_POSITIVE);
        let gap = Exp::new(jump_rate).expect("validated");
        let root = self.root();
        let mut offsets = Vec::new();
        let mut values = Vec::new();
        let mut level = vec![0.0; d];
        let mut s = gap.sample(rng);
        let mut g = DVector::<f64>::zeros(d);
        while s < tau {
            for gi in g.iter_mut() {
                *gi = std_normal(rng);
            }
            let jump = root * &g;
            for i in 0..d {
                level[i] += jump_mean[i] + jump[i];
            }
            offsets.push(s);
            values.extend_from_slice(&level);
            s += gap.sample(rng);
        }
        offsets.push(tau);
        values.extend_from_slice(&level);
        CyclePath::new(d, offsets, values, Interpolation::PiecewiseConstant).expect("valid compound cycle")
    }

    /// Whether [`Self::sample_coupled`] is available for this family.
    pub fn supports_quantile_coupling(&self) -> bool {
        matches!(self.spec, ModelSpec::GammaGaussian { .. } | ModelSpec::ParetoCycle { .. })
    }

    /// Draws a cycle from given standard normal innovations: `g_tilde` drives
    /// the duration through its quantile function, `g_b` (length `d`) drives
    /// the Gaussian part of the increment.
    pub fn sample_coupled(&self, g_tilde: f64, g_b: &[f64]) -> Result<CyclePath> {
        match &self.spec {
            ModelSpec::GammaGaussian {
                beta,
                noise_mean,
                accrual,
                ..
            } => {
                let q = self.gamma_quantile.as_ref().expect("prepared");
                let tau = q.from_normal(g_tilde).max(f64::MIN_POSITIVE);
                self.gamma_gaussian_cycle(tau, g_b, beta, noise_mean, *accrual)
            }
            ModelSpec::ParetoCycle {
                index,
                slope,
                offset,
                noise_sd,
                accrual,
            } => {
                // 1 - Phi(g) = Phi(-g); X = (1 - U)^{-1/index}
                let tail = normal_sf(g_tilde).max(f64::MIN_POSITIVE);
                let tau = 1.0 + tail.powf(-1.0 / index);
                CyclePath::single(tau, vec![slope * tau + offset + noise_sd * g_b[0]], accrual.interpolation())
            }
            other => Err(Error::ModeUnsupported {
                mode: "quantile".into(),
                model: other.family().into(),
                reason: "no closed-form duration quantile".into(),
            }),
        }
    }
}

fn mm1_cycle(arrival: f64, service: f64, reward: Mm1Reward, rng: &mut ChaCha8Rng) -> CyclePath {
    let idle = Exp::new(arrival).expect("validated").sample(rng).max(f64::MIN_POSITIVE);
    let total = Exp::new(arrival + service).expect("validated");
    let p_arrival = arrival / (arrival + service);
    let mut now = idle;
    let mut queue: u64 = 1;
    let mut acc = 0.0;
    let mut offsets = Vec::new();
    let mut values = Vec::new();
    if reward == Mm1Reward::Area {
        offsets.push(idle);
        values.push(0.0);
    }
    while queue > 0 {
        let dt = total.sample(rng).max(f64::MIN_POSITIVE);
        let next = now + dt;
        let is_arrival = rng.random::<f64>() < p_arrival;
        match reward {
            Mm1Reward::Departures => {
                if !is_arrival {
                    acc += 1.0;
                    offsets.push(next);
                    values.push(acc);
                }
            }
            Mm1Reward::Area => {
                acc += queue as f64 * dt;
                offsets.push(next);
                values.push(acc);
            }
        }
        if is_arrival {
            queue += 1;
        } else {
            queue -= 1;
        }
        now = next;
    }
    let interp = match reward {
        Mm1Reward::Departures => Interpolation::PiecewiseConstant,
        Mm1Reward::Area => Interpolation::PiecewiseLinear,
    };
    CyclePath::new(1, offsets, values, interp).expect("valid M/M/1 cycle")
}

/// Draws one cycle from `model` at the start of `stream`.
pub fn sample_cycle(model: &ModelSpec, stream: RngStream) -> Result<CyclePath> {
    let sampler = model.sampler()?;
    Ok(sampler.sample(&mut stream.rng()))
}

/// Draws `n` consecutive i.i.d. cycles from one stream.
pub fn sample_cycles(model: &ModelSpec, n: usize, stream: RngStream) -> Result<Vec<CyclePath>> {
    let sampler = model.sampler()?;
    let mut rng = stream.rng();
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}

/// Exact first and second moments of `(tau, xi)`, where available.
pub fn true_moments(model: &ModelSpec) -> Result<CycleMoments> {
    model.validate()?;
    let d = model.dimension();
    let vec = |v: &[f64]| DVector::from_column_slice(v);
    Ok(match model {
        ModelSpec::IidSums { .. } => return Err(Error::DegenerateTau),
        ModelSpec::Mm1BusyCycle { .. } => {
            return Err(Error::Unavailable("mm1-busy-cycle (use the simulation oracle)".into()))
        }
        ModelSpec::GammaGaussian {
            shape,
            scale,
            beta,
            noise_mean,
            noise_cov,
            ..
        } => {
            let mu = shape * scale;
            let var_tau = shape * scale * scale;
            let b = vec(beta);
            CycleMoments {
                mu,
                var_tau,
                mean_xi: &b * mu + vec(noise_mean),
                cov_xi_tau: &b * var_tau,
                var_xi: &b * b.transpose() * var_tau + from_rows(noise_cov)?,
            }
        }
        ModelSpec::ParetoCycle {
            index,
            slope,
            offset,
            noise_sd,
            ..
        } => {
            let th = *index;
            let mu = 1.0 + th / (th - 1.0);
            let var_tau = th / ((th - 1.0).powi(2) * (th - 2.0));
            CycleMoments {
                mu,
                var_tau,
                mean_xi: DVector::from_element(1, slope * mu + offset),
                cov_xi_tau: DVector::from_element(1, slope * var_tau),
                var_xi: DMatrix::from_element(1, 1, slope * slope * var_tau + noise_sd * noise_sd),
            }
        }
        ModelSpec::CompoundJump {
            cycle_rate,
            jump_rate,
            jump_mean,
            jump_cov,
        } => {
            let mu = 1.0 / cycle_rate;
            let var_tau = mu * mu;
            let m = vec(jump_mean);
            let mmt = &m * m.transpose();
            let second = from_rows(jump_cov)? + &mmt;
            debug_assert_eq!(second.nrows(), d);
            CycleMoments {
                mu,
                var_tau,
                mean_xi: &m * (jump_rate * mu),
                cov_xi_tau: &m * (jump_rate * var_tau),
                var_xi: second * (jump_rate * mu) + mmt * (jump_rate * jump_rate * var_tau),
            }
        }
    })
}

/// Closed-form parameters of `model` at declared moment order `p`.
pub fn true_greeks(model: &ModelSpec, p: f64) -> Result<Greeks> {
    Greeks::from_moments(&true_moments(model)?, p)
}

/// Parameters from a long simulation with a fixed seed, for families without
/// closed forms.
pub fn oracle_greeks(model: &ModelSpec, p: f64, cycles: usize) -> Result<Greeks> {
    let sample = sample_cycles(model, cycles, RngStream::reserved(ORACLE_SEED, 0))?;
    estimate_greeks(&sample, p)
}

/// Closed-form parameters when available, else the simulation oracle.
pub fn reference_greeks(model: &ModelSpec, p: f64, oracle_cycles: usize) -> Result<Greeks> {
    match true_greeks(model, p) {
        Err(Error::Unavailable(_)) => oracle_greeks(model, p, oracle_cycles),
        other => other,
    }
}

/// Monte Carlo estimate of `E eta^p` from a fixed oracle stream.
pub fn eta_moment(model: &ModelSpec, p: f64, cycles: usize) -> Result<f64> {
    let sampler = model.sampler()?;
    let mut rng = RngStream::reserved(ORACLE_SEED, 1).rng();
    let total: f64 = (0..cycles).map(|_| sampler.sample(&mut rng).eta().powf(p)).sum();
    Ok(total / cycles as f64)
}

/// Laplace transform `b -> E exp(-b tau)` of the cycle duration, where known.
pub fn laplace_tau(model: &ModelSpec, b: f64) -> Option<f64> {
    match model {
        ModelSpec::IidSums { tau, .. } => Some((-b * tau).exp()),
        ModelSpec::GammaGaussian { shape, scale, .. } => Some((1.0 + b * scale).powf(-shape)),
        ModelSpec::CompoundJump { cycle_rate, .. } => Some(cycle_rate / (cycle_rate + b)),
        ModelSpec::Mm1BusyCycle { .. } | ModelSpec::ParetoCycle { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greeks::check_greek_identities;

    fn gg(beta: f64, noise_mean: f64) -> ModelSpec {
        ModelSpec::GammaGaussian {
            shape: 2.0,
            scale: 0.5,
            beta: vec![beta],
            noise_mean: vec![noise_mean],
            noise_cov: vec![vec![1.0]],
            accrual: Accrual::Linear,
        }
    }

    #[test]
    fn defaults_parse_from_family_name() {
        for fam in ["iid-sums", "gamma-gaussian", "pareto-cycle", "mm1-busy-cycle", "compound-jump"] {
            let m = ModelSpec::default_for(fam).unwrap();
            assert_eq!(m.family(), fam);
            m.validate().unwrap();
        }
        assert!(ModelSpec::default_for("nope").is_err());
    }

    #[test]
    fn unknown_parameter_rejected() {
        let r: std::result::Result<ModelSpec, _> = toml::from_str("family = \"pareto-cycle\"\nindx = 3.0");
        assert!(r.is_err());
    }

    #[test]
    fn iid_sums_duration_is_constant() {
        let m = ModelSpec::default_for("iid-sums").unwrap();
        let cycles = sample_cycles(&m, 100, RngStream::new(1, 0)).unwrap();
        assert!(cycles.iter().all(|c| c.tau() == 1.0));
        assert!(matches!(true_greeks(&m, 3.0), Err(Error::DegenerateTau)));
    }

    #[test]
    fn invalid_parameters() {
        let m = ModelSpec::Mm1BusyCycle {
            arrival_rate: -1.0,
            service_rate: 1.0,
            reward: Mm1Reward::Departures,
        };
        assert!(matches!(sample_cycle(&m, RngStream::new(0, 0)), Err(Error::InvalidParameter(_))));
        let m = ModelSpec::Mm1BusyCycle {
            arrival_rate: 1.0,
            service_rate: 1.0,
            reward: Mm1Reward::Departures,
        };
        assert!(m.validate().is_err());
        let m = ModelSpec::ParetoCycle {
            index: 2.0,
            slope: 1.0,
            offset: 0.0,
            noise_sd: 1.0,
            accrual: Accrual::Linear,
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn mm1_mean_cycle_length() {
        let m = ModelSpec::default_for("mm1-busy-cycle").unwrap();
        let n = 200_000;
        let cycles = sample_cycles(&m, n, RngStream::new(3, 0)).unwrap();
        let taus: Vec<f64> = cycles.iter().map(|c| c.tau()).collect();
        let mean = taus.iter().sum::<f64>() / n as f64;
        let var = taus.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        // E idle = 1/0.5 = 2, E busy = 1/(1 - 0.5) = 2
        assert!((mean - 4.0).abs() < 3.0 * se, "mean {mean} se {se}");
        // departures cycle: increments count the customers served
        assert!(cycles.iter().all(|c| c.xi()[0] >= 1.0 && c.xi()[0].fract() == 0.0));
    }

    #[test]
    fn mm1_area_reward_is_piecewise_linear() {
        let m = ModelSpec::Mm1BusyCycle {
            arrival_rate: 0.5,
            service_rate: 1.0,
            reward: Mm1Reward::Area,
        };
        let c = sample_cycle(&m, RngStream::new(9, 2)).unwrap();
        assert_eq!(c.interpolation(), Interpolation::PiecewiseLinear);
        assert_eq!(c.eta(), c.xi()[0]);
    }

    #[test]
    fn pareto_tail_probability() {
        let m = ModelSpec::default_for("pareto-cycle").unwrap();
        let n = 1_000_000;
        let cycles = sample_cycles(&m, n, RngStream::new(5, 0)).unwrap();
        let hits = cycles.iter().filter(|c| c.tau() > 10.0).count() as f64;
        let p = 9f64.powf(-3.5);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits / n as f64 - p).abs() < 4.0 * se, "{} vs {p}", hits / n as f64);
    }

    #[test]
    fn quantile_coupling_median() {
        // Exp(1) is Gamma(1, 1): g = 0 maps to the median ln 2
        let m = ModelSpec::GammaGaussian {
            shape: 1.0,
            scale: 1.0,
            beta: vec![0.0],
            noise_mean: vec![0.0],
            noise_cov: vec![vec![1.0]],
            accrual: Accrual::Jump,
        };
        let c = m.sampler().unwrap().sample_coupled(0.0, &[0.0]).unwrap();
        assert!((c.tau() - std::f64::consts::LN_2).abs() < 1e-13);
        let cj = ModelSpec::default_for("compound-jump").unwrap();
        assert!(matches!(
            cj.sampler().unwrap().sample_coupled(0.0, &[0.0]),
            Err(Error::ModeUnsupported { .. })
        ));
    }

    #[test]
    fn true_greeks_examples() {
        // tau ~ Exp(1), xi = tau
        let m = ModelSpec::GammaGaussian {
            shape: 1.0,
            scale: 1.0,
            beta: vec![1.0],
            noise_mean: vec![0.0],
            noise_cov: vec![vec![0.0]],
            accrual: Accrual::Linear,
        };
        let g = true_greeks(&m, 3.0).unwrap();
        assert_eq!((g.mu, g.kappa[0], g.beta[0], g.v2[(0, 0)], g.alpha[0], g.sigma2[(0, 0)]), (1.0, 1.0, 1.0, 0.0, 0.0, 0.0));

        // tau ~ Exp(1), xi ~ N(0, I_2) independent
        let m = ModelSpec::GammaGaussian {
            shape: 1.0,
            scale: 1.0,
            beta: vec![0.0, 0.0],
            noise_mean: vec![0.0, 0.0],
            noise_cov: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            accrual: Accrual::Linear,
        };
        let g = true_greeks(&m, 3.0).unwrap();
        assert_eq!(g.sigma2, DMatrix::identity(2, 2));
        assert_eq!(g.kappa, DVector::zeros(2));
    }

    #[test]
    fn closed_forms_satisfy_identities() {
        for m in [
            gg(1.0, 0.0),
            gg(0.3, -0.7),
            ModelSpec::default_for("pareto-cycle").unwrap(),
            ModelSpec::ParetoCycle {
                index: 5.0,
                slope: -0.4,
                offset: 2.0,
                noise_sd: 0.3,
                accrual: Accrual::Jump,
            },
            ModelSpec::CompoundJump {
                cycle_rate: 0.7,
                jump_rate: 1.5,
                jump_mean: vec![0.5, -1.0, 0.2],
                jump_cov: vec![vec![1.0, 0.2, 0.0], vec![0.2, 0.5, 0.1], vec![0.0, 0.1, 2.0]],
            },
        ] {
            let g = true_greeks(&m, 3.0).unwrap();
            assert!(check_greek_identities(&g).max() < 1e-10, "{}: {:?}", m.family(), check_greek_identities(&g));
        }
    }

    #[test]
    fn compound_jump_events_are_consistent() {
        let m = ModelSpec::default_for("compound-jump").unwrap();
        let cycles = sample_cycles(&m, 1000, RngStream::new(2, 0)).unwrap();
        for c in &cycles {
            assert_eq!(*c.offsets().last().unwrap(), c.tau());
            assert!(c.eta() >= c.xi()[0].abs());
        }
        let mean_jumps = cycles.iter().map(|c| c.event_count() - 1).sum::<usize>() as f64 / 1000.0;
        // E[#jumps] = jump_rate / cycle_rate = 2
        assert!((mean_jumps - 2.0).abs() < 0.3, "{mean_jumps}");
    }

    #[test]
    fn laplace_transforms() {
        let m = ModelSpec::GammaGaussian {
            shape: 1.0,
            scale: 1.0,
            beta: vec![1.0],
            noise_mean: vec![0.0],
            noise_cov: vec![vec![1.0]],
            accrual: Accrual::Linear,
        };
        assert!((laplace_tau(&m, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(laplace_tau(&ModelSpec::default_for("pareto-cycle").unwrap(), 1.0).is_none());
    }
}
