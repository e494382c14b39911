//! Drift and covariance parameters of a cumulative process.
//!
//! All parameters are functions of the first two moments of `(xi_1, tau_1)`:
//!
//! ```text
//! mu     = E tau                        kappa = E xi / mu
//! beta   = cov(xi, tau) / Var tau       v^2   = Var(xi - beta tau)
//! gamma  = Var tau / mu                 lambda = mu^2 / Var tau
//! alpha  = beta - kappa                 sigma^2 = Var(xi - kappa tau) / mu
//! ```
//!
//! `sigma^2` uses the symmetric form `Var(xi - kappa tau) / mu`, which expands
//! to `(Var xi - cov kappa^T - kappa cov^T + kappa kappa^T Var tau) / mu`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::linalg::{matrix_sqrt_psd, max_abs, max_abs_vec, pseudo_inverse, to_rows};
use crate::model::CyclePath;
use crate::{Error, Result};

/// First and second moments of one cycle's `(tau, xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleMoments {
    pub mu: f64,
    pub var_tau: f64,
    pub mean_xi: DVector<f64>,
    pub cov_xi_tau: DVector<f64>,
    pub var_xi: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Greeks {
    pub mu: f64,
    pub kappa: DVector<f64>,
    pub var_tau: f64,
    pub var_xi: DMatrix<f64>,
    pub cov_xi_tau: DVector<f64>,
    pub beta: DVector<f64>,
    pub v2: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: DVector<f64>,
    pub sigma2: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub sigma_pinv: DMatrix<f64>,
    /// Declared moment order.
    pub p: f64,
}

impl Greeks {
    pub fn from_moments(m: &CycleMoments, p: f64) -> Result<Self> {
        if !(m.mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mean cycle length must be > 0, got {}", m.mu)));
        }
        if !(m.var_tau > 0.0) || m.var_tau <= (1e-12 * m.mu).powi(2) {
            return Err(Error::DegenerateTau);
        }
        let d = m.mean_xi.len();
        let mu = m.mu;
        let kappa = &m.mean_xi / mu;
        let beta = &m.cov_xi_tau / m.var_tau;
        let outer = |a: &DVector<f64>, b: &DVector<f64>| a * b.transpose();
        let v2 = &m.var_xi - outer(&beta, &m.cov_xi_tau) - outer(&m.cov_xi_tau, &beta)
            + outer(&beta, &beta) * m.var_tau;
        let sigma2 = (&m.var_xi - outer(&m.cov_xi_tau, &kappa) - outer(&kappa, &m.cov_xi_tau)
            + outer(&kappa, &kappa) * m.var_tau)
            / mu;
        let v2 = symmetrize(v2);
        let sigma2 = symmetrize(sigma2);
        let v = matrix_sqrt_psd(&v2)?;
        let sigma = matrix_sqrt_psd(&sigma2)?;
        let sigma_pinv = pseudo_inverse(&sigma)?;
        debug_assert_eq!(sigma.nrows(), d);
        Ok(Self {
            mu,
            alpha: &beta - &kappa,
            kappa,
            var_tau: m.var_tau,
            var_xi: m.var_xi.clone(),
            cov_xi_tau: m.cov_xi_tau.clone(),
            beta,
            v2,
            v,
            gamma: m.var_tau / mu,
            lambda: mu * mu / m.var_tau,
            sigma2,
            sigma,
            sigma_pinv,
            p,
        })
    }

    pub fn dim(&self) -> usize {
        self.kappa.len()
    }

    /// Flattened `(name, value)` list of the moment-level parameters.
    pub fn components(&self) -> Vec<(String, f64)> {
        let mut out = vec![("mu".to_string(), self.mu)];
        let d = self.dim();
        let vec = |out: &mut Vec<(String, f64)>, name: &str, v: &DVector<f64>| {
            for i in 0..d {
                out.push((format!("{name}[{i}]"), v[i]));
            }
        };
        let mat = |out: &mut Vec<(String, f64)>, name: &str, m: &DMatrix<f64>| {
            for i in 0..d {
                for j in i..d {
                    out.push((format!("{name}[{i},{j}]"), m[(i, j)]));
                }
            }
        };
        vec(&mut out, "kappa", &self.kappa);
        out.push(("var_tau".into(), self.var_tau));
        mat(&mut out, "var_xi", &self.var_xi);
        vec(&mut out, "cov_xi_tau", &self.cov_xi_tau);
        vec(&mut out, "beta", &self.beta);
        mat(&mut out, "v2", &self.v2);
        out.push(("gamma".into(), self.gamma));
        out.push(("lambda".into(), self.lambda));
        vec(&mut out, "alpha", &self.alpha);
        mat(&mut out, "sigma2", &self.sigma2);
        out
    }

    pub fn to_report(&self) -> GreeksReport {
        let v = |x: &DVector<f64>| x.iter().copied().collect::<Vec<_>>();
        GreeksReport {
            dim: self.dim(),
            p: self.p,
            mu: self.mu,
            kappa: v(&self.kappa),
            var_tau: self.var_tau,
            var_xi: to_rows(&self.var_xi),
            cov_xi_tau: v(&self.cov_xi_tau),
            beta: v(&self.beta),
            v2: to_rows(&self.v2),
            v: to_rows(&self.v),
            gamma: self.gamma,
            lambda: self.lambda,
            alpha: v(&self.alpha),
            sigma2: to_rows(&self.sigma2),
            sigma: to_rows(&self.sigma),
            sigma_pinv: to_rows(&self.sigma_pinv),
            residuals: check_greek_identities(self),
        }
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Serializable view of [`Greeks`] plus identity residuals.
#[derive(Debug, Clone, Serialize)]
pub struct GreeksReport {
    pub dim: usize,
    pub p: f64,
    pub mu: f64,
    pub kappa: Vec<f64>,
    pub var_tau: f64,
    pub var_xi: Vec<Vec<f64>>,
    pub cov_xi_tau: Vec<f64>,
    pub beta: Vec<f64>,
    pub v2: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: Vec<f64>,
    pub sigma2: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub sigma_pinv: Vec<Vec<f64>>,
    pub residuals: IdentityResiduals,
}

/// Max-norm residuals of the algebraic identities linking the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `mu sigma^2 - v^2 - Var tau alpha alpha^T`
    pub covariance_split: f64,
    /// `sigma sigma^+ v - v`
    pub range_v: f64,
    /// `sigma sigma^+ alpha - alpha`
    pub range_alpha: f64,
    /// `gamma lambda - mu`
    pub gamma_lambda: f64,
    /// `sigma sigma - sigma^2`
    pub sqrt_square: f64,
    /// `beta Var tau - cov(xi, tau)`
    pub beta_regression: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.covariance_split,
            self.range_v,
            self.range_alpha,
            self.gamma_lambda,
            self.sqrt_square,
            self.beta_regression,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn check_greek_identities(g: &Greeks) -> IdentityResiduals {
    let split = &g.sigma2 * g.mu - &g.v2 - &g.alpha * g.alpha.transpose() * g.var_tau;
    let proj = &g.sigma * &g.sigma_pinv;
    IdentityResiduals {
        covariance_split: max_abs(&split),
        range_v: max_abs(&(&proj * &g.v - &g.v)),
        range_alpha: max_abs_vec(&(&proj * &g.alpha - &g.alpha)),
        gamma_lambda: (g.gamma * g.lambda - g.mu).abs(),
        sqrt_square: max_abs(&(&g.sigma * &g.sigma - &g.sigma2)),
        beta_regression: max_abs_vec(&(&g.beta * g.var_tau - &g.cov_xi_tau)),
    }
}

/// Plug-in (divide-by-n) moments of a cycle sample.
pub fn sample_moments(cycles: &[CyclePath]) -> Result<CycleMoments> {
    if cycles.len() < 2 {
        return Err(Error::InsufficientData {
            got: cycles.len(),
            need: 2,
        });
    }
    let d = cycles[0].dim();
    let n = cycles.len() as f64;
    let mu = cycles.iter().map(CyclePath::tau).sum::<f64>() / n;
    let mut mean_xi = DVector::<f64>::zeros(d);
    for c in cycles {
        for (i, x) in c.xi().iter().enumerate() {
            mean_xi[i] += x;
        }
    }
    mean_xi /= n;
    let mut var_tau = 0.0;
    let mut cov = DVector::<f64>::zeros(d);
    let mut var_xi = DMatrix::<f64>::zeros(d, d);
    let mut dx = vec![0.0; d];
    for c in cycles {
        let dt = c.tau() - mu;
        var_tau += dt * dt;
        for (i, x) in c.xi().iter().enumerate() {
            dx[i] = x - mean_xi[i];
            cov[i] += dx[i] * dt;
        }
        for i in 0..d {
            for j in i..d {
                var_xi[(i, j)] += dx[i] * dx[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            var_xi[(i, j)] = var_xi[(j, i)];
        }
    }
    Ok(CycleMoments {
        mu,
        var_tau: var_tau / n,
        mean_xi,
        cov_xi_tau: cov / n,
        var_xi: var_xi / n,
    })
}

/// Plug-in estimate of every parameter from a cycle sample.
pub fn estimate_greeks(cycles: &[CyclePath], p: f64) -> Result<Greeks> {
    Greeks::from_moments(&sample_moments(cycles)?, p)
}

/// A named parameter with its estimate and jackknife standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentEstimate {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
}

/// Delete-a-group jackknife standard errors for [`Greeks::components`].
pub fn greeks_standard_errors(cycles: &[CyclePath], p: f64, groups: usize) -> Result<Vec<ComponentEstimate>> {
    if groups < 2 || cycles.len() < 2 * groups {
        return Err(Error::InsufficientData {
            got: cycles.len(),
            need: 2 * groups.max(2),
        });
    }
    let full = estimate_greeks(cycles, p)?.components();
    let size = cycles.len() / groups;
    let mut leave_out: Vec<Vec<f64>> = Vec::with_capacity(groups);
    for g in 0..groups {
        let lo = g * size;
        let hi = if g + 1 == groups { cycles.len() } else { lo + size };
        let rest: Vec<CyclePath> = cycles[..lo].iter().chain(&cycles[hi..]).cloned().collect();
        let est = estimate_greeks(&rest, p)?;
        leave_out.push(est.components().into_iter().map(|(_, v)| v).collect());
    }
    let k = groups as f64;
    Ok(full
        .into_iter()
        .enumerate()
        .map(|(idx, (name, estimate))| {
            let mean = leave_out.iter().map(|row| row[idx]).sum::<f64>() / k;
            let ss = leave_out.iter().map(|row| (row[idx] - mean).powi(2)).sum::<f64>();
            ComponentEstimate {
                name,
                estimate,
                std_error: ((k - 1.0) / k * ss).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interpolation;
    use proptest::prelude::*;

    fn moments_two_point() -> CycleMoments {
        // tau in {1, 3} equiprobable, xi = tau + Z with Z ~ N(0, 4) independent
        CycleMoments {
            mu: 2.0,
            var_tau: 1.0,
            mean_xi: DVector::from_vec(vec![2.0]),
            cov_xi_tau: DVector::from_vec(vec![1.0]),
            var_xi: DMatrix::from_element(1, 1, 5.0),
        }
    }

    #[test]
    fn two_point_closed_form() {
        let g = Greeks::from_moments(&moments_two_point(), 3.0).unwrap();
        assert_eq!(g.mu, 2.0);
        assert_eq!(g.gamma, 0.5);
        assert_eq!(g.lambda, 4.0);
        assert_eq!(g.kappa[0], 1.0);
        assert_eq!(g.beta[0], 1.0);
        assert_eq!(g.v2[(0, 0)], 4.0);
        assert_eq!(g.alpha[0], 0.0);
        assert_eq!(g.sigma2[(0, 0)], 2.0);
        assert!((g.v[(0, 0)] - 2.0).abs() < 1e-15);
        assert!(check_greek_identities(&g).max() < 1e-12);
    }

    #[test]
    fn residuals_zero_when_alpha_vanishes() {
        let g = Greeks::from_moments(&moments_two_point(), 3.0).unwrap();
        let r = check_greek_identities(&g);
        assert_eq!(r.covariance_split, 0.0);
        assert_eq!(r.gamma_lambda, 0.0);
    }

    #[test]
    fn corrupted_sigma2_is_detected() {
        let mut g = Greeks::from_moments(&moments_two_point(), 3.0).unwrap();
        g.sigma2[(0, 0)] += 1e-3;
        let r = check_greek_identities(&g);
        assert!((r.covariance_split - 2e-3).abs() < 1e-12, "{r:?}");
        assert!((r.sqrt_square - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_insufficient() {
        let c = CyclePath::single(1.0, vec![0.3], Interpolation::PiecewiseConstant).unwrap();
        let c2 = CyclePath::single(1.0, vec![0.7], Interpolation::PiecewiseConstant).unwrap();
        assert!(matches!(estimate_greeks(&[c.clone(), c2], 3.0), Err(Error::DegenerateTau)));
        assert!(matches!(estimate_greeks(&[c], 3.0), Err(Error::InsufficientData { .. })));
        // identical non-representable durations still count as degenerate
        let cs: Vec<_> = (0..3)
            .map(|i| CyclePath::single(0.1, vec![i as f64], Interpolation::PiecewiseConstant).unwrap())
            .collect();
        assert!(matches!(estimate_greeks(&cs, 3.0), Err(Error::DegenerateTau)));
    }

    #[test]
    fn plug_in_identity_is_exact_on_samples() {
        let cycles: Vec<_> = (0..200)
            .map(|i| {
                let t = 0.5 + (i % 7) as f64 * 0.3;
                let x = vec![1.2 * t + ((i * 37) % 11) as f64 * 0.1 - 0.4, -0.5 * t + (i % 3) as f64];
                CyclePath::single(t, x, Interpolation::PiecewiseLinear).unwrap()
            })
            .collect();
        let g = estimate_greeks(&cycles, 3.0).unwrap();
        assert!(check_greek_identities(&g).max() < 1e-10, "{:?}", check_greek_identities(&g));
    }

    proptest! {
        #[test]
        fn scale_equivariance(c in 0.1f64..10.0, seed in 0u64..1000) {
            let cycles: Vec<_> = (0..60u64).map(|i| {
                let h = crate::rng::mix64(seed * 1000 + i);
                let t = 0.2 + (h % 1000) as f64 / 250.0;
                let x = ((h >> 20) % 1000) as f64 / 100.0 - 5.0 + 0.7 * t;
                (t, x)
            }).collect();
            let mk = |scale: f64| -> Vec<CyclePath> {
                cycles.iter().map(|&(t, x)| CyclePath::single(t, vec![scale * x], Interpolation::PiecewiseConstant).unwrap()).collect()
            };
            let g1 = estimate_greeks(&mk(1.0), 3.0).unwrap();
            let gc = estimate_greeks(&mk(c), 3.0).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
            prop_assert!(close(gc.kappa[0], c * g1.kappa[0]));
            prop_assert!(close(gc.beta[0], c * g1.beta[0]));
            prop_assert!(close(gc.alpha[0], c * g1.alpha[0]));
            prop_assert!(close(gc.v[(0, 0)], c * g1.v[(0, 0)]));
            prop_assert!(close(gc.sigma2[(0, 0)], c * c * g1.sigma2[(0, 0)]));
            prop_assert!(close(gc.v2[(0, 0)], c * c * g1.v2[(0, 0)]));
            prop_assert_eq!(gc.mu, g1.mu);
        }
    }
}
