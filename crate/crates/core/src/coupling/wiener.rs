use nalgebra::{DMatrix, DVector};

use super::paths::UnitGridPath;
use crate::greeks::Greeks;
use crate::{Error, Result};

/// `W~_u = -sqrt(mu) B~_{u/mu}`: a standard Wiener process that moves opposite
/// to the duration driver (long cycles mean fewer renewals).
#[derive(Debug, Clone, Copy)]
pub struct InverseWiener<'a> {
    btilde: &'a UnitGridPath,
    mu: f64,
}

impl<'a> InverseWiener<'a> {
    pub fn at(&self, u: f64) -> Result<f64> {
        Ok(-self.mu.sqrt() * self.btilde.scalar_at(u / self.mu)?)
    }

    /// Largest `u` covered by the underlying driver.
    pub fn horizon(&self) -> f64 {
        self.btilde.len() as f64 * self.mu
    }
}

pub fn build_inverse_wiener<'a>(btilde: &'a UnitGridPath, greeks: &Greeks) -> InverseWiener<'a> {
    InverseWiener { btilde, mu: greeks.mu }
}

/// `W*_s = sqrt(lambda) B_{s/lambda}`: a standard `d`-dimensional Wiener process
/// with `W*_{lambda u} / sqrt(lambda) = B_u`.
#[derive(Debug, Clone, Copy)]
pub struct TimeChangeWiener<'a> {
    b: &'a UnitGridPath,
    lambda: f64,
}

impl<'a> TimeChangeWiener<'a> {
    pub fn at(&self, s: f64, out: &mut [f64]) -> Result<()> {
        self.b.value_at(s / self.lambda, out)?;
        let r = self.lambda.sqrt();
        out.iter_mut().for_each(|v| *v *= r);
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.b.len() as f64 * self.lambda
    }
}

pub fn build_timechange_wiener<'a>(b: &'a UnitGridPath, greeks: &Greeks) -> TimeChangeWiener<'a> {
    TimeChangeWiener { b, lambda: greeks.lambda }
}

/// Precomputed coefficients of
/// `W_t = s+ (lambda^{-1/2} v W*_{t/gamma} - lambda^{-1} gamma^{-1/2} mu alpha W~_t) + (I - s+ s) W°_t`.
#[derive(Debug, Clone)]
pub struct WAssembler {
    star: DMatrix<f64>,
    tilde: DVector<f64>,
    circ: DMatrix<f64>,
}

impl WAssembler {
    pub fn new(g: &Greeks) -> Self {
        let d = g.dim();
        let star = &g.sigma_pinv * &g.v / g.lambda.sqrt();
        let tilde = &g.sigma_pinv * &g.alpha * (g.mu / (g.lambda * g.gamma.sqrt()));
        let circ = DMatrix::<f64>::identity(d, d) - &g.sigma_pinv * &g.sigma;
        Self {
            star,
            tilde,
            circ,
        }
    }

    /// `W` from `W*_{t/gamma}`, `W~_t` and `W°_t`.
    pub fn apply(&self, w_star: &[f64], w_tilde: f64, w_circ: &[f64], out: &mut [f64]) {
        let d = out.len();
        for i in 0..d {
            let mut acc = -self.tilde[i] * w_tilde;
            for j in 0..d {
                acc += self.star[(i, j)] * w_star[j] + self.circ[(i, j)] * w_circ[j];
            }
            out[i] = acc;
        }
    }
}

/// Grid-pointwise assembly of `W` from sampled surrogate values.
///
/// `w_star[i]` is `W*_{t_i/gamma}`, `w_tilde[i]` is `W~_{t_i}` and
/// `w_circ[i]` is `W°_{t_i}`.
pub fn assemble_w(w_star: &[Vec<f64>], w_tilde: &[f64], w_circ: &[Vec<f64>], greeks: &Greeks) -> Result<Vec<Vec<f64>>> {
    if w_star.len() != w_tilde.len() || w_star.len() != w_circ.len() {
        return Err(Error::GridMismatch(format!(
            "W* has {} points, W~ {}, W° {}",
            w_star.len(),
            w_tilde.len(),
            w_circ.len()
        )));
    }
    let d = greeks.dim();
    if w_star.iter().chain(w_circ).any(|v| v.len() != d) {
        return Err(Error::GridMismatch(format!("expected {d}-dimensional samples")));
    }
    let asm = WAssembler::new(greeks);
    Ok(w_star
        .iter()
        .zip(w_tilde)
        .zip(w_circ)
        .map(|((s, &t), c)| {
            let mut out = vec![0.0; d];
            asm.apply(s, t, c, &mut out);
            out
        })
        .collect())
}
