//! Small statistical helpers: binomial intervals, quantiles, regression,
//! goodness of fit and bootstrap.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::rng::RngStream;
use crate::{Error, Result};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` trials.
pub fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let hi = if successes == n { 1.0 } else { (centre + half).clamp(p, 1.0) };
    (lo, hi)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(xs: &[f64]) -> f64 {
    quantile_sorted(&sorted(xs), 0.5)
}

/// Distribution-free confidence interval for the median from order
/// statistics (normal approximation to the binomial ranks).
pub fn median_ci(sorted: &[f64], z: f64) -> (f64, f64) {
    let n = sorted.len();
    assert!(n > 0, "median interval of empty data");
    let nf = n as f64;
    let half = 0.5 * z * nf.sqrt();
    let lo = ((0.5 * nf - half).floor().max(1.0) as usize).min(n) - 1;
    let hi = ((0.5 * nf + half).ceil() as usize).clamp(1, n) - 1;
    (sorted[lo], sorted[hi])
}

/// Ordinary least squares fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData { got: x.len().min(y.len()), need: 2 });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("regression on constant abscissae".into()));
    }
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
        sxy += (a - mx) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of `observed` counts against cell probabilities
/// `probs` (which need not sum to one: the missing mass forms a last cell).
/// Adjacent cells are pooled until each expected count is at least 5.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() {
        return Err(Error::InvalidParameter("observed/probability length mismatch".into()));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::EmptyInput("no observations".into()));
    }
    let nf = n as f64;
    let rest_p = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p * nf;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    e_acc += rest_p * nf;
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) if e_acc < 5.0 => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            _ => cells.push((o_acc, e_acc)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::InsufficientData { got: cells.len(), need: 2 });
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

/// Percentile bootstrap of the log-log slope of per-horizon medians.
///
/// `samples[i]` holds the replication values at horizon `ts[i]`; each
/// resample redraws replications independently per horizon.
pub fn bootstrap_loglog_slope(ts: &[f64], samples: &[Vec<f64>], resamples: usize, stream: RngStream) -> Result<(f64, f64)> {
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let mut rng = stream.rng();
    let mut slopes = Vec::with_capacity(resamples);
    let mut buf = Vec::new();
    for _ in 0..resamples {
        let ly: Vec<f64> = samples
            .iter()
            .map(|s| {
                buf.clear();
                buf.extend((0..s.len()).map(|_| s[rng.random_range(0..s.len())]));
                buf.sort_by(f64::total_cmp);
                quantile_sorted(&buf, 0.5).max(f64::MIN_POSITIVE).ln()
            })
            .collect();
        slopes.push(ols(&lx, &ly)?.slope);
    }
    slopes.sort_by(f64::total_cmp);
    Ok((quantile_sorted(&slopes, 0.025), quantile_sorted(&slopes, 0.975)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_at_zero_and_full() {
        let (lo, hi) = wilson(0, 100, Z95);
        assert_eq!(lo, 0.0);
        let z2 = Z95 * Z95;
        assert!((hi - z2 / (100.0 + z2)).abs() < 1e-15);
        let (lo, hi) = wilson(100, 100, Z95);
        assert_eq!(hi, 1.0);
        assert!(lo < 1.0);
        let (lo, hi) = wilson(30, 100, Z95);
        assert!(lo < 0.3 && hi > 0.3);
        // textbook value: 30/100 -> (0.2189, 0.3958)
        assert!((lo - 0.2189).abs() < 1e-4 && (hi - 0.3958).abs() < 1e-4);
    }

    #[test]
    fn ols_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v - 1.0).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-15 && (f.intercept + 1.0).abs() < 1e-15);
    }

    #[test]
    fn quantiles() {
        let s = sorted(&[3.0, 1.0, 2.0, 4.0]);
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
        let big: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let (lo, hi) = median_ci(&big, Z95);
        assert!(lo < 499.5 && hi > 499.5 && hi - lo < 80.0);
    }

    #[test]
    fn chi_square_uniform_dice() {
        let obs = [100u64, 98, 103, 99, 101, 99];
        let probs = [1.0 / 6.0; 6];
        let t = chi_square_gof(&obs, &probs).unwrap();
        assert_eq!(t.dof, 5);
        assert!(t.p_value > 0.9);
        let skew = [200u64, 50, 100, 100, 100, 50];
        assert!(chi_square_gof(&skew, &probs).unwrap().p_value < 1e-10);
    }
}
