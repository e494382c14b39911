//! Distribution functions needed on hot paths: normal tails, a fast Gamma
//! quantile, a tabulated Poisson quantile and the two-sided Brownian maximum
//! tail.

use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function `P(Z > x)`, accurate in the far tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `P(sup_{s <= 1} |B_s| >= a)` for a standard Brownian motion.
pub fn brownian_abs_sup_tail(a: f64) -> f64 {
    if a <= 0.0 {
        return 1.0;
    }
    if a >= 1.0 {
        // 4 * sum_{k>=1} (-1)^{k+1} P(Z > (2k-1) a)
        let mut total = 0.0;
        for k in 1..200 {
            let term = normal_sf((2 * k - 1) as f64 * a);
            if k % 2 == 1 {
                total += term;
            } else {
                total -= term;
            }
            if term < 1e-300 || term < total.abs() * 1e-18 {
                break;
            }
        }
        (4.0 * total).clamp(0.0, 1.0)
    } else {
        // P(sup < a) = 4/pi * sum_{k>=0} (-1)^k/(2k+1) exp(-(2k+1)^2 pi^2 / (8 a^2))
        let mut total = 0.0;
        for k in 0..200 {
            let m = (2 * k + 1) as f64;
            let term = (-(m * m) * PI * PI / (8.0 * a * a)).exp() / m;
            if k % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
            if term < 1e-300 {
                break;
            }
        }
        (1.0 - 4.0 / PI * total).clamp(0.0, 1.0)
    }
}

/// Quantile function of `Gamma(shape, scale)`.
///
/// Inputs are given on the normal scale (`u = Phi(z)`), which keeps both
/// tails accurate and supplies the Wilson-Hilferty starting point for free.
#[derive(Debug, Clone)]
pub struct GammaQuantile {
    shape: f64,
    scale: f64,
    ln_gamma_shape: f64,
    integer_shape: Option<u32>,
}

impl GammaQuantile {
    pub fn new(shape: f64, scale: f64) -> Self {
        let integer_shape = if shape.fract() == 0.0 && shape >= 1.0 && shape <= 40.0 {
            Some(shape as u32)
        } else {
            None
        };
        Self {
            shape,
            scale,
            ln_gamma_shape: ln_gamma(shape),
            integer_shape,
        }
    }

    fn pdf_std(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        ((self.shape - 1.0) * x.ln() - x - self.ln_gamma_shape).exp()
    }

    /// Lower regularized incomplete gamma at `x` (unit scale).
    fn cdf_std(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.integer_shape {
            Some(k) if x < self.shape => {
                // e^{-x} sum_{j>=k} x^j / j!
                let mut term = (k as f64 * x.ln() - x - self.ln_gamma_shape - (k as f64).ln()).exp();
                let mut total = term;
                let mut j = k as f64;
                loop {
                    j += 1.0;
                    term *= x / j;
                    total += term;
                    if term <= total * 1e-17 {
                        break;
                    }
                }
                total
            }
            Some(_) => 1.0 - self.sf_std(x),
            None => gamma_lr(self.shape, x),
        }
    }

    /// Upper regularized incomplete gamma at `x` (unit scale).
    fn sf_std(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match self.integer_shape {
            Some(k) if x >= self.shape => {
                // e^{-x} sum_{j<k} x^j / j!
                let mut term = (-x).exp();
                let mut total = term;
                for j in 1..k {
                    term *= x / j as f64;
                    total += term;
                }
                total
            }
            Some(_) => 1.0 - self.cdf_std(x),
            None => gamma_ur(self.shape, x),
        }
    }

    /// CDF at `x` on the original scale.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_std(x / self.scale)
    }

    /// Survival function at `x` on the original scale.
    pub fn sf(&self, x: f64) -> f64 {
        self.sf_std(x / self.scale)
    }

    /// `F^{-1}(Phi(z))`.
    pub fn from_normal(&self, z: f64) -> f64 {
        let k = self.shape;
        let upper = z > 0.0;
        let target = if upper { normal_sf(z) } else { normal_cdf(z) };
        if target <= 0.0 {
            return if upper { f64::INFINITY } else { 0.0 };
        }
        let c = 1.0 / (9.0 * k);
        let wh = k * (1.0 - c + z * c.sqrt()).powi(3);
        let mut x = if wh > 1e-3 * k {
            wh
        } else {
            // small-x expansion cdf ~ x^k / Gamma(k+1)
            ((target.ln() + ln_gamma(k + 1.0)) / k).exp()
        };
        let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
        for _ in 0..100 {
            let (f, slope) = if upper {
                (self.sf_std(x) - target, -self.pdf_std(x))
            } else {
                (self.cdf_std(x) - target, self.pdf_std(x))
            };
            // cdf increasing, sf decreasing: f*sign(slope) > 0 means x too large
            if (f > 0.0) == (slope > 0.0) {
                hi = hi.min(x);
            } else {
                lo = lo.max(x);
            }
            let mut next = if slope != 0.0 { x - f / slope } else { f64::NAN };
            if !next.is_finite() || next <= lo || next >= hi {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(lo) + 1.0 };
            }
            if (next - x).abs() <= 1e-14 * x.abs() {
                x = next;
                break;
            }
            x = next;
        }
        x * self.scale
    }
}

/// Quantile function of `Poisson(lambda)` evaluated at `Phi(z)`.
#[derive(Debug, Clone)]
pub struct PoissonQuantile {
    lambda: f64,
    /// `P(X <= n)`.
    cdf: Vec<f64>,
    /// `P(X > n)`, summed from the top for tail accuracy.
    sf: Vec<f64>,
}

impl PoissonQuantile {
    pub fn new(lambda: f64) -> Self {
        assert!(lambda > 0.0 && lambda.is_finite(), "Poisson rate must be positive");
        let n_max = (lambda + 40.0 * lambda.sqrt() + 60.0).ceil() as usize;
        let ln_l = lambda.ln();
        let pmf: Vec<f64> = (0..=n_max)
            .map(|n| (n as f64 * ln_l - lambda - ln_gamma(n as f64 + 1.0)).exp())
            .collect();
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        let mut sf = vec![0.0; pmf.len()];
        let mut tail = 0.0;
        for n in (0..pmf.len()).rev() {
            sf[n] = tail;
            tail += pmf[n];
        }
        Self { lambda, cdf, sf }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Smallest `n` with `P(X <= n) >= Phi(z)`.
    pub fn from_normal(&self, z: f64) -> u64 {
        if z <= 0.0 {
            let u = normal_cdf(z);
            self.cdf.partition_point(|&c| c < u) as u64
        } else {
            let q = normal_sf(z);
            // sf is nonincreasing; first n with sf[n] <= q
            let idx = self.sf.partition_point(|&s| s > q);
            idx.min(self.sf.len() - 1) as u64
        }
    }

    /// `P(X = n)` from the table.
    pub fn pmf(&self, n: usize) -> f64 {
        match n {
            0 => self.cdf[0],
            _ if n < self.cdf.len() => self.cdf[n] - self.cdf[n - 1],
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Gamma};

    #[test]
    fn normal_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_sf(-3.0) - 0.998650101968370).abs() < 1e-12);
        assert!((normal_cdf(-3.0) - 0.001349898031630).abs() < 1e-12);
        assert!((normal_sf(5.0) / 2.866515718791933e-7 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_quantile_matches_cdf() {
        for &(shape, scale) in &[(1.0, 1.0), (2.0, 0.5), (3.7, 2.0), (0.6, 1.0), (12.0, 0.1)] {
            let gq = GammaQuantile::new(shape, scale);
            let reference = Gamma::new(shape, 1.0 / scale).unwrap();
            for &z in &[-6.0, -2.5, -0.3, 0.0, 0.4, 1.9, 5.0, 8.0] {
                let x = gq.from_normal(z);
                if z <= 0.0 {
                    let want = normal_cdf(z);
                    let got = reference.cdf(x);
                    assert!((got - want).abs() <= 1e-10 * want.max(1e-300) + 1e-15, "{shape} {z}: {got} vs {want}");
                } else {
                    let want = normal_sf(z);
                    let got = reference.sf(x);
                    assert!((got - want).abs() <= 1e-9 * want, "{shape} {z}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn exponential_median_is_ln2() {
        let gq = GammaQuantile::new(1.0, 1.0);
        assert!((gq.from_normal(0.0) - std::f64::consts::LN_2).abs() < 1e-13);
    }

    #[test]
    fn poisson_quantile_examples() {
        let pq = PoissonQuantile::new(1.0);
        // P(0) = e^-1 = 0.368 < 0.5 <= P(<=1) = 0.736
        assert_eq!(pq.from_normal(0.0), 1);
        // Phi(-3) = 0.00135 < e^-1
        assert_eq!(pq.from_normal(-3.0), 0);
        assert_eq!(pq.from_normal(1.0), 2);
        assert!(pq.from_normal(9.0) >= 8);
        assert!((pq.pmf(0) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn brownian_tail_branches_agree() {
        // both expansions are valid everywhere; compare near the switch point
        let a = 1.0;
        let first = {
            let mut total = 0.0;
            for k in 1..50 {
                let t = normal_sf((2 * k - 1) as f64 * a);
                total += if k % 2 == 1 { t } else { -t };
            }
            4.0 * total
        };
        let second = {
            let mut total = 0.0;
            for k in 0..50 {
                let m = (2 * k + 1) as f64;
                let t = (-(m * m) * PI * PI / (8.0 * a * a)).exp() / m;
                total += if k % 2 == 0 { t } else { -t };
            }
            1.0 - 4.0 / PI * total
        };
        assert!((first - second).abs() < 1e-12, "{first} {second}");
        assert!((brownian_abs_sup_tail(a) - first).abs() < 1e-14);
        // reflection bound sandwich: 2 P(Z>a) <= P(sup|B| >= a) <= 4 P(Z>a)
        for &a in &[0.5, 1.5, 3.0, 6.0] {
            let p = brownian_abs_sup_tail(a);
            assert!(p <= 4.0 * normal_sf(a) + 1e-15);
            assert!(p >= 2.0 * normal_sf(a) - 1e-15);
        }
    }
}
