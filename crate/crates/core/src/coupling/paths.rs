use crate::{Error, Result};

/// A `dim`-dimensional path given by its values at the integers `0..=len`
/// and linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitGridPath {
    dim: usize,
    /// Row-major knot values, `(len + 1) * dim`, starting at zero.
    knots: Vec<f64>,
}

impl UnitGridPath {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            knots: vec![0.0; dim],
        }
    }

    /// Path with the given unit increments (row-major, `dim` per unit).
    pub fn from_increments(dim: usize, increments: &[f64]) -> Self {
        let mut p = Self::new(dim);
        p.extend(increments);
        p
    }

    pub fn extend(&mut self, increments: &[f64]) {
        debug_assert_eq!(increments.len() % self.dim, 0);
        let d = self.dim;
        for inc in increments.chunks_exact(d) {
            let base = self.knots.len() - d;
            for i in 0..d {
                let v = self.knots[base + i] + inc[i];
                self.knots.push(v);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of unit intervals covered.
    pub fn len(&self) -> usize {
        self.knots.len() / self.dim - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn knot(&self, k: usize) -> &[f64] {
        &self.knots[k * self.dim..(k + 1) * self.dim]
    }

    /// Increment over `[k, k+1]`, first coordinate (scalar paths).
    pub fn increment(&self, k: usize) -> f64 {
        self.knots[(k + 1) * self.dim] - self.knots[k * self.dim]
    }

    /// Linear interpolation at `s` in `[0, len]`, written into `out`.
    pub fn value_at(&self, s: f64, out: &mut [f64]) -> Result<()> {
        let n = self.len();
        if !(s >= 0.0) || s > n as f64 {
            return Err(Error::HorizonExceeded {
                requested: s,
                available: n as f64,
            });
        }
        let k = (s.floor() as usize).min(n.saturating_sub(1));
        let w = s - k as f64;
        let d = self.dim;
        let (a, b) = (&self.knots[k * d..(k + 1) * d], &self.knots[(k + 1) * d..(k + 2) * d]);
        for i in 0..d {
            out[i] = a[i] + w * (b[i] - a[i]);
        }
        Ok(())
    }

    /// Scalar convenience for one-dimensional paths.
    pub fn scalar_at(&self, s: f64) -> Result<f64> {
        let mut v = [0.0];
        self.value_at(s, &mut v)?;
        Ok(v[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_between_knots() {
        let p = UnitGridPath::from_increments(1, &[1.0, -2.0]);
        assert_eq!(p.len(), 2);
        assert_eq!(p.scalar_at(0.5).unwrap(), 0.5);
        assert_eq!(p.scalar_at(1.0).unwrap(), 1.0);
        assert_eq!(p.scalar_at(1.75).unwrap(), -0.5);
        assert_eq!(p.scalar_at(2.0).unwrap(), -1.0);
        assert!(p.scalar_at(2.01).is_err());
        assert_eq!(p.increment(1), -2.0);
    }
}
