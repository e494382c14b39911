//! Regeneration cycles, cumulative paths and counting processes.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How a cycle's trajectory behaves between recorded events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// The value jumps at each event and is flat in between.
    PiecewiseConstant,
    /// The value moves linearly between consecutive events (starting from 0).
    PiecewiseLinear,
}

/// One regeneration cycle: duration, increment and intra-cycle trajectory.
///
/// Events are `(offset, value)` pairs with strictly increasing offsets in
/// `(0, tau]`; values are cumulative relative to the cycle start. The last
/// event sits at `tau` and carries the cycle increment `xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclePath {
    tau: f64,
    dim: usize,
    offsets: Vec<f64>,
    /// Row-major, `offsets.len() * dim`.
    values: Vec<f64>,
    interpolation: Interpolation,
    eta: f64,
}

impl CyclePath {
    pub fn new(
        dim: usize,
        offsets: Vec<f64>,
        values: Vec<f64>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("cycle dimension must be >= 1".into()));
        }
        if offsets.is_empty() || values.len() != offsets.len() * dim {
            return Err(Error::InvalidParameter(format!(
                "cycle needs >= 1 event and {} values per event",
                dim
            )));
        }
        if !(offsets[0] > 0.0) || offsets.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "event offsets must be positive and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) || !offsets.last().unwrap().is_finite() {
            return Err(Error::InvalidParameter("non-finite cycle data".into()));
        }
        let tau = *offsets.last().unwrap();
        let eta = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        Ok(Self {
            tau,
            dim,
            offsets,
            values,
            interpolation,
            eta,
        })
    }

    /// A cycle whose whole increment lands in a single event at `tau`.
    pub fn single(tau: f64, xi: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
        }
        let dim = xi.len();
        Self::new(dim, vec![tau], xi, interpolation)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cycle increment `xi` (the last event's value).
    pub fn xi(&self) -> &[f64] {
        let n = self.offsets.len();
        &self.values[(n - 1) * self.dim..]
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn events(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.offsets
            .iter()
            .copied()
            .zip(self.values.chunks_exact(self.dim))
    }

    pub fn event_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Max-norm supremum of the intra-cycle trajectory.
    ///
    /// For both interpolation kinds the supremum is attained at an event (for
    /// linear segments, at a segment endpoint; the start point is 0).
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Trajectory value at `offset` in `[0, tau]`, written into `out`.
    pub fn value_at(&self, offset: f64, out: &mut [f64]) {
        out.fill(0.0);
        self.add_value_at(offset, out);
    }

    /// Adds the trajectory value at `offset` onto `out`.
    pub fn add_value_at(&self, offset: f64, out: &mut [f64]) {
        let d = self.dim;
        // index of the first event with offset > `offset`
        let idx = self.offsets.partition_point(|&o| o <= offset);
        match self.interpolation {
            Interpolation::PiecewiseConstant => {
                if idx > 0 {
                    for (o, v) in out.iter_mut().zip(&self.values[(idx - 1) * d..idx * d]) {
                        *o += v;
                    }
                }
            }
            Interpolation::PiecewiseLinear => {
                if idx >= self.offsets.len() {
                    for (o, v) in out.iter_mut().zip(self.xi()) {
                        *o += v;
                    }
                    return;
                }
                let o0 = if idx == 0 { 0.0 } else { self.offsets[idx - 1] };
                let w = (offset - o0) / (self.offsets[idx] - o0);
                let next = &self.values[idx * d..(idx + 1) * d];
                for i in 0..d {
                    let v0 = if idx == 0 { 0.0 } else { self.values[(idx - 1) * d + i] };
                    out[i] += v0 + w * (next[i] - v0);
                }
            }
        }
    }
}

/// Max-norm supremum of a cycle; see [`CyclePath::eta`].
pub fn cycle_max(cycle: &CyclePath) -> f64 {
    cycle.eta()
}

/// Concatenation of cycles with renewal times `T_0 = 0 < T_1 < ...`.
#[derive(Debug, Clone)]
pub struct RegenerativePath {
    dim: usize,
    cycles: Vec<CyclePath>,
    renewal_times: Vec<f64>,
    /// `S(T_k)`, row-major `(cycles + 1) * dim`.
    renewal_values: Vec<f64>,
}

impl RegenerativePath {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            cycles: Vec::new(),
            renewal_times: vec![0.0],
            renewal_values: vec![0.0; dim],
        }
    }

    pub fn from_cycles(cycles: Vec<CyclePath>) -> Result<Self> {
        let dim = cycles
            .first()
            .map(CyclePath::dim)
            .ok_or_else(|| Error::EmptyInput("no cycles".into()))?;
        let mut path = Self::new(dim);
        for c in cycles {
            path.push(c)?;
        }
        Ok(path)
    }

    pub fn push(&mut self, cycle: CyclePath) -> Result<()> {
        if cycle.dim() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "cycle dimension {} does not match path dimension {}",
                cycle.dim(),
                self.dim
            )));
        }
        let t = self.last_renewal() + cycle.tau();
        let k = self.cycles.len();
        for i in 0..self.dim {
            let v = self.renewal_values[k * self.dim + i] + cycle.xi()[i];
            self.renewal_values.push(v);
        }
        self.renewal_times.push(t);
        self.cycles.push(cycle);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cycles(&self) -> &[CyclePath] {
        &self.cycles
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }

    pub fn renewal_times(&self) -> &[f64] {
        &self.renewal_times
    }

    pub fn last_renewal(&self) -> f64 {
        *self.renewal_times.last().unwrap()
    }

    /// `S(T_k)`.
    pub fn value_at_renewal(&self, k: usize) -> &[f64] {
        &self.renewal_values[k * self.dim..(k + 1) * self.dim]
    }

    /// `m(t) = max{k : T_k <= t}`.
    pub fn renewal_count(&self, t: f64) -> usize {
        self.renewal_times.partition_point(|&r| r <= t).saturating_sub(1)
    }

    /// `S(u)` given `m = m(u)`; skips the search when the caller sweeps.
    pub fn evaluate_with_count(&self, u: f64, m: usize, out: &mut [f64]) {
        out.copy_from_slice(self.value_at_renewal(m));
        let base = self.renewal_times[m];
        if u == base || m >= self.cycles.len() {
            return;
        }
        self.cycles[m].add_value_at(u - base, out);
    }

    /// `S(u)`; exact at renewal times.
    pub fn evaluate(&self, u: f64) -> Result<Vec<f64>> {
        if u < 0.0 || u > self.last_renewal() {
            return Err(Error::HorizonExceeded {
                requested: u,
                available: self.last_renewal(),
            });
        }
        let mut out = vec![0.0; self.dim];
        self.evaluate_with_count(u, self.renewal_count(u), &mut out);
        Ok(out)
    }
}

/// `S(u)` for a path; see [`RegenerativePath::evaluate`].
pub fn evaluate_path(path: &RegenerativePath, u: f64) -> Result<Vec<f64>> {
    path.evaluate(u)
}

/// `m(t)`; see [`RegenerativePath::renewal_count`].
pub fn renewal_count(path: &RegenerativePath, t: f64) -> usize {
    path.renewal_count(t)
}

/// Right-continuous counting path `N(u) = #{jumps <= u}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountingPath {
    jump_times: Vec<f64>,
    /// Time up to which the jump record is complete.
    horizon: f64,
}

impl CountingPath {
    pub fn new(jump_times: Vec<f64>, horizon: f64) -> Result<Self> {
        if jump_times.iter().any(|&s| !(s > 0.0)) || jump_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "jump times must be positive and strictly increasing".into(),
            ));
        }
        if let Some(&last) = jump_times.last() {
            if last > horizon {
                return Err(Error::InvalidParameter("jump beyond recorded horizon".into()));
            }
        }
        Ok(Self {
            jump_times,
            horizon,
        })
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// `N(u)`.
    pub fn value_at(&self, u: f64) -> usize {
        self.jump_times.partition_point(|&s| s <= u)
    }

    /// Time of the `n`-th jump (`n >= 1`).
    pub fn passage_time(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        self.jump_times
            .get(n - 1)
            .copied()
            .ok_or(Error::HorizonExceeded {
                requested: n as f64,
                available: self.jump_times.len() as f64,
            })
    }

    /// First passage of `N` to `level`: the time of the `ceil(level)`-th jump,
    /// with `N^{-1}(0) = 0`.
    pub fn invert(&self, level: f64) -> Result<f64> {
        if !(level >= 0.0) {
            return Err(Error::Domain(format!("level must be >= 0, got {level}")));
        }
        self.passage_time(level.ceil() as usize)
    }
}

/// Generalized inverse of a counting path; see [`CountingPath::invert`].
pub fn invert_counting(n: &CountingPath, level: f64) -> Result<f64> {
    n.invert(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_cycle(interp: Interpolation) -> RegenerativePath {
        RegenerativePath::from_cycles(vec![CyclePath::single(2.0, vec![3.0], interp).unwrap()]).unwrap()
    }

    #[test]
    fn evaluate_linear_and_constant() {
        let lin = one_cycle(Interpolation::PiecewiseLinear);
        assert_eq!(lin.evaluate(1.0).unwrap(), vec![1.5]);
        assert_eq!(lin.evaluate(0.0).unwrap(), vec![0.0]);
        let step = one_cycle(Interpolation::PiecewiseConstant);
        assert_eq!(step.evaluate(1.0).unwrap(), vec![0.0]);
        assert_eq!(step.evaluate(2.0).unwrap(), vec![3.0]);
        assert!(matches!(step.evaluate(2.5), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn renewal_count_boundaries() {
        let cycles = [1.5, 1.5, 1.2]
            .iter()
            .map(|&t| CyclePath::single(t, vec![1.0], Interpolation::PiecewiseConstant).unwrap())
            .collect();
        let p = RegenerativePath::from_cycles(cycles).unwrap();
        // renewal times 1.5, 3.0, 4.2
        assert_eq!(p.renewal_count(3.0), 2);
        assert_eq!(p.renewal_count(0.5), 0);
        assert_eq!(p.renewal_count(p.renewal_times()[3]), 3);
        assert!((p.renewal_times()[3] - 4.2).abs() < 1e-15);
    }

    #[test]
    fn cycle_max_examples() {
        let c = CyclePath::new(1, vec![1.0, 2.0], vec![-2.0, 1.0], Interpolation::PiecewiseConstant).unwrap();
        assert_eq!(cycle_max(&c), 2.0);
        let c = CyclePath::single(2.0, vec![3.0], Interpolation::PiecewiseLinear).unwrap();
        assert_eq!(cycle_max(&c), 3.0);
        let c = CyclePath::new(2, vec![1.0, 2.0], vec![1.0, -4.0, 2.0, 0.0], Interpolation::PiecewiseConstant).unwrap();
        assert_eq!(cycle_max(&c), 4.0);
        assert_eq!(c.xi(), &[2.0, 0.0]);
    }

    #[test]
    fn cycle_validation() {
        assert!(CyclePath::new(1, vec![1.0, 1.0], vec![0.0, 0.0], Interpolation::PiecewiseConstant).is_err());
        assert!(CyclePath::new(1, vec![0.0], vec![0.0], Interpolation::PiecewiseConstant).is_err());
        assert!(CyclePath::single(-1.0, vec![0.0], Interpolation::PiecewiseConstant).is_err());
        assert!(CyclePath::new(2, vec![1.0], vec![0.0], Interpolation::PiecewiseConstant).is_err());
    }

    #[test]
    fn invert_counting_examples() {
        let n = CountingPath::new(vec![0.4, 1.1, 2.7], 3.0).unwrap();
        assert_eq!(invert_counting(&n, 2.0).unwrap(), 1.1);
        assert_eq!(invert_counting(&n, 1.5).unwrap(), 1.1);
        assert_eq!(invert_counting(&n, 0.0).unwrap(), 0.0);
        assert!(matches!(invert_counting(&n, 3.5), Err(Error::HorizonExceeded { .. })));
        assert_eq!(n.value_at(1.1), 2);
        assert_eq!(n.value_at(1.0999), 1);
    }

    fn arb_cycles() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.01f64..5.0, -10.0f64..10.0), 1..40)
    }

    proptest! {
        #[test]
        fn renewal_and_evaluation_invariants(cs in arb_cycles(), linear in any::<bool>()) {
            let interp = if linear { Interpolation::PiecewiseLinear } else { Interpolation::PiecewiseConstant };
            let cycles: Vec<_> = cs.iter().map(|&(t, x)| CyclePath::single(t, vec![x], interp).unwrap()).collect();
            let path = RegenerativePath::from_cycles(cycles).unwrap();
            let mut prefix = 0.0;
            for k in 0..=path.cycle_count() {
                let tk = path.renewal_times()[k];
                prop_assert_eq!(path.renewal_count(tk), k);
                prop_assert_eq!(path.evaluate(tk).unwrap()[0], prefix);
                if k < path.cycle_count() {
                    let gap = path.renewal_times()[k + 1] - tk;
                    prop_assert!((gap - cs[k].0).abs() <= 1e-12 * path.renewal_times()[k + 1]);
                    prefix += cs[k].1;
                }
            }
            let horizon = path.last_renewal();
            for i in 0..50 {
                let u = horizon * i as f64 / 50.0;
                let m = path.renewal_count(u);
                prop_assert!(path.renewal_times()[m] <= u);
                if m < path.cycle_count() {
                    prop_assert!(u < path.renewal_times()[m + 1]);
                }
            }
        }

        #[test]
        fn inversion_duality(gaps in prop::collection::vec(0.001f64..3.0, 1..50)) {
            let mut t = 0.0;
            let jumps: Vec<f64> = gaps.iter().map(|g| { t += g; t }).collect();
            let n = CountingPath::new(jumps.clone(), t).unwrap();
            for &s in &jumps {
                let k = n.value_at(s);
                let inv = n.invert(k as f64).unwrap();
                prop_assert!(inv <= s);
                prop_assert_eq!(n.value_at(inv), k);
            }
        }
    }
}
