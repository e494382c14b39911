use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::paths::UnitGridPath;
use crate::model::CountingPath;
use crate::rng::mix64;
use crate::special::PoissonQuantile;
use crate::Result;

/// Poisson process of rate `lambda` read off the unit increments of `B~`.
///
/// The count on `[k, k+1)` is the Poisson quantile of `Phi(B~_{k+1} - B~_k)`.
/// Arrival positions inside the interval are uniform order statistics drawn
/// from a generator keyed by the increment's bits and `k`, so the whole
/// process is a deterministic function of `B~`.
#[derive(Debug, Clone)]
pub struct PoissonEmbedding {
    quantile: PoissonQuantile,
    jump_times: Vec<f64>,
    units: usize,
}

impl PoissonEmbedding {
    pub fn new(lambda: f64) -> Self {
        Self {
            quantile: PoissonQuantile::new(lambda),
            jump_times: Vec::new(),
            units: 0,
        }
    }

    /// Count for a single unit increment.
    pub fn count_for(&self, increment: f64) -> u64 {
        self.quantile.from_normal(increment)
    }

    /// Processes the unit intervals of `bt` not yet covered.
    pub fn extend(&mut self, bt: &UnitGridPath) {
        let mut positions = Vec::new();
        for k in self.units..bt.len() {
            let inc = bt.increment(k);
            let n = self.count_for(inc);
            if n > 0 {
                let seed = mix64(inc.to_bits() ^ mix64(k as u64));
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                positions.clear();
                positions.extend((0..n).map(|_| rng.random::<f64>()));
                positions.sort_by(f64::total_cmp);
                for &p in &positions {
                    let mut s = k as f64 + p;
                    if let Some(&last) = self.jump_times.last() {
                        if s <= last {
                            s = f64::from_bits(last.to_bits() + 1);
                        }
                    }
                    if s <= 0.0 {
                        s = f64::MIN_POSITIVE;
                    }
                    self.jump_times.push(s);
                }
            }
        }
        self.units = bt.len();
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn into_counting_path(self) -> Result<CountingPath> {
        let horizon = self.units as f64;
        CountingPath::new(self.jump_times, horizon)
    }

    pub fn to_counting_path(&self) -> Result<CountingPath> {
        CountingPath::new(self.jump_times.clone(), self.units as f64)
    }
}

/// Builds `N` over the whole horizon of `bt`.
pub fn build_poisson_from_brownian(bt: &UnitGridPath, lambda: f64) -> Result<CountingPath> {
    let mut emb = PoissonEmbedding::new(lambda);
    emb.extend(bt);
    emb.into_counting_path()
}
