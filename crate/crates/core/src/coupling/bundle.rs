use rand_distr::{Distribution, StandardNormal};

use super::drivers::{CouplingMode, DriverSource, GaussianDriver};
use super::paths::UnitGridPath;
use super::poisson::PoissonEmbedding;
use super::wiener::{build_inverse_wiener, build_timechange_wiener, InverseWiener, TimeChangeWiener, WAssembler};
use crate::generators::ModelSpec;
use crate::greeks::Greeks;
use crate::model::{CountingPath, RegenerativePath};
use crate::rng::{RngStream, StreamRole};
use crate::{Error, Result};

/// Everything needed to compare a simulated path with its Wiener coupling
/// up to a horizon `t`.
///
/// Two clocks are involved. Cycle indices (the "index axis") carry `B`, `B~`
/// and `N`; physical time `u` carries `S`, `W°` and `W`. `y(u)` maps
/// physical time to the index axis.
#[derive(Debug, Clone)]
pub struct CouplingBundle {
    pub greeks: Greeks,
    pub mode: CouplingMode,
    pub path: RegenerativePath,
    pub b: UnitGridPath,
    pub btilde: UnitGridPath,
    pub n: CountingPath,
    pub w_circ: UnitGridPath,
    /// Physical-time horizon the bundle is guaranteed to cover.
    pub horizon: f64,
    pub root_seed: u64,
    pub replication: u64,
}

impl CouplingBundle {
    /// Builds the bundle for one replication, extending cycles, drivers and
    /// the Poisson embedding together until every object covers `t`.
    pub fn build(
        model: &ModelSpec,
        greeks: &Greeks,
        mode: CouplingMode,
        t: f64,
        root_seed: u64,
        replication: u64,
    ) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
        }
        if greeks.dim() != model.dimension() {
            return Err(Error::InvalidParameter("greeks dimension does not match the model".into()));
        }
        let d = model.dimension();
        let mut source = DriverSource::new(model, mode, root_seed, replication)?;
        let mut path = RegenerativePath::new(d);
        let mut b = UnitGridPath::new(d);
        let mut btilde = UnitGridPath::new(1);
        let mut poisson = PoissonEmbedding::new(greeks.lambda);

        let levels_needed = (t / greeks.gamma).floor() as usize + 1;
        let index_needed = (levels_needed as f64 / greeks.lambda).max(t / greeks.mu) + 1.0;
        let mut batch = ((1.05 * t / greeks.mu).ceil() as usize + 16).max(index_needed.ceil() as usize);
        let (mut cycles, mut bi, mut bti) = (Vec::new(), Vec::new(), Vec::new());
        loop {
            cycles.clear();
            bi.clear();
            bti.clear();
            source.generate(batch, &mut cycles, &mut bi, &mut bti)?;
            for c in cycles.drain(..) {
                path.push(c)?;
            }
            b.extend(&bi);
            btilde.extend(&bti);
            poisson.extend(&btilde);
            let k = path.cycle_count() as f64;
            if path.last_renewal() > t && poisson.jump_count() >= levels_needed && k >= index_needed {
                break;
            }
            batch = (path.cycle_count() / 8).max(16);
        }

        let units = t.ceil() as usize + 1;
        let mut rng = RngStream::replication(root_seed, replication, StreamRole::Circ).rng();
        let circ: Vec<f64> = (0..units * d).map(|_| StandardNormal.sample(&mut rng)).collect();

        Ok(Self {
            greeks: greeks.clone(),
            mode,
            path,
            b,
            btilde,
            n: poisson.into_counting_path()?,
            w_circ: UnitGridPath::from_increments(d, &circ),
            horizon: t,
            root_seed,
            replication,
        })
    }

    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    /// The drivers as unit increments.
    pub fn driver(&self) -> GaussianDriver {
        let d = self.dim();
        let units = self.b.len();
        let mut inc_b = Vec::with_capacity(units * d);
        let mut inc_bt = Vec::with_capacity(units);
        for k in 0..units {
            let (lo, hi) = (self.b.knot(k), self.b.knot(k + 1));
            inc_b.extend(lo.iter().zip(hi).map(|(a, c)| c - a));
            inc_bt.push(self.btilde.increment(k));
        }
        GaussianDriver {
            dim: d,
            mode: self.mode,
            unit_increments_b: inc_b,
            unit_increments_btilde: inc_bt,
        }
    }

    /// Level index `j = [u/gamma] + 1`, so that `N(y(u)) = j`.
    pub fn level(&self, u: f64) -> usize {
        (u / self.greeks.gamma).floor() as usize + 1
    }

    /// `y(u)`: time of the `([u/gamma] + 1)`-th jump of `N`.
    pub fn y(&self, u: f64) -> Result<f64> {
        self.n.passage_time(self.level(u))
    }

    /// `m(u)`.
    pub fn m(&self, u: f64) -> usize {
        self.path.renewal_count(u)
    }

    pub fn w_tilde(&self) -> InverseWiener<'_> {
        build_inverse_wiener(&self.btilde, &self.greeks)
    }

    pub fn w_star(&self) -> TimeChangeWiener<'_> {
        build_timechange_wiener(&self.b, &self.greeks)
    }

    pub fn assembler(&self) -> WAssembler {
        WAssembler::new(&self.greeks)
    }

    /// `W_u`.
    pub fn w_at(&self, u: f64, out: &mut [f64]) -> Result<()> {
        self.check_u(u)?;
        let d = self.dim();
        let mut star = vec![0.0; d];
        let mut circ = vec![0.0; d];
        self.w_star().at(u / self.greeks.gamma, &mut star)?;
        self.w_circ.value_at(u, &mut circ)?;
        let tilde = self.w_tilde().at(u)?;
        self.assembler().apply(&star, tilde, &circ, out);
        Ok(())
    }

    pub(crate) fn check_u(&self, u: f64) -> Result<()> {
        if !(u >= 0.0) || u > self.horizon {
            return Err(Error::HorizonExceeded {
                requested: u,
                available: self.horizon,
            });
        }
        Ok(())
    }
}
