use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::generators::{CycleSampler, ModelSpec};
use crate::model::CyclePath;
use crate::rng::{RngStream, StreamRole};
use crate::{Error, Result};

/// How the Gaussian drivers relate to the cycle data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// The model's own Gaussian innovations are the driver increments;
    /// durations are their Gamma quantile transform.
    #[default]
    SharedInnovations,
    /// One-dimensional models: each cycle is the inverse-CDF image of the
    /// driver increments.
    #[serde(rename = "quantile-1d")]
    Quantile1d,
    /// Drivers independent of the cycle data (null baseline).
    Independent,
}

impl CouplingMode {
    pub const ALL: [CouplingMode; 3] = [
        CouplingMode::SharedInnovations,
        CouplingMode::Quantile1d,
        CouplingMode::Independent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CouplingMode::SharedInnovations => "shared-innovations",
            CouplingMode::Quantile1d => "quantile-1d",
            CouplingMode::Independent => "independent",
        }
    }
}

impl fmt::Display for CouplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CouplingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CouplingMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown coupling mode {s:?}")))
    }
}

/// Rejects incompatible `(model, mode)` pairs.
pub fn check_mode(model: &ModelSpec, mode: CouplingMode) -> Result<()> {
    let unsupported = |reason: &str| {
        Err(Error::ModeUnsupported {
            mode: mode.to_string(),
            model: model.family().to_string(),
            reason: reason.to_string(),
        })
    };
    match mode {
        CouplingMode::Independent => Ok(()),
        CouplingMode::SharedInnovations => match model {
            ModelSpec::GammaGaussian { .. } => Ok(()),
            _ => unsupported("requires the conditionally Gaussian family gamma-gaussian"),
        },
        CouplingMode::Quantile1d => {
            if model.dimension() != 1 {
                return unsupported("requires dimension 1");
            }
            match model {
                ModelSpec::GammaGaussian { .. } | ModelSpec::ParetoCycle { .. } => Ok(()),
                _ => unsupported("no duration quantile coupling for this family"),
            }
        }
    }
}

/// Unit increments of the drivers `B` (d-dimensional) and `B~` (scalar).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDriver {
    pub dim: usize,
    pub mode: CouplingMode,
    /// Row-major, `dim` values per unit.
    pub unit_increments_b: Vec<f64>,
    pub unit_increments_btilde: Vec<f64>,
}

impl GaussianDriver {
    pub fn len(&self) -> usize {
        self.unit_increments_btilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_increments_btilde.is_empty()
    }
}

/// Incremental generator of `(cycle, driver increment)` pairs.
///
/// Draws are sequential within fixed streams, so generating `n` units and
/// then `m` more gives the same data as generating `n + m` at once.
pub struct DriverSource {
    sampler: CycleSampler,
    mode: CouplingMode,
    drivers: ChaCha8Rng,
    cycles: ChaCha8Rng,
}

impl DriverSource {
    pub fn new(model: &ModelSpec, mode: CouplingMode, root_seed: u64, replication: u64) -> Result<Self> {
        check_mode(model, mode)?;
        Ok(Self {
            sampler: model.sampler()?,
            mode,
            drivers: RngStream::replication(root_seed, replication, StreamRole::Drivers).rng(),
            cycles: RngStream::replication(root_seed, replication, StreamRole::Cycles).rng(),
        })
    }

    pub fn dim(&self) -> usize {
        self.sampler.dimension()
    }

    /// Generates `n` more units, appending to the given buffers.
    pub fn generate(&mut self, n: usize, cycles: &mut Vec<CyclePath>, b: &mut Vec<f64>, bt: &mut Vec<f64>) -> Result<()> {
        let d = self.dim();
        let mut g = vec![0.0; d];
        for _ in 0..n {
            let gt: f64 = StandardNormal.sample(&mut self.drivers);
            for gi in g.iter_mut() {
                *gi = StandardNormal.sample(&mut self.drivers);
            }
            let cycle = match self.mode {
                CouplingMode::Independent => self.sampler.sample(&mut self.cycles),
                CouplingMode::SharedInnovations | CouplingMode::Quantile1d => self.sampler.sample_coupled(gt, &g)?,
            };
            cycles.push(cycle);
            bt.push(gt);
            b.extend_from_slice(&g);
        }
        Ok(())
    }
}

/// `horizon_cycles` cycles together with their driver increments.
pub fn drive_gaussians(
    model: &ModelSpec,
    horizon_cycles: usize,
    mode: CouplingMode,
    root_seed: u64,
    replication: u64,
) -> Result<(Vec<CyclePath>, GaussianDriver)> {
    let mut source = DriverSource::new(model, mode, root_seed, replication)?;
    let (mut cycles, mut b, mut bt) = (Vec::new(), Vec::new(), Vec::new());
    source.generate(horizon_cycles, &mut cycles, &mut b, &mut bt)?;
    Ok((
        cycles,
        GaussianDriver {
            dim: source.dim(),
            mode,
            unit_increments_b: b,
            unit_increments_btilde: bt,
        },
    ))
}
