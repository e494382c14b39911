//! Experiment configuration file.
//!
//! The config is a TOML document with four sections:
//!
//! ```toml
//! [model]
//! family = "gamma-gaussian"   # plus family-specific keys, see ModelSpec
//!
//! [experiment]
//! p = 3.0
//! t_grid = [1024.0, 2048.0]   # horizons
//! x_multipliers = [1.0, 2.0]  # x = r * c_factor * t^(1/p)
//! x_values = []               # extra absolute thresholds
//! replications = 200
//! grid_step = 0.25
//! c_factor = 1.0
//! bootstrap = 1000
//!
//! [coupling]
//! mode = "shared-innovations"
//! oracle_cycles = 1000000
//!
//! [rng]
//! root_seed = 0
//! ```
//!
//! Only `[model]` and `experiment.p` are required. Parsing fills the
//! defaults, and [`ExperimentConfig::snapshot`] writes the effective config
//! back out so that re-parsing it gives an equal value.

use serde::{Deserialize, Serialize};

use crate::bounds::{validity_region, Region};
use crate::coupling::CouplingMode;
use crate::generators::ModelSpec;
use crate::{Error, Result};

/// Minimum replication count for any output carrying a confidence interval.
pub const MIN_REPLICATIONS: usize = 50;

fn default_t_grid() -> Vec<f64> {
    (10..=16).map(|k| f64::from(1u32 << k)).collect()
}

fn default_multipliers() -> Vec<f64> {
    vec![1.0, 1.41, 2.0, 2.83, 4.0, 5.66, 8.0]
}

fn default_replications() -> usize {
    200
}

fn default_grid_step() -> f64 {
    0.25
}

fn default_c_factor() -> f64 {
    1.0
}

fn default_bootstrap() -> usize {
    1000
}

fn default_oracle_cycles() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub p: f64,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_multipliers")]
    pub x_multipliers: Vec<f64>,
    #[serde(default)]
    pub x_values: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_c_factor")]
    pub c_factor: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(default)]
    pub mode: CouplingMode,
    /// Cycles used to estimate the parameters of families without closed forms.
    #[serde(default = "default_oracle_cycles")]
    pub oracle_cycles: usize,
}

impl Default for CouplingSection {
    fn default() -> Self {
        Self {
            mode: CouplingMode::default(),
            oracle_cycles: default_oracle_cycles(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngSection {
    #[serde(default)]
    pub root_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub rng: RngSection,
}

/// A threshold on the tail grid together with its region tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub region: Region,
}

impl ExperimentConfig {
    /// Parses and validates a config document.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::ConfigParse(m) => Error::ConfigParse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Minimal config for `model` at moment order `p`, all else defaulted.
    pub fn minimal(model: ModelSpec, p: f64) -> Self {
        Self {
            model,
            experiment: ExperimentSection {
                p,
                t_grid: default_t_grid(),
                x_multipliers: default_multipliers(),
                x_values: Vec::new(),
                replications: default_replications(),
                grid_step: default_grid_step(),
                c_factor: default_c_factor(),
                bootstrap: default_bootstrap(),
            },
            coupling: CouplingSection::default(),
            rng: RngSection::default(),
        }
    }

    /// The effective config as TOML.
    pub fn snapshot(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        self.model
            .validate()
            .map_err(|e| Error::ConfigInvalid(format!("model: {e}")))?;
        let e = &self.experiment;
        let p_max = self.model.p_max();
        if !(e.p > 2.0) {
            return bad(format!("p={} must exceed 2", e.p));
        }
        if !(e.p < p_max) {
            return bad(format!("p={} ≥ p_max={} for {}", e.p, p_max, self.model.family()));
        }
        if e.t_grid.is_empty() {
            return bad("t_grid must be nonempty".into());
        }
        if e.t_grid.iter().any(|t| !(t.is_finite() && *t >= std::f64::consts::E)) {
            return bad("every horizon in t_grid must be finite and at least e".into());
        }
        if e.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("t_grid must be strictly increasing".into());
        }
        if e.x_multipliers.iter().chain(&e.x_values).any(|x| !(x.is_finite() && *x > 0.0)) {
            return bad("x_multipliers and x_values must be positive".into());
        }
        if e.replications < MIN_REPLICATIONS {
            return bad(format!("replications={} below the minimum {MIN_REPLICATIONS}", e.replications));
        }
        if !(e.grid_step > 0.0 && e.grid_step <= 1.0) {
            return bad(format!("grid_step={} must lie in (0, 1]", e.grid_step));
        }
        if !(e.c_factor > 0.0 && e.c_factor.is_finite()) {
            return bad(format!("c_factor={} must be positive", e.c_factor));
        }
        if e.bootstrap == 0 {
            return bad("bootstrap must be positive".into());
        }
        if self.rng.root_seed > i64::MAX as u64 {
            return bad("root_seed must fit in a signed 64-bit integer".into());
        }
        Ok(())
    }

    /// Non-fatal remarks about the config.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.experiment.p > 4.0 {
            w.push(format!(
                "p={} > 4: the constructive Wiener surrogates are only expected to reach rates near t^(1/4)",
                self.experiment.p
            ));
        }
        w
    }

    /// `c t^{1/p}`: the smallest threshold kept on the tail grid at horizon `t`.
    pub fn x_floor(&self, t: f64) -> f64 {
        self.experiment.c_factor * t.powf(1.0 / self.experiment.p)
    }

    /// Tail thresholds at horizon `t`, increasing, with region tags.
    ///
    /// Multiplier points `r c t^{1/p}` are kept up to `t / log t`; explicit
    /// `x_values` are kept if at least `c t^{1/p}`.
    pub fn x_grid(&self, t: f64) -> Result<Vec<GridPoint>> {
        let floor = self.x_floor(t);
        let cap = t / t.ln();
        let mut xs: Vec<f64> = self
            .experiment
            .x_multipliers
            .iter()
            .map(|r| r * floor)
            .filter(|&x| x >= floor && x <= cap)
            .collect();
        xs.extend(self.experiment.x_values.iter().copied().filter(|&x| x >= floor));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.into_iter()
            .map(|x| Ok(GridPoint { x, region: validity_region(t, x)? }))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nfamily = \"gamma-gaussian\"\n[experiment]\np = 3.0\n";

    #[test]
    fn minimal_fills_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.experiment.t_grid.len(), 7);
        assert_eq!(cfg.rng.root_seed, 0);
        assert_eq!(cfg.experiment.replications, 200);
        assert_eq!(cfg.coupling.mode, CouplingMode::SharedInnovations);
        let gg = ModelSpec::default_for("gamma-gaussian").unwrap();
        assert_eq!(cfg, ExperimentConfig::minimal(gg, 3.0));
    }

    #[test]
    fn snapshot_round_trips() {
        let text = "[model]\nfamily = \"pareto-cycle\"\nindex = 3.5\n[experiment]\np = 3.0\nx_values = [30.5]\n\
                    [coupling]\nmode = \"quantile-1d\"\n[rng]\nroot_seed = 77\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let again = ExperimentConfig::parse(&cfg.snapshot().unwrap()).unwrap();
        assert_eq!(cfg, again);
        let mm1 = ExperimentConfig::minimal(ModelSpec::default_for("mm1-busy-cycle").unwrap(), 3.0);
        assert_eq!(ExperimentConfig::parse(&mm1.snapshot().unwrap()).unwrap(), mm1);
    }

    #[test]
    fn moment_contract_enforced() {
        let text = "[model]\nfamily = \"pareto-cycle\"\nindex = 3.5\n[experiment]\np = 4.0\n";
        match ExperimentConfig::parse(text) {
            Err(Error::ConfigInvalid(m)) => assert!(m.contains("p=4 ≥ p_max=3.5 for pareto-cycle"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_reports_line() {
        match ExperimentConfig::parse("[model\nfamily = 1") {
            Err(Error::ConfigParse(m)) => assert!(m.contains("line 1"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ExperimentConfig::parse("[model]\nfamily = \"gamma-gaussian\"\n[experiment]\np = 3.0\nbogus = 1\n"),
            Err(Error::ConfigParse(_))
        ));
    }

    #[test]
    fn validation_rules() {
        let mut cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        cfg.experiment.replications = 10;
        assert!(cfg.validate().is_err());
        cfg.experiment.replications = 50;
        cfg.experiment.t_grid = vec![10.0, 5.0];
        assert!(cfg.validate().is_err());
        cfg.experiment.t_grid = vec![5.0, 10.0];
        cfg.experiment.p = 2.0;
        assert!(cfg.validate().is_err());
        cfg.experiment.p = 5.0;
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.warnings().len(), 1);
    }

    #[test]
    fn x_grid_respects_region() {
        let cfg = ExperimentConfig::parse(
            "[model]\nfamily = \"gamma-gaussian\"\n[experiment]\np = 3.0\nx_values = [1.0, 500.0]\n",
        )
        .unwrap();
        let g = cfg.x_grid(1024.0).unwrap();
        let floor = 1024f64.powf(1.0 / 3.0);
        assert!(g.iter().all(|p| p.x >= floor));
        assert!(g.iter().any(|p| p.x == 500.0 && p.region == Region::LargeDeviation));
        assert!(g.iter().filter(|p| p.x != 500.0).all(|p| p.region == Region::Pair));
        assert_eq!(g.len(), 8);
    }
}
