use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::ShotBudget;
use crate::fock_oracle::DEFAULT_CUTOFF;
use crate::switch_protocol::PhysicalParams;

/// The figure or table an experiment run reproduces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fig3,
    Fig4,
    Fig5a,
    Fig5b,
    Baseline,
    LossSweep,
    OracleCheck,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Fig3,
        Mode::Fig4,
        Mode::Fig5a,
        Mode::Fig5b,
        Mode::Baseline,
        Mode::LossSweep,
        Mode::OracleCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fig3 => "fig3",
            Mode::Fig4 => "fig4",
            Mode::Fig5a => "fig5a",
            Mode::Fig5b => "fig5b",
            Mode::Baseline => "baseline",
            Mode::LossSweep => "loss-sweep",
            Mode::OracleCheck => "oracle-check",
        }
    }

    /// Stream identifier mixed into every seed this mode derives.
    pub fn tag(self) -> u64 {
        match self {
            Mode::Fig3 => 3,
            Mode::Fig4 => 4,
            Mode::Fig5a => 51,
            Mode::Fig5b => 52,
            Mode::Baseline => 6,
            Mode::LossSweep => 7,
            Mode::OracleCheck => 8,
        }
    }

    fn default_n_values(self, n_max: Option<u32>) -> Vec<u32> {
        let top = n_max.unwrap_or(8);
        match self {
            Mode::Fig3 | Mode::Fig5a | Mode::Fig5b => (0..=top).collect(),
            Mode::Fig4 | Mode::Baseline => (1..=top).collect(),
            Mode::LossSweep => match n_max {
                Some(top) => [10, 50, 100].into_iter().filter(|&n| n <= top).collect(),
                None => vec![10, 50, 100],
            },
            Mode::OracleCheck => Vec::new(),
        }
    }

    fn allows_zero(self) -> bool {
        matches!(self, Mode::Fig3 | Mode::Fig5a | Mode::Fig5b)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}

/// Settings of the fixed-order homodyne comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Dimensionless mean position shift `x̄′`.
    pub x_mean: f64,
    /// Dimensionless mean momentum kick `p̄′`.
    pub p_mean: f64,
    pub budget: ShotBudget,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        let side = 0.042f64.sqrt();
        BaselineConfig {
            x_mean: side,
            p_mean: side,
            budget: ShotBudget::PerQuadrature,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub samples: usize,
    pub cutoff: usize,
    pub max_amplitude: f64,
    pub max_n: usize,
    /// Double the cutoff (up to 256) until retention is trusted.
    pub auto_cutoff: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            samples: 100,
            cutoff: DEFAULT_CUTOFF,
            max_amplitude: 0.5,
            max_n: 3,
            auto_cutoff: false,
        }
    }
}

/// Declarative description of one run. Every field has a default, so an
/// empty config file reproduces the published settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    /// Master seed.
    pub seed: u64,
    /// Photons per trial.
    pub nu: u64,
    /// Trials per point.
    pub trials: usize,
    /// Monte Carlo repetitions per point in the baseline comparison.
    pub repetitions: usize,
    /// Explicit list of `N`; overrides the mode's default range.
    pub n_values: Option<Vec<u32>>,
    /// Upper end of the mode's default `N` range.
    pub n_max: Option<u32>,
    pub phi0: f64,
    /// Survival per displacement pair; defaults to 1, or 0.996 for the loss
    /// sweep.
    pub eta: Option<f64>,
    /// Fix the regularized area instead of deriving it from `physical`.
    pub area: Option<f64>,
    /// Redraw element fluctuations for every trial instead of once per run.
    pub redraw_per_trial: bool,
    pub physical: PhysicalParams,
    pub baseline: BaselineConfig,
    pub oracle: OracleConfig,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: None,
            seed: 2021,
            nu: 1000,
            trials: 30,
            repetitions: 2000,
            n_values: None,
            n_max: None,
            phi0: 0.307,
            eta: None,
            area: None,
            redraw_per_trial: false,
            physical: PhysicalParams::default(),
            baseline: BaselineConfig::default(),
            oracle: OracleConfig::default(),
            out: PathBuf::from("results"),
        }
    }
}

pub const LOSS_SWEEP_ETA: f64 = 0.996;

impl ExperimentConfig {
    pub fn for_mode(mode: Mode) -> Self {
        ExperimentConfig {
            mode: Some(mode),
            ..Default::default()
        }
    }

    pub fn mode(&self) -> Result<Mode> {
        self.mode
            .ok_or_else(|| Error::Config("no mode selected".into()))
    }

    pub fn eta(&self) -> Result<f64> {
        Ok(self.eta.unwrap_or(match self.mode()? {
            Mode::LossSweep => LOSS_SWEEP_ETA,
            _ => 1.0,
        }))
    }

    /// The `N` values this run visits, in ascending order.
    pub fn n_values(&self) -> Result<Vec<u32>> {
        let mode = self.mode()?;
        let mut values = match &self.n_values {
            Some(v) => v.clone(),
            None => mode.default_n_values(self.n_max),
        };
        values.sort_unstable();
        values.dedup();
        Ok(values)
    }

    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.nu < 1 {
            return bad("nu must be at least 1".into());
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.repetitions < 1 {
            return bad("repetitions must be at least 1".into());
        }
        if !self.phi0.is_finite() {
            return bad("phi0 must be finite".into());
        }
        let eta = self.eta()?;
        if !(eta > 0.0 && eta <= 1.0) {
            return bad(format!("eta must lie in (0, 1], got {eta}"));
        }
        if let Some(a) = self.area {
            if !a.is_finite() {
                return bad("area must be finite".into());
            }
        }
        self.physical.validate()?;
        if !(self.baseline.x_mean.is_finite() && self.baseline.p_mean.is_finite()) {
            return bad("baseline means must be finite".into());
        }
        if mode == Mode::OracleCheck {
            let o = &self.oracle;
            if o.samples < 1 || o.cutoff < 1 || o.max_n < 1 {
                return bad("oracle samples, cutoff and max_n must be at least 1".into());
            }
            if !(o.max_amplitude >= 0.0 && o.max_amplitude.is_finite()) {
                return bad("oracle max_amplitude must be nonnegative".into());
            }
            return Ok(());
        }
        let values = self.n_values()?;
        if values.is_empty() {
            return bad(format!("{mode}: the N range is empty"));
        }
        if !mode.allows_zero() && values.contains(&0) {
            return bad(format!("{mode}: N = 0 carries no information about A"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_per_mode() {
        let c = ExperimentConfig::for_mode(Mode::Fig3);
        assert_eq!(c.n_values().unwrap(), (0..=8).collect::<Vec<_>>());
        assert_eq!(c.eta().unwrap(), 1.0);
        let c = ExperimentConfig::for_mode(Mode::LossSweep);
        assert_eq!(c.n_values().unwrap(), vec![10, 50, 100]);
        assert_eq!(c.eta().unwrap(), LOSS_SWEEP_ETA);
        let c = ExperimentConfig {
            n_max: Some(5),
            ..ExperimentConfig::for_mode(Mode::Fig4)
        };
        assert_eq!(c.n_values().unwrap(), vec![1, 2, 3, 4, 5]);
        for m in Mode::ALL {
            assert!(ExperimentConfig::for_mode(m).validate().is_ok(), "{m}");
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
    }

    #[test]
    fn validation_failures() {
        let base = ExperimentConfig::for_mode(Mode::Fig4);
        assert!(ExperimentConfig {
            trials: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            n_values: Some(vec![0, 1, 2]),
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            n_values: Some(vec![]),
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            eta: Some(0.0),
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig { mode: None, ..base }.validate().is_err());
        assert!("fig6".parse::<Mode>().is_err());
    }

    #[test]
    fn serde_round_trip_of_defaults() {
        let c = ExperimentConfig::for_mode(Mode::Baseline);
        let json = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let partial: ExperimentConfig = serde_json::from_str(r#"{"nu": 500}"#).unwrap();
        assert_eq!(partial.nu, 500);
        assert_eq!(partial.trials, 30);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"nuu": 500}"#).is_err());
    }
}
