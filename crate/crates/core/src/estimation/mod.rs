//! Estimators, error measures and bounds.
//!
//! # Maximum likelihood for a single `N`
//!
//! With `k` outcomes `−` among `s` detected photons the log-likelihood is
//! `k ln P₋(Φ) + (s−k) ln(1−P₋(Φ))`, maximised over `P₋` at `P₋ = k/s`.
//! `P₋ = ½(1 − cos Φ)` is strictly increasing on `[0, π]`, so on that
//! window the maximiser in `Φ` is unique and equals `arccos(1 − 2k/s)`.
//! The estimate of `A` follows by `Â = (Φ̂ − φ₀)/N²`. When `k = 0` or
//! `k = s` the maximiser sits on the window edge and the estimate is
//! flagged as saturated.

mod fit;

pub use fit::{
    fit_cosine, fit_line, fit_power_law, fit_power_scaling, fit_quadratic_phase, FitParameter,
    FitResult,
};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::switch_protocol::CountRecord;

/// Maximum-likelihood estimate of a phase or area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// The counts were all `+` or all `−`; the value is a window edge.
    pub saturated: bool,
}

/// ML estimate of the total phase `Φ ∈ [0, π]` from `k_minus` of `shots`.
pub fn mle_total_phase(k_minus: u64, shots: u64) -> Result<Estimate> {
    if shots < 1 {
        return Err(Error::domain("need at least one detected shot"));
    }
    if k_minus > shots {
        return Err(Error::domain(format!(
            "k_minus {k_minus} exceeds shots {shots}"
        )));
    }
    let value = match k_minus {
        0 => 0.0,
        k if k == shots => PI,
        k => (1.0 - 2.0 * k as f64 / shots as f64)
            .clamp(-1.0, 1.0)
            .acos(),
    };
    Ok(Estimate {
        value,
        saturated: k_minus == 0 || k_minus == shots,
    })
}

/// ML estimate `Â = (arccos(1 − 2k/s) − φ₀)/N²` of the regularized area.
pub fn mle_phase(k_minus: u64, shots: u64, n: u32, phi0: f64) -> Result<Estimate> {
    if n < 1 {
        return Err(Error::domain("N must be at least 1 to estimate A"));
    }
    let phase = mle_total_phase(k_minus, shots)?;
    let n2 = f64::from(n).powi(2);
    Ok(Estimate {
        value: (phase.value - phi0) / n2,
        saturated: phase.saturated,
    })
}

/// One simulated trial and its estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialResult {
    pub estimate_a: f64,
    pub saturated: bool,
    pub counts: CountRecord,
    pub n: u32,
    pub trial_index: u64,
}

impl TrialResult {
    pub fn from_counts(counts: CountRecord, n: u32, phi0: f64, trial_index: u64) -> Result<Self> {
        let est = mle_phase(counts.k_minus, counts.effective_shots(), n, phi0)?;
        Ok(TrialResult {
            estimate_a: est.value,
            saturated: est.saturated,
            counts,
            n,
            trial_index,
        })
    }
}

/// `√(mean (x_i − truth)²)`.
pub fn rmse(values: &[f64], truth: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("RMSE of an empty set"));
    }
    let ms = values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / values.len() as f64;
    Ok(ms.sqrt())
}

/// RMSE of the trial estimates about the true area.
pub fn rmse_over_trials(trials: &[TrialResult], true_a: f64) -> Result<f64> {
    let values: Vec<f64> = trials.iter().map(|t| t.estimate_a).collect();
    rmse(&values, true_a)
}

/// Root-mean-square spread of the trial estimates about their own mean.
pub fn rmse_about_mean(trials: &[TrialResult]) -> Result<f64> {
    let values: Vec<f64> = trials.iter().map(|t| t.estimate_a).collect();
    let m = mean(&values)?;
    rmse(&values, m)
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("mean of an empty set"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Cramér–Rao bound of the SWITCH strategy, `1/(√ν N²)`.
pub fn crb_switch(nu: u64, n: u32) -> f64 {
    1.0 / ((nu as f64).sqrt() * f64::from(n).powi(2))
}

/// Cramér–Rao bound of the fixed-order homodyne strategy,
/// `√(x̄′² + p̄′²)/(√(2ν) N)`.
pub fn crb_fixed_order(x_bar: f64, p_bar: f64, nu: u64, n: u32) -> f64 {
    x_bar.hypot(p_bar) / ((2.0 * nu as f64).sqrt() * f64::from(n))
}

/// One point of an RMSE-versus-`N` curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub n: u32,
    pub rmse: f64,
    pub mean_estimate: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScalingCurve {
    pub points: Vec<ScalingPoint>,
}

impl ScalingCurve {
    /// `(N, RMSE)` pairs for the power-law fits.
    pub fn rmse_points(&self) -> Vec<(u32, f64)> {
        self.points.iter().map(|p| (p.n, p.rmse)).collect()
    }
}

/// How the photon budget `ν` is shared by the two homodyne runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShotBudget {
    /// Each quadrature run gets `ν` photons; this is the budget behind the
    /// `√(2ν)` in [`crb_fixed_order`].
    #[default]
    PerQuadrature,
    /// `ν/2` photons per run.
    Split,
}

impl ShotBudget {
    pub fn shots_per_run(self, nu: u64) -> Result<u64> {
        let shots = match self {
            ShotBudget::PerQuadrature => nu,
            ShotBudget::Split => nu / 2,
        };
        if shots < 1 {
            return Err(Error::domain(format!(
                "nu = {nu} leaves no shots per quadrature run"
            )));
        }
        Ok(shots)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineOptions {
    pub budget: ShotBudget,
    /// Multiplies the homodyne standard deviation; `0` switches noise off.
    pub noise_scale: f64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions {
            budget: ShotBudget::default(),
            noise_scale: 1.0,
        }
    }
}

/// Sample mean of `shots` homodyne outcomes after `n` displacements with
/// mean `mean`: each rescaled outcome is normal with standard deviation
/// `1/(N√2)`.
pub fn homodyne_mean_estimate<R: Rng + ?Sized>(
    mean: f64,
    n: usize,
    shots: u64,
    noise_scale: f64,
    rng: &mut R,
) -> f64 {
    let std = noise_scale * FRAC_1_SQRT_2 / n as f64;
    if std == 0.0 {
        return mean;
    }
    let normal = Normal::new(mean, std).expect("finite positive std");
    let total: f64 = (0..shots).map(|_| normal.sample(rng)).sum();
    total / shots as f64
}

/// Fixed-order strategy: measure `x̄′` and `p̄′` separately by homodyne
/// detection and output their product.
pub fn fixed_order_baseline<R: Rng + ?Sized>(
    xs_prime: &[f64],
    ps_prime: &[f64],
    nu: u64,
    rng: &mut R,
) -> Result<f64> {
    fixed_order_baseline_with(xs_prime, ps_prime, nu, &BaselineOptions::default(), rng)
}

pub fn fixed_order_baseline_with<R: Rng + ?Sized>(
    xs_prime: &[f64],
    ps_prime: &[f64],
    nu: u64,
    options: &BaselineOptions,
    rng: &mut R,
) -> Result<f64> {
    if xs_prime.is_empty() || xs_prime.len() != ps_prime.len() {
        return Err(Error::domain(
            "baseline needs equal nonempty displacement lists",
        ));
    }
    let shots = options.budget.shots_per_run(nu)?;
    let n = xs_prime.len();
    let x_hat = homodyne_mean_estimate(mean(xs_prime)?, n, shots, options.noise_scale, rng);
    let p_hat = homodyne_mean_estimate(mean(ps_prime)?, n, shots, options.noise_scale, rng);
    Ok(x_hat * p_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use crate::switch_protocol::outcome_probabilities;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mle_examples() {
        for n in 1..5 {
            let e = mle_phase(500, 1000, n, 0.0).unwrap();
            assert_abs_diff_eq!(e.value, (PI / 2.0) / f64::from(n * n), epsilon = 1e-15);
            assert!(!e.saturated);
        }
        let e = mle_phase(0, 1000, 3, 0.307).unwrap();
        assert_abs_diff_eq!(e.value, -0.307 / 9.0, epsilon = 1e-15);
        assert!(e.saturated);
        let e = mle_phase(1000, 1000, 3, 0.307).unwrap();
        assert_abs_diff_eq!(e.value, (PI - 0.307) / 9.0, epsilon = 1e-15);
        assert!(e.saturated);
    }

    #[test]
    fn mle_rejects_bad_counts() {
        assert!(mle_phase(11, 10, 1, 0.0).is_err());
        assert!(mle_phase(0, 0, 1, 0.0).is_err());
        assert!(mle_phase(3, 10, 0, 0.0).is_err());
    }

    #[test]
    fn mle_inverts_noiseless_counts() {
        let (a, phi0, shots, n) = (0.042, 0.307, 1_000_000u64, 4u32);
        let p = outcome_probabilities(a, n, phi0).minus;
        let k = (shots as f64 * p).round() as u64;
        let e = mle_phase(k, shots, n, phi0).unwrap();
        let phase = 16.0 * a + phi0;
        let bound = 2.0 / (shots as f64 * 16.0 * phase.sin());
        assert!((e.value - a).abs() < bound, "{} vs {a}", e.value);
    }

    #[test]
    fn rmse_examples() {
        let t = |v: f64| TrialResult {
            estimate_a: v,
            saturated: false,
            counts: CountRecord::default(),
            n: 1,
            trial_index: 0,
        };
        assert_eq!(rmse_over_trials(&[t(0.3), t(0.3)], 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(
            rmse_over_trials(&[t(0.3 + 0.01), t(0.3 - 0.01)], 0.3).unwrap(),
            0.01,
            epsilon = 1e-15
        );
        assert!(rmse_over_trials(&[], 0.0).is_err());
        assert_abs_diff_eq!(
            rmse_about_mean(&[t(1.0), t(3.0)]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn bounds() {
        assert_abs_diff_eq!(crb_switch(1000, 1), 0.031623, epsilon = 1e-6);
        assert_abs_diff_eq!(crb_switch(1000, 8), 4.941e-4, epsilon = 1e-7);
        assert_abs_diff_eq!(
            crb_switch(4000, 5),
            crb_switch(1000, 5) / 2.0,
            epsilon = 1e-15
        );

        let xb = 0.042f64.sqrt();
        assert_abs_diff_eq!(crb_fixed_order(xb, xb, 1000, 8), 8.10e-4, epsilon = 1e-6);
        assert_eq!(crb_fixed_order(0.0, 0.0, 1000, 8), 0.0);
        let ratio = |n| crb_fixed_order(xb, xb, 1000, n) / crb_switch(1000, n);
        assert_abs_diff_eq!(ratio(6) / ratio(3), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_baseline_is_exact() {
        let xs = [0.2, 0.21, 0.19];
        let ps = [0.3, 0.28, 0.32];
        let opts = BaselineOptions {
            noise_scale: 0.0,
            ..Default::default()
        };
        let a = fixed_order_baseline_with(&xs, &ps, 1000, &opts, &mut rng_for(0, &[])).unwrap();
        assert_abs_diff_eq!(a, 0.2 * 0.3, epsilon = 1e-15);
    }

    #[test]
    fn baseline_budget_errors() {
        let split = BaselineOptions {
            budget: ShotBudget::Split,
            ..Default::default()
        };
        let mut rng = rng_for(0, &[]);
        assert!(fixed_order_baseline_with(&[0.2], &[0.2], 1, &split, &mut rng).is_err());
        assert!(fixed_order_baseline(&[0.2], &[0.2], 0, &mut rng).is_err());
        assert!(fixed_order_baseline(&[0.2], &[0.2, 0.1], 10, &mut rng).is_err());
    }

    #[test]
    fn homodyne_run_has_fisher_information_2n2() {
        // variance of the sample mean of `shots` outcomes is 1/(2N²·shots)
        let (n, shots, reps) = (4usize, 50u64, 4000);
        let mut rng = rng_for(21, &[]);
        let draws: Vec<f64> = (0..reps)
            .map(|_| homodyne_mean_estimate(0.2, n, shots, 1.0, &mut rng))
            .collect();
        let m = mean(&draws).unwrap();
        let var = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        let expected = 1.0 / (2.0 * (n * n) as f64 * shots as f64);
        // sample variance of 4000 normals: relative sd ≈ 2.2%
        assert!((var / expected - 1.0).abs() < 0.1, "{var} vs {expected}");
    }

    #[test]
    fn baseline_rmse_near_bound() {
        let xb = 0.042f64.sqrt();
        let (n, nu, reps) = (8usize, 1000u64, 10_000);
        let xs = vec![xb; n];
        let mut rng = rng_for(99, &[]);
        let errs: Vec<f64> = (0..reps)
            .map(|_| fixed_order_baseline(&xs, &xs, nu, &mut rng).unwrap())
            .collect();
        let r = rmse(&errs, xb * xb).unwrap();
        let bound = crb_fixed_order(xb, xb, nu, n as u32);
        assert!((r / bound - 1.0).abs() < 0.25, "rmse {r} vs bound {bound}");
    }
}
