use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use rand::Rng;

use super::config::{ExperimentConfig, Mode};
use super::{par_map, RunReport, Table};
use crate::error::{Error, Result};
use crate::estimation::{
    self, crb_fixed_order, crb_switch, fit_cosine, fit_line, fit_power_law, fit_power_scaling,
    fit_quadratic_phase, mle_phase, mle_total_phase, BaselineOptions, FitResult, ScalingCurve,
    ScalingPoint,
};
use crate::fock_oracle::{self, TRUSTED_RETENTION};
use crate::phase_algebra::{
    commutator_loop_phase, momentum_sequence, phase_distance, position_sequence,
    DisplacementSequence,
};
use crate::seed::rng_for;
use crate::switch_protocol::{
    probabilities_for_phase, realize_displacements, sample_counts_for_phase, switch_output_phase,
    CountRecord, PhysicalParams, RealizedDisplacements,
};

/// Seed stream of the hardware realization; shared by all modes so one
/// master seed means one set of plates and wedges.
const REALIZE_TAG: u64 = 0x5EA1;
const LOSSLESS_TAG: u64 = 0x1055;
const HOMODYNE_TAG: u64 = 0x4D0D;

/// Largest phase deviation the oracle check accepts.
pub const ORACLE_PHASE_TOLERANCE: f64 = 1e-6;

/// Where the displacements of trial `t` at size `N` come from.
enum Hardware {
    Fixed {
        x: f64,
        p: f64,
    },
    Static(RealizedDisplacements),
    Redrawn {
        params: PhysicalParams,
        seed: u64,
        len: usize,
    },
}

impl Hardware {
    fn from_config(config: &ExperimentConfig, len: usize) -> Result<Self> {
        let len = len.max(1);
        if let Some(area) = config.area {
            let side = area.abs().sqrt();
            return Ok(Hardware::Fixed {
                x: side.copysign(area),
                p: side,
            });
        }
        if config.redraw_per_trial {
            return Ok(Hardware::Redrawn {
                params: config.physical,
                seed: config.seed,
                len,
            });
        }
        let mut rng = rng_for(config.seed, &[REALIZE_TAG]);
        Ok(Hardware::Static(realize_displacements(
            &config.physical,
            len,
            &mut rng,
        )?))
    }

    /// Displacements of the first `n ≥ 1` elements as used in trial `trial`.
    fn realized(&self, n: usize, trial: usize) -> Result<RealizedDisplacements> {
        match self {
            Hardware::Fixed { x, p } => RealizedDisplacements::new(vec![*x; n], vec![*p; n]),
            Hardware::Static(r) => r.prefix(n),
            Hardware::Redrawn { params, seed, len } => {
                let mut rng = rng_for(*seed, &[REALIZE_TAG, 1 + trial as u64]);
                realize_displacements(params, *len, &mut rng)?.prefix(n)
            }
        }
    }
}

fn max_n(values: &[u32]) -> usize {
    values.iter().copied().max().unwrap_or(1) as usize
}

/// Total SWITCH phase `N² x̄ p̄ + φ₀` computed through the displacement
/// algebra; `N = 0` leaves only the offset.
fn switch_phase(r: Option<&RealizedDisplacements>, phi0: f64) -> Result<f64> {
    match r {
        None => Ok(phi0),
        Some(r) => {
            let (p_seq, x_seq) = r.sequences()?;
            switch_output_phase(&p_seq, &x_seq, phi0)
        }
    }
}

/// Truth and counts of one SWITCH trial.
struct SwitchTrial {
    true_area: f64,
    true_phase: f64,
    counts: CountRecord,
}

fn switch_trial(
    hardware: &Hardware,
    config: &ExperimentConfig,
    n: u32,
    eta: f64,
    trial: usize,
    stream: &[u64],
) -> Result<SwitchTrial> {
    let realized = if n >= 1 {
        Some(hardware.realized(n as usize, trial)?)
    } else {
        None
    };
    let true_phase = switch_phase(realized.as_ref(), config.phi0)?;
    let mut rng = rng_for(config.seed, stream);
    let survival = eta.powi(n as i32);
    let counts = sample_counts_for_phase(config.nu, survival, true_phase, &mut rng);
    if counts.effective_shots() == 0 {
        return Err(Error::domain(format!(
            "N = {n}, trial {trial}: no photon survived"
        )));
    }
    Ok(SwitchTrial {
        true_area: realized.map_or(f64::NAN, |r| r.area),
        true_phase,
        counts,
    })
}

fn switch_trials(
    hardware: &Hardware,
    config: &ExperimentConfig,
    n: u32,
    eta: f64,
    count: usize,
    stream: &[u64],
) -> Result<Vec<SwitchTrial>> {
    par_map(count, |t| {
        let mut s = stream.to_vec();
        s.extend([u64::from(n), t as u64]);
        switch_trial(hardware, config, n, eta, t, &s)
    })
    .into_iter()
    .collect()
}

/// Area estimates and their errors against each trial's truth.
fn area_errors(trials: &[SwitchTrial], n: u32, phi0: f64) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let mut estimates = Vec::with_capacity(trials.len());
    let mut errors = Vec::with_capacity(trials.len());
    let mut saturated = 0;
    for t in trials {
        let e = mle_phase(t.counts.k_minus, t.counts.effective_shots(), n, phi0)?;
        saturated += usize::from(e.saturated);
        estimates.push(e.value);
        errors.push(e.value - t.true_area);
    }
    Ok((estimates, errors, saturated))
}

fn rms(values: &[f64]) -> Result<f64> {
    estimation::rmse(values, 0.0)
}

fn fit_if_possible(points: &[(u32, f64)]) -> Option<FitResult> {
    fit_power_scaling(points).ok()
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct Fig3Row {
    pub n: u32,
    pub mean_p_minus: f64,
    /// RMS deviation of the per-trial `P₋` from the prediction.
    pub rmse_p_minus: f64,
    pub predicted_p_minus: f64,
    /// Binomial standard deviation of `mean_p_minus`.
    pub sigma_of_mean: f64,
    pub within_4_sigma: bool,
    pub true_area: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig3Result {
    pub rows: Vec<Fig3Row>,
    pub fit: Option<FitResult>,
}

/// Control fringe `P₋` versus `N`.
pub fn run_fig3(config: &ExperimentConfig) -> Result<Fig3Result> {
    let config = &ExperimentConfig {
        mode: Some(Mode::Fig3),
        ..config.clone()
    };
    config.validate()?;
    let values = config.n_values()?;
    let eta = config.eta()?;
    let hardware = Hardware::from_config(config, max_n(&values))?;

    let mut rows = Vec::with_capacity(values.len());
    for &n in &values {
        let trials = switch_trials(
            &hardware,
            config,
            n,
            eta,
            config.trials,
            &[Mode::Fig3.tag()],
        )?;
        let count = trials.len() as f64;
        let mut observed = Vec::with_capacity(trials.len());
        let mut predicted_sum = 0.0;
        let mut variance_sum = 0.0;
        let mut sq_dev = 0.0;
        for t in &trials {
            let predicted = probabilities_for_phase(t.true_phase).minus;
            let p = t.counts.p_minus().expect("trials keep at least one shot");
            predicted_sum += predicted;
            variance_sum += predicted * (1.0 - predicted) / t.counts.effective_shots() as f64;
            sq_dev += (p - predicted).powi(2);
            observed.push(p);
        }
        let mean_p_minus = estimation::mean(&observed)?;
        let predicted_p_minus = predicted_sum / count;
        let sigma_of_mean = variance_sum.sqrt() / count;
        rows.push(Fig3Row {
            n,
            mean_p_minus,
            rmse_p_minus: (sq_dev / count).sqrt(),
            predicted_p_minus,
            sigma_of_mean,
            within_4_sigma: (mean_p_minus - predicted_p_minus).abs() <= 4.0 * sigma_of_mean,
            true_area: estimation::mean(&trials.iter().map(|t| t.true_area).collect::<Vec<_>>())?,
        });
    }
    let points: Vec<(u32, f64)> = rows.iter().map(|r| (r.n, r.mean_p_minus)).collect();
    Ok(Fig3Result {
        fit: fit_cosine(&points).ok(),
        rows,
    })
}

impl Fig3Result {
    pub fn points_within_4_sigma(&self) -> usize {
        self.rows.iter().filter(|r| r.within_4_sigma).count()
    }

    pub fn report(&self) -> RunReport {
        let mut table = Table::new(&[
            "n",
            "mean_p_minus",
            "rmse_p_minus",
            "predicted_p_minus",
            "sigma_of_mean",
            "within_4_sigma",
            "true_area",
        ]);
        for r in &self.rows {
            table.push(vec![
                r.n.into(),
                r.mean_p_minus.into(),
                r.rmse_p_minus.into(),
                r.predicted_p_minus.into(),
                r.sigma_of_mean.into(),
                r.within_4_sigma.into(),
                r.true_area.into(),
            ]);
        }
        let mut fits = BTreeMap::new();
        if let Some(f) = &self.fit {
            fits.insert("cosine".to_string(), f.clone());
        }
        let summary = BTreeMap::from([(
            "points_within_4_sigma".to_string(),
            self.points_within_4_sigma() as f64,
        )]);
        RunReport {
            mode: Mode::Fig3,
            table,
            fits,
            summary,
            passed: true,
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct Fig4Row {
    pub n: u32,
    pub true_area: f64,
    /// RMSE about the true area.
    pub rmse: f64,
    /// RMS spread about the mean estimate.
    pub rmse_about_mean: f64,
    pub mean_estimate: f64,
    pub saturated: usize,
    pub trials: usize,
    /// `1/(√(η^N ν) N²)`.
    pub crb_switch: f64,
    pub crb_fixed_order: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig4Result {
    pub curve: ScalingCurve,
    pub rows: Vec<Fig4Row>,
    /// `1/(cN²)` and free-exponent fits of the RMSE curve.
    pub fit: Option<FitResult>,
}

/// RMSE of the SWITCH estimate of `A` versus `N`.
pub fn run_fig4(config: &ExperimentConfig) -> Result<Fig4Result> {
    let config = &ExperimentConfig {
        mode: Some(Mode::Fig4),
        ..config.clone()
    };
    config.validate()?;
    let values = config.n_values()?;
    let eta = config.eta()?;
    let hardware = Hardware::from_config(config, max_n(&values))?;
    let b = &config.baseline;

    let mut rows = Vec::with_capacity(values.len());
    for &n in &values {
        let trials = switch_trials(
            &hardware,
            config,
            n,
            eta,
            config.trials,
            &[Mode::Fig4.tag()],
        )?;
        let (estimates, errors, saturated) = area_errors(&trials, n, config.phi0)?;
        let mean_estimate = estimation::mean(&estimates)?;
        let survival = eta.powi(n as i32);
        rows.push(Fig4Row {
            n,
            true_area: estimation::mean(&trials.iter().map(|t| t.true_area).collect::<Vec<_>>())?,
            rmse: rms(&errors)?,
            rmse_about_mean: estimation::rmse(&estimates, mean_estimate)?,
            mean_estimate,
            saturated,
            trials: trials.len(),
            crb_switch: crb_switch(config.nu, n) / survival.sqrt(),
            crb_fixed_order: crb_fixed_order(b.x_mean, b.p_mean, config.nu, n),
        });
    }
    let curve = ScalingCurve {
        points: rows
            .iter()
            .map(|r| ScalingPoint {
                n: r.n,
                rmse: r.rmse,
                mean_estimate: r.mean_estimate,
                trials: r.trials,
            })
            .collect(),
    };
    Ok(Fig4Result {
        fit: fit_if_possible(&curve.rmse_points()),
        curve,
        rows,
    })
}

impl Fig4Result {
    pub fn report(&self) -> RunReport {
        let mut table = Table::new(&[
            "n",
            "true_area",
            "rmse",
            "rmse_about_mean",
            "mean_estimate",
            "saturated",
            "trials",
            "crb_switch",
            "crb_fixed_order",
            "fit_one_over_c_n2",
        ]);
        let c = self.fit.as_ref().map(|f| f.value("c"));
        for r in &self.rows {
            let fitted = c.map_or(f64::NAN, |c| 1.0 / (c * f64::from(r.n).powi(2)));
            table.push(vec![
                r.n.into(),
                r.true_area.into(),
                r.rmse.into(),
                r.rmse_about_mean.into(),
                r.mean_estimate.into(),
                r.saturated.into(),
                r.trials.into(),
                r.crb_switch.into(),
                r.crb_fixed_order.into(),
                fitted.into(),
            ]);
        }
        let mut fits = BTreeMap::new();
        if let Some(f) = &self.fit {
            fits.insert("scaling".to_string(), f.clone());
        }
        RunReport {
            mode: Mode::Fig4,
            table,
            fits,
            summary: BTreeMap::new(),
            passed: true,
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fig5Variant {
    /// Both groups of size `N`: phase quadratic in `N`.
    Paired,
    /// One momentum kick against `N_x` position shifts: phase linear in `N_x`.
    SingleKick,
}

impl Fig5Variant {
    fn mode(self) -> Mode {
        match self {
            Fig5Variant::Paired => Mode::Fig5a,
            Fig5Variant::SingleKick => Mode::Fig5b,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig5Row {
    /// `N` (paired) or `N_x` (single kick).
    pub count: u32,
    pub total_phase_true: f64,
    /// Mean of the per-trial ML phase estimates.
    pub total_phase: f64,
    pub phase_rmse: f64,
    /// Value of the fitted model at `count`.
    pub fit_line: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig5Result {
    pub variant: Fig5Variant,
    pub rows: Vec<Fig5Row>,
    /// Quadratic fit (`area`, `phi0`) for the paired variant, straight line
    /// (`slope`, `intercept`) for the single-kick variant.
    pub fit: FitResult,
    /// Power-law fit of `Φ − φ₀` against the count, for counts ≥ 1.
    pub growth: Option<FitResult>,
}

/// Loop phase of a single kick against `n_x` shifts (unequal lengths).
fn single_kick_phase(r: &RealizedDisplacements, n_x: usize, phi0: f64) -> Result<f64> {
    if n_x == 0 {
        return Ok(phi0);
    }
    let kick = momentum_sequence(&r.ps[..1])?;
    let shifts = position_sequence(&r.xs[..n_x])?;
    switch_output_phase(&kick, &shifts, phi0)
}

/// Total SWITCH phase versus the number of displacements, estimated from
/// simulated counts.
pub fn run_fig5(config: &ExperimentConfig, variant: Fig5Variant) -> Result<Fig5Result> {
    let mode = variant.mode();
    let config = &ExperimentConfig {
        mode: Some(mode),
        ..config.clone()
    };
    config.validate()?;
    let values = config.n_values()?;
    let eta = config.eta()?;
    let hardware = Hardware::from_config(config, max_n(&values))?;

    let mut rows = Vec::with_capacity(values.len());
    for &count in &values {
        let outcomes: Vec<Result<(f64, f64)>> = par_map(config.trials, |t| {
            let true_phase = match variant {
                Fig5Variant::Paired => {
                    let r = if count >= 1 {
                        Some(hardware.realized(count as usize, t)?)
                    } else {
                        None
                    };
                    switch_phase(r.as_ref(), config.phi0)?
                }
                Fig5Variant::SingleKick => {
                    let r = hardware.realized((count as usize).max(1), t)?;
                    single_kick_phase(&r, count as usize, config.phi0)?
                }
            };
            let mut rng = rng_for(config.seed, &[mode.tag(), u64::from(count), t as u64]);
            let survival = eta.powi(count as i32);
            let counts = sample_counts_for_phase(config.nu, survival, true_phase, &mut rng);
            let est = mle_total_phase(counts.k_minus, counts.effective_shots())?;
            Ok((true_phase, est.value))
        });
        let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let truth: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
        let errors: Vec<f64> = outcomes.iter().map(|o| o.1 - o.0).collect();
        let estimates: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
        rows.push(Fig5Row {
            count,
            total_phase_true: estimation::mean(&truth)?,
            total_phase: estimation::mean(&estimates)?,
            phase_rmse: rms(&errors)?,
            fit_line: f64::NAN,
        });
    }

    let fit = match variant {
        Fig5Variant::Paired => fit_quadratic_phase(
            &rows
                .iter()
                .map(|r| (r.count, r.total_phase))
                .collect::<Vec<_>>(),
        )?,
        Fig5Variant::SingleKick => fit_line(
            &rows
                .iter()
                .map(|r| (f64::from(r.count), r.total_phase))
                .collect::<Vec<_>>(),
        )?,
    };
    for r in &mut rows {
        let x = f64::from(r.count);
        r.fit_line = match variant {
            Fig5Variant::Paired => fit.value("area") * x * x + fit.value("phi0"),
            Fig5Variant::SingleKick => fit.value("slope") * x + fit.value("intercept"),
        };
    }
    let growth_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.count >= 1)
        .map(|r| (f64::from(r.count), r.total_phase - config.phi0))
        .collect();
    let growth = fit_power_law(&growth_points).ok();
    Ok(Fig5Result {
        variant,
        rows,
        fit,
        growth,
    })
}

impl Fig5Result {
    pub fn report(&self) -> RunReport {
        let mut table = Table::new(&[
            "count",
            "total_phase_true",
            "total_phase",
            "phase_rmse",
            "fit_line",
        ]);
        for r in &self.rows {
            table.push(vec![
                r.count.into(),
                r.total_phase_true.into(),
                r.total_phase.into(),
                r.phase_rmse.into(),
                r.fit_line.into(),
            ]);
        }
        let mut fits = BTreeMap::from([("phase".to_string(), self.fit.clone())]);
        if let Some(g) = &self.growth {
            fits.insert("growth".to_string(), g.clone());
        }
        RunReport {
            mode: self.variant.mode(),
            table,
            fits,
            summary: BTreeMap::new(),
            passed: true,
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineRow {
    pub n: u32,
    pub switch_rmse: f64,
    pub baseline_rmse: f64,
    pub crb_switch: f64,
    pub crb_fixed_order: f64,
    /// `baseline_rmse / switch_rmse`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineResult {
    pub rows: Vec<BaselineRow>,
    pub switch_fit: Option<FitResult>,
    pub baseline_fit: Option<FitResult>,
}

/// SWITCH versus the fixed-order homodyne strategy at equal `ν`, both
/// probing displacements with means `(x̄′, p̄′)` from the baseline config.
pub fn run_baseline(config: &ExperimentConfig) -> Result<BaselineResult> {
    let config = &ExperimentConfig {
        mode: Some(Mode::Baseline),
        ..config.clone()
    };
    config.validate()?;
    let values = config.n_values()?;
    let eta = config.eta()?;
    let b = config.baseline;
    let hardware = Hardware::Fixed {
        x: b.x_mean,
        p: b.p_mean,
    };
    let true_area = b.x_mean * b.p_mean;
    let options = BaselineOptions {
        budget: b.budget,
        ..Default::default()
    };

    let mut rows = Vec::with_capacity(values.len());
    for &n in &values {
        let trials = switch_trials(
            &hardware,
            config,
            n,
            eta,
            config.repetitions,
            &[Mode::Baseline.tag()],
        )?;
        let (_, errors, _) = area_errors(&trials, n, config.phi0)?;
        let switch_rmse = rms(&errors)?;

        let xs = vec![b.x_mean; n as usize];
        let ps = vec![b.p_mean; n as usize];
        let estimates = par_map(config.repetitions, |t| {
            let mut rng = rng_for(
                config.seed,
                &[Mode::Baseline.tag(), HOMODYNE_TAG, u64::from(n), t as u64],
            );
            estimation::fixed_order_baseline_with(&xs, &ps, config.nu, &options, &mut rng)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let baseline_rmse = estimation::rmse(&estimates, true_area)?;
        rows.push(BaselineRow {
            n,
            switch_rmse,
            baseline_rmse,
            crb_switch: crb_switch(config.nu, n),
            crb_fixed_order: crb_fixed_order(b.x_mean, b.p_mean, config.nu, n),
            ratio: baseline_rmse / switch_rmse,
        });
    }
    let switch_points: Vec<(u32, f64)> = rows.iter().map(|r| (r.n, r.switch_rmse)).collect();
    let baseline_points: Vec<(u32, f64)> = rows.iter().map(|r| (r.n, r.baseline_rmse)).collect();
    Ok(BaselineResult {
        switch_fit: fit_if_possible(&switch_points),
        baseline_fit: fit_if_possible(&baseline_points),
        rows,
    })
}

impl BaselineResult {
    pub fn report(&self) -> RunReport {
        let mut table = Table::new(&[
            "n",
            "switch_rmse",
            "baseline_rmse",
            "crb_switch",
            "crb_fixed_order",
            "ratio",
        ]);
        for r in &self.rows {
            table.push(vec![
                r.n.into(),
                r.switch_rmse.into(),
                r.baseline_rmse.into(),
                r.crb_switch.into(),
                r.crb_fixed_order.into(),
                r.ratio.into(),
            ]);
        }
        let mut fits = BTreeMap::new();
        if let Some(f) = &self.switch_fit {
            fits.insert("switch_scaling".to_string(), f.clone());
        }
        if let Some(f) = &self.baseline_fit {
            fits.insert("baseline_scaling".to_string(), f.clone());
        }
        RunReport {
            mode: Mode::Baseline,
            table,
            fits,
            summary: BTreeMap::new(),
            passed: true,
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct LossRow {
    pub n: u32,
    pub eta: f64,
    /// `η^N`.
    pub survival: f64,
    pub area: f64,
    pub rmse_lossy: f64,
    pub rmse_lossless: f64,
    /// `rmse_lossy · √(η^N)`.
    pub rmse_scaled: f64,
    /// `1/(√(η^N ν) N²)`.
    pub crb_lossy: f64,
    pub mean_effective_shots: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossSweepResult {
    pub rows: Vec<LossRow>,
}

/// Area used by the loss sweep at size `n`: it puts the fringe at
/// `Φ = π/2`, the point of maximal slope, so large `N` stay identifiable.
pub fn loss_sweep_area(n: u32, phi0: f64) -> f64 {
    (FRAC_PI_2 - phi0) / f64::from(n).powi(2)
}

/// RMSE with and without photon loss.
pub fn run_loss_sweep(config: &ExperimentConfig) -> Result<LossSweepResult> {
    let config = &ExperimentConfig {
        mode: Some(Mode::LossSweep),
        ..config.clone()
    };
    config.validate()?;
    let eta = config.eta()?;
    let mut rows = Vec::new();
    for n in config.n_values()? {
        let area = loss_sweep_area(n, config.phi0);
        let side = area.abs().sqrt();
        let hardware = Hardware::Fixed {
            x: side.copysign(area),
            p: side,
        };
        let tag = Mode::LossSweep.tag();
        let lossy = switch_trials(&hardware, config, n, eta, config.trials, &[tag])?;
        let lossless = switch_trials(
            &hardware,
            config,
            n,
            1.0,
            config.trials,
            &[tag, LOSSLESS_TAG],
        )?;
        let rmse_lossy = rms(&area_errors(&lossy, n, config.phi0)?.1)?;
        let rmse_lossless = rms(&area_errors(&lossless, n, config.phi0)?.1)?;
        let survival = eta.powi(n as i32);
        let shots: Vec<f64> = lossy
            .iter()
            .map(|t| t.counts.effective_shots() as f64)
            .collect();
        rows.push(LossRow {
            n,
            eta,
            survival,
            area,
            rmse_lossy,
            rmse_lossless,
            rmse_scaled: rmse_lossy * survival.sqrt(),
            crb_lossy: crb_switch(config.nu, n) / survival.sqrt(),
            mean_effective_shots: estimation::mean(&shots)?,
        });
    }
    Ok(LossSweepResult { rows })
}

impl LossSweepResult {
    pub fn report(&self) -> RunReport {
        let mut table = Table::new(&[
            "n",
            "eta",
            "survival",
            "area",
            "rmse_lossy",
            "rmse_lossless",
            "rmse_scaled",
            "crb_lossy",
            "mean_effective_shots",
        ]);
        for r in &self.rows {
            table.push(vec![
                r.n.into(),
                r.eta.into(),
                r.survival.into(),
                r.area.into(),
                r.rmse_lossy.into(),
                r.rmse_lossless.into(),
                r.rmse_scaled.into(),
                r.crb_lossy.into(),
                r.mean_effective_shots.into(),
            ]);
        }
        RunReport {
            mode: Mode::LossSweep,
            table,
            fits: BTreeMap::new(),
            summary: BTreeMap::new(),
            passed: true,
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub index: usize,
    pub n: usize,
    pub closed_form: f64,
    /// NaN when truncation made the oracle refuse.
    pub oracle_phase: f64,
    pub deviation: f64,
    pub retention: f64,
    pub cutoff_used: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub rows: Vec<OracleRow>,
    pub max_deviation: f64,
    pub min_retention: f64,
    pub passed: bool,
}

fn random_sequence<R: Rng>(
    n: usize,
    max_amplitude: f64,
    rng: &mut R,
) -> Result<DisplacementSequence> {
    DisplacementSequence::from_amplitudes((0..n).map(|_| {
        let r = max_amplitude * rng.random::<f64>().sqrt();
        C64::from_polar(r, 2.0 * PI * rng.random::<f64>())
    }))
}

/// Compare closed-form loop phases with the truncated Fock oracle on
/// random sequence pairs.
pub fn run_oracle_check(config: &ExperimentConfig) -> Result<OracleResult> {
    let config = &ExperimentConfig {
        mode: Some(Mode::OracleCheck),
        ..config.clone()
    };
    config.validate()?;
    let o = config.oracle;
    let rows = par_map(o.samples, |i| -> Result<OracleRow> {
        let mut rng = rng_for(config.seed, &[Mode::OracleCheck.tag(), i as u64]);
        let n = rng.random_range(1..=o.max_n);
        let a = random_sequence(n, o.max_amplitude, &mut rng)?;
        let b = random_sequence(n, o.max_amplitude, &mut rng)?;
        let closed_form = commutator_loop_phase(&a, &b)?;
        let verdict = if o.auto_cutoff {
            fock_oracle::sequence_phase_oracle_adaptive(&a, &b, o.cutoff)
        } else {
            fock_oracle::sequence_phase_oracle(&a, &b, o.cutoff)
        };
        Ok(match verdict {
            Ok(v) => OracleRow {
                index: i,
                n,
                closed_form,
                oracle_phase: v.phase,
                deviation: phase_distance(v.phase, closed_form),
                retention: v.amplitude_retention,
                cutoff_used: v.cutoff_used,
            },
            Err(Error::Truncation { retention, cutoff }) => OracleRow {
                index: i,
                n,
                closed_form,
                oracle_phase: f64::NAN,
                deviation: f64::NAN,
                retention,
                cutoff_used: cutoff,
            },
            Err(e) => return Err(e),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let max_deviation =
        rows.iter().map(|r| r.deviation).fold(
            0.0,
            |m: f64, d| if d.is_nan() { f64::NAN } else { m.max(d) },
        );
    let min_retention = rows
        .iter()
        .map(|r| r.retention)
        .fold(f64::INFINITY, f64::min);
    let passed = max_deviation < ORACLE_PHASE_TOLERANCE && min_retention >= TRUSTED_RETENTION;
    Ok(OracleResult {
        rows,
        max_deviation,
        min_retention,
        passed,
    })
}

impl OracleResult {
    pub fn report(&self) -> RunReport {
        let mut table = Table::new(&[
            "index",
            "n",
            "closed_form",
            "oracle_phase",
            "deviation",
            "retention",
            "cutoff_used",
        ]);
        for r in &self.rows {
            table.push(vec![
                r.index.into(),
                r.n.into(),
                r.closed_form.into(),
                r.oracle_phase.into(),
                r.deviation.into(),
                r.retention.into(),
                r.cutoff_used.into(),
            ]);
        }
        let summary = BTreeMap::from([
            ("max_deviation".to_string(), self.max_deviation),
            ("min_retention".to_string(), self.min_retention),
            ("phase_tolerance".to_string(), ORACLE_PHASE_TOLERANCE),
            ("retention_threshold".to_string(), TRUSTED_RETENTION),
        ]);
        RunReport {
            mode: Mode::OracleCheck,
            table,
            fits: BTreeMap::new(),
            summary,
            passed: self.passed,
        }
    }
}

/// Run whichever mode `config` selects.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    Ok(match config.mode()? {
        Mode::Fig3 => run_fig3(config)?.report(),
        Mode::Fig4 => run_fig4(config)?.report(),
        Mode::Fig5a => run_fig5(config, Fig5Variant::Paired)?.report(),
        Mode::Fig5b => run_fig5(config, Fig5Variant::SingleKick)?.report(),
        Mode::Baseline => run_baseline(config)?.report(),
        Mode::LossSweep => run_loss_sweep(config)?.report(),
        Mode::OracleCheck => run_oracle_check(config)?.report(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quick(mode: Mode) -> ExperimentConfig {
        ExperimentConfig {
            trials: 10,
            repetitions: 50,
            ..ExperimentConfig::for_mode(mode)
        }
    }

    #[test]
    fn fig3_predictions() {
        let cfg = ExperimentConfig {
            area: Some(0.042),
            ..quick(Mode::Fig3)
        };
        let r = run_fig3(&cfg).unwrap();
        assert_eq!(r.rows.len(), 9);
        assert_abs_diff_eq!(r.rows[0].predicted_p_minus, 0.02338, epsilon = 1e-5);
        assert_abs_diff_eq!(r.rows[8].predicted_p_minus, 0.9946, epsilon = 1e-4);
        assert!(r.rows[0].true_area.is_nan());
    }

    #[test]
    fn static_hardware_shares_plates_across_n() {
        let cfg = quick(Mode::Fig4);
        let hw = Hardware::from_config(&cfg, 8).unwrap();
        let full = hw.realized(8, 0).unwrap();
        let part = hw.realized(3, 5).unwrap();
        assert_eq!(&full.xs[..3], &part.xs[..]);
        let redraw = ExperimentConfig {
            redraw_per_trial: true,
            ..cfg
        };
        let hw = Hardware::from_config(&redraw, 8).unwrap();
        assert_ne!(hw.realized(3, 0).unwrap(), hw.realized(3, 1).unwrap());
        assert_eq!(hw.realized(3, 1).unwrap(), hw.realized(3, 1).unwrap());
    }

    #[test]
    fn fig4_bound_columns() {
        let r = run_fig4(&quick(Mode::Fig4)).unwrap();
        let last = r.rows.last().unwrap();
        assert_eq!(last.n, 8);
        assert_abs_diff_eq!(last.crb_switch, 4.941e-4, epsilon = 1e-7);
        assert_abs_diff_eq!(last.crb_fixed_order, 8.10e-4, epsilon = 1e-6);
        assert!(r.rows.iter().all(|row| row.rmse >= 0.0));
    }

    #[test]
    fn fig5_single_kick_starts_at_offset() {
        let cfg = ExperimentConfig {
            area: Some(0.042),
            ..quick(Mode::Fig5b)
        };
        let r = run_fig5(&cfg, Fig5Variant::SingleKick).unwrap();
        assert_eq!(r.rows[0].count, 0);
        assert_eq!(r.rows[0].total_phase_true, 0.307);
        assert_abs_diff_eq!(
            r.rows[8].total_phase_true,
            8.0 * 0.042 + 0.307,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fig5_paired_reaches_quadratic_phase() {
        let cfg = ExperimentConfig {
            area: Some(0.042),
            ..quick(Mode::Fig5a)
        };
        let r = run_fig5(&cfg, Fig5Variant::Paired).unwrap();
        assert_abs_diff_eq!(r.rows[8].total_phase_true, 2.995, epsilon = 1e-12);
    }

    #[test]
    fn oracle_zero_amplitudes_are_exact() {
        let mut cfg = quick(Mode::OracleCheck);
        cfg.oracle.samples = 5;
        cfg.oracle.max_amplitude = 0.0;
        let r = run_oracle_check(&cfg).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn oracle_truncation_fails_check() {
        let mut cfg = quick(Mode::OracleCheck);
        cfg.oracle.samples = 10;
        cfg.oracle.cutoff = 8;
        cfg.oracle.max_amplitude = 0.5;
        let r = run_oracle_check(&cfg).unwrap();
        assert!(!r.passed);
        assert!(r.min_retention < TRUSTED_RETENTION);
    }

    #[test]
    fn loss_sweep_area_sits_mid_fringe() {
        for n in [10, 50, 100] {
            let a = loss_sweep_area(n, 0.307);
            assert_abs_diff_eq!(f64::from(n * n) * a + 0.307, FRAC_PI_2, epsilon = 1e-12);
        }
    }
}
