//! Measurement model of the photonic quantum SWITCH.
//!
//! The control qubit ends in `(|H⟩ + e^{iΦ}|V⟩)/√2` with
//! `Φ = N² A + φ₀`; measuring it in the `|±⟩` basis gives
//! `P± = ½(1 ± cos Φ)`. Each detected photon is one shot; photon loss
//! removes shots with survival probability `η^N`.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_algebra::{
    self, commutator_loop_phase, compose_sequence, DisplacementSequence, PhasedDisplacement,
};

/// Optical parameters of the displacement hardware, in SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Reference transverse shift of one birefringent plate, metres.
    pub x_ref: f64,
    /// Effective deflection angle of one wedge pair, radians.
    pub theta_eff: f64,
    /// Signal wavelength, metres.
    pub wavelength: f64,
    /// Intensity standard deviation of the transverse mode, metres.
    pub sigma_x: f64,
    /// Relative spread of each element around its reference value.
    pub fluctuation: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            x_ref: 18.6e-6,
            theta_eff: 2.8e-4,
            // 390 nm pump, degenerate down-conversion
            wavelength: 780e-9,
            sigma_x: 989.9e-6,
            fluctuation: 0.05,
        }
    }
}

impl PhysicalParams {
    /// Momentum-space intensity spread, `1/(2σ_x)`.
    pub fn sigma_p(&self) -> f64 {
        1.0 / (2.0 * self.sigma_x)
    }

    /// Transverse wave-vector kick of one wedge pair, `2πθ/λ` (1/m).
    pub fn p_ref(&self) -> f64 {
        2.0 * PI * self.theta_eff / self.wavelength
    }

    /// Dimensionless reference shift `x/(√2 σ_x)`.
    pub fn x_prime_ref(&self) -> f64 {
        self.x_ref / (SQRT_2 * self.sigma_x)
    }

    /// Dimensionless reference kick `p/(√2 σ_p)`.
    pub fn p_prime_ref(&self) -> f64 {
        self.p_ref() / (SQRT_2 * self.sigma_p())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("x_ref", self.x_ref),
            ("theta_eff", self.theta_eff),
            ("wavelength", self.wavelength),
            ("sigma_x", self.sigma_x),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.fluctuation) {
            return Err(Error::Config(format!(
                "fluctuation must lie in [0, 1), got {}",
                self.fluctuation
            )));
        }
        Ok(())
    }
}

/// Parameters of one simulated SWITCH experiment at fixed `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchConfig {
    /// Displacements per group.
    pub n: u32,
    pub phi0: f64,
    /// Photons sent per trial.
    pub nu: u64,
    /// Survival probability per displacement pair.
    pub eta_per_pair: f64,
    pub seed: u64,
}

impl SwitchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::domain("N must be at least 1"));
        }
        if self.nu < 1 {
            return Err(Error::domain("nu must be at least 1"));
        }
        if !(self.eta_per_pair > 0.0 && self.eta_per_pair <= 1.0) {
            return Err(Error::domain(format!(
                "eta must lie in (0, 1], got {}",
                self.eta_per_pair
            )));
        }
        if !self.phi0.is_finite() {
            return Err(Error::domain("phi0 must be finite"));
        }
        Ok(())
    }

    /// Probability that a photon survives all `N` pairs.
    pub fn survival(&self) -> f64 {
        self.eta_per_pair.powi(self.n as i32)
    }
}

/// Dimensionless displacements actually produced by the hardware.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizedDisplacements {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// `mean(xs) · mean(ps)`.
    pub area: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl RealizedDisplacements {
    pub fn new(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ps.len() {
            return Err(Error::domain("need equal nonempty x and p lists"));
        }
        let area = mean(&xs) * mean(&ps);
        Ok(RealizedDisplacements { xs, ps, area })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// The first `n` elements, i.e. the experiment that uses only `n`
    /// plates and wedges.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n < 1 || n > self.len() {
            return Err(Error::domain(format!(
                "prefix {n} outside 1..={}",
                self.len()
            )));
        }
        Self::new(self.xs[..n].to_vec(), self.ps[..n].to_vec())
    }

    pub fn x_mean(&self) -> f64 {
        mean(&self.xs)
    }

    pub fn p_mean(&self) -> f64 {
        mean(&self.ps)
    }

    /// The momentum group and the position group as displacement
    /// sequences, ordered so that their loop phase is `+N² x̄ p̄`.
    pub fn sequences(&self) -> Result<(DisplacementSequence, DisplacementSequence)> {
        Ok((
            phase_algebra::momentum_sequence(&self.ps)?,
            phase_algebra::position_sequence(&self.xs)?,
        ))
    }
}

/// Draw the dimensionless displacements of `n` elements, each off its
/// reference value by an independent uniform relative error in
/// `[−fluctuation, +fluctuation]`.
pub fn realize_displacements<R: Rng + ?Sized>(
    params: &PhysicalParams,
    n: usize,
    rng: &mut R,
) -> Result<RealizedDisplacements> {
    if n < 1 {
        return Err(Error::domain("N must be at least 1"));
    }
    params.validate()?;
    let f = params.fluctuation;
    let jitter = |rng: &mut R| {
        if f > 0.0 {
            rng.random_range(-f..=f)
        } else {
            0.0
        }
    };
    let x0 = params.x_prime_ref();
    let p0 = params.p_prime_ref();
    let xs: Vec<f64> = (0..n).map(|_| x0 * (1.0 + jitter(rng))).collect();
    let ps: Vec<f64> = (0..n).map(|_| p0 * (1.0 + jitter(rng))).collect();
    RealizedDisplacements::new(xs, ps)
}

/// Outcome probabilities of the control measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeProbabilities {
    pub plus: f64,
    pub minus: f64,
}

/// `P± = ½(1 ± cos Φ)` for a total phase `Φ`.
pub fn probabilities_for_phase(total_phase: f64) -> FringeProbabilities {
    let minus = 0.5 * (1.0 - total_phase.cos());
    FringeProbabilities {
        plus: 1.0 - minus,
        minus,
    }
}

/// `P± = ½(1 ± cos(N²A + φ₀))`. `N = 0` gives the bare control fringe.
pub fn outcome_probabilities(area: f64, n: u32, phi0: f64) -> FringeProbabilities {
    let n2 = f64::from(n) * f64::from(n);
    probabilities_for_phase(n2 * area + phi0)
}

/// What the SWITCH does to control and target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchOutput {
    /// Unwrapped phase of `|V⟩` relative to `|H⟩`: loop phase plus `φ₀`.
    pub relative_phase: f64,
    /// `D_B D_A` applied to the target in both branches; it does not enter
    /// the control statistics.
    pub common_displacement: PhasedDisplacement,
}

pub fn switch_output(
    seq_a: &DisplacementSequence,
    seq_b: &DisplacementSequence,
    phi0: f64,
) -> Result<SwitchOutput> {
    let relative_phase = commutator_loop_phase(seq_a, seq_b)? + phi0;
    Ok(SwitchOutput {
        relative_phase,
        common_displacement: compose_sequence(&seq_a.then(seq_b)),
    })
}

/// Relative phase between the two SWITCH branches for arbitrary groups.
pub fn switch_output_phase(
    seq_a: &DisplacementSequence,
    seq_b: &DisplacementSequence,
    phi0: f64,
) -> Result<f64> {
    Ok(switch_output(seq_a, seq_b, phi0)?.relative_phase)
}

/// Detector tallies of one trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CountRecord {
    pub k_minus: u64,
    pub k_plus: u64,
    pub lost: u64,
}

impl CountRecord {
    pub fn effective_shots(&self) -> u64 {
        self.k_minus + self.k_plus
    }

    pub fn total(&self) -> u64 {
        self.k_minus + self.k_plus + self.lost
    }

    /// Observed fraction of `−` outcomes among detected photons.
    pub fn p_minus(&self) -> Option<f64> {
        match self.effective_shots() {
            0 => None,
            s => Some(self.k_minus as f64 / s as f64),
        }
    }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p)
            .expect("probability checked")
            .sample(rng)
    }
}

/// Send `nu` photons through a SWITCH with total phase `total_phase`;
/// each survives with probability `survival`.
pub fn sample_counts_for_phase<R: Rng + ?Sized>(
    nu: u64,
    survival: f64,
    total_phase: f64,
    rng: &mut R,
) -> CountRecord {
    let detected = binomial(nu, survival, rng);
    let k_minus = binomial(detected, probabilities_for_phase(total_phase).minus, rng);
    CountRecord {
        k_minus,
        k_plus: detected - k_minus,
        lost: nu - detected,
    }
}

/// One trial of `config.nu` photons for true regularized area `area`.
pub fn sample_counts<R: Rng + ?Sized>(
    config: &SwitchConfig,
    area: f64,
    rng: &mut R,
) -> CountRecord {
    let n2 = f64::from(config.n).powi(2);
    sample_counts_for_phase(config.nu, config.survival(), n2 * area + config.phi0, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_algebra::{momentum_sequence, position_sequence};
    use crate::seed::rng_for;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64 as C64;

    #[test]
    fn sigma_product_is_half() {
        let p = PhysicalParams::default();
        assert_eq!(p.sigma_p() * p.sigma_x, 0.5);
    }

    #[test]
    fn default_parameters_give_reported_area() {
        let params = PhysicalParams {
            fluctuation: 0.0,
            ..PhysicalParams::default()
        };
        // (18.6 µm)(2π · 2.8e-4 / 780 nm) = 0.041953…
        let by_hand = 18.6e-6 * (2.0 * PI * 2.8e-4 / 780e-9);
        let r = realize_displacements(&params, 4, &mut rng_for(1, &[])).unwrap();
        assert_abs_diff_eq!(r.area, by_hand, epsilon = 1e-12);
        assert!((r.area - 0.042).abs() / 0.042 < 0.02);
        assert!(r.xs.iter().all(|&x| x == r.xs[0]));
        assert!(r.ps.iter().all(|&p| p == r.ps[0]));
    }

    #[test]
    fn fluctuations_are_zero_mean() {
        let params = PhysicalParams::default();
        let mut clean = params;
        clean.fluctuation = 0.0;
        let reference = clean.x_prime_ref() * clean.p_prime_ref();
        let mut rng = rng_for(11, &[]);
        let total: f64 = (0..10_000)
            .map(|_| realize_displacements(&params, 1, &mut rng).unwrap().area)
            .sum();
        let mean_area = total / 10_000.0;
        assert!(
            (mean_area / reference - 1.0).abs() < 0.005,
            "{mean_area} vs {reference}"
        );
    }

    #[test]
    fn realize_rejects_bad_input() {
        let mut rng = rng_for(0, &[]);
        assert!(realize_displacements(&PhysicalParams::default(), 0, &mut rng).is_err());
        let bad = PhysicalParams {
            fluctuation: 1.0,
            ..PhysicalParams::default()
        };
        assert!(realize_displacements(&bad, 3, &mut rng).is_err());
    }

    #[test]
    fn probability_examples() {
        let p = outcome_probabilities(0.042, 0, 0.307);
        assert_abs_diff_eq!(p.minus, 0.5 * (1.0 - 0.307f64.cos()), epsilon = 1e-15);
        assert_abs_diff_eq!(p.minus, 0.02338, epsilon = 1e-5);

        let p = outcome_probabilities(0.042, 8, 0.307);
        assert_abs_diff_eq!(p.minus, 0.99459, epsilon = 1e-4);

        for n in 0..10 {
            let p = outcome_probabilities(0.0, n, 0.0);
            assert_eq!((p.plus, p.minus), (1.0, 0.0));
        }
    }

    #[test]
    fn identical_groups_leave_offset() {
        let a = DisplacementSequence::from_amplitudes([C64::new(0.3, 0.1), C64::new(-0.2, 0.4)])
            .unwrap();
        assert_eq!(switch_output_phase(&a, &a, 0.307).unwrap(), 0.307);
    }

    #[test]
    fn xp_groups_reproduce_fringe_argument() {
        let xs = [0.21, 0.19, 0.2];
        let ps = [0.18, 0.22, 0.205];
        let r = RealizedDisplacements::new(xs.to_vec(), ps.to_vec()).unwrap();
        let phi0 = 0.307;
        let (p_seq, x_seq) = r.sequences().unwrap();
        let phase = switch_output_phase(&p_seq, &x_seq, phi0).unwrap();
        assert_abs_diff_eq!(phase, 9.0 * r.area + phi0, epsilon = 1e-14);

        let swapped = switch_output_phase(
            &position_sequence(&xs).unwrap(),
            &momentum_sequence(&ps).unwrap(),
            phi0,
        )
        .unwrap();
        assert_abs_diff_eq!((swapped - phi0).abs(), 9.0 * r.area, epsilon = 1e-14);
    }

    #[test]
    fn generic_groups_follow_closed_form() {
        let a = DisplacementSequence::from_amplitudes([C64::new(0.3, -0.1), C64::new(0.2, 0.25)])
            .unwrap();
        let b = DisplacementSequence::from_amplitudes([C64::new(-0.15, 0.4), C64::new(0.05, 0.3)])
            .unwrap();
        let closed = 2.0 * 4.0 * (a.mean().unwrap() * b.mean().unwrap().conj()).im + 0.5;
        let out = switch_output(&a, &b, 0.5).unwrap();
        assert_abs_diff_eq!(out.relative_phase, closed, epsilon = 1e-14);
        assert!((out.common_displacement.net - (a.sum() + b.sum())).norm() < 1e-15);
    }

    fn config(n: u32, nu: u64, eta: f64, seed: u64) -> SwitchConfig {
        SwitchConfig {
            n,
            phi0: 0.307,
            nu,
            eta_per_pair: eta,
            seed,
        }
    }

    #[test]
    fn lossless_pure_fringe() {
        let c = SwitchConfig {
            phi0: 0.0,
            ..config(3, 1000, 1.0, 5)
        };
        let r = sample_counts(&c, 0.0, &mut rng_for(5, &[]));
        assert_eq!(
            r,
            CountRecord {
                k_minus: 0,
                k_plus: 1000,
                lost: 0
            }
        );
    }

    #[test]
    fn counts_follow_binomial_statistics() {
        // E[k−] = 1000 · ½(1 − cos 0.979) ≈ 221.9, σ ≈ 13.1
        let expected = 1000.0 * 0.5 * (1.0 - (16.0f64 * 0.042 + 0.307).cos());
        let sigma = (expected * (1.0 - expected / 1000.0)).sqrt();
        for seed in 0..20 {
            let c = config(4, 1000, 1.0, seed);
            let r = sample_counts(&c, 0.042, &mut rng_for(seed, &[]));
            assert_eq!(r.lost, 0);
            assert!(
                (r.k_minus as f64 - expected).abs() < 4.0 * sigma,
                "seed {seed}: {r:?}"
            );
        }
    }

    #[test]
    fn loss_thins_shots() {
        let c = config(100, 1_000_000, 0.996, 3);
        let survival = c.survival();
        assert_abs_diff_eq!(survival * 1e6, 6.70e5, epsilon = 1e3);
        let r = sample_counts(&c, 1e-5, &mut rng_for(3, &[]));
        assert_eq!(r.total(), 1_000_000);
        let sigma = (1e6 * survival * (1.0 - survival)).sqrt();
        assert!((r.effective_shots() as f64 - 1e6 * survival).abs() < 5.0 * sigma);
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = config(5, 1000, 0.98, 77);
        let a = sample_counts(&c, 0.042, &mut rng_for(77, &[1]));
        let b = sample_counts(&c, 0.042, &mut rng_for(77, &[1]));
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(config(0, 10, 1.0, 0).validate().is_err());
        assert!(config(1, 0, 1.0, 0).validate().is_err());
        assert!(config(1, 10, 0.0, 0).validate().is_err());
        assert!(config(1, 10, 1.5, 0).validate().is_err());
        assert!(config(1, 10, 0.5, 0).validate().is_ok());
    }
}
