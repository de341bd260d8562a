//! Closed-form algebra of phase-space displacements.
//!
//! With `D(γ) = exp(γa† − γ*a)` two displacements compose as
//!
//! ```text
//! D(γ_later) D(γ_earlier) = D(γ_later + γ_earlier) · exp[i Im(γ_later γ_earlier*)]
//! ```
//!
//! so any finite sequence collapses to a single net displacement and a
//! scalar phase. Everything in this module is exact arithmetic on complex
//! numbers; the truncated-matrix cross-check lives in [`crate::fock_oracle`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Wrap an angle into `(−π, π]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let mut wrapped = phase.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped -= 2.0 * PI;
    }
    wrapped
}

/// Smallest distance between two angles on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// A single displacement `D(γ)` identified by its complex amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Displacement(C64);

impl Displacement {
    pub const ZERO: Displacement = Displacement(C64::new(0.0, 0.0));

    pub fn new(amplitude: C64) -> Result<Self> {
        if amplitude.re.is_finite() && amplitude.im.is_finite() {
            Ok(Displacement(amplitude))
        } else {
            Err(Error::domain(format!(
                "non-finite displacement amplitude {amplitude}"
            )))
        }
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(C64::new(re, im))
    }

    #[inline]
    pub fn amplitude(self) -> C64 {
        self.0
    }

    /// The inverse displacement `D(γ)† = D(−γ)`.
    pub fn inverse(self) -> Self {
        Displacement(-self.0)
    }
}

/// Ordered list of displacements, listed in application order (first
/// element acts first).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DisplacementSequence {
    items: Vec<Displacement>,
}

impl DisplacementSequence {
    pub fn new(items: Vec<Displacement>) -> Self {
        DisplacementSequence { items }
    }

    /// Build from raw amplitudes, rejecting non-finite entries.
    pub fn from_amplitudes<I>(amplitudes: I) -> Result<Self>
    where
        I: IntoIterator<Item = C64>,
    {
        amplitudes
            .into_iter()
            .map(Displacement::new)
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Displacement] {
        &self.items
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = C64> + ExactSizeIterator + '_ {
        self.items.iter().map(|d| d.amplitude())
    }

    pub fn sum(&self) -> C64 {
        self.iter().sum()
    }

    /// Mean amplitude, `None` for the empty sequence.
    pub fn mean(&self) -> Option<C64> {
        if self.is_empty() {
            None
        } else {
            Some(self.sum() / self.len() as f64)
        }
    }

    /// The sequence repeated `times` times back to back.
    pub fn repeated(&self, times: usize) -> Self {
        let mut items = Vec::with_capacity(self.len() * times);
        for _ in 0..times {
            items.extend_from_slice(&self.items);
        }
        Self::new(items)
    }

    /// `self` followed by `later`.
    pub fn then(&self, later: &DisplacementSequence) -> Self {
        let mut items = self.items.clone();
        items.extend_from_slice(&later.items);
        Self::new(items)
    }

    /// Inverse of the whole product: reversed order, negated amplitudes.
    pub fn inverse(&self) -> Self {
        Self::new(self.items.iter().rev().map(|d| d.inverse()).collect())
    }
}

impl FromIterator<Displacement> for DisplacementSequence {
    fn from_iter<T: IntoIterator<Item = Displacement>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Net displacement together with the scalar phase picked up on the way.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasedDisplacement {
    pub net: C64,
    /// Reported in `(−π, π]`.
    pub phase: f64,
}

impl PhasedDisplacement {
    pub const IDENTITY: PhasedDisplacement = PhasedDisplacement {
        net: C64::new(0.0, 0.0),
        phase: 0.0,
    };

    /// Apply `later` after `self`.
    pub fn then(self, later: PhasedDisplacement) -> PhasedDisplacement {
        let cross = (later.net * self.net.conj()).im;
        PhasedDisplacement {
            net: self.net + later.net,
            phase: wrap_phase(self.phase + later.phase + cross),
        }
    }
}

impl From<Displacement> for PhasedDisplacement {
    fn from(d: Displacement) -> Self {
        PhasedDisplacement {
            net: d.amplitude(),
            phase: 0.0,
        }
    }
}

/// Compose two displacements, `first` acting before `second`.
pub fn compose(first: Displacement, second: Displacement) -> PhasedDisplacement {
    PhasedDisplacement::from(first).then(second.into())
}

/// Net amplitude and unwrapped accumulated phase of a sequence of
/// amplitudes given in application order.
fn accumulate<I>(amplitudes: I) -> (C64, f64)
where
    I: IntoIterator<Item = C64>,
{
    amplitudes
        .into_iter()
        .fold((C64::new(0.0, 0.0), 0.0), |(partial, phase), gamma| {
            (partial + gamma, phase + (gamma * partial.conj()).im)
        })
}

/// Collapse a whole sequence into one phased displacement. The empty
/// sequence is the identity.
pub fn compose_sequence(seq: &DisplacementSequence) -> PhasedDisplacement {
    let (net, phase) = accumulate(seq.iter());
    PhasedDisplacement {
        net,
        phase: wrap_phase(phase),
    }
}

fn check_loop_inputs(seq_a: &DisplacementSequence, seq_b: &DisplacementSequence) -> Result<()> {
    if seq_a.is_empty() || seq_b.is_empty() {
        return Err(Error::domain(
            "commutator loop needs two nonempty sequences",
        ));
    }
    Ok(())
}

/// Phase of `U = D_A† D_B† D_A D_B`, where `D_A` is the ordered product of
/// `seq_a`. Closed form `2 Im[(Σα)(Σβ)*]`, returned unwrapped.
///
/// The sequences may have different lengths; with equal length `N` this is
/// `2N² Im(ᾱ β̄*)`.
pub fn commutator_loop_phase(
    seq_a: &DisplacementSequence,
    seq_b: &DisplacementSequence,
) -> Result<f64> {
    check_loop_inputs(seq_a, seq_b)?;
    Ok(2.0 * (seq_a.sum() * seq_b.sum().conj()).im)
}

/// The same loop phase obtained by folding the full `β…, α…, −β…, −α…`
/// sequence through the pairwise composition rule. Unwrapped.
pub fn loop_phase_by_fold(
    seq_a: &DisplacementSequence,
    seq_b: &DisplacementSequence,
) -> Result<f64> {
    check_loop_inputs(seq_a, seq_b)?;
    let (net, phase) = accumulate(
        seq_b
            .iter()
            .chain(seq_a.iter())
            .chain(seq_b.inverse().iter())
            .chain(seq_a.inverse().iter()),
    );
    debug_assert!(net.norm() <= 1e-9 * (1.0 + seq_a.sum().norm() + seq_b.sum().norm()));
    Ok(phase)
}

/// Signed area between a polygonal path and the vertical line through its
/// end point. The path starts at the origin and step `j` moves by `z_j`.
///
/// Every step sweeps `Im z_j` times the horizontal distance still to be
/// travelled, with the step's own run counted at half weight (trapezoid).
pub fn signed_path_area(path: &DisplacementSequence) -> f64 {
    let mut remaining_re = 0.0;
    let mut area = 0.0;
    for z in path.iter().rev() {
        area += z.im * (remaining_re + 0.5 * z.re);
        remaining_re += z.re;
    }
    area
}

/// Enclosed area, regularized area and loop phase of two equal-length
/// displacement groups.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopGeometry {
    pub enclosed_area: f64,
    /// `enclosed_area / N²`.
    pub regularized_area: f64,
    /// Unwrapped commutator phase; its magnitude is twice the enclosed area.
    pub loop_phase: f64,
}

/// Area enclosed between the paths "A then B" and "B then A".
pub fn enclosed_area(
    seq_a: &DisplacementSequence,
    seq_b: &DisplacementSequence,
) -> Result<LoopGeometry> {
    if seq_a.is_empty() || seq_a.len() != seq_b.len() {
        return Err(Error::domain(format!(
            "enclosed area needs equal nonzero lengths, got {} and {}",
            seq_a.len(),
            seq_b.len()
        )));
    }
    let n = seq_a.len() as f64;
    let enclosed =
        (signed_path_area(&seq_a.then(seq_b)) - signed_path_area(&seq_b.then(seq_a))).abs();
    Ok(LoopGeometry {
        enclosed_area: enclosed,
        regularized_area: enclosed / (n * n),
        loop_phase: commutator_loop_phase(seq_a, seq_b)?,
    })
}

/// Displacement amplitude for a shift `x` of `X = (a+a†)/√2` and a kick `p`
/// of `P = −i(a−a†)/√2`: `α = (x + ip)/√2`.
///
/// Under this convention `e^{−ixP} = D(x/√2)` and `e^{ipX} = D(ip/√2)`, so a
/// loop of `N` position shifts against `N` momentum kicks carries phase
/// `∓N² x̄ p̄`.
pub fn quadrature_to_amplitude(x: f64, p: f64) -> Result<Displacement> {
    Displacement::from_parts(x * FRAC_1_SQRT_2, p * FRAC_1_SQRT_2)
}

/// Position shifts `e^{−i x_j P}` as a displacement sequence.
pub fn position_sequence(xs: &[f64]) -> Result<DisplacementSequence> {
    xs.iter()
        .map(|&x| quadrature_to_amplitude(x, 0.0))
        .collect()
}

/// Momentum kicks `e^{i p_j X}` as a displacement sequence.
pub fn momentum_sequence(ps: &[f64]) -> Result<DisplacementSequence> {
    ps.iter()
        .map(|&p| quadrature_to_amplitude(0.0, p))
        .collect()
}
