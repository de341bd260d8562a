//! Brute-force check of the displacement algebra in a truncated Fock basis.
//!
//! Matrix elements of `D(α)` come from the associated-Laguerre closed form
//!
//! ```text
//! ⟨m|D(α)|n⟩ = √(n!/m!) α^(m−n) e^(−|α|²/2) L_n^(m−n)(|α|²)      m ≥ n
//! ⟨m|D(α)|n⟩ = √(m!/n!) (−α*)^(n−m) e^(−|α|²/2) L_m^(n−m)(|α|²)  m < n
//! ```
//!
//! evaluated along each diagonal with the three-term recurrence and
//! log-space prefactors, so nothing overflows up to cutoff 256. Loop phases
//! are then read off `⟨0|U|0⟩` after applying the `4N` matrices one by one.

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::phase_algebra::DisplacementSequence;

pub const DEFAULT_CUTOFF: usize = 64;
pub const MAX_CUTOFF: usize = 256;
/// Below this retention the oracle refuses to report a phase.
pub const MIN_RETENTION: f64 = 0.99;
/// Retention needed before a phase is trusted.
pub const TRUSTED_RETENTION: f64 = 0.999;

/// Truncated operator matrix in the number basis `|0⟩ … |cutoff−1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockMatrix {
    entries: Array2<C64>,
}

impl FockMatrix {
    pub fn identity(cutoff: usize) -> Self {
        FockMatrix {
            entries: Array2::eye(cutoff),
        }
    }

    pub fn cutoff(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[[row, col]]
    }

    pub fn apply(&self, state: &Array1<C64>) -> Array1<C64> {
        self.entries.dot(state)
    }

    pub fn matmul(&self, other: &FockMatrix) -> FockMatrix {
        FockMatrix {
            entries: self.entries.dot(&other.entries),
        }
    }
}

/// `|α|² ≤ cutoff/4`: the region where truncation is harmless.
pub fn within_soft_bound(alpha: C64, cutoff: usize) -> bool {
    alpha.norm_sqr() <= cutoff as f64 / 4.0
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Truncated matrix of `D(α) = exp(αa† − α*a)`.
pub fn displacement_matrix(alpha: C64, cutoff: usize) -> Result<FockMatrix> {
    if cutoff < 1 {
        return Err(Error::domain("Fock cutoff must be at least 1"));
    }
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::domain(format!("non-finite amplitude {alpha}")));
    }
    if alpha.norm_sqr() == 0.0 {
        return Ok(FockMatrix::identity(cutoff));
    }

    let x = alpha.norm_sqr();
    let ln_abs = alpha.norm().ln();
    let arg = alpha.arg();
    let ln_fact = ln_factorials(cutoff);
    let mut m = Array2::<C64>::zeros((cutoff, cutoff));

    for k in 0..cutoff {
        let kf = k as f64;
        let lower_phase = C64::from_polar(1.0, kf * arg);
        let upper_phase = if k % 2 == 0 {
            lower_phase.conj()
        } else {
            -lower_phase.conj()
        };

        let (mut l_prev, mut l_cur) = (0.0, 1.0);
        for n in 0..cutoff - k {
            let lag = match n {
                0 => 1.0,
                _ => {
                    let j = (n - 1) as f64;
                    let next = ((2.0 * j + 1.0 + kf - x) * l_cur - (j + kf) * l_prev) / (j + 1.0);
                    l_prev = l_cur;
                    l_cur = next;
                    next
                }
            };
            if lag == 0.0 {
                continue;
            }
            let ln_pref = 0.5 * (ln_fact[n] - ln_fact[n + k]) + kf * ln_abs - 0.5 * x;
            let mag = lag.signum() * (ln_pref + lag.abs().ln()).exp();
            m[[n + k, n]] = lower_phase * mag;
            if k > 0 {
                m[[n, n + k]] = upper_phase * mag;
            }
        }
    }
    Ok(FockMatrix { entries: m })
}

/// `‖M†M − I‖_max` over the leading `cutoff/2` block.
pub fn unitarity_defect(m: &FockMatrix) -> f64 {
    let half = (m.cutoff() / 2).max(1);
    let cols = m.entries.slice(s![.., ..half]);
    let gram = cols.t().mapv(|z| z.conj()).dot(&cols);
    gram.indexed_iter()
        .map(|((i, j), z)| {
            let target = if i == j { 1.0 } else { 0.0 };
            (z - target).norm()
        })
        .fold(0.0, f64::max)
}

/// Truncated quadratures `X = (a + a†)/√2` and `P = −i(a − a†)/√2`.
pub fn quadrature_operators(cutoff: usize) -> (FockMatrix, FockMatrix) {
    let mut a = Array2::<C64>::zeros((cutoff, cutoff));
    for n in 1..cutoff {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = a.t().mapv(|z| z.conj());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &a_dag).mapv(|z| z * s);
    let p = (&a - &a_dag).mapv(|z| z * C64::new(0.0, -s));
    (FockMatrix { entries: x }, FockMatrix { entries: p })
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
fn expm(generator: &Array2<C64>) -> Array2<C64> {
    let norm = generator
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = generator.mapv(|z| z / 2f64.powi(squarings));

    let dim = generator.nrows();
    let mut result = Array2::<C64>::eye(dim);
    let mut term = Array2::<C64>::eye(dim);
    for k in 1..=24 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// `e^{−ixP}` built by exponentiating the truncated momentum operator.
pub fn position_shift_matrix(x: f64, cutoff: usize) -> FockMatrix {
    let (_, p) = quadrature_operators(cutoff);
    FockMatrix {
        entries: expm(&p.entries.mapv(|z| z * C64::new(0.0, -x))),
    }
}

/// `e^{ipX}` built by exponentiating the truncated position operator.
pub fn momentum_kick_matrix(p: f64, cutoff: usize) -> FockMatrix {
    let (x, _) = quadrature_operators(cutoff);
    FockMatrix {
        entries: expm(&x.entries.mapv(|z| z * C64::new(0.0, p))),
    }
}

/// Result of one oracle evaluation of a commutator loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleVerdict {
    /// `arg ⟨ψ|U|ψ⟩`, in `(−π, π]`.
    pub phase: f64,
    /// `|⟨ψ|U|ψ⟩|`; drops below one when truncation leaks norm.
    pub amplitude_retention: f64,
    pub cutoff_used: usize,
}

impl OracleVerdict {
    pub fn is_trusted(&self) -> bool {
        self.amplitude_retention >= TRUSTED_RETENTION
    }
}

fn vacuum(cutoff: usize) -> Array1<C64> {
    let mut v = Array1::<C64>::zeros(cutoff);
    v[0] = C64::new(1.0, 0.0);
    v
}

/// Apply every displacement of `amplitudes` (application order) to `state`.
fn propagate<I>(state: Array1<C64>, amplitudes: I, cutoff: usize) -> Result<Array1<C64>>
where
    I: IntoIterator<Item = C64>,
{
    amplitudes.into_iter().try_fold(state, |v, gamma| {
        Ok(displacement_matrix(gamma, cutoff)?.apply(&v))
    })
}

/// `⟨μ|U|μ⟩` for `U = D_A† D_B† D_A D_B` and the coherent probe `|μ⟩ = D(μ)|0⟩`.
pub fn loop_overlap(
    seq_a: &DisplacementSequence,
    seq_b: &DisplacementSequence,
    cutoff: usize,
    probe: C64,
) -> Result<C64> {
    if seq_a.is_empty() || seq_b.is_empty() {
        return Err(Error::domain("oracle loop needs two nonempty sequences"));
    }
    let probe_state = displacement_matrix(probe, cutoff)?.apply(&vacuum(cutoff));
    let inv_a = seq_a.inverse();
    let inv_b = seq_b.inverse();
    let out = propagate(
        probe_state.clone(),
        seq_b
            .iter()
            .chain(seq_a.iter())
            .chain(inv_b.iter())
            .chain(inv_a.iter()),
        cutoff,
    )?;
    Ok(probe_state
        .iter()
        .zip(out.iter())
        .map(|(p, o)| p.conj() * o)
        .sum())
}

/// Loop phase of `(seq_a, seq_b)` read off the vacuum expectation value.
pub fn sequence_phase_oracle(
    seq_a: &DisplacementSequence,
    seq_b: &DisplacementSequence,
    cutoff: usize,
) -> Result<OracleVerdict> {
    if cutoff < 1 {
        return Err(Error::domain("Fock cutoff must be at least 1"));
    }
    let z = loop_overlap(seq_a, seq_b, cutoff, C64::new(0.0, 0.0))?;
    let retention = z.norm();
    if retention < MIN_RETENTION {
        return Err(Error::Truncation { retention, cutoff });
    }
    Ok(OracleVerdict {
        phase: z.arg(),
        amplitude_retention: retention,
        cutoff_used: cutoff,
    })
}

/// Like [`sequence_phase_oracle`] but doubles the cutoff from `start` up to
/// [`MAX_CUTOFF`] until the verdict is trusted.
pub fn sequence_phase_oracle_adaptive(
    seq_a: &DisplacementSequence,
    seq_b: &DisplacementSequence,
    start: usize,
) -> Result<OracleVerdict> {
    let mut cutoff = start.max(1);
    loop {
        let outcome = sequence_phase_oracle(seq_a, seq_b, cutoff);
        match outcome {
            Ok(v) if v.is_trusted() => return Ok(v),
            _ if cutoff >= MAX_CUTOFF => return outcome,
            _ => cutoff = (cutoff * 2).min(MAX_CUTOFF),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_algebra::{
        commutator_loop_phase, momentum_sequence, phase_distance, position_sequence,
    };
    use approx::assert_abs_diff_eq;

    fn seq(amps: &[C64]) -> DisplacementSequence {
        DisplacementSequence::from_amplitudes(amps.iter().copied()).unwrap()
    }

    /// Direct power-series evaluation of ⟨m|D(α)|n⟩ via the normally
    /// ordered form e^{−|α|²/2} e^{αa†} e^{−α*a}, independent of the
    /// Laguerre recurrence.
    fn element_by_series(alpha: C64, m: usize, n: usize) -> C64 {
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let mut total = C64::new(0.0, 0.0);
        for j in 0..=m.min(n) {
            // e^{−α*a} takes |n⟩ to |n−(n−j)⟩ = |j⟩, e^{αa†} lifts |j⟩ to |m⟩
            let down =
                (-alpha.conj()).powu((n - j) as u32) / fact(n - j) * (fact(n) / fact(j)).sqrt();
            let up = alpha.powu((m - j) as u32) / fact(m - j) * (fact(m) / fact(j)).sqrt();
            total += up * down;
        }
        total * (-alpha.norm_sqr() / 2.0).exp()
    }

    #[test]
    fn zero_amplitude_is_identity() {
        for cutoff in [1, 5, 64] {
            let m = displacement_matrix(C64::new(0.0, 0.0), cutoff).unwrap();
            assert_eq!(m, FockMatrix::identity(cutoff));
            assert_eq!(unitarity_defect(&m), 0.0);
        }
    }

    #[test]
    fn rejects_empty_basis() {
        assert!(displacement_matrix(C64::new(1.0, 0.0), 0).is_err());
        assert!(
            sequence_phase_oracle(&seq(&[C64::new(0.1, 0.0)]), &seq(&[C64::new(0.0, 0.1)]), 0)
                .is_err()
        );
    }

    #[test]
    fn vacuum_overlap() {
        let m = displacement_matrix(C64::new(1.0, 0.0), 32).unwrap();
        assert_abs_diff_eq!(m.get(0, 0).re, (-0.5f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(m.get(0, 0).im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn laguerre_elements_match_series() {
        let alpha = C64::new(0.7, -0.45);
        let m = displacement_matrix(alpha, 16).unwrap();
        for row in 0..12 {
            for col in 0..12 {
                let expected = element_by_series(alpha, row, col);
                assert!(
                    (m.get(row, col) - expected).norm() < 1e-12,
                    "({row},{col}): {} vs {expected}",
                    m.get(row, col)
                );
            }
        }
    }

    #[test]
    fn elements_finite_and_columns_bounded_at_max_cutoff() {
        let m = displacement_matrix(C64::new(3.0, 4.0), MAX_CUTOFF).unwrap();
        assert!(m
            .entries()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite()));
        for col in m.entries().columns() {
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(norm <= 1.0 + 1e-9, "column norm {norm}");
        }
    }

    #[test]
    fn leading_block_is_unitary() {
        let alpha = C64::new(0.3, 0.4);
        let m = displacement_matrix(alpha, 64).unwrap();
        let cols = m.entries().slice(s![.., ..16]);
        let gram = cols.t().mapv(|z| z.conj()).dot(&cols);
        let defect = gram
            .indexed_iter()
            .map(|((i, j), z)| (z - if i == j { 1.0 } else { 0.0 }).norm())
            .fold(0.0, f64::max);
        assert!(defect < 1e-8, "defect {defect}");

        // rows of the truncated matrix agree with a cutoff-128 build
        let big = displacement_matrix(alpha, 128).unwrap();
        for r in 0..64 {
            for c in 0..64 {
                assert!((m.get(r, c) - big.get(r, c)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn defect_shrinks_with_cutoff() {
        let alpha = C64::new(1.0, 0.0);
        let small = unitarity_defect(&displacement_matrix(alpha, 8).unwrap());
        let large = unitarity_defect(&displacement_matrix(alpha, 64).unwrap());
        assert!(small > large, "{small} vs {large}");
        let mut last = f64::INFINITY;
        for cutoff in [8, 16, 32, 64] {
            let d = unitarity_defect(&displacement_matrix(alpha, cutoff).unwrap());
            assert!(d <= last + 1e-15);
            last = d;
        }
    }

    #[test]
    fn identical_sequences_cancel() {
        let a = seq(&[C64::new(0.3, -0.2)]);
        let v = sequence_phase_oracle(&a, &a, 64).unwrap();
        assert_abs_diff_eq!(v.phase, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.amplitude_retention, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn two_step_loop() {
        let a = seq(&[C64::new(0.2, 0.0), C64::new(0.2, 0.0)]);
        let b = seq(&[C64::new(0.0, 0.2), C64::new(0.0, 0.2)]);
        let v = sequence_phase_oracle(&a, &b, 64).unwrap();
        assert!(phase_distance(v.phase, -0.32) < 1e-6, "{}", v.phase);
        assert!(v.is_trusted());
    }

    #[test]
    fn inverse_pair_keeps_norm() {
        for alpha in [C64::new(0.5, 0.0), C64::new(0.0, -0.5), C64::new(0.3, 0.4)] {
            let state = propagate(vacuum(64), [alpha, -alpha], 64).unwrap();
            assert!((state[0].norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn coherent_probe_sees_same_phase() {
        let a = seq(&[C64::new(0.4, 0.1), C64::new(-0.2, 0.3)]);
        let b = seq(&[C64::new(0.1, -0.45), C64::new(0.25, 0.2)]);
        let reference = loop_overlap(&a, &b, 64, C64::new(0.0, 0.0)).unwrap().arg();
        for mu in [C64::new(0.3, 0.0), C64::new(0.0, -0.3), C64::new(0.2, 0.2)] {
            let z = loop_overlap(&a, &b, 64, mu).unwrap();
            assert!(phase_distance(z.arg(), reference) < 1e-6);
        }
    }

    #[test]
    fn quadrature_exponentials_fix_the_sign_convention() {
        let (x, p) = (0.45, 0.35);
        let cutoff = 64;
        let shift = position_shift_matrix(x, cutoff);
        let kick = momentum_kick_matrix(p, cutoff);
        let shift_back = position_shift_matrix(-x, cutoff);
        let kick_back = momentum_kick_matrix(-p, cutoff);
        // U = D_x† D_p† D_x D_p acting on |0⟩
        let out = shift_back.apply(&kick_back.apply(&shift.apply(&kick.apply(&vacuum(cutoff)))));
        let measured = out[0].arg();
        assert!((out[0].norm() - 1.0).abs() < 1e-9);

        let algebra = commutator_loop_phase(
            &position_sequence(&[x]).unwrap(),
            &momentum_sequence(&[p]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(algebra, -x * p, epsilon = 1e-15);
        assert!(
            phase_distance(measured, algebra) < 1e-9,
            "{measured} vs {algebra}"
        );

        // and e^{−ixP} is the Laguerre-built D(x/√2) on the trusted block
        let d = displacement_matrix(C64::new(x / 2f64.sqrt(), 0.0), cutoff).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                assert!((d.get(r, c) - shift.get(r, c)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn heavy_truncation_is_reported() {
        let big = C64::new(0.5, 0.0);
        let a = seq(&[big, big, big]);
        let b = seq(&[big * C64::i(), big * C64::i(), big * C64::i()]);
        match sequence_phase_oracle(&a, &b, 8) {
            Err(Error::Truncation { retention, cutoff }) => {
                assert_eq!(cutoff, 8);
                assert!(retention < MIN_RETENTION);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        let v = sequence_phase_oracle_adaptive(&a, &b, 8).unwrap();
        assert!(v.is_trusted());
        assert!(v.cutoff_used > 8);
    }
}
