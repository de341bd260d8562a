use proptest::prelude::*;
use switchmet::fock_oracle::{
    loop_overlap, momentum_kick_matrix, position_shift_matrix, sequence_phase_oracle,
    DEFAULT_CUTOFF,
};
use switchmet::phase_algebra::{
    commutator_loop_phase, momentum_sequence, phase_distance, position_sequence,
};
use switchmet::{DisplacementSequence, C64};

fn disk(radius: f64) -> impl Strategy<Value = C64> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU)
        .prop_map(move |(u, t)| C64::from_polar(radius * u.sqrt(), t))
}

fn pair() -> impl Strategy<Value = (Vec<C64>, Vec<C64>)> {
    (1usize..=3).prop_flat_map(|n| {
        (
            prop::collection::vec(disk(0.5), n..=n),
            prop::collection::vec(disk(0.5), n..=n),
        )
    })
}

fn seq(v: &[C64]) -> DisplacementSequence {
    DisplacementSequence::from_amplitudes(v.iter().copied()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn oracle_agrees_with_closed_form((a, b) in pair()) {
        let (a, b) = (seq(&a), seq(&b));
        let closed = commutator_loop_phase(&a, &b).unwrap();
        let v = sequence_phase_oracle(&a, &b, DEFAULT_CUTOFF).unwrap();
        prop_assert!(v.is_trusted(), "retention {}", v.amplitude_retention);
        prop_assert!(phase_distance(v.phase, closed) < 1e-6);
    }

    #[test]
    fn loop_is_a_pure_phase_on_coherent_probes((a, b) in pair(), probe in disk(0.5)) {
        let (a, b) = (seq(&a), seq(&b));
        let closed = commutator_loop_phase(&a, &b).unwrap();
        let z = loop_overlap(&a, &b, DEFAULT_CUTOFF, probe).unwrap();
        prop_assert!((z.norm() - 1.0).abs() < 1e-6);
        prop_assert!(phase_distance(z.arg(), closed) < 1e-6);
    }
}

#[test]
fn operator_exponentials_fix_the_sign_of_the_quadrature_loop() {
    let (x, p) = (0.3, 0.4);
    let c = DEFAULT_CUTOFF;
    // U = D_A† D_B† D_A D_B with A = kicks, B = shifts; apply right to left.
    let kick = momentum_kick_matrix(p, c);
    let shift = position_shift_matrix(x, c);
    let kick_inv = momentum_kick_matrix(-p, c);
    let shift_inv = position_shift_matrix(-x, c);
    let u = kick_inv.matmul(&shift_inv).matmul(&kick).matmul(&shift);
    let vac = u.get(0, 0);
    let closed = commutator_loop_phase(
        &momentum_sequence(&[p]).unwrap(),
        &position_sequence(&[x]).unwrap(),
    )
    .unwrap();
    assert!((closed - x * p).abs() < 1e-15);
    assert!((vac.norm() - 1.0).abs() < 1e-6);
    assert!(
        phase_distance(vac.arg(), closed) < 1e-6,
        "{} vs {closed}",
        vac.arg()
    );
}
