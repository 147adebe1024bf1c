use dephase::oracle;
use dephase::spin::{
    cosine_state, flat_phase_state, gaussian_state, holland_burnett_state, jz_matrix, noon_state, spin_coherent_state,
};
use dephase::{ProbeState, SpinDim, StateKind};
use proptest::prelude::*;

fn d(tj: u32) -> SpinDim {
    SpinDim::new(tj).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn cosine_small_spins() {
    close(cosine_state(d(2)).amplitudes(), &[0.40825, 0.81650, 0.40825], 1e-5);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    close(cosine_state(d(1)).amplitudes(), &[h, h], 1e-12);
}

#[test]
fn cosine_peaks_at_zero() {
    let s = cosine_state(d(80));
    let a = s.amplitudes();
    let max = a.iter().cloned().fold(0.0, f64::max);
    assert_eq!(a[40], max);
    assert!(s.is_symmetric(1e-14));
}

#[test]
fn noon_and_flat() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    close(noon_state(d(2)).amplitudes(), &[h, 0.0, h], 1e-15);
    close(noon_state(d(1)).amplitudes(), &[h, h], 1e-15);
    let n80 = noon_state(d(80));
    assert!(n80.amplitudes()[1..80].iter().all(|&x| x == 0.0));
    close(flat_phase_state(d(2)).amplitudes(), &[0.57735; 3], 1e-5);
    assert!(flat_phase_state(d(200)).amplitudes().iter().all(|x| (x - 0.070535).abs() < 1e-6));
}

#[test]
fn gaussian_profiles() {
    // φ_m ∝ exp(−m²/4w²), so |φ|² has standard deviation w
    let s = gaussian_state(d(200), 10.0).unwrap();
    let ratio = s.amplitude_at(0.0) / s.amplitude_at(10.0);
    assert!((ratio - 0.25f64.exp()).abs() < 1e-12);
    assert!((s.variance_m() - 100.0).abs() < 1e-9);
    let wide = gaussian_state(d(2), 1e8).unwrap();
    close(wide.amplitudes(), flat_phase_state(d(2)).amplitudes(), 1e-12);
    assert!(gaussian_state(d(4), 0.0).is_err());
}

#[test]
fn coherent_state_matches_rotation_oracle() {
    close(spin_coherent_state(d(2)).amplitudes(), &[0.5, std::f64::consts::FRAC_1_SQRT_2, 0.5], 1e-5);
    for tj in 1..=30 {
        let dim = d(tj);
        close(
            spin_coherent_state(dim).amplitudes(),
            &oracle::rotated_probe(dim, dim.dim() - 1).unwrap(),
            1e-10,
        );
    }
    let s = spin_coherent_state(d(200));
    assert!((s.variance_m() - 50.0).abs() < 1e-9);
}

#[test]
fn holland_burnett_matches_rotation_oracle() {
    let hb = holland_burnett_state(d(2)).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    close(hb.amplitudes(), &[h, 0.0, -h], 1e-12);
    let hb4 = holland_burnett_state(d(4)).unwrap();
    assert!(hb4.amplitudes()[1].abs() < 1e-14 && hb4.amplitudes()[3].abs() < 1e-14);
    assert!((hb4.amplitudes()[2].abs() - 0.5).abs() < 1e-12);
    for tj in (2..=30).step_by(2) {
        let dim = d(tj);
        close(
            holland_burnett_state(dim).unwrap().amplitudes(),
            &oracle::rotated_probe(dim, dim.dim() / 2).unwrap(),
            1e-10,
        );
    }
    assert!(holland_burnett_state(d(3)).is_err());
}

#[test]
fn jz_diagonal() {
    assert_eq!(jz_matrix(d(1)).diagonal().as_slice(), &[-0.5, 0.5]);
    assert_eq!(jz_matrix(d(2)).diagonal().as_slice(), &[-1.0, 0.0, 1.0]);
    for tj in 1..20 {
        assert_eq!(jz_matrix(d(tj)).trace(), 0.0);
    }
}

#[test]
fn labels_parse() {
    for (label, kind) in [
        ("cosine", StateKind::Cosine),
        ("noon", StateKind::Noon),
        ("flat", StateKind::Flat),
        ("coherent", StateKind::SpinCoherent),
        ("holland-burnett", StateKind::HollandBurnett),
    ] {
        assert_eq!(label.parse::<StateKind>().unwrap(), kind);
    }
    assert_eq!("gaussian:2.5".parse::<StateKind>().unwrap(), StateKind::Gaussian { width: 2.5 });
    assert!("squeezed".parse::<StateKind>().is_err());
}

#[test]
fn rejects_unnormalized_and_wrong_length() {
    assert!(ProbeState::new(d(1), vec![1.0, 1.0], "x").is_err());
    assert!(ProbeState::custom(d(2), vec![1.0, 1.0], "x").is_err());
    assert!(ProbeState::custom(d(1), vec![0.0, 0.0], "x").is_err());
    assert!(SpinDim::new(0).is_err());
}

#[test]
fn csv_and_json_round_trip() {
    let s = gaussian_state(d(12), 2.0).unwrap();
    let back = ProbeState::from_csv(&s.to_csv(), "g").unwrap();
    close(back.amplitudes(), s.amplitudes(), 1e-15);
    let back = ProbeState::from_json(&s.to_json().unwrap()).unwrap();
    assert_eq!(back.amplitudes(), s.amplitudes());
}

proptest! {
    #[test]
    fn named_states_are_normalized(tj in 1u32..=120) {
        for s in [cosine_state(d(tj)), noon_state(d(tj)), flat_phase_state(d(tj)), spin_coherent_state(d(tj))] {
            prop_assert!((s.norm_squared() - 1.0).abs() < 1e-12);
            prop_assert!(s.is_symmetric(1e-12));
        }
        if tj % 2 == 0 {
            prop_assert!((holland_burnett_state(d(tj)).unwrap().norm_squared() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn custom_normalizes(v in prop::collection::vec(-5.0f64..5.0, 2..40)) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let s = ProbeState::custom(d(v.len() as u32 - 1), v, "p").unwrap();
        prop_assert!((s.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_exact(v in prop::collection::vec(0.01f64..1.0, 2..30)) {
        let s = ProbeState::custom(d(v.len() as u32 - 1), v, "p").unwrap();
        let back = ProbeState::from_json(&s.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.amplitudes(), s.amplitudes());
    }
}
