use std::f64::consts::PI;

use dephase::measurement::{
    circular_mean, classical_fisher, closed_form_cosine_distribution, conditional_distribution, convolve_with_diffusion,
    convolved_distribution, corrected_error, max_relative_deviation, run_campaign, sample_measurements,
    sample_two_stage, wrap_angle, wrapped_gaussian, wrapped_variance, ClosedForm, DistributionKind,
    PhaseDistribution, DEFAULT_FISHER_STEP, DEFAULT_GRID,
};
use dephase::oracle::{ks_p_value, ks_statistic, quadrature_convolution};
use dephase::qfi::phase_qfi_of;
use dephase::spin::{cosine_state, flat_phase_state, gaussian_state};
use dephase::{Error, NoiseSetting, ProbeState, SpinDim};
use proptest::prelude::*;

fn d(tj: u32) -> SpinDim {
    SpinDim::new(tj).unwrap()
}

fn at(delta: f64, theta: f64) -> NoiseSetting {
    NoiseSetting::new(delta, theta).unwrap()
}

#[test]
fn flat_probe_peaks_at_dimension_over_two_pi() {
    let g = 4096;
    for tj in [1u32, 8, 31] {
        let p = conditional_distribution(&flat_phase_state(d(tj)), 0.0, g).unwrap();
        let want = f64::from(tj + 1) / (2.0 * PI);
        assert!((p.density()[g / 2] - want).abs() < 1e-10);
    }
}

#[test]
fn basis_state_gives_uniform_phase() {
    let mut a = vec![0.0; 11];
    a[5] = 1.0;
    let s = ProbeState::custom(d(10), a, "m0").unwrap();
    let p = conditional_distribution(&s, 1.3, 512).unwrap();
    assert!(p.density().iter().all(|x| (x - 1.0 / (2.0 * PI)).abs() < 1e-12));
}

#[test]
fn conditional_moves_with_theta() {
    let g = 4096;
    let p = conditional_distribution(&cosine_state(d(30)), 0.5, g).unwrap();
    let (imax, _) = p.density().iter().enumerate().fold((0, 0.0), |b, (i, &x)| if x > b.1 { (i, x) } else { b });
    assert!((p.angle(imax) - 0.5).abs() <= p.step());
    assert!(wrapped_variance(&p, 0.5) < wrapped_variance(&p, 0.0));
}

#[test]
fn half_angle_closed_form_matches() {
    let exact = conditional_distribution(&cosine_state(d(18)), 0.0, 4096).unwrap();
    let closed = closed_form_cosine_distribution(d(18), 4096, ClosedForm::HalfAngle).unwrap();
    assert!(max_relative_deviation(&closed, &exact, 1e-10) < 1e-6);
}

#[test]
fn fft_convolution_matches_quadrature() {
    let c = conditional_distribution(&cosine_state(d(12)), 0.0, 512).unwrap();
    for delta in [0.01, 0.3, 2.0] {
        let fast = convolve_with_diffusion(&c, delta).unwrap();
        let slow = quadrature_convolution(&c, delta).unwrap();
        let err = fast.density().iter().zip(slow.density()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "Δ={delta}: {err}");
        assert_eq!(fast.kind(), DistributionKind::Convolved);
    }
}

#[test]
fn convolution_limits() {
    let c = conditional_distribution(&cosine_state(d(18)), 0.0, 1024).unwrap();
    assert_eq!(convolve_with_diffusion(&c, 0.0).unwrap().density(), c.density());
    let wide = convolve_with_diffusion(&c, 40.0).unwrap();
    assert!(wide.density().iter().all(|x| (x - 1.0 / (2.0 * PI)).abs() < 1e-8));
    assert!((wrapped_variance(&wide, 0.0) - PI * PI / 3.0).abs() < 1e-4);
    assert!(convolve_with_diffusion(&c, -0.1).is_err());
    assert!(convolve_with_diffusion(&c, f64::NAN).is_err());
}

#[test]
fn moderate_blur_is_unimodal() {
    let p = convolved_distribution(&cosine_state(d(18)), at(0.3, 0.0), 2048).unwrap();
    let x = p.density();
    let mid = x.len() / 2;
    assert!(x[..=mid].windows(2).all(|w| w[1] >= w[0] - 1e-15));
    assert!(x[mid..].windows(2).all(|w| w[1] <= w[0] + 1e-15));
}

#[test]
fn cosine_variance_tracks_delta_plus_pi_squared_over_n_squared() {
    let s = cosine_state(d(200));
    let n = 200.0f64;
    for delta in [0.0, 0.03] {
        let v = wrapped_variance(&convolved_distribution(&s, at(delta, 0.0), DEFAULT_GRID).unwrap(), 0.0);
        let want = delta + PI * PI / (n * n);
        assert!((v / want - 1.0).abs() < 0.02, "Δ={delta}: {v} vs {want}");
    }
}

#[test]
fn classical_fisher_of_gaussian_and_uniform() {
    let v = 0.004;
    let g = PhaseDistribution::from_fn(DEFAULT_GRID, DistributionKind::Other, 0.0, |x| wrapped_gaussian(x, v)).unwrap();
    assert!((classical_fisher(&g, DEFAULT_FISHER_STEP).unwrap() * v - 1.0).abs() < 1e-3);
    let u = PhaseDistribution::from_fn(128, DistributionKind::Other, 0.0, |_| 1.0).unwrap();
    assert!(classical_fisher(&u, DEFAULT_FISHER_STEP).unwrap().abs() < 1e-20);
    assert!(classical_fisher(&u, 0.0).is_err());
}

#[test]
fn classical_fisher_below_quantum() {
    for s in [cosine_state(d(20)), gaussian_state(d(20), 3.0).unwrap()] {
        for delta in [0.01, 0.2] {
            let p = convolved_distribution(&s, at(delta, 0.0), 4096).unwrap();
            let cfi = classical_fisher(&p, DEFAULT_FISHER_STEP).unwrap();
            let qfi = phase_qfi_of(&s, delta).unwrap();
            assert!(cfi <= qfi * (1.0 + 1e-6), "{} Δ={delta}: {cfi} > {qfi}", s.label());
            assert!(cfi > 0.5 * qfi);
        }
    }
}

#[test]
fn sampling_is_seeded() {
    let p = convolved_distribution(&cosine_state(d(16)), at(0.1, 0.2), 2048).unwrap();
    let a = sample_measurements(&p, 1000, 42).unwrap();
    assert_eq!(a, sample_measurements(&p, 1000, 42).unwrap());
    assert_ne!(a, sample_measurements(&p, 1000, 43).unwrap());
    assert!(a.iter().all(|x| (-PI..PI).contains(x)));
}

#[test]
fn two_stage_draws_match_convolved_distribution() {
    let s = cosine_state(d(18));
    let c = conditional_distribution(&s, 0.0, 4096).unwrap();
    let direct = sample_measurements(&convolve_with_diffusion(&c, 0.2).unwrap(), 100_000, 1).unwrap();
    let staged = sample_two_stage(&c, 0.2, 100_000, 2).unwrap();
    let ks = ks_statistic(&direct, &staged);
    assert!(ks_p_value(ks, direct.len(), staged.len()) > 0.01, "D = {ks}");
}

#[test]
fn sample_mean_recovers_theta() {
    let p = convolved_distribution(&cosine_state(d(40)), at(0.05, 0.1), 4096).unwrap();
    let x = sample_measurements(&p, 20_000, 7).unwrap();
    let sigma = (wrapped_variance(&p, 0.1) / x.len() as f64).sqrt();
    assert!((circular_mean(&x) - 0.1).abs() < 4.0 * sigma);
}

#[test]
fn campaign_is_reproducible_and_calibrated_at_zero_blur() {
    let s = cosine_state(d(40));
    let a = run_campaign(&s, at(0.0, 0.0), 50, 200, 11, 4096).unwrap();
    let b = run_campaign(&s, at(0.0, 0.0), 50, 200, 11, 4096).unwrap();
    assert_eq!(a, b);
    let bias_scale = a.summary.measurement_variance / 50f64.sqrt();
    assert!(a.summary.mean_delta_hat.abs() < bias_scale, "{}", a.summary.mean_delta_hat);
    assert!(a.to_csv().starts_with("trial,theta_hat,delta_hat\n"));
    assert_eq!(a.to_csv().lines().count(), 201);
    assert!(run_campaign(&s, at(0.0, 0.0), 1, 5, 0, 4096).is_err());
}

#[test]
fn wraparound_correction_is_negligible_for_narrow_distributions() {
    let r = corrected_error(&cosine_state(d(200)), at(0.03, 0.0), DEFAULT_GRID).unwrap();
    assert!(r.factor - 1.0 < 1e-3, "{}", r.factor);
    assert!(r.corrected_error >= r.uncorrected);
    let wide = corrected_error(&cosine_state(d(18)), at(2.0, 0.0), DEFAULT_GRID).unwrap();
    assert!(wide.factor > 1.5);
}

#[test]
fn undersampled_grid_is_an_error() {
    let r = conditional_distribution(&cosine_state(d(40)), 0.0, 100);
    assert!(matches!(r, Err(Error::Undersampled { got: 100, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distributions_are_normalized(v in prop::collection::vec(-1.0f64..1.0, 2..20), delta in 0.0f64..3.0, theta in -3.0f64..3.0) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let s = ProbeState::custom(d(v.len() as u32 - 1), v, "r").unwrap();
        let p = convolved_distribution(&s, at(delta, theta), 256).unwrap();
        prop_assert!((p.integral() - 1.0).abs() < 1e-12);
        prop_assert!(p.density().iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn wrap_lands_in_half_open_interval(x in -1e4f64..1e4) {
        let w = wrap_angle(x);
        prop_assert!((-PI..PI).contains(&w));
        let k = ((x - w) / (2.0 * PI)).round();
        prop_assert!((x - w - 2.0 * PI * k).abs() < 1e-9);
    }

    #[test]
    fn blur_never_narrows(delta in 0.0f64..1.0, extra in 0.0f64..1.0) {
        let s = cosine_state(d(12));
        let a = wrapped_variance(&convolved_distribution(&s, at(delta, 0.0), 512).unwrap(), 0.0);
        let b = wrapped_variance(&convolved_distribution(&s, at(delta + extra, 0.0), 512).unwrap(), 0.0);
        prop_assert!(b >= a - 1e-12);
    }
}
