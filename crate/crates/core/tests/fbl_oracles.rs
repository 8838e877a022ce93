use pa_core::channel::{MismatchState, PhysicalConfig};
use pa_core::fbl::{
    conditional_fbl_error, dispersion, fbl_average_error, fbl_error_given_gain,
    fbl_fixed_rate_throughput, fbl_throughput, optimal_fbl_rate_given_ghat, FblConfig,
    MonteCarloConfig, RatePolicy,
};
use pa_core::rate_adapt::db_to_linear;
use pa_core::specfun::bessel_i0_scaled;
use proptest::prelude::*;

/// `E[ε(g) | ĝ]` against the noncentral density
/// `f(x) = σ⁻² exp(−(x + ĝ)/σ²) I0(2 sqrt(xĝ)/σ²)`, integrated in `s = sqrt(x)`
/// with composite midpoint panels.
fn density_oracle(g_hat: f64, sigma: f64, snr: f64, cfg: &FblConfig) -> f64 {
    let s2 = sigma * sigma;
    let root = g_hat.sqrt();
    let lo = (root - 10.0 * sigma).max(0.0);
    let hi = root + 10.0 * sigma;
    let n = 400_000;
    let h = (hi - lo) / n as f64;
    let mut sum = 0.0;
    for k in 0..n {
        let s = lo + (k as f64 + 0.5) * h;
        let pdf = 2.0 * s / s2
            * (-(s - root) * (s - root) / s2).exp()
            * bessel_i0_scaled(2.0 * s * root / s2).unwrap();
        sum += pdf * fbl_error_given_gain(s * s, snr, cfg).unwrap();
    }
    sum * h
}

#[test]
fn conditional_error_matches_density_integral() {
    let cases = [
        (1.0f64, 0.3f64, 100.0f64, 300, 0.9),
        (0.5, 0.05, 100.0, 100, 0.95),
        (2.0, 0.6, 10.0, 1000, 0.7),
        (0.0, 1.0, 100.0, 300, 0.0),
        (0.05, 0.4, 1000.0, 50, 1.0),
        (3.0, 0.01, 10.0, 2000, 0.98),
    ];
    for (g_hat, sigma, snr, length, frac) in cases {
        let c = ((g_hat + sigma * sigma) * snr).ln_1p();
        let r = if frac == 0.0 { 2.0 } else { frac * c };
        let cfg = FblConfig::new(length, r).unwrap();
        let got = conditional_fbl_error(g_hat, sigma, snr, &cfg).unwrap();
        let want = density_oracle(g_hat, sigma, snr, &cfg);
        assert!(
            (got - want).abs() < 1e-5,
            "{g_hat} {sigma} {snr} {length}: {got} vs {want}"
        );
    }
}

#[test]
fn throughput_rises_with_blocklength() {
    for sigma in [0.1, 0.5] {
        let mut prev = 0.0;
        for length in [50, 100, 200, 400, 800] {
            let t = fbl_throughput(sigma, 100.0, length).unwrap().value;
            assert!(t >= prev, "sigma={sigma} L={length}");
            prev = t;
        }
    }
}

#[test]
fn throughput_falls_with_sigma() {
    for length in [100, 300] {
        let ts: Vec<f64> = [0.1, 0.3, 0.5]
            .iter()
            .map(|&s| fbl_throughput(s, 100.0, length).unwrap().value)
            .collect();
        assert!(ts[0] > ts[1] && ts[1] > ts[2], "{ts:?}");
        let no_pa = fbl_throughput(1.0, 100.0, length).unwrap().value;
        assert!(no_pa < ts[2]);
    }
}

#[test]
fn adaptive_rate_beats_any_fixed_rate() {
    let adaptive = fbl_throughput(0.4, 100.0, 300).unwrap().value;
    for r in [1.0, 2.0, 3.0, 4.0] {
        let cfg = FblConfig::new(300, r).unwrap();
        assert!(fbl_fixed_rate_throughput(0.4, 100.0, &cfg).unwrap().value < adaptive);
    }
}

#[test]
fn no_pa_column_is_single_observation() {
    let s = optimal_fbl_rate_given_ghat(0.0, 1.0, 100.0, 300).unwrap();
    let t = fbl_throughput(1.0, 100.0, 300).unwrap().value;
    assert_eq!(t, s.conditional_throughput);
}

#[test]
fn average_error_falls_with_snr_and_mismatch() {
    let phys = PhysicalConfig::default();
    let sep = 1.5 * phys.wavelength();
    let sigma_at = |kmh: f64| {
        MismatchState::from_geometry(kmh / 3.6, sep, &phys)
            .unwrap()
            .sigma
    };
    let mc = |stream| MonteCarloConfig {
        draws: 20_000,
        seed: 7,
        stream_id: stream,
    };
    let mut prev = [1.0, 1.0];
    for db in [0.0, 10.0, 20.0, 30.0] {
        let p = db_to_linear(db);
        let slow = fbl_average_error(
            sigma_at(110.0),
            p,
            300,
            RatePolicy::ThroughputOptimal,
            &mc(0),
        )
        .unwrap();
        let fast = fbl_average_error(
            sigma_at(124.0),
            p,
            300,
            RatePolicy::ThroughputOptimal,
            &mc(1),
        )
        .unwrap();
        assert!(fast.value < slow.value, "{db} dB");
        assert!(slow.value < prev[0] && fast.value < prev[1], "{db} dB");
        prev = [slow.value, fast.value];
    }
}

#[test]
fn fixed_rate_error_tends_to_outage() {
    for (k, (p, r)) in [(10.0f64, 1.0f64), (100.0, 3.0)].into_iter().enumerate() {
        let outage = -(-(r.exp() - 1.0) / p).exp_m1();
        let mc = MonteCarloConfig {
            draws: 100_000,
            seed: 21,
            stream_id: k as u64,
        };
        let e = fbl_average_error(0.5, p, 1_000_000, RatePolicy::Fixed(r), &mc).unwrap();
        assert!(
            (e.value - outage).abs() < 2.0 * e.std_error,
            "{} vs {outage}",
            e.value
        );
    }
}

#[test]
fn capacity_rate_without_mismatch_errs_half_the_time() {
    let mc = MonteCarloConfig::new(1, 0);
    let e = fbl_average_error(0.0, 100.0, 300, RatePolicy::Capacity, &mc).unwrap();
    assert!((e.value - 0.5).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn error_is_monotone(g in 0.0f64..10.0, db in -10.0f64..40.0, r in 0.0f64..8.0,
                         dr in 0.0f64..1.0, dg in 0.0f64..1.0, length in 1u64..5000) {
        let p = db_to_linear(db);
        let e = fbl_error_given_gain(g, p, &FblConfig::new(length, r).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        let up = fbl_error_given_gain(g, p, &FblConfig::new(length, r + dr).unwrap()).unwrap();
        prop_assert!(up >= e);
        let better = fbl_error_given_gain(g + dg, p, &FblConfig::new(length, r).unwrap()).unwrap();
        prop_assert!(better <= e);
        let v = dispersion(g, p);
        prop_assert!((0.0..1.0).contains(&v));
    }
}
