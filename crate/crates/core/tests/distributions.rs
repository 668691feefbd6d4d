use dgsite::cases;
use dgsite::stochastic::{
    beta_pdf, build_state_set, fit_beta_moments, fit_hours, fit_rayleigh, rayleigh_pdf, BetaFit, BetaParams,
    RayleighParams, ScenarioSettings, SigmaRule, HOURS,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

#[test]
fn beta_pdf_integrates_to_one() {
    let mut cases = vec![(2.0, 2.0), (2.5, 7.0), (9.0, 3.0), (25.26, 8.875)];
    let fits = fit_hours(
        &cases::wind_profile(),
        &cases::solar_profile(),
        &SigmaRule::default(),
        BetaFit::Moments,
    )
    .unwrap();
    cases.extend(fits.iter().filter_map(|f| f.beta).map(|b| (b.alpha, b.beta)));
    for (a, b) in cases {
        let p = BetaParams::new(a, b).unwrap();
        let area = simpson(|s| beta_pdf(s, &p), 0.0, 1.0, 200_000);
        assert!((area - 1.0).abs() < 1e-9, "Beta({a}, {b}) integrates to {area}");
    }
}

#[test]
fn rayleigh_pdf_integrates_to_one() {
    for v_m in [2.0, 6.0, 10.52, 14.0] {
        let p = fit_rayleigh(v_m).unwrap();
        // exp(-100) tail beyond 10c
        let area = simpson(|v| rayleigh_pdf(v, &p).unwrap(), 0.0, 10.0 * p.c, 200_000);
        assert!((area - 1.0).abs() < 1e-9, "v_m = {v_m}: {area}");
    }
}

#[test]
fn rayleigh_sample_mean_tracks_hourly_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for v_m in [5.0, 10.0, 12.9] {
        let p = fit_rayleigh(v_m).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| p.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - v_m).abs() / v_m < 0.02, "v_m = {v_m}: sample mean {mean}");
        // analytic mean c*sqrt(pi)/2 ~ 0.99967 v_m
        assert!((p.mean() - v_m).abs() / v_m < 1e-3);
    }
}

#[test]
fn state_set_hourly_means_within_three_standard_errors() {
    let wind = cases::wind_profile();
    let solar = cases::solar_profile();
    let settings = ScenarioSettings {
        samples_per_hour: 100,
        ..ScenarioSettings::default()
    };
    let set = build_state_set(&wind, &solar, &settings, 5).unwrap();
    let fits = fit_hours(&wind, &solar, &settings.sigma_rule, settings.beta_fit).unwrap();
    let m = 100.0;
    for h in 0..HOURS {
        let hour: Vec<_> = set.states.iter().filter(|s| s.hour as usize == h).collect();
        assert_eq!(hour.len(), 100);
        let fit = &fits[h];
        let w_mean = hour.iter().map(|s| s.wind_speed).sum::<f64>() / m;
        let r = fit.rayleigh.unwrap();
        let w_sd = r.c * ((4.0 - std::f64::consts::PI) / 4.0).sqrt();
        assert!((w_mean - r.mean()).abs() < 3.0 * w_sd / m.sqrt(), "hour {h} wind mean {w_mean}");
        let s_mean = hour.iter().map(|s| s.irradiance).sum::<f64>() / m;
        match fit.beta {
            Some(b) => {
                let se = b.variance().sqrt() / m.sqrt();
                assert!((s_mean - b.mean()).abs() < 3.0 * se, "hour {h} irradiance mean {s_mean}");
            }
            None => assert_eq!(s_mean, 0.0),
        }
    }
}

#[test]
fn compat_variant_differs_from_moment_match() {
    let a = fit_beta_moments(0.5, 0.1, BetaFit::Moments).unwrap();
    let b = fit_beta_moments(0.5, 0.1, BetaFit::Paper).unwrap();
    // same mean, larger shape parameters, smaller variance
    assert!((a.mean() - b.mean()).abs() < 1e-12);
    assert!(b.beta > a.beta && b.alpha > a.alpha);
    assert!((b.variance() - 0.01).abs() > 1e-4);
}

proptest! {
    #[test]
    fn beta_moment_round_trip(mu in 0.02f64..0.98, frac in 0.05f64..0.95) {
        // sigma^2 must stay below mu(1 - mu)
        let sigma = (frac * mu * (1.0 - mu)).sqrt();
        let p = fit_beta_moments(mu, sigma, BetaFit::Moments).unwrap();
        prop_assert!((p.mean() - mu).abs() < 1e-12);
        prop_assert!((p.variance() - sigma * sigma).abs() < 1e-12);
    }

    #[test]
    fn infeasible_moments_rejected(mu in 0.02f64..0.98, frac in 1.0f64..3.0) {
        let sigma = (frac * mu * (1.0 - mu)).sqrt();
        prop_assert!(fit_beta_moments(mu, sigma, BetaFit::Moments).is_err());
    }

    #[test]
    fn rayleigh_pdf_non_negative(c in 0.5f64..30.0, v in 0.0f64..100.0) {
        let p = RayleighParams::new(c).unwrap();
        prop_assert!(rayleigh_pdf(v, &p).unwrap() >= 0.0);
    }

    #[test]
    fn beta_samples_in_unit_interval(a in 0.5f64..40.0, b in 0.5f64..40.0, seed in any::<u64>()) {
        let p = BetaParams::new(a, b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..32 {
            let s = p.sample(&mut rng);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn state_set_weights_and_determinism(m in 1usize..6, seed in any::<u64>()) {
        let settings = ScenarioSettings { samples_per_hour: m, ..ScenarioSettings::default() };
        let a = build_state_set(&cases::wind_profile(), &cases::solar_profile(), &settings, seed).unwrap();
        let b = build_state_set(&cases::wind_profile(), &cases::solar_profile(), &settings, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), HOURS * m);
        let total: f64 = a.states.iter().map(|s| s.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
