use relest_core::actuator::{simulate, ActuatorParams, DriveWaveform, NoiseConfig, SimTrace};
use relest_core::filter::{process_noise, transition_matrix};
use relest_core::{offline_estimate, FilterConfig, IntegralEstimator, Quality, Semera};

const DELTA: f64 = 50e-6;
const RESETS: [usize; 4] = [0, 400, 800, 1200];

fn trace(p: &ActuatorParams, noise: NoiseConfig, seed: u64) -> SimTrace {
    simulate(p, &DriveWaveform::valve(), 1e-6, DELTA, noise, seed).unwrap()
}

fn table_noise() -> NoiseConfig {
    NoiseConfig { v_std: 15e-3, i_std: 1e-3 }
}

#[test]
fn integral_flux_closes_over_every_cycle() {
    for (noise, seed) in [(NoiseConfig::default(), 0), (table_noise(), 1), (table_noise(), 2)] {
        let tr = trace(&ActuatorParams::valve(), noise, seed);
        let (u, iota) = (tr.measured_voltage(), tr.measured_current());
        let mut est = IntegralEstimator::from_filter_config(&FilterConfig::valve(), 0.0).unwrap();
        let mut r_hats = vec![f64::NAN; u.len()];
        for k in 0..u.len() {
            if let Some(f) = est.step(u[k], iota[k], RESETS.contains(&k)).unwrap() {
                r_hats[k] = f.r_hat;
            }
        }
        for w in RESETS.windows(2) {
            let (start, end) = (w[0], w[1]);
            let r_new = r_hats[end];
            let s_u: f64 = u[start + 1..=end].iter().sum();
            let s_i: f64 = iota[start + 1..=end].iter().sum();
            let closure = DELTA * (s_u - r_new * s_i);
            assert!(closure.abs() < 1e-9, "seed {seed}, cycle ending {end}: {closure}");
            // Constant strictly between resets.
            assert!(r_hats[end + 1..end + 400.min(u.len() - end - 1)].iter().all(|&r| r == r_new));
        }
    }
}

#[test]
fn covariance_health_across_scenarios() {
    let relay_like = ActuatorParams {
        turns: 5250,
        lambda_sat: 0.105,
        r_true: 1590.0,
        ..ActuatorParams::valve()
    };
    let cases = [
        (ActuatorParams::valve(), FilterConfig::valve(), DriveWaveform::valve(), table_noise()),
        (
            relay_like,
            FilterConfig::relay(),
            DriveWaveform { v_on: 120.0, period: 40e-3, ..DriveWaveform::valve() },
            NoiseConfig { v_std: 15e-3, i_std: 0.05e-3 },
        ),
    ];
    for (p, cfg, w, noise) in cases {
        for seed in 0..5 {
            let tr = simulate(&p, &w, 1e-6, DELTA, noise, seed).unwrap();
            let mut f = Semera::new(cfg).unwrap();
            for s in &tr.samples {
                if let Some(frame) = f.step(s.u, s.iota).unwrap() {
                    if frame.quality == Quality::Lq {
                        assert_eq!(frame.l_hat, cfg.l0_mean);
                    }
                }
                let sigma = f.state().sigma;
                assert_eq!(sigma, sigma.transpose());
                let eig = sigma.symmetric_eigen().eigenvalues;
                assert!(eig.min() >= -1e-10 * sigma.trace(), "min eigenvalue {}", eig.min());
            }
        }
    }
}

#[test]
fn zero_excitation_only_predicts() {
    let tr = trace(&ActuatorParams::valve(), table_noise(), 5);
    let mut f = Semera::new(FilterConfig::valve()).unwrap();
    for s in &tr.samples[..700] {
        f.step(s.u, s.iota).unwrap();
    }
    f.step(0.0, 0.0).unwrap();
    let before = f.state().clone();
    let frame = f.step(12.3, 0.0).unwrap().unwrap();
    let after = f.state();
    let fm = transition_matrix();
    let expected_sigma = fm * before.sigma * fm.transpose() + process_noise(&FilterConfig::valve());
    assert_eq!(after.x_hat, fm * before.x_hat);
    for (a, b) in after.sigma.iter().zip(expected_sigma.iter()) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-30));
    }
    assert_eq!((frame.r_hat, frame.lambda_hat), (before.prev_r_hat, 0.0));
}

#[test]
fn drifting_resistance_offline_integral_beats_online() {
    // 50 Ω/s drift: 4 Ω over the four cycles.
    let p = ActuatorParams { r_drift: 50.0, ..ActuatorParams::valve() };
    let tr = trace(&p, NoiseConfig::default(), 0);
    let (u, iota) = (tr.measured_voltage(), tr.measured_current());
    let cfg = FilterConfig::valve();

    let mut online = IntegralEstimator::from_filter_config(&cfg, 0.0).unwrap();
    let mut on_err = Vec::new();
    for k in 0..u.len() {
        if let Some(f) = online.step(u[k], iota[k], RESETS.contains(&k)).unwrap() {
            if k > 400 && f.quality == Quality::Hq {
                on_err.push((f.r_hat - tr.samples[k].r).abs());
            }
        }
    }
    let offline = offline_estimate(&u, &iota, &[0, 400, 800, 1200, 1600], &cfg, 0.0).unwrap();
    let off_err: Vec<f64> = offline
        .iter()
        .enumerate()
        .filter(|(j, f)| *j + 1 > 400 && f.quality == Quality::Hq)
        .map(|(j, f)| (f.r_hat - tr.samples[j + 1].r).abs())
        .collect();

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    // The online estimate lags by a whole cycle (≈ 1 Ω); the offline one
    // uses the cycle's own data.
    assert!(mean(&on_err) > 0.8, "online {}", mean(&on_err));
    assert!(mean(&off_err) < 0.5 * mean(&on_err), "offline {}", mean(&off_err));
}
