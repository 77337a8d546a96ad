use std::fs;
use std::path::Path;

use relest::experiment::{self, run_experiment, run_seed, Window};
use relest::io::{self, InputSample};
use relest::{ExperimentConfig, Preset};
use relest_core::Quality;

fn valve(seeds: &[u64]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(Preset::Valve);
    cfg.seeds = seeds.to_vec();
    cfg
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn single_seed_run_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&valve(&[3]), Some(dir.path())).unwrap();
    for name in ["trace.csv", "estimates.csv", "snr.csv", "observability.csv"] {
        assert!(dir.path().join("seed_3").join(name).is_file(), "{name}");
    }
    let rmse = fs::read_to_string(dir.path().join("rmse.csv")).unwrap();
    assert_eq!(rmse.lines().count(), 9);
    let after = report.after.ratio.unwrap();
    assert!(after.mean[2] < 1.0, "λ ratio {}", after.mean[2]);

    let trace = fs::read_to_string(dir.path().join("seed_3/trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "t,v,i,u,iota,r_true,l_true,lambda_true,h,mode");
    let est = fs::read_to_string(dir.path().join("seed_3/estimates.csv")).unwrap();
    assert_eq!(est.lines().next().unwrap(), "t,estimator,r_hat,l_hat,lambda_hat,quality");
    for name in ["semera", "integral", "integral_offline"] {
        assert_eq!(est.lines().filter(|l| l.split(',').nth(1) == Some(name)).count(), 1600);
    }
}

#[test]
fn identical_config_and_seed_give_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = valve(&[0, 1, 2]);
    run_experiment(&cfg, Some(a.path())).unwrap();
    run_experiment(&cfg, Some(b.path())).unwrap();
    let (fa, fb) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
    assert_eq!(fa.len(), 13);
    assert_eq!(fa, fb);
}

#[test]
fn replaying_trace_file_reproduces_estimates_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = valve(&[11]);
    run_experiment(&cfg, Some(dir.path())).unwrap();
    let seed_dir = dir.path().join("seed_11");

    let samples = io::read_input(fs::File::open(seed_dir.join("trace.csv")).unwrap(), "trace.csv", 50e-6).unwrap();
    let replayed = experiment::replay(&samples, &cfg).unwrap();
    let direct = run_seed(&cfg, 11).unwrap().estimates;
    assert_eq!(replayed, direct);

    let mut buf = Vec::new();
    io::write_estimates(&mut buf, &replayed.blocks()).unwrap();
    assert_eq!(buf, fs::read(seed_dir.join("estimates.csv")).unwrap());
}

#[test]
fn table_ratio_row_matches_estimator_rows() {
    let report = run_experiment(&valve(&[0, 1, 2, 3]), None).unwrap();
    for table in [&report.first, &report.after] {
        let (s, i, ratio) = (table.semera.unwrap(), table.integral.unwrap(), table.ratio.unwrap());
        for j in 0..3 {
            assert!(s.mean[j] >= 0.0 && i.mean[j] >= 0.0);
            assert!((ratio.mean[j] - s.mean[j] / i.mean[j]).abs() <= 1e-12 * ratio.mean[j]);
        }
    }
}

#[test]
fn single_cycle_marks_after_window_insufficient() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = valve(&[0]);
    cfg.waveform.n_cycles = 1;
    let report = run_experiment(&cfg, Some(dir.path())).unwrap();
    assert!(report.first.semera.is_some() && report.first.ratio.is_some());
    assert!(report.after.semera.is_none() && report.after.integral.is_none() && report.after.ratio.is_none());
    let rmse = fs::read_to_string(dir.path().join("rmse.csv")).unwrap();
    let after: Vec<&str> = rmse.lines().filter(|l| l.starts_with("after_first_operation")).collect();
    assert_eq!(after.len(), 4);
    for line in after {
        assert_eq!(line.split(',').nth(2), Some(io::INSUFFICIENT_DATA), "{line}");
        assert!(!line.contains(",0,"), "{line}");
    }
}

#[test]
fn zero_noise_both_estimators_within_tenth_percent_after_first_cycle() {
    let mut cfg = valve(&[0]);
    cfg.noise.v_std = 0.0;
    cfg.noise.i_std = 0.0;
    let run = run_seed(&cfg, 0).unwrap();
    let r_true = cfg.actuator.r_true;
    for f in run.estimates.semera.iter().filter(|f| f.t > 20e-3 && f.quality == Quality::Hq) {
        assert!((f.r_hat / r_true - 1.0).abs() < 1e-3, "semera t={} r̂={}", f.t, f.r_hat);
    }
    for f in run.estimates.integral.iter().filter(|f| f.t >= 20e-3) {
        assert!((f.r_hat / r_true - 1.0).abs() < 1e-3, "integral t={} r̂={}", f.t, f.r_hat);
    }
}

#[test]
fn relay_preset_converges_on_relay_like_trace() {
    let cfg = ExperimentConfig::preset(Preset::Relay);
    let run = run_seed(&cfg, 0).unwrap();
    let samples: Vec<InputSample> =
        run.trace.samples.iter().map(|s| InputSample { t: s.t, u: s.u, iota: s.iota }).collect();
    let replayed = experiment::replay(&samples, &cfg).unwrap();
    let last = replayed.semera.iter().rev().find(|f| f.quality == Quality::Hq).unwrap();
    assert!((last.r_hat / 1590.0 - 1.0).abs() < 0.01, "r̂ = {}", last.r_hat);
    let last_integral = replayed.integral.last().unwrap();
    assert!((last_integral.r_hat / 1590.0 - 1.0).abs() < 0.01);
}

#[test]
fn windows_split_at_configured_time() {
    let cfg = valve(&[0]);
    let run = run_seed(&cfg, 0).unwrap();
    let first = experiment::window_rmse(&run.estimates.semera, &run.trace, Window::First, 20e-3).unwrap().unwrap();
    assert_eq!(first, run.first.semera.unwrap());
    assert!(experiment::window_rmse(&run.estimates.semera, &run.trace, Window::After, 1.0).unwrap().is_none());
}
