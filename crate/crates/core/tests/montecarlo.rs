mod common;

use boxquant::gaussmoments::normal_quantile;
use boxquant::montecarlo::{
    aggregate, experiment_theory, run_experiment, run_trial, run_trials, wasserstein2_to_theory, EmpiricalReport,
};
use boxquant::tuner::tune_l_for_snr;
use boxquant::{q_tail, BoxBound, Error, SystemParams};
use common::Lcg;

fn fig3_point(n: usize, a: f64) -> SystemParams {
    SystemParams::new(0.2, 0.01, BoxBound::Finite(a), 1.0)
        .with_n(n)
        .with_sigma2(0.09)
        .with_level(tune_l_for_snr(0.09, 5.0).unwrap())
}

fn assert_report_sane(r: &EmpiricalReport) {
    for p in [r.ber_box.mean, r.ber_quant.mean] {
        assert!((0.0..=1.0).contains(&p));
    }
    for se in
        [r.ber_box.se, r.ber_quant.se, r.p_b_empirical.se, r.mse_box.se, r.mse_quant.se, r.w2_box.se, r.w2_quant.se]
    {
        assert!(se >= 0.0);
    }
    assert!(r.sdnr_avg_box >= r.sdnr_lb_box - 1e-9);
    assert!(r.sdnr_avg_quant >= r.sdnr_lb_quant - 1e-9);
}

#[test]
fn w2_small_for_exact_samples() {
    let mut rng = Lcg::new(5);
    let (mean_plus, std) = (0.8, 0.4);
    let m = 100_000;
    let s: Vec<f64> = (0..m).map(|_| if rng.uniform() < 0.5 { -1.0 } else { 1.0 }).collect();
    let d: Vec<f64> = s.iter().map(|&sk| mean_plus * sk + std * rng.normal()).collect();
    let w = wasserstein2_to_theory(&d, &s, mean_plus, std).unwrap();
    assert!(w.distance < 0.02, "{}", w.distance);
    assert!(!w.empty_class);
}

#[test]
fn w2_translation() {
    // Samples placed on the target quantiles have zero distance; a common
    // shift by c then costs exactly |c|.
    let k = 500;
    let (mean_plus, std) = (1.0, 0.3);
    let mut d = Vec::new();
    let mut s = Vec::new();
    for sign in [1.0, -1.0] {
        for i in 0..k {
            d.push(sign * mean_plus + std * normal_quantile((i as f64 + 0.5) / k as f64));
            s.push(sign);
        }
    }
    assert!(wasserstein2_to_theory(&d, &s, mean_plus, std).unwrap().distance < 1e-12);
    for c in [0.05, -0.3, 2.0] {
        let shifted: Vec<f64> = d.iter().map(|v| v + c).collect();
        let w = wasserstein2_to_theory(&shifted, &s, mean_plus, std).unwrap().distance;
        assert!((w - c.abs()).abs() < 1e-12, "{w} vs {c}");
    }
    // Random samples: triangle inequality bound.
    let mut rng = Lcg::new(77);
    let d: Vec<f64> = s.iter().map(|&sk| mean_plus * sk + std * rng.normal()).collect();
    let w0 = wasserstein2_to_theory(&d, &s, mean_plus, std).unwrap().distance;
    let shifted: Vec<f64> = d.iter().map(|v| v + 0.5).collect();
    let w1 = wasserstein2_to_theory(&shifted, &s, mean_plus, std).unwrap().distance;
    assert!(w1 >= 0.5 - w0);
}

#[test]
fn w2_charges_missing_class() {
    let d = [0.9, 1.1, 1.0];
    let s = [1.0, 1.0, 1.0];
    let w = wasserstein2_to_theory(&d, &s, 1.0, 0.2).unwrap();
    assert!(w.empty_class);
    assert!(w.distance * w.distance >= 0.5 * 0.04 - 1e-15);
}

#[test]
fn deterministic_regardless_of_worker_count() {
    let p = fig3_point(300, 0.5);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_experiment(&p, 6, 42).unwrap());
    let b = four.install(|| run_experiment(&p, 6, 42).unwrap());
    assert_eq!(a, b);
    assert_eq!(run_experiment(&p, 1, 42).unwrap(), run_experiment(&p, 1, 42).unwrap());
    assert_ne!(run_experiment(&p, 1, 42).unwrap(), run_experiment(&p, 1, 43).unwrap());
}

#[test]
fn single_trials_rerun_in_isolation() {
    let p = fig3_point(200, 0.5);
    let all = run_trials(&p, 4, 1000).unwrap();
    let (bt, qt) = experiment_theory(&p).unwrap();
    // Trial 3 of base seed 1000 is trial 0 of base seed 1003.
    assert_eq!(run_trial(&p, &bt, &qt, 1000, 3).unwrap(), all[3]);
    assert_eq!(run_trial(&p, &bt, &qt, 1003, 0).unwrap(), all[3]);
}

#[test]
fn failures_carry_trial_index() {
    let p = fig3_point(100, 0.5);
    let (mut bt, qt) = experiment_theory(&p).unwrap();
    bt.dist_std = 0.0;
    match run_trial(&p, &bt, &qt, 0, 7) {
        Err(Error::Trial { trial, .. }) => assert_eq!(trial, 7),
        other => panic!("expected a trial error, got {other:?}"),
    }
    assert!(run_experiment(&p, 0, 1).is_err());
}

#[test]
fn aggregation_formulas() {
    let p = fig3_point(300, 0.5);
    let metrics = run_trials(&p, 5, 9).unwrap();
    let (bt, qt) = experiment_theory(&p).unwrap();
    let r = aggregate(&p, &bt, &qt, &metrics).unwrap();
    assert_eq!(r.trials, 5);
    assert_eq!(r.m, 60);
    let ber = metrics.iter().map(|t| t.ber_quant).sum::<f64>() / 5.0;
    assert!((r.ber_quant.mean - ber).abs() < 1e-15);
    assert!((r.ber_quant.se - (ber * (1.0 - ber) / 300.0).sqrt()).abs() < 1e-15);
    for t in &metrics {
        assert!((t.power_quant - p.level * p.level).abs() < 1e-14 * p.level * p.level);
    }
    assert!((r.p_q_empirical - p.level * p.level).abs() < 1e-15);
    assert_report_sane(&r);
}

#[test]
fn box_power_tracks_theory() {
    for a in [0.3, 1.0, 3.0] {
        let p = fig3_point(1000, a).with_lambda(0.1).with_rho(2.0);
        let r = run_experiment(&p, 5, 500).unwrap();
        let (bt, _) = experiment_theory(&p).unwrap();
        let rel = (r.p_b_empirical.mean - bt.p_bar).abs() / bt.p_bar;
        assert!(rel < 0.05, "A={a}: {} vs {}", r.p_b_empirical.mean, bt.p_bar);
        assert_report_sane(&r);
    }
}

#[test]
fn distortion_power_matches_laws() {
    let p = fig3_point(1000, 0.5);
    let r = run_experiment(&p, 10, 2024).unwrap();
    let (bt, qt) = experiment_theory(&p).unwrap();
    let want_q = qt.zeta / (qt.xi * qt.xi);
    let want_b = (bt.dist_std / bt.sig_coef).powi(2);
    assert!((r.mse_quant.mean - want_q).abs() < 3.0 * r.mse_quant.se, "{:?} vs {want_q}", r.mse_quant);
    assert!((r.mse_box.mean - want_b).abs() < 3.0 * r.mse_box.se, "{:?} vs {want_b}", r.mse_box);
}

#[test]
fn noiseless_quantized_ber_matches_theory() {
    let p = SystemParams::new(0.5, 0.01, BoxBound::Finite(0.5), 1.0).with_n(1000);
    let r = run_experiment(&p, 20, 31).unwrap();
    let (_, qt) = experiment_theory(&p).unwrap();
    assert!(qt.xi / qt.zeta.sqrt() > 1.0 && qt.ber > 0.01);
    assert!((qt.ber - q_tail(qt.xi / qt.zeta.sqrt())).abs() < 1e-15);
    assert!((r.ber_quant.mean - qt.ber).abs() < 3.0 * r.ber_quant.se, "{:?} vs {}", r.ber_quant, qt.ber);
}

#[test]
fn w2_shrinks_with_size() {
    // Smaller version of the acceptance check: 5 seed pairs, quantized and box.
    let (mut q_wins, mut b_wins) = (0, 0);
    for seed in 0..5u64 {
        let small = run_experiment(&fig3_point(200, 0.5), 1, 10_000 + seed).unwrap();
        let large = run_experiment(&fig3_point(1000, 0.5), 1, 20_000 + seed).unwrap();
        q_wins += (large.w2_quant.mean < small.w2_quant.mean) as usize;
        b_wins += (large.w2_box.mean < small.w2_box.mean) as usize;
    }
    assert!(q_wins >= 4 && b_wins >= 4, "quant {q_wins}/5, box {b_wins}/5");
}
