//! Hand-computed values checked through the public API.

use proptest::prelude::*;
use ustat_core::calibration::{
    bootstrap_null_t, bootstrap_pvalues, normal_pvalues, truncation_rate, BootstrapNull, PoolKind, Sided,
};
use ustat_core::kernels::{builtin_one_sample, builtin_two_sample, OneSampleKernel, TwoSampleKernel};
use ustat_core::multiple_testing::{bh_procedure, fdr_accounting, skewness_diagnostic};
use ustat_core::simharness::{signal_count, ErrorLaw};
use ustat_core::tstat::{corrected_tail, moment_summary, two_sample_t, MomentSummary};
use ustat_core::ustat::{jackknife_two_sample, mann_whitney_fast, u_one_sample, u_two_sample, TwoSampleData};

fn data(x: &[f64], y: &[f64]) -> TwoSampleData {
    TwoSampleData::new(x.to_vec(), y.to_vec()).unwrap()
}

#[test]
fn mann_whitney_four_pairs() {
    // Pairs (1,2), (1,4), (3,4) satisfy x ≤ y; (3,2) does not.
    let d = data(&[1.0, 3.0], &[2.0, 4.0]);
    let mw = builtin_two_sample(TwoSampleKernel::MannWhitney);
    assert_eq!(u_two_sample(&mw, &d).unwrap(), 0.25);
    let g = jackknife_two_sample(&mw, &d).unwrap();
    assert_eq!((g.sigma1_hat2, g.sigma2_hat2, g.sigma_nbar_hat2), (0.125, 0.125, 0.125));
    let f = mann_whitney_fast(&d).unwrap();
    assert_eq!(f.u, 0.75);
    assert_eq!((f.sigma_nbar_hat2, f.statistic), (0.125, g.statistic));
}

#[test]
fn lehmann_single_combination() {
    let d = data(&[0.0, 1.0], &[0.0, 3.0]);
    let k = builtin_two_sample(TwoSampleKernel::Lehmann);
    assert_eq!(u_two_sample(&k, &d).unwrap(), 0.5);
}

#[test]
fn one_sample_kernels() {
    let gini = builtin_one_sample(OneSampleKernel::Gini);
    assert_eq!(u_one_sample(&gini, &[0.0, 1.0, 3.0]).unwrap(), 2.0);
    let t = builtin_one_sample(OneSampleKernel::TStat);
    let x = [0.5, -1.25, 2.0, 3.75];
    assert_eq!(u_one_sample(&t, &x).unwrap(), 1.25);
}

#[test]
fn welch_t_by_hand() {
    let t = two_sample_t(&[0.0, 2.0], &[-1.0, 1.0]).unwrap();
    assert!((t - 0.5f64.sqrt()).abs() < 1e-15);
    let m = moment_summary(&[0.0, 0.0, 3.0]).unwrap();
    assert_eq!((m.mean, m.var, m.gamma3), (1.0, 3.0, 2.0));
}

#[test]
fn exponential_skewness_terms() {
    let e = ErrorLaw::Exponential { scale: 2.0 };
    assert_eq!((e.variance(), e.third_central_moment()), (4.0, 16.0));
    let a = MomentSummary::population(100, 0.0, 4.0, 16.0);
    let mirrored = MomentSummary::population(100, 0.0, 4.0, -16.0);
    let t = corrected_tail(2.5, &a, &mirrored).unwrap();
    assert!((t.correction.ln() + 0.7365).abs() < 1e-4, "{}", t.correction.ln());
    assert!((t.correction - 0.4787).abs() < 1e-4);
    let d = skewness_diagnostic(&[(a, mirrored)], &[0]).unwrap();
    assert!((d.c0_hat - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn normal_and_pool_pvalues() {
    let p = normal_pvalues(&[1.959964], Sided::TwoSided).unwrap();
    assert!((p.values[0] - 0.05).abs() < 1e-6);
    let null = BootstrapNull {
        pool: vec![1.0, 2.0, 3.0],
        kind: PoolKind::Absolute,
        m: 1,
        b: 3,
        discarded: 0,
    };
    let p = bootstrap_pvalues(&null, &[2.0], Sided::TwoSided).unwrap();
    assert!((p.values[0] - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn step_up_and_accounting() {
    let out = bh_procedure(&[0.01, 0.02, 0.04, 0.9], 0.1).unwrap();
    assert_eq!((out.k_hat, out.rejected.clone()), (3, vec![0, 1, 2]));
    let r = fdr_accounting(&out, &[false, false, true, true]).unwrap();
    assert_eq!((r.v, r.r), (1, 3));
    assert!((r.fdp - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn design_arithmetic() {
    assert_eq!(signal_count(1000), 50);
    assert!((truncation_rate(64, 4.0) - 16f64.powf(1.0 / 6.0)).abs() < 1e-15);
    assert!((truncation_rate(64, 4.0) - 1.5874).abs() < 1e-4);
    let beta = ErrorLaw::Beta { a: 10.0, b: 10.0 };
    assert!((beta.variance() - 1.0 / 84.0).abs() < 1e-16);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bootstrap_pvalues_are_probabilities(seed in any::<u64>(), shift in -2.0f64..2.0) {
        let mut rng = ustat_core::rng::CounterRng::new(seed, &[]);
        let feats: Vec<TwoSampleData> = (0..5)
            .map(|_| {
                let x = (0..8).map(|_| rng.standard_normal()).collect();
                let y = (0..6).map(|_| rng.standard_normal() + shift).collect();
                TwoSampleData::new(x, y).unwrap()
            })
            .collect();
        let stats: Vec<f64> = feats.iter().map(|d| two_sample_t(&d.x, &d.y).unwrap()).collect();
        let null = bootstrap_null_t(&feats, 30, seed, PoolKind::Absolute).unwrap();
        let p = bootstrap_pvalues(&null, &stats, Sided::TwoSided).unwrap();
        prop_assert!(p.values.iter().all(|v| (0.0..=1.0).contains(v)));
        // Larger |T| never gets a larger p-value.
        for i in 0..5 {
            for j in 0..5 {
                if stats[i].abs() > stats[j].abs() {
                    prop_assert!(p.values[i] <= p.values[j]);
                }
            }
        }
    }
}
