use ebmc_core::metrics::{
    accuracy, bin_index, cross_entropy, ece, hellinger_avg, kl_divergence_avg, mean_entropy,
    reliability_bins, DEFAULT_BINS,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Scalar-loop oracles written directly from the definitions.

fn kl_oracle(f: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..f.len() {
        let mut term = 0.0;
        if f[k] > 0.0 {
            term += f[k] * (f[k] / p[k]).ln();
        }
        if f[k] < 1.0 {
            term += (1.0 - f[k]) * ((1.0 - f[k]) / (1.0 - p[k])).ln();
        }
        s += term;
    }
    s / f.len() as f64
}

fn hellinger_oracle(f: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..f.len() {
        let a = p[k].sqrt() - f[k].sqrt();
        let b = (1.0 - p[k]).sqrt() - (1.0 - f[k]).sqrt();
        s += a * a + b * b;
    }
    s / f.len() as f64
}

fn accuracy_oracle(p: &[f64], y: &[u8]) -> f64 {
    let mut hits = 0;
    for k in 0..p.len() {
        let guess = if p[k] >= 0.5 { 1 } else { 0 };
        if guess == y[k] {
            hits += 1;
        }
    }
    hits as f64 / p.len() as f64
}

fn ce_oracle(p: &[f64], y: &[u8]) -> f64 {
    let mut s = 0.0;
    for k in 0..p.len() {
        let yk = f64::from(y[k]);
        s -= yk * p[k].ln() + (1.0 - yk) * (1.0 - p[k]).ln();
    }
    s / p.len() as f64
}

fn ece_oracle(p: &[f64], y: &[u8], k_bins: usize) -> f64 {
    let mut total = 0.0;
    for k in 1..=k_bins {
        let lo = (k - 1) as f64 / k_bins as f64;
        let hi = k as f64 / k_bins as f64;
        let members: Vec<usize> = (0..p.len())
            .filter(|&c| p[c] >= lo && (p[c] < hi || (k == k_bins && p[c] <= 1.0)))
            .collect();
        if members.is_empty() {
            continue;
        }
        let pred = members.iter().map(|&c| p[c]).sum::<f64>() / members.len() as f64;
        let real = members.iter().map(|&c| f64::from(y[c])).sum::<f64>() / members.len() as f64;
        total += members.len() as f64 / p.len() as f64 * (pred - real).abs();
    }
    total
}

#[test]
fn kl_examples() {
    assert_eq!(kl_divergence_avg(&[0.2, 0.7], &[0.2, 0.7]).unwrap(), 0.0);
    assert!((kl_divergence_avg(&[1.0], &[0.5]).unwrap() - std::f64::consts::LN_2).abs() < 1e-10);
    let v = kl_divergence_avg(&[0.975], &[0.5]).unwrap();
    assert!((v - (0.975 * 1.95f64.ln() + 0.025 * 0.05f64.ln())).abs() < 1e-10);
    // quoted as 0.5765; the expression evaluates to 0.57624
    assert!((v - 0.5765).abs() < 5e-4);
    assert_eq!(kl_divergence_avg(&[0.3], &[0.0]).unwrap(), f64::INFINITY);
    assert_eq!(kl_divergence_avg(&[0.3], &[1.0]).unwrap(), f64::INFINITY);
    assert_eq!(kl_divergence_avg(&[0.0], &[0.0]).unwrap(), 0.0);
    assert!(kl_divergence_avg(&[0.3], &[0.3, 0.4]).is_err());
}

#[test]
fn hellinger_examples() {
    assert_eq!(hellinger_avg(&[0.4], &[0.4]).unwrap(), 0.0);
    assert!((hellinger_avg(&[1.0], &[0.0]).unwrap() - 2.0).abs() < 1e-10);
    let v = hellinger_avg(&[0.5], &[1.0]).unwrap();
    assert!((v - ((1.0 - 0.5f64.sqrt()).powi(2) + 0.5)).abs() < 1e-10);
    assert!((v - 0.5858).abs() < 1e-4);
    assert!(hellinger_avg(&[], &[]).is_err());
}

#[test]
fn accuracy_examples() {
    assert!((accuracy(&[0.9, 0.1], &[1, 0]).unwrap() - 1.0).abs() < 1e-10);
    assert!((accuracy(&[0.5], &[1]).unwrap() - 1.0).abs() < 1e-10);
    assert!((accuracy(&[0.4, 0.6, 0.7], &[1, 0, 1]).unwrap() - 1.0 / 3.0).abs() < 1e-10);
    assert!(accuracy(&[0.4], &[1, 0]).is_err());
}

#[test]
fn cross_entropy_examples() {
    assert!((cross_entropy(&[0.5; 3], &[1, 0, 1]).unwrap() - std::f64::consts::LN_2).abs() < 1e-10);
    assert!((cross_entropy(&[0.975], &[1]).unwrap() - 0.025_317_807_984_289_9).abs() < 1e-10);
    assert!((cross_entropy(&[0.975], &[0]).unwrap() - 3.688_879_454_113_936).abs() < 1e-10);
    assert_eq!(cross_entropy(&[1.0], &[0]).unwrap(), f64::INFINITY);
}

#[test]
fn reliability_examples() {
    let bins = reliability_bins(&[0.05, 0.95], &[0, 1], 10).unwrap();
    assert_eq!(bins.k_bins(), 10);
    assert_eq!(bins.bins[0].count, 1);
    assert_eq!(bins.bins[9].count, 1);
    assert_eq!(bins.bins[0].empirical_freq, Some(0.0));
    assert_eq!(bins.bins[9].empirical_freq, Some(1.0));
    assert!(bins.bins[1..9].iter().all(|b| b.is_empty() && b.pred_mean.is_none()));

    assert_eq!(bin_index(0.1, 10), 1);
    assert_eq!(reliability_bins(&[0.1], &[1], 10).unwrap().bins[1].count, 1);
    assert_eq!(bin_index(1.0, 10), 9);
    assert_eq!(reliability_bins(&[1.0], &[1], 10).unwrap().bins[9].count, 1);
    assert_eq!(bin_index(0.0, 10), 0);
    for k in 1..10 {
        let edge = k as f64 / 10.0;
        assert_eq!(bin_index(edge, 10), k, "edge {edge}");
    }
    assert!(reliability_bins(&[0.5], &[1], 0).is_err());
}

#[test]
fn ece_examples() {
    let bins = reliability_bins(&[0.7, 0.8], &[1, 0], 1).unwrap();
    assert!((ece(&bins, 2).unwrap() - 0.25).abs() < 1e-10);

    // bin of 0.2 has real 0.1, bin of 0.8 has real 0.5: gaps 0.1 and 0.3
    let mut p = vec![0.2; 10];
    p.extend(vec![0.8; 10]);
    let mut y = vec![0u8; 20];
    y[0] = 1;
    for v in &mut y[10..15] {
        *v = 1;
    }
    let bins = reliability_bins(&p, &y, DEFAULT_BINS).unwrap();
    assert!((ece(&bins, 20).unwrap() - 0.2).abs() < 1e-10);

    let bins = reliability_bins(&[0.25, 0.75, 0.75, 0.25], &[0, 1, 1, 0], 2).unwrap();
    let calibrated = reliability_bins(&[0.0, 1.0], &[0, 1], 2).unwrap();
    assert!(ece(&calibrated, 2).unwrap().abs() < 1e-12);
    assert!(ece(&bins, 5).is_err());
}

#[test]
fn csv_layout() {
    let bins = reliability_bins(&[0.05, 0.95], &[0, 1], 4).unwrap();
    let mut buf = Vec::new();
    bins.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "bin_index,lower,upper,count,pred_mean,empirical_freq");
    assert_eq!(lines[1], "1,0,0.25,1,0.05,0");
    assert_eq!(lines[2], "2,0.25,0.5,0,,");
    assert_eq!(lines.len(), 5);
}

#[test]
fn cross_entropy_tracks_entropy_plus_kl() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 100_000;
    let truth: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.98)).collect();
    let pred: Vec<f64> = truth.iter().map(|f| (f + rng.random_range(-0.1..0.1)).clamp(0.01, 0.99)).collect();
    let outcomes: Vec<u8> = truth.iter().map(|&f| u8::from(rng.random::<f64>() < f)).collect();
    let ce = cross_entropy(&pred, &outcomes).unwrap();
    let expected = mean_entropy(&truth) + kl_divergence_avg(&truth, &pred).unwrap();
    assert!((ce - expected).abs() < 0.01, "{ce} vs {expected}");
}

fn cells() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<u8>)> {
    (1usize..=10).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.0f64..=1.0, n),
            proptest::collection::vec(1e-6f64..1.0 - 1e-6, n),
            proptest::collection::vec(0u8..2, n),
        )
    })
}

proptest! {
    #[test]
    fn metrics_match_oracles((truth, pred, y) in cells(), k_bins in 1usize..=12) {
        let tol = 1e-12;
        prop_assert!((kl_divergence_avg(&truth, &pred).unwrap() - kl_oracle(&truth, &pred)).abs() < tol);
        prop_assert!((hellinger_avg(&truth, &pred).unwrap() - hellinger_oracle(&truth, &pred)).abs() < tol);
        prop_assert!((accuracy(&pred, &y).unwrap() - accuracy_oracle(&pred, &y)).abs() < tol);
        prop_assert!((cross_entropy(&pred, &y).unwrap() - ce_oracle(&pred, &y)).abs() < tol);
        let bins = reliability_bins(&pred, &y, k_bins).unwrap();
        prop_assert!((ece(&bins, pred.len()).unwrap() - ece_oracle(&pred, &y, k_bins)).abs() < tol);
    }

    #[test]
    fn metric_ranges((truth, pred, y) in cells(), k_bins in 1usize..=12) {
        let kl = kl_divergence_avg(&truth, &pred).unwrap();
        let h = hellinger_avg(&truth, &pred).unwrap();
        prop_assert!(kl >= 0.0 && h >= 0.0 && h <= 2.0);
        prop_assert!(cross_entropy(&pred, &y).unwrap() >= 0.0);
        let bins = reliability_bins(&pred, &y, k_bins).unwrap();
        prop_assert_eq!(bins.total(), pred.len());
        let e = ece(&bins, pred.len()).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        for b in &bins.bins {
            if let Some(m) = b.pred_mean {
                prop_assert!(m >= b.lower && m <= b.upper);
            }
        }
    }

    #[test]
    fn divergences_vanish_only_at_equality(truth in proptest::collection::vec(0.0f64..=1.0, 1..10)) {
        prop_assert_eq!(kl_divergence_avg(&truth, &truth).unwrap(), 0.0);
        prop_assert!(hellinger_avg(&truth, &truth).unwrap() < 1e-12);
        let mut moved = truth.clone();
        moved[0] = if truth[0] > 0.5 { truth[0] - 0.1 } else { truth[0] + 0.1 };
        prop_assert!(kl_divergence_avg(&truth, &moved).unwrap() > 0.0);
        prop_assert!(hellinger_avg(&truth, &moved).unwrap() > 0.0);
    }

    #[test]
    fn ece_ignores_cell_order((_, pred, y) in cells(), seed in any::<u64>()) {
        let mut idx: Vec<usize> = (0..pred.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in (1..idx.len()).rev() {
            idx.swap(k, rng.random_range(0..=k));
        }
        let p2: Vec<f64> = idx.iter().map(|&k| pred[k]).collect();
        let y2: Vec<u8> = idx.iter().map(|&k| y[k]).collect();
        let a = ece(&reliability_bins(&pred, &y, 10).unwrap(), pred.len()).unwrap();
        let b = ece(&reliability_bins(&p2, &y2, 10).unwrap(), pred.len()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
