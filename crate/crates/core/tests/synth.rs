use ebmc_core::synth::{generate, sample_omega, OffsetMode, SynthConfig, SynthInstance};
use ebmc_core::link_eval;
use nalgebra::DMatrix;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn low_rank_part_has_rank_at_most_r() {
    for (r, offset) in [(1, OffsetMode::Zero), (3, OffsetMode::UniformColumns { lo: -3.0, hi: 3.0 })] {
        let cfg = SynthConfig { p: 60, q: 20, r, s: 1.3, omega_fraction: 0.5, offset, seed: r as u64 };
        let inst = generate(&cfg).unwrap();
        let m = DMatrix::from_row_slice(60, 20, inst.m_true.as_slice());
        let low_rank = match offset {
            OffsetMode::Zero => m,
            OffsetMode::UniformColumns { .. } => {
                // row differences cancel the column offsets
                DMatrix::from_fn(59, 20, |i, j| m[(i + 1, j)] - m[(0, j)])
            }
        };
        let sv = low_rank.svd(false, false).singular_values;
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(sv[r - 1] > 1e-6);
        assert!(sv[r..].iter().all(|&v| v < 1e-10 * sv[0].max(1.0)), "{sv:?}");
    }
}

#[test]
fn zero_offsets_bound_entries() {
    let inst = generate(&SynthConfig { s: 0.7, ..SynthConfig::benchmark(3) }).unwrap();
    assert!(inst.m_true.as_slice().iter().all(|v| v.abs() <= 0.7 * 5.0));
    assert_eq!(inst.y.n_observed(), 50_000);
    assert!(inst.true_probs.as_slice().iter().all(|&f| f > 0.0 && f < 1.0));
}

#[test]
fn degenerate_scale_leaves_offsets() {
    let cfg = SynthConfig {
        s: 0.0,
        offset: OffsetMode::UniformColumns { lo: -3.0, hi: 3.0 },
        ..SynthConfig { p: 40, q: 10, ..SynthConfig::benchmark(4) }
    };
    let inst = generate(&cfg).unwrap();
    for j in 0..10 {
        let a = inst.m_true.get(0, j);
        assert!((-3.0..=3.0).contains(&a));
        assert!((0..40).all(|i| inst.m_true.get(i, j) == a));
    }
}

#[test]
fn offsets_make_column_base_rates_heterogeneous() {
    let seeds = 30;
    let mut spread = 0;
    for seed in 0..seeds {
        let cfg = SynthConfig {
            offset: OffsetMode::UniformColumns { lo: -3.0, hi: 3.0 },
            ..SynthConfig::benchmark(seed)
        };
        let inst = generate(&cfg).unwrap();
        let means: Vec<f64> = (0..cfg.q)
            .map(|j| (0..cfg.p).map(|i| inst.true_probs.get(i, j)).sum::<f64>() / cfg.p as f64)
            .collect();
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo < 0.15 && hi > 0.85 {
            spread += 1;
        }
    }
    assert!(spread as f64 >= 0.9 * seeds as f64, "{spread}/{seeds}");
}

#[test]
fn omega_inclusion_is_uniform() {
    let (p, q, size, seeds) = (100, 100, 5000, 10_000u64);
    let mut hits = vec![0u32; p * q];
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, j) in sample_omega(p, q, size, &mut rng).unwrap() {
            hits[i * q + j] += 1;
        }
    }
    let worst = hits
        .iter()
        .map(|&h| (h as f64 / seeds as f64 - 0.5).abs())
        .fold(0.0, f64::max);
    // binomial sd is 0.005 per cell; 0.02 is four of them
    assert!(worst < 0.025, "worst deviation {worst}");
    let within = hits.iter().filter(|&&h| (h as f64 / seeds as f64 - 0.5).abs() <= 0.02).count();
    assert!(within as f64 >= 0.999 * (p * q) as f64);
}

#[test]
fn probit_scale_correspondence() {
    // f(s m | 1) = f(m | 1/s^2): a normal CDF with standard deviation 1/s
    let cfg = SynthConfig { p: 50, q: 10, ..SynthConfig::benchmark(5) };
    let base = generate(&cfg).unwrap();
    for &s in &[0.5, 2.0, 4.0] {
        let scaled = generate(&SynthConfig { s, ..cfg.clone() }).unwrap();
        for (k, &m1) in base.m_true.as_slice().iter().enumerate() {
            let sigma = 1.0 / s;
            let via_sigma = Normal::new(0.0, sigma).unwrap().cdf(m1);
            let direct = scaled.true_probs.as_slice()[k];
            // the reference CDF carries roughly 1e-11 of its own error
            assert!((direct - via_sigma).abs() < 1e-9, "{direct} {via_sigma} {m1} {s}");
            assert!((direct - link_eval(s * m1).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn omega_edge_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    assert_eq!(sample_omega(3, 4, 12, &mut rng).unwrap().len(), 12);
    assert_eq!(sample_omega(1, 1, 1, &mut rng).unwrap(), vec![(0, 0)]);
    assert!(sample_omega(3, 4, 0, &mut rng).is_err());
    assert!(sample_omega(3, 4, 13, &mut rng).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let base = SynthConfig { p: 10, q: 8, ..SynthConfig::benchmark(0) };
    assert!(generate(&SynthConfig { r: 0, ..base.clone() }).is_err());
    assert!(generate(&SynthConfig { r: 9, ..base.clone() }).is_err());
    assert!(generate(&SynthConfig { s: -1.0, ..base.clone() }).is_err());
    assert!(generate(&SynthConfig { omega_fraction: 0.0, ..base.clone() }).is_err());
    assert!(generate(&SynthConfig { omega_fraction: 1.5, ..base.clone() }).is_err());
    assert!(generate(&SynthConfig { omega_fraction: 1.0, r: 8, ..base }).is_ok());
}

#[test]
fn instance_directory_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        p: 30,
        q: 12,
        offset: OffsetMode::UniformColumns { lo: -3.0, hi: 3.0 },
        ..SynthConfig::benchmark(11)
    };
    let inst = generate(&cfg).unwrap();
    inst.write_dir(dir.path()).unwrap();
    let back = SynthInstance::read_dir(dir.path()).unwrap();
    assert_eq!(back.config, inst.config);
    assert_eq!(back.m_true, inst.m_true);
    assert_eq!(back.true_probs, inst.true_probs);
    assert_eq!(back.y, inst.y);
    let (cells, probs) = back.unobserved_truth();
    assert_eq!(cells.len(), 30 * 12 - inst.y.n_observed());
    assert!(cells.iter().all(|&(i, j)| !inst.y.is_observed(i, j)));
    assert_eq!(probs[0], inst.true_probs.get(cells[0].0, cells[0].1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), r in 1usize..4) {
        let cfg = SynthConfig { p: 15, q: 8, r, s: 1.0, omega_fraction: 0.3, offset: OffsetMode::Zero, seed };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        prop_assert_eq!(a.m_true, b.m_true);
        prop_assert_eq!(a.y, b.y);
    }

    #[test]
    fn omega_is_a_sorted_set_of_the_right_size(p in 1usize..20, q in 1usize..20, frac in 0.01f64..=1.0, seed in any::<u64>()) {
        let size = ((p * q) as f64 * frac).ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = sample_omega(p, q, size, &mut rng).unwrap();
        prop_assert_eq!(cells.len(), size);
        prop_assert!(cells.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(cells.iter().all(|&(i, j)| i < p && j < q));
    }
}
