mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use shadowlab::perturb::{
    certificate, sample_noise, NoiseKind, NoiseSampler, NoiseSpec, SmoothedModel,
};

fn spec(kind: NoiseKind, sigma: f64, d: usize, n: usize) -> NoiseSpec {
    NoiseSpec::new(kind, sigma).resolved(d, n)
}

#[test]
fn max_directional_deviation_is_within_twice_r_n() {
    let (n, sigma, groups) = (20, 0.5, 2000);
    for (k, kind) in [NoiseKind::Gaussian, NoiseKind::Laplace, NoiseKind::LaplaceGaussian].into_iter().enumerate() {
        for d in [3, 5] {
            let r_n = certificate(kind, d, n, sigma).unwrap().r_n;
            let sampler = NoiseSampler::new(&spec(kind, sigma, d, n), d).unwrap();
            let mut rng = common::rng(100 + k as u64 * 10 + d as u64);
            let maxima: Vec<f64> = (0..groups)
                .map(|_| (0..n).map(|_| sampler.sample(&mut rng)[0].abs()).fold(0.0, f64::max))
                .collect();
            let mean = maxima.iter().sum::<f64>() / groups as f64;
            let sd = (maxima.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (groups - 1) as f64).sqrt();
            let slack = 3.0 * sd / (groups as f64).sqrt();
            assert!(mean <= 2.0 * r_n + slack, "{kind:?} d={d}: mean {mean} vs 2 r_n = {}", 2.0 * r_n);
        }
    }
}

#[test]
fn lipschitz_times_median_norm_is_at_least_d_over_3() {
    for kind in [NoiseKind::Laplace, NoiseKind::LaplaceGaussian] {
        for (d, n) in [(3, 10), (5, 30), (8, 50)] {
            let sigma = 0.2;
            let cert = certificate(kind, d, n, sigma).unwrap();
            let sampler = NoiseSampler::new(&spec(kind, sigma, d, n), d).unwrap();
            let mut rng = common::rng(7 * d as u64);
            let mut norms: Vec<f64> = (0..20_001).map(|_| sampler.sample(&mut rng).norm()).collect();
            norms.sort_by(f64::total_cmp);
            let median = norms[norms.len() / 2];
            assert!(cert.lipschitz.unwrap() * median >= d as f64 / 3.0, "{kind:?} d={d}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn certificates_tie_line_variance_to_lipschitz(d in 3usize..=12, extra in 0usize..=40, sigma in 1e-3f64..10.0) {
        let n = d + extra;
        for kind in [NoiseKind::Laplace, NoiseKind::LaplaceGaussian] {
            let cert = certificate(kind, d, n, sigma).unwrap();
            let l = cert.lipschitz.unwrap();
            prop_assert!(cert.tau >= (1.0 - 1e-12) / (std::f64::consts::E.sqrt() * l));
        }
        let g = certificate(NoiseKind::Gaussian, d, n, sigma).unwrap();
        prop_assert!(g.lipschitz.is_none());
        prop_assert!(g.cutoff_radius > 0.0 && g.r_n > 0.0);
    }

    #[test]
    fn samplers_replay_from_equal_seeds(seed in any::<u64>(), d in 1usize..=8, sigma in 1e-3f64..5.0, which in 0usize..3) {
        let kind = [NoiseKind::Gaussian, NoiseKind::Laplace, NoiseKind::LaplaceGaussian][which];
        let s = spec(kind, sigma, d, d + 10);
        let draw = |seed| {
            let mut rng = common::rng(seed);
            (0..5).map(|_| sample_noise(&s, d, &mut rng).unwrap()).collect::<Vec<DVector<f64>>>()
        };
        prop_assert_eq!(draw(seed), draw(seed));
    }

    #[test]
    fn vanishing_noise_keeps_centers(seed in any::<u64>(), d in 1usize..=5, extra in 0usize..=5) {
        let n = d + extra;
        let mut rng = common::rng(seed);
        let centers = DMatrix::from_fn(n, d, |i, j| ((i * d + j) as f64).sin() / (d as f64).sqrt());
        let c = DVector::from_element(d, 1.0);
        let model = SmoothedModel::unit(centers.clone(), c, NoiseSpec::gaussian(1e-12)).unwrap();
        let inst = model.sample_instance(&mut rng).unwrap();
        prop_assert!((inst.a() - centers).amax() < 1e-9);
        prop_assert!(inst.is_unit());
    }
}
