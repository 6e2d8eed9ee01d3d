//! Sampler moments and distribution checks against closed-form laws.

use isdf_core::model::{
    sample_channel_gain, sample_noise, sample_snr, LinkModel, NoiseModel, SnrParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

const N: usize = 1_000_000;

fn link() -> LinkModel {
    let noise = NoiseModel::new(0.1, 10.0, 1.0).unwrap();
    LinkModel::new(0.4, 3.0, 45.0, 60.0, &noise).unwrap()
}

#[test]
fn gain_moments_match_lognormal() {
    let l = link();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let hs: Vec<f64> = (0..N).map(|_| sample_channel_gain(&mut rng, &l)).collect();
    for ell in 1..=4 {
        let k = ell as f64;
        let moment = |j: f64| (j * l.mu_h + 0.5 * j * j * l.sigma_h * l.sigma_h).exp();
        let expected = moment(k);
        let se = ((moment(2.0 * k) - expected * expected) / N as f64).sqrt();
        let got = hs.iter().map(|h| h.powi(ell)).sum::<f64>() / N as f64;
        assert!(
            (got - expected).abs() <= 3.0 * se,
            "moment {ell}: {got} vs {expected} (se {se})"
        );
    }
    // unit average power: E[h²] = 1 by construction
    let m2 = (2.0 * l.mu_h + 2.0 * l.sigma_h * l.sigma_h).exp();
    assert!((m2 - 1.0).abs() < 1e-12);
}

#[test]
fn noise_variance_matches_mixture_power() {
    let noise = NoiseModel::new(0.1, 10.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut s2 = 0.0;
    for _ in 0..N {
        let z = sample_noise(&mut rng, &noise);
        s2 += z * z;
    }
    let var = s2 / N as f64;
    let (p, w, i) = (noise.p, noise.sigma_w2, noise.impulsive_variance());
    let fourth = 3.0 * ((1.0 - p) * w * w + p * (w + i) * (w + i));
    let expected = noise.average_power();
    assert_eq!(expected, 2.0);
    let se = ((fourth - expected * expected) / N as f64).sqrt();
    assert!(
        (var - expected).abs() <= 3.0 * se,
        "{var} vs {expected} (se {se})"
    );
}

#[test]
fn log_snr_passes_chi_square() {
    let snr = SnrParams::new(4.2, 1.38).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 200_000;
    let bins = 40;
    let normal = Normal::new(snr.mu, snr.sigma).unwrap();
    // equiprobable bins under the null
    let edges: Vec<f64> = (1..bins)
        .map(|k| normal.inverse_cdf(k as f64 / bins as f64))
        .collect();
    let mut counts = vec![0u64; bins];
    for _ in 0..n {
        let u = sample_snr(&mut rng, &snr).ln();
        counts[edges.partition_point(|&e| e < u)] += 1;
    }
    let expected = n as f64 / bins as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let crit = ChiSquared::new((bins - 1) as f64)
        .unwrap()
        .inverse_cdf(0.999);
    assert!(stat < crit, "chi2 {stat} >= {crit}");
}

#[test]
fn empirical_cdf_tracks_closed_form() {
    let snr = SnrParams::new(2.0, 0.9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;
    let mut xs: Vec<f64> = (0..n).map(|_| sample_snr(&mut rng, &snr)).collect();
    xs.sort_by(f64::total_cmp);
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = snr.cdf(x).unwrap();
        d = d
            .max((f - i as f64 / n as f64).abs())
            .max((f - (i + 1) as f64 / n as f64).abs());
    }
    // Kolmogorov 0.1% critical value
    assert!(d < 1.95 / (n as f64).sqrt(), "KS distance {d}");
}

#[test]
fn snr_mean_identity() {
    let snr = SnrParams::new(3.0, 1.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..N).map(|_| sample_snr(&mut rng, &snr)).collect();
    let mean = xs.iter().sum::<f64>() / N as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (N - 1) as f64;
    let se = (var / N as f64).sqrt();
    assert!(
        (mean - snr.mean()).abs() <= 3.0 * se,
        "{mean} vs {}",
        snr.mean()
    );
}
