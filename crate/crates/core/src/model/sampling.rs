use rand::Rng;
use rand_distr::StandardNormal;

use super::{LinkModel, NoiseModel, SnrParams};

/// `h = exp(mu_h + sigma_h·g)`, `g ~ N(0,1)`. One normal draw per call, also
/// when `sigma_h == 0`, so the stream position does not depend on the spread.
pub fn sample_channel_gain<R: Rng + ?Sized>(rng: &mut R, link: &LinkModel) -> f64 {
    let g: f64 = rng.sample(StandardNormal);
    (link.mu_h + link.sigma_h * g).exp()
}

/// Log-normal SNR draw, `exp(mu + sigma·g)`.
pub fn sample_snr<R: Rng + ?Sized>(rng: &mut R, snr: &SnrParams) -> f64 {
    let g: f64 = rng.sample(StandardNormal);
    (snr.mu + snr.sigma * g).exp()
}

/// `z = z_W + z_B·z_I`: background normal plus a Bernoulli-gated impulsive
/// normal. Always consumes two normals and one uniform.
pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, noise: &NoiseModel) -> f64 {
    let zw: f64 = rng.sample(StandardNormal);
    let zi: f64 = rng.sample(StandardNormal);
    let hit = rng.random::<f64>() < noise.p;
    let mut z = zw * noise.sigma_w2.sqrt();
    if hit {
        z += zi * noise.impulsive_variance().sqrt();
    }
    z
}
