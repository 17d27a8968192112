//! Shared helpers for the integration suites.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};

/// Direct noncentral chi-square sampler, independent of the library's
/// series code: (Z + delta)^2 plus a central chi^2_{k-1} drawn as
/// Gamma((k-1)/2, scale 2).
pub fn sample_ncchi2(k: u32, delta2: f64, rng: &mut ChaCha8Rng) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let head = (z + delta2.sqrt()) * (z + delta2.sqrt());
    if k == 1 {
        head
    } else {
        let gamma = Gamma::new((k - 1) as f64 / 2.0, 2.0).expect("valid shape");
        head + rng.sample::<f64, _>(gamma)
    }
}

/// Binomial standard error for an empirical probability estimate.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
