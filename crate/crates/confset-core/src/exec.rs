//! Replicate execution engine. The parallel path (rayon, `parallel` feature,
//! on by default) and the sequential fallback produce identical output for a
//! given seed: replicate `i` always draws from substream `i` and results are
//! collected by replicate index.

use crate::rng::substream_rng;
use rand_chacha::ChaCha8Rng;

/// Runs `reps` independent replicates and returns their results in replicate
/// order. `f` receives the replicate index and a dedicated RNG substream.
#[cfg(feature = "parallel")]
pub fn run_replicates<T, F>(seed: u64, reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    use rayon::prelude::*;
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream_rng(seed, i);
            f(i, &mut rng)
        })
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_replicates<T, F>(seed: u64, reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    run_replicates_seq(seed, reps, f)
}

/// Sequential reference path, always available (used by the benches to
/// measure the rayon speedup and by tests as a determinism oracle).
pub fn run_replicates_seq<T, F>(seed: u64, reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..reps)
        .map(|i| {
            let mut rng = substream_rng(seed, i);
            f(i, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: u64, rng: &mut ChaCha8Rng| -> (u64, f64) { (i, rng.random()) };
        let par = run_replicates(42, 100, f);
        let seq = run_replicates_seq(42, 100, f);
        assert_eq!(par, seq);
    }
}
