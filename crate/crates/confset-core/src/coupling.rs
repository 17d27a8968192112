//! Joint construction of the statistics T_{jkn} under the true signal and
//! under the least-favorable signal on one probability space, such that the
//! comparison between the two holds pathwise rather than only in
//! distribution. Used for validation only; the region construction never
//! calls it.

use crate::error::{Error, Result};
use crate::seqmodel::{optimal_set, CandidateFamily, SignalSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Exp1, StandardNormal};

/// Time points t_k = sum_{i<=k} theta_i^2/sigma^2 and their least-favorable
/// surrogates t*_k = t_anchor + k - anchor, with anchor the smallest index
/// in the optimal set K_n(theta). Always t* >= t, with equality exactly on
/// K_n(theta).
#[derive(Debug, Clone)]
pub struct CouplingTimepoints {
    pub t: Vec<f64>,
    pub t_star: Vec<f64>,
    pub anchor: usize,
    pub optimal: Vec<usize>,
}

pub fn build_timepoints(spec: &SignalSpec) -> Result<CouplingTimepoints> {
    let n = spec.n();
    let snr = spec.theta_over_sigma();
    let mut t = Vec::with_capacity(n + 1);
    t.push(0.0);
    for v in &snr {
        t.push(t.last().unwrap() + v * v);
    }
    let optimal = optimal_set(spec, &CandidateFamily::Nested(n))?;
    let anchor = optimal[0];
    let mut t_star: Vec<f64> = (0..=n)
        .map(|k| t[anchor] + k as f64 - anchor as f64)
        .collect();
    // On the optimal set the surrogate equals the true time point
    // mathematically; force it bitwise so downstream pathwise comparisons
    // are exact.
    for &k in &optimal {
        t_star[k] = t[k];
    }
    for k in 0..=n {
        if t_star[k] < t[k] - 1e-9 * (1.0 + t[k]) {
            return Err(Error::numeric(format!(
                "timepoint invariant violated at k={k}: t*={} < t={}",
                t_star[k], t[k]
            )));
        }
    }
    Ok(CouplingTimepoints {
        t,
        t_star,
        anchor,
        optimal,
    })
}

/// Flat storage of one value per pair 0 <= j < k <= n.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable {
    n: usize,
    values: Vec<f64>,
}

impl PairTable {
    fn with_capacity(n: usize) -> Self {
        Self {
            n,
            values: Vec::with_capacity(n * (n + 1) / 2),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn index(&self, j: usize, k: usize) -> usize {
        debug_assert!(j < k && k <= self.n);
        j * self.n - j * (j.saturating_sub(1)) / 2 + (k - j - 1)
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[self.index(j, k)]
    }
}

/// One coupled draw: the full pair process under theta (`t`) and under the
/// least-favorable surrogate (`t_star`), built from shared randomness.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    pub t: PairTable,
    pub t_star: PairTable,
}

/// Draws one coupled realization. A single unit-rate Poisson process
/// (exponential inter-arrival accumulation up to max(t*)/2), one Gaussian
/// pool G_1..G_n, one Gaussian pool Z_1..Z_{2 Pi(max)}, and one chi^2_m
/// variance draw are shared between the two tables; `m = None` means known
/// variance (scale factor one).
pub fn sample_coupled_pair(
    tp: &CouplingTimepoints,
    m: Option<u32>,
    rng: &mut ChaCha8Rng,
) -> CoupledPair {
    let n = tp.t.len() - 1;
    let t_max = tp.t_star[n].max(tp.t[n]) / 2.0;

    let mut arrivals: Vec<f64> = Vec::new();
    let mut clock = 0.0;
    loop {
        clock += rng.sample::<f64, _>(Exp1);
        if clock > t_max {
            break;
        }
        arrivals.push(clock);
    }

    // Pi evaluated at each t_k/2 and t*_k/2. Counts at bitwise-equal times
    // are identical, which makes the equality cases of the coupling exact.
    let count_at = |s: f64| arrivals.partition_point(|&a| a <= s);
    let pi_t: Vec<usize> = tp.t.iter().map(|&t| count_at(t / 2.0)).collect();
    let pi_star: Vec<usize> = tp.t_star.iter().map(|&t| count_at(t / 2.0)).collect();

    let mut g_prefix = Vec::with_capacity(n + 1);
    g_prefix.push(0.0);
    for _ in 0..n {
        let g: f64 = rng.sample(StandardNormal);
        g_prefix.push(g_prefix.last().unwrap() + g * g);
    }
    let mut z_prefix = Vec::with_capacity(2 * arrivals.len() + 1);
    z_prefix.push(0.0);
    for _ in 0..2 * arrivals.len() {
        let z: f64 = rng.sample(StandardNormal);
        z_prefix.push(z_prefix.last().unwrap() + z * z);
    }

    let factor = match m {
        None => 1.0,
        Some(m) => {
            let chi = ChiSquared::new(m as f64).expect("m >= 1");
            m as f64 / rng.sample::<f64, _>(chi)
        }
    };

    let mut t_table = PairTable::with_capacity(n);
    let mut star_table = PairTable::with_capacity(n);
    for j in 0..n {
        for k in (j + 1)..=n {
            let gauss = g_prefix[k] - g_prefix[j];
            let scale = factor / (k - j) as f64;
            t_table
                .values
                .push(scale * (gauss + z_prefix[2 * pi_t[k]] - z_prefix[2 * pi_t[j]]));
            star_table
                .values
                .push(scale * (gauss + z_prefix[2 * pi_star[k]] - z_prefix[2 * pi_star[j]]));
        }
    }
    CoupledPair {
        t: t_table,
        t_star: star_table,
    }
}

/// Checks the pathwise sign pattern of the coupling on one draw: for every
/// j in the optimal set, T <= T* against all k > j; for every k in the
/// optimal set, T >= T* against all j < k. Returns the first violating pair,
/// if any. The construction makes this hold exactly, so any violation is a
/// bug, not noise.
pub fn check_ordering(pair: &CoupledPair, tp: &CouplingTimepoints) -> Option<(usize, usize)> {
    let n = pair.t.n();
    for &j in &tp.optimal {
        for k in (j + 1)..=n {
            if pair.t.get(j, k) > pair.t_star.get(j, k) {
                return Some((j, k));
            }
        }
    }
    for &k in &tp.optimal {
        for j in 0..k {
            if pair.t.get(j, k) < pair.t_star.get(j, k) {
                return Some((j, k));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream_rng;
    use crate::seqmodel::VarianceModel;
    use crate::stats::{ks_critical, ks_two_sample};
    use crate::seqmodel::simulate_observation;

    #[test]
    fn timepoints_least_favorable() {
        let spec = SignalSpec::least_favorable(6, 2.0).unwrap();
        let tp = build_timepoints(&spec).unwrap();
        for k in 0..=6 {
            assert_eq!(tp.t[k], k as f64);
            assert_eq!(tp.t_star[k], k as f64);
        }
        assert_eq!(tp.optimal, (0..=6).collect::<Vec<_>>());
        assert_eq!(tp.anchor, 0);
    }

    #[test]
    fn timepoints_zero_signal() {
        let spec = SignalSpec::zero(5, 1.0).unwrap();
        let tp = build_timepoints(&spec).unwrap();
        assert_eq!(tp.anchor, 0);
        assert_eq!(tp.optimal, vec![0]);
        for k in 0..=5 {
            assert_eq!(tp.t[k], 0.0);
            assert_eq!(tp.t_star[k], k as f64);
        }
    }

    #[test]
    fn timepoints_handmade_signal() {
        // risks: k=0: 5.25, k=1: 2.25, k=2: 2.25, k=3: 3 -> K = {1,2}, anchor 1
        let spec = SignalSpec::new(vec![2.0, 1.0, 0.5], 1.0).unwrap();
        let tp = build_timepoints(&spec).unwrap();
        assert_eq!(tp.anchor, 1);
        assert_eq!(tp.optimal, vec![1, 2]);
        assert_eq!(tp.t, vec![0.0, 4.0, 5.0, 5.25]);
        assert_eq!(tp.t_star, vec![3.0, 4.0, 5.0, 6.0]);
        for k in 0..=3 {
            let on_optimal = tp.optimal.contains(&k);
            assert_eq!(tp.t_star[k] == tp.t[k], on_optimal, "equality pattern at {k}");
        }
    }

    #[test]
    fn star_signal_gives_identical_tables() {
        let spec = SignalSpec::least_favorable(8, 1.0).unwrap();
        let tp = build_timepoints(&spec).unwrap();
        for sub in 0..10 {
            let mut rng = substream_rng(11, sub);
            let pair = sample_coupled_pair(&tp, Some(12), &mut rng);
            assert_eq!(pair.t, pair.t_star);
        }
    }

    #[test]
    fn ordering_holds_on_every_draw() {
        let spec = SignalSpec::new(vec![2.0, 1.0, 0.5], 1.0).unwrap();
        let tp = build_timepoints(&spec).unwrap();
        for sub in 0..500 {
            let mut rng = substream_rng(23, sub);
            let pair = sample_coupled_pair(&tp, Some(8), &mut rng);
            assert_eq!(check_ordering(&pair, &tp), None);
            let mut rng = substream_rng(24, sub);
            let pair = sample_coupled_pair(&tp, None, &mut rng);
            assert_eq!(check_ordering(&pair, &tp), None);
        }
    }

    #[test]
    fn marginal_matches_direct_simulation() {
        // T~_{0,n} should have the same law as sum X_i^2 / (n sigma_hat^2)
        // for X from the actual model.
        let spec = SignalSpec::new(vec![1.5, -0.5, 0.0, 0.25], 1.0).unwrap();
        let tp = build_timepoints(&spec).unwrap();
        let n = 4;
        let reps = 4000u64;
        let var = VarianceModel::ChiSquared(10);
        let mut coupled = Vec::with_capacity(reps as usize);
        let mut direct = Vec::with_capacity(reps as usize);
        for sub in 0..reps {
            let mut rng = substream_rng(31, sub);
            let pair = sample_coupled_pair(&tp, var.m(), &mut rng);
            coupled.push(pair.t.get(0, n));
            let obs = simulate_observation(&spec, &var, 32, sub);
            let s: f64 = obs.x.iter().map(|x| x * x).sum();
            direct.push(s / (n as f64 * obs.sigma_hat2));
        }
        let d = ks_two_sample(&coupled, &direct);
        let crit = ks_critical(0.01, coupled.len(), direct.len());
        assert!(d < crit, "KS {d} >= critical {crit}");
    }

    #[test]
    fn pair_table_indexing() {
        let spec = SignalSpec::zero(4, 1.0).unwrap();
        let tp = build_timepoints(&spec).unwrap();
        let mut rng = substream_rng(7, 0);
        let pair = sample_coupled_pair(&tp, None, &mut rng);
        assert_eq!(pair.t.values.len(), 4 * 5 / 2);
        // spot-check last pair index maps to final slot
        let idx = pair.t.index(3, 4);
        assert_eq!(idx, pair.t.values.len() - 1);
    }
}
