//! Gaussian sequence data model: signals, observations, variance estimation,
//! exact risks and losses, estimated risks, and candidate families.

use crate::error::{Error, Result};
use crate::rng::{substream_rng, RngTag};
use rand::Rng;
use rand_distr::{ChiSquared, StandardNormal};

/// A signal vector theta with noise level sigma.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    theta: Vec<f64>,
    sigma: f64,
}

impl SignalSpec {
    pub fn new(theta: Vec<f64>, sigma: f64) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::invalid("signal must have length >= 1"));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("signal entries must be finite"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("sigma = {sigma} must be positive")));
        }
        Ok(Self { theta, sigma })
    }

    /// Least-favorable signal: every coordinate equal to sigma, so all nested
    /// candidates share the same risk n sigma^2.
    pub fn least_favorable(n: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![sigma; n], sigma)
    }

    pub fn zero(n: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![0.0; n], sigma)
    }

    /// Polynomial decay theta_i = amplitude * i^{-exponent}.
    pub fn polynomial_decay(n: usize, sigma: f64, amplitude: f64, exponent: f64) -> Result<Self> {
        let theta = (1..=n)
            .map(|i| amplitude * (i as f64).powf(-exponent))
            .collect();
        Self::new(theta, sigma)
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Signal-to-noise vector theta / sigma.
    pub fn theta_over_sigma(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t / self.sigma).collect()
    }
}

/// Assumption on the variance estimator: sigma known, or an independent
/// chi^2_m-scaled estimator with m degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceModel {
    Known,
    ChiSquared(u32),
}

impl VarianceModel {
    pub fn from_m(m: Option<u32>) -> Result<Self> {
        match m {
            None => Ok(VarianceModel::Known),
            Some(0) => Err(Error::invalid("m must be >= 1")),
            Some(m) => Ok(VarianceModel::ChiSquared(m)),
        }
    }

    /// Degrees of freedom; `None` means sigma is known (m = infinity).
    pub fn m(&self) -> Option<u32> {
        match self {
            VarianceModel::Known => None,
            VarianceModel::ChiSquared(m) => Some(*m),
        }
    }
}

/// One realized observation X = theta + sigma * eps with its variance
/// estimate and seed provenance.
#[derive(Debug, Clone)]
pub struct Observation {
    pub x: Vec<f64>,
    pub sigma_hat2: f64,
    pub rng_tag: RngTag,
}

/// Family of candidate models: nested prefixes 0..n or an explicit list of
/// index sets (1-based, sorted, deduplicated).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidateFamily {
    Nested(usize),
    Explicit { n: usize, sets: Vec<Vec<usize>> },
}

impl CandidateFamily {
    pub fn nested(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("nested family requires n >= 1"));
        }
        Ok(CandidateFamily::Nested(n))
    }

    pub fn explicit(n: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || sets.is_empty() {
            return Err(Error::invalid("family must be nonempty with n >= 1"));
        }
        let mut canon: Vec<Vec<usize>> = Vec::with_capacity(sets.len());
        for mut s in sets {
            s.sort_unstable();
            s.dedup();
            if s.iter().any(|&i| i < 1 || i > n) {
                return Err(Error::invalid(format!(
                    "index set {s:?} contains indices outside 1..={n}"
                )));
            }
            if !canon.contains(&s) {
                canon.push(s);
            }
        }
        Ok(CandidateFamily::Explicit { n, sets: canon })
    }

    pub fn n(&self) -> usize {
        match self {
            CandidateFamily::Nested(n) => *n,
            CandidateFamily::Explicit { n, .. } => *n,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            CandidateFamily::Nested(n) => n + 1,
            CandidateFamily::Explicit { sets, .. } => sets.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lists every candidate as an explicit index set (1-based, sorted).
    /// For `Nested` these are the prefixes {}, {1}, ..., {1..n}.
    pub fn materialize(&self) -> Vec<Vec<usize>> {
        match self {
            CandidateFamily::Nested(n) => (0..=*n).map(|k| (1..=k).collect()).collect(),
            CandidateFamily::Explicit { sets, .. } => sets.clone(),
        }
    }
}

/// Draws X = theta + sigma * eps and an independent sigma_hat^2; fully
/// determined by (seed, substream).
pub fn simulate_observation(
    spec: &SignalSpec,
    var: &VarianceModel,
    seed: u64,
    substream: u64,
) -> Observation {
    let mut rng = substream_rng(seed, substream);
    let sigma = spec.sigma();
    let x = spec
        .theta()
        .iter()
        .map(|&t| t + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let sigma_hat2 = match var {
        VarianceModel::Known => sigma * sigma,
        VarianceModel::ChiSquared(m) => {
            let chi = ChiSquared::new(*m as f64).expect("m >= 1");
            sigma * sigma * rng.sample(chi) / *m as f64
        }
    };
    Observation {
        x,
        sigma_hat2,
        rng_tag: RngTag { seed, substream },
    }
}

/// Exact risk of the nested candidate k: sum_{i>k} theta_i^2 + k sigma^2.
pub fn risk_nested(spec: &SignalSpec, k: usize) -> Result<f64> {
    let n = spec.n();
    if k > n {
        return Err(Error::invalid(format!("k = {k} out of range 0..={n}")));
    }
    let tail: f64 = spec.theta()[k..].iter().map(|t| t * t).sum();
    Ok(tail + k as f64 * spec.sigma() * spec.sigma())
}

/// Exact loss of the nested candidate k for a realized observation
/// (simulation-side: requires theta).
pub fn loss_nested(spec: &SignalSpec, obs: &Observation, k: usize) -> Result<f64> {
    let n = spec.n();
    if k > n {
        return Err(Error::invalid(format!("k = {k} out of range 0..={n}")));
    }
    if obs.x.len() != n {
        return Err(Error::invalid("observation length does not match signal"));
    }
    let tail: f64 = spec.theta()[k..].iter().map(|t| t * t).sum();
    let head: f64 = obs.x[..k]
        .iter()
        .zip(&spec.theta()[..k])
        .map(|(x, t)| (x - t) * (x - t))
        .sum();
    Ok(tail + head)
}

/// Bias-corrected risk estimator sum_{i>k} (X_i^2 - sigma_hat^2) + k sigma_hat^2.
pub fn estimated_risk_nested(obs: &Observation, k: usize) -> Result<f64> {
    let n = obs.x.len();
    if k > n {
        return Err(Error::invalid(format!("k = {k} out of range 0..={n}")));
    }
    let tail: f64 = obs.x[k..].iter().map(|x| x * x - obs.sigma_hat2).sum();
    Ok(tail + k as f64 * obs.sigma_hat2)
}

/// Exact risk of the general candidate C: sum_{i not in C} theta_i^2 + |C| sigma^2.
/// Indices are 1-based.
pub fn risk_general(spec: &SignalSpec, c: &[usize]) -> Result<f64> {
    let n = spec.n();
    if c.iter().any(|&i| i < 1 || i > n) {
        return Err(Error::invalid("index set outside 1..=n"));
    }
    let mut in_c = vec![false; n];
    for &i in c {
        in_c[i - 1] = true;
    }
    let tail: f64 = spec
        .theta()
        .iter()
        .enumerate()
        .filter(|(i, _)| !in_c[*i])
        .map(|(_, t)| t * t)
        .sum();
    Ok(tail + c.len() as f64 * spec.sigma() * spec.sigma())
}

/// Risk argmin over the family. For `Nested` the returned values are the
/// retained prefix lengths k; for `Explicit` they are positions into the
/// family's set list. Ties are exact floating-point ties of the identically
/// evaluated risk formula.
pub fn optimal_set(spec: &SignalSpec, family: &CandidateFamily) -> Result<Vec<usize>> {
    let risks: Vec<f64> = match family {
        CandidateFamily::Nested(n) => {
            if *n != spec.n() {
                return Err(Error::invalid("family size does not match signal length"));
            }
            (0..=*n).map(|k| risk_nested(spec, k)).collect::<Result<_>>()?
        }
        CandidateFamily::Explicit { n, sets } => {
            if *n != spec.n() {
                return Err(Error::invalid("family size does not match signal length"));
            }
            sets.iter().map(|s| risk_general(spec, s)).collect::<Result<_>>()?
        }
    };
    let min = risks.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(risks
        .iter()
        .enumerate()
        .filter(|(_, &r)| r == min)
        .map(|(i, _)| i)
        .collect())
}
