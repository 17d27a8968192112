//! Multiscale machinery for nested candidate models: the standardized
//! difference process, the sup statistic d_hat, simulated least-favorable
//! critical values kappa_{n,alpha}, and the nested confidence region.

use crate::error::{Error, Result};
use crate::exec::run_replicates;
use crate::seqmodel::VarianceModel;
use crate::stats::quantile_upper;
use rand::Rng;
use rand_distr::{ChiSquared, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Default cap on n for the exhaustive O(n^2) pair scans.
pub const DEFAULT_MAX_N: usize = 2048;

/// Default second-order constant in the definition of d_hat.
pub const DEFAULT_C_CONST: f64 = 3.0;

/// Scale information for one signal-to-noise vector: the global normalizer
/// (4 ||theta/sigma||^2 + 2n)^{1/2} and prefix sums for O(1) tau queries.
#[derive(Debug, Clone)]
pub struct ScaleContext {
    n: usize,
    denom: f64,
    /// prefix sums of 4 (theta_i/sigma)^2 + 2
    var_prefix: Vec<f64>,
    /// prefix sums of (theta_i/sigma)^2
    snr2_prefix: Vec<f64>,
}

impl ScaleContext {
    pub fn new(theta_over_sigma: &[f64]) -> Result<Self> {
        let n = theta_over_sigma.len();
        if n == 0 {
            return Err(Error::invalid("signal must have length >= 1"));
        }
        let mut var_prefix = Vec::with_capacity(n + 1);
        let mut snr2_prefix = Vec::with_capacity(n + 1);
        var_prefix.push(0.0);
        snr2_prefix.push(0.0);
        for &t in theta_over_sigma {
            var_prefix.push(var_prefix.last().unwrap() + 4.0 * t * t + 2.0);
            snr2_prefix.push(snr2_prefix.last().unwrap() + t * t);
        }
        let denom = var_prefix[n].sqrt();
        Ok(Self {
            n,
            denom,
            var_prefix,
            snr2_prefix,
        })
    }

    /// Context for the least-favorable signal (all coordinates of modulus
    /// sigma): tau^2(j,k) = (k - j)/n exactly.
    pub fn theta_star(n: usize) -> Result<Self> {
        Self::new(&vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// (4 ||theta/sigma||^2 + 2n)^{1/2}
    pub fn denom(&self) -> f64 {
        self.denom
    }

    pub fn tau2(&self, j: usize, k: usize) -> Result<f64> {
        if j >= k || k > self.n {
            return Err(Error::invalid(format!("need 0 <= j < k <= n, got ({j},{k})")));
        }
        Ok((self.var_prefix[k] - self.var_prefix[j]) / (self.denom * self.denom))
    }

    /// Standard deviation tau_n(j,k) of the difference process.
    pub fn tau(&self, j: usize, k: usize) -> Result<f64> {
        Ok(self.tau2(j, k)?.sqrt())
    }

    fn snr2_range(&self, j: usize, k: usize) -> f64 {
        self.snr2_prefix[k] - self.snr2_prefix[j]
    }
}

/// Scale penalty Gamma(tau^2) = (2 log(e/tau^2))^{1/2} for tau^2 in (0,1].
pub fn gamma_penalty(tau2: f64) -> f64 {
    debug_assert!(tau2 > 0.0 && tau2 <= 1.0 + 1e-12);
    (2.0 * (std::f64::consts::E / tau2).ln()).sqrt()
}

/// The multiscale statistic d_hat: sup over all pairs j < k of
/// (|D_hat(j,k)| / tau - Gamma - c Gamma^2 / (denom tau))^+.
///
/// Needs the true (or surrogate) signal-to-noise vector through `ctx`, so it
/// is a simulation-side quantity. `x_over_sigma` is X/sigma and
/// `s2_ratio` is sigma_hat^2/sigma^2.
pub fn dhat_statistic(
    x_over_sigma: &[f64],
    s2_ratio: f64,
    ctx: &ScaleContext,
    c_const: f64,
) -> Result<f64> {
    let n = ctx.n();
    if x_over_sigma.len() != n {
        return Err(Error::invalid("observation length does not match context"));
    }
    if !(s2_ratio.is_finite() && s2_ratio > 0.0) {
        return Err(Error::invalid("variance ratio must be positive"));
    }
    let mut u2_prefix = Vec::with_capacity(n + 1);
    u2_prefix.push(0.0);
    for &u in x_over_sigma {
        u2_prefix.push(u2_prefix.last().unwrap() + u * u);
    }
    let denom = ctx.denom();
    let mut sup: f64 = 0.0;
    for j in 0..n {
        for k in (j + 1)..=n {
            let d = (k - j) as f64;
            let num = (u2_prefix[k] - u2_prefix[j]) - d - ctx.snr2_range(j, k)
                - 2.0 * d * (s2_ratio - 1.0);
            let dhat = num / (s2_ratio * denom);
            let tau2 = ctx.tau2(j, k)?;
            let tau = tau2.sqrt();
            let gamma = gamma_penalty(tau2);
            let val = dhat.abs() / tau - gamma - c_const * gamma * gamma / (denom * tau);
            sup = sup.max(val);
        }
    }
    Ok(sup)
}

/// Per-lag tables for the least-favorable case, where tau^2 depends only on
/// the lag d = k - j.
struct ThetaStarLags {
    /// 1 / (denom * tau_d)
    inv: Vec<f64>,
    /// Gamma_d + c * Gamma_d^2 / (denom * tau_d)
    penalty: Vec<f64>,
}

fn theta_star_lags(n: usize, c_const: f64) -> ThetaStarLags {
    let denom = (6.0 * n as f64).sqrt();
    let mut inv = Vec::with_capacity(n + 1);
    let mut penalty = Vec::with_capacity(n + 1);
    inv.push(f64::NAN);
    penalty.push(f64::NAN);
    for d in 1..=n {
        let tau2 = d as f64 / n as f64;
        let tau = tau2.sqrt();
        let g = gamma_penalty(tau2);
        let a = 1.0 / (denom * tau);
        inv.push(a);
        penalty.push(g + c_const * g * g * a);
    }
    ThetaStarLags { inv, penalty }
}

/// d_hat under theta* from the prefix sums of (X_i/sigma)^2 - 2 (X = theta* + eps).
fn dhat_theta_star(prefix: &[f64], s2_ratio: f64, lags: &ThetaStarLags) -> f64 {
    let n = prefix.len() - 1;
    let mut sup: f64 = 0.0;
    for d in 1..=n {
        let shift = 2.0 * d as f64 * (s2_ratio - 1.0);
        let scale = lags.inv[d] / s2_ratio;
        let pen = lags.penalty[d];
        let mut best: f64 = 0.0;
        for j in 0..=(n - d) {
            let num = prefix[j + d] - prefix[j] - shift;
            best = best.max(num.abs());
        }
        sup = sup.max(best * scale - pen);
    }
    sup
}

/// Simulated critical values kappa_{n,alpha} under the least-favorable
/// signal, as empirical (1-alpha)-quantiles over `reps` replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueTable {
    pub n: usize,
    #[serde(with = "m_serde")]
    pub m: Option<u32>,
    pub c_const: f64,
    pub reps: u64,
    pub seed: u64,
    pub entries: Vec<TableEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub alpha: f64,
    pub kappa: f64,
}

/// Serializes m = infinity (known sigma) as the string "inf".
mod m_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<u32>, ser: S) -> Result<S::Ok, S::Error> {
        match m {
            None => ser.serialize_str("inf"),
            Some(m) => ser.serialize_u32(*m),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<u32>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(m) => Ok(Some(m)),
            Raw::Text(s) if s == "inf" => Ok(None),
            Raw::Text(s) => Err(de::Error::custom(format!("invalid m value {s:?}"))),
        }
    }
}

impl CriticalValueTable {
    pub fn kappa(&self, alpha: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| (e.alpha - alpha).abs() < 1e-12)
            .map(|e| e.kappa)
    }

    pub fn matches(&self, n: usize, m: Option<u32>, c_const: f64, reps: u64, seed: u64) -> bool {
        self.n == n && self.m == m && self.c_const == c_const && self.reps == reps && self.seed == seed
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let table: CriticalValueTable = serde_json::from_str(&text)?;
        Ok(table)
    }
}

pub fn critical_values(
    n: usize,
    var: &VarianceModel,
    alphas: &[f64],
    reps: u64,
    seed: u64,
    c_const: f64,
) -> Result<CriticalValueTable> {
    critical_values_with_cap(n, var, alphas, reps, seed, c_const, DEFAULT_MAX_N)
}

/// As `critical_values` with an explicit override of the O(n^2) size cap.
pub fn critical_values_with_cap(
    n: usize,
    var: &VarianceModel,
    alphas: &[f64],
    reps: u64,
    seed: u64,
    c_const: f64,
    max_n: usize,
) -> Result<CriticalValueTable> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if n > max_n {
        return Err(Error::resource(format!("n = {n} exceeds pair-scan cap {max_n}")));
    }
    if reps < 1000 {
        return Err(Error::invalid(format!("reps = {reps} below minimum 1000")));
    }
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::invalid("alphas must be a nonempty list inside (0,1)"));
    }
    let lags = theta_star_lags(n, c_const);
    let m = var.m();
    let samples = run_replicates(seed, reps, |_, rng| {
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for _ in 0..n {
            let eps: f64 = rng.sample(StandardNormal);
            // (1 + eps)^2 - 2 = 2 eps + eps^2 - 1
            acc += 2.0 * eps + eps * eps - 1.0;
            prefix.push(acc);
        }
        let s2 = match m {
            None => 1.0,
            Some(m) => {
                let chi = ChiSquared::new(m as f64).expect("m >= 1");
                rng.sample::<f64, _>(chi) / m as f64
            }
        };
        dhat_theta_star(&prefix, s2, &lags)
    });
    let mut entries = Vec::with_capacity(alphas.len());
    let mut sorted_alphas = alphas.to_vec();
    sorted_alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted_alphas.dedup();
    for alpha in sorted_alphas {
        entries.push(TableEntry {
            alpha,
            kappa: quantile_upper(&samples, alpha)?,
        });
    }
    Ok(CriticalValueTable {
        n,
        m,
        c_const,
        reps,
        seed,
        entries,
    })
}

/// The region constant c_{jkn} = sqrt(6/|k-j|)(Gamma((k-j)/n) + kappa)
/// + (3/|k-j|) Gamma((k-j)/n)^2.
pub fn c_jkn(n: usize, j: usize, k: usize, kappa: f64) -> Result<f64> {
    if j == k || j > n || k > n {
        return Err(Error::invalid(format!("need j != k, both in 0..={n}")));
    }
    let d = j.abs_diff(k) as f64;
    let g = gamma_penalty(d / n as f64);
    Ok((6.0 / d).sqrt() * (g + kappa) + 3.0 / d * g * g)
}

/// Confidence region for the nested family with per-candidate diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NestedRegion {
    pub alpha: f64,
    pub n: usize,
    pub retained: Vec<usize>,
    pub diagnostics: Vec<RegionDiag>,
}

/// The binding constraint for candidate j: the opposing index with the
/// smallest slack. Slack >= 0 means every defining inequality holds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionDiag {
    pub j: usize,
    pub worst_k: usize,
    pub slack: f64,
}

pub fn nested_region(
    x: &[f64],
    sigma_hat2: f64,
    table: &CriticalValueTable,
    alpha: f64,
) -> Result<NestedRegion> {
    nested_region_with_cap(x, sigma_hat2, table, alpha, DEFAULT_MAX_N)
}

/// Computes the region through the scale-free T-statistic form: j is
/// retained iff T_{ijn} >= 2 - c_{ijn} for all i < j and
/// T_{jkn} <= 2 + c_{jkn} for all k > j.
pub fn nested_region_with_cap(
    x: &[f64],
    sigma_hat2: f64,
    table: &CriticalValueTable,
    alpha: f64,
    max_n: usize,
) -> Result<NestedRegion> {
    let n = x.len();
    if n == 0 {
        return Err(Error::invalid("empty observation"));
    }
    if n != table.n {
        return Err(Error::invalid(format!(
            "observation length {n} does not match table n = {}",
            table.n
        )));
    }
    if n > max_n {
        return Err(Error::resource(format!("n = {n} exceeds pair-scan cap {max_n}")));
    }
    if !(sigma_hat2.is_finite() && sigma_hat2 > 0.0) {
        return Err(Error::invalid(format!("sigma_hat2 = {sigma_hat2} must be positive")));
    }
    let kappa = table
        .kappa(alpha)
        .ok_or_else(|| Error::invalid(format!("alpha = {alpha} not present in table")))?;

    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &xi in x {
        prefix.push(prefix.last().unwrap() + xi * xi);
    }
    let mut c_lag = vec![f64::NAN; n + 1];
    for (d, c) in c_lag.iter_mut().enumerate().skip(1) {
        *c = c_jkn(n, 0, d, kappa)?;
    }

    let mut retained = Vec::new();
    let mut diagnostics = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut worst = f64::INFINITY;
        let mut worst_k = j;
        for i in 0..j {
            let d = j - i;
            let t = (prefix[j] - prefix[i]) / (d as f64 * sigma_hat2);
            let slack = t - (2.0 - c_lag[d]);
            if slack < worst {
                worst = slack;
                worst_k = i;
            }
        }
        for k in (j + 1)..=n {
            let d = k - j;
            let t = (prefix[k] - prefix[j]) / (d as f64 * sigma_hat2);
            let slack = (2.0 + c_lag[d]) - t;
            if slack < worst {
                worst = slack;
                worst_k = k;
            }
        }
        if worst >= 0.0 {
            retained.push(j);
        }
        diagnostics.push(RegionDiag {
            j,
            worst_k,
            slack: worst,
        });
    }
    Ok(NestedRegion {
        alpha,
        n,
        retained,
        diagnostics,
    })
}

impl NestedRegion {
    pub fn contains(&self, j: usize) -> bool {
        self.retained.binary_search(&j).is_ok()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
