//! Confidence region for the risk-optimal candidate within an arbitrary
//! family of index sets, built from simultaneous confidence intervals for
//! the noncentrality parameters of all pairwise set differences. Includes
//! the unknown-variance variant.

use crate::error::{Error, Result};
use crate::ncchi2::{invert_noncentrality_lower, invert_noncentrality_upper};
use crate::seqmodel::CandidateFamily;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::BTreeMap;
use std::path::Path;

/// Default cap on the number of pairwise differences considered.
pub const DEFAULT_CATALOG_CAP: usize = 1_000_000;

/// All pairwise set differences D \ C over the family, canonicalized and
/// deduplicated. `m_n` counts the nonvoid sets and is the Bonferroni
/// denominator; the empty set is carried with fixed bounds (0,0).
#[derive(Debug, Clone)]
pub struct DifferenceCatalog {
    sets: Vec<Vec<usize>>,
    m_n: usize,
}

impl DifferenceCatalog {
    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// Number of nonvoid difference sets.
    pub fn m_n(&self) -> usize {
        self.m_n
    }
}

fn set_difference(d: &[usize], c: &[usize]) -> Vec<usize> {
    d.iter().filter(|i| !c.contains(i)).copied().collect()
}

pub fn build_catalog(family: &CandidateFamily) -> Result<DifferenceCatalog> {
    build_catalog_with_cap(family, DEFAULT_CATALOG_CAP)
}

pub fn build_catalog_with_cap(family: &CandidateFamily, cap: usize) -> Result<DifferenceCatalog> {
    let candidates = family.materialize();
    if candidates.len().saturating_mul(candidates.len()) > cap {
        return Err(Error::resource(format!(
            "family of {} candidates yields up to {} differences, over cap {cap}",
            candidates.len(),
            candidates.len() * candidates.len()
        )));
    }
    let mut sets: std::collections::BTreeSet<Vec<usize>> = std::collections::BTreeSet::new();
    for d in &candidates {
        for c in &candidates {
            sets.insert(set_difference(d, c));
        }
    }
    let sets: Vec<Vec<usize>> = sets.into_iter().collect();
    let m_n = sets.iter().filter(|s| !s.is_empty()).count();
    Ok(DifferenceCatalog { sets, m_n })
}

/// T_n(J) = sigma^{-2} sum_{i in J} X_i^2 (1-based indices).
pub fn statistic_t(x: &[f64], sigma2: f64, j_set: &[usize]) -> Result<f64> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::invalid(format!("sigma2 = {sigma2} must be positive")));
    }
    let mut t = 0.0;
    for &i in j_set {
        if i < 1 || i > x.len() {
            return Err(Error::invalid(format!("index {i} outside 1..={}", x.len())));
        }
        t += x[i - 1] * x[i - 1];
    }
    Ok(t / sigma2)
}

/// Per-set simultaneous bounds on the noncentrality parameters, at the
/// Bonferroni-corrected one-sided level u = alpha / (2 M_n).
pub fn simultaneous_bounds(
    x: &[f64],
    sigma2: f64,
    catalog: &DifferenceCatalog,
    alpha: f64,
) -> Result<BTreeMap<Vec<usize>, (f64, f64)>> {
    simultaneous_bounds_scaled(x, sigma2, catalog, alpha, 1.0, 1.0)
}

/// Bounds with distinct multiplicative scalings of the statistic for the
/// lower and upper inversion — the unknown-variance construction feeds
/// tau_l into the lower bound and tau_u into the upper one; the known-sigma
/// path uses (1, 1).
fn simultaneous_bounds_scaled(
    x: &[f64],
    sigma2: f64,
    catalog: &DifferenceCatalog,
    alpha: f64,
    tau_l: f64,
    tau_u: f64,
) -> Result<BTreeMap<Vec<usize>, (f64, f64)>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} outside (0,1)")));
    }
    if catalog.m_n() == 0 {
        // only the empty set: nothing to invert
        let mut bounds = BTreeMap::new();
        if catalog.sets().iter().any(|s| s.is_empty()) {
            bounds.insert(Vec::new(), (0.0, 0.0));
        }
        return Ok(bounds);
    }
    let u = alpha / (2.0 * catalog.m_n() as f64);
    let mut bounds = BTreeMap::new();
    for j_set in catalog.sets() {
        let entry = if j_set.is_empty() {
            (0.0, 0.0)
        } else {
            bounds_for_set(x, sigma2, j_set, u, tau_l, tau_u)?
        };
        bounds.insert(j_set.clone(), entry);
    }
    Ok(bounds)
}

fn bounds_for_set(
    x: &[f64],
    sigma2: f64,
    j_set: &[usize],
    u: f64,
    tau_l: f64,
    tau_u: f64,
) -> Result<(f64, f64)> {
    let t = statistic_t(x, sigma2, j_set)?;
    let k = j_set.len() as u32;
    let lower = invert_noncentrality_lower(k, tau_l * t, u)?;
    let upper = invert_noncentrality_upper(k, tau_u * t, u)?;
    Ok((lower, upper))
}

/// The confidence region: candidates retained by the pairwise comparison
/// rule, plus the bounds cache used to decide it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralRegion {
    pub alpha: f64,
    pub n: usize,
    /// positions into the materialized family list
    pub retained: Vec<usize>,
    /// the retained candidates as explicit index sets
    pub retained_sets: Vec<Vec<usize>>,
    /// serialized as a sorted list of {set, lower, upper} records
    #[serde(with = "bounds_serde")]
    pub bounds: BTreeMap<Vec<usize>, (f64, f64)>,
}

mod bounds_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        set: Vec<usize>,
        lower: f64,
        upper: f64,
    }

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<Vec<usize>, (f64, f64)>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = map
            .iter()
            .map(|(set, &(lower, upper))| Entry { set: set.clone(), lower, upper })
            .collect();
        entries.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<Vec<usize>, (f64, f64)>, D::Error> {
        let entries = Vec::<Entry>::deserialize(de)?;
        Ok(entries
            .into_iter()
            .map(|e| (e.set, (e.lower, e.upper)))
            .collect())
    }
}

impl GeneralRegion {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn region_from_bounds(
    family: &CandidateFamily,
    bounds: BTreeMap<Vec<usize>, (f64, f64)>,
    alpha: f64,
) -> GeneralRegion {
    let candidates = family.materialize();
    let mut retained = Vec::new();
    let mut retained_sets = Vec::new();
    for (pos, c) in candidates.iter().enumerate() {
        if candidate_retained_from_bounds(c, &candidates, &bounds) {
            retained.push(pos);
            retained_sets.push(c.clone());
        }
    }
    GeneralRegion {
        alpha,
        n: family.n(),
        retained,
        retained_sets,
        bounds,
    }
}

fn candidate_retained_from_bounds(
    c: &[usize],
    candidates: &[Vec<usize>],
    bounds: &BTreeMap<Vec<usize>, (f64, f64)>,
) -> bool {
    candidates.iter().all(|d| {
        let upper = bounds[&set_difference(c, d)].1;
        let lower = bounds[&set_difference(d, c)].0;
        upper - lower + d.len() as f64 - c.len() as f64 >= 0.0
    })
}

pub fn general_region(
    x: &[f64],
    sigma2: f64,
    family: &CandidateFamily,
    alpha: f64,
) -> Result<GeneralRegion> {
    validate_observation(x, family)?;
    let catalog = build_catalog(family)?;
    let bounds = simultaneous_bounds(x, sigma2, &catalog, alpha)?;
    Ok(region_from_bounds(family, bounds, alpha))
}

/// Variance-estimated variant: alpha' = 1 - sqrt(1 - alpha); the ratio
/// sigma^2/sigma_hat^2 is sandwiched between tau_l = m/chi^2_{m;1-alpha'/2}
/// and tau_u = m/chi^2_{m;alpha'/2} with probability 1 - alpha', and the
/// noncentrality bounds are run at level alpha' on the two scaled
/// statistics.
pub fn general_region_unknown_sigma(
    x: &[f64],
    sigma_hat2: f64,
    m: u32,
    family: &CandidateFamily,
    alpha: f64,
) -> Result<GeneralRegion> {
    validate_observation(x, family)?;
    if m == 0 {
        return Err(Error::invalid("m must be >= 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} outside (0,1)")));
    }
    let alpha_prime = 1.0 - (1.0 - alpha).sqrt();
    let (tau_l, tau_u) = variance_ratio_bounds(m, alpha_prime)?;
    let catalog = build_catalog(family)?;
    let bounds = simultaneous_bounds_scaled(x, sigma_hat2, &catalog, alpha_prime, tau_l, tau_u)?;
    Ok(region_from_bounds(family, bounds, alpha))
}

/// (tau_l, tau_u) = (m/chi^2_{m;1-a/2}, m/chi^2_{m;a/2}).
pub fn variance_ratio_bounds(m: u32, alpha_prime: f64) -> Result<(f64, f64)> {
    let chi = ChiSquared::new(m as f64)
        .map_err(|e| Error::invalid(format!("bad chi-square dof {m}: {e}")))?;
    let hi = chi.inverse_cdf(1.0 - alpha_prime / 2.0);
    let lo = chi.inverse_cdf(alpha_prime / 2.0);
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::numeric(format!(
            "degenerate chi-square quantiles for m={m}, alpha'={alpha_prime}"
        )));
    }
    Ok((m as f64 / hi, m as f64 / lo))
}

fn validate_observation(x: &[f64], family: &CandidateFamily) -> Result<()> {
    if x.len() != family.n() {
        return Err(Error::invalid(format!(
            "observation length {} does not match family n = {}",
            x.len(),
            family.n()
        )));
    }
    Ok(())
}

/// Fast membership check for a single candidate: inverts bounds only for
/// the differences involving `c` (at most 2 |family| sets) while keeping
/// the Bonferroni denominator from the full catalog. Produces exactly the
/// same decision as `general_region`; used by coverage simulations where
/// only the optimum's retention matters.
pub fn candidate_retained(
    x: &[f64],
    sigma2: f64,
    family: &CandidateFamily,
    catalog: &DifferenceCatalog,
    c: &[usize],
    alpha: f64,
) -> Result<bool> {
    candidate_retained_scaled(x, sigma2, family, catalog, c, alpha, 1.0, 1.0)
}

/// Unknown-variance analogue of `candidate_retained`.
pub fn candidate_retained_unknown_sigma(
    x: &[f64],
    sigma_hat2: f64,
    m: u32,
    family: &CandidateFamily,
    catalog: &DifferenceCatalog,
    c: &[usize],
    alpha: f64,
) -> Result<bool> {
    let alpha_prime = 1.0 - (1.0 - alpha).sqrt();
    let (tau_l, tau_u) = variance_ratio_bounds(m, alpha_prime)?;
    candidate_retained_scaled(x, sigma_hat2, family, catalog, c, alpha_prime, tau_l, tau_u)
}

#[allow(clippy::too_many_arguments)]
fn candidate_retained_scaled(
    x: &[f64],
    sigma2: f64,
    family: &CandidateFamily,
    catalog: &DifferenceCatalog,
    c: &[usize],
    alpha: f64,
    tau_l: f64,
    tau_u: f64,
) -> Result<bool> {
    validate_observation(x, family)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} outside (0,1)")));
    }
    if catalog.m_n() == 0 {
        return Ok(true);
    }
    let u = alpha / (2.0 * catalog.m_n() as f64);
    let mut cache: BTreeMap<Vec<usize>, (f64, f64)> = BTreeMap::new();
    for d in family.materialize() {
        let c_minus_d = set_difference(c, &d);
        let d_minus_c = set_difference(&d, c);
        for j_set in [&c_minus_d, &d_minus_c] {
            if !cache.contains_key(j_set.as_slice()) {
                let entry = if j_set.is_empty() {
                    (0.0, 0.0)
                } else {
                    bounds_for_set(x, sigma2, j_set, u, tau_l, tau_u)?
                };
                cache.insert(j_set.clone(), entry);
            }
        }
        let upper = cache[&c_minus_d].1;
        let lower = cache[&d_minus_c].0;
        if upper - lower + d.len() as f64 - (c.len() as f64) < 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}
