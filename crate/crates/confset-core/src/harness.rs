//! Replicated experiments used by the validation suite and the CLI's
//! `simulate` subcommand: nested-region coverage, coupling-order checks,
//! and a general-family coverage loop built on the fast membership path.

use crate::coupling::{build_timepoints, check_ordering, sample_coupled_pair};
use crate::error::Result;
use crate::exec::run_replicates;
use crate::general::{candidate_retained, candidate_retained_unknown_sigma, DifferenceCatalog};
use crate::multiscale::{nested_region, CriticalValueTable};
use crate::seqmodel::{
    optimal_set, simulate_observation, CandidateFamily, SignalSpec, VarianceModel,
};

/// One replicate of a coverage experiment.
#[derive(Debug, Clone, Copy)]
pub struct CoverageRow {
    pub rep: u64,
    pub covered: bool,
    pub region_size: usize,
}

pub fn coverage_fraction(rows: &[CoverageRow]) -> f64 {
    rows.iter().filter(|r| r.covered).count() as f64 / rows.len() as f64
}

/// CSV emission: header plus one line per replicate.
pub fn coverage_csv(rows: &[CoverageRow]) -> String {
    let mut out = String::from("rep,covered,region_size\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.rep, u8::from(r.covered), r.region_size));
    }
    out
}

/// Nested-region coverage: per replicate, does the region contain the whole
/// optimal set K_n(theta)?
pub fn coverage_nested(
    spec: &SignalSpec,
    var: &VarianceModel,
    table: &CriticalValueTable,
    alpha: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<CoverageRow>> {
    let optimal = optimal_set(spec, &CandidateFamily::Nested(spec.n()))?;
    // fail fast on bad inputs before spawning replicates
    let probe = simulate_observation(spec, var, seed, 0);
    nested_region(&probe.x, probe.sigma_hat2, table, alpha)?;
    Ok(run_replicates(seed, reps, |rep, _| {
        let obs = simulate_observation(spec, var, seed, rep);
        let region = nested_region(&obs.x, obs.sigma_hat2, table, alpha).expect("validated");
        CoverageRow {
            rep,
            covered: optimal.iter().all(|&k| region.contains(k)),
            region_size: region.retained.len(),
        }
    }))
}

/// General-family coverage of the risk argmin, using the single-candidate
/// fast path. The argmin is the family's first optimal position.
pub fn coverage_general(
    spec: &SignalSpec,
    var: &VarianceModel,
    family: &CandidateFamily,
    catalog: &DifferenceCatalog,
    alpha: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<CoverageRow>> {
    let opt_pos = optimal_set(spec, family)?;
    let opt = family.materialize()[opt_pos[0]].clone();
    let probe = simulate_observation(spec, var, seed, 0);
    match var {
        VarianceModel::Known => {
            let s2 = spec.sigma() * spec.sigma();
            candidate_retained(&probe.x, s2, family, catalog, &opt, alpha)?;
            Ok(run_replicates(seed, reps, |rep, _| {
                let obs = simulate_observation(spec, var, seed, rep);
                let covered = candidate_retained(&obs.x, s2, family, catalog, &opt, alpha)
                    .expect("validated");
                CoverageRow {
                    rep,
                    covered,
                    region_size: 0,
                }
            }))
        }
        VarianceModel::ChiSquared(m) => {
            let m = *m;
            candidate_retained_unknown_sigma(
                &probe.x,
                probe.sigma_hat2,
                m,
                family,
                catalog,
                &opt,
                alpha,
            )?;
            Ok(run_replicates(seed, reps, |rep, _| {
                let obs = simulate_observation(spec, var, seed, rep);
                let covered = candidate_retained_unknown_sigma(
                    &obs.x,
                    obs.sigma_hat2,
                    m,
                    family,
                    catalog,
                    &opt,
                    alpha,
                )
                .expect("validated");
                CoverageRow {
                    rep,
                    covered,
                    region_size: 0,
                }
            }))
        }
    }
}

/// Samples `reps` coupled pairs and returns the replicate indices (if any)
/// where the pathwise ordering fails. An empty result is the expected
/// outcome; any entry is a bug.
pub fn coupling_order_experiment(
    spec: &SignalSpec,
    m: Option<u32>,
    reps: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    let tp = build_timepoints(spec)?;
    let violations = run_replicates(seed, reps, |rep, rng| {
        let pair = sample_coupled_pair(&tp, m, rng);
        check_ordering(&pair, &tp).map(|_| rep)
    });
    Ok(violations.into_iter().flatten().collect())
}

/// Binomial standard error sqrt(alpha (1 - alpha) / reps) for coverage
/// comparisons at nominal level 1 - alpha.
pub fn coverage_se(alpha: f64, reps: u64) -> f64 {
    (alpha * (1.0 - alpha) / reps as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general::build_catalog;
    use crate::multiscale::critical_values;

    #[test]
    fn nested_coverage_small_run() {
        let n = 16;
        let table = critical_values(n, &VarianceModel::Known, &[0.1], 1000, 2, 3.0).unwrap();
        let spec = SignalSpec::zero(n, 1.0).unwrap();
        let rows =
            coverage_nested(&spec, &VarianceModel::Known, &table, 0.1, 200, 13).unwrap();
        assert_eq!(rows.len(), 200);
        let frac = coverage_fraction(&rows);
        assert!(frac > 0.8, "coverage {frac}");
        let csv = coverage_csv(&rows);
        assert!(csv.starts_with("rep,covered,region_size\n"));
        assert_eq!(csv.lines().count(), 201);
    }

    #[test]
    fn general_coverage_small_run() {
        let family =
            CandidateFamily::explicit(4, vec![vec![], vec![1], vec![1, 2], vec![1, 2, 3, 4]])
                .unwrap();
        let catalog = build_catalog(&family).unwrap();
        let spec = SignalSpec::new(vec![3.0, 1.2, 0.1, 0.0], 1.0).unwrap();
        let rows = coverage_general(
            &spec,
            &VarianceModel::ChiSquared(16),
            &family,
            &catalog,
            0.1,
            100,
            29,
        )
        .unwrap();
        assert!(coverage_fraction(&rows) > 0.8);
    }

    #[test]
    fn coupling_order_clean() {
        let spec = SignalSpec::new(vec![2.0, 1.0, 0.5], 1.0).unwrap();
        let violations = coupling_order_experiment(&spec, Some(8), 500, 41).unwrap();
        assert!(violations.is_empty(), "violations at {violations:?}");
    }

    #[test]
    fn se_formula() {
        assert!((coverage_se(0.1, 900) - 0.01).abs() < 1e-12);
    }
}
