//! Toy continuum problem on a grid: confidence sets for the minimizer of a
//! drifted Brownian motion, in a naive (global-quantile) and a multiscale
//! (pair-penalized) version, plus the rate experiment separating the two.

use crate::error::{Error, Result};
use crate::exec::run_replicates;
use crate::rng::derive_seed;
use crate::stats::quantile_upper;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Default cap on the grid size for the O(N^2) pair scans.
pub const DEFAULT_MAX_GRID: usize = 2048;

/// Drift presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DriftSpec {
    Zero,
    /// scale * |t - center|^gamma: a kink with a unique minimizer.
    Kink { scale: f64, center: f64, gamma: f64 },
    /// scale * min((t-1/4)^2, (t-3/4)^2): tied minima at 1/4 and 3/4.
    TwoWell { scale: f64 },
}

impl DriftSpec {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            DriftSpec::Zero => 0.0,
            DriftSpec::Kink { scale, center, gamma } => scale * (t - center).abs().powf(gamma),
            DriftSpec::TwoWell { scale } => {
                let a = (t - 0.25) * (t - 0.25);
                let b = (t - 0.75) * (t - 0.75);
                scale * a.min(b)
            }
        }
    }

    /// Grid points attaining the minimum of the drift.
    pub fn minimizers(&self, grid: &[f64]) -> Vec<usize> {
        let vals: Vec<f64> = grid.iter().map(|&t| self.value(t)).collect();
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        vals.iter()
            .enumerate()
            .filter(|(_, &v)| v == min)
            .map(|(i, _)| i)
            .collect()
    }
}

/// One simulated path Y = F + W observed on an equispaced grid in [0,1].
#[derive(Debug, Clone)]
pub struct ToyPath {
    pub grid: Vec<f64>,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
}

pub fn simulate_path(drift: &DriftSpec, n_grid: usize, rng: &mut ChaCha8Rng) -> Result<ToyPath> {
    if n_grid < 2 {
        return Err(Error::invalid("grid needs at least 2 points"));
    }
    let step = 1.0 / (n_grid - 1) as f64;
    let sd = step.sqrt();
    let mut grid = Vec::with_capacity(n_grid);
    let mut f = Vec::with_capacity(n_grid);
    let mut y = Vec::with_capacity(n_grid);
    let mut w = 0.0;
    for i in 0..n_grid {
        let t = i as f64 * step;
        if i > 0 {
            w += sd * rng.sample::<f64, _>(StandardNormal);
        }
        grid.push(t);
        f.push(drift.value(t));
        y.push(drift.value(t) + w);
    }
    Ok(ToyPath { grid, y, f })
}

fn check_grid(n_grid: usize, reps: u64, alpha: f64, max_grid: usize) -> Result<()> {
    if n_grid < 2 {
        return Err(Error::invalid("grid needs at least 2 points"));
    }
    if n_grid > max_grid {
        return Err(Error::resource(format!(
            "grid size {n_grid} exceeds pair-scan cap {max_grid}"
        )));
    }
    if reps == 0 {
        return Err(Error::invalid("reps must be >= 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} outside (0,1)")));
    }
    Ok(())
}

/// (1-alpha)-quantile of max W - min W over Brownian paths on the grid.
pub fn kappa_naive(n_grid: usize, reps: u64, alpha: f64, seed: u64) -> Result<f64> {
    check_grid(n_grid, reps, alpha, DEFAULT_MAX_GRID)?;
    let drift = DriftSpec::Zero;
    let samples = run_replicates(seed, reps, |_, rng| {
        let path = simulate_path(&drift, n_grid, rng).expect("validated");
        let max = path.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = path.y.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    });
    quantile_upper(&samples, alpha)
}

/// Per-lag penalty sqrt(2 log(e/|s-t|)) and inverse-sqrt-gap tables shared
/// by the multiscale statistic and set construction.
fn lag_tables(n_grid: usize) -> (Vec<f64>, Vec<f64>) {
    let step = 1.0 / (n_grid - 1) as f64;
    let mut pen = Vec::with_capacity(n_grid);
    let mut isq = Vec::with_capacity(n_grid);
    pen.push(f64::NAN);
    isq.push(f64::NAN);
    for d in 1..n_grid {
        let gap = d as f64 * step;
        pen.push((2.0 * (std::f64::consts::E / gap).ln()).sqrt());
        isq.push(1.0 / gap.sqrt());
    }
    (pen, isq)
}

/// (1-alpha)-quantile of sup_{s != t} (|W(s)-W(t)|/sqrt|s-t|
/// - sqrt(2 log(e/|s-t|))) on the grid.
pub fn kappa_multiscale(n_grid: usize, reps: u64, alpha: f64, seed: u64) -> Result<f64> {
    check_grid(n_grid, reps, alpha, DEFAULT_MAX_GRID)?;
    let (pen, isq) = lag_tables(n_grid);
    let drift = DriftSpec::Zero;
    let samples = run_replicates(seed, reps, |_, rng| {
        let path = simulate_path(&drift, n_grid, rng).expect("validated");
        let w = &path.y;
        let mut sup = f64::NEG_INFINITY;
        for d in 1..n_grid {
            let mut best: f64 = 0.0;
            for s in 0..(n_grid - d) {
                best = best.max((w[s + d] - w[s]).abs());
            }
            sup = sup.max(best * isq[d] - pen[d]);
        }
        sup
    });
    quantile_upper(&samples, alpha)
}

/// Naive set: {s : Y(s) <= min Y + kappa}.
pub fn confset_naive(path: &ToyPath, kappa: f64) -> Vec<usize> {
    let min = path.y.iter().cloned().fold(f64::INFINITY, f64::min);
    path.y
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= min + kappa)
        .map(|(i, _)| i)
        .collect()
}

/// Multiscale set: {s : Y(s) <= Y(t) + sqrt|s-t| (sqrt(2 log(e/|s-t|))
/// + kappa) for all t}.
pub fn confset_multiscale(path: &ToyPath, kappa: f64) -> Vec<usize> {
    let n_grid = path.y.len();
    let (pen, isq) = lag_tables(n_grid);
    // allowance for lag d: sqrt(gap) * (pen + kappa) = (pen + kappa)/isq
    let allow: Vec<f64> = (0..n_grid)
        .map(|d| if d == 0 { f64::NAN } else { (pen[d] + kappa) / isq[d] })
        .collect();
    let mut retained = Vec::new();
    'outer: for s in 0..n_grid {
        for t in 0..n_grid {
            if t == s {
                continue;
            }
            let d = s.abs_diff(t);
            if path.y[s] > path.y[t] + allow[d] {
                continue 'outer;
            }
        }
        retained.push(s);
    }
    retained
}

/// One row of the rate experiment at drift scale c.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateRow {
    pub c: f64,
    /// mean over replicates of the maximal distance from a retained grid
    /// point to the drift minimizer
    pub naive_dist: f64,
    pub multi_dist: f64,
}

/// Runs the rate experiment for the kink drift c |t - 1/2|^gamma over a
/// grid of scales c. Both kappas are calibrated once on the same grid.
pub fn rate_experiment(
    n_grid: usize,
    gamma: f64,
    scales: &[f64],
    alpha: f64,
    kappa_reps: u64,
    set_reps: u64,
    seed: u64,
) -> Result<Vec<RateRow>> {
    check_grid(n_grid, set_reps, alpha, DEFAULT_MAX_GRID)?;
    if scales.is_empty() || scales.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::invalid("scales must be nonempty and positive"));
    }
    let kn = kappa_naive(n_grid, kappa_reps, alpha, derive_seed(seed, 1))?;
    let km = kappa_multiscale(n_grid, kappa_reps, alpha, derive_seed(seed, 2))?;
    let mut rows = Vec::with_capacity(scales.len());
    for (ci, &c) in scales.iter().enumerate() {
        let drift = DriftSpec::Kink {
            scale: c,
            center: 0.5,
            gamma,
        };
        let dists = run_replicates(derive_seed(seed, 100 + ci as u64), set_reps, |_, rng| {
            let path = simulate_path(&drift, n_grid, rng).expect("validated");
            let naive = confset_naive(&path, kn);
            let multi = confset_multiscale(&path, km);
            let dist = |set: &[usize]| {
                set.iter()
                    .map(|&i| (path.grid[i] - 0.5).abs())
                    .fold(0.0f64, f64::max)
            };
            (dist(&naive), dist(&multi))
        });
        let reps = dists.len() as f64;
        let naive_dist = dists.iter().map(|d| d.0).sum::<f64>() / reps;
        let multi_dist = dists.iter().map(|d| d.1).sum::<f64>() / reps;
        rows.push(RateRow {
            c,
            naive_dist,
            multi_dist,
        });
    }
    Ok(rows)
}

/// CSV emission for the rate experiment: header plus one row per scale.
pub fn rate_rows_csv(rows: &[RateRow]) -> String {
    let mut out = String::from("c,naive_dist,multi_dist\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.c, r.naive_dist, r.multi_dist));
    }
    out
}
