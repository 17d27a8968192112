//! Noncentral chi-square engine: exact CDF via the Poisson-mixture
//! representation, quantiles, exponential tail bounds for quadratic forms of
//! Gaussians, and inversion of the CDF in the noncentrality parameter.

use crate::error::{Error, Result};
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Weight below which a Poisson tail is considered exhausted.
const WEIGHT_EPS: f64 = 1e-13;
const MAX_TERMS: usize = 1_000_000;

/// Parameters of a chi^2_k(delta^2) distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcChi2Params {
    k: u32,
    delta2: f64,
}

impl NcChi2Params {
    pub fn new(k: u32, delta2: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("degrees of freedom must be >= 1"));
        }
        if !delta2.is_finite() || delta2 < 0.0 {
            return Err(Error::invalid(format!(
                "noncentrality {delta2} must be finite and nonnegative"
            )));
        }
        Ok(Self { k, delta2 })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn delta2(&self) -> f64 {
        self.delta2
    }
}

/// Input for the exponential inequality for quadratic functions of a
/// Gaussian vector: sum_i lambda_i ((Z_i + delta_i)^2 - (1 + delta_i^2)).
#[derive(Debug, Clone)]
pub struct TailBoundInput {
    lambdas: Vec<f64>,
    deltas: Vec<f64>,
    eta: f64,
}

impl TailBoundInput {
    pub fn new(lambdas: Vec<f64>, deltas: Vec<f64>, eta: f64) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != deltas.len() {
            return Err(Error::invalid(
                "lambda and delta vectors must have equal nonzero length",
            ));
        }
        if lambdas.iter().chain(deltas.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("nonfinite entry in tail bound input"));
        }
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::invalid("eta must be finite and nonnegative"));
        }
        Ok(Self { lambdas, deltas, eta })
    }

    pub fn gamma(&self) -> f64 {
        self.lambdas
            .iter()
            .zip(&self.deltas)
            .map(|(l, d)| l * l * (2.0 + 4.0 * d * d))
            .sum::<f64>()
            .sqrt()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambdas.iter().fold(0.0f64, |acc, &l| acc.max(l))
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Central chi^2 CDF with (possibly non-integer) degrees of freedom, via the
/// regularized lower incomplete gamma function.
fn central_cdf(dof: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(dof / 2.0, x / 2.0)
}

/// F_k(x | delta^2): Poisson(delta^2/2)-weighted mixture of central
/// chi^2_{k+2j} CDFs, summed bidirectionally from the Poisson mode until the
/// neglected weight drops below 1e-13.
///
/// The central CDFs along the mixture are obtained with the one-step
/// recurrence P(a+1, y) = P(a, y) - y^a e^{-y} / Gamma(a+1), so each term
/// costs O(1) after two special-function calls at the mode.
pub fn cdf(params: &NcChi2Params, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("x = {x} must be finite")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let k = params.k as f64;
    let lambda = params.delta2 / 2.0;
    let y = x / 2.0;
    if lambda == 0.0 {
        return Ok(central_cdf(k, x));
    }

    let mode = lambda.floor() as u64;
    // Poisson weight and central-CDF state at the mode.
    let w_mode = (mode as f64 * lambda.ln() - lambda - ln_gamma(mode as f64 + 1.0)).exp();
    let a_mode = k / 2.0 + mode as f64;
    let p_mode = gamma_lr(a_mode, y);
    let t_mode = (a_mode * y.ln() - y - ln_gamma(a_mode + 1.0)).exp();

    let mut sum = w_mode * p_mode;
    let mut wsum = w_mode;

    // Right expansion state.
    let (mut wr, mut pr, mut tr, mut jr) = (w_mode, p_mode, t_mode, mode);
    let mut right_done = false;
    // Left expansion state.
    let (mut wl, mut pl, mut tl, mut jl) = (w_mode, p_mode, t_mode, mode);
    let mut left_done = mode == 0;

    for _ in 0..MAX_TERMS {
        if 1.0 - wsum < WEIGHT_EPS || (left_done && right_done) {
            return Ok(sum.clamp(0.0, 1.0));
        }
        if !right_done {
            let aj = k / 2.0 + jr as f64;
            pr = (pr - tr).clamp(0.0, 1.0);
            tr *= y / (aj + 1.0);
            jr += 1;
            wr *= lambda / jr as f64;
            sum += wr * pr;
            wsum += wr;
            if wr < 1e-18 && wr * pr < WEIGHT_EPS * 1e-3 {
                right_done = true;
            }
        }
        if !left_done {
            let aj = k / 2.0 + jl as f64;
            tl *= aj / y;
            pl = (pl + tl).clamp(0.0, 1.0);
            wl *= jl as f64 / lambda;
            jl -= 1;
            sum += wl * pl;
            wsum += wl;
            if jl == 0 || wl < 1e-18 {
                left_done = true;
            }
        }
    }
    Err(Error::numeric(format!(
        "noncentral chi-square series did not converge (k={}, delta2={}, x={x})",
        params.k, params.delta2
    )))
}

/// Quantile by bisection, bracketed with the exponential quantile bounds
/// n + d^2 +/- sqrt((4n + 8d^2) log u^{-1}) (+ 4 log u^{-1} above).
pub fn quantile(params: &NcChi2Params, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p = {p} outside (0,1)")));
    }
    let k = params.k as f64;
    let d2 = params.delta2;
    let u = p.min(1.0 - p);
    let log_u_inv = (1.0 / u).ln();
    let spread = ((4.0 * k + 8.0 * d2) * log_u_inv).sqrt();
    let mut lo = (k + d2 - spread).max(0.0);
    let mut hi = k + d2 + spread + 4.0 * log_u_inv;

    // Widen geometrically if the bracket misses (cannot happen per the
    // bounds, but guards rounding at extreme p).
    for _ in 0..64 {
        if cdf(params, lo)? <= p {
            break;
        }
        lo /= 2.0;
        if lo < 1e-300 {
            lo = 0.0;
            break;
        }
    }
    for _ in 0..64 {
        if cdf(params, hi)? >= p {
            break;
        }
        hi = hi * 2.0 + 1.0;
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let c = cdf(params, mid)?;
        if (c - p).abs() <= 1e-12 || hi - lo <= 1e-10 {
            return Ok(mid);
        }
        if c < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Lower confidence bound for the noncentrality:
/// min { d^2 >= 0 : F_k(t | d^2) <= 1 - u }.
pub fn invert_noncentrality_lower(k: u32, t: f64, u: f64) -> Result<f64> {
    invert_noncentrality(k, t, u, true)
}

/// Upper confidence bound for the noncentrality:
/// max { d^2 >= 0 : F_k(t | d^2) >= u }, clamped at 0 when the set is empty.
pub fn invert_noncentrality_upper(k: u32, t: f64, u: f64) -> Result<f64> {
    invert_noncentrality(k, t, u, false)
}

fn invert_noncentrality(k: u32, t: f64, u: f64, lower: bool) -> Result<f64> {
    if !(u > 0.0 && u < 0.5) {
        return Err(Error::invalid(format!("u = {u} outside (0, 1/2)")));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!("t = {t} must be finite and >= 0")));
    }
    // F_k(t | d^2) is strictly decreasing in d^2; the target level is 1-u for
    // the lower bound and u for the upper bound.
    let target = if lower { 1.0 - u } else { u };
    let at_zero = cdf(&NcChi2Params::new(k, 0.0)?, t)?;
    if lower {
        if at_zero <= target {
            return Ok(0.0);
        }
    } else if at_zero < target {
        return Ok(0.0);
    }

    // Initial upper bracket from the confidence-bound inequality around
    // (t - k)^+, widened geometrically if needed.
    let dhat = (t - k as f64).max(0.0);
    let log_u_inv = (1.0 / u).ln();
    let mut hi =
        dhat + ((4.0 * k as f64 + 8.0 * dhat) * log_u_inv).sqrt() + 8.0 * log_u_inv + 1.0;
    for _ in 0..200 {
        let f = cdf(&NcChi2Params::new(k, hi)?, t)?;
        if f < target {
            break;
        }
        hi *= 2.0;
    }

    let mut lo = 0.0f64;
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        let f = cdf(&NcChi2Params::new(k, mid)?, t)?;
        if f > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Return the side with the correct one-sided semantics.
    Ok(if lower { hi } else { lo })
}

/// Exponential bound exp(-eta^2 / (2 + 4 eta lambda_max / gamma)) for the
/// upper tail of a quadratic function of independent Gaussians.
pub fn quadratic_tail_bound(input: &TailBoundInput) -> Result<f64> {
    let gamma = input.gamma();
    if gamma <= 0.0 {
        return Err(Error::invalid("all lambda coefficients are zero"));
    }
    let eta = input.eta();
    let lmax = input.lambda_max();
    Ok((-eta * eta / (2.0 + 4.0 * eta * lmax / gamma)).exp())
}

/// The looser constant version e^{1/4} exp(-eta / sqrt 8).
pub fn loose_tail_bound(eta: f64) -> f64 {
    (0.25f64).exp() * (-eta / 8.0f64.sqrt()).exp()
}

/// Deterministic CDF bounds at k + delta^2 +/- r:
/// returns (lower bound on F at +r, upper bound on F at -r).
pub fn cdf_bounds(k: u32, delta2: f64, r: f64) -> Result<(f64, f64)> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid(format!("r = {r} must be finite and >= 0")));
    }
    if !(delta2.is_finite() && delta2 >= 0.0) {
        return Err(Error::invalid("delta2 must be finite and >= 0"));
    }
    let k = k as f64;
    let lower = 1.0 - (-r * r / (4.0 * k + 8.0 * delta2 + 4.0 * r)).exp();
    let upper = (-r * r / (4.0 * k + 8.0 * delta2)).exp();
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(k: u32, d2: f64) -> NcChi2Params {
        NcChi2Params::new(k, d2).unwrap()
    }

    #[test]
    fn central_chi2_2_closed_form() {
        // chi^2_2 CDF is 1 - e^{-x/2}
        let x = 2.0 * 2.0f64.ln();
        assert!((cdf(&p(2, 0.0), x).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn support_boundary() {
        assert_eq!(cdf(&p(1, 0.0), 0.0).unwrap(), 0.0);
        assert_eq!(cdf(&p(3, 5.0), -1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(NcChi2Params::new(0, 1.0).is_err());
        assert!(NcChi2Params::new(2, -0.5).is_err());
        assert!(NcChi2Params::new(2, f64::NAN).is_err());
        assert!(cdf(&p(2, 1.0), f64::INFINITY).is_err());
        assert!(quantile(&p(2, 1.0), 0.0).is_err());
        assert!(quantile(&p(2, 1.0), 1.0).is_err());
    }

    #[test]
    fn mixture_matches_direct_series_sum() {
        // independent route: brute-force sum from j = 0 with statrs only
        for &(k, d2, x) in &[(3u32, 2.0, 5.0), (1, 10.0, 12.0), (10, 25.0, 40.0)] {
            let lambda: f64 = d2 / 2.0;
            let mut brute = 0.0;
            for j in 0..500u32 {
                let w = (j as f64 * lambda.ln() - lambda - ln_gamma(j as f64 + 1.0)).exp();
                brute += w * gamma_lr((k + 2 * j) as f64 / 2.0, x / 2.0);
            }
            let ours = cdf(&p(k, d2), x).unwrap();
            assert!((ours - brute).abs() < 1e-12, "k={k} d2={d2} x={x}");
        }
    }

    #[test]
    fn quantile_central_closed_form() {
        let q = quantile(&p(2, 0.0), 0.5).unwrap();
        assert!((q - 2.0 * 2.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn quantile_within_exponential_bounds() {
        for &(k, d2) in &[(1u32, 0.0), (3, 2.0), (10, 30.0), (50, 100.0)] {
            for &pp in &[0.01, 0.05, 0.5, 0.9, 0.999] {
                let q = quantile(&p(k, d2), pp).unwrap();
                let kf = k as f64;
                if pp > 0.5 {
                    let u = 1.0 - pp;
                    let l = (1.0f64 / u).ln();
                    assert!(q <= kf + d2 + ((4.0 * kf + 8.0 * d2) * l).sqrt() + 4.0 * l + 1e-8);
                } else if pp < 0.5 {
                    let l = (1.0f64 / pp).ln();
                    assert!(q >= kf + d2 - ((4.0 * kf + 8.0 * d2) * l).sqrt() - 1e-8);
                }
                let back = cdf(&p(k, d2), q).unwrap();
                assert!((back - pp).abs() < 1e-8, "roundtrip k={k} d2={d2} p={pp}");
            }
        }
    }

    #[test]
    fn invert_lower_clamps_at_zero() {
        // F_5(1 | 0) ~ 0.037 <= 0.975
        assert_eq!(invert_noncentrality_lower(5, 1.0, 0.025).unwrap(), 0.0);
    }

    #[test]
    fn invert_upper_degenerate_statistic() {
        assert_eq!(invert_noncentrality_upper(2, 0.0, 0.025).unwrap(), 0.0);
    }

    #[test]
    fn invert_rejects_bad_u() {
        assert!(invert_noncentrality_lower(2, 1.0, 0.5).is_err());
        assert!(invert_noncentrality_upper(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn invert_bounds_ordered_and_consistent() {
        for &(k, t, u) in &[(2u32, 20.0, 0.025), (5, 9.0, 0.01), (1, 4.0, 0.1)] {
            let lo = invert_noncentrality_lower(k, t, u).unwrap();
            let hi = invert_noncentrality_upper(k, t, u).unwrap();
            assert!(hi >= lo, "k={k} t={t} u={u}");
            if lo > 0.0 {
                let f = cdf(&p(k, lo), t).unwrap();
                assert!(f <= 1.0 - u + 1e-8);
                let below = cdf(&p(k, (lo - 1e-6).max(0.0)), t).unwrap();
                assert!(below >= 1.0 - u - 1e-8);
            }
        }
    }

    #[test]
    fn invert_lower_respects_confidence_bound_inequality() {
        for &(k, t, u) in &[(2u32, 20.0, 0.025), (4, 30.0, 0.05)] {
            let dl = invert_noncentrality_lower(k, t, u).unwrap();
            let dhat = (t - k as f64).max(0.0);
            let l = (1.0f64 / u).ln();
            let spread = ((4.0 * k as f64 + 8.0 * dhat) * l).sqrt();
            assert!(dl - dhat <= spread + 1e-6);
            assert!(dl - dhat >= -(spread + 8.0 * l) - 1e-6);
        }
    }

    #[test]
    fn invert_matches_grid_scan_oracle() {
        // independent dense scan of F_2(20 | d^2) at step 1e-4
        let (k, t, u) = (2u32, 20.0, 0.025);
        let target_l = 1.0 - u;
        let mut scan_l = None;
        let mut scan_u = 0.0f64;
        let mut d2 = 0.0;
        while d2 < 60.0 {
            let f = cdf(&p(k, d2), t).unwrap();
            if scan_l.is_none() && f <= target_l {
                scan_l = Some(d2);
            }
            if f >= u {
                scan_u = d2;
            }
            d2 += 1e-4;
        }
        let lo = invert_noncentrality_lower(k, t, u).unwrap();
        let hi = invert_noncentrality_upper(k, t, u).unwrap();
        assert!((lo - scan_l.unwrap()).abs() < 2e-4, "lower {lo} vs scan");
        assert!((hi - scan_u).abs() < 2e-4, "upper {hi} vs scan {scan_u}");
    }

    #[test]
    fn tail_bound_at_zero_eta_is_one() {
        let input = TailBoundInput::new(vec![1.0, 1.0], vec![0.0, 0.0], 0.0).unwrap();
        assert_eq!(quadratic_tail_bound(&input).unwrap(), 1.0);
    }

    #[test]
    fn tail_bound_below_loose_version() {
        for i in 0..50 {
            let eta = i as f64 * 0.3;
            let input =
                TailBoundInput::new(vec![0.5, -1.0, 2.0], vec![0.3, 0.0, -1.2], eta).unwrap();
            assert!(quadratic_tail_bound(&input).unwrap() <= loose_tail_bound(eta) + 1e-15);
        }
    }

    #[test]
    fn tail_bound_rejects_zero_lambdas() {
        let input = TailBoundInput::new(vec![0.0, 0.0], vec![1.0, 2.0], 1.0).unwrap();
        assert!(quadratic_tail_bound(&input).is_err());
    }

    #[test]
    fn cdf_bounds_at_zero_r() {
        assert_eq!(cdf_bounds(3, 2.0, 0.0).unwrap(), (0.0, 1.0));
        assert!(cdf_bounds(3, 2.0, -1.0).is_err());
    }

    #[test]
    fn cdf_conforms_to_exponential_bounds() {
        for &k in &[1u32, 3, 10, 50] {
            for &d2 in &[0.0, 1.0, 5.0, 25.0] {
                for &r in &[0.5, 2.0, 10.0, 30.0] {
                    let (lower, upper) = cdf_bounds(k, d2, r).unwrap();
                    let mean = k as f64 + d2;
                    let at_plus = cdf(&p(k, d2), mean + r).unwrap();
                    let at_minus = cdf(&p(k, d2), mean - r).unwrap();
                    assert!(at_plus >= lower, "k={k} d2={d2} r={r}");
                    assert!(at_minus <= upper, "k={k} d2={d2} r={r}");
                }
            }
        }
    }
}
