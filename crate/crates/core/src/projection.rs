//! Projection density estimator on the trigonometric basis.
//!
//! Observations are affinely mapped onto `[0, 1]`, where the orthonormal
//! system `{1, sqrt(2) cos(2 pi j x), sqrt(2) sin(2 pi j x)}` spans the
//! candidate spaces. The weighted coefficients
//!
//! ```text
//! a_lambda = (1/n) sum_i phi_lambda(xi_(i)) w(i/n)
//! ```
//!
//! de-bias the pile-up distortion, and the dimension is chosen by
//! minimizing `-sum a^2 + kappa W (2m+1)/n`, evaluated by a recursion that
//! updates the criterion in O(1) per candidate.

use crate::error::{CoreError, Result};
use crate::samplers::Sample;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Fitted trigonometric estimate on an interval.
///
/// `coeffs` holds `2 m_hat + 1` values ordered `a_0, a_{1,cos}, a_{1,sin},
/// ..., a_{m,cos}, a_{m,sin}` for the basis rescaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigEstimate {
    pub basis: String,
    pub m: usize,
    pub interval: (f64, f64),
    pub coeffs: Vec<f64>,
    pub n: usize,
    pub dropped: usize,
}

impl TrigEstimate {
    fn new(m: usize, interval: (f64, f64), coeffs: Vec<f64>, n: usize, dropped: usize) -> Self {
        debug_assert_eq!(coeffs.len(), 2 * m + 1);
        TrigEstimate {
            basis: "trig".to_string(),
            m,
            interval,
            coeffs,
            n,
            dropped,
        }
    }

    /// Raw density estimate at `x`; zero outside the interval, may be
    /// negative inside (the L2 projection is not constrained to be a
    /// density).
    pub fn evaluate(&self, x: f64) -> f64 {
        let (lo, hi) = self.interval;
        if x < lo || x > hi {
            return 0.0;
        }
        let t = (x - lo) / (hi - lo);
        let mut total = self.coeffs[0];
        let theta = 2.0 * PI * t;
        let (sin1, cos1) = theta.sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        for j in 1..=self.m {
            let next_c = c * cos1 - s * sin1;
            let next_s = s * cos1 + c * sin1;
            c = next_c;
            s = next_s;
            total += SQRT_2 * (self.coeffs[2 * j - 1] * c + self.coeffs[2 * j] * s);
        }
        total / (hi - lo)
    }

    /// Nonnegative view for display output.
    pub fn evaluate_clipped(&self, x: f64) -> f64 {
        self.evaluate(x).max(0.0)
    }
}

/// Default estimation interval `(0, max(Z) (1 + 1/n))`.
pub fn default_interval(sample: &Sample) -> (f64, f64) {
    let n = sample.n() as f64;
    (0.0, sample.max() * (1.0 + 1.0 / n))
}

/// Evaluates the `2m + 1` basis functions at `x` in `[0, 1]`.
pub fn trig_basis(m: usize, x: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(CoreError::domain(format!(
            "basis argument must lie in [0, 1], got {x}"
        )));
    }
    let mut out = Vec::with_capacity(2 * m + 1);
    out.push(1.0);
    for j in 1..=m {
        let theta = 2.0 * PI * j as f64 * x;
        out.push(SQRT_2 * theta.cos());
        out.push(SQRT_2 * theta.sin());
    }
    Ok(out)
}

/// Weighted basis coefficients up to frequency `m_max`, plus the count of
/// observations dropped for falling outside the interval.
///
/// The inner loop advances `(cos, sin)` of consecutive frequencies by the
/// angle-addition rule, so no trigonometric function is called per `(i, j)`.
fn coefficients_up_to(
    sample: &Sample,
    interval: (f64, f64),
    m_max: usize,
) -> Result<(Vec<f64>, usize)> {
    let (lo, hi) = interval;
    if !(hi > lo) {
        return Err(CoreError::domain(format!(
            "interval must satisfy lo < hi, got ({lo}, {hi})"
        )));
    }
    let n = sample.n();
    let mut acc = vec![0.0f64; 2 * m_max + 1];
    let mut dropped = 0usize;
    for (z, w) in sample.values().iter().zip(sample.weights()) {
        let t = (z - lo) / (hi - lo);
        if !(0.0..=1.0).contains(&t) {
            dropped += 1;
            continue;
        }
        acc[0] += w;
        let theta = 2.0 * PI * t;
        let (sin1, cos1) = theta.sin_cos();
        let (mut c, mut s) = (1.0f64, 0.0f64);
        for j in 1..=m_max {
            let next_c = c * cos1 - s * sin1;
            let next_s = s * cos1 + c * sin1;
            c = next_c;
            s = next_s;
            acc[2 * j - 1] += w * c;
            acc[2 * j] += w * s;
        }
    }
    let inv_n = 1.0 / n as f64;
    acc[0] *= inv_n;
    for v in acc.iter_mut().skip(1) {
        *v *= SQRT_2 * inv_n;
    }
    Ok((acc, dropped))
}

/// Weighted coefficients `a_lambda` for the model of frequency `m`.
pub fn fit_coefficients(sample: &Sample, interval: (f64, f64), m: usize) -> Result<Vec<f64>> {
    let (coeffs, _) = coefficients_up_to(sample, interval, m)?;
    Ok(coeffs)
}

/// Empirical contrast of a fitted model: `-sum a_lambda^2`.
pub fn contrast_value(coeffs: &[f64]) -> f64 {
    -coeffs.iter().map(|a| a * a).sum::<f64>()
}

/// Penalized selection of the frequency count over `m = 0..=floor(n/2)-1`.
///
/// `crit(m) = -sum_{lambda in Lambda_m} a_lambda^2 + kappa W (2m+1)/n` is
/// accumulated recursively: each step subtracts the new cos/sin pair and
/// adds `2 kappa W / n`. Ties resolve toward the smaller model.
pub fn select_model(
    sample: &Sample,
    interval: (f64, f64),
    kappa: f64,
    w_square_integral: f64,
) -> Result<TrigEstimate> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(CoreError::config(format!("kappa must be positive, got {kappa}")));
    }
    let n = sample.n();
    let m_max = (n / 2).saturating_sub(1);
    let (all, dropped) = coefficients_up_to(sample, interval, m_max)?;
    if dropped == n {
        return Err(CoreError::domain(
            "all observations fall outside the estimation interval".to_string(),
        ));
    }

    let pen_unit = kappa * w_square_integral / n as f64;
    let mut crit = -all[0] * all[0] + pen_unit;
    let mut best_m = 0usize;
    let mut best_crit = crit;
    for m in 1..=m_max {
        crit += -all[2 * m - 1] * all[2 * m - 1] - all[2 * m] * all[2 * m] + 2.0 * pen_unit;
        if crit < best_crit {
            best_crit = crit;
            best_m = m;
        }
    }
    let coeffs = all[..2 * best_m + 1].to_vec();
    Ok(TrigEstimate::new(best_m, interval, coeffs, n, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pileup::GeneratingModel;
    use crate::quad::adaptive_simpson;
    use crate::rng::replicate_rng;
    use crate::samplers::{sample_pileup, TargetDistribution};
    use approx::assert_abs_diff_eq;

    #[test]
    fn basis_values() {
        assert_eq!(trig_basis(0, 0.37).unwrap(), vec![1.0]);
        let b = trig_basis(1, 0.0).unwrap();
        assert_abs_diff_eq!(b[0], 1.0);
        assert_abs_diff_eq!(b[1], SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(b[2], 0.0, epsilon = 1e-15);
        let q = trig_basis(1, 0.25).unwrap();
        assert_abs_diff_eq!(q[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q[2], SQRT_2, epsilon = 1e-15);
        assert!(trig_basis(1, -0.2).is_err());
        assert!(trig_basis(1, 1.2).is_err());
    }

    #[test]
    fn basis_is_orthonormal_under_quadrature() {
        // Gram matrix of the m = 5 system on 10^4-point quadrature.
        let m = 5;
        let dim = 2 * m + 1;
        let npts = 10_000;
        let mut gram = vec![vec![0.0f64; dim]; dim];
        for i in 0..npts {
            let x = (i as f64 + 0.5) / npts as f64;
            let b = trig_basis(m, x).unwrap();
            for r in 0..dim {
                for c in 0..dim {
                    gram[r][c] += b[r] * b[c] / npts as f64;
                }
            }
        }
        for r in 0..dim {
            for c in 0..dim {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[r][c], expect, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn unit_weights_give_unit_mean_coefficient() {
        let s = Sample::with_weights(vec![0.1, 0.4, 0.9], vec![1.0, 1.0, 1.0]).unwrap();
        let c = fit_coefficients(&s, (0.0, 1.0), 0).unwrap();
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hand_evaluated_coefficients() {
        // n = 2, rescaled observations at 0 and 0.25, Poisson mu = 1 weights
        // w(1/2) and w(1). Hand evaluation of the weighted sums.
        let model = GeneratingModel::poisson(1.0).unwrap();
        let w = model.weight_table(2).unwrap();
        let s = Sample::with_weights(vec![0.0, 0.25], w.clone()).unwrap();
        let c = fit_coefficients(&s, (0.0, 1.0), 1).unwrap();
        assert_abs_diff_eq!(c[0], (w[0] + w[1]) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c[0], 1.321258, epsilon = 5e-7);
        // cos: (sqrt2 * 1 * w0 + sqrt2 * 0 * w1) / 2
        assert_abs_diff_eq!(c[1], SQRT_2 * w[0] / 2.0, epsilon = 1e-14);
        // sin: (sqrt2 * 0 * w0 + sqrt2 * 1 * w1) / 2
        assert_abs_diff_eq!(c[2], SQRT_2 * w[1] / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c[2], 1.215007, epsilon = 5e-7);
    }

    #[test]
    fn contrast_values() {
        assert_eq!(contrast_value(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(contrast_value(&[1.0]), -1.0);
        let model = GeneratingModel::poisson(1.0).unwrap();
        let w = model.weight_table(2).unwrap();
        let s = Sample::with_weights(vec![0.0, 0.25], w).unwrap();
        let c = fit_coefficients(&s, (0.0, 1.0), 1).unwrap();
        let expect = -(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
        assert_abs_diff_eq!(contrast_value(&c), expect, epsilon = 1e-15);
    }

    #[test]
    fn coefficients_match_direct_basis_sums() {
        // Independent route: explicit trig_basis calls instead of the
        // angle-addition recurrence.
        let model = GeneratingModel::poisson(0.8).unwrap();
        let mut rng = replicate_rng(3, 0);
        let sample = sample_pileup(TargetDistribution::Exp3, &model, None, 200, &mut rng).unwrap();
        let interval = default_interval(&sample);
        let m = 7;
        let fast = fit_coefficients(&sample, interval, m).unwrap();
        let mut slow = vec![0.0f64; 2 * m + 1];
        for (z, w) in sample.values().iter().zip(sample.weights()) {
            let t = (z - interval.0) / (interval.1 - interval.0);
            for (k, phi) in trig_basis(m, t).unwrap().iter().enumerate() {
                slow[k] += w * phi / sample.n() as f64;
            }
        }
        for (a, b) in fast.iter().zip(&slow) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn recursion_matches_brute_force() {
        // 20 random samples: the recursive criterion must select the same
        // model as recomputing crit(m) from scratch for every m.
        let model = GeneratingModel::poisson(1.0).unwrap();
        let profile = model.weight_profile().unwrap();
        for rep in 0..20 {
            let mut rng = replicate_rng(40, rep);
            let n = 30 + (rep as usize % 5) * 17;
            let sample =
                sample_pileup(TargetDistribution::Gamma33, &model, None, n, &mut rng).unwrap();
            let interval = default_interval(&sample);
            let kappa = 0.5 + 0.1 * (rep % 7) as f64;
            let est = select_model(&sample, interval, kappa, profile.w_square_integral).unwrap();

            let m_max = n / 2 - 1;
            let mut best = (usize::MAX, f64::INFINITY);
            for m in 0..=m_max {
                let coeffs = fit_coefficients(&sample, interval, m).unwrap();
                let crit = contrast_value(&coeffs)
                    + kappa * profile.w_square_integral * (2 * m + 1) as f64 / n as f64;
                if crit < best.1 {
                    best = (m, crit);
                }
            }
            assert_eq!(est.m, best.0, "replicate {rep}");

            let sel_crit = contrast_value(&est.coeffs)
                + kappa * profile.w_square_integral * (2 * est.m + 1) as f64 / n as f64;
            assert_abs_diff_eq!(sel_crit, best.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn huge_penalty_selects_constant_model() {
        let model = GeneratingModel::poisson(1.0).unwrap();
        let s = Sample::from_observations(&model, vec![0.3, 0.9]).unwrap();
        let est = select_model(&s, (0.0, 1.0), 1e12, 1.0).unwrap();
        assert_eq!(est.m, 0);
        assert_eq!(est.coeffs.len(), 1);
    }

    #[test]
    fn evaluate_uniform_and_rescaled() {
        let flat = TrigEstimate::new(0, (0.0, 1.0), vec![1.0], 10, 0);
        assert_abs_diff_eq!(flat.evaluate(0.3), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(flat.evaluate(2.0), 0.0);
        let wide = TrigEstimate::new(0, (0.0, 2.0), vec![1.0], 10, 0);
        assert_abs_diff_eq!(wide.evaluate(1.7), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(wide.evaluate(-0.1), 0.0);
    }

    #[test]
    fn estimate_integrates_to_leading_coefficient() {
        // Only phi_0 has a nonzero integral, so int fhat = a_0 regardless
        // of the interval length.
        let model = GeneratingModel::poisson(0.7).unwrap();
        let mut rng = replicate_rng(8, 0);
        let sample = sample_pileup(TargetDistribution::Exp3, &model, None, 300, &mut rng).unwrap();
        let interval = default_interval(&sample);
        let profile = model.weight_profile().unwrap();
        let est = select_model(&sample, interval, 0.5, profile.w_square_integral).unwrap();
        let e = est.clone();
        let integral = adaptive_simpson(&move |x| e.evaluate(x), interval.0, interval.1, 1e-9);
        assert_abs_diff_eq!(integral, est.coeffs[0], epsilon = 1e-6);
    }

    #[test]
    fn parseval_identity() {
        // ||fhat||^2 on the rescaled interval equals sum a^2.
        let model = GeneratingModel::poisson(1.0).unwrap();
        let mut rng = replicate_rng(8, 1);
        let sample =
            sample_pileup(TargetDistribution::Gamma33, &model, None, 400, &mut rng).unwrap();
        let interval = default_interval(&sample);
        let coeffs = fit_coefficients(&sample, interval, 6).unwrap();
        let est = TrigEstimate::new(6, (0.0, 1.0), coeffs.clone(), 400, 0);
        let npts = 200_000;
        let mut norm = 0.0;
        for i in 0..npts {
            let x = (i as f64 + 0.5) / npts as f64;
            let v = est.evaluate(x);
            norm += v * v / npts as f64;
        }
        let sum_sq: f64 = coeffs.iter().map(|a| a * a).sum();
        assert_abs_diff_eq!(norm, sum_sq, epsilon = 1e-8 * sum_sq.max(1.0));
    }

    #[test]
    fn observations_outside_interval_are_dropped() {
        let model = GeneratingModel::poisson(1.0).unwrap();
        let s = Sample::from_observations(&model, vec![0.2, 0.5, 3.0, 9.0]).unwrap();
        let est = select_model(&s, (0.0, 1.0), 0.5, 1.0).unwrap();
        assert_eq!(est.dropped, 2);
        assert_eq!(est.n, 4);
    }

    #[test]
    fn empty_or_degenerate_inputs_error() {
        let model = GeneratingModel::poisson(1.0).unwrap();
        let s = Sample::from_observations(&model, vec![1.0, 2.0]).unwrap();
        assert!(fit_coefficients(&s, (1.0, 1.0), 2).is_err());
        // interval excluding every observation
        assert!(select_model(&s, (10.0, 11.0), 0.5, 1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let est = TrigEstimate::new(1, (0.0, 2.5), vec![1.0, 0.1, -0.2], 50, 3);
        let json = serde_json::to_string(&est).unwrap();
        assert!(json.starts_with("{\"basis\":\"trig\",\"m\":1,"));
        let back: TrigEstimate = serde_json::from_str(&json).unwrap();
        assert_eq!(est, back);
    }

    #[test]
    fn risk_decays_with_sample_size() {
        // Median integrated squared error over 10 replicates shrinks when n
        // grows from 250 to 4000 (Gamma target, mu = 0.5, fixed m = 4).
        let model = GeneratingModel::poisson(0.5).unwrap();
        let truth = TargetDistribution::Gamma33;
        let mut rng = replicate_rng(77, 0);
        let mut ise_at = |n: usize, rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
            let sample = sample_pileup(truth, &model, None, n, rng).unwrap();
            let interval = default_interval(&sample);
            let coeffs = fit_coefficients(&sample, interval, 4).unwrap();
            let est = TrigEstimate::new(4, interval, coeffs, n, 0);
            let npts = 512;
            let hi = interval.1;
            let mut total = 0.0;
            for i in 0..npts {
                let x = (i as f64 + 0.5) * hi / npts as f64;
                let d = est.evaluate(x) - truth.pdf(x);
                total += d * d * hi / npts as f64;
            }
            total
        };
        let mut small: Vec<f64> = (0..10).map(|_| ise_at(250, &mut rng)).collect();
        let mut large: Vec<f64> = (0..10).map(|_| ise_at(4000, &mut rng)).collect();
        small.sort_by(|a, b| a.partial_cmp(b).unwrap());
        large.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(
            large[5] < small[5],
            "median ISE did not decay: {} vs {}",
            large[5],
            small[5]
        );
    }
}
