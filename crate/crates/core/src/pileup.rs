//! Generating-function machinery for the photon-count distribution.
//!
//! An observation of the pile-up model is `Z = min{Y_1, ..., Y_N}` where the
//! `Y_k` are i.i.d. from the target distribution and `N >= 1` is a random
//! count with probability generating function `M(u) = E[u^N]`. The observed
//! CDF is then `G(z) = 1 - M(1 - F(z))`, and moments of the target can be
//! recovered through the weight function
//!
//! ```text
//! w(u) = 1 / M'(M^{-1}(1 - u)),      E[h(Y)] = E[h(Z) w(G(Z))].
//! ```
//!
//! Applied at rank positions `i/n`, the weights de-bias sums of order
//! statistics (an L-statistic). This module houses `M`, its derivatives and
//! inverse, the weight function, and its bounds.

use crate::error::{CoreError, Result};
use crate::quad::adaptive_simpson;
use serde::{Deserialize, Serialize};

/// Largest supported count for tabulated mass functions. Practical photon
/// counts are small and `E[N^2] < inf` must hold for the weight bounds.
pub const MAX_TABULATED_COUNT: usize = 64;

/// Distribution of the number `N >= 1` of draws entering each minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeneratingModel {
    /// Poisson(mu) conditioned on `N >= 1`: `P(N=k) = mu^k / (k! (e^mu - 1))`.
    ZeroTruncatedPoisson { mu: f64 },
    /// Explicit masses `p_k` over `k = 1..=K`, `K <= 64`.
    TabulatedMasses { masses: Vec<f64> },
}

/// Bounds and constants of the weight function `w`.
///
/// `w0 <= w(u) <= w1` on `[0,1]`, `|w(x)-w(y)| <= c_w |x-y|`, and
/// `w_square_integral = ∫_0^1 w^2(u) du` (the penalty constant).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub w0: f64,
    pub w1: f64,
    pub c_w: f64,
    pub w_square_integral: f64,
}

fn check_unit(value: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(CoreError::domain(format!(
            "{what} must lie in [0, 1], got {value}"
        )));
    }
    Ok(())
}

impl GeneratingModel {
    /// Zero-truncated Poisson model with intensity `mu > 0`.
    pub fn poisson(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(CoreError::config(format!(
                "Poisson intensity must be positive and finite, got {mu}"
            )));
        }
        Ok(GeneratingModel::ZeroTruncatedPoisson { mu })
    }

    /// Tabulated masses `p_1, ..., p_K`; requires `p_1 > 0`, `p_2 > 0` and
    /// unit total mass so the derivative bounds of the weight function hold.
    pub fn tabulated(masses: Vec<f64>) -> Result<Self> {
        if masses.len() < 2 {
            return Err(CoreError::config(
                "tabulated model needs masses for at least k = 1 and k = 2".to_string(),
            ));
        }
        if masses.len() > MAX_TABULATED_COUNT {
            return Err(CoreError::config(format!(
                "tabulated model supports at most K = {MAX_TABULATED_COUNT} counts, got {}",
                masses.len()
            )));
        }
        if masses.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(CoreError::config(
                "tabulated masses must be finite and nonnegative".to_string(),
            ));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::config(format!(
                "tabulated masses must sum to 1 within 1e-12, got {total}"
            )));
        }
        if masses[0] <= 0.0 || masses[1] <= 0.0 {
            return Err(CoreError::config(
                "tabulated model requires p_1 > 0 and p_2 > 0".to_string(),
            ));
        }
        Ok(GeneratingModel::TabulatedMasses { masses })
    }

    /// Generating function `M(u) = E[u^N]`.
    pub fn gen_m(&self, u: f64) -> Result<f64> {
        check_unit(u, "u")?;
        Ok(match self {
            GeneratingModel::ZeroTruncatedPoisson { mu } => {
                // (e^{mu u} - 1) / (e^mu - 1), stable for tiny mu
                (mu * u).exp_m1() / mu.exp_m1()
            }
            GeneratingModel::TabulatedMasses { masses } => {
                // Horner over p_k u^k = u * (p_1 + u (p_2 + ...))
                let inner = masses.iter().rev().fold(0.0, |acc, p| acc * u + p);
                u * inner
            }
        })
    }

    /// First derivative `M'(u) = E[N u^{N-1}]`.
    pub fn gen_mdot(&self, u: f64) -> Result<f64> {
        check_unit(u, "u")?;
        Ok(match self {
            GeneratingModel::ZeroTruncatedPoisson { mu } => mu * (mu * u).exp() / mu.exp_m1(),
            GeneratingModel::TabulatedMasses { masses } => masses
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (idx, p)| acc * u + (idx as f64 + 1.0) * p),
        })
    }

    /// Second derivative `M''(u) = E[N (N-1) u^{N-2}]`.
    pub fn gen_mddot(&self, u: f64) -> Result<f64> {
        check_unit(u, "u")?;
        Ok(match self {
            GeneratingModel::ZeroTruncatedPoisson { mu } => {
                mu * mu * (mu * u).exp() / mu.exp_m1()
            }
            GeneratingModel::TabulatedMasses { masses } => masses
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (idx, p)| {
                    let k = idx as f64 + 1.0;
                    acc * u + k * (k - 1.0) * p
                }),
        })
    }

    /// Inverse of the generating function on `[0, 1]`.
    ///
    /// Poisson uses the closed form `ln(1 + v (e^mu - 1)) / mu`; tabulated
    /// models run bisection refined by one Newton step per iteration on the
    /// strictly monotone `M` (bracket `[0,1]`, 100 iterations).
    pub fn gen_minv(&self, v: f64) -> Result<f64> {
        check_unit(v, "v")?;
        match self {
            GeneratingModel::ZeroTruncatedPoisson { mu } => {
                Ok((v * mu.exp_m1()).ln_1p() / mu)
            }
            GeneratingModel::TabulatedMasses { .. } => {
                let mut lo = 0.0f64;
                let mut hi = 1.0f64;
                let mut x = v; // M(u) ~ u is a fair start
                for _ in 0..100 {
                    let fx = self.gen_m(x)? - v;
                    if fx.abs() < 1e-15 {
                        return Ok(x);
                    }
                    if fx > 0.0 {
                        hi = x;
                    } else {
                        lo = x;
                    }
                    let slope = self.gen_mdot(x)?;
                    let newton = x - fx / slope;
                    x = if newton.is_finite() && newton > lo && newton < hi {
                        newton
                    } else {
                        0.5 * (lo + hi)
                    };
                }
                if (hi - lo) < 1e-12 {
                    Ok(x)
                } else {
                    Err(CoreError::numeric(format!(
                        "generating-function inverse did not converge at v = {v}"
                    )))
                }
            }
        }
    }

    /// Pile-up correction weight `w(u) = 1 / M'(M^{-1}(1 - u))`.
    pub fn weight_w(&self, u: f64) -> Result<f64> {
        check_unit(u, "u")?;
        match self {
            GeneratingModel::ZeroTruncatedPoisson { mu } => {
                // (1 - e^{-mu}) / (mu (u (e^{-mu} - 1) + 1))
                Ok(-(-mu).exp_m1() / (mu * (u * (-mu).exp_m1() + 1.0)))
            }
            GeneratingModel::TabulatedMasses { .. } => {
                Ok(1.0 / self.gen_mdot(self.gen_minv(1.0 - u)?)?)
            }
        }
    }

    /// Weight-function bounds `(w0, w1)`, Lipschitz constant and `∫ w^2`.
    ///
    /// The square integral is computed by adaptive quadrature (abs tol 1e-10)
    /// for every model kind; the Poisson closed form serves as a test oracle.
    /// Tabulated models bound the Lipschitz constant by `b / a^3` from
    /// 10^4-point grids of `M'` and `M''`.
    pub fn weight_profile(&self) -> Result<WeightProfile> {
        let (w0, w1, c_w) = match self {
            GeneratingModel::ZeroTruncatedPoisson { mu } => {
                let w0 = -(-mu).exp_m1() / mu;
                let w1 = mu.exp_m1() / mu;
                let c_w = mu.exp_m1().powi(2) / mu;
                (w0, w1, c_w)
            }
            GeneratingModel::TabulatedMasses { .. } => {
                const GRID: usize = 10_000;
                let mut a = f64::INFINITY;
                let mut b = f64::NEG_INFINITY;
                for i in 0..=GRID {
                    let u = i as f64 / GRID as f64;
                    let md = self.gen_mdot(u)?;
                    let mdd = self.gen_mddot(u)?;
                    a = a.min(md).min(mdd);
                    b = b.max(md).max(mdd);
                }
                // M' is increasing, so w spans [1/M'(1), 1/M'(0)]
                let w0 = 1.0 / self.gen_mdot(1.0)?;
                let w1 = 1.0 / self.gen_mdot(0.0)?;
                (w0, w1, b / (a * a * a))
            }
        };
        let model = self.clone();
        let w_square_integral = adaptive_simpson(
            &move |u| model.weight_w(u).unwrap_or(f64::NAN).powi(2),
            0.0,
            1.0,
            1e-10,
        );
        Ok(WeightProfile {
            w0,
            w1,
            c_w,
            w_square_integral,
        })
    }

    /// Weights at rank positions: entry `i` (1-based) is `w(i/n)`.
    pub fn weight_table(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(CoreError::domain("weight table needs n >= 1".to_string()));
        }
        (1..=n)
            .map(|i| self.weight_w(i as f64 / n as f64))
            .collect()
    }

    /// Distortion map applied to the target CDF: `G = 1 - M(1 - F)`.
    pub fn pileup_cdf(&self, target_cdf: f64) -> Result<f64> {
        check_unit(target_cdf, "F(z)")?;
        Ok(1.0 - self.gen_m(1.0 - target_cdf)?)
    }

    /// Inverse distortion: `F = 1 - M^{-1}(1 - G)`.
    pub fn target_cdf_from_pileup(&self, pileup_cdf: f64) -> Result<f64> {
        check_unit(pileup_cdf, "G(z)")?;
        Ok(1.0 - self.gen_minv(1.0 - pileup_cdf)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn poisson(mu: f64) -> GeneratingModel {
        GeneratingModel::poisson(mu).unwrap()
    }

    /// Series oracle for the zero-truncated Poisson generating function:
    /// M(u) = sum_{k>=1} u^k mu^k / (k! (e^mu - 1)), truncated at machine
    /// precision. Independent of the closed form used in production.
    fn poisson_m_series(mu: f64, u: f64) -> f64 {
        let norm = mu.exp_m1();
        let mut term = 1.0f64;
        let mut sum = 0.0f64;
        for k in 1..400 {
            term *= mu * u / k as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
        }
        sum / norm
    }

    fn poisson_mdot_series(mu: f64, u: f64) -> f64 {
        // sum_k k P(N=k) u^{k-1}
        let norm = mu.exp_m1();
        let mut muk = 1.0f64; // mu^k / k!
        let mut sum = 0.0f64;
        for k in 1..400 {
            muk *= mu / k as f64;
            let term = k as f64 * muk * u.powi(k as i32 - 1);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
        }
        sum / norm
    }

    #[test]
    fn gen_m_endpoints_and_midpoint() {
        let m = poisson(1.0);
        assert_abs_diff_eq!(m.gen_m(1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.gen_m(0.0).unwrap(), 0.0, epsilon = 1e-15);
        // Oracle: truncated series to machine precision.
        let oracle = poisson_m_series(1.0, 0.5);
        assert_abs_diff_eq!(m.gen_m(0.5).unwrap(), oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(m.gen_m(0.5).unwrap(), 0.377541, epsilon = 5e-7);
    }

    #[test]
    fn gen_m_rejects_out_of_domain() {
        let m = poisson(1.0);
        assert!(m.gen_m(-0.1).is_err());
        assert!(m.gen_m(1.1).is_err());
        assert!(m.gen_m(f64::NAN).is_err());
    }

    #[test]
    fn gen_mdot_values() {
        let m = poisson(1.0);
        assert_abs_diff_eq!(
            m.gen_mdot(0.0).unwrap(),
            poisson_mdot_series(1.0, 0.0),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(m.gen_mdot(0.0).unwrap(), 0.581977, epsilon = 5e-7);
        // M'(1) is the zero-truncated mean mu / (1 - e^{-mu}).
        let mean = 1.0 / -(-1.0f64).exp_m1();
        assert_abs_diff_eq!(m.gen_mdot(1.0).unwrap(), mean, epsilon = 1e-14);
        assert_abs_diff_eq!(m.gen_mdot(1.0).unwrap(), 1.581977, epsilon = 5e-7);

        let t = GeneratingModel::tabulated(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(t.gen_mdot(0.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gen_minv_round_trips() {
        let m = poisson(1.0);
        assert_abs_diff_eq!(m.gen_minv(1.0).unwrap(), 1.0, epsilon = 1e-14);
        let v = m.gen_m(0.5).unwrap();
        assert_abs_diff_eq!(m.gen_minv(v).unwrap(), 0.5, epsilon = 1e-12);
        // Closed form at mu = 2, v = 0.5, cross-checked by the round trip.
        let m2 = poisson(2.0);
        let x = m2.gen_minv(0.5).unwrap();
        assert_abs_diff_eq!(x, 0.5 * (1.0 + 0.5 * 2.0f64.exp_m1()).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(x, 0.716891, epsilon = 5e-7);
        assert_abs_diff_eq!(m2.gen_m(x).unwrap(), 0.5, epsilon = 1e-13);
    }

    #[test]
    fn gen_minv_matches_root_finding_oracle() {
        // Generic bracketed bisection on the monotone M, independent of the
        // Poisson closed form.
        let m = poisson(1.7);
        for &v in &[0.0, 0.1, 0.35, 0.5, 0.82, 1.0] {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if m.gen_m(mid).unwrap() < v {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let oracle = 0.5 * (lo + hi);
            assert_abs_diff_eq!(m.gen_minv(v).unwrap(), oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn tabulated_minv_converges() {
        let t = GeneratingModel::tabulated(vec![0.3, 0.25, 0.25, 0.2]).unwrap();
        for i in 0..=50 {
            let v = i as f64 / 50.0;
            let u = t.gen_minv(v).unwrap();
            assert_abs_diff_eq!(t.gen_m(u).unwrap(), v, epsilon = 1e-12);
        }
    }

    #[test]
    fn weight_w_values() {
        let m = poisson(1.0);
        let w0 = -(-1.0f64).exp_m1();
        let w1 = 1.0f64.exp_m1();
        assert_abs_diff_eq!(m.weight_w(0.0).unwrap(), w0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.weight_w(0.0).unwrap(), 0.632121, epsilon = 5e-7);
        assert_abs_diff_eq!(m.weight_w(1.0).unwrap(), w1, epsilon = 1e-14);
        assert_abs_diff_eq!(m.weight_w(1.0).unwrap(), 1.718282, epsilon = 5e-7);
        // Oracle: generic composition 1 / M'(M^{-1}(1 - u)).
        let generic = 1.0 / m.gen_mdot(m.gen_minv(0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(m.weight_w(0.5).unwrap(), generic, epsilon = 1e-13);
        assert_abs_diff_eq!(m.weight_w(0.5).unwrap(), 0.924234, epsilon = 5e-7);
    }

    #[test]
    fn weight_profile_poisson() {
        let p = poisson(2.0).weight_profile().unwrap();
        // Paper/simulation constant: c_w^2 ~ 416 for mu = 2.
        assert_abs_diff_eq!(p.c_w * p.c_w, 416.569, epsilon = 0.05);

        let p1 = poisson(1.0).weight_profile().unwrap();
        // Closed-form oracle for the square integral: (1 - e^{-mu})^2 e^mu / mu^2.
        let closed = (-(-1.0f64).exp_m1()).powi(2) * 1.0f64.exp();
        assert_abs_diff_eq!(p1.w_square_integral, closed, epsilon = 1e-9);
        assert_abs_diff_eq!(p1.w_square_integral, 1.086161, epsilon = 5e-7);
        assert!(p1.w0 * p1.w0 <= p1.w_square_integral + 1e-12);
        assert!(p1.w_square_integral <= p1.w1 * p1.w1 + 1e-12);
    }

    #[test]
    fn weight_profile_degenerate_pileup() {
        let p = poisson(1e-8).weight_profile().unwrap();
        assert_abs_diff_eq!(p.w0, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(p.w1, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(p.w_square_integral, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn weight_profile_tabulated_bounds() {
        let t = GeneratingModel::tabulated(vec![0.5, 0.5]).unwrap();
        let p = t.weight_profile().unwrap();
        // M'(u) = 0.5 + u, M''(u) = 1: a = 0.5, b = 1.5, c_w bound 1.5/0.125.
        assert_abs_diff_eq!(p.w0, 1.0 / 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.w1, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.c_w, 1.5 / 0.125, epsilon = 1e-9);
    }

    #[test]
    fn weight_table_values() {
        let m = poisson(1.0);
        let t = m.weight_table(2).unwrap();
        assert_abs_diff_eq!(t[0], 0.924234, epsilon = 5e-7);
        assert_abs_diff_eq!(t[1], 1.718282, epsilon = 5e-7);
        let t1 = m.weight_table(1).unwrap();
        assert_abs_diff_eq!(t1[0], 1.718282, epsilon = 5e-7);
        for w in poisson(1e-8).weight_table(5).unwrap() {
            assert_abs_diff_eq!(w, 1.0, epsilon = 1e-7);
        }
        assert!(m.weight_table(0).is_err());
    }

    #[test]
    fn pileup_cdf_distortion() {
        let m = poisson(1.0);
        assert_abs_diff_eq!(m.pileup_cdf(0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.pileup_cdf(1.0).unwrap(), 1.0, epsilon = 1e-15);
        let g = m.pileup_cdf(0.5).unwrap();
        assert_abs_diff_eq!(g, 1.0 - m.gen_m(0.5).unwrap(), epsilon = 1e-15);
        assert_abs_diff_eq!(g, 0.622459, epsilon = 5e-7);
        assert_abs_diff_eq!(m.target_cdf_from_pileup(g).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.target_cdf_from_pileup(0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.target_cdf_from_pileup(1.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(GeneratingModel::poisson(0.0).is_err());
        assert!(GeneratingModel::poisson(-1.0).is_err());
        assert!(GeneratingModel::tabulated(vec![1.0]).is_err());
        assert!(GeneratingModel::tabulated(vec![0.6, 0.35]).is_err());
        assert!(GeneratingModel::tabulated(vec![0.0, 1.0]).is_err());
        assert!(GeneratingModel::tabulated(vec![0.5; 130]).is_err());
    }
}
