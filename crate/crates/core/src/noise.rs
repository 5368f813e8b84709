//! Measurement-error distributions.
//!
//! Supplies the complex Fourier transform `f*_eta` (convention
//! `f*(u) = ∫ e^{-iux} f(x) dx`), the deconvolution variance factor
//!
//! ```text
//! Delta_eta(m) = (1/2pi) ∫_{-pi m}^{pi m} du / |f*_eta(u)|^2 ,
//! ```
//!
//! and samplers for the exponential, bi-exponential and empirical noise
//! kinds. A scale factor `s` multiplies the random variable, so
//! `f*_{s eta}(u) = f*_eta(s u)`.

use crate::error::{CoreError, Result};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default number of Riemann points for the empirical variance factor.
pub const DEFAULT_RIEMANN_POINTS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseKind {
    /// `f_eta(x) = theta e^{-theta x}` on `x > 0`.
    Exponential { theta: f64 },
    /// Difference of exponentials
    /// `f_eta(x) = (alpha nu / (alpha - beta)) e^{-nu x} - (beta tau / (alpha - beta)) e^{-tau x}`
    /// with `alpha > beta`, `nu < tau`, `beta tau / (alpha nu) >= 1`.
    BiExponential {
        alpha: f64,
        beta: f64,
        nu: f64,
        tau: f64,
    },
    /// A stored noise sample; the transform is the empirical characteristic
    /// function `(1/M) sum_k e^{-iu eta_k}`.
    Empirical { values: Vec<f64> },
}

/// A noise distribution together with a positive scale multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub scale: f64,
}

impl NoiseModel {
    pub fn exponential(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(CoreError::config(format!(
                "exponential noise rate must be positive, got {theta}"
            )));
        }
        Ok(NoiseModel {
            kind: NoiseKind::Exponential { theta },
            scale: 1.0,
        })
    }

    pub fn bi_exponential(alpha: f64, beta: f64, nu: f64, tau: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("nu", nu), ("tau", tau)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CoreError::config(format!(
                    "bi-exponential parameter {name} must be positive, got {v}"
                )));
            }
        }
        if alpha <= beta {
            return Err(CoreError::config(format!(
                "bi-exponential requires alpha > beta, got alpha={alpha}, beta={beta}"
            )));
        }
        if nu >= tau {
            return Err(CoreError::config(format!(
                "bi-exponential requires nu < tau, got nu={nu}, tau={tau}"
            )));
        }
        if beta * tau / (alpha * nu) < 1.0 - 1e-12 {
            return Err(CoreError::config(format!(
                "bi-exponential requires beta*tau/(alpha*nu) >= 1, got {}",
                beta * tau / (alpha * nu)
            )));
        }
        Ok(NoiseModel {
            kind: NoiseKind::BiExponential {
                alpha,
                beta,
                nu,
                tau,
            },
            scale: 1.0,
        })
    }

    /// The bi-exponential with the simulation-study parameters
    /// `alpha = 2, beta = 1, nu = 1, tau = 2`.
    pub fn bi_exponential_reference() -> Self {
        NoiseModel::bi_exponential(2.0, 1.0, 1.0, 2.0).expect("valid reference parameters")
    }

    pub fn empirical(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(CoreError::config("empirical noise needs M >= 1 values".to_string()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(CoreError::config(
                "empirical noise values must be finite and nonnegative".to_string(),
            ));
        }
        Ok(NoiseModel {
            kind: NoiseKind::Empirical { values },
            scale: 1.0,
        })
    }

    /// Returns the model rescaled by `s > 0` (multiplies the variable).
    pub fn scaled(mut self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CoreError::config(format!("scale must be positive, got {s}")));
        }
        self.scale *= s;
        Ok(self)
    }

    /// Rescales so the noise variance equals `sigma2`.
    pub fn with_variance(self, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(CoreError::config(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        let unit_var = self.unit_variance();
        let current = self.scale * self.scale * unit_var;
        let factor = (sigma2 / current).sqrt();
        self.scaled(factor)
    }

    /// Variance of the unscaled kind.
    pub fn unit_variance(&self) -> f64 {
        match &self.kind {
            NoiseKind::Exponential { theta } => 1.0 / (theta * theta),
            NoiseKind::BiExponential {
                alpha,
                beta,
                nu,
                tau,
            } => {
                let c1 = alpha * nu / (alpha - beta);
                let c2 = beta * tau / (alpha - beta);
                let m1 = c1 / (nu * nu) - c2 / (tau * tau);
                let m2 = 2.0 * c1 / (nu * nu * nu) - 2.0 * c2 / (tau * tau * tau);
                m2 - m1 * m1
            }
            NoiseKind::Empirical { values } => {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
            }
        }
    }

    /// Mean of the scaled noise variable.
    pub fn mean(&self) -> f64 {
        let unit = match &self.kind {
            NoiseKind::Exponential { theta } => 1.0 / theta,
            NoiseKind::BiExponential {
                alpha,
                beta,
                nu,
                tau,
            } => {
                let c1 = alpha * nu / (alpha - beta);
                let c2 = beta * tau / (alpha - beta);
                c1 / (nu * nu) - c2 / (tau * tau)
            }
            NoiseKind::Empirical { values } => {
                values.iter().sum::<f64>() / values.len() as f64
            }
        };
        self.scale * unit
    }

    /// Ordinary-smooth decay order of `|f*_eta|^2`, where known.
    pub fn smoothness_order(&self) -> Option<u32> {
        match self.kind {
            NoiseKind::Exponential { .. } => Some(1),
            NoiseKind::BiExponential { .. } => Some(2),
            NoiseKind::Empirical { .. } => None,
        }
    }

    /// Number of stored noise values for the empirical kind.
    pub fn empirical_size(&self) -> Option<usize> {
        match &self.kind {
            NoiseKind::Empirical { values } => Some(values.len()),
            _ => None,
        }
    }

    /// Fourier transform `f*_{s eta}(u) = f*_eta(s u)`.
    pub fn noise_ft(&self, u: f64) -> Complex64 {
        let su = self.scale * u;
        match &self.kind {
            NoiseKind::Exponential { theta } => {
                // theta / (theta + iu)
                Complex64::new(*theta, 0.0) / Complex64::new(*theta, su)
            }
            NoiseKind::BiExponential {
                alpha,
                beta,
                nu,
                tau,
            } => {
                let c1 = alpha * nu / (alpha - beta);
                let c2 = beta * tau / (alpha - beta);
                Complex64::new(c1, 0.0) / Complex64::new(*nu, su)
                    - Complex64::new(c2, 0.0) / Complex64::new(*tau, su)
            }
            NoiseKind::Empirical { values } => {
                let (mut re, mut im) = (0.0, 0.0);
                for v in values {
                    let (s, c) = (-su * v).sin_cos();
                    re += c;
                    im += s;
                }
                let m = values.len() as f64;
                Complex64::new(re / m, im / m)
            }
        }
    }

    /// Deconvolution variance factor `Delta_eta(m)`.
    ///
    /// Parametric kinds use closed forms (scale-adjusted); the empirical
    /// kind uses a Riemann sum with `|f*|^2` floored at `1/M` so near-zeros
    /// of the estimated transform cannot blow up the integral.
    pub fn delta_eta(&self, m: usize, riemann_points: usize) -> Result<f64> {
        if m < 1 {
            return Err(CoreError::domain("delta_eta needs m >= 1".to_string()));
        }
        let mf = m as f64;
        let s = self.scale;
        match &self.kind {
            NoiseKind::Exponential { theta } => {
                // (1/2pi) int (1 + s^2 u^2 / theta^2) du over [-pi m, pi m]
                Ok(mf + PI * PI * mf.powi(3) * s * s / (3.0 * theta * theta))
            }
            NoiseKind::BiExponential {
                alpha,
                beta,
                nu,
                tau,
            } => {
                let c1 = alpha * nu / (alpha - beta);
                let c2 = beta * tau / (alpha - beta);
                // f*(u) = (nu tau + i u (c1 - c2)) / ((nu + iu)(tau + iu))
                // 1/|f*(u)|^2 = (u^4 + p u^2 + c0) / (d u^2 + c0)
                let d = (c1 - c2) * (c1 - c2);
                let c0 = nu * nu * tau * tau;
                let p = nu * nu + tau * tau;
                let upper = PI * mf * s;
                let half = if d < 1e-14 * p {
                    // polynomial integrand
                    upper.powi(5) / (5.0 * c0) + p * upper.powi(3) / (3.0 * c0) + upper
                } else {
                    // long division: u^2/d + (p/d - c0/d^2) + r/(d u^2 + c0)
                    let lin = p / d - c0 / (d * d);
                    let r = c0 * (1.0 - p / d + c0 / (d * d));
                    upper.powi(3) / (3.0 * d)
                        + lin * upper
                        + r / (d * c0).sqrt() * (upper * (d / c0).sqrt()).atan()
                };
                Ok(half / (PI * s))
            }
            NoiseKind::Empirical { values } => {
                let points = riemann_points.max(2);
                let floor = 1.0 / values.len() as f64;
                let mut sum = 0.0;
                for step in 0..=points {
                    let u = -PI * mf * (1.0 - 2.0 * step as f64 / points as f64);
                    let sq = self.noise_ft(u).norm_sqr().max(floor);
                    sum += 1.0 / sq;
                }
                Ok(mf / points as f64 * sum)
            }
        }
    }

    /// One draw of the scaled noise variable.
    ///
    /// Exponential by inverse CDF; bi-exponential by accept-reject against
    /// its dominating first term; empirical by resampling with replacement.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let unit = match &self.kind {
            NoiseKind::Exponential { theta } => -ln_survival(rng.random()) / theta,
            NoiseKind::BiExponential {
                alpha,
                beta,
                nu,
                tau,
            } => {
                let c1 = alpha * nu / (alpha - beta);
                let c2 = beta * tau / (alpha - beta);
                loop {
                    let x = -ln_survival(rng.random()) / nu;
                    let accept = 1.0 - c2 / c1 * (-(tau - nu) * x).exp();
                    if rng.random::<f64>() < accept {
                        break x;
                    }
                }
            }
            NoiseKind::Empirical { values } => {
                let idx = rng.random_range(0..values.len());
                values[idx]
            }
        };
        self.scale * unit
    }

    /// `n` draws of the scaled noise variable.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(CoreError::domain("need n >= 1 draws".to_string()));
        }
        Ok((0..n).map(|_| self.sample_one(rng)).collect())
    }
}

fn ln_survival(u: f64) -> f64 {
    if u <= 0.0 {
        f64::MIN_POSITIVE.ln()
    } else {
        u.ln()
    }
}
