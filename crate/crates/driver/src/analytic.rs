//! Similarity solution of the one-phase Stefan problem.

use std::f64::consts::PI;

use libm::erf;

use crate::error::{DriverError, Result};

/// `f(λ) = St e^{-λ²} / (√π erf λ) - λ`, strictly decreasing on `λ > 0`.
pub fn stefan_residual(st: f64, lambda: f64) -> f64 {
    st * (-lambda * lambda).exp() / (PI.sqrt() * erf(lambda)) - lambda
}

/// Root of [`stefan_residual`] by bisection on `[1e-12, 10]`.
pub fn stefan_lambda(st: f64) -> Result<f64> {
    if !(st > 0.0) || !st.is_finite() {
        return Err(DriverError::config(format!(
            "Stefan number must be positive, got {st}"
        )));
    }
    let (mut lo, mut hi) = (1e-12, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = stefan_residual(st, mid);
        if f == 0.0 {
            return Ok(mid);
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Melting of a solid held at `t_m` by a wall at `t_l` placed at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticalStefan {
    pub lambda: f64,
    /// Liquid thermal diffusivity, m^2/s.
    pub alpha: f64,
    pub t_l: f64,
    pub t_m: f64,
    /// `cp (T_l - T_m) / h_m`.
    pub stefan_number: f64,
}

impl AnalyticalStefan {
    pub fn new(rho: f64, cp: f64, kappa: f64, h_m: f64, t_l: f64, t_m: f64) -> Result<Self> {
        if !(rho > 0.0 && cp > 0.0 && kappa > 0.0 && h_m > 0.0) {
            return Err(DriverError::config(
                "analytic Stefan solution needs positive material constants",
            ));
        }
        let stefan_number = cp * (t_l - t_m) / h_m;
        Ok(AnalyticalStefan {
            lambda: stefan_lambda(stefan_number)?,
            alpha: kappa / (rho * cp),
            t_l,
            t_m,
            stefan_number,
        })
    }

    /// Front position `X(t) = 2 λ √(α t)`.
    pub fn front(&self, t: f64) -> f64 {
        2.0 * self.lambda * (self.alpha * t).sqrt()
    }

    /// Front speed `dX/dt`.
    pub fn front_speed(&self, t: f64) -> f64 {
        self.lambda * (self.alpha / t).sqrt()
    }

    pub fn temperature(&self, x: f64, t: f64) -> f64 {
        if x >= self.front(t) {
            self.t_m
        } else {
            self.t_l
                - (self.t_l - self.t_m) * erf(x / (2.0 * (self.alpha * t).sqrt()))
                    / erf(self.lambda)
        }
    }

    /// Temperature at `x` and front position at `t`.
    pub fn evaluate(&self, x: f64, t: f64) -> (f64, f64) {
        (self.temperature(x, t), self.front(t))
    }

    /// `∂T/∂x` on the liquid side.
    pub fn gradient(&self, x: f64, t: f64) -> f64 {
        let s = 2.0 * (self.alpha * t).sqrt();
        -(self.t_l - self.t_m) / erf(self.lambda) * 2.0 / PI.sqrt() * (-(x / s).powi(2)).exp() / s
    }
}
