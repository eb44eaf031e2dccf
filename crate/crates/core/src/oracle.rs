//! Numerical reference for the quantile: fixed-step classical RK4 on the
//! inverse equation `dX/dF = 1/(α(F^g − F^h))`, `X(F0) = X0`.
//!
//! Also hosts the continuation used by the analytic path once `F^γ` gets
//! close to one. There the inverse equation is integrated in
//! `s = 1 − F^γ`, where the right-hand side splits into an exact `1/s` part
//! and a smooth bounded remainder.

use crate::error::{Error, Result};
use crate::params::SParams;
use crate::solution::Shape;

const TAIL_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeMethod {
    /// Classical fourth-order Runge–Kutta.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeConfig {
    pub step_count: usize,
    pub method: OdeMethod,
    pub f_floor: f64,
    pub f_ceil: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            step_count: 100_000,
            method: OdeMethod::Rk4,
            f_floor: 1e-6,
            f_ceil: 1.0 - 1e-6,
        }
    }
}

impl OdeConfig {
    pub fn with_steps(step_count: usize) -> Self {
        Self {
            step_count,
            ..Self::default()
        }
    }

    fn validate(&self, f0: f64) -> Result<()> {
        if self.step_count < 100 {
            return Err(Error::Domain(format!(
                "oracle step_count must be >= 100, got {}",
                self.step_count
            )));
        }
        if !(0.0 < self.f_floor && self.f_floor < f0 && f0 < self.f_ceil && self.f_ceil < 1.0) {
            return Err(Error::Domain(format!(
                "oracle limits must satisfy 0 < f_floor < f0 < f_ceil < 1, got {} / {} / {}",
                self.f_floor, f0, self.f_ceil
            )));
        }
        Ok(())
    }
}

/// Quantile at `f` by integrating the inverse equation from `(F0, X0)` on a
/// uniform grid of `cfg.step_count` steps.
pub fn oracle_quantile(p: &SParams, f: f64, cfg: &OdeConfig) -> Result<f64> {
    p.validate()?;
    cfg.validate(p.f0)?;
    if !(cfg.f_floor..=cfg.f_ceil).contains(&f) {
        return Err(Error::Domain(format!(
            "oracle F = {f} outside [{}, {}]",
            cfg.f_floor, cfg.f_ceil
        )));
    }
    let gamma = p.gamma();
    let rhs = |xi: f64| {
        let l = xi.ln();
        1.0 / (p.alpha * (p.g * l).exp() * -(gamma * l).exp_m1())
    };
    let n = cfg.step_count;
    let step = (f - p.f0) / n as f64;
    let mut x = p.x0;
    match cfg.method {
        OdeMethod::Rk4 => {
            for i in 0..n {
                let t = p.f0 + step * i as f64;
                let k1 = rhs(t);
                // k2 and k3 coincide: the right-hand side does not depend on X.
                let k23 = rhs(t + 0.5 * step);
                let k4 = rhs(t + step);
                x += step / 6.0 * (k1 + 4.0 * k23 + k4);
            }
        }
    }
    Ok(x)
}

/// `∫_a^b ξ^{−g}/(1 − ξ^γ) dξ` for `a, b` close to one.
///
/// With `s = 1 − ξ^γ` and `p = λ/γ − 1` the integral becomes
/// `(1/γ) [ln(s_a/s_b) + ∫_{s_b}^{s_a} ((1 − s)^p − 1)/s ds]`; the second
/// integrand is smooth and tends to `−p` as `s → 0`.
pub(crate) fn tail_increment(shape: &Shape, a: f64, b: f64) -> f64 {
    let gamma = shape.gamma();
    let p = shape.lambda() / gamma - 1.0;
    let s_of = |f: f64| -(gamma * f.ln()).exp_m1();
    let (sa, sb) = (s_of(a), s_of(b));
    let rhs = |s: f64| {
        if s == 0.0 {
            -p
        } else {
            (p * (-s).ln_1p()).exp_m1() / s
        }
    };
    let step = (sa - sb) / TAIL_STEPS as f64;
    let mut correction = 0.0;
    for i in 0..TAIL_STEPS {
        let t = sb + step * i as f64;
        correction += step / 6.0 * (rhs(t) + 4.0 * rhs(t + 0.5 * step) + rhs(t + step));
    }
    ((sa / sb).ln() + correction) / gamma
}
