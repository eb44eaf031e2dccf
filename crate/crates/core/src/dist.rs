//! Quantile, CDF and density of an S-distribution through the analytic
//! quantile solution.

use crate::error::{Error, Result};
use crate::params::{CaseClass, LeftSlope, SParams, Support};
use crate::solution::{Route, Shape};

/// Bracket used by the CDF root finder, `(ε, 1 − ε)`.
pub const CDF_EPS: f64 = 1e-15;

/// Default `|ΔF|` tolerance of [`SDistribution::cdf`].
pub const CDF_TOL: f64 = 1e-12;

const CDF_MAX_ITER: usize = 400;

/// A validated parameter set together with its precomputed shape data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SDistribution {
    params: SParams,
    shape: Shape,
}

/// A quantile value and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileEval {
    pub value: f64,
    pub route: Route,
    /// `F^γ` exceeded the analytic range and the tail continuation was used.
    pub tail: bool,
}

impl SDistribution {
    pub fn new(params: SParams) -> Result<Self> {
        params.validate()?;
        let shape = Shape::new(params.g, params.h)?;
        Ok(Self { params, shape })
    }

    pub fn params(&self) -> &SParams {
        &self.params
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn class(&self) -> CaseClass {
        self.shape.class()
    }

    /// `X(F)`; `±∞` at the ends of an infinite tail.
    pub fn quantile(&self, f: f64) -> Result<f64> {
        self.quantile_eval(f).map(|q| q.value)
    }

    pub fn quantile_eval(&self, f: f64) -> Result<QuantileEval> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::Domain(format!(
                "cumulative level must lie in [0, 1], got {f}"
            )));
        }
        let route = self.shape.route();
        let value = if f == 1.0 {
            f64::INFINITY
        } else if f == 0.0 {
            self.left_endpoint()?
        } else if f == self.params.f0 {
            self.params.x0
        } else {
            self.params.x0 + self.shape.integral(self.params.f0, f)? / self.params.alpha
        };
        Ok(QuantileEval {
            value,
            route,
            tail: f < 1.0 && self.shape.in_tail(f),
        })
    }

    /// `X(0)`: finite when `g < 1`, `−∞` otherwise.
    pub fn left_endpoint(&self) -> Result<f64> {
        if !self.class().has_finite_left() {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.params.x0 - self.shape.integral(0.0, self.params.f0)? / self.params.alpha)
    }

    pub fn support(&self) -> Result<Support> {
        let class = self.class();
        let left_slope = match class.case {
            crate::params::Case::II => LeftSlope::Zero,
            crate::params::Case::III => LeftSlope::Alpha,
            crate::params::Case::IV => LeftSlope::Infinite,
            _ => LeftSlope::NotApplicable,
        };
        Ok(Support {
            left: self.left_endpoint()?,
            right: f64::INFINITY,
            left_slope,
        })
    }

    /// Density as a function of the cumulative, `α(F^g − F^h)`.
    pub fn pdf_at_f(&self, f: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::Domain(format!(
                "cumulative level must lie in [0, 1], got {f}"
            )));
        }
        Ok(density_at(self.params.alpha, self.params.g, self.params.gamma(), f))
    }

    /// `F(x)` by safeguarded Newton iteration on the monotone quantile.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.cdf_with_tol(x, CDF_TOL)
    }

    pub fn cdf_with_tol(&self, x: f64, tol: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain("cdf of NaN".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("cdf tolerance must be > 0, got {tol}")));
        }
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        if x == f64::NEG_INFINITY || x <= self.left_endpoint()? {
            return Ok(0.0);
        }
        if x == self.params.x0 {
            return Ok(self.params.f0);
        }
        let (mut lo, mut hi) = if x < self.params.x0 {
            (CDF_EPS, self.params.f0)
        } else {
            (self.params.f0, 1.0 - CDF_EPS)
        };
        if x <= self.quantile(lo)? {
            return Ok(lo);
        }
        if x >= self.quantile(hi)? {
            return Ok(hi);
        }

        let mut f = 0.5 * (lo + hi);
        for _ in 0..CDF_MAX_ITER {
            let r = self.quantile(f)? - x;
            if r == 0.0 {
                return Ok(f);
            }
            if r > 0.0 {
                hi = f;
            } else {
                lo = f;
            }
            // dF/dX is the density.
            let newton = f - r * self.pdf_at_f(f)?;
            let next = if newton > lo && newton < hi && newton.is_finite() {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - f).abs() <= tol || hi - lo <= tol {
                return Ok(next);
            }
            f = next;
        }
        Err(Error::NotConverged {
            what: "cdf root finder",
            iterations: CDF_MAX_ITER,
            residual: hi - lo,
        })
    }

    /// Density at `x`; zero outside the support.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain("pdf of NaN".into()));
        }
        if x.is_infinite() || x <= self.left_endpoint()? {
            return Ok(0.0);
        }
        let f = self.cdf(x)?;
        self.pdf_at_f(f)
    }

    /// Cumulative level of the mode: `(g/h)^{1/γ}` for `g > 0`, else `0`.
    pub fn mode_level(&self) -> f64 {
        let p = &self.params;
        if p.g > 0.0 {
            (p.g / p.h).powf(1.0 / p.gamma())
        } else {
            0.0
        }
    }

    /// `(F*, X(F*))` at the density maximum.
    pub fn mode(&self) -> Result<(f64, f64)> {
        let f = self.mode_level();
        Ok((f, self.quantile(f)?))
    }
}

/// `α F^g (1 − F^γ)` with the endpoint limits made explicit.
pub(crate) fn density_at(alpha: f64, g: f64, gamma: f64, f: f64) -> f64 {
    if f == 1.0 {
        return 0.0;
    }
    if f == 0.0 {
        return if g > 0.0 {
            0.0
        } else if g == 0.0 {
            alpha
        } else {
            f64::INFINITY
        };
    }
    let l = f.ln();
    alpha * (g * l).exp() * -(gamma * l).exp_m1()
}
