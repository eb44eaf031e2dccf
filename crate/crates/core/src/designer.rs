//! Constructing distributions that pass through a prescribed quantile by
//! solving for one free parameter.

use serde::{Deserialize, Serialize};

use crate::dist::SDistribution;
use crate::error::{Error, Result};
use crate::optim::find_root;
use crate::params::{classify, SParams, DEG_TOL};
use crate::solution::Shape;

const SCAN_POINTS: usize = 200;
const SHAPE_TOL: f64 = 1e-12;

/// `X(f_star) = x_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileConstraint {
    pub f_star: f64,
    pub x_star: f64,
}

impl QuantileConstraint {
    pub fn new(f_star: f64, x_star: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&f_star) {
            return Err(Error::Domain(format!(
                "constraint level must lie in [0, 1), got {f_star}"
            )));
        }
        if !x_star.is_finite() {
            return Err(Error::Domain(format!(
                "constraint value must be finite, got {x_star}"
            )));
        }
        Ok(Self { f_star, x_star })
    }

    fn check_left(&self, g: f64, h: f64) -> Result<()> {
        if self.f_star == 0.0 && !classify(g, h, DEG_TOL)?.has_finite_left() {
            return Err(Error::Unsatisfiable(format!(
                "X(0) is -inf for g = {g} >= 1 (infinite left tail)"
            )));
        }
        Ok(())
    }
}

/// The parameter being solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unknown {
    X0,
    Alpha,
    G,
    H,
}

/// `X0` such that `X(f_star) = x_star`.
pub fn solve_x0(c: QuantileConstraint, f0: f64, alpha: f64, g: f64, h: f64) -> Result<f64> {
    SParams::new(f0, 0.0, alpha, g, h)?;
    c.check_left(g, h)?;
    if c.f_star == f0 {
        return Ok(c.x_star);
    }
    let shape = Shape::new(g, h)?;
    Ok(c.x_star - shape.integral(f0, c.f_star)? / alpha)
}

/// `α = I(f0, f_star)/(x_star − x0)`.
pub fn solve_alpha(c: QuantileConstraint, f0: f64, x0: f64, g: f64, h: f64) -> Result<f64> {
    SParams::new(f0, x0, 1.0, g, h)?;
    c.check_left(g, h)?;
    if c.f_star == f0 {
        return Err(Error::Unsatisfiable(
            "constraint level equals f0, alpha is undetermined".into(),
        ));
    }
    if c.x_star == x0 {
        return Err(Error::Unsatisfiable(format!(
            "x_star equals x0 = {x0} at a level other than f0"
        )));
    }
    let integral = Shape::new(g, h)?.integral(f0, c.f_star)?;
    let alpha = integral / (c.x_star - x0);
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Unsatisfiable(format!(
            "x_star - x0 = {} and the integral {integral} have opposite signs",
            c.x_star - x0
        )));
    }
    Ok(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeSolution {
    pub value: f64,
    /// More than one sign change was found in the scan.
    pub multiple_roots: bool,
    pub roots_found: usize,
}

/// Solves `X(f_star) = x_star` for `g` (with `h = other`) or `h` (with
/// `g = other`) by scanning for sign changes and refining each bracket.
pub fn solve_shape(
    which: Unknown,
    c: QuantileConstraint,
    f0: f64,
    x0: f64,
    alpha: f64,
    other: f64,
) -> Result<ShapeSolution> {
    let (lo, hi) = match which {
        Unknown::G => (-5.0, other.min(5.0)),
        Unknown::H => (other, other + 50.0),
        _ => {
            return Err(Error::Domain(
                "solve_shape solves for g or h only".into(),
            ))
        }
    };
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty scan interval ({lo}, {hi})")));
    }
    let residual = |s: f64| -> f64 {
        let (g, h) = match which {
            Unknown::G => (s, other),
            _ => (other, s),
        };
        SParams::new(f0, x0, alpha, g, h)
            .and_then(SDistribution::new)
            .and_then(|d| d.quantile(c.f_star))
            .map(|x| x - c.x_star)
            .unwrap_or(f64::NAN)
    };

    let step = (hi - lo) / (SCAN_POINTS + 1) as f64;
    let grid: Vec<(f64, f64)> = (1..=SCAN_POINTS)
        .map(|i| {
            let s = lo + step * i as f64;
            (s, residual(s))
        })
        .collect();

    let mut roots = Vec::new();
    for w in grid.windows(2) {
        let ((a, ra), (b, rb)) = (w[0], w[1]);
        if !(ra.is_finite() && rb.is_finite()) {
            continue;
        }
        if ra == 0.0 {
            roots.push(a);
        } else if ra.signum() != rb.signum() && rb != 0.0 {
            roots.push(find_root(residual, a, b, SHAPE_TOL, 200)?);
        }
    }
    if let Some(&(s, r)) = grid.last() {
        if r == 0.0 {
            roots.push(s);
        }
    }

    let mid = 0.5 * (lo + hi);
    let Some(&value) = roots
        .iter()
        .min_by(|a, b| (*a - mid).abs().total_cmp(&(*b - mid).abs()))
    else {
        let finite: Vec<&(f64, f64)> = grid.iter().filter(|p| p.1.is_finite()).collect();
        let (sign_lo, sign_hi) = match (finite.first(), finite.last()) {
            (Some(a), Some(b)) => (a.1.signum(), b.1.signum()),
            _ => (f64::NAN, f64::NAN),
        };
        return Err(Error::NoRoot {
            lo,
            hi,
            sign_lo,
            sign_hi,
        });
    };
    Ok(ShapeSolution {
        value,
        multiple_roots: roots.len() > 1,
        roots_found: roots.len(),
    })
}

/// Known parameters for [`design`]; the one being solved for is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Partial {
    pub f0: Option<f64>,
    pub x0: Option<f64>,
    pub alpha: Option<f64>,
    pub g: Option<f64>,
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verification {
    pub f_star: f64,
    pub x_star: f64,
    pub achieved_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Design {
    pub solved: Unknown,
    pub params: SParams,
    pub verification: Verification,
    pub multiple_roots: bool,
}

/// Solves for `unknown` and checks the result against the constraint.
pub fn design(unknown: Unknown, c: QuantileConstraint, known: &Partial) -> Result<Design> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::Domain(format!("{name} is required to solve for {unknown:?}")))
    };
    let f0 = known.f0.unwrap_or(crate::params::DEFAULT_F0);
    let mut multiple_roots = false;
    let params = match unknown {
        Unknown::X0 => {
            let (a, g, h) = (need(known.alpha, "alpha")?, need(known.g, "g")?, need(known.h, "h")?);
            SParams::new(f0, solve_x0(c, f0, a, g, h)?, a, g, h)?
        }
        Unknown::Alpha => {
            let (x0, g, h) = (need(known.x0, "x0")?, need(known.g, "g")?, need(known.h, "h")?);
            SParams::new(f0, x0, solve_alpha(c, f0, x0, g, h)?, g, h)?
        }
        Unknown::G | Unknown::H => {
            let (x0, a) = (need(known.x0, "x0")?, need(known.alpha, "alpha")?);
            let other = if unknown == Unknown::G {
                need(known.h, "h")?
            } else {
                need(known.g, "g")?
            };
            let s = solve_shape(unknown, c, f0, x0, a, other)?;
            multiple_roots = s.multiple_roots;
            let (g, h) = if unknown == Unknown::G {
                (s.value, other)
            } else {
                (other, s.value)
            };
            SParams::new(f0, x0, a, g, h)?
        }
    };
    let achieved_x = SDistribution::new(params)?.quantile(c.f_star)?;
    if !((achieved_x - c.x_star).abs() <= 1e-8 * (1.0 + c.x_star.abs())) {
        return Err(Error::NotConverged {
            what: "design verification",
            iterations: 0,
            residual: achieved_x - c.x_star,
        });
    }
    Ok(Design {
        solved: unknown,
        params,
        verification: Verification {
            f_star: c.f_star,
            x_star: c.x_star,
            achieved_x,
        },
        multiple_roots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn con(f: f64, x: f64) -> QuantileConstraint {
        QuantileConstraint::new(f, x).unwrap()
    }

    #[test]
    fn x0_examples() {
        let x0 = solve_x0(con(0.0, 0.0), 0.5, 1.0, 0.1, 8.0).unwrap();
        assert!((x0 - 0.595_685).abs() < 1e-6, "{x0}");
        assert_eq!(solve_x0(con(0.5, 3.25), 0.5, 1.0, 0.1, 8.0).unwrap(), 3.25);
        let b = solve_x0(con(0.0, 10.0), 0.5, 0.1, 0.69, 2.88).unwrap();
        assert!((b - 36.8252).abs() < 1e-4, "{b}");
    }

    #[test]
    fn x0_rejects_infinite_left_tail() {
        assert!(matches!(
            solve_x0(con(0.0, 0.0), 0.5, 1.0, 1.5, 3.0),
            Err(Error::Unsatisfiable(_))
        ));
    }

    #[test]
    fn alpha_examples() {
        let a = solve_alpha(con(0.0, 20.0), 0.5, 50.0, 0.1, 8.0).unwrap();
        assert!((a - 0.019_856_2).abs() < 1e-7, "{a}");
        let half = solve_alpha(con(0.0, -10.0), 0.5, 50.0, 0.1, 8.0).unwrap();
        assert!((half - a / 2.0).abs() < 1e-15);
        let d = solve_alpha(con(0.0, 0.0), 0.5, 50.0, 0.3, 4.0).unwrap();
        assert!((d / 0.017_812_6 - 1.0).abs() < 1e-4, "{d}");
    }

    #[test]
    fn alpha_rejections() {
        // X(0) above X0 cannot be reached with positive alpha.
        assert!(matches!(
            solve_alpha(con(0.0, 60.0), 0.5, 50.0, 0.1, 8.0),
            Err(Error::Unsatisfiable(_))
        ));
        assert!(solve_alpha(con(0.2, 50.0), 0.5, 50.0, 0.1, 8.0).is_err());
        assert!(solve_alpha(con(0.5, 40.0), 0.5, 50.0, 0.1, 8.0).is_err());
    }

    #[test]
    fn shape_examples() {
        let c = solve_shape(Unknown::G, con(0.1, 12.0), 0.5, 50.0, 0.5, 3.0).unwrap();
        assert!((c.value - 2.28146).abs() < 1e-5, "{c:?}");
        let d = solve_shape(Unknown::G, con(0.1, 45.0), 0.5, 50.0, 0.5, 3.0).unwrap();
        assert!((d.value - 1.2235).abs() < 1e-4, "{d:?}");
    }

    #[test]
    fn shape_recovers_trial_value() {
        let p = SParams::new(0.5, 50.0, 0.5, 0.7, 3.0).unwrap();
        let x = SDistribution::new(p).unwrap().quantile(0.25).unwrap();
        let s = solve_shape(Unknown::G, con(0.25, x), 0.5, 50.0, 0.5, 3.0).unwrap();
        assert!((s.value - 0.7).abs() < 1e-9);
        let s = solve_shape(Unknown::H, con(0.25, x), 0.5, 50.0, 0.5, 0.7).unwrap();
        assert!((s.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn shape_without_root_reports_interval() {
        // The lower quartile can never exceed the median.
        match solve_shape(Unknown::G, con(0.25, 60.0), 0.5, 50.0, 0.5, 3.0) {
            Err(Error::NoRoot { lo, hi, .. }) => assert_eq!((lo, hi), (-5.0, 3.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn design_verifies() {
        let known = Partial {
            alpha: Some(1.0),
            g: Some(0.1),
            h: Some(8.0),
            ..Default::default()
        };
        let d = design(Unknown::X0, con(0.0, 0.0), &known).unwrap();
        assert!(d.verification.achieved_x.abs() < 1e-10);
        assert!(design(Unknown::Alpha, con(0.0, 0.0), &known).is_err());
    }
}
