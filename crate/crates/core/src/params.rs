//! Parameter tuple `S[F0, X0, α, g, h]` and the classification of the
//! `(g, h)` half-plane into left-tail regimes and degeneracy lines.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|kγ − g + 1|` below which `(g, h)` is treated as lying on a
/// degeneracy line.
pub const DEG_TOL: f64 = 1e-9;

/// `F0` used when none is given, making `X0` the median.
pub const DEFAULT_F0: f64 = 0.5;

/// One S-distribution: `dF/dX = α (F^g − F^h)`, `F(X0) = F0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct SParams {
    pub f0: f64,
    pub x0: f64,
    pub alpha: f64,
    pub g: f64,
    pub h: f64,
}

#[derive(Deserialize)]
struct RawParams {
    #[serde(default = "default_f0")]
    f0: f64,
    x0: f64,
    alpha: f64,
    g: f64,
    h: f64,
}

fn default_f0() -> f64 {
    DEFAULT_F0
}

impl TryFrom<RawParams> for SParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        SParams::new(r.f0, r.x0, r.alpha, r.g, r.h)
    }
}

impl SParams {
    pub fn new(f0: f64, x0: f64, alpha: f64, g: f64, h: f64) -> Result<Self> {
        let p = Self {
            f0,
            x0,
            alpha,
            g,
            h,
        };
        p.validate()?;
        Ok(p)
    }

    /// `S[0.5, median, α, g, h]`.
    pub fn with_median(median: f64, alpha: f64, g: f64, h: f64) -> Result<Self> {
        Self::new(DEFAULT_F0, median, alpha, g, h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0 > 0.0 && self.f0 < 1.0) {
            return Err(Error::InvalidParams(format!(
                "f0 must lie in (0, 1), got {}",
                self.f0
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "x0 must be finite, got {}",
                self.x0
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        validate_shape(self.g, self.h)
    }

    /// `γ = h − g`.
    pub fn gamma(&self) -> f64 {
        self.h - self.g
    }

    /// `λ = 1 − g`.
    pub fn lambda(&self) -> f64 {
        1.0 - self.g
    }
}

impl fmt::Display for SParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "S[{}, {}, {}, {}, {}]",
            self.f0, self.x0, self.alpha, self.g, self.h
        )
    }
}

pub(crate) fn validate_shape(g: f64, h: f64) -> Result<()> {
    if !(g.is_finite() && h.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "g and h must be finite, got g = {g}, h = {h}"
        )));
    }
    if !(h > g) {
        return Err(Error::InvalidParams(format!(
            "h must exceed g, got g = {g}, h = {h}"
        )));
    }
    Ok(())
}

/// Regions of the `(g, h)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// `g > 1`, generic: infinite left tail.
    I,
    /// `0 < g < 1`: finite left endpoint, density tangent to the axis.
    II,
    /// `g = 0`: finite left endpoint, density starts at `α`.
    III,
    /// `g < 0`: finite left endpoint, density diverges there.
    IV,
    /// `g = 1` (degeneracy index 0).
    V,
    /// `g > 1` on the line `h = (1 + 1/N) g − 1/N`, `N ≥ 1`.
    VI,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
            Case::IV => "IV",
            Case::V => "V",
            Case::VI => "VI",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseClass {
    pub case: Case,
    /// `Some(0)` for Case V, `Some(N ≥ 1)` for Case VI, `None` otherwise.
    pub degeneracy_index: Option<u64>,
}

impl CaseClass {
    pub fn is_degenerate(&self) -> bool {
        self.degeneracy_index.is_some()
    }

    pub fn has_finite_left(&self) -> bool {
        matches!(self.case, Case::II | Case::III | Case::IV)
    }
}

impl fmt::Display for CaseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.degeneracy_index {
            Some(n) => write!(f, "{} (N={})", self.case, n),
            None => write!(f, "{}", self.case),
        }
    }
}

/// Places `(g, h)` in one of the six regions.
pub fn classify(g: f64, h: f64, deg_tol: f64) -> Result<CaseClass> {
    validate_shape(g, h)?;
    if !(deg_tol >= 0.0) {
        return Err(Error::Domain(format!(
            "degeneracy tolerance must be nonnegative, got {deg_tol}"
        )));
    }
    let generic = |case| CaseClass {
        case,
        degeneracy_index: None,
    };
    if (g - 1.0).abs() <= deg_tol {
        return Ok(CaseClass {
            case: Case::V,
            degeneracy_index: Some(0),
        });
    }
    if g.abs() <= deg_tol {
        return Ok(generic(Case::III));
    }
    if g < 0.0 {
        return Ok(generic(Case::IV));
    }
    if g < 1.0 {
        return Ok(generic(Case::II));
    }
    let gamma = h - g;
    let ratio = (g - 1.0) / gamma;
    // Beyond this the spacing of consecutive lines is below f64 resolution.
    if ratio < 1e15 {
        let n = ratio.round();
        if n >= 1.0 && (n * gamma - g + 1.0).abs() <= deg_tol {
            return Ok(CaseClass {
                case: Case::VI,
                degeneracy_index: Some(n as u64),
            });
        }
    }
    Ok(generic(Case::I))
}

/// Behaviour of the density where the support starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeftSlope {
    Zero,
    Alpha,
    Infinite,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub left: f64,
    pub right: f64,
    pub left_slope: LeftSlope,
}

impl Support {
    pub fn contains(&self, x: f64) -> bool {
        x > self.left && x < self.right
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case_of(g: f64, h: f64) -> CaseClass {
        classify(g, h, DEG_TOL).unwrap()
    }

    #[test]
    fn classification_examples() {
        assert_eq!(case_of(0.7, 3.0).case, Case::II);
        let v = case_of(1.0, 5.0);
        assert_eq!((v.case, v.degeneracy_index), (Case::V, Some(0)));
        let vi = case_of(2.0, 3.0);
        assert_eq!((vi.case, vi.degeneracy_index), (Case::VI, Some(1)));
        assert_eq!(case_of(1.5, 7.0).case, Case::I);
        assert_eq!(case_of(0.0, 2.0).case, Case::III);
        assert_eq!(case_of(-0.5, 2.0).case, Case::IV);
    }

    #[test]
    fn higher_degeneracy_lines() {
        for n in 1..6u64 {
            let k = n as f64;
            let g = 1.8;
            let h = (1.0 + 1.0 / k) * g - 1.0 / k;
            let c = case_of(g, h);
            assert_eq!(c.case, Case::VI, "N={n}");
            assert_eq!(c.degeneracy_index, Some(n));
            assert_eq!(case_of(g, h + 1e-6).case, Case::I);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(classify(3.0, 3.0, DEG_TOL).is_err());
        assert!(classify(3.0, 2.0, DEG_TOL).is_err());
        assert!(SParams::new(0.5, 0.0, 0.0, 0.5, 2.0).is_err());
        assert!(SParams::new(1.0, 0.0, 1.0, 0.5, 2.0).is_err());
        assert!(SParams::new(0.5, f64::NAN, 1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = SParams::new(0.5, 10.0, 1.0, 0.7, 3.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"f0":0.5,"x0":10.0,"alpha":1.0,"g":0.7,"h":3.0}"#);
        let back: SParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let defaulted: SParams =
            serde_json::from_str(r#"{"x0":1,"alpha":2,"g":0.5,"h":1}"#).unwrap();
        assert_eq!(defaulted.f0, 0.5);
        assert!(serde_json::from_str::<SParams>(r#"{"x0":1,"alpha":2,"g":3,"h":1}"#).is_err());
    }

    #[test]
    fn derived_constants() {
        let p = SParams::new(0.5, 10.0, 1.0, 0.7, 3.0).unwrap();
        assert!((p.gamma() - 2.3).abs() < 1e-15);
        assert!((p.lambda() - 0.3).abs() < 1e-15);
    }
}
