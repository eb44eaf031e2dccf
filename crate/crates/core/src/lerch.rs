//! Lerch transcendent `Φ(z, 1, v) = Σ_{n≥0} zⁿ / (v + n)` for real `|z| < 1`.
//!
//! Only `s = 1` is supported; it is the only order the quantile solution
//! needs. For `z ≤ 0.999` the series is summed directly with a stopping rule
//! that bounds the geometric tail. Closer to one the head of the series is
//! summed explicitly and the remainder is evaluated with the Euler–Maclaurin
//! formula, whose leading integral is an exponential integral.
//!
//! Negative non-integer `v` is accepted. The shift recurrence
//! [`lerch_phi_shifted`] moves the argument into `v > 0` so that the
//! signed leading terms are isolated in a finite sum.

use crate::error::{Error, Result};

/// Distance below which `v` counts as a nonpositive integer.
pub const POLE_TOL: f64 = 1e-12;

/// Default relative truncation tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Default depth of the shift recurrence.
pub const DEFAULT_SHIFT: usize = 100;

/// Above this `z` the direct sum is replaced by head + Euler–Maclaurin tail.
const NEAR_UNITY: f64 = 0.999;

const MAX_TERMS: usize = 10_000_000;

/// Validated arguments for [`lerch_phi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LerchArgs {
    z: f64,
    v: f64,
    tol: f64,
}

impl LerchArgs {
    pub fn new(z: f64, v: f64, tol: f64) -> Result<Self> {
        if !(z.abs() < 1.0) {
            return Err(Error::Domain(format!(
                "lerch: |z| must be < 1, got z = {z}"
            )));
        }
        if !v.is_finite() {
            return Err(Error::Domain(format!("lerch: v must be finite, got {v}")));
        }
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("lerch: tol must be > 0, got {tol}")));
        }
        if let Some(index) = pole_index(v, 0) {
            return Err(Error::Degenerate {
                index,
                value: v + index as f64,
            });
        }
        Ok(Self { z, v, tol })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn eval(&self) -> Result<f64> {
        eval_counted(self.z, self.v, self.tol).map(|(value, _)| value)
    }
}

/// `Φ(z, 1, v)` with relative error at most `tol`.
pub fn lerch_phi(z: f64, v: f64, tol: f64) -> Result<f64> {
    LerchArgs::new(z, v, tol)?.eval()
}

/// Evaluates `Φ(z, 1, v)` through the shift recurrence
///
/// `Φ(z,1,v) = zᵐ Φ(z,1,m+v) + Σ_{i<m} zⁱ/(v+i)`.
///
/// `z` is the already exponentiated argument.
pub fn lerch_phi_shifted(z: f64, v: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("lerch: shift depth m must be >= 1".into()));
    }
    if !(z.abs() < 1.0) || !v.is_finite() {
        return Err(Error::Domain(format!(
            "lerch: need |z| < 1 and finite v, got z = {z}, v = {v}"
        )));
    }
    let mut head = 0.0;
    let mut zi = 1.0;
    for i in 0..m {
        let denom = v + i as f64;
        if denom.abs() < POLE_TOL {
            return Err(Error::Degenerate {
                index: i,
                value: denom,
            });
        }
        head += zi / denom;
        zi *= z;
    }
    if zi == 0.0 {
        return Ok(head);
    }
    let inner = lerch_phi(z, v + m as f64, DEFAULT_TOL)?;
    Ok(zi * inner + head)
}

/// Shift depth that guarantees `m + v > 0`: `max(100, ⌈1 − v⌉)`.
pub fn default_shift(v: f64) -> usize {
    let needed = (1.0 - v).ceil();
    if needed > DEFAULT_SHIFT as f64 {
        needed as usize
    } else {
        DEFAULT_SHIFT
    }
}

/// First `i ≥ start` (up to the last nonpositive integer) with `|v + i|` below
/// the pole tolerance.
fn pole_index(v: f64, start: usize) -> Option<usize> {
    if v > POLE_TOL {
        return None;
    }
    let nearest = (-v).round();
    if nearest < start as f64 {
        return None;
    }
    if (v + nearest).abs() < POLE_TOL {
        Some(nearest as usize)
    } else {
        None
    }
}

/// Returns the value together with the number of series terms consumed.
pub(crate) fn eval_counted(z: f64, v: f64, tol: f64) -> Result<(f64, usize)> {
    if z == 0.0 {
        return Ok((1.0 / v, 1));
    }
    if z > NEAR_UNITY {
        return Ok((near_unity(z, v), 0));
    }
    sum_direct(z, v, tol)
}

fn sum_direct(z: f64, v: f64, tol: f64) -> Result<(f64, usize)> {
    let az = z.abs();
    let tail_factor = az / (1.0 - az);
    let mut sum = 0.0;
    let mut zn = 1.0;
    for n in 0..MAX_TERMS {
        let vn = v + n as f64;
        let term = zn / vn;
        sum += term;
        // Terms shrink monotonically only once past the poles.
        if vn > 0.0 {
            let small = term.abs() <= tol * sum.abs();
            // Alternating tail is bounded by its first term.
            let tail_ok = z < 0.0 || term.abs() * tail_factor <= tol * sum.abs();
            if small && tail_ok {
                return Ok((sum, n + 1));
            }
        }
        zn *= z;
        if zn == 0.0 {
            return Ok((sum, n + 1));
        }
    }
    Err(Error::NotConverged {
        what: "lerch series",
        iterations: MAX_TERMS,
        residual: zn,
    })
}

/// Head sum up to `v + N ≥ 64`, then the Euler–Maclaurin remainder of
/// `f(x) = e^{−ax}/(v+x)`, `a = −ln z`.
fn near_unity(z: f64, v: f64) -> f64 {
    const HEAD_SPAN: f64 = 64.0;
    let a = -z.ln();
    let n_head = (HEAD_SPAN - v).ceil().max(0.0) as usize;

    let mut head = 0.0;
    let mut zn = 1.0;
    for n in 0..n_head {
        head += zn / (v + n as f64);
        zn *= z;
    }

    let x = n_head as f64;
    let y = v + x;
    // ∫_N^∞ e^{−ax}/(v+x) dx = e^{av} E1(a (v+N))
    let integral = (a * v).exp() * exp_integral_e1(a * y);
    let decay = (-a * x).exp();
    let f_at = decay / y;

    // Coefficients B_{2k}/(2k)! for k = 1..4.
    const EM: [f64; 4] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
    ];
    let mut correction = 0.0;
    for (k, coeff) in EM.iter().enumerate() {
        let order = 2 * k + 1;
        correction += coeff * derivative(a, y, decay, order);
    }
    head + integral + 0.5 * f_at - correction
}

/// n-th derivative of `e^{−ax}/(v+x)` at a point where `v+x = y` and
/// `e^{−ax} = decay`.
fn derivative(a: f64, y: f64, decay: f64, n: usize) -> f64 {
    // Leibniz rule: Σ C(n,j) (−a)^{n−j} (−1)^j j! / y^{j+1}
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for j in 0..=n {
        if j > 0 {
            binom *= (n - j + 1) as f64 / j as f64;
            fact *= j as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += binom * (-a).powi((n - j) as i32) * sign * fact / y.powi(j as i32 + 1);
    }
    decay * total
}

/// Exponential integral `E1(x) = ∫_x^∞ e^{−t}/t dt` for `x > 0`.
pub(crate) fn exp_integral_e1(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}
