//! Small dense optimizers used by the designer and the fitter.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConfig {
    pub max_evals: usize,
    /// Stop once the spread of objective values drops below
    /// `f_tol · (|f_best| + f_tol)`.
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            max_evals: 20_000,
            f_tol: 1e-15,
            x_tol: 1e-12,
        }
    }
}

/// Nelder–Mead descent. Non-finite objective values act as walls.
pub fn nelder_mead<F>(mut f: F, start: &[f64], step: &[f64], cfg: &SimplexConfig) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut evals = n + 1;
    let mut converged = false;

    while evals < cfg.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let diameter = pts[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= cfg.f_tol * (vals[0].abs() + cfg.f_tol)
            || diameter <= cfg.x_tol
        {
            converged = vals[0].is_finite();
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let reflected = along(-1.0);
        let fr = eval(&reflected);
        evals += 1;
        if fr < vals[0] {
            let expanded = along(-2.0);
            let fe = eval(&expanded);
            evals += 1;
            if fe < fr {
                pts[n] = expanded;
                vals[n] = fe;
            } else {
                pts[n] = reflected;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = reflected;
            vals[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < vals[n] {
            let c = along(-0.5);
            let v = eval(&c);
            (c, v)
        } else {
            let c = along(0.5);
            let v = eval(&c);
            (c, v)
        };
        evals += 1;
        if fc < vals[n].min(fr) {
            pts[n] = contracted;
            vals[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        for i in 1..=n {
            let p: Vec<f64> = pts[i]
                .iter()
                .zip(&pts[0])
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            vals[i] = eval(&p);
            pts[i] = p;
        }
        evals += n;
    }

    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Minimum {
        x: pts[best].clone(),
        value: vals[best],
        iterations: evals,
        converged,
    }
}

/// Root of `f` in `[lo, hi]` by Brent's bisection/secant/inverse-quadratic
/// scheme. The bracket must carry a sign change.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.signum() != fb.signum() && fa.is_finite() && fb.is_finite()) {
        return Err(Error::NoRoot {
            lo,
            hi,
            sign_lo: fa.signum(),
            sign_hi: fb.signum(),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::NotConverged {
                what: "root finder",
                iterations: max_iter,
                residual: fb,
            });
        }
    }
    Err(Error::NotConverged {
        what: "root finder",
        iterations: max_iter,
        residual: fb,
    })
}

/// Solves the dense system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (offset, row) in rest.iter_mut().enumerate() {
            let factor = row[col] / pivot_row[col];
            for (r, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *r -= factor * p;
            }
            b[col + 1 + offset] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iter: usize,
    /// Relative step size below which the iteration stops.
    pub x_tol: f64,
    pub initial_damping: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            x_tol: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

/// Levenberg–Marquardt on `Σ r_i(x)²`. `model` returns the residual vector
/// and its Jacobian (row per residual), or `None` where undefined.
pub fn levenberg_marquardt<M>(mut model: M, start: &[f64], cfg: &LmConfig) -> Minimum
where
    M: FnMut(&[f64], bool) -> Option<(Vec<f64>, Vec<Vec<f64>>)>,
{
    let n = start.len();
    let ss = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut x = start.to_vec();
    let Some((mut r, mut jac)) = model(&x, true) else {
        return Minimum {
            x,
            value: f64::INFINITY,
            iterations: 0,
            converged: false,
        };
    };
    let mut value = ss(&r);
    let mut mu = cfg.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter && !converged {
        iterations += 1;
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for (row, ri) in jac.iter().zip(&r) {
            for i in 0..n {
                jtr[i] -= row[i] * ri;
                for j in 0..n {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        if value == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while mu < 1e16 {
            let mut damped = jtj.clone();
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += mu * jtj[i][i].max(1e-300);
            }
            let Some(delta) = solve_linear(damped, jtr.clone()) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let step = delta
                .iter()
                .zip(&x)
                .map(|(d, a)| d.abs() / (a.abs() + 1e-8))
                .fold(0.0, f64::max);
            match model(&trial, false) {
                Some((tr, _)) if ss(&tr) <= value => {
                    let tv = ss(&tr);
                    let gain = value - tv;
                    x = trial;
                    value = tv;
                    mu = (mu / 3.0).max(1e-12);
                    accepted = true;
                    if step < cfg.x_tol || gain <= 1e-15 * value {
                        converged = true;
                    }
                    break;
                }
                _ => {
                    if step < cfg.x_tol {
                        converged = true;
                        break;
                    }
                    mu *= 4.0;
                }
            }
        }
        if converged {
            break;
        }
        if !accepted {
            break;
        }
        match model(&x, true) {
            Some((nr, nj)) => {
                r = nr;
                jac = nj;
            }
            None => break,
        }
    }
    Minimum {
        x,
        value,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_finds_rosenbrock_minimum() {
        let rosen = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let m = nelder_mead(rosen, &[-1.2, 1.0], &[0.5, 0.5], &SimplexConfig::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn simplex_respects_walls() {
        let f = |p: &[f64]| if p[0] < 2.0 { f64::INFINITY } else { p[0] * p[0] };
        let m = nelder_mead(f, &[3.0], &[0.5], &SimplexConfig::default());
        assert!((m.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn brent_root() {
        let r = find_root(|x| x.cos() - x, 0.0, 1.0, 1e-14, 100).unwrap();
        assert!((r - 0.739_085_133_215_160_6).abs() < 1e-13);
        assert!(matches!(
            find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100),
            Err(Error::NoRoot { .. })
        ));
    }

    #[test]
    fn linear_solve_with_pivoting() {
        let x = solve_linear(
            vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]],
            vec![5.0, 3.0, 6.0],
        )
        .unwrap();
        for (got, want) in x.iter().zip([1.4, 1.6, 1.8]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn lm_fits_exponential_decay() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let model = |p: &[f64], _: bool| {
            let r = ts.iter().zip(&ys).map(|(t, y)| p[0] * (-p[1] * t).exp() - y).collect();
            let j = ts
                .iter()
                .map(|t| {
                    let e = (-p[1] * t).exp();
                    vec![e, -p[0] * t * e]
                })
                .collect();
            Some((r, j))
        };
        let m = levenberg_marquardt(model, &[1.0, 0.1], &LmConfig::default());
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-9 && (m.x[1] - 0.7).abs() < 1e-9);
    }
}
