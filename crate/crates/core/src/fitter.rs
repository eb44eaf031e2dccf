//! Fitting observed data: histogram regression of `f = α(F^g − F^h)` for
//! the shape, then quantile least squares for scale and location, then an
//! optional joint refinement of all four parameters.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, nelder_mead, LmConfig, SimplexConfig};
use crate::params::{SParams, DEFAULT_F0};
use crate::solution::Shape;

pub const MIN_POINTS: usize = 20;
pub const MIN_STAGE1_BINS: usize = 5;
const MAX_AUTO_BINS: usize = 10_000;

/// Multi-start shape seeds `(g, h)` for the histogram regression.
pub const STAGE1_SEEDS: [(f64, f64); 4] = [(0.5, 2.0), (0.7, 2.9), (1.0, 3.0), (0.3, 5.0)];
const G_BOX: (f64, f64) = (-2.0, 3.0);
const H_MAX: f64 = 20.0;
const MIN_GAP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bins {
    /// Freedman–Diaconis width `2 · IQR · n^{−1/3}`.
    #[default]
    Auto,
    Count(usize),
}

/// Unit-area histogram with the cumulative at each right edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub f_values: Vec<f64>,
    #[serde(rename = "F_values")]
    pub cdf_values: Vec<f64>,
}

impl Histogram {
    pub fn bin_count(&self) -> usize {
        self.f_values.len()
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.bin_edges.windows(2).map(|w| w[1] - w[0])
    }
}

/// Linear-interpolation quantile of sorted data.
fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let w = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + w * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn sorted_finite(data: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::Domain(format!(
            "observation {} is not finite ({})",
            i + 1,
            data[i]
        )));
    }
    if data.len() < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_POINTS} observations, got {}",
            data.len()
        )));
    }
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn build_histogram(data: &[f64], bins: Bins) -> Result<Histogram> {
    let sorted = sorted_finite(data)?;
    let n = sorted.len();
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::InsufficientData("data have zero range".into()));
    }
    let count = match bins {
        Bins::Count(0) => return Err(Error::Domain("bin count must be positive".into())),
        Bins::Count(b) => b,
        Bins::Auto => {
            let iqr = empirical_quantile(&sorted, 0.75) - empirical_quantile(&sorted, 0.25);
            if iqr > 0.0 {
                let width = 2.0 * iqr * (n as f64).powf(-1.0 / 3.0);
                ((range / width).ceil() as usize).clamp(1, MAX_AUTO_BINS)
            } else {
                (n as f64).sqrt().ceil() as usize
            }
        }
    };
    let width = range / count as f64;
    let mut bin_edges: Vec<f64> = (0..count).map(|i| lo + width * i as f64).collect();
    bin_edges.push(hi);

    let mut counts = vec![0usize; count];
    for &x in &sorted {
        let i = (((x - lo) / width) as usize).min(count - 1);
        counts[i] += 1;
    }
    let mut f_values = Vec::with_capacity(count);
    let mut cdf_values = Vec::with_capacity(count);
    let mut acc = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let w = bin_edges[i + 1] - bin_edges[i];
        let f = c as f64 / (n as f64 * w);
        acc += f * w;
        f_values.push(f);
        cdf_values.push(acc.min(1.0));
    }
    Ok(Histogram {
        bin_edges,
        f_values,
        cdf_values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stage1 {
    pub alpha: f64,
    pub g: f64,
    pub h: f64,
    pub residual_ss: f64,
    pub converged: bool,
}

/// Regression on the bins with `0 < F_i < 1`.
pub fn stage1_fit(hist: &Histogram) -> Result<Stage1> {
    let (cdf, dens): (Vec<f64>, Vec<f64>) = hist
        .cdf_values
        .iter()
        .zip(&hist.f_values)
        .filter(|(&c, _)| c > 0.0 && c < 1.0)
        .map(|(&c, &f)| (c, f))
        .unzip();
    stage1_fit_pairs(&cdf, &dens)
}

/// Least squares for `f_i ≈ α(F_i^g − F_i^h)`.
pub fn stage1_fit_pairs(cdf: &[f64], dens: &[f64]) -> Result<Stage1> {
    stage1_fit_with(cdf, dens, &SimplexConfig::default())
}

fn stage1_fit_with(cdf: &[f64], dens: &[f64], cfg: &SimplexConfig) -> Result<Stage1> {
    if cdf.len() != dens.len() {
        return Err(Error::Domain("cumulative and density lengths differ".into()));
    }
    if cdf.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
        return Err(Error::Domain("stage-1 cumulatives must lie in (0, 1)".into()));
    }
    if cdf.len() < MIN_STAGE1_BINS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_STAGE1_BINS} bins with 0 < F < 1, got {}",
            cdf.len()
        )));
    }
    let logs: Vec<f64> = cdf.iter().map(|c| c.ln()).collect();
    let decode = |t: &[f64]| {
        let g = t[1];
        (t[0].exp(), g, g + MIN_GAP + t[2].exp())
    };
    let objective = |t: &[f64]| {
        let (a, g, h) = decode(t);
        if !(g > G_BOX.0 && g < G_BOX.1 && h < H_MAX) {
            return f64::INFINITY;
        }
        logs.iter()
            .zip(dens)
            .map(|(&l, &f)| {
                let r = f - a * ((g * l).exp() - (h * l).exp());
                r * r
            })
            .sum()
    };
    let f_max = dens.iter().cloned().fold(0.0, f64::max);

    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for (g0, h0) in STAGE1_SEEDS {
        let peak = (g0 / h0).powf(1.0 / (h0 - g0));
        let alpha0 = f_max.max(f64::MIN_POSITIVE) / (peak.powf(g0) - peak.powf(h0));
        let mut start = vec![alpha0.ln(), g0, (h0 - g0 - MIN_GAP).ln()];
        let mut value = f64::INFINITY;
        let mut converged = false;
        // Restart from the best vertex until the simplex stops improving.
        for _ in 0..8 {
            let m = nelder_mead(objective, &start, &[0.3, 0.1, 0.3], cfg);
            let improved = m.value < value * (1.0 - 1e-12);
            start = m.x;
            value = m.value;
            converged = m.converged;
            if !improved {
                break;
            }
        }
        if best.as_ref().map_or(true, |b| value < b.1) {
            best = Some((start, value, converged));
        }
    }
    let (t, value, converged) = best.expect("at least one seed");
    if !converged || !value.is_finite() {
        return Err(Error::NotConverged {
            what: "histogram regression",
            iterations: cfg.max_evals,
            residual: value,
        });
    }
    let (alpha, g, h) = decode(&t);
    Ok(Stage1 {
        alpha,
        g,
        h,
        residual_ss: value,
        converged,
    })
}

/// Plotting position `(i − 0.5)/n` of the i-th order statistic.
pub fn plotting_positions(n: usize) -> Vec<f64> {
    (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage2 {
    pub alpha: f64,
    pub x0: f64,
    pub residual_ss: f64,
    /// Objective at the starting point.
    pub initial_ss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step.
    pub trajectory: Vec<f64>,
}

pub const STAGE2_MAX_ITER: usize = 200;
const STAGE2_STEP_TOL: f64 = 1e-10;

/// Quantile least squares over `(α, x0)` with `g`, `h` held fixed and
/// `F0 = 0.5`, by Gauss–Newton with step halving.
pub fn stage2_fit(sorted: &[f64], g: f64, h: f64, init_alpha: f64, init_x0: f64) -> Result<Stage2> {
    if sorted.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 observations".into()));
    }
    if sorted.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Domain("stage-2 data must be sorted and finite".into()));
    }
    SParams::new(DEFAULT_F0, init_x0, init_alpha, g, h)?;
    let shape = Shape::new(g, h)?;
    let c = plotting_positions(sorted.len())
        .into_iter()
        .map(|f| shape.integral(DEFAULT_F0, f))
        .collect::<Result<Vec<f64>>>()?;
    let ss = |a: f64, x0: f64| -> f64 {
        sorted
            .iter()
            .zip(&c)
            .map(|(x, ci)| {
                let r = x - x0 - ci / a;
                r * r
            })
            .sum()
    };
    let spread = (sorted[sorted.len() - 1] - sorted[0]).max(f64::MIN_POSITIVE);
    let (mut a, mut x0) = (init_alpha, init_x0);
    let mut value = ss(a, x0);
    let initial_ss = value;
    let mut trajectory = vec![value];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < STAGE2_MAX_ITER {
        iterations += 1;
        // Residual r = x − x0 − c/α; model derivatives ∂/∂α = −c/α², ∂/∂x0 = 1.
        let (mut saa, mut sax, mut sxx, mut ra, mut rx) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, ci) in sorted.iter().zip(&c) {
            let r = x - x0 - ci / a;
            let ja = -ci / (a * a);
            saa += ja * ja;
            sax += ja;
            sxx += 1.0;
            ra += ja * r;
            rx += r;
        }
        let det = saa * sxx - sax * sax;
        if !(det.abs() > 0.0) {
            break;
        }
        let mut da = (sxx * ra - sax * rx) / det;
        let mut dx = (saa * rx - sax * ra) / det;
        if da.abs() / a < STAGE2_STEP_TOL && dx.abs() / spread < STAGE2_STEP_TOL {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let (na, nx) = (a + da, x0 + dx);
            if na > 0.0 {
                let nv = ss(na, nx);
                if nv <= value {
                    a = na;
                    x0 = nx;
                    value = nv;
                    accepted = true;
                    break;
                }
            }
            da *= 0.5;
            dx *= 0.5;
        }
        if !accepted {
            // No descent along the Gauss–Newton direction: stationary point.
            converged = true;
            break;
        }
        trajectory.push(value);
        if da.abs() / a < STAGE2_STEP_TOL && dx.abs() / spread < STAGE2_STEP_TOL {
            converged = true;
            break;
        }
    }
    Ok(Stage2 {
        alpha: a,
        x0,
        residual_ss: value,
        initial_ss,
        iterations,
        converged,
        trajectory,
    })
}

/// Joint least-squares refinement of `(α, x0, g, h)` on the stage-2
/// objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Refinement {
    pub alpha: f64,
    pub x0: f64,
    pub g: f64,
    pub h: f64,
    pub residual_ss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether it improved on stage 2 and was adopted.
    pub accepted: bool,
}

pub fn refine(sorted: &[f64], start: &SParams, cfg: &LmConfig) -> Result<Refinement> {
    let positions = plotting_positions(sorted.len());
    let integrals = |g: f64, h: f64| -> Option<Vec<f64>> {
        let shape = Shape::new(g, h).ok()?;
        positions
            .iter()
            .map(|&f| shape.integral(DEFAULT_F0, f).ok())
            .collect()
    };
    let decode = |t: &[f64]| (t[0].exp(), t[1], t[2], t[2] + t[3].exp());
    let model = |t: &[f64], want_jac: bool| -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        let (a, x0, g, h) = decode(t);
        let c = integrals(g, h)?;
        let r: Vec<f64> = c.iter().zip(sorted).map(|(ci, x)| x0 + ci / a - x).collect();
        if !want_jac {
            return Some((r, Vec::new()));
        }
        let dg = 1e-6 * t[2].abs().max(1.0);
        let du = 1e-6 * t[3].abs().max(1.0);
        let gap = t[3].exp();
        let (cgp, cgm) = (integrals(g + dg, h + dg)?, integrals(g - dg, h - dg)?);
        let hp = g + (t[3] + du).exp();
        let hm = g + (t[3] - du).exp();
        let (cup, cum) = (integrals(g, hp)?, integrals(g, hm)?);
        debug_assert!(gap > 0.0);
        let jac = (0..c.len())
            .map(|i| {
                vec![
                    -c[i] / a,
                    1.0,
                    (cgp[i] - cgm[i]) / (2.0 * dg * a),
                    (cup[i] - cum[i]) / (2.0 * du * a),
                ]
            })
            .collect();
        Some((r, jac))
    };
    let start_t = [start.alpha.ln(), start.x0, start.g, (start.h - start.g).ln()];
    let m = levenberg_marquardt(model, &start_t, cfg);
    let (alpha, x0, g, h) = decode(&m.x);
    SParams::new(DEFAULT_F0, x0, alpha, g, h)?;
    Ok(Refinement {
        alpha,
        x0,
        g,
        h,
        residual_ss: m.value,
        iterations: m.iterations,
        converged: m.converged,
        accepted: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub bins: Bins,
    /// Run the joint refinement after the two-step procedure.
    pub refine: bool,
    pub simplex: SimplexConfig,
    pub lm: LmConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            bins: Bins::Auto,
            refine: true,
            simplex: SimplexConfig::default(),
            lm: LmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: SParams,
    pub n: usize,
    pub bins: usize,
    pub stage1: Stage1,
    pub stage2: Stage2,
    pub refinement: Option<Refinement>,
}

pub fn fit(data: &[f64], cfg: &FitConfig) -> Result<FitResult> {
    let sorted = sorted_finite(data)?;
    let hist = build_histogram(&sorted, cfg.bins).map_err(|e| e.in_stage("histogram"))?;
    let (cdf, dens): (Vec<f64>, Vec<f64>) = hist
        .cdf_values
        .iter()
        .zip(&hist.f_values)
        .filter(|(&c, _)| c > 0.0 && c < 1.0)
        .map(|(&c, &f)| (c, f))
        .unzip();
    let s1 = stage1_fit_with(&cdf, &dens, &cfg.simplex).map_err(|e| e.in_stage("stage 1"))?;
    let median = empirical_quantile(&sorted, 0.5);
    let s2 = stage2_fit(&sorted, s1.g, s1.h, s1.alpha, median).map_err(|e| e.in_stage("stage 2"))?;
    let mut params = SParams::new(DEFAULT_F0, s2.x0, s2.alpha, s1.g, s1.h)
        .map_err(|e| e.in_stage("stage 2"))?;

    let refinement = if cfg.refine {
        match refine(&sorted, &params, &cfg.lm) {
            Ok(mut r) => {
                if r.residual_ss < s2.residual_ss {
                    r.accepted = true;
                    params = SParams::new(DEFAULT_F0, r.x0, r.alpha, r.g, r.h)
                        .map_err(|e| e.in_stage("refinement"))?;
                }
                Some(r)
            }
            // The two-step result stands if the refinement wanders off.
            Err(_) => None,
        }
    } else {
        None
    };
    Ok(FitResult {
        params,
        n: sorted.len(),
        bins: hist.bin_count(),
        stage1: s1,
        stage2: s2,
        refinement,
    })
}
