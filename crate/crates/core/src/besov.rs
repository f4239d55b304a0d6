//! Shift-scan Besov seminorms, mollification rates and log-log rate fits.

use std::ops::Range;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fieldlab::{self, Field, MollifierKernel};

/// Lower estimate of `sup_ξ ‖w(·+ξ) − w‖_{L^p} / |ξ|^α` over a finite shift ladder.
#[derive(Debug, Clone, Serialize)]
pub struct BesovEstimate {
    pub alpha: f64,
    pub p: f64,
    pub seminorm: f64,
    /// Lattice offsets scanned, one entry per grid axis.
    pub scan_shifts: Vec<Vec<isize>>,
    pub argmax_shift: Vec<isize>,
    /// `(|ξ|, ratio)` for every scanned shift, in scan order.
    pub profile: Vec<(f64, f64)>,
}

impl BesovEstimate {
    /// Largest ratio among shifts with `|ξ|` at most `radius`.
    pub fn sup_below(&self, radius: f64) -> f64 {
        self.profile
            .iter()
            .filter(|(r, _)| *r <= radius * (1.0 + 1e-12))
            .map(|&(_, v)| v)
            .fold(0.0, f64::max)
    }
}

/// Geometric ladder of lattice steps from 1 to `max_steps`, `rungs` entries before dedup.
fn step_ladder(max_steps: usize, rungs: usize) -> Vec<usize> {
    let max_steps = max_steps.max(1);
    let mut out: Vec<usize> = (0..rungs)
        .map(|k| {
            let t = if rungs == 1 { 0.0 } else { k as f64 / (rungs - 1) as f64 };
            (max_steps as f64).powf(t).round().max(1.0) as usize
        })
        .collect();
    out.dedup();
    out
}

/// Deterministic shift scan: every axis on its own, then the all-axis diagonal.
pub fn shift_ladder(grid: &fieldlab::GridSpec, shift_budget: usize) -> Vec<Vec<isize>> {
    let nd = grid.ndim();
    let mut shifts = Vec::new();
    for a in 0..nd {
        for s in step_ladder(grid.axis(a).n / 4, shift_budget) {
            let mut xi = vec![0isize; nd];
            xi[a] = s as isize;
            shifts.push(xi);
        }
    }
    if nd > 1 {
        // Diagonal rungs use the same relative fraction of each axis.
        let min_quarter = grid.axes().iter().map(|a| a.n / 4).min().unwrap_or(1);
        for s in step_ladder(min_quarter, shift_budget) {
            let frac = s as f64 / min_quarter.max(1) as f64;
            let xi: Vec<isize> = grid
                .axes()
                .iter()
                .map(|ax| ((ax.n / 4) as f64 * frac).round().max(1.0) as isize)
                .collect();
            if !shifts.contains(&xi) {
                shifts.push(xi);
            }
        }
    }
    shifts
}

fn physical_length(grid: &fieldlab::GridSpec, xi: &[isize]) -> f64 {
    xi.iter()
        .zip(grid.axes())
        .map(|(&s, ax)| (s as f64 * ax.spacing).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn besov_seminorm(field: &Field, alpha: f64, p: f64, shift_budget: usize) -> Result<BesovEstimate> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(LabError::Precondition(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if shift_budget < 16 {
        return Err(LabError::Precondition(format!("shift budget must be >= 16, got {shift_budget}")));
    }
    let grid = field.grid();
    let shifts = shift_ladder(grid, shift_budget);
    let mut profile = Vec::with_capacity(shifts.len());
    let mut best = (0.0f64, 0usize);
    for (k, xi) in shifts.iter().enumerate() {
        let diff = fieldlab::shift_difference(field, xi)?;
        let norm = fieldlab::lp_norm(&diff, p, None)?.value;
        let len = physical_length(grid, xi);
        let ratio = norm / len.powf(alpha);
        profile.push((len, ratio));
        if ratio > best.0 {
            best = (ratio, k);
        }
    }
    Ok(BesovEstimate {
        alpha,
        p,
        seminorm: best.0,
        argmax_shift: shifts[best.1].clone(),
        scan_shifts: shifts,
        profile,
    })
}

/// Log-log fit of `value ≈ constant · ε^exponent`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    /// `(ε, value)` with ε strictly decreasing.
    pub samples: Vec<(f64, f64)>,
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
    /// All values in the window are below `DEGENERATE_LEVEL`.
    pub degenerate: bool,
    /// Number of zero values left out of the fit.
    pub excluded_zeros: usize,
}

pub const DEGENERATE_LEVEL: f64 = 1e-14;

/// Default fit window: drops the two coarsest and the finest sample when at least four remain.
pub fn default_window(n: usize) -> Range<usize> {
    if n >= 7 {
        2..n - 1
    } else {
        0..n
    }
}

pub fn fit_rate(samples: &[(f64, f64)], window: Option<Range<usize>>) -> Result<RateFit> {
    for w in samples.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(LabError::InvalidLadder("epsilon must be strictly decreasing".into()));
        }
    }
    if let Some((e, v)) = samples.iter().find(|(e, v)| !(*e > 0.0) || !(*v >= 0.0)) {
        return Err(LabError::InvalidLadder(format!("bad sample ({e}, {v})")));
    }
    let window = window.unwrap_or_else(|| default_window(samples.len()));
    if window.end > samples.len() || window.start >= window.end {
        return Err(LabError::InvalidLadder(format!(
            "window {window:?} does not fit {} samples",
            samples.len()
        )));
    }
    let used = &samples[window.clone()];
    let base = RateFit {
        samples: samples.to_vec(),
        exponent: 0.0,
        constant: 0.0,
        r_squared: 0.0,
        window: (window.start, window.end),
        degenerate: false,
        excluded_zeros: 0,
    };
    if used.iter().all(|&(_, v)| v < DEGENERATE_LEVEL) {
        return Ok(RateFit { degenerate: true, ..base });
    }
    let pts: Vec<(f64, f64)> = used
        .iter()
        .filter(|&&(_, v)| v > 0.0)
        .map(|&(e, v)| (e.ln(), v.ln()))
        .collect();
    let excluded_zeros = used.len() - pts.len();
    if pts.len() < 4 {
        return Err(LabError::InsufficientSamples(format!(
            "{} positive values in the fit window, need 4",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy <= 1e-300 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RateFit {
        exponent: slope,
        constant: intercept.exp(),
        r_squared,
        excluded_zeros,
        degenerate: excluded_zeros > 0,
        ..base
    })
}

/// Checks that the ladder is dyadic and strictly decreasing with at least five entries.
pub fn validate_ladder(eps: &[f64]) -> Result<()> {
    if eps.len() < 5 {
        return Err(LabError::InvalidLadder(format!("{} entries, need at least 5", eps.len())));
    }
    for w in eps.windows(2) {
        let ratio = w[0] / w[1];
        if !(w[1] > 0.0) || (ratio - 2.0).abs() > 1e-9 {
            return Err(LabError::InvalidLadder(format!(
                "consecutive entries {} and {} are not a dyadic step",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// `ε_0 · 2^{-k}` for `k = 0..n`.
pub fn dyadic_ladder(eps0: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| eps0 * 0.5f64.powi(k as i32)).collect()
}

fn kernel_for(field: &Field, eps: f64) -> Result<MollifierKernel> {
    fieldlab::make_mollifier(eps, field.grid().ndim(), field.grid())
}

/// `‖w^ε − w‖_{L^p(Ω^ε)}` for one ε.
pub fn mollification_error(field: &Field, p: f64, eps: f64) -> Result<f64> {
    let k = kernel_for(field, eps)?;
    let m = fieldlab::mollify(field, &k)?;
    let base = field.restrict_to(m.grid())?;
    let diff = m.zip_with(&base, |a, b| a - b)?;
    Ok(fieldlab::lp_norm(&diff, p, None)?.value)
}

/// `‖∇w^ε‖_{L^p(Ω^ε)}` with the full space-time gradient, per component.
pub fn mollified_gradient_norm(field: &Field, p: f64, eps: f64) -> Result<f64> {
    let k = kernel_for(field, eps)?;
    let m = fieldlab::mollify(field, &k)?;
    let g = m.grid().clone();
    let mut comps = Vec::new();
    for c in 0..m.components() {
        for a in 0..g.ndim() {
            comps.push(fieldlab::partial(&m, c, a)?);
        }
    }
    let grad = Field::from_components(&g, comps)?;
    Ok(fieldlab::lp_norm(&grad, p, None)?.value)
}

pub fn mollification_error_rate(field: &Field, p: f64, eps_ladder: &[f64]) -> Result<RateFit> {
    validate_ladder(eps_ladder)?;
    let samples = eps_ladder
        .iter()
        .map(|&e| Ok((e, mollification_error(field, p, e)?)))
        .collect::<Result<Vec<_>>>()?;
    fit_rate(&samples, None)
}

pub fn gradient_blowup_rate(field: &Field, p: f64, eps_ladder: &[f64]) -> Result<RateFit> {
    validate_ladder(eps_ladder)?;
    let samples = eps_ladder
        .iter()
        .map(|&e| Ok((e, mollified_gradient_norm(field, p, e)?)))
        .collect::<Result<Vec<_>>>()?;
    fit_rate(&samples, None)
}

/// Ladder of `‖div u^ε‖_{L¹(Ω^ε)}`.
#[derive(Debug, Clone, Serialize)]
pub struct TvEstimate {
    /// Supremum over the ladder.
    pub value: f64,
    pub samples: Vec<(f64, f64)>,
    /// Log-log slope of the samples against ε; clearly negative slopes signal
    /// that the divergence is not a finite measure.
    pub growth_exponent: f64,
}

pub fn tv_divergence_estimate(u: &Field, eps_ladder: &[f64]) -> Result<TvEstimate> {
    if eps_ladder.is_empty() {
        return Err(LabError::InvalidLadder("empty ladder".into()));
    }
    let mut samples = Vec::with_capacity(eps_ladder.len());
    for &e in eps_ladder {
        let k = kernel_for(u, e)?;
        let m = fieldlab::mollify(u, &k)?;
        let div = fieldlab::divergence(&m)?;
        let v = fieldlab::lp_norm_values(&div, m.grid().cell_volume(), 1.0, None)?.value;
        samples.push((e, v));
    }
    let value = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let growth_exponent = if samples.len() >= 4 {
        match fit_rate(&samples, Some(0..samples.len())) {
            Ok(f) if !f.degenerate || f.excluded_zeros < samples.len() => f.exponent,
            _ => 0.0,
        }
    } else {
        0.0
    };
    Ok(TvEstimate { value, samples, growth_exponent })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::fieldlab::GridSpec;

    #[test]
    fn fit_planted_power_laws() {
        let eps = dyadic_ladder(0.5, 6);
        let s: Vec<_> = eps.iter().map(|&e| (e, e)).collect();
        let f = fit_rate(&s, None).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        let s: Vec<_> = eps.iter().map(|&e| (e, 3.0 * e.powf(0.83))).collect();
        let f = fit_rate(&s, None).unwrap();
        assert!((f.exponent - 0.83).abs() < 1e-12);
        assert!((f.constant - 3.0).abs() < 1e-11);
        let s: Vec<_> = eps.iter().map(|&e| (e, 0.0)).collect();
        assert!(fit_rate(&s, None).unwrap().degenerate);
    }

    #[test]
    fn ladder_validation() {
        assert!(validate_ladder(&dyadic_ladder(0.25, 5)).is_ok());
        assert!(validate_ladder(&dyadic_ladder(0.25, 4)).is_err());
        assert!(validate_ladder(&[0.4, 0.2, 0.1, 0.04, 0.02]).is_err());
    }

    #[test]
    fn constant_seminorm_is_zero() {
        let g = GridSpec::space_time(&[16, 64], &[1.0, 1.0]).unwrap();
        let f = Field::constant(&g, 1, 4.0).unwrap();
        assert_eq!(besov_seminorm(&f, 0.5, 2.0, 16).unwrap().seminorm, 0.0);
    }

    #[test]
    fn sine_lipschitz_constant() {
        let g = GridSpec::space_time(&[16, 2048], &[1.0, 1.0]).unwrap();
        let f = Field::scalar_from_fn(&g, |x| (2.0 * PI * x[1]).sin()).unwrap();
        let est = besov_seminorm(&f, 1.0, 2.0, 32).unwrap();
        let target = 2f64.sqrt() * PI;
        assert!((est.seminorm / target - 1.0).abs() < 0.02, "{}", est.seminorm);
        assert!(est.scan_shifts.contains(&est.argmax_shift));
    }

    #[test]
    fn step_has_tv_slope() {
        let g = GridSpec::stationary(&[4096], &[1.0]).unwrap();
        let u = Field::scalar_from_fn(&g, |x| if x[0] < 0.5 { 1.5 } else { 0.0 }).unwrap();
        let tv = tv_divergence_estimate(&u, &dyadic_ladder(0.05, 5)).unwrap();
        // Two jumps of 1.5 per period.
        assert!((tv.value - 3.0).abs() < 0.03, "{}", tv.value);
        assert!(tv.growth_exponent.abs() < 0.05);
    }
}
