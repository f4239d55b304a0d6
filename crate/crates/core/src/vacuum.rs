//! Vacuum sets, ratio conditions, quasi-nearly-subharmonic checks and the spike counterexample.

use serde::Serialize;

use crate::besov::fit_rate;
use crate::error::{LabError, Result};
use crate::fieldlab::{self, Field, GridSpec, MollifierKernel, NormValue};

/// Numerical zero used for `ρ^ε = 0`: `1e-13 · max ρ`.
pub fn default_atol(rho: &Field) -> f64 {
    let m = rho.max();
    if m > 0.0 {
        1e-13 * m
    } else {
        f64::MIN_POSITIVE
    }
}

/// Node masks on the mollified domain.
#[derive(Debug, Clone)]
pub struct VacuumSets {
    pub grid: GridSpec,
    pub atol: f64,
    /// `ε^β`.
    pub threshold: f64,
    /// `ρ^ε = 0`.
    pub a: Vec<bool>,
    /// `0 < ρ^ε < ε^β` (the set used in the proof).
    pub b: Vec<bool>,
    /// `ρ^ε ≥ ε^β`.
    pub c: Vec<bool>,
    /// `ρ ≠ 0`.
    pub e: Vec<bool>,
    /// `B ∩ E`, the set named in the theorem statement.
    pub b_theorem: Vec<bool>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SetMeasures {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub b_theorem: f64,
    pub total: f64,
}

impl VacuumSets {
    /// Masks from `ρ` restricted to the mollified domain and `ρ^ε` on it.
    pub fn from_values(grid: &GridSpec, rho: &[f64], rho_eps: &[f64], threshold: f64, atol: f64) -> Self {
        let a: Vec<bool> = rho_eps.iter().map(|&r| r < atol).collect();
        let b: Vec<bool> = rho_eps.iter().map(|&r| r >= atol && r < threshold).collect();
        let c: Vec<bool> = rho_eps.iter().map(|&r| r >= atol && r >= threshold).collect();
        let e: Vec<bool> = rho.iter().map(|&r| r > atol).collect();
        let b_theorem = b.iter().zip(&e).map(|(&x, &y)| x && y).collect();
        Self { grid: grid.clone(), atol, threshold, a, b, c, e, b_theorem }
    }

    pub fn measures(&self) -> SetMeasures {
        let cv = self.grid.cell_volume();
        let m = |v: &[bool]| v.iter().filter(|&&x| x).count() as f64 * cv;
        SetMeasures {
            a: m(&self.a),
            b: m(&self.b),
            c: m(&self.c),
            e: m(&self.e),
            b_theorem: m(&self.b_theorem),
            total: self.grid.node_count() as f64 * cv,
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(LabError::Precondition(format!("beta must lie in (0, 1], got {beta}")))
    }
}

pub fn build_vacuum_sets(rho: &Field, kernel: &MollifierKernel, beta: f64, atol: Option<f64>) -> Result<VacuumSets> {
    rho.check_nonnegative()?;
    check_beta(beta)?;
    let atol = atol.unwrap_or_else(|| default_atol(rho));
    let rho_eps = fieldlab::mollify(rho, kernel)?;
    let base = rho.restrict_to(rho_eps.grid())?;
    Ok(VacuumSets::from_values(
        rho_eps.grid(),
        base.values(),
        rho_eps.values(),
        kernel.epsilon().powf(beta),
        atol,
    ))
}

/// `‖(ρ^ε − ρ)/ρ^ε‖_{L^q}` over both variants of `B_{ε^β}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioCondition {
    pub epsilon: f64,
    pub proof_set: f64,
    pub theorem_set: f64,
    /// `B` selected no node.
    pub empty: bool,
    pub atol: f64,
}

pub fn ratio_condition(rho: &Field, kernel: &MollifierKernel, beta: f64, q: f64) -> Result<RatioCondition> {
    rho.check_nonnegative()?;
    check_beta(beta)?;
    let atol = default_atol(rho);
    let rho_eps = fieldlab::mollify(rho, kernel)?;
    let base = rho.restrict_to(rho_eps.grid())?;
    let sets = VacuumSets::from_values(
        rho_eps.grid(),
        base.values(),
        rho_eps.values(),
        kernel.epsilon().powf(beta),
        atol,
    );
    let ratio: Vec<f64> = rho_eps
        .values()
        .iter()
        .zip(base.values())
        .map(|(&re, &r)| if re >= atol { (re - r) / re } else { 0.0 })
        .collect();
    let cv = rho_eps.grid().cell_volume();
    let proof: NormValue = fieldlab::lp_norm_values(&ratio, cv, q, Some(&sets.b))?;
    let theorem = fieldlab::lp_norm_values(&ratio, cv, q, Some(&sets.b_theorem))?;
    Ok(RatioCondition {
        epsilon: kernel.epsilon(),
        proof_set: proof.value,
        theorem_set: theorem.value,
        empty: proof.empty_mask,
        atol,
    })
}

/// Stability verdict for a ladder of values that should stay bounded.
#[derive(Debug, Clone, Serialize)]
pub struct PlateauReport {
    /// `(ε, value)` in ladder order.
    pub samples: Vec<(f64, f64)>,
    pub median: f64,
    pub last: f64,
    /// `last / median`.
    pub last_to_median: f64,
    /// `max / min` over the ladder.
    pub spread: f64,
    /// Log-log slope against ε; clearly negative slopes mean growth.
    pub growth_exponent: f64,
    pub pass: bool,
}

/// Passes when the ladder spans at least three halvings and the finest value is
/// within a factor 2 of the median.
pub fn plateau_report(samples: Vec<(f64, f64)>) -> PlateauReport {
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.1).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n == 0 {
        0.0
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let last = samples.last().map_or(0.0, |s| s.1);
    let tiny = 1e-300;
    let last_to_median = if median > tiny { last / median } else if last > tiny { f64::INFINITY } else { 1.0 };
    let (lo, hi) = (sorted.first().copied().unwrap_or(0.0), sorted.last().copied().unwrap_or(0.0));
    let spread = if lo > tiny { hi / lo } else if hi > tiny { f64::INFINITY } else { 1.0 };
    let growth_exponent = if n >= 4 {
        fit_rate(&samples, Some(0..n)).map_or(0.0, |f| if f.excluded_zeros == 0 { f.exponent } else { 0.0 })
    } else {
        0.0
    };
    PlateauReport { samples, median, last, last_to_median, spread, growth_exponent, pass: n >= 4 && last_to_median <= 2.0 }
}

pub fn ratio_condition_ladder(rho: &Field, beta: f64, q: f64, eps_ladder: &[f64]) -> Result<(Vec<RatioCondition>, PlateauReport)> {
    let mut rows = Vec::with_capacity(eps_ladder.len());
    for &e in eps_ladder {
        let k = fieldlab::make_mollifier(e, rho.grid().ndim(), rho.grid())?;
        rows.push(ratio_condition(rho, &k, beta, q)?);
    }
    let plateau = plateau_report(rows.iter().map(|r| (r.epsilon, r.proof_set)).collect());
    Ok((rows, plateau))
}

/// `‖(w^ε − w)/w^ε‖_{L¹(region)}` along a ladder. The region defaults to `{w^ε > 0}`;
/// a supplied region (on the grid of `w`) must have `w^ε > 0` everywhere.
pub fn l1_ratio_lemma_check(w: &Field, eps_ladder: &[f64], region: Option<&[bool]>) -> Result<PlateauReport> {
    w.check_nonnegative()?;
    let atol = default_atol(w);
    let mask_field = match region {
        Some(m) => {
            if m.len() != w.len() {
                return Err(LabError::GridMismatch("region mask length differs from the field".into()));
            }
            Some(Field::new(w.grid().clone(), 1, m.iter().map(|&b| f64::from(u8::from(b))).collect())?)
        }
        None => None,
    };
    let mut samples = Vec::with_capacity(eps_ladder.len());
    for &e in eps_ladder {
        let k = fieldlab::make_mollifier(e, w.grid().ndim(), w.grid())?;
        let we = fieldlab::mollify(w, &k)?;
        let base = w.restrict_to(we.grid())?;
        let mask: Vec<bool> = match &mask_field {
            Some(mf) => {
                let m: Vec<bool> = mf.restrict_to(we.grid())?.values().iter().map(|&v| v > 0.5).collect();
                if let Some(i) = m.iter().zip(we.values()).position(|(&inside, &v)| inside && v < atol) {
                    return Err(LabError::Precondition(format!(
                        "w^eps vanishes at node {i} inside the region (eps = {e})"
                    )));
                }
                m
            }
            None => we.values().iter().map(|&v| v >= atol).collect(),
        };
        let ratio: Vec<f64> = we
            .values()
            .iter()
            .zip(base.values())
            .map(|(&a, &b)| if a >= atol { (a - b) / a } else { 0.0 })
            .collect();
        let v = fieldlab::lp_norm_values(&ratio, we.grid().cell_volume(), 1.0, Some(&mask))?;
        samples.push((e, v.value));
    }
    Ok(plateau_report(samples))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReciprocalRow {
    pub epsilon: f64,
    /// `‖(w^ε − w)/w^ε‖_{L^r}`.
    pub lhs: f64,
    /// `‖w^ε − w‖_{L^q} · ‖1/w‖_{L^p(E)} · |Ω^ε|^{1/r − 1/p − 1/q}`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReciprocalReport {
    pub inverse_norm: f64,
    pub rows: Vec<ReciprocalRow>,
    /// Fit of `lhs` against ε; a positive exponent means the left side vanishes.
    pub lhs_exponent: f64,
}

pub fn reciprocal_integrability_rate(w: &Field, p: f64, q: f64, r: f64, eps_ladder: &[f64]) -> Result<ReciprocalReport> {
    if !(p >= 1.0 && q >= 1.0 && r >= 1.0) || 1.0 / p + 1.0 / q > 1.0 / r + 1e-15 {
        return Err(LabError::ExponentRelation(format!(
            "need 1/p + 1/q <= 1/r with p, q, r >= 1; got p={p}, q={q}, r={r}"
        )));
    }
    w.check_nonnegative()?;
    let atol = default_atol(w);
    let e_mask: Vec<bool> = w.values().iter().map(|&v| v > atol).collect();
    let inv: Vec<f64> = w.values().iter().map(|&v| if v > atol { 1.0 / v } else { 0.0 }).collect();
    let inverse_norm = fieldlab::lp_norm_values(&inv, w.grid().cell_volume(), p, Some(&e_mask))?.value;
    let mut rows = Vec::with_capacity(eps_ladder.len());
    for &e in eps_ladder {
        let k = fieldlab::make_mollifier(e, w.grid().ndim(), w.grid())?;
        let we = fieldlab::mollify(w, &k)?;
        let base = w.restrict_to(we.grid())?;
        let cv = we.grid().cell_volume();
        let diff: Vec<f64> = we.values().iter().zip(base.values()).map(|(a, b)| a - b).collect();
        let ratio: Vec<f64> = we
            .values()
            .iter()
            .zip(&diff)
            .map(|(&a, &d)| if a >= atol { d / a } else { 0.0 })
            .collect();
        let lhs = fieldlab::lp_norm_values(&ratio, cv, r, None)?.value;
        let dq = fieldlab::lp_norm_values(&diff, cv, q, None)?.value;
        let measure = we.grid().measure();
        let bound = dq * inverse_norm * measure.powf(1.0 / r - 1.0 / p - 1.0 / q);
        rows.push(ReciprocalRow { epsilon: e, lhs, bound, holds: lhs <= bound * (1.0 + 1e-12) });
    }
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon, r.lhs)).collect();
    let lhs_exponent = if samples.len() >= 4 {
        fit_rate(&samples, Some(0..samples.len())).map_or(0.0, |f| f.exponent)
    } else {
        0.0
    };
    Ok(ReciprocalReport { inverse_norm, rows, lhs_exponent })
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => f64::NAN,
    }
}

/// Lattice offsets within physical distance `r` (all axes).
fn ball_offsets(grid: &GridSpec, r: f64) -> Vec<Vec<isize>> {
    let nd = grid.ndim();
    let rad: Vec<isize> = grid.axes().iter().map(|a| (r / a.spacing).floor() as isize).collect();
    let mut out = Vec::new();
    let mut cur: Vec<isize> = rad.iter().map(|&k| -k).collect();
    loop {
        let d2: f64 = cur.iter().zip(grid.axes()).map(|(&j, a)| (j as f64 * a.spacing).powi(2)).sum();
        if d2 <= r * r * (1.0 + 1e-12) {
            out.push(cur.clone());
        }
        let mut a = nd;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if cur[a] < rad[a] {
                cur[a] += 1;
                break;
            }
            cur[a] = -rad[a];
        }
    }
}

/// Sum of `values` over the ball; `None` if the ball leaves a non-periodic axis.
fn ball_sum(grid: &GridSpec, values: &[f64], multi: &[usize], offsets: &[Vec<isize>]) -> Option<f64> {
    let mut acc = 0.0;
    let mut idx = vec![0usize; multi.len()];
    for off in offsets {
        for (a, ax) in grid.axes().iter().enumerate() {
            let s = multi[a] as isize + off[a];
            idx[a] = if ax.periodic {
                s.rem_euclid(ax.n as isize) as usize
            } else if s < 0 || s >= ax.n as isize {
                return None;
            } else {
                s as usize
            };
        }
        acc += values[grid.linear_index(&idx)];
    }
    Some(acc)
}

/// Distance from every node to the complement of `region` (nodes outside the region and
/// the outer edge of non-periodic axes). Periodic-only grids with a full region get half
/// the smallest period.
fn distance_to_complement(grid: &GridSpec, region: &[bool]) -> Vec<f64> {
    let outside: Vec<Vec<f64>> = (0..grid.node_count()).filter(|&i| !region[i]).map(|i| grid.coords(i)).collect();
    let cap = grid.axes().iter().map(|a| 0.5 * a.extent()).fold(f64::INFINITY, f64::min);
    (0..grid.node_count())
        .map(|i| {
            if !region[i] {
                return 0.0;
            }
            let x = grid.coords(i);
            let mut d = cap;
            for (a, ax) in grid.axes().iter().enumerate() {
                if !ax.periodic {
                    d = d.min(x[a] - ax.origin).min(ax.origin + ax.extent() - x[a]);
                }
            }
            for y in &outside {
                let mut s = 0.0;
                for (a, ax) in grid.axes().iter().enumerate() {
                    let mut dx = (x[a] - y[a]).abs();
                    if ax.periodic {
                        dx = dx.min(ax.extent() - dx);
                    }
                    s += dx * dx;
                }
                d = d.min(s.sqrt());
            }
            d
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QnsWitness {
    pub node: usize,
    pub radius: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QnsReport {
    pub constant: f64,
    /// Largest `w(x) |B_r| / ∫_{B_r} w` over checked pairs.
    pub empirical_c: f64,
    pub worst: Option<QnsWitness>,
    pub checked: usize,
    pub eps0: f64,
    pub pass: bool,
}

/// Default `ε_0` used when scanning radii against the distance to the region boundary.
pub const DEFAULT_EPS0: f64 = 0.25;

/// Checks `w(x) ≤ C/|B_r| ∫_{B_r(x)} w` for region nodes and radii `r ≤ ε_0 dist(x, region^c)`.
/// Ball measures and integrals use the same discrete quadrature.
pub fn qns_check(w: &Field, region: &[bool], radii: &[f64], constant: f64, eps0: f64) -> Result<QnsReport> {
    w.check_nonnegative()?;
    if region.len() != w.len() {
        return Err(LabError::GridMismatch("region mask length differs from the field".into()));
    }
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(LabError::Precondition(format!("eps0 must lie in (0, 1), got {eps0}")));
    }
    let grid = w.grid();
    let values = if w.components() == 1 { w.values().to_vec() } else { w.magnitude() };
    let dist = distance_to_complement(grid, region);
    let mut worst: Option<QnsWitness> = None;
    let mut checked = 0;
    for &r in radii {
        let offsets = ball_offsets(grid, r);
        for i in 0..grid.node_count() {
            if !region[i] || r > eps0 * dist[i] {
                continue;
            }
            let multi = grid.multi_index(i);
            let Some(sum) = ball_sum(grid, &values, &multi, &offsets) else { continue };
            checked += 1;
            let ratio = if values[i] <= 0.0 {
                0.0
            } else if sum <= 0.0 {
                f64::INFINITY
            } else {
                values[i] * offsets.len() as f64 / sum
            };
            if worst.is_none_or(|w| ratio > w.ratio) {
                worst = Some(QnsWitness { node: i, radius: r, ratio });
            }
        }
    }
    let empirical_c = worst.map_or(0.0, |w| w.ratio);
    Ok(QnsReport {
        constant,
        empirical_c,
        worst,
        checked,
        eps0,
        pass: empirical_c <= constant * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub dim: usize,
    /// `C` given to the forward check.
    pub qns_constant: f64,
    pub qns: QnsReport,
    /// `3^N C / ω_N`.
    pub forward_bound: f64,
    /// `max w / w^ε` over the region and the ladder.
    pub empirical_m: f64,
    pub forward_pass: bool,
    /// `M` given to the backward check.
    pub m: f64,
    pub m_holds: bool,
    /// `M ω_N`, the constant the backward direction predicts.
    pub backward_constant: f64,
    pub backward_qns: QnsReport,
    pub backward_pass: bool,
    /// `empirical_m ≤ 1.1 · 3^N/ω_N · empirical C` (only meaningful when both pass).
    pub relation_holds: bool,
}

/// Both directions of the QNS ⇔ `w ≤ M w^ε` equivalence on a region.
pub fn qns_mollifier_equivalence(
    w: &Field,
    region: &[bool],
    eps_ladder: &[f64],
    constant: f64,
    m: f64,
    eps0: f64,
) -> Result<EquivalenceReport> {
    let n = w.grid().ndim();
    let omega = unit_ball_volume(n);
    let qns = qns_check(w, region, eps_ladder, constant, eps0)?;
    let atol = default_atol(w);
    let dist = distance_to_complement(w.grid(), region);
    let mut empirical_m = 0.0f64;
    let region_field = Field::new(w.grid().clone(), 1, region.iter().map(|&b| f64::from(u8::from(b))).collect())?;
    let dist_field = Field::new(w.grid().clone(), 1, dist)?;
    for &e in eps_ladder {
        let k = fieldlab::make_mollifier(e, n, w.grid())?;
        let we = fieldlab::mollify(w, &k)?;
        let base = w.restrict_to(we.grid())?;
        let reg = region_field.restrict_to(we.grid())?;
        let dd = dist_field.restrict_to(we.grid())?;
        for (((&a, &b), &inside), &d) in we.values().iter().zip(base.values()).zip(reg.values()).zip(dd.values()) {
            // Same admissibility as the QNS scan: the kernel ball must sit in the region.
            if inside < 0.5 || e > eps0 * d {
                continue;
            }
            let ratio = if b <= atol {
                0.0
            } else if a <= atol {
                f64::INFINITY
            } else {
                b / a
            };
            empirical_m = empirical_m.max(ratio);
        }
    }
    let forward_bound = 3f64.powi(n as i32) * constant / omega;
    let forward_pass = qns.pass && empirical_m <= forward_bound * 1.1;
    let m_holds = empirical_m <= m * (1.0 + 1e-12);
    let backward_constant = m * omega;
    let backward_qns = qns_check(w, region, eps_ladder, backward_constant * 1.1, eps0)?;
    let backward_pass = m_holds && backward_qns.pass;
    let relation_holds = empirical_m <= 1.1 * 3f64.powi(n as i32) / omega * qns.empirical_c.max(1.0);
    Ok(EquivalenceReport {
        dim: n,
        qns_constant: constant,
        qns,
        forward_bound,
        empirical_m,
        forward_pass,
        m,
        m_holds,
        backward_constant,
        backward_qns,
        backward_pass,
        relation_holds,
    })
}

/// Relative weighted mean oscillation `‖(w − avg_{B_r} w)/avg_{B_r} w‖_{L^p}`; diagnostic only.
pub fn mean_oscillation(w: &Field, radius: f64, p: f64) -> Result<f64> {
    let grid = w.grid();
    let offsets = ball_offsets(grid, radius);
    let mut vals = Vec::with_capacity(w.len());
    let mut mask = Vec::with_capacity(w.len());
    for i in 0..grid.node_count() {
        let multi = grid.multi_index(i);
        match ball_sum(grid, w.values(), &multi, &offsets) {
            Some(s) if s > 0.0 => {
                let avg = s / offsets.len() as f64;
                vals.push((w.values()[i] - avg) / avg);
                mask.push(true);
            }
            _ => {
                vals.push(0.0);
                mask.push(false);
            }
        }
    }
    Ok(fieldlab::lp_norm_values(&vals, grid.cell_volume(), p, Some(&mask))?.value)
}

/// `[1/i, 1/i + 2^{-i}]` reduced mod 1 as (start, width).
/// Period of the torus carrying the counterexample. With period 1 the first spike
/// `[1, 1.5]` would wrap onto `[0, 0.5]` and sit under every later spike.
pub const SPIKE_PERIOD: f64 = 2.0;

pub fn spike_interval(i: u32) -> (f64, f64) {
    let start = 1.0 / i as f64;
    (start, 0.5f64.powi(i as i32))
}

fn in_spike(x: f64, i: u32) -> bool {
    let (s, w) = spike_interval(i);
    let d = (x - s).rem_euclid(SPIKE_PERIOD);
    d <= w
}

/// `f = Σ_{i ≤ i_max} χ_{[1/i, 1/i + 2^{-i}]}` on the torus `[0, SPIKE_PERIOD)`.
pub fn counterexample_field(i_max: u32, grid_points: usize) -> Result<Field> {
    if i_max == 0 || i_max > 24 {
        return Err(LabError::Precondition(format!("i_max must lie in 1..=24, got {i_max}")));
    }
    let h = SPIKE_PERIOD / grid_points as f64;
    let finest = 0.5f64.powi(i_max as i32);
    if h > finest / 8.0 {
        return Err(LabError::Resolution(format!(
            "{grid_points} points give spacing {h}, the finest spike needs at most {}",
            finest / 8.0
        )));
    }
    let grid = GridSpec::stationary(&[grid_points], &[SPIKE_PERIOD])?;
    Field::scalar_from_fn(&grid, |x| (1..=i_max).filter(|&i| in_spike(x[0], i)).count() as f64)
}

/// Node mask of spike `i`.
pub fn spike_mask(grid: &GridSpec, i: u32) -> Vec<bool> {
    let mut m = vec![false; grid.node_count()];
    grid.for_each_node(|k, x| m[k] = in_spike(x[grid.first_space_axis()], i));
    m
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CounterexampleRow {
    pub i: u32,
    pub epsilon: f64,
    /// `‖f/f^ε‖_{L^p(𝕋)}`.
    pub full: f64,
    /// `‖f/f^ε‖_{L^p(I_i)}` on the i-th spike.
    pub spike: f64,
    /// `spike / ε_i`, the spike-local quantity with the `1/(2i²)` prefactor removed.
    pub scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub p: f64,
    pub rows: Vec<CounterexampleRow>,
    /// Slope of `log2(scaled)` against `i`; the lower bound predicts `1 − 1/p`.
    pub growth_per_i: f64,
    /// Slope of `log2(full)` against `i`, reported alongside.
    pub full_growth_per_i: f64,
    pub predicted: f64,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `‖f/f^ε‖_{L^p}` at `ε_i = 1/(2i²)` for each `i`, with growth fits against `i`.
pub fn counterexample_blowup(f: &Field, p: f64, i_list: &[u32]) -> Result<CounterexampleReport> {
    if !(p > 1.0) {
        return Err(LabError::Precondition(format!("p must exceed 1, got {p}")));
    }
    if i_list.len() < 2 {
        return Err(LabError::InsufficientSamples("need at least two spike indices".into()));
    }
    let grid = f.grid();
    let atol = default_atol(f);
    let mut rows = Vec::with_capacity(i_list.len());
    for &i in i_list {
        let eps = 1.0 / (2.0 * (i as f64).powi(2));
        let k = fieldlab::make_mollifier(eps, grid.ndim(), grid)?;
        let fe = fieldlab::mollify(f, &k)?;
        let ratio: Vec<f64> = fe
            .values()
            .iter()
            .zip(f.values())
            .map(|(&a, &b)| if b <= atol { 0.0 } else { b / a.max(f64::MIN_POSITIVE) })
            .collect();
        let cv = grid.cell_volume();
        let full = fieldlab::lp_norm_values(&ratio, cv, p, None)?.value;
        let mask = spike_mask(grid, i);
        let spike = fieldlab::lp_norm_values(&ratio, cv, p, Some(&mask))?.value;
        rows.push(CounterexampleRow { i, epsilon: eps, full, spike, scaled: spike / eps });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.i as f64).collect();
    let scaled: Vec<f64> = rows.iter().map(|r| r.scaled.log2()).collect();
    let full: Vec<f64> = rows.iter().map(|r| r.full.log2()).collect();
    Ok(CounterexampleReport {
        p,
        growth_per_i: slope(&xs, &scaled),
        full_growth_per_i: slope(&xs, &full),
        predicted: 1.0 - 1.0 / p,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spike_integral() {
        let f = counterexample_field(3, 1 << 10).unwrap();
        let integral = fieldlab::integrate(f.values(), f.grid().cell_volume());
        assert!((integral - 0.875).abs() <= 3.0 * 2.0 / 1024.0);
        assert!(counterexample_field(12, 1 << 14).is_err());
        let one = counterexample_field(1, 64).unwrap();
        let x_in = one.grid().coords(40)[0];
        assert!((1.0..1.5).contains(&x_in) && one.values()[40] == 1.0);
        assert_eq!(one.values()[10], 0.0);
    }

    #[test]
    fn partition_and_empty_sets() {
        let g = GridSpec::space_time(&[32, 128], &[1.0, 1.0]).unwrap();
        let rho = Field::scalar_from_fn(&g, |x| (2.0 * std::f64::consts::PI * x[1]).sin().abs()).unwrap();
        let k = fieldlab::make_mollifier(0.1, 2, &g).unwrap();
        let s = build_vacuum_sets(&rho, &k, 0.5, None).unwrap();
        for i in 0..s.a.len() {
            assert_eq!(u8::from(s.a[i]) + u8::from(s.b[i]) + u8::from(s.c[i]), 1);
        }
        let m = s.measures();
        assert!((m.a + m.b + m.c - m.total).abs() < 1e-12);
        let flat = Field::constant(&g, 1, 2.0).unwrap();
        let s = build_vacuum_sets(&flat, &k, 0.5, None).unwrap();
        assert!(s.a.iter().chain(&s.b).all(|&x| !x));
        let zero = Field::constant(&g, 1, 0.0).unwrap();
        let s = build_vacuum_sets(&zero, &k, 0.5, None).unwrap();
        assert!(s.a.iter().all(|&x| x));
    }

    #[test]
    fn reciprocal_relation_checked() {
        let g = GridSpec::stationary(&[256], &[1.0]).unwrap();
        let w = Field::constant(&g, 1, 1.0).unwrap();
        assert!(matches!(
            reciprocal_integrability_rate(&w, 2.0, 2.0, 2.0, &[0.1]),
            Err(LabError::ExponentRelation(_))
        ));
    }

    #[test]
    fn qns_constant_and_convex() {
        let g = GridSpec::stationary(&[512], &[1.0]).unwrap();
        let region = vec![true; 512];
        let c = Field::constant(&g, 1, 3.0).unwrap();
        let r = qns_check(&c, &region, &[0.01, 0.02], 1.0, DEFAULT_EPS0).unwrap();
        assert!(r.pass && (r.empirical_c - 1.0).abs() < 1e-12);
        let v = Field::scalar_from_fn(&g, |x| (x[0] - 0.5).abs()).unwrap();
        // |x - 1/2| has a concave kink where the torus wraps; keep away from it.
        let inner: Vec<bool> = (0..512).map(|i| (i as f64 + 0.5) / 512.0 > 0.1 && (i as f64 + 0.5) / 512.0 < 0.9).collect();
        let r = qns_check(&v, &inner, &[0.01, 0.02, 0.05], 1.0, DEFAULT_EPS0).unwrap();
        assert!(r.pass, "{}", r.empirical_c);
    }
}
