//! Generators: lacunary fields, vacuum profiles, exact Euler solutions and stresses.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fieldlab::{Field, GridSpec};
use crate::pressure::PressureLaw;

/// Lacunary series `Σ_{j ≤ J} 2^{−αj} cos(2π 2^j k_j·y + θ_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeierstrassSpec {
    pub alpha: f64,
    pub levels: u32,
    pub seed: u64,
    #[serde(default = "one")]
    pub base_frequency: u32,
}

fn one() -> u32 {
    1
}

impl WeierstrassSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(LabError::Precondition(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.levels == 0 || self.base_frequency == 0 {
            return Err(LabError::Precondition("levels and base_frequency must be positive".into()));
        }
        Ok(())
    }
}

/// Wave vectors (cycles per unit length, one entry per axis) and phases per level.
fn weierstrass_modes(spec: &WeierstrassSpec, grid: &GridSpec) -> Result<Vec<(f64, Vec<f64>, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nd = grid.ndim();
    let mut modes = Vec::with_capacity(spec.levels as usize + 1);
    for j in 0..=spec.levels {
        let mag = f64::from(spec.base_frequency) * 2f64.powi(j as i32);
        let mut dir: Vec<f64> = (0..nd).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        dir.iter_mut().for_each(|v| *v /= norm);
        let phase = rng.gen::<f64>() * 2.0 * PI;
        let mut k = Vec::with_capacity(nd);
        for (a, ax) in grid.axes().iter().enumerate() {
            let mut ka = mag * dir[a];
            if ax.periodic {
                // Whole number of cycles across the period.
                ka = (ka * ax.extent()).round() / ax.extent();
            }
            if ka.abs() * ax.spacing >= 0.5 {
                return Err(LabError::Nyquist(format!(
                    "level {j} needs {} cycles per unit on axis {a}, above the grid Nyquist limit {}",
                    ka.abs(),
                    0.5 / ax.spacing
                )));
            }
            k.push(ka);
        }
        modes.push((2f64.powf(-spec.alpha * j as f64), k, phase));
    }
    Ok(modes)
}

/// Samples the series and shifts it so its minimum equals `floor`.
pub fn weierstrass_field(spec: &WeierstrassSpec, grid: &GridSpec, floor: f64) -> Result<Field> {
    spec.validate()?;
    let modes = weierstrass_modes(spec, grid)?;
    let raw = Field::scalar_from_fn(grid, |x| {
        modes
            .iter()
            .map(|(amp, k, th)| {
                let dot: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
                amp * (2.0 * PI * dot + th).cos()
            })
            .sum()
    })?;
    let m = raw.min();
    raw.map(|v| v - m + floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VacuumKind {
    /// `|x − x₀|^m` with `x₀` the centre of the first spatial axis.
    Power,
    /// `|sin(π x)|^m`.
    SinePower,
}

/// `1/ρ ∈ L^q` near an isolated zero of order `m` iff `mq < 1`.
pub fn reciprocal_in_lq(m: f64, q: f64) -> bool {
    m * q < 1.0
}

/// Density touching vacuum at isolated points, constant in time.
pub fn vacuum_profile(kind: VacuumKind, m: f64, grid: &GridSpec) -> Result<Field> {
    if !(m > 0.0) {
        return Err(LabError::Precondition(format!("exponent m must be positive, got {m}")));
    }
    let s = grid.first_space_axis();
    let ax = *grid.axis(s);
    let centre = ax.origin + 0.5 * ax.extent();
    Field::scalar_from_fn(grid, |x| match kind {
        VacuumKind::Power => {
            let mut d = (x[s] - centre).abs();
            if ax.periodic {
                d = d.min(ax.extent() - d);
            }
            d.powf(m)
        }
        VacuumKind::SinePower => (PI * x[s]).sin().abs().powf(m),
    })
}

pub fn constant_state(rho0: f64, u0: &[f64], grid: &GridSpec) -> Result<(Field, Field)> {
    if !(rho0 >= 0.0) {
        return Err(LabError::NegativeDensity { node: 0, value: rho0 });
    }
    if u0.len() != grid.spatial_dim() {
        return Err(LabError::InvalidField(format!(
            "velocity needs {} components, got {}",
            grid.spatial_dim(),
            u0.len()
        )));
    }
    let rho = Field::constant(grid, 1, rho0)?;
    let u = Field::from_components(grid, u0.iter().map(|&v| vec![v; grid.node_count()]).collect())?;
    Ok((rho, u))
}

fn sound_speed(law: &PressureLaw, rho: f64) -> f64 {
    law.dp(rho).sqrt()
}

/// `∫_{ρ0}^{ρ} c(s)/s ds = 2(c(ρ) − c(ρ0))/(γ − 1)`.
fn riemann_shift(law: &PressureLaw, rho: f64, rho0: f64) -> f64 {
    2.0 * (sound_speed(law, rho) - sound_speed(law, rho0)) / (law.gamma - 1.0)
}

/// Right-moving simple wave with `ρ(0, x) = 1 + a sin(2πx/L)`, built along straight
/// characteristics `x = ξ + λ(ξ) t`, `λ = u + c`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimpleWaveInfo {
    pub amplitude: f64,
    pub blowup_time: f64,
}

pub fn simple_wave_blowup_time(law: &PressureLaw, amplitude: f64, length: f64) -> f64 {
    // λ'(ξ) = (dλ/dρ) ρ0'(ξ); sample densely for the most negative slope.
    let n = 4096;
    let mut worst = 0.0f64;
    for i in 0..n {
        let xi = length * i as f64 / n as f64;
        let rho = 1.0 + amplitude * (2.0 * PI * xi / length).sin();
        let drho = amplitude * 2.0 * PI / length * (2.0 * PI * xi / length).cos();
        let c = sound_speed(law, rho);
        // d(u + c)/dρ = c/ρ + c'(ρ), c' = (γ−1) c / (2ρ).
        let dl = c / rho + 0.5 * (law.gamma - 1.0) * c / rho;
        worst = worst.min(dl * drho);
    }
    if worst < 0.0 {
        -1.0 / worst
    } else {
        f64::INFINITY
    }
}

pub fn simple_wave(law: &PressureLaw, amplitude: f64, grid: &GridSpec) -> Result<(Field, Field, SimpleWaveInfo)> {
    law.validate()?;
    if !grid.has_time() || grid.spatial_dim() != 1 || !grid.axis(1).periodic {
        return Err(LabError::InvalidGrid("simple waves need a 1D periodic space-time grid".into()));
    }
    if !(amplitude.abs() < 1.0) {
        return Err(LabError::Precondition(format!("amplitude must be below 1, got {amplitude}")));
    }
    let length = grid.axis(1).extent();
    let t_final = grid.axis(0).origin + grid.axis(0).extent();
    let blowup = simple_wave_blowup_time(law, amplitude, length);
    if t_final >= blowup {
        return Err(LabError::BlowUpTime { t_final, t_blowup: blowup });
    }
    let rho0 = |xi: f64| 1.0 + amplitude * (2.0 * PI * xi / length).sin();
    let lambda = |r: f64| riemann_shift(law, r, 1.0) + sound_speed(law, r);
    let dlambda = |xi: f64| {
        let r = rho0(xi);
        let c = sound_speed(law, r);
        (c / r + 0.5 * (law.gamma - 1.0) * c / r) * amplitude * 2.0 * PI / length * (2.0 * PI * xi / length).cos()
    };
    let n = grid.node_count();
    let mut rho = vec![0.0; n];
    let mut u = vec![0.0; n];
    grid.for_each_node(|i, x| {
        let (t, y) = (x[0], x[1]);
        let mut xi = y - lambda(1.0) * t;
        for _ in 0..60 {
            let f = xi + lambda(rho0(xi)) * t - y;
            let step = f / (1.0 + dlambda(xi) * t);
            xi -= step;
            if step.abs() < 1e-16 * (1.0 + xi.abs()) {
                break;
            }
        }
        let r = rho0(xi);
        rho[i] = r;
        u[i] = riemann_shift(law, r, 1.0);
    });
    Ok((
        Field::new(grid.clone(), 1, rho)?,
        Field::new(grid.clone(), 1, u)?,
        SimpleWaveInfo { amplitude, blowup_time: blowup },
    ))
}

/// Left and right states of a 1D Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiemannSpec {
    pub rho_l: f64,
    pub u_l: f64,
    pub rho_r: f64,
    pub u_r: f64,
    pub law: PressureLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Wave {
    /// `dissipation = [F] − σ[E]` (right minus left), negative for admissible shocks.
    Shock { speed: f64, dissipation: f64 },
    Rarefaction { head: f64, tail: f64 },
    /// Zero-strength wave.
    None { speed: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RiemannSolution {
    pub spec: RiemannSpec,
    pub rho_star: f64,
    pub u_star: f64,
    pub waves: [Wave; 2],
    /// Sum of the shock dissipation rates.
    pub dissipation: f64,
    /// Initial discontinuity location.
    pub x0: f64,
}

/// `E = ½ρu² + P(ρ)` and `F = (½ρu² + p + P) u` for a 1D state.
pub fn energy_and_flux(law: &PressureLaw, rho: f64, u: f64) -> (f64, f64) {
    let e = 0.5 * rho * u * u + law.potential(rho);
    (e, (0.5 * rho * u * u + law.p(rho) + law.potential(rho)) * u)
}

/// Velocity jump across the wave connecting `rho_k` to `rho` (Lax curve function).
fn wave_curve(law: &PressureLaw, rho: f64, rho_k: f64) -> (f64, f64) {
    if rho > rho_k {
        let dp = law.p(rho) - law.p(rho_k);
        let a = dp * (rho - rho_k) / (rho * rho_k);
        let f = a.sqrt();
        let da = (law.dp(rho) * (rho - rho_k) + dp) / (rho * rho_k) - a / rho;
        (f, 0.5 * da / f.max(1e-300))
    } else {
        (riemann_shift(law, rho, rho_k), sound_speed(law, rho) / rho)
    }
}

pub fn solve_riemann(spec: &RiemannSpec) -> Result<RiemannSolution> {
    let law = spec.law;
    law.validate()?;
    let RiemannSpec { rho_l, u_l, rho_r, u_r, .. } = *spec;
    if !(rho_l > 0.0 && rho_r > 0.0) {
        return Err(LabError::InadmissibleStates("both states need positive density".into()));
    }
    let (cl, cr) = (sound_speed(&law, rho_l), sound_speed(&law, rho_r));
    if u_r - u_l >= 2.0 * (cl + cr) / (law.gamma - 1.0) {
        return Err(LabError::InadmissibleStates("the states generate a vacuum region".into()));
    }
    // Newton on f_L(ρ) + f_R(ρ) + u_R − u_L = 0, monotone increasing in ρ.
    let g = |r: f64| {
        let (fl, dl) = wave_curve(&law, r, rho_l);
        let (fr, dr) = wave_curve(&law, r, rho_r);
        (fl + fr + u_r - u_l, dl + dr)
    };
    let (mut lo, mut hi) = (1e-14, rho_l.max(rho_r));
    while g(hi).0 < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(LabError::InadmissibleStates("no intermediate state found".into()));
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, dv) = g(r);
        if v > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let next = r - v / dv;
        r = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if (hi - lo) < 1e-15 * r || v.abs() < 1e-15 {
            break;
        }
    }
    let rho_star = r;
    let (fl, _) = wave_curve(&law, rho_star, rho_l);
    let (fr, _) = wave_curve(&law, rho_star, rho_r);
    let u_star = 0.5 * (u_l + u_r) + 0.5 * (fr - fl);
    let c_star = sound_speed(&law, rho_star);
    let tol = 1e-12 * rho_l.max(rho_r);
    let shock = |ra: f64, ua: f64, rb: f64, ub: f64| {
        let sigma = (rb * ub - ra * ua) / (rb - ra);
        let (ea, fa) = energy_and_flux(&law, ra, ua);
        let (eb, fb) = energy_and_flux(&law, rb, ub);
        Wave::Shock { speed: sigma, dissipation: (fb - fa) - sigma * (eb - ea) }
    };
    let w1 = if (rho_star - rho_l).abs() <= tol {
        Wave::None { speed: u_l - cl }
    } else if rho_star > rho_l {
        shock(rho_l, u_l, rho_star, u_star)
    } else {
        Wave::Rarefaction { head: u_l - cl, tail: u_star - c_star }
    };
    let w2 = if (rho_star - rho_r).abs() <= tol {
        Wave::None { speed: u_r + cr }
    } else if rho_star > rho_r {
        shock(rho_star, u_star, rho_r, u_r)
    } else {
        Wave::Rarefaction { head: u_r + cr, tail: u_star + c_star }
    };
    let dissipation = [w1, w2]
        .iter()
        .map(|w| if let Wave::Shock { dissipation, .. } = w { *dissipation } else { 0.0 })
        .sum();
    Ok(RiemannSolution { spec: *spec, rho_star, u_star, waves: [w1, w2], dissipation, x0: 0.0 })
}

impl RiemannSolution {
    /// State at similarity coordinate `ξ = (x − x0)/t`.
    pub fn sample(&self, xi: f64) -> (f64, f64) {
        let law = self.spec.law;
        let g = law.gamma;
        let s = &self.spec;
        let left_of = |w: &Wave| match *w {
            Wave::Shock { speed, .. } | Wave::None { speed } => xi < speed,
            Wave::Rarefaction { head, .. } => xi < head,
        };
        // 1-wave.
        if left_of(&self.waves[0]) {
            return (s.rho_l, s.u_l);
        }
        if let Wave::Rarefaction { head, tail } = self.waves[0] {
            if xi >= head && xi < tail {
                let cl = sound_speed(&law, s.rho_l);
                let c = (g - 1.0) / (g + 1.0) * (s.u_l + 2.0 * cl / (g - 1.0) - xi);
                return (self.density_for_speed(c), xi + c);
            }
        }
        // 2-wave.
        match self.waves[1] {
            Wave::Shock { speed, .. } | Wave::None { speed } => {
                if xi < speed {
                    (self.rho_star, self.u_star)
                } else {
                    (s.rho_r, s.u_r)
                }
            }
            Wave::Rarefaction { head, tail } => {
                if xi < tail {
                    (self.rho_star, self.u_star)
                } else if xi < head {
                    let cr = sound_speed(&law, s.rho_r);
                    let c = (g - 1.0) / (g + 1.0) * (xi - s.u_r + 2.0 * cr / (g - 1.0));
                    (self.density_for_speed(c), xi - c)
                } else {
                    (s.rho_r, s.u_r)
                }
            }
        }
    }

    fn density_for_speed(&self, c: f64) -> f64 {
        let law = self.spec.law;
        // c² = κγρ^{γ−1}
        (c.max(0.0).powi(2) / (law.kappa * law.gamma)).powf(1.0 / (law.gamma - 1.0))
    }
}

/// Samples the exact solution on a 1D space-time grid with the jump at the centre of the
/// spatial axis; the shock sits between two nodes, without smoothing.
pub fn riemann_solution(spec: &RiemannSpec, grid: &GridSpec) -> Result<(Field, Field, RiemannSolution)> {
    if !grid.has_time() || grid.spatial_dim() != 1 {
        return Err(LabError::InvalidGrid("Riemann solutions need a 1D space-time grid".into()));
    }
    let mut sol = solve_riemann(spec)?;
    let ax = grid.axis(1);
    sol.x0 = ax.origin + 0.5 * ax.extent();
    let n = grid.node_count();
    let (mut rho, mut u) = (vec![0.0; n], vec![0.0; n]);
    grid.for_each_node(|i, x| {
        let (r, v) = sol.sample((x[1] - sol.x0) / x[0]);
        rho[i] = r;
        u[i] = v;
    });
    Ok((Field::new(grid.clone(), 1, rho)?, Field::new(grid.clone(), 1, u)?, sol))
}

/// `𝕊(∇u)` per `[i][j][node]`; see [`crate::commutator::stress_tensor`].
pub fn ns_stress(u: &Field, mu: f64, nu: f64) -> Result<Vec<Vec<Vec<f64>>>> {
    if !(1..=2).contains(&u.grid().spatial_dim()) {
        return Err(LabError::InvalidGrid("stress assembly supports one or two space dimensions".into()));
    }
    crate::commutator::stress_tensor(u, mu, nu)
}

/// Linear acoustic standing wave on `[0, 1]` around `ρ = 1`:
/// `ρ = 1 + a cos(πx) cos(ωt)`, `u = a c₀ sin(πx) sin(ωt) + b (2x − 1)`.
/// With `b = 0` the velocity vanishes on the boundary; `b ≠ 0` gives `u·n = b` at both ends.
pub fn acoustic_standing_wave(law: &PressureLaw, amplitude: f64, boundary_velocity: f64, grid: &GridSpec) -> Result<(Field, Field)> {
    law.validate()?;
    if !grid.has_time() || grid.spatial_dim() != 1 || grid.axis(1).periodic {
        return Err(LabError::InvalidGrid("standing waves need a bounded 1D space-time grid".into()));
    }
    let ax = *grid.axis(1);
    let c0 = sound_speed(law, 1.0);
    let k = PI / ax.extent();
    let omega = c0 * k;
    let rho = Field::scalar_from_fn(grid, |x| 1.0 + amplitude * (k * (x[1] - ax.origin)).cos() * (omega * x[0]).cos())?;
    let u = Field::scalar_from_fn(grid, |x| {
        let s = (x[1] - ax.origin) / ax.extent();
        amplitude * c0 * (k * (x[1] - ax.origin)).sin() * (omega * x[0]).sin() + boundary_velocity * (2.0 * s - 1.0)
    })?;
    Ok((rho, u))
}
