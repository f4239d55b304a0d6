//! Energy budgets: local residuals, the mollified balance, viscous identities, shocks and
//! bounded domains.

use serde::Serialize;

use crate::besov::{fit_rate, RateFit};
use crate::commutator::{energy_commutators, stress_tensor, TestFunction};
use crate::error::{LabError, Result};
use crate::fieldlab::{self, Field, GridSpec, MollifierKernel};
use crate::pressure::PressureLaw;
use crate::synth::RiemannSolution;
use crate::vacuum::{plateau_report, PlateauReport};

fn check_state(rho: &Field, u: &Field) -> Result<()> {
    if !rho.grid().same_as(u.grid()) {
        return Err(LabError::GridMismatch("density and velocity live on different grids".into()));
    }
    let d = rho.grid().spatial_dim();
    if rho.components() != 1 || u.components() != d {
        return Err(LabError::InvalidField(format!("expected a scalar density and {d} velocity components")));
    }
    rho.check_nonnegative()
}

/// Node-wise `E = ½ρ|u|² + P(ρ)` and spatial flux `F = (½ρ|u|² + p + P) u`.
pub fn energy_and_flux(rho: &[f64], u: &[Vec<f64>], law: &PressureLaw) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rho.len();
    let mut e = vec![0.0; n];
    let mut f = vec![vec![0.0; n]; u.len()];
    for k in 0..n {
        let q: f64 = u.iter().map(|c| c[k] * c[k]).sum();
        let kin = 0.5 * rho[k] * q;
        let pot = law.potential(rho[k]);
        e[k] = kin + pot;
        let w = kin + law.p(rho[k]) + pot;
        for (fi, ui) in f.iter_mut().zip(u) {
            fi[k] = w * ui[k];
        }
    }
    (e, f)
}

fn components(u: &Field) -> Vec<Vec<f64>> {
    (0..u.components()).map(|c| u.component(c).to_vec()).collect()
}

/// `−∫∫ (∂_t φ E + ∇φ · F)`, the pairing of `∂_t E + div F` with `φ`.
fn pairing(grid: &GridSpec, phi: &TestFunction, e: &[f64], f: &[Vec<f64>]) -> Result<f64> {
    phi.validate()?;
    phi.check_support(grid)?;
    let (_, dphi) = phi.sample(grid);
    let first = grid.first_space_axis();
    let mut acc = 0.0;
    for k in 0..e.len() {
        if grid.has_time() {
            acc += dphi[0][k] * e[k];
        }
        for (j, fj) in f.iter().enumerate() {
            acc += dphi[first + j][k] * fj[k];
        }
    }
    Ok(-acc * grid.cell_volume())
}

/// Local energy residual by quadrature; no derivatives of `(ρ, u)` are taken.
pub fn local_energy_residual(rho: &Field, u: &Field, law: &PressureLaw, phi: &TestFunction) -> Result<f64> {
    check_state(rho, u)?;
    let (e, f) = energy_and_flux(rho.values(), &components(u), law);
    pairing(rho.grid(), phi, &e, &f)
}

/// One ε of the mollified energy balance.
#[derive(Debug, Clone, Serialize)]
pub struct BalanceRow {
    pub epsilon: f64,
    /// `−∫∫ (∂_t φ E^ε + ∇φ · F^ε)` with `E^ε = ½ρ^ε|u^ε|² + P(ρ^ε)` and
    /// `F^ε = ½|u^ε|²(ρu)^ε + (p(ρ^ε) + P(ρ^ε)) u^ε`.
    pub lhs: f64,
    /// `∫ φ (r1 + r2 + r3 + s)`.
    pub rhs: f64,
    pub gap: f64,
}

pub fn mollified_energy_balance(
    rho: &Field,
    u: &Field,
    law: &PressureLaw,
    kernel: &MollifierKernel,
    phi: &TestFunction,
) -> Result<BalanceRow> {
    check_state(rho, u)?;
    let d = rho.grid().spatial_dim();
    let rho_e = fieldlab::mollify(rho, kernel)?;
    let u_e = fieldlab::mollify(u, kernel)?;
    let m = Field::from_components(
        rho.grid(),
        (0..d).map(|i| u.component(i).iter().zip(rho.values()).map(|(a, r)| a * r).collect()).collect(),
    )?;
    let m_e = fieldlab::mollify(&m, kernel)?;
    let grid = rho_e.grid();
    let n = grid.node_count();
    let ue = components(&u_e);
    let mut e = vec![0.0; n];
    let mut f = vec![vec![0.0; n]; d];
    for k in 0..n {
        let r = rho_e.values()[k];
        let q: f64 = ue.iter().map(|c| c[k] * c[k]).sum();
        e[k] = 0.5 * r * q + law.potential(r);
        let w = law.p(r) + law.potential(r);
        for j in 0..d {
            f[j][k] = 0.5 * q * m_e.component(j)[k] + w * ue[j][k];
        }
    }
    let lhs = pairing(grid, phi, &e, &f)?;
    let report = energy_commutators(rho, u, law, kernel, phi, 1.0)?;
    let rhs = report.term("total");
    Ok(BalanceRow { epsilon: kernel.epsilon(), lhs, rhs, gap: (lhs - rhs).abs() })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyBudget {
    pub rows: Vec<BalanceRow>,
    /// Largest `|LHS − RHS|` over the ladder.
    pub identity_gap: f64,
    /// Un-mollified residual the left side should approach.
    pub local_residual: f64,
    /// Decay of `|RHS|` along the ladder, when it can be fitted.
    pub rhs_fit: Option<RateFit>,
}

pub fn energy_budget(
    rho: &Field,
    u: &Field,
    law: &PressureLaw,
    eps_ladder: &[f64],
    phi: &TestFunction,
) -> Result<EnergyBudget> {
    let mut ladder = eps_ladder.to_vec();
    ladder.sort_by(|a, b| b.total_cmp(a));
    let rows = ladder
        .iter()
        .map(|&e| {
            let k = fieldlab::make_mollifier(e, rho.grid().ndim(), rho.grid())?;
            mollified_energy_balance(rho, u, law, &k, phi)
        })
        .collect::<Result<Vec<_>>>()?;
    let identity_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon, r.rhs.abs())).collect();
    let rhs_fit = if samples.len() >= 4 { fit_rate(&samples, None).ok() } else { None };
    Ok(EnergyBudget { rows, identity_gap, local_residual: local_energy_residual(rho, u, law, phi)?, rhs_fit })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NsEnergyReport {
    /// Pairing of `∂_t E + div(F − 𝕊̂u) + 𝕊̂:∇u` with `φ`, where `𝕊̂ = 𝕊` or `ρ𝕊`.
    pub residual: f64,
    /// `∫∫ φ 𝕊̂:∇u ≥ 0`.
    pub dissipation: f64,
}

pub fn ns_energy_residual(
    rho: &Field,
    u: &Field,
    law: &PressureLaw,
    mu: f64,
    nu: f64,
    degenerate: bool,
    phi: &TestFunction,
) -> Result<NsEnergyReport> {
    check_state(rho, u)?;
    if !(mu >= 0.0 && nu >= 0.0) {
        return Err(LabError::Precondition("viscosities must be non-negative".into()));
    }
    let grid = rho.grid();
    let d = grid.spatial_dim();
    let first = grid.first_space_axis();
    let uc = components(u);
    let (e, mut f) = energy_and_flux(rho.values(), &uc, law);
    let mut s = stress_tensor(u, mu, nu)?;
    if degenerate {
        for row in s.iter_mut() {
            for col in row.iter_mut() {
                col.iter_mut().zip(rho.values()).for_each(|(v, r)| *v *= r);
            }
        }
    }
    let n = rho.len();
    let mut diss = vec![0.0; n];
    for i in 0..d {
        for j in 0..d {
            let g = fieldlab::partial(u, i, first + j)?;
            for k in 0..n {
                // F − 𝕊u
                f[j][k] -= s[j][i][k] * uc[i][k];
                diss[k] += s[i][j][k] * g[k];
            }
        }
    }
    let transport = pairing(grid, phi, &e, &f)?;
    let (phi_v, _) = phi.sample(grid);
    let dissipation = phi_v.iter().zip(&diss).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
    if dissipation < -1e-12 * (1.0 + diss.iter().map(|v| v.abs()).sum::<f64>() * grid.cell_volume()) {
        return Err(LabError::InvalidField(format!("negative viscous dissipation {dissipation}")));
    }
    Ok(NsEnergyReport { residual: transport + dissipation, dissipation })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShockCheck {
    pub residual: f64,
    /// `D ∫ φ(t, x0 + σt) dt`.
    pub predicted: f64,
    pub relative_error: f64,
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Compares the measured residual of a sampled Riemann solution against the closed-form
/// dissipation of its shocks.
pub fn shock_dissipation_check(
    rho: &Field,
    u: &Field,
    law: &PressureLaw,
    phi: &TestFunction,
    solution: &RiemannSolution,
) -> Result<ShockCheck> {
    let residual = local_energy_residual(rho, u, law, phi)?;
    let grid = rho.grid();
    let t_axis = grid.axis(0);
    let (t0, t1) = (t_axis.origin, t_axis.origin + t_axis.extent());
    let mut predicted = 0.0;
    for w in solution.waves {
        if let crate::synth::Wave::Shock { speed, dissipation } = w {
            let line = simpson(|t| phi.eval(grid, &[t, solution.x0 + speed * t], &mut [0.0; 2]), t0, t1, 20_000);
            predicted += dissipation * line;
        }
    }
    let relative_error = if predicted != 0.0 { (residual - predicted).abs() / predicted.abs() } else { residual.abs() };
    Ok(ShockCheck { residual, predicted, relative_error })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffRow {
    pub delta: f64,
    pub nu: f64,
    /// `∫∫ ∂_t φ E`.
    pub bulk: f64,
    /// `∫∫ ∂_x φ F`, carried by the boundary layer of width `2δ`.
    pub boundary: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundedBalanceReport {
    pub t1: f64,
    pub t2: f64,
    /// Rows over the δ ladder at the finest ν.
    pub delta_rows: Vec<CutoffRow>,
    /// Rows over the ν ladder at the finest δ.
    pub nu_rows: Vec<CutoffRow>,
    /// Fit of `|boundary|` against δ.
    pub boundary_fit: Option<RateFit>,
    pub boundary_plateau: PlateauReport,
    /// `|u·n|` extrapolated to the boundary, maximum over time.
    pub boundary_velocity: f64,
    /// `∫E(t1) − ∫E(t2)` from linear interpolation of the slice energies.
    pub energy_difference: f64,
    /// Largest change of the slice energy between adjacent time nodes.
    pub slice_variation: f64,
}

/// Cutoff construction on a bounded 1D interval. With `strict`, a boundary velocity above
/// `tol` is an error; otherwise it is only reported.
#[allow(clippy::too_many_arguments)]
pub fn global_energy_balance_bounded(
    rho: &Field,
    u: &Field,
    law: &PressureLaw,
    delta_ladder: &[f64],
    nu_ladder: &[f64],
    t1: f64,
    t2: f64,
    tol: f64,
    strict: bool,
) -> Result<BoundedBalanceReport> {
    check_state(rho, u)?;
    let grid = rho.grid();
    if !grid.has_time() || grid.spatial_dim() != 1 || grid.axis(1).periodic {
        return Err(LabError::InvalidGrid("bounded balance needs a 1D interval in space and time".into()));
    }
    if delta_ladder.is_empty() || nu_ladder.is_empty() {
        return Err(LabError::InvalidLadder("delta and nu ladders must be non-empty".into()));
    }
    let (nt, nx) = (grid.axis(0).n, grid.axis(1).n);
    let xs = grid.axis(1);
    let uv = u.values();
    let mut boundary_velocity = 0.0f64;
    for it in 0..nt {
        let at = |i: usize| uv[it * nx + i];
        // Nodes sit at cell centres; extrapolate linearly to the walls.
        let left = 1.5 * at(0) - 0.5 * at(1);
        let right = 1.5 * at(nx - 1) - 0.5 * at(nx - 2);
        boundary_velocity = boundary_velocity.max(left.abs()).max(right.abs());
    }
    if strict && boundary_velocity > tol {
        return Err(LabError::BoundaryCondition(boundary_velocity));
    }
    let (e, f) = energy_and_flux(rho.values(), &components(u), law);
    let row = |delta: f64, nu: f64| -> Result<CutoffRow> {
        let phi = TestFunction::BoundaryCutoff { delta, t1, t2, nu };
        phi.validate()?;
        phi.check_support(grid)?;
        let (_, dphi) = phi.sample(grid);
        let cv = grid.cell_volume();
        let bulk = dphi[0].iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() * cv;
        let boundary = dphi[1].iter().zip(&f[0]).map(|(a, b)| a * b).sum::<f64>() * cv;
        Ok(CutoffRow { delta, nu, bulk, boundary })
    };
    let nu_min = nu_ladder.iter().copied().fold(f64::INFINITY, f64::min);
    let delta_min = delta_ladder.iter().copied().fold(f64::INFINITY, f64::min);
    let delta_rows = delta_ladder.iter().map(|&d| row(d, nu_min)).collect::<Result<Vec<_>>>()?;
    let nu_rows = nu_ladder.iter().map(|&v| row(delta_min, v)).collect::<Result<Vec<_>>>()?;
    let samples: Vec<(f64, f64)> = delta_rows.iter().map(|r| (r.delta, r.boundary.abs())).collect();
    let boundary_fit = if samples.len() >= 4 { fit_rate(&samples, Some(0..samples.len())).ok() } else { None };
    let boundary_plateau = plateau_report(samples);

    let slice: Vec<f64> = (0..nt).map(|it| e[it * nx..(it + 1) * nx].iter().sum::<f64>() * xs.spacing).collect();
    let ta = grid.axis(0);
    let interp = |t: f64| {
        let s = ((t - ta.coord(0)) / ta.spacing).clamp(0.0, (nt - 1) as f64);
        let i = (s.floor() as usize).min(nt - 2);
        let w = s - i as f64;
        slice[i] * (1.0 - w) + slice[i + 1] * w
    };
    let slice_variation = slice.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    Ok(BoundedBalanceReport {
        t1,
        t2,
        delta_rows,
        nu_rows,
        boundary_fit,
        boundary_plateau,
        boundary_velocity,
        energy_difference: interp(t1) - interp(t2),
        slice_variation,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::synth;

    fn grid() -> GridSpec {
        GridSpec::space_time(&[48, 96], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn constant_state_is_conservative() {
        let g = grid();
        let law = PressureLaw::new(1.4, 1.0).unwrap();
        let phi = TestFunction::centred_bump(&g, 0.3);
        for (r, v) in [(1.0, 0.0), (0.0, 0.0), (1.0, 1.0)] {
            let (rho, u) = synth::constant_state(r, &[v], &g).unwrap();
            assert!(local_energy_residual(&rho, &u, &law, &phi).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn pairing_is_linear_in_phi() {
        let g = grid();
        let law = PressureLaw::new(1.4, 1.0).unwrap();
        let rho = Field::scalar_from_fn(&g, |x| 1.0 + 0.2 * (2.0 * PI * x[1]).sin() * x[0]).unwrap();
        let u = Field::scalar_from_fn(&g, |x| (2.0 * PI * x[1]).cos()).unwrap();
        let (e, f) = energy_and_flux(rho.values(), &components(&u), &law);
        let a = TestFunction::centred_bump(&g, 0.3);
        let b = TestFunction::Bump { center: vec![0.4, 0.2], radius: 0.25 };
        let (pa, pb) = (pairing(&g, &a, &e, &f).unwrap(), pairing(&g, &b, &e, &f).unwrap());
        // Combine the sampled gradients directly.
        let (_, da) = a.sample(&g);
        let (_, db) = b.sample(&g);
        let mut acc = 0.0;
        for k in 0..e.len() {
            acc += (2.0 * da[0][k] - 3.0 * db[0][k]) * e[k] + (2.0 * da[1][k] - 3.0 * db[1][k]) * f[0][k];
        }
        let combined = -acc * g.cell_volume();
        assert!((combined - (2.0 * pa - 3.0 * pb)).abs() < 1e-12);
    }

    #[test]
    fn viscous_cases() {
        let g = grid();
        let law = PressureLaw::new(1.4, 1.0).unwrap();
        let phi = TestFunction::centred_bump(&g, 0.3);
        let (rho, u) = synth::constant_state(1.0, &[0.0], &g).unwrap();
        let r = ns_energy_residual(&rho, &u, &law, 1.0, 1.0, false, &phi).unwrap();
        assert!(r.residual.abs() < 1e-12 && r.dissipation == 0.0);
        let rho = Field::constant(&g, 1, 2.5).unwrap();
        let u = Field::scalar_from_fn(&g, |x| (2.0 * PI * x[1]).sin()).unwrap();
        let plain = ns_energy_residual(&rho, &u, &law, 0.3, 0.1, false, &phi).unwrap();
        let degen = ns_energy_residual(&rho, &u, &law, 0.3, 0.1, true, &phi).unwrap();
        assert!(plain.dissipation > 0.0);
        assert!((degen.dissipation - 2.5 * plain.dissipation).abs() < 1e-12 * degen.dissipation);
    }

    #[test]
    fn cubic_scaling_of_kinetic_flux() {
        let g = grid();
        let law = PressureLaw::new(1.4, 1.0).unwrap();
        let rho = Field::constant(&g, 1, 1.0).unwrap();
        let u = Field::scalar_from_fn(&g, |x| (2.0 * PI * x[1]).sin() * (1.0 + x[0])).unwrap();
        let (e1, f1) = energy_and_flux(rho.values(), &components(&u), &law);
        let (e3, f3) = energy_and_flux(rho.values(), &components(&u.scale(3.0)), &law);
        for k in 0..e1.len() {
            // P(1) = 0 and p(1) = κ: kinetic parts scale by c² and c³.
            assert!((e3[k] - 9.0 * e1[k]).abs() < 1e-12);
            let kin1 = f1[0][k] - law.p(1.0) * u.values()[k];
            let kin3 = f3[0][k] - 3.0 * law.p(1.0) * u.values()[k];
            assert!((kin3 - 27.0 * kin1).abs() < 1e-12);
        }
    }
}
