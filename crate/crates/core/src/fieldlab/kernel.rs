use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fieldlab::grid::GridSpec;

/// Radius of the plateau, as a fraction of the kernel radius.
pub const PLATEAU: f64 = 1.0 / 3.0;

/// Transition family used between the plateau and the edge of the support.
///
/// Both families are one-parameter, equal 1 on `r <= 1/3`, vanish for `r >= 1`
/// and decrease monotonically in the shape parameter, so bisection finds the
/// unit-mass member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelProfile {
    /// `exp(theta * (1 - 1/(1 - s^2)))` with `s = (3r - 1)/2`.
    #[default]
    PlateauExp,
    /// `S(1 - s)^theta` where `S` is the C-infinity smooth step.
    PlateauSmoothStep,
}

fn bump_f(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        (-1.0 / y).exp()
    }
}

fn bump_f_prime(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        bump_f(y) / (y * y)
    }
}

/// Smooth step: 0 for `y <= 0`, 1 for `y >= 1`.
pub fn smooth_step(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else if y >= 1.0 {
        1.0
    } else {
        let a = bump_f(y);
        a / (a + bump_f(1.0 - y))
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_prime(y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        return 0.0;
    }
    let a = bump_f(y);
    let b = bump_f(1.0 - y);
    (bump_f_prime(y) * b + a * bump_f_prime(1.0 - y)) / (a + b).powi(2)
}

impl KernelProfile {
    /// Unscaled profile at normalised radius `r = |z|/epsilon`.
    pub fn value(self, theta: f64, r: f64) -> f64 {
        if r <= PLATEAU {
            return 1.0;
        }
        if r >= 1.0 {
            return 0.0;
        }
        let s = (3.0 * r - 1.0) / 2.0;
        match self {
            KernelProfile::PlateauExp => (theta * (1.0 - 1.0 / (1.0 - s * s))).exp(),
            KernelProfile::PlateauSmoothStep => smooth_step(1.0 - s).powf(theta),
        }
    }

    /// Radial derivative d/dr of [`KernelProfile::value`].
    pub fn radial_derivative(self, theta: f64, r: f64) -> f64 {
        if r <= PLATEAU || r >= 1.0 {
            return 0.0;
        }
        let s = (3.0 * r - 1.0) / 2.0;
        match self {
            KernelProfile::PlateauExp => {
                let v = self.value(theta, r);
                v * theta * (-2.0 * s / (1.0 - s * s).powi(2)) * 1.5
            }
            KernelProfile::PlateauSmoothStep => {
                let st = smooth_step(1.0 - s);
                if st <= 0.0 {
                    return 0.0;
                }
                theta * st.powf(theta - 1.0) * smooth_step_prime(1.0 - s) * (-1.5)
            }
        }
    }
}

/// Discretised mollifier `eta^eps(z) = eps^{-N} eta(|z|/eps)` on the grid's lattice.
#[derive(Debug, Clone)]
pub struct MollifierKernel {
    epsilon: f64,
    dim: usize,
    profile: KernelProfile,
    shape_parameter: f64,
    normalisation: f64,
    /// Lattice offsets, `dim` entries per support node.
    offsets: Vec<isize>,
    /// Kernel values `eta^eps(z)` on the support (not multiplied by the cell volume).
    weights: Vec<f64>,
    spacing: Vec<f64>,
    cell_volume: f64,
    radius: Vec<usize>,
}

/// Builds the default-profile kernel of radius `epsilon` for `grid`.
pub fn make_mollifier(epsilon: f64, dim: usize, grid: &GridSpec) -> Result<MollifierKernel> {
    if dim != grid.ndim() {
        return Err(LabError::Precondition(format!(
            "kernel dimension {dim} does not match grid dimension {}",
            grid.ndim()
        )));
    }
    MollifierKernel::new(epsilon, grid, KernelProfile::default())
}

struct Support {
    offsets: Vec<isize>,
    radii: Vec<f64>,
    radius: Vec<usize>,
}

fn lattice_support(epsilon: f64, grid: &GridSpec) -> Support {
    let dim = grid.ndim();
    let spacing: Vec<f64> = grid.axes().iter().map(|a| a.spacing).collect();
    let radius: Vec<usize> = spacing.iter().map(|h| (epsilon / h).floor() as usize).collect();
    let mut offsets = Vec::new();
    let mut radii = Vec::new();
    let mut cur: Vec<isize> = radius.iter().map(|&r| -(r as isize)).collect();
    loop {
        let r2: f64 = cur
            .iter()
            .zip(&spacing)
            .map(|(&j, h)| (j as f64 * h).powi(2))
            .sum();
        let r = r2.sqrt() / epsilon;
        if r < 1.0 {
            offsets.extend_from_slice(&cur);
            radii.push(r);
        }
        let mut a = dim;
        loop {
            if a == 0 {
                return Support { offsets, radii, radius };
            }
            a -= 1;
            if cur[a] < radius[a] as isize {
                cur[a] += 1;
                break;
            }
            cur[a] = -(radius[a] as isize);
        }
    }
}

impl MollifierKernel {
    pub fn new(epsilon: f64, grid: &GridSpec, profile: KernelProfile) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(LabError::Precondition(format!("epsilon must be positive, got {epsilon}")));
        }
        for (a, ax) in grid.axes().iter().enumerate() {
            if epsilon < 3.0 * ax.spacing * (1.0 - 1e-12) {
                return Err(LabError::Resolution(format!(
                    "epsilon {epsilon} is below 3 grid spacings ({}) on axis {a}",
                    3.0 * ax.spacing
                )));
            }
        }
        let dim = grid.ndim();
        let cell_volume = grid.cell_volume();
        let support = lattice_support(epsilon, grid);
        let scale = cell_volume / epsilon.powi(dim as i32);
        let mass = |theta: f64| -> f64 {
            support.radii.iter().map(|&r| profile.value(theta, r)).sum::<f64>() * scale
        };

        let plateau_mass = support.radii.iter().filter(|&&r| r <= PLATEAU).count() as f64 * scale;
        let full_mass = mass(0.0);
        if plateau_mass >= 1.0 || full_mass <= 1.0 {
            return Err(LabError::InfeasibleIntegral(format!(
                "plateau mass {plateau_mass:.6} and full-ball mass {full_mass:.6} do not bracket 1"
            )));
        }
        let mut hi = 1.0;
        while mass(hi) > 1.0 {
            hi *= 2.0;
            if hi > 1e8 {
                return Err(LabError::InfeasibleIntegral(
                    "shape parameter search diverged".into(),
                ));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mass(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        let normalisation = 1.0 / mass(theta);
        let peak = normalisation / epsilon.powi(dim as i32);
        let weights = support.radii.iter().map(|&r| profile.value(theta, r) * peak).collect();
        Ok(Self {
            epsilon,
            dim,
            profile,
            shape_parameter: theta,
            normalisation,
            offsets: support.offsets,
            weights,
            spacing: grid.axes().iter().map(|a| a.spacing).collect(),
            cell_volume,
            radius: support.radius,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> KernelProfile {
        self.profile
    }

    pub fn shape_parameter(&self) -> f64 {
        self.shape_parameter
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn offset(&self, k: usize) -> &[isize] {
        &self.offsets[k * self.dim..(k + 1) * self.dim]
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Largest lattice offset per axis.
    pub fn radius(&self) -> &[usize] {
        &self.radius
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Plateau value `eps^{-N}` times the normalisation.
    pub fn peak(&self) -> f64 {
        self.normalisation / self.epsilon.powi(self.dim as i32)
    }

    /// Quadrature weights `eta^eps(z) * cell_volume`; they sum to one.
    pub fn quadrature_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().map(move |w| w * self.cell_volume)
    }

    /// Physical length of lattice offset `k`, normalised by epsilon.
    pub fn normalised_radius(&self, k: usize) -> f64 {
        self.offset(k)
            .iter()
            .zip(&self.spacing)
            .map(|(&j, h)| (j as f64 * h).powi(2))
            .sum::<f64>()
            .sqrt()
            / self.epsilon
    }

    /// Partial derivative of `eta^eps` along `axis` at support node `k`.
    pub fn weight_derivative(&self, k: usize, axis: usize) -> f64 {
        let r = self.normalised_radius(k);
        if r == 0.0 {
            return 0.0;
        }
        let z_a = self.offset(k)[axis] as f64 * self.spacing[axis];
        let dr_dz = z_a / (r * self.epsilon * self.epsilon);
        self.peak() * self.profile.radial_derivative(self.shape_parameter, r) * dr_dz
    }

    /// Second moment `∫ eta^eps(z) z_a^2 dz` along one axis.
    pub fn second_moment(&self, axis: usize) -> f64 {
        (0..self.len())
            .map(|k| {
                let z = self.offset(k)[axis] as f64 * self.spacing[axis];
                self.weights[k] * self.cell_volume * z * z
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid256() -> GridSpec {
        GridSpec::space_time(&[256, 256], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn unit_mass_and_plateau() {
        let g = grid256();
        let k = make_mollifier(0.1, 2, &g).unwrap();
        let mass: f64 = k.quadrature_weights().sum();
        assert!((mass - 1.0).abs() < 1e-12, "mass {mass}");
        let origin = (0..k.len()).find(|&i| k.offset(i).iter().all(|&j| j == 0)).unwrap();
        assert_eq!(k.weights()[origin], k.peak());
        for i in 0..k.len() {
            let r = k.normalised_radius(i);
            assert!(r < 1.0);
            if r <= PLATEAU {
                assert_eq!(k.weights()[i], k.peak());
            } else {
                assert!(k.weights()[i] <= k.peak() && k.weights()[i] >= 0.0);
            }
        }
    }

    #[test]
    fn both_profiles_normalise() {
        let g = GridSpec::space_time(&[64, 64, 64], &[1.0, 1.0, 1.0]).unwrap();
        for p in [KernelProfile::PlateauExp, KernelProfile::PlateauSmoothStep] {
            let k = MollifierKernel::new(0.2, &g, p).unwrap();
            let mass: f64 = k.quadrature_weights().sum();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn under_resolved_epsilon() {
        let g = grid256();
        assert!(matches!(make_mollifier(2.0 / 256.0, 2, &g), Err(LabError::Resolution(_))));
        assert!(make_mollifier(0.1, 3, &g).is_err());
    }

    #[test]
    fn radial_symmetry() {
        let g = grid256();
        let k = make_mollifier(0.05, 2, &g).unwrap();
        for i in 0..k.len() {
            let o = k.offset(i);
            let j = (0..k.len()).find(|&j| k.offset(j) == [o[1], -o[0]]).unwrap();
            assert!((k.weights()[i] - k.weights()[j]).abs() < 1e-12 * k.peak());
        }
    }

    #[test]
    fn radial_derivative_matches_difference() {
        for p in [KernelProfile::PlateauExp, KernelProfile::PlateauSmoothStep] {
            for r in [0.4, 0.55, 0.8, 0.95] {
                let h = 1e-6;
                let fd = (p.value(1.3, r + h) - p.value(1.3, r - h)) / (2.0 * h);
                assert!((fd - p.radial_derivative(1.3, r)).abs() < 1e-5 * (1.0 + fd.abs()));
            }
        }
    }
}
