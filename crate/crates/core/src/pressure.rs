//! Polytropic laws, the pressure potential, C² approximants and the pressure commutator.

use serde::{Deserialize, Serialize};

use crate::besov::{fit_rate, validate_ladder, RateFit};
use crate::error::{LabError, Result};
use crate::fieldlab::{self, Field, MollifierKernel};

/// `p(ρ) = κ ρ^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureLaw {
    pub gamma: f64,
    pub kappa: f64,
}

impl PressureLaw {
    /// `γ = 2` is accepted as the quadratic limiting case.
    pub fn new(gamma: f64, kappa: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= 2.0) {
            return Err(LabError::Precondition(format!("gamma must lie in (1, 2], got {gamma}")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(LabError::Precondition(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { gamma, kappa })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.gamma, self.kappa).map(|_| ())
    }

    pub fn p(&self, rho: f64) -> f64 {
        self.kappa * rho.max(0.0).powf(self.gamma)
    }

    pub fn dp(&self, rho: f64) -> f64 {
        self.kappa * self.gamma * rho.max(0.0).powf(self.gamma - 1.0)
    }

    /// `p''`; infinite at vacuum for `γ < 2`.
    pub fn d2p(&self, rho: f64) -> f64 {
        self.kappa * self.gamma * (self.gamma - 1.0) * rho.max(0.0).powf(self.gamma - 2.0)
    }

    /// Pressure potential `P(ρ) = ρ ∫_1^ρ p(r)/r² dr`.
    pub fn potential(&self, rho: f64) -> f64 {
        let r = rho.max(0.0);
        self.kappa * (r.powf(self.gamma) - r) / (self.gamma - 1.0)
    }

    /// `P'(ρ)`; finite at vacuum, equal to `-κ/(γ-1)` there.
    pub fn potential_prime(&self, rho: f64) -> f64 {
        let r = rho.max(0.0);
        self.kappa * (self.gamma * r.powf(self.gamma - 1.0) - 1.0) / (self.gamma - 1.0)
    }

    /// Constant in `|p(b) − p(a) − p'(a)(b − a)| ≤ C |b − a|^γ`.
    pub fn holder_constant(&self) -> f64 {
        self.kappa
    }
}

/// Sup over `s ∈ [0, 1]` of `|s^γ − T(s)|` where `T` is the second-order Taylor
/// polynomial of `s^γ` at `s = 1`.
fn taylor_gap_unit(gamma: f64) -> f64 {
    let n = 20_000;
    let mut g = 0.0f64;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        let t = 1.0 + gamma * (s - 1.0) + 0.5 * gamma * (gamma - 1.0) * (s - 1.0).powi(2);
        g = g.max((s.powf(gamma) - t).abs());
    }
    // Dense sampling of a smooth function; pad the estimate slightly.
    g * 1.01
}

/// `p^δ`: equal to `p` above `ρ_c`, its second-order Taylor polynomial at `ρ_c` below.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct C2Approximant {
    pub delta: f64,
    pub base: PressureLaw,
    pub rho_c: f64,
    /// Upper bound on `sup |p − p^δ|`.
    pub gap_bound: f64,
}

pub fn make_c2_approximant(law: PressureLaw, delta: f64, rho_max: f64) -> Result<C2Approximant> {
    if !(delta > 0.0) {
        return Err(LabError::Precondition(format!("delta must be positive, got {delta}")));
    }
    let g = taylor_gap_unit(law.gamma);
    let (rho_c, gap_bound) = if g < 1e-14 {
        // γ = 2: p itself is a quadratic.
        (0.0, 0.0)
    } else {
        let rc = (delta / (law.kappa * g)).powf(1.0 / law.gamma);
        let rc = rc.min(rho_max.max(0.0));
        (rc, law.kappa * g * rc.powf(law.gamma))
    };
    Ok(C2Approximant { delta, base: law, rho_c, gap_bound })
}

impl C2Approximant {
    pub fn value(&self, rho: f64) -> f64 {
        let r = rho.max(0.0);
        if r >= self.rho_c {
            return self.base.p(r);
        }
        let c = self.rho_c;
        let d = r - c;
        self.base.p(c) + self.base.dp(c) * d + 0.5 * self.base.d2p(c) * d * d
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        let r = rho.max(0.0);
        if r >= self.rho_c {
            return self.base.dp(r);
        }
        let c = self.rho_c;
        self.base.dp(c) + self.base.d2p(c) * (r - c)
    }

    pub fn second_derivative(&self, rho: f64) -> f64 {
        let r = rho.max(0.0);
        if r >= self.rho_c {
            self.base.d2p(r)
        } else {
            self.base.d2p(self.rho_c)
        }
    }

    /// Dense-sample estimate of `sup_{[lo, hi]} |p − p^δ|`.
    pub fn sampled_gap(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| {
                let r = lo + (hi - lo) * i as f64 / samples as f64;
                (self.base.p(r) - self.value(r)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `p^ε(ρ) − p(ρ^ε)` on the mollified domain.
pub fn pressure_commutator(rho: &Field, law: &PressureLaw, kernel: &MollifierKernel) -> Result<Field> {
    rho.check_nonnegative()?;
    let p_rho = rho.map(|r| law.p(r))?;
    let p_eps = fieldlab::mollify(&p_rho, kernel)?;
    let rho_eps = fieldlab::mollify(rho, kernel)?;
    p_eps.zip_with(&rho_eps, |a, r| a - law.p(r))
}

pub fn commutator_rate(rho: &Field, law: &PressureLaw, q: f64, eps_ladder: &[f64]) -> Result<RateFit> {
    rho.check_nonnegative()?;
    validate_ladder(eps_ladder)?;
    let samples = eps_ladder
        .iter()
        .map(|&e| {
            let k = fieldlab::make_mollifier(e, rho.grid().ndim(), rho.grid())?;
            let c = pressure_commutator(rho, law, &k)?;
            Ok((e, fieldlab::lp_norm(&c, q, None)?.value))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_rate(&samples, None)
}

/// Largest node-wise ratio `|p(ρ^ε) − p(ρ) − p'(ρ)(ρ^ε − ρ)| / (C |ρ^ε − ρ|^γ)`;
/// at most 1 when the Hölder bound holds.
pub fn holder_bound_ratio(rho: &Field, law: &PressureLaw, kernel: &MollifierKernel) -> Result<f64> {
    rho.check_nonnegative()?;
    let rho_eps = fieldlab::mollify(rho, kernel)?;
    let base = rho.restrict_to(rho_eps.grid())?;
    let c = law.holder_constant();
    let mut worst = 0.0f64;
    for (&re, &r) in rho_eps.values().iter().zip(base.values()) {
        let d = re - r;
        if d.abs() < 1e-300 {
            continue;
        }
        let lhs = (law.p(re) - law.p(r) - law.dp(r) * d).abs();
        worst = worst.max(lhs / (c * d.abs().powf(law.gamma)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on a log-spaced substitution, independent of the closed form.
    fn potential_quadrature(law: &PressureLaw, rho: f64) -> f64 {
        let n = 20_000;
        let (a, b) = (1.0f64.ln(), rho.ln());
        let h = (b - a) / n as f64;
        let f = |s: f64| {
            let r = s.exp();
            law.p(r) / (r * r) * r
        };
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        rho * acc * h / 3.0
    }

    #[test]
    fn potential_matches_quadrature() {
        for (g, k) in [(1.4, 1.0), (5.0 / 3.0, 0.5), (1.9, 2.0), (2.0, 1.0)] {
            let law = PressureLaw::new(g, k).unwrap();
            assert!(law.potential(1.0).abs() < 1e-15);
            for rho in [1e-6, 1e-3, 0.3, 1.0, 2.5, 10.0] {
                let q = potential_quadrature(&law, rho);
                assert!((q - law.potential(rho)).abs() < 1e-8, "γ={g} ρ={rho}: {q}");
            }
        }
    }

    #[test]
    fn basic_law_properties() {
        let law = PressureLaw::new(5.0 / 3.0, 1.0).unwrap();
        assert_eq!(law.p(0.0), 0.0);
        assert_eq!(law.dp(0.0), 0.0);
        assert!(law.dp(1e-12) < 1e-7);
        assert!(PressureLaw::new(1.0, 1.0).is_err());
        assert!(PressureLaw::new(2.5, 1.0).is_err());
    }

    #[test]
    fn approximant_gap_and_smoothness() {
        let law = PressureLaw::new(5.0 / 3.0, 1.0).unwrap();
        let a = make_c2_approximant(law, 1e-3, 2.0).unwrap();
        assert!(a.sampled_gap(0.0, 2.0, 200_000) <= 1e-3);
        assert!(a.second_derivative(0.0).is_finite());
        // C² across the cut.
        let c = a.rho_c;
        let h = 1e-7 * c;
        assert!((a.value(c - h) - law.p(c - h)).abs() < 1e-15);
        assert!((a.derivative(c - h) - law.dp(c - h)).abs() < 1e-9);
        assert!((a.second_derivative(c - h) - a.second_derivative(c + h)).abs() / law.d2p(c) < 1e-5);
        let huge = make_c2_approximant(law, 100.0, 2.0).unwrap();
        assert!(huge.sampled_gap(0.0, 2.0, 10_000) <= 100.0);
    }
}
