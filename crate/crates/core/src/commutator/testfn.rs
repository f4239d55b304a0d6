use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fieldlab::kernel::{smooth_step, smooth_step_prime};
use crate::fieldlab::GridSpec;

/// Smooth compactly supported test function `φ(t, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// `exp(1 − 1/(1 − |y − c|²/r²))` in space-time (periodic distance on periodic axes).
    Bump { center: Vec<f64>, radius: f64 },
    /// Bump in time only, constant in space.
    TimeBump { center: f64, radius: f64 },
    /// `Θ_ν`: 0 for `t < t1 + ν` or `t > t2 − ν`, 1 on `(t1 + 2ν, t2 − 2ν)`.
    TimeWindow { t1: f64, t2: f64, nu: f64 },
    /// `χ(d(x)/δ) Θ_ν(t)` with `χ = 0` below 1 and `χ = 1` above 2, `d` the distance to
    /// the boundary of a bounded interval.
    BoundaryCutoff { delta: f64, t1: f64, t2: f64, nu: f64 },
}

fn bump_profile(s: f64) -> (f64, f64) {
    // value and d/ds of exp(1 − 1/(1 − s)) for s = |y|²/r² ∈ [0, 1)
    if s >= 1.0 {
        return (0.0, 0.0);
    }
    let v = (1.0 - 1.0 / (1.0 - s)).exp();
    (v, -v / (1.0 - s).powi(2))
}

fn window(t: f64, t1: f64, t2: f64, nu: f64) -> (f64, f64) {
    let a = (t - t1 - nu) / nu;
    let b = (t2 - nu - t) / nu;
    let (sa, sb) = (smooth_step(a), smooth_step(b));
    (sa * sb, (smooth_step_prime(a) * sb - sa * smooth_step_prime(b)) / nu)
}

impl TestFunction {
    /// Plain space-time bump centred in the grid with radius `fraction` of the smallest extent.
    pub fn centred_bump(grid: &GridSpec, fraction: f64) -> Self {
        let center = grid.axes().iter().map(|a| a.origin + 0.5 * a.extent()).collect();
        let radius = fraction * grid.axes().iter().map(|a| a.extent()).fold(f64::INFINITY, f64::min);
        TestFunction::Bump { center, radius }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            TestFunction::Bump { radius, .. } | TestFunction::TimeBump { radius, .. } => *radius > 0.0,
            TestFunction::TimeWindow { t1, t2, nu } => *nu > 0.0 && t2 - t1 > 4.0 * nu,
            TestFunction::BoundaryCutoff { delta, t1, t2, nu } => {
                *delta > 0.0 && *nu > 0.0 && t2 - t1 > 4.0 * nu
            }
        };
        if ok {
            Ok(())
        } else {
            Err(LabError::Precondition(format!("degenerate test function {self:?}")))
        }
    }

    /// `φ` and its gradient (time first when the grid has time) at a point.
    pub fn eval(&self, grid: &GridSpec, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let t0 = usize::from(grid.has_time());
        match self {
            TestFunction::Bump { center, radius } => {
                let mut d = vec![0.0; x.len()];
                let mut s = 0.0;
                for (a, ax) in grid.axes().iter().enumerate() {
                    let mut dx = x[a] - center[a];
                    if ax.periodic {
                        let l = ax.extent();
                        dx -= l * (dx / l).round();
                    }
                    d[a] = dx;
                    s += dx * dx;
                }
                let (v, dv) = bump_profile(s / (radius * radius));
                for a in 0..x.len() {
                    grad[a] = dv * 2.0 * d[a] / (radius * radius);
                }
                v
            }
            TestFunction::TimeBump { center, radius } => {
                if !grid.has_time() {
                    return 1.0;
                }
                let dt = x[0] - center;
                let (v, dv) = bump_profile(dt * dt / (radius * radius));
                grad[0] = dv * 2.0 * dt / (radius * radius);
                v
            }
            TestFunction::TimeWindow { t1, t2, nu } => {
                if !grid.has_time() {
                    return 1.0;
                }
                let (v, dv) = window(x[0], *t1, *t2, *nu);
                grad[0] = dv;
                v
            }
            TestFunction::BoundaryCutoff { delta, t1, t2, nu } => {
                let (th, dth) = if grid.has_time() { window(x[0], *t1, *t2, *nu) } else { (1.0, 0.0) };
                let mut chi = 1.0;
                let mut dchi = vec![0.0; x.len()];
                for a in t0..x.len() {
                    let ax = grid.axis(a);
                    if ax.periodic {
                        continue;
                    }
                    let lo = x[a] - ax.origin;
                    let hi = ax.origin + ax.extent() - x[a];
                    let (d, sign) = if lo <= hi { (lo, 1.0) } else { (hi, -1.0) };
                    let c = smooth_step(d / delta - 1.0);
                    let dc = smooth_step_prime(d / delta - 1.0) / delta * sign;
                    for (b, g) in dchi.iter_mut().enumerate() {
                        *g *= c;
                        if b == a {
                            *g = chi * dc;
                        }
                    }
                    chi *= c;
                }
                if grid.has_time() {
                    grad[0] = dth * chi;
                }
                for a in t0..x.len() {
                    grad[a] = th * dchi[a];
                }
                th * chi
            }
        }
    }

    /// Samples `φ` and `∇φ` on every node; gradients are per axis.
    pub fn sample(&self, grid: &GridSpec) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = grid.node_count();
        let nd = grid.ndim();
        let mut v = vec![0.0; n];
        let mut g = vec![vec![0.0; n]; nd];
        let mut buf = vec![0.0; nd];
        grid.for_each_node(|i, x| {
            v[i] = self.eval(grid, x, &mut buf);
            for a in 0..nd {
                g[a][i] = buf[a];
            }
        });
        (v, g)
    }

    /// Requires `φ` to vanish on the two outermost node layers of every non-periodic
    /// axis, where the finite differences fall back to one-sided stencils.
    pub fn check_support(&self, grid: &GridSpec) -> Result<()> {
        let nd = grid.ndim();
        let mut buf = vec![0.0; nd];
        let mut bad = None;
        grid.for_each_node(|i, x| {
            if bad.is_some() {
                return;
            }
            let m = grid.multi_index(i);
            let edge = (0..nd).any(|a| {
                let ax = grid.axis(a);
                !ax.periodic && (m[a] < 2 || m[a] + 2 >= ax.n)
            });
            if edge && self.eval(grid, x, &mut buf) != 0.0 {
                bad = Some(x.to_vec());
            }
        });
        match bad {
            Some(x) => Err(LabError::Support(format!(
                "test function is nonzero at {x:?}, within two nodes of the edge of the mollified domain"
            ))),
            None => Ok(()),
        }
    }
}
