use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Upper bound on the number of nodes of a single grid.
pub const MAX_NODES: usize = 1 << 26;

/// Minimum number of points along any axis.
pub const MIN_POINTS: usize = 8;

/// One uniform axis. Node `i` sits at the cell centre `origin + (i + 0.5) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub n: usize,
    pub spacing: f64,
    pub origin: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn coord(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.spacing
    }

    pub fn extent(&self) -> f64 {
        self.n as f64 * self.spacing
    }
}

/// Uniform space-time grid.
///
/// Axis 0 is time when `has_time` is set; the remaining axes are space. Spatial axes
/// are periodic unless built explicitly as bounded intervals. Values are stored
/// row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    spatial_dim: usize,
    has_time: bool,
    axes: Vec<Axis>,
}

impl GridSpec {
    /// Periodic space-time grid. `points[0]`/`extents[0]` describe time (count, horizon T),
    /// the rest the spatial axes (count, period).
    pub fn space_time(points: &[usize], extents: &[f64]) -> Result<Self> {
        if points.len() != extents.len() || !(2..=3).contains(&points.len()) {
            return Err(LabError::InvalidGrid(format!(
                "expected 1 time axis and 1-2 spatial axes, got {} points / {} extents",
                points.len(),
                extents.len()
            )));
        }
        let axes = points
            .iter()
            .zip(extents)
            .enumerate()
            .map(|(a, (&n, &len))| Axis {
                n,
                spacing: len / n as f64,
                origin: 0.0,
                periodic: a != 0,
            })
            .collect();
        Self::from_axes(true, axes)
    }

    /// Periodic grid without a time axis (fields on the torus only).
    pub fn stationary(points: &[usize], periods: &[f64]) -> Result<Self> {
        if points.len() != periods.len() || !(1..=2).contains(&points.len()) {
            return Err(LabError::InvalidGrid(
                "stationary grids need 1-2 spatial axes".into(),
            ));
        }
        let axes = points
            .iter()
            .zip(periods)
            .map(|(&n, &len)| Axis {
                n,
                spacing: len / n as f64,
                origin: 0.0,
                periodic: true,
            })
            .collect();
        Self::from_axes(false, axes)
    }

    /// Space-time grid over the bounded interval `[0, length]` (non-periodic space).
    pub fn interval(nt: usize, horizon: f64, nx: usize, length: f64) -> Result<Self> {
        Self::from_axes(
            true,
            vec![
                Axis { n: nt, spacing: horizon / nt as f64, origin: 0.0, periodic: false },
                Axis { n: nx, spacing: length / nx as f64, origin: 0.0, periodic: false },
            ],
        )
    }

    pub fn from_axes(has_time: bool, axes: Vec<Axis>) -> Result<Self> {
        let spatial_dim = axes.len() - usize::from(has_time);
        if !(1..=2).contains(&spatial_dim) {
            return Err(LabError::InvalidGrid(format!(
                "spatial dimension must be 1 or 2, got {spatial_dim}"
            )));
        }
        if has_time && axes[0].periodic {
            return Err(LabError::InvalidGrid("time axis cannot be periodic".into()));
        }
        let mut total: usize = 1;
        for (a, ax) in axes.iter().enumerate() {
            if ax.n < MIN_POINTS {
                return Err(LabError::InvalidGrid(format!(
                    "axis {a} has {} points, need at least {MIN_POINTS}",
                    ax.n
                )));
            }
            if !(ax.spacing.is_finite() && ax.spacing > 0.0) || !ax.origin.is_finite() {
                return Err(LabError::InvalidGrid(format!("axis {a} has a non-positive extent")));
            }
            total = total.saturating_mul(ax.n);
        }
        if total > MAX_NODES {
            return Err(LabError::InvalidGrid(format!(
                "{total} nodes exceeds the memory cap of {MAX_NODES}"
            )));
        }
        Ok(Self { spatial_dim, has_time, axes })
    }

    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    pub fn has_time(&self) -> bool {
        self.has_time
    }

    /// Number of axes, i.e. the dimension N of the mollifier.
    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }

    /// Index of the first spatial axis.
    pub fn first_space_axis(&self) -> usize {
        usize::from(self.has_time)
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    pub fn measure(&self) -> f64 {
        self.axes.iter().map(Axis::extent).product()
    }

    /// Shape padded at the front to three axes.
    pub fn shape3(&self) -> [usize; 3] {
        let mut s = [1; 3];
        let off = 3 - self.axes.len();
        for (a, ax) in self.axes.iter().enumerate() {
            s[off + a] = ax.n;
        }
        s
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut st = vec![1; self.axes.len()];
        for a in (0..self.axes.len().saturating_sub(1)).rev() {
            st[a] = st[a + 1] * self.axes[a + 1].n;
        }
        st
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for a in (0..self.axes.len()).rev() {
            out[a] = idx % self.axes[a].n;
            idx /= self.axes[a].n;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, ax)| acc * ax.n + i)
    }

    /// Physical coordinates of a node (time first when present).
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .zip(&self.axes)
            .map(|(&i, ax)| ax.coord(i))
            .collect()
    }

    /// Calls `f(linear_index, coords)` for every node in storage order.
    pub fn for_each_node(&self, mut f: impl FnMut(usize, &[f64])) {
        let n = self.node_count();
        let mut multi = vec![0usize; self.axes.len()];
        let mut x: Vec<f64> = self.axes.iter().map(|a| a.coord(0)).collect();
        for idx in 0..n {
            f(idx, &x);
            for a in (0..self.axes.len()).rev() {
                multi[a] += 1;
                if multi[a] < self.axes[a].n {
                    x[a] = self.axes[a].coord(multi[a]);
                    break;
                }
                multi[a] = 0;
                x[a] = self.axes[a].coord(0);
            }
        }
    }

    /// Sub-grid keeping indices `lo[a]..hi[a]` on every axis. Periodic axes must be kept whole.
    pub fn restrict(&self, lo: &[usize], hi: &[usize]) -> Result<Self> {
        let mut axes = self.axes.clone();
        for (a, ax) in axes.iter_mut().enumerate() {
            if hi[a] <= lo[a] || hi[a] > ax.n {
                return Err(LabError::DomainExhausted(format!(
                    "axis {a} window {}..{} is empty",
                    lo[a], hi[a]
                )));
            }
            if ax.periodic && (lo[a] != 0 || hi[a] != ax.n) {
                return Err(LabError::InvalidGrid(format!("periodic axis {a} cannot be cut")));
            }
            ax.origin += lo[a] as f64 * ax.spacing;
            ax.n = hi[a] - lo[a];
        }
        // Shrunk grids may legitimately fall below MIN_POINTS.
        Ok(Self { spatial_dim: self.spatial_dim, has_time: self.has_time, axes })
    }

    /// Offsets `(lo, hi)` of `sub` inside `self` when `sub` is an aligned window of it.
    pub fn window_of(&self, sub: &GridSpec) -> Result<(Vec<usize>, Vec<usize>)> {
        if sub.axes.len() != self.axes.len() || sub.has_time != self.has_time {
            return Err(LabError::GridMismatch("axis layout differs".into()));
        }
        let mut lo = Vec::with_capacity(self.axes.len());
        let mut hi = Vec::with_capacity(self.axes.len());
        for (a, (big, small)) in self.axes.iter().zip(&sub.axes).enumerate() {
            let rel = (big.spacing - small.spacing).abs() / big.spacing;
            let off = (small.origin - big.origin) / big.spacing;
            let k = off.round();
            if rel > 1e-12 || (off - k).abs() > 1e-6 || k < 0.0 || big.periodic != small.periodic {
                return Err(LabError::GridMismatch(format!("axis {a} is not an aligned window")));
            }
            let k = k as usize;
            if k + small.n > big.n {
                return Err(LabError::GridMismatch(format!("axis {a} window exceeds the grid")));
            }
            lo.push(k);
            hi.push(k + small.n);
        }
        Ok((lo, hi))
    }

    /// True when both grids have the same layout, spacing and origin.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.has_time == other.has_time
            && self.axes.len() == other.axes.len()
            && self.axes.iter().zip(&other.axes).all(|(a, b)| {
                a.n == b.n
                    && a.periodic == b.periodic
                    && ((a.spacing - b.spacing).abs() <= 1e-12 * a.spacing)
                    && ((a.origin - b.origin).abs() <= 1e-9 * a.spacing)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_axes() {
        assert!(GridSpec::space_time(&[4, 64], &[1.0, 1.0]).is_err());
        assert!(GridSpec::space_time(&[16, 64], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn memory_cap() {
        assert!(GridSpec::space_time(&[1 << 14, 1 << 14], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = GridSpec::space_time(&[9, 10, 11], &[1.0, 1.0, 2.0]).unwrap();
        for idx in [0, 5, 99, 989] {
            assert_eq!(g.linear_index(&g.multi_index(idx)), idx);
        }
        let mut count = 0;
        g.for_each_node(|idx, x| {
            assert_eq!(x, g.coords(idx).as_slice());
            count += 1;
        });
        assert_eq!(count, g.node_count());
    }

    #[test]
    fn restrict_and_window() {
        let g = GridSpec::space_time(&[32, 16], &[1.0, 1.0]).unwrap();
        let sub = g.restrict(&[3, 0], &[29, 16]).unwrap();
        assert_eq!(g.window_of(&sub).unwrap(), (vec![3, 0], vec![29, 16]));
        assert!(g.restrict(&[0, 1], &[32, 16]).is_err());
    }
}
