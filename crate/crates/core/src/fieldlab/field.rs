use crate::error::{LabError, Result};
use crate::fieldlab::grid::GridSpec;

/// Sampled real or vector-valued function on a [`GridSpec`].
///
/// Values are component-major: component `c` occupies
/// `values[c * n .. (c + 1) * n]` with `n = grid.node_count()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(LabError::InvalidField("at least one component required".into()));
        }
        let expected = grid.node_count() * components;
        if values.len() != expected {
            return Err(LabError::InvalidField(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::InvalidField(format!("non-finite value at {i}")));
        }
        Ok(Self { grid, components, values })
    }

    /// Scalar field from a closure of the node coordinates (time first).
    pub fn scalar_from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.node_count()];
        grid.for_each_node(|i, x| values[i] = f(x));
        Self::new(grid.clone(), 1, values)
    }

    /// Vector field with `components` entries from a closure filling a slice.
    pub fn vector_from_fn(
        grid: &GridSpec,
        components: usize,
        f: impl Fn(&[f64], &mut [f64]),
    ) -> Result<Self> {
        let n = grid.node_count();
        let mut values = vec![0.0; n * components];
        let mut buf = vec![0.0; components];
        grid.for_each_node(|i, x| {
            f(x, &mut buf);
            for (c, v) in buf.iter().enumerate() {
                values[c * n + i] = *v;
            }
        });
        Self::new(grid.clone(), components, values)
    }

    pub fn constant(grid: &GridSpec, components: usize, value: f64) -> Result<Self> {
        Self::new(grid.clone(), components, vec![value; grid.node_count() * components])
    }

    /// Builds a field from per-component slices, all on `grid`.
    pub fn from_components(grid: &GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        let k = comps.len();
        let values = comps.into_iter().flatten().collect();
        Self::new(grid.clone(), k, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.grid.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.node_count();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_field(&self, c: usize) -> Field {
        Field {
            grid: self.grid.clone(),
            components: 1,
            values: self.component(c).to_vec(),
        }
    }

    /// Node-wise map producing a scalar field of the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(
            self.grid.clone(),
            self.components,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Node-wise combination of two fields on the same grid with equal component counts.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_compatible(other)?;
        Field::new(
            self.grid.clone(),
            self.components,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(LabError::GridMismatch("fields live on different grids".into()));
        }
        if self.components != other.components {
            return Err(LabError::GridMismatch(format!(
                "component counts differ: {} vs {}",
                self.components, other.components
            )));
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            components: self.components,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Restriction to an aligned sub-grid of this field's grid.
    pub fn restrict_to(&self, sub: &GridSpec) -> Result<Field> {
        if self.grid.same_as(sub) {
            return Ok(self.clone());
        }
        let (lo, _) = self.grid.window_of(sub)?;
        let n_sub = sub.node_count();
        let n = self.grid.node_count();
        let mut values = vec![0.0; n_sub * self.components];
        let mut big = vec![0usize; lo.len()];
        for j in 0..n_sub {
            let m = sub.multi_index(j);
            for a in 0..m.len() {
                big[a] = m[a] + lo[a];
            }
            let i = self.grid.linear_index(&big);
            for c in 0..self.components {
                values[c * n_sub + j] = self.values[c * n + i];
            }
        }
        Field::new(sub.clone(), self.components, values)
    }

    /// Ensures every sample is non-negative, as densities must be.
    pub fn check_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0) {
            Some(node) => Err(LabError::NegativeDensity { node, value: self.values[node] }),
            None => Ok(()),
        }
    }

    /// Euclidean magnitude per node.
    pub fn magnitude(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                (0..self.components)
                    .map(|c| self.values[c * n + i].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_bad_length() {
        let g = GridSpec::space_time(&[8, 8], &[1.0, 1.0]).unwrap();
        assert!(Field::new(g.clone(), 1, vec![0.0; 63]).is_err());
        let mut v = vec![0.0; 64];
        v[3] = f64::NAN;
        assert!(Field::new(g, 1, v).is_err());
    }

    #[test]
    fn restrict_picks_window() {
        let g = GridSpec::space_time(&[16, 8], &[1.0, 1.0]).unwrap();
        let f = Field::scalar_from_fn(&g, |x| x[0] * 10.0 + x[1]).unwrap();
        let sub = g.restrict(&[2, 0], &[10, 8]).unwrap();
        let r = f.restrict_to(&sub).unwrap();
        let direct = Field::scalar_from_fn(&sub, |x| x[0] * 10.0 + x[1]).unwrap();
        for (a, b) in r.values().iter().zip(direct.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
