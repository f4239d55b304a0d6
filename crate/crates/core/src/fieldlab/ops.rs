use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{LabError, Result};
use crate::fieldlab::field::Field;
use crate::fieldlab::grid::GridSpec;
use crate::fieldlab::kernel::MollifierKernel;

/// How the discrete convolution is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionPath {
    /// Direct summation over the kernel support.
    Direct,
    /// FFT-based circular convolution, restricted to the valid window.
    Spectral,
    /// Direct below a work threshold, spectral above it.
    #[default]
    Auto,
}

const AUTO_DIRECT_WORK: usize = 40_000_000;

/// The mollified domain: non-periodic axes shrink by the kernel radius on both ends.
pub fn mollified_grid(grid: &GridSpec, kernel: &MollifierKernel) -> Result<GridSpec> {
    if kernel.dim() != grid.ndim() {
        return Err(LabError::GridMismatch(format!(
            "kernel dimension {} vs grid dimension {}",
            kernel.dim(),
            grid.ndim()
        )));
    }
    let mut lo = Vec::with_capacity(grid.ndim());
    let mut hi = Vec::with_capacity(grid.ndim());
    for (a, (ax, &r)) in grid.axes().iter().zip(kernel.radius()).enumerate() {
        if (ax.spacing - kernel.spacing()[a]).abs() > 1e-12 * ax.spacing {
            return Err(LabError::GridMismatch(format!(
                "kernel was built for a different spacing on axis {a}"
            )));
        }
        if ax.periodic {
            if 2 * r + 1 > ax.n {
                return Err(LabError::Resolution(format!(
                    "kernel support ({} nodes) wraps around periodic axis {a} of {} nodes",
                    2 * r + 1,
                    ax.n
                )));
            }
            lo.push(0);
            hi.push(ax.n);
        } else {
            if 2 * r >= ax.n {
                return Err(LabError::DomainExhausted(format!(
                    "epsilon = {} leaves no interior on axis {a} (extent {})",
                    kernel.epsilon(),
                    ax.extent()
                )));
            }
            lo.push(r);
            hi.push(ax.n - r);
        }
    }
    grid.restrict(&lo, &hi)
}

/// `w^eps = eta^eps * w` on the mollified domain.
pub fn mollify(field: &Field, kernel: &MollifierKernel) -> Result<Field> {
    mollify_with(field, kernel, ConvolutionPath::Auto)
}

pub fn mollify_with(field: &Field, kernel: &MollifierKernel, path: ConvolutionPath) -> Result<Field> {
    let out_grid = mollified_grid(field.grid(), kernel)?;
    let path = match path {
        ConvolutionPath::Auto => {
            if kernel.len().saturating_mul(out_grid.node_count()) <= AUTO_DIRECT_WORK {
                ConvolutionPath::Direct
            } else {
                ConvolutionPath::Spectral
            }
        }
        p => p,
    };
    let layout = Layout::new(field.grid(), &out_grid)?;
    let mut values = Vec::with_capacity(out_grid.node_count() * field.components());
    for c in 0..field.components() {
        let comp = field.component(c);
        let out = match path {
            ConvolutionPath::Spectral => convolve_spectral(comp, &layout, kernel, None),
            _ => convolve_direct(comp, &layout, kernel, |k| kernel.weights()[k]),
        };
        values.extend(out);
    }
    Field::new(out_grid, field.components(), values)
}

/// Convolution with the partial derivative of the kernel along `axis`, i.e.
/// `∂_axis (w^eps)` computed by differentiating the kernel.
pub fn mollify_derivative(field: &Field, kernel: &MollifierKernel, axis: usize) -> Result<Field> {
    let out_grid = mollified_grid(field.grid(), kernel)?;
    let layout = Layout::new(field.grid(), &out_grid)?;
    let dw: Vec<f64> = (0..kernel.len()).map(|k| kernel.weight_derivative(k, axis)).collect();
    let mut values = Vec::with_capacity(out_grid.node_count() * field.components());
    for c in 0..field.components() {
        values.extend(convolve_direct(field.component(c), &layout, kernel, |k| dw[k]));
    }
    Field::new(out_grid, field.components(), values)
}

struct Layout {
    shape: [usize; 3],
    periodic: [bool; 3],
    lo: [usize; 3],
    out_shape: [usize; 3],
    pad: usize,
}

impl Layout {
    fn new(grid: &GridSpec, out: &GridSpec) -> Result<Self> {
        let (lo_v, _) = grid.window_of(out)?;
        let pad = 3 - grid.ndim();
        let mut periodic = [false; 3];
        let mut lo = [0; 3];
        for (a, ax) in grid.axes().iter().enumerate() {
            periodic[pad + a] = ax.periodic;
            lo[pad + a] = lo_v[a];
        }
        Ok(Self { shape: grid.shape3(), periodic, lo, out_shape: out.shape3(), pad })
    }

    fn offset3(&self, kernel: &MollifierKernel, k: usize) -> [isize; 3] {
        let mut z = [0isize; 3];
        for (a, &o) in kernel.offset(k).iter().enumerate() {
            z[self.pad + a] = o;
        }
        z
    }

    fn source(&self, axis: usize, i: usize, z: isize) -> usize {
        let s = (i + self.lo[axis]) as isize - z;
        if self.periodic[axis] {
            s.rem_euclid(self.shape[axis] as isize) as usize
        } else {
            s as usize
        }
    }
}

fn convolve_direct(
    input: &[f64],
    layout: &Layout,
    kernel: &MollifierKernel,
    weight: impl Fn(usize) -> f64 + Sync,
) -> Vec<f64> {
    let [_, n1, n2] = layout.shape;
    let [o0, o1, o2] = layout.out_shape;
    let cv = kernel.cell_volume();
    let mut out = vec![0.0; o0 * o1 * o2];
    out.par_chunks_mut(o1 * o2).enumerate().for_each(|(i0, slab)| {
        let mut idx2 = vec![0usize; o2];
        for k in 0..kernel.len() {
            let w = weight(k) * cv;
            if w == 0.0 {
                continue;
            }
            let z = layout.offset3(kernel, k);
            let s0 = layout.source(0, i0, z[0]);
            for (i2, slot) in idx2.iter_mut().enumerate() {
                *slot = layout.source(2, i2, z[2]);
            }
            for i1 in 0..o1 {
                let s1 = layout.source(1, i1, z[1]);
                let row = &input[(s0 * n1 + s1) * n2..(s0 * n1 + s1 + 1) * n2];
                let dst = &mut slab[i1 * o2..(i1 + 1) * o2];
                for (d, &s2) in dst.iter_mut().zip(&idx2) {
                    *d += w * row[s2];
                }
            }
        }
    });
    out
}

fn fft_axis(buf: &mut [Complex<f64>], shape: [usize; 3], axis: usize, inverse: bool, planner: &mut FftPlanner<f64>) {
    let n = shape[axis];
    if n == 1 {
        return;
    }
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let stride = match axis {
        0 => shape[1] * shape[2],
        1 => shape[2],
        _ => 1,
    };
    let mut line = vec![Complex::new(0.0, 0.0); n];
    let total = shape[0] * shape[1] * shape[2];
    for base in 0..total {
        // `base` enumerates line starts: index with coordinate 0 along `axis`.
        let coord = (base / stride) % n;
        if coord != 0 {
            continue;
        }
        for (j, l) in line.iter_mut().enumerate() {
            *l = buf[base + j * stride];
        }
        fft.process(&mut line);
        for (j, l) in line.iter().enumerate() {
            buf[base + j * stride] = *l;
        }
    }
}

fn fft3(buf: &mut [Complex<f64>], shape: [usize; 3], inverse: bool) {
    let mut planner = FftPlanner::new();
    for axis in 0..3 {
        fft_axis(buf, shape, axis, inverse, &mut planner);
    }
}

/// Circular convolution over the full input box. On non-periodic axes every valid
/// output only reads in-range inputs, so the wrap-around never reaches the window.
fn convolve_spectral(
    input: &[f64],
    layout: &Layout,
    kernel: &MollifierKernel,
    weights: Option<&[f64]>,
) -> Vec<f64> {
    let shape = layout.shape;
    let total = shape[0] * shape[1] * shape[2];
    let mut a: Vec<Complex<f64>> = input.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut b = vec![Complex::new(0.0, 0.0); total];
    let cv = kernel.cell_volume();
    for k in 0..kernel.len() {
        let z = layout.offset3(kernel, k);
        let mut idx = 0usize;
        for ax in 0..3 {
            let p = z[ax].rem_euclid(shape[ax] as isize) as usize;
            idx = idx * shape[ax] + p;
        }
        let w = weights.map_or(kernel.weights()[k], |w| w[k]);
        b[idx].re += w * cv;
    }
    fft3(&mut a, shape, false);
    fft3(&mut b, shape, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    fft3(&mut a, shape, true);
    let scale = 1.0 / total as f64;
    let [o0, o1, o2] = layout.out_shape;
    let mut out = Vec::with_capacity(o0 * o1 * o2);
    for i0 in 0..o0 {
        for i1 in 0..o1 {
            for i2 in 0..o2 {
                let s = ((i0 + layout.lo[0]) * shape[1] + i1 + layout.lo[1]) * shape[2] + i2 + layout.lo[2];
                out.push(a[s].re * scale);
            }
        }
    }
    out
}

/// `w(· + xi)` on the overlap `Ω ∩ (Ω − xi)`; `xi` is given in lattice steps per axis.
pub fn shift(field: &Field, xi: &[isize]) -> Result<Field> {
    let grid = field.grid();
    if xi.len() != grid.ndim() {
        return Err(LabError::Precondition(format!(
            "shift has {} entries, grid has {} axes",
            xi.len(),
            grid.ndim()
        )));
    }
    let mut lo = Vec::with_capacity(xi.len());
    let mut hi = Vec::with_capacity(xi.len());
    for (a, (ax, &s)) in grid.axes().iter().zip(xi).enumerate() {
        if ax.periodic {
            lo.push(0);
            hi.push(ax.n);
        } else {
            let m = s.unsigned_abs();
            if m >= ax.n {
                return Err(LabError::EmptyOverlap(format!(
                    "shift of {s} steps on axis {a} with {} nodes",
                    ax.n
                )));
            }
            lo.push(if s < 0 { m } else { 0 });
            hi.push(if s > 0 { ax.n - m } else { ax.n });
        }
    }
    let out_grid = grid.restrict(&lo, &hi)?;
    let n = grid.node_count();
    let n_out = out_grid.node_count();
    let mut values = vec![0.0; n_out * field.components()];
    let mut src = vec![0usize; xi.len()];
    for j in 0..n_out {
        let m = out_grid.multi_index(j);
        for a in 0..m.len() {
            let ax = grid.axis(a);
            let s = (m[a] + lo[a]) as isize + xi[a];
            src[a] = if ax.periodic { s.rem_euclid(ax.n as isize) as usize } else { s as usize };
        }
        let i = grid.linear_index(&src);
        for c in 0..field.components() {
            values[c * n_out + j] = field.values()[c * n + i];
        }
    }
    Field::new(out_grid, field.components(), values)
}

/// `w(· + xi) − w` on the overlap domain.
pub fn shift_difference(field: &Field, xi: &[isize]) -> Result<Field> {
    let shifted = shift(field, xi)?;
    let base = field.restrict_to(shifted.grid())?;
    shifted.zip_with(&base, |a, b| a - b)
}

/// Result of a discrete L^p norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormValue {
    pub value: f64,
    /// Set when the mask selected no node; `value` is then 0.
    pub empty_mask: bool,
}

/// Midpoint-rule `(∫ |w|^p)^{1/p}` over the masked nodes; `p = ∞` gives the max of `|w|`.
/// Vector fields use the Euclidean magnitude per node.
pub fn lp_norm(field: &Field, p: f64, mask: Option<&[bool]>) -> Result<NormValue> {
    let mag = if field.components() == 1 {
        field.values().to_vec()
    } else {
        field.magnitude()
    };
    lp_norm_values(&mag, field.grid().cell_volume(), p, mask)
}

/// [`lp_norm`] on raw node values.
pub fn lp_norm_values(values: &[f64], cell_volume: f64, p: f64, mask: Option<&[bool]>) -> Result<NormValue> {
    if !(p >= 1.0) {
        return Err(LabError::Precondition(format!("p must be >= 1, got {p}")));
    }
    if let Some(m) = mask {
        if m.len() != values.len() {
            return Err(LabError::GridMismatch("mask length differs from the field".into()));
        }
    }
    let selected = |i: usize| mask.is_none_or(|m| m[i]);
    let mut any = false;
    let value = if p.is_infinite() {
        let mut best = 0.0f64;
        for (i, v) in values.iter().enumerate() {
            if selected(i) {
                any = true;
                best = best.max(v.abs());
            }
        }
        best
    } else {
        let mut acc = 0.0;
        for (i, v) in values.iter().enumerate() {
            if selected(i) {
                any = true;
                acc += v.abs().powf(p);
            }
        }
        (acc * cell_volume).powf(1.0 / p)
    };
    Ok(NormValue { value: if any { value } else { 0.0 }, empty_mask: !any })
}

/// Midpoint-rule integral of node values.
pub fn integrate(values: &[f64], cell_volume: f64) -> f64 {
    values.iter().sum::<f64>() * cell_volume
}

/// Fourth-order finite-difference partial derivative of one component along `axis`.
///
/// Periodic axes wrap. Non-periodic axes fall back to second-order stencils on the
/// two outermost nodes at each end.
pub fn partial(field: &Field, component: usize, axis: usize) -> Result<Vec<f64>> {
    partial_values(field.component(component), field.grid(), axis)
}

pub fn partial_values(values: &[f64], grid: &GridSpec, axis: usize) -> Result<Vec<f64>> {
    let ax = *grid.axis(axis);
    if ax.n < 5 {
        return Err(LabError::Resolution(format!(
            "axis {axis} has {} nodes, finite differences need 5",
            ax.n
        )));
    }
    let stride = grid.strides()[axis];
    let n = ax.n;
    let h = ax.spacing;
    let mut out = vec![0.0; values.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = (idx / stride) % n;
        let base = idx - i * stride;
        let at = |j: isize| -> f64 {
            let jj = if ax.periodic { j.rem_euclid(n as isize) as usize } else { j as usize };
            values[base + jj * stride]
        };
        let ii = i as isize;
        *o = if ax.periodic || (i >= 2 && i + 2 < n) {
            (-at(ii + 2) + 8.0 * at(ii + 1) - 8.0 * at(ii - 1) + at(ii - 2)) / (12.0 * h)
        } else if i == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
        } else if i + 1 == n {
            (3.0 * at(ii) - 4.0 * at(ii - 1) + at(ii - 2)) / (2.0 * h)
        } else {
            (at(ii + 1) - at(ii - 1)) / (2.0 * h)
        };
    }
    Ok(out)
}

/// Full gradient (all axes, time first) of a scalar field.
pub fn gradient(field: &Field) -> Result<Field> {
    if field.components() != 1 {
        return Err(LabError::Precondition("gradient expects a scalar field".into()));
    }
    let comps = (0..field.grid().ndim())
        .map(|a| partial(field, 0, a))
        .collect::<Result<Vec<_>>>()?;
    Field::from_components(field.grid(), comps)
}

/// Spatial divergence of a vector field with one component per spatial axis.
pub fn divergence(field: &Field) -> Result<Vec<f64>> {
    let grid = field.grid();
    let d = grid.spatial_dim();
    if field.components() != d {
        return Err(LabError::Precondition(format!(
            "divergence expects {d} components, got {}",
            field.components()
        )));
    }
    let first = grid.first_space_axis();
    let mut out = vec![0.0; field.len()];
    for c in 0..d {
        for (o, v) in out.iter_mut().zip(partial(field, c, first + c)?) {
            *o += v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::fieldlab::kernel::make_mollifier;

    fn sine_grid() -> GridSpec {
        GridSpec::space_time(&[64, 128], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn constant_is_preserved() {
        let g = sine_grid();
        let k = make_mollifier(0.1, 2, &g).unwrap();
        let f = Field::constant(&g, 1, 3.5).unwrap();
        let m = mollify(&f, &k).unwrap();
        assert!(m.values().iter().all(|v| (v - 3.5).abs() < 1e-13));
        assert!(m.grid().axis(0).n < 64);
    }

    /// Naive double-loop quadrature over physical offsets, independent of the lattice bookkeeping.
    #[test]
    fn matches_naive_quadrature() {
        let g = sine_grid();
        let eps = 0.05;
        let k = make_mollifier(eps, 2, &g).unwrap();
        let f = Field::scalar_from_fn(&g, |x| (2.0 * PI * x[1]).sin()).unwrap();
        let m = mollify(&f, &k).unwrap();
        let (dt, dx) = (g.axis(0).spacing, g.axis(1).spacing);
        let (ra, rb) = ((eps / dt).floor() as isize, (eps / dx).floor() as isize);
        let peak = k.peak();
        let theta = k.shape_parameter();
        let profile = k.profile();
        let mg = m.grid().clone();
        for j in 0..mg.node_count() {
            let x = mg.coords(j);
            let mut acc = 0.0;
            for a in -ra..=ra {
                for b in -rb..=rb {
                    let rad = ((a as f64 * dt).powi(2) + (b as f64 * dx).powi(2)).sqrt() / eps;
                    if rad < 1.0 {
                        acc += peak * profile.value(theta, rad) * dt * dx * (2.0 * PI * (x[1] - b as f64 * dx)).sin();
                    }
                }
            }
            assert!((acc - m.values()[j]).abs() < 1e-12, "node {j}: {acc} vs {}", m.values()[j]);
        }
    }

    #[test]
    fn spectral_matches_direct() {
        let g = GridSpec::space_time(&[40, 32, 24], &[1.0, 1.0, 0.75]).unwrap();
        let k = make_mollifier(0.15, 3, &g).unwrap();
        let f = Field::scalar_from_fn(&g, |x| (7.0 * x[0]).cos() + (2.0 * PI * x[1]).sin() * x[2].exp()).unwrap();
        let d = mollify_with(&f, &k, ConvolutionPath::Direct).unwrap();
        let s = mollify_with(&f, &k, ConvolutionPath::Spectral).unwrap();
        for (a, b) in d.values().iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn domain_exhausted() {
        let g = GridSpec::space_time(&[16, 64], &[0.2, 1.0]).unwrap();
        let k = make_mollifier(0.1, 2, &g).unwrap();
        let f = Field::constant(&g, 1, 1.0).unwrap();
        assert!(matches!(mollify(&f, &k), Err(LabError::DomainExhausted(_))));
    }

    #[test]
    fn shift_cases() {
        let g = sine_grid();
        let f = Field::scalar_from_fn(&g, |x| x[0] + (2.0 * PI * x[1]).sin()).unwrap();
        assert_eq!(shift(&f, &[0, 0]).unwrap(), f);
        let full = shift(&f, &[0, 128]).unwrap();
        assert_eq!(full.values(), f.values());
        assert!(matches!(shift(&f, &[64, 0]), Err(LabError::EmptyOverlap(_))));
        let s = shift(&f, &[3, 5]).unwrap();
        assert_eq!(s.grid().axis(0).n, 61);
        let x = s.grid().coords(10);
        let expect = (x[0] + 3.0 / 64.0) + (2.0 * PI * (x[1] + 5.0 / 128.0)).sin();
        assert!((s.values()[10] - expect).abs() < 1e-12);
    }

    #[test]
    fn norms() {
        let g = GridSpec::space_time(&[8, 64], &[1.0, 1.0]).unwrap();
        let c = Field::constant(&g, 1, 2.0).unwrap();
        assert!((lp_norm(&c, 3.0, None).unwrap().value - 2.0).abs() < 1e-14);
        let g = GridSpec::space_time(&[8, 4096], &[1.0, 1.0]).unwrap();
        let s = Field::scalar_from_fn(&g, |x| (2.0 * PI * x[1]).sin()).unwrap();
        assert!((lp_norm(&s, 2.0, None).unwrap().value - 0.5f64.sqrt()).abs() < 1e-6);
        assert!((lp_norm(&s, f64::INFINITY, None).unwrap().value - 1.0).abs() < 1e-6);
        let mask = vec![false; g.node_count()];
        let nv = lp_norm(&s, 2.0, Some(&mask)).unwrap();
        assert!(nv.empty_mask && nv.value == 0.0);
        assert!(lp_norm(&s, 0.5, None).is_err());
    }

    #[test]
    fn fourth_order_derivative() {
        let err = |n: usize| {
            let g = GridSpec::space_time(&[n, n], &[1.0, 1.0]).unwrap();
            let f = Field::scalar_from_fn(&g, |x| (2.0 * PI * x[1]).sin() * (x[0] * 3.0).cos()).unwrap();
            let d = partial(&f, 0, 1).unwrap();
            let mut e = 0.0f64;
            g.for_each_node(|i, x| {
                e = e.max((d[i] - 2.0 * PI * (2.0 * PI * x[1]).cos() * (x[0] * 3.0).cos()).abs());
            });
            e
        };
        let order = (err(32) / err(64)).log2();
        assert!(order > 3.8, "order {order}");
    }

    #[test]
    fn kernel_derivative_path_agrees() {
        let g = GridSpec::space_time(&[64, 128], &[1.0, 1.0]).unwrap();
        let k = make_mollifier(0.1, 2, &g).unwrap();
        let f = Field::scalar_from_fn(&g, |x| (2.0 * PI * x[1]).sin() + x[0] * x[0]).unwrap();
        let m = mollify(&f, &k).unwrap();
        let fd = partial(&m, 0, 1).unwrap();
        let kd = mollify_derivative(&f, &k, 1).unwrap();
        let scale = 2.0 * PI;
        let worst = fd.iter().zip(kd.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-2 * scale, "worst {worst}");
    }
}
