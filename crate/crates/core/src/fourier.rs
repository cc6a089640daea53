//! Discrete Fourier transforms with the toolkit's fixed convention.
//!
//! Forward: `F(f)(ξ_k) = Δx Σ_j f(x_j) e^{-i x_j ξ_k}` with `x_j = lo + j Δx`
//! and `ξ_k = 2πk / (nΔx)`. Spectra are stored in FFT order.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Axis, GridBox};

pub type C64 = Complex64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized in-place FFT.
pub fn fft_in_place(data: &mut [C64], inverse: bool) {
    if data.len() > 1 {
        plan(data.len(), inverse).process(data);
    }
}

/// Forward transform of samples on `axis`.
pub fn forward_1d(samples: &[C64], axis: &Axis) -> Vec<C64> {
    let mut buf = samples.to_vec();
    fft_in_place(&mut buf, false);
    let dx = axis.dx();
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= C64::from_polar(dx, -axis.lo * axis.freq(k));
    }
    buf
}

/// Inverse of [`forward_1d`]: `f(x_j) = (1/(nΔx)) Σ_k F_k e^{i x_j ξ_k}`.
pub fn inverse_1d(spectrum: &[C64], axis: &Axis) -> Vec<C64> {
    let mut buf: Vec<C64> = spectrum
        .iter()
        .enumerate()
        .map(|(k, v)| v * C64::from_polar(1.0, axis.lo * axis.freq(k)))
        .collect();
    fft_in_place(&mut buf, true);
    let scale = 1.0 / (axis.n as f64 * axis.dx());
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Forward transform of row-major samples on a one- or two-dimensional grid.
pub fn forward(samples: &[C64], grid: &GridBox) -> Vec<C64> {
    if grid.dim() == 1 {
        return forward_1d(samples, &grid.axes[0]);
    }
    let (a0, a1) = (&grid.axes[0], &grid.axes[1]);
    let (n0, n1) = (a0.n, a1.n);
    let mut buf = samples.to_vec();
    let row_plan = plan(n1, false);
    for row in buf.chunks_mut(n1) {
        row_plan.process(row);
    }
    let col_plan = plan(n0, false);
    let mut col = vec![C64::new(0.0, 0.0); n0];
    for j in 0..n1 {
        for i in 0..n0 {
            col[i] = buf[i * n1 + j];
        }
        col_plan.process(&mut col);
        for i in 0..n0 {
            buf[i * n1 + j] = col[i];
        }
    }
    let cell = a0.dx() * a1.dx();
    for i in 0..n0 {
        let p0 = -a0.lo * a0.freq(i);
        for j in 0..n1 {
            buf[i * n1 + j] *= C64::from_polar(cell, p0 - a1.lo * a1.freq(j));
        }
    }
    buf
}

/// Frequency vector `(ξ_1, ξ_2)` of flat spectrum index `idx`.
pub fn freq_of(grid: &GridBox, idx: usize) -> [f64; 2] {
    if grid.dim() == 1 {
        [grid.axes[0].freq(idx), 0.0]
    } else {
        let n1 = grid.axes[1].n;
        [grid.axes[0].freq(idx / n1), grid.axes[1].freq(idx % n1)]
    }
}

/// Linear (non-circular) convolution of two sequences via a zero-padded FFT.
/// The output has length `a.len() + b.len() - 1`.
pub fn convolve_linear(a: &[C64], b: &[C64]) -> Vec<C64> {
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    let mut fa = vec![C64::new(0.0, 0.0); size];
    let mut fb = vec![C64::new(0.0, 0.0); size];
    fa[..a.len()].copy_from_slice(a);
    fb[..b.len()].copy_from_slice(b);
    fft_in_place(&mut fa, false);
    fft_in_place(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft_in_place(&mut fa, true);
    let scale = 1.0 / size as f64;
    fa.truncate(out_len);
    fa.iter_mut().for_each(|v| *v *= scale);
    fa
}

/// Applies a Fourier multiplier `m(ξ)` to samples on `axis` after zero padding
/// to `2n`, returning the first `n` samples. With `m = φ̂(εξ)` this is the
/// convolution with `φ_ε`.
pub fn apply_multiplier(samples: &[C64], axis: &Axis, multiplier: impl Fn(f64) -> C64) -> Vec<C64> {
    let n = axis.n;
    let padded = Axis { lo: axis.lo, hi: axis.lo + 2.0 * (axis.hi - axis.lo), n: 2 * n };
    let mut buf = vec![C64::new(0.0, 0.0); 2 * n];
    buf[..n].copy_from_slice(samples);
    fft_in_place(&mut buf, false);
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= multiplier(padded.freq(k));
    }
    fft_in_place(&mut buf, true);
    let scale = 1.0 / (2 * n) as f64;
    buf.truncate(n);
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_matches_direct_sum() {
        let axis = Axis::new(-1.0, 1.0, 16).unwrap();
        let f: Vec<C64> = (0..16).map(|j| C64::new((j as f64 * 0.3).sin(), 0.1 * j as f64)).collect();
        let spec = forward_1d(&f, &axis);
        for k in 0..16 {
            let xi = axis.freq(k);
            let direct: C64 = (0..16)
                .map(|j| f[j] * C64::from_polar(axis.dx(), -axis.coord(j) * xi))
                .sum();
            assert!((spec[k] - direct).norm() < 1e-12);
        }
        let back = inverse_1d(&spec, &axis);
        for (a, b) in back.iter().zip(&f) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_separable() {
        let grid = GridBox::square(-1.0, 1.0, 8).unwrap();
        let a = grid.axes[0];
        let u: Vec<C64> = (0..8).map(|j| C64::new(1.0 + a.coord(j), 0.0)).collect();
        let v: Vec<C64> = (0..8).map(|j| C64::new((a.coord(j)).cos(), 0.0)).collect();
        let f: Vec<C64> = (0..64).map(|i| u[i / 8] * v[i % 8]).collect();
        let fu = forward_1d(&u, &a);
        let fv = forward_1d(&v, &a);
        let f2 = forward(&f, &grid);
        for i in 0..64 {
            assert!((f2[i] - fu[i / 8] * fv[i % 8]).norm() < 1e-12);
        }
    }

    #[test]
    fn linear_convolution_is_not_circular() {
        let a = vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0)];
        let b = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let c = convolve_linear(&a, &b);
        let expect = [0.0, 1.0, 2.0, 3.0];
        for (x, e) in c.iter().zip(expect) {
            assert!((x.re - e).abs() < 1e-12 && x.im.abs() < 1e-12);
        }
    }

    #[test]
    fn unit_multiplier_is_identity() {
        let axis = Axis::new(0.0, 1.0, 32).unwrap();
        let f: Vec<C64> = (0..32).map(|j| C64::new(j as f64, -(j as f64))).collect();
        let g = apply_multiplier(&f, &axis, |_| C64::new(1.0, 0.0));
        for (a, b) in f.iter().zip(&g) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
