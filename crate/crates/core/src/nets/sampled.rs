//! Nets given by per-ε sample arrays, and finite-difference stencils.

use crate::error::{Error, Result};
use crate::fourier::C64;
use crate::grid::{GridBox, MultiIndex, Region};
use crate::taylor::{factorial, Jet};

/// Highest per-axis finite-difference order.
pub const FD_MAX_ORDER: usize = 4;

/// Fourth-order centered stencil for derivative order `d`: offsets start at `-(len/2)`.
fn stencil(d: usize) -> (&'static [f64], f64) {
    match d {
        0 => (&[1.0], 1.0),
        1 => (&[1.0, -8.0, 0.0, 8.0, -1.0], 12.0),
        2 => (&[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
        3 => (&[1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0], 8.0),
        4 => (&[-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0], 6.0),
        _ => unreachable!("stencil order checked by caller"),
    }
}

/// Finite-difference approximation of `∂^α f(x)` with per-axis steps.
pub fn fd_derivative(
    eval: &dyn Fn([f64; 2]) -> Result<C64>,
    x: [f64; 2],
    alpha: MultiIndex,
    step: [f64; 2],
) -> Result<C64> {
    let [a, b] = alpha.0;
    if a > FD_MAX_ORDER || b > FD_MAX_ORDER {
        return Err(Error::DerivativeUnavailable { order: alpha.order(), cap: FD_MAX_ORDER });
    }
    let (sa, da) = stencil(a);
    let (sb, db) = stencil(b);
    let ha = sa.len() as i64 / 2;
    let hb = sb.len() as i64 / 2;
    let mut acc = C64::new(0.0, 0.0);
    for (i, ca) in sa.iter().enumerate() {
        if *ca == 0.0 {
            continue;
        }
        for (j, cb) in sb.iter().enumerate() {
            if *cb == 0.0 {
                continue;
            }
            let p = [x[0] + (i as i64 - ha) as f64 * step[0], x[1] + (j as i64 - hb) as f64 * step[1]];
            acc += eval(p)? * (ca * cb);
        }
    }
    Ok(acc / (da * step[0].powi(a as i32) * db * step[1].powi(b as i32)))
}

/// Jet of order `order` built from finite differences.
pub fn fd_jet(eval: &dyn Fn([f64; 2]) -> Result<C64>, x: [f64; 2], order: [usize; 2], step: [f64; 2]) -> Result<Jet> {
    let mut coeffs = Vec::with_capacity((order[0] + 1) * (order[1] + 1));
    for i in 0..=order[0] {
        for j in 0..=order[1] {
            let d = fd_derivative(eval, x, MultiIndex([i, j]), step)?;
            coeffs.push(d / (factorial(i) * factorial(j)));
        }
    }
    Ok(Jet::from_coeffs(order, coeffs))
}

/// Per-ε complex samples on a grid, zero outside the grid box.
#[derive(Clone, Debug)]
pub struct SampledNet {
    pub grid: GridBox,
    pub eps: Vec<f64>,
    pub data: Vec<Vec<C64>>,
}

impl SampledNet {
    pub fn new(grid: GridBox, eps: Vec<f64>, data: Vec<Vec<C64>>) -> Result<Self> {
        if eps.len() != data.len() {
            return Err(Error::Format(format!("{} eps values but {} sample arrays", eps.len(), data.len())));
        }
        if data.iter().any(|d| d.len() != grid.len()) {
            return Err(Error::Format("sample array length does not match the grid".into()));
        }
        Ok(Self { grid, eps, data })
    }

    pub fn eps_index(&self, eps: f64) -> Result<usize> {
        self.eps
            .iter()
            .position(|&e| (e - eps).abs() <= 1e-12 * eps)
            .ok_or_else(|| Error::OutOfDomain(format!("eps = {eps} not among the sampled scales")))
    }

    pub fn region(&self) -> Region {
        Region::of_grid(&self.grid)
    }

    fn at(&self, k: usize, idx: [i64; 2]) -> C64 {
        let zero = C64::new(0.0, 0.0);
        let a0 = &self.grid.axes[0];
        if idx[0] < 0 || idx[0] >= a0.n as i64 {
            return zero;
        }
        if self.grid.dim() == 1 {
            return self.data[k][idx[0] as usize];
        }
        let a1 = &self.grid.axes[1];
        if idx[1] < 0 || idx[1] >= a1.n as i64 {
            return zero;
        }
        self.data[k][idx[0] as usize * a1.n + idx[1] as usize]
    }

    /// Four-point cubic interpolation, tensorized in two dimensions.
    pub fn value(&self, eps: f64, x: [f64; 2]) -> Result<C64> {
        let k = self.eps_index(eps)?;
        if !self.grid.contains(&x[..self.grid.dim()]) {
            return Ok(C64::new(0.0, 0.0));
        }
        let weights = |axis: &crate::grid::Axis, v: f64| -> (i64, [f64; 4]) {
            let u = (v - axis.lo) / axis.dx();
            let j = u.floor();
            let t = u - j;
            let w = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
            (j as i64 - 1, w)
        };
        let (j0, w0) = weights(&self.grid.axes[0], x[0]);
        if self.grid.dim() == 1 {
            return Ok((0..4).map(|i| self.at(k, [j0 + i as i64, 0]) * w0[i]).sum());
        }
        let (j1, w1) = weights(&self.grid.axes[1], x[1]);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc += self.at(k, [j0 + i as i64, j1 + j as i64]) * (w0[i] * w1[j]);
            }
        }
        Ok(acc)
    }

    pub fn step(&self) -> [f64; 2] {
        let d0 = self.grid.axes[0].dx();
        let d1 = self.grid.axes.get(1).map_or(1.0, |a| a.dx());
        [d0, d1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_exact_on_polynomials() {
        let f = |p: [f64; 2]| -> Result<C64> { Ok(C64::new(p[0].powi(4) + p[0].powi(3), 0.0)) };
        let x = [0.3, 0.0];
        let h = [0.01, 1.0];
        let d1 = fd_derivative(&f, x, MultiIndex([1, 0]), h).unwrap().re;
        let d3 = fd_derivative(&f, x, MultiIndex([3, 0]), h).unwrap().re;
        let d4 = fd_derivative(&f, x, MultiIndex([4, 0]), h).unwrap().re;
        assert!((d1 - (4.0 * 0.027 + 3.0 * 0.09)).abs() < 1e-9);
        assert!((d3 - (24.0 * 0.3 + 6.0)).abs() < 1e-6);
        assert!((d4 - 24.0).abs() < 1e-4);
        assert!(fd_derivative(&f, x, MultiIndex([5, 0]), h).is_err());
    }

    #[test]
    fn cubic_interpolation_exact_for_cubics() {
        let grid = GridBox::line(-1.0, 1.0, 64).unwrap();
        let data: Vec<C64> = grid.points().iter().map(|p| C64::new(p[0].powi(3) - p[0], 0.0)).collect();
        let net = SampledNet::new(grid, vec![0.1], vec![data]).unwrap();
        let v = net.value(0.1, [0.123, 0.0]).unwrap();
        assert!((v.re - (0.123f64.powi(3) - 0.123)).abs() < 1e-12);
        assert!(net.value(0.2, [0.0, 0.0]).is_err());
    }
}
