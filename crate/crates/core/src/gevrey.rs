//! Gevrey cutoffs, the band-limited mollifier `φ`, and its diagnostics.

use serde::{Deserialize, Serialize};

use crate::asymptotics::lstsq;
use crate::error::{Error, Result};
use crate::fourier::{self, C64};
use crate::grid::{Axis, GridBox};
use crate::taylor;

/// Highest derivative table kept for the mollifier.
pub const TABLE_ORDER: usize = 10;
/// Highest derivative order available for off-grid evaluation of `φ`.
pub const MAX_PHI_DERIVATIVE: usize = TABLE_ORDER - 2;

const TAPER_A: f64 = 1.0;

/// Taylor coefficients of `h(t) = exp(-a t^{-1/(σ-1)})` around `t > 0`.
fn h_series(sigma: f64, t: f64, len: usize) -> Vec<C64> {
    let p = 1.0 / (sigma - 1.0);
    if t <= 0.0 || TAPER_A * t.powf(-p) > 740.0 {
        return vec![C64::new(0.0, 0.0); len];
    }
    let lt = taylor::ln(&taylor::variable(C64::new(t, 0.0), len));
    let pow: Vec<C64> = lt.iter().map(|c| c * (-p)).collect();
    let inner: Vec<C64> = taylor::exp(&pow).iter().map(|c| c * (-TAPER_A)).collect();
    taylor::exp(&inner)
}

/// Taylor coefficients (in `t`) of the smooth step equal to 1 for `t <= 0`
/// and 0 for `t >= 1`.
pub fn step_series(sigma: f64, t: f64, len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len];
    if t <= 0.0 {
        out[0] = C64::new(1.0, 0.0);
        return out;
    }
    if t >= 1.0 {
        return out;
    }
    let a = taylor::chain_linear(h_series(sigma, 1.0 - t, len), -1.0);
    let b = h_series(sigma, t, len);
    let den: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    taylor::div(&a, &den)
}

pub fn step(sigma: f64, t: f64) -> f64 {
    step_series(sigma, t, 1)[0].re
}

/// Radial Gevrey cutoff: 1 on `|x| <= r_inner`, 0 on `|x| >= r_outer`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub sigma: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl CutoffProfile {
    pub fn new(sigma: f64, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !(sigma > 1.0) {
            return Err(Error::Domain(format!("cutoff needs sigma > 1, got {sigma}")));
        }
        if !(r_inner > 0.0 && r_inner < r_outer && r_outer.is_finite()) {
            return Err(Error::Geometry(format!("cutoff radii {r_inner} < {r_outer} invalid")));
        }
        Ok(Self { sigma, r_inner, r_outer, samples: Vec::new() })
    }

    pub fn value(&self, r: f64) -> f64 {
        step(self.sigma, (r.abs() - self.r_inner) / (self.r_outer - self.r_inner))
    }

    /// Taylor coefficients in `x` of `cutoff(x)` for a one-dimensional argument.
    pub fn series(&self, x: f64, len: usize) -> Vec<C64> {
        let width = self.r_outer - self.r_inner;
        let t = (x.abs() - self.r_inner) / width;
        if t <= 0.0 || t >= 1.0 {
            return step_series(self.sigma, t, len);
        }
        let sgn = if x < 0.0 { -1.0 } else { 1.0 };
        taylor::chain_linear(step_series(self.sigma, t, len), sgn / width)
    }

    /// Taylor coefficients in `x` of `cutoff(λ x)`.
    pub fn scaled_series(&self, x: f64, lambda: f64, len: usize) -> Vec<C64> {
        taylor::chain_linear(self.series(lambda * x, len), lambda)
    }
}

/// Samples a radial Gevrey cutoff on a box centered at the origin.
pub fn gevrey_bump(sigma: f64, r_inner: f64, r_outer: f64, grid: &GridBox) -> Result<CutoffProfile> {
    let mut prof = CutoffProfile::new(sigma, r_inner, r_outer)?;
    for a in &grid.axes {
        if r_outer > a.hi.min(-a.lo) {
            return Err(Error::Geometry(format!("cutoff radius {r_outer} does not fit in [{}, {}]", a.lo, a.hi)));
        }
    }
    prof.samples = grid
        .points()
        .iter()
        .map(|p| {
            let r = if grid.dim() == 1 { p[0].abs() } else { p[0].hypot(p[1]) };
            prof.value(r)
        })
        .collect();
    Ok(prof)
}

/// Construction parameters of the mollifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MollifierSpec {
    pub sigma: f64,
    pub half_width: f64,
    pub n: usize,
    pub xi_inner_frac: f64,
    pub xi_outer_frac: f64,
    pub moment_cap: usize,
    pub oversample: usize,
    /// Bound on `|∫φ - 1|`.
    pub mass_tol: f64,
    /// Bound on `|∫x^α φ| / ∫|x^α φ|` for `1 <= α <= moment_cap`.
    pub moment_rel_tol: f64,
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            half_width: 1.0,
            n: 4096,
            xi_inner_frac: 0.15,
            xi_outer_frac: 0.35,
            moment_cap: 6,
            oversample: 8,
            mass_tol: 1e-8,
            moment_rel_tol: 1e-4,
        }
    }
}

impl MollifierSpec {
    pub fn new(sigma: f64, half_width: f64, n: usize) -> Self {
        Self { sigma, half_width, n, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub log_c: f64,
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierDiagnostics {
    /// `|∫x^α φ - δ_{α0}|`, indexed by `α`.
    pub moment_errors: Vec<f64>,
    /// `|∫x^α φ| / ∫|x^α φ|`, indexed by `α`.
    pub relative_moments: Vec<f64>,
    /// Envelope `|φ̂(ξ)| <= c·exp(-k|ξ|^{1/σ})`.
    pub decay_fit: DecayFit,
    /// Truncated `‖φ‖_{b,σ}` at `b = 1`, cap 3.
    pub s_sigma_norm: f64,
    /// Fitted `ν` of the cutoff-mollifier Fourier bound.
    pub rho_decay_nu: f64,
    pub support_radius: f64,
}

/// The mollifier `φ`: inverse transform of a Gevrey cutoff on the frequency grid.
#[derive(Clone, Debug)]
pub struct Mollifier {
    pub spec: MollifierSpec,
    pub axis: Axis,
    pub xi_inner: f64,
    pub xi_outer: f64,
    /// `φ` on the mollifier grid.
    pub phi: Vec<f64>,
    /// Numerical transform of `phi` on the dual grid (FFT order).
    pub phi_hat: Vec<C64>,
    fine_h: f64,
    fine_lo: f64,
    tables: Vec<Vec<f64>>,
    cdf: Vec<f64>,
    support_radius: f64,
    pub diagnostics: MollifierDiagnostics,
}

impl Mollifier {
    /// Analytic transform `φ̂(ξ)`.
    pub fn phi_hat_at(&self, xi: f64) -> f64 {
        step(self.spec.sigma, (xi.abs() - self.xi_inner) / (self.xi_outer - self.xi_inner))
    }

    pub fn sigma(&self) -> f64 {
        self.spec.sigma
    }

    /// `φ` vanishes (to roundoff) outside `[-R, R]`.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Taylor coefficients `φ^(k)(y) / k!` for `k < len`, `len <= MAX_PHI_DERIVATIVE + 1`.
    pub fn phi_series(&self, y: f64, len: usize) -> Vec<f64> {
        (0..len).map(|k| self.hermite(k, y) / taylor::factorial(k)).collect()
    }

    /// `φ^(k)(y)`.
    pub fn phi_derivative(&self, k: usize, y: f64) -> f64 {
        self.hermite(k, y)
    }

    /// Taylor coefficients of the cumulative distribution `Φ(y) = ∫_{-∞}^y φ`.
    pub fn cdf_series(&self, y: f64, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        out.push(self.cdf_value(y));
        for k in 1..len {
            out.push(self.hermite(k - 1, y) / taylor::factorial(k));
        }
        out
    }

    fn locate(&self, y: f64) -> Option<(usize, f64)> {
        if y.abs() >= self.support_radius {
            return None;
        }
        let u = (y - self.fine_lo) / self.fine_h;
        let i = u.floor() as usize;
        Some((i, u - i as f64))
    }

    fn hermite(&self, k: usize, y: f64) -> f64 {
        assert!(k <= MAX_PHI_DERIVATIVE, "derivative order {k} beyond table");
        match self.locate(y) {
            None => 0.0,
            Some((i, t)) => quintic(
                [self.tables[k][i], self.tables[k + 1][i], self.tables[k + 2][i]],
                [self.tables[k][i + 1], self.tables[k + 1][i + 1], self.tables[k + 2][i + 1]],
                self.fine_h,
                t,
            ),
        }
    }

    fn cdf_value(&self, y: f64) -> f64 {
        if y <= -self.support_radius {
            return 0.0;
        }
        if y >= self.support_radius {
            return 1.0;
        }
        let (i, t) = self.locate(y).expect("inside support");
        quintic(
            [self.cdf[i], self.tables[0][i], self.tables[1][i]],
            [self.cdf[i + 1], self.tables[0][i + 1], self.tables[1][i + 1]],
            self.fine_h,
            t,
        )
    }

    /// `∫|x|^β |φ^(α)(x)| dx` on the fine table.
    fn weighted_l1(&self, alpha: usize, beta: usize) -> f64 {
        let h = self.fine_h;
        self.tables[alpha]
            .iter()
            .enumerate()
            .map(|(i, v)| (self.fine_lo + i as f64 * h).abs().powi(beta as i32) * v.abs())
            .sum::<f64>()
            * h
    }

    /// `∫|φ^(k)|`.
    pub fn derivative_l1(&self, k: usize) -> f64 {
        self.weighted_l1(k, 0)
    }
}

/// Quintic Hermite interpolation from values, first and second derivatives.
fn quintic(f0: [f64; 3], f1: [f64; 3], h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
    f0[0] * h00 + h * f0[1] * h10 + h * h * f0[2] * h20 + f1[0] * h01 + h * f1[1] * h11 + h * h * f1[2] * h21
}

/// Builds `φ` and checks the mass and moment conditions against the spec's tolerances.
pub fn build_mollifier(spec: &MollifierSpec) -> Result<Mollifier> {
    let moll = build_unchecked(spec)?;
    let d = &moll.diagnostics;
    if d.moment_errors[0] > spec.mass_tol {
        return Err(Error::Tolerance { what: "mass of phi".into(), value: d.moment_errors[0], limit: spec.mass_tol });
    }
    for a in 1..=spec.moment_cap {
        if d.relative_moments[a] > spec.moment_rel_tol {
            return Err(Error::Tolerance {
                what: format!("relative moment of order {a}"),
                value: d.relative_moments[a],
                limit: spec.moment_rel_tol,
            });
        }
    }
    Ok(moll)
}

fn build_unchecked(spec: &MollifierSpec) -> Result<Mollifier> {
    let sigma = spec.sigma;
    if !(sigma > 1.0) {
        return Err(Error::Domain(format!("mollifier needs sigma > 1, got {sigma}")));
    }
    if !(0.0 < spec.xi_inner_frac && spec.xi_inner_frac < spec.xi_outer_frac && spec.xi_outer_frac < 1.0) {
        return Err(Error::Domain("frequency cutoff fractions must satisfy 0 < inner < outer < 1".into()));
    }
    if spec.moment_cap > 6 {
        return Err(Error::Domain(format!("moment_cap {} exceeds 6", spec.moment_cap)));
    }
    let axis = Axis::symmetric(spec.half_width, spec.n)?;
    let xi_max = axis.xi_max();
    let xi_inner = spec.xi_inner_frac * xi_max;
    let xi_outer = spec.xi_outer_frac * xi_max;
    let over = spec.oversample.max(1).next_power_of_two();
    let fine = Axis::symmetric(spec.half_width, spec.n * over)?;
    let nn = fine.n;
    let cut = |xi: f64| step(sigma, (xi.abs() - xi_inner) / (xi_outer - xi_inner));

    let spectrum: Vec<f64> = (0..nn).map(|k| cut(fine.freq(k))).collect();
    let mid = nn / 2;
    let mut tables = Vec::with_capacity(TABLE_ORDER + 1);
    for k in 0..=TABLE_ORDER {
        let spec_k: Vec<C64> = (0..nn)
            .map(|j| C64::new(0.0, fine.freq(j)).powu(k as u32) * spectrum[j])
            .collect();
        let vals = fourier::inverse_1d(&spec_k, &fine);
        let mut t: Vec<f64> = vals.iter().map(|v| v.re).collect();
        let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
        for j in 1..mid {
            let a = t[mid + j];
            let b = t[mid - j];
            let sym = 0.5 * (a + parity * b);
            t[mid + j] = sym;
            t[mid - j] = parity * sym;
        }
        if k % 2 == 1 {
            t[mid] = 0.0;
        }
        tables.push(t);
    }

    let peak = tables[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let last = (1..mid).rev().find(|&j| tables[0][mid + j].abs() > 1e-14 * peak).unwrap_or(1);
    let radius_cells = (last + 2).min(mid - 2);
    for t in tables.iter_mut() {
        for j in radius_cells..mid {
            t[mid + j] = 0.0;
            t[mid - j] = 0.0;
        }
        t[0] = 0.0;
    }
    let support_radius = radius_cells as f64 * fine.dx();

    let h = fine.dx();
    let mut cdf = vec![0.0; nn];
    for i in 1..nn {
        let cell = 0.5 * (tables[0][i - 1] + tables[0][i]) + h * (tables[1][i - 1] - tables[1][i]) / 10.0
            + h * h * (tables[2][i - 1] + tables[2][i]) / 120.0;
        cdf[i] = cdf[i - 1] + h * cell;
    }
    let total = cdf[mid + radius_cells];
    for (i, c) in cdf.iter_mut().enumerate() {
        *c = if i >= mid + radius_cells { 1.0 } else { *c / total };
    }

    let phi: Vec<f64> = (0..spec.n).map(|j| tables[0][j * over]).collect();
    let phi_c: Vec<C64> = phi.iter().map(|&v| C64::new(v, 0.0)).collect();
    let phi_hat = fourier::forward_1d(&phi_c, &axis);

    let dx = axis.dx();
    let mut moment_errors = Vec::new();
    let mut relative_moments = Vec::new();
    for a in 0..=6 {
        let mut signed = 0.0;
        let mut abs = 0.0;
        for (j, &v) in phi.iter().enumerate() {
            let w = axis.coord(j).powi(a) * v;
            signed += w;
            abs += w.abs();
        }
        signed *= dx;
        abs *= dx;
        let target = if a == 0 { 1.0 } else { 0.0 };
        moment_errors.push((signed - target).abs());
        relative_moments.push(if abs > 0.0 { signed.abs() / abs } else { 0.0 });
    }

    let mut moll = Mollifier {
        spec: spec.clone(),
        axis,
        xi_inner,
        xi_outer,
        phi,
        phi_hat,
        fine_h: h,
        fine_lo: fine.lo,
        tables,
        cdf,
        support_radius,
        diagnostics: MollifierDiagnostics {
            moment_errors,
            relative_moments,
            decay_fit: DecayFit { log_c: 0.0, k: 0.0 },
            s_sigma_norm: 0.0,
            rho_decay_nu: 0.0,
            support_radius,
        },
    };
    moll.diagnostics.decay_fit = fourier_decay_fit(&moll)?;
    moll.diagnostics.s_sigma_norm = s_sigma_norm(&moll, 1.0, 3)?;
    let cut = CutoffProfile::new(sigma, 1.0, 2.0)?;
    moll.diagnostics.rho_decay_nu = rho_decay_fit(&moll, &cut, &crate::asymptotics::EpsGrid::standard())?.nu;
    Ok(moll)
}

/// Envelope fit `|φ̂(ξ)| <= c·exp(-k|ξ|^{1/σ})` over the numerical transform,
/// ignoring samples below the roundoff floor.
pub fn fourier_decay_fit(moll: &Mollifier) -> Result<DecayFit> {
    let inv = 1.0 / moll.sigma();
    let mut q = Vec::new();
    let mut y = Vec::new();
    for (k, v) in moll.phi_hat.iter().enumerate() {
        let xi = moll.axis.freq(k).abs();
        let m = v.norm();
        if xi > moll.xi_inner && m > 1e-13 {
            q.push(xi.powf(inv));
            y.push(m.ln());
        }
    }
    if q.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: q.len() });
    }
    let a = nalgebra::DMatrix::from_fn(q.len(), 2, |i, j| if j == 0 { 1.0 } else { -q[i] });
    let sol = lstsq(&a, &nalgebra::DVector::from_column_slice(&y))?;
    let k = sol[1];
    let log_c = moll
        .phi_hat
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 1e-13)
        .map(|(i, v)| v.norm().ln() + k * moll.axis.freq(i).abs().powf(inv))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit { log_c, k })
}

/// Truncated `‖φ‖_{b,σ} = sup ∫|x|^β |∂^α φ| / (b^{α+β} (α! β!)^σ)` over `α, β <= cap`.
pub fn s_sigma_norm(moll: &Mollifier, b: f64, cap: usize) -> Result<f64> {
    if cap > 6 {
        return Err(Error::DerivativeUnavailable { order: cap, cap: 6 });
    }
    if !(b > 0.0) {
        return Err(Error::Domain(format!("b = {b} must be positive")));
    }
    let s = moll.sigma();
    let mut best = 0.0f64;
    for a in 0..=cap {
        for be in 0..=cap {
            let w = b.powi((a + be) as i32) * (taylor::factorial(a) * taylor::factorial(be)).powf(s);
            best = best.max(moll.weighted_l1(a, be) / w);
        }
    }
    Ok(best)
}

/// Fitted bound `|ρ̂_ε(ξ)| <= c ε^{-m} exp(-ν ε^{1/σ}|ξ|^{1/σ})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoDecayFit {
    pub log_c: f64,
    pub nu: f64,
    /// Fraction of unsaturated samples satisfying the bound.
    pub coverage: f64,
    pub samples: usize,
}

/// `ρ̂_ε(ξ) = ĝ_ε(εξ)` with `g_ε(y) = φ(y)·cut(ε|ln ε| y)`; the transform is
/// taken on the mollifier grid and fitted in `η = εξ`.
pub fn rho_decay_fit(moll: &Mollifier, cut: &CutoffProfile, grid: &crate::asymptotics::EpsGrid) -> Result<RhoDecayFit> {
    let inv = 1.0 / moll.sigma();
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for &eps in grid.values() {
        let lam = eps * eps.ln().abs();
        let g: Vec<C64> = moll
            .phi
            .iter()
            .enumerate()
            .map(|(j, &v)| C64::new(v * cut.value(lam * moll.axis.coord(j)), 0.0))
            .collect();
        let spec = fourier::forward_1d(&g, &moll.axis);
        let peak = spec.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for (k, v) in spec.iter().enumerate() {
            let eta = moll.axis.freq(k).abs();
            let m = v.norm();
            if eta > moll.xi_inner && m > 1e-13 * peak {
                // log v - m ln(1/ε) against -η^{1/σ}
                rows.push((m.ln() + eps.ln(), eta.powf(inv), eps));
            }
        }
    }
    if rows.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: rows.len() });
    }
    let a = nalgebra::DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { 1.0 } else { -rows[i].1 });
    let y = nalgebra::DVector::from_iterator(rows.len(), rows.iter().map(|r| r.0));
    let sol = lstsq(&a, &y)?;
    let nu = sol[1];
    let mut resid: Vec<f64> = rows.iter().map(|r| r.0 - sol[0] + nu * r.1).collect();
    resid.sort_by(f64::total_cmp);
    let idx = ((0.99 * resid.len() as f64).ceil() as usize).clamp(1, resid.len()) - 1;
    let log_c = sol[0] + resid[idx].max(0.0);
    let coverage = rows.iter().filter(|r| r.0 <= log_c - nu * r.1 + 1e-12).count() as f64 / rows.len() as f64;
    Ok(RhoDecayFit { log_c, nu, coverage, samples: rows.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_endpoints_and_symmetry() {
        assert_eq!(step(2.0, 0.0), 1.0);
        assert_eq!(step(2.0, 1.0), 0.0);
        let mid = step(2.0, 0.5);
        assert!((mid - 0.5).abs() < 1e-15);
        for t in [0.1, 0.3, 0.45] {
            assert!((step(2.0, t) + step(2.0, 1.0 - t) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn step_series_matches_finite_differences() {
        let t = 0.37;
        let h = 1e-4;
        let s = step_series(2.0, t, 3);
        let d1 = (step(2.0, t + h) - step(2.0, t - h)) / (2.0 * h);
        let d2 = (step(2.0, t + h) - 2.0 * step(2.0, t) + step(2.0, t - h)) / (h * h);
        assert!((s[1].re - d1).abs() < 1e-6);
        assert!((2.0 * s[2].re - d2).abs() < 1e-4);
    }

    #[test]
    fn bump_plateau_and_support() {
        let g = GridBox::line(-1.0, 1.0, 256).unwrap();
        let b = gevrey_bump(2.0, 0.25, 0.5, &g).unwrap();
        assert_eq!(b.value(0.0), 1.0);
        assert_eq!(b.value(0.5), 0.0);
        let m = b.value(0.375);
        assert!(m > 0.0 && m < 1.0);
        assert!(b.samples.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(gevrey_bump(2.0, 0.25, 1.5, &g).is_err());
    }

    #[test]
    fn mollifier_mass_and_moments() {
        let m = build_mollifier(&MollifierSpec::default()).unwrap();
        assert!(m.diagnostics.moment_errors[0] <= 1e-8);
        assert!(m.diagnostics.moment_errors[1] <= 1e-8);
        assert!(m.diagnostics.decay_fit.k > 0.0);
        assert!(m.diagnostics.rho_decay_nu > 0.0);
    }

    #[test]
    fn hermite_matches_tables_and_cdf() {
        let m = build_mollifier(&MollifierSpec::default()).unwrap();
        let phi0 = m.phi[m.axis.n / 2];
        assert!((m.phi_derivative(0, 0.0) - phi0).abs() < 1e-12 * phi0);
        assert!((m.cdf_series(0.0, 1)[0] - 0.5).abs() < 1e-12);
        assert_eq!(m.cdf_series(10.0, 1)[0], 1.0);
        assert_eq!(m.phi_derivative(0, 5.0), 0.0);
    }

    #[test]
    fn s_sigma_norm_cap_zero_is_l1() {
        let m = build_mollifier(&MollifierSpec::default()).unwrap();
        let n0 = s_sigma_norm(&m, 1.0, 0).unwrap();
        assert!((n0 - m.derivative_l1(0)).abs() < 1e-14);
        assert!(s_sigma_norm(&m, 1.0, 7).is_err());
    }
}
