//! Analytic one-dimensional nets with closed-form Taylor jets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::C64;
use crate::gevrey::{CutoffProfile, Mollifier, MAX_PHI_DERIVATIVE};
use crate::grid::Region;
use crate::taylor;

/// Effectively unlimited analytic derivative order.
pub const UNLIMITED: usize = 64;

fn real_series(v: Vec<f64>) -> Vec<C64> {
    v.into_iter().map(|x| C64::new(x, 0.0)).collect()
}

fn constant_series(v: C64, len: usize) -> Vec<C64> {
    let mut s = vec![C64::new(0.0, 0.0); len];
    s[0] = v;
    s
}

/// Tabulated `x ↦ ∫_{-∞}^{x} (ρ_ε - φ_ε)(y - c) dy` for a fixed set of ε.
#[derive(Debug)]
pub struct JumpCorrection {
    pub moll: Arc<Mollifier>,
    pub cut: CutoffProfile,
    pub center: f64,
    step: f64,
    radius: f64,
    tables: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

impl JumpCorrection {
    /// Tabulates the correction in `u = (x - c)/ε` on a grid of `4096` cells
    /// spanning the mollifier support.
    pub fn new(moll: Arc<Mollifier>, cut: CutoffProfile, center: f64, eps: &[f64]) -> Self {
        let radius = moll.support_radius();
        let cells = 8192usize;
        let step = 2.0 * radius / cells as f64;
        let mut tables = Vec::with_capacity(eps.len());
        for &e in eps {
            let lam = e * e.ln().abs();
            let integrand: Vec<f64> = (0..=cells)
                .map(|i| {
                    let u = -radius + i as f64 * step;
                    moll.phi_derivative(0, u) * (cut.value(lam * u) - 1.0)
                })
                .collect();
            let slope: Vec<f64> = (0..=cells)
                .map(|i| {
                    let u = -radius + i as f64 * step;
                    let phi = moll.phi_series(u, 2);
                    let c = cut.scaled_series(u, lam, 2);
                    phi[1] * (c[0].re - 1.0) + phi[0] * c[1].re
                })
                .collect();
            let mut cum = vec![0.0; cells + 1];
            for i in 1..=cells {
                cum[i] = cum[i - 1]
                    + step * (0.5 * (integrand[i - 1] + integrand[i]) + step * (slope[i - 1] - slope[i]) / 12.0);
            }
            tables.push((e, cum, integrand));
        }
        Self { moll, cut, center, step, radius, tables }
    }

    fn table(&self, eps: f64) -> Result<&(f64, Vec<f64>, Vec<f64>)> {
        self.tables
            .iter()
            .find(|t| (t.0 - eps).abs() <= 1e-12 * eps)
            .ok_or_else(|| Error::OutOfDomain(format!("eps = {eps} not tabulated for the cutoff correction")))
    }

    /// Value at `u = (x - c)/ε` by cubic Hermite interpolation of the cumulative table.
    fn value(&self, eps: f64, u: f64) -> Result<f64> {
        let (_, cum, g) = self.table(eps)?;
        if u <= -self.radius {
            return Ok(0.0);
        }
        let last = cum.len() - 1;
        if u >= self.radius {
            return Ok(cum[last]);
        }
        let s = (u + self.radius) / self.step;
        let i = (s.floor() as usize).min(last - 1);
        let t = s - i as f64;
        let h = self.step;
        let (t2, t3) = (t * t, t * t * t);
        Ok(cum[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + h * g[i] * (t3 - 2.0 * t2 + t)
            + cum[i + 1] * (-2.0 * t3 + 3.0 * t2)
            + h * g[i + 1] * (t3 - t2))
    }
}

/// Closed-form nets of one variable (plus constants in any dimension).
#[derive(Clone, Debug)]
pub enum Builtin {
    Zero,
    One,
    Gaussian { center: f64, width: f64 },
    /// `1 / (x - pole + iε)`.
    Cauchy { pole: f64 },
    GevreyBump { center: f64, profile: CutoffProfile },
    /// `φ_ε(x - c) = ε^{-1} φ((x - c)/ε)`.
    MollifiedDelta { moll: Arc<Mollifier>, center: f64 },
    /// `(H ∗ φ_ε)(x - c)`.
    MollifiedHeaviside { moll: Arc<Mollifier>, center: f64 },
    /// `ρ_ε(x - c) = φ_ε(x - c)·cut((x - c)|ln ε|)`.
    CutoffMollifier { moll: Arc<Mollifier>, cut: CutoffProfile, center: f64 },
    JumpCorrection(Arc<JumpCorrection>),
    /// `x·exp(-ε^{-s})·ψ(x/ε)` with a compact Gevrey bump `ψ`.
    PointValueCounterexample { s: f64, bump: CutoffProfile },
    /// `ε^p`.
    EpsPower { power: f64 },
    /// `exp(rate·ε^{-s})`.
    EpsExp { rate: f64, s: f64 },
    /// `sin(freq·x/ε)`.
    Oscillation { freq: f64 },
}

impl Builtin {
    /// Highest analytic derivative order.
    pub fn derivative_cap(&self) -> usize {
        match self {
            Builtin::MollifiedDelta { .. } | Builtin::CutoffMollifier { .. } => MAX_PHI_DERIVATIVE,
            Builtin::MollifiedHeaviside { .. } | Builtin::JumpCorrection(_) => MAX_PHI_DERIVATIVE + 1,
            _ => UNLIMITED,
        }
    }

    /// Compact-support witness, valid for every ε in `(0, 1]`.
    pub fn support(&self) -> Option<Region> {
        match self {
            Builtin::Zero => None,
            Builtin::GevreyBump { center, profile } => {
                Some(Region::interval(center - profile.r_outer, center + profile.r_outer))
            }
            Builtin::MollifiedDelta { moll, center } => {
                let r = moll.support_radius();
                Some(Region::interval(center - r, center + r))
            }
            Builtin::CutoffMollifier { moll, center, .. } => {
                let r = moll.support_radius();
                Some(Region::interval(center - r, center + r))
            }
            Builtin::PointValueCounterexample { bump, .. } => Some(Region::interval(-bump.r_outer, bump.r_outer)),
            _ => None,
        }
    }

    /// Interval carrying the ε-scale structure of `f_ε`, if narrower than the box.
    pub fn feature(&self, eps: f64) -> Option<(f64, f64)> {
        let around = |c: f64, r: f64| Some((c - r, c + r));
        match self {
            Builtin::MollifiedDelta { moll, center }
            | Builtin::MollifiedHeaviside { moll, center }
            | Builtin::CutoffMollifier { moll, center, .. } => around(*center, moll.support_radius() * eps),
            Builtin::JumpCorrection(jc) => around(jc.center, jc.moll.support_radius() * eps),
            Builtin::Cauchy { pole } => around(*pole, 20.0 * eps),
            Builtin::PointValueCounterexample { bump, .. } => around(0.0, bump.r_outer * eps),
            Builtin::Oscillation { freq } => around(0.0, std::f64::consts::TAU * eps / freq.abs().max(f64::MIN_POSITIVE)),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Builtin::Zero)
    }

    /// Taylor coefficients in `x` at `(ε, x)` of length `len`.
    pub fn series(&self, eps: f64, x: f64, len: usize) -> Result<Vec<C64>> {
        if len > self.derivative_cap() + 1 {
            return Err(Error::DerivativeUnavailable { order: len - 1, cap: self.derivative_cap() });
        }
        let one = C64::new(1.0, 0.0);
        Ok(match self {
            Builtin::Zero => vec![C64::new(0.0, 0.0); len],
            Builtin::One => constant_series(one, len),
            Builtin::Gaussian { center, width } => {
                let t = taylor::variable(C64::new((x - center) / width, 0.0), len);
                let q: Vec<C64> = taylor::mul(&t, &t).iter().map(|c| c * -0.5).collect();
                taylor::chain_linear(taylor::exp(&q), 1.0 / width)
            }
            Builtin::Cauchy { pole } => {
                let z = C64::new(x - pole, eps);
                let mut out = Vec::with_capacity(len);
                let mut p = z.inv();
                for k in 0..len {
                    out.push(if k % 2 == 0 { p } else { -p });
                    p /= z;
                }
                out
            }
            Builtin::GevreyBump { center, profile } => profile.series(x - center, len),
            Builtin::MollifiedDelta { moll, center } => {
                let y = (x - center) / eps;
                let s = real_series(moll.phi_series(y, len));
                taylor::chain_linear(s, 1.0 / eps).into_iter().map(|c| c / eps).collect()
            }
            Builtin::MollifiedHeaviside { moll, center } => {
                let y = (x - center) / eps;
                taylor::chain_linear(real_series(moll.cdf_series(y, len)), 1.0 / eps)
            }
            Builtin::CutoffMollifier { moll, cut, center } => {
                let y = (x - center) / eps;
                let lam = eps.ln().abs();
                if y.abs() >= moll.support_radius() || (x - center).abs() * lam >= cut.r_outer {
                    return Ok(vec![C64::new(0.0, 0.0); len]);
                }
                let phi: Vec<C64> = taylor::chain_linear(real_series(moll.phi_series(y, len)), 1.0 / eps)
                    .into_iter()
                    .map(|c| c / eps)
                    .collect();
                taylor::mul(&phi, &cut.scaled_series(x - center, lam, len))
            }
            Builtin::JumpCorrection(jc) => {
                let u = (x - jc.center) / eps;
                let mut out = vec![C64::new(jc.value(eps, u)?, 0.0)];
                if len > 1 {
                    let rho = Builtin::CutoffMollifier { moll: jc.moll.clone(), cut: jc.cut.clone(), center: jc.center }
                        .series(eps, x, len - 1)?;
                    let phi = Builtin::MollifiedDelta { moll: jc.moll.clone(), center: jc.center }.series(eps, x, len - 1)?;
                    for k in 1..len {
                        out.push((rho[k - 1] - phi[k - 1]) / k as f64);
                    }
                }
                out
            }
            Builtin::PointValueCounterexample { s, bump } => {
                let damp = (-eps.powf(-s)).exp();
                let psi = bump.scaled_series(x, 1.0 / eps, len);
                let lin = taylor::variable(C64::new(x, 0.0), len);
                taylor::mul(&lin, &psi).into_iter().map(|c| c * damp).collect()
            }
            Builtin::EpsPower { power } => constant_series(C64::new(eps.powf(*power), 0.0), len),
            Builtin::EpsExp { rate, s } => constant_series(C64::new((rate * eps.powf(-s)).exp(), 0.0), len),
            Builtin::Oscillation { freq } => {
                let w = freq / eps;
                let arg = w * x;
                let cycle = [arg.sin(), arg.cos(), -arg.sin(), -arg.cos()];
                (0..len).map(|k| C64::new(cycle[k % 4] * w.powi(k as i32) / taylor::factorial(k), 0.0)).collect()
            }
        })
    }
}

/// Parameters accepted by [`super::builtin_net`]; unused fields are ignored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuiltinParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pole: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_inner: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_outer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// Catalog of builtin names with one-line descriptions, in listing order.
pub const CATALOG: &[(&str, &str)] = &[
    ("cauchy", "1/(x - pole + i eps)"),
    ("cutoff_mollifier", "rho_eps(x - center): mollifier times cut(x |ln eps|)"),
    ("eps_exp", "exp(rate * eps^(-s)), constant in x"),
    ("eps_oscillation", "sin(freq * x / eps)"),
    ("eps_power", "eps^power, constant in x"),
    ("gaussian", "exp(-(x - center)^2 / (2 width^2)), constant in eps"),
    ("gevrey_bump", "Gevrey cutoff: 1 on |x - center| <= r_inner, 0 beyond r_outer"),
    ("mollified_delta", "phi_eps(x - center)"),
    ("mollified_heaviside", "(H * phi_eps)(x - center)"),
    ("one", "constant 1"),
    ("paper_sec3_counterexample", "x exp(-eps^(-1/(2 sigma - 1))) psi(x / eps), psi a compact bump"),
    ("zero", "constant 0"),
];
