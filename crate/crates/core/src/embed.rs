//! Compactly supported distributions and their mollifier embeddings.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{classify_function_net, fit_tail, AsymptoticFit, EpsGrid, Policy, ScaleModel, Sign};
use crate::error::{Error, Result};
use crate::fourier::{apply_multiplier, C64};
use crate::gevrey::{CutoffProfile, Mollifier};
use crate::grid::{GridBox, MultiIndex, Region};
use crate::nets::builtins::JumpCorrection;
use crate::nets::{self, Builtin, Net, SampledNet};
use crate::taylor::factorial;

/// A real function sampled on a one-dimensional grid.
#[derive(Clone, Debug)]
pub struct Samples1d {
    pub grid: GridBox,
    pub values: Vec<f64>,
}

impl Samples1d {
    pub fn new(grid: GridBox, values: Vec<f64>) -> Result<Self> {
        if grid.dim() != 1 || values.len() != grid.len() {
            return Err(Error::Format("density samples must match a one-dimensional grid".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples an ε-independent net at `ε = 1`.
    pub fn from_net(net: &Net, grid: &GridBox) -> Result<Self> {
        let values = net.sample(1.0, grid)?.into_iter().map(|v| v.re).collect();
        Self::new(grid.clone(), values)
    }

    /// Values on `target`, by cubic interpolation when the grids differ.
    fn on(&self, target: &GridBox) -> Result<Vec<C64>> {
        if self.grid == *target {
            return Ok(self.values.iter().map(|&v| C64::new(v, 0.0)).collect());
        }
        let data = self.values.iter().map(|&v| C64::new(v, 0.0)).collect();
        let s = SampledNet::new(self.grid.clone(), vec![1.0], vec![data])?;
        target.points().into_iter().map(|p| s.value(1.0, p)).collect()
    }

    fn support(&self) -> Option<Region> {
        let axis = &self.grid.axes[0];
        let first = self.values.iter().position(|v| *v != 0.0)?;
        let last = self.values.iter().rposition(|v| *v != 0.0)?;
        Some(Region::interval(axis.coord(first), axis.coord(last)))
    }

    fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One term of a distribution model.
#[derive(Clone, Debug)]
pub enum Atom {
    /// `coeff·δ^(order)(x - location)`.
    DeltaDeriv { order: usize, location: f64, coeff: f64 },
    /// `coeff·H(x - location)`.
    Jump { location: f64, coeff: f64 },
    Density(Samples1d),
    /// `a·D^γ f`.
    SeriesTerm { gamma: usize, a: f64, f: Samples1d },
}

/// Declared constants of the coefficient bound `|a_γ| <= c h^{|γ|} / (γ!)^σ` and `sup|f_γ| <= M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesBound {
    pub c: f64,
    pub h: f64,
    pub m: f64,
}

/// Finite model of a compactly supported (ultra)distribution on the line.
#[derive(Clone, Debug)]
pub struct DistributionExpr {
    pub atoms: Vec<Atom>,
    pub support: Region,
    pub bound: Option<SeriesBound>,
}

impl DistributionExpr {
    pub fn new(atoms: Vec<Atom>, support: Region) -> Self {
        Self { atoms, support, bound: None }
    }

    pub fn delta(location: f64) -> Self {
        Self::new(vec![Atom::DeltaDeriv { order: 0, location, coeff: 1.0 }], Region::interval(location, location))
    }

    pub fn delta_deriv(order: usize, location: f64, coeff: f64) -> Self {
        Self::new(vec![Atom::DeltaDeriv { order, location, coeff }], Region::interval(location, location))
    }

    /// Heaviside step; the support is clipped to `support` (the jump is not compactly supported).
    pub fn jump(location: f64, support: Region) -> Self {
        Self::new(vec![Atom::Jump { location, coeff: 1.0 }], support)
    }

    pub fn with_bound(mut self, bound: SeriesBound) -> Self {
        self.bound = Some(bound);
        self
    }

    /// Checks atom locations and the declared series bound.
    pub fn validate(&self, sigma: f64) -> Result<()> {
        for atom in &self.atoms {
            let inside = match atom {
                Atom::DeltaDeriv { location, .. } | Atom::Jump { location, .. } => self.support.contains(&[*location]),
                Atom::Density(f) | Atom::SeriesTerm { f, .. } => f.support().is_none_or(|r| {
                    r.lo[0] >= self.support.lo[0] && r.hi[0] <= self.support.hi[0]
                }),
            };
            if !inside {
                return Err(Error::Support("atom lies outside the declared support box".into()));
            }
        }
        if let Some(b) = &self.bound {
            for atom in &self.atoms {
                if let Atom::SeriesTerm { gamma, a, f } = atom {
                    let limit = b.c * b.h.powi(*gamma as i32) / factorial(*gamma).powf(sigma);
                    if a.abs() > limit {
                        return Err(Error::SeriesBoundViolation { order: *gamma, value: a.abs(), bound: limit });
                    }
                    if f.sup() > b.m {
                        return Err(Error::SeriesBoundViolation { order: *gamma, value: f.sup(), bound: b.m });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMethod {
    J0,
    J,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    #[serde(skip)]
    pub net: Net,
    pub method: EmbedMethod,
    pub per_alpha_growth: BTreeMap<MultiIndex, AsymptoticFit>,
    pub notes: Vec<String>,
}

/// Working settings of an embedding.
#[derive(Clone, Debug)]
pub struct EmbedContext {
    pub grid: GridBox,
    pub eps: EpsGrid,
    pub model: ScaleModel,
    pub policy: Policy,
    /// Orders of the growth fits attached to reports.
    pub max_order: usize,
}

/// `f ∗ (a·D^γ φ_ε)` on the working grid for every ε, via a zero-padded FFT.
fn convolve_density(f: &Samples1d, gamma: usize, a: f64, moll: &Mollifier, ctx: &EmbedContext) -> Result<SampledNet> {
    let samples = f.on(&ctx.grid)?;
    let axis = ctx.grid.axes[0];
    let data: Vec<Vec<C64>> = ctx
        .eps
        .values()
        .par_iter()
        .map(|&e| {
            apply_multiplier(&samples, &axis, |xi| C64::new(0.0, xi).powu(gamma as u32) * (a * moll.phi_hat_at(e * xi)))
        })
        .collect();
    SampledNet::new(ctx.grid.clone(), ctx.eps.values().to_vec(), data)
}

/// `ρ_ε - φ_ε` convolved with `f` for every ε.
fn cutoff_correction(f: &Samples1d, moll: &Arc<Mollifier>, cut: &CutoffProfile, ctx: &EmbedContext) -> Result<SampledNet> {
    let samples = f.on(&ctx.grid)?;
    let axis = &ctx.grid.axes[0];
    let n = axis.n;
    let dx = axis.dx();
    let rho = Net::builtin("rho", Builtin::CutoffMollifier { moll: moll.clone(), cut: cut.clone(), center: 0.0 });
    let phi = Net::builtin("phi", Builtin::MollifiedDelta { moll: moll.clone(), center: 0.0 });
    let data: Vec<Vec<C64>> = ctx
        .eps
        .values()
        .par_iter()
        .map(|&e| {
            // kernel sampled on offsets -(n-1)..=(n-1)
            let kernel: Vec<C64> = (0..2 * n - 1)
                .map(|j| {
                    let x = (j as f64 - (n - 1) as f64) * dx;
                    let r = rho.value(e, [x, 0.0])?;
                    let p = phi.value(e, [x, 0.0])?;
                    Ok((r - p) * dx)
                })
                .collect::<Result<_>>()?;
            let full = crate::fourier::convolve_linear(&samples, &kernel);
            Ok(full[n - 1..2 * n - 1].to_vec())
        })
        .collect::<Result<_>>()?;
    SampledNet::new(ctx.grid.clone(), ctx.eps.values().to_vec(), data)
}

fn accumulate(acc: Option<Net>, term: Net) -> Result<Option<Net>> {
    Ok(Some(match acc {
        None => term,
        Some(a) => nets::add(&a, &term)?,
    }))
}

fn check_support(t: &DistributionExpr, ctx: &EmbedContext) -> Result<()> {
    if ctx.grid.dim() != 1 {
        return Err(Error::DimMismatch { left: 1, right: ctx.grid.dim() });
    }
    if !t.support.strictly_inside(&ctx.grid) {
        return Err(Error::Support("support box is not strictly inside the working box".into()));
    }
    t.validate(ctx.model.sigma())
}

fn report(net: Net, method: EmbedMethod, ctx: &EmbedContext, notes: Vec<String>) -> Result<EmbeddingReport> {
    let order = ctx.max_order.min(net.jet_cap());
    let c = classify_function_net(&net, &ctx.grid, &ctx.eps, order, &ctx.model, &ctx.policy, false)?;
    Ok(EmbeddingReport { net, method, per_alpha_growth: c.per_alpha, notes })
}

/// Net of `T ∗ φ_ε`.
pub fn embed_compact_net(t: &DistributionExpr, moll: &Arc<Mollifier>, ctx: &EmbedContext) -> Result<Net> {
    check_support(t, ctx)?;
    let mut acc: Option<Net> = None;
    for atom in &t.atoms {
        let term = match atom {
            Atom::DeltaDeriv { order, location, coeff } => {
                let base = Net::builtin("delta", Builtin::MollifiedDelta { moll: moll.clone(), center: *location });
                let d = if *order == 0 { base } else { nets::derivative(&base, MultiIndex::d1(*order))? };
                nets::scale(&d, C64::new(*coeff, 0.0))
            }
            Atom::Jump { location, coeff } => {
                let h = Net::builtin("heaviside", Builtin::MollifiedHeaviside { moll: moll.clone(), center: *location });
                nets::scale(&h, C64::new(*coeff, 0.0))
            }
            Atom::Density(f) => Net::sampled("density", convolve_density(f, 0, 1.0, moll, ctx)?),
            Atom::SeriesTerm { gamma, a, f } => Net::sampled("series", convolve_density(f, *gamma, *a, moll, ctx)?),
        };
        acc = accumulate(acc, term)?;
    }
    Ok(acc.unwrap_or_else(|| Net::constant("zero", 1, false)).with_id("J0(T)"))
}

/// `J₀(T) = (T ∗ φ_ε)_ε` with growth fits.
pub fn embed_compact(t: &DistributionExpr, moll: &Arc<Mollifier>, ctx: &EmbedContext) -> Result<EmbeddingReport> {
    let net = embed_compact_net(t, moll, ctx)?;
    report(net, EmbedMethod::J0, ctx, Vec::new())
}

/// Net of `T ∗ ρ_ε` with the logarithmic cutoff mollifier.
pub fn embed_cutoff_net(t: &DistributionExpr, moll: &Arc<Mollifier>, cut: &CutoffProfile, ctx: &EmbedContext) -> Result<Net> {
    check_support(t, ctx)?;
    if (cut.sigma - moll.sigma()).abs() > 1e-12 {
        return Err(Error::Domain("cutoff and mollifier orders differ".into()));
    }
    let mut acc: Option<Net> = None;
    for atom in &t.atoms {
        let term = match atom {
            Atom::DeltaDeriv { order, location, coeff } => {
                let base = Net::builtin(
                    "rho",
                    Builtin::CutoffMollifier { moll: moll.clone(), cut: cut.clone(), center: *location },
                );
                let d = if *order == 0 { base } else { nets::derivative(&base, MultiIndex::d1(*order))? };
                nets::scale(&d, C64::new(*coeff, 0.0))
            }
            Atom::Jump { location, coeff } => {
                let h = Net::builtin("heaviside", Builtin::MollifiedHeaviside { moll: moll.clone(), center: *location });
                let jc = JumpCorrection::new(moll.clone(), cut.clone(), *location, ctx.eps.values());
                let corr = Net::builtin("jump_correction", Builtin::JumpCorrection(Arc::new(jc)));
                nets::scale(&nets::add(&h, &corr)?, C64::new(*coeff, 0.0))
            }
            Atom::Density(f) => {
                let base = Net::sampled("density", convolve_density(f, 0, 1.0, moll, ctx)?);
                nets::add(&base, &Net::sampled("correction", cutoff_correction(f, moll, cut, ctx)?))?
            }
            Atom::SeriesTerm { .. } => {
                return Err(Error::Domain("series terms are embedded with the plain mollifier only".into()));
            }
        };
        acc = accumulate(acc, term)?;
    }
    Ok(acc.unwrap_or_else(|| Net::constant("zero", 1, false)).with_id("J(T)"))
}

/// `J(T) = (T ∗ ρ_ε)_ε` with growth fits.
pub fn embed_cutoff(t: &DistributionExpr, moll: &Arc<Mollifier>, cut: &CutoffProfile, ctx: &EmbedContext) -> Result<EmbeddingReport> {
    let net = embed_cutoff_net(t, moll, cut, ctx)?;
    report(net, EmbedMethod::J, ctx, Vec::new())
}

/// Fit of `sup|∂^order (f ∗ φ_ε - f)|` in the decay law. Values below the
/// transform roundoff level `1e-14·sup|f|` are treated as zero.
pub fn embedding_error(f: &Samples1d, moll: &Mollifier, order: usize, ctx: &EmbedContext) -> Result<AsymptoticFit> {
    let samples = f.on(&ctx.grid)?;
    let axis = ctx.grid.axes[0];
    let floor = 1e-14 * f.sup();
    let sups: Vec<(f64, f64)> = ctx
        .eps
        .values()
        .par_iter()
        .map(|&e| {
            let diff = apply_multiplier(&samples, &axis, |xi| {
                C64::new(0.0, xi).powu(order as u32) * (moll.phi_hat_at(e * xi) - 1.0)
            });
            let sup = diff.iter().fold(0.0, |m: f64, v| m.max(v.norm()));
            (e, if sup <= floor * axis.xi_max().powi(order as i32) { 0.0 } else { sup })
        })
        .collect();
    fit_tail(&sups, &ctx.model, &ctx.policy)
}

/// Bernstein-type bound on the terms `|γ| > gamma_cap` of the truncated series at scale ε.
pub fn series_tail_bound(bound: &SeriesBound, moll: &Mollifier, sigma: f64, gamma_cap: usize, eps: f64) -> f64 {
    let l1 = moll.derivative_l1(0);
    let rate = bound.h * moll.xi_outer / eps;
    let mut total = 0.0;
    let mut j = gamma_cap + 1;
    loop {
        let term = bound.c * rate.powi(j as i32) / factorial(j).powf(sigma) * bound.m * l1;
        total += term;
        if !term.is_finite() || (j > gamma_cap + 4 && term <= 1e-17 * total) || j > 400 {
            break;
        }
        j += 1;
    }
    total
}

/// Truncated structure-theorem series `Σ_{|γ| <= gamma_cap} a_γ D^γ(f_γ ∗ φ_ε)` with its tail bound per ε.
pub fn series_net(t: &DistributionExpr, moll: &Arc<Mollifier>, gamma_cap: usize, ctx: &EmbedContext) -> Result<(Net, Vec<(f64, f64)>)> {
    let bound = t.bound.ok_or(Error::SeriesBoundViolation { order: 0, value: f64::NAN, bound: f64::NAN })?;
    check_support(t, ctx)?;
    let mut acc: Option<Net> = None;
    for atom in &t.atoms {
        match atom {
            Atom::SeriesTerm { gamma, a, f } if *gamma <= gamma_cap => {
                acc = accumulate(acc, Net::sampled("series", convolve_density(f, *gamma, *a, moll, ctx)?))?;
            }
            Atom::SeriesTerm { .. } => {}
            _ => return Err(Error::Domain("series_net accepts series terms only".into())),
        }
    }
    let tails = ctx
        .eps
        .values()
        .iter()
        .map(|&e| (e, series_tail_bound(&bound, moll, ctx.model.sigma(), gamma_cap, e)))
        .collect();
    Ok((acc.unwrap_or_else(|| Net::constant("zero", 1, false)).with_id("series"), tails))
}

/// Rates below this are a flat sup norm whose fitted sign is roundoff.
const FLAT_RATE: f64 = 1e-9;

/// True when every growth fit is moderate: positive sign, or flat.
pub fn is_moderate_report(r: &EmbeddingReport, policy: &Policy) -> bool {
    r.per_alpha_growth
        .values()
        .all(|f| (f.sign == Sign::Growth || f.k <= FLAT_RATE) && f.k <= policy.k_cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::scale_exponent;
    use crate::gevrey::{build_mollifier, MollifierSpec};

    fn setup() -> (Arc<Mollifier>, EmbedContext) {
        let moll = Arc::new(build_mollifier(&MollifierSpec::default()).unwrap());
        let ctx = EmbedContext {
            grid: GridBox::line(-1.0, 1.0, 4096).unwrap(),
            eps: EpsGrid::standard(),
            model: scale_exponent(2.0).unwrap(),
            policy: Policy::default(),
            max_order: 2,
        };
        (moll, ctx)
    }

    #[test]
    fn delta_embeds_to_mollifier() {
        let (moll, ctx) = setup();
        let r = embed_compact(&DistributionExpr::delta(0.0), &moll, &ctx).unwrap();
        assert!(is_moderate_report(&r, &ctx.policy));
        let phi = Net::builtin("phi", Builtin::MollifiedDelta { moll: moll.clone(), center: 0.0 });
        for y in [-0.3, 0.0, 0.01, 0.2] {
            let e = 0.01;
            let x = y * moll.support_radius() * e;
            assert_eq!(r.net.value(e, [x, 0.0]).unwrap(), phi.value(e, [x, 0.0]).unwrap());
        }
    }

    #[test]
    fn delta_prime_is_derivative_of_delta() {
        let (moll, ctx) = setup();
        let d1 = embed_compact_net(&DistributionExpr::delta_deriv(1, 0.0, 1.0), &moll, &ctx).unwrap();
        let d0 = embed_compact_net(&DistributionExpr::delta(0.0), &moll, &ctx).unwrap();
        let e = 0.05;
        for y in [-0.2, 0.1, 0.3] {
            let x = y * moll.support_radius() * e;
            let a = d1.value(e, [x, 0.0]).unwrap();
            let b = d0.derivative_at(e, [x, 0.0], MultiIndex::d1(1)).unwrap();
            assert!((a - b).norm() <= 1e-8 * b.norm().max(1.0));
        }
    }

    #[test]
    fn support_and_bound_validation() {
        let (moll, ctx) = setup();
        assert!(matches!(embed_compact(&DistributionExpr::delta(1.0), &moll, &ctx), Err(Error::Support(_))));
        let f = Samples1d::new(ctx.grid.clone(), vec![0.0; 4096]).unwrap();
        let t = DistributionExpr::new(vec![Atom::SeriesTerm { gamma: 2, a: 1.0, f }], Region::interval(-0.5, 0.5))
            .with_bound(SeriesBound { c: 1.0, h: 0.1, m: 1.0 });
        assert!(matches!(series_net(&t, &moll, 8, &ctx), Err(Error::SeriesBoundViolation { .. })));
    }
}
