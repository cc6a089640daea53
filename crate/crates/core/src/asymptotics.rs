//! Scale functions, ε-grids, log-domain least-squares fits of the growth laws
//! `c·exp(±k ε^{-s})`, and moderate/negligible classification.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::C64;
use crate::grid::{GridBox, MultiIndex};
use crate::nets::Net;

/// Values below this magnitude are treated as underflow.
pub const UNDERFLOW: f64 = 1e-280;
/// Values above this magnitude (or non-finite) are treated as overflow.
pub const OVERFLOW: f64 = 1e280;

/// Gevrey order σ together with the exponent `s = 1/(2σ-1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleModel {
    sigma: f64,
    s: f64,
}

impl ScaleModel {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// The feature `ε^{-s}`.
    pub fn feature(&self, eps: f64) -> f64 {
        eps.powf(-self.s)
    }
}

pub fn scale_exponent(sigma: f64) -> Result<ScaleModel> {
    if !(sigma >= 1.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma = {sigma} must be >= 1")));
    }
    Ok(ScaleModel { sigma, s: 1.0 / (2.0 * sigma - 1.0) })
}

/// Strictly decreasing ε values in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    values: Vec<f64>,
}

impl EpsGrid {
    pub fn geometric(start: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(start > 0.0 && start <= 1.0) || !(ratio > 0.0 && ratio < 1.0) || count < 4 {
            return Err(Error::Domain(format!(
                "eps grid needs start in (0,1], ratio in (0,1), count >= 4; got {start}, {ratio}, {count}"
            )));
        }
        Ok(Self { values: (0..count).map(|i| start * ratio.powi(i as i32)).collect() })
    }

    /// Ten points from 1e-1 down to 1e-4.
    pub fn standard() -> Self {
        Self::spanning(1e-1, 1e-4, 10).expect("valid default grid")
    }

    /// `count` geometric points from `first` to `last` inclusive.
    pub fn spanning(first: f64, last: f64, count: usize) -> Result<Self> {
        if count < 4 || !(last > 0.0 && last < first) {
            return Err(Error::Domain(format!("cannot span {first} -> {last} with {count} points")));
        }
        let ratio = (last / first).powf(1.0 / (count - 1) as f64);
        let mut g = Self::geometric(first, ratio, count)?;
        *g.values.last_mut().unwrap() = last;
        Ok(g)
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::Domain("eps grid needs at least 4 values".into()));
        }
        if values.iter().any(|&e| !(e > 0.0 && e <= 1.0)) || values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Domain("eps values must be strictly decreasing in (0,1]".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The values `ε >= floor` (at least the first one is kept).
    pub fn at_least(&self, floor: f64) -> Vec<f64> {
        let v: Vec<f64> = self.values.iter().copied().filter(|&e| e >= floor).collect();
        if v.is_empty() {
            vec![self.values[0]]
        } else {
            v
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Growth,
    Decay,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Growth => 1.0,
            Sign::Decay => -1.0,
        }
    }
}

/// Fitted law `value ≈ c·exp(sign·k·ε^{-s})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub log_c: f64,
    /// Rate; `f64::INFINITY` for exact-zero data.
    pub k: f64,
    pub sign: Sign,
    pub residual_rms: f64,
    /// Signed residual of the smallest-ε point, in log units.
    pub excess: f64,
    pub saturated_count: usize,
    /// Number of points that entered the fit.
    pub used: usize,
    /// Points dropped because they overflowed.
    pub overflow_count: usize,
}

impl AsymptoticFit {
    fn exact_zero(count: usize) -> Self {
        Self {
            log_c: f64::NEG_INFINITY,
            k: f64::INFINITY,
            sign: Sign::Decay,
            residual_rms: 0.0,
            excess: 0.0,
            saturated_count: count,
            used: 0,
            overflow_count: 0,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.k == f64::INFINITY
    }
}

/// Least squares with rank check; columns are rescaled before the SVD.
pub(crate) fn lstsq(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let mut scaled = a.clone();
    let mut norms = Vec::with_capacity(a.ncols());
    for j in 0..a.ncols() {
        let n = a.column(j).norm();
        if n == 0.0 {
            return Err(Error::DegenerateDesign(format!("column {j} is identically zero")));
        }
        scaled.column_mut(j).scale_mut(1.0 / n);
        norms.push(n);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::DegenerateDesign(format!("condition ratio {:e}", smin / smax)));
    }
    let sol = svd.solve(y, 0.0).map_err(|e| Error::DegenerateDesign(e.to_string()))?;
    Ok(DVector::from_iterator(sol.len(), sol.iter().zip(&norms).map(|(v, n)| v / n)))
}

struct Usable {
    eps: Vec<f64>,
    logv: Vec<f64>,
    underflow: usize,
    overflow: usize,
    zeros: usize,
}

fn split_usable(samples: &[(f64, f64)]) -> Usable {
    let mut u = Usable { eps: vec![], logv: vec![], underflow: 0, overflow: 0, zeros: 0 };
    for &(e, v) in samples {
        if !v.is_finite() || v > OVERFLOW {
            u.overflow += 1;
        } else if v < UNDERFLOW {
            u.underflow += 1;
            if v == 0.0 {
                u.zeros += 1;
            }
        } else {
            u.eps.push(e);
            u.logv.push(v.ln());
        }
    }
    u
}

fn fit_line(eps: &[f64], logv: &[f64], model: &ScaleModel) -> Result<(f64, f64, Vec<f64>)> {
    let n = eps.len();
    let a = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { model.feature(eps[i]) });
    let y = DVector::from_column_slice(logv);
    let sol = lstsq(&a, &y)?;
    let resid: Vec<f64> = (0..n).map(|i| logv[i] - sol[0] - sol[1] * model.feature(eps[i])).collect();
    Ok((sol[0], sol[1], resid))
}

fn rms(r: &[f64]) -> f64 {
    if r.is_empty() {
        0.0
    } else {
        (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
    }
}

fn check_distinct(samples: &[(f64, f64)]) -> Result<()> {
    let mut e: Vec<f64> = samples.iter().map(|s| s.0).collect();
    e.sort_by(f64::total_cmp);
    if e.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("eps values must be distinct".into()));
    }
    Ok(())
}

/// Global least-squares fit of `log v = log_c + b·ε^{-s}` over all usable samples.
pub fn fit_single_scale(samples: &[(f64, f64)], model: &ScaleModel) -> Result<AsymptoticFit> {
    check_distinct(samples)?;
    let u = split_usable(samples);
    if u.zeros == samples.len() {
        return Ok(AsymptoticFit::exact_zero(samples.len()));
    }
    if u.eps.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: u.eps.len() });
    }
    let (log_c, b, resid) = fit_line(&u.eps, &u.logv, model)?;
    Ok(AsymptoticFit {
        log_c,
        k: b.abs(),
        sign: if b >= 0.0 { Sign::Growth } else { Sign::Decay },
        residual_rms: rms(&resid),
        excess: *resid.last().unwrap(),
        saturated_count: u.underflow + u.overflow,
        used: u.eps.len(),
        overflow_count: u.overflow,
    })
}

/// Thresholds of the classification policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Policy {
    pub k_cap: f64,
    pub k_min: f64,
    pub r_max: f64,
    /// Number of smallest-ε usable points entering the asymptotic fit.
    pub tail_points: usize,
    /// Minimal `k2` for a direction bin to count as regular.
    pub k2_min: f64,
}

impl Default for Policy {
    fn default() -> Self {
        Self { k_cap: 50.0, k_min: 0.5, r_max: 0.5, tail_points: 3, k2_min: 0.2 }
    }
}

/// Fit of the asymptotic law restricted to the `policy.tail_points` smallest-ε
/// usable samples. Under-resolved data (fewer usable points, the rest
/// underflowing) is reported as decay at rate `k_cap`.
pub fn fit_tail(samples: &[(f64, f64)], model: &ScaleModel, policy: &Policy) -> Result<AsymptoticFit> {
    check_distinct(samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let u = split_usable(&sorted);
    if u.zeros == sorted.len() {
        return Ok(AsymptoticFit::exact_zero(sorted.len()));
    }
    let tail = policy.tail_points.max(2);
    if u.eps.len() < tail {
        if u.underflow > 0 && u.overflow == 0 {
            return Ok(AsymptoticFit {
                log_c: u.logv.first().copied().unwrap_or(UNDERFLOW.ln()),
                k: policy.k_cap,
                sign: Sign::Decay,
                residual_rms: 0.0,
                excess: 0.0,
                saturated_count: u.underflow,
                used: u.eps.len(),
                overflow_count: 0,
            });
        }
        return Err(Error::InsufficientData { needed: tail, got: u.eps.len() });
    }
    let start = u.eps.len() - tail;
    let (log_c, b, resid) = fit_line(&u.eps[start..], &u.logv[start..], model)?;
    Ok(AsymptoticFit {
        log_c,
        k: b.abs(),
        sign: if b >= 0.0 { Sign::Growth } else { Sign::Decay },
        residual_rms: rms(&resid),
        excess: *resid.last().unwrap(),
        saturated_count: u.underflow + u.overflow,
        used: tail,
        overflow_count: u.overflow,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Moderate,
    Negligible,
    Neither,
    ExactZero,
}

impl Verdict {
    /// Moderate in the wide sense: negligible and zero nets are moderate too.
    pub fn is_moderate(self) -> bool {
        !matches!(self, Verdict::Neither)
    }

    pub fn is_negligible(self) -> bool {
        matches!(self, Verdict::Negligible | Verdict::ExactZero)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Fitted decay rate for negligible nets, growth rate for moderate ones.
    pub k_hat: f64,
    pub per_alpha: BTreeMap<MultiIndex, AsymptoticFit>,
}

impl Classification {
    pub fn exact_zero() -> Self {
        let mut per_alpha = BTreeMap::new();
        per_alpha.insert(MultiIndex::ZERO, AsymptoticFit::exact_zero(0));
        Self { verdict: Verdict::ExactZero, k_hat: f64::INFINITY, per_alpha }
    }

    /// True when the net decays at least like `exp(-k ε^{-s})` on the grid.
    pub fn is_negligible_at(&self, k: f64, policy: &Policy) -> bool {
        match self.verdict {
            Verdict::ExactZero => true,
            Verdict::Negligible => self.per_alpha.values().all(|f| fit_negligible_at(f, k, policy)),
            _ => false,
        }
    }
}

fn fit_negligible_at(fit: &AsymptoticFit, k: f64, policy: &Policy) -> bool {
    fit.is_exact_zero() || (fit.sign == Sign::Decay && fit.k >= k && fit.excess <= policy.r_max)
}

/// Verdict of a single tail fit.
pub fn verdict_of(fit: &AsymptoticFit, policy: &Policy) -> (Verdict, f64) {
    if fit.is_exact_zero() {
        return (Verdict::ExactZero, f64::INFINITY);
    }
    if fit.overflow_count > 0 && fit.sign == Sign::Growth {
        return (Verdict::Neither, fit.k);
    }
    match fit.sign {
        Sign::Decay if fit.k >= policy.k_min && fit.excess <= policy.r_max => {
            (Verdict::Negligible, fit.k.min(policy.k_cap))
        }
        Sign::Decay => (Verdict::Moderate, 0.0),
        Sign::Growth if fit.k <= policy.k_cap && fit.excess <= policy.r_max => (Verdict::Moderate, fit.k),
        Sign::Growth => (Verdict::Neither, fit.k),
    }
}

/// Classifies magnitudes `|value|` sampled over ε.
pub fn classify_magnitudes(samples: &[(f64, f64)], model: &ScaleModel, policy: &Policy) -> Result<Classification> {
    if samples.iter().all(|s| s.1 == 0.0) {
        return Ok(Classification::exact_zero());
    }
    let fit = fit_tail(samples, model, policy)?;
    let (verdict, k_hat) = verdict_of(&fit, policy);
    let mut per_alpha = BTreeMap::new();
    per_alpha.insert(MultiIndex::ZERO, fit);
    Ok(Classification { verdict, k_hat, per_alpha })
}

/// Classifies a scalar generalized number given as `(ε, value)` pairs.
pub fn classify_scalar_net(values: &[(f64, C64)], model: &ScaleModel, policy: &Policy) -> Result<Classification> {
    let mags: Vec<(f64, f64)> = values.iter().map(|(e, v)| (*e, v.norm())).collect();
    classify_magnitudes(&mags, model, policy)
}

/// Combines per-multi-index fits into one classification.
///
/// With `full = false` the net is negligible when every derivative is
/// moderate and the zeroth-order fit is negligible; with `full = true` every
/// derivative must be negligible.
pub fn combine_per_alpha(per_alpha: BTreeMap<MultiIndex, AsymptoticFit>, policy: &Policy, full: bool) -> Classification {
    let verdicts: Vec<(MultiIndex, Verdict, f64)> = per_alpha
        .iter()
        .map(|(a, f)| {
            let (v, k) = verdict_of(f, policy);
            (*a, v, k)
        })
        .collect();
    if verdicts.iter().all(|v| v.1 == Verdict::ExactZero) {
        return Classification { verdict: Verdict::ExactZero, k_hat: f64::INFINITY, per_alpha };
    }
    if verdicts.iter().any(|v| v.1 == Verdict::Neither) {
        let k = verdicts.iter().filter(|v| v.1 == Verdict::Neither).map(|v| v.2).fold(0.0, f64::max);
        return Classification { verdict: Verdict::Neither, k_hat: k, per_alpha };
    }
    let zeroth = verdicts.iter().find(|v| v.0 == MultiIndex::ZERO).map(|v| v.1);
    let negligible = if full {
        verdicts.iter().all(|v| v.1.is_negligible())
    } else {
        zeroth.is_some_and(Verdict::is_negligible)
    };
    if negligible {
        let considered: Vec<f64> = if full {
            verdicts.iter().map(|v| v.2).collect()
        } else {
            verdicts.iter().filter(|v| v.0 == MultiIndex::ZERO).map(|v| v.2).collect()
        };
        let k = considered.into_iter().fold(f64::INFINITY, f64::min);
        // Moderate-only derivative fits are not evidence of negligibility; keep the decaying ones.
        let per_alpha = per_alpha
            .into_iter()
            .filter(|(a, f)| *a == MultiIndex::ZERO || verdict_of(f, policy).0.is_negligible())
            .collect();
        Classification { verdict: Verdict::Negligible, k_hat: k, per_alpha }
    } else {
        let k = verdicts
            .iter()
            .filter(|v| v.1 == Verdict::Moderate)
            .map(|v| v.2)
            .fold(0.0, f64::max);
        Classification { verdict: Verdict::Moderate, k_hat: k, per_alpha }
    }
}

/// Fitted law `log v = log_c + k1 ε^{-s} - k2 |ξ|^{1/σ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoScaleFit {
    pub log_c: f64,
    pub k1: f64,
    pub k2: f64,
    pub residual_rms: f64,
    pub used: usize,
    pub saturated_count: usize,
}

/// Two-scale fit with nonnegative rates enforced by dropping negative
/// coefficients and refitting.
pub fn fit_two_scale(samples: &[(f64, f64, f64)], model: &ScaleModel) -> Result<TwoScaleFit> {
    let mut eps = Vec::new();
    let mut q = Vec::new();
    let mut y = Vec::new();
    let mut saturated = 0;
    for &(e, xi, v) in samples {
        if v.is_finite() && (UNDERFLOW..=OVERFLOW).contains(&v) {
            eps.push(e);
            q.push(xi.abs().powf(1.0 / model.sigma()));
            y.push(v.ln());
        } else {
            saturated += 1;
        }
    }
    let n = y.len();
    let distinct = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s.len()
    };
    if n < 6 || distinct(&eps) < 2 || distinct(&q) < 3 {
        return Err(Error::InsufficientData { needed: 6, got: n });
    }
    let feat: [Vec<f64>; 2] = [eps.iter().map(|&e| model.feature(e)).collect(), q.iter().map(|&v| -v).collect()];
    let yv = DVector::from_column_slice(&y);
    let mut active = vec![0usize, 1];
    let mut coef;
    let mut log_c;
    loop {
        let a = DMatrix::from_fn(n, active.len() + 1, |i, j| if j == 0 { 1.0 } else { feat[active[j - 1]][i] });
        let sol = lstsq(&a, &yv)?;
        log_c = sol[0];
        coef = [0.0; 2];
        for (j, &f) in active.iter().enumerate() {
            coef[f] = sol[j + 1];
        }
        let worst = active
            .iter()
            .enumerate()
            .filter(|(_, &f)| coef[f] < 0.0)
            .min_by(|a, b| coef[*a.1].total_cmp(&coef[*b.1]))
            .map(|(pos, _)| pos);
        match worst {
            Some(pos) => {
                active.remove(pos);
            }
            None => break,
        }
    }
    let resid: Vec<f64> = (0..n).map(|i| y[i] - log_c - coef[0] * feat[0][i] - coef[1] * feat[1][i]).collect();
    Ok(TwoScaleFit { log_c, k1: coef[0], k2: coef[1], residual_rms: rms(&resid), used: n, saturated_count: saturated })
}

/// Dense samples across each narrow feature interval.
const FEATURE_SAMPLES: usize = 512;

/// Golden-section maximization of `|g|` on `[a, b]`.
fn refine_max(g: &dyn Fn(f64) -> Option<f64>, mut a: f64, mut b: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut gd) = (g(c).unwrap_or(0.0), g(d).unwrap_or(0.0));
    for _ in 0..40 {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c).unwrap_or(0.0);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d).unwrap_or(0.0);
        }
    }
    gc.max(gd)
}

/// Sup of `|∂^α f_ε|` over the grid for every `α` in `alphas`. One-dimensional
/// analytic nets are refined between grid points.
pub fn sup_norms(net: &Net, grid: &GridBox, eps: f64, alphas: &[MultiIndex]) -> Result<Vec<f64>> {
    let samples = net.sample_derivatives(eps, grid, alphas)?;
    let refine = net.dim() == 1 && net.is_analytic();
    let mut out = Vec::with_capacity(alphas.len());
    for (alpha, vals) in alphas.iter().zip(&samples) {
        let (mut best, mut at) = (0.0f64, 0usize);
        for (i, v) in vals.iter().enumerate() {
            if v.norm() > best {
                best = v.norm();
                at = i;
            }
        }
        if refine {
            let axis = &grid.axes[0];
            let g = |x: f64| net.derivative_at(eps, [x, 0.0], *alpha).ok().map(|v| v.norm());
            let (mut lo, mut hi) = (axis.coord(at.saturating_sub(1)), axis.coord((at + 1).min(axis.n - 1)));
            for (a, b) in net.features(eps) {
                let (a, b) = (a.max(axis.lo), b.min(axis.coord(axis.n - 1)));
                if b <= a || b - a > 64.0 * axis.dx() {
                    continue;
                }
                let h = (b - a) / FEATURE_SAMPLES as f64;
                for i in 0..=FEATURE_SAMPLES {
                    let x = a + i as f64 * h;
                    let v = g(x).unwrap_or(0.0);
                    if v > best {
                        best = v;
                        (lo, hi) = (x - h, x + h);
                    }
                }
            }
            if best > 0.0 {
                best = best.max(refine_max(&g, lo, hi));
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// Classifies a function net from sup norms of its derivatives up to `max_order`.
///
/// With `full = false` negligibility is decided by the zeroth-order fit once
/// all derivatives are moderate; with `full = true` every derivative must decay.
pub fn classify_function_net(
    net: &Net,
    grid: &GridBox,
    eps: &EpsGrid,
    max_order: usize,
    model: &ScaleModel,
    policy: &Policy,
    full: bool,
) -> Result<Classification> {
    if max_order > net.jet_cap() {
        return Err(Error::DerivativeUnavailable { order: max_order, cap: net.jet_cap() });
    }
    let alphas = MultiIndex::all_up_to(net.dim(), max_order);
    let sups: Vec<Vec<f64>> = eps
        .values()
        .par_iter()
        .map(|&e| sup_norms(net, grid, e, &alphas))
        .collect::<Result<_>>()?;
    let mut per_alpha = BTreeMap::new();
    for (j, alpha) in alphas.iter().enumerate() {
        let samples: Vec<(f64, f64)> = eps.values().iter().zip(&sups).map(|(e, s)| (*e, s[j])).collect();
        per_alpha.insert(*alpha, fit_tail(&samples, model, policy)?);
    }
    Ok(combine_per_alpha(per_alpha, policy, full))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_exponents() {
        assert_eq!(scale_exponent(1.0).unwrap().s(), 1.0);
        assert!((scale_exponent(2.0).unwrap().s() - 1.0 / 3.0).abs() < 1e-15);
        assert!((scale_exponent(3.0).unwrap().s() - 0.2).abs() < 1e-15);
        assert!(scale_exponent(0.5).is_err());
    }

    #[test]
    fn standard_grid_spans_three_decades() {
        let g = EpsGrid::standard();
        assert_eq!(g.values().len(), 10);
        assert_eq!(g.values()[0], 0.1);
        assert_eq!(g.values()[9], 1e-4);
    }

    #[test]
    fn exact_growth_recovered() {
        let m = scale_exponent(2.0).unwrap();
        let s: Vec<(f64, f64)> = EpsGrid::standard().values().iter().map(|&e| (e, (2.0 * m.feature(e)).exp())).collect();
        let f = fit_single_scale(&s, &m).unwrap();
        assert_eq!(f.sign, Sign::Growth);
        assert!((f.k - 2.0).abs() < 1e-9 && f.log_c.abs() < 1e-8 && f.residual_rms < 1e-9);
    }

    #[test]
    fn exact_decay_recovered() {
        let m = scale_exponent(2.0).unwrap();
        let s: Vec<(f64, f64)> = EpsGrid::standard().values().iter().map(|&e| (e, 0.5 * (-5.0 * m.feature(e)).exp())).collect();
        let f = fit_single_scale(&s, &m).unwrap();
        assert_eq!(f.sign, Sign::Decay);
        assert!((f.k - 5.0).abs() < 1e-9 && (f.log_c - 0.5f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn all_zero_is_exact_zero() {
        let m = scale_exponent(2.0).unwrap();
        let s: Vec<(f64, C64)> = EpsGrid::standard().values().iter().map(|&e| (e, C64::new(0.0, 0.0))).collect();
        let c = classify_scalar_net(&s, &m, &Policy::default()).unwrap();
        assert_eq!(c.verdict, Verdict::ExactZero);
        assert_eq!(c.k_hat, f64::INFINITY);
    }

    #[test]
    fn too_few_points() {
        let m = scale_exponent(2.0).unwrap();
        assert!(matches!(
            fit_single_scale(&[(0.1, 1.0), (0.01, 2.0)], &m),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn negligible_scalar() {
        let m = scale_exponent(2.0).unwrap();
        let p = Policy { k_min: 1.0, ..Policy::default() };
        let s: Vec<(f64, C64)> =
            EpsGrid::standard().values().iter().map(|&e| (e, C64::new((-5.0 * m.feature(e)).exp(), 0.0))).collect();
        let c = classify_scalar_net(&s, &m, &p).unwrap();
        assert_eq!(c.verdict, Verdict::Negligible);
        assert!((c.k_hat - 5.0).abs() < 1e-6);
    }

    #[test]
    fn super_law_growth_is_neither() {
        let m = scale_exponent(2.0).unwrap();
        let s: Vec<(f64, C64)> =
            EpsGrid::standard().values().iter().map(|&e| (e, C64::new((1.0 / e).exp(), 0.0))).collect();
        let c = classify_scalar_net(&s, &m, &Policy::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Neither);
    }

    #[test]
    fn polynomial_growth_is_moderate() {
        let m = scale_exponent(2.0).unwrap();
        for p in [1, 3, 6] {
            let s: Vec<(f64, C64)> =
                EpsGrid::standard().values().iter().map(|&e| (e, C64::new(e.powi(-p), 0.0))).collect();
            let c = classify_scalar_net(&s, &m, &Policy::default()).unwrap();
            assert_eq!(c.verdict, Verdict::Moderate, "eps^-{p}");
        }
    }

    #[test]
    fn underflowing_tail_caps_rate() {
        let m = scale_exponent(2.0).unwrap();
        let s: Vec<(f64, f64)> = EpsGrid::standard().values().iter().map(|&e| (e, (-40.0 * m.feature(e)).exp())).collect();
        let f = fit_tail(&s, &m, &Policy::default()).unwrap();
        assert_eq!(f.sign, Sign::Decay);
        assert!(f.k >= 40.0 - 1e-6);
    }

    #[test]
    fn two_scale_exact() {
        let m = scale_exponent(2.0).unwrap();
        let mut s = Vec::new();
        for &e in EpsGrid::standard().values().iter().take(4) {
            for xi in [10.0, 40.0, 90.0, 200.0] {
                let v: f64 = 1.0 + 2.0 * m.feature(e) - 4.0 * f64::sqrt(xi);
                s.push((e, xi, v.exp()));
            }
        }
        let f = fit_two_scale(&s, &m).unwrap();
        assert!((f.log_c - 1.0).abs() < 1e-6 && (f.k1 - 2.0).abs() < 1e-6 && (f.k2 - 4.0).abs() < 1e-6);
    }

    #[test]
    fn two_scale_without_xi_signal() {
        let m = scale_exponent(2.0).unwrap();
        let mut s = Vec::new();
        for &e in EpsGrid::standard().values().iter().take(4) {
            for xi in [10.0, 40.0, 90.0, 200.0] {
                s.push((e, xi, (3.0 * m.feature(e)).exp()));
            }
        }
        let f = fit_two_scale(&s, &m).unwrap();
        assert!(f.k2.abs() < 1e-8 && (f.k1 - 3.0).abs() < 1e-8);
    }

    fn function_nets() -> (GridBox, EpsGrid, ScaleModel, Policy) {
        (GridBox::line(-1.0, 1.0, 4096).unwrap(), EpsGrid::standard(), scale_exponent(2.0).unwrap(), Policy::default())
    }

    #[test]
    fn mollified_delta_is_moderate() {
        use crate::gevrey::{build_mollifier, MollifierSpec};
        use crate::nets::{builtin_net, BuiltinParams};
        let (grid, eps, model, policy) = function_nets();
        let moll = std::sync::Arc::new(build_mollifier(&MollifierSpec::default()).unwrap());
        let d = builtin_net("mollified_delta", &BuiltinParams::default(), Some(&moll)).unwrap();
        let c = classify_function_net(&d, &grid, &eps, 2, &model, &policy, false).unwrap();
        assert_eq!(c.verdict, Verdict::Moderate);
        // oracle: sup|∂^α φ_ε| = ε^{-1-α} sup|φ^(α)|, a pure power law
        for a in 0..=2 {
            let peak = (0..20001).map(|i| moll.phi_derivative(a, -2.0 + i as f64 * 2e-4).abs()).fold(0.0, f64::max);
            let e = eps.values()[9];
            let sup = sup_norms(&d, &grid, e, &[MultiIndex::d1(a)]).unwrap()[0];
            let expect = peak * e.powi(-1 - a as i32);
            assert!((sup - expect).abs() <= 1e-3 * expect, "order {a}: {sup} vs {expect}");
        }
    }

    #[test]
    fn damped_oscillation_is_negligible() {
        use crate::nets::{builtin_net, mul, BuiltinParams};
        let (grid, eps, model, policy) = function_nets();
        let damp = builtin_net("eps_exp", &BuiltinParams { rate: Some(-1.0), ..Default::default() }, None).unwrap();
        let osc = builtin_net("eps_oscillation", &BuiltinParams::default(), None).unwrap();
        let f = mul(&damp, &osc).unwrap();
        let c = classify_function_net(&f, &grid, &eps, 1, &model, &policy, true).unwrap();
        assert_eq!(c.verdict, Verdict::Negligible);
        let k0 = c.per_alpha[&MultiIndex::ZERO].k;
        let k1 = c.per_alpha[&MultiIndex::d1(1)].k;
        assert!((k0 - 1.0).abs() < 1e-3, "{k0}");
        assert!(k1 < k0 && k1 >= policy.k_min, "{k1}");
    }

    #[test]
    fn fast_and_full_paths_agree_on_decaying_net() {
        use crate::nets::{builtin_net, mul, BuiltinParams};
        let (grid, eps, model, policy) = function_nets();
        let damp = builtin_net("eps_exp", &BuiltinParams { rate: Some(-2.0), ..Default::default() }, None).unwrap();
        let g = builtin_net("gaussian", &BuiltinParams::default(), None).unwrap();
        let f = mul(&damp, &g).unwrap();
        let fast = classify_function_net(&f, &grid, &eps, 2, &model, &policy, false).unwrap();
        let full = classify_function_net(&f, &grid, &eps, 2, &model, &policy, true).unwrap();
        assert_eq!(fast.verdict, full.verdict);
        assert_eq!(fast.verdict, Verdict::Negligible);
    }
}
