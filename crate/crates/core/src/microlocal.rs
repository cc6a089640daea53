//! Regularity tests, singular cones, wave-front estimates, cone arithmetic and
//! the product and operator inclusion checks.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{fit_two_scale, scale_exponent, EpsGrid, Policy, ScaleModel, TwoScaleFit};
use crate::error::{Error, Result};
use crate::grid::{GridBox, MultiIndex, Region};
use crate::nets::{self, Net};
use crate::spectral::{directional_profile, shell_edges, spectrum_of_field, ConePartition, SampledField, Window};

/// Smallest ε relative to the grid step used in spectral fits.
pub const EPS_FLOOR_CELLS: f64 = 8.0;
/// Outer window radius as a fraction of the box half-width.
pub const WINDOW_FRACTION: f64 = 0.45;
/// Number of nested windows, each a third of the previous one.
pub const WINDOW_COUNT: usize = 3;
/// A bin must decay at least this many times faster than `1/|ξ|` over the shell range.
pub const POWER_LAW_MARGIN: f64 = 2.0;

/// Grid, scales and policy shared by the microlocal analyses.
#[derive(Clone, Debug)]
pub struct MicrolocalContext {
    pub grid: GridBox,
    pub eps: Vec<f64>,
    pub model: ScaleModel,
    pub policy: Policy,
    pub partition: ConePartition,
    /// Outer radius of the largest window.
    pub window_radius: f64,
    /// Bins with `k2` below this value fail.
    pub k2_threshold: f64,
}

impl MicrolocalContext {
    /// Standard settings: ε restricted to `ε >= 8Δx` and windows of radius `0.45` of the half-width.
    pub fn new(grid: GridBox, eps: &EpsGrid, sigma: f64, partition: ConePartition) -> Result<Self> {
        let half = grid.axes.iter().map(|a| a.half_width()).fold(f64::INFINITY, f64::min);
        let eps = eps.at_least(EPS_FLOOR_CELLS * grid.min_dx());
        if eps.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: eps.len() });
        }
        let model = scale_exponent(sigma)?;
        let policy = Policy::default();
        let k2_threshold = policy.k2_min.max(POWER_LAW_MARGIN * power_law_rate(&grid, &model));
        Ok(Self { grid, eps, model, policy, partition, window_radius: WINDOW_FRACTION * half, k2_threshold })
    }

    /// Replaces the policy and recomputes the bin threshold.
    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.k2_threshold = policy.k2_min.max(POWER_LAW_MARGIN * power_law_rate(&self.grid, &self.model));
        self.policy = policy;
        self
    }

    pub fn field(&self, f: &Net) -> Result<SampledField> {
        SampledField::new(f, &self.grid, &self.eps)
    }

    fn windows(&self, x0: [f64; 2]) -> Result<Vec<Window>> {
        (0..WINDOW_COUNT)
            .map(|j| Window::new(self.model.sigma(), x0, self.window_radius / 3f64.powi(j as i32)))
            .collect()
    }
}

/// Outcome of the two-scale fit for one direction bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinFit {
    pub bin: usize,
    pub fit: Option<TwoScaleFit>,
    pub fails: bool,
}

/// Apparent `k2` of a `1/|ξ|` spectrum fitted over the shells of `grid`.
pub fn power_law_rate(grid: &GridBox, model: &ScaleModel) -> f64 {
    let edges = shell_edges(grid);
    let (lo, hi) = (edges[0], *edges.last().unwrap());
    let p = 1.0 / model.sigma();
    (hi / lo).ln() / (hi.powf(p) - lo.powf(p))
}

fn fit_bins(field: &SampledField, window: Option<&Window>, ctx: &MicrolocalContext) -> Result<Vec<BinFit>> {
    let profiles = spectrum_of_field(field, window, &ctx.partition)?;
    (0..ctx.partition.len())
        .map(|bin| {
            let samples = directional_profile(&profiles, bin)?;
            match fit_two_scale(&samples, &ctx.model) {
                Ok(fit) => {
                    let fails = fit.k2 < ctx.k2_threshold || fit.residual_rms > ctx.policy.r_max;
                    Ok(BinFit { bin, fit: Some(fit), fails })
                }
                Err(Error::InsufficientData { .. }) => Ok(BinFit { bin, fit: None, fails: false }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub regular: bool,
    /// Fit of the bin with the smallest `k2`.
    pub fit: Option<TwoScaleFit>,
    pub failing_bins: Vec<usize>,
    pub bins: Vec<BinFit>,
}

fn require_compact(f: &Net, grid: &GridBox) -> Result<Region> {
    let s = f
        .support()
        .ok_or_else(|| crate::Error::Support(format!("`{}` has no compact-support witness", f.id())))?;
    if !s.strictly_inside(grid) {
        return Err(Error::Support(format!("support of `{}` is not inside the box", f.id())));
    }
    Ok(s)
}

fn regularity_of_field(field: &SampledField, ctx: &MicrolocalContext) -> Result<RegularityVerdict> {
    let bins = fit_bins(field, None, ctx)?;
    let failing_bins: Vec<usize> = bins.iter().filter(|b| b.fails).map(|b| b.bin).collect();
    let fit = bins
        .iter()
        .filter_map(|b| b.fit.clone())
        .min_by(|a, b| a.k2.total_cmp(&b.k2));
    Ok(RegularityVerdict { regular: failing_bins.is_empty(), fit, failing_bins, bins })
}

/// Two-scale decay test of the unwindowed spectrum of a compactly supported net.
pub fn regularity_test(f: &Net, ctx: &MicrolocalContext) -> Result<RegularityVerdict> {
    require_compact(f, &ctx.grid)?;
    regularity_of_field(&ctx.field(f)?, ctx)
}

/// Bins in which the global spectrum fails the decay law.
pub fn sigma_cone(f: &Net, ctx: &MicrolocalContext) -> Result<BTreeSet<usize>> {
    Ok(regularity_test(f, ctx)?.failing_bins.into_iter().collect())
}

/// Singular directions at one point, with the fits of the smallest window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalCone {
    pub members: BTreeSet<usize>,
    pub fits: Vec<BinFit>,
}

fn local_cone_of_field(field: &SampledField, x0: [f64; 2], ctx: &MicrolocalContext) -> Result<LocalCone> {
    let mut members: BTreeSet<usize> = (0..ctx.partition.len()).collect();
    let mut fits = Vec::new();
    for w in ctx.windows(x0)? {
        fits = fit_bins(field, Some(&w), ctx)?;
        let failing: BTreeSet<usize> = fits.iter().filter(|b| b.fails).map(|b| b.bin).collect();
        members = members.intersection(&failing).copied().collect();
    }
    Ok(LocalCone { members, fits })
}

/// Bins failing the decay law for every window of the nested family centred at `x0`.
pub fn local_cone(f: &Net, x0: [f64; 2], ctx: &MicrolocalContext) -> Result<LocalCone> {
    for w in ctx.windows(x0)? {
        w.check_inside(&ctx.grid)?;
    }
    local_cone_of_field(&ctx.field(f)?, x0, ctx)
}

fn check_probes(probes: &[[f64; 2]], ctx: &MicrolocalContext) -> Result<()> {
    for p in probes {
        for w in ctx.windows(*p)? {
            w.check_inside(&ctx.grid)?;
        }
    }
    Ok(())
}

fn cones_of_field(field: &SampledField, probes: &[[f64; 2]], ctx: &MicrolocalContext) -> Result<Vec<LocalCone>> {
    check_probes(probes, ctx)?;
    probes.par_iter().map(|p| local_cone_of_field(field, *p, ctx)).collect()
}

/// Indices of probes with a nonempty local cone.
pub fn sing_support(f: &Net, probes: &[[f64; 2]], ctx: &MicrolocalContext) -> Result<Vec<usize>> {
    let field = ctx.field(f)?;
    let cones = cones_of_field(&field, probes, ctx)?;
    Ok(cones.iter().enumerate().filter(|(_, c)| !c.members.is_empty()).map(|(i, _)| i).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFrontEstimate {
    pub probes: Vec<[f64; 2]>,
    /// `(probe index, bin)` pairs in sorted order.
    pub entries: BTreeSet<(usize, usize)>,
    pub diagnostics: BTreeMap<(usize, usize), TwoScaleFit>,
    pub partition: ConePartition,
}

/// Flat record of one wave-front entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveFrontEntry {
    pub x_index: usize,
    pub x: Vec<f64>,
    pub bin: usize,
    pub theta_range: [f64; 2],
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub residual: Option<f64>,
}

impl WaveFrontEstimate {
    pub fn records(&self) -> Vec<WaveFrontEntry> {
        self.entries
            .iter()
            .map(|&(i, b)| {
                let fit = self.diagnostics.get(&(i, b));
                let bin = &self.partition.bins[b];
                WaveFrontEntry {
                    x_index: i,
                    x: self.probes[i][..self.partition.dim].to_vec(),
                    bin: b,
                    theta_range: [bin.theta_lo, bin.theta_hi],
                    k1: fit.map(|f| f.k1),
                    k2: fit.map(|f| f.k2),
                    residual: fit.map(|f| f.residual_rms),
                }
            })
            .collect()
    }

    pub fn points(&self) -> BTreeSet<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn bins_at(&self, probe: usize) -> BTreeSet<usize> {
        self.entries.iter().filter(|e| e.0 == probe).map(|e| e.1).collect()
    }
}

impl Serialize for WaveFrontEstimate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.records().serialize(s)
    }
}

pub(crate) fn wave_front_of_field(field: &SampledField, probes: &[[f64; 2]], ctx: &MicrolocalContext) -> Result<WaveFrontEstimate> {
    let cones = cones_of_field(field, probes, ctx)?;
    let mut entries = BTreeSet::new();
    let mut diagnostics = BTreeMap::new();
    for (i, c) in cones.iter().enumerate() {
        for &b in &c.members {
            entries.insert((i, b));
            if let Some(fit) = c.fits.iter().find(|f| f.bin == b).and_then(|f| f.fit.clone()) {
                diagnostics.insert((i, b), fit);
            }
        }
    }
    Ok(WaveFrontEstimate { probes: probes.to_vec(), entries, diagnostics, partition: ctx.partition.clone() })
}

/// `{(x, bin) : bin ∈ local_cone(f, x)}` over the probe points.
pub fn wave_front(f: &Net, probes: &[[f64; 2]], ctx: &MicrolocalContext) -> Result<WaveFrontEstimate> {
    wave_front_of_field(&ctx.field(f)?, probes, ctx)
}

/// Closed union of the cone sum with both summands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSum {
    pub entries: BTreeSet<(usize, usize)>,
    /// Probes where opposite directions meet, so that `(x, 0)` lies in the sum.
    pub zero_flags: BTreeMap<usize, bool>,
}

fn dilate(set: &BTreeSet<usize>, n: usize) -> BTreeSet<usize> {
    set.iter().flat_map(|&b| [(b + n - 1) % n, b, (b + 1) % n]).collect()
}

/// Bins of the smallest arc containing bins `a` and `b`; all bins when they are opposite.
fn arc_between(a: usize, b: usize, n: usize) -> BTreeSet<usize> {
    let fwd = (b + n - a) % n;
    if fwd == n / 2 {
        return (0..n).collect();
    }
    let (start, len) = if fwd < n - fwd { (a, fwd) } else { (b, n - fwd) };
    (0..=len).map(|k| (start + k) % n).collect()
}

/// Per-point sum of directional cones, dilated by one bin and joined with both summands.
pub fn cone_sum(a: &WaveFrontEstimate, b: &WaveFrontEstimate) -> Result<ConeSum> {
    if a.partition != b.partition || a.probes != b.probes {
        return Err(Error::PartitionMismatch);
    }
    let part = &a.partition;
    let n = part.len();
    let mut entries: BTreeSet<(usize, usize)> = a.entries.union(&b.entries).copied().collect();
    let mut zero_flags = BTreeMap::new();
    for p in 0..a.probes.len() {
        let (ba, bb) = (a.bins_at(p), b.bins_at(p));
        if ba.is_empty() || bb.is_empty() {
            continue;
        }
        let mut sum = BTreeSet::new();
        let mut zero = false;
        for &x in &ba {
            for &y in &bb {
                if part.dim == 1 {
                    sum.insert(x);
                    sum.insert(y);
                    zero |= x != y;
                } else {
                    sum.extend(arc_between(x, y, n));
                    zero |= part.bin_distance(y, (x + n / 2) % n) <= 1;
                }
            }
        }
        let sum = if part.dim == 1 { sum } else { dilate(&sum, n) };
        entries.extend(sum.into_iter().map(|bin| (p, bin)));
        zero_flags.insert(p, zero);
    }
    Ok(ConeSum { entries, zero_flags })
}

/// Reference cone sum: enumerates sums of boundary directions of every member bin pair.
pub fn cone_sum_bruteforce(a: &WaveFrontEstimate, b: &WaveFrontEstimate) -> Result<BTreeSet<(usize, usize)>> {
    if a.partition != b.partition || a.probes != b.probes {
        return Err(Error::PartitionMismatch);
    }
    let part = &a.partition;
    let n = part.len();
    let mut entries: BTreeSet<(usize, usize)> = a.entries.union(&b.entries).copied().collect();
    for p in 0..a.probes.len() {
        let (ba, bb) = (a.bins_at(p), b.bins_at(p));
        if ba.is_empty() || bb.is_empty() {
            continue;
        }
        let dirs = |bin: usize| -> Vec<f64> {
            if part.dim == 1 {
                return vec![if bin == 0 { 0.0 } else { PI }];
            }
            let w = TAU / n as f64;
            let nudge = 1e-6 * w;
            vec![part.bins[bin].theta_lo + nudge, part.bins[bin].theta_hi - nudge]
        };
        let mut sum = BTreeSet::new();
        for &x in &ba {
            for &y in &bb {
                for t1 in dirs(x) {
                    for t2 in dirs(y) {
                        let gap = (t2 - t1).rem_euclid(TAU);
                        if (gap - PI).abs() < 1e-9 {
                            sum.extend(0..n);
                            continue;
                        }
                        // positive combinations sweep the short arc from t1 to t2
                        let (start, span) = if gap < PI { (t1, gap) } else { (t2, TAU - gap) };
                        let steps = 4096;
                        for k in 0..=steps {
                            let t = start + span * k as f64 / steps as f64;
                            sum.insert(part.bin_of([t.cos(), t.sin()]));
                        }
                    }
                }
            }
        }
        let sum = if part.dim == 1 { sum } else { dilate(&sum, n) };
        entries.extend(sum.into_iter().map(|bin| (p, bin)));
    }
    Ok(entries)
}

/// Spatial and angular tolerances of inclusion checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dilation {
    pub bins: usize,
    pub cells: f64,
}

impl Default for Dilation {
    fn default() -> Self {
        Self { bins: 1, cells: 2.0 }
    }
}

/// Entries of `sub` not covered by `sup` up to the dilation.
pub fn inclusion_violations(
    sub: &BTreeSet<(usize, usize)>,
    sup: &BTreeSet<(usize, usize)>,
    probes: &[[f64; 2]],
    part: &ConePartition,
    grid: &GridBox,
    tol: Dilation,
) -> Vec<(usize, usize)> {
    let reach = tol.cells * grid.min_dx();
    sub.iter()
        .filter(|(p, b)| {
            !sup.iter().any(|(q, c)| {
                let dist = (0..grid.dim()).map(|d| (probes[*p][d] - probes[*q][d]).abs()).fold(0.0, f64::max);
                dist <= reach + 1e-12 && part.bin_distance(*b, *c) <= tol.bins
            })
        })
        .copied()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProductVerdict {
    HypothesisFailed { points: Vec<usize> },
    Checked { included: bool, violations: Vec<(usize, usize)> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductCheck {
    pub verdict: ProductVerdict,
    pub wf_f: WaveFrontEstimate,
    pub wf_g: WaveFrontEstimate,
    pub wf_product: Option<WaveFrontEstimate>,
    pub allowed: BTreeSet<(usize, usize)>,
    pub tolerance: Dilation,
}

/// Checks `WF(fg) ⊆ (WF(f) + WF(g)) ∪ WF(f) ∪ WF(g)` when no opposite directions meet.
pub fn product_wavefront_check(f: &Net, g: &Net, probes: &[[f64; 2]], ctx: &MicrolocalContext) -> Result<ProductCheck> {
    let wf_f = wave_front(f, probes, ctx)?;
    let wf_g = wave_front(g, probes, ctx)?;
    let sum = cone_sum(&wf_f, &wf_g)?;
    let tolerance = Dilation::default();
    let bad: Vec<usize> = sum.zero_flags.iter().filter(|(_, z)| **z).map(|(p, _)| *p).collect();
    if !bad.is_empty() {
        return Ok(ProductCheck {
            verdict: ProductVerdict::HypothesisFailed { points: bad },
            wf_f,
            wf_g,
            wf_product: None,
            allowed: sum.entries,
            tolerance,
        });
    }
    let fg = nets::mul(f, g)?;
    let wf_fg = wave_front(&fg, probes, ctx)?;
    let violations = inclusion_violations(&wf_fg.entries, &sum.entries, probes, &ctx.partition, &ctx.grid, tolerance);
    Ok(ProductCheck {
        verdict: ProductVerdict::Checked { included: violations.is_empty(), violations },
        wf_f,
        wf_g,
        wf_product: Some(wf_fg),
        allowed: sum.entries,
        tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorCheck {
    pub included: bool,
    pub equal: bool,
    pub violations: Vec<(usize, usize)>,
    pub wf_f: WaveFrontEstimate,
    pub wf_pf: WaveFrontEstimate,
    pub tolerance: Dilation,
}

/// Compactly supported version of a coefficient for the regularity check:
/// the coefficient times a Gevrey bump equal to one on most of the box.
pub fn masked_coefficient(c: &Net, ctx: &MicrolocalContext) -> Result<Net> {
    if c.support().is_some_and(|s| s.strictly_inside(&ctx.grid)) {
        return Ok(c.clone());
    }
    let half = ctx.grid.axes.iter().map(|a| a.half_width()).fold(f64::INFINITY, f64::min);
    let centers: Vec<f64> = ctx.grid.axes.iter().map(|a| a.center()).collect();
    let params = |center: f64| nets::BuiltinParams {
        center: Some(center),
        sigma: Some(ctx.model.sigma()),
        r_inner: Some(0.6 * half),
        r_outer: Some(0.9 * half),
        ..Default::default()
    };
    let mask1 = nets::builtin_net("gevrey_bump", &params(centers[0]), None)?;
    let mask = if ctx.grid.dim() == 1 {
        mask1
    } else {
        nets::tensor(&mask1, &nets::builtin_net("gevrey_bump", &params(centers[1]), None)?)?
    };
    nets::mul(c, &mask)
}

/// Checks `WF(P(x, D) f) ⊆ WF(f)` for `P = Σ c_α(x) ∂^α` with regular coefficients.
pub fn pdo_wavefront_check(f: &Net, coeffs: &[(MultiIndex, Net)], probes: &[[f64; 2]], ctx: &MicrolocalContext) -> Result<OperatorCheck> {
    let mut pf: Option<Net> = None;
    for (alpha, c) in coeffs {
        if !regularity_test(&masked_coefficient(c, ctx)?, ctx)?.regular {
            return Err(Error::CoefficientNotRegular(c.id().to_string()));
        }
        let df = if alpha.order() == 0 { f.clone() } else { nets::derivative(f, *alpha)? };
        let term = nets::mul(c, &df)?;
        pf = Some(match pf {
            None => term,
            Some(acc) => nets::add(&acc, &term)?,
        });
    }
    let pf = pf.ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    let wf_f = wave_front(f, probes, ctx)?;
    let wf_pf = wave_front(&pf, probes, ctx)?;
    let tolerance = Dilation::default();
    let violations = inclusion_violations(&wf_pf.entries, &wf_f.entries, probes, &ctx.partition, &ctx.grid, tolerance);
    Ok(OperatorCheck { included: violations.is_empty(), equal: wf_pf.entries == wf_f.entries, violations, wf_f, wf_pf, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::cone_partition;

    fn estimate(part: &ConePartition, bins: &[usize]) -> WaveFrontEstimate {
        WaveFrontEstimate {
            probes: vec![[0.0, 0.0]],
            entries: bins.iter().map(|&b| (0, b)).collect(),
            diagnostics: BTreeMap::new(),
            partition: part.clone(),
        }
    }

    #[test]
    fn one_dimensional_cone_sums() {
        let part = cone_partition(1, 2).unwrap();
        let plus = estimate(&part, &[0]);
        let s = cone_sum(&plus, &plus).unwrap();
        assert_eq!(s.entries, [(0, 0)].into_iter().collect());
        assert!(!s.zero_flags[&0]);
        let both = estimate(&part, &[0, 1]);
        assert!(cone_sum(&both, &both).unwrap().zero_flags[&0]);
    }

    #[test]
    fn quarter_turn_sum_in_two_dimensions() {
        let part = cone_partition(2, 16).unwrap();
        let a = estimate(&part, &[15, 0]);
        let b = estimate(&part, &[4]);
        let s = cone_sum(&a, &b).unwrap();
        assert!(!s.zero_flags[&0]);
        let bins: BTreeSet<usize> = s.entries.iter().map(|e| e.1).collect();
        let expect: BTreeSet<usize> = [14, 15, 0, 1, 2, 3, 4, 5].into_iter().collect();
        assert_eq!(bins, expect);
        assert_eq!(cone_sum_bruteforce(&a, &b).unwrap(), s.entries);
    }

    #[test]
    fn opposite_bins_fill_the_circle() {
        let part = cone_partition(2, 8).unwrap();
        let a = estimate(&part, &[0]);
        let b = estimate(&part, &[4]);
        let s = cone_sum(&a, &b).unwrap();
        assert!(s.zero_flags[&0]);
        assert_eq!(s.entries.len(), 8);
        assert_eq!(cone_sum_bruteforce(&a, &b).unwrap(), s.entries);
    }

    #[test]
    fn partition_mismatch() {
        let a = estimate(&cone_partition(2, 8).unwrap(), &[0]);
        let b = estimate(&cone_partition(2, 16).unwrap(), &[0]);
        assert!(matches!(cone_sum(&a, &b), Err(Error::PartitionMismatch)));
    }
}
