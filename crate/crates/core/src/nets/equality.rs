//! Strong equality, equality in the sense of ultradistributions of order `t`,
//! and association.

use serde::{Deserialize, Serialize};

use super::{sub, Net};
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::asymptotics::{classify_scalar_net, combine_per_alpha, fit_tail, scale_exponent, sup_norms, Classification, EpsGrid, Policy};
use crate::error::{Error, Result};
use crate::fourier::C64;
use crate::gevrey::CutoffProfile;
use crate::grid::{GridBox, MultiIndex};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EqualityMode {
    Strong,
    TSense { t: f64 },
    Associated,
}

/// A test function sampled on the working grid.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub id: String,
    pub samples: Vec<f64>,
}

impl TestFunction {
    /// Radial Gevrey bump of order `sigma` centred at `center`.
    pub fn bump(sigma: f64, center: [f64; 2], r_inner: f64, r_outer: f64, grid: &GridBox) -> Result<Self> {
        let profile = CutoffProfile::new(sigma, r_inner, r_outer)?;
        let samples = grid
            .points()
            .iter()
            .map(|p| {
                let r = (0..grid.dim()).map(|d| (p[d] - center[d]).powi(2)).sum::<f64>().sqrt();
                profile.value(r)
            })
            .collect();
        Ok(Self { id: format!("bump({:.3},{:.3};{r_outer})", center[0], center[1]), samples })
    }
}

/// Settings shared by all equality modes.
#[derive(Clone, Debug)]
pub struct EqualityContext {
    pub grid: GridBox,
    pub eps: EpsGrid,
    pub sigma: f64,
    pub policy: Policy,
    /// Highest derivative order checked in strong mode.
    pub max_order: usize,
    /// Threshold on the last pairing magnitude for association.
    pub assoc_tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairingRecord {
    pub test_id: String,
    pub values: Vec<(f64, C64)>,
    pub classification: Option<Classification>,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EqualityVerdict {
    pub mode: EqualityMode,
    pub holds: bool,
    pub strong: Option<Classification>,
    pub pairings: Vec<PairingRecord>,
}

/// `Δx Σ (f_ε - g_ε) ψ` for every ε; sums below the cancellation floor are set to zero.
pub fn pairings(diff: &Net, test: &TestFunction, ctx: &EqualityContext) -> Result<Vec<(f64, C64)>> {
    let dv = ctx.grid.cell_volume();
    ctx.eps
        .values()
        .iter()
        .map(|&e| {
            let vals = diff.sample(e, &ctx.grid)?;
            let mut acc = C64::new(0.0, 0.0);
            let mut scale = 0.0;
            for (v, w) in vals.iter().zip(&test.samples) {
                acc += v * *w;
                scale += v.norm() * w.abs();
            }
            let acc = acc * dv;
            let floor = 1e-13 * dv * scale;
            Ok((e, if acc.norm() <= floor { C64::new(0.0, 0.0) } else { acc }))
        })
        .collect()
}

/// Sup norms of `f - g` below this fraction of those of `f` and `g` are cancellation noise.
const CANCELLATION: f64 = 1e-12;

fn strong_classification(f: &Net, g: &Net, diff: &Net, ctx: &EqualityContext) -> Result<Classification> {
    let model = scale_exponent(ctx.sigma)?;
    let alphas = MultiIndex::all_up_to(diff.dim(), ctx.max_order.min(diff.jet_cap()));
    let rows: Vec<[Vec<f64>; 3]> = ctx
        .eps
        .values()
        .par_iter()
        .map(|&e| Ok([sup_norms(diff, &ctx.grid, e, &alphas)?, sup_norms(f, &ctx.grid, e, &alphas)?, sup_norms(g, &ctx.grid, e, &alphas)?]))
        .collect::<Result<_>>()?;
    let mut per_alpha = BTreeMap::new();
    for (j, alpha) in alphas.iter().enumerate() {
        let samples: Vec<(f64, f64)> = ctx
            .eps
            .values()
            .iter()
            .zip(&rows)
            .map(|(&e, [d, a, b])| (e, if d[j] <= CANCELLATION * a[j].max(b[j]) { 0.0 } else { d[j] }))
            .collect();
        per_alpha.insert(*alpha, fit_tail(&samples, &model, &ctx.policy)?);
    }
    Ok(combine_per_alpha(per_alpha, &ctx.policy, true))
}

/// Tests `f = g` in the requested sense.
pub fn equality_test(f: &Net, g: &Net, mode: EqualityMode, tests: &[TestFunction], ctx: &EqualityContext) -> Result<EqualityVerdict> {
    let diff = sub(f, g)?;
    match mode {
        EqualityMode::Strong => {
            let c = strong_classification(f, g, &diff, ctx)?;
            Ok(EqualityVerdict { mode, holds: c.verdict.is_negligible(), strong: Some(c), pairings: Vec::new() })
        }
        EqualityMode::TSense { t } => {
            if !(ctx.sigma..=3.0 * ctx.sigma - 1.0).contains(&t) {
                return Err(Error::Domain(format!("t = {t} outside [sigma, 3 sigma - 1]")));
            }
            if tests.is_empty() {
                return Err(Error::InsufficientData { needed: 1, got: 0 });
            }
            let model = scale_exponent(t)?;
            let mut records = Vec::with_capacity(tests.len());
            for test in tests {
                let values = pairings(&diff, test, ctx)?;
                let c = classify_scalar_net(&values, &model, &ctx.policy)?;
                records.push(PairingRecord { test_id: test.id.clone(), values, holds: c.verdict.is_negligible(), classification: Some(c) });
            }
            Ok(EqualityVerdict { mode, holds: records.iter().all(|r| r.holds), strong: None, pairings: records })
        }
        EqualityMode::Associated => {
            if tests.is_empty() {
                return Err(Error::InsufficientData { needed: 1, got: 0 });
            }
            let mut records = Vec::with_capacity(tests.len());
            for test in tests {
                let values = pairings(&diff, test, ctx)?;
                if values.len() < 3 {
                    return Err(Error::InsufficientData { needed: 3, got: values.len() });
                }
                let tail: Vec<f64> = values[values.len() - 3..].iter().map(|v| v.1.norm()).collect();
                let holds = tail[0] >= tail[1] && tail[1] >= tail[2] && tail[2] <= ctx.assoc_tol;
                records.push(PairingRecord { test_id: test.id.clone(), values, classification: None, holds });
            }
            Ok(EqualityVerdict { mode, holds: records.iter().all(|r| r.holds), strong: None, pairings: records })
        }
    }
}
