//! Generalized points, generalized numbers and point values.

use serde::{Deserialize, Serialize};

use super::Net;
use crate::asymptotics::{classify_scalar_net, Classification, EpsGrid, Policy, ScaleModel};
use crate::error::{Error, Result};
use crate::fourier::C64;
use crate::grid::{GridBox, Region};

/// An ε-indexed point path `(x_ε)_ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenPoint {
    pub dim: usize,
    /// `(ε, x_ε)` in the order of the ε-grid.
    pub path: Vec<(f64, [f64; 2])>,
    /// Box containing every `x_ε`, when the point is compactly supported.
    pub witness: Option<Region>,
}

fn witness_of(dim: usize, path: &[(f64, [f64; 2])]) -> Region {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for (_, x) in path {
        for d in 0..dim {
            lo[d] = lo[d].min(x[d]);
            hi[d] = hi[d].max(x[d]);
        }
    }
    Region { lo, hi }
}

impl GenPoint {
    /// Path given explicitly; the witness is its bounding box.
    pub fn from_path(dim: usize, path: Vec<(f64, [f64; 2])>) -> Self {
        let witness = Some(witness_of(dim, &path));
        Self { dim, path, witness }
    }

    /// Classical point `x_ε ≡ x`.
    pub fn constant(dim: usize, x: [f64; 2], eps: &EpsGrid) -> Self {
        Self::from_path(dim, eps.values().iter().map(|&e| (e, x)).collect())
    }

    /// `x_ε = ε·x*`.
    pub fn scaled(dim: usize, x_star: [f64; 2], eps: &EpsGrid) -> Self {
        Self::from_path(dim, eps.values().iter().map(|&e| (e, [e * x_star[0], e * x_star[1]])).collect())
    }

    /// `x_ε = f(ε)`.
    pub fn from_fn(dim: usize, eps: &EpsGrid, f: impl Fn(f64) -> [f64; 2]) -> Self {
        Self::from_path(dim, eps.values().iter().map(|&e| (e, f(e))).collect())
    }
}

/// A generalized number with its classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenNumber {
    pub values: Vec<(f64, C64)>,
    pub classification: Classification,
}

impl GenNumber {
    pub fn new(values: Vec<(f64, C64)>, model: &ScaleModel, policy: &Policy) -> Result<Self> {
        let classification = classify_scalar_net(&values, model, policy)?;
        Ok(Self { values, classification })
    }
}

/// `(f_ε(x_ε))_ε`.
pub fn point_value(f: &Net, x: &GenPoint, model: &ScaleModel, policy: &Policy) -> Result<GenNumber> {
    if x.dim != f.dim() {
        return Err(Error::DimMismatch { left: f.dim(), right: x.dim });
    }
    let witness = x
        .witness
        .as_ref()
        .ok_or_else(|| Error::OutOfDomain("generalized point is not compactly supported".into()))?;
    if let Some(domain) = f.domain() {
        let inside = (0..x.dim).all(|d| witness.lo[d] >= domain.lo[d] && witness.hi[d] <= domain.hi[d]);
        if !inside {
            return Err(Error::OutOfDomain(format!("point witness leaves the domain of `{}`", f.id())));
        }
    }
    let values = x
        .path
        .iter()
        .map(|&(e, p)| Ok((e, f.value(e, p)?)))
        .collect::<Result<Vec<_>>>()?;
    GenNumber::new(values, model, policy)
}

/// Tests `x ∼ y` by classifying `|x_ε - y_ε|`.
pub fn gen_point_equiv(x: &GenPoint, y: &GenPoint, model: &ScaleModel, policy: &Policy) -> Result<(bool, Classification)> {
    if x.dim != y.dim {
        return Err(Error::DimMismatch { left: x.dim, right: y.dim });
    }
    if x.path.len() != y.path.len() || x.path.iter().zip(&y.path).any(|(a, b)| a.0 != b.0) {
        return Err(Error::Domain("generalized points use different eps values".into()));
    }
    let gaps: Vec<(f64, C64)> = x
        .path
        .iter()
        .zip(&y.path)
        .map(|((e, p), (_, q))| {
            let d: f64 = (0..x.dim).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>().sqrt();
            (*e, C64::new(d, 0.0))
        })
        .collect();
    let c = classify_scalar_net(&gaps, model, policy)?;
    Ok((c.verdict.is_negligible(), c))
}

/// Path through the grid maxima of `|f_ε|`; ties go to the smallest coordinate.
pub fn argmax_path(f: &Net, grid: &GridBox, eps: &EpsGrid) -> Result<GenPoint> {
    let mut path = Vec::with_capacity(eps.values().len());
    for &e in eps.values() {
        let samples = f.sample(e, grid)?;
        let mut best = (0usize, -1.0f64);
        for (i, v) in samples.iter().enumerate() {
            if v.norm() > best.1 {
                best = (i, v.norm());
            }
        }
        path.push((e, grid.point(best.0)));
    }
    Ok(GenPoint::from_path(f.dim(), path))
}
