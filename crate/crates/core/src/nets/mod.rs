//! Representatives `(f_ε)_ε` of generalized functions and their algebra.

pub mod builtins;
pub mod equality;
pub mod points;
pub mod sampled;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::C64;
use crate::gevrey::{CutoffProfile, Mollifier};
use crate::grid::{GridBox, MultiIndex, Region};
use crate::taylor::Jet;

pub use builtins::{Builtin, BuiltinParams, CATALOG};
pub use sampled::SampledNet;

/// Relative cancellation threshold below which sums are set to exact zero.
pub const ROUNDOFF: f64 = 1e-13;

/// How a derivative net is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DerivativePath {
    Analytic,
    FiniteDifference { step: [f64; 2] },
}

#[derive(Debug)]
enum Node {
    Builtin(Builtin),
    Sampled(SampledNet),
    Sum { a: Net, b: Net, ca: C64, cb: C64 },
    Product(Net, Net),
    Derivative { f: Net, alpha: MultiIndex, path: DerivativePath },
    Polynomial { f: Net, coeffs: Vec<C64> },
    Tensor(Net, Net),
}

/// An immutable, cheaply clonable net.
#[derive(Clone)]
pub struct Net {
    id: String,
    dim: usize,
    node: Arc<Node>,
}

impl fmt::Debug for Net {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Net({}, dim {})", self.id, self.dim)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineOp {
    Add,
    Mul,
}

fn clamp_cancel(v: C64, scale: f64) -> C64 {
    if v.norm() <= ROUNDOFF * scale {
        C64::new(0.0, 0.0)
    } else {
        v
    }
}

impl Net {
    fn new(id: impl Into<String>, dim: usize, node: Node) -> Self {
        Self { id: id.into(), dim, node: Arc::new(node) }
    }

    pub fn builtin(id: impl Into<String>, b: Builtin) -> Self {
        Self::new(id, 1, Node::Builtin(b))
    }

    /// Constant nets in any dimension.
    pub fn constant(id: impl Into<String>, dim: usize, one: bool) -> Self {
        Self::new(id, dim, Node::Builtin(if one { Builtin::One } else { Builtin::Zero }))
    }

    pub fn sampled(id: impl Into<String>, s: SampledNet) -> Self {
        let dim = s.grid.dim();
        Self::new(id, dim, Node::Sampled(s))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(&self, id: impl Into<String>) -> Self {
        Self { id: id.into(), dim: self.dim, node: self.node.clone() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Highest derivative order for which jets are available.
    pub fn jet_cap(&self) -> usize {
        match &*self.node {
            Node::Builtin(b) => b.derivative_cap(),
            Node::Sampled(_) => sampled::FD_MAX_ORDER,
            Node::Sum { a, b, .. } | Node::Product(a, b) | Node::Tensor(a, b) => a.jet_cap().min(b.jet_cap()),
            Node::Polynomial { f, .. } => f.jet_cap(),
            Node::Derivative { f, alpha, path } => match path {
                DerivativePath::Analytic => f.jet_cap().saturating_sub(alpha.order()),
                DerivativePath::FiniteDifference { .. } => sampled::FD_MAX_ORDER.saturating_sub(alpha.0[0].max(alpha.0[1])),
            },
        }
    }

    /// Whether every leaf has closed-form jets.
    pub fn is_analytic(&self) -> bool {
        match &*self.node {
            Node::Builtin(_) => true,
            Node::Sampled(_) => false,
            Node::Sum { a, b, .. } | Node::Product(a, b) | Node::Tensor(a, b) => a.is_analytic() && b.is_analytic(),
            Node::Polynomial { f, .. } => f.is_analytic(),
            Node::Derivative { f, path, .. } => f.is_analytic() && *path == DerivativePath::Analytic,
        }
    }

    /// Finite-difference step inherited from sampled leaves.
    pub fn fd_step(&self) -> Option<[f64; 2]> {
        match &*self.node {
            Node::Builtin(_) => None,
            Node::Sampled(s) => Some(s.step()),
            Node::Sum { a, b, .. } | Node::Product(a, b) => match (a.fd_step(), b.fd_step()) {
                (Some(x), Some(y)) => Some([x[0].min(y[0]), x[1].min(y[1])]),
                (x, y) => x.or(y),
            },
            Node::Tensor(a, b) => match (a.fd_step(), b.fd_step()) {
                (None, None) => None,
                (x, y) => Some([x.map_or(f64::INFINITY, |s| s[0]), y.map_or(f64::INFINITY, |s| s[0])]),
            },
            Node::Polynomial { f, .. } | Node::Derivative { f, .. } => f.fd_step(),
        }
    }

    /// Compact-support witness valid for all ε in the evaluable range.
    pub fn support(&self) -> Option<Region> {
        match &*self.node {
            Node::Builtin(b) => b.support(),
            Node::Sampled(s) => Some(s.region()),
            Node::Sum { a, b, ca, cb } => {
                let sa = if *ca == C64::new(0.0, 0.0) { None } else { Some(a.support()) };
                let sb = if *cb == C64::new(0.0, 0.0) { None } else { Some(b.support()) };
                match (sa, sb) {
                    (Some(Some(x)), Some(Some(y))) => Some(x.hull(&y)),
                    (Some(x), None) => x,
                    (None, Some(y)) => y,
                    (None, None) => a.support(),
                    _ => None,
                }
            }
            Node::Product(a, b) => match (a.support(), b.support()) {
                (Some(x), Some(y)) => Some(x.intersect(&y)),
                (x, y) => x.or(y),
            },
            Node::Derivative { f, .. } => f.support(),
            Node::Polynomial { f, coeffs } => {
                if coeffs.first().is_none_or(|c| *c == C64::new(0.0, 0.0)) {
                    f.support()
                } else {
                    None
                }
            }
            Node::Tensor(a, b) => match (a.support(), b.support()) {
                (Some(x), Some(y)) => Some(x.product(&y)),
                _ => None,
            },
        }
    }

    /// Region where the net can be evaluated; `None` means everywhere.
    pub fn domain(&self) -> Option<Region> {
        match &*self.node {
            Node::Builtin(_) => None,
            Node::Sampled(s) => Some(s.region()),
            Node::Sum { a, b, .. } | Node::Product(a, b) => match (a.domain(), b.domain()) {
                (Some(x), Some(y)) => Some(x.intersect(&y)),
                (x, y) => x.or(y),
            },
            Node::Polynomial { f, .. } | Node::Derivative { f, .. } => f.domain(),
            Node::Tensor(a, b) => match (a.domain(), b.domain()) {
                (None, None) => None,
                (x, y) => {
                    let wide = Region::interval(f64::NEG_INFINITY, f64::INFINITY);
                    Some(x.unwrap_or_else(|| wide.clone()).product(&y.unwrap_or(wide)))
                }
            },
        }
    }

    /// Intervals carrying ε-scale structure, used to refine sup norms in one dimension.
    pub fn features(&self, eps: f64) -> Vec<(f64, f64)> {
        match &*self.node {
            Node::Builtin(b) => b.feature(eps).into_iter().collect(),
            Node::Sampled(_) | Node::Tensor(..) => Vec::new(),
            Node::Sum { a, b, .. } | Node::Product(a, b) => {
                let mut v = a.features(eps);
                v.extend(b.features(eps));
                v
            }
            Node::Polynomial { f, .. } | Node::Derivative { f, .. } => f.features(eps),
        }
    }

    /// Taylor jet of `f_ε` at `x`.
    pub fn jet(&self, eps: f64, x: [f64; 2], order: [usize; 2]) -> Result<Jet> {
        if self.dim == 1 && order[1] > 0 {
            return Err(Error::DimMismatch { left: 1, right: 2 });
        }
        match &*self.node {
            Node::Builtin(b) => {
                let len = order[0] + 1;
                match (b, self.dim) {
                    (Builtin::One | Builtin::Zero, _) => {
                        let v = if b.is_zero() { 0.0 } else { 1.0 };
                        Ok(Jet::constant(C64::new(v, 0.0), order))
                    }
                    _ => Ok(Jet::from_x1(&b.series(eps, x[0], len)?, order)),
                }
            }
            Node::Sampled(s) => {
                if order == [0, 0] {
                    Ok(Jet::constant(s.value(eps, x)?, order))
                } else {
                    sampled::fd_jet(&|p| s.value(eps, p), x, order, s.step())
                }
            }
            Node::Sum { a, b, ca, cb } => {
                let ja = a.jet(eps, x, order)?.scale(*ca);
                let jb = b.jet(eps, x, order)?.scale(*cb);
                let mut coeffs = Vec::with_capacity((order[0] + 1) * (order[1] + 1));
                for i in 0..=order[0] {
                    for j in 0..=order[1] {
                        let (u, v) = (ja.coeff(i, j), jb.coeff(i, j));
                        coeffs.push(clamp_cancel(u + v, u.norm() + v.norm()));
                    }
                }
                Ok(Jet::from_coeffs(order, coeffs))
            }
            Node::Product(a, b) => Ok(a.jet(eps, x, order)?.mul(&b.jet(eps, x, order)?)),
            Node::Derivative { f, alpha, path } => match path {
                DerivativePath::Analytic => {
                    let up = [order[0] + alpha.0[0], order[1] + alpha.0[1]];
                    Ok(f.jet(eps, x, up)?.shift(*alpha))
                }
                DerivativePath::FiniteDifference { step } => {
                    let up = [order[0] + alpha.0[0], order[1] + alpha.0[1]];
                    let eval = |p: [f64; 2]| f.value(eps, p);
                    Ok(sampled::fd_jet(&eval, x, up, *step)?.shift(*alpha))
                }
            },
            Node::Polynomial { f, coeffs } => {
                let base = f.jet(eps, x, order)?;
                let mut acc = Jet::constant(C64::new(0.0, 0.0), order);
                for c in coeffs.iter().rev() {
                    acc = acc.mul(&base).add(&Jet::constant(*c, order));
                }
                Ok(acc)
            }
            Node::Tensor(a, b) => {
                let ja = a.jet(eps, [x[0], 0.0], [order[0], 0])?;
                let jb = b.jet(eps, [x[1], 0.0], [order[1], 0])?;
                let sa: Vec<C64> = (0..=order[0]).map(|i| ja.coeff(i, 0)).collect();
                let sb: Vec<C64> = (0..=order[1]).map(|j| jb.coeff(j, 0)).collect();
                Ok(Jet::outer(&sa, &sb, order))
            }
        }
    }

    /// `f_ε(x)`.
    pub fn value(&self, eps: f64, x: [f64; 2]) -> Result<C64> {
        Ok(self.jet(eps, x, [0, 0])?.value())
    }

    /// `∂^α f_ε(x)`.
    pub fn derivative_at(&self, eps: f64, x: [f64; 2], alpha: MultiIndex) -> Result<C64> {
        Ok(self.jet(eps, x, alpha.0)?.derivative(alpha))
    }

    /// Samples `f_ε` on every grid point.
    pub fn sample(&self, eps: f64, grid: &GridBox) -> Result<Vec<C64>> {
        self.check_grid(grid)?;
        grid.points().into_iter().map(|p| self.value(eps, p)).collect()
    }

    /// Samples `∂^α f_ε` for every `α` in `alphas` (one jet per grid point).
    pub fn sample_derivatives(&self, eps: f64, grid: &GridBox, alphas: &[MultiIndex]) -> Result<Vec<Vec<C64>>> {
        self.check_grid(grid)?;
        let order = [
            alphas.iter().map(|a| a.0[0]).max().unwrap_or(0),
            alphas.iter().map(|a| a.0[1]).max().unwrap_or(0),
        ];
        let mut out = vec![Vec::with_capacity(grid.len()); alphas.len()];
        for p in grid.points() {
            let jet = self.jet(eps, p, order)?;
            for (k, a) in alphas.iter().enumerate() {
                out[k].push(jet.derivative(*a));
            }
        }
        Ok(out)
    }

    /// Samples for several ε in parallel, in ε order.
    pub fn sample_all(&self, eps: &[f64], grid: &GridBox) -> Result<Vec<Vec<C64>>> {
        eps.par_iter().map(|&e| self.sample(e, grid)).collect()
    }

    fn check_grid(&self, grid: &GridBox) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::DimMismatch { left: self.dim, right: grid.dim() });
        }
        Ok(())
    }

    /// Samples on `grid` at the given ε into a [`SampledNet`].
    pub fn to_sampled(&self, eps: &[f64], grid: &GridBox) -> Result<SampledNet> {
        SampledNet::new(grid.clone(), eps.to_vec(), self.sample_all(eps, grid)?)
    }

    /// How [`derivative`] would evaluate `∂^α` of this net.
    pub fn derivative_path(&self, alpha: MultiIndex) -> Result<DerivativePath> {
        if alpha.order() <= self.jet_cap() && self.is_analytic() {
            return Ok(DerivativePath::Analytic);
        }
        match self.fd_step() {
            Some(step) if alpha.0[0] <= sampled::FD_MAX_ORDER && alpha.0[1] <= sampled::FD_MAX_ORDER => {
                Ok(DerivativePath::FiniteDifference { step })
            }
            _ if alpha.order() <= self.jet_cap() => Ok(DerivativePath::Analytic),
            _ => Err(Error::DerivativeUnavailable { order: alpha.order(), cap: self.jet_cap() }),
        }
    }
}

/// Builds a catalog net. `moll` is required by the mollifier-based entries.
pub fn builtin_net(name: &str, params: &BuiltinParams, moll: Option<&Arc<Mollifier>>) -> Result<Net> {
    let center = params.center.unwrap_or(0.0);
    let need_moll = || {
        moll.cloned()
            .ok_or_else(|| Error::Domain(format!("builtin `{name}` needs a mollifier")))
    };
    let sigma = params.sigma.unwrap_or(2.0);
    let b = match name {
        "zero" | "one" => return Ok(Net::constant(name, params.dim.unwrap_or(1), name == "one")),
        "gaussian" => {
            let width = params.width.unwrap_or(1.0);
            if !(width > 0.0) {
                return Err(Error::Domain("gaussian width must be positive".into()));
            }
            Builtin::Gaussian { center, width }
        }
        "cauchy" => Builtin::Cauchy { pole: params.pole.unwrap_or(0.0) },
        "gevrey_bump" => Builtin::GevreyBump {
            center,
            profile: CutoffProfile::new(sigma, params.r_inner.unwrap_or(0.25), params.r_outer.unwrap_or(0.5))?,
        },
        "mollified_delta" => Builtin::MollifiedDelta { moll: need_moll()?, center },
        "mollified_heaviside" => Builtin::MollifiedHeaviside { moll: need_moll()?, center },
        "cutoff_mollifier" => {
            let m = need_moll()?;
            let cut = CutoffProfile::new(m.sigma(), params.r_inner.unwrap_or(1.0), params.r_outer.unwrap_or(2.0))?;
            Builtin::CutoffMollifier { moll: m, cut, center }
        }
        "paper_sec3_counterexample" => {
            let s = crate::asymptotics::scale_exponent(sigma)?.s();
            let bump_sigma = if sigma > 1.0 { sigma } else { 2.0 };
            Builtin::PointValueCounterexample {
                s,
                bump: CutoffProfile::new(bump_sigma, params.r_inner.unwrap_or(0.5), params.r_outer.unwrap_or(1.0))?,
            }
        }
        "eps_power" => Builtin::EpsPower { power: params.power.unwrap_or(-1.0) },
        "eps_exp" => Builtin::EpsExp {
            rate: params.rate.unwrap_or(-1.0),
            s: crate::asymptotics::scale_exponent(sigma)?.s(),
        },
        "eps_oscillation" => Builtin::Oscillation { freq: params.freq.unwrap_or(1.0) },
        other => return Err(Error::UnknownBuiltin(other.to_string())),
    };
    let net = Net::builtin(name, b);
    match params.dim {
        Some(2) => tensor(&net, &Net::constant("one", 1, true)),
        _ => Ok(net),
    }
}

/// Catalog text, one `name: description` line per entry.
pub fn list_builtins() -> String {
    CATALOG.iter().map(|(n, d)| format!("{n}: {d}\n")).collect()
}

/// Pointwise `f + g` or `f·g`; `scalars` weight the summands of `Add`.
pub fn combine(a: &Net, b: &Net, op: CombineOp, scalars: Option<(C64, C64)>) -> Result<Net> {
    if a.dim != b.dim {
        return Err(Error::DimMismatch { left: a.dim, right: b.dim });
    }
    let node = match op {
        CombineOp::Add => {
            let (ca, cb) = scalars.unwrap_or((C64::new(1.0, 0.0), C64::new(1.0, 0.0)));
            Node::Sum { a: a.clone(), b: b.clone(), ca, cb }
        }
        CombineOp::Mul => Node::Product(a.clone(), b.clone()),
    };
    let sym = if op == CombineOp::Add { "+" } else { "*" };
    Ok(Net::new(format!("({} {sym} {})", a.id, b.id), a.dim, node))
}

pub fn add(a: &Net, b: &Net) -> Result<Net> {
    combine(a, b, CombineOp::Add, None)
}

pub fn sub(a: &Net, b: &Net) -> Result<Net> {
    let one = C64::new(1.0, 0.0);
    Ok(combine(a, b, CombineOp::Add, Some((one, -one)))?.with_id(format!("({} - {})", a.id, b.id)))
}

pub fn mul(a: &Net, b: &Net) -> Result<Net> {
    combine(a, b, CombineOp::Mul, None)
}

pub fn scale(a: &Net, c: C64) -> Net {
    let zero = Net::constant("zero", a.dim, false);
    Net::new(format!("{c}*{}", a.id), a.dim, Node::Sum { a: a.clone(), b: zero, ca: c, cb: C64::new(0.0, 0.0) })
}

/// `∂^α f`, analytic when possible, otherwise by fourth-order finite differences.
pub fn derivative(f: &Net, alpha: MultiIndex) -> Result<Net> {
    if alpha.order() == 0 {
        return Err(Error::Domain("derivative needs |alpha| >= 1".into()));
    }
    if f.dim == 1 && alpha.0[1] > 0 {
        return Err(Error::DimMismatch { left: 1, right: 2 });
    }
    let path = f.derivative_path(alpha)?;
    Ok(Net::new(format!("d{}({})", alpha.label(), f.id), f.dim, Node::Derivative { f: f.clone(), alpha, path }))
}

/// `∂^α f` by finite differences with an explicit step, regardless of analytic jets.
pub fn derivative_fd(f: &Net, alpha: MultiIndex, step: [f64; 2]) -> Result<Net> {
    if alpha.0[0] > sampled::FD_MAX_ORDER || alpha.0[1] > sampled::FD_MAX_ORDER {
        return Err(Error::DerivativeUnavailable { order: alpha.order(), cap: sampled::FD_MAX_ORDER });
    }
    let path = DerivativePath::FiniteDifference { step };
    Ok(Net::new(format!("fd{}({})", alpha.label(), f.id), f.dim, Node::Derivative { f: f.clone(), alpha, path }))
}

/// Path recorded for a derivative net, if it is one.
pub fn derivative_path_of(f: &Net) -> Option<DerivativePath> {
    match &*f.node {
        Node::Derivative { path, .. } => Some(*path),
        _ => None,
    }
}

/// `P(f)` for `P(t) = Σ coeffs[i] t^i`.
pub fn compose_polynomial(f: &Net, coeffs: &[C64]) -> Result<Net> {
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Domain("polynomial coefficients must be finite".into()));
    }
    Ok(Net::new(format!("P({})", f.id), f.dim, Node::Polynomial { f: f.clone(), coeffs: coeffs.to_vec() }))
}

/// `f(x1)·g(x2)` from two one-dimensional nets.
pub fn tensor(f: &Net, g: &Net) -> Result<Net> {
    if f.dim != 1 || g.dim != 1 {
        return Err(Error::DimMismatch { left: f.dim.max(g.dim), right: 1 });
    }
    Ok(Net::new(format!("({} x {})", f.id, g.id), 2, Node::Tensor(f.clone(), g.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gevrey::{build_mollifier, MollifierSpec};

    fn params() -> BuiltinParams {
        BuiltinParams::default()
    }

    #[test]
    fn catalog_examples() {
        let g = builtin_net("gaussian", &params(), None).unwrap();
        assert_eq!(g.value(0.3, [0.0, 0.0]).unwrap(), C64::new(1.0, 0.0));
        let c = builtin_net("cauchy", &params(), None).unwrap();
        let v = c.value(0.1, [0.0, 0.0]).unwrap();
        assert!((v - C64::new(0.0, -10.0)).norm() < 1e-12);
        let p = builtin_net("paper_sec3_counterexample", &params(), None).unwrap();
        assert_eq!(p.value(0.1, [0.0, 0.0]).unwrap(), C64::new(0.0, 0.0));
        assert!(matches!(builtin_net("nope", &params(), None), Err(Error::UnknownBuiltin(_))));
    }

    #[test]
    fn catalog_is_sorted_and_listed() {
        let text = list_builtins();
        assert!(text.contains("cauchy") && text.contains("paper_sec3_counterexample"));
        let names: Vec<&str> = CATALOG.iter().map(|c| c.0).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn add_zero_is_identity_and_square_matches_polynomial() {
        let m = Arc::new(build_mollifier(&MollifierSpec::default()).unwrap());
        let d = builtin_net("mollified_delta", &params(), Some(&m)).unwrap();
        let z = builtin_net("zero", &params(), None).unwrap();
        let s = add(&d, &z).unwrap();
        let sq = mul(&d, &d).unwrap();
        let p = compose_polynomial(&d, &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        for x in [-0.003, -0.001, 0.0, 0.0007] {
            let v = d.value(0.1, [x, 0.0]).unwrap();
            assert_eq!(s.value(0.1, [x, 0.0]).unwrap(), v);
            assert_eq!(sq.value(0.1, [x, 0.0]).unwrap(), v * v);
            assert!((p.value(0.1, [x, 0.0]).unwrap() - v * v).norm() <= 1e-12 * (v * v).norm());
        }
    }

    #[test]
    fn gaussian_derivative_vanishes_at_peak() {
        let g = builtin_net("gaussian", &params(), None).unwrap();
        let d = derivative(&g, MultiIndex::d1(1)).unwrap();
        assert_eq!(derivative_path_of(&d), Some(DerivativePath::Analytic));
        assert_eq!(d.value(0.1, [0.0, 0.0]).unwrap().norm(), 0.0);
        let d2 = d.value(0.1, [0.7, 0.0]).unwrap().re;
        assert!((d2 + 0.7 * (-0.245f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn oscillation_derivatives() {
        let o = builtin_net("eps_oscillation", &params(), None).unwrap();
        let d = o.derivative_at(0.01, [0.02, 0.0], MultiIndex::d1(1)).unwrap().re;
        assert!((d - 100.0 * 2.0f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn tensor_jets_factor() {
        let g = builtin_net("gaussian", &params(), None).unwrap();
        let c = builtin_net("cauchy", &params(), None).unwrap();
        let t = tensor(&g, &c).unwrap();
        let x = [0.3, 0.2];
        let v = t.derivative_at(0.1, x, MultiIndex([1, 1])).unwrap();
        let expect = g.derivative_at(0.1, [0.3, 0.0], MultiIndex::d1(1)).unwrap()
            * c.derivative_at(0.1, [0.2, 0.0], MultiIndex::d1(1)).unwrap();
        assert!((v - expect).norm() < 1e-12);
    }
}
