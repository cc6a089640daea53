//! Scenario files: JSON descriptions of nets and the analyses to run on them.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{scale_exponent, EpsGrid, Policy};
use crate::embed::EmbedMethod;
use crate::error::{Error, Result};
use crate::gevrey::MollifierSpec;
use crate::grid::GridBox;
use crate::nets::equality::EqualityMode;
use crate::nets::BuiltinParams;
use crate::spectral::cone_partition;

fn default_dim() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_coeff() -> f64 {
    1.0
}

fn config(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { pointer: pointer.into(), message: message.into() }
}

/// Symmetric or general interval, used for every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsSpec {
    pub first: f64,
    pub last: f64,
    pub count: usize,
}

impl Default for EpsSpec {
    fn default() -> Self {
        Self { first: 1e-1, last: 1e-4, count: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollifierSettings {
    pub half_width: f64,
    pub n: usize,
}

impl Default for MollifierSettings {
    fn default() -> Self {
        let spec = MollifierSpec::default();
        Self { half_width: spec.half_width, n: spec.n }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub report: String,
    pub fits: String,
    pub spectra: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { report: "report.json".into(), fits: "fits.csv".into(), spectra: "spectra.csv".into() }
    }
}

/// One term of an embedded distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AtomSpec {
    Delta {
        #[serde(default)]
        order: usize,
        location: f64,
        #[serde(default = "default_coeff")]
        coeff: f64,
    },
    Jump {
        location: f64,
        #[serde(default = "default_coeff")]
        coeff: f64,
    },
    /// A density given by another net, sampled at `ε = 1`.
    Density { net: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetSpec {
    Builtin {
        id: String,
        name: String,
        #[serde(default)]
        params: BuiltinParams,
    },
    Embed {
        id: String,
        method: EmbedMethod,
        atoms: Vec<AtomSpec>,
        support: [f64; 2],
        /// Inner and outer radius of the cutoff used by `J`.
        #[serde(default)]
        cutoff: Option<[f64; 2]>,
    },
    Add { id: String, a: String, b: String },
    Sub { id: String, a: String, b: String },
    Mul { id: String, a: String, b: String },
    Scale {
        id: String,
        net: String,
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Derivative { id: String, net: String, alpha: Vec<usize> },
    Polynomial { id: String, net: String, coeffs: Vec<f64> },
    Tensor { id: String, a: String, b: String },
    /// Samples of `net` times seeded log-normal noise of relative size `rel`.
    Noisy { id: String, net: String, rel: f64 },
    /// Sampled net read from a binary array file, relative to the scenario.
    Array { id: String, path: String },
}

impl NetSpec {
    pub fn id(&self) -> &str {
        match self {
            NetSpec::Builtin { id, .. }
            | NetSpec::Embed { id, .. }
            | NetSpec::Add { id, .. }
            | NetSpec::Sub { id, .. }
            | NetSpec::Mul { id, .. }
            | NetSpec::Scale { id, .. }
            | NetSpec::Derivative { id, .. }
            | NetSpec::Polynomial { id, .. }
            | NetSpec::Tensor { id, .. }
            | NetSpec::Noisy { id, .. }
            | NetSpec::Array { id, .. } => id,
        }
    }

    /// `(field, id)` of every net this one is built from.
    pub fn references(&self) -> Vec<(&'static str, &str)> {
        match self {
            NetSpec::Builtin { .. } | NetSpec::Array { .. } => Vec::new(),
            NetSpec::Embed { atoms, .. } => atoms
                .iter()
                .filter_map(|a| match a {
                    AtomSpec::Density { net } => Some(("atoms", net.as_str())),
                    _ => None,
                })
                .collect(),
            NetSpec::Add { a, b, .. } | NetSpec::Sub { a, b, .. } | NetSpec::Mul { a, b, .. } | NetSpec::Tensor { a, b, .. } => {
                vec![("a", a.as_str()), ("b", b.as_str())]
            }
            NetSpec::Scale { net, .. } | NetSpec::Derivative { net, .. } | NetSpec::Polynomial { net, .. } | NetSpec::Noisy { net, .. } => {
                vec![("net", net.as_str())]
            }
        }
    }

    pub fn needs_mollifier(&self) -> bool {
        match self {
            NetSpec::Builtin { name, .. } => matches!(name.as_str(), "mollified_delta" | "mollified_heaviside" | "cutoff_mollifier"),
            NetSpec::Embed { .. } => true,
            _ => false,
        }
    }
}

/// Probe points, listed or as an evenly spaced lattice (tensorized in two dimensions).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Probes {
    Points(Vec<Vec<f64>>),
    Lattice { from: f64, to: f64, count: usize },
}

impl Probes {
    pub fn points(&self, dim: usize) -> Vec<[f64; 2]> {
        match self {
            Probes::Points(p) => p.iter().map(|v| [v.first().copied().unwrap_or(0.0), v.get(1).copied().unwrap_or(0.0)]).collect(),
            Probes::Lattice { from, to, count } => {
                let line: Vec<f64> = (0..*count)
                    .map(|i| if *count == 1 { *from } else { from + (to - from) * i as f64 / (*count - 1) as f64 })
                    .collect();
                if dim == 1 {
                    line.iter().map(|&x| [x, 0.0]).collect()
                } else {
                    line.iter().flat_map(|&x| line.iter().map(move |&y| [x, y])).collect()
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub r_inner: f64,
    pub r_outer: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub alpha: Vec<usize>,
    pub net: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointSpec {
    Constant { x: Vec<f64> },
    Scaled { x_star: Vec<f64> },
    Argmax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisSpec {
    Classify {
        net: String,
        #[serde(default)]
        max_order: usize,
        #[serde(default = "default_true")]
        full: bool,
    },
    Regularity { net: String },
    SigmaCone { net: String },
    SingSupport { net: String, probes: Probes },
    WaveFront { net: String, probes: Probes },
    ProductCheck { f: String, g: String, probes: Probes },
    PdoCheck { net: String, coefficients: Vec<CoefficientSpec>, probes: Probes },
    Equality {
        f: String,
        g: String,
        mode: EqualityMode,
        #[serde(default)]
        tests: Vec<BumpSpec>,
        #[serde(default)]
        max_order: usize,
        #[serde(default)]
        assoc_tol: Option<f64>,
    },
    PointValue { net: String, point: PointSpec },
}

impl AnalysisSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            AnalysisSpec::Classify { .. } => "classify",
            AnalysisSpec::Regularity { .. } => "regularity",
            AnalysisSpec::SigmaCone { .. } => "sigma_cone",
            AnalysisSpec::SingSupport { .. } => "sing_support",
            AnalysisSpec::WaveFront { .. } => "wave_front",
            AnalysisSpec::ProductCheck { .. } => "product_check",
            AnalysisSpec::PdoCheck { .. } => "pdo_check",
            AnalysisSpec::Equality { .. } => "equality",
            AnalysisSpec::PointValue { .. } => "point_value",
        }
    }

    fn references(&self) -> Vec<(String, &str)> {
        match self {
            AnalysisSpec::Classify { net, .. }
            | AnalysisSpec::Regularity { net }
            | AnalysisSpec::SigmaCone { net }
            | AnalysisSpec::SingSupport { net, .. }
            | AnalysisSpec::WaveFront { net, .. }
            | AnalysisSpec::PointValue { net, .. } => vec![("net".into(), net.as_str())],
            AnalysisSpec::ProductCheck { f, g, .. } | AnalysisSpec::Equality { f, g, .. } => {
                vec![("f".into(), f.as_str()), ("g".into(), g.as_str())]
            }
            AnalysisSpec::PdoCheck { net, coefficients, .. } => {
                let mut r = vec![("net".to_string(), net.as_str())];
                r.extend(coefficients.iter().enumerate().map(|(i, c)| (format!("coefficients/{i}/net"), c.net.as_str())));
                r
            }
        }
    }

    fn probes(&self) -> Option<&Probes> {
        match self {
            AnalysisSpec::SingSupport { probes, .. }
            | AnalysisSpec::WaveFront { probes, .. }
            | AnalysisSpec::ProductCheck { probes, .. }
            | AnalysisSpec::PdoCheck { probes, .. } => Some(probes),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub sigma: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(rename = "box")]
    pub domain: BoxSpec,
    #[serde(default)]
    pub eps_grid: EpsSpec,
    #[serde(default)]
    pub mollifier: MollifierSettings,
    /// Direction bins in two dimensions; one dimension always uses `±`.
    #[serde(default)]
    pub bins: Option<usize>,
    pub nets: Vec<NetSpec>,
    #[serde(default)]
    pub analyses: Vec<AnalysisSpec>,
    #[serde(default)]
    pub policies: Policy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Scenario {
    /// Parses and validates; syntax errors point at a line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)
            .map_err(|e| config(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn grid(&self) -> Result<GridBox> {
        let b = &self.domain;
        match self.dim {
            1 => GridBox::line(b.lo, b.hi, b.n),
            _ => GridBox::square(b.lo, b.hi, b.n),
        }
    }

    pub fn eps(&self) -> Result<EpsGrid> {
        EpsGrid::spanning(self.eps_grid.first, self.eps_grid.last, self.eps_grid.count)
    }

    pub fn bin_count(&self) -> usize {
        if self.dim == 1 {
            2
        } else {
            self.bins.unwrap_or(16)
        }
    }

    pub fn mollifier_spec(&self) -> MollifierSpec {
        MollifierSpec::new(self.sigma, self.mollifier.half_width, self.mollifier.n)
    }

    pub fn validate(&self) -> Result<()> {
        scale_exponent(self.sigma).map_err(|e| config("/sigma", e.to_string()))?;
        if !matches!(self.dim, 1 | 2) {
            return Err(config("/dim", "dimension must be 1 or 2"));
        }
        self.grid().map_err(|e| config("/box", e.to_string()))?;
        if self.domain.n < 16 {
            return Err(config("/box/n", "at least 16 points per axis"));
        }
        self.eps().map_err(|e| config("/eps_grid", e.to_string()))?;
        cone_partition(self.dim, self.bin_count()).map_err(|e| config("/bins", e.to_string()))?;
        if self.mollifier.half_width <= 0.0 || self.mollifier.n < 64 {
            return Err(config("/mollifier", "half_width must be positive and n at least 64"));
        }
        let p = &self.policies;
        if p.tail_points < 2 || p.k_cap <= 0.0 || p.r_max <= 0.0 || p.k_min < 0.0 || p.k2_min < 0.0 {
            return Err(config("/policies", "thresholds must be positive and tail_points at least 2"));
        }

        let mut known = BTreeSet::new();
        for (i, net) in self.nets.iter().enumerate() {
            let at = format!("/nets/{i}");
            if net.id().is_empty() {
                return Err(config(format!("{at}/id"), "empty net id"));
            }
            for (field, r) in net.references() {
                if !known.contains(r) {
                    return Err(config(format!("{at}/{field}"), format!("unknown net `{r}` (nets must be defined before use)")));
                }
            }
            match net {
                NetSpec::Derivative { alpha, .. } if alpha.len() != self.dim || alpha.iter().sum::<usize>() == 0 => {
                    return Err(config(format!("{at}/alpha"), "multi-index must match the dimension and be nonzero"));
                }
                NetSpec::Embed { support, cutoff, method, .. } => {
                    if !(support[0] < support[1]) {
                        return Err(config(format!("{at}/support"), "support must be an interval lo < hi"));
                    }
                    if cutoff.is_some_and(|c| !(0.0 < c[0] && c[0] < c[1])) {
                        return Err(config(format!("{at}/cutoff"), "need 0 < r_inner < r_outer"));
                    }
                    if *method == EmbedMethod::J0 && cutoff.is_some() {
                        return Err(config(format!("{at}/cutoff"), "cutoff applies to method J only"));
                    }
                }
                NetSpec::Noisy { rel, .. } if !(*rel >= 0.0 && rel.is_finite()) => {
                    return Err(config(format!("{at}/rel"), "noise level must be finite and nonnegative"));
                }
                _ => {}
            }
            if !known.insert(net.id()) {
                return Err(config(format!("{at}/id"), format!("duplicate net id `{}`", net.id())));
            }
        }

        for (i, a) in self.analyses.iter().enumerate() {
            let at = format!("/analyses/{i}");
            for (field, r) in a.references() {
                if !known.contains(r) {
                    return Err(config(format!("{at}/{field}"), format!("unknown net `{r}`")));
                }
            }
            if let Some(probes) = a.probes() {
                let ok = match probes {
                    Probes::Points(p) => !p.is_empty() && p.iter().all(|v| v.len() == self.dim),
                    Probes::Lattice { from, to, count } => *count > 0 && from <= to,
                };
                if !ok {
                    return Err(config(format!("{at}/probes"), format!("probes must be nonempty points of dimension {}", self.dim)));
                }
            }
            match a {
                AnalysisSpec::Classify { max_order, .. } if *max_order > 6 => {
                    return Err(config(format!("{at}/max_order"), "orders above 6 are not supported"));
                }
                AnalysisSpec::Equality { mode, tests, .. } => {
                    if let EqualityMode::TSense { t } = mode {
                        if !(self.sigma..=3.0 * self.sigma - 1.0).contains(t) {
                            return Err(config(format!("{at}/mode/t"), "t must lie in [sigma, 3 sigma - 1]"));
                        }
                    }
                    if *mode != EqualityMode::Strong && tests.is_empty() {
                        return Err(config(format!("{at}/tests"), "pairing modes need at least one test function"));
                    }
                    for (j, t) in tests.iter().enumerate() {
                        if t.center.len() != self.dim || !(0.0 < t.r_inner && t.r_inner < t.r_outer) {
                            return Err(config(format!("{at}/tests/{j}"), "bad test function"));
                        }
                    }
                }
                AnalysisSpec::PdoCheck { coefficients, .. } => {
                    if coefficients.is_empty() {
                        return Err(config(format!("{at}/coefficients"), "operator has no terms"));
                    }
                    for (j, c) in coefficients.iter().enumerate() {
                        if c.alpha.len() != self.dim {
                            return Err(config(format!("{at}/coefficients/{j}/alpha"), "multi-index must match the dimension"));
                        }
                    }
                }
                AnalysisSpec::PointValue { point, .. } => {
                    let bad = match point {
                        PointSpec::Constant { x } => x.len() != self.dim,
                        PointSpec::Scaled { x_star } => x_star.len() != self.dim,
                        PointSpec::Argmax => false,
                    };
                    if bad {
                        return Err(config(format!("{at}/point"), "point must match the dimension"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"sigma": 2, "box": {"lo": -1, "hi": 1, "n": 256}, "nets": []}"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.dim, 1);
        assert_eq!(s.eps().unwrap(), EpsGrid::standard());
        assert_eq!(s.bin_count(), 2);
        assert!(s.analyses.is_empty());
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let err = Scenario::from_json("{\n  \"sigma\": 2,\n  oops\n}").unwrap_err();
        match err {
            Error::Config { pointer, .. } => assert!(pointer.starts_with("line 3"), "{pointer}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn dangling_references_point_at_the_field() {
        let text = r#"{"sigma": 2, "box": {"lo": -1, "hi": 1, "n": 256},
            "nets": [{"kind": "builtin", "id": "a", "name": "gaussian"}, {"kind": "mul", "id": "b", "a": "a", "b": "c"}]}"#;
        match Scenario::from_json(text).unwrap_err() {
            Error::Config { pointer, .. } => assert_eq!(pointer, "/nets/1/b"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn t_outside_range_is_rejected() {
        let text = r#"{"sigma": 2, "box": {"lo": -1, "hi": 1, "n": 256},
            "nets": [{"kind": "builtin", "id": "a", "name": "gaussian"}],
            "analyses": [{"kind": "equality", "f": "a", "g": "a", "mode": {"kind": "t_sense", "t": 9},
                          "tests": [{"center": [0], "r_inner": 0.1, "r_outer": 0.2}]}]}"#;
        match Scenario::from_json(text).unwrap_err() {
            Error::Config { pointer, .. } => assert_eq!(pointer, "/analyses/0/mode/t"),
            e => panic!("{e}"),
        }
    }
}
