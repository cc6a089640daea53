//! Executes a scenario and assembles its report and tables.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{classify_function_net, scale_exponent, Classification, EpsGrid, ScaleModel};
use crate::embed::{embed_compact_net, embed_cutoff_net, Atom, DistributionExpr, EmbedContext, EmbedMethod, Samples1d};
use crate::error::{Error, Result};
use crate::fourier::C64;
use crate::gevrey::{build_mollifier, CutoffProfile, Mollifier};
use crate::grid::{GridBox, MultiIndex, Region};
use crate::io::{write_csv, FitRow, SpectralRow};
use crate::microlocal::{
    pdo_wavefront_check, product_wavefront_check, regularity_test, sigma_cone, sing_support, wave_front, MicrolocalContext,
};
use crate::nets::equality::{equality_test, EqualityContext, EqualityMode, TestFunction};
use crate::nets::points::{argmax_path, point_value, GenPoint};
use crate::nets::{self, Net, SampledNet};
use crate::scenario::{AnalysisSpec, AtomSpec, NetSpec, PointSpec, Scenario};
use crate::spectral::{cone_partition, spectrum_of_field, SampledField, SpectralProfile, Window};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetRecord {
    pub id: String,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisRecord {
    pub index: usize,
    pub kind: String,
    pub ok: bool,
    pub error: Option<String>,
    pub result: Option<Value>,
}

/// Deterministic run report; contains no timings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub scenario: Scenario,
    pub nets: Vec<NetRecord>,
    pub analyses: Vec<AnalysisRecord>,
    /// `"nets/<id>"` or `"analyses/<index>"` for every failed item.
    pub failures: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub fits: Vec<FitRow>,
    pub spectra: Vec<SpectralRow>,
}

impl RunOutput {
    pub fn report_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.report)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes the report and both tables under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let out = &self.report.scenario.output;
        std::fs::write(dir.join(&out.report), self.report_json()?)?;
        write_csv(&self.fits, std::fs::File::create(dir.join(&out.fits))?)?;
        write_csv(&self.spectra, std::fs::File::create(dir.join(&out.spectra))?)?;
        Ok(())
    }
}

struct Workspace<'a> {
    scenario: &'a Scenario,
    base_dir: PathBuf,
    grid: GridBox,
    eps: EpsGrid,
    model: ScaleModel,
    moll: Option<std::result::Result<Arc<Mollifier>, String>>,
    nets: HashMap<String, std::result::Result<Net, String>>,
    fits: Vec<FitRow>,
    spectra: Vec<SpectralRow>,
}

fn multi_index(alpha: &[usize]) -> MultiIndex {
    MultiIndex([alpha[0], alpha.get(1).copied().unwrap_or(0)])
}

fn point_label(x: [f64; 2], dim: usize) -> String {
    x[..dim].iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Per `(ε, shell)` maxima of each bin as table rows.
fn shell_rows(net_id: &str, x0: &str, profiles: &[SpectralProfile]) -> Vec<SpectralRow> {
    let mut rows = Vec::new();
    for p in profiles {
        let mut best: BTreeMap<(usize, usize), (f64, f64, bool)> = BTreeMap::new();
        let mut eps_rank: Vec<f64> = Vec::new();
        for s in &p.samples {
            let k = eps_rank.iter().position(|&e| e == s.eps).unwrap_or_else(|| {
                eps_rank.push(s.eps);
                eps_rank.len() - 1
            });
            let slot = best.entry((k, s.shell)).or_insert((s.eps, s.magnitude, s.saturated));
            if s.magnitude > slot.1 {
                *slot = (s.eps, s.magnitude, s.saturated);
            }
        }
        rows.extend(best.into_iter().map(|((_, shell), (eps, magnitude, saturated))| SpectralRow {
            net_id: net_id.to_string(),
            x0: x0.to_string(),
            bin: p.bin,
            eps,
            xi_shell: shell,
            magnitude,
            saturated,
        }));
    }
    rows
}

impl Workspace<'_> {
    fn mollifier(&mut self) -> Result<Arc<Mollifier>> {
        let spec = self.scenario.mollifier_spec();
        let m = self
            .moll
            .get_or_insert_with(|| build_mollifier(&spec).map(Arc::new).map_err(|e| e.to_string()));
        m.clone().map_err(|e| Error::Domain(format!("mollifier unavailable: {e}")))
    }

    /// A net at the scenario's dimension.
    fn net(&self, id: &str) -> Result<Net> {
        let net = self.factor(id)?;
        if net.dim() != self.scenario.dim {
            return Err(Error::DimMismatch { left: net.dim(), right: self.scenario.dim });
        }
        Ok(net)
    }

    /// A net of any dimension; 1D nets in a 2D scenario only feed tensor products.
    fn factor(&self, id: &str) -> Result<Net> {
        match self.nets.get(id) {
            Some(Ok(n)) => Ok(n.clone()),
            Some(Err(e)) => Err(Error::Domain(format!("net `{id}` failed to build: {e}"))),
            None => Err(Error::Domain(format!("unknown net `{id}`"))),
        }
    }

    fn embed_ctx(&self) -> EmbedContext {
        EmbedContext {
            grid: self.grid.clone(),
            eps: self.eps.clone(),
            model: self.model,
            policy: self.scenario.policies.clone(),
            max_order: 2,
        }
    }

    fn micro_ctx(&self) -> Result<MicrolocalContext> {
        let partition = cone_partition(self.scenario.dim, self.scenario.bin_count())?;
        Ok(MicrolocalContext::new(self.grid.clone(), &self.eps, self.scenario.sigma, partition)?
            .with_policy(self.scenario.policies.clone()))
    }

    fn build(&mut self, index: usize, spec: &NetSpec) -> Result<Net> {
        let net = match spec {
            NetSpec::Builtin { name, params, .. } => {
                let mut params = params.clone();
                params.sigma.get_or_insert(self.scenario.sigma);
                params.dim.get_or_insert(self.scenario.dim);
                let moll = if spec.needs_mollifier() { Some(self.mollifier()?) } else { None };
                nets::builtin_net(name, &params, moll.as_ref())?
            }
            NetSpec::Embed { method, atoms, support, cutoff, .. } => {
                if self.scenario.dim != 1 {
                    return Err(Error::DimMismatch { left: 1, right: self.scenario.dim });
                }
                let mut list = Vec::with_capacity(atoms.len());
                for a in atoms {
                    list.push(match a {
                        AtomSpec::Delta { order, location, coeff } => {
                            Atom::DeltaDeriv { order: *order, location: *location, coeff: *coeff }
                        }
                        AtomSpec::Jump { location, coeff } => Atom::Jump { location: *location, coeff: *coeff },
                        AtomSpec::Density { net } => Atom::Density(Samples1d::from_net(&self.net(net)?, &self.grid)?),
                    });
                }
                let t = DistributionExpr::new(list, Region::interval(support[0], support[1]));
                t.validate(self.scenario.sigma)?;
                let moll = self.mollifier()?;
                let ctx = self.embed_ctx();
                match method {
                    EmbedMethod::J0 => embed_compact_net(&t, &moll, &ctx)?,
                    EmbedMethod::J => {
                        let [r_in, r_out] = cutoff.unwrap_or([1.0, 2.0]);
                        embed_cutoff_net(&t, &moll, &CutoffProfile::new(self.scenario.sigma, r_in, r_out)?, &ctx)?
                    }
                }
            }
            NetSpec::Add { a, b, .. } => nets::add(&self.net(a)?, &self.net(b)?)?,
            NetSpec::Sub { a, b, .. } => nets::sub(&self.net(a)?, &self.net(b)?)?,
            NetSpec::Mul { a, b, .. } => nets::mul(&self.net(a)?, &self.net(b)?)?,
            NetSpec::Scale { net, re, im, .. } => nets::scale(&self.net(net)?, C64::new(*re, *im)),
            NetSpec::Derivative { net, alpha, .. } => nets::derivative(&self.net(net)?, multi_index(alpha))?,
            NetSpec::Polynomial { net, coeffs, .. } => {
                let c: Vec<C64> = coeffs.iter().map(|&v| C64::new(v, 0.0)).collect();
                nets::compose_polynomial(&self.net(net)?, &c)?
            }
            NetSpec::Tensor { a, b, .. } => nets::tensor(&self.factor(a)?, &self.factor(b)?)?,
            NetSpec::Noisy { net, rel, .. } => {
                let base = self.net(net)?;
                let mut data = base.sample_all(self.eps.values(), &self.grid)?;
                if *rel > 0.0 {
                    let noise = LogNormal::new(0.0, *rel).map_err(|e| Error::Domain(e.to_string()))?;
                    let mut rng = ChaCha8Rng::seed_from_u64(self.scenario.seed.wrapping_add(index as u64));
                    for v in data.iter_mut().flatten() {
                        *v *= noise.sample(&mut rng);
                    }
                }
                Net::sampled(spec.id(), SampledNet::new(self.grid.clone(), self.eps.values().to_vec(), data)?)
            }
            NetSpec::Array { path, .. } => {
                let s = crate::io::load_array(&self.base_dir.join(path))?;
                if s.grid.dim() != self.scenario.dim {
                    return Err(Error::DimMismatch { left: s.grid.dim(), right: self.scenario.dim });
                }
                Net::sampled(spec.id(), s)
            }
        };
        if net.dim() > self.scenario.dim {
            return Err(Error::DimMismatch { left: net.dim(), right: self.scenario.dim });
        }
        Ok(net.with_id(spec.id()))
    }

    fn record_fits(&mut self, net_id: &str, c: &Classification) {
        let sigma = self.scenario.sigma;
        self.fits
            .extend(c.per_alpha.iter().map(|(alpha, fit)| FitRow::new(net_id, alpha.label(), sigma, fit)));
    }

    fn analyse(&mut self, a: &AnalysisSpec) -> Result<Value> {
        let dim = self.scenario.dim;
        let policy = self.scenario.policies.clone();
        Ok(match a {
            AnalysisSpec::Classify { net, max_order, full } => {
                let f = self.net(net)?;
                let c = classify_function_net(&f, &self.grid, &self.eps, *max_order, &self.model, &policy, *full)?;
                self.record_fits(net, &c);
                serde_json::to_value(&c)?
            }
            AnalysisSpec::Regularity { net } => {
                let f = self.net(net)?;
                let ctx = self.micro_ctx()?;
                let v = regularity_test(&f, &ctx)?;
                let field = SampledField::new(&f, &ctx.grid, &ctx.eps)?;
                let rows = shell_rows(net, "global", &spectrum_of_field(&field, None, &ctx.partition)?);
                self.spectra.extend(rows);
                json!({ "k2_threshold": ctx.k2_threshold, "verdict": v })
            }
            AnalysisSpec::SigmaCone { net } => {
                let ctx = self.micro_ctx()?;
                let bins = sigma_cone(&self.net(net)?, &ctx)?;
                let labels: Vec<String> = bins.iter().map(|&b| ctx.partition.label(b)).collect();
                json!({ "bins": bins, "labels": labels })
            }
            AnalysisSpec::SingSupport { net, probes } => {
                let ctx = self.micro_ctx()?;
                let pts = probes.points(dim);
                let idx = sing_support(&self.net(net)?, &pts, &ctx)?;
                let points: Vec<Value> = idx.iter().map(|&i| json!({ "x_index": i, "x": &pts[i][..dim] })).collect();
                json!({ "points": points })
            }
            AnalysisSpec::WaveFront { net, probes } => {
                let f = self.net(net)?;
                let ctx = self.micro_ctx()?;
                let pts = probes.points(dim);
                let wf = wave_front(&f, &pts, &ctx)?;
                let field = SampledField::new(&f, &ctx.grid, &ctx.eps)?;
                for p in &pts {
                    let w = Window::new(ctx.model.sigma(), *p, ctx.window_radius)?;
                    let rows = shell_rows(net, &point_label(*p, dim), &spectrum_of_field(&field, Some(&w), &ctx.partition)?);
                    self.spectra.extend(rows);
                }
                json!({ "k2_threshold": ctx.k2_threshold, "entries": wf })
            }
            AnalysisSpec::ProductCheck { f, g, probes } => {
                let ctx = self.micro_ctx()?;
                serde_json::to_value(product_wavefront_check(&self.net(f)?, &self.net(g)?, &probes.points(dim), &ctx)?)?
            }
            AnalysisSpec::PdoCheck { net, coefficients, probes } => {
                let ctx = self.micro_ctx()?;
                let coeffs = coefficients
                    .iter()
                    .map(|c| Ok((multi_index(&c.alpha), self.net(&c.net)?)))
                    .collect::<Result<Vec<_>>>()?;
                serde_json::to_value(pdo_wavefront_check(&self.net(net)?, &coeffs, &probes.points(dim), &ctx)?)?
            }
            AnalysisSpec::Equality { f, g, mode, tests, max_order, assoc_tol } => {
                let ctx = EqualityContext {
                    grid: self.grid.clone(),
                    eps: self.eps.clone(),
                    sigma: self.scenario.sigma,
                    policy,
                    max_order: *max_order,
                    assoc_tol: assoc_tol.unwrap_or(1e-6),
                };
                let tf = tests
                    .iter()
                    .map(|t| {
                        let c = [t.center[0], t.center.get(1).copied().unwrap_or(0.0)];
                        TestFunction::bump(self.scenario.sigma, c, t.r_inner, t.r_outer, &self.grid)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let v = equality_test(&self.net(f)?, &self.net(g)?, *mode, &tf, &ctx)?;
                if let (EqualityMode::Strong, Some(c)) = (mode, &v.strong) {
                    self.record_fits(&format!("{f}-{g}"), c);
                }
                serde_json::to_value(&v)?
            }
            AnalysisSpec::PointValue { net, point } => {
                let f = self.net(net)?;
                let x = match point {
                    PointSpec::Constant { x } => GenPoint::constant(dim, [x[0], x.get(1).copied().unwrap_or(0.0)], &self.eps),
                    PointSpec::Scaled { x_star } => {
                        GenPoint::scaled(dim, [x_star[0], x_star.get(1).copied().unwrap_or(0.0)], &self.eps)
                    }
                    PointSpec::Argmax => argmax_path(&f, &self.grid, &self.eps)?,
                };
                let v = point_value(&f, &x, &self.model, &policy)?;
                self.record_fits(net, &v.classification);
                json!({ "point": x, "value": v })
            }
        })
    }
}

/// Builds every net and runs every analysis; failures are recorded, not propagated.
/// `base_dir` resolves relative array paths.
pub fn run_scenario(scenario: &Scenario, base_dir: &Path) -> Result<RunOutput> {
    scenario.validate()?;
    let mut ws = Workspace {
        scenario,
        base_dir: base_dir.to_path_buf(),
        grid: scenario.grid()?,
        eps: scenario.eps()?,
        model: scale_exponent(scenario.sigma)?,
        moll: None,
        nets: HashMap::new(),
        fits: Vec::new(),
        spectra: Vec::new(),
    };
    let mut failures = Vec::new();
    let mut net_records = Vec::with_capacity(scenario.nets.len());
    for (i, spec) in scenario.nets.iter().enumerate() {
        let built = ws.build(i, spec).map_err(|e| e.to_string());
        net_records.push(NetRecord { id: spec.id().to_string(), ok: built.is_ok(), error: built.as_ref().err().cloned() });
        if built.is_err() {
            failures.push(format!("nets/{}", spec.id()));
        }
        ws.nets.insert(spec.id().to_string(), built);
    }
    let mut analyses = Vec::with_capacity(scenario.analyses.len());
    for (i, a) in scenario.analyses.iter().enumerate() {
        let r = ws.analyse(a);
        if r.is_err() {
            failures.push(format!("analyses/{i}"));
        }
        analyses.push(AnalysisRecord {
            index: i,
            kind: a.kind().to_string(),
            ok: r.is_ok(),
            error: r.as_ref().err().map(|e| e.to_string()),
            result: r.ok(),
        });
    }
    let report = Report {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: scenario.clone(),
        nets: net_records,
        analyses,
        failures,
    };
    Ok(RunOutput { report, fits: ws.fits, spectra: ws.spectra })
}
