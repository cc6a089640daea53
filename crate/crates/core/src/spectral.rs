//! Windowed spectra, cone partitions of frequency space and per-direction
//! decay profiles.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::UNDERFLOW;
use crate::error::{Error, Result};
use crate::fourier::{forward, freq_of, C64};
use crate::gevrey::CutoffProfile;
use crate::grid::GridBox;
use crate::nets::Net;

/// Lowest analysed frequency, in dual-grid steps.
pub const XI_MIN_STEPS: f64 = 4.0;
/// Fraction of the Nyquist frequency above which spectra are discarded.
pub const XI_TOP_FRAC: f64 = 0.8;
/// Magnitudes below this multiple of `Δx Σ|w f|` are transform roundoff.
pub const ROUNDOFF_REL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionBin {
    pub id: usize,
    /// Half-open angular interval `[lo, hi)` in radians; in one dimension `0` is `+` and `π` is `-`.
    pub theta_lo: f64,
    pub theta_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConePartition {
    pub dim: usize,
    pub bins: Vec<DirectionBin>,
}

pub fn cone_partition(dim: usize, bin_count: usize) -> Result<ConePartition> {
    let ok = match dim {
        1 => bin_count == 2,
        2 => matches!(bin_count, 8 | 16 | 32),
        _ => false,
    };
    if !ok {
        return Err(Error::BadBinCount { dim, count: bin_count });
    }
    let bins = if dim == 1 {
        vec![
            DirectionBin { id: 0, theta_lo: 0.0, theta_hi: 0.0 },
            DirectionBin { id: 1, theta_lo: PI, theta_hi: PI },
        ]
    } else {
        let w = TAU / bin_count as f64;
        (0..bin_count)
            .map(|id| DirectionBin { id, theta_lo: id as f64 * w, theta_hi: (id + 1) as f64 * w })
            .collect()
    };
    Ok(ConePartition { dim, bins })
}

impl ConePartition {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Bin of a nonzero direction.
    pub fn bin_of(&self, xi: [f64; 2]) -> usize {
        if self.dim == 1 {
            return usize::from(xi[0] < 0.0);
        }
        let theta = xi[1].atan2(xi[0]).rem_euclid(TAU);
        let n = self.bins.len();
        ((theta / TAU * n as f64).floor() as usize).min(n - 1)
    }

    /// Circular distance between bins.
    pub fn bin_distance(&self, a: usize, b: usize) -> usize {
        let n = self.bins.len();
        let d = a.abs_diff(b) % n;
        d.min(n - d)
    }

    pub fn label(&self, bin: usize) -> String {
        if self.dim == 1 {
            return if bin == 0 { "+".into() } else { "-".into() };
        }
        let b = &self.bins[bin];
        format!("[{:.1},{:.1})", b.theta_lo.to_degrees(), b.theta_hi.to_degrees())
    }
}

/// Gevrey cutoff window centred at `center`; tensor product of radial profiles in two dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: [f64; 2],
    pub profile: CutoffProfile,
}

impl Window {
    pub fn new(sigma: f64, center: [f64; 2], r_outer: f64) -> Result<Self> {
        Ok(Self { center, profile: CutoffProfile::new(sigma, 0.5 * r_outer, r_outer)? })
    }

    pub fn value(&self, x: [f64; 2], dim: usize) -> f64 {
        (0..dim).map(|d| self.profile.value(x[d] - self.center[d])).product()
    }

    /// Errors unless the window support lies inside the grid box.
    pub fn check_inside(&self, grid: &GridBox) -> Result<()> {
        for (d, a) in grid.axes.iter().enumerate() {
            let (lo, hi) = (self.center[d] - self.profile.r_outer, self.center[d] + self.profile.r_outer);
            if lo < a.lo || hi > a.coord(a.n - 1) {
                return Err(Error::Geometry(format!("window [{lo}, {hi}] leaves the box on axis {d}")));
            }
        }
        Ok(())
    }
}

/// Samples of a net on a grid for several ε, shared between analyses.
#[derive(Clone, Debug)]
pub struct SampledField {
    pub grid: GridBox,
    pub eps: Vec<f64>,
    pub data: Vec<Vec<C64>>,
}

impl SampledField {
    pub fn new(f: &Net, grid: &GridBox, eps: &[f64]) -> Result<Self> {
        Ok(Self { grid: grid.clone(), eps: eps.to_vec(), data: f.sample_all(eps, grid)? })
    }

    pub fn from_data(grid: GridBox, eps: Vec<f64>, data: Vec<Vec<C64>>) -> Self {
        Self { grid, eps, data }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub eps: f64,
    pub xi: f64,
    pub shell: usize,
    pub magnitude: f64,
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub bin: usize,
    pub window_center: Option<[f64; 2]>,
    pub window_radius: Option<f64>,
    pub samples: Vec<SpectralSample>,
}

/// Geometric shell edges with ratio `√2` from `ξ_min` to `0.8 ξ_max`.
pub fn shell_edges(grid: &GridBox) -> Vec<f64> {
    let lo = XI_MIN_STEPS * grid.dxi();
    let top = XI_TOP_FRAC * grid.axes.iter().map(|a| a.xi_max()).fold(f64::INFINITY, f64::min);
    let mut edges = vec![lo];
    while edges.last().unwrap() * 2f64.sqrt() < top {
        let next = edges.last().unwrap() * 2f64.sqrt();
        edges.push(next);
    }
    edges.push(top);
    edges
}

fn shell_of(edges: &[f64], r: f64) -> Option<usize> {
    if r < edges[0] || r >= *edges.last().unwrap() {
        return None;
    }
    Some(edges.partition_point(|&e| e <= r) - 1)
}

/// Spectra of `w·f_ε` (or of `f_ε` without a window) grouped by direction bin.
pub fn spectrum_of_field(field: &SampledField, window: Option<&Window>, partition: &ConePartition) -> Result<Vec<SpectralProfile>> {
    let grid = &field.grid;
    if partition.dim != grid.dim() {
        return Err(Error::DimMismatch { left: partition.dim, right: grid.dim() });
    }
    let weights: Option<Vec<f64>> = match window {
        Some(w) => {
            w.check_inside(grid)?;
            Some(grid.points().iter().map(|p| w.value(*p, grid.dim())).collect())
        }
        None => None,
    };
    let edges = shell_edges(grid);
    let per_eps: Vec<Vec<(usize, SpectralSample)>> = field
        .eps
        .par_iter()
        .zip(&field.data)
        .map(|(&e, data)| {
            let windowed: Vec<C64> = match &weights {
                Some(w) => data.iter().zip(w).map(|(v, w)| v * *w).collect(),
                None => data.clone(),
            };
            let floor = (ROUNDOFF_REL * grid.cell_volume() * windowed.iter().map(|v| v.norm()).sum::<f64>()).max(UNDERFLOW);
            let spec = forward(&windowed, grid);
            let mut out = Vec::new();
            for (idx, v) in spec.iter().enumerate() {
                let xi = freq_of(grid, idx);
                let r = xi[0].hypot(xi[1]);
                if let Some(shell) = shell_of(&edges, r) {
                    let magnitude = v.norm();
                    out.push((
                        partition.bin_of(xi),
                        SpectralSample { eps: e, xi: r, shell, magnitude, saturated: magnitude <= floor },
                    ));
                }
            }
            out
        })
        .collect();
    let mut profiles: Vec<SpectralProfile> = (0..partition.len())
        .map(|bin| SpectralProfile {
            bin,
            window_center: window.map(|w| w.center),
            window_radius: window.map(|w| w.profile.r_outer),
            samples: Vec::new(),
        })
        .collect();
    for samples in per_eps {
        for (bin, s) in samples {
            profiles[bin].samples.push(s);
        }
    }
    Ok(profiles)
}

/// Windowed spectrum of `f` for each ε.
pub fn windowed_spectrum(f: &Net, window: &Window, grid: &GridBox, eps: &[f64], partition: &ConePartition) -> Result<Vec<SpectralProfile>> {
    window.check_inside(grid)?;
    spectrum_of_field(&SampledField::new(f, grid, eps)?, Some(window), partition)
}

/// Per `(ε, shell)` maximum over the directions of one bin, as `(ε, |ξ|, magnitude)`.
/// Saturated maxima are dropped.
pub fn directional_profile(profiles: &[SpectralProfile], bin: usize) -> Result<Vec<(f64, f64, f64)>> {
    let p = profiles.iter().find(|p| p.bin == bin).ok_or(Error::EmptyBin(bin))?;
    if p.samples.is_empty() {
        return Err(Error::EmptyBin(bin));
    }
    let mut best: BTreeMap<(usize, usize), SpectralSample> = BTreeMap::new();
    let mut eps_order: Vec<f64> = Vec::new();
    for s in &p.samples {
        let ei = match eps_order.iter().position(|&e| e == s.eps) {
            Some(i) => i,
            None => {
                eps_order.push(s.eps);
                eps_order.len() - 1
            }
        };
        best.entry((ei, s.shell))
            .and_modify(|b| {
                if s.magnitude > b.magnitude {
                    *b = *s;
                }
            })
            .or_insert(*s);
    }
    Ok(best.values().filter(|s| !s.saturated).map(|s| (s.eps, s.xi, s.magnitude)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{add, builtin_net, BuiltinParams};

    #[test]
    fn partitions() {
        let p = cone_partition(1, 2).unwrap();
        assert_eq!(p.bin_of([3.0, 0.0]), 0);
        assert_eq!(p.bin_of([-3.0, 0.0]), 1);
        let p = cone_partition(2, 8).unwrap();
        assert!((p.bins[1].theta_lo.to_degrees() - 45.0).abs() < 1e-12);
        assert_eq!(p.bin_of([1.0, 1.0]), 1);
        assert_eq!(p.bin_of([1.0, -1e-9]), 7);
        assert!(cone_partition(2, 12).is_err());
        assert!(cone_partition(1, 8).is_err());
    }

    #[test]
    fn shells_are_geometric() {
        let g = GridBox::line(-1.0, 1.0, 4096).unwrap();
        let e = shell_edges(&g);
        assert!((e[1] / e[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!((e.last().unwrap() - 0.8 * g.axes[0].xi_max()).abs() < 1e-9);
    }

    #[test]
    fn zero_net_has_zero_spectrum() {
        let g = GridBox::line(-1.0, 1.0, 1024).unwrap();
        let z = builtin_net("zero", &BuiltinParams::default(), None).unwrap();
        let w = Window::new(2.0, [0.0, 0.0], 0.45).unwrap();
        let p = windowed_spectrum(&z, &w, &g, &[0.1, 0.05], &cone_partition(1, 2).unwrap()).unwrap();
        assert!(p.iter().all(|p| p.samples.iter().all(|s| s.magnitude == 0.0 && s.saturated)));
    }

    #[test]
    fn directional_profile_takes_shell_maxima() {
        let mk = |xi, m| SpectralSample { eps: 0.1, xi, shell: 0, magnitude: m, saturated: false };
        let prof = vec![SpectralProfile { bin: 0, window_center: None, window_radius: None, samples: vec![mk(10.0, 1.0), mk(11.0, 3.0)] }];
        assert_eq!(directional_profile(&prof, 0).unwrap(), vec![(0.1, 11.0, 3.0)]);
        let single = vec![SpectralProfile { bin: 0, window_center: None, window_radius: None, samples: vec![mk(10.0, 2.0)] }];
        assert_eq!(directional_profile(&single, 0).unwrap(), vec![(0.1, 10.0, 2.0)]);
        assert!(matches!(directional_profile(&single, 1), Err(Error::EmptyBin(1))));
    }

    #[test]
    fn spectra_are_linear() {
        let g = GridBox::line(-1.0, 1.0, 1024).unwrap();
        let a = builtin_net("gaussian", &BuiltinParams { width: Some(0.1), ..Default::default() }, None).unwrap();
        let b = builtin_net("cauchy", &BuiltinParams::default(), None).unwrap();
        let w = Window::new(2.0, [0.1, 0.0], 0.45).unwrap();
        let part = cone_partition(1, 2).unwrap();
        let sa = windowed_spectrum(&a, &w, &g, &[0.1], &part).unwrap();
        let sb = windowed_spectrum(&b, &w, &g, &[0.1], &part).unwrap();
        let sab = windowed_spectrum(&add(&a, &b).unwrap(), &w, &g, &[0.1], &part).unwrap();
        // magnitudes obey the triangle inequality sample by sample
        for bin in 0..2 {
            for ((x, y), z) in sa[bin].samples.iter().zip(&sb[bin].samples).zip(&sab[bin].samples) {
                assert!(z.magnitude <= x.magnitude + y.magnitude + 1e-12);
            }
        }
    }
}
