//! Uniform sample grids on boxes of dimension one or two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One axis of a uniform grid: `n` cells of width `(hi - lo) / n`, samples at
/// `lo + j * dx` for `j` in `0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Geometry(format!("axis bounds [{lo}, {hi}] are not increasing")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Geometry(format!("axis sample count {n} is not a power of two >= 8")));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.dx()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Index of the sample nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let j = ((x - self.lo) / self.dx()).round();
        j.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.hi + self.lo)
    }

    /// Dual-grid spacing `2π / (n dx)`.
    pub fn dxi(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.n as f64 * self.dx())
    }

    /// Nyquist frequency `π / dx`.
    pub fn xi_max(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }

    /// Frequency of FFT bin `k` (FFT ordering, negative frequencies in the upper half).
    pub fn freq(&self, k: usize) -> f64 {
        let signed = if k < self.n / 2 { k as i64 } else { k as i64 - self.n as i64 };
        signed as f64 * self.dxi()
    }
}

/// A box grid in one or two dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub axes: Vec<Axis>,
}

impl GridBox {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Geometry(format!("dimension {} not supported", axes.len())));
        }
        Ok(Self { axes })
    }

    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![Axis::new(lo, hi, n)?])
    }

    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let axis = Axis::new(lo, hi, n)?;
        Self::new(vec![axis, axis])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest cell width over the axes.
    pub fn min_dx(&self) -> f64 {
        self.axes.iter().map(Axis::dx).fold(f64::INFINITY, f64::min)
    }

    /// Cell volume.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::dx).product()
    }

    /// Coordinates of flat sample `idx` (row-major, last axis fastest).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim() {
            1 => [self.axes[0].coord(idx), 0.0],
            _ => {
                let n1 = self.axes[1].n;
                [self.axes[0].coord(idx / n1), self.axes[1].coord(idx % n1)]
            }
        }
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.axes.iter().zip(x).all(|(a, &v)| v >= a.lo && v <= a.hi)
    }

    /// Flat index of the sample nearest to `x`.
    pub fn nearest(&self, x: &[f64]) -> usize {
        match self.dim() {
            1 => self.axes[0].nearest(x[0]),
            _ => self.axes[0].nearest(x[0]) * self.axes[1].n + self.axes[1].nearest(x[1]),
        }
    }

    /// Smallest Nyquist frequency over the axes.
    pub fn xi_max(&self) -> f64 {
        self.axes.iter().map(Axis::xi_max).fold(f64::INFINITY, f64::min)
    }

    /// Largest dual-grid spacing over the axes.
    pub fn dxi(&self) -> f64 {
        self.axes.iter().map(Axis::dxi).fold(0.0, f64::max)
    }
}

/// Axis-aligned region `[lo, hi]` used as a compact-support witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo], hi: vec![hi] }
    }

    pub fn of_grid(grid: &GridBox) -> Self {
        Self {
            lo: grid.axes.iter().map(|a| a.lo).collect(),
            hi: grid.axes.iter().map(|a| a.hi).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.lo.iter().zip(&self.hi).zip(x).all(|((&l, &h), &v)| v >= l && v <= h)
    }

    pub fn intersect(&self, other: &Region) -> Region {
        Region {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect(),
        }
    }

    pub fn hull(&self, other: &Region) -> Region {
        Region {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn product(&self, other: &Region) -> Region {
        Region {
            lo: self.lo.iter().chain(&other.lo).copied().collect(),
            hi: self.hi.iter().chain(&other.hi).copied().collect(),
        }
    }

    /// True when this region lies strictly inside the grid box.
    pub fn strictly_inside(&self, grid: &GridBox) -> bool {
        grid.axes
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(a, (&l, &h))| l > a.lo && h < a.hi)
    }
}

/// Derivative multi-index; the second entry is zero in one dimension.
/// Serialized as its label `"a_b"` so it can key JSON maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct MultiIndex(pub [usize; 2]);

impl From<MultiIndex> for String {
    fn from(m: MultiIndex) -> String {
        m.label()
    }
}

impl TryFrom<String> for MultiIndex {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once('_').ok_or_else(|| format!("bad multi-index `{s}`"))?;
        let parse = |t: &str| t.parse::<usize>().map_err(|_| format!("bad multi-index `{s}`"));
        Ok(MultiIndex([parse(a)?, parse(b)?]))
    }
}

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0, 0]);

    pub fn order(&self) -> usize {
        self.0[0] + self.0[1]
    }

    pub fn d1(k: usize) -> Self {
        MultiIndex([k, 0])
    }

    /// All multi-indices of total order at most `max_order`, sorted.
    pub fn all_up_to(dim: usize, max_order: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in 0..=max_order {
            if dim == 1 {
                out.push(MultiIndex([total, 0]));
            } else {
                for a in (0..=total).rev() {
                    out.push(MultiIndex([a, total - a]));
                }
            }
        }
        out
    }

    pub fn label(&self) -> String {
        format!("{}_{}", self.0[0], self.0[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_keys_round_trip() {
        let m: std::collections::BTreeMap<MultiIndex, u8> = [(MultiIndex([2, 1]), 7)].into();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"2_1":7}"#);
        assert_eq!(serde_json::from_str::<std::collections::BTreeMap<MultiIndex, u8>>(&text).unwrap(), m);
        assert!(MultiIndex::try_from("x".to_string()).is_err());
    }

    #[test]
    fn axis_spacing_and_freqs() {
        let a = Axis::new(-1.0, 1.0, 8).unwrap();
        assert_eq!(a.dx(), 0.25);
        assert_eq!(a.coord(4), 0.0);
        assert_eq!(a.freq(1), a.dxi());
        assert_eq!(a.freq(7), -a.dxi());
        assert_eq!(a.freq(4), -4.0 * a.dxi());
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(Axis::new(1.0, -1.0, 8).is_err());
        assert!(Axis::new(-1.0, 1.0, 12).is_err());
    }

    #[test]
    fn multi_indices_sorted_by_order() {
        let m = MultiIndex::all_up_to(2, 2);
        assert_eq!(m.len(), 6);
        assert_eq!(m[0], MultiIndex::ZERO);
        assert!(m.windows(2).all(|w| w[0].order() <= w[1].order()));
    }

    #[test]
    fn flat_points_row_major() {
        let g = GridBox::square(0.0, 1.0, 8).unwrap();
        let p = g.point(9);
        assert_eq!(p, [0.125, 0.125]);
        assert_eq!(g.nearest(&p), 9);
    }
}
