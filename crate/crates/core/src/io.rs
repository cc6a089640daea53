//! Binary array files, CSV tables and mollifier export.
//!
//! Array layout, all little-endian: the magic `UGNA`, a `u32` version, a `u32`
//! dimension, then per axis a `u64` point count and the `f64` bounds, a `u64`
//! ε count, the ε values, and finally the samples of each ε as interleaved
//! `re, im` doubles in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asymptotics::AsymptoticFit;
use crate::error::{Error, Result};
use crate::fourier::C64;
use crate::gevrey::{build_mollifier, Mollifier, MollifierDiagnostics, MollifierSpec};
use crate::grid::{Axis, GridBox};
use crate::nets::sampled::SampledNet;

const MAGIC: &[u8; 4] = b"UGNA";
const VERSION: u32 = 1;

pub fn write_array<W: Write>(net: &SampledNet, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(net.grid.dim() as u32).to_le_bytes())?;
    for a in &net.grid.axes {
        out.write_all(&(a.n as u64).to_le_bytes())?;
        out.write_all(&a.lo.to_le_bytes())?;
        out.write_all(&a.hi.to_le_bytes())?;
    }
    out.write_all(&(net.eps.len() as u64).to_le_bytes())?;
    for e in &net.eps {
        out.write_all(&e.to_le_bytes())?;
    }
    for block in &net.data {
        for z in block {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Format(format!("truncated file while reading {what}")))?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }
}

pub fn read_array<R: Read>(input: R) -> Result<SampledNet> {
    let mut r = Reader { inner: BufReader::new(input) };
    if &r.bytes::<4>("magic")? != MAGIC {
        return Err(Error::Format("missing UGNA magic".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = r.u32("dimension")? as usize;
    if !(1..=2).contains(&dim) {
        return Err(Error::Format(format!("dimension {dim} not supported")));
    }
    let mut axes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let n = r.u64("axis length")? as usize;
        let lo = r.f64("axis bound")?;
        let hi = r.f64("axis bound")?;
        axes.push(Axis::new(lo, hi, n).map_err(|e| Error::Format(e.to_string()))?);
    }
    let grid = GridBox::new(axes)?;
    let count = r.u64("eps count")? as usize;
    let eps = (0..count).map(|_| r.f64("eps value")).collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let block = (0..grid.len())
            .map(|_| Ok(C64::new(r.f64("sample")?, r.f64("sample")?)))
            .collect::<Result<Vec<_>>>()?;
        data.push(block);
    }
    let mut rest = [0u8; 1];
    if r.inner.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after the last sample".into()));
    }
    SampledNet::new(grid, eps, data)
}

pub fn save_array(net: &SampledNet, path: &Path) -> Result<()> {
    write_array(net, File::create(path)?)
}

pub fn load_array(path: &Path) -> Result<SampledNet> {
    read_array(File::open(path)?)
}

/// Metadata stored next to an exported mollifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSidecar {
    pub spec: MollifierSpec,
    pub xi_inner: f64,
    pub xi_outer: f64,
    pub diagnostics: MollifierDiagnostics,
}

/// Writes `φ` to `<stem>.ugna` and its metadata to `<stem>.json`.
pub fn export_mollifier(moll: &Mollifier, dir: &Path, stem: &str) -> Result<()> {
    let grid = GridBox::new(vec![moll.axis])?;
    let samples = moll.phi.iter().map(|&v| C64::new(v, 0.0)).collect();
    save_array(&SampledNet::new(grid, vec![1.0], vec![samples])?, &dir.join(format!("{stem}.ugna")))?;
    let sidecar = MollifierSidecar {
        spec: moll.spec.clone(),
        xi_inner: moll.xi_inner,
        xi_outer: moll.xi_outer,
        diagnostics: moll.diagnostics.clone(),
    };
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Rebuilds the mollifier described by the sidecar and checks it against the stored samples.
pub fn import_mollifier(dir: &Path, stem: &str) -> Result<Mollifier> {
    let sidecar: MollifierSidecar = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    let stored = load_array(&dir.join(format!("{stem}.ugna")))?;
    let moll = build_mollifier(&sidecar.spec)?;
    if stored.grid.axes != [moll.axis] || stored.data.len() != 1 {
        return Err(Error::Format("stored mollifier grid does not match its metadata".into()));
    }
    let scale = moll.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = stored.data[0]
        .iter()
        .zip(&moll.phi)
        .fold(0.0f64, |m, (z, v)| m.max((z.re - v).abs()).max(z.im.abs()));
    if gap > 1e-12 * scale {
        return Err(Error::Tolerance { what: "stored mollifier samples".into(), value: gap, limit: 1e-12 * scale });
    }
    Ok(moll)
}

/// One row of the fit table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub net_id: String,
    pub alpha: String,
    pub sigma: f64,
    pub log_c: f64,
    pub k: f64,
    pub sign: i8,
    pub residual: f64,
    pub saturated_count: usize,
}

impl FitRow {
    pub fn new(net_id: &str, alpha: String, sigma: f64, fit: &AsymptoticFit) -> Self {
        Self {
            net_id: net_id.to_string(),
            alpha,
            sigma,
            log_c: fit.log_c,
            k: fit.k,
            sign: fit.sign.as_f64() as i8,
            residual: fit.residual_rms,
            saturated_count: fit.saturated_count,
        }
    }
}

/// One row of the spectral table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    pub net_id: String,
    pub x0: String,
    pub bin: usize,
    pub eps: f64,
    pub xi_shell: usize,
    pub magnitude: f64,
    pub saturated: bool,
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
