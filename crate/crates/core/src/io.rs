//! File formats shared by the library and the command line.
//!
//! JSON floats are written with 17 significant digits; CSV likewise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CMatrix, DensityMatrix, FockDim};
use crate::fpsim::{OuParams, Scheme, TrajectoryEnsemble};
use crate::wigner::{Marginal, PhaseSpaceGrid, WignerField};

/// `x` with 17 significant digits (exact round trip for finite `f64`).
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    format!("{x:.16e}")
}

struct Precise;

impl serde_json::ser::Formatter for Precise {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Compact JSON with 17-digit floats and a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(f)?)
}

/// `{"n_max": N, "rows": [[[re, im], ...], ...]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityJson {
    pub n_max: usize,
    pub rows: Vec<Vec<[f64; 2]>>,
}

impl From<&DensityMatrix> for DensityJson {
    fn from(rho: &DensityMatrix) -> Self {
        let size = rho.dim().size();
        DensityJson {
            n_max: rho.dim().n_max(),
            rows: (0..size)
                .map(|n| (0..size).map(|m| [rho.get(n, m).re, rho.get(n, m).im]).collect())
                .collect(),
        }
    }
}

impl DensityJson {
    fn matrix(&self) -> Result<(FockDim, CMatrix)> {
        let dim = FockDim::new(self.n_max);
        let size = dim.size();
        if self.rows.len() != size || self.rows.iter().any(|r| r.len() != size) {
            return Err(Error::Format(format!("rows must form a {size}x{size} matrix for n_max = {}", self.n_max)));
        }
        let m = CMatrix::from_fn(size, size, |n, k| Complex64::new(self.rows[n][k][0], self.rows[n][k][1]));
        Ok((dim, m))
    }

    /// Validated density matrix.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let (dim, m) = self.matrix()?;
        DensityMatrix::new(dim, m)
    }

    /// Without validation (reconstructions carry their own diagnostics).
    pub fn to_density_unchecked(&self) -> Result<DensityMatrix> {
        let (dim, m) = self.matrix()?;
        DensityMatrix::from_matrix_unchecked(dim, m)
    }
}

/// `{"s", "grid", "values": [[...], ...], "method"}`; `values[i][j]` is the
/// value at `grid.node(i, j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    pub s: f64,
    pub grid: PhaseSpaceGrid,
    pub values: Vec<Vec<f64>>,
    pub method: String,
    #[serde(default)]
    pub imag_residue: f64,
}

impl From<&WignerField> for FieldJson {
    fn from(f: &WignerField) -> Self {
        FieldJson {
            s: f.s,
            grid: f.grid,
            values: f.values.chunks(f.grid.n_im).map(|r| r.to_vec()).collect(),
            method: f.method.clone(),
            imag_residue: f.imag_residue,
        }
    }
}

impl FieldJson {
    pub fn to_field(&self) -> Result<WignerField> {
        self.grid.validate()?;
        let g = self.grid;
        if self.values.len() != g.n_re || self.values.iter().any(|r| r.len() != g.n_im) {
            return Err(Error::Format(format!("values must be {} rows of {} entries", g.n_re, g.n_im)));
        }
        Ok(WignerField {
            grid: g,
            s: self.s,
            values: self.values.concat(),
            method: self.method.clone(),
            imag_residue: self.imag_residue,
        })
    }
}

/// CSV with header `x,y,w`, one row per node.
pub fn write_field_csv<W: Write>(w: W, field: &WignerField) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "w"])?;
    let g = &field.grid;
    for i in 0..g.n_re {
        for j in 0..g.n_im {
            out.write_record([fmt_f64(g.x(i)), fmt_f64(g.y(j)), fmt_f64(field.at(i, j))])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// CSV with header `x,p`.
pub fn write_marginal_csv<W: Write>(w: W, m: &Marginal) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "p"])?;
    for (x, p) in m.x.iter().zip(&m.values) {
        out.write_record([fmt_f64(*x), fmt_f64(*p)])?;
    }
    out.flush()?;
    Ok(())
}

/// Ensemble checkpoint: CSV `x,y,weight`.
pub fn write_ensemble_csv<W: Write>(w: W, e: &TrajectoryEnsemble) -> Result<()> {
    let mut out = csv::Writer::from_writer(BufWriter::new(w));
    out.write_record(["x", "y", "weight"])?;
    for (z, wt) in e.samples.iter().zip(&e.weights) {
        out.write_record([fmt_f64(z.re), fmt_f64(z.im), fmt_f64(*wt)])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `x,y,weight` rows; weights are renormalized to sum to one.
pub fn read_samples_csv<R: Read>(r: R) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Format(format!("missing column '{name}'")))
    };
    let (cx, cy) = (col("x")?, col("y")?);
    let cw = col("weight").ok();
    let mut samples = Vec::new();
    let mut weights = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Format(format!("row {}: bad number in column {}", k + 2, c + 1)))
        };
        samples.push(Complex64::new(num(cx)?, num(cy)?));
        weights.push(match cw {
            Some(c) => num(c)?,
            None => 1.0,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Format("weights must be nonnegative with positive sum".into()));
    }
    let weights = weights.iter().map(|w| w / total).collect();
    Ok((samples, weights))
}

/// JSON sidecar of an ensemble checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSidecar {
    pub seed: u64,
    pub epoch: u64,
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub time: f64,
    pub s: f64,
    pub n: usize,
    pub params: OuParams,
}

/// Rebuilds an ensemble from a checkpoint CSV and its sidecar.
pub fn read_ensemble(csv_path: &Path, sidecar: Option<&EnsembleSidecar>, s: f64) -> Result<TrajectoryEnsemble> {
    let (samples, weights) = read_samples_csv(File::open(csv_path)?)?;
    let seed = sidecar.map(|c| c.seed).unwrap_or(0);
    let mut e = TrajectoryEnsemble::new(samples, weights, s, seed)?;
    if let Some(c) = sidecar {
        e.epoch = c.epoch;
        e.time = c.time;
    }
    Ok(e)
}
