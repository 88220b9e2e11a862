//! Fundamental Floquet coefficient on a recording plane, spectra and power coefficients.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::mesh::{Lattice2, Mesh};
use crate::reference::ReferenceElement;
use crate::solver::IncidenceConfig;

/// Plane z = z_rt tiled by element faces, with nodal integration weights.
#[derive(Debug, Clone)]
pub struct PlaneProbe {
    pub z: f64,
    /// (element, local face) pairs tiling the plane.
    pub faces: Vec<(usize, usize)>,
    /// Per face: (volume node index, weight) with weights summing to the face area.
    weights: Vec<Vec<(usize, f64)>>,
    pub cell_area: f64,
}

impl PlaneProbe {
    /// Collect the faces on z = `z` and check that they tile one unit cell.
    pub fn new(mesh: &Mesh, re: &ReferenceElement, lattice: &Lattice2, z: f64) -> Result<Self> {
        let tol = lattice.default_tolerance();
        let faces = mesh.faces_on_z_plane(z, tol);
        let cell_area = lattice.cell_area();
        let area: f64 = faces.iter().map(|&(k, f)| mesh.face_area(k, f)).sum();
        if faces.is_empty() || (area - cell_area).abs() > 1e-10 * cell_area {
            return Err(Error::Probe(format!(
                "plane z = {z} is covered by faces of total area {area:.6e}, cell area is {cell_area:.6e}"
            )));
        }
        // integral of each nodal basis function over the face: sJ * (row sums of Mf)
        let row_sums: Vec<Vec<f64>> = (0..4)
            .map(|f| re.face_mass[f].row_iter().map(|r| r.sum()).collect())
            .collect();
        let weights = faces
            .iter()
            .map(|&(k, f)| {
                let sj = 0.5 * mesh.face_area(k, f);
                re.face_nodes[f]
                    .iter()
                    .zip(&row_sums[f])
                    .map(|(&v, &w)| (v, sj * w))
                    .collect()
            })
            .collect();
        Ok(Self {
            z,
            faces,
            weights,
            cell_area,
        })
    }

    /// Sum of the tiling face areas.
    pub fn covered_area(&self) -> f64 {
        self.weights.iter().flatten().map(|(_, w)| w).sum()
    }

    /// Cell average of P over the plane from the element-major state `q` with `np`
    /// nodes per element.
    pub fn record_a00(&self, q: &[f64], np: usize) -> Result<[f64; 3]> {
        let mut acc = [0.0; 3];
        for (&(k, _), w) in self.faces.iter().zip(&self.weights) {
            for &(v, wi) in w {
                let b = 6 * (k * np + v);
                if b + 3 > q.len() {
                    return Err(Error::Probe("state is smaller than the probed mesh".into()));
                }
                for c in 0..3 {
                    acc[c] += wi * q[b + c];
                }
            }
        }
        Ok(acc.map(|a| a / self.cell_area))
    }
}

/// One-sided spectrum of a vector time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    /// One complex amplitude per vector component per frequency.
    pub amplitudes: Vec<Vec<Complex64>>,
}

impl Spectrum {
    /// Euclidean norm over components at frequency index `i`.
    pub fn magnitude(&self, i: usize) -> f64 {
        self.amplitudes[i].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.freqs.len()).map(|i| self.magnitude(i)).collect()
    }
}

/// Discrete Fourier transform of samples taken at t = 0, dt, 2dt, ..., scaled by `dt` so
/// the result approximates the continuous transform. The series is zero-padded to
/// `pad` times its length; frequencies run from 0 to the Nyquist limit in steps of
/// 1/(pad N dt).
pub fn spectrum<const D: usize>(series: &[[f64; D]], dt: f64, pad: usize) -> Result<Spectrum> {
    if series.is_empty() {
        return Err(Error::Spectrum("empty time series".into()));
    }
    if !(dt > 0.0) || pad == 0 {
        return Err(Error::Spectrum("time step and padding must be positive".into()));
    }
    let peak = series.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let tail = series.last().unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 && tail > 1e-6 * peak {
        log::warn!("time series has not decayed: last sample is {:.2e} of peak", tail / peak);
    }
    let n = series.len() * pad;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let nf = n / 2 + 1;
    let mut amplitudes = vec![vec![Complex64::new(0.0, 0.0); D]; nf];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..D {
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (b, s) in buf.iter_mut().zip(series) {
            b.re = s[c];
        }
        fft.process(&mut buf);
        for (a, b) in amplitudes.iter_mut().zip(&buf) {
            a[c] = b * dt;
        }
    }
    let df = 1.0 / (n as f64 * dt);
    Ok(Spectrum {
        freqs: (0..nf).map(|k| k as f64 * df).collect(),
        amplitudes,
    })
}

/// Power coefficient |E_rt|^2 / |E_i|^2 with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCoefficient {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    /// False where |E_i| is below the floor; those values are not meaningful.
    pub valid: Vec<bool>,
}

impl PowerCoefficient {
    /// (f, value) pairs at valid frequencies inside [f_lo, f_hi].
    pub fn band(&self, f_lo: f64, f_hi: f64) -> Vec<(f64, f64)> {
        self.freqs
            .iter()
            .zip(&self.values)
            .zip(&self.valid)
            .filter(|((f, _), ok)| **ok && **f >= f_lo && **f <= f_hi)
            .map(|((f, v), _)| (*f, *v))
            .collect()
    }
}

/// Default floor, relative to the peak of |E_i|, below which frequencies are masked.
pub const DEFAULT_FLOOR: f64 = 1e-3;

pub fn power_coefficient(e_rt: &Spectrum, e_i: &Spectrum, floor: f64) -> Result<PowerCoefficient> {
    if e_rt.freqs.len() != e_i.freqs.len()
        || e_rt
            .freqs
            .iter()
            .zip(&e_i.freqs)
            .any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1e-300))
    {
        return Err(Error::Spectrum("frequency grids differ".into()));
    }
    let mi = e_i.magnitudes();
    let peak = mi.iter().copied().fold(0.0, f64::max);
    let mut values = Vec::with_capacity(mi.len());
    let mut valid = Vec::with_capacity(mi.len());
    for (i, &m) in mi.iter().enumerate() {
        let ok = peak > 0.0 && m >= floor * peak;
        valid.push(ok);
        values.push(if ok { (e_rt.magnitude(i) / m).powi(2) } else { 0.0 });
    }
    Ok(PowerCoefficient {
        freqs: e_rt.freqs.clone(),
        values,
        valid,
    })
}

/// Closed-form spectrum of the incident pulse, one component per field direction.
pub fn incident_reference_spectrum(inc: &IncidenceConfig, freqs: &[f64]) -> Spectrum {
    let e = inc.e_hat();
    Spectrum {
        freqs: freqs.to_vec(),
        amplitudes: freqs
            .iter()
            .map(|&f| {
                let g = inc.waveform.transform(f);
                e.iter().map(|&c| g * c).collect()
            })
            .collect(),
    }
}

/// Write "f_hz,R,T" rows for the valid frequencies in [f_lo, f_hi].
pub fn write_rt_csv<W: Write>(
    mut out: W,
    r: &PowerCoefficient,
    t: &PowerCoefficient,
    f_lo: f64,
    f_hi: f64,
) -> std::io::Result<()> {
    writeln!(out, "f_hz,R,T")?;
    for i in 0..r.freqs.len() {
        let f = r.freqs[i];
        if r.valid[i] && t.valid[i] && f >= f_lo && f <= f_hi {
            writeln!(out, "{:.6e},{:.9e},{:.9e}", f, r.values[i], t.values[i])?;
        }
    }
    Ok(())
}

/// Write one row per sample time with the three A00 components of every probe; the
/// energy column is empty at times where energy was not sampled.
pub fn write_time_series_csv<W: Write>(
    mut out: W,
    times: &[f64],
    a00: &[Vec<[f64; 3]>],
    energy: &[(f64, f64)],
) -> std::io::Result<()> {
    write!(out, "t_s")?;
    for p in 0..a00.len() {
        write!(out, ",A00x_{p},A00y_{p},A00z_{p}")?;
    }
    writeln!(out, ",energy")?;
    let mut e = energy.iter().peekable();
    for (i, t) in times.iter().enumerate() {
        write!(out, "{t:.9e}")?;
        for series in a00 {
            let a = series[i];
            write!(out, ",{:.9e},{:.9e},{:.9e}", a[0], a[1], a[2])?;
        }
        match e.peek() {
            Some(&&(te, v)) if te == *t => {
                e.next();
                writeln!(out, ",{v:.9e}")?;
            }
            _ => writeln!(out, ",")?,
        }
    }
    Ok(())
}
