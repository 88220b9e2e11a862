//! Transfer-matrix reflectance and transmittance of planar multilayers, and the onset
//! frequency of the first higher-order Floquet mode. Shares no code with the solver.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::Lattice2;

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pol {
    Te,
    Tm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    /// Thickness in meters; ignored for the two semi-infinite end layers.
    pub thickness: f64,
    pub eps_r: f64,
    pub mu_r: f64,
}

/// Layers ordered along the incident wave's path: the first and last are semi-infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Config("a stack needs at least the two end media".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if !(l.eps_r >= 1.0 && l.mu_r >= 1.0) {
                return Err(Error::Material(format!("layer {i}: eps_r and mu_r must be >= 1")));
            }
            if i > 0 && i + 1 < layers.len() && !(l.thickness > 0.0) {
                return Err(Error::Config(format!("layer {i} must have positive thickness")));
            }
        }
        Ok(Self { layers })
    }

    /// Air / slab / air.
    pub fn slab(thickness: f64, eps_r: f64) -> Self {
        let air = Layer { thickness: 0.0, eps_r: 1.0, mu_r: 1.0 };
        Self {
            layers: vec![air, Layer { thickness, eps_r, mu_r: 1.0 }, air],
        }
    }

    pub fn reversed(&self) -> Self {
        let mut layers = self.layers.clone();
        layers.reverse();
        Self { layers }
    }
}

/// Power reflectance and transmittance at angle `theta` (in the first medium) and
/// frequency `f`.
pub fn multilayer_rt(stack: &LayerStack, theta: f64, f: f64, pol: Pol) -> Result<(f64, f64)> {
    if !(0.0..PI / 2.0).contains(&theta) || !(f > 0.0) {
        return Err(Error::Config(format!("theta = {theta}, f = {f} out of range")));
    }
    let k0 = 2.0 * PI * f / C0;
    let first = stack.layers[0];
    // conserved transverse index n0 sin(theta)
    let kt2 = first.eps_r * first.mu_r * theta.sin().powi(2);
    // tangential admittance of a layer and its normal wavenumber
    let medium = |l: &Layer| -> (Complex64, Complex64) {
        let kz = Complex64::new(l.eps_r * l.mu_r - kt2, 0.0).sqrt() * k0;
        let eta = match pol {
            Pol::Te => kz / (l.mu_r * k0),
            Pol::Tm => l.eps_r * k0 / kz,
        };
        (kz, eta)
    };
    let (_, eta0) = medium(&first);
    let last = stack.layers[stack.layers.len() - 1];
    let (kzs, eta_s) = medium(&last);
    if kzs.norm() == 0.0 || eta0.re <= 0.0 {
        return Err(Error::Config("grazing propagation in an end medium".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut m = [[one, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), one]];
    for l in &stack.layers[1..stack.layers.len() - 1] {
        let (kz, eta) = medium(l);
        let d = kz * l.thickness;
        let lm = [[d.cos(), i * d.sin() / eta], [i * eta * d.sin(), d.cos()]];
        m = [
            [
                m[0][0] * lm[0][0] + m[0][1] * lm[1][0],
                m[0][0] * lm[0][1] + m[0][1] * lm[1][1],
            ],
            [
                m[1][0] * lm[0][0] + m[1][1] * lm[1][0],
                m[1][0] * lm[0][1] + m[1][1] * lm[1][1],
            ],
        ];
    }
    let a = eta0 * m[0][0] + eta0 * eta_s * m[0][1];
    let b = m[1][0] + eta_s * m[1][1];
    let r = (a - b) / (a + b);
    let t = 2.0 * eta0 / (a + b);
    Ok((r.norm_sqr(), eta_s.re / eta0.re * t.norm_sqr()))
}

/// Lowest frequency at which any (m, n) != (0, 0) Floquet mode propagates in vacuum.
pub fn floquet_cutoff(lattice: &Lattice2, theta: f64, phi: f64) -> f64 {
    let (lx, ly) = (lattice.lx(), lattice.ly());
    let (st, ct) = theta.sin_cos();
    let s = [phi.cos(), phi.sin()];
    let mut best = f64::INFINITY;
    let span = 3;
    for m in -span..=span {
        for n in -span..=span {
            if m == 0 && n == 0 {
                continue;
            }
            let g = [2.0 * PI * m as f64 / lx, 2.0 * PI * n as f64 / ly];
            // |k0 sin(theta) s + G| = k0 solved for k0
            let sg = s[0] * g[0] + s[1] * g[1];
            let g2 = g[0] * g[0] + g[1] * g[1];
            let k0 = (st * sg + (st * st * sg * sg + ct * ct * g2).sqrt()) / (ct * ct);
            best = best.min(k0 * C0 / (2.0 * PI));
        }
    }
    best
}

/// Write "f_hz,R,T" rows for every frequency in `freqs`.
pub fn write_oracle_csv<W: Write>(
    mut out: W,
    stack: &LayerStack,
    theta: f64,
    pol: Pol,
    freqs: &[f64],
) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("write failed: {e}"));
    writeln!(out, "f_hz,R,T").map_err(io)?;
    for &f in freqs {
        let (r, t) = multilayer_rt(stack, theta, f, pol)?;
        writeln!(out, "{f:.6e},{r:.9e},{t:.9e}").map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_stack_is_transparent() {
        let s = LayerStack::slab(0.7, 1.0);
        for pol in [Pol::Te, Pol::Tm] {
            let (r, t) = multilayer_rt(&s, 0.6, 100e6, pol).unwrap();
            assert!(r < 1e-28 && (t - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn quarter_wave_slab() {
        let f = 100e6;
        let d = C0 / f / 8.0;
        let (r, _) = multilayer_rt(&LayerStack::slab(d, 4.0), 0.0, f, Pol::Te).unwrap();
        assert!((r - 0.36).abs() < 1e-12);
    }

    #[test]
    fn half_wave_null_at_fifty_degrees() {
        let th = 50f64.to_radians();
        let f1 = C0 / (2.0 * (4.0 - th.sin().powi(2)).sqrt());
        assert!((f1 / 1e6 - 81.2).abs() < 0.1);
        let (r, _) = multilayer_rt(&LayerStack::slab(1.0, 4.0), th, f1, Pol::Te).unwrap();
        assert!(r < 1e-24);
    }

    #[test]
    fn energy_reciprocity_and_polarization() {
        let stack = LayerStack::new(vec![
            Layer { thickness: 0.0, eps_r: 1.0, mu_r: 1.0 },
            Layer { thickness: 0.3, eps_r: 2.5, mu_r: 1.0 },
            Layer { thickness: 0.55, eps_r: 6.0, mu_r: 1.3 },
            Layer { thickness: 0.0, eps_r: 1.0, mu_r: 1.0 },
        ])
        .unwrap();
        for f in [20e6, 95e6, 310e6] {
            for th in [0.0, 0.4, 1.3] {
                for pol in [Pol::Te, Pol::Tm] {
                    let (r, t) = multilayer_rt(&stack, th, f, pol).unwrap();
                    assert!((r + t - 1.0).abs() < 1e-12);
                    let (rr, _) = multilayer_rt(&stack.reversed(), th, f, pol).unwrap();
                    assert!((r - rr).abs() < 1e-12);
                }
            }
            let te = multilayer_rt(&stack, 0.0, f, Pol::Te).unwrap();
            let tm = multilayer_rt(&stack, 0.0, f, Pol::Tm).unwrap();
            assert!((te.0 - tm.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cutoff_limits() {
        let lat = Lattice2::rectangular(0.35, 0.35).unwrap();
        let f0 = floquet_cutoff(&lat, 0.0, 0.0);
        assert!((f0 - C0 / 0.35).abs() < 1e-6 * f0);
        let f50 = floquet_cutoff(&lat, 50f64.to_radians(), 0.0);
        assert!(f50 < f0);
        // along phi = 0 the onset is c / (a (1 + sin theta))
        assert!((f50 - C0 / (0.35 * (1.0 + 50f64.to_radians().sin()))).abs() < 1e-6 * f50);
        let big = Lattice2::rectangular(1e6, 1e6).unwrap();
        assert!(floquet_cutoff(&big, 0.3, 0.0) < 1e3);
    }

    #[test]
    fn invalid_stack_rejected() {
        let air = Layer { thickness: 0.0, eps_r: 1.0, mu_r: 1.0 };
        assert!(LayerStack::new(vec![air]).is_err());
        assert!(LayerStack::new(vec![air, Layer { thickness: 0.0, eps_r: 2.0, mu_r: 1.0 }, air]).is_err());
        assert!(LayerStack::new(vec![air, Layer { thickness: 1.0, eps_r: 0.5, mu_r: 1.0 }, air]).is_err());
    }
}
