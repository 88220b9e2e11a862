//! Oblique planewave incidence: direction, polarization, pulse and the transformed
//! incident fields injected at the TF/SF plane.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::Vec3;
use crate::operators::Units;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    /// Electric field perpendicular to the plane of incidence.
    Te,
    /// Electric field in the plane of incidence.
    Tm,
}

/// Sign of the z component of the incident wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Illumination from above, travelling toward -z.
    Down,
    Up,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Down => -1.0,
            Direction::Up => 1.0,
        }
    }
}

/// Modulated Gaussian pulse `E0 exp(-u^2/tau^2) sin(2 pi f_c u)` with `u = t - t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waveform {
    pub f_c: f64,
    pub tau: f64,
    pub t0: f64,
    pub amplitude: f64,
}

impl Waveform {
    /// Pulse centred on the band whose spectrum at `f_min` and `f_max` is 1/8 of the peak.
    /// The delay `t0 = 4.5 tau` keeps the turn-on transient below 2e-9 of the peak.
    pub fn from_band(f_min: f64, f_max: f64, amplitude: f64) -> Result<Self> {
        if !(f_min > 0.0 && f_max > f_min && f_max.is_finite()) {
            return Err(Error::Config(format!(
                "invalid band [{f_min}, {f_max}] Hz"
            )));
        }
        let half = 0.5 * (f_max - f_min);
        let tau = 8f64.ln().sqrt() / (PI * half);
        Ok(Self {
            f_c: 0.5 * (f_min + f_max),
            tau,
            t0: 4.5 * tau,
            amplitude,
        })
    }

    /// Pulse envelope without delay.
    pub fn g(&self, u: f64) -> f64 {
        (-(u / self.tau).powi(2)).exp() * (2.0 * PI * self.f_c * u).sin()
    }

    /// Delayed pulse value at time `t`.
    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * self.g(t - self.t0)
    }

    /// Continuous Fourier transform of [`Waveform::value`] (convention `e^{-i 2 pi f t}`).
    pub fn transform(&self, f: f64) -> Complex64 {
        let a = |df: f64| (-(PI * self.tau * df).powi(2)).exp();
        let g = Complex64::new(0.0, -0.5 * self.tau * PI.sqrt()) * (a(f - self.f_c) - a(f + self.f_c));
        self.amplitude * g * Complex64::from_polar(1.0, -2.0 * PI * f * self.t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidenceConfig {
    /// Polar angle from the z axis, in [0, pi/2).
    pub theta: f64,
    pub phi: f64,
    pub polarization: Polarization,
    pub direction: Direction,
    pub waveform: Waveform,
    /// Plane at which the pulse delay equals `waveform.t0`.
    pub z_ref: f64,
}

impl IncidenceConfig {
    pub fn new(
        theta: f64,
        phi: f64,
        polarization: Polarization,
        direction: Direction,
        waveform: Waveform,
    ) -> Result<Self> {
        if !(0.0..PI / 2.0).contains(&theta) || !phi.is_finite() {
            return Err(Error::Config(format!(
                "incidence angle theta = {theta} rad outside [0, pi/2)"
            )));
        }
        Ok(Self {
            theta,
            phi,
            polarization,
            direction,
            waveform,
            z_ref: 0.0,
        })
    }

    /// Normal incidence from above with the given pulse.
    pub fn normal(polarization: Polarization, waveform: Waveform) -> Self {
        Self::new(0.0, 0.0, polarization, Direction::Down, waveform).expect("theta = 0 is valid")
    }

    /// Unit incident wavevector.
    pub fn k_hat(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, self.direction.sign() * ct]
    }

    /// Transverse wavevector components (kappa_x, kappa_y).
    pub fn kappa(&self) -> [f64; 2] {
        let k = self.k_hat();
        [k[0], k[1]]
    }

    /// Unit polarization vector of the incident electric field.
    pub fn e_hat(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        match self.polarization {
            Polarization::Te => [-sp, cp, 0.0],
            Polarization::Tm => [ct * cp, ct * sp, -self.direction.sign() * st],
        }
    }
}

/// Transformed incident fields (P, S) at point `r` and time `t` in a medium of wave
/// impedance `z`. The transverse phase is removed, so only `r[2]` matters.
pub fn incident_fields(r: Vec3, t: f64, inc: &IncidenceConfig, z: f64, units: &Units) -> (Vec3, Vec3) {
    let k = inc.k_hat();
    let e = inc.e_hat();
    let delay = k[2] * (r[2] - inc.z_ref) / units.c0;
    let amp = inc.waveform.value(t - delay);
    let p = e.map(|c| c * amp);
    let kxe = crate::mesh::cross(k, p);
    let s = kxe.map(|c| c / z);
    (p, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{dot, norm};

    fn wf() -> Waveform {
        Waveform::from_band(30e6, 140e6, 1.0).unwrap()
    }

    #[test]
    fn polarization_vectors_are_orthonormal() {
        for &theta in &[0.0, 0.3, 1.2] {
            for &phi in &[0.0, 0.7, 2.0] {
                for pol in [Polarization::Te, Polarization::Tm] {
                    for dir in [Direction::Down, Direction::Up] {
                        let inc = IncidenceConfig::new(theta, phi, pol, dir, wf()).unwrap();
                        assert!((norm(inc.e_hat()) - 1.0).abs() < 1e-14);
                        assert!(dot(inc.e_hat(), inc.k_hat()).abs() < 1e-14);
                    }
                }
            }
        }
        let te = IncidenceConfig::normal(Polarization::Te, wf());
        let tm = IncidenceConfig::normal(Polarization::Tm, wf());
        assert_eq!(te.e_hat(), [0.0, 1.0, 0.0]);
        assert_eq!(tm.e_hat(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_grazing_and_beyond() {
        assert!(IncidenceConfig::new(PI / 2.0, 0.0, Polarization::Te, Direction::Down, wf()).is_err());
        assert!(IncidenceConfig::new(95f64.to_radians(), 0.0, Polarization::Te, Direction::Down, wf()).is_err());
    }

    #[test]
    fn waveform_band_edges_and_turn_on() {
        let w = wf();
        let peak = w.transform(w.f_c).norm();
        assert!((peak - 0.5 * w.tau * PI.sqrt()).abs() < 1e-6 * peak);
        for f in [30e6, 140e6] {
            let r = w.transform(f).norm() / peak;
            assert!(r >= 0.1 && r < 0.13, "edge ratio {r}");
        }
        assert!(w.value(0.0).abs() < 1e-8);
    }

    #[test]
    fn transform_matches_numerical_integral() {
        let w = wf();
        let dt = w.tau / 200.0;
        let n = (2.0 * w.t0 / dt) as usize;
        for f in [50e6, 85e6, 120e6] {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let t = i as f64 * dt;
                acc += w.value(t) * Complex64::from_polar(dt, -2.0 * PI * f * t);
            }
            assert!((acc - w.transform(f)).norm() < 1e-6 * w.transform(w.f_c).norm());
        }
    }

    #[test]
    fn transverse_position_does_not_matter() {
        let inc = IncidenceConfig::new(0.8, 0.4, Polarization::Tm, Direction::Down, wf()).unwrap();
        let u = Units::si();
        let (p1, s1) = incident_fields([0.0, 0.0, 0.3], 2e-8, &inc, u.z0(), &u);
        let (p2, s2) = incident_fields([0.21, -0.13, 0.3], 2e-8, &inc, u.z0(), &u);
        assert_eq!(p1, p2);
        assert_eq!(s1, s2);
        assert!((norm(s1) - norm(p1) / u.z0()).abs() < 1e-15 * norm(p1).max(1e-300) / u.z0() + 1e-18);
    }

    #[test]
    fn transformed_field_matches_phase_shifted_planewave() {
        // E(r, t) = e g(t - k.r/c - t0); P(r, t) = E(r, t + k_par.r/c). Compare at a few
        // frequencies: the spectrum of P at (x, y) equals E's times exp(+i 2 pi f k_par.r/c).
        let inc = IncidenceConfig::new(0.7, 0.3, Polarization::Te, Direction::Down, wf()).unwrap();
        let u = Units::si();
        let r = [0.25, 0.1, 0.4];
        let k = inc.k_hat();
        let dt = inc.waveform.tau / 100.0;
        let n = (4.0 * inc.waveform.t0 / dt) as usize;
        for f in [45e6, 85e6, 130e6] {
            let (mut ep, mut pp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for i in 0..n {
                let t = i as f64 * dt;
                let e = inc.waveform.value(t - dot(k, r) / u.c0) * inc.e_hat()[1];
                let (p, _) = incident_fields(r, t, &inc, u.z0(), &u);
                let ph = Complex64::from_polar(dt, -2.0 * PI * f * t);
                ep += e * ph;
                pp += p[1] * ph;
            }
            let shift = Complex64::from_polar(1.0, 2.0 * PI * f * (k[0] * r[0] + k[1] * r[1]) / u.c0);
            assert!((pp - ep * shift).norm() < 1e-6 * pp.norm().max(1e-12));
        }
    }
}
