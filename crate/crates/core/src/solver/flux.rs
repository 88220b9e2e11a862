//! Periodic upwind flux and the boundary jump conditions.

use crate::error::{Error, Result};
use crate::mesh::{cross, Vec3};
use crate::solver::Polarization;

/// Upwind penalty n.(F - F*) for jumps `[P] = P+ - P-`, `[S] = S+ - S-` across a face
/// with outward normal `n`, for the interior (-) side. Returns (P part, S part).
#[inline]
pub(crate) fn upwind(jp: Vec3, js: Vec3, z_plus: f64, z_bar: f64, y_plus: f64, y_bar: f64, n: Vec3) -> [f64; 6] {
    let nxp = cross(n, jp);
    let nxs = cross(n, js);
    let a = [
        z_plus * js[0] - nxp[0],
        z_plus * js[1] - nxp[1],
        z_plus * js[2] - nxp[2],
    ];
    let b = [
        y_plus * jp[0] + nxs[0],
        y_plus * jp[1] + nxs[1],
        y_plus * jp[2] + nxs[2],
    ];
    let fa = cross(n, a);
    let fb = cross(n, b);
    [
        fa[0] / z_bar,
        fa[1] / z_bar,
        fa[2] / z_bar,
        -fb[0] / y_bar,
        -fb[1] / y_bar,
        -fb[2] / y_bar,
    ]
}

/// Numerical flux penalty for one face point.
///
/// The P part is `Zbar^-1 n x (Z+ [S] - n x [P])` and the S part is
/// `-Ybar^-1 n x (Y+ [P] + n x [S])`, the dissipative upwind choice.
pub fn numerical_flux(
    jump_p: Vec3,
    jump_s: Vec3,
    z_plus: f64,
    z_minus: f64,
    y_plus: f64,
    y_minus: f64,
    n: Vec3,
) -> Result<[f64; 6]> {
    if !(z_plus > 0.0 && z_minus > 0.0 && y_plus > 0.0 && y_minus > 0.0) {
        return Err(Error::Material(format!(
            "non-positive impedance or admittance (Z+ {z_plus}, Z- {z_minus}, Y+ {y_plus}, Y- {y_minus})"
        )));
    }
    Ok(upwind(jump_p, jump_s, z_plus, z_plus + z_minus, y_plus, y_plus + y_minus, n))
}

/// Region on each side of the TF/SF plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfsfSide {
    /// The interior element carries total fields; its neighbor carries scattered fields.
    Total,
    /// The interior element carries scattered fields; its neighbor carries total fields.
    Scattered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Pec,
    Abc,
    TfSf(TfsfSide),
}

/// Field values (P, S) at one face point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Trace {
    pub p: Vec3,
    pub s: Vec3,
}

/// Jumps ([P], [S]) imposed by a boundary condition on the interior trace `minus`.
///
/// At a TF/SF face, `plus` is the neighbor's trace and `incident` the incident field; the
/// incident field is added on the total side and subtracted on the scattered side so
/// that both traces refer to the interior element's field type.
pub fn bc_jump(
    kind: BoundaryCondition,
    polarization: Polarization,
    theta: f64,
    minus: Trace,
    plus: Option<Trace>,
    incident: Option<Trace>,
) -> Result<(Vec3, Vec3)> {
    let scale = |v: Vec3, a: f64| v.map(|c| a * c);
    Ok(match kind {
        BoundaryCondition::Pec => (scale(minus.p, -2.0), [0.0; 3]),
        BoundaryCondition::Abc => {
            let c = theta.cos().abs();
            match polarization {
                Polarization::Te => (scale(minus.p, -2.0 * c), scale(minus.s, -2.0)),
                Polarization::Tm => (scale(minus.p, -2.0), scale(minus.s, -2.0 * c)),
            }
        }
        BoundaryCondition::TfSf(side) => {
            let (plus, inc) = plus.zip(incident).ok_or_else(|| {
                Error::Internal("TF/SF jump needs neighbor and incident traces".into())
            })?;
            let sign = match side {
                TfsfSide::Total => 1.0,
                TfsfSide::Scattered => -1.0,
            };
            let j = |a: Vec3, b: Vec3, i: Vec3| [0, 1, 2].map(|d| a[d] - b[d] + sign * i[d]);
            (j(plus.p, minus.p, inc.p), j(plus.s, minus.s, inc.s))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::dot;

    const Z: Vec3 = [0.0, 0.0, 1.0];

    #[test]
    fn zero_jumps_give_zero_flux() {
        assert_eq!(numerical_flux([0.0; 3], [0.0; 3], 1.0, 1.0, 1.0, 1.0, Z).unwrap(), [0.0; 6]);
    }

    #[test]
    fn normal_jump_carries_nothing() {
        let f = numerical_flux([0.0, 0.0, 3.0], [0.0; 3], 1.0, 1.0, 1.0, 1.0, Z).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn unit_tangential_jump() {
        let f = numerical_flux([1.0, 0.0, 0.0], [0.0; 3], 1.0, 1.0, 1.0, 1.0, Z).unwrap();
        assert_eq!(&f[..3], &[0.5, 0.0, 0.0]);
        // the dissipative sign: the S part opposes n x [P]
        assert_eq!(&f[3..], &[0.0, -0.5, 0.0]);
    }

    #[test]
    fn face_energy_rate_is_non_positive() {
        // Both sides' penalties plus the boundary term of the volume curl integral,
        // n.(S- x P-) - n.(S+ x P+), must not create energy.
        let n = [0.48, -0.6, 0.64];
        let sides = [
            ([1.0, 2.0, -0.5], [0.3, -1.0, 0.2], [0.1, -0.4, 0.9], [2.0, 0.5, 1.0]),
            ([0.0, 1.0, 0.0], [2.0, 0.0, 1.0], [0.0; 3], [0.0; 3]),
        ];
        for (pm, sm, pp, sp) in sides {
            let d = |a: Vec3, b: Vec3| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
            let fm = numerical_flux(d(pp, pm), d(sp, sm), 1.0, 1.0, 1.0, 1.0, n).unwrap();
            let nn = n.map(|c| -c);
            let fp = numerical_flux(d(pm, pp), d(sm, sp), 1.0, 1.0, 1.0, 1.0, nn).unwrap();
            let rate = dot(n, cross(sm, pm)) - dot(n, cross(sp, pp))
                + dot(pm, [fm[0], fm[1], fm[2]])
                + dot(sm, [fm[3], fm[4], fm[5]])
                + dot(pp, [fp[0], fp[1], fp[2]])
                + dot(sp, [fp[3], fp[4], fp[5]]);
            assert!(rate <= 1e-14, "{rate}");
        }
    }

    #[test]
    fn rejects_non_positive_impedance() {
        assert!(numerical_flux([0.0; 3], [0.0; 3], 0.0, 1.0, 1.0, 1.0, Z).is_err());
    }

    #[test]
    fn table_rows() {
        let m = Trace { p: [1.0, 0.0, 0.0], s: [0.0, 1.0, 0.0] };
        let (jp, js) = bc_jump(BoundaryCondition::Pec, Polarization::Te, 0.3, m, None, None).unwrap();
        assert_eq!((jp, js), ([-2.0, 0.0, 0.0], [0.0; 3]));
        let th = 60f64.to_radians();
        let (jp, js) = bc_jump(BoundaryCondition::Abc, Polarization::Te, th, m, None, None).unwrap();
        assert!((jp[0] + 1.0).abs() < 1e-15);
        assert_eq!(js, [0.0, -2.0, 0.0]);
        let te = bc_jump(BoundaryCondition::Abc, Polarization::Te, 0.0, m, None, None).unwrap();
        let tm = bc_jump(BoundaryCondition::Abc, Polarization::Tm, 0.0, m, None, None).unwrap();
        assert_eq!(te, tm);
        assert_eq!(te, ([-2.0, 0.0, 0.0], [0.0, -2.0, 0.0]));
    }

    #[test]
    fn tfsf_sides_and_missing_input() {
        let m = Trace { p: [1.0, 0.0, 0.0], s: [0.0; 3] };
        let p = Trace { p: [0.5, 0.0, 0.0], s: [0.0; 3] };
        let inc = Trace { p: [0.25, 0.0, 0.0], s: [0.0, 0.1, 0.0] };
        let tfsf = |side| bc_jump(BoundaryCondition::TfSf(side), Polarization::Te, 0.0, m, Some(p), Some(inc)).unwrap();
        assert_eq!(tfsf(TfsfSide::Total).0, [-0.25, 0.0, 0.0]);
        assert_eq!(tfsf(TfsfSide::Scattered).0, [-0.75, 0.0, 0.0]);
        assert!(bc_jump(BoundaryCondition::TfSf(TfsfSide::Total), Polarization::Te, 0.0, m, Some(p), None).is_err());
    }

    #[test]
    fn abc_absorbs_outgoing_transformed_wave() {
        // TE wave leaving through the bottom (n = -z): S = k x P / Z with k downward.
        for pol in [Polarization::Te, Polarization::Tm] {
            let th = 50f64.to_radians();
            let (st, ct) = th.sin_cos();
            let k = [st, 0.0, -ct];
            let e = match pol {
                Polarization::Te => [0.0, 1.0, 0.0],
                Polarization::Tm => [ct, 0.0, st],
            };
            let s = cross(k, e);
            let m = Trace { p: e, s };
            let n = [0.0, 0.0, -1.0];
            let (jp, js) = bc_jump(BoundaryCondition::Abc, pol, th, m, None, None).unwrap();
            let f = numerical_flux(jp, js, 1.0, 1.0, 1.0, 1.0, n).unwrap();
            assert!(f.iter().all(|v| v.abs() < 1e-14), "{pol:?}: {f:?}");
        }
    }
}
