//! Per-element geometry, material tables and the periodic/materials matrix Q.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix3, Matrix6};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};
use crate::reference::{ReferenceElement, REFERENCE_VOLUME};
use crate::solver::IncidenceConfig;

/// Physical constants used to dimension the equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub c0: f64,
    pub eps0: f64,
    pub mu0: f64,
}

impl Units {
    pub fn si() -> Self {
        let mu0 = 1.256_637_062_12e-6;
        let c0 = 299_792_458.0;
        Self {
            c0,
            eps0: 1.0 / (mu0 * c0 * c0),
            mu0,
        }
    }

    /// c0 = eps0 = mu0 = 1.
    pub fn natural() -> Self {
        Self {
            c0: 1.0,
            eps0: 1.0,
            mu0: 1.0,
        }
    }

    /// Free-space wave impedance.
    pub fn z0(&self) -> f64 {
        (self.mu0 / self.eps0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub eps_r: f64,
    pub mu_r: f64,
    /// Absolute permittivity.
    pub eps: f64,
    /// Absolute permeability.
    pub mu: f64,
    /// Wave impedance.
    pub z: f64,
    /// Wave admittance, 1/z.
    pub y: f64,
}

impl Material {
    pub fn new(eps_r: f64, mu_r: f64, units: &Units) -> Result<Self> {
        if !(eps_r >= 1.0 && mu_r >= 1.0 && eps_r.is_finite() && mu_r.is_finite()) {
            return Err(Error::Material(format!(
                "eps_r = {eps_r}, mu_r = {mu_r}: lossless materials need both >= 1"
            )));
        }
        let z = units.z0() * (mu_r / eps_r).sqrt();
        Ok(Self {
            eps_r,
            mu_r,
            eps: units.eps0 * eps_r,
            mu: units.mu0 * mu_r,
            z,
            y: 1.0 / z,
        })
    }
}

/// Materials keyed by the mesh's element material ids.
#[derive(Debug, Clone)]
pub struct MaterialTable {
    pub units: Units,
    entries: BTreeMap<u32, Material>,
}

impl MaterialTable {
    pub fn new(units: Units) -> Self {
        Self {
            units,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: u32, eps_r: f64, mu_r: f64) -> Result<()> {
        self.entries.insert(id, Material::new(eps_r, mu_r, &self.units)?);
        Ok(())
    }

    pub fn with(mut self, id: u32, eps_r: f64, mu_r: f64) -> Result<Self> {
        self.insert(id, eps_r, mu_r)?;
        Ok(self)
    }

    pub fn get(&self, id: u32) -> Result<&Material> {
        self.entries
            .get(&id)
            .ok_or_else(|| Error::Material(format!("material id {id} is not defined")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Material)> {
        self.entries.iter().map(|(&k, v)| (k, v))
    }
}

/// Q and its inverse for one material under a given incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicQ {
    pub q: Matrix6<f64>,
    pub q_inv: Matrix6<f64>,
    pub kappa: [f64; 2],
}

/// Cross-product matrix: `skew(v) w = v x w`.
pub fn skew(v: Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

/// Assemble Q = [[eps I, c0^-1 [k_par]x], [-c0^-1 [k_par]x, mu I]] for `mat`.
pub fn assemble_q(mat: &Material, inc: &IncidenceConfig, units: &Units) -> Result<PeriodicQ> {
    let kappa = inc.kappa();
    let sin2 = kappa[0] * kappa[0] + kappa[1] * kappa[1];
    if mat.eps_r * mat.mu_r <= sin2 {
        return Err(Error::GrazingIncidence {
            eps_mu: mat.eps_r * mat.mu_r,
            sin2,
        });
    }
    let k = skew([kappa[0], kappa[1], 0.0]) / units.c0;
    let mut q = Matrix6::zeros();
    q.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() * mat.eps));
    q.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * mat.mu));
    q.fixed_view_mut::<3, 3>(0, 3).copy_from(&k);
    q.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-k));
    // the Schur complement is eps mu I - c^-2 K^2, positive definite when the
    // grazing check passes, so this cannot fail
    let q_inv = q
        .try_inverse()
        .ok_or_else(|| Error::Internal("Q is singular".into()))?;
    Ok(PeriodicQ { q, q_inv, kappa })
}

/// Q acting on a full element vector ordered component-major (all nodes of Px, then
/// Py, ...): the Kronecker product Q (x) I_np.
pub fn expanded_q(q: &Matrix6<f64>, np: usize) -> DMatrix<f64> {
    let q = DMatrix::from_fn(6, 6, |i, j| q[(i, j)]);
    q.kronecker(&DMatrix::identity(np, np))
}

/// Affine geometry of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    /// Volume Jacobian det(dx/dr).
    pub jac: f64,
    /// Rows are the gradients of r, s and t in physical coordinates.
    pub metric: [[f64; 3]; 3],
    /// Surface Jacobian of each face (physical area over reference face area 2).
    pub sj: [f64; 4],
    pub normals: [Vec3; 4],
    /// sj / jac per face.
    pub fscale: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct GeometricFactors {
    pub elements: Vec<ElementGeometry>,
}

impl GeometricFactors {
    /// Maximum deviation from zero of the closed-surface sum of sj * n per element,
    /// relative to the largest face term.
    pub fn closure_error(&self) -> f64 {
        self.elements
            .iter()
            .map(|g| {
                let mut s = [0.0; 3];
                let mut scale: f64 = 0.0;
                for f in 0..4 {
                    for d in 0..3 {
                        s[d] += g.sj[f] * g.normals[f][d];
                    }
                    scale = scale.max(g.sj[f]);
                }
                s.iter().map(|v| v.abs()).fold(0.0, f64::max) / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Geometric factors of every element of `mesh`.
pub fn geometric_factors(mesh: &Mesh) -> Result<GeometricFactors> {
    let mut elements = Vec::with_capacity(mesh.n_elements());
    for k in 0..mesh.n_elements() {
        let t = mesh.tets[k];
        let v0 = mesh.vertices[t[0]];
        let a = Matrix3::from_fn(|i, j| 0.5 * (mesh.vertices[t[j + 1]][i] - v0[i]));
        let jac = a.determinant();
        if !(jac > 0.0) {
            return Err(Error::Validation(format!(
                "element {k} has non-positive Jacobian {jac:.3e}"
            )));
        }
        debug_assert!((jac - mesh.volume(k) / REFERENCE_VOLUME).abs() <= 1e-12 * jac);
        let inv = a.try_inverse().expect("positive Jacobian");
        let metric = [0, 1, 2].map(|i| [inv[(i, 0)], inv[(i, 1)], inv[(i, 2)]]);
        let sj = [0, 1, 2, 3].map(|f| 0.5 * mesh.face_area(k, f));
        let normals = [0, 1, 2, 3].map(|f| mesh.face_normal(k, f));
        elements.push(ElementGeometry {
            jac,
            metric,
            sj,
            normals,
            fscale: sj.map(|s| s / jac),
        });
    }
    Ok(GeometricFactors { elements })
}

/// Physical derivative matrices (Dx, Dy, Dz) of one element.
pub fn physical_derivatives(re: &ReferenceElement, geo: &ElementGeometry) -> [DMatrix<f64>; 3] {
    let m = &geo.metric;
    [0, 1, 2].map(|d| &re.dr * m[0][d] + &re.ds * m[1][d] + &re.dt * m[2][d])
}

/// Lift of per-face nodal traces into the element, including the surface/volume scaling.
pub fn scaled_lift(re: &ReferenceElement, geo: &ElementGeometry) -> DMatrix<f64> {
    let mut l = re.lift.clone();
    for f in 0..4 {
        l.columns_mut(f * re.nfp, re.nfp).scale_mut(geo.fscale[f]);
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box_mesh, BoxMeshSpec, FaceTag, Lattice2};
    use crate::reference::{build_reference, FACE_VERTICES};
    use crate::solver::{Direction, Polarization, Waveform};
    use std::collections::HashMap;

    fn inc(theta_deg: f64, phi_deg: f64) -> IncidenceConfig {
        IncidenceConfig::new(
            theta_deg.to_radians(),
            phi_deg.to_radians(),
            Polarization::Te,
            Direction::Down,
            Waveform::from_band(1.0, 2.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn single_tet(verts: Vec<Vec3>) -> Mesh {
        let mut tags = HashMap::new();
        for fv in FACE_VERTICES {
            let mut k = fv;
            k.sort_unstable();
            tags.insert(k, FaceTag::Pec);
        }
        Mesh::from_parts(verts, vec![[0, 1, 2, 3]], vec![0], &tags).unwrap()
    }

    fn reference_tet() -> Vec<Vec3> {
        vec![[-1.0, -1.0, -1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    }

    #[test]
    fn reference_element_maps_to_itself() {
        let g = geometric_factors(&single_tet(reference_tet())).unwrap();
        let e = &g.elements[0];
        assert!((e.jac - 1.0).abs() < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                assert!((e.metric[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        assert!((e.sj[0] - 1.0).abs() < 1e-15);
        assert!((e.sj[2] - 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(e.normals[0], [0.0, 0.0, -1.0]);
    }

    #[test]
    fn uniform_scaling() {
        let s = 0.37;
        let g0 = geometric_factors(&single_tet(reference_tet())).unwrap();
        let g = geometric_factors(&single_tet(reference_tet().into_iter().map(|v| v.map(|c| c * s)).collect())).unwrap();
        assert!((g.elements[0].jac - s.powi(3)).abs() < 1e-15);
        for f in 0..4 {
            assert!((g.elements[0].sj[f] - s * s * g0.elements[0].sj[f]).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_surface_identity_on_generated_mesh() {
        let lat = Lattice2::rectangular(0.35, 0.35).unwrap();
        let mut spec = BoxMeshSpec::uniform(lat, 0.0, 1.0, 3, 2, 3);
        spec.stagger = true;
        let g = geometric_factors(&generate_box_mesh(&spec).unwrap()).unwrap();
        assert!(g.closure_error() <= 1e-10);
        for e in &g.elements {
            assert!(e.jac > 0.0);
            for n in e.normals {
                assert!((n[0] * n[0] + n[1] * n[1] + n[2] * n[2] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_of_constants_and_coordinates() {
        let m = single_tet(vec![[0.1, 0.2, 0.0], [1.3, 0.0, 0.1], [0.2, 0.9, 0.3], [0.0, 0.1, 1.2]]);
        let g = geometric_factors(&m).unwrap();
        let re = build_reference(3).unwrap();
        let d = physical_derivatives(&re, &g.elements[0]);
        let x: Vec<Vec3> = re.nodes.iter().map(|&r| m.map_to_physical(0, r)).collect();
        for dir in 0..3 {
            let ones = DMatrix::from_element(re.np, 1, 1.0);
            assert!((&d[dir] * ones).amax() < 1e-12);
            for c in 0..3 {
                let xc = DMatrix::from_fn(re.np, 1, |i, _| x[i][c]);
                let expect = if c == dir { 1.0 } else { 0.0 };
                assert!((&d[dir] * xc).iter().all(|v| (v - expect).abs() < 1e-11));
            }
        }
        let lift = scaled_lift(&re, &g.elements[0]);
        assert_eq!((&lift * DMatrix::zeros(4 * re.nfp, 1)).amax(), 0.0);
    }

    #[test]
    fn curl_of_polynomial_field_is_exact() {
        let lat = Lattice2::rectangular(1.0, 1.0).unwrap();
        let mesh = generate_box_mesh(&BoxMeshSpec::uniform(lat, 0.0, 1.0, 2, 1, 1)).unwrap();
        let g = geometric_factors(&mesh).unwrap();
        let re = build_reference(3).unwrap();
        let field = |p: Vec3| [p[1] * p[1] * p[2], p[0] * p[2] - p[0].powi(3), p[0] * p[1] * p[2]];
        let curl = |p: Vec3| {
            let (x, y, z) = (p[0], p[1], p[2]);
            // d/dy Fz - d/dz Fy, d/dz Fx - d/dx Fz, d/dx Fy - d/dy Fx
            [x * z - x, y * y - y * z, z - 3.0 * x * x - 2.0 * y * z]
        };
        for k in 0..mesh.n_elements() {
            let d = physical_derivatives(&re, &g.elements[k]);
            let x: Vec<Vec3> = re.nodes.iter().map(|&r| mesh.map_to_physical(k, r)).collect();
            let comp = |c: usize| DMatrix::from_fn(re.np, 1, |i, _| field(x[i])[c]);
            let (fx, fy, fz) = (comp(0), comp(1), comp(2));
            let cx = &d[1] * &fz - &d[2] * &fy;
            let cy = &d[2] * &fx - &d[0] * &fz;
            let cz = &d[0] * &fy - &d[1] * &fx;
            for i in 0..re.np {
                let c = curl(x[i]);
                for (got, want) in [cx[i], cy[i], cz[i]].iter().zip(c) {
                    assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
                }
            }
        }
    }

    #[test]
    fn normal_incidence_q_is_diagonal() {
        let u = Units::si();
        let mat = Material::new(4.0, 1.0, &u).unwrap();
        let pq = assemble_q(&mat, &inc(0.0, 0.0), &u).unwrap();
        let diag = Matrix6::from_diagonal(&nalgebra::Vector6::new(
            mat.eps, mat.eps, mat.eps, mat.mu, mat.mu, mat.mu,
        ));
        assert_eq!(pq.q, diag);
        assert!((pq.q_inv[(0, 0)] - 1.0 / mat.eps).abs() < 1e-12 / mat.eps);
    }

    #[test]
    fn natural_units_eigenvalues_at_fifty_degrees() {
        let u = Units::natural();
        let pq = assemble_q(&Material::new(1.0, 1.0, &u).unwrap(), &inc(50.0, 0.0), &u).unwrap();
        let mut ev: Vec<f64> = pq.q.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let s = 50f64.to_radians().sin();
        let want = [1.0 - s, 1.0 - s, 1.0, 1.0, 1.0 + s, 1.0 + s];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grazing_is_rejected() {
        let u = Units::natural();
        let mut i = inc(0.0, 0.0);
        i.theta = std::f64::consts::FRAC_PI_2;
        let err = assemble_q(&Material::new(1.0, 1.0, &u).unwrap(), &i, &u).unwrap_err();
        assert!(matches!(err, Error::GrazingIncidence { .. }));
    }

    #[test]
    fn q_sweep_symmetric_positive_definite() {
        let u = Units::si();
        for eps_r in [1.0, 4.0] {
            let mat = Material::new(eps_r, 1.0, &u).unwrap();
            for th in [0.0, 20.0, 45.0, 70.0, 89.0] {
                for phi in [0.0, 35.0] {
                    let pq = assemble_q(&mat, &inc(th, phi), &u).unwrap();
                    let scale = pq.q.amax();
                    assert!((pq.q - pq.q.transpose()).amax() <= 1e-14 * scale);
                    // scale columns so the eigenvalue check is insensitive to eps0 vs mu0
                    let d = Matrix6::from_diagonal(&nalgebra::Vector6::new(
                        mat.eps.sqrt().recip(), mat.eps.sqrt().recip(), mat.eps.sqrt().recip(),
                        mat.mu.sqrt().recip(), mat.mu.sqrt().recip(), mat.mu.sqrt().recip(),
                    ));
                    let qs = d * pq.q * d;
                    assert!(qs.symmetric_eigenvalues().min() > 0.0);
                    let d_inv = d.try_inverse().unwrap();
                    let id = qs * (d_inv * pq.q_inv * d_inv);
                    let cond = th.to_radians().cos().powi(-2);
                    assert!((id - Matrix6::identity()).amax() <= 1e-14 * cond, "{th}");
                }
            }
        }
    }

    #[test]
    fn expanded_q_equals_block_entries() {
        let u = Units::natural();
        let pq = assemble_q(&Material::new(2.0, 1.5, &u).unwrap(), &inc(40.0, 25.0), &u).unwrap();
        let np = 4;
        let big = expanded_q(&pq.q, np);
        let [kx, ky] = pq.kappa;
        // written out entry by entry from the block form
        let blocks = [
            [2.0, 0.0, 0.0, 0.0, 0.0, ky],
            [0.0, 2.0, 0.0, 0.0, 0.0, -kx],
            [0.0, 0.0, 2.0, -ky, kx, 0.0],
            [0.0, 0.0, -ky, 1.5, 0.0, 0.0],
            [0.0, 0.0, kx, 0.0, 1.5, 0.0],
            [ky, -kx, 0.0, 0.0, 0.0, 1.5],
        ];
        for bi in 0..6 {
            for bj in 0..6 {
                for i in 0..np {
                    for j in 0..np {
                        let want = if i == j { blocks[bi][bj] } else { 0.0 };
                        assert_eq!(big[(bi * np + i, bj * np + j)], want);
                    }
                }
            }
        }
    }
}
