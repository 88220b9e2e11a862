//! Assembled semi-discrete operator: connectivity, periodic maps, materials and the
//! right-hand side evaluation.

use std::collections::HashMap;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, Matrix6, Vector6};
use rayon::prelude::*;

use super::flux::{bc_jump, upwind, BoundaryCondition, TfsfSide, Trace};
use super::incidence::{incident_fields, IncidenceConfig};
use crate::error::{Error, Result};
use crate::mesh::{pair_periodic_faces, FaceTag, Lattice2, Mesh, PeriodicMap, Vec3};
use crate::operators::{assemble_q, geometric_factors, GeometricFactors, Material, MaterialTable, Units};
use crate::quadrature::triangle_quadrature;
use crate::reference::{build_reference, ReferenceElement};

/// The six-vector field (Px, Py, Pz, Sx, Sy, Sz) at every node of every element,
/// stored element by element, node by node.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub q: Vec<f64>,
    pub time: f64,
}

impl FieldState {
    pub fn zeros(n_elements: usize, np: usize) -> Self {
        Self {
            q: vec![0.0; 6 * n_elements * np],
            time: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
enum FaceLink {
    /// Another element's face carries the exterior trace node for node.
    Neighbor {
        elem: usize,
        nodes: Vec<usize>,
        tfsf: Option<TfsfSide>,
    },
    Boundary(BoundaryCondition),
    /// Handled by fragment quadrature; contributes nothing to the nodal lift.
    Fragmented,
}

/// One element's view of one non-conformal fragment.
#[derive(Debug, Clone)]
struct FragmentSide {
    partner: usize,
    normal: Vec3,
    /// Transposed interpolation onto the quadrature points, own and partner (np x nq).
    interp_t: DMatrix<f64>,
    partner_interp_t: DMatrix<f64>,
    /// Transposed weighted projection back to nodal coefficients (nq x np).
    lift_t: DMatrix<f64>,
}

/// Everything needed to evaluate dq/dt on one unit cell.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub lattice: Lattice2,
    pub periodic: PeriodicMap,
    pub reference: ReferenceElement,
    pub geometry: GeometricFactors,
    pub materials: MaterialTable,
    pub incidence: IncidenceConfig,
    pub units: Units,
    /// Plane where the incident wave is injected, if any.
    pub z_tfsf: Option<f64>,
    elem_material: Vec<Material>,
    elem_q: Vec<Matrix6<f64>>,
    elem_q_inv: Vec<Matrix6<f64>>,
    links: Vec<[FaceLink; 4]>,
    fragment_sides: Vec<Vec<FragmentSide>>,
    drt: DMatrix<f64>,
    dst: DMatrix<f64>,
    dtt: DMatrix<f64>,
    lift_t: DMatrix<f64>,
}

struct Scratch {
    ur: DMatrix<f64>,
    us: DMatrix<f64>,
    ut: DMatrix<f64>,
    flux: DMatrix<f64>,
}

fn vertex_sigma(fa: [usize; 3], fb: [usize; 3]) -> [usize; 3] {
    fb.map(|v| fa.iter().position(|&u| u == v).expect("faces share vertices"))
}

impl Discretization {
    /// Build the operator of order `order` on `mesh`.
    ///
    /// When `z_tfsf` is given, the interior faces on that plane inject `incidence`;
    /// the total-field region is the side the wave travels into.
    pub fn new(
        mesh: Mesh,
        lattice: Lattice2,
        materials: MaterialTable,
        incidence: IncidenceConfig,
        order: usize,
        z_tfsf: Option<f64>,
    ) -> Result<Self> {
        let reference = build_reference(order)?;
        let geometry = geometric_factors(&mesh)?;
        let units = materials.units;
        let periodic = pair_periodic_faces(&mesh, &lattice, lattice.default_tolerance())?;
        let np = reference.np;
        let k_count = mesh.n_elements();

        let mut q_cache: HashMap<u32, (Matrix6<f64>, Matrix6<f64>)> = HashMap::new();
        let mut elem_material = Vec::with_capacity(k_count);
        let mut elem_q = Vec::with_capacity(k_count);
        let mut elem_q_inv = Vec::with_capacity(k_count);
        for &id in &mesh.material {
            let mat = *materials.get(id)?;
            if let std::collections::hash_map::Entry::Vacant(e) = q_cache.entry(id) {
                let pq = assemble_q(&mat, &incidence, &units)?;
                e.insert((pq.q, pq.q_inv));
            }
            let (q, qi) = q_cache[&id];
            elem_material.push(mat);
            elem_q.push(q);
            elem_q_inv.push(qi);
        }

        let tol = lattice.default_tolerance();
        let tfsf_faces: Vec<(usize, usize)> = match z_tfsf {
            Some(z) => {
                let faces: Vec<_> = (0..k_count)
                    .flat_map(|k| (0..4).map(move |f| (k, f)))
                    .filter(|&(k, f)| {
                        mesh.neighbors[k][f].is_some()
                            && mesh.face_coords(k, f).iter().all(|p| (p[2] - z).abs() <= tol)
                    })
                    .collect();
                if faces.is_empty() {
                    return Err(Error::Config(format!(
                        "TF/SF plane z = {z} is not a layer of interior mesh faces"
                    )));
                }
                faces
            }
            None => Vec::new(),
        };
        let down = incidence.direction.sign() < 0.0;
        let tfsf_side = |k: usize| {
            let below = mesh.centroid(k)[2] < z_tfsf.unwrap_or(0.0);
            if below == down {
                TfsfSide::Total
            } else {
                TfsfSide::Scattered
            }
        };
        for &(k, _) in &tfsf_faces {
            let m = elem_material[k];
            if m.eps_r != 1.0 || m.mu_r != 1.0 {
                return Err(Error::Config("the TF/SF plane must lie in vacuum".into()));
            }
        }

        let mut periodic_links: HashMap<(usize, usize), FaceLink> = HashMap::new();
        for pair in &periodic.conformal {
            let (a, b) = (pair.a, pair.b);
            let to_b = reference.match_face_nodes(a.1, b.1, pair.sigma);
            let mut inv = [0; 3];
            for (j, &i) in pair.sigma.iter().enumerate() {
                inv[i] = j;
            }
            let to_a = reference.match_face_nodes(b.1, a.1, inv);
            periodic_links.insert(
                a,
                FaceLink::Neighbor {
                    elem: b.0,
                    nodes: to_b.iter().map(|&i| reference.face_nodes[b.1][i]).collect(),
                    tfsf: None,
                },
            );
            periodic_links.insert(
                b,
                FaceLink::Neighbor {
                    elem: a.0,
                    nodes: to_a.iter().map(|&i| reference.face_nodes[a.1][i]).collect(),
                    tfsf: None,
                },
            );
        }
        for fr in &periodic.fragments {
            periodic_links.insert(fr.a, FaceLink::Fragmented);
            periodic_links.insert(fr.b, FaceLink::Fragmented);
        }

        let mut links = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let mut row: [FaceLink; 4] = std::array::from_fn(|_| FaceLink::Fragmented);
            for (f, slot) in row.iter_mut().enumerate() {
                *slot = match mesh.face_tags[k][f] {
                    FaceTag::Interior => {
                        let (k2, f2) = mesh.neighbors[k][f].expect("interior face has a neighbor");
                        let sigma = vertex_sigma(mesh.face_vertices(k, f), mesh.face_vertices(k2, f2));
                        let nodes = reference
                            .match_face_nodes(f, f2, sigma)
                            .into_iter()
                            .map(|i| reference.face_nodes[f2][i])
                            .collect();
                        FaceLink::Neighbor {
                            elem: k2,
                            nodes,
                            tfsf: tfsf_faces.contains(&(k, f)).then(|| tfsf_side(k)),
                        }
                    }
                    FaceTag::Pec => FaceLink::Boundary(BoundaryCondition::Pec),
                    FaceTag::AbcTop | FaceTag::AbcBottom => FaceLink::Boundary(BoundaryCondition::Abc),
                    FaceTag::PeriodicX | FaceTag::PeriodicY => periodic_links
                        .remove(&(k, f))
                        .ok_or_else(|| Error::Internal(format!("periodic face {f} of element {k} is unmapped")))?,
                };
            }
            links.push(row);
        }

        let mut fragment_sides = vec![Vec::new(); k_count];
        if !periodic.fragments.is_empty() {
            let rule = triangle_quadrature(2 * order)?;
            let interp = |k: usize, pts: &[Vec3]| {
                let mut m = DMatrix::zeros(np, pts.len());
                for (j, p) in pts.iter().enumerate() {
                    let row = reference.eval_basis(mesh.map_to_reference(k, *p));
                    m.column_mut(j).copy_from_slice(&row);
                }
                m
            };
            for fr in &periodic.fragments {
                let (pts_a, w) = fr.quadrature(&rule);
                let pts_b: Vec<Vec3> = pts_a.iter().map(|&p| fr.to_side_b(p)).collect();
                let ia = interp(fr.a.0, &pts_a);
                let ib = interp(fr.b.0, &pts_b);
                for (own, own_interp, other, other_interp) in
                    [(fr.a, &ia, fr.b, &ib), (fr.b, &ib, fr.a, &ia)]
                {
                    let jac = geometry.elements[own.0].jac;
                    // (1/J) M^-1 I^T diag(w), stored transposed
                    let mut weighted = own_interp.clone();
                    for (j, wj) in w.iter().enumerate() {
                        weighted.column_mut(j).scale_mut(wj / jac);
                    }
                    let lift = &reference.mass_inv * weighted;
                    fragment_sides[own.0].push(FragmentSide {
                        partner: other.0,
                        normal: geometry.elements[own.0].normals[own.1],
                        interp_t: own_interp.clone(),
                        partner_interp_t: other_interp.clone(),
                        lift_t: lift.transpose(),
                    });
                }
            }
        }

        Ok(Self {
            drt: reference.dr.transpose(),
            dst: reference.ds.transpose(),
            dtt: reference.dt.transpose(),
            lift_t: reference.lift.transpose(),
            mesh,
            lattice,
            periodic,
            reference,
            geometry,
            materials,
            incidence,
            units,
            z_tfsf,
            elem_material,
            elem_q,
            elem_q_inv,
            links,
            fragment_sides,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    pub fn np(&self) -> usize {
        self.reference.np
    }

    /// Length of a state vector.
    pub fn state_len(&self) -> usize {
        6 * self.np() * self.n_elements()
    }

    pub fn zero_state(&self) -> FieldState {
        FieldState::zeros(self.n_elements(), self.np())
    }

    pub fn element_material(&self, k: usize) -> &Material {
        &self.elem_material[k]
    }

    /// Physical coordinates of every node, element by element.
    pub fn node_coordinates(&self) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(self.np() * self.n_elements());
        for k in 0..self.n_elements() {
            for r in &self.reference.nodes {
                out.push(self.mesh.map_to_physical(k, *r));
            }
        }
        out
    }

    /// Fill a state by sampling `f(x) -> [P, S]` at every node.
    pub fn sample<F: Fn(Vec3) -> [f64; 6]>(&self, f: F) -> FieldState {
        let mut s = self.zero_state();
        for (i, x) in self.node_coordinates().into_iter().enumerate() {
            s.q[6 * i..6 * i + 6].copy_from_slice(&f(x));
        }
        s
    }

    fn incident_trace(&self, t: f64) -> Trace {
        match self.z_tfsf {
            Some(z) => {
                let (p, s) = incident_fields([0.0, 0.0, z], t, &self.incidence, self.units.z0(), &self.units);
                Trace { p, s }
            }
            None => Trace::default(),
        }
    }

    /// Evaluate dq/dt for state `q` at time `t` into `out`.
    pub fn compute_rhs(&self, q: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        let np = self.np();
        let nfp = self.reference.nfp;
        let n6 = 6 * np;
        assert_eq!(q.len(), self.state_len());
        assert_eq!(out.len(), q.len());
        let inc = self.incident_trace(t);
        let pol = self.incidence.polarization;
        let theta = self.incidence.theta;

        let bad = out
            .par_chunks_mut(n6)
            .enumerate()
            .map_init(
                || Scratch {
                    ur: DMatrix::zeros(6, np),
                    us: DMatrix::zeros(6, np),
                    ut: DMatrix::zeros(6, np),
                    flux: DMatrix::zeros(6, 4 * nfp),
                },
                |scr, (k, rhs)| {
                    let qk = DMatrixView::from_slice(&q[k * n6..(k + 1) * n6], 6, np);
                    scr.ur.gemm(1.0, &qk, &self.drt, 0.0);
                    scr.us.gemm(1.0, &qk, &self.dst, 0.0);
                    scr.ut.gemm(1.0, &qk, &self.dtt, 0.0);
                    let geo = &self.geometry.elements[k];
                    let m = &geo.metric;
                    let mut rhs = DMatrixViewMut::from_slice(rhs, 6, np);
                    for i in 0..np {
                        let d = |c: usize, x: usize| {
                            m[0][x] * scr.ur[(c, i)] + m[1][x] * scr.us[(c, i)] + m[2][x] * scr.ut[(c, i)]
                        };
                        rhs[(0, i)] = d(5, 1) - d(4, 2);
                        rhs[(1, i)] = d(3, 2) - d(5, 0);
                        rhs[(2, i)] = d(4, 0) - d(3, 1);
                        rhs[(3, i)] = d(1, 2) - d(2, 1);
                        rhs[(4, i)] = d(2, 0) - d(0, 2);
                        rhs[(5, i)] = d(0, 1) - d(1, 0);
                    }

                    let own = &self.elem_material[k];
                    let node = |e: usize, i: usize| {
                        let b = e * n6 + 6 * i;
                        Trace {
                            p: [q[b], q[b + 1], q[b + 2]],
                            s: [q[b + 3], q[b + 4], q[b + 5]],
                        }
                    };
                    for f in 0..4 {
                        let n = geo.normals[f];
                        let scale = geo.fscale[f];
                        let fnodes = &self.reference.face_nodes[f];
                        match &self.links[k][f] {
                            FaceLink::Neighbor { elem, nodes, tfsf } => {
                                let other = &self.elem_material[*elem];
                                let (zb, yb) = (own.z + other.z, own.y + other.y);
                                for i in 0..nfp {
                                    let mi = node(k, fnodes[i]);
                                    let pl = node(*elem, nodes[i]);
                                    let (jp, js) = match tfsf {
                                        None => (sub3(pl.p, mi.p), sub3(pl.s, mi.s)),
                                        Some(side) => bc_jump(
                                            BoundaryCondition::TfSf(*side),
                                            pol,
                                            theta,
                                            mi,
                                            Some(pl),
                                            Some(inc),
                                        )
                                        .expect("both traces supplied"),
                                    };
                                    let fl = upwind(jp, js, other.z, zb, other.y, yb, n);
                                    for c in 0..6 {
                                        scr.flux[(c, f * nfp + i)] = scale * fl[c];
                                    }
                                }
                            }
                            FaceLink::Boundary(bc) => {
                                for i in 0..nfp {
                                    let mi = node(k, fnodes[i]);
                                    let (jp, js) = bc_jump(*bc, pol, theta, mi, None, None)
                                        .expect("boundary jumps need no extra traces");
                                    let fl = upwind(jp, js, own.z, 2.0 * own.z, own.y, 2.0 * own.y, n);
                                    for c in 0..6 {
                                        scr.flux[(c, f * nfp + i)] = scale * fl[c];
                                    }
                                }
                            }
                            FaceLink::Fragmented => {
                                scr.flux.columns_mut(f * nfp, nfp).fill(0.0);
                            }
                        }
                    }
                    rhs.gemm(1.0, &scr.flux, &self.lift_t, 1.0);

                    for fs in &self.fragment_sides[k] {
                        let qp = DMatrixView::from_slice(&q[fs.partner * n6..(fs.partner + 1) * n6], 6, np);
                        let tm = &qk * &fs.interp_t;
                        let tp = qp * &fs.partner_interp_t;
                        let other = &self.elem_material[fs.partner];
                        let (zb, yb) = (own.z + other.z, own.y + other.y);
                        let mut fl = DMatrix::zeros(6, tm.ncols());
                        for j in 0..tm.ncols() {
                            let jp = [tp[(0, j)] - tm[(0, j)], tp[(1, j)] - tm[(1, j)], tp[(2, j)] - tm[(2, j)]];
                            let js = [tp[(3, j)] - tm[(3, j)], tp[(4, j)] - tm[(4, j)], tp[(5, j)] - tm[(5, j)]];
                            let v = upwind(jp, js, other.z, zb, other.y, yb, fs.normal);
                            fl.column_mut(j).copy_from_slice(&v);
                        }
                        rhs.gemm(1.0, &fl, &fs.lift_t, 1.0);
                    }

                    let qi = &self.elem_q_inv[k];
                    let mut finite = true;
                    for i in 0..np {
                        let v = qi * Vector6::from_column_slice(rhs.column(i).as_slice());
                        finite &= v.iter().all(|x| x.is_finite());
                        rhs.column_mut(i).copy_from(&v);
                    }
                    !finite
                },
            )
            .any(|b| b);
        if bad {
            return Err(Error::BlowUp { time: t, step: 0 });
        }
        Ok(())
    }

    /// Discrete energy 1/2 sum_k q_k^T (M_k (x) Q_k) q_k.
    pub fn energy(&self, q: &[f64]) -> f64 {
        let np = self.np();
        let n6 = 6 * np;
        (0..self.n_elements())
            .into_par_iter()
            .map(|k| {
                let qk = DMatrixView::from_slice(&q[k * n6..(k + 1) * n6], 6, np);
                let c = (qk * &self.reference.mass) * qk.transpose();
                let qm = &self.elem_q[k];
                let mut e = 0.0;
                for a in 0..6 {
                    for b in 0..6 {
                        e += c[(a, b)] * qm[(a, b)];
                    }
                }
                0.5 * self.geometry.elements[k].jac * e
            })
            .sum()
    }

    /// Right-hand side of the untransformed Maxwell system (E = P, H = S) with the
    /// non-periodic upwind flux, evaluated with dense per-element operators. Only valid
    /// at normal incidence on conformal meshes; used to cross-check [`Self::compute_rhs`].
    pub fn compute_rhs_untransformed(&self, q: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        if self.incidence.theta != 0.0 {
            return Err(Error::Config("the untransformed path requires normal incidence".into()));
        }
        if !self.periodic.fragments.is_empty() {
            return Err(Error::Config("the untransformed path requires conformal periodic planes".into()));
        }
        let np = self.np();
        let nfp = self.reference.nfp;
        let n6 = 6 * np;
        let comp = |k: usize, c: usize| DMatrix::from_fn(np, 1, |i, _| q[k * n6 + 6 * i + c]);
        let e_hat = self.incidence.e_hat();
        let k_hat = self.incidence.k_hat();
        for k in 0..self.n_elements() {
            let geo = &self.geometry.elements[k];
            let d = crate::operators::physical_derivatives(&self.reference, geo);
            let lift = crate::operators::scaled_lift(&self.reference, geo);
            let f: Vec<DMatrix<f64>> = (0..6).map(|c| comp(k, c)).collect();
            let curl = |a: &[DMatrix<f64>]| {
                [
                    &d[1] * &a[2] - &d[2] * &a[1],
                    &d[2] * &a[0] - &d[0] * &a[2],
                    &d[0] * &a[1] - &d[1] * &a[0],
                ]
            };
            let curl_h = curl(&f[3..6]);
            let curl_e = curl(&f[0..3]);
            let mat = &self.elem_material[k];
            let mut fe = DMatrix::zeros(4 * nfp, 3);
            let mut fh = DMatrix::zeros(4 * nfp, 3);
            for face in 0..4 {
                let n = geo.normals[face];
                for i in 0..nfp {
                    let vm = self.reference.face_nodes[face][i];
                    let at = |e: usize, v: usize, c: usize| q[e * n6 + 6 * v + c];
                    let em = [0, 1, 2].map(|c| at(k, vm, c));
                    let hm = [3, 4, 5].map(|c| at(k, vm, c));
                    let (de, dh, zp, yp) = match &self.links[k][face] {
                        FaceLink::Neighbor { elem, nodes, tfsf } => {
                            let vp = nodes[i];
                            let mut ep = [0, 1, 2].map(|c| at(*elem, vp, c));
                            let mut hp = [3, 4, 5].map(|c| at(*elem, vp, c));
                            if let Some(side) = tfsf {
                                // planewave E = e g(t - k.r / c), H = k x E / Z
                                let x = self.mesh.map_to_physical(k, self.reference.nodes[vm]);
                                let z_rel = [x[0], x[1], x[2] - self.incidence.z_ref];
                                let arg = t - crate::mesh::dot(k_hat, z_rel) / self.units.c0;
                                let g = self.incidence.waveform.value(arg);
                                let ei = e_hat.map(|c| c * g);
                                let hi = crate::mesh::cross(k_hat, ei).map(|c| c / self.units.z0());
                                let s = if *side == TfsfSide::Total { 1.0 } else { -1.0 };
                                for c in 0..3 {
                                    ep[c] += s * ei[c];
                                    hp[c] += s * hi[c];
                                }
                            }
                            let o = &self.elem_material[*elem];
                            (sub3(ep, em), sub3(hp, hm), o.z, o.y)
                        }
                        FaceLink::Boundary(BoundaryCondition::Pec) => (em.map(|v| -2.0 * v), [0.0; 3], mat.z, mat.y),
                        FaceLink::Boundary(_) => (em.map(|v| -2.0 * v), hm.map(|v| -2.0 * v), mat.z, mat.y),
                        FaceLink::Fragmented => unreachable!("checked above"),
                    };
                    let (zb, yb) = (mat.z + zp, mat.y + yp);
                    let ndote = n[0] * de[0] + n[1] * de[1] + n[2] * de[2];
                    let ndoth = n[0] * dh[0] + n[1] * dh[1] + n[2] * dh[2];
                    let nxdh = crate::mesh::cross(n, dh);
                    let nxde = crate::mesh::cross(n, de);
                    for c in 0..3 {
                        // tangential jump of E is de - n (n.de)
                        fe[(face * nfp + i, c)] = (zp * nxdh[c] + de[c] - n[c] * ndote) / zb;
                        fh[(face * nfp + i, c)] = (-yp * nxde[c] + dh[c] - n[c] * ndoth) / yb;
                    }
                }
            }
            let le = &lift * fe;
            let lh = &lift * fh;
            for i in 0..np {
                for c in 0..3 {
                    out[k * n6 + 6 * i + c] = (curl_h[c][i] + le[(i, c)]) / mat.eps;
                    out[k * n6 + 6 * i + 3 + c] = (-curl_e[c][i] + lh[(i, c)]) / mat.mu;
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box_mesh, BoundaryKind, BoxMeshSpec};
    use crate::solver::{Direction, Polarization, Waveform};

    fn cell(theta_deg: f64, bc: BoundaryKind, z_tfsf: Option<f64>, stagger: bool) -> Discretization {
        let lat = Lattice2::rectangular(1.0, 1.2).unwrap();
        let mut spec = BoxMeshSpec::uniform(lat, 0.0, 2.0, 2, 2, 4);
        spec.top = bc;
        spec.bottom = bc;
        spec.stagger = stagger;
        let mesh = generate_box_mesh(&spec).unwrap();
        let materials = MaterialTable::new(Units::natural()).with(0, 1.0, 1.0).unwrap();
        let wf = Waveform::from_band(0.2, 0.8, 1.0).unwrap();
        let mut inc =
            IncidenceConfig::new(theta_deg.to_radians(), 0.3, Polarization::Tm, Direction::Down, wf).unwrap();
        inc.z_ref = 1.0;
        Discretization::new(mesh, lat, materials, inc, 2, z_tfsf).unwrap()
    }

    fn smooth(x: Vec3) -> [f64; 6] {
        let (a, b, c) = (x[0] * std::f64::consts::TAU, x[1] * std::f64::consts::TAU / 1.2, x[2]);
        [
            a.sin() + c,
            b.cos() * c,
            (a + b).sin(),
            0.5 * c * c,
            (a - b).cos(),
            a.cos() * b.sin(),
        ]
    }

    #[test]
    fn constant_state_is_steady_away_from_boundaries() {
        for stagger in [false, true] {
            let d = cell(40.0, BoundaryKind::Abc, None, stagger);
            let s = d.sample(|_| [0.3, -1.0, 2.0, 0.7, 0.1, -0.4]);
            let mut out = vec![0.0; d.state_len()];
            d.compute_rhs(&s.q, 0.0, &mut out).unwrap();
            let n6 = 6 * d.np();
            for k in 0..d.n_elements() {
                if d.mesh.face_tags[k].iter().any(|t| matches!(t, FaceTag::Pec | FaceTag::AbcTop | FaceTag::AbcBottom)) {
                    continue;
                }
                let m = out[k * n6..(k + 1) * n6].iter().fold(0.0f64, |a, v| a.max(v.abs()));
                assert!(m < 1e-10, "element {k}: {m}");
            }
        }
    }

    #[test]
    fn silent_cell_stays_silent() {
        let d = cell(20.0, BoundaryKind::Abc, None, false);
        let mut out = vec![1.0; d.state_len()];
        d.compute_rhs(&d.zero_state().q, 3.0, &mut out).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn normal_incidence_matches_plain_maxwell() {
        let d = cell(0.0, BoundaryKind::Abc, Some(1.0), false);
        let s = d.sample(smooth);
        let mut a = vec![0.0; d.state_len()];
        let mut b = vec![0.0; d.state_len()];
        for t in [0.0, d.incidence.waveform.t0] {
            d.compute_rhs(&s.q, t, &mut a).unwrap();
            d.compute_rhs_untransformed(&s.q, t, &mut b).unwrap();
            let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(diff <= 1e-12 * scale, "t = {t}: {diff} vs {scale}");
        }
    }

    #[test]
    fn untransformed_path_rejects_oblique_cells() {
        let d = cell(10.0, BoundaryKind::Abc, None, false);
        let q = d.zero_state().q;
        let mut out = vec![0.0; q.len()];
        assert!(d.compute_rhs_untransformed(&q, 0.0, &mut out).is_err());
    }

    #[test]
    fn energy_rate_is_non_positive() {
        // dE/dt = q^T (M kron Q) dq/dt is the sum of face terms, all dissipative
        for (theta, stagger) in [(0.0, false), (35.0, false), (60.0, true)] {
            for bc in [BoundaryKind::Pec, BoundaryKind::Abc] {
                let d = cell(theta, bc, None, stagger);
                let s = d.sample(smooth);
                let mut r = vec![0.0; d.state_len()];
                d.compute_rhs(&s.q, 0.0, &mut r).unwrap();
                let h = 1e-6;
                let plus: Vec<f64> = s.q.iter().zip(&r).map(|(q, k)| q + h * k).collect();
                let minus: Vec<f64> = s.q.iter().zip(&r).map(|(q, k)| q - h * k).collect();
                let rate = (d.energy(&plus) - d.energy(&minus)) / (2.0 * h);
                assert!(rate <= 1e-9 * d.energy(&s.q), "theta {theta}, {bc:?}: {rate}");
            }
        }
    }

    #[test]
    fn oblique_plane_wave_crosses_periodic_seams() {
        // the specular wave is x,y-invariant in P,S, so any seam defect shows up as O(1)
        for stagger in [false, true] {
            let d = cell(50.0, BoundaryKind::Abc, None, stagger);
            let (k, e) = (d.incidence.k_hat(), d.incidence.e_hat());
            let wave = |x: Vec3, dt: bool| {
                let ph = -k[2] * x[2];
                let g = if dt { -ph.sin() } else { ph.cos() };
                let p = e.map(|c| c * g);
                let s = crate::mesh::cross(k, p);
                [p[0], p[1], p[2], s[0], s[1], s[2]]
            };
            let s = d.sample(|x| wave(x, false));
            let exact = d.sample(|x| wave(x, true));
            let mut out = vec![0.0; d.state_len()];
            d.compute_rhs(&s.q, 0.0, &mut out).unwrap();
            let n6 = 6 * d.np();
            let mut worst = 0.0f64;
            for el in 0..d.n_elements() {
                if d.mesh.face_tags[el].iter().any(|t| matches!(t, FaceTag::AbcTop | FaceTag::AbcBottom)) {
                    continue;
                }
                for i in el * n6..(el + 1) * n6 {
                    worst = worst.max((out[i] - exact.q[i]).abs());
                }
            }
            assert!(worst < 2e-2, "stagger {stagger}: {worst}");
        }
    }

    #[test]
    fn non_finite_state_reports_blow_up() {
        let d = cell(0.0, BoundaryKind::Pec, None, false);
        let mut q = d.zero_state().q;
        q[5] = f64::NAN;
        let mut out = vec![0.0; q.len()];
        assert!(matches!(d.compute_rhs(&q, 0.0, &mut out), Err(Error::BlowUp { .. })));
    }
}
