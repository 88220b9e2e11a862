//! Order-P nodal element on the reference tetrahedron.
//!
//! The reference tetrahedron has vertices (-1,-1,-1), (1,-1,-1), (-1,1,-1), (-1,-1,1).
//! Its faces are numbered by the local vertex triples in [`FACE_VERTICES`]:
//! face 0 is t = -1, face 1 is s = -1, face 2 is r + s + t = -1 and face 3 is r = -1.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::jacobi::{gauss_lobatto, grad_jacobi_p, jacobi_p};

/// Local vertex indices of each face, in the order used for face barycentrics.
pub const FACE_VERTICES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 2, 3]];

/// The six orderings of a triangle's three vertices.
pub const TRIANGLE_PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 2, 0],
    [2, 0, 1],
    [0, 2, 1],
    [2, 1, 0],
    [1, 0, 2],
];

/// Highest supported polynomial order.
pub const MAX_ORDER: usize = 8;

/// Volume of the reference tetrahedron.
pub const REFERENCE_VOLUME: f64 = 4.0 / 3.0;

/// Warp-and-blend optimization parameter, indexed by order.
const ALPHA_OPT: [f64; 9] = [
    0.0, 0.0, 0.0, 0.0, 0.1002, 1.1332, 1.5608, 1.3413, 1.2577,
];

const NODE_TOL: f64 = 1e-10;

pub fn node_count(order: usize) -> usize {
    (order + 1) * (order + 2) * (order + 3) / 6
}

pub fn face_node_count(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// Barycentric coordinates (one per reference vertex) of a point given in (r,s,t).
pub fn barycentric(r: f64, s: f64, t: f64) -> [f64; 4] {
    [
        -0.5 * (1.0 + r + s + t),
        0.5 * (1.0 + r),
        0.5 * (1.0 + s),
        0.5 * (1.0 + t),
    ]
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub order: usize,
    pub np: usize,
    pub nfp: usize,
    /// Node coordinates (r, s, t).
    pub nodes: Vec<[f64; 3]>,
    pub vandermonde: DMatrix<f64>,
    pub vandermonde_inv: DMatrix<f64>,
    /// 2-norm condition number of the Vandermonde matrix.
    pub condition: f64,
    pub dr: DMatrix<f64>,
    pub ds: DMatrix<f64>,
    pub dt: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub mass_inv: DMatrix<f64>,
    /// Volume node indices of each face's nodes.
    pub face_nodes: [Vec<usize>; 4],
    /// Face-local barycentric coordinates of each face node (w.r.t. `FACE_VERTICES[f]`).
    pub face_bary: [Vec<[f64; 3]>; 4],
    /// Face mass matrices on the reference triangle of area 2.
    pub face_mass: [DMatrix<f64>; 4],
    /// M^{-1} E, mapping the concatenated 4*Nfp face values to the volume.
    pub lift: DMatrix<f64>,
    /// `face_perm[f][o][i]`: face-local index of the node whose barycentrics are those
    /// of node `i` reordered by `TRIANGLE_PERMUTATIONS[o]`.
    pub face_perm: [Vec<Vec<usize>>; 4],
}

impl ReferenceElement {
    /// Number of stored face nodes over all four faces.
    pub fn nfaces_nodes(&self) -> usize {
        4 * self.nfp
    }

    /// Values of every nodal basis function at (r, s, t).
    pub fn eval_basis(&self, rst: [f64; 3]) -> Vec<f64> {
        let psi = modal_row(self.order, rst);
        // l(x) = V^{-T} psi(x)
        let mut out = vec![0.0; self.np];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..self.np)
                .map(|m| self.vandermonde_inv[(m, i)] * psi[m])
                .sum();
        }
        out
    }

    /// Face-node map between two faces that share a physical triangle.
    ///
    /// `sigma[k]` is the position, within face `fa`'s vertex list, of the vertex that is
    /// `k`-th in face `fb`'s vertex list. Returns, for every node of `fa`, the matching
    /// face-local node index on `fb`.
    pub fn match_face_nodes(&self, fa: usize, fb: usize, sigma: [usize; 3]) -> Vec<usize> {
        self.face_bary[fa]
            .iter()
            .map(|la| {
                let mu = [la[sigma[0]], la[sigma[1]], la[sigma[2]]];
                find_bary(&self.face_bary[fb], mu).expect("face node sets are symmetric")
            })
            .collect()
    }
}

fn find_bary(list: &[[f64; 3]], target: [f64; 3]) -> Option<usize> {
    list.iter().position(|b| {
        (b[0] - target[0]).abs() < NODE_TOL
            && (b[1] - target[1]).abs() < NODE_TOL
            && (b[2] - target[2]).abs() < NODE_TOL
    })
}

/// Build the order-`order` reference element.
pub fn build_reference(order: usize) -> Result<ReferenceElement> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::Config(format!(
            "polynomial order {order} outside supported range 1..={MAX_ORDER}"
        )));
    }
    let np = node_count(order);
    let nfp = face_node_count(order);
    let nodes = nodes_3d(order);
    let v = vandermonde(&nodes, order)?;
    let sv = v.clone().svd(false, false).singular_values;
    let condition = sv.max() / sv.min();
    log::debug!("order {order}: Vandermonde condition number {condition:.3e}");
    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NodeSet("Vandermonde matrix is singular".into()))?;

    let (vr, vs, vt) = grad_vandermonde(&nodes, order);
    let dr = &vr * &v_inv;
    let ds = &vs * &v_inv;
    let dt = &vt * &v_inv;

    let mass_inv = &v * v.transpose();
    let mass = v_inv.transpose() * &v_inv;

    let mut face_nodes: [Vec<usize>; 4] = Default::default();
    let mut face_bary: [Vec<[f64; 3]>; 4] = Default::default();
    for (i, p) in nodes.iter().enumerate() {
        let l = barycentric(p[0], p[1], p[2]);
        for f in 0..4 {
            let missing = (0..4).find(|v| !FACE_VERTICES[f].contains(v)).unwrap();
            if l[missing].abs() < NODE_TOL {
                face_nodes[f].push(i);
                let fv = FACE_VERTICES[f];
                face_bary[f].push([l[fv[0]], l[fv[1]], l[fv[2]]]);
            }
        }
    }
    for f in 0..4 {
        if face_nodes[f].len() != nfp {
            return Err(Error::NodeSet(format!(
                "face {f} carries {} nodes, expected {nfp}",
                face_nodes[f].len()
            )));
        }
    }

    let mut face_mass: [DMatrix<f64>; 4] = Default::default();
    let mut emat = DMatrix::<f64>::zeros(np, 4 * nfp);
    for f in 0..4 {
        let pts: Vec<[f64; 2]> = face_bary[f]
            .iter()
            .map(|l| [-1.0 + 2.0 * l[1], -1.0 + 2.0 * l[2]])
            .collect();
        let v2 = vandermonde_2d(&pts, order);
        let m2 = (&v2 * v2.transpose())
            .try_inverse()
            .ok_or_else(|| Error::NodeSet(format!("face {f} nodes are not unisolvent")))?;
        for (i, &vi) in face_nodes[f].iter().enumerate() {
            for j in 0..nfp {
                emat[(vi, f * nfp + j)] = m2[(i, j)];
            }
        }
        face_mass[f] = m2;
    }
    let lift = &mass_inv * emat;

    let mut face_perm: [Vec<Vec<usize>>; 4] = Default::default();
    for f in 0..4 {
        for perm in TRIANGLE_PERMUTATIONS {
            let map = face_bary[f]
                .iter()
                .map(|l| {
                    find_bary(&face_bary[f], [l[perm[0]], l[perm[1]], l[perm[2]]]).ok_or_else(
                        || Error::NodeSet(format!("face {f} node set is not symmetric")),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            face_perm[f].push(map);
        }
    }

    Ok(ReferenceElement {
        order,
        np,
        nfp,
        nodes,
        vandermonde: v,
        vandermonde_inv: v_inv,
        condition,
        dr,
        ds,
        dt,
        mass,
        mass_inv,
        face_nodes,
        face_bary,
        face_mass,
        lift,
        face_perm,
    })
}

/// Vandermonde matrix of the orthonormal simplex basis at `nodes`:
/// `V[i][m]` is mode `m` evaluated at node `i`.
pub fn vandermonde(nodes: &[[f64; 3]], order: usize) -> Result<DMatrix<f64>> {
    let np = node_count(order);
    if nodes.len() != np {
        return Err(Error::NodeSet(format!(
            "{} nodes given, order {order} needs {np}",
            nodes.len()
        )));
    }
    let mut v = DMatrix::<f64>::zeros(np, np);
    for (i, &p) in nodes.iter().enumerate() {
        for (m, val) in modal_row(order, p).into_iter().enumerate() {
            v[(i, m)] = val;
        }
    }
    let sv = v.clone().svd(false, false).singular_values;
    if sv.min() < 1e-12 * sv.max() {
        return Err(Error::NodeSet(format!(
            "nodes are not unisolvent for degree {order} (smallest singular value {:.3e})",
            sv.min()
        )));
    }
    Ok(v)
}

fn mode_indices(order: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..=order).flat_map(move |i| {
        (0..=order - i).flat_map(move |j| (0..=order - i - j).map(move |k| (i, j, k)))
    })
}

fn rst_to_abc(r: f64, s: f64, t: f64) -> (f64, f64, f64) {
    let a = if (s + t).abs() > 1e-13 {
        2.0 * (1.0 + r) / (-s - t) - 1.0
    } else {
        -1.0
    };
    let b = if (t - 1.0).abs() > 1e-13 {
        2.0 * (1.0 + s) / (1.0 - t) - 1.0
    } else {
        -1.0
    };
    (a, b, t)
}

/// All orthonormal modes evaluated at one point.
pub fn modal_row(order: usize, p: [f64; 3]) -> Vec<f64> {
    let (a, b, c) = rst_to_abc(p[0], p[1], p[2]);
    mode_indices(order)
        .map(|(i, j, k)| simplex_3d_p(a, b, c, i, j, k))
        .collect()
}

fn simplex_3d_p(a: f64, b: f64, c: f64, i: usize, j: usize, k: usize) -> f64 {
    let h1 = jacobi_p(a, 0.0, 0.0, i);
    let h2 = jacobi_p(b, (2 * i + 1) as f64, 0.0, j);
    let h3 = jacobi_p(c, (2 * (i + j) + 2) as f64, 0.0, k);
    2.0 * std::f64::consts::SQRT_2 * h1 * h2 * (1.0 - b).powi(i as i32) * h3
        * (1.0 - c).powi((i + j) as i32)
}

fn grad_simplex_3d_p(a: f64, b: f64, c: f64, id: usize, jd: usize, kd: usize) -> [f64; 3] {
    let (ii, jj) = (id as i32, jd as i32);
    let fa = jacobi_p(a, 0.0, 0.0, id);
    let dfa = grad_jacobi_p(a, 0.0, 0.0, id);
    let gb = jacobi_p(b, (2 * id + 1) as f64, 0.0, jd);
    let dgb = grad_jacobi_p(b, (2 * id + 1) as f64, 0.0, jd);
    let hc = jacobi_p(c, (2 * (id + jd) + 2) as f64, 0.0, kd);
    let dhc = grad_jacobi_p(c, (2 * (id + jd) + 2) as f64, 0.0, kd);
    let hb = 0.5 * (1.0 - b);
    let hcm = 0.5 * (1.0 - c);

    let mut vr = dfa * gb * hc;
    if id > 0 {
        vr *= hb.powi(ii - 1);
    }
    if id + jd > 0 {
        vr *= hcm.powi(ii + jj - 1);
    }

    let mut vs = 0.5 * (1.0 + a) * vr;
    let mut tmp = dgb * hb.powi(ii);
    if id > 0 {
        tmp += -0.5 * id as f64 * gb * hb.powi(ii - 1);
    }
    if id + jd > 0 {
        tmp *= hcm.powi(ii + jj - 1);
    }
    let tmp = fa * tmp * hc;
    vs += tmp;

    let mut vt = 0.5 * (1.0 + a) * vr + 0.5 * (1.0 + b) * tmp;
    let mut tmp = dhc * hcm.powi(ii + jj);
    if id + jd > 0 {
        tmp -= 0.5 * (id + jd) as f64 * hc * hcm.powi(ii + jj - 1);
    }
    let tmp = fa * gb * tmp * hb.powi(ii);
    vt += tmp;

    let scale = 2f64.powf(2.0 * id as f64 + jd as f64 + 1.5);
    [vr * scale, vs * scale, vt * scale]
}

fn grad_vandermonde(
    nodes: &[[f64; 3]],
    order: usize,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let np = nodes.len();
    let nm = node_count(order);
    let mut vr = DMatrix::zeros(np, nm);
    let mut vs = DMatrix::zeros(np, nm);
    let mut vt = DMatrix::zeros(np, nm);
    for (n, p) in nodes.iter().enumerate() {
        let (a, b, c) = rst_to_abc(p[0], p[1], p[2]);
        for (m, (i, j, k)) in mode_indices(order).enumerate() {
            let g = grad_simplex_3d_p(a, b, c, i, j, k);
            vr[(n, m)] = g[0];
            vs[(n, m)] = g[1];
            vt[(n, m)] = g[2];
        }
    }
    (vr, vs, vt)
}

/// Gradient (d/dr, d/ds, d/dt) of every orthonormal mode at one point.
pub fn modal_grad_row(order: usize, p: [f64; 3]) -> Vec<[f64; 3]> {
    let (a, b, c) = rst_to_abc(p[0], p[1], p[2]);
    mode_indices(order)
        .map(|(i, j, k)| grad_simplex_3d_p(a, b, c, i, j, k))
        .collect()
}

/// Orthonormal basis on the triangle (-1,-1), (1,-1), (-1,1).
fn vandermonde_2d(pts: &[[f64; 2]], order: usize) -> DMatrix<f64> {
    let nm = face_node_count(order);
    let mut v = DMatrix::zeros(pts.len(), nm);
    for (n, p) in pts.iter().enumerate() {
        let (r, s) = (p[0], p[1]);
        let a = if (s - 1.0).abs() > 1e-13 {
            2.0 * (1.0 + r) / (1.0 - s) - 1.0
        } else {
            -1.0
        };
        let b = s;
        let mut m = 0;
        for i in 0..=order {
            for j in 0..=order - i {
                let h1 = jacobi_p(a, 0.0, 0.0, i);
                let h2 = jacobi_p(b, (2 * i + 1) as f64, 0.0, j);
                v[(n, m)] = std::f64::consts::SQRT_2 * h1 * h2 * (1.0 - b).powi(i as i32);
                m += 1;
            }
        }
    }
    v
}

// Vertices of the equilateral tetrahedron used for warp-and-blend, in the same order
// as the reference vertices.
fn equilateral_vertices() -> [Vector3<f64>; 4] {
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    [
        Vector3::new(-1.0, -1.0 / s3, -1.0 / s6),
        Vector3::new(1.0, -1.0 / s3, -1.0 / s6),
        Vector3::new(0.0, 2.0 / s3, -1.0 / s6),
        Vector3::new(0.0, 0.0, 3.0 / s6),
    ]
}

fn eval_warp(order: usize, gll: &[f64], xout: f64) -> f64 {
    let p = order;
    let xeq: Vec<f64> = (0..=p)
        .map(|i| -1.0 + 2.0 * (p - i) as f64 / p as f64)
        .collect();
    let mut warp = 0.0;
    for i in 0..=p {
        let mut d = gll[i] - xeq[i];
        for j in 1..p {
            if i != j {
                d *= (xout - xeq[j]) / (xeq[i] - xeq[j]);
            }
        }
        if i != 0 {
            d = -d / (xeq[i] - xeq[0]);
        }
        if i != p {
            d /= xeq[i] - xeq[p];
        }
        warp += d;
    }
    warp
}

fn eval_shift(order: usize, alpha: f64, gll: &[f64], l1: f64, l2: f64, l3: f64) -> (f64, f64) {
    let blend1 = l2 * l3;
    let blend2 = l1 * l3;
    let blend3 = l1 * l2;
    let w1 = 4.0 * eval_warp(order, gll, l3 - l2);
    let w2 = 4.0 * eval_warp(order, gll, l1 - l3);
    let w3 = 4.0 * eval_warp(order, gll, l2 - l1);
    let warp1 = blend1 * w1 * (1.0 + (alpha * l1).powi(2));
    let warp2 = blend2 * w2 * (1.0 + (alpha * l2).powi(2));
    let warp3 = blend3 * w3 * (1.0 + (alpha * l3).powi(2));
    let (c2, s2) = ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin());
    let (c4, s4) = ((4.0 * std::f64::consts::PI / 3.0).cos(), (4.0 * std::f64::consts::PI / 3.0).sin());
    (warp1 + c2 * warp2 + c4 * warp3, s2 * warp2 + s4 * warp3)
}

/// Nodal set on the reference tetrahedron: equidistant for order <= 2, warp-and-blend
/// above (the warp vanishes identically at orders 1 and 2).
pub fn nodes_3d(order: usize) -> Vec<[f64; 3]> {
    let p = order;
    let alpha = ALPHA_OPT.get(p).copied().unwrap_or(1.0);
    let tol = 1e-8;
    let gll: Vec<f64> = gauss_lobatto(p).into_iter().map(|x| -x).collect();
    let ev = equilateral_vertices();

    // (tangent1, tangent2, indices of (La, Lb, Lc, Ld) into the barycentric array)
    let faces: [(Vector3<f64>, Vector3<f64>, [usize; 4]); 4] = [
        (ev[1] - ev[0], ev[2] - 0.5 * (ev[0] + ev[1]), [3, 2, 0, 1]),
        (ev[1] - ev[0], ev[3] - 0.5 * (ev[0] + ev[1]), [2, 3, 0, 1]),
        (ev[2] - ev[1], ev[3] - 0.5 * (ev[1] + ev[2]), [0, 3, 1, 2]),
        (ev[2] - ev[0], ev[3] - 0.5 * (ev[0] + ev[2]), [1, 3, 0, 2]),
    ];

    // equilateral coordinates -> (r,s,t)
    let a = Matrix3::from_columns(&[
        0.5 * (ev[1] - ev[0]),
        0.5 * (ev[2] - ev[0]),
        0.5 * (ev[3] - ev[0]),
    ]);
    let a_inv = a.try_inverse().expect("equilateral tet is non-degenerate");

    let mut out = Vec::with_capacity(node_count(p));
    for n in 0..=p {
        for m in 0..=p - n {
            for q in 0..=p - n - m {
                let r = -1.0 + 2.0 * q as f64 / p as f64;
                let s = -1.0 + 2.0 * m as f64 / p as f64;
                let t = -1.0 + 2.0 * n as f64 / p as f64;
                let l = barycentric(r, s, t);
                let xyz: Vector3<f64> = l[0] * ev[0] + l[1] * ev[1] + l[2] * ev[2] + l[3] * ev[3];
                let mut shift = Vector3::zeros();
                if p >= 3 {
                    for (t1, t2, idx) in &faces {
                        let (t1, t2) = (t1.normalize(), t2.normalize());
                        let (la, lb, lc, ld) = (l[idx[0]], l[idx[1]], l[idx[2]], l[idx[3]]);
                        let (warp1, warp2) = eval_shift(p, alpha, &gll, lb, lc, ld);
                        let mut blend = lb * lc * ld;
                        let denom = (lb + 0.5 * la) * (lc + 0.5 * la) * (ld + 0.5 * la);
                        if denom > tol {
                            blend = (1.0 + (alpha * la).powi(2)) * blend / denom;
                        }
                        let on_face_edge = la < tol
                            && ((lb > tol) as u8 + (lc > tol) as u8 + (ld > tol) as u8) < 3;
                        if on_face_edge {
                            shift = warp1 * t1 + warp2 * t2;
                        } else {
                            shift += blend * warp1 * t1 + blend * warp2 * t2;
                        }
                    }
                }
                let x = xyz + shift;
                let rst = a_inv * (x - ev[0]) - Vector3::new(1.0, 1.0, 1.0);
                out.push([rst[0], rst[1], rst[2]]);
            }
        }
    }
    out
}
