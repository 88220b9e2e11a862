//! Tetrahedral unit-cell meshes, boundary tags and periodic face maps.

mod clip;
mod generate;
mod msh;
mod periodic;
mod region;

pub use clip::{clip_faces, clip_faces_with_tolerance, polygon_area, ClipFragment};
pub use generate::{generate_box_mesh, BoxLayer, BoxMeshSpec, BoundaryKind};
pub use msh::{load_mesh, write_msh, MeshFormat};
pub use periodic::{pair_periodic_faces, Axis, ConformalPair, Fragment, PeriodicMap};
pub use region::{Region, Shape};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::reference::FACE_VERTICES;

pub type Vec3 = [f64; 3];

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Orthogonal 2-lattice spanning the periodic directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice2 {
    pub a1: Vec3,
    pub a2: Vec3,
}

impl Lattice2 {
    pub fn new(a1: Vec3, a2: Vec3) -> Result<Self> {
        let (n1, n2) = (norm(a1), norm(a2));
        if n1 <= 0.0 || n2 <= 0.0 {
            return Err(Error::Config("lattice vectors must be non-zero".into()));
        }
        if a1[2] != 0.0 || a2[2] != 0.0 {
            return Err(Error::Config("lattice vectors must lie in the z = 0 plane".into()));
        }
        if dot(a1, a2).abs() > 1e-12 * n1 * n2 {
            return Err(Error::Config("lattice vectors must be orthogonal".into()));
        }
        if a1[1] != 0.0 || a2[0] != 0.0 {
            return Err(Error::Config(
                "lattice vectors must be aligned with x and y respectively".into(),
            ));
        }
        Ok(Self { a1, a2 })
    }

    /// Rectangular lattice with periods `lx` along x and `ly` along y.
    pub fn rectangular(lx: f64, ly: f64) -> Result<Self> {
        Self::new([lx, 0.0, 0.0], [0.0, ly, 0.0])
    }

    pub fn lx(&self) -> f64 {
        norm(self.a1)
    }

    pub fn ly(&self) -> f64 {
        norm(self.a2)
    }

    pub fn cell_area(&self) -> f64 {
        self.lx() * self.ly()
    }

    pub fn default_tolerance(&self) -> f64 {
        1e-8 * self.lx().max(self.ly())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceTag {
    Pec,
    AbcTop,
    AbcBottom,
    PeriodicX,
    PeriodicY,
    Interior,
}

impl FaceTag {
    pub fn is_periodic(self) -> bool {
        matches!(self, FaceTag::PeriodicX | FaceTag::PeriodicY)
    }
}

/// Straight-sided tetrahedral mesh of one unit cell.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub material: Vec<u32>,
    pub face_tags: Vec<[FaceTag; 4]>,
    /// Interior neighbor (element, local face) across each face.
    pub neighbors: Vec<[Option<(usize, usize)>; 4]>,
    /// Minimum edge length per element.
    pub h: Vec<f64>,
    /// Axis-aligned bounding box (min, max).
    pub bbox: (Vec3, Vec3),
}

pub(crate) fn sorted3(mut v: [usize; 3]) -> [usize; 3] {
    v.sort_unstable();
    v
}

impl Mesh {
    /// Assemble a mesh from raw parts.
    ///
    /// `boundary_tags` maps sorted vertex triples to explicit tags. Untagged boundary
    /// faces must lie on the x or y bounding planes, where they become periodic.
    pub fn from_parts(
        vertices: Vec<Vec3>,
        tets: Vec<[usize; 4]>,
        material: Vec<u32>,
        boundary_tags: &HashMap<[usize; 3], FaceTag>,
    ) -> Result<Self> {
        if tets.is_empty() {
            return Err(Error::Validation("mesh has no tetrahedra".into()));
        }
        if material.len() != tets.len() {
            return Err(Error::Validation("one material id per element required".into()));
        }
        // drop unreferenced vertices
        let mut remap = vec![usize::MAX; vertices.len()];
        let mut verts = Vec::new();
        let mut new_tets = Vec::with_capacity(tets.len());
        for (k, t) in tets.iter().enumerate() {
            let mut nt = [0; 4];
            for (i, &v) in t.iter().enumerate() {
                if v >= vertices.len() {
                    return Err(Error::Validation(format!(
                        "element {k} references missing vertex {v}"
                    )));
                }
                if remap[v] == usize::MAX {
                    remap[v] = verts.len();
                    verts.push(vertices[v]);
                }
                nt[i] = remap[v];
            }
            new_tets.push(nt);
        }
        let mut tags = HashMap::new();
        for (key, &tag) in boundary_tags {
            if key.iter().all(|&v| v < remap.len() && remap[v] != usize::MAX) {
                tags.insert(sorted3([remap[key[0]], remap[key[1]], remap[key[2]]]), tag);
            }
        }

        let mut bmin = [f64::INFINITY; 3];
        let mut bmax = [f64::NEG_INFINITY; 3];
        for v in &verts {
            for d in 0..3 {
                bmin[d] = bmin[d].min(v[d]);
                bmax[d] = bmax[d].max(v[d]);
            }
        }
        let extent = (0..3).map(|d| bmax[d] - bmin[d]).fold(0.0, f64::max);
        let tol = 1e-8 * extent;

        // consistent positive orientation
        for (k, t) in new_tets.iter_mut().enumerate() {
            let vol = signed_volume(&verts, t);
            if vol.abs() <= 1e-14 * extent.powi(3) {
                return Err(Error::Validation(format!(
                    "element {k} is degenerate (volume {vol:.3e})"
                )));
            }
            if vol < 0.0 {
                t.swap(1, 2);
            }
        }

        let mut face_owner: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::new();
        for (k, t) in new_tets.iter().enumerate() {
            for (f, fv) in FACE_VERTICES.iter().enumerate() {
                face_owner
                    .entry(sorted3([t[fv[0]], t[fv[1]], t[fv[2]]]))
                    .or_default()
                    .push((k, f));
            }
        }

        let k_count = new_tets.len();
        let mut face_tags = vec![[FaceTag::Interior; 4]; k_count];
        let mut neighbors = vec![[None; 4]; k_count];
        let mut keys: Vec<_> = face_owner.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let owners = &face_owner[&key];
            match owners.len() {
                2 => {
                    let (a, b) = (owners[0], owners[1]);
                    neighbors[a.0][a.1] = Some(b);
                    neighbors[b.0][b.1] = Some(a);
                }
                1 => {
                    let (k, f) = owners[0];
                    let tag = if let Some(&t) = tags.get(&key) {
                        t
                    } else {
                        let on = |d: usize, val: f64| key.iter().all(|&v| (verts[v][d] - val).abs() <= tol);
                        if on(0, bmin[0]) || on(0, bmax[0]) {
                            FaceTag::PeriodicX
                        } else if on(1, bmin[1]) || on(1, bmax[1]) {
                            FaceTag::PeriodicY
                        } else {
                            return Err(Error::Validation(format!(
                                "boundary face {f} of element {k} is untagged and not on a periodic plane"
                            )));
                        }
                    };
                    face_tags[k][f] = tag;
                }
                n => {
                    return Err(Error::Validation(format!(
                        "face {key:?} is shared by {n} elements"
                    )))
                }
            }
        }

        let h = new_tets
            .iter()
            .map(|t| {
                let mut m = f64::INFINITY;
                for i in 0..4 {
                    for j in i + 1..4 {
                        m = m.min(norm(sub(verts[t[i]], verts[t[j]])));
                    }
                }
                m
            })
            .collect();

        Ok(Self {
            vertices: verts,
            tets: new_tets,
            material,
            face_tags,
            neighbors,
            h,
            bbox: (bmin, bmax),
        })
    }

    pub fn n_elements(&self) -> usize {
        self.tets.len()
    }

    pub fn h_min(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Global vertex ids of local face `f` of element `k`, in reference face order.
    pub fn face_vertices(&self, k: usize, f: usize) -> [usize; 3] {
        let t = self.tets[k];
        let fv = FACE_VERTICES[f];
        [t[fv[0]], t[fv[1]], t[fv[2]]]
    }

    pub fn face_coords(&self, k: usize, f: usize) -> [Vec3; 3] {
        self.face_vertices(k, f).map(|v| self.vertices[v])
    }

    pub fn face_area(&self, k: usize, f: usize) -> f64 {
        let c = self.face_coords(k, f);
        0.5 * norm(cross(sub(c[1], c[0]), sub(c[2], c[0])))
    }

    /// Outward unit normal of local face `f` of element `k`.
    pub fn face_normal(&self, k: usize, f: usize) -> Vec3 {
        let c = self.face_coords(k, f);
        let mut n = cross(sub(c[1], c[0]), sub(c[2], c[0]));
        let l = norm(n);
        n = [n[0] / l, n[1] / l, n[2] / l];
        let centroid = self.centroid(k);
        if dot(n, sub(c[0], centroid)) < 0.0 {
            n = [-n[0], -n[1], -n[2]];
        }
        n
    }

    pub fn centroid(&self, k: usize) -> Vec3 {
        let t = self.tets[k];
        let mut c = [0.0; 3];
        for &v in &t {
            for d in 0..3 {
                c[d] += 0.25 * self.vertices[v][d];
            }
        }
        c
    }

    pub fn volume(&self, k: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[k])
    }

    /// Physical point of reference coordinates (r, s, t) in element `k`.
    pub fn map_to_physical(&self, k: usize, rst: Vec3) -> Vec3 {
        let l = crate::reference::barycentric(rst[0], rst[1], rst[2]);
        let t = self.tets[k];
        let mut x = [0.0; 3];
        for (i, &v) in t.iter().enumerate() {
            for d in 0..3 {
                x[d] += l[i] * self.vertices[v][d];
            }
        }
        x
    }

    /// Reference coordinates of physical point `x` in element `k` (affine inverse).
    pub fn map_to_reference(&self, k: usize, x: Vec3) -> Vec3 {
        let t = self.tets[k];
        let v0 = self.vertices[t[0]];
        let cols = [1, 2, 3].map(|i| {
            let e = sub(self.vertices[t[i]], v0);
            [0.5 * e[0], 0.5 * e[1], 0.5 * e[2]]
        });
        // x - v0 = A (rst + 1), A = [cols]
        let m = nalgebra::Matrix3::new(
            cols[0][0], cols[1][0], cols[2][0], cols[0][1], cols[1][1], cols[2][1], cols[0][2],
            cols[1][2], cols[2][2],
        );
        let inv = m.try_inverse().expect("element is non-degenerate");
        let y = inv * nalgebra::Vector3::new(x[0] - v0[0], x[1] - v0[1], x[2] - v0[2]);
        [y[0] - 1.0, y[1] - 1.0, y[2] - 1.0]
    }

    /// Faces carrying `tag`, as (element, local face).
    pub fn faces_with_tag(&self, tag: FaceTag) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, tags) in self.face_tags.iter().enumerate() {
            for (f, &t) in tags.iter().enumerate() {
                if t == tag {
                    out.push((k, f));
                }
            }
        }
        out
    }

    /// Faces lying in the plane z = `z` (within `tol`), one (element, face) per physical
    /// face: the element whose centroid lies above the plane when both sides exist.
    pub fn faces_on_z_plane(&self, z: f64, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 0..self.n_elements() {
            for f in 0..4 {
                let c = self.face_coords(k, f);
                if c.iter().all(|p| (p[2] - z).abs() <= tol) {
                    let above = self.centroid(k)[2] > z;
                    let has_other = self.neighbors[k][f].is_some();
                    if above || !has_other {
                        out.push((k, f));
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn signed_volume(verts: &[Vec3], t: &[usize; 4]) -> f64 {
    let a = sub(verts[t[1]], verts[t[0]]);
    let b = sub(verts[t[2]], verts[t[0]]);
    let c = sub(verts[t[3]], verts[t[0]]);
    dot(a, cross(b, c)) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn reference_tet() -> (Vec<Vec3>, Vec<[usize; 4]>) {
        (
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 1, 2, 3]],
        )
    }

    #[test]
    fn single_pec_tet() {
        let (v, t) = reference_tet();
        let mut tags = HashMap::new();
        for fv in FACE_VERTICES {
            tags.insert(sorted3(fv), FaceTag::Pec);
        }
        let m = Mesh::from_parts(v, t, vec![0], &tags).unwrap();
        assert_eq!(m.n_elements(), 1);
        assert_eq!(m.faces_with_tag(FaceTag::Pec).len(), 4);
        assert!((m.h[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverted_tet_is_reoriented() {
        let (v, _) = reference_tet();
        let mut tags = HashMap::new();
        for fv in FACE_VERTICES {
            tags.insert(sorted3(fv), FaceTag::Pec);
        }
        let m = Mesh::from_parts(v, vec![[0, 2, 1, 3]], vec![0], &tags).unwrap();
        assert!(m.volume(0) > 0.0);
    }

    #[test]
    fn zero_volume_rejected() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        let err = Mesh::from_parts(v, vec![[0, 1, 2, 3]], vec![0], &HashMap::new()).unwrap_err();
        assert!(matches!(err, Error::Validation(ref s) if s.contains("element 0")));
    }

    #[test]
    fn unused_vertices_dropped() {
        let (mut v, t) = reference_tet();
        v.push([5.0, 5.0, 5.0]);
        let mut tags = HashMap::new();
        for fv in FACE_VERTICES {
            tags.insert(sorted3(fv), FaceTag::Pec);
        }
        let m = Mesh::from_parts(v, t, vec![0], &tags).unwrap();
        assert_eq!(m.vertices.len(), 4);
    }

    #[test]
    fn reference_map_roundtrip() {
        let v = vec![[0.1, 0.2, 0.0], [1.3, 0.0, 0.1], [0.2, 0.9, 0.3], [0.0, 0.1, 1.2]];
        let m = Mesh::from_parts(v, vec![[0, 1, 2, 3]], vec![0], &{
            let mut tags = HashMap::new();
            for fv in FACE_VERTICES {
                tags.insert(sorted3(fv), FaceTag::Pec);
            }
            tags
        })
        .unwrap();
        let rst = [-0.3, -0.2, -0.1];
        let x = m.map_to_physical(0, rst);
        let back = m.map_to_reference(0, x);
        for d in 0..3 {
            assert!((back[d] - rst[d]).abs() < 1e-13);
        }
    }
}
