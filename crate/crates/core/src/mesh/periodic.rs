//! Identification of opposite periodic planes: conformal face pairs where the
//! triangulations match under lattice translation, clipped fragments elsewhere.

use super::clip::clip_faces_with_tolerance;
use super::{add, norm, sub, FaceTag, Lattice2, Mesh, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::TriangleQuadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }

    fn tag(self) -> FaceTag {
        match self {
            Axis::X => FaceTag::PeriodicX,
            Axis::Y => FaceTag::PeriodicY,
        }
    }
}

/// Two periodic faces whose vertices coincide under lattice translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformalPair {
    pub axis: Axis,
    /// (element, local face) on the lower plane.
    pub a: (usize, usize),
    /// (element, local face) on the upper plane.
    pub b: (usize, usize),
    /// Vertex `sigma[j]` of face `a` is the translate of vertex `j` of face `b`.
    pub sigma: [usize; 3],
}

/// Overlap of one lower-plane face with one upper-plane face.
#[derive(Debug, Clone)]
pub struct Fragment {
    pub axis: Axis,
    pub a: (usize, usize),
    pub b: (usize, usize),
    /// Convex polygon (3 to 6 vertices) in lower-plane coordinates.
    pub polygon: Vec<Vec3>,
    pub area: f64,
    /// Added to an upper-plane point to reach the matching lower-plane point.
    pub translation: Vec3,
    /// Fan triangulation of `polygon` about its vertex centroid.
    pub subtriangles: Vec<[Vec3; 3]>,
}

impl Fragment {
    /// Physical quadrature points on the lower plane and weights summing to the area.
    pub fn quadrature(&self, rule: &TriangleQuadrature) -> (Vec<Vec3>, Vec<f64>) {
        let mut pts = Vec::with_capacity(rule.len() * self.subtriangles.len());
        let mut ws = Vec::with_capacity(pts.capacity());
        for tri in &self.subtriangles {
            let (p, w) = rule.on_triangle(tri);
            pts.extend(p);
            ws.extend(w);
        }
        (pts, ws)
    }

    /// Upper-plane image of a lower-plane point.
    pub fn to_side_b(&self, p: Vec3) -> Vec3 {
        sub(p, self.translation)
    }
}

#[derive(Debug, Clone, Default)]
pub struct PeriodicMap {
    pub conformal: Vec<ConformalPair>,
    pub fragments: Vec<Fragment>,
    /// Total periodic face area on the lower plane, per axis (x, y).
    pub plane_area: [f64; 2],
    /// Area covered by conformal pairs plus fragments, per axis.
    pub covered_area: [f64; 2],
}

impl PeriodicMap {
    /// Relative mismatch between covered and total plane area for `axis`.
    pub fn area_error(&self, axis: Axis) -> f64 {
        let i = axis.index();
        if self.plane_area[i] == 0.0 {
            return 0.0;
        }
        (self.covered_area[i] - self.plane_area[i]).abs() / self.plane_area[i]
    }

    pub fn is_conformal(&self) -> bool {
        self.fragments.is_empty()
    }
}

fn fan(polygon: &[Vec3]) -> Vec<[Vec3; 3]> {
    let n = polygon.len() as f64;
    let mut c = [0.0; 3];
    for p in polygon {
        c = add(c, *p);
    }
    let c = [c[0] / n, c[1] / n, c[2] / n];
    (0..polygon.len())
        .map(|i| [c, polygon[i], polygon[(i + 1) % polygon.len()]])
        .collect()
}

/// Pair the periodic faces of `mesh` across both lattice directions.
///
/// Faces are assigned to a side by plane membership within `tolerance`. Faces whose
/// translated vertices match a partner become conformal pairs; all remaining faces are
/// clipped against each other. Any residual uncovered area is a topology error.
pub fn pair_periodic_faces(mesh: &Mesh, lattice: &Lattice2, tolerance: f64) -> Result<PeriodicMap> {
    let mut map = PeriodicMap::default();
    for axis in [Axis::X, Axis::Y] {
        pair_axis(mesh, lattice, tolerance, axis, &mut map)?;
    }
    Ok(map)
}

fn pair_axis(
    mesh: &Mesh,
    lattice: &Lattice2,
    tol: f64,
    axis: Axis,
    map: &mut PeriodicMap,
) -> Result<()> {
    let d = axis.index();
    let period = if d == 0 { lattice.lx() } else { lattice.ly() };
    let lo = mesh.bbox.0[d];
    let hi = lo + period;
    let faces = mesh.faces_with_tag(axis.tag());
    if faces.is_empty() {
        return Ok(());
    }
    if (mesh.bbox.1[d] - hi).abs() > tol {
        return Err(Error::Geometry(format!(
            "mesh extent along {axis:?} is {:.9e}, lattice period is {period:.9e}",
            mesh.bbox.1[d] - lo
        )));
    }
    let mut side_a = Vec::new();
    let mut side_b = Vec::new();
    for (k, f) in faces {
        let c = mesh.face_coords(k, f);
        if c.iter().all(|p| (p[d] - lo).abs() <= tol) {
            side_a.push((k, f));
        } else if c.iter().all(|p| (p[d] - hi).abs() <= tol) {
            side_b.push((k, f));
        } else {
            return Err(Error::Geometry(format!(
                "periodic face {f} of element {k} is not on a lattice plane"
            )));
        }
    }
    let mut translation = [0.0; 3];
    translation[d] = -period;

    let coords_b: Vec<[Vec3; 3]> = side_b
        .iter()
        .map(|&(k, f)| mesh.face_coords(k, f).map(|p| add(p, translation)))
        .collect();
    let mut b_used = vec![false; side_b.len()];
    let mut rest_a = Vec::new();
    for &(ka, fa) in &side_a {
        let ca = mesh.face_coords(ka, fa);
        let mut found = None;
        'search: for (jb, cb) in coords_b.iter().enumerate() {
            if b_used[jb] {
                continue;
            }
            let mut sigma = [usize::MAX; 3];
            for (j, pb) in cb.iter().enumerate() {
                match ca.iter().position(|pa| norm(sub(*pa, *pb)) <= tol) {
                    Some(i) => sigma[j] = i,
                    None => continue 'search,
                }
            }
            if sigma[0] != sigma[1] && sigma[1] != sigma[2] && sigma[0] != sigma[2] {
                found = Some((jb, sigma));
                break;
            }
        }
        match found {
            Some((jb, sigma)) => {
                b_used[jb] = true;
                map.conformal.push(ConformalPair {
                    axis,
                    a: (ka, fa),
                    b: side_b[jb],
                    sigma,
                });
                map.covered_area[d] += mesh.face_area(ka, fa);
            }
            None => rest_a.push((ka, fa)),
        }
        map.plane_area[d] += mesh.face_area(ka, fa);
    }
    let rest_b: Vec<usize> = (0..side_b.len()).filter(|&j| !b_used[j]).collect();

    if rest_a.is_empty() && rest_b.is_empty() {
        return Ok(());
    }
    let tri_a: Vec<[Vec3; 3]> = rest_a.iter().map(|&(k, f)| mesh.face_coords(k, f)).collect();
    let tri_b: Vec<[Vec3; 3]> = rest_b.iter().map(|&j| mesh.face_coords(side_b[j].0, side_b[j].1)).collect();
    let clipped = clip_faces_with_tolerance(&tri_a, &tri_b, translation, tol)?;

    let mut cover_a = vec![0.0; rest_a.len()];
    let mut cover_b = vec![0.0; rest_b.len()];
    for c in clipped {
        cover_a[c.ia] += c.area;
        cover_b[c.ib] += c.area;
        map.covered_area[d] += c.area;
        map.fragments.push(Fragment {
            axis,
            a: rest_a[c.ia],
            b: side_b[rest_b[c.ib]],
            subtriangles: fan(&c.polygon),
            polygon: c.polygon,
            area: c.area,
            translation,
        });
    }

    let mut uncovered = 0.0;
    let mut worst = None;
    for (i, &(k, f)) in rest_a.iter().enumerate() {
        let gap = mesh.face_area(k, f) - cover_a[i];
        if gap.abs() > 1e-10 * mesh.face_area(k, f) {
            uncovered += gap.abs();
            worst.get_or_insert((k, f));
        }
    }
    for (i, &j) in rest_b.iter().enumerate() {
        let (k, f) = side_b[j];
        let gap = mesh.face_area(k, f) - cover_b[i];
        if gap.abs() > 1e-10 * mesh.face_area(k, f) {
            uncovered += gap.abs();
            worst.get_or_insert((k, f));
        }
    }
    if let Some((k, f)) = worst {
        return Err(Error::Topology {
            msg: format!("{axis:?} periodic face {f} of element {k} has no partner coverage"),
            uncovered_area: uncovered,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box_mesh, BoxMeshSpec};
    use crate::quadrature::triangle_quadrature;

    fn box_mesh(nx: usize, ny: usize, nz: usize, stagger: bool) -> (Mesh, Lattice2) {
        let lat = Lattice2::rectangular(1.0, 0.8).unwrap();
        let mut spec = BoxMeshSpec::uniform(lat, 0.0, 0.6, nx, ny, nz);
        spec.stagger = stagger;
        (generate_box_mesh(&spec).unwrap(), lat)
    }

    #[test]
    fn mirror_identical_planes_are_conformal() {
        let (m, lat) = box_mesh(2, 3, 2, false);
        let map = pair_periodic_faces(&m, &lat, lat.default_tolerance()).unwrap();
        assert!(map.is_conformal());
        assert_eq!(map.conformal.len(), m.faces_with_tag(FaceTag::PeriodicX).len() / 2 + m.faces_with_tag(FaceTag::PeriodicY).len() / 2);
        for p in &map.conformal {
            let ca = m.face_coords(p.a.0, p.a.1);
            let cb = m.face_coords(p.b.0, p.b.1);
            let shift = if p.axis == Axis::X { [-1.0, 0.0, 0.0] } else { [0.0, -0.8, 0.0] };
            for j in 0..3 {
                assert!(norm(sub(ca[p.sigma[j]], add(cb[j], shift))) < 1e-12);
            }
        }
    }

    #[test]
    fn staggered_planes_conserve_area() {
        let (m, lat) = box_mesh(3, 2, 2, true);
        let map = pair_periodic_faces(&m, &lat, lat.default_tolerance()).unwrap();
        assert!(!map.fragments.is_empty());
        assert!(map.area_error(Axis::X) <= 1e-12);
        assert!(map.area_error(Axis::Y) <= 1e-12);
        assert!((map.plane_area[0] - 0.8 * 0.6).abs() < 1e-12);
        for fr in &map.fragments {
            assert!((3..=6).contains(&fr.polygon.len()));
            // the translated polygon lies inside the upper face's plane
            for p in &fr.polygon {
                let q = fr.to_side_b(*p);
                let d = fr.axis.index();
                let target = if d == 0 { 1.0 } else { 0.8 };
                assert!((q[d] - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fragment_quadrature_matches_parent_face() {
        let (m, lat) = box_mesh(3, 2, 2, true);
        let map = pair_periodic_faces(&m, &lat, lat.default_tolerance()).unwrap();
        let order = 3;
        let rule = triangle_quadrature(2 * order).unwrap();
        let f = |p: Vec3| {
            let (y, z) = (p[1], p[2]);
            1.0 + y.powi(3) * z.powi(2) - 2.0 * y * z.powi(4) + y.powi(6) + 0.3 * z
        };
        let mut parents: Vec<(usize, usize)> = map.fragments.iter().filter(|fr| fr.axis == Axis::X).map(|fr| fr.a).collect();
        parents.sort_unstable();
        parents.dedup();
        assert!(!parents.is_empty());
        for (k, face) in parents {
            let (p, w) = rule.on_triangle(&m.face_coords(k, face));
            let direct: f64 = p.iter().zip(&w).map(|(x, w)| w * f(*x)).sum();
            let via: f64 = map
                .fragments
                .iter()
                .filter(|fr| fr.a == (k, face))
                .map(|fr| {
                    let (p, w) = fr.quadrature(&rule);
                    p.iter().zip(&w).map(|(x, w)| w * f(*x)).sum::<f64>()
                })
                .sum();
            assert!((direct - via).abs() <= 1e-10 * direct.abs(), "{direct} vs {via}");
        }
    }

    #[test]
    fn shifted_mesh_has_same_pair_topology() {
        let (m, lat) = box_mesh(2, 2, 1, false);
        let mut shifted = m.clone();
        for v in &mut shifted.vertices {
            v[0] += 1.0;
        }
        shifted.bbox.0[0] += 1.0;
        shifted.bbox.1[0] += 1.0;
        let a = pair_periodic_faces(&m, &lat, lat.default_tolerance()).unwrap();
        let b = pair_periodic_faces(&shifted, &lat, lat.default_tolerance()).unwrap();
        assert_eq!(a.conformal, b.conformal);
    }

    #[test]
    fn wrong_period_is_geometry_error() {
        let (m, _) = box_mesh(1, 1, 1, false);
        let lat = Lattice2::rectangular(1.1, 0.8).unwrap();
        assert!(matches!(
            pair_periodic_faces(&m, &lat, lat.default_tolerance()),
            Err(Error::Geometry(_))
        ));
    }
}
