//! Axis-aligned solids for marking elements, and removal of elements as PEC voids.

use std::collections::HashMap;

use super::{sorted3, FaceTag, Mesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Box,
    /// Elliptic cylinder inscribed in the bounding box, with its axis along x, y or z.
    Cylinder(usize),
}

/// A solid given by its bounding box `lo..hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lo: Vec3,
    pub hi: Vec3,
    pub shape: Shape,
}

impl Region {
    pub fn new(lo: Vec3, hi: Vec3, shape: Shape) -> Result<Self> {
        if (0..3).any(|d| !(hi[d] > lo[d])) {
            return Err(Error::Config(format!("region {lo:?}..{hi:?} is empty")));
        }
        if let Shape::Cylinder(axis) = shape {
            if axis > 2 {
                return Err(Error::Config(format!("cylinder axis {axis} is not 0, 1 or 2")));
            }
        }
        Ok(Self { lo, hi, shape })
    }

    pub fn contains(&self, p: Vec3) -> bool {
        if (0..3).any(|d| p[d] < self.lo[d] || p[d] > self.hi[d]) {
            return false;
        }
        match self.shape {
            Shape::Box => true,
            Shape::Cylinder(axis) => {
                let r: f64 = (0..3)
                    .filter(|&d| d != axis)
                    .map(|d| {
                        let c = 0.5 * (self.lo[d] + self.hi[d]);
                        let a = 0.5 * (self.hi[d] - self.lo[d]);
                        ((p[d] - c) / a).powi(2)
                    })
                    .sum();
                r <= 1.0
            }
        }
    }
}

impl Mesh {
    /// Delete the elements flagged in `remove`. Faces left exposed become PEC; existing
    /// boundary tags are kept.
    pub fn carve(&self, remove: &[bool]) -> Result<Mesh> {
        if remove.len() != self.n_elements() {
            return Err(Error::Validation("one removal flag per element required".into()));
        }
        let mut tags = HashMap::new();
        let mut tets = Vec::new();
        let mut material = Vec::new();
        for k in (0..self.n_elements()).filter(|&k| !remove[k]) {
            tets.push(self.tets[k]);
            material.push(self.material[k]);
            for f in 0..4 {
                let key = sorted3(self.face_vertices(k, f));
                match self.neighbors[k][f] {
                    Some((j, _)) if remove[j] => {
                        tags.insert(key, FaceTag::Pec);
                    }
                    None if !self.face_tags[k][f].is_periodic() => {
                        tags.insert(key, self.face_tags[k][f]);
                    }
                    _ => {}
                }
            }
        }
        Mesh::from_parts(self.vertices.clone(), tets, material, &tags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box_mesh, BoxMeshSpec, Lattice2};

    #[test]
    fn cylinder_is_inscribed() {
        let r = Region::new([0.0, 0.0, 0.0], [2.0, 1.0, 4.0], Shape::Cylinder(1)).unwrap();
        assert!(r.contains([1.0, 0.5, 2.0]));
        assert!(r.contains([1.0, 1.0, 3.9]));
        assert!(!r.contains([1.9, 0.5, 3.9]));
        assert!(!r.contains([1.0, 1.1, 2.0]));
        assert!(Region::new([0.0; 3], [1.0, 0.0, 1.0], Shape::Box).is_err());
    }

    #[test]
    fn carved_hole_is_walled_with_pec() {
        let lat = Lattice2::rectangular(1.0, 1.0).unwrap();
        let mesh = generate_box_mesh(&BoxMeshSpec::uniform(lat, 0.0, 1.0, 4, 4, 4)).unwrap();
        let hole = Region::new([0.25, 0.25, 0.25], [0.75, 0.75, 0.75], Shape::Box).unwrap();
        let remove: Vec<bool> = (0..mesh.n_elements()).map(|k| hole.contains(mesh.centroid(k))).collect();
        let carved = mesh.carve(&remove).unwrap();
        assert_eq!(carved.n_elements(), mesh.n_elements() - 6 * 8);
        let pec_area: f64 = carved.faces_with_tag(FaceTag::Pec).iter().map(|&(k, f)| carved.face_area(k, f)).sum();
        assert!((pec_area - 6.0 * 0.25).abs() < 1e-12, "{pec_area}");
        let abc = |m: &Mesh| m.faces_with_tag(FaceTag::AbcTop).len() + m.faces_with_tag(FaceTag::AbcBottom).len();
        assert_eq!(abc(&carved), abc(&mesh));
    }
}
