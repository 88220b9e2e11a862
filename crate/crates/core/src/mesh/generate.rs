//! Structured layered unit-cell generator.

use std::collections::HashMap;

use super::{sorted3, FaceTag, Lattice2, Mesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Pec,
    Abc,
}

/// One material layer between two consecutive z breaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxLayer {
    pub nz: usize,
    pub material: u32,
}

#[derive(Debug, Clone)]
pub struct BoxMeshSpec {
    pub lattice: Lattice2,
    /// Strictly increasing layer interfaces; `layers.len() + 1` entries.
    pub z_breaks: Vec<f64>,
    pub layers: Vec<BoxLayer>,
    pub nx: usize,
    pub ny: usize,
    /// Shear in-plane vertex positions so that opposite periodic planes are triangulated
    /// differently (needs `nx, ny >= 2` to have any effect).
    pub stagger: bool,
    pub top: BoundaryKind,
    pub bottom: BoundaryKind,
}

impl BoxMeshSpec {
    /// Single-material cell with `nz` uniform layers between `z0` and `z1`.
    pub fn uniform(lattice: Lattice2, z0: f64, z1: f64, nx: usize, ny: usize, nz: usize) -> Self {
        Self {
            lattice,
            z_breaks: vec![z0, z1],
            layers: vec![BoxLayer { nz, material: 0 }],
            nx,
            ny,
            stagger: false,
            top: BoundaryKind::Abc,
            bottom: BoundaryKind::Abc,
        }
    }
}

// Six tetrahedra sharing the hex diagonal from corner (0,0,0) to (1,1,1).
const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Build a layered box mesh: a structured hex grid with every hex split into six
/// tetrahedra along its main diagonal. Each z break is a flat plane of faces. Elements
/// come out hex by hex, six consecutive elements per hex.
pub fn generate_box_mesh(spec: &BoxMeshSpec) -> Result<Mesh> {
    let zb = &spec.z_breaks;
    if zb.len() < 2 || zb.len() != spec.layers.len() + 1 {
        return Err(Error::Config(format!(
            "{} z breaks given for {} layers",
            zb.len(),
            spec.layers.len()
        )));
    }
    if zb.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("z breaks must be strictly increasing".into()));
    }
    if spec.nx == 0 || spec.ny == 0 || spec.layers.iter().any(|l| l.nz == 0) {
        return Err(Error::Config("all divisions must be at least 1".into()));
    }
    let (lx, ly) = (spec.lattice.lx(), spec.lattice.ly());
    let (nx, ny) = (spec.nx, spec.ny);

    let mut zs = vec![zb[0]];
    let mut layer_of_cell = Vec::new();
    for (l, layer) in spec.layers.iter().enumerate() {
        let (z0, z1) = (zb[l], zb[l + 1]);
        for i in 1..=layer.nz {
            zs.push(if i == layer.nz {
                z1
            } else {
                z0 + (z1 - z0) * i as f64 / layer.nz as f64
            });
            layer_of_cell.push(l);
        }
    }
    let nzt = zs.len() - 1;

    let (ax, ay) = (0.2 * lx / nx as f64, 0.2 * ly / ny as f64);
    let pi = std::f64::consts::PI;
    let vid = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut vertices: Vec<Vec3> = Vec::with_capacity((nx + 1) * (ny + 1) * (nzt + 1));
    for &z in &zs {
        for j in 0..=ny {
            for i in 0..=nx {
                // snap the far planes exactly onto the lattice period
                let x = if i == nx { lx } else { lx * i as f64 / nx as f64 };
                let y = if j == ny { ly } else { ly * j as f64 / ny as f64 };
                let (mut xs, mut ys) = (x, y);
                if spec.stagger {
                    if i != 0 && i != nx {
                        xs += ax * (y / ly) * (pi * x / lx).sin();
                    }
                    if j != 0 && j != ny {
                        ys += ay * (x / lx) * (pi * y / ly).sin();
                    }
                }
                vertices.push([xs, ys, z]);
            }
        }
    }

    let mut tets = Vec::with_capacity(6 * nx * ny * nzt);
    let mut material = Vec::with_capacity(tets.capacity());
    for k in 0..nzt {
        let mat = spec.layers[layer_of_cell[k]].material;
        for j in 0..ny {
            for i in 0..nx {
                for path in KUHN_PATHS {
                    let mut c = [0usize; 3];
                    let mut tet = [vid(i, j, k); 4];
                    for (step, &axis) in path.iter().enumerate() {
                        c[axis] = 1;
                        tet[step + 1] = vid(i + c[0], j + c[1], k + c[2]);
                    }
                    tets.push(tet);
                    material.push(mat);
                }
            }
        }
    }

    let tag_of = |kind: BoundaryKind, top: bool| match (kind, top) {
        (BoundaryKind::Pec, _) => FaceTag::Pec,
        (BoundaryKind::Abc, true) => FaceTag::AbcTop,
        (BoundaryKind::Abc, false) => FaceTag::AbcBottom,
    };
    let mut tags = HashMap::new();
    for (k, top) in [(0, false), (nzt, true)] {
        let tag = tag_of(if top { spec.top } else { spec.bottom }, top);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k));
                // Kuhn split cuts every quad along its (min, max) diagonal
                tags.insert(sorted3([a, b, c]), tag);
                tags.insert(sorted3([a, c, d]), tag);
            }
        }
    }

    Mesh::from_parts(vertices, tets, material, &tags)
}
