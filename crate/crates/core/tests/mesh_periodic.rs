use floquet_dgtd::mesh::{
    clip_faces, load_mesh, pair_periodic_faces, Axis, FaceTag, Lattice2, MeshFormat, Vec3,
};
use proptest::prelude::*;

fn five_tet_cube() -> String {
    let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n8\n");
    for i in 0..8 {
        let (x, y, z) = (i & 1, (i >> 1) & 1, (i >> 2) & 1);
        s += &format!("{} {x} {y} {z}\n", i + 1);
    }
    s += "$EndNodes\n$Elements\n";
    let tets = [[0, 1, 2, 4], [3, 1, 2, 7], [5, 1, 4, 7], [6, 2, 4, 7], [1, 2, 4, 7]];
    // top (z=1) and bottom (z=0) faces are absorbing
    let tris = [([0, 1, 2], 3), ([1, 2, 3], 3), ([4, 5, 7], 2), ([4, 6, 7], 2)];
    s += &format!("{}\n", tets.len() + tris.len());
    let mut id = 1;
    for (t, tag) in tris {
        s += &format!("{id} 2 2 {tag} {tag} {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1);
        id += 1;
    }
    for t in tets {
        s += &format!("{id} 4 2 1 1 {} {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1);
        id += 1;
    }
    s + "$EndElements\n"
}

#[test]
fn five_tet_cube_pairs_x_planes() {
    let m = load_mesh(five_tet_cube().as_bytes(), MeshFormat::Msh22).unwrap();
    assert_eq!(m.n_elements(), 5);
    let px = m.faces_with_tag(FaceTag::PeriodicX);
    assert_eq!(px.iter().filter(|&&(k, f)| m.face_coords(k, f)[0][0] == 0.0).count(), 2);
    assert_eq!(px.len(), 4);
    let lat = Lattice2::rectangular(1.0, 1.0).unwrap();
    let map = pair_periodic_faces(&m, &lat, lat.default_tolerance()).unwrap();
    // the 5-tet split cuts opposite cube faces along crossing diagonals
    let frx: Vec<_> = map.fragments.iter().filter(|f| f.axis == Axis::X).collect();
    assert_eq!(frx.len(), 4);
    for f in &frx {
        assert_eq!(f.polygon.len(), 3);
        assert!((f.area - 0.25).abs() < 1e-14);
    }
    assert!(map.area_error(Axis::X) <= 1e-12);
}

fn grid_triangles(xs: &[f64], ys: &[f64], flip: bool) -> Vec<[Vec3; 3]> {
    let mut out = Vec::new();
    for j in 0..ys.len() - 1 {
        for i in 0..xs.len() - 1 {
            let p = |a: usize, b: usize| [xs[i + a], ys[j + b], 0.0];
            if flip {
                out.push([p(0, 0), p(1, 0), p(0, 1)]);
                out.push([p(1, 0), p(1, 1), p(0, 1)]);
            } else {
                out.push([p(0, 0), p(1, 0), p(1, 1)]);
                out.push([p(0, 0), p(1, 1), p(0, 1)]);
            }
        }
    }
    out
}

fn inside(t: &[Vec3; 3], x: f64, y: f64) -> bool {
    let s = |a: Vec3, b: Vec3| (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
    let (d0, d1, d2) = (s(t[0], t[1]), s(t[1], t[2]), s(t[2], t[0]));
    (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0)
}

#[test]
fn shifted_grids_match_raster_oracle() {
    let a = grid_triangles(&[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0], false);
    let b = grid_triangles(&[0.0, 0.27, 0.61, 1.0], &[0.0, 0.4, 0.7, 1.0], true);
    let frags = clip_faces(&a, &b, [0.0; 3]).unwrap();
    let total: f64 = frags.iter().map(|f| f.area).sum();
    assert!((total - 1.0).abs() <= 1e-12);
    assert!(frags.iter().any(|f| f.polygon.len() == 4));

    // brute-force overlap areas on a midpoint raster
    let n = 800;
    let h = 1.0 / n as f64;
    let mut raster = vec![vec![0usize; b.len()]; a.len()];
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = ((ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h);
            let ia = a.iter().position(|t| inside(t, x, y)).unwrap();
            let ib = b.iter().position(|t| inside(t, x, y)).unwrap();
            raster[ia][ib] += 1;
        }
    }
    for ia in 0..a.len() {
        for ib in 0..b.len() {
            let est = raster[ia][ib] as f64 * h * h;
            let got: f64 = frags.iter().filter(|f| f.ia == ia && f.ib == ib).map(|f| f.area).sum();
            assert!((est - got).abs() < 5e-3, "pair ({ia},{ib}): raster {est} vs clip {got}");
        }
    }
}

proptest! {
    #[test]
    fn any_two_triangulations_conserve_area(
        xa in prop::collection::vec(0.05f64..0.95, 1..4),
        ya in prop::collection::vec(0.05f64..0.95, 1..4),
        xb in prop::collection::vec(0.05f64..0.95, 1..4),
        yb in prop::collection::vec(0.05f64..0.95, 1..4),
        flip in any::<bool>(),
    ) {
        let lines = |v: &[f64]| {
            let mut l = vec![0.0, 1.0];
            l.extend_from_slice(v);
            l.sort_by(f64::total_cmp);
            l.dedup_by(|p, q| (*p - *q).abs() < 1e-3);
            l
        };
        let a = grid_triangles(&lines(&xa), &lines(&ya), flip);
        let b = grid_triangles(&lines(&xb), &lines(&yb), !flip);
        let frags = clip_faces(&a, &b, [0.0; 3]).unwrap();
        let total: f64 = frags.iter().map(|f| f.area).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for f in &frags {
            prop_assert!((3..=6).contains(&f.polygon.len()));
        }
    }
}
