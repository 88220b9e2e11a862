//! Triangle-triangle clipping of coplanar periodic faces.
//!
//! Each pair is clipped with Sutherland-Hodgman; both operands are triangles, so every
//! non-degenerate intersection is a convex polygon with 3 to 6 vertices.

use super::{add, cross, dot, norm, sub, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ClipFragment {
    /// Index into the side-A triangle list.
    pub ia: usize,
    /// Index into the side-B triangle list.
    pub ib: usize,
    /// Convex polygon in cyclic vertex order, in side-A coordinates.
    pub polygon: Vec<Vec3>,
    pub area: f64,
}

/// Area of a planar polygon in 3-space.
pub fn polygon_area(poly: &[Vec3]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = [0.0; 3];
    for i in 1..poly.len() - 1 {
        let c = cross(sub(poly[i], poly[0]), sub(poly[i + 1], poly[0]));
        acc = add(acc, c);
    }
    0.5 * norm(acc)
}

/// Clip every side-A triangle against every side-B triangle translated by `translation`,
/// with the default tolerance of 1e-8 times the input extent.
pub fn clip_faces(
    side_a: &[[Vec3; 3]],
    side_b: &[[Vec3; 3]],
    translation: Vec3,
) -> Result<Vec<ClipFragment>> {
    let mut extent: f64 = 0.0;
    for t in side_a.iter().chain(side_b) {
        for p in t {
            for q in t {
                extent = extent.max(norm(sub(*p, *q)));
            }
        }
    }
    clip_faces_with_tolerance(side_a, side_b, translation, 1e-8 * extent.max(f64::MIN_POSITIVE))
}

struct Plane {
    origin: Vec3,
    normal: Vec3,
    // projection axes (u, v) and the dropped axis
    u: usize,
    v: usize,
    w: usize,
    flip: bool,
}

impl Plane {
    fn project(&self, p: Vec3) -> [f64; 2] {
        [p[self.u], p[self.v]]
    }

    fn lift(&self, q: [f64; 2]) -> Vec3 {
        let n = self.normal;
        let mut p = [0.0; 3];
        p[self.u] = q[0];
        p[self.v] = q[1];
        p[self.w] = self.origin[self.w]
            - (n[self.u] * (q[0] - self.origin[self.u]) + n[self.v] * (q[1] - self.origin[self.v]))
                / n[self.w];
        p
    }
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn ccw(mut t: [[f64; 2]; 3]) -> [[f64; 2]; 3] {
    if cross2(t[0], t[1], t[2]) < 0.0 {
        t.swap(1, 2);
    }
    t
}

fn area2(poly: &[[f64; 2]]) -> f64 {
    let mut a = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

fn sutherland_hodgman(subject: &[[f64; 2]], clip: &[[f64; 2]; 3], eps: f64) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = subject.to_vec();
    for e in 0..3 {
        if out.is_empty() {
            break;
        }
        let c1 = clip[e];
        let c2 = clip[(e + 1) % 3];
        let len = ((c2[0] - c1[0]).powi(2) + (c2[1] - c1[1]).powi(2)).sqrt();
        let side = |p: [f64; 2]| cross2(c1, c2, p) / len;
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (sc, sp) = (side(cur), side(prev));
            let cur_in = sc >= -eps;
            let prev_in = sp >= -eps;
            if cur_in {
                if !prev_in {
                    out.push(intersect(prev, cur, sp, sc));
                }
                out.push(cur);
            } else if prev_in {
                out.push(intersect(prev, cur, sp, sc));
            }
        }
    }
    out
}

fn intersect(p: [f64; 2], q: [f64; 2], sp: f64, sq: f64) -> [f64; 2] {
    let t = sp / (sp - sq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

fn cleanup(mut poly: Vec<[f64; 2]>, tol: f64) -> Vec<[f64; 2]> {
    loop {
        let n = poly.len();
        if n < 3 {
            return poly;
        }
        let mut removed = false;
        for i in 0..n {
            let p = poly[(i + n - 1) % n];
            let c = poly[i];
            let q = poly[(i + 1) % n];
            let dpc = ((c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2)).sqrt();
            let dpq = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
            // duplicate of its predecessor, or lying on the segment joining its neighbors
            if dpc <= tol || (dpq > tol && (cross2(p, c, q) / dpq).abs() <= tol) {
                poly.remove(i);
                removed = true;
                break;
            }
        }
        if !removed {
            return poly;
        }
    }
}

/// As [`clip_faces`] with an explicit geometric tolerance (length units).
pub fn clip_faces_with_tolerance(
    side_a: &[[Vec3; 3]],
    side_b: &[[Vec3; 3]],
    translation: Vec3,
    tol: f64,
) -> Result<Vec<ClipFragment>> {
    if side_a.is_empty() || side_b.is_empty() {
        return Ok(Vec::new());
    }
    let b_moved: Vec<[Vec3; 3]> = side_b
        .iter()
        .map(|t| t.map(|p| add(p, translation)))
        .collect();

    let t0 = side_a
        .iter()
        .max_by(|x, y| {
            let ax = norm(cross(sub(x[1], x[0]), sub(x[2], x[0])));
            let ay = norm(cross(sub(y[1], y[0]), sub(y[2], y[0])));
            ax.total_cmp(&ay)
        })
        .unwrap();
    let nrm = cross(sub(t0[1], t0[0]), sub(t0[2], t0[0]));
    let nl = norm(nrm);
    if nl == 0.0 {
        return Err(Error::Geometry("degenerate side-A triangle".into()));
    }
    let normal = [nrm[0] / nl, nrm[1] / nl, nrm[2] / nl];
    for (side, tris) in [("A", side_a), ("B", &b_moved[..])] {
        for (i, t) in tris.iter().enumerate() {
            for p in t {
                let d = dot(sub(*p, t0[0]), normal);
                if d.abs() > tol {
                    return Err(Error::Geometry(format!(
                        "side-{side} triangle {i} is off the interface plane by {d:.3e}"
                    )));
                }
            }
        }
    }
    let w = (0..3)
        .max_by(|&i, &j| normal[i].abs().total_cmp(&normal[j].abs()))
        .unwrap();
    let (u, v) = ((w + 1) % 3, (w + 2) % 3);
    let plane = Plane {
        origin: t0[0],
        normal,
        u,
        v,
        w,
        flip: normal[w] < 0.0,
    };

    let proj_a: Vec<[[f64; 2]; 3]> = side_a.iter().map(|t| ccw(t.map(|p| plane.project(p)))).collect();
    let proj_b: Vec<[[f64; 2]; 3]> = b_moved.iter().map(|t| ccw(t.map(|p| plane.project(p)))).collect();
    let bbox = |t: &[[f64; 2]; 3]| {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in t {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    };
    let boxes_b: Vec<_> = proj_b.iter().map(bbox).collect();
    // projected area shrinks by |n_w|
    let scale = normal[w].abs();
    let area_tol = tol * tol;

    let mut out = Vec::new();
    for (ia, ta) in proj_a.iter().enumerate() {
        let (alo, ahi) = bbox(ta);
        for (ib, tb) in proj_b.iter().enumerate() {
            let (blo, bhi) = boxes_b[ib];
            if alo[0] > bhi[0] + tol || blo[0] > ahi[0] + tol || alo[1] > bhi[1] + tol || blo[1] > ahi[1] + tol {
                continue;
            }
            let poly = cleanup(sutherland_hodgman(ta, tb, tol * 1e-3), tol);
            if poly.len() < 3 {
                continue;
            }
            let area = area2(&poly).abs() / scale;
            if area < area_tol {
                continue;
            }
            let mut pts: Vec<Vec3> = poly.iter().map(|&q| plane.lift(q)).collect();
            if plane.flip {
                pts.reverse();
            }
            debug_assert!((3..=6).contains(&pts.len()), "fragment with {} vertices", pts.len());
            out.push(ClipFragment {
                ia,
                ib,
                polygon: pts,
                area,
            });
        }
    }
    Ok(out)
}
