//! Collapsed-coordinate (conical product) quadrature on simplices.
//!
//! Rules are built from Gauss-Jacobi points, so every weight is positive and any degree
//! is reachable by adding points.

use crate::error::{Error, Result};
use crate::jacobi::gauss_jacobi;

/// Highest polynomial degree accepted by [`triangle_quadrature`].
pub const MAX_TRIANGLE_DEGREE: usize = 40;

/// Quadrature rule on the unit right triangle (0,0), (1,0), (0,1).
#[derive(Debug, Clone)]
pub struct TriangleQuadrature {
    /// Barycentric coordinates (l0, l1, l2) of each point; the Cartesian point is
    /// l0*v0 + l1*v1 + l2*v2.
    pub points: Vec<[f64; 3]>,
    /// Weights normalized to the unit right triangle, so they sum to 1/2.
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

impl TriangleQuadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Integrate `f(x, y)` over the unit right triangle.
    pub fn integrate_unit<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| w * f(l[1], l[2]))
            .sum()
    }

    /// Map the rule onto a physical triangle: returns (points, weights) with weights
    /// scaled so they sum to the triangle's area.
    pub fn on_triangle(&self, tri: &[[f64; 3]; 3]) -> (Vec<[f64; 3]>, Vec<f64>) {
        let area = triangle_area(tri);
        let pts = self
            .points
            .iter()
            .map(|l| {
                let mut p = [0.0; 3];
                for (d, pd) in p.iter_mut().enumerate() {
                    *pd = l[0] * tri[0][d] + l[1] * tri[1][d] + l[2] * tri[2][d];
                }
                p
            })
            .collect();
        let w = self.weights.iter().map(|w| 2.0 * area * w).collect();
        (pts, w)
    }
}

/// Area of a triangle in 3-space.
pub fn triangle_area(tri: &[[f64; 3]; 3]) -> f64 {
    let a = sub(tri[1], tri[0]);
    let b = sub(tri[2], tri[0]);
    let c = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Build a triangle rule exact for polynomials of total degree `degree`.
pub fn triangle_quadrature(degree: usize) -> Result<TriangleQuadrature> {
    if degree == 0 || degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::Config(format!(
            "triangle quadrature degree {degree} outside supported range 1..={MAX_TRIANGLE_DEGREE}"
        )));
    }
    let n = degree / 2 + 1;
    let (xa, wa) = gauss_jacobi(0.0, 0.0, n);
    let (xb, wb) = gauss_jacobi(1.0, 0.0, n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&b, &wbj) in xb.iter().zip(&wb) {
        for (&a, &wai) in xa.iter().zip(&wa) {
            let x = 0.25 * (1.0 + a) * (1.0 - b);
            let y = 0.5 * (1.0 + b);
            points.push([1.0 - x - y, x, y]);
            weights.push(wai * wbj / 8.0);
        }
    }
    Ok(TriangleQuadrature {
        points,
        weights,
        degree,
    })
}

/// Quadrature on the unit tetrahedron (0,0,0), (1,0,0), (0,1,0), (0,0,1), exact to
/// `degree`. Weights sum to 1/6. Returns (points, weights).
pub fn tet_quadrature(degree: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    let n = degree / 2 + 1;
    let (xa, wa) = gauss_jacobi(0.0, 0.0, n);
    let (xb, wb) = gauss_jacobi(1.0, 0.0, n);
    let (xc, wc) = gauss_jacobi(2.0, 0.0, n);
    let mut pts = Vec::with_capacity(n * n * n);
    let mut ws = Vec::with_capacity(n * n * n);
    for (&c, &wck) in xc.iter().zip(&wc) {
        for (&b, &wbj) in xb.iter().zip(&wb) {
            for (&a, &wai) in xa.iter().zip(&wa) {
                let x = 0.125 * (1.0 + a) * (1.0 - b) * (1.0 - c);
                let y = 0.25 * (1.0 + b) * (1.0 - c);
                let z = 0.5 * (1.0 + c);
                pts.push([x, y, z]);
                ws.push(wai * wbj * wck / 64.0);
            }
        }
    }
    (pts, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∫∫_T x^a y^b = a! b! / (a+b+2)!
    fn monomial_exact(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn centroid_rule() {
        let q = triangle_quadrature(1).unwrap();
        assert_eq!(q.len(), 1);
        assert!((q.weights[0] - 0.5).abs() < 1e-15);
        assert!((q.points[0][1] - 1.0 / 3.0).abs() < 1e-14);
        assert!((q.points[0][2] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn degree_two_xy() {
        let q = triangle_quadrature(2).unwrap();
        assert!((q.integrate_unit(|x, y| x * y) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn exact_to_stated_degree_with_positive_weights() {
        for deg in 1..=20 {
            let q = triangle_quadrature(deg).unwrap();
            assert!((q.weights.iter().sum::<f64>() - 0.5).abs() < 1e-14);
            assert!(q.weights.iter().all(|&w| w > 0.0));
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    let got = q.integrate_unit(|x, y| x.powi(a as i32) * y.powi(b as i32));
                    let exact = monomial_exact(a, b);
                    assert!(
                        (got - exact).abs() < 1e-13 * exact.max(1e-3),
                        "deg {deg} x^{a} y^{b}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn unsupported_degree() {
        assert!(triangle_quadrature(0).is_err());
        assert!(triangle_quadrature(MAX_TRIANGLE_DEGREE + 1).is_err());
    }

    #[test]
    fn tet_rule_monomials() {
        let (p, w) = tet_quadrature(6);
        assert!((w.iter().sum::<f64>() - 1.0 / 6.0).abs() < 1e-15);
        // ∫ x^2 y z over unit tet = 2! 1! 1! / 7!
        let v: f64 = p.iter().zip(&w).map(|(x, w)| w * x[0] * x[0] * x[1] * x[2]).sum();
        assert!((v - 2.0 / 5040.0).abs() < 1e-16);
    }
}
