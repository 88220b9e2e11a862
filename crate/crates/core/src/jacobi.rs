//! Orthonormal Jacobi polynomials and the Gauss-type point sets built from them.

use nalgebra::{DMatrix, SymmetricEigen};

fn gamma_int(n: f64) -> f64 {
    // Γ(n) for positive integer n
    let mut acc = 1.0;
    let mut k = 2.0;
    while k < n - 0.5 {
        acc *= k;
        k += 1.0;
    }
    acc
}

/// Value of the degree-`n` Jacobi polynomial P_n^{(alpha,beta)} at `x`, normalized to be
/// orthonormal on [-1, 1] with weight (1-x)^alpha (1+x)^beta.
///
/// `alpha` and `beta` must be non-negative integers (stored as f64).
pub fn jacobi_p(x: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    let ab = alpha + beta;
    let p0 = (2f64.powf(-ab - 1.0) * gamma_int(ab + 2.0)
        / (gamma_int(alpha + 1.0) * gamma_int(beta + 1.0)))
    .sqrt();
    if n == 0 {
        return p0;
    }
    let p1 = ((ab + 2.0) * x / 2.0 + (alpha - beta) / 2.0)
        * ((ab + 3.0) / ((alpha + 1.0) * (beta + 1.0))).sqrt()
        * p0;
    if n == 1 {
        return p1;
    }
    let mut a_old = 2.0 / (2.0 + ab) * ((alpha + 1.0) * (beta + 1.0) / (ab + 3.0)).sqrt();
    let (mut pm1, mut p) = (p0, p1);
    for i in 1..n {
        let i = i as f64;
        let h1 = 2.0 * i + ab;
        let a_new = 2.0 / (h1 + 2.0)
            * ((i + 1.0) * (i + 1.0 + ab) * (i + 1.0 + alpha) * (i + 1.0 + beta)
                / (h1 + 1.0)
                / (h1 + 3.0))
                .sqrt();
        let b_new = -(alpha * alpha - beta * beta) / h1 / (h1 + 2.0);
        let next = (-a_old * pm1 + (x - b_new) * p) / a_new;
        pm1 = p;
        p = next;
        a_old = a_new;
    }
    p
}

/// Derivative of [`jacobi_p`] with respect to `x`.
pub fn grad_jacobi_p(x: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    (nf * (nf + alpha + beta + 1.0)).sqrt() * jacobi_p(x, alpha + 1.0, beta + 1.0, n - 1)
}

/// Gauss-Jacobi quadrature with `n_points` points for weight (1-x)^alpha (1+x)^beta.
///
/// Returns (nodes ascending, weights). Golub-Welsch on the symmetric Jacobi matrix.
pub fn gauss_jacobi(alpha: f64, beta: f64, n_points: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n_points >= 1);
    let ab = alpha + beta;
    let mu0 = 2f64.powf(ab + 1.0) * gamma_int(alpha + 1.0) * gamma_int(beta + 1.0)
        / gamma_int(ab + 2.0);
    if n_points == 1 {
        return (vec![(beta - alpha) / (ab + 2.0)], vec![mu0]);
    }
    let n = n_points;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let h1 = 2.0 * i as f64 + ab;
        jm[(i, i)] = if h1.abs() < 1e-14 {
            0.0
        } else {
            -(alpha * alpha - beta * beta) / (h1 + 2.0) / h1
        };
        if i + 1 < n {
            let k = (i + 1) as f64;
            let off = 2.0 / (h1 + 2.0)
                * (k * (k + ab) * (k + alpha) * (k + beta) / (h1 + 1.0) / (h1 + 3.0)).sqrt();
            jm[(i, i + 1)] = off;
            jm[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0 * mu0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Legendre-Gauss-Lobatto nodes on [-1, 1], `order + 1` of them, ascending.
pub fn gauss_lobatto(order: usize) -> Vec<f64> {
    match order {
        0 => vec![0.0],
        1 => vec![-1.0, 1.0],
        _ => {
            let (interior, _) = gauss_jacobi(1.0, 1.0, order - 1);
            let mut x = Vec::with_capacity(order + 1);
            x.push(-1.0);
            x.extend(interior);
            x.push(1.0);
            x
        }
    }
}
