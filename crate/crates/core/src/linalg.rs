//! Small dense helpers on top of nalgebra: real-form eigenvalues of the
//! 4x4 drift matrix, invariant subspaces of conjugate pairs, and the
//! Kronecker-form Lyapunov solve.

use nalgebra::{DMatrix, DVector, Matrix4, Matrix4x2, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix4 = Matrix4<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Change of basis from `(c, c+, d, d+)` to real quadratures
/// `(x_c, p_c, x_d, p_d)` with `x = (c + c+)/2`, `p = (c - c+)/2i`.
fn to_quadrature() -> CMatrix4 {
    let h = Complex64::new(0.5, 0.0);
    let mut t = CMatrix4::zeros();
    for k in [0, 2] {
        t[(k, k)] = h;
        t[(k, k + 1)] = h;
        t[(k + 1, k)] = -I * h;
        t[(k + 1, k + 1)] = I * h;
    }
    t
}

fn from_quadrature() -> CMatrix4 {
    let one = Complex64::new(1.0, 0.0);
    let mut t = CMatrix4::zeros();
    for k in [0, 2] {
        t[(k, k)] = one;
        t[(k, k + 1)] = I;
        t[(k + 1, k)] = one;
        t[(k + 1, k + 1)] = -I;
    }
    t
}

/// Real matrix similar to a drift matrix with the `(c, c+, d, d+)`
/// conjugation structure.
pub fn real_form(m: &CMatrix4) -> Matrix4<f64> {
    let r = to_quadrature() * m * from_quadrature();
    r.map(|z| z.re)
}

/// Eigenvalues of a real 4x4 matrix. Eigenvalues of 2x2 Schur blocks with
/// non-negative discriminant are returned with an exactly zero imaginary
/// part, so "purely real" is a sharp predicate.
pub fn real_eigenvalues(m: &Matrix4<f64>) -> [Complex64; 4] {
    let (_, t) = Schur::new(*m).unpack();
    let mut out = [Complex64::new(0.0, 0.0); 4];
    let mut k = 0;
    while k < 4 {
        if k == 3 || t[(k + 1, k)] == 0.0 {
            out[k] = Complex64::new(t[(k, k)], 0.0);
            k += 1;
            continue;
        }
        let a = t[(k, k)];
        let b = t[(k, k + 1)];
        let c = t[(k + 1, k)];
        let d = t[(k + 1, k + 1)];
        let half_tr = 0.5 * (a + d);
        let half_diff = 0.5 * (a - d);
        let disc = half_diff * half_diff + b * c;
        if disc >= 0.0 {
            let s = disc.sqrt();
            out[k] = Complex64::new(half_tr + s, 0.0);
            out[k + 1] = Complex64::new(half_tr - s, 0.0);
        } else {
            let s = (-disc).sqrt();
            out[k] = Complex64::new(half_tr, s);
            out[k + 1] = Complex64::new(half_tr, -s);
        }
        k += 2;
    }
    out
}

/// Orthonormal basis of the real invariant subspace belonging to a pair of
/// eigenvalues that is closed under conjugation (a complex-conjugate pair
/// or two real values). Uses the null space of the real quadratic
/// `(M - e1)(M - e2)`, which stays well defined at a double eigenvalue.
pub fn pair_subspace(m: &Matrix4<f64>, e1: Complex64, e2: Complex64) -> Matrix4x2<f64> {
    let s = (e1 + e2).re;
    let p = (e1 * e2).re;
    let q = m * m - m * s + Matrix4::identity() * p;
    let svd = q.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    // Descending order: the last two right singular vectors span the null space.
    let mut basis = Matrix4x2::zeros();
    for j in 0..2 {
        for i in 0..4 {
            basis[(i, j)] = v_t[(2 + j, i)];
        }
    }
    basis
}

/// Solves `M S + S M^T + D = 0` for `S` through the 16x16 Kronecker system.
pub fn lyapunov(m: &CMatrix4, d: &CMatrix4) -> Result<CMatrix4> {
    let n = 4;
    let mut k = DMatrix::<Complex64>::zeros(n * n, n * n);
    // Column-major vec: vec(M S) = (I (x) M) vec S, vec(S M^T) = (M (x) I) vec S.
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                k[(a * n + b, a * n + c)] += m[(b, c)];
                k[(a * n + b, c * n + b)] += m[(a, c)];
            }
        }
    }
    let rhs = DVector::from_iterator(n * n, d.iter().map(|z| -z));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or(Error::Numerical("singular Lyapunov operator"))?;
    Ok(CMatrix4::from_column_slice(sol.as_slice()))
}

pub fn inverse(m: &CMatrix4) -> Option<CMatrix4> {
    m.try_inverse()
}
