//! Small dense helpers for the filters' fixed-size covariance matrices.

use nalgebra::{SMatrix, SVector};

pub type Vector<const D: usize> = SVector<f64, D>;
pub type Matrix<const D: usize> = SMatrix<f64, D, D>;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn symmetrize<const D: usize>(m: &Matrix<D>) -> Matrix<D> {
    (m + m.transpose()) * 0.5
}

/// Lower Cholesky factor, or `None` if some pivot is not strictly above
/// `min_pivot`.
pub fn cholesky<const D: usize>(m: &Matrix<D>, min_pivot: f64) -> Option<Matrix<D>> {
    let mut l = Matrix::<D>::zeros();
    for j in 0..D {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > min_pivot) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..D {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and a matrix whose columns are the eigenvectors.
pub fn sym_eigen<const D: usize>(m: &Matrix<D>) -> (Vector<D>, Matrix<D>) {
    let mut a = symmetrize(m);
    let mut v = Matrix::<D>::identity();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..D {
            for q in p + 1..D {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        let scale: f64 = (0..D).map(|i| a[(i, i)] * a[(i, i)]).sum::<f64>() + off;
        if off <= 1e-32 * scale || off == 0.0 {
            break;
        }
        for p in 0..D {
            for q in p + 1..D {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..D {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..D {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..D {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (Vector::<D>::from_fn(|i, _| a[(i, i)]), v)
}

/// Symmetrizes `m` and clips its eigenvalues at `floor`. Matrices whose
/// Cholesky pivots already exceed `floor` are only symmetrized.
pub fn condition_covariance<const D: usize>(m: &Matrix<D>, floor: f64) -> Matrix<D> {
    let s = symmetrize(m);
    if cholesky(&s, floor).is_some() {
        return s;
    }
    let (vals, vecs) = sym_eigen(&s);
    let clipped = Matrix::<D>::from_diagonal(&vals.map(|l| l.max(floor)));
    symmetrize(&(vecs * clipped * vecs.transpose()))
}

/// A square root `A` with `A Aᵀ = P` after flooring `P`'s eigenvalues at
/// `floor`. `None` if `P` has non-finite entries.
pub fn psd_sqrt<const D: usize>(p: &Matrix<D>, floor: f64) -> Option<Matrix<D>> {
    if p.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let s = symmetrize(p);
    if let Some(l) = cholesky(&s, floor) {
        return Some(l);
    }
    let (vals, vecs) = sym_eigen(&s);
    let roots = Matrix::<D>::from_diagonal(&vals.map(|l| l.max(floor).max(0.0).sqrt()));
    Some(vecs * roots)
}

/// Log-density of `N(mean, L Lᵀ)` at `x`, given the lower factor `L`.
pub fn gaussian_log_density<const D: usize>(x: &Vector<D>, mean: &Vector<D>, chol: &Matrix<D>) -> f64 {
    let d = x - mean;
    // forward substitution L u = d
    let mut u = Vector::<D>::zeros();
    let mut log_det = 0.0;
    for i in 0..D {
        let mut s = d[i];
        for k in 0..i {
            s -= chol[(i, k)] * u[k];
        }
        u[i] = s / chol[(i, i)];
        log_det += chol[(i, i)].ln();
    }
    -0.5 * (D as f64) * LN_2PI - log_det - 0.5 * u.norm_squared()
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse<const D: usize>(m: &Matrix<D>) -> Option<Matrix<D>> {
    let l = cholesky(m, 0.0)?;
    let mut inv = Matrix::<D>::zeros();
    for col in 0..D {
        let mut e = Vector::<D>::zeros();
        e[col] = 1.0;
        let mut y = Vector::<D>::zeros();
        for i in 0..D {
            let mut s = e[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        let mut x = Vector::<D>::zeros();
        for i in (0..D).rev() {
            let mut s = y[i];
            for k in i + 1..D {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        inv.set_column(col, &x);
    }
    Some(inv)
}
