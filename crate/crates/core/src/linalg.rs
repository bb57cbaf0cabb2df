//! Small dense linear algebra on reals and jets.

use crate::jet::JetError;
use crate::scalar::{lit, Real, Scalar};
use crate::tensor::Tensor;

/// Inverse of an `n × n` matrix with scalar or jet entries by Gauss–Jordan
/// elimination, pivoting on the values at the expansion point.
pub fn invert<T: Real, S: Scalar<T>>(m: &[Vec<S>]) -> Result<Vec<Vec<S>>, JetError> {
    let n = m.len();
    let mut a: Vec<Vec<S>> = m.to_vec();
    let one = m[0][0].constant_like(T::one());
    let zero = m[0][0].constant_like(T::zero());
    let mut inv: Vec<Vec<S>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { one.clone() } else { zero.clone() }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .value()
                    .abs()
                    .partial_cmp(&a[j][col].value().abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if a[pivot][col].value() == T::zero() {
            return Err(JetError::DivisionByZero);
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = one.div(&a[col][col])?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&p);
            inv[col][j] = inv[col][j].mul(&p);
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i][col].clone();
            for j in 0..n {
                a[i][j] = a[i][j].sub(&f.mul(&a[col][j]));
                inv[i][j] = inv[i][j].sub(&f.mul(&inv[col][j]));
            }
        }
    }
    Ok(inv)
}

/// Eigenvalues of a symmetric rank-2 tensor, ascending, by cyclic Jacobi
/// rotations.
pub fn symmetric_eigenvalues<T: Real>(t: &Tensor<T>) -> Vec<T> {
    let n = t.dim();
    let mut a: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| (*t.get(&[i, j]) + *t.get(&[j, i])) * lit(0.5)).collect())
        .collect();
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: T = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (lit::<T>(2.0) * a[p][q]);
                let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                let tt = sign / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (tt * tt + T::one()).sqrt();
                let s = tt * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

/// Solves `A x = b` for a small real system with partial pivoting.
pub fn solve<T: Real>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let inv = invert(a).ok()?;
    Some(
        inv.iter()
            .map(|row| row.iter().zip(b).map(|(&r, &v)| r * v).sum())
            .collect(),
    )
}
