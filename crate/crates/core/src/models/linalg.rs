use crate::error::{Error, Result};

/// Pivots at or below this fraction of the largest diagonal entry count as
/// numerically zero.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Lower Cholesky factor of a symmetric positive definite row-major `n x n`
/// matrix. Fails on the first non-positive or negligible pivot.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    let floor = SINGULAR_RTOL * max_diag;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > floor) {
            return Err(Error::numeric(format!(
                "matrix is numerically singular at pivot {j} (value {d:.3e}, largest diagonal {max_diag:.3e})"
            )));
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

/// Solves `A X = B` for symmetric positive definite `A` (`n x n`) and `nrhs`
/// right-hand sides stored row-major in `b` (`n x nrhs`).
pub fn solve_spd(a: &[f64], n: usize, b: &[f64], nrhs: usize) -> Result<Vec<f64>> {
    assert_eq!(b.len(), n * nrhs);
    let l = cholesky(a, n)?;
    let mut x = b.to_vec();
    for c in 0..nrhs {
        for i in 0..n {
            let mut s = x[i * nrhs + c];
            for k in 0..i {
                s -= l[i * n + k] * x[k * nrhs + c];
            }
            x[i * nrhs + c] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i * nrhs + c];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k * nrhs + c];
            }
            x[i * nrhs + c] = s / l[i * n + i];
        }
    }
    Ok(x)
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration. Slight overestimates are harmless for step-size control, so
/// the result is inflated by a small margin.
pub fn max_eigenvalue(a: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // A fixed, non-symmetric start vector avoids being orthogonal to the
    // leading eigenvector in practice.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.618_033_988_7).fract()).collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect();
        let next: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        v = w;
        if (next - lambda).abs() <= 1e-9 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Gershgorin bound caps the estimate from above.
    let gersh = (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    (lambda * 1.05).min(gersh).max(lambda)
}
