use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Tolerance for the nonnegative row-sum sandwich `min row <= rho <= max row`.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// QR sweeps allowed per row before an attempt is abandoned.
const SCHUR_ITER_PER_ROW: usize = 100;
/// Deflation tolerance of the last-resort attempt.
const LOOSE_EPS: f64 = 1e-13;

/// All eigenvalues of a real square matrix, via Hessenberg reduction and
/// shifted QR (real Schur form).
///
/// The QR sweep can stagnate on defective repeated eigenvalues, which star
/// equilibria produce routinely. A stalled attempt is retried on a seeded
/// random orthogonal similarity of the input (same spectrum, different
/// shift history), then once more with a looser deflation tolerance.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if !m.is_square() {
        return Err(Error::InvalidSize(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularInput);
    }
    let (mut values, rest) = deflate(m);
    if rest.is_empty() {
        return Ok(values);
    }
    let m = &m.select_rows(&rest).select_columns(&rest);
    values.extend(schur_eigenvalues(m)?);
    Ok(values)
}

/// Peels off agents whose row or column carries no off-diagonal mass among
/// the remaining agents: each is an exact eigenvalue (block-triangular
/// structure). Returns those eigenvalues and the indices left over.
fn deflate(m: &DMatrix<f64>) -> (Vec<Complex<f64>>, Vec<usize>) {
    let mut rest: Vec<usize> = (0..m.nrows()).collect();
    let mut values = Vec::new();
    loop {
        let isolated = rest.iter().position(|&i| {
            let row = rest.iter().all(|&j| j == i || m[(i, j)] == 0.0);
            let col = rest.iter().all(|&j| j == i || m[(j, i)] == 0.0);
            row || col
        });
        match isolated {
            Some(pos) => {
                let i = rest.remove(pos);
                values.push(Complex::new(m[(i, i)], 0.0));
            }
            None => return (values, rest),
        }
    }
}

fn schur_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    let max_iter = SCHUR_ITER_PER_ROW * n.max(10);
    let attempts =
        [(m.clone(), f64::EPSILON), (random_similarity(m, 1), f64::EPSILON), (random_similarity(m, 2), LOOSE_EPS)];
    for (a, eps) in attempts {
        if let Some(schur) = nalgebra::Schur::try_new(a, eps, max_iter) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::Eigen("Schur iteration did not converge".into()))
}

/// `Q M Q^T` for a seeded random orthogonal `Q`.
fn random_similarity(m: &DMatrix<f64>, seed: u64) -> DMatrix<f64> {
    use rand::Rng;
    let n = m.nrows();
    let mut rng = crate::rng::stream(seed, crate::rng::Stream::Sweep);
    let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
    &q * m * q.transpose()
}

pub fn is_nonnegative(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&v| v >= 0.0)
}

/// Smallest and largest row sums.
pub fn row_sum_bounds(m: &DMatrix<f64>) -> (f64, f64) {
    m.row_iter().map(|r| r.sum()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
}

/// Largest eigenvalue modulus. For entrywise-nonnegative input the result is
/// checked against the row-sum bounds before it is returned.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let rho = eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if is_nonnegative(m) {
        let (lo, hi) = row_sum_bounds(m);
        let slack = ROW_SUM_TOL * hi.abs().max(1.0);
        if rho < lo - slack || rho > hi + slack {
            return Err(Error::Eigen(format!("spectral radius {rho} outside row-sum bounds [{lo}, {hi}]")));
        }
    }
    Ok(rho)
}

/// Perron root of a nonnegative matrix by power iteration on `M + I`, which
/// shares the Perron vector and is aperiodic. Returns `None` if the
/// Collatz–Wielandt bounds have not closed to `tol` within `max_iter`.
pub fn perron_root(m: &DMatrix<f64>, max_iter: usize, tol: f64) -> Option<f64> {
    if !m.is_square() || !is_nonnegative(m) || m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let n = m.nrows();
    let shifted = m + DMatrix::identity(n, n);
    let mut v = nalgebra::DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..max_iter {
        let next = &shifted * &v;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let ratio = next[i] / v[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        if hi - lo <= tol * hi.max(1.0) {
            return Some(0.5 * (lo + hi) - 1.0);
        }
        let total = next.sum();
        v = next / total;
        // keep every component strictly positive so the ratios stay defined
        v.iter_mut().for_each(|c| *c = c.max(f64::MIN_POSITIVE));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_radii() {
        assert_eq!(spectral_radius(&DMatrix::identity(3, 3)).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.2, 0.9]));
        assert_eq!(spectral_radius(&d).unwrap(), 0.9);
        let p = DMatrix::from_diagonal_element(4, 4, 2.0);
        assert_eq!(spectral_radius(&p).unwrap(), 2.0);
    }

    #[test]
    fn rotation_has_complex_spectrum() {
        let r = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        let ev = eigenvalues(&r).unwrap();
        assert!(ev.iter().all(|z| (z.im.abs() - 0.5).abs() < 1e-15));
        assert!((spectral_radius(&r).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jordan_block_is_exact() {
        // defective eigenvalue 1: plain QR would smear it by ~sqrt(eps)
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.2, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(spectral_radius(&m).unwrap(), 1.0);
        let ev = eigenvalues(&m).unwrap();
        assert!(ev.iter().all(|z| *z == Complex::new(1.0, 0.0)));
    }

    #[test]
    fn partial_deflation_keeps_spectrum() {
        let m = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, 0.1, 0.3, 0.0, 0.7, 0.4, 0.9]);
        let mut ev: Vec<f64> = eigenvalues(&m).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        let disc = ((0.5f64 - 0.3).powi(2) + 4.0 * 0.02).sqrt();
        let expected = [(0.8 - disc) / 2.0, (0.8 + disc) / 2.0, 0.9];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{ev:?}");
        }
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::INFINITY, 0.0, 1.0]);
        assert!(matches!(spectral_radius(&m), Err(Error::SingularInput)));
    }

    #[test]
    fn power_iteration_agrees_on_nonnegative() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        // periodic permutation matrix: plain power iteration would cycle
        assert!((perron_root(&m, 10_000, 1e-13).unwrap() - 1.0).abs() < 1e-10);
        let m = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, 0.1, 0.3, 0.4, 0.6, 0.0, 0.1]);
        let eig = spectral_radius(&m).unwrap();
        assert!((perron_root(&m, 10_000, 1e-14).unwrap() - eig).abs() < 1e-10);
    }
}
