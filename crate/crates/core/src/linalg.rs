//! Dense eigenvalue and kernel solves.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Default bound on `|Im(lambda)|` for a spectrum to count as real.
pub const DEFAULT_TOL_IMAG: f64 = 1e-8;

const SCHUR_MAX_ITER: usize = 100_000;

/// Parlett-Reinsch balancing: a diagonal similarity with power-of-two
/// entries that equalises row and column norms. Eigenvalues are unchanged.
pub fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// All eigenvalues of a square matrix, in no particular order.
pub fn complex_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    assert!(a.is_square(), "eigenvalues of a non-square matrix");
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut b = a.clone();
    balance(&mut b);
    let schur = nalgebra::linalg::Schur::try_new(b, f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(Error::EigenConvergence(n))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues sorted by real part, then imaginary part.
pub fn sorted_complex_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let mut ev = complex_eigenvalues(a)?;
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(ev)
}

/// Real spectrum sorted ascending. Fails when some eigenvalue has
/// `|Im| > tol_imag * max(1, |Re|)`.
pub fn real_spectrum(a: &DMatrix<f64>, tol_imag: f64) -> Result<Vec<f64>> {
    let ev = complex_eigenvalues(a)?;
    let worst = ev
        .iter()
        .map(|z| z.im.abs() / 1f64.max(z.re.abs()))
        .fold(0.0, f64::max);
    if worst > tol_imag {
        return Err(Error::NonRealSpectrum {
            max_imag: worst,
            tol: tol_imag,
        });
    }
    let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    Ok(re)
}

/// Pivot ratio below which a kernel solve reports a degenerate kernel.
pub const KERNEL_PIVOT_RATIO: f64 = 1e-12;

/// Unit-sum right null vector of a matrix with vanishing column sums.
///
/// The last equation is replaced by the normalisation `sum(x) = 1`; a second
/// kernel direction shows up as a vanishing pivot of the modified system.
pub fn unit_sum_kernel(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = m.nrows();
    assert!(m.is_square() && n > 0);
    let mut a = m.clone();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = a.full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min / max < KERNEL_PIVOT_RATIO {
        return Err(Error::NonUniqueKernel(if max == 0.0 {
            0.0
        } else {
            min / max
        }));
    }
    lu.solve(&rhs).ok_or(Error::NonUniqueKernel(min / max))
}

/// Numerical rank from singular values relative to the largest one.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_markov_spectrum() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -4.0, -2.0, 4.0]);
        let ev = real_spectrum(&m, DEFAULT_TOL_IMAG).unwrap();
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 6.0).abs() < 1e-13);
        let pi = unit_sum_kernel(&m).unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-15 && (pi[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_is_not_real() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(
            real_spectrum(&m, DEFAULT_TOL_IMAG),
            Err(Error::NonRealSpectrum { .. })
        ));
        assert_eq!(sorted_complex_eigenvalues(&m).unwrap().len(), 2);
    }

    #[test]
    fn balancing_preserves_eigenvalues_of_badly_scaled_matrix() {
        let d = [1e-6, 1.0, 1e6];
        let base = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let scaled = DMatrix::from_fn(3, 3, |i, j| base[(i, j)] * d[i] / d[j]);
        let a = real_spectrum(&base, 1e-8).unwrap();
        let b = real_spectrum(&scaled, 1e-8).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn disconnected_generator_has_degenerate_kernel() {
        let m = DMatrix::<f64>::zeros(2, 2);
        assert!(matches!(
            unit_sum_kernel(&m),
            Err(Error::NonUniqueKernel(_))
        ));
    }

    #[test]
    fn rank_of_outer_product() {
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(rank(&(&v * v.transpose()), 1e-10), 1);
        assert_eq!(rank(&DMatrix::<f64>::identity(4, 4), 1e-10), 4);
    }
}
