//! Cyclic Jacobi eigensolver for Hermitian matrices.

use super::CMat;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as matrix columns. The input is symmetrized before
/// iterating, so tiny Hermiticity violations are tolerated; callers that
/// need a strict check should test `hermiticity_residual` themselves.
/// Each eigenvector's phase is fixed so its largest-modulus component is
/// real and positive, making the output deterministic.
pub fn eigh<S: Scalar>(a: &CMat<S>) -> Result<(Vec<S>, CMat<S>)> {
    let n = a.dim();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0)));
    }
    let mut m = a.hermitian_part();
    let mut v = CMat::identity(n);
    if m.data().iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::InvalidState("matrix contains non-finite entries".into()));
    }
    let scale = m.max_abs();
    if scale == S::zero() || n == 1 {
        return Ok(finish(m, v));
    }

    let tol = scale * S::epsilon() * S::real(n as f64);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut max_off = S::zero();
        for p in 0..n - 1 {
            for q in p + 1..n {
                max_off = max_off.max(m[(p, q)].norm());
            }
        }
        if max_off <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                if m[(p, q)].norm() > tol {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }
    if !converged {
        let mut max_off = S::zero();
        for p in 0..n - 1 {
            for q in p + 1..n {
                max_off = max_off.max(m[(p, q)].norm());
            }
        }
        if max_off > tol {
            return Err(Error::EigenFailure { sweeps: MAX_SWEEPS });
        }
    }
    Ok(finish(m, v))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<S: Scalar>(a: &CMat<S>) -> Result<S> {
    let (vals, _) = eigh(a)?;
    vals.first().copied().ok_or(Error::EmptyState)
}

/// One Jacobi rotation zeroing the `(p, q)` entry.
///
/// With `a_pq = r u` (`|u| = 1`), the rotation uses the smaller root of
/// `t^2 - 2 tau t - 1 = 0`, `tau = (a_qq - a_pp) / 2r`, keeping the
/// rotation angle below 45 degrees for stable convergence.
fn rotate<S: Scalar>(m: &mut CMat<S>, v: &mut CMat<S>, p: usize, q: usize) {
    let n = m.dim();
    let apq = m[(p, q)];
    let r = apq.norm();
    let u = apq / S::cre(r);
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let tau = (aqq - app) / (S::real(2.0) * r);
    let sign = if tau >= S::zero() { S::one() } else { -S::one() };
    let t = -sign / (tau.abs() + (S::one() + tau * tau).sqrt());
    let c = S::one() / (S::one() + t * t).sqrt();
    let s = t * c;

    let cpp = S::cre(c * c * app + s * s * aqq + S::real(2.0) * c * s * r);
    let cqq = S::cre(c * c * aqq + s * s * app - S::real(2.0) * c * s * r);
    let cs = S::cre(c);
    let su = u * S::cre(s);
    let su_conj = u.conj() * S::cre(s);

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        let nkp = akp * cs + akq * su_conj;
        let nkq = akq * cs - akp * su;
        m[(k, p)] = nkp;
        m[(p, k)] = nkp.conj();
        m[(k, q)] = nkq;
        m[(q, k)] = nkq.conj();
    }
    m[(p, p)] = cpp;
    m[(q, q)] = cqq;
    m[(p, q)] = S::czero();
    m[(q, p)] = S::czero();

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * cs + vkq * su_conj;
        v[(k, q)] = vkq * cs - vkp * su;
    }
}

/// Extracts sorted eigenvalues, permutes eigenvector columns to match, and
/// fixes each column's global phase.
fn finish<S: Scalar>(m: CMat<S>, v: CMat<S>) -> (Vec<S>, CMat<S>) {
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let a = m[(i, i)].re.to_f64().unwrap_or(f64::NAN);
        let b = m[(j, j)].re.to_f64().unwrap_or(f64::NAN);
        a.total_cmp(&b)
    });
    let vals: Vec<S> = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vecs = CMat::zeros(n);
    for (new, &old) in order.iter().enumerate() {
        let mut col = v.column(old);
        let mut best = 0usize;
        let mut best_mag = S::zero();
        for (k, x) in col.iter().enumerate() {
            let mag = x.norm();
            if mag > best_mag {
                best_mag = mag;
                best = k;
            }
        }
        if best_mag > S::zero() {
            let phase = col[best] / S::cre(best_mag);
            let nrm = super::norm(&col);
            let fix = phase.conj() / S::cre(nrm);
            for x in col.iter_mut() {
                *x *= fix;
            }
        }
        vecs.set_column(new, &col);
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Cx;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type C = Cx<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn test_diagonal_matrix_sorted() {
        let mut m = CMat::zeros(3);
        m[(0, 0)] = c(2.0, 0.0);
        m[(1, 1)] = c(-1.0, 0.0);
        m[(2, 2)] = c(0.5, 0.0);
        let (vals, vecs) = eigh(&m).unwrap();
        assert_eq!(vals, vec![-1.0, 0.5, 2.0]);
        assert_eq!(vecs[(1, 0)], c(1.0, 0.0));
        assert_eq!(vecs[(2, 1)], c(1.0, 0.0));
        assert_eq!(vecs[(0, 2)], c(1.0, 0.0));
    }

    #[test]
    fn test_pauli_x() {
        let mut m = CMat::zeros(2);
        m[(0, 1)] = c(1.0, 0.0);
        m[(1, 0)] = c(1.0, 0.0);
        let (vals, vecs) = eigh(&m).unwrap();
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-14);
        let s = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(vecs[(0, 0)].re, s, epsilon = 1e-14);
        assert_abs_diff_eq!(vecs[(1, 0)].re, -s, epsilon = 1e-14);
        assert_abs_diff_eq!(vecs[(0, 1)].re, s, epsilon = 1e-14);
        assert_abs_diff_eq!(vecs[(1, 1)].re, s, epsilon = 1e-14);
    }

    #[test]
    fn test_pauli_y_complex_eigenvectors() {
        let mut m = CMat::zeros(2);
        m[(0, 1)] = c(0.0, -1.0);
        m[(1, 0)] = c(0.0, 1.0);
        let (vals, vecs) = eigh(&m).unwrap();
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-14);
        for j in 0..2 {
            let col = vecs.column(j);
            let av = m.matvec(&col);
            for i in 0..2 {
                assert_abs_diff_eq!(av[i].re, vals[j] * col[i].re, epsilon = 1e-14);
                assert_abs_diff_eq!(av[i].im, vals[j] * col[i].im, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn test_coupling_chain_spectrum() {
        let g = 20.0;
        let eta = 2000.0;
        let couplings = [g, eta, eta, g];
        let mut m = CMat::zeros(5);
        for (i, &k) in couplings.iter().enumerate() {
            m[(i, i + 1)] = c(k, 0.0);
            m[(i + 1, i)] = c(k, 0.0);
        }
        let (vals, _) = eigh(&m).unwrap();
        let eps = (g * g + 2.0 * eta * eta).sqrt();
        let expect = [-eps, -g, 0.0, g, eps];
        for (v, e) in vals.iter().zip(&expect) {
            assert_abs_diff_eq!(v, e, epsilon = 1e-10 * eps);
        }
    }

    #[test]
    fn test_random_hermitian_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 8;
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let re = rng.gen_range(-1.0..1.0);
                let im = if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) };
                m[(i, j)] = c(re, im);
                m[(j, i)] = c(re, -im);
            }
        }
        let (vals, vecs) = eigh(&m).unwrap();
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let mut recon = CMat::zeros(n);
        for j in 0..n {
            let col = vecs.column(j);
            let proj = CMat::outer(&col);
            recon.add_scaled(c(vals[j], 0.0), &proj);
        }
        for i in 0..n {
            for j in 0..n {
                assert_abs_diff_eq!(recon[(i, j)].re, m[(i, j)].re, epsilon = 1e-12);
                assert_abs_diff_eq!(recon[(i, j)].im, m[(i, j)].im, epsilon = 1e-12);
            }
        }
        let gram = vecs.adjoint().mul(&vecs);
        let id = CMat::identity(n);
        for i in 0..n {
            for j in 0..n {
                assert!((gram[(i, j)] - id[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn test_deterministic_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let re = rng.gen_range(-1.0..1.0);
                let im = if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) };
                m[(i, j)] = c(re, im);
                m[(j, i)] = c(re, -im);
            }
        }
        let (v1, e1) = eigh(&m).unwrap();
        let (v2, e2) = eigh(&m).unwrap();
        assert_eq!(v1, v2);
        assert_eq!(e1, e2);
    }

    #[test]
    fn test_non_finite_rejected() {
        let mut m = CMat::zeros(2);
        m[(0, 0)] = c(f64::NAN, 0.0);
        assert!(eigh(&m).is_err());
    }
}
