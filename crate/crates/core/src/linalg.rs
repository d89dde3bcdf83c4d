//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Matrix unit `e_{jk}` of size `n`.
pub fn unit(n: usize, j: usize, k: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(j, k)] = c(1.0);
    m
}

/// Build a matrix from real row-major data.
pub fn real(rows: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_fn(rows, cols, |i, j| c(data[i * cols + j]))
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    match to_faer(m).singular_values() {
        Ok(s) => s.into_iter().fold(
            0.0,
            |a: f64, v| if v.is_nan() { f64::NAN } else { a.max(v) },
        ),
        Err(_) => f64::NAN,
    }
}

fn to_faer(m: &CMat) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        faer::c64::new(m[(i, j)].re, m[(i, j)].im)
    })
}

/// Matrix product through faer's blocked kernels, much faster than the
/// generic complex product for the sizes met in dilations.
pub fn mul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matrix product shapes");
    let p = to_faer(a) * to_faer(b);
    CMat::from_fn(p.nrows(), p.ncols(), |i, j| {
        C64::new(p[(i, j)].re, p[(i, j)].im)
    })
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix (its Hermitian part is used),
/// eigenvalues ascending with matching eigenvector columns. Non-finite
/// input or a failed decomposition yields NaN eigenvalues, which every
/// caller treats as a failure.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let h = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
        let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        faer::c64::new(z.re, z.im)
    });
    match h.self_adjoint_eigen(faer::Side::Lower) {
        Ok(evd) => {
            let s = evd.S().column_vector();
            let u = evd.U();
            let vals = (0..n).map(|i| s[i].re).collect();
            let vecs = CMat::from_fn(n, n, |i, j| C64::new(u[(i, j)].re, u[(i, j)].im));
            (vals, vecs)
        }
        Err(_) => (vec![f64::NAN; n], CMat::identity(n, n)),
    }
}

/// Outcome of a positivity test on a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct PsdVerdict {
    pub positive: bool,
    pub min_eigenvalue: f64,
    /// Largest eigenvalue magnitude, floored at 1; tolerances are relative to it.
    pub scale: f64,
    pub witness: Option<Vec<C64>>,
}

/// A matrix counts as positive when its smallest eigenvalue is at least
/// `-rel_tol * max(|lambda|_max, 1)`.
pub fn psd_check(m: &CMat, rel_tol: f64) -> PsdVerdict {
    let (vals, vecs) = hermitian_eigen(m);
    let Some(&min) = vals.first() else {
        return PsdVerdict {
            positive: true,
            min_eigenvalue: 0.0,
            scale: 1.0,
            witness: None,
        };
    };
    let top = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let scale = top.max(1.0);
    let positive = min >= -rel_tol * scale;
    PsdVerdict {
        positive,
        min_eigenvalue: min,
        scale,
        witness: (!positive).then(|| vecs.column(0).iter().copied().collect()),
    }
}

/// Orthonormal basis for the column space of `m` together with a
/// pseudo-inverse restricted to that space. Directions whose squared
/// singular value falls below `rel_cut` times the largest are discarded.
pub fn range_and_pinv(m: &CMat, rel_cut: f64) -> (CMat, CMat) {
    let rows = m.nrows();
    let g = m * m.adjoint();
    let (vals, vecs) = hermitian_eigen(&g);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| top > 0.0 && vals[i] > rel_cut * top)
        .collect();
    let mut q = CMat::zeros(rows, keep.len());
    let mut scaled = CMat::zeros(rows, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        q.set_column(dst, &vecs.column(src));
        scaled.set_column(dst, &(vecs.column(src) * c(1.0 / vals[src])));
    }
    let pinv = m.adjoint() * &scaled * q.adjoint();
    (q, pinv)
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Matrix with entries whose real and imaginary parts are uniform in `[-1, 1)`.
pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Unitary `Q` factor of a random square matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    random_matrix(n, n, rng).qr().q()
}

/// Random matrix rescaled to operator norm `norm`.
pub fn random_contraction<R: Rng + ?Sized>(n: usize, norm: f64, rng: &mut R) -> CMat {
    let m = random_matrix(n, n, rng);
    let s = op_norm(&m);
    m * c(norm / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_of_diagonal() {
        let m = real(2, 2, &[3.0, 0.0, 0.0, -4.0]);
        assert!((op_norm(&m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn op_norm_of_rectangular() {
        let m = real(1, 2, &[3.0, 4.0]);
        assert!((op_norm(&m) - 5.0).abs() < 1e-12);
        let m = real(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        assert!((op_norm(&m) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_come_sorted() {
        let m = real(3, 3, &[2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 5.0]);
        let (vals, vecs) = hermitian_eigen(&m);
        assert_eq!(vals.len(), 3);
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[2] - 5.0).abs() < 1e-12);
        let v = vecs.column(0);
        assert!((v[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psd_verdict_reports_witness() {
        let m = real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let v = psd_check(&m, 1e-8);
        assert!(!v.positive);
        assert!((v.min_eigenvalue + 1.0).abs() < 1e-12);
        assert_eq!(v.witness.unwrap().len(), 2);
        assert!(psd_check(&identity(3), 1e-8).positive);
    }

    #[test]
    fn pinv_inverts_on_range() {
        let m = real(3, 2, &[1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        let (q, p) = range_and_pinv(&m, 1e-12);
        assert_eq!(q.ncols(), 2);
        let back = &p * &m;
        assert!((back - identity(2)).norm() < 1e-10);
    }

    #[test]
    fn random_unitary_is_unitary() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(3, &mut rng);
        assert!(max_abs(&(u.adjoint() * &u - identity(3))) < 1e-12);
        let t = random_contraction(2, 0.5, &mut rng);
        assert!((op_norm(&t) - 0.5).abs() < 1e-12);
    }
}
