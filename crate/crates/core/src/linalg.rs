//! Dense complex kernels used by the block solvers and the detectors.
//!
//! Matrices are column-major `nalgebra` storage. Every kernel takes a
//! [`Flops`] counter and adds the operations it actually performs, loop by
//! loop; the closed-form counts in [`count`] are kept separately so the two
//! can be checked against each other.
//!
//! One flop is one complex multiply-add, one complex division, one square
//! root or one complex subtraction/addition in an assembly step.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DncError, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Running operation count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flops(pub u64);

impl Flops {
    #[inline]
    pub fn add(&mut self, n: usize) {
        self.0 += n as u64;
    }
}

impl std::ops::AddAssign for Flops {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

/// Closed-form operation counts matching the kernels below.
pub mod count {
    pub fn cholesky(n: usize) -> u64 {
        let n = n as u64;
        n * (n + 1) * (n + 2) / 6
    }

    /// One triangular solve (either direction) with `k` right-hand sides.
    pub fn triangular_solve(n: usize, k: usize) -> u64 {
        let n = n as u64;
        k as u64 * n * (n + 1) / 2
    }

    /// `m×n` times `n×k`, or the adjoint variant with the same shapes.
    pub fn product(m: usize, n: usize, k: usize) -> u64 {
        (m * n * k) as u64
    }
}

/// `C ← C − A B` on raw column-major storage, through the packed complex GEMM.
///
/// # Safety
/// The pointers and strides must describe valid, non-overlapping `m×k`,
/// `k×n` and `m×n` matrices.
#[allow(clippy::too_many_arguments)]
unsafe fn gemm_sub(
    m: usize,
    k: usize,
    n: usize,
    a: *const C64,
    rsa: isize,
    csa: isize,
    b: *const C64,
    rsb: isize,
    csb: isize,
    c: *mut C64,
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    use matrixmultiply::CGemmOption::Standard;
    matrixmultiply::zgemm(
        Standard,
        Standard,
        m,
        k,
        n,
        [-1.0, 0.0],
        a.cast(),
        rsa,
        csa,
        b.cast(),
        rsb,
        csb,
        [1.0, 0.0],
        c.cast(),
        rsc,
        csc,
    );
}

/// Panel width of the blocked factorisation.
const NB: usize = 48;

/// Unblocked factorisation of columns `j0..j1`, whose earlier updates are applied.
fn cholesky_panel(
    data: &mut [C64],
    n: usize,
    j0: usize,
    j1: usize,
    flops: &mut Flops,
) -> Result<()> {
    for j in j0..j1 {
        let pivot = data[j * n + j].re;
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(DncError::Indefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        data[j * n + j] = C64::new(d, 0.0);
        let inv = 1.0 / d;
        for v in &mut data[j * n + j + 1..(j + 1) * n] {
            *v *= inv;
        }
        let (head, tail) = data.split_at_mut((j + 1) * n);
        let col_j = &head[j * n..];
        for k in j + 1..j1 {
            let f = col_j[k].conj();
            let dst = &mut tail[(k - j - 1) * n + k..(k - j) * n];
            let src = &col_j[k..n];
            for (x, s) in dst.iter_mut().zip(src) {
                *x -= s * f;
            }
        }
        for i in 0..j {
            data[j * n + i] = C64::new(0.0, 0.0);
        }
        // the scaling plus every lower-triangle update column j feeds,
        // whether applied here or in the trailing block update
        let r = n - j - 1;
        flops.add(1 + r + r * (r + 1) / 2);
    }
    Ok(())
}

/// In-place lower Cholesky factorisation `A = L Lᴴ` of a Hermitian positive
/// definite matrix. Only the lower triangle is read; the strict upper
/// triangle is zeroed on return. Right-looking and blocked: trailing updates
/// go through the packed GEMM one column block at a time.
pub fn cholesky_in_place(a: &mut CMat, flops: &mut Flops) -> Result<()> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let data = a.as_mut_slice();
    let mut j0 = 0;
    while j0 < n {
        let j1 = (j0 + NB).min(n);
        cholesky_panel(data, n, j0, j1, flops)?;
        if j1 < n {
            let w = j1 - j0;
            let rows = n - j1;
            // conj(L21), rows × w, column-major
            let mut lc = vec![C64::new(0.0, 0.0); rows * w];
            for p in 0..w {
                for (dst, src) in lc[p * rows..(p + 1) * rows]
                    .iter_mut()
                    .zip(&data[(j0 + p) * n + j1..(j0 + p + 1) * n])
                {
                    *dst = src.conj();
                }
            }
            let mut c0 = j1;
            while c0 < n {
                let c1 = (c0 + NB).min(n);
                // A[c0.., c0..c1] -= L21[c0.., :] · L21[c0..c1, :]ᴴ
                unsafe {
                    gemm_sub(
                        n - c0,
                        w,
                        c1 - c0,
                        data.as_ptr().add(j0 * n + c0),
                        1,
                        n as isize,
                        lc.as_ptr().add(c0 - j1),
                        rows as isize,
                        1,
                        data.as_mut_ptr().add(c0 * n + c0),
                        1,
                        n as isize,
                    );
                }
                c0 = c1;
            }
        }
        j0 = j1;
    }
    Ok(())
}

/// Solve `L X = B` in place for lower-triangular `L`.
pub fn forward_solve_in_place(l: &CMat, b: &mut CMat, flops: &mut Flops) {
    let n = l.nrows();
    debug_assert_eq!(b.nrows(), n);
    let ld = l.as_slice();
    for mut col in b.column_iter_mut() {
        let x = col.as_mut_slice();
        for j in 0..n {
            let xj = x[j] / ld[j * n + j];
            x[j] = xj;
            let lcol = &ld[j * n + j + 1..(j + 1) * n];
            for (xi, lij) in x[j + 1..].iter_mut().zip(lcol) {
                *xi -= lij * xj;
            }
            flops.add(n - j);
        }
    }
}

/// Solve `Lᴴ X = B` in place for lower-triangular `L`.
pub fn adjoint_backward_solve_in_place(l: &CMat, b: &mut CMat, flops: &mut Flops) {
    let n = l.nrows();
    debug_assert_eq!(b.nrows(), n);
    let ld = l.as_slice();
    for mut col in b.column_iter_mut() {
        let x = col.as_mut_slice();
        for j in (0..n).rev() {
            let lcol = &ld[j * n + j + 1..(j + 1) * n];
            let mut acc = x[j];
            for (lij, xi) in lcol.iter().zip(&x[j + 1..]) {
                acc -= lij.conj() * xi;
            }
            x[j] = acc / ld[j * n + j];
            flops.add(n - j);
        }
    }
}

/// `Aᴴ B` for `A: m×n`, `B: m×k`.
pub fn adjoint_mul(a: &CMat, b: &CMat, flops: &mut Flops) -> CMat {
    let (m, n) = a.shape();
    let k = b.ncols();
    debug_assert_eq!(b.nrows(), m);
    let ac: Vec<C64> = a.as_slice().iter().map(|z| z.conj()).collect();
    let mut out = CMat::zeros(n, k);
    // conj(A) read transposed is Aᴴ; accumulate −(−Aᴴ B)
    let neg: Vec<C64> = b.as_slice().iter().map(|z| -z).collect();
    unsafe {
        gemm_sub(
            n,
            m,
            k,
            ac.as_ptr(),
            m as isize,
            1,
            neg.as_ptr(),
            1,
            m as isize,
            out.as_mut_ptr(),
            1,
            n as isize,
        );
    }
    flops.add(m * n * k);
    out
}

/// `A Bᴴ` for `A: m×n`, `B: k×n`.
pub fn mul_adjoint(a: &CMat, b: &CMat, flops: &mut Flops) -> CMat {
    let (m, n) = a.shape();
    let k = b.nrows();
    debug_assert_eq!(b.ncols(), n);
    let bc: Vec<C64> = b.as_slice().iter().map(|z| -z.conj()).collect();
    let mut out = CMat::zeros(m, k);
    unsafe {
        gemm_sub(
            m,
            n,
            k,
            a.as_ptr(),
            1,
            m as isize,
            bc.as_ptr(),
            k as isize,
            1,
            out.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    flops.add(m * n * k);
    out
}

/// `A B` for `A: m×n`, `B: n×k`.
pub fn mul(a: &CMat, b: &CMat, flops: &mut Flops) -> CMat {
    let (m, n) = a.shape();
    let k = b.ncols();
    debug_assert_eq!(b.nrows(), n);
    let mut out = CMat::zeros(m, k);
    let neg: Vec<C64> = b.as_slice().iter().map(|z| -z).collect();
    unsafe {
        gemm_sub(
            m,
            n,
            k,
            a.as_ptr(),
            1,
            m as isize,
            neg.as_ptr(),
            1,
            n as isize,
            out.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    flops.add(m * n * k);
    out
}

/// Cholesky factor of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub l: CMat,
}

impl CholeskyFactor {
    pub fn new(mut a: CMat, flops: &mut Flops) -> Result<Self> {
        cholesky_in_place(&mut a, flops)?;
        Ok(CholeskyFactor { l: a })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Overwrite `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut CMat, flops: &mut Flops) {
        forward_solve_in_place(&self.l, b, flops);
        adjoint_backward_solve_in_place(&self.l, b, flops);
    }

    /// Explicit inverse.
    pub fn inverse(&self, flops: &mut Flops) -> CMat {
        let mut x = CMat::identity(self.dim(), self.dim());
        self.solve_in_place(&mut x, flops);
        x
    }
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖a − b‖₂ / ‖b‖₂ for vectors or matrices.
pub fn relative_error(a: &CMat, b: &CMat) -> f64 {
    let den = frobenius(b);
    let num = frobenius(&(a - b));
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_hpd(n: usize, seed: u64) -> CMat {
        let mut rng = crate::rng::stream(seed);
        let g = CMat::from_fn(n, n + 3, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        &g * g.adjoint() + CMat::identity(n, n) * C64::new(0.5, 0.0)
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = random_hpd(17, 3);
        let mut f = Flops::default();
        let c = CholeskyFactor::new(a.clone(), &mut f).unwrap();
        assert_eq!(f.0, count::cholesky(17));
        let back = &c.l * c.l.adjoint();
        assert!(relative_error(&back, &a) < 1e-13);
    }

    #[test]
    fn solve_matches_nalgebra() {
        let a = random_hpd(12, 9);
        let b = CMat::from_fn(12, 3, |i, j| C64::new(i as f64, j as f64 - 1.0));
        let mut f = Flops::default();
        let c = CholeskyFactor::new(a.clone(), &mut f).unwrap();
        let mut x = b.clone();
        let before = f;
        c.solve_in_place(&mut x, &mut f);
        assert_eq!(f.0 - before.0, 2 * count::triangular_solve(12, 3));
        let oracle = a.cholesky().unwrap().solve(&b);
        assert!(relative_error(&x, &oracle) < 1e-12);
    }

    #[test]
    fn products_count_and_agree() {
        let a = random_hpd(6, 1).columns(0, 4).into_owned();
        let b = random_hpd(6, 2).columns(0, 5).into_owned();
        let mut f = Flops::default();
        let p = adjoint_mul(&a, &b, &mut f);
        assert_eq!(f.0, count::product(6, 4, 5));
        assert!(relative_error(&p, &(a.adjoint() * &b)) < 1e-14);
        let mut g = Flops::default();
        let q = mul(&a.adjoint(), &b, &mut g);
        assert_eq!(g.0, count::product(4, 6, 5));
        assert!(relative_error(&q, &p) < 1e-14);
        let r = mul_adjoint(&b.adjoint(), &a.adjoint(), &mut g);
        assert!(relative_error(&r, &p.adjoint()) < 1e-14);
    }

    #[test]
    fn blocked_cholesky_matches_nalgebra() {
        let a = random_hpd(131, 5);
        let mut f = Flops::default();
        let c = CholeskyFactor::new(a.clone(), &mut f).unwrap();
        assert_eq!(f.0, count::cholesky(131));
        let oracle = a.cholesky().unwrap().l();
        assert!(relative_error(&c.l, &oracle) < 1e-12);
    }

    #[test]
    fn indefinite_detected() {
        let mut a = CMat::identity(3, 3);
        a[(1, 1)] = C64::new(-1.0, 0.0);
        let err = cholesky_in_place(&mut a, &mut Flops::default()).unwrap_err();
        assert!(matches!(err, DncError::Indefinite { index: 1, .. }));
    }
}
