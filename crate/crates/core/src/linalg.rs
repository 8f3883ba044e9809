//! Thin wrappers over LAPACK for the dense kernels the solver needs.

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::SVD;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Column-major LU factorization with partial pivoting (`zgetrf`).
pub struct LuFactor {
    n: usize,
    data: Vec<C64>,
    ipiv: Vec<i32>,
}

impl LuFactor {
    /// Factorizes `a` (any layout); the input is consumed.
    pub fn new(a: Array2<C64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Linalg("LU needs a square matrix".into()));
        }
        let data = to_column_major(a);
        let mut lu = Self {
            n,
            data,
            ipiv: vec![0; n],
        };
        if n == 0 {
            return Ok(lu);
        }
        let ni = n as i32;
        let mut info = 0;
        unsafe {
            lapack_sys::zgetrf_(
                &ni,
                &ni,
                lu.data.as_mut_ptr() as *mut _,
                &ni,
                lu.ipiv.as_mut_ptr(),
                &mut info,
            );
        }
        if info < 0 {
            return Err(Error::Linalg(format!("zgetrf: illegal argument {}", -info)));
        }
        // info > 0 means an exactly zero pivot; callers detect this through σ_min
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Sign of the determinant for a factorized real matrix (imaginary parts
    /// of the pivots are ignored). Overflow-free.
    pub fn real_det_sign(&self) -> f64 {
        let mut sign = 1.0;
        for i in 0..self.n {
            if self.ipiv[i] as usize != i + 1 {
                sign = -sign;
            }
            let d = self.data[i * self.n + i].re;
            if d < 0.0 {
                sign = -sign;
            } else if d == 0.0 {
                return 0.0;
            }
        }
        sign
    }

    /// Solves `A X = B` (or `Aᴴ X = B` when `adjoint`) for all columns of `b`.
    pub fn solve_in_place(&self, b: &mut Array2<C64>, adjoint: bool) -> Result<()> {
        if b.nrows() != self.n {
            return Err(Error::Linalg("right-hand side has wrong row count".into()));
        }
        if self.n == 0 || b.ncols() == 0 {
            return Ok(());
        }
        let mut col = to_column_major(std::mem::take(b));
        let (ni, nrhs) = (self.n as i32, (col.len() / self.n) as i32);
        let trans = if adjoint { b'C' } else { b'N' } as std::ffi::c_char;
        let mut info = 0;
        unsafe {
            lapack_sys::zgetrs_(
                &trans,
                &ni,
                &nrhs,
                self.data.as_ptr() as *const _,
                &ni,
                self.ipiv.as_ptr(),
                col.as_mut_ptr() as *mut _,
                &ni,
                &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Linalg(format!("zgetrs failed with info {info}")));
        }
        *b =
            Array2::from_shape_vec((self.n, nrhs as usize).f(), col).expect("shape matches buffer");
        Ok(())
    }

    pub fn solve_vec(&self, v: &Array1<C64>, adjoint: bool) -> Result<Array1<C64>> {
        let mut m = v.clone().insert_axis(ndarray::Axis(1)).to_owned();
        self.solve_in_place(&mut m, adjoint)?;
        Ok(m.column(0).to_owned())
    }

    /// `σ_min` estimate by inverse iteration on `(AᴴA)^{-1}` through the
    /// factorization; deterministic start vector.
    pub fn smallest_singular_value(&self, iterations: usize) -> Result<f64> {
        if self.n == 0 {
            return Ok(f64::INFINITY);
        }
        if (0..self.n).any(|i| self.data[i * self.n + i] == C64::new(0.0, 0.0)) {
            return Ok(0.0);
        }
        let mut x = start_vector(self.n);
        let mut sigma = f64::INFINITY;
        for _ in 0..iterations {
            let y = self.solve_vec(&x, true)?;
            let z = self.solve_vec(&y, false)?;
            let nz = l2(&z);
            if !nz.is_finite() || nz == 0.0 {
                return Ok(0.0);
            }
            // ‖A^{-1} x‖ for unit x bounds 1/σ_min from below
            let ny = l2(&y);
            sigma = 1.0 / ny;
            x = z.mapv(|v| v / nz);
        }
        let y = self.solve_vec(&x, true)?;
        Ok(sigma.min(1.0 / l2(&y)))
    }
}

/// `σ_max` by power iteration on `AᴴA`.
pub fn largest_singular_value(a: &Array2<C64>, iterations: usize) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut x = start_vector(n);
    let mut sigma = 0.0;
    for _ in 0..iterations {
        let y = a.dot(&x);
        sigma = l2(&y);
        // Aᴴy = conj(Aᵀ conj(y)), without forming Aᴴ
        let z = a.t().dot(&y.mapv(|v| v.conj())).mapv(|v| v.conj());
        let nz = l2(&z);
        if nz == 0.0 {
            return 0.0;
        }
        x = z.mapv(|v| v / nz);
    }
    sigma
}

fn start_vector(n: usize) -> Array1<C64> {
    let v = Array1::from_shape_fn(n, |i| {
        let t = i as f64 + 1.0;
        C64::new((0.7 * t).sin() + 1.1, (1.3 * t).cos())
    });
    let nv = l2(&v);
    v.mapv(|x| x / nv)
}

pub fn l2(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm through the full SVD; for the small sphere-sized matrices.
pub fn spectral_norm(a: &Array2<C64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    let (_, s, _) = a.svd(false, false)?;
    Ok(s.iter().cloned().fold(0.0, f64::max))
}

/// Complex Schur form `A = Q T Qᴴ` (`zgees`); returns `(T, Q)`.
pub fn schur(a: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Linalg("Schur form needs a square matrix".into()));
    }
    if n == 0 {
        return Ok((a.clone(), a.clone()));
    }
    let mut t = to_column_major(a.clone());
    let mut q = vec![C64::new(0.0, 0.0); n * n];
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut rwork = vec![0.0; n];
    let mut bwork = vec![0; n];
    let ni = n as i32;
    let (jobvs, sort) = (b'V' as std::ffi::c_char, b'N' as std::ffi::c_char);
    let mut sdim = 0;
    let mut info = 0;
    let mut run = |work: &mut [C64], lwork: i32, t: &mut [C64], info: &mut i32| unsafe {
        lapack_sys::zgees_(
            &jobvs,
            &sort,
            None,
            &ni,
            t.as_mut_ptr() as *mut _,
            &ni,
            &mut sdim,
            w.as_mut_ptr() as *mut _,
            q.as_mut_ptr() as *mut _,
            &ni,
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            bwork.as_mut_ptr(),
            info,
        );
    };
    let mut query = [C64::new(0.0, 0.0)];
    let mut scratch = t.clone();
    run(&mut query, -1, &mut scratch, &mut info);
    let lwork = (query[0].re as i32).max(2 * n as i32);
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    run(&mut work, lwork, &mut t, &mut info);
    if info != 0 {
        return Err(Error::Linalg(format!("zgees failed with info {info}")));
    }
    let t = Array2::from_shape_vec((n, n).f(), t).expect("shape matches buffer");
    let q = Array2::from_shape_vec((n, n).f(), q).expect("shape matches buffer");
    Ok((t, q))
}

pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|v| v.conj())
}

fn to_column_major(a: Array2<C64>) -> Vec<C64> {
    let (r, c) = a.dim();
    if a.t().is_standard_layout() {
        let (v, _) = a.into_raw_vec_and_offset();
        return v;
    }
    let mut out = Vec::with_capacity(r * c);
    for j in 0..c {
        out.extend(a.column(j).iter().cloned());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> Array2<C64> {
        Array2::from_shape_fn((n, n), |(i, j)| {
            let d = if i == j { 4.0 } else { 0.0 };
            C64::new(
                d + ((i * 3 + j * 5) % 7) as f64 * 0.1,
                ((i + 2 * j) % 3) as f64 * 0.2,
            )
        })
    }

    #[test]
    fn lu_solves_many_right_hand_sides() {
        let a = test_matrix(9);
        let x = Array2::from_shape_fn((9, 4), |(i, j)| C64::new(i as f64, j as f64 - 1.0));
        let mut b = a.dot(&x);
        let lu = LuFactor::new(a.clone()).unwrap();
        lu.solve_in_place(&mut b, false).unwrap();
        assert!(frobenius(&(&b - &x)) < 1e-12);
        let mut bh = adjoint(&a).dot(&x);
        lu.solve_in_place(&mut bh, true).unwrap();
        assert!(frobenius(&(&bh - &x)) < 1e-12);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let mut a = Array2::<C64>::eye(5);
        a[(2, 2)] = C64::new(0.0, 1e-3);
        a[(4, 4)] = C64::new(-7.0, 0.0);
        let lu = LuFactor::new(a.clone()).unwrap();
        let smin = lu.smallest_singular_value(40).unwrap();
        assert!((smin - 1e-3).abs() < 1e-12, "{smin}");
        assert!((largest_singular_value(&a, 60) - 7.0).abs() < 1e-9);
        assert!((spectral_norm(&a).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn schur_reproduces_the_matrix() {
        let a = test_matrix(7);
        let (t, q) = schur(&a).unwrap();
        let back = q.dot(&t).dot(&adjoint(&q));
        assert!(frobenius(&(&back - &a)) < 1e-12);
        let qq = adjoint(&q).dot(&q) - Array2::<C64>::eye(7);
        assert!(frobenius(&qq) < 1e-13);
        for i in 0..7 {
            for j in 0..i {
                assert_eq!(t[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn determinant_sign_of_real_matrix() {
        let mut a = Array2::<C64>::eye(4);
        a[(1, 1)] = C64::new(-2.0, 0.0);
        assert_eq!(LuFactor::new(a.clone()).unwrap().real_det_sign(), -1.0);
        // a row swap flips the sign
        let mut p = Array2::<C64>::zeros((4, 4));
        for (i, j) in [(0, 1), (1, 0), (2, 2), (3, 3)] {
            p[(i, j)] = C64::new(1.0, 0.0);
        }
        assert_eq!(LuFactor::new(p).unwrap().real_det_sign(), -1.0);
        a[(3, 3)] = C64::new(-0.5, 0.0);
        assert_eq!(LuFactor::new(a).unwrap().real_det_sign(), 1.0);
    }
}
