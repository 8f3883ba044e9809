//! Legendre polynomials and spherical Bessel functions.

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// `P_ℓ(x)` by the upward Bonnet recurrence.
pub fn legendre_p(l: usize, x: f64) -> Result<f64> {
    Ok(*legendre_table(l, x)?.last().unwrap())
}

/// `[P_0(x), …, P_L(x)]`.
pub fn legendre_table(max_degree: usize, x: f64) -> Result<Vec<f64>> {
    if !(x.abs() <= 1.0) {
        return Err(Error::Domain(format!(
            "Legendre argument must lie in [-1, 1], got {x}"
        )));
    }
    let mut p = Vec::with_capacity(max_degree + 1);
    p.push(1.0);
    if max_degree >= 1 {
        p.push(x);
    }
    for l in 1..max_degree {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * x * p[l] - lf * p[l - 1]) / (lf + 1.0);
        p.push(next);
    }
    Ok(p)
}

/// Numerical `∫_0^π P_ℓ(cos θ)² sin θ dθ` with an `n`-point Gauss-Legendre
/// rule in `θ` (not in `cos θ`, so the rule is never exact and the value is a
/// genuine audit of the normalization).
pub fn legendre_norm_integral(l: usize, n: usize) -> Result<f64> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * std::f64::consts::PI;
    let mut sum = 0.0;
    for (t, wt) in x.iter().zip(&w) {
        let theta = half * (1.0 + t);
        let p = legendre_p(l, theta.cos())?;
        sum += half * wt * p * p * theta.sin();
    }
    Ok(sum)
}

/// Regular and irregular spherical Bessel values with derivatives at one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalBessel {
    pub j: f64,
    pub y: f64,
    pub dj: f64,
    pub dy: f64,
}

/// `j_ℓ, y_ℓ` and their derivatives for `ℓ = 0..=max_degree`.
///
/// Below `x = L + 1`, `j` comes from Miller's downward recurrence normalized
/// against whichever of `j_0`, `j_1` is larger in magnitude; above it the
/// upward recurrence is stable and used directly. `y` is always upward.
pub fn spherical_bessel_table(max_degree: usize, x: f64) -> Result<Vec<SphericalBessel>> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "spherical Bessel argument must be positive, got {x}"
        )));
    }
    let lmax = max_degree.max(1);
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let mut j = vec![0.0; lmax + 2];
    if x >= (lmax + 1) as f64 {
        // oscillatory regime: upward recurrence is stable
        j[0] = j0;
        j[1] = j1;
        for l in 1..=lmax {
            j[l + 1] = (2.0 * l as f64 + 1.0) / x * j[l] - j[l - 1];
        }
    } else {
        let start = lmax + 20.max(x.ceil() as usize);
        let mut jr = vec![0.0; start + 2];
        jr[start] = 1e-300;
        for l in (1..=start).rev() {
            jr[l - 1] = (2.0 * l as f64 + 1.0) / x * jr[l] - jr[l + 1];
            if jr[l - 1].abs() > 1e250 {
                // rescale to keep the sequence in range
                for v in jr[l - 1..=start].iter_mut() {
                    *v *= 1e-250;
                }
            }
        }
        let scale = if j0.abs() >= j1.abs() {
            j0 / jr[0]
        } else {
            j1 / jr[1]
        };
        for (dst, v) in j.iter_mut().zip(&jr) {
            *dst = v * scale;
        }
        if j0.abs() >= j1.abs() {
            j[0] = j0;
        } else {
            j[1] = j1;
        }
    }

    let mut y = vec![0.0; lmax + 2];
    y[0] = -c / x;
    y[1] = -c / (x * x) - s / x;
    for l in 1..=lmax {
        y[l + 1] = (2.0 * l as f64 + 1.0) / x * y[l] - y[l - 1];
    }

    Ok((0..=max_degree)
        .map(|l| {
            let lf = l as f64;
            let (dj, dy) = if l == 0 {
                (-j[1], -y[1])
            } else {
                (
                    j[l - 1] - (lf + 1.0) / x * j[l],
                    y[l - 1] - (lf + 1.0) / x * y[l],
                )
            };
            SphericalBessel {
                j: j[l],
                y: y[l],
                dj,
                dy,
            }
        })
        .collect())
}

pub fn spherical_bessel(l: usize, x: f64) -> Result<SphericalBessel> {
    Ok(spherical_bessel_table(l, x)?[l])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_p(0, 0.7).unwrap(), 1.0);
        assert_eq!(legendre_p(1, 0.3).unwrap(), 0.3);
        assert!((legendre_p(2, 0.5).unwrap() + 0.125).abs() < 1e-16);
        assert!(legendre_p(3, 1.5).is_err());
        for l in 0..30 {
            assert!((legendre_p(l, 1.0).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn legendre_orthogonality() {
        let (x, w) = gauss_legendre(16);
        for l in 0..=10 {
            for m in 0..=10 {
                let s: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| wi * legendre_p(l, xi).unwrap() * legendre_p(m, xi).unwrap())
                    .sum();
                if l == m {
                    assert!((s - 2.0 / (2.0 * l as f64 + 1.0)).abs() < 1e-13);
                } else {
                    assert!(s.abs() < 1e-12, "l={l} m={m}: {s}");
                }
            }
        }
    }

    #[test]
    fn norm_integral_audit() {
        assert!((legendre_norm_integral(0, 40).unwrap() - 2.0).abs() < 1e-12);
        assert!((legendre_norm_integral(1, 40).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((legendre_norm_integral(2, 40).unwrap() - 0.4).abs() < 1e-12);
        // "ℓ/2 + 1" disagrees at every ℓ
        for l in 0..6 {
            let v = legendre_norm_integral(l, 60).unwrap();
            assert!((v - (l as f64 / 2.0 + 1.0)).abs() > 0.1);
        }
    }

    #[test]
    fn bessel_closed_forms() {
        let b = spherical_bessel(0, PI).unwrap();
        assert!(b.j.abs() < 1e-16);
        let b = spherical_bessel(0, 1.0).unwrap();
        assert!((b.j - 1f64.sin()).abs() < 1e-15);
        assert!((b.j - 0.841471).abs() < 1e-6);
        let b = spherical_bessel(1, 1.0).unwrap();
        let exact = 1f64.sin() - 1f64.cos();
        assert!((b.j - exact).abs() < 1e-15);
        assert!((b.j - 0.301169).abs() < 1e-6);
        // y_1(x) = −cos x/x² − sin x/x, j_2 closed form
        let x: f64 = 2.7;
        let t = spherical_bessel_table(2, x).unwrap();
        assert!((t[1].y - (-x.cos() / (x * x) - x.sin() / x)).abs() < 1e-15);
        let j2 = (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
        assert!((t[2].j - j2).abs() < 1e-14);
        assert!(spherical_bessel(0, 0.0).is_err());
    }

    #[test]
    fn bessel_small_argument_high_order() {
        // j_ℓ(x) ≈ x^ℓ / (2ℓ+1)!! for x ≪ 1
        let x: f64 = 1e-3;
        let b = spherical_bessel(5, x).unwrap();
        let approx = x.powi(5) / (11.0 * 9.0 * 7.0 * 5.0 * 3.0);
        assert!(((b.j - approx) / approx).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn wronskian(x in 0.1f64..50.0, l in 0usize..=10) {
            let b = spherical_bessel(l, x).unwrap();
            let w = b.j * b.dy - b.dj * b.y;
            let exact = 1.0 / (x * x);
            prop_assert!(((w - exact) / exact).abs() < 1e-10, "l={} x={} w={}", l, x, w);
        }

        #[test]
        fn bonnet_residual(x in -1.0f64..=1.0) {
            let p = legendre_table(40, x).unwrap();
            for l in 1..40 {
                let lf = l as f64;
                let r = (lf + 1.0) * p[l + 1] - (2.0 * lf + 1.0) * x * p[l] + lf * p[l - 1];
                prop_assert!(r.abs() <= 1e-12);
            }
        }
    }
}
