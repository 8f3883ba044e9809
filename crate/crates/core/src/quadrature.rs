//! Radial, spherical and product-ball quadrature rules.
//!
//! Every integral in the pipeline runs on one of these grids. The sphere grid
//! is Gauss-Legendre in `cos θ` times the uniform trapezoid in `φ`; with an
//! even `n_phi` it is closed under `ω → −ω`, and the antipode of each node is
//! stored so reciprocity checks can pair entries exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
///
/// Newton iteration on the three-term recurrence; nodes are computed for one
/// half and mirrored so the rule is exactly symmetric.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for l in 1..n {
        let lf = l as f64;
        let p2 = ((2.0 * lf + 1.0) * x * p1 - lf * p0) / (lf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss-Legendre rule on `[0, r_max]`. Weights carry no `r²` Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub r_max: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "r_max must be positive, got {r_max}"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "radial grid needs n >= 2, got {n}"
            )));
        }
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * r_max;
        Ok(Self {
            nodes: x.iter().map(|&t| half * (1.0 + t)).collect(),
            weights: w.iter().map(|&wi| half * wi).collect(),
            r_max,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * f(r))
            .sum()
    }
}

/// Product rule on the unit sphere: Gauss-Legendre in `cos θ`, trapezoid in `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
    /// `antipode[a]` is the index of `−ω_a`.
    pub antipode: Vec<usize>,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 {
            return Err(Error::InvalidGrid(format!(
                "n_theta must be >= 2, got {n_theta}"
            )));
        }
        if n_phi < 2 || !n_phi.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_phi must be even and >= 2 for antipodal closure, got {n_phi}"
            )));
        }
        let (cos_t, w_t) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let len = n_theta * n_phi;
        let mut directions = vec![[0.0; 3]; len];
        let mut weights = vec![0.0; len];
        let mut antipode = vec![0; len];
        let index = |i: usize, j: usize| i * n_phi + j;
        for i in 0..n_theta {
            let sin_t = (1.0 - cos_t[i] * cos_t[i]).max(0.0).sqrt();
            for j in 0..n_phi {
                let a = index(i, j);
                let b = index(n_theta - 1 - i, (j + n_phi / 2) % n_phi);
                antipode[a] = b;
                weights[a] = w_t[i] * dphi;
                if b < a {
                    let o = directions[b];
                    directions[a] = [-o[0], -o[1], -o[2]];
                } else {
                    let phi = dphi * j as f64;
                    directions[a] = [sin_t * phi.cos(), sin_t * phi.sin(), cos_t[i]];
                }
            }
        }
        Ok(Self {
            directions,
            weights,
            n_theta,
            n_phi,
            antipode,
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn integrate<T>(&self, f: impl Fn(Vec3) -> T) -> T
    where
        T: std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        self.directions
            .iter()
            .zip(&self.weights)
            .map(|(&d, &w)| f(d) * w)
            .sum()
    }

    /// Polar angle `θ` of node `a` (the sphere grid is row-major in θ, φ).
    pub fn theta_index(&self, a: usize) -> usize {
        a / self.n_phi
    }
}

/// Product grid on the ball of radius `r_max`. Weights are the full 3D
/// measure `w_r · r² · μ_ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrid {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub r_max: f64,
}

impl VolumeGrid {
    pub fn new(radial: &RadialGrid, sphere: &SphereGrid) -> Self {
        let mut nodes = Vec::with_capacity(radial.len() * sphere.len());
        let mut weights = Vec::with_capacity(radial.len() * sphere.len());
        for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
            for (d, &mu) in sphere.directions.iter().zip(&sphere.weights) {
                nodes.push([r * d[0], r * d[1], r * d[2]]);
                weights.push(wr * r * r * mu);
            }
        }
        Self {
            nodes,
            weights,
            n_r: radial.len(),
            n_theta: sphere.n_theta,
            n_phi: sphere.n_phi,
            r_max: radial.r_max,
        }
    }

    /// Convenience constructor from the four size parameters.
    pub fn build(r_max: f64, n_r: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        let radial = RadialGrid::new(r_max, n_r)?;
        let sphere = SphereGrid::new(n_theta, n_phi)?;
        Ok(Self::new(&radial, &sphere))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<T>(&self, f: impl Fn(Vec3) -> T) -> T
    where
        T: std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| f(p) * w)
            .sum()
    }
}

/// Diagnostic dump: one node per line followed by its weight.
pub fn dump_sphere(grid: &SphereGrid) -> String {
    let mut out = String::from("# x y z weight\n");
    for (d, w) in grid.directions.iter().zip(&grid.weights) {
        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e} {:.17e}", d[0], d[1], d[2], w);
    }
    out
}

pub fn dump_volume(grid: &VolumeGrid) -> String {
    let mut out = String::from("# x y z weight\n");
    for (p, w) in grid.nodes.iter().zip(&grid.weights) {
        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e} {:.17e}", p[0], p[1], p[2], w);
    }
    out
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot(d, d).sqrt()
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn radial_weights_sum_to_length() {
        for n in [2, 5, 17, 24] {
            let g = RadialGrid::new(2.0, n).unwrap();
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n={n}: {s}");
        }
    }

    #[test]
    fn radial_exactness_boundary() {
        let g5 = RadialGrid::new(1.0, 5).unwrap();
        assert!((g5.integrate(|r| r.powi(4)) - 0.2).abs() < 1e-14);
        let g2 = RadialGrid::new(1.0, 2).unwrap();
        assert!((g2.integrate(|r| r.powi(4)) - 0.2).abs() > 1e-4);
        // degree 3 is still exact with two nodes
        assert!((g2.integrate(|r| r.powi(3)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn radial_nodes_are_interior_and_increasing() {
        let g = RadialGrid::new(3.0, 24).unwrap();
        assert!(g.nodes[0] > 0.0 && *g.nodes.last().unwrap() < 3.0);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn radial_rejects_bad_input() {
        assert!(RadialGrid::new(0.0, 4).is_err());
        assert!(RadialGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn sphere_total_solid_angle() {
        for (nt, np) in [(2, 2), (8, 16), (12, 24), (7, 10)] {
            let g = SphereGrid::new(nt, np).unwrap();
            let s: f64 = g.weights.iter().sum();
            assert!(((s - 4.0 * PI) / (4.0 * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_rejects_odd_phi() {
        assert!(matches!(SphereGrid::new(8, 15), Err(Error::InvalidGrid(_))));
        assert!(SphereGrid::new(1, 16).is_err());
    }

    #[test]
    fn sphere_harmonic_orthonormality() {
        // |Y_3^2|^2 = 105/(32π) sin^4θ cos^2θ
        let g = SphereGrid::new(8, 16).unwrap();
        let y32 = |d: Vec3| {
            let c = d[2];
            let phi = d[1].atan2(d[0]);
            let amp = 0.25 * (105.0 / (2.0 * PI)).sqrt() * (1.0 - c * c) * c;
            Complex64::from_polar(amp, 2.0 * phi)
        };
        let norm2 = g.integrate(|d| y32(d).norm_sqr());
        assert!((norm2 - 1.0).abs() < 1e-12, "{norm2}");
        // orthogonal to Y_3^0 ∝ 5cos³θ − 3cosθ
        let cross = g.integrate(|d| y32(d) * (5.0 * d[2].powi(3) - 3.0 * d[2]));
        assert!(cross.norm() < 1e-13);
        let odd = g.integrate(|d| d[2]);
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn sphere_antipodes_are_exact() {
        let g = SphereGrid::new(12, 24).unwrap();
        for a in 0..g.len() {
            let b = g.antipode[a];
            assert_eq!(g.antipode[b], a);
            let (u, v) = (g.directions[a], g.directions[b]);
            assert_eq!([u[0], u[1], u[2]], [-v[0], -v[1], -v[2]]);
            assert_eq!(g.weights[a], g.weights[b]);
            assert!((norm(u) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn volume_ball_measure_and_parity() {
        let v = VolumeGrid::build(1.0, 6, 4, 8).unwrap();
        assert_eq!(v.len(), 6 * 4 * 8);
        let s: f64 = v.weights.iter().sum();
        let ball = 4.0 * PI / 3.0;
        assert!(((s - ball) / ball).abs() < 1e-10);
        assert!(v.integrate(|p| p[2]).abs() < 1e-14);
    }

    #[test]
    fn volume_gaussian_integral() {
        let v = VolumeGrid::build(6.0, 24, 4, 8).unwrap();
        let i = v.integrate(|p| (-dot(p, p)).exp());
        let exact = PI.powf(1.5);
        assert!(((i - exact) / exact).abs() < 1e-8, "{i} vs {exact}");
    }

    #[test]
    fn refinement_reduces_plane_wave_error() {
        // ∫_{|r|<R} e^{ik·r} dV = 4π (sin kR − kR cos kR) / k³
        let (k, rmax): (f64, f64) = (1.3, 4.0);
        let exact = 4.0 * PI * ((k * rmax).sin() - k * rmax * (k * rmax).cos()) / k.powi(3);
        let dir = [0.6, 0.0, 0.8];
        let err = |n_r, nt, np| {
            let v = VolumeGrid::build(rmax, n_r, nt, np).unwrap();
            let i: Complex64 = v.integrate(|p| Complex64::from_polar(1.0, k * dot(dir, p)));
            (i - exact).norm()
        };
        let coarse = err(4, 3, 6);
        let mid = err(8, 6, 12);
        let fine = err(16, 12, 24);
        assert!(coarse > mid && mid > fine, "{coarse} {mid} {fine}");
    }
}
