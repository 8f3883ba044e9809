//! T and S operators on the sphere grid, their spectrum, and the spectral
//! resolution of the amplitude.
//!
//! In weight-symmetrized coordinates
//!
//! ```text
//! Ŝ_ab = δ_ab − 2πi √μ_a t_ab √μ_b,   t = −(√λ/4π²) f,
//! ```
//!
//! so `Ŝ = I + (ik/2π) D f D` with `D = diag(√μ_a)`. Eigenvectors `v_j` of `Ŝ`
//! map to unweighted eigenfunctions `G_j(ω_a) = v_j(a)/√μ_a`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};

use crate::amplitude::AmplitudeMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::output::Table;
use crate::quadrature::{dot, SphereGrid, Vec3};
use crate::specfun::legendre_table;

/// `μ² = √λ/(16π³)`.
pub fn mu_squared(lambda: f64) -> f64 {
    lambda.sqrt() / (16.0 * PI.powi(3))
}

/// T kernel `t(ω_a, ω′_b) = μ²·(−4π f) = −(√λ/4π²) f`.
#[derive(Debug, Clone)]
pub struct TKernel {
    pub lambda: f64,
    pub values: Array2<C64>,
}

pub fn assemble_t(f: &AmplitudeMatrix) -> Result<TKernel> {
    if !(f.lambda > 0.0) {
        return Err(Error::NonPositiveEnergy(f.lambda));
    }
    let c = mu_squared(f.lambda) * (-4.0 * PI);
    Ok(TKernel {
        lambda: f.lambda,
        values: f.values.mapv(|v| v * c),
    })
}

#[derive(Debug, Clone)]
pub struct SOperator {
    pub lambda: f64,
    pub s: Array2<C64>,
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
    /// `‖ŜᴴŜ − I‖₂`.
    pub unitarity_defect: f64,
    /// `‖ŜŜᴴ − ŜᴴŜ‖₂`.
    pub normality_gap: f64,
}

pub fn assemble_s(t: &TKernel, sg: &SphereGrid) -> Result<SOperator> {
    let n = sg.len();
    if t.values.dim() != (n, n) {
        return Err(Error::GridMismatch(format!(
            "T kernel is {:?}, sphere grid has {n} directions",
            t.values.dim()
        )));
    }
    let sq: Vec<f64> = sg.weights.iter().map(|w| w.sqrt()).collect();
    let s = Array2::from_shape_fn((n, n), |(a, b)| {
        let delta = if a == b { 1.0 } else { 0.0 };
        C64::new(delta, 0.0) - C64::new(0.0, 2.0 * PI) * sq[a] * t.values[(a, b)] * sq[b]
    });
    let sh = linalg::adjoint(&s);
    let shs = sh.dot(&s);
    let ssh = s.dot(&sh);
    let eye = Array2::<C64>::eye(n);
    let unitarity_defect = linalg::spectral_norm(&(&shs - &eye))?;
    let normality_gap = linalg::spectral_norm(&(&ssh - &shs))?;
    Ok(SOperator {
        lambda: t.lambda,
        s,
        directions: sg.directions.clone(),
        weights: sg.weights.clone(),
        n_theta: sg.n_theta,
        n_phi: sg.n_phi,
        unitarity_defect,
        normality_gap,
    })
}

#[derive(Debug, Clone)]
pub struct SMatrixSpectrum {
    pub lambda: f64,
    /// Raw eigenvalues, sorted by `|ν − 1|` descending.
    pub eigenvalues: Vec<C64>,
    /// Column `j` is `G_j` on the sphere grid, unweighted coordinates.
    pub eigenfunctions: Array2<C64>,
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
    pub unitarity_defect: f64,
}

impl SMatrixSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues radially projected onto the unit circle.
    pub fn projected(&self) -> Vec<C64> {
        self.eigenvalues
            .iter()
            .map(|v| if v.norm() > 0.0 { v / v.norm() } else { *v })
            .collect()
    }

    pub fn max_unimodularity_gap(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max |⟨G_i, G_j⟩_μ − δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = &self.eigenfunctions;
        let wg = weighted(g, &self.weights);
        let gram = linalg::adjoint(g).dot(&wg);
        let mut worst = 0.0f64;
        for ((i, j), v) in gram.indexed_iter() {
            let d = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - d).norm());
        }
        worst
    }

    pub fn to_table(&self, ell: Option<&[Option<usize>]>) -> Table {
        let mut t = Table::new(
            "spectrum",
            &["lambda", "j", "re_nu", "im_nu", "abs_nu", "ell"],
        );
        for (j, v) in self.eigenvalues.iter().enumerate() {
            let l = ell.and_then(|e| e[j]).map(|l| l as f64).unwrap_or(-1.0);
            t.push(vec![self.lambda, j as f64, v.re, v.im, v.norm(), l]);
        }
        t
    }
}

fn weighted(g: &Array2<C64>, w: &[f64]) -> Array2<C64> {
    let mut out = g.clone();
    for (a, mut row) in out.rows_mut().into_iter().enumerate() {
        row.mapv_inplace(|v| v * w[a]);
    }
    out
}

/// Schur decomposition `Ŝ = Q T Qᴴ`; eigenvalues from `diag T`, eigenvectors
/// from the Schur vectors (exact eigenvectors when `Ŝ` is normal), then
/// mapped to `G_j = v_j/√μ` and re-orthonormalized in the `μ` inner product.
pub fn eigendecompose(s: &SOperator) -> Result<SMatrixSpectrum> {
    let n = s.s.nrows();
    let (t, q) = linalg::schur(&s.s).map_err(|e| {
        Error::Linalg(format!(
            "Schur decomposition failed ({e}); unitarity defect {:.3e}, normality gap {:.3e}",
            s.unitarity_defect, s.normality_gap
        ))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<C64> = (0..n).map(|j| t[(j, j)]).collect();
    order.sort_by(|&a, &b| {
        let da = (diag[a] - 1.0).norm();
        let db = (diag[b] - 1.0).norm();
        db.total_cmp(&da).then(a.cmp(&b))
    });
    let inv_sq: Vec<f64> = s.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut g = Array2::<C64>::zeros((n, n));
    for (col, &j) in order.iter().enumerate() {
        for a in 0..n {
            g[(a, col)] = q[(a, j)] * inv_sq[a];
        }
    }
    orthonormalize(&mut g, &s.weights);
    orthonormalize(&mut g, &s.weights);
    Ok(SMatrixSpectrum {
        lambda: s.lambda,
        eigenvalues: order.iter().map(|&j| diag[j]).collect(),
        eigenfunctions: g,
        directions: s.directions.clone(),
        weights: s.weights.clone(),
        n_theta: s.n_theta,
        n_phi: s.n_phi,
        unitarity_defect: s.unitarity_defect,
    })
}

/// Modified Gram-Schmidt over columns in `⟨u, v⟩ = Σ_a μ_a conj(u_a) v_a`.
fn orthonormalize(g: &mut Array2<C64>, w: &[f64]) {
    let n = g.ncols();
    for j in 0..n {
        for i in 0..j {
            let proj: C64 = (0..g.nrows())
                .map(|a| g[(a, i)].conj() * g[(a, j)] * w[a])
                .sum();
            for a in 0..g.nrows() {
                let gi = g[(a, i)];
                g[(a, j)] -= proj * gi;
            }
        }
        let nrm = (0..g.nrows())
            .map(|a| g[(a, j)].norm_sqr() * w[a])
            .sum::<f64>()
            .sqrt();
        if nrm > 0.0 {
            g.column_mut(j).mapv_inplace(|v| v / nrm);
        }
    }
}

/// `f̂(ω_a, ω′_b) = (2π/(i√λ)) Σ_j (ν_j − 1) G_j(ω_a) conj(G_j(ω′_b))`.
pub fn ergodic_reconstruct(spec: &SMatrixSpectrum) -> Result<AmplitudeMatrix> {
    let n = spec.directions.len();
    if spec.eigenvalues.len() != n || spec.eigenfunctions.dim() != (n, n) {
        return Err(Error::IncompleteSpectrum {
            found: spec.eigenvalues.len(),
            dim: n,
        });
    }
    let c = C64::new(0.0, -2.0 * PI / spec.lambda.sqrt());
    let mut scaled = spec.eigenfunctions.clone();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let s = c * (spec.eigenvalues[j] - 1.0);
        col.mapv_inplace(|v| v * s);
    }
    Ok(AmplitudeMatrix {
        lambda: spec.lambda,
        values: scaled.dot(&linalg::adjoint(&spec.eigenfunctions)),
        directions: spec.directions.clone(),
        weights: spec.weights.clone(),
        n_theta: spec.n_theta,
        n_phi: spec.n_phi,
    })
}

/// `‖f̂ − f‖_F / ‖f‖_F` (absolute when `f = 0`).
pub fn reconstruction_error(f: &AmplitudeMatrix, fhat: &AmplitudeMatrix) -> f64 {
    let diff = linalg::frobenius(&(&fhat.values - &f.values));
    let scale = linalg::frobenius(&f.values);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Expansion coefficients of row `a` by both routes:
/// quadrature `Σ_b μ_b f_ab G_j(ω_b)` and the closed form
/// `(2π/(i√λ))(ν_j − 1) G_j(ω_a)`.
pub fn expansion_coefficients(
    f: &AmplitudeMatrix,
    spec: &SMatrixSpectrum,
    a: usize,
) -> Result<(Array1<C64>, Array1<C64>)> {
    let n = spec.len();
    if f.dim() != n || a >= n {
        return Err(Error::GridMismatch(
            "amplitude and spectrum sizes differ".into(),
        ));
    }
    let row: Array1<C64> = (0..n).map(|b| f.values[(a, b)] * spec.weights[b]).collect();
    let quad = spec.eigenfunctions.t().dot(&row);
    let c = C64::new(0.0, -2.0 * PI / spec.lambda.sqrt());
    let closed = (0..n)
        .map(|j| c * (spec.eigenvalues[j] - 1.0) * spec.eigenfunctions[(a, j)])
        .collect();
    Ok((quad, closed))
}

/// `Σ_{a,b} μ_a μ_b |f_ab|²`.
pub fn cross_section_double(f: &AmplitudeMatrix) -> f64 {
    f.values
        .indexed_iter()
        .map(|((a, b), v)| f.weights[a] * f.weights[b] * v.norm_sqr())
        .sum()
}

/// `(4π²/λ) Σ_j |ν_j − 1|²`.
pub fn cross_section_spectral(spec: &SMatrixSpectrum) -> f64 {
    4.0 * PI * PI / spec.lambda
        * spec
            .eigenvalues
            .iter()
            .map(|v| (v - 1.0).norm_sqr())
            .sum::<f64>()
}

/// `max_b |Im f_bb − (√λ/4π) Σ_a μ_a |f_ab|²|`, relative to the largest
/// `(√λ/4π) Σ_a μ_a |f_ab|²`.
pub fn optical_theorem_defect(f: &AmplitudeMatrix, sg: &SphereGrid) -> Result<f64> {
    let n = sg.len();
    if f.dim() != n {
        return Err(Error::GridMismatch(
            "amplitude and sphere grid sizes differ".into(),
        ));
    }
    let c = f.wavenumber() / (4.0 * PI);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for b in 0..n {
        let rhs = c
            * (0..n)
                .map(|a| sg.weights[a] * f.values[(a, b)].norm_sqr())
                .sum::<f64>();
        worst = worst.max((f.values[(b, b)].im - rhs).abs());
        scale = scale.max(rhs);
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// `p_ℓ(j) = Σ_m |⟨Y_ℓm, G_j⟩|²`, the weight of `G_j` in degree `ℓ`, by the
/// addition theorem `(2ℓ+1)/(4π) P_ℓ(ω·ω′)`; rows `ℓ = 0..=max_degree`.
pub fn degree_weights(spec: &SMatrixSpectrum, max_degree: usize) -> Result<Array2<f64>> {
    let n = spec.len();
    let mut zonal = vec![Array2::<f64>::zeros((n, n)); max_degree + 1];
    for a in 0..n {
        for b in 0..n {
            let x = dot(spec.directions[a], spec.directions[b]).clamp(-1.0, 1.0);
            let p = legendre_table(max_degree, x)?;
            for (l, z) in zonal.iter_mut().enumerate() {
                z[(a, b)] =
                    (2.0 * l as f64 + 1.0) / (4.0 * PI) * p[l] * spec.weights[a] * spec.weights[b];
            }
        }
    }
    let g = &spec.eigenfunctions;
    let gh = linalg::adjoint(g);
    let mut out = Array2::zeros((max_degree + 1, n));
    for (l, z) in zonal.iter().enumerate() {
        let zc = z.mapv(|v| C64::new(v, 0.0));
        let pg = zc.dot(g);
        for j in 0..n {
            let v: C64 = (0..n).map(|a| gh[(j, a)] * pg[(a, j)]).sum();
            out[(l, j)] = v.re;
        }
    }
    Ok(out)
}

/// Degree of each eigenfunction by largest `p_ℓ`, or `None` when no degree up
/// to `max_degree` holds at least half of the weight.
pub fn assign_degrees(spec: &SMatrixSpectrum, max_degree: usize) -> Result<Vec<Option<usize>>> {
    let p = degree_weights(spec, max_degree)?;
    Ok((0..spec.len())
        .map(|j| {
            let col = p.column(j);
            let (l, best) = col
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (l, &v)| if v > acc.1 { (l, v) } else { acc },
                );
            (best >= 0.5).then_some(l)
        })
        .collect())
}

/// Group eigenvalues, in sorted order, into runs whose consecutive members
/// lie within `tol`; returns run lengths.
pub fn cluster_sizes(eigenvalues: &[C64], tol: f64) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut used = vec![false; eigenvalues.len()];
    for i in 0..eigenvalues.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut size = 1;
        for j in i + 1..eigenvalues.len() {
            if !used[j] && (eigenvalues[j] - eigenvalues[i]).norm() <= tol {
                used[j] = true;
                size += 1;
            }
        }
        sizes.push(size);
    }
    sizes
}
