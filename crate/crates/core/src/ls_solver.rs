//! Nyström discretization of the symmetrized Lippmann-Schwinger equation
//!
//! ```text
//! (I + K(λ)) ψ = e^{ik·r} |V|^{1/2},   ψ = |V|^{1/2} φ,
//! K(λ)(r, s) = (1/4π) |V(r)|^{1/2} e^{ik|r−s|}/|r−s| W(s) |V(s)|^{1/2}
//! ```
//!
//! with `k = √λ` (units ħ = 2m = 1) and `W = sign V`. Only nodes where `V ≠ 0`
//! enter the linear system; `ψ` vanishes identically elsewhere.
//!
//! The coincident-node entry needs an explicit rule for the integrable
//! `1/|r − s|` singularity, see [`DiagonalRule`].

use std::f64::consts::PI;

use ndarray::{Array1, Array2};

use crate::amplitude::AmplitudeMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, LuFactor, C64};
use crate::potentials::{rollnik_norm_estimate, sign_and_sqrt, PotentialSpec};
use crate::quadrature::{distance, dot, SphereGrid, Vec3, VolumeGrid};

/// Default exceptional-value threshold relative to `σ_max(I + K)`.
pub const EXCEPTIONAL_RATIO: f64 = 1e-8;

const POWER_ITERATIONS: usize = 40;

/// Treatment of the coincident cell `∫_cell e^{iζ|r_i − s|}/|r_i − s| ds`.
///
/// The Green's function is split as `1/x + (e^{iζx} − 1)/x`. The second
/// piece is smooth with limit `iζ` at `x = 0` and takes the ordinary Nyström
/// diagonal `iζ·w_i` in the first two rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalRule {
    /// `1/x` over the ball of equal volume, `2πρ_i²`, plus `iζ·w_i`.
    EqualVolumeBall,
    /// `2πρ_i²` only: the oscillating factor is replaced by one. The
    /// imaginary part of the coincident cell is dropped, which breaks the
    /// discrete optical theorem; kept for comparison.
    EqualVolumeBallUnitPhase,
    /// Singularity subtraction for `1/x`: the density at `r_i` is integrated
    /// exactly over the grid ball, `2π(R² − r_i²/3)`, and the quadrature of
    /// the same constant is removed from the off-diagonal sum. Plus `iζ·w_i`.
    #[default]
    SingularitySubtraction,
}

/// Volume nodes with nonzero potential, with `|V|^{1/2}` and `sign V`.
#[derive(Debug, Clone)]
pub struct ActiveNodes {
    pub grid_index: Vec<usize>,
    pub positions: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub sqrt_v: Vec<f64>,
    pub sign: Vec<f64>,
    pub grid_len: usize,
}

impl ActiveNodes {
    pub fn new(p: &PotentialSpec, grid: &VolumeGrid) -> Result<Self> {
        let mut out = Self {
            grid_index: Vec::new(),
            positions: Vec::new(),
            weights: Vec::new(),
            sqrt_v: Vec::new(),
            sign: Vec::new(),
            grid_len: grid.len(),
        };
        for (i, (&r, &w)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
            let (sgn, s) = sign_and_sqrt(p.evaluate(r)?);
            if sgn != 0.0 {
                out.grid_index.push(i);
                out.positions.push(r);
                out.weights.push(w);
                out.sqrt_v.push(s);
                out.sign.push(sgn);
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.grid_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_index.is_empty()
    }

    /// `V(r_i) = W_i |V_i|`.
    pub fn potential(&self, i: usize) -> f64 {
        self.sign[i] * self.sqrt_v[i] * self.sqrt_v[i]
    }
}

/// Nyström matrix of `K(λ)` over the active nodes; entry `(i, j)` carries the
/// quadrature weight `w_j`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub lambda: f64,
    pub matrix: Array2<C64>,
    pub nodes: ActiveNodes,
    pub rule: DiagonalRule,
    pub r_max: f64,
}

impl KernelMatrix {
    pub fn wavenumber(&self) -> f64 {
        self.lambda.sqrt()
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// `I + K`.
    pub fn system_matrix(&self) -> Array2<C64> {
        let mut a = self.matrix.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += 1.0;
        }
        a
    }
}

pub fn assemble_kernel(
    p: &PotentialSpec,
    grid: &VolumeGrid,
    lambda: f64,
    rule: DiagonalRule,
) -> Result<KernelMatrix> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveEnergy(lambda));
    }
    let nodes = ActiveNodes::new(p, grid)?;
    let matrix = assemble_green(&nodes, grid, C64::new(lambda.sqrt(), 0.0), rule);
    Ok(KernelMatrix {
        lambda,
        matrix,
        nodes,
        rule,
        r_max: grid.r_max,
    })
}

/// Nyström matrix with Green's function `e^{iζx}/(4πx)`; `ζ = k` for
/// scattering, `ζ = iκ` below threshold.
fn assemble_green(
    nodes: &ActiveNodes,
    grid: &VolumeGrid,
    zeta: C64,
    rule: DiagonalRule,
) -> Array2<C64> {
    let n = nodes.len();
    let inv4pi = 1.0 / (4.0 * PI);
    let i_zeta = C64::i() * zeta;
    let mut m = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        let ri = nodes.positions[i];
        let si = nodes.sqrt_v[i] * inv4pi;
        let mut row = m.row_mut(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = distance(ri, nodes.positions[j]);
            let g = (i_zeta * d).exp() / d;
            row[j] = g * (si * nodes.sign[j] * nodes.sqrt_v[j] * nodes.weights[j]);
        }
        let wi = nodes.weights[i];
        let rho = (3.0 * wi / (4.0 * PI)).cbrt();
        let cell = match rule {
            DiagonalRule::EqualVolumeBallUnitPhase => C64::new(2.0 * PI * rho * rho, 0.0),
            DiagonalRule::EqualVolumeBall => 2.0 * PI * rho * rho + i_zeta * wi,
            DiagonalRule::SingularitySubtraction => {
                let r2 = dot(ri, ri);
                let exact = 2.0 * PI * (grid.r_max * grid.r_max - r2 / 3.0);
                let own = nodes.grid_index[i];
                let discrete: f64 = grid
                    .nodes
                    .iter()
                    .zip(&grid.weights)
                    .enumerate()
                    .filter(|(j, _)| *j != own)
                    .map(|(_, (&rj, &wj))| wj / distance(ri, rj))
                    .sum();
                exact - discrete + i_zeta * wi
            }
        };
        row[i] = cell * (si * nodes.sign[i] * nodes.sqrt_v[i]);
    }
    m
}

/// Solution of the modified equation for every incident direction.
#[derive(Debug, Clone)]
pub struct WaveTable {
    pub lambda: f64,
    /// `ψ(r_i, k_b)`, rows over active nodes, columns over incident directions.
    pub psi: Array2<C64>,
    pub nodes: ActiveNodes,
    pub incident: Vec<Vec3>,
    /// `‖(I+K)ψ_b − b_b‖ / ‖b_b‖` per column.
    pub residuals: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl WaveTable {
    pub fn wavenumber(&self) -> f64 {
        self.lambda.sqrt()
    }

    /// `ψ` expanded to all volume-grid nodes (zero where `V = 0`).
    pub fn psi_on_grid(&self) -> Array2<C64> {
        let mut out = Array2::zeros((self.nodes.grid_len, self.psi.ncols()));
        for (row, &g) in self.nodes.grid_index.iter().enumerate() {
            out.row_mut(g).assign(&self.psi.row(row));
        }
        out
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// `b_b(r_i) = e^{ik ω′_b·r_i} |V(r_i)|^{1/2}`.
pub fn incident_rhs(nodes: &ActiveNodes, k: f64, incident: &[Vec3]) -> Array2<C64> {
    Array2::from_shape_fn((nodes.len(), incident.len()), |(i, b)| {
        C64::from_polar(nodes.sqrt_v[i], k * dot(incident[b], nodes.positions[i]))
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub exceptional_ratio: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            exceptional_ratio: EXCEPTIONAL_RATIO,
        }
    }
}

/// One LU factorization of `I + K`, reused for all incident directions.
pub fn solve_modified_ls(
    k: &KernelMatrix,
    incident: &SphereGrid,
    opts: SolveOptions,
) -> Result<WaveTable> {
    let system = k.system_matrix();
    let sigma_max = linalg::largest_singular_value(&system, POWER_ITERATIONS);
    let lu = LuFactor::new(system)?;
    let sigma_min = lu.smallest_singular_value(POWER_ITERATIONS)?;
    let threshold = opts.exceptional_ratio * sigma_max;
    if sigma_min < threshold {
        return Err(Error::Exceptional {
            lambda: k.lambda,
            sigma_min,
            threshold,
        });
    }
    let rhs = incident_rhs(&k.nodes, k.wavenumber(), &incident.directions);
    let mut psi = rhs.clone();
    lu.solve_in_place(&mut psi, false)?;
    drop(lu);

    let mut resid = k.matrix.dot(&psi);
    resid += &psi;
    resid -= &rhs;
    let residuals = (0..rhs.ncols())
        .map(|b| {
            let nb = linalg::l2(&rhs.column(b).to_owned());
            let nr = linalg::l2(&resid.column(b).to_owned());
            if nb == 0.0 {
                nr
            } else {
                nr / nb
            }
        })
        .collect();
    Ok(WaveTable {
        lambda: k.lambda,
        psi,
        nodes: k.nodes.clone(),
        incident: incident.directions.clone(),
        residuals,
        sigma_min,
        sigma_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SingularValueReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub exceptional: bool,
}

/// `σ_min(I + K)` with the exceptional flag at `ratio · σ_max`.
pub fn smallest_singular_value(k: &KernelMatrix, ratio: f64) -> Result<SingularValueReport> {
    let system = k.system_matrix();
    let sigma_max = linalg::largest_singular_value(&system, POWER_ITERATIONS);
    let sigma_min = LuFactor::new(system)?.smallest_singular_value(POWER_ITERATIONS)?;
    Ok(SingularValueReport {
        sigma_min,
        sigma_max,
        exceptional: sigma_min < ratio * sigma_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundState {
    pub kappa: f64,
    pub energy: f64,
    pub sigma_min: f64,
}

/// Sign of `det(I + K(iκ))`; the matrix is real at imaginary wavenumber.
fn det_sign_below_threshold(
    nodes: &ActiveNodes,
    grid: &VolumeGrid,
    kappa: f64,
    rule: DiagonalRule,
) -> Result<(f64, LuFactor)> {
    let mut a = assemble_green(nodes, grid, C64::new(0.0, kappa), rule);
    for i in 0..a.nrows() {
        a[(i, i)] += 1.0;
    }
    let lu = LuFactor::new(a)?;
    Ok((lu.real_det_sign(), lu))
}

/// Zeros of `det(I + K(iκ))` on `kappa_range`, bracketed by sign changes of
/// the determinant over `n_samples` points and refined by bisection.
pub fn bound_state_scan(
    p: &PotentialSpec,
    grid: &VolumeGrid,
    kappa_range: (f64, f64),
    n_samples: usize,
    rule: DiagonalRule,
) -> Result<Vec<BoundState>> {
    let (lo, hi) = kappa_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!(
            "kappa range must be positive and increasing, got ({lo}, {hi})"
        )));
    }
    if n_samples < 2 {
        return Err(Error::Domain(
            "bound-state scan needs at least two samples".into(),
        ));
    }
    let nodes = ActiveNodes::new(p, grid)?;
    if nodes.is_empty() {
        return Ok(Vec::new());
    }
    let rule = match rule {
        // the unit-phase variant has no meaning off the real axis
        DiagonalRule::EqualVolumeBallUnitPhase => DiagonalRule::EqualVolumeBall,
        r => r,
    };
    let kappas: Vec<f64> = (0..n_samples)
        .map(|s| lo + (hi - lo) * s as f64 / (n_samples - 1) as f64)
        .collect();
    let signs = kappas
        .iter()
        .map(|&kap| det_sign_below_threshold(&nodes, grid, kap, rule).map(|(s, _)| s))
        .collect::<Result<Vec<f64>>>()?;
    let mut found = Vec::new();
    for s in 0..n_samples - 1 {
        if signs[s] == signs[s + 1] {
            continue;
        }
        let (mut a, mut b, sa) = (kappas[s], kappas[s + 1], signs[s]);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            let (sm, _) = det_sign_below_threshold(&nodes, grid, mid, rule)?;
            if sm == sa {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-12 * b {
                break;
            }
        }
        let kappa = 0.5 * (a + b);
        let (_, lu) = det_sign_below_threshold(&nodes, grid, kappa, rule)?;
        found.push(BoundState {
            kappa,
            energy: -kappa * kappa,
            sigma_min: lu.smallest_singular_value(POWER_ITERATIONS)?,
        });
    }
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HsNorms {
    pub kernel: f64,
    pub ff: f64,
}

/// Hilbert-Schmidt norms of `K(λ)` and of `F*F` with kernel
/// `(1/4π²)|V(r)|^{1/2} sin(k|r−s|)/|r−s| |V(s)|^{1/2}`.
///
/// `‖K‖²_HS` is the Rollnik norm over `16π²`. The `F*F` norm is a Frobenius
/// norm in weight-symmetrized coordinates `√w_i k(r_i, r_j) √w_j`; its kernel
/// is finite on the diagonal with limit `(k/4π²)|V(r)|`.
pub fn hs_norms(p: &PotentialSpec, grid: &VolumeGrid, lambda: f64) -> Result<HsNorms> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveEnergy(lambda));
    }
    let nodes = ActiveNodes::new(p, grid)?;
    let k = lambda.sqrt();
    let n = nodes.len();
    let kk = rollnik_norm_estimate(p, grid)? / (16.0 * PI * PI);
    let mut ff = 0.0;
    let c_f = 1.0 / (16.0 * PI.powi(4));
    for i in 0..n {
        let (ri, wi) = (nodes.positions[i], nodes.weights[i]);
        let vi = nodes.sqrt_v[i] * nodes.sqrt_v[i];
        ff += c_f * vi * vi * wi * wi * k * k;
        let rf: f64 = (i + 1..n)
            .map(|j| {
                let d = distance(ri, nodes.positions[j]);
                let s = (k * d).sin() / d;
                nodes.sqrt_v[j] * nodes.sqrt_v[j] * nodes.weights[j] * s * s
            })
            .sum();
        ff += 2.0 * c_f * vi * wi * rf;
    }
    Ok(HsNorms {
        kernel: kk.sqrt(),
        ff: ff.sqrt(),
    })
}

/// Frobenius norm of the assembled `K` in weight-symmetrized coordinates,
/// `Σ |K_ij|² w_i / w_j`.
pub fn kernel_matrix_hs_norm(k: &KernelMatrix) -> f64 {
    let w = &k.nodes.weights;
    let mut s = 0.0;
    for ((i, j), v) in k.matrix.indexed_iter() {
        s += v.norm_sqr() * w[i] / w[j];
    }
    s.sqrt()
}

/// Nyström matrix of `F*F`, entry `(i, j)` with weight `w_j`.
pub fn ff_matrix(nodes: &ActiveNodes, lambda: f64) -> Array2<f64> {
    let k = lambda.sqrt();
    let c = 1.0 / (4.0 * PI * PI);
    let n = nodes.len();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let si = nodes.sqrt_v[i];
        let sj = nodes.sqrt_v[j];
        let kernel = if i == j {
            k
        } else {
            let d = distance(nodes.positions[i], nodes.positions[j]);
            (k * d).sin() / d
        };
        c * si * kernel * sj * nodes.weights[j]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FarFieldRow {
    pub radius: f64,
    /// `max_{a,b} R·|φ(Rω_a, k_b) − e^{ik_b·Rω_a} − f_ab e^{ikR}/R|`.
    pub scaled_residual: f64,
}

/// `φ` at probe points from the integral representation
/// `φ = e^{ik·r} − (1/4π) Σ_i w_i e^{ik|r−r_i|}/|r−r_i| W_i|V_i|^{1/2} ψ_i`,
/// compared with the plane wave plus the outgoing wave `f e^{ikR}/R`.
/// Probe directions are the outgoing directions of `f`.
pub fn farfield_check(
    w: &WaveTable,
    f: &AmplitudeMatrix,
    support_radius: f64,
    probe_radii: &[f64],
) -> Result<Vec<FarFieldRow>> {
    if f.values.ncols() != w.psi.ncols() {
        return Err(Error::GridMismatch(
            "amplitude columns do not match the wave table's incident directions".into(),
        ));
    }
    let k = w.wavenumber();
    let nodes = &w.nodes;
    // W_i |V_i|^{1/2} w_i ψ_ib
    let mut density = w.psi.clone();
    for (i, mut row) in density.rows_mut().into_iter().enumerate() {
        let c = nodes.sign[i] * nodes.sqrt_v[i] * nodes.weights[i];
        row.mapv_inplace(|v| v * c);
    }
    let mut out = Vec::with_capacity(probe_radii.len());
    for &radius in probe_radii {
        if !(radius > support_radius) {
            return Err(Error::Domain(format!(
                "probe radius {radius} lies inside the potential support {support_radius}"
            )));
        }
        let probes: Vec<Vec3> = f
            .directions
            .iter()
            .map(|d| [radius * d[0], radius * d[1], radius * d[2]])
            .collect();
        let green = Array2::from_shape_fn((probes.len(), nodes.len()), |(a, i)| {
            let d = distance(probes[a], nodes.positions[i]);
            C64::from_polar(1.0 / (4.0 * PI * d), k * d)
        });
        let scattered = green.dot(&density);
        let outgoing = C64::from_polar(1.0 / radius, k * radius);
        let mut worst = 0.0f64;
        for a in 0..probes.len() {
            for b in 0..w.incident.len() {
                // φ − e^{ik·r} = −scattered; subtract f e^{ikR}/R
                let res = -scattered[(a, b)] - f.values[(a, b)] * outgoing;
                worst = worst.max(radius * res.norm());
            }
        }
        out.push(FarFieldRow {
            radius,
            scaled_residual: worst,
        });
    }
    Ok(out)
}

/// `φ` itself at arbitrary points for one incident column.
pub fn wave_at(w: &WaveTable, column: usize, points: &[Vec3]) -> Array1<C64> {
    let k = w.wavenumber();
    let dir = w.incident[column];
    let nodes = &w.nodes;
    Array1::from_shape_fn(points.len(), |a| {
        let r = points[a];
        let mut s = C64::new(0.0, 0.0);
        for i in 0..nodes.len() {
            let d = distance(r, nodes.positions[i]);
            let c = nodes.sign[i] * nodes.sqrt_v[i] * nodes.weights[i] / (4.0 * PI * d);
            s += C64::from_polar(c, k * d) * w.psi[(i, column)];
        }
        C64::from_polar(1.0, k * dot(dir, r)) - s
    })
}

#[cfg(test)]
fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
fn radius_of(p: Vec3) -> f64 {
    crate::quadrature::norm(p)
}
