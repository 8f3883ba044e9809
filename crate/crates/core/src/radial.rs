//! Partial-wave solver for spherically symmetric potentials.
//!
//! `u″ = (V(r) + ℓ(ℓ+1)/r² − λ) u` is integrated outward with Numerov from
//! `u ~ r^{ℓ+1}` and matched to `r[j_ℓ(kr) cos δ − y_ℓ(kr) sin δ]` beyond the
//! support of `V`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::output::Table;
use crate::potentials::PotentialSpec;
use crate::quadrature::gauss_legendre;
use crate::smatrix::{assign_degrees, degree_weights, SMatrixSpectrum};
use crate::specfun::{legendre_table, spherical_bessel};

pub const DEFAULT_L_MAX: usize = 12;
pub const TAIL_TOLERANCE: f64 = 1e-6;
const L_CAP: usize = 200;
const START_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOptions {
    /// Upper bound on the Numerov step; `None` uses
    /// `min(a/200, 2π/(50k))` with `a` the potential's length scale.
    pub step: Option<f64>,
    /// Matching radius beyond the support, in wavelengths.
    pub match_wavelengths: f64,
    pub l_max: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            step: None,
            match_wavelengths: 2.0,
            l_max: DEFAULT_L_MAX,
        }
    }
}

fn check_radial(p: &PotentialSpec) -> Result<()> {
    if p.spherically_symmetric {
        Ok(())
    } else {
        Err(Error::NonRadial)
    }
}

/// Uniform grid `r_n = r0 + n h`, adjusted so every breakpoint is a node.
struct Mesh {
    r0: f64,
    h: f64,
}

impl Mesh {
    fn new(p: &PotentialSpec, k: f64, step: Option<f64>) -> Self {
        let h_max = step.unwrap_or_else(|| (p.length_scale() / 200.0).min(2.0 * PI / (50.0 * k)));
        let mut h = h_max;
        if let Some(&b) = p.breakpoints().first() {
            let m = ((b - START_RADIUS) / h_max).ceil().max(1.0);
            h = (b - START_RADIUS) / m;
        }
        Self {
            r0: START_RADIUS,
            h,
        }
    }

    fn r(&self, n: usize) -> f64 {
        self.r0 + n as f64 * self.h
    }
}

/// Numerov solution on nodes `0..=n_end`; rescaled when it grows large.
///
/// At a breakpoint node the integration restarts: `u` and `u′` are carried
/// over from the inner solution and the first outer step is a fourth-order
/// Taylor step with the outer potential.
fn integrate(
    p: &PotentialSpec,
    l: usize,
    lambda: f64,
    mesh: &Mesh,
    n_end: usize,
) -> Result<Vec<f64>> {
    let cent = (l * (l + 1)) as f64;
    let h = mesh.h;
    let breaks: Vec<usize> = p
        .breakpoints()
        .iter()
        .map(|&b| ((b - mesh.r0) / h).round() as usize)
        .filter(|&m| m >= 4 && m < n_end)
        .collect();
    // one-sided potential: `side` < 0 picks the left limit at a breakpoint
    let v_side = |r: f64, side: f64| -> Result<f64> {
        for b in p.breakpoints() {
            if (r - b).abs() < 1e-6 * h {
                return p.radial(b + side * 1e-9 * b.max(1.0));
            }
        }
        p.radial(r)
    };
    let q = |r: f64, side: f64| -> Result<f64> { Ok(v_side(r, side)? + cent / (r * r) - lambda) };
    let h2 = h * h / 12.0;
    let mut u = vec![0.0; n_end + 1];
    // regular solution u = r^{ℓ+1}(1 + c r²), scaled by r1^{−(ℓ+1)}
    let c = (q(mesh.r0, -1.0)? - cent / (mesh.r0 * mesh.r0)) / (2.0 * (2 * l + 3) as f64);
    let r1 = mesh.r(1);
    u[0] = (mesh.r0 / r1).powi(l as i32 + 1) * (1.0 + c * mesh.r0 * mesh.r0);
    u[1] = 1.0 + c * r1 * r1;
    let step = |um1: f64, u0: f64, qm1: f64, q0: f64, qp1: f64| {
        (2.0 * u0 * (1.0 + 5.0 * h2 * q0) - um1 * (1.0 - h2 * qm1)) / (1.0 - h2 * qp1)
    };
    let mut n = 1;
    while n < n_end {
        if breaks.contains(&n) {
            // u′(b) from the inner side, one-sided fourth order
            let rb = mesh.r(n);
            let ub = u[n];
            let du = (25.0 * ub - 48.0 * u[n - 1] + 36.0 * u[n - 2] - 16.0 * u[n - 3]
                + 3.0 * u[n - 4])
                / (12.0 * h);
            // outer Taylor step; derivatives of the outer Q by one-sided differences
            let (q0, q1, q2) = (q(rb, 1.0)?, q(rb + h, 1.0)?, q(rb + 2.0 * h, 1.0)?);
            let dq = (-3.0 * q0 + 4.0 * q1 - q2) / (2.0 * h);
            let ddq = (q0 - 2.0 * q1 + q2) / (h * h);
            let d2 = q0 * ub;
            let d3 = dq * ub + q0 * du;
            let d4 = ddq * ub + 2.0 * dq * du + q0 * d2;
            u[n + 1] =
                ub + h * du + h * h / 2.0 * d2 + h.powi(3) / 6.0 * d3 + h.powi(4) / 24.0 * d4;
            n += 1;
            continue;
        }
        let side = |j: usize| if breaks.contains(&j) { 1.0 } else { -1.0 };
        let (rm, r0, rp) = (mesh.r(n - 1), mesh.r(n), mesh.r(n + 1));
        u[n + 1] = step(
            u[n - 1],
            u[n],
            q(rm, side(n - 1))?,
            q(r0, -1.0)?,
            q(rp, -1.0)?,
        );
        if u[n + 1].abs() > 1e200 {
            for v in u[..=n + 1].iter_mut() {
                *v *= 1e-200;
            }
        }
        n += 1;
    }
    Ok(u)
}

/// Phase shift `δ_ℓ(λ)` in `(−π/2, π/2]`.
pub fn phase_shift(p: &PotentialSpec, l: usize, lambda: f64, opts: &RadialOptions) -> Result<f64> {
    check_radial(p)?;
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveEnergy(lambda));
    }
    if p.is_identically_zero() {
        return Ok(0.0);
    }
    let k = lambda.sqrt();
    let mesh = Mesh::new(p, k, opts.step);
    let wavelength = 2.0 * PI / k;
    let mut r_match = p.support_radius + opts.match_wavelengths * wavelength;
    for _attempt in 0..8 {
        let n_match = ((r_match - mesh.r0) / mesh.h).ceil() as usize;
        let u = integrate(p, l, lambda, &mesh, n_match + 2)?;
        let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let un = u[n_match];
        if un.abs() < 1e-6 * scale {
            // node too close to the matching point
            r_match += 0.25 * wavelength;
            continue;
        }
        let h = mesh.h;
        let du = (u[n_match - 2] - 8.0 * u[n_match - 1] + 8.0 * u[n_match + 1] - u[n_match + 2])
            / (12.0 * h);
        let r = mesh.r(n_match);
        let gamma = du / un;
        let beta = (gamma - 1.0 / r) / k;
        let b = spherical_bessel(l, k * r)?;
        let num = beta * b.j - b.dj;
        let den = beta * b.y - b.dy;
        let mut delta = (num / den).atan();
        if delta <= -PI / 2.0 {
            delta += PI;
        }
        if !delta.is_finite() {
            return Err(Error::NonFinite(format!(
                "phase shift at l={l}, lambda={lambda}"
            )));
        }
        return Ok(delta);
    }
    Err(Error::Domain(format!(
        "no usable matching radius found for l={l}, lambda={lambda}"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftTable {
    pub lambda: f64,
    pub l_max: usize,
    pub deltas: Vec<f64>,
    pub s: Vec<C64>,
}

impl PhaseShiftTable {
    /// Phase shifts for `ℓ = 0..=L`, with `L ≥ opts.l_max` extended until
    /// `|δ_L| < 10⁻⁶`.
    pub fn compute(p: &PotentialSpec, lambda: f64, opts: &RadialOptions) -> Result<Self> {
        check_radial(p)?;
        let mut deltas = Vec::new();
        for l in 0..=L_CAP {
            deltas.push(phase_shift(p, l, lambda, opts)?);
            if l >= opts.l_max && deltas[l].abs() < TAIL_TOLERANCE {
                return Ok(Self::from_deltas(lambda, deltas));
            }
        }
        Err(Error::Domain(format!(
            "phase shifts not below {TAIL_TOLERANCE} by l={L_CAP} at lambda={lambda}"
        )))
    }

    pub fn from_deltas(lambda: f64, deltas: Vec<f64>) -> Self {
        let s = deltas
            .iter()
            .map(|&d| C64::from_polar(1.0, 2.0 * d))
            .collect();
        Self {
            lambda,
            l_max: deltas.len() - 1,
            deltas,
            s,
        }
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new("phaseshifts", &["lambda", "ell", "delta", "re_s", "im_s"]);
        for (l, (d, s)) in self.deltas.iter().zip(&self.s).enumerate() {
            t.push(vec![self.lambda, l as f64, *d, s.re, s.im]);
        }
        t
    }
}

/// `f(θ) = (1/2ik) Σ_ℓ (2ℓ+1)(S_ℓ − 1) P_ℓ(cos θ)`, truncated at `L_max`.
pub fn partial_wave_amplitude(t: &PhaseShiftTable, theta: f64) -> Result<C64> {
    amplitude_at_cos(t, theta.cos().clamp(-1.0, 1.0), t.l_max)
}

fn amplitude_at_cos(t: &PhaseShiftTable, x: f64, l_max: usize) -> Result<C64> {
    let p = legendre_table(l_max, x)?;
    let k = t.lambda.sqrt();
    let sum: C64 = (0..=l_max)
        .map(|l| (2.0 * l as f64 + 1.0) * (t.s[l] - 1.0) * p[l])
        .sum();
    Ok(sum / C64::new(0.0, 2.0 * k))
}

/// Change of `f` over `θ` samples from appending one more partial wave with
/// phase shift `delta_next`, relative to `max |f|`.
pub fn tail_change(t: &PhaseShiftTable, delta_next: f64, n_angles: usize) -> Result<f64> {
    let mut ext = t.deltas.clone();
    ext.push(delta_next);
    let longer = PhaseShiftTable::from_deltas(t.lambda, ext);
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for i in 0..n_angles {
        let theta = PI * i as f64 / (n_angles - 1).max(1) as f64;
        let a = partial_wave_amplitude(t, theta)?;
        let b = partial_wave_amplitude(&longer, theta)?;
        diff = diff.max((a - b).norm());
        scale = scale.max(a.norm());
    }
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SingleCrossSection {
    /// `2π ∫ |f(θ)|² sin θ dθ` by Gauss-Legendre in `cos θ`.
    pub angular: f64,
    /// `(4π/λ) Σ (2ℓ+1) sin² δ_ℓ`.
    pub partial_wave: f64,
}

impl SingleCrossSection {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.angular.abs().max(self.partial_wave.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.angular - self.partial_wave).abs() / scale
        }
    }
}

pub fn cross_section_single(t: &PhaseShiftTable) -> Result<SingleCrossSection> {
    // |f|² is a polynomial of degree 2L in cos θ
    let (x, w) = gauss_legendre(t.l_max + 2);
    let mut angular = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        angular += wi * amplitude_at_cos(t, *xi, t.l_max)?.norm_sqr();
    }
    angular *= 2.0 * PI;
    let partial_wave = 4.0 * PI / t.lambda
        * t.deltas
            .iter()
            .enumerate()
            .map(|(l, d)| (2.0 * l as f64 + 1.0) * d.sin().powi(2))
            .sum::<f64>();
    Ok(SingleCrossSection {
        angular,
        partial_wave,
    })
}

/// `2π ∫ |f(θ)|² sin θ dθ` for an amplitude given as a function of `cos θ`.
pub fn cross_section_from_samples(f: impl Fn(f64) -> C64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    2.0 * PI
        * x.iter()
            .zip(&w)
            .map(|(xi, wi)| wi * f(*xi).norm_sqr())
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DegreeRecord {
    pub ell: usize,
    pub multiplicity: usize,
    pub expected: usize,
    /// Mean of the eigenvalues assigned to `ℓ`.
    pub nu_mean: (f64, f64),
    /// `max_j |ν_j − e^{2iδ_ℓ}|` over the cluster.
    pub distance: f64,
    /// Same with the literal `exp(δ_ℓ)`, for reference.
    pub distance_literal: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EigenCorrespondence {
    pub records: Vec<DegreeRecord>,
    pub max_distance: f64,
    pub multiplicities_ok: bool,
    pub unassigned: usize,
}

/// Compares the `ℓ`-clusters of the spectrum with `S_ℓ = e^{2iδ_ℓ}` for
/// `ℓ ≤ max_ell`.
///
/// Each eigenfunction is assigned the degree holding most of its weight in
/// the zonal projectors (see [`assign_degrees`]). When the whole spectrum is
/// one degenerate cluster (`V ≡ 0`) the eigenbasis is arbitrary; the
/// multiplicity of `ℓ` is then the basis-invariant trace `Σ_j p_ℓ(j)`.
pub fn verify_eigen_correspondence(
    spec: &SMatrixSpectrum,
    t: &PhaseShiftTable,
    max_ell: usize,
) -> Result<EigenCorrespondence> {
    if t.l_max < max_ell {
        return Err(Error::Domain(format!(
            "phase-shift table stops at l={}, need {max_ell}",
            t.l_max
        )));
    }
    let probe = (spec.n_theta.saturating_sub(1)).max(max_ell + 1);
    let spread = spec
        .eigenvalues
        .iter()
        .map(|v| (v - spec.eigenvalues[0]).norm())
        .fold(0.0, f64::max);
    let degenerate = spread <= 1e-12;
    let weights = degree_weights(spec, probe)?;
    let ell = assign_degrees(spec, probe)?;
    let unassigned = if degenerate {
        0
    } else {
        ell.iter().filter(|e| e.is_none()).count()
    };
    let mut records = Vec::new();
    for l in 0..=max_ell {
        let (members, multiplicity): (Vec<C64>, usize) = if degenerate {
            let trace: f64 = weights.row(l).sum();
            (spec.eigenvalues.clone(), trace.round() as usize)
        } else {
            let m: Vec<C64> = ell
                .iter()
                .zip(&spec.eigenvalues)
                .filter(|(e, _)| **e == Some(l))
                .map(|(_, v)| *v)
                .collect();
            let n = m.len();
            (m, n)
        };
        let target = t.s[l];
        let literal = C64::new(t.deltas[l].exp(), 0.0);
        let worst = |z: C64| {
            if members.is_empty() {
                f64::INFINITY
            } else {
                members.iter().map(|v| (v - z).norm()).fold(0.0, f64::max)
            }
        };
        let mean = if members.is_empty() {
            C64::new(f64::NAN, f64::NAN)
        } else {
            members.iter().sum::<C64>() / members.len() as f64
        };
        records.push(DegreeRecord {
            ell: l,
            multiplicity,
            expected: 2 * l + 1,
            nu_mean: (mean.re, mean.im),
            distance: worst(target),
            distance_literal: worst(literal),
        });
    }
    let max_distance = records.iter().map(|r| r.distance).fold(0.0, f64::max);
    let multiplicities_ok = records.iter().all(|r| r.multiplicity == r.expected);
    Ok(EigenCorrespondence {
        records,
        max_distance,
        multiplicities_ok,
        unassigned,
    })
}

/// Number of `ℓ`-wave bound states from the nodes of the zero-energy
/// solution: interior sign changes, plus one if the straight-line (ℓ = 0) or
/// `r^{−ℓ}`-dominated tail still crosses zero beyond the support.
pub fn bound_state_count(p: &PotentialSpec, l: usize, opts: &RadialOptions) -> Result<usize> {
    check_radial(p)?;
    let k_ref = 1.0 / p.length_scale();
    let mesh = Mesh::new(p, k_ref, opts.step);
    let n_end = ((p.support_radius - mesh.r0) / mesh.h).ceil() as usize + 2;
    let u = integrate(p, l, 0.0, &mesh, n_end)?;
    let mut count = u
        .windows(2)
        .filter(|w| w[0] != 0.0 && w[0].signum() != w[1].signum())
        .count();
    let r = mesh.r(n_end - 1);
    let un = u[n_end - 1];
    let du = (u[n_end] - u[n_end - 2]) / (2.0 * mesh.h);
    // outside: u = A r^{ℓ+1} + B r^{−ℓ}; an extra node exists iff A and the
    // current value have opposite signs
    let lf = l as f64;
    let a = (lf * un + r * du) / ((2.0 * lf + 1.0) * r.powf(lf + 1.0));
    if a != 0.0 && a.signum() != un.signum() {
        count += 1;
    }
    Ok(count)
}

/// s-wave binding momenta `κ` in `range` from `u′(R) + κ u(R) = 0` at the
/// support edge, bracketed on `n_samples` points and bisected.
pub fn s_wave_bound_states(
    p: &PotentialSpec,
    range: (f64, f64),
    n_samples: usize,
    opts: &RadialOptions,
) -> Result<Vec<f64>> {
    check_radial(p)?;
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) || n_samples < 2 {
        return Err(Error::Domain("invalid kappa scan".into()));
    }
    let mesh = Mesh::new(p, 1.0 / p.length_scale(), opts.step);
    let n_end = ((p.support_radius - mesh.r0) / mesh.h).ceil() as usize + 4;
    let mismatch = |kappa: f64| -> Result<f64> {
        let u = integrate(p, 0, -kappa * kappa, &mesh, n_end)?;
        let n = n_end - 2;
        let du = (u[n - 2] - 8.0 * u[n - 1] + 8.0 * u[n + 1] - u[n + 2]) / (12.0 * mesh.h);
        let norm = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((du + kappa * u[n]) / norm)
    };
    let ks: Vec<f64> = (0..n_samples)
        .map(|i| lo + (hi - lo) * i as f64 / (n_samples - 1) as f64)
        .collect();
    let ms = ks
        .iter()
        .map(|&x| mismatch(x))
        .collect::<Result<Vec<_>>>()?;
    let mut roots = Vec::new();
    for i in 0..n_samples - 1 {
        if ms[i].signum() == ms[i + 1].signum() {
            continue;
        }
        let (mut a, mut b, sa) = (ks[i], ks[i + 1], ms[i].signum());
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if mismatch(mid)?.signum() == sa {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-13 * b {
                break;
            }
        }
        roots.push(0.5 * (a + b));
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Closed-form s-wave phase shift of an attractive square well, reduced
    /// to the table's principal branch.
    fn square_well_delta0(v0: f64, a: f64, lambda: f64) -> f64 {
        let k = lambda.sqrt();
        let kk = (lambda + v0).sqrt();
        let mut d = ((k / kk) * (kk * a).tan()).atan() - k * a;
        while d <= -PI / 2.0 {
            d += PI;
        }
        while d > PI / 2.0 {
            d -= PI;
        }
        d
    }

    fn same_mod_pi(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(PI);
        d.min(PI - d)
    }

    #[test]
    fn zero_potential_has_zero_shifts() {
        let z = PotentialSpec::gaussian(0.0, 1.0).unwrap();
        let t = PhaseShiftTable::compute(&z, 1.0, &RadialOptions::default()).unwrap();
        assert!(t.deltas.iter().all(|d| d.abs() < 1e-12), "{:?}", t.deltas);
        let cs = cross_section_single(&t).unwrap();
        assert!(cs.angular < 1e-20 && cs.partial_wave < 1e-20);
        assert!(partial_wave_amplitude(&t, 0.3).unwrap().norm() < 1e-12);
    }

    #[test]
    fn square_well_matches_closed_form() {
        let opts = RadialOptions::default();
        for v0 in [1.0, 3.0, 10.0] {
            let p = PotentialSpec::square_well(v0, 1.0).unwrap();
            for lambda in [0.5, 1.0, 2.0] {
                let d = phase_shift(&p, 0, lambda, &opts).unwrap();
                let exact = square_well_delta0(v0, 1.0, lambda);
                assert!(
                    same_mod_pi(d, exact) < 1e-6,
                    "V0={v0} λ={lambda}: {d} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn gaussian_step_halving() {
        let p = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        let coarse = phase_shift(&p, 0, 1.0, &RadialOptions::default()).unwrap();
        let fine = phase_shift(
            &p,
            0,
            1.0,
            &RadialOptions {
                step: Some(1.0 / 400.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((coarse - fine).abs() < 1e-6);
        // attractive: positive s-wave shift
        assert!(coarse > 0.0);
    }

    #[test]
    fn non_radial_is_rejected() {
        let p = PotentialSpec::gaussian_off_center(-1.0, 1.0, [0.5, 0.0, 0.0]).unwrap();
        assert!(matches!(
            phase_shift(&p, 0, 1.0, &RadialOptions::default()),
            Err(Error::NonRadial)
        ));
    }

    #[test]
    fn unitary_limit_amplitude_and_cross_section() {
        let t = PhaseShiftTable::from_deltas(1.0, vec![PI / 2.0]);
        let f = partial_wave_amplitude(&t, 1.1).unwrap();
        assert!((f - C64::new(0.0, 1.0)).norm() < 1e-15);
        let cs = cross_section_single(&t).unwrap();
        assert!((cs.partial_wave - 4.0 * PI).abs() < 1e-12);
        assert!((cs.angular - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn gaussian_table_is_converged_and_consistent() {
        let p = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        let opts = RadialOptions::default();
        let t = PhaseShiftTable::compute(&p, 1.0, &opts).unwrap();
        assert!(t.deltas[t.l_max].abs() < TAIL_TOLERANCE);
        assert!(t.s.iter().all(|s| (s.norm() - 1.0).abs() < 1e-15));
        let cs = cross_section_single(&t).unwrap();
        assert!(cs.relative_gap() < 1e-8, "{cs:?}");
        let next = phase_shift(&p, t.l_max + 1, 1.0, &opts).unwrap();
        assert!(tail_change(&t, next, 37).unwrap() < 1e-8);
    }

    #[test]
    fn born_ratio_converges() {
        let opts = RadialOptions::default();
        for l in 0..3 {
            let g = 1e-3;
            let d1 =
                phase_shift(&PotentialSpec::gaussian(-g, 1.0).unwrap(), l, 1.0, &opts).unwrap() / g;
            let d2 = phase_shift(
                &PotentialSpec::gaussian(-g / 2.0, 1.0).unwrap(),
                l,
                1.0,
                &opts,
            )
            .unwrap()
                / (g / 2.0);
            assert!(((d1 - d2) / d2).abs() < 0.05, "l={l}: {d1} {d2}");
            // first Born: δ_ℓ ≈ −k ∫ V j_ℓ(kr)² r² dr > 0 for attraction
            assert!(d1 > 0.0);
        }
    }

    #[test]
    fn square_well_bound_state_counts() {
        let opts = RadialOptions::default();
        let shallow = PotentialSpec::square_well(2.0, 1.0).unwrap();
        let deep = PotentialSpec::square_well(3.0, 1.0).unwrap();
        assert_eq!(bound_state_count(&shallow, 0, &opts).unwrap(), 0);
        assert_eq!(bound_state_count(&deep, 0, &opts).unwrap(), 1);
        let much_deeper = PotentialSpec::square_well(30.0, 1.0).unwrap();
        // K a = √30 ≈ 5.48 lies between 3π/2 and 5π/2: two s-states
        assert_eq!(bound_state_count(&much_deeper, 0, &opts).unwrap(), 2);
        let roots = s_wave_bound_states(&deep, (0.01, 1.7), 60, &opts).unwrap();
        assert_eq!(roots.len(), 1);
        // K cot(K a) = −κ with K² = V0 − κ²
        let kappa = roots[0];
        let kk = (3.0 - kappa * kappa).sqrt();
        assert!((kk / kk.tan() + kappa).abs() < 1e-5, "kappa={kappa}");
        assert!(s_wave_bound_states(&shallow, (0.01, 1.4), 60, &opts)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn legendre_literal_form_is_not_unimodular() {
        let t = PhaseShiftTable::from_deltas(1.0, vec![0.3]);
        assert!((t.s[0].norm() - 1.0).abs() < 1e-15);
        assert!((0.3f64.exp() - 1.0).abs() > 0.3);
    }

    proptest! {
        #[test]
        fn partial_wave_sum_matches_angular_integral(d in proptest::collection::vec(-1.5f64..1.5, 1..8), lambda in 0.2f64..4.0) {
            let t = PhaseShiftTable::from_deltas(lambda, d);
            let cs = cross_section_single(&t).unwrap();
            prop_assert!(cs.relative_gap() < 1e-12);
        }
    }
}
