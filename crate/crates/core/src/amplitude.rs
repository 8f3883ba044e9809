//! Scattering amplitude on the sphere grid.
//!
//! ```text
//! f(ω_a, ω′_b) = −(1/4π) Σ_i w_i e^{−ik ω_a·r_i} W_i |V_i|^{1/2} ψ(r_i, k_b)
//! ```
//!
//! Rows index outgoing directions `ω_a`, columns incident directions `ω′_b`.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::ls_solver::WaveTable;
use crate::output::Table;
use crate::potentials::{PotentialKind, PotentialSpec};
use crate::quadrature::{dot, SphereGrid, Vec3, VolumeGrid};

#[derive(Debug, Clone)]
pub struct AmplitudeMatrix {
    pub lambda: f64,
    pub values: Array2<C64>,
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl AmplitudeMatrix {
    pub fn wavenumber(&self) -> f64 {
        self.lambda.sqrt()
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn sphere(&self) -> Result<SphereGrid> {
        SphereGrid::new(self.n_theta, self.n_phi)
    }

    /// Forward amplitudes `f(ω_b, ω_b)`.
    pub fn forward(&self) -> Vec<C64> {
        (0..self.dim()).map(|b| self.values[(b, b)]).collect()
    }

    pub fn to_table(&self, name: &str) -> Table {
        let mut t = Table::new(
            name,
            &[
                "lambda",
                "out_index",
                "in_index",
                "theta_out",
                "phi_out",
                "theta_in",
                "phi_in",
                "re_f",
                "im_f",
                "dcs",
            ],
        );
        for ((a, b), v) in self.values.indexed_iter() {
            let (to, po) = angles(self.directions[a]);
            let (ti, pi) = angles(self.directions[b]);
            t.push(vec![
                self.lambda,
                a as f64,
                b as f64,
                to,
                po,
                ti,
                pi,
                v.re,
                v.im,
                v.norm_sqr(),
            ]);
        }
        t
    }
}

/// Polar and azimuthal angle of a unit vector.
pub fn angles(d: Vec3) -> (f64, f64) {
    (d[2].clamp(-1.0, 1.0).acos(), d[1].atan2(d[0]))
}

pub fn scattering_amplitude(w: &WaveTable, sphere: &SphereGrid) -> Result<AmplitudeMatrix> {
    check_directions(&w.incident, sphere)?;
    let k = w.wavenumber();
    let nodes = &w.nodes;
    let c = -1.0 / (4.0 * PI);
    let outgoing = Array2::from_shape_fn((sphere.len(), nodes.len()), |(a, i)| {
        let amp = c * nodes.weights[i] * nodes.sign[i] * nodes.sqrt_v[i];
        C64::from_polar(amp, -k * dot(sphere.directions[a], nodes.positions[i]))
    });
    Ok(AmplitudeMatrix {
        lambda: w.lambda,
        values: outgoing.dot(&w.psi),
        directions: sphere.directions.clone(),
        weights: sphere.weights.clone(),
        n_theta: sphere.n_theta,
        n_phi: sphere.n_phi,
    })
}

fn check_directions(incident: &[Vec3], sphere: &SphereGrid) -> Result<()> {
    let same = incident.len() == sphere.len()
        && incident
            .iter()
            .zip(&sphere.directions)
            .all(|(a, b)| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14));
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch(
            "incident directions of the wave table differ from the sphere grid".into(),
        ))
    }
}

/// First Born amplitude by volume quadrature,
/// `−(1/4π) Σ_i w_i V_i e^{ik(ω′_b − ω_a)·r_i}`.
pub fn born_amplitude(
    p: &PotentialSpec,
    grid: &VolumeGrid,
    sphere: &SphereGrid,
    lambda: f64,
) -> Result<AmplitudeMatrix> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveEnergy(lambda));
    }
    let k = lambda.sqrt();
    let v = p.sample(grid)?;
    let active: Vec<usize> = (0..grid.len()).filter(|&i| v[i] != 0.0).collect();
    let c = -1.0 / (4.0 * PI);
    let phase_out = Array2::from_shape_fn((sphere.len(), active.len()), |(a, n)| {
        let i = active[n];
        C64::from_polar(
            c * grid.weights[i] * v[i],
            -k * dot(sphere.directions[a], grid.nodes[i]),
        )
    });
    let phase_in = Array2::from_shape_fn((active.len(), sphere.len()), |(n, b)| {
        C64::from_polar(1.0, k * dot(sphere.directions[b], grid.nodes[active[n]]))
    });
    Ok(AmplitudeMatrix {
        lambda,
        values: phase_out.dot(&phase_in),
        directions: sphere.directions.clone(),
        weights: sphere.weights.clone(),
        n_theta: sphere.n_theta,
        n_phi: sphere.n_phi,
    })
}

/// Closed-form first Born amplitude at momentum transfer `q` for the
/// untruncated radial profiles; `None` for tabulated or off-center potentials.
pub fn born_closed_form(p: &PotentialSpec, q: f64) -> Option<f64> {
    match p.kind {
        PotentialKind::Gaussian { strength, width } => {
            let a3 = width.powi(3);
            Some(-strength * PI.sqrt() * a3 / 4.0 * (-(q * width).powi(2) / 4.0).exp())
        }
        PotentialKind::Yukawa {
            strength,
            screening,
        } => Some(-strength / (q * q + screening * screening)),
        PotentialKind::SquareWell { depth, radius } => {
            let x = q * radius;
            if x < 1e-3 {
                // series of (sin x − x cos x)/x³ = 1/3 − x²/30 + …
                Some(depth * radius.powi(3) * (1.0 / 3.0 - x * x / 30.0))
            } else {
                Some(depth * (x.sin() - x * x.cos()) / q.powi(3))
            }
        }
        _ => None,
    }
}

/// `|f|²` on the grid.
pub fn differential_cross_section(f: &AmplitudeMatrix) -> Array2<f64> {
    f.values.mapv(|v| v.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ls_solver::{assemble_kernel, solve_modified_ls, DiagonalRule, SolveOptions};
    use crate::quadrature::distance;

    fn solve(
        p: &PotentialSpec,
        grid: &VolumeGrid,
        sphere: &SphereGrid,
        lambda: f64,
    ) -> AmplitudeMatrix {
        let k = assemble_kernel(p, grid, lambda, DiagonalRule::default()).unwrap();
        let w = solve_modified_ls(&k, sphere, SolveOptions::default()).unwrap();
        scattering_amplitude(&w, sphere).unwrap()
    }

    #[test]
    fn reciprocity_for_off_center_potential() {
        let p = PotentialSpec::gaussian_off_center(-1.5, 0.8, [0.3, -0.2, 0.4]).unwrap();
        let grid = VolumeGrid::build(5.0, 10, 6, 12).unwrap();
        let sphere = SphereGrid::new(4, 8).unwrap();
        let f = solve(&p, &grid, &sphere, 1.3);
        let scale = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for a in 0..sphere.len() {
            for b in 0..sphere.len() {
                let (ra, rb) = (sphere.antipode[b], sphere.antipode[a]);
                let d = (f.values[(a, b)] - f.values[(ra, rb)]).norm();
                assert!(d <= 1e-12 * scale, "a={a} b={b} d={d}");
            }
        }
    }

    #[test]
    fn azimuthal_rotation_invariance_for_radial_potential() {
        let p = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        let grid = VolumeGrid::build(5.0, 10, 6, 12).unwrap();
        // same azimuthal step on both grids, so one step is an exact symmetry
        let sphere = SphereGrid::new(4, 12).unwrap();
        let f = solve(&p, &grid, &sphere, 1.0);
        let n_phi = sphere.n_phi;
        let rot = |a: usize| (a / n_phi) * n_phi + (a % n_phi + 1) % n_phi;
        let scale = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for a in 0..sphere.len() {
            for b in 0..sphere.len() {
                let d = (f.values[(a, b)] - f.values[(rot(a), rot(b))]).norm();
                assert!(d <= 1e-11 * scale, "{d}");
            }
        }
    }

    #[test]
    fn weak_coupling_approaches_born() {
        let p = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        let grid = VolumeGrid::build(5.0, 10, 6, 12).unwrap();
        let sphere = SphereGrid::new(4, 8).unwrap();
        let born = born_amplitude(&p, &grid, &sphere, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for alpha in [1e-1, 1e-2, 1e-3] {
            let f = solve(&p.scaled(alpha), &grid, &sphere, 1.0);
            let err = (&f.values - &born.values.mapv(|v| v * alpha))
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max)
                / alpha;
            // second Born term is O(α)
            assert!(err < prev * 0.2, "alpha={alpha} err={err}");
            prev = err;
        }
    }

    #[test]
    fn born_quadrature_matches_closed_form() {
        let p = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        let grid = VolumeGrid::build(6.0, 32, 16, 32).unwrap();
        let sphere = SphereGrid::new(4, 8).unwrap();
        let born = born_amplitude(&p, &grid, &sphere, 1.0).unwrap();
        for a in 0..sphere.len() {
            for b in 0..sphere.len() {
                let q = distance(sphere.directions[a], sphere.directions[b]);
                let exact = born_closed_form(&p, q).unwrap();
                assert!((born.values[(a, b)] - exact).norm() < 1e-8, "q={q}");
            }
        }
    }

    #[test]
    fn closed_forms_at_zero_transfer() {
        // ∫V = g π^{3/2} a³ for the Gaussian
        let g = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        assert!((born_closed_form(&g, 0.0).unwrap() - 2.0 * PI.sqrt() / 4.0).abs() < 1e-15);
        let y = PotentialSpec::yukawa(-1.0, 1.0).unwrap();
        assert_eq!(born_closed_form(&y, 0.0).unwrap(), 1.0);
        let s = PotentialSpec::square_well(3.0, 1.0).unwrap();
        let small = born_closed_form(&s, 1e-4).unwrap();
        let large = born_closed_form(&s, 2e-3).unwrap();
        assert!((small - 1.0).abs() < 1e-8);
        assert!((large - 3.0 * (2e-3f64.sin() - 2e-3 * 2e-3f64.cos()) / 8e-9).abs() < 1e-6);
    }

    #[test]
    fn mismatched_sphere_is_rejected() {
        let p = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        let grid = VolumeGrid::build(4.0, 6, 4, 8).unwrap();
        let s1 = SphereGrid::new(4, 8).unwrap();
        let k = assemble_kernel(&p, &grid, 1.0, DiagonalRule::default()).unwrap();
        let w = solve_modified_ls(&k, &s1, SolveOptions::default()).unwrap();
        let s2 = SphereGrid::new(2, 4).unwrap();
        assert!(matches!(
            scattering_amplitude(&w, &s2),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn table_has_one_row_per_pair() {
        let p = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        let grid = VolumeGrid::build(4.0, 6, 4, 8).unwrap();
        let sphere = SphereGrid::new(2, 4).unwrap();
        let f = solve(&p, &grid, &sphere, 1.0);
        let t = f.to_table("amplitude");
        assert_eq!(t.rows.len(), 64);
        assert_eq!(t.rows[9][9], f.values[(1, 1)].norm_sqr());
    }
}
