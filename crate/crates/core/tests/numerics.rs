//! Cross-module checks on small grids.

use std::f64::consts::PI;

use lsscatter::cli::pipeline::run_energy;
use lsscatter::ls_solver::{farfield_check, hs_norms, DiagonalRule};
use lsscatter::potentials::{rollnik_norm_estimate, PotentialSpec};
use lsscatter::quadrature::{dot, SphereGrid, VolumeGrid};
use lsscatter::radial::{partial_wave_amplitude, PhaseShiftTable, RadialOptions};
use lsscatter::smatrix::expansion_coefficients;
use proptest::prelude::*;

fn gaussian() -> PotentialSpec {
    PotentialSpec::gaussian(-2.0, 1.0).unwrap()
}

#[test]
fn hilbert_schmidt_norms_of_the_gaussian() {
    // g = −2, a = 1: Rollnik norm 4π³, so ‖K‖²_HS = π/4;
    // ‖F*F‖²_HS = (1 − e^{−2k²a²})/(8π) at k = 1
    let grid = VolumeGrid::build(6.0, 16, 8, 16).unwrap();
    let h = hs_norms(&gaussian(), &grid, 1.0).unwrap();
    assert!(
        (h.kernel / (PI / 4.0).sqrt() - 1.0).abs() < 2e-3,
        "{}",
        h.kernel
    );
    let ff = ((1.0 - (-2.0f64).exp()) / (8.0 * PI)).sqrt();
    assert!((h.ff / ff - 1.0).abs() < 1e-7, "{}", h.ff);
    let r = rollnik_norm_estimate(&gaussian(), &grid).unwrap();
    assert!((r / (4.0 * PI.powi(3)) - 1.0).abs() < 5e-3, "{r}");
}

#[test]
fn square_well_rollnik_norm() {
    let p = PotentialSpec::square_well(1.0, 1.0).unwrap();
    let grid = VolumeGrid::build(1.0, 16, 8, 16).unwrap();
    let r = rollnik_norm_estimate(&p, &grid).unwrap();
    assert!((r / (4.0 * PI * PI) - 1.0).abs() < 1e-4, "{r}");
}

#[test]
fn half_grid_identities() {
    let grid = VolumeGrid::build(6.0, 12, 6, 12).unwrap();
    let sg = SphereGrid::new(6, 12).unwrap();
    let run = run_energy(&gaussian(), &grid, &sg, 1.0, DiagonalRule::default(), 1e-8).unwrap();
    let m = &run.metrics;
    assert!(m.residual < 1e-12);
    assert!(m.unitarity_defect < 1e-8);
    assert!(m.optical_defect < 1e-8);
    assert!(m.parseval_gap < 1e-12);
    assert!(m.reconstruction_error < 1e-9);

    // expansion coefficients by quadrature and in closed form
    for a in [0, 17, 71] {
        let (q, c) = expansion_coefficients(&run.amplitude, &run.spectrum, a).unwrap();
        let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = (&q - &c).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9 * scale, "row {a}: {diff:e}");
    }

    // the 3D amplitude is a function of ω·ω′ and matches the partial-wave sum
    let t = PhaseShiftTable::compute(&gaussian(), 1.0, &RadialOptions::default()).unwrap();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for ((a, b), v) in run.amplitude.values.indexed_iter() {
        let c = dot(sg.directions[a], sg.directions[b]).clamp(-1.0, 1.0);
        let pw = partial_wave_amplitude(&t, c.acos()).unwrap();
        worst = worst.max((v - pw).norm());
        scale = scale.max(pw.norm());
    }
    assert!(worst < 1e-2 * scale, "{worst:e}");

    // R·|φ − plane wave − f e^{ikR}/R| falls off with R
    let rows = farfield_check(&run.wave, &run.amplitude, 6.0, &[20.0, 40.0, 80.0]).unwrap();
    assert!(rows
        .windows(2)
        .all(|w| w[1].scaled_residual < w[0].scaled_residual));
}

#[test]
fn non_radial_potential_keeps_the_identities() {
    let p = PotentialSpec::gaussian_off_center(-1.0, 0.7, [0.3, -0.2, 0.4]).unwrap();
    let grid = VolumeGrid::build(p.support_radius, 12, 6, 12).unwrap();
    let sg = SphereGrid::new(6, 12).unwrap();
    let run = run_energy(&p, &grid, &sg, 1.0, DiagonalRule::default(), 1e-8).unwrap();
    assert!(run.metrics.unitarity_defect < 1e-10);
    assert!(run.metrics.reconstruction_error < 1e-10);
    assert!(run.metrics.parseval_gap < 1e-12);
}

#[test]
fn literal_unit_phase_diagonal_breaks_unitarity() {
    let grid = VolumeGrid::build(6.0, 12, 6, 12).unwrap();
    let sg = SphereGrid::new(6, 12).unwrap();
    let unit = run_energy(
        &gaussian(),
        &grid,
        &sg,
        1.0,
        DiagonalRule::EqualVolumeBallUnitPhase,
        1e-8,
    )
    .unwrap();
    let ball = run_energy(
        &gaussian(),
        &grid,
        &sg,
        1.0,
        DiagonalRule::EqualVolumeBall,
        1e-8,
    )
    .unwrap();
    assert!(unit.metrics.unitarity_defect > 1e-3);
    assert!(ball.metrics.unitarity_defect < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn spectral_identities_hold_for_any_gaussian(g in -3.0f64..3.0, a in 0.5f64..1.2, lambda in 0.2f64..2.0) {
        prop_assume!(g.abs() > 1e-3);
        let p = PotentialSpec::gaussian(g, a).unwrap();
        let grid = VolumeGrid::build(p.support_radius, 8, 4, 8).unwrap();
        let sg = SphereGrid::new(4, 8).unwrap();
        let run = run_energy(&p, &grid, &sg, lambda, DiagonalRule::default(), 1e-8).unwrap();
        let m = &run.metrics;
        // σ_double = (4π²/λ)‖Ŝ − I‖²_F, equal to the spectral sum only for
        // normal Ŝ; on coarse grids the gap follows the unitarity defect
        prop_assert!(
            m.parseval_gap <= 1e-12 + m.unitarity_defect,
            "parseval {:e} defect {:e}", m.parseval_gap, m.unitarity_defect
        );
        prop_assert!(m.unitarity_defect < 1e-3, "defect {:e}", m.unitarity_defect);
        prop_assert!(m.sigma_double > 0.0);
        // reciprocity for a parity-even potential: f(ω, ω′) = f(−ω′, −ω)
        for ((i, j), v) in run.amplitude.values.indexed_iter() {
            let w = run.amplitude.values[(sg.antipode[j], sg.antipode[i])];
            prop_assert!((v - w).norm() <= 1e-10 * (1.0 + v.norm()));
        }
    }
}
