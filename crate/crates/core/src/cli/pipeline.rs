//! One energy through potentials → kernel → solve → amplitude → S-matrix.

use serde::Serialize;

use crate::amplitude::{scattering_amplitude, AmplitudeMatrix};
use crate::error::Result;
use crate::ls_solver::{assemble_kernel, solve_modified_ls, DiagonalRule, SolveOptions, WaveTable};
use crate::potentials::PotentialSpec;
use crate::quadrature::{SphereGrid, VolumeGrid};
use crate::smatrix::{
    assemble_s, assemble_t, cross_section_double, cross_section_spectral, eigendecompose,
    ergodic_reconstruct, optical_theorem_defect, reconstruction_error, SMatrixSpectrum,
};

pub struct ScatterRun {
    pub wave: WaveTable,
    pub amplitude: AmplitudeMatrix,
    pub spectrum: SMatrixSpectrum,
    pub metrics: ScatterMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatterMetrics {
    pub lambda: f64,
    pub active_nodes: usize,
    pub residual: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub unitarity_defect: f64,
    pub normality_gap: f64,
    pub reconstruction_error: f64,
    pub sigma_double: f64,
    pub sigma_spectral: f64,
    pub parseval_gap: f64,
    pub optical_defect: f64,
    pub unimodularity_gap: f64,
}

pub fn run_energy(
    p: &PotentialSpec,
    grid: &VolumeGrid,
    sphere: &SphereGrid,
    lambda: f64,
    rule: DiagonalRule,
    exceptional_ratio: f64,
) -> Result<ScatterRun> {
    let k = assemble_kernel(p, grid, lambda, rule)?;
    let wave = solve_modified_ls(&k, sphere, SolveOptions { exceptional_ratio })?;
    let amplitude = scattering_amplitude(&wave, sphere)?;
    let s = assemble_s(&assemble_t(&amplitude)?, sphere)?;
    let spectrum = eigendecompose(&s)?;
    let fhat = ergodic_reconstruct(&spectrum)?;
    let sigma_double = cross_section_double(&amplitude);
    let sigma_spectral = cross_section_spectral(&spectrum);
    let metrics = ScatterMetrics {
        lambda,
        active_nodes: wave.nodes.len(),
        residual: wave.max_residual(),
        sigma_min: wave.sigma_min,
        sigma_max: wave.sigma_max,
        unitarity_defect: s.unitarity_defect,
        normality_gap: s.normality_gap,
        reconstruction_error: reconstruction_error(&amplitude, &fhat),
        sigma_double,
        sigma_spectral,
        parseval_gap: relative_gap(sigma_double, sigma_spectral),
        optical_defect: optical_theorem_defect(&amplitude, sphere)?,
        unimodularity_gap: spectrum.max_unimodularity_gap(),
    };
    Ok(ScatterRun {
        wave,
        amplitude,
        spectrum,
        metrics,
    })
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
