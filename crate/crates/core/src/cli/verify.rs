//! The verification suite: every identity checked end to end on one config.

use std::f64::consts::PI;

use serde::Serialize;

use super::config::RunConfig;
use super::pipeline::{run_energy, ScatterMetrics};
use crate::amplitude::{born_closed_form, scattering_amplitude};
use crate::error::Result;
use crate::linalg::C64;
use crate::ls_solver::{
    assemble_kernel, bound_state_scan, farfield_check, hs_norms, solve_modified_ls, FarFieldRow,
    HsNorms, SolveOptions,
};
use crate::output::{Table, TOOL_NAME, TOOL_VERSION};
use crate::potentials::PotentialSpec;
use crate::quadrature::{distance, SphereGrid, VolumeGrid};
use crate::radial::{
    bound_state_count, cross_section_single, phase_shift, s_wave_bound_states,
    verify_eigen_correspondence, EigenCorrespondence, PhaseShiftTable, RadialOptions,
    SingleCrossSection,
};
use crate::smatrix::{assemble_s, assemble_t, eigendecompose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub status: Status,
    /// Worst value over all energies; NaN when nothing was measured.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {:<34} value={:.3e} threshold={:.1e}  {}",
            self.status.label(),
            self.id,
            self.name,
            self.value,
            self.threshold,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSizes {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub r_max: f64,
}

/// Everything measured at one energy of the main potential.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyRecord {
    pub lambda: f64,
    pub grid: GridSizes,
    pub config_hash: String,
    /// Set when the energy was refused or a stage failed.
    pub error: Option<String>,
    pub metrics: Option<ScatterMetrics>,
    pub coarse_grid: Option<GridSizes>,
    pub coarse_unitarity_defect: Option<f64>,
    pub eigen: Option<EigenCorrespondence>,
    pub sigma_single: Option<SingleCrossSection>,
    /// `σ_double / (4π σ_single)`.
    pub sigma_ratio_over_4pi: Option<f64>,
    pub farfield: Vec<FarFieldRow>,
    pub hs: Option<HsNorms>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BornRecord {
    pub strength: f64,
    pub screening: f64,
    pub lambda: f64,
    pub grid: GridSizes,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRecord {
    pub lambda: f64,
    pub delta: f64,
    pub closed_form: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRecord {
    pub depth: f64,
    pub grid: GridSizes,
    pub kappas_3d: Vec<f64>,
    pub kappas_radial: Vec<f64>,
    /// Radial levels counted over `ℓ ≤ 2`.
    pub radial_levels: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrivialRecord {
    pub lambda: f64,
    pub grid: GridSizes,
    pub max_abs_f: f64,
    pub max_abs_s_minus_i: f64,
    pub max_abs_nu_minus_1: f64,
    pub sigma: f64,
    pub max_abs_delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub records: Vec<EnergyRecord>,
    pub born: Option<BornRecord>,
    pub radial_oracle: Vec<OracleRecord>,
    pub bound_states: Vec<BoundRecord>,
    pub trivial: Option<TrivialRecord>,
    pub criteria: Vec<Criterion>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.status != Status::Fail)
    }

    pub fn criteria_table(&self) -> Table {
        let mut t = Table::new("criteria", &["id", "status", "value", "threshold"]);
        for c in &self.criteria {
            let s = match c.status {
                Status::Pass => 1.0,
                Status::Fail => 0.0,
                Status::Skipped => -1.0,
            };
            t.push(vec![c.id as f64, s, c.value, c.threshold]);
        }
        t
    }
}

/// Accumulates per-energy outcomes of one criterion.
struct Tally {
    worst: f64,
    failed: bool,
    measured: bool,
    notes: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Self {
            worst: f64::NAN,
            failed: false,
            measured: false,
            notes: Vec::new(),
        }
    }

    fn record(&mut self, value: f64, pass: bool) {
        self.measured = true;
        self.worst = if self.worst.is_nan() {
            value
        } else {
            self.worst.max(value)
        };
        self.failed |= !pass || value.is_nan();
    }

    fn missing(&mut self, why: String) {
        self.failed = true;
        self.notes.push(why);
    }

    fn finish(self, id: u32, name: &str, threshold: f64, detail: String) -> Criterion {
        let status = if self.failed {
            Status::Fail
        } else if self.measured {
            Status::Pass
        } else {
            Status::Skipped
        };
        let mut parts = vec![detail];
        parts.extend(self.notes);
        parts.retain(|s| !s.is_empty());
        Criterion {
            id,
            name: name.to_string(),
            status,
            value: self.worst,
            threshold,
            detail: parts.join("; "),
        }
    }
}

fn skipped(id: u32, name: &str, threshold: f64, why: &str) -> Criterion {
    Criterion {
        id,
        name: name.to_string(),
        status: Status::Skipped,
        value: f64::NAN,
        threshold,
        detail: why.to_string(),
    }
}

fn sizes(g: &VolumeGrid) -> GridSizes {
    GridSizes {
        n_r: g.n_r,
        n_theta: g.n_theta,
        n_phi: g.n_phi,
        r_max: g.r_max,
    }
}

/// Runs every enabled check. Pipeline failures at one energy are recorded
/// and count against the criteria that needed that energy; configuration
/// errors propagate.
pub fn run_verification(cfg: &RunConfig) -> Result<VerificationReport> {
    let hash = cfg.hash();
    let p = cfg.build_potential()?;
    let grid = cfg.volume_grid(&p)?;
    let sphere = cfg.sphere_grid()?;
    let lambdas = cfg.lambda_list()?;
    let radial = p.spherically_symmetric;
    let opts = cfg.radial_options();

    let mut records = Vec::new();
    for &lambda in &lambdas {
        records.push(energy_record(cfg, &p, &grid, &sphere, lambda, &hash, &opts));
    }

    let mut criteria = Vec::new();
    let mut notes = vec![
        "partial-wave S-matrix uses S_l = exp(2i delta_l); distances under the literal exp(delta_l) are listed per degree".to_string(),
    ];

    // 1, 2: exact spectral identities
    let mut c1 = Tally::new();
    let mut c2 = Tally::new();
    let mut c3 = Tally::new();
    let mut c4 = Tally::new();
    let mut c5 = Tally::new();
    let mut c6 = Tally::new();
    let mut c9 = Tally::new();
    for r in &records {
        let Some(m) = &r.metrics else {
            let why = format!(
                "lambda={}: {}",
                r.lambda,
                r.error.as_deref().unwrap_or("no result")
            );
            for t in [&mut c1, &mut c2, &mut c3, &mut c9] {
                t.missing(why.clone());
            }
            if radial {
                for t in [&mut c4, &mut c5, &mut c6] {
                    t.missing(why.clone());
                }
            }
            continue;
        };
        c1.record(
            m.reconstruction_error,
            m.reconstruction_error <= cfg.tol_ergodic,
        );
        c2.record(m.parseval_gap, m.parseval_gap <= cfg.tol_parseval);

        let mut ok = m.unitarity_defect <= cfg.tol_unitarity;
        if cfg.check_refinement {
            match r.coarse_unitarity_defect {
                Some(coarse) => {
                    let decreases =
                        coarse > m.unitarity_defect || (coarse == 0.0 && m.unitarity_defect == 0.0);
                    if !decreases {
                        c3.notes.push(format!(
                            "lambda={}: defect {:.3e} at the finer grid is not below {:.3e} at the coarser",
                            r.lambda, m.unitarity_defect, coarse
                        ));
                    }
                    ok &= decreases;
                }
                None => c3.missing(format!("lambda={}: coarse run failed", r.lambda)),
            }
        }
        c3.record(m.unitarity_defect, ok);

        if radial {
            match &r.eigen {
                Some(e) if cfg.check_eigen => {
                    if !e.multiplicities_ok {
                        let got: Vec<usize> = e.records.iter().map(|d| d.multiplicity).collect();
                        c4.notes
                            .push(format!("lambda={}: multiplicities {:?}", r.lambda, got));
                    }
                    c4.record(
                        e.max_distance,
                        e.max_distance <= cfg.tol_eigen && e.multiplicities_ok,
                    );
                }
                None if cfg.check_eigen => {
                    c4.missing(format!("lambda={}: correspondence not computed", r.lambda))
                }
                _ => {}
            }
            match (r.sigma_ratio_over_4pi, &r.sigma_single) {
                (Some(ratio), Some(single)) => {
                    let dev = (ratio - 1.0).abs();
                    c5.record(dev, dev <= cfg.tol_ratio);
                    let gap = single.relative_gap();
                    c6.record(gap, gap <= cfg.tol_partial_wave);
                }
                _ => {
                    c5.missing(format!("lambda={}: radial cross section missing", r.lambda));
                    c6.missing(format!("lambda={}: radial cross section missing", r.lambda));
                }
            }
        }

        if cfg.check_farfield {
            let v: Vec<f64> = r.farfield.iter().map(|f| f.scaled_residual).collect();
            let all_zero = v.iter().all(|x| *x == 0.0);
            let decreasing = v.windows(2).all(|w| w[1] < w[0]);
            // value: last-to-first ratio
            let ratio = match (v.first(), v.last()) {
                (Some(a), Some(b)) if *a > 0.0 => b / a,
                _ => 0.0,
            };
            if v.len() < 2 {
                c9.missing(format!("lambda={}: fewer than two probe radii", r.lambda));
            } else {
                c9.record(ratio, all_zero || decreasing);
            }
        }
    }

    criteria.push(c1.finish(1, "ergodic identity", cfg.tol_ergodic, String::new()));
    criteria.push(c2.finish(2, "parseval pair", cfg.tol_parseval, String::new()));
    let refine = if cfg.check_refinement {
        let (a, b, c) = cfg.coarse_sizes();
        format!("refinement against ({a},{b},{c})")
    } else {
        "refinement not requested".to_string()
    };
    criteria.push(c3.finish(3, "unitarity", cfg.tol_unitarity, refine));
    let nonradial = "potential is not spherically symmetric";
    if radial && cfg.check_eigen {
        let detail = format!("l <= {}, multiplicities 2l+1", cfg.eigen_max_ell);
        criteria.push(c4.finish(4, "eigenvalue correspondence", cfg.tol_eigen, detail));
    } else {
        let why = if radial { "not requested" } else { nonradial };
        criteria.push(skipped(4, "eigenvalue correspondence", cfg.tol_eigen, why));
    }
    if radial {
        criteria.push(c5.finish(
            5,
            "cross-section convention",
            cfg.tol_ratio,
            "|sigma_double/(4 pi sigma_single) - 1|".into(),
        ));
        criteria.push(c6.finish(
            6,
            "partial-wave consistency",
            cfg.tol_partial_wave,
            String::new(),
        ));
    } else {
        criteria.push(skipped(
            5,
            "cross-section convention",
            cfg.tol_ratio,
            nonradial,
        ));
        criteria.push(skipped(
            6,
            "partial-wave consistency",
            cfg.tol_partial_wave,
            nonradial,
        ));
    }

    let born = if cfg.check_born {
        let b = born_check(cfg)?;
        let pass = b.max_relative_error <= cfg.tol_born;
        criteria.push(Criterion {
            id: 7,
            name: "born limit".into(),
            status: if pass { Status::Pass } else { Status::Fail },
            value: b.max_relative_error,
            threshold: cfg.tol_born,
            detail: format!(
                "Yukawa g={} mu={} lambda={} grid ({},{},{})",
                b.strength, b.screening, b.lambda, b.grid.n_r, b.grid.n_theta, b.grid.n_phi
            ),
        });
        Some(b)
    } else {
        criteria.push(skipped(7, "born limit", cfg.tol_born, "not requested"));
        None
    };

    let radial_oracle = if cfg.check_radial_oracle {
        let rows = radial_oracle(cfg, &opts)?;
        let mut t = Tally::new();
        for r in &rows {
            t.record(r.error, r.error <= cfg.tol_radial);
        }
        let detail = format!(
            "square well V0={} a={}",
            cfg.oracle_depth, cfg.oracle_radius
        );
        criteria.push(t.finish(8, "radial solver accuracy", cfg.tol_radial, detail));
        rows
    } else {
        criteria.push(skipped(
            8,
            "radial solver accuracy",
            cfg.tol_radial,
            "not requested",
        ));
        Vec::new()
    };

    if cfg.check_farfield {
        let radii: Vec<String> = cfg.farfield_radii.iter().map(|r| r.to_string()).collect();
        let detail = format!(
            "strictly decreasing over R = {}; value is last/first",
            radii.join(", ")
        );
        criteria.push(c9.finish(9, "far field", 1.0, detail));
    } else {
        criteria.push(skipped(9, "far field", 1.0, "not requested"));
    }

    let bound_states = if cfg.check_boundstates {
        let rows = bound_check(cfg, &opts)?;
        let counts: Vec<usize> = rows.iter().map(|r| r.kappas_3d.len()).collect();
        let agree = rows.iter().all(|r| r.kappas_3d.len() == r.radial_levels);
        let pass = counts == [0, 1] && agree;
        let detail = format!(
            "square well a={}: V0 = {:?} give {:?} states (radial oracle {:?})",
            cfg.oracle_radius,
            cfg.bound_depths,
            counts,
            rows.iter().map(|r| r.radial_levels).collect::<Vec<_>>()
        );
        criteria.push(Criterion {
            id: 10,
            name: "bound-state threshold".into(),
            status: if pass { Status::Pass } else { Status::Fail },
            value: counts.iter().sum::<usize>() as f64,
            threshold: 1.0,
            detail,
        });
        if let Some(r) = rows
            .iter()
            .find(|r| r.kappas_3d.len() == 1 && r.kappas_radial.len() == 1)
        {
            notes.push(format!(
                "bound state at V0={}: kappa {:.6} (3D) vs {:.6} (radial)",
                r.depth, r.kappas_3d[0], r.kappas_radial[0]
            ));
        }
        rows
    } else {
        criteria.push(skipped(10, "bound-state threshold", 1.0, "not requested"));
        Vec::new()
    };

    let trivial = if cfg.check_trivial {
        let t = trivial_check(cfg, lambdas[0], &opts)?;
        let worst = [
            t.max_abs_f,
            t.max_abs_s_minus_i,
            t.max_abs_nu_minus_1,
            t.sigma,
            t.max_abs_delta,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        criteria.push(Criterion {
            id: 11,
            name: "trivial potential".into(),
            status: if worst <= cfg.tol_trivial {
                Status::Pass
            } else {
                Status::Fail
            },
            value: worst,
            threshold: cfg.tol_trivial,
            detail: "max of |f|, |S - I|, |nu - 1|, sigma, |delta|".into(),
        });
        Some(t)
    } else {
        criteria.push(skipped(
            11,
            "trivial potential",
            cfg.tol_trivial,
            "not requested",
        ));
        None
    };

    Ok(VerificationReport {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        config_hash: hash,
        records,
        born,
        radial_oracle,
        bound_states,
        trivial,
        criteria,
        notes,
    })
}

fn energy_record(
    cfg: &RunConfig,
    p: &PotentialSpec,
    grid: &VolumeGrid,
    sphere: &SphereGrid,
    lambda: f64,
    hash: &str,
    opts: &RadialOptions,
) -> EnergyRecord {
    let mut rec = EnergyRecord {
        lambda,
        grid: sizes(grid),
        config_hash: hash.to_string(),
        error: None,
        metrics: None,
        coarse_grid: None,
        coarse_unitarity_defect: None,
        eigen: None,
        sigma_single: None,
        sigma_ratio_over_4pi: None,
        farfield: Vec::new(),
        hs: None,
    };
    if let Err(e) = fill_energy_record(cfg, p, grid, sphere, opts, &mut rec) {
        rec.error = Some(e.to_string());
    }
    rec
}

fn fill_energy_record(
    cfg: &RunConfig,
    p: &PotentialSpec,
    grid: &VolumeGrid,
    sphere: &SphereGrid,
    opts: &RadialOptions,
    rec: &mut EnergyRecord,
) -> Result<()> {
    let lambda = rec.lambda;
    rec.hs = Some(hs_norms(p, grid, lambda)?);
    let run = run_energy(
        p,
        grid,
        sphere,
        lambda,
        cfg.diagonal_rule,
        cfg.exceptional_ratio,
    )?;
    rec.metrics = Some(run.metrics.clone());

    if cfg.check_farfield {
        rec.farfield = farfield_check(
            &run.wave,
            &run.amplitude,
            p.support_radius,
            &cfg.farfield_radii,
        )?;
    }

    if p.spherically_symmetric {
        let table = PhaseShiftTable::compute(p, lambda, opts)?;
        let single = cross_section_single(&table)?;
        let sd = run.metrics.sigma_double;
        let expected = 4.0 * PI * single.partial_wave;
        rec.sigma_ratio_over_4pi = Some(if sd == 0.0 && expected == 0.0 {
            1.0
        } else {
            sd / expected
        });
        rec.sigma_single = Some(single);
        if cfg.check_eigen {
            rec.eigen = Some(verify_eigen_correspondence(
                &run.spectrum,
                &table,
                cfg.eigen_max_ell,
            )?);
        }
    }
    drop(run);

    if cfg.check_refinement {
        let (n_r, n_t, n_p) = cfg.coarse_sizes();
        let coarse = VolumeGrid::build(grid.r_max, n_r, n_t, n_p)?;
        let cs = SphereGrid::new(n_t, n_p)?;
        rec.coarse_grid = Some(sizes(&coarse));
        let k = assemble_kernel(p, &coarse, lambda, cfg.diagonal_rule)?;
        let w = solve_modified_ls(
            &k,
            &cs,
            SolveOptions {
                exceptional_ratio: cfg.exceptional_ratio,
            },
        )?;
        let f = scattering_amplitude(&w, &cs)?;
        rec.coarse_unitarity_defect = Some(assemble_s(&assemble_t(&f)?, &cs)?.unitarity_defect);
    }
    Ok(())
}

fn born_check(cfg: &RunConfig) -> Result<BornRecord> {
    let p = PotentialSpec::yukawa(cfg.born_strength, cfg.born_screening)?;
    let (n_r, n_t, n_p) = cfg.born_sizes();
    let grid = VolumeGrid::build(p.support_radius, n_r, n_t, n_p)?;
    let sphere = SphereGrid::new(n_t, n_p)?;
    let lambda = cfg.born_lambda;
    let k = assemble_kernel(&p, &grid, lambda, cfg.diagonal_rule)?;
    let w = solve_modified_ls(
        &k,
        &sphere,
        SolveOptions {
            exceptional_ratio: cfg.exceptional_ratio,
        },
    )?;
    let f = scattering_amplitude(&w, &sphere)?;
    let kw = lambda.sqrt();
    let mut worst = 0.0f64;
    for ((a, b), v) in f.values.indexed_iter() {
        let q = kw * distance(sphere.directions[a], sphere.directions[b]);
        let exact = born_closed_form(&p, q).expect("Yukawa has a closed form");
        worst = worst.max((v - exact).norm() / exact.abs());
    }
    Ok(BornRecord {
        strength: cfg.born_strength,
        screening: cfg.born_screening,
        lambda,
        grid: sizes(&grid),
        max_relative_error: worst,
    })
}

/// `δ₀ = arctan((k/K) tan(Ka)) − ka` for the square well, modulo π.
pub fn square_well_s_wave(depth: f64, radius: f64, lambda: f64) -> f64 {
    let k = lambda.sqrt();
    let kk = (lambda + depth).sqrt();
    (k / kk * (kk * radius).tan()).atan() - k * radius
}

/// Distance on the circle of period π.
fn mod_pi_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn radial_oracle(cfg: &RunConfig, opts: &RadialOptions) -> Result<Vec<OracleRecord>> {
    let p = PotentialSpec::square_well(cfg.oracle_depth, cfg.oracle_radius)?;
    cfg.oracle_lambdas
        .iter()
        .map(|&lambda| {
            let delta = phase_shift(&p, 0, lambda, opts)?;
            let closed_form = square_well_s_wave(cfg.oracle_depth, cfg.oracle_radius, lambda);
            Ok(OracleRecord {
                lambda,
                delta,
                closed_form,
                error: mod_pi_distance(delta, closed_form),
            })
        })
        .collect()
}

fn bound_check(cfg: &RunConfig, opts: &RadialOptions) -> Result<Vec<BoundRecord>> {
    let mut out = Vec::new();
    for &depth in &cfg.bound_depths {
        let p = PotentialSpec::square_well(depth, cfg.oracle_radius)?;
        let grid = VolumeGrid::build(
            cfg.oracle_radius,
            cfg.bound_n_r,
            cfg.bound_n_theta,
            cfg.bound_n_phi,
        )?;
        let hi = depth.sqrt();
        let lo = cfg.kappa_min.min(0.5 * hi);
        let kappas_3d =
            bound_state_scan(&p, &grid, (lo, hi), cfg.kappa_samples, cfg.diagonal_rule)?
                .into_iter()
                .map(|b| b.kappa)
                .collect();
        let kappas_radial = s_wave_bound_states(&p, (lo, hi), 4 * cfg.kappa_samples, opts)?;
        let radial_levels = (0..=2)
            .map(|l| bound_state_count(&p, l, opts))
            .sum::<Result<usize>>()?;
        out.push(BoundRecord {
            depth,
            grid: sizes(&grid),
            kappas_3d,
            kappas_radial,
            radial_levels,
        });
    }
    Ok(out)
}

fn trivial_check(cfg: &RunConfig, lambda: f64, opts: &RadialOptions) -> Result<TrivialRecord> {
    let p = PotentialSpec::square_well(0.0, 1.0)?;
    let grid = VolumeGrid::build(1.0, cfg.trivial_n_r, cfg.trivial_n_theta, cfg.trivial_n_phi)?;
    let sphere = SphereGrid::new(cfg.trivial_n_theta, cfg.trivial_n_phi)?;
    let run = run_energy(
        &p,
        &grid,
        &sphere,
        lambda,
        cfg.diagonal_rule,
        cfg.exceptional_ratio,
    )?;
    let max_abs = |it: &mut dyn Iterator<Item = C64>| it.map(|v| v.norm()).fold(0.0, f64::max);
    let s = assemble_s(&assemble_t(&run.amplitude)?, &sphere)?;
    let eye = ndarray::Array2::<C64>::eye(sphere.len());
    let spectrum = eigendecompose(&s)?;
    let table = PhaseShiftTable::compute(&p, lambda, opts)?;
    Ok(TrivialRecord {
        lambda,
        grid: sizes(&grid),
        max_abs_f: max_abs(&mut run.amplitude.values.iter().cloned()),
        max_abs_s_minus_i: max_abs(&mut (&s.s - &eye).into_iter()),
        max_abs_nu_minus_1: max_abs(&mut spectrum.eigenvalues.iter().map(|v| v - 1.0)),
        sigma: run
            .metrics
            .sigma_double
            .abs()
            .max(run.metrics.sigma_spectral.abs()),
        max_abs_delta: table.deltas.iter().map(|d| d.abs()).fold(0.0, f64::max),
    })
}
