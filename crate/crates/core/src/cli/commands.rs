//! The four subcommands. Each returns whether its numeric checks passed.

use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use super::pipeline::{run_energy, ScatterMetrics};
use super::verify::run_verification;
use crate::amplitude::angles;
use crate::error::{Error, Result};
use crate::ls_solver::bound_state_scan;
use crate::output::{Format, Table, TOOL_NAME, TOOL_VERSION};
use crate::quadrature::{dot, dump_sphere, dump_volume};
use crate::radial::{
    bound_state_count, cross_section_single, s_wave_bound_states, PhaseShiftTable,
};
use crate::smatrix::assign_degrees;

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub out: &'a Path,
    pub format: Format,
    pub hash: String,
}

impl Context<'_> {
    fn write(&self, t: &Table) -> Result<()> {
        t.write_to(self.out, self.format, &self.hash)?;
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        std::fs::create_dir_all(self.out)?;
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(self.out.join(name), text + "\n")?;
        Ok(())
    }
}

pub fn dump_grids(ctx: &Context) -> Result<()> {
    let p = ctx.cfg.build_potential()?;
    std::fs::create_dir_all(ctx.out)?;
    std::fs::write(
        ctx.out.join("grid_sphere.txt"),
        dump_sphere(&ctx.cfg.sphere_grid()?),
    )?;
    std::fs::write(
        ctx.out.join("grid_volume.txt"),
        dump_volume(&ctx.cfg.volume_grid(&p)?),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct EnergySummary {
    index: usize,
    lambda: f64,
    status: &'static str,
    diagnostic: Option<String>,
    metrics: Option<ScatterMetrics>,
}

#[derive(Serialize)]
struct ScatterSummary<'a> {
    tool: &'a str,
    version: &'a str,
    config_hash: &'a str,
    grid: [usize; 3],
    r_max: f64,
    energies: Vec<EnergySummary>,
}

pub fn scatter(ctx: &Context) -> Result<bool> {
    let cfg = ctx.cfg;
    let p = cfg.build_potential()?;
    let grid = cfg.volume_grid(&p)?;
    let sphere = cfg.sphere_grid()?;
    let mut sigma = Table::new(
        "cross_sections",
        &[
            "lambda",
            "sigma_double",
            "sigma_spectral",
            "unitarity_defect",
            "sigma_min",
            "exceptional",
        ],
    );
    let mut energies = Vec::new();
    let mut all_ok = true;
    for (i, lambda) in cfg.lambda_list()?.into_iter().enumerate() {
        let run = match run_energy(
            &p,
            &grid,
            &sphere,
            lambda,
            cfg.diagonal_rule,
            cfg.exceptional_ratio,
        ) {
            Ok(r) => r,
            Err(e @ Error::Exceptional { .. }) => {
                eprintln!("lambda={lambda}: {e}");
                let sigma_min = match e {
                    Error::Exceptional { sigma_min, .. } => sigma_min,
                    _ => unreachable!(),
                };
                sigma.push(vec![lambda, f64::NAN, f64::NAN, f64::NAN, sigma_min, 1.0]);
                energies.push(EnergySummary {
                    index: i,
                    lambda,
                    status: "exceptional",
                    diagnostic: Some(e.to_string()),
                    metrics: None,
                });
                all_ok = false;
                continue;
            }
            Err(e) => return Err(e),
        };
        let m = &run.metrics;
        ctx.write(&run.amplitude.to_table(&format!("amplitude_{i:03}")))?;
        let ell = if p.spherically_symmetric {
            assign_degrees(&run.spectrum, cfg.eigen_max_ell).ok()
        } else {
            None
        };
        let mut spec = run.spectrum.to_table(ell.as_deref());
        spec.name = format!("spectrum_{i:03}");
        ctx.write(&spec)?;
        ctx.write(&dcs_table(&run.amplitude, i))?;
        sigma.push(vec![
            lambda,
            m.sigma_double,
            m.sigma_spectral,
            m.unitarity_defect,
            m.sigma_min,
            0.0,
        ]);
        energies.push(EnergySummary {
            index: i,
            lambda,
            status: "ok",
            diagnostic: None,
            metrics: Some(run.metrics),
        });
    }
    ctx.write(&sigma)?;
    ctx.write_json(
        "summary.json",
        &ScatterSummary {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            config_hash: &ctx.hash,
            grid: [grid.n_r, grid.n_theta, grid.n_phi],
            r_max: grid.r_max,
            energies,
        },
    )?;
    Ok(all_ok)
}

/// Plot-ready `|f|²` against scattering angle for the first incident direction.
fn dcs_table(f: &crate::amplitude::AmplitudeMatrix, index: usize) -> Table {
    let mut t = Table::new(
        &format!("dcs_{index:03}"),
        &["lambda", "theta", "cos_theta", "phi_out", "dcs"],
    );
    let incident = f.directions[0];
    let mut rows: Vec<Vec<f64>> = (0..f.dim())
        .map(|a| {
            let c = dot(f.directions[a], incident).clamp(-1.0, 1.0);
            vec![
                f.lambda,
                c.acos(),
                c,
                angles(f.directions[a]).1,
                f.values[(a, 0)].norm_sqr(),
            ]
        })
        .collect();
    rows.sort_by(|x, y| x[1].total_cmp(&y[1]).then(x[3].total_cmp(&y[3])));
    for r in rows {
        t.push(r);
    }
    t
}

pub fn phaseshifts(ctx: &Context) -> Result<bool> {
    let cfg = ctx.cfg;
    let p = cfg.build_potential()?;
    if !p.spherically_symmetric {
        return Err(Error::NonRadial);
    }
    let opts = cfg.radial_options();
    let mut sigma = Table::new(
        "cross_sections_single",
        &[
            "lambda",
            "sigma_angular",
            "sigma_partial_wave",
            "relative_gap",
            "l_max",
        ],
    );
    let mut ok = true;
    for (i, lambda) in cfg.lambda_list()?.into_iter().enumerate() {
        let table = PhaseShiftTable::compute(&p, lambda, &opts)?;
        let mut t = table.to_table();
        t.name = format!("phaseshifts_{i:03}");
        ctx.write(&t)?;
        let s = cross_section_single(&table)?;
        ok &= s.relative_gap() <= cfg.tol_partial_wave;
        sigma.push(vec![
            lambda,
            s.angular,
            s.partial_wave,
            s.relative_gap(),
            table.l_max as f64,
        ]);
    }
    ctx.write(&sigma)?;
    Ok(ok)
}

pub fn boundstates(ctx: &Context) -> Result<bool> {
    let cfg = ctx.cfg;
    let p = cfg.build_potential()?;
    let grid = cfg.volume_grid(&p)?;
    let lo = cfg.kappa_min;
    let hi = match cfg.kappa_max {
        Some(h) => h,
        None => p
            .sample(&grid)?
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .sqrt(),
    };
    let mut t = Table::new("boundstates", &["index", "kappa", "energy", "sigma_min"]);
    let found = if hi > lo {
        bound_state_scan(&p, &grid, (lo, hi), cfg.kappa_samples, cfg.diagonal_rule)?
    } else {
        Vec::new()
    };
    for (i, b) in found.iter().enumerate() {
        t.push(vec![i as f64, b.kappa, b.energy, b.sigma_min]);
    }
    ctx.write(&t)?;
    println!("{} bound state(s) for kappa in [{lo}, {hi}]", found.len());
    if p.spherically_symmetric {
        let opts = cfg.radial_options();
        let mut counts = Table::new("boundstates_radial_counts", &["ell", "count"]);
        for l in 0..=2 {
            counts.push(vec![l as f64, bound_state_count(&p, l, &opts)? as f64]);
        }
        ctx.write(&counts)?;
        let mut s = Table::new("boundstates_radial_s_wave", &["index", "kappa", "energy"]);
        if hi > lo {
            for (i, k) in s_wave_bound_states(&p, (lo, hi), 4 * cfg.kappa_samples, &opts)?
                .into_iter()
                .enumerate()
            {
                s.push(vec![i as f64, k, -k * k]);
            }
        }
        ctx.write(&s)?;
    }
    Ok(true)
}

pub fn verify(ctx: &Context) -> Result<bool> {
    let report = run_verification(ctx.cfg)?;
    for c in &report.criteria {
        println!("{}", c.line());
    }
    ctx.write_json("verification.json", &report)?;
    ctx.write(&report.criteria_table())?;
    Ok(report.passed())
}
