//! Flat TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ls_solver::{DiagonalRule, EXCEPTIONAL_RATIO};
use crate::output::Format;
use crate::potentials::{PotentialSpec, DEFAULT_TRUNCATION};
use crate::quadrature::{SphereGrid, VolumeGrid};
use crate::radial::{RadialOptions, DEFAULT_L_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialName {
    Gaussian,
    GaussianOffCenter,
    Yukawa,
    SquareWell,
    Tabulated,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub potential: PotentialName,
    pub strength: f64,
    pub width: f64,
    pub screening: f64,
    pub depth: f64,
    pub radius: f64,
    pub center: [f64; 3],
    /// Two-column file of radius and value, relative to the config file.
    pub table: Option<PathBuf>,
    pub truncation: f64,

    pub lambdas: Vec<f64>,
    pub lambda_start: Option<f64>,
    pub lambda_stop: Option<f64>,
    pub lambda_step: Option<f64>,

    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Defaults to the potential's support radius.
    pub r_max: Option<f64>,
    pub diagonal_rule: DiagonalRule,
    pub exceptional_ratio: f64,

    pub l_max: usize,
    pub radial_step: Option<f64>,
    pub match_wavelengths: f64,

    pub kappa_min: f64,
    /// Defaults to `√max|V|`.
    pub kappa_max: Option<f64>,
    pub kappa_samples: usize,

    pub tol_ergodic: f64,
    pub tol_parseval: f64,
    pub tol_unitarity: f64,
    pub tol_eigen: f64,
    pub eigen_max_ell: usize,
    pub tol_ratio: f64,
    pub tol_partial_wave: f64,
    pub tol_born: f64,
    pub tol_radial: f64,
    pub tol_trivial: f64,

    pub check_refinement: bool,
    pub check_eigen: bool,
    pub check_born: bool,
    pub check_radial_oracle: bool,
    pub check_farfield: bool,
    pub check_boundstates: bool,
    pub check_trivial: bool,

    /// Half-resolution grid for the refinement check; defaults to half of
    /// every count, rounded so `n_phi` stays even.
    pub coarse_n_r: Option<usize>,
    pub coarse_n_theta: Option<usize>,
    pub coarse_n_phi: Option<usize>,

    pub born_strength: f64,
    pub born_screening: f64,
    pub born_lambda: f64,
    pub born_n_r: Option<usize>,
    pub born_n_theta: Option<usize>,
    pub born_n_phi: Option<usize>,

    pub oracle_depth: f64,
    pub oracle_radius: f64,
    pub oracle_lambdas: Vec<f64>,

    pub farfield_radii: Vec<f64>,

    pub bound_depths: [f64; 2],
    pub bound_n_r: usize,
    pub bound_n_theta: usize,
    pub bound_n_phi: usize,

    pub trivial_n_r: usize,
    pub trivial_n_theta: usize,
    pub trivial_n_phi: usize,

    pub out_dir: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: PotentialName::Gaussian,
            strength: -2.0,
            width: 1.0,
            screening: 1.0,
            depth: 1.0,
            radius: 1.0,
            center: [0.0; 3],
            table: None,
            truncation: DEFAULT_TRUNCATION,
            lambdas: Vec::new(),
            lambda_start: None,
            lambda_stop: None,
            lambda_step: None,
            n_r: 24,
            n_theta: 12,
            n_phi: 24,
            r_max: None,
            diagonal_rule: DiagonalRule::default(),
            exceptional_ratio: EXCEPTIONAL_RATIO,
            l_max: DEFAULT_L_MAX,
            radial_step: None,
            match_wavelengths: 2.0,
            kappa_min: 0.02,
            kappa_max: None,
            kappa_samples: 24,
            tol_ergodic: 1e-10,
            tol_parseval: 1e-10,
            tol_unitarity: 1e-3,
            tol_eigen: 1e-2,
            eigen_max_ell: 4,
            tol_ratio: 1e-2,
            tol_partial_wave: 1e-8,
            tol_born: 2e-2,
            tol_radial: 1e-6,
            tol_trivial: 1e-12,
            check_refinement: true,
            check_eigen: true,
            check_born: true,
            check_radial_oracle: true,
            check_farfield: true,
            check_boundstates: true,
            check_trivial: true,
            coarse_n_r: None,
            coarse_n_theta: None,
            coarse_n_phi: None,
            born_strength: 0.01,
            born_screening: 1.0,
            born_lambda: 1.0,
            born_n_r: None,
            born_n_theta: None,
            born_n_phi: None,
            oracle_depth: 3.0,
            oracle_radius: 1.0,
            oracle_lambdas: vec![0.5, 1.0, 2.0],
            farfield_radii: vec![20.0, 40.0, 80.0],
            bound_depths: [2.0, 3.0],
            bound_n_r: 12,
            bound_n_theta: 6,
            bound_n_phi: 12,
            trivial_n_r: 8,
            trivial_n_theta: 4,
            trivial_n_phi: 8,
            out_dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates; a relative `table` path is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(t) = &cfg.table {
            if t.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.table = Some(base.join(t));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_list()?.is_empty() {
            return Err(config_err(
                "no energies: set `lambdas` or the lambda_start/stop/step triple",
            ));
        }
        for (name, n) in [
            ("n_r", self.n_r),
            ("n_theta", self.n_theta),
            ("n_phi", self.n_phi),
        ] {
            if n == 0 {
                return Err(config_err(format!("{name} must be positive")));
            }
        }
        if !self.n_phi.is_multiple_of(2) {
            return Err(config_err(format!(
                "n_phi must be even, got {}",
                self.n_phi
            )));
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0 && r.is_finite()) {
                return Err(config_err(format!("r_max must be positive, got {r}")));
            }
        }
        if !(self.kappa_min > 0.0) {
            return Err(config_err("kappa_min must be positive"));
        }
        if let Some(hi) = self.kappa_max {
            if !(hi > self.kappa_min) {
                return Err(config_err("kappa_max must exceed kappa_min"));
            }
        }
        if self.kappa_samples < 2 {
            return Err(config_err("kappa_samples must be at least 2"));
        }
        if self.farfield_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(config_err("farfield_radii must be positive"));
        }
        if self.oracle_lambdas.iter().any(|l| !(*l > 0.0)) || !(self.born_lambda > 0.0) {
            return Err(config_err("oracle energies must be positive"));
        }
        if self.potential == PotentialName::Tabulated && self.table.is_none() {
            return Err(config_err("potential = \"tabulated\" needs `table`"));
        }
        Ok(())
    }

    /// Explicit list, or `start, start+step, …` up to `stop` inclusive.
    pub fn lambda_list(&self) -> Result<Vec<f64>> {
        let triple = (self.lambda_start, self.lambda_stop, self.lambda_step);
        let list = match triple {
            (None, None, None) => self.lambdas.clone(),
            (Some(a), Some(b), Some(h)) => {
                if !self.lambdas.is_empty() {
                    return Err(config_err(
                        "give either `lambdas` or the range triple, not both",
                    ));
                }
                if !(h > 0.0 && b >= a) {
                    return Err(config_err("lambda range needs step > 0 and stop >= start"));
                }
                let n = ((b - a) / h * (1.0 + 1e-12)).floor() as usize;
                (0..=n).map(|i| a + i as f64 * h).collect()
            }
            _ => {
                return Err(config_err(
                    "lambda_start, lambda_stop and lambda_step go together",
                ))
            }
        };
        if let Some(l) = list.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(config_err(format!("energies must be positive, got {l}")));
        }
        Ok(list)
    }

    pub fn build_potential(&self) -> Result<PotentialSpec> {
        match self.potential {
            PotentialName::Gaussian => {
                PotentialSpec::gaussian_with_threshold(self.strength, self.width, self.truncation)
            }
            PotentialName::GaussianOffCenter => {
                PotentialSpec::gaussian_off_center(self.strength, self.width, self.center)
            }
            PotentialName::Yukawa => {
                PotentialSpec::yukawa_with_threshold(self.strength, self.screening, self.truncation)
            }
            PotentialName::SquareWell => PotentialSpec::square_well(self.depth, self.radius),
            PotentialName::Tabulated => {
                PotentialSpec::tabulated_from_file(self.table.as_deref().expect("validated"))
            }
            PotentialName::Zero => PotentialSpec::square_well(0.0, self.radius),
        }
    }

    pub fn r_max_for(&self, p: &PotentialSpec) -> f64 {
        self.r_max.unwrap_or(p.support_radius)
    }

    pub fn volume_grid(&self, p: &PotentialSpec) -> Result<VolumeGrid> {
        VolumeGrid::build(self.r_max_for(p), self.n_r, self.n_theta, self.n_phi)
    }

    pub fn sphere_grid(&self) -> Result<SphereGrid> {
        SphereGrid::new(self.n_theta, self.n_phi)
    }

    pub fn coarse_sizes(&self) -> (usize, usize, usize) {
        let half_even = |n: usize| (n / 2).max(2).div_ceil(2) * 2;
        (
            self.coarse_n_r.unwrap_or((self.n_r / 2).max(1)),
            self.coarse_n_theta.unwrap_or((self.n_theta / 2).max(2)),
            self.coarse_n_phi.unwrap_or(half_even(self.n_phi)),
        )
    }

    pub fn born_sizes(&self) -> (usize, usize, usize) {
        (
            self.born_n_r.unwrap_or(self.n_r),
            self.born_n_theta.unwrap_or(self.n_theta),
            self.born_n_phi.unwrap_or(self.n_phi),
        )
    }

    pub fn radial_options(&self) -> RadialOptions {
        RadialOptions {
            step: self.radial_step,
            match_wavelengths: self.match_wavelengths,
            l_max: self.l_max,
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring where and how output is
    /// written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        c.format = Format::Csv;
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_case() {
        let c = RunConfig::from_toml("lambdas = [1.0]").unwrap();
        assert_eq!((c.n_r, c.n_theta, c.n_phi), (24, 12, 24));
        assert_eq!(c.potential, PotentialName::Gaussian);
        assert_eq!(c.coarse_sizes(), (12, 6, 12));
    }

    #[test]
    fn range_triple_is_inclusive() {
        let c = RunConfig::from_toml("lambda_start = 0.5\nlambda_stop = 2.0\nlambda_step = 0.5")
            .unwrap();
        assert_eq!(c.lambda_list().unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "lambdas = [1.0]\nn_phi = 7",
            "lambdas = [-1.0]",
            "lambdas = []",
            "lambdas = [1.0]\nbogus_key = 3",
            "lambdas = [1.0]\nlambda_start = 1.0",
            "lambdas = [1.0]\npotential = \"tabulated\"",
            "lambdas = [1.0]\nkappa_min = 0.0",
        ] {
            assert!(
                matches!(RunConfig::from_toml(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn hash_ignores_output_settings_only() {
        let a = RunConfig::from_toml("lambdas = [1.0]").unwrap();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("elsewhere");
        b.format = Format::Json;
        assert_eq!(a.hash(), b.hash());
        b.n_r = 25;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
