//! Real short-range potentials on R³.
//!
//! Decaying potentials are hard-truncated at a support radius where
//! `|V| < threshold · |g|`, so every volume integral lives on a finite ball.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quadrature::{distance, norm, Vec3, VolumeGrid};

/// Relative truncation level used by the named constructors.
pub const DEFAULT_TRUNCATION: f64 = 1e-10;

/// Decay exponent offset used by [`decay_report`] when none is configured.
pub const DEFAULT_DECAY_DELTA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `g · exp(−r²/a²)`
    Gaussian { strength: f64, width: f64 },
    /// `g · exp(−μ r) / r`
    Yukawa { strength: f64, screening: f64 },
    /// `−V0` for `r < a`, zero outside.
    SquareWell { depth: f64, radius: f64 },
    /// Linear interpolation between `(radius, value)` samples.
    TabulatedRadial { radii: Vec<f64>, values: Vec<f64> },
    /// `g · exp(−|r − c|²/a²)`
    GaussianOffCenter {
        strength: f64,
        width: f64,
        center: Vec3,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub support_radius: f64,
    pub spherically_symmetric: bool,
}

impl PotentialSpec {
    pub fn gaussian(strength: f64, width: f64) -> Result<Self> {
        Self::gaussian_with_threshold(strength, width, DEFAULT_TRUNCATION)
    }

    pub fn gaussian_with_threshold(strength: f64, width: f64, threshold: f64) -> Result<Self> {
        check_positive("Gaussian width", width)?;
        check_threshold(threshold)?;
        check_finite("Gaussian strength", strength)?;
        Ok(Self {
            kind: PotentialKind::Gaussian { strength, width },
            support_radius: width * (-threshold.ln()).sqrt(),
            spherically_symmetric: true,
        })
    }

    pub fn yukawa(strength: f64, screening: f64) -> Result<Self> {
        Self::yukawa_with_threshold(strength, screening, DEFAULT_TRUNCATION)
    }

    pub fn yukawa_with_threshold(strength: f64, screening: f64, threshold: f64) -> Result<Self> {
        check_positive("Yukawa screening", screening)?;
        check_threshold(threshold)?;
        check_finite("Yukawa strength", strength)?;
        // e^{−μR}/R = threshold, decreasing in R; bracket and bisect
        let h = |r: f64| (-screening * r).exp() / r - threshold;
        let mut lo = 1e-12;
        let mut hi = 1.0 / screening;
        while h(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self {
            kind: PotentialKind::Yukawa {
                strength,
                screening,
            },
            support_radius: hi,
            spherically_symmetric: true,
        })
    }

    pub fn square_well(depth: f64, radius: f64) -> Result<Self> {
        check_positive("square-well radius", radius)?;
        check_finite("square-well depth", depth)?;
        Ok(Self {
            kind: PotentialKind::SquareWell { depth, radius },
            support_radius: radius,
            spherically_symmetric: true,
        })
    }

    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::InvalidPotential(
                "tabulated potential needs at least two (radius, value) pairs".into(),
            ));
        }
        if radii[0] < 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPotential(
                "tabulated radii must be non-negative and strictly increasing".into(),
            ));
        }
        if values.iter().chain(&radii).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential(
                "tabulated entries must be finite".into(),
            ));
        }
        let support_radius = *radii.last().unwrap();
        Ok(Self {
            kind: PotentialKind::TabulatedRadial { radii, values },
            support_radius,
            spherically_symmetric: true,
        })
    }

    /// Two whitespace-separated columns `radius value`; `#` starts a comment.
    pub fn tabulated_from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidPotential(format!(
                        "{}:{}: cannot parse '{s}'",
                        path.display(),
                        lineno + 1
                    ))
                })
            };
            if cols.len() != 2 {
                return Err(Error::InvalidPotential(format!(
                    "{}:{}: expected two columns",
                    path.display(),
                    lineno + 1
                )));
            }
            radii.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        Self::tabulated(radii, values)
    }

    pub fn gaussian_off_center(strength: f64, width: f64, center: Vec3) -> Result<Self> {
        check_positive("Gaussian width", width)?;
        check_finite("Gaussian strength", strength)?;
        Ok(Self {
            kind: PotentialKind::GaussianOffCenter {
                strength,
                width,
                center,
            },
            support_radius: norm(center) + width * (-DEFAULT_TRUNCATION.ln()).sqrt(),
            spherically_symmetric: false,
        })
    }

    /// Natural length scale: width, radius or screening length.
    pub fn length_scale(&self) -> f64 {
        match &self.kind {
            PotentialKind::Gaussian { width, .. } => *width,
            PotentialKind::GaussianOffCenter { width, .. } => *width,
            PotentialKind::Yukawa { screening, .. } => 1.0 / screening,
            PotentialKind::SquareWell { radius, .. } => *radius,
            PotentialKind::TabulatedRadial { radii, .. } => {
                let span = radii[radii.len() - 1] - radii[0];
                span / 10.0
            }
        }
    }

    /// Radii where the potential or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::SquareWell { radius, .. } => vec![*radius],
            _ => Vec::new(),
        }
    }

    /// The potential formula without truncation. `Err` for tabulated radii
    /// outside the table.
    pub fn raw(&self, r: Vec3) -> Result<f64> {
        match &self.kind {
            PotentialKind::GaussianOffCenter {
                strength,
                width,
                center,
            } => {
                let d = distance(r, *center);
                Ok(strength * (-(d / width).powi(2)).exp())
            }
            _ => self.raw_radial(norm(r)),
        }
    }

    /// Radial profile `V(|r|)` without truncation; only meaningful for
    /// spherically symmetric kinds.
    pub fn raw_radial(&self, r: f64) -> Result<f64> {
        Ok(match &self.kind {
            PotentialKind::Gaussian { strength, width } => strength * (-(r / width).powi(2)).exp(),
            PotentialKind::Yukawa {
                strength,
                screening,
            } => strength * (-screening * r).exp() / r,
            PotentialKind::SquareWell { depth, radius } => {
                if r < *radius {
                    -depth
                } else if r == *radius {
                    // midpoint of the jump, used only by the radial integrator
                    -0.5 * depth
                } else {
                    0.0
                }
            }
            PotentialKind::TabulatedRadial { radii, values } => interpolate(radii, values, r)?,
            PotentialKind::GaussianOffCenter { .. } => return Err(Error::NonRadial),
        })
    }

    /// `V(r)`, exactly zero beyond the support radius.
    pub fn evaluate(&self, r: Vec3) -> Result<f64> {
        if norm(r) > self.support_radius {
            return Ok(0.0);
        }
        self.raw(r)
    }

    /// Truncated radial profile.
    pub fn radial(&self, r: f64) -> Result<f64> {
        if !self.spherically_symmetric {
            return Err(Error::NonRadial);
        }
        if r > self.support_radius {
            return Ok(0.0);
        }
        self.raw_radial(r)
    }

    /// `(sign V, |V|^{1/2})` at `r`; `w · s² = V(r)`.
    pub fn sign_and_sqrt(&self, r: Vec3) -> Result<(f64, f64)> {
        Ok(sign_and_sqrt(self.evaluate(r)?))
    }

    /// Multiply the coupling by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        match &mut out.kind {
            PotentialKind::Gaussian { strength, .. }
            | PotentialKind::Yukawa { strength, .. }
            | PotentialKind::GaussianOffCenter { strength, .. } => *strength *= alpha,
            PotentialKind::SquareWell { depth, .. } => *depth *= alpha,
            PotentialKind::TabulatedRadial { values, .. } => {
                values.iter_mut().for_each(|v| *v *= alpha)
            }
        }
        out
    }

    /// `V` sampled at every node of `grid`.
    pub fn sample(&self, grid: &VolumeGrid) -> Result<Vec<f64>> {
        grid.nodes.iter().map(|&p| self.evaluate(p)).collect()
    }

    /// True when the coupling is zero, so `V ≡ 0` everywhere.
    pub fn is_identically_zero(&self) -> bool {
        match &self.kind {
            PotentialKind::Gaussian { strength, .. }
            | PotentialKind::Yukawa { strength, .. }
            | PotentialKind::GaussianOffCenter { strength, .. } => *strength == 0.0,
            PotentialKind::SquareWell { depth, .. } => *depth == 0.0,
            PotentialKind::TabulatedRadial { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn is_zero_on(&self, grid: &VolumeGrid) -> Result<bool> {
        Ok(self.sample(grid)?.iter().all(|&v| v == 0.0))
    }
}

pub fn sign_and_sqrt(v: f64) -> (f64, f64) {
    let w = if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    };
    (w, v.abs().sqrt())
}

fn interpolate(radii: &[f64], values: &[f64], r: f64) -> Result<f64> {
    let (min, max) = (radii[0], radii[radii.len() - 1]);
    if r < min || r > max {
        return Err(Error::OutOfTable {
            radius: r,
            min,
            max,
        });
    }
    let hi = radii.partition_point(|&x| x < r).max(1);
    let lo = hi - 1;
    let t = (r - radii[lo]) / (radii[hi] - radii[lo]);
    Ok(values[lo] + t * (values[hi] - values[lo]))
}

fn check_positive(what: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPotential(format!(
            "{what} must be positive, got {x}"
        )))
    }
}

fn check_finite(what: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPotential(format!("{what} must be finite")))
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidPotential(format!(
            "truncation threshold must lie in (0, 1), got {t}"
        )))
    }
}

/// `∫_{|s|<R} |r − s|^{-2} ds` for `|r| < R`.
pub fn ball_inverse_square(r: f64, big_r: f64) -> f64 {
    if r < 1e-12 * big_r {
        return 4.0 * PI * big_r;
    }
    2.0 * PI * (big_r + (big_r * big_r - r * r) / r * (r / big_r).atanh())
}

/// Quadrature estimate of `∬ |V(r)||V(s)| / |r − s|² dr ds`.
///
/// Singularity subtraction: `|V(r_i)|` is integrated against `|r_i − s|^{-2}`
/// exactly over the grid ball and its quadrature removed from the sum, so
/// only the smooth difference `|V(s)| − |V(r_i)|` meets the quadrature.
pub fn rollnik_norm_estimate(p: &PotentialSpec, grid: &VolumeGrid) -> Result<f64> {
    let v = p.sample(grid)?;
    let active: Vec<usize> = (0..grid.len()).filter(|&i| v[i] != 0.0).collect();
    let mut total = 0.0;
    for &i in &active {
        let (ri, wi, vi) = (grid.nodes[i], grid.weights[i], v[i].abs());
        let (mut row, mut flat) = (0.0, 0.0);
        for j in (0..grid.len()).filter(|&j| j != i) {
            let d = distance(ri, grid.nodes[j]);
            let wd = grid.weights[j] / (d * d);
            row += wd * v[j].abs();
            flat += wd;
        }
        total += wi * vi * (row + vi * (ball_inverse_square(norm(ri), grid.r_max) - flat));
    }
    if !total.is_finite() {
        return Err(Error::NonFinite(
            "Rollnik estimate diverged: potential not Rollnik or grid under-resolved".into(),
        ));
    }
    Ok(total)
}

/// Rows of `(|r|, |V(r)| · |r|^{3+δ})` along the +x axis, untruncated.
pub fn decay_report(p: &PotentialSpec, radii: &[f64], delta: f64) -> Result<Vec<(f64, f64)>> {
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(Error::Domain(format!(
                    "decay radii must be positive, got {r}"
                )));
            }
            let v = match &p.kind {
                PotentialKind::GaussianOffCenter { center, .. } => {
                    let c = norm(*center);
                    let dir = if c > 0.0 {
                        [center[0] / c, center[1] / c, center[2] / c]
                    } else {
                        [1.0, 0.0, 0.0]
                    };
                    p.raw([-r * dir[0], -r * dir[1], -r * dir[2]])?
                }
                _ => p.raw_radial(r)?,
            };
            Ok((r, v.abs() * r.powf(3.0 + delta)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_examples() {
        let well = PotentialSpec::square_well(2.0, 1.0).unwrap();
        assert_eq!(well.evaluate([0.5, 0.0, 0.0]).unwrap(), -2.0);
        assert_eq!(well.evaluate([1.5, 0.0, 0.0]).unwrap(), 0.0);
        let g = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        assert_eq!(g.evaluate([0.0; 3]).unwrap(), -2.0);
        let y = PotentialSpec::yukawa(1.0, 1.0).unwrap();
        let v = y.evaluate([1.0, 0.0, 0.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn truncation_threshold_holds_at_support() {
        let g = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        let at = g.raw_radial(g.support_radius).unwrap();
        assert!(at.abs() <= 1e-10 * 2.0 * (1.0 + 1e-9));
        let y = PotentialSpec::yukawa(3.0, 0.7).unwrap();
        let at = y.raw_radial(y.support_radius).unwrap();
        assert!(at.abs() <= 1e-10 * 3.0 * (1.0 + 1e-9));
        assert!(y.raw_radial(0.99 * y.support_radius).unwrap().abs() > 1e-10 * 3.0);
        assert_eq!(
            y.evaluate([y.support_radius * 1.01, 0.0, 0.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn symmetry_flags() {
        assert!(
            PotentialSpec::gaussian(1.0, 1.0)
                .unwrap()
                .spherically_symmetric
        );
        let off = PotentialSpec::gaussian_off_center(1.0, 1.0, [0.5, 0.0, 0.0]).unwrap();
        assert!(!off.spherically_symmetric);
        assert!(matches!(off.radial(1.0), Err(Error::NonRadial)));
    }

    #[test]
    fn sign_and_sqrt_examples() {
        assert_eq!(sign_and_sqrt(-4.0), (-1.0, 2.0));
        assert_eq!(sign_and_sqrt(0.0), (0.0, 0.0));
        assert_eq!(sign_and_sqrt(9.0), (1.0, 3.0));
    }

    #[test]
    fn tabulated_interpolates_and_rejects_out_of_table() {
        let t = PotentialSpec::tabulated(vec![0.5, 1.0, 2.0], vec![-1.0, -3.0, 0.0]).unwrap();
        assert!((t.evaluate([0.75, 0.0, 0.0]).unwrap() + 2.0).abs() < 1e-15);
        assert!((t.evaluate([0.0, 1.5, 0.0]).unwrap() + 1.5).abs() < 1e-15);
        assert!(matches!(
            t.evaluate([0.1, 0.0, 0.0]),
            Err(Error::OutOfTable { .. })
        ));
        assert_eq!(t.evaluate([2.5, 0.0, 0.0]).unwrap(), 0.0);
        assert!(PotentialSpec::tabulated(vec![1.0, 0.5], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn tabulated_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.dat");
        std::fs::write(&path, "# r V\n0.0 -1.0\n1.0   -0.5\n\n2.0 0.0 # edge\n").unwrap();
        let t = PotentialSpec::tabulated_from_file(&path).unwrap();
        assert_eq!(t.support_radius, 2.0);
        assert!((t.evaluate([0.5, 0.0, 0.0]).unwrap() + 0.75).abs() < 1e-15);
        std::fs::write(&path, "0.0 -1.0 3\n").unwrap();
        assert!(PotentialSpec::tabulated_from_file(&path).is_err());
    }

    #[test]
    fn rollnik_of_square_well() {
        // ∬_{ball²} |r − s|^{-2} = 4π² for the unit ball
        let p = PotentialSpec::square_well(1.5, 1.0).unwrap();
        let grid = VolumeGrid::build(1.0, 12, 6, 12).unwrap();
        let est = rollnik_norm_estimate(&p, &grid).unwrap();
        let exact = 1.5 * 1.5 * 4.0 * PI * PI;
        assert!((est - exact).abs() < 1e-4 * exact, "{est} {exact}");
        assert!((ball_inverse_square(0.0, 2.0) - ball_inverse_square(1e-7, 2.0)).abs() < 1e-9);
    }

    #[test]
    fn rollnik_of_zero_is_zero() {
        let grid = VolumeGrid::build(2.0, 4, 3, 6).unwrap();
        let z = PotentialSpec::gaussian(0.0, 1.0).unwrap();
        assert_eq!(rollnik_norm_estimate(&z, &grid).unwrap(), 0.0);
    }

    #[test]
    fn rollnik_scales_quadratically() {
        let grid = VolumeGrid::build(4.0, 8, 4, 8).unwrap();
        let p = PotentialSpec::yukawa(1.0, 1.0).unwrap();
        let base = rollnik_norm_estimate(&p, &grid).unwrap();
        for alpha in [-3.0, 0.5, 2.0] {
            let s = rollnik_norm_estimate(&p.scaled(alpha), &grid).unwrap();
            assert!((s - alpha * alpha * base).abs() <= 1e-12 * s.abs());
        }
    }

    #[test]
    fn decay_examples() {
        let radii = [5.0, 10.0, 20.0];
        let decreasing = |rows: &[(f64, f64)]| rows.windows(2).all(|w| w[1].1 < w[0].1);
        let g = PotentialSpec::gaussian(-2.0, 1.0).unwrap();
        assert!(decreasing(&decay_report(&g, &radii, 1.0).unwrap()));
        let y = PotentialSpec::yukawa(1.0, 1.0).unwrap();
        assert!(decreasing(&decay_report(&y, &radii, 1.0).unwrap()));
        let rs: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let vs: Vec<f64> = rs.iter().map(|r| -1.0 / (r * r)).collect();
        let t = PotentialSpec::tabulated(rs, vs).unwrap();
        let rows = decay_report(&t, &radii, 1.0).unwrap();
        assert!(rows.windows(2).all(|w| w[1].1 > w[0].1));
        assert!((rows[0].1 - 25.0).abs() < 1e-12);
    }
}
