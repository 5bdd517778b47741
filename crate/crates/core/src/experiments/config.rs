//! TOML experiment configuration and its content hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Names accepted in configuration files and by the CLI.
pub const EXPERIMENTS: [&str; 6] =
    ["thm_smooth", "example1", "example2_nonlsc", "relaxed_slope", "sieve_gamma", "penalized_fixedpoint"];

/// Compactly supported bump `A·exp(1 − 1/(1 − r²/R²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn center(&self) -> Point {
        Point::new(self.center[0], self.center[1])
    }

    pub fn eval(&self, p: Point) -> f64 {
        let q = p.dist(self.center()) / self.radius;
        if q >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - q * q)).exp()
        }
    }

    /// Exact L² norm over the plane (composite Simpson in the radius).
    pub fn l2_norm(&self) -> f64 {
        let n = 4000;
        let dr = self.radius / n as f64;
        let g = |r: f64| {
            let q = r / self.radius;
            if q >= 1.0 {
                0.0
            } else {
                let v = self.amplitude * (1.0 - 1.0 / (1.0 - q * q)).exp();
                v * v * r
            }
        };
        let mut s = g(0.0) + g(self.radius);
        for i in 1..n {
            s += g(i as f64 * dr) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        (2.0 * std::f64::consts::PI * s * dr / 3.0).sqrt()
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.radius > 0.0) || !self.amplitude.is_finite() || !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::Config(format!("{what}: invalid bump")));
        }
        Ok(())
    }
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThmSmoothConfig {
    /// Mesh sizes, strictly decreasing.
    pub h: Vec<f64>,
    pub eigen_tolerance: f64,
    pub min_order: f64,
    pub circle_center: [f64; 2],
    pub circle_radius: f64,
    pub source: Bump,
    pub consistency_tolerance: f64,
    pub n_probes: usize,
    pub probe_slack: f64,
    pub solver_tol: f64,
}

impl Default for ThmSmoothConfig {
    fn default() -> Self {
        Self {
            h: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            eigen_tolerance: 0.01,
            min_order: 1.0,
            circle_center: [0.5, 0.5],
            circle_radius: 0.25,
            source: Bump { center: [0.5, 0.5], radius: 0.4, amplitude: 10.0 },
            consistency_tolerance: 0.02,
            n_probes: 100,
            probe_slack: 1e-6,
            solver_tol: 1e-10,
        }
    }
}

impl ThmSmoothConfig {
    pub fn circle_center(&self) -> Point {
        point(self.circle_center)
    }

    fn validate(&self) -> Result<()> {
        sizes("thm_smooth.h", &self.h)?;
        positive("thm_smooth.circle_radius", self.circle_radius)?;
        let c = self.circle_center();
        let d = c.x.min(c.y).min(1.0 - c.x).min(1.0 - c.y);
        if !(d > self.circle_radius) {
            return Err(Error::Config("thm_smooth: circle must lie inside the unit square".into()));
        }
        self.source.validate("thm_smooth.source")?;
        positive("thm_smooth.eigen_tolerance", self.eigen_tolerance)?;
        positive("thm_smooth.consistency_tolerance", self.consistency_tolerance)?;
        positive("thm_smooth.solver_tol", self.solver_tol)?;
        if self.n_probes == 0 {
            return Err(Error::Config("thm_smooth.n_probes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example1Config {
    pub kappas: Vec<f64>,
    /// Element size at the tip, strictly decreasing; snapped so the crack length is a multiple.
    pub h: Vec<f64>,
    pub h_max: f64,
    pub growth: f64,
    /// Half-width of the uniform zone around the tip path, in tip elements.
    pub plateau_cells: f64,
    /// Extension step in tip elements.
    pub step_cells: f64,
    /// SIF window `(ρ_min, ρ_max)` in tip elements.
    pub window_cells: [f64; 2],
    pub tip: [f64; 2],
    pub tail: [f64; 2],
    pub df_abs_tolerance: f64,
    pub df_rel_tolerance: f64,
    pub sif_tolerance: f64,
    pub solver_tol: f64,
}

impl Default for Example1Config {
    fn default() -> Self {
        Self {
            kappas: vec![0.0, 1.0, 1.5, 2.0],
            h: vec![1.0 / 256.0, 1.0 / 512.0, 1.0 / 1024.0, 1.0 / 2048.0],
            h_max: 0.04,
            growth: 0.2,
            plateau_cells: 12.0,
            step_cells: 4.0,
            window_cells: [3.0, 10.0],
            tip: [0.5, 0.5],
            tail: [0.1, 0.5],
            df_abs_tolerance: 0.1,
            df_rel_tolerance: 0.1,
            sif_tolerance: 0.05,
            solver_tol: 1e-10,
        }
    }
}

impl Example1Config {
    fn validate(&self) -> Result<()> {
        sizes("example1.h", &self.h)?;
        if self.kappas.is_empty() || self.kappas.iter().any(|k| !k.is_finite()) {
            return Err(Error::Config("example1.kappas must be finite and nonempty".into()));
        }
        positive("example1.h_max", self.h_max)?;
        positive("example1.growth", self.growth)?;
        positive("example1.step_cells", self.step_cells)?;
        if !(self.window_cells[0] > 0.0 && self.window_cells[1] > self.window_cells[0]) {
            return Err(Error::Config("example1.window_cells must satisfy 0 < min < max".into()));
        }
        if point(self.tip).dist(point(self.tail)) == 0.0 {
            return Err(Error::Config("example1: degenerate crack".into()));
        }
        positive("example1.solver_tol", self.solver_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example2Config {
    pub kappa: f64,
    /// Half-length of the slit, centered at the origin along the x axis.
    pub half_length: f64,
    pub domain_radius: f64,
    /// Values of k; `A_k` is the set at distance `< 1/k` from the slit.
    pub ks: Vec<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub growth: f64,
    pub rel_tolerance: f64,
    pub tip_bound_min: f64,
    /// Tip element size for the limit family.
    pub tip_h: f64,
    pub step_cells: f64,
    pub solver_tol: f64,
}

impl Default for Example2Config {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            half_length: 0.05,
            domain_radius: 2.0,
            ks: vec![4.0, 8.0, 16.0, 32.0],
            h_min: 0.004,
            h_max: 0.1,
            growth: 0.2,
            rel_tolerance: 0.05,
            tip_bound_min: 0.1,
            tip_h: 1.0 / 1024.0,
            step_cells: 4.0,
            solver_tol: 1e-10,
        }
    }
}

impl Example2Config {
    fn validate(&self) -> Result<()> {
        positive("example2_nonlsc.half_length", self.half_length)?;
        if !(self.domain_radius > 2.0 * self.half_length) {
            return Err(Error::Config("example2_nonlsc: domain too small".into()));
        }
        if self.ks.is_empty() || self.ks.windows(2).any(|w| !(w[1] > w[0])) || !(self.ks[0] > 0.0) {
            return Err(Error::Config("example2_nonlsc.ks must be positive and strictly increasing".into()));
        }
        if 1.0 / self.ks[0] + self.half_length >= self.domain_radius {
            return Err(Error::Config("example2_nonlsc: A_k leaves the domain".into()));
        }
        positive("example2_nonlsc.h_min", self.h_min)?;
        positive("example2_nonlsc.tip_h", self.tip_h)?;
        if !(self.h_max >= self.h_min) {
            return Err(Error::Config("example2_nonlsc: h_max < h_min".into()));
        }
        positive("example2_nonlsc.growth", self.growth)?;
        positive("example2_nonlsc.solver_tol", self.solver_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxedSlopeConfig {
    pub betas: Vec<f64>,
    pub h: Vec<f64>,
    pub jump_tolerance: f64,
    pub beta_tolerance: f64,
    pub divu_tolerance: f64,
    /// Transmission density of the sourced case.
    pub source_beta: f64,
    pub source: Bump,
    pub slope_tolerance: f64,
    pub solver_tol: f64,
}

impl Default for RelaxedSlopeConfig {
    fn default() -> Self {
        Self {
            betas: vec![0.0, 1.0, 10.0],
            h: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            jump_tolerance: 0.005,
            beta_tolerance: 0.05,
            divu_tolerance: 1e-8,
            source_beta: 1.0,
            source: Bump { center: [0.5, 0.5], radius: 0.3, amplitude: 10.0 },
            slope_tolerance: 0.02,
            solver_tol: 1e-10,
        }
    }
}

impl RelaxedSlopeConfig {
    fn validate(&self) -> Result<()> {
        sizes("relaxed_slope.h", &self.h)?;
        if self.betas.is_empty() || self.betas.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return Err(Error::Config("relaxed_slope.betas must be finite and nonnegative".into()));
        }
        if !(self.source_beta >= 0.0) {
            return Err(Error::Config("relaxed_slope.source_beta must be nonnegative".into()));
        }
        self.source.validate("relaxed_slope.source")?;
        positive("relaxed_slope.solver_tol", self.solver_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SieveConfig {
    pub h: f64,
    /// Gap fractions in `[0, 1]`, strictly increasing.
    pub gap_fractions: Vec<f64>,
    pub n_teeth: Vec<usize>,
    /// Density of the transmission problem whose solution enters the load.
    pub load_beta: f64,
    pub endpoint_tolerance: f64,
    pub solver_tol: f64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            h: 1.0 / 128.0,
            gap_fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            n_teeth: vec![4, 8, 16],
            load_beta: 1.0,
            endpoint_tolerance: 0.02,
            solver_tol: 1e-10,
        }
    }
}

impl SieveConfig {
    fn validate(&self) -> Result<()> {
        positive("sieve_gamma.h", self.h)?;
        let g = &self.gap_fractions;
        if g.is_empty() || g.windows(2).any(|w| !(w[1] > w[0])) || g[0] < 0.0 || g[g.len() - 1] > 1.0 {
            return Err(Error::Config("sieve_gamma.gap_fractions must increase strictly within [0, 1]".into()));
        }
        if self.n_teeth.is_empty() || self.n_teeth.contains(&0) {
            return Err(Error::Config("sieve_gamma.n_teeth must be positive".into()));
        }
        if !(self.load_beta >= 0.0) {
            return Err(Error::Config("sieve_gamma.load_beta must be nonnegative".into()));
        }
        positive("sieve_gamma.solver_tol", self.solver_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenalizedConfig {
    pub h: f64,
    /// Penalty parameters, strictly decreasing.
    pub eps: Vec<f64>,
    pub crack: [[f64; 2]; 2],
    pub source: Bump,
    /// Gate: distance ≤ factor · solver_tol.
    pub distance_factor: f64,
    /// Amplitude of the smooth perturbation applied to the reference in the control case.
    pub perturbation: f64,
    pub solver_tol: f64,
}

impl Default for PenalizedConfig {
    fn default() -> Self {
        Self {
            h: 1.0 / 32.0,
            eps: vec![0.1, 0.01, 0.001],
            crack: [[0.3, 0.5], [0.7, 0.5]],
            source: Bump { center: [0.4, 0.4], radius: 0.3, amplitude: 10.0 },
            distance_factor: 10.0,
            perturbation: 0.1,
            solver_tol: 1e-10,
        }
    }
}

impl PenalizedConfig {
    fn validate(&self) -> Result<()> {
        positive("penalized_fixedpoint.h", self.h)?;
        sizes("penalized_fixedpoint.eps", &self.eps)?;
        self.source.validate("penalized_fixedpoint.source")?;
        positive("penalized_fixedpoint.distance_factor", self.distance_factor)?;
        positive("penalized_fixedpoint.solver_tol", self.solver_tol)
    }
}

/// A configuration file: a seed and one optional section per experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    pub thm_smooth: Option<ThmSmoothConfig>,
    pub example1: Option<Example1Config>,
    pub example2_nonlsc: Option<Example2Config>,
    pub relaxed_slope: Option<RelaxedSlopeConfig>,
    pub sieve_gamma: Option<SieveConfig>,
    pub penalized_fixedpoint: Option<PenalizedConfig>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Every experiment with its default parameters.
    pub fn all_defaults(seed: u64) -> Self {
        Self {
            seed,
            output: None,
            thm_smooth: Some(Default::default()),
            example1: Some(Default::default()),
            example2_nonlsc: Some(Default::default()),
            relaxed_slope: Some(Default::default()),
            sieve_gamma: Some(Default::default()),
            penalized_fixedpoint: Some(Default::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = &self.thm_smooth {
            c.validate()?;
        }
        if let Some(c) = &self.example1 {
            c.validate()?;
        }
        if let Some(c) = &self.example2_nonlsc {
            c.validate()?;
        }
        if let Some(c) = &self.relaxed_slope {
            c.validate()?;
        }
        if let Some(c) = &self.sieve_gamma {
            c.validate()?;
        }
        if let Some(c) = &self.penalized_fixedpoint {
            c.validate()?;
        }
        Ok(())
    }

    /// Names of the sections present, in canonical order.
    pub fn experiments(&self) -> Vec<&'static str> {
        let present = [
            self.thm_smooth.is_some(),
            self.example1.is_some(),
            self.example2_nonlsc.is_some(),
            self.relaxed_slope.is_some(),
            self.sieve_gamma.is_some(),
            self.penalized_fixedpoint.is_some(),
        ];
        EXPERIMENTS.iter().zip(present).filter(|(_, p)| *p).map(|(n, _)| *n).collect()
    }

    fn section_json(&self, name: &str) -> Option<serde_json::Value> {
        let v = match name {
            "thm_smooth" => serde_json::to_value(self.thm_smooth.as_ref()?),
            "example1" => serde_json::to_value(self.example1.as_ref()?),
            "example2_nonlsc" => serde_json::to_value(self.example2_nonlsc.as_ref()?),
            "relaxed_slope" => serde_json::to_value(self.relaxed_slope.as_ref()?),
            "sieve_gamma" => serde_json::to_value(self.sieve_gamma.as_ref()?),
            "penalized_fixedpoint" => serde_json::to_value(self.penalized_fixedpoint.as_ref()?),
            _ => return None,
        };
        v.ok()
    }

    /// SHA-256 of the canonical JSON of `(experiment, seed, parameters)`.
    pub fn hash(&self, experiment: &str) -> Result<String> {
        let params = self
            .section_json(experiment)
            .ok_or_else(|| Error::Config(format!("no section for experiment {experiment}")))?;
        let canon = serde_json::json!({ "experiment": experiment, "seed": self.seed, "params": params });
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&canon)?)))
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive, got {v}")))
    }
}

fn sizes(what: &str, h: &[f64]) -> Result<()> {
    if h.is_empty() {
        return Err(Error::Config(format!("{what} is empty")));
    }
    for &x in h {
        positive(what, x)?;
    }
    if h.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config(format!("{what} must be strictly decreasing")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_defaults() {
        let cfg = Config::parse("seed = 3\n[thm_smooth]\nh = [0.25, 0.125]\n").unwrap();
        assert_eq!(cfg.experiments(), vec!["thm_smooth"]);
        assert_eq!(cfg.thm_smooth.as_ref().unwrap().n_probes, 100);
        assert_eq!(cfg.hash("thm_smooth").unwrap(), cfg.clone().hash("thm_smooth").unwrap());
    }

    #[test]
    fn rejects_increasing_sizes_and_unknown_keys() {
        assert!(Config::parse("[thm_smooth]\nh = [0.1, 0.2]\n").is_err());
        assert!(Config::parse("[thm_smooth]\nbogus = 1\n").is_err());
        assert!(Config::parse("[nope]\n").is_err());
    }

    #[test]
    fn hash_depends_on_seed() {
        let a = Config::parse("seed = 1\n[sieve_gamma]\n").unwrap();
        let b = Config::parse("seed = 2\n[sieve_gamma]\n").unwrap();
        assert_ne!(a.hash("sieve_gamma").unwrap(), b.hash("sieve_gamma").unwrap());
    }

    #[test]
    fn bump_norm_matches_fine_quadrature() {
        let b = Bump { center: [0.0, 0.0], radius: 1.0, amplitude: 1.0 };
        // 2π∫ e^{2(1−1/(1−r²))} r dr, substitute t = r²
        let n = 200_000;
        let s: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                (2.0 * (1.0 - 1.0 / (1.0 - t))).exp()
            })
            .sum::<f64>()
            / n as f64;
        assert!((b.l2_norm() - (std::f64::consts::PI * s).sqrt()).abs() < 1e-8);
    }
}
