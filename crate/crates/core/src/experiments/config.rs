use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Which experiment a configuration drives; one per CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Eval,
    Threshold,
    Fuglede,
    Capacity,
    Optimize,
    Qmpcc,
    Diagram,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Eval => "eval",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::Fuglede => "fuglede",
            ExperimentKind::Capacity => "capacity",
            ExperimentKind::Optimize => "optimize",
            ExperimentKind::Qmpcc => "qmpcc",
            ExperimentKind::Diagram => "diagram",
        }
    }

    /// Kinds that draw random numbers and therefore need a seed.
    pub fn is_randomized(self) -> bool {
        matches!(self, ExperimentKind::Optimize | ExperimentKind::Qmpcc | ExperimentKind::Diagram)
    }
}

/// Where a run starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// seeded random convex body with `|K₀ΔB| ≤ start_amplitude`
    Random,
    /// `B_{start_amplitude·Y_mode}` plus a small seeded perturbation
    Mode,
}

/// Projected-gradient settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// initial step in the `H¹`-preconditioned direction
    pub step: f64,
    pub max_iterations: usize,
    /// weight of the hinge penalty on the curvature proxy
    pub convexity_weight: f64,
    /// stop when the accepted decrease falls below this (relative)
    pub tolerance: f64,
    /// Huber transition width of the asymmetry penalty
    pub huber_width: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings { step: 0.5, max_iterations: 400, convexity_weight: 10.0, tolerance: 1e-10, huber_width: 1e-4 }
    }
}

/// Partial optimizer settings from a file or flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerOverrides {
    pub step: Option<f64>,
    pub max_iterations: Option<usize>,
    pub convexity_weight: Option<f64>,
    pub tolerance: Option<f64>,
    pub huber_width: Option<f64>,
}

/// Every configurable value as an option; a config file and the command
/// line each produce one, and flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub dim: Option<usize>,
    pub c: Option<f64>,
    pub eps_cap: Option<f64>,
    pub mu: Option<f64>,
    pub target_asymmetry: Option<f64>,
    pub box_scale: Option<f64>,
    pub seed: Option<u64>,
    pub mesh_size: Option<f64>,
    pub l_max: Option<usize>,
    pub samples: Option<usize>,
    pub band: Option<f64>,
    pub qm_lambda: Option<f64>,
    pub qm_eps: Option<f64>,
    pub competitors: Option<usize>,
    pub functional: Option<String>,
    pub functionals: Option<Vec<String>>,
    pub mode: Option<usize>,
    pub eps_grid: Option<Vec<f64>>,
    pub points: Option<usize>,
    pub shape: Option<PathBuf>,
    pub amplitude: Option<f64>,
    pub start: Option<StartKind>,
    pub start_amplitude: Option<f64>,
    pub runs: Option<usize>,
    pub corpus: Option<usize>,
    pub max_linf: Option<f64>,
    pub optimizer: Option<OptimizerOverrides>,
}

macro_rules! take {
    ($dst:expr, $src:expr, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl ConfigOverrides {
    /// Read a TOML config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// `self` with every value set in `other` replaced.
    pub fn merged(mut self, other: &ConfigOverrides) -> Self {
        take!(
            self, other, dim, c, eps_cap, mu, target_asymmetry, box_scale, seed, mesh_size, l_max, samples, band,
            qm_lambda, qm_eps, competitors, functional, functionals, mode, eps_grid, points, shape, amplitude, start, start_amplitude,
            runs, corpus, max_linf
        );
        if let Some(o) = &other.optimizer {
            let mut mine = self.optimizer.take().unwrap_or_default();
            take!(mine, o, step, max_iterations, convexity_weight, tolerance, huber_width);
            self.optimizer = Some(mine);
        }
        self
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dim: usize,
    /// weight of `λ₁` in `J_c = P − cλ₁`
    pub c: Option<f64>,
    /// weight of `Cap⁻¹` in `P + ε Cap⁻¹`
    pub eps_cap: Option<f64>,
    /// asymmetry penalty weight
    pub mu: f64,
    /// asymmetry target `a`
    pub target_asymmetry: f64,
    /// radial bound of the box `D`
    pub box_scale: f64,
    pub seed: Option<u64>,
    pub mesh_size: f64,
    pub l_max: usize,
    pub samples: usize,
    pub band: f64,
    pub qm_lambda: Option<f64>,
    pub qm_eps: f64,
    pub competitors: usize,
    pub functional: String,
    pub functionals: Vec<String>,
    pub mode: usize,
    pub eps_grid: Vec<f64>,
    pub points: usize,
    pub shape: Option<PathBuf>,
    /// amplitude of `Y_mode` in evaluated shapes when no shape file is given
    pub amplitude: f64,
    pub start: StartKind,
    pub start_amplitude: f64,
    pub runs: usize,
    pub corpus: usize,
    pub max_linf: f64,
    pub optimizer: OptimizerSettings,
}

fn check(ok: bool, msg: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg.into()))
    }
}

impl ExperimentConfig {
    /// Apply per-kind defaults and validate ranges.
    pub fn resolve(kind: ExperimentKind, o: &ConfigOverrides) -> Result<Self> {
        let dim = o.dim.unwrap_or(if kind == ExperimentKind::Capacity { 3 } else { 2 });
        let default_mesh = match (kind, dim) {
            (ExperimentKind::Optimize, _) => 0.05,
            (ExperimentKind::Diagram, _) => 0.03,
            (ExperimentKind::Threshold, 2) => 0.02,
            (_, 3) => 0.08,
            _ => 0.02,
        };
        let opt = o.optimizer.clone().unwrap_or_default();
        let d = OptimizerSettings::default();
        let cfg = ExperimentConfig {
            kind,
            dim,
            c: o.c,
            eps_cap: o.eps_cap,
            mu: o.mu.unwrap_or(0.0),
            target_asymmetry: o.target_asymmetry.unwrap_or(0.0),
            box_scale: o.box_scale.unwrap_or(2.0),
            seed: o.seed,
            mesh_size: o.mesh_size.unwrap_or(default_mesh),
            l_max: o.l_max.unwrap_or(if kind == ExperimentKind::Optimize { 8 } else { 6 }),
            samples: o.samples.unwrap_or(2000),
            band: o.band.unwrap_or(0.05),
            qm_lambda: o.qm_lambda,
            qm_eps: o.qm_eps.unwrap_or(0.05),
            competitors: o.competitors.unwrap_or(400),
            functional: o.functional.clone().unwrap_or_else(|| "P".into()),
            functionals: o.functionals.clone().unwrap_or_else(|| vec!["P".into(), "lambda1".into()]),
            mode: o.mode.unwrap_or(2),
            eps_grid: o.eps_grid.clone().unwrap_or_else(|| vec![0.16, 0.08, 0.04, 0.02]),
            points: o.points.unwrap_or(2000),
            shape: o.shape.clone(),
            amplitude: o.amplitude.unwrap_or(0.0),
            start: o.start.unwrap_or(StartKind::Random),
            start_amplitude: o.start_amplitude.unwrap_or(0.1),
            runs: o.runs.unwrap_or(1),
            corpus: o.corpus.unwrap_or(0),
            max_linf: o.max_linf.unwrap_or(0.3),
            optimizer: OptimizerSettings {
                step: opt.step.unwrap_or(d.step),
                max_iterations: opt.max_iterations.unwrap_or(d.max_iterations),
                convexity_weight: opt.convexity_weight.unwrap_or(d.convexity_weight),
                tolerance: opt.tolerance.unwrap_or(d.tolerance),
                huber_width: opt.huber_width.unwrap_or(d.huber_width),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.dim == 2 || self.dim == 3, format!("dim must be 2 or 3, got {}", self.dim))?;
        if let Some(c) = self.c {
            check((0.0..=1.0).contains(&c), format!("c = {c} outside [0, 1]"))?;
        }
        if let Some(e) = self.eps_cap {
            check(e >= 0.0 && e.is_finite(), format!("eps_cap = {e} must be nonnegative"))?;
        }
        check(self.mu >= 0.0 && self.mu.is_finite(), format!("mu = {} must be nonnegative", self.mu))?;
        check((0.0..1.0).contains(&self.target_asymmetry), format!("target_asymmetry = {} outside [0, 1)", self.target_asymmetry))?;
        check((1.2..=10.0).contains(&self.box_scale), format!("box_scale = {} outside [1.2, 10]", self.box_scale))?;
        check(self.mesh_size > 0.0 && self.mesh_size <= 0.5, format!("mesh_size = {} outside (0, 0.5]", self.mesh_size))?;
        check((2..=64).contains(&self.l_max), format!("l_max = {} outside [2, 64]", self.l_max))?;
        check(self.band > 0.0 && self.band <= 1.0, format!("band = {} outside (0, 1]", self.band))?;
        check(self.qm_eps > 0.0, "qm_eps must be positive")?;
        if let Some(l) = self.qm_lambda {
            check(l >= 0.0, "qm_lambda must be nonnegative")?;
        }
        check(self.mode <= 32, format!("mode = {} above 32", self.mode))?;
        check(self.eps_grid.iter().all(|&e| e > 0.0 && e < 0.5), "eps_grid entries must lie in (0, 0.5)")?;
        check(self.points >= 12, "points must be at least 12")?;
        check(self.amplitude.abs() < 1.0, "amplitude outside (-1, 1)")?;
        check(self.start_amplitude >= 0.0 && self.start_amplitude < 0.5, "start_amplitude outside [0, 0.5)")?;
        check(self.runs >= 1, "runs must be at least 1")?;
        check(self.max_linf > 0.0 && self.max_linf <= 0.5, "max_linf outside (0, 0.5]")?;
        let o = &self.optimizer;
        check(o.step > 0.0 && o.max_iterations > 0 && o.tolerance > 0.0, "optimizer step, iterations and tolerance must be positive")?;
        check(o.convexity_weight >= 0.0 && o.huber_width > 0.0, "optimizer penalty settings must be positive")?;
        if self.kind.is_randomized() || (self.kind == ExperimentKind::Capacity && self.corpus > 0) {
            check(self.seed.is_some(), format!("{} is randomized and needs --seed", self.kind.name()))?;
        }
        Ok(())
    }

    /// Seed, or an error for randomized code paths.
    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config(format!("{} needs a seed", self.kind.name())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: ConfigOverrides = toml::from_str("c = 0.05\nmu = 0.1\nseed = 3\n[optimizer]\nstep = 0.2\n").unwrap();
        let flags = ConfigOverrides {
            c: Some(0.12),
            optimizer: Some(OptimizerOverrides { max_iterations: Some(7), ..Default::default() }),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(ExperimentKind::Optimize, &file.merged(&flags)).unwrap();
        assert_eq!(cfg.c, Some(0.12));
        assert_eq!(cfg.mu, 0.1);
        assert_eq!(cfg.optimizer.step, 0.2);
        assert_eq!(cfg.optimizer.max_iterations, 7);
        let back: ExperimentConfig = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        let bad = |o: ConfigOverrides| ExperimentConfig::resolve(ExperimentKind::Optimize, &o).is_err();
        assert!(bad(ConfigOverrides::default()), "missing seed");
        assert!(bad(ConfigOverrides { seed: Some(1), dim: Some(4), ..Default::default() }));
        assert!(bad(ConfigOverrides { seed: Some(1), mu: Some(-1.0), ..Default::default() }));
        assert!(toml::from_str::<ConfigOverrides>("bogus = 1").is_err());
        assert!(ExperimentConfig::resolve(ExperimentKind::Threshold, &ConfigOverrides::default()).is_ok());
    }
}
