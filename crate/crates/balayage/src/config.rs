//! Experiment configuration: a single TOML file describing one command, the
//! kernel, the sets, the source measure, and tolerances. Every validation
//! error names the offending field.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::geometry::{DiscretizedSet, Point, Shape};
use crate::green::GreenExperiment;
use crate::kernels::{ExteriorConfig, Kernel};
use crate::solver::SolveOptions;
use crate::sweep::{Source, SweepOptions};
use crate::{Error, Result};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One of: sweep, equilibrium, represent, symmetry, refine, green-demo,
    /// mass-curve.
    pub command: String,
    /// Prefix for output files; defaults to the command name.
    pub output_prefix: Option<String>,
    /// Number of probe points for potential output (default 50).
    pub probes: Option<usize>,
    /// Target resolutions for grid-based commands.
    pub resolutions: Option<Vec<u32>>,
    pub kernel: Option<KernelConfig>,
    pub target: Option<Shape>,
    pub source: Option<SourceConfig>,
    /// Second source for the symmetry command.
    pub lambda: Option<SourceConfig>,
    pub refine: Option<RefineConfig>,
    pub green: Option<GreenConfig>,
    pub tolerances: Option<ToleranceConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// "riesz", "green-ball", or "green-alpha-ball".
    pub variant: String,
    pub alpha: Option<f64>,
    pub dim: usize,
    pub radius: Option<f64>,
    pub exterior: Option<ExteriorTomlConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExteriorTomlConfig {
    pub r_out: f64,
    pub resolution: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Point-mass form: coordinates plus weights.
    pub points: Option<Vec<Vec<f64>>>,
    pub weights: Option<Vec<f64>>,
    /// Uniform-density form: "uniform on <set>".
    pub uniform: Option<UniformSourceConfig>,
}

// flatten and deny_unknown_fields cannot be combined in serde
#[derive(Clone, Debug, Deserialize)]
pub struct UniformSourceConfig {
    #[serde(flatten)]
    pub shape: Shape,
    pub resolution: u32,
    pub total_mass: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineConfig {
    pub center: Vec<f64>,
    pub r_in: f64,
    pub r_outs: Vec<f64>,
    pub resolution: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenConfig {
    pub dim: Option<usize>,
    pub domain_radius: Option<f64>,
    pub core_radius: Option<f64>,
    pub alpha: Option<f64>,
    pub source: Vec<f64>,
    pub resolutions: Vec<u32>,
    pub r_out: Option<f64>,
    /// Core radii (as fractions of R) for the mass-curve command.
    pub fractions: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub tol_kkt: Option<f64>,
    pub max_iter: Option<usize>,
    pub mass_tol_rel: Option<f64>,
}

const COMMANDS: &[&str] = &[
    "sweep",
    "equilibrium",
    "represent",
    "symmetry",
    "refine",
    "green-demo",
    "mass-curve",
];

fn cfg_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| cfg_err("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn output_prefix(&self) -> String {
        self.output_prefix.clone().unwrap_or_else(|| self.command.clone())
    }

    pub fn probe_count(&self) -> usize {
        self.probes.unwrap_or(50)
    }

    pub fn validate(&self) -> Result<()> {
        if !COMMANDS.contains(&self.command.as_str()) {
            return Err(cfg_err(
                "command",
                format!("unknown command `{}`; expected one of {COMMANDS:?}", self.command),
            ));
        }
        if let Some(t) = &self.tolerances {
            if let Some(tol) = t.tol_kkt {
                if !(tol > 0.0) {
                    return Err(cfg_err("tolerances.tol_kkt", "must be positive"));
                }
            }
            if let Some(m) = t.mass_tol_rel {
                if !(m >= 0.0) {
                    return Err(cfg_err("tolerances.mass_tol_rel", "must be nonnegative"));
                }
            }
        }
        match self.command.as_str() {
            "sweep" | "represent" => {
                self.require_kernel()?;
                self.require_target()?;
                self.require_resolutions()?;
                self.validate_source("source", self.source.as_ref())?;
            }
            "symmetry" => {
                self.require_kernel()?;
                self.require_target()?;
                self.require_resolutions()?;
                self.validate_source("source", self.source.as_ref())?;
                self.validate_source("lambda", self.lambda.as_ref())?;
            }
            "equilibrium" => {
                self.require_kernel()?;
                self.require_target()?;
                self.require_resolutions()?;
            }
            "refine" => {
                self.require_kernel()?;
                self.validate_source("source", self.source.as_ref())?;
                let r = self
                    .refine
                    .as_ref()
                    .ok_or_else(|| cfg_err("refine", "required for the refine command"))?;
                if r.r_outs.len() < 2 {
                    return Err(cfg_err("refine.r_outs", "need at least two nested radii"));
                }
                if r.r_outs.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(cfg_err("refine.r_outs", "must be strictly increasing"));
                }
                if !(r.r_in > 0.0 && r.r_in < r.r_outs[0]) {
                    return Err(cfg_err("refine.r_in", "must satisfy 0 < r_in < r_outs[0]"));
                }
            }
            "green-demo" | "mass-curve" => {
                let g = self
                    .green
                    .as_ref()
                    .ok_or_else(|| cfg_err("green", "required for green commands"))?;
                if g.resolutions.is_empty() {
                    return Err(cfg_err("green.resolutions", "need at least one resolution"));
                }
                if self.command == "mass-curve" {
                    let f = g
                        .fractions
                        .as_ref()
                        .ok_or_else(|| cfg_err("green.fractions", "required for mass-curve"))?;
                    if f.iter().any(|x| !(*x > 0.0 && *x <= 0.9)) {
                        return Err(cfg_err("green.fractions", "fractions must lie in (0, 0.9]"));
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    fn require_kernel(&self) -> Result<&KernelConfig> {
        let k = self
            .kernel
            .as_ref()
            .ok_or_else(|| cfg_err("kernel", "required for this command"))?;
        match k.variant.as_str() {
            "riesz" => {
                if k.alpha.is_none() {
                    return Err(cfg_err("kernel.alpha", "required for the riesz variant"));
                }
            }
            "green-ball" => {
                if k.radius.is_none() {
                    return Err(cfg_err("kernel.radius", "required for the green-ball variant"));
                }
            }
            "green-alpha-ball" => {
                if k.alpha.is_none() {
                    return Err(cfg_err("kernel.alpha", "required for green-alpha-ball"));
                }
                if k.radius.is_none() {
                    return Err(cfg_err("kernel.radius", "required for green-alpha-ball"));
                }
                if k.exterior.is_none() {
                    return Err(cfg_err("kernel.exterior", "required for green-alpha-ball"));
                }
            }
            other => {
                return Err(cfg_err(
                    "kernel.variant",
                    format!("unknown variant `{other}`; expected riesz, green-ball, or green-alpha-ball"),
                ))
            }
        }
        Ok(k)
    }

    fn require_target(&self) -> Result<&Shape> {
        self.target
            .as_ref()
            .ok_or_else(|| cfg_err("target", "required for this command"))
    }

    fn require_resolutions(&self) -> Result<&[u32]> {
        let r = self
            .resolutions
            .as_ref()
            .ok_or_else(|| cfg_err("resolutions", "required for this command"))?;
        if r.is_empty() {
            return Err(cfg_err("resolutions", "need at least one resolution"));
        }
        Ok(r)
    }

    fn validate_source(&self, field: &str, src: Option<&SourceConfig>) -> Result<()> {
        let s = src.ok_or_else(|| cfg_err(field, "required for this command"))?;
        match (&s.points, &s.uniform) {
            (Some(p), None) => {
                if p.is_empty() {
                    return Err(cfg_err(&format!("{field}.points"), "need at least one point"));
                }
                let w = s
                    .weights
                    .as_ref()
                    .ok_or_else(|| cfg_err(&format!("{field}.weights"), "required with points"))?;
                if w.len() != p.len() {
                    return Err(cfg_err(
                        &format!("{field}.weights"),
                        format!("length {} does not match {} points", w.len(), p.len()),
                    ));
                }
                if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                    return Err(cfg_err(
                        &format!("{field}.weights"),
                        "weights must be finite and nonnegative",
                    ));
                }
            }
            (None, Some(_)) => {}
            _ => {
                return Err(cfg_err(
                    field,
                    "exactly one of `points` or `uniform` must be given",
                ))
            }
        }
        Ok(())
    }

    pub fn build_kernel(&self) -> Result<Kernel> {
        let k = self.require_kernel()?;
        match k.variant.as_str() {
            "riesz" => Kernel::riesz(k.alpha.unwrap(), k.dim),
            "green-ball" => Kernel::green_ball(k.radius.unwrap(), k.dim),
            "green-alpha-ball" => {
                let e = k.exterior.as_ref().unwrap();
                Kernel::green_alpha_ball(
                    k.alpha.unwrap(),
                    k.radius.unwrap(),
                    k.dim,
                    ExteriorConfig {
                        r_out: e.r_out,
                        resolution: e.resolution,
                    },
                )
            }
            _ => unreachable!("validated"),
        }
    }

    pub fn build_target(&self, resolution: u32) -> Result<Arc<DiscretizedSet>> {
        Ok(Arc::new(DiscretizedSet::from_shape(
            self.require_target()?,
            resolution,
        )?))
    }

    pub fn build_source(&self, field: &str) -> Result<Source> {
        let cfg = match field {
            "lambda" => self.lambda.as_ref(),
            _ => self.source.as_ref(),
        }
        .ok_or_else(|| cfg_err(field, "missing source"))?;
        if let Some(points) = &cfg.points {
            let weights = cfg.weights.as_ref().unwrap();
            let diracs = points
                .iter()
                .zip(weights)
                .map(|(p, w)| Ok((Point::new(p.clone())?, *w)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Source::Diracs(diracs));
        }
        let u = cfg.uniform.as_ref().unwrap();
        let set = Arc::new(DiscretizedSet::from_shape(&u.shape, u.resolution)?);
        Ok(Source::Measure(crate::measures::DiscreteMeasure::uniform(
            set,
            u.total_mass,
        )?))
    }

    pub fn sweep_options(&self) -> SweepOptions {
        let mut opts = SweepOptions::default();
        if let Some(t) = &self.tolerances {
            let mut solve = SolveOptions::default();
            if let Some(tol) = t.tol_kkt {
                solve.tol_kkt = tol;
            }
            if let Some(mi) = t.max_iter {
                solve.max_iter = mi;
            }
            opts.solve = solve;
            if let Some(m) = t.mass_tol_rel {
                opts.mass_tol_rel = m;
            }
        }
        opts
    }

    pub fn build_green(&self) -> Result<GreenExperiment> {
        let g = self
            .green
            .as_ref()
            .ok_or_else(|| cfg_err("green", "missing section"))?;
        let defaults = GreenExperiment::default_plane();
        let exp = GreenExperiment {
            dim: g.dim.unwrap_or(defaults.dim),
            domain_radius: g.domain_radius.unwrap_or(defaults.domain_radius),
            core_radius: g.core_radius.unwrap_or(defaults.core_radius),
            alpha: g.alpha.unwrap_or(defaults.alpha),
            source: Point::new(g.source.clone())?,
            resolutions: g.resolutions.clone(),
            r_out: g.r_out.unwrap_or(defaults.r_out),
        };
        exp.validate()?;
        Ok(exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| cfg_err("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_sweep_config_parses() {
        let cfg = parse(
            r#"
            command = "sweep"
            resolutions = [8]

            [kernel]
            variant = "riesz"
            alpha = 2.0
            dim = 3

            [target]
            shape = "sphere"
            center = [0.0, 0.0, 0.0]
            radius = 1.0

            [source]
            points = [[0.0, 0.0, 2.0]]
            weights = [1.0]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.command, "sweep");
        cfg.build_kernel().unwrap();
        cfg.build_target(8).unwrap();
        cfg.build_source("source").unwrap();
    }

    #[test]
    fn unknown_kernel_variant_names_field() {
        let err = parse(
            r#"
            command = "equilibrium"
            resolutions = [8]

            [kernel]
            variant = "bessel"
            dim = 3

            [target]
            shape = "sphere"
            center = [0.0, 0.0, 0.0]
            radius = 1.0
            "#,
        )
        .unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "kernel.variant"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn symmetry_requires_lambda() {
        let err = parse(
            r#"
            command = "symmetry"
            resolutions = [8]

            [kernel]
            variant = "riesz"
            alpha = 2.0
            dim = 3

            [target]
            shape = "sphere"
            center = [0.0, 0.0, 0.0]
            radius = 1.0

            [source]
            points = [[0.0, 0.0, 2.0]]
            weights = [1.0]
            "#,
        )
        .unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "lambda"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn uniform_source_form() {
        let cfg = parse(
            r#"
            command = "sweep"
            resolutions = [8]

            [kernel]
            variant = "riesz"
            alpha = 1.0
            dim = 3

            [target]
            shape = "ball"
            center = [0.0, 0.0, 0.0]
            radius = 1.0

            [source.uniform]
            shape = "sphere"
            center = [0.0, 0.0, 0.0]
            radius = 3.0
            resolution = 8
            total_mass = 2.0
            "#,
        )
        .unwrap();
        let src = cfg.build_source("source").unwrap();
        assert!((src.total_mass() - 2.0).abs() < 1e-12);
    }
}
