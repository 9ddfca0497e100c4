//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use lily_core::lily::{beta_star, LilyParams, ParamError};
use lily_core::sweep::BetaMode;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_POINTS: usize = 2001;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LilyBlock {
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub target: Option<usize>,
    pub beta: Option<f64>,
    pub beta_star_q: Option<usize>,
}

impl LilyBlock {
    /// Fill unset fields from `base`; fields set here win.
    pub fn or(self, base: &LilyBlock) -> LilyBlock {
        // an explicit beta and an explicit q are alternatives
        let (beta, beta_star_q) = if self.beta.is_some() || self.beta_star_q.is_some() {
            (self.beta, self.beta_star_q)
        } else {
            (base.beta, base.beta_star_q)
        };
        LilyBlock {
            n: self.n.or(base.n),
            d: self.d.or(base.d),
            target: self.target.or(base.target),
            beta,
            beta_star_q,
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == LilyBlock::default()
    }

    pub fn resolve(&self) -> Result<LilyParams, CliError> {
        let d = self
            .d
            .ok_or_else(|| CliError::Param("lily.d: chiral layer size is required".into()))?;
        let beta = match (self.beta, self.beta_star_q) {
            (Some(_), Some(_)) => {
                return Err(CliError::Param(
                    "lily: give either beta or beta_star_q, not both".into(),
                ))
            }
            (Some(b), None) => b,
            (None, Some(q)) => beta_star(d, q)?,
            (None, None) => 1.0,
        };
        Ok(LilyParams::new(
            self.n.unwrap_or(1),
            d,
            self.target.unwrap_or(0),
            beta,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Psi0Spec {
    Vertex(usize),
    Amplitudes(Vec<(usize, f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveBlock {
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "two_pi")]
    pub t_end: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    pub psi0: Option<Psi0Spec>,
}

impl Default for EvolveBlock {
    fn default() -> Self {
        EvolveBlock {
            t_start: 0.0,
            t_end: two_pi(),
            points: DEFAULT_POINTS,
            psi0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub d_list: Vec<usize>,
    #[serde(default = "unit")]
    pub beta_mode: BetaMode,
    #[serde(default = "one_output")]
    pub n_list: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceBlock {
    pub seed: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    #[serde(default = "default_q_list")]
    pub q_list: Vec<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        VerifyBlock {
            q_list: default_q_list(),
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteBlock {
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub paper_literal: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lily: Option<LilyBlock>,
    pub graph_file: Option<PathBuf>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub evolve: EvolveBlock,
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub reduce: ReduceBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub route: RouteBlock,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lily: None,
            graph_file: None,
            tol: DEFAULT_TOL,
            evolve: EvolveBlock::default(),
            sweep: None,
            reduce: ReduceBlock::default(),
            verify: VerifyBlock::default(),
            route: RouteBlock::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            CliError::Param(format!("config {}: {}", e.path(), e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        match (&self.lily, &self.graph_file) {
            (Some(_), Some(_)) => {
                return Err(CliError::Param(
                    "config: give exactly one of \"lily\" and \"graph_file\"".into(),
                ))
            }
            (None, None) if self.sweep.is_none() => {
                return Err(CliError::Param(
                    "config: one of \"lily\" or \"graph_file\" is required".into(),
                ))
            }
            _ => {}
        }
        if let Some(lily) = &self.lily {
            lily.resolve()?;
        }
        for (path, tol) in [("tol", self.tol), ("verify.tol", self.verify.tol)] {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(CliError::Param(format!("config {path}: tolerance must be positive")));
            }
        }
        if self.evolve.points == 0 {
            return Err(CliError::Param("config evolve.points: must be at least 1".into()));
        }
        if let Some(s) = &self.sweep {
            if s.d_list.is_empty() || s.n_list.is_empty() {
                return Err(CliError::Param("config sweep: d_list and n_list must be nonempty".into()));
            }
        }
        Ok(())
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, CliError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Param(format!("cannot read config {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

fn two_pi() -> f64 {
    std::f64::consts::TAU
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_q_list() -> Vec<usize> {
    vec![0, 1, 2]
}

fn unit() -> BetaMode {
    BetaMode::Unit
}

fn one_output() -> Vec<usize> {
    vec![1]
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Param(e.to_string())
    }
}
