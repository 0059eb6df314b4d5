//! Run configuration: a flat TOML document merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, ValueEnum};
use serde::Deserialize;

use fractal_spectra::models::{IntervalParams, ModelKind, SgParams};
use fractal_spectra::spectrum::BoundaryCondition;
use fractal_spectra::variants::HierarchicalParams;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Spectrum,
    Eigenfunctions,
    Counting,
    Weyl,
    Ratios,
    Sturm,
    Heat,
    Wave,
    Limits,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Eigenfunctions => "eigenfunctions",
            Task::Counting => "counting",
            Task::Weyl => "weyl",
            Task::Ratios => "ratios",
            Task::Sturm => "sturm",
            Task::Heat => "heat",
            Task::Wave => "wave",
            Task::Limits => "limits",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Interval,
    Sg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcArg {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaArg {
    #[default]
    Mass,
    Value,
}

/// Every setting, optional, as read from a config file or from flags.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Only read from config files; the command line takes it positionally.
    #[arg(skip)]
    pub task: Option<Task>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Interval measure parameter, 0 < p < 1.
    #[arg(long)]
    pub p: Option<f64>,
    /// Gasket measure/resistance ratio, r > 0.
    #[arg(long)]
    pub r: Option<f64>,
    /// Level-indexed interval parameters (hierarchical variant), comma separated.
    #[arg(long = "p-seq", value_delimiter = ',')]
    #[serde(alias = "p-seq")]
    pub p_seq: Option<Vec<f64>>,
    /// Level-indexed gasket parameters (hierarchical variant), comma separated.
    #[arg(long = "r-seq", value_delimiter = ',')]
    #[serde(alias = "r-seq")]
    pub r_seq: Option<Vec<f64>>,
    /// Threshold-subdivision cutoff, 0 <= c < 1.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long, value_enum)]
    pub bc: Option<BcArg>,
    /// Times for heat/wave, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Point-source location: `x` on the interval, `x,y` on the gasket.
    #[arg(long = "delta-at", value_delimiter = ',')]
    #[serde(alias = "delta-at")]
    pub delta_at: Option<Vec<f64>>,
    /// Point-source normalization: unit integral (`mass`) or unit value.
    #[arg(long, value_enum)]
    pub delta: Option<DeltaArg>,
    /// Rows for eigenfunctions/limits, window for ratios.
    #[arg(long)]
    pub count: Option<usize>,
    /// Final level of the limit continuation.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    pub svg: Option<bool>,
}

impl Settings {
    /// Fill unset fields from `base`.
    pub fn or(self, base: Settings) -> Settings {
        Settings {
            task: self.task.or(base.task),
            model: self.model.or(base.model),
            p: self.p.or(base.p),
            r: self.r.or(base.r),
            p_seq: self.p_seq.or(base.p_seq),
            r_seq: self.r_seq.or(base.r_seq),
            c: self.c.or(base.c),
            level: self.level.or(base.level),
            bc: self.bc.or(base.bc),
            t: self.t.or(base.t),
            delta_at: self.delta_at.or(base.delta_at),
            delta: self.delta.or(base.delta),
            count: self.count.or(base.count),
            depth: self.depth.or(base.depth),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            svg: self.svg.or(base.svg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fracspec",
    version,
    about = "Spectra of self-similar Laplacians on the interval and the Sierpinski gasket"
)]
pub struct Cli {
    /// What to compute; may instead come from the config file.
    #[arg(value_enum)]
    pub task: Option<Task>,
    /// Flat TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    None,
    Threshold(f64),
    Hierarchical(HierarchicalParams),
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub model: ModelKind,
    /// `p` or `r`; for the hierarchical variant the first sequence entry.
    pub parameter: f64,
    pub variant: Variant,
    pub level: usize,
    pub bc: BoundaryCondition,
    pub times: Vec<f64>,
    pub delta_at: Option<Vec<f64>>,
    pub delta: DeltaArg,
    pub count: Option<usize>,
    pub depth: usize,
    pub out: PathBuf,
    pub format: Format,
    pub svg: bool,
}

pub fn read_config_file(path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    /// Merge flags over the optional config file and validate.
    pub fn from_cli(cli: Cli) -> Result<RunConfig, CliError> {
        let file = match &cli.config {
            Some(path) => read_config_file(path)?,
            None => Settings::default(),
        };
        let task = cli
            .task
            .or(file.task)
            .ok_or_else(|| usage("no task given"))?;
        RunConfig::validate(task, cli.settings.or(file))
    }

    pub fn validate(task: Task, s: Settings) -> Result<RunConfig, CliError> {
        let model = match s.model.ok_or_else(|| usage("--model is required"))? {
            ModelArg::Interval => ModelKind::Interval,
            ModelArg::Sg => ModelKind::Sg,
        };
        let level = s.level.unwrap_or(if task == Task::Limits { 2 } else { 3 });
        if level == 0 {
            return Err(usage("--level must be at least 1"));
        }
        let seq = match model {
            ModelKind::Interval => {
                if s.r.is_some() || s.r_seq.is_some() {
                    return Err(usage("the interval model takes --p or --p-seq, not --r"));
                }
                s.p_seq.clone()
            }
            ModelKind::Sg => {
                if s.p.is_some() || s.p_seq.is_some() {
                    return Err(usage("the gasket model takes --r or --r-seq, not --p"));
                }
                s.r_seq.clone()
            }
        };
        let single = match model {
            ModelKind::Interval => s.p,
            ModelKind::Sg => s.r,
        };
        let (parameter, variant) = match (single, seq, s.c) {
            (Some(_), Some(_), _) => {
                return Err(usage("give a single parameter or a sequence, not both"))
            }
            (None, None, _) => return Err(usage("a model parameter is required")),
            (None, Some(_), Some(_)) => {
                return Err(usage(
                    "threshold subdivision does not combine with a parameter sequence",
                ))
            }
            (None, Some(seq), None) => {
                let params =
                    HierarchicalParams::new(model, seq).map_err(|e| usage(e.to_string()))?;
                (params.at(1), Variant::Hierarchical(params))
            }
            (Some(x), None, c) => {
                match model {
                    ModelKind::Interval => IntervalParams::new(x).map(|_| ()),
                    ModelKind::Sg => SgParams::new(x).map(|_| ()),
                }
                .map_err(|e| usage(e.to_string()))?;
                match c {
                    None => (x, Variant::None),
                    Some(c) if model == ModelKind::Sg => {
                        return Err(usage(format!(
                            "threshold subdivision (c = {c}) is interval only"
                        )))
                    }
                    Some(c) if !(0.0..1.0).contains(&c) => {
                        return Err(usage(format!("--c must lie in [0, 1), got {c}")))
                    }
                    Some(c) => (x, Variant::Threshold(c)),
                }
            }
        };
        let bc = match s.bc.unwrap_or(match task {
            Task::Heat => BcArg::Neumann,
            _ => BcArg::Dirichlet,
        }) {
            BcArg::Dirichlet => BoundaryCondition::Dirichlet,
            BcArg::Neumann => BoundaryCondition::Neumann,
        };
        let times = s.t.clone().unwrap_or_else(|| vec![0.0, 0.005, 0.05]);
        if matches!(task, Task::Heat | Task::Wave) {
            if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
                return Err(usage("--t needs finite times"));
            }
            if task == Task::Heat && times.iter().any(|t| *t < 0.0) {
                return Err(usage("heat times must be non-negative"));
            }
        }
        if let Some(d) = &s.delta_at {
            let want = if model == ModelKind::Interval { 1 } else { 2 };
            if d.len() != want || d.iter().any(|x| !x.is_finite()) {
                return Err(usage(format!("--delta-at needs {want} coordinate(s)")));
            }
        }
        if task == Task::Sturm
            && (model != ModelKind::Interval || bc != BoundaryCondition::Dirichlet)
        {
            return Err(usage(
                "the Sturm suite applies to Dirichlet interval spectra only",
            ));
        }
        if task == Task::Weyl && variant != Variant::None {
            return Err(usage(
                "the Weyl exponent is known for the standard models only",
            ));
        }
        if task == Task::Limits && variant != Variant::None {
            return Err(usage("limits are defined for the standard models only"));
        }
        if task == Task::Limits && bc != BoundaryCondition::Dirichlet {
            return Err(usage("limits use the Dirichlet spectrum"));
        }
        let depth = s.depth.unwrap_or(40);
        if task == Task::Limits && depth <= level {
            return Err(usage(format!(
                "--depth {depth} must exceed --level {level}"
            )));
        }
        if s.count == Some(0) {
            return Err(usage("--count must be positive"));
        }
        Ok(RunConfig {
            task,
            model,
            parameter,
            variant,
            level,
            bc,
            times,
            delta_at: s.delta_at,
            delta: s.delta.unwrap_or_default(),
            count: s.count,
            depth,
            out: s.out.unwrap_or_else(|| PathBuf::from(".")),
            format: s.format.unwrap_or_default(),
            svg: s.svg.unwrap_or(false),
        })
    }
}
