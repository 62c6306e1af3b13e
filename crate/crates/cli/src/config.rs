use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rbm_gbc::geometry::ManifoldModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable consulted for the seed when neither a flag nor the
/// config file sets one.
pub const SEED_ENV: &str = "RBM_GBC_SEED";
pub const DEFAULT_SEED: u64 = 42;
/// Smallest path count accepted by the Monte Carlo experiments.
pub const MIN_PATHS: usize = 1000;
/// `verify-gbc` model name selecting every model with a known χ.
pub const ALL_MODELS: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifyGbc,
    Moments,
    MckeanSinger,
    Patodi,
    Scaling,
    Bridge,
    Reflection,
    Transport,
    Limit,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyGbc => "verify-gbc",
            Experiment::Moments => "moments",
            Experiment::MckeanSinger => "mckean-singer",
            Experiment::Patodi => "patodi",
            Experiment::Scaling => "scaling",
            Experiment::Bridge => "bridge",
            Experiment::Reflection => "reflection",
            Experiment::Transport => "transport",
            Experiment::Limit => "limit",
        }
    }

    /// Whether the experiment draws random paths (or tuples) and so needs
    /// at least [`MIN_PATHS`] of them.
    pub fn is_monte_carlo(self) -> bool {
        self != Experiment::VerifyGbc
    }

    fn defaults(self) -> Defaults {
        let d = Defaults {
            model: "interval",
            t_grid: &[],
            paths: 100_000,
            steps: 1000,
            q: &[],
            n: &[],
            p: 0,
            x: &[],
        };
        match self {
            Experiment::VerifyGbc => Defaults {
                model: ALL_MODELS,
                paths: 0,
                steps: 0,
                ..d
            },
            Experiment::Moments => Defaults { q: &[0, 1, 2, 3], ..d },
            Experiment::Scaling => Defaults {
                t_grid: &[0.2, 0.1, 0.05, 0.025],
                n: &[1, 2, 3],
                x: &[0.0],
                ..d
            },
            Experiment::Reflection => Defaults {
                t_grid: &[0.1],
                n: &[0, 1, 2],
                x: &[0.1],
                ..d
            },
            Experiment::MckeanSinger => Defaults { t_grid: &[0.05], ..d },
            Experiment::Patodi => Defaults { paths: 1000, steps: 0, ..d },
            Experiment::Bridge => Defaults {
                model: "disk",
                t_grid: &[0.1, 0.05, 0.01],
                paths: 10_000,
                x: &[0.5],
                ..d
            },
            Experiment::Transport => Defaults {
                model: "disk",
                t_grid: &[0.1, 0.05, 0.025, 0.0125],
                paths: 5000,
                steps: 400,
                n: &[1],
                x: &[0.1, 0.0],
                ..d
            },
            Experiment::Limit => Defaults {
                model: "disk",
                t_grid: &[0.05, 0.02, 0.01],
                paths: 20_000,
                steps: 400,
                q: &[1],
                x: &[0.0],
                ..d
            },
        }
    }
}

struct Defaults {
    model: &'static str,
    t_grid: &'static [f64],
    paths: usize,
    steps: usize,
    q: &'static [usize],
    n: &'static [u32],
    p: usize,
    x: &'static [f64],
}

/// Command-line flags shared by every experiment. Unset flags fall back to
/// the config file, then to the experiment defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Registered model name (see `list-models`).
    #[arg(long)]
    pub model: Option<String>,
    /// Single time; shorthand for a one-point --t-grid.
    #[arg(long, conflicts_with = "t_grid")]
    pub t: Option<f64>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Local-time powers (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<usize>>,
    /// Moment orders or test-functional powers (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
    /// Curvature power in the boundary expansion.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with any of the fields above, plus `x`.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<String>,
    pub t: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub q: Option<Vec<usize>>,
    pub n: Option<Vec<u32>>,
    pub p: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Start point in chart coordinates (for `bridge`, the scaled start `u`;
    /// for `limit`, the tangential point x̄).
    pub x: Option<Vec<f64>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: String,
    pub t_grid: Vec<f64>,
    pub paths: usize,
    pub steps: usize,
    pub q: Vec<usize>,
    pub n: Vec<u32>,
    pub p: usize,
    pub x: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for `experiment`, with the given seed and output directory.
    pub fn new(experiment: Experiment, seed: u64, out: impl Into<PathBuf>) -> Self {
        let d = experiment.defaults();
        ExperimentConfig {
            experiment,
            model: d.model.into(),
            t_grid: d.t_grid.to_vec(),
            paths: d.paths,
            steps: d.steps,
            q: d.q.to_vec(),
            n: d.n.to_vec(),
            p: d.p,
            x: d.x.to_vec(),
            seed,
            out: out.into(),
        }
    }

    /// Flags over config file over defaults. The seed falls back to
    /// `env_seed` (the value of [`SEED_ENV`]) and then [`DEFAULT_SEED`].
    pub fn resolve(experiment: Experiment, args: &RunArgs, env_seed: Option<&str>) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let env_seed = env_seed
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer")))
            })
            .transpose()?;
        let seed = args.seed.or(file.seed).or(env_seed).unwrap_or(DEFAULT_SEED);
        let out = args
            .out
            .clone()
            .or(file.out.clone())
            .unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
        let mut c = ExperimentConfig::new(experiment, seed, out);
        let flag_t = args.t.map(|t| vec![t]).or(args.t_grid.clone());
        let file_t = file.t.map(|t| vec![t]).or(file.t_grid);
        if let Some(v) = args.model.clone().or(file.model) {
            c.model = v;
        }
        if let Some(v) = flag_t.or(file_t) {
            c.t_grid = v;
        }
        if let Some(v) = args.paths.or(file.paths) {
            c.paths = v;
        }
        if let Some(v) = args.steps.or(file.steps) {
            c.steps = v;
        }
        if let Some(v) = args.q.clone().or(file.q) {
            c.q = v;
        }
        if let Some(v) = args.n.clone().or(file.n) {
            c.n = v;
        }
        if let Some(v) = args.p.or(file.p) {
            c.p = v;
        }
        if let Some(v) = file.x {
            c.x = v;
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks the invariants that do not need a run: a registered model,
    /// enough paths, positive finite times.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.experiment == Experiment::VerifyGbc && self.model == ALL_MODELS) {
            self.model()?;
        }
        if self.experiment.is_monte_carlo() && self.paths < MIN_PATHS {
            return Err(CliError::Config(format!(
                "paths = {} is below the minimum of {MIN_PATHS} for Monte Carlo experiments",
                self.paths
            )));
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(CliError::Config(format!("times must be positive and finite, got {t}")));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ManifoldModel, CliError> {
        ManifoldModel::by_name(&self.model).map_err(|e| CliError::Config(e.to_string()))
    }
}
