//! Command-line driver: argument parsing, run configuration and the four
//! subcommands (`inspect`, `preprocess`, `nested-cv`, `report`).

mod commands;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use drybean_core::modelselect::{ModelKind, ParamGrid, PipelineMode};
use drybean_core::ErrorKind;

pub use commands::{cmd_inspect, cmd_nested_cv, cmd_preprocess, cmd_report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] drybean_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// 2 input, 3 format, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Format => 3,
                ErrorKind::Numerical => 4,
            },
            CliError::Io { .. } | CliError::Usage(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Svm,
    Gbt,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Svm => ModelKind::Svm,
            ModelArg::Gbt => ModelKind::Gbt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PaperFaithful,
    LeakageFree,
}

impl From<ModeArg> for PipelineMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PaperFaithful => PipelineMode::PaperFaithful,
            ModeArg::LeakageFree => PipelineMode::LeakageFree,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "drybean", version, about = "Dry bean classification pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class distribution and feature correlations.
    Inspect(RunArgs),
    /// Outlier removal, scaling and PCA; writes the cleaned data and scree/loadings tables.
    Preprocess(RunArgs),
    /// Nested cross-validation with grid search.
    NestedCv(RunArgs),
    /// Summarise a report written by `nested-cv`.
    Report {
        /// Report file.
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "Class")]
    pub label_column: String,
    #[arg(long, value_enum, default_value = "svm")]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value = "paper-faithful")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3.0)]
    pub z_threshold: f64,
    #[arg(long, default_value_t = 0.9999)]
    pub variance_threshold: f64,
    #[arg(long, default_value_t = 5)]
    pub outer_k: usize,
    #[arg(long, default_value_t = 3)]
    pub inner_k: usize,
    /// Grid file; defaults to the built-in grid of the chosen model.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Stratified random subsample of this many rows before anything else.
    #[arg(long)]
    pub subsample: Option<usize>,
}

/// Validated settings shared by the data-processing commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: PathBuf,
    pub label_column: String,
    pub seed: u64,
    pub model: ModelKind,
    pub mode: PipelineMode,
    pub z_threshold: f64,
    pub variance_threshold: f64,
    pub outer_k: usize,
    pub inner_k: usize,
    pub grid_path: Option<PathBuf>,
    pub grid: ParamGrid,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub subsample: Option<usize>,
}

impl RunConfig {
    pub fn from_args(a: &RunArgs) -> Result<Self, CliError> {
        if !(a.z_threshold > 0.0) {
            return Err(CliError::Usage(format!("--z-threshold must be > 0, got {}", a.z_threshold)));
        }
        if !(a.variance_threshold > 0.0 && a.variance_threshold <= 1.0) {
            return Err(CliError::Usage(format!(
                "--variance-threshold must be in (0, 1], got {}",
                a.variance_threshold
            )));
        }
        if a.outer_k < 2 || a.inner_k < 2 {
            return Err(CliError::Usage("--outer-k and --inner-k must be >= 2".into()));
        }
        if a.jobs == Some(0) {
            return Err(CliError::Usage("--jobs must be >= 1".into()));
        }
        let model = ModelKind::from(a.model);
        let grid = match &a.grid {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                ParamGrid::parse(&text)?
            }
            None => model.default_grid(),
        };
        Ok(Self {
            data: a.data.clone(),
            label_column: a.label_column.clone(),
            seed: a.seed,
            model,
            mode: a.mode.into(),
            z_threshold: a.z_threshold,
            variance_threshold: a.variance_threshold,
            outer_k: a.outer_k,
            inner_k: a.inner_k,
            grid_path: a.grid.clone(),
            grid,
            out: a.out.clone(),
            jobs: a.jobs,
            subsample: a.subsample,
        })
    }

    /// Settings echoed into every output file. `--jobs` and `--out` are
    /// left out because they do not affect results.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("data".into(), self.data.display().to_string()),
            ("label_column".into(), self.label_column.clone()),
            ("model".into(), self.model.name().into()),
            ("mode".into(), self.mode.name().into()),
            ("seed".into(), self.seed.to_string()),
            ("z_threshold".into(), self.z_threshold.to_string()),
            ("variance_threshold".into(), self.variance_threshold.to_string()),
            ("outer_k".into(), self.outer_k.to_string()),
            ("inner_k".into(), self.inner_k.to_string()),
            (
                "grid".into(),
                self.grid_path
                    .as_ref()
                    .map_or_else(|| "default".to_string(), |p| p.display().to_string()),
            ),
            (
                "subsample".into(),
                self.subsample.map_or_else(|| "none".to_string(), |n| n.to_string()),
            ),
        ];
        for (i, (name, values)) in self.grid.axes.iter().enumerate() {
            let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            v.push((format!("grid.{i}.{name}"), vals.join("|")));
        }
        v
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let args = match cli.command {
        Command::Report { path } => {
            print!("{}", cmd_report(&path)?);
            return Ok(());
        }
        Command::Inspect(ref a) | Command::Preprocess(ref a) | Command::NestedCv(ref a) => a,
    };
    let cfg = RunConfig::from_args(args)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        let summary = match cli.command {
            Command::Inspect(_) => cmd_inspect(&cfg)?,
            Command::Preprocess(_) => cmd_preprocess(&cfg)?,
            Command::NestedCv(_) => cmd_nested_cv(&cfg)?,
            Command::Report { .. } => unreachable!(),
        };
        print!("{summary}");
        Ok(())
    })
}
