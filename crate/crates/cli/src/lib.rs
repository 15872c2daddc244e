//! `porescope` command line: configuration handling, report writing and the
//! `ingest`, `analyze`, `flow` and `regime` pipelines.

pub mod config;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use porescope::flowfield::FlowError;
use porescope::pnm::PnmError;
use porescope::poreseg::SegError;
use porescope::streamline::StreamError;
use porescope::voxel::VoxelError;
use serde_json::{json, Value};

pub use config::PipelineConfig;

/// Exit code 2 for bad input or usage, 1 for failed computations.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl From<VoxelError> for CliError {
    fn from(e: VoxelError) -> Self {
        match e {
            VoxelError::EmptyPoreSpace => CliError::Compute(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SegError> for CliError {
    fn from(e: SegError) -> Self {
        match e {
            SegError::Voxel(v) => v.into(),
            SegError::EmptyPoreSpace => CliError::Compute(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PnmError> for CliError {
    fn from(e: PnmError) -> Self {
        match e {
            PnmError::InvalidNetwork(_) | PnmError::InvalidArgument(_) => CliError::Input(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> Self {
        match e {
            StreamError::TooFewSamples { .. } | StreamError::ZeroVariance => CliError::Compute(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "porescope", version, about = "Pore-space, pore-network and flow-regime analysis of micro-CT volumes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a volume, binarise, clean and store the pore mask.
    Ingest(RunArgs),
    /// Segment pores, extract the network, solve for permeability.
    Analyze(RunArgs),
    /// Channel Reynolds numbers and streamline statistics.
    Flow(RunArgs),
    /// Darcy/Forchheimer fits and the transition velocity.
    Regime(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub volume: Option<PathBuf>,
    /// `raw` or `pgm`.
    #[arg(long)]
    pub volume_format: Option<String>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub nodal: Option<PathBuf>,
    #[arg(long)]
    pub streamlines: Option<PathBuf>,
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<u32>,
    #[arg(long)]
    pub voxel_size: Option<f64>,
    #[arg(long)]
    pub section_length: Option<f64>,
    #[arg(long)]
    pub min_component_voxels: Option<usize>,
    #[arg(long)]
    pub delta_p: Option<f64>,
    #[arg(long)]
    pub n_particles: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub deviation_tol: Option<f64>,
    #[arg(long)]
    pub reference_points: Option<usize>,
    /// `axial` or `full`.
    #[arg(long)]
    pub angle_mode: Option<String>,
    /// Any config field as `key=value` (dotted keys for nested fields);
    /// applied after the dedicated flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<Value>, CliError> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| json!(p));
        let flags = [
            ("volume", path(&self.volume)),
            ("volume_format", self.volume_format.as_ref().map(|v| json!(v))),
            ("mask", path(&self.mask)),
            ("nodal_csv", path(&self.nodal)),
            ("streamlines_csv", path(&self.streamlines)),
            ("curves_csv", path(&self.curves)),
            ("threshold", self.threshold.map(|v| json!(v))),
            ("voxel_size_um", self.voxel_size.map(|v| json!(v))),
            ("section_length_um", self.section_length.map(|v| json!(v))),
            ("min_component_voxels", self.min_component_voxels.map(|v| json!(v))),
            ("delta_p_pa", self.delta_p.map(|v| json!(v))),
            ("n_particles", self.n_particles.map(|v| json!(v))),
            ("seed", self.seed.map(|v| json!(v))),
            ("deviation_tol", self.deviation_tol.map(|v| json!(v))),
            ("reference_points", self.reference_points.map(|v| json!(v))),
            ("angle_mode", self.angle_mode.as_ref().map(|v| json!(v))),
        ];
        let mut out: Vec<Value> = flags.into_iter().filter_map(|(k, v)| v.map(|v| json!({ k: v }))).collect();
        for s in &self.set {
            out.push(config::parse_assignment(s)?);
        }
        Ok(out)
    }

    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        PipelineConfig::resolve(self.config.as_deref(), self.overrides()?)
    }
}

/// Runs one subcommand and returns the manifest path.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let (args, f): (&RunArgs, fn(&PipelineConfig, &std::path::Path) -> Result<PathBuf, CliError>) = match &cli.command {
        Command::Ingest(a) => (a, pipeline::ingest),
        Command::Analyze(a) => (a, pipeline::analyze),
        Command::Flow(a) => (a, pipeline::flow),
        Command::Regime(a) => (a, pipeline::regime),
    };
    let cfg = args.resolve()?;
    f(&cfg, &args.out)
}

/// Worker count from `PORESCOPE_THREADS`; `None` leaves rayon's default.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("PORESCOPE_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Input(format!("PORESCOPE_THREADS must be a positive integer, got `{s}`"))),
        },
    }
}
