//! Run configuration, experiment orchestration and report emission.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{sample_kernel, CustomKernel, KernelMatrix, MapKind, MapSpec};
use crate::demo::{run_demo, CheckOutcome};
use crate::duality::{canonical_dual, dual_bounds, reconstruct_with, ReconstructionOrder};
use crate::error::{Error, Result};
use crate::frame::{classify, classify_kernel, coarse_grid, analysis, FrameReport, Label, StageReport, Thresholds};
use crate::grid::{default_ladder, QuadratureGrid, RefinementLadder};
use crate::moment::{continuity_constant, rf_diagnostic, solve_moment};
use crate::schwartz::{SeminormIndex, TestFunction};

/// Environment variable capping the worker threads used for kernel assembly.
pub const THREADS_ENV: &str = "RIGGEDFRAMES_THREADS";
pub const DEFAULT_N_MAX: usize = 32;
pub const DEFAULT_TRIALS: usize = 20;
/// Probe functions used by the moment section.
pub const MOMENT_PROBES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub kind: MapKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump_support: Option<[f64; 2]>,
    /// CSV path, relative to the config file when read from one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_kernel: Option<PathBuf>,
}

impl MapConfig {
    pub fn spec(&self) -> Result<MapSpec> {
        let field = |name: &str| Error::InvalidConfig(format!("map.{name} is required for {}", self.kind));
        let spec = match self.kind {
            MapKind::Dirac => MapSpec::dirac(),
            MapKind::Fourier => MapSpec::fourier(),
            MapKind::DiracDerivative => MapSpec::dirac_derivative(),
            MapKind::WeightedDirac => {
                let text = self.weight.as_deref().ok_or_else(|| field("weight"))?;
                MapSpec::weighted_dirac(text).map_err(|e| Error::InvalidConfig(format!("map.weight: {e}")))?
            }
            MapKind::BumpDirac => {
                let [a, b] = self.bump_support.ok_or_else(|| field("bump_support"))?;
                MapSpec::bump_dirac(a, b).map_err(|e| Error::InvalidConfig(format!("map.bump_support: {e}")))?
            }
            MapKind::Custom => {
                let path = self.custom_kernel.clone().ok_or_else(|| field("custom_kernel"))?;
                MapSpec::custom(CustomKernel::Path(path))
            }
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<usize>>,
}

impl LadderConfig {
    pub fn ladder(&self) -> Result<RefinementLadder> {
        let wrap = |field: &str, e: Error| Error::InvalidConfig(format!("ladder.{field}: {e}"));
        match (self.n_max, &self.stages) {
            (Some(_), Some(_)) => Err(Error::InvalidConfig(
                "ladder: give either n_max or stages, not both".into(),
            )),
            (_, Some(stages)) => RefinementLadder::from_truncations(stages).map_err(|e| wrap("stages", e)),
            (n_max, None) => default_ladder(n_max.unwrap_or(DEFAULT_N_MAX)).map_err(|e| wrap("n_max", e)),
        }
    }
}

/// Composite Gauss-Legendre grid for custom kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub panels: usize,
    pub order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub map: MapConfig,
    #[serde(default)]
    pub ladder: LadderConfig,
    /// Grid for custom kernels; ignored by built-in maps, which use the ladder grids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub seed: u64,
    /// Random test functions drawn by `reconstruct` and `moment-solve`.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            map: MapConfig {
                kind: MapKind::Dirac,
                weight: None,
                bump_support: None,
                custom_kernel: None,
            },
            ladder: LadderConfig::default(),
            grid: None,
            thresholds: Thresholds::default(),
            seed: 0,
            trials: DEFAULT_TRIALS,
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; a relative custom-kernel path is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config: Self = serde_json::from_str(&text)?;
        if let (Some(kernel), Some(dir)) = (config.map.custom_kernel.as_mut(), path.parent()) {
            if kernel.is_relative() {
                *kernel = dir.join(&*kernel);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.map.spec()?;
        self.ladder()?;
        self.thresholds
            .validate()
            .map_err(|e| Error::InvalidConfig(format!("thresholds: {e}")))?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if let Some(g) = self.grid {
            QuadratureGrid::build(g.half_width, g.panels, g.order)
                .map_err(|e| Error::InvalidConfig(format!("grid: {e}")))?;
        }
        Ok(())
    }

    pub fn ladder(&self) -> Result<RefinementLadder> {
        self.ladder.ladder()
    }

    /// Kernel at the finest stage: the last ladder grid for built-in maps, the
    /// configured (or default) grid for custom kernels.
    pub fn final_kernel(&self) -> Result<KernelMatrix> {
        let spec = self.map.spec()?;
        let ladder = self.ladder()?;
        let stage = ladder.last();
        let grid = if spec.is_resamplable() {
            QuadratureGrid::for_stage(stage)?
        } else {
            match self.grid {
                Some(g) => QuadratureGrid::build(g.half_width, g.panels, g.order)?,
                None => QuadratureGrid::default_grid(),
            }
        };
        sample_kernel(&spec, &grid, stage.truncation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    Bounds,
    Dual,
    Reconstruct,
    MomentSolve,
    Sweep,
    Demo,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::Classify => "classify",
            Command::Bounds => "bounds",
            Command::Dual => "dual",
            Command::Reconstruct => "reconstruct",
            Command::MomentSolve => "moment-solve",
            Command::Sweep => "sweep",
            Command::Demo => "demo",
        };
        f.write_str(name)
    }
}

/// One ladder stage as it appears in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub nodes: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub total: bool,
    pub mu_independent: bool,
}

impl From<&StageReport> for StageRow {
    fn from(s: &StageReport) -> Self {
        Self {
            n: s.truncation,
            l: s.half_width,
            nodes: s.nodes,
            a: s.lower,
            b: s.upper,
            sigma_min: s.sigma_min,
            sigma_max: s.sigma_max,
            total: s.total,
            mu_independent: s.mu_independent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct DualSection {
    pub A_theta: f64,
    pub B_theta: f64,
    pub defect: f64,
    /// Worst relative reconstruction error over both formula orders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSection {
    pub score: f64,
    pub worst_residual: f64,
    pub probes: usize,
    /// Nodes of the grid the probes live on.
    pub nodes: usize,
    pub null_dim: usize,
    /// Worst residual over seeded consistent instances h = analysis(f₀).
    pub consistent_residual: f64,
    /// Continuity constant at k = 0 on the finest stage; null when infinite.
    pub continuity_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub config: RunConfig,
    pub stages: Vec<StageRow>,
    pub labels: Vec<Label>,
    pub dual: Option<DualSection>,
    pub moment: Option<MomentSection>,
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<FrameReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckOutcome>,
    pub timing: Timing,
}

impl ReportDocument {
    pub fn empty(command: Command, config: RunConfig) -> Self {
        Self {
            config,
            stages: Vec::new(),
            labels: Vec::new(),
            dual: None,
            moment: None,
            command,
            classification: None,
            checks: Vec::new(),
            timing: Timing { seconds: 0.0 },
        }
    }

    /// True unless a demo check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn emit(report: &ReportDocument, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if report.stages.is_empty() {
                w.write_record(["N", "L", "nodes", "A", "B", "sigma_min", "sigma_max", "total", "mu_independent"])?;
            }
            for row in &report.stages {
                w.serialize(row)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
    }
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("output path {} has no file name", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Applies [`THREADS_ENV`] to the global worker pool; returns the cap used.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidConfig(format!("{THREADS_ENV}: {e}")))?;
    Ok(Some(threads))
}

fn classification(config: &RunConfig) -> Result<FrameReport> {
    let spec = config.map.spec()?;
    if spec.is_resamplable() {
        classify(&spec, &config.ladder()?, &config.thresholds)
    } else {
        classify_kernel(&config.final_kernel()?, &config.thresholds)
    }
}

fn dual_section(config: &RunConfig, kernel: &KernelMatrix, with_reconstruction: bool) -> Result<DualSection> {
    let pair = canonical_dual(kernel)?;
    let bounds = dual_bounds(&pair)?;
    let mut section = DualSection {
        A_theta: bounds.lower,
        B_theta: bounds.upper,
        defect: pair.duality_defect(),
        reconstruction_error: None,
        trials: None,
    };
    if with_reconstruction {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..config.trials {
            let f = TestFunction::random(kernel.truncation(), &mut rng);
            for order in [ReconstructionOrder::ThetaAfterOmega, ReconstructionOrder::OmegaAfterTheta] {
                worst = worst.max(reconstruct_with(&pair, &f, order)?.rel_error);
            }
        }
        section.reconstruction_error = Some(worst);
        section.trials = Some(config.trials);
    }
    Ok(section)
}

fn moment_section(config: &RunConfig, kernel: &KernelMatrix) -> Result<MomentSection> {
    let n = kernel.truncation();
    let probe_kernel = match kernel.source() {
        Some(spec) if spec.is_resamplable() => sample_kernel(spec, &coarse_grid(n)?, n)?,
        _ => kernel.clone(),
    };
    let rf = rf_diagnostic(&probe_kernel, MOMENT_PROBES)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut consistent: f64 = 0.0;
    let mut null_dim = 0;
    for _ in 0..config.trials {
        let f0 = TestFunction::random(n, &mut rng);
        let sol = solve_moment(&probe_kernel, &analysis(&probe_kernel, &f0)?)?;
        consistent = consistent.max(sol.residual);
        null_dim = sol.null_dim;
    }
    let c = continuity_constant(kernel, SeminormIndex::L2)?;
    Ok(MomentSection {
        score: rf.score,
        worst_residual: rf.worst_residual,
        probes: MOMENT_PROBES.min(probe_kernel.grid().panels()),
        nodes: probe_kernel.node_count(),
        null_dim,
        consistent_residual: consistent,
        continuity_constant: c.is_finite().then_some(c),
    })
}

/// Executes one command. Numeric failures carry the stage they occurred in.
pub fn run(command: Command, config: &RunConfig) -> Result<ReportDocument> {
    config.validate()?;
    let start = Instant::now();
    let mut report = ReportDocument::empty(command, config.clone());
    if command == Command::Demo {
        report.checks = run_demo()?;
        report.timing.seconds = start.elapsed().as_secs_f64();
        return Ok(report);
    }

    let frame = classification(config)?;
    report.stages = frame.stages.iter().map(StageRow::from).collect();
    if command != Command::Bounds {
        report.labels = frame.labels.clone();
    }
    let needs_kernel = matches!(
        command,
        Command::Dual | Command::Reconstruct | Command::MomentSolve | Command::Sweep
    );
    if needs_kernel {
        let kernel = config.final_kernel()?;
        let stage = |e: Error| match e {
            Error::NotAFrame { .. } | Error::Numeric(_) => {
                Error::Numeric(format!("stage N={}: {e}", kernel.truncation()))
            }
            other => other,
        };
        match command {
            Command::Dual => report.dual = Some(dual_section(config, &kernel, false).map_err(stage)?),
            Command::Reconstruct => report.dual = Some(dual_section(config, &kernel, true).map_err(stage)?),
            Command::MomentSolve => report.moment = Some(moment_section(config, &kernel).map_err(stage)?),
            Command::Sweep => {
                if frame.has(Label::Frame) {
                    report.dual = Some(dual_section(config, &kernel, true).map_err(stage)?);
                }
                report.moment = Some(moment_section(config, &kernel).map_err(stage)?);
            }
            _ => unreachable!("commands without a kernel section"),
        }
    }
    if command == Command::Sweep {
        report.classification = Some(frame);
    }
    report.timing.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
