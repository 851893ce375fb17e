//! Command-line front end: evaluates the analytic solvers and the Monte
//! Carlo simulator and writes self-describing CSV artifacts.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use cascade_core::{
    db_to_lin, estimate_coverage, sample_tree, AnalyticSolver, BeamConfig, BeamSolver,
    CascadeError, ModelParams, StageMode, Stages, Strategy, Variant,
};

mod output;

use output::{write_artifact, MetaWriter};

/// Environment variable naming the directory that relative `--output`
/// paths are resolved against.
pub const OUTPUT_DIR_ENV: &str = "CASCADE_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "cascade",
    version,
    about = "Coverage analysis for cascade-blockage wireless networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic coverage curve over a threshold grid
    Coverage(CoverageArgs),
    /// Analytic best-beam and random-beam coverage over beam orders
    BestBeam(BestBeamArgs),
    /// Analytic conditional coverage after switching beams
    BeamSwitch(BeamSwitchArgs),
    /// Monte Carlo coverage estimate over a threshold grid
    Simulate(SimulateArgs),
    /// Analytic vs Monte Carlo with z-scores; fails on disagreement
    Compare(SimulateArgs),
    /// Sample one blockage tree and print its marks stage by stage
    DumpTree(DumpTreeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelFlag {
    Basic,
    LessCorrelated,
    Periodic,
    Independent,
}

impl From<ModelFlag> for Variant {
    fn from(m: ModelFlag) -> Self {
        match m {
            ModelFlag::Basic => Variant::Basic,
            ModelFlag::LessCorrelated => Variant::LessCorrelated,
            ModelFlag::Periodic => Variant::Periodic,
            ModelFlag::Independent => Variant::Independent,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StageModeFlag {
    Geometric,
    UnitFloor,
}

impl From<StageModeFlag> for StageMode {
    fn from(m: StageModeFlag) -> Self {
        match m {
            StageModeFlag::Geometric => StageMode::Geometric,
            StageModeFlag::UnitFloor => StageMode::UnitFloor,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyFlag {
    Omni,
    BestBeam,
    RandomBeam,
}

impl From<StrategyFlag> for Strategy {
    fn from(s: StrategyFlag) -> Self {
        match s {
            StrategyFlag::Omni => Strategy::Omni,
            StrategyFlag::BestBeam => Strategy::BestBeam,
            StrategyFlag::RandomBeam => Strategy::RandomBeam,
        }
    }
}

fn parse_stages(s: &str) -> Result<Stages, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(Stages::Infinite);
    }
    s.parse::<u32>()
        .map(Stages::Finite)
        .map_err(|_| format!("expected a stage count or 'inf', got '{s}'"))
}

/// An inclusive `min:max:step` grid of thresholds in dB.
#[derive(Clone)]
struct ThetaGrid {
    min: f64,
    max: f64,
    step: f64,
}

impl ThetaGrid {
    fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 0.5).floor() as usize + 1;
        (0..n).map(|i| self.min + i as f64 * self.step).collect()
    }

    fn spec(&self) -> String {
        format!("{}:{}:{}", self.min, self.max, self.step)
    }
}

fn parse_theta_grid(s: &str) -> Result<ThetaGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected min:max:step in dB, got '{s}'"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| format!("bad number '{p}'")))
        .collect::<Result<_, _>>()?;
    let (min, max, step) = (nums[0], nums[1], nums[2]);
    if step.is_nan() || step <= 0.0 {
        return Err(format!("grid step must be > 0, got {step}"));
    }
    if max < min {
        return Err(format!("grid max {max} below min {min}"));
    }
    Ok(ThetaGrid { min, max, step })
}

#[derive(Args)]
struct ModelArgs {
    /// Blockage environment
    #[arg(long, value_enum, default_value = "basic")]
    model: ModelFlag,
    /// Base-station density
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// First-circle radius
    #[arg(long = "R", default_value_t = 1.0)]
    base_radius: f64,
    /// Per-arc blockage probability
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Penetration factor per blocked arc
    #[arg(long = "K", default_value_t = 0.1)]
    penetration: f64,
    /// Stage count, or 'inf' for the unbounded model
    #[arg(long, value_parser = parse_stages, default_value = "5")]
    stages: Stages,
    /// Stage-counting rule of the independent model
    #[arg(long, value_enum, default_value = "geometric")]
    stage_mode: StageModeFlag,
    /// Convergence tolerance of the unbounded-model iteration
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Iteration cap of the unbounded-model iteration
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams, CascadeError> {
        ModelParams::new(
            self.lambda,
            self.base_radius,
            self.p,
            self.penetration,
            self.stages,
            self.model.into(),
        )
    }

    fn solver(&self) -> Result<AnalyticSolver, CascadeError> {
        Ok(AnalyticSolver::new(self.params()?)
            .with_tolerance(self.tolerance)
            .with_max_iterations(self.max_iterations)
            .with_stage_mode(self.stage_mode.into()))
    }

    fn describe(&self, meta: &mut MetaWriter) {
        let variant: Variant = self.model.into();
        meta.field("model", variant.name());
        meta.field("lambda", self.lambda);
        meta.field("R", self.base_radius);
        meta.field("p", self.p);
        meta.field("K", self.penetration);
        meta.field("stages", self.stages);
        meta.field("stage_mode", StageMode::from(self.stage_mode).name());
    }
}

#[derive(Args)]
struct OutputArg {
    /// Output file; relative paths resolve against $CASCADE_OUTPUT_DIR.
    /// Omit to write to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Threshold grid min:max:step in dB
    #[arg(long, value_parser = parse_theta_grid, allow_hyphen_values = true, default_value = "-10:30:1")]
    theta_db: ThetaGrid,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Args)]
struct BestBeamArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Threshold grid min:max:step in dB
    #[arg(long, value_parser = parse_theta_grid, allow_hyphen_values = true, default_value = "-10:30:1")]
    theta_db: ThetaGrid,
    /// Beam orders to evaluate (2^k beams each)
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4])]
    k: Vec<u32>,
    /// Raise the subset-sum ceiling on the beam order
    #[arg(long, default_value_t = 4)]
    max_k: u32,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Args)]
struct BeamSwitchArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Threshold in dB
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    theta_db: f64,
    /// Beam order (2^k beams)
    #[arg(long, default_value_t = 4)]
    k: u32,
    /// Raise the subset-sum ceiling on the beam order
    #[arg(long, default_value_t = 4)]
    max_k: u32,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Threshold grid min:max:step in dB
    #[arg(long, value_parser = parse_theta_grid, allow_hyphen_values = true, default_value = "-10:30:1")]
    theta_db: ThetaGrid,
    /// Beam-selection strategy
    #[arg(long, value_enum, default_value = "omni")]
    strategy: StrategyFlag,
    /// Beam order (2^k beams); ignored by the omni strategy
    #[arg(long, default_value_t = 0)]
    k: u32,
    /// Number of Monte Carlo realizations
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Random seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Args)]
struct DumpTreeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Random seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    out: OutputArg,
}

/// Failure cause mapped onto the process exit code.
enum CliError {
    InvalidConfig(String),
    OracleDisagreement(String),
    DivergentRegime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::InvalidConfig(_) => 1,
            CliError::OracleDisagreement(_) => 2,
            CliError::DivergentRegime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::InvalidConfig(m)
            | CliError::OracleDisagreement(m)
            | CliError::DivergentRegime(m) => m,
        }
    }
}

impl From<CascadeError> for CliError {
    fn from(e: CascadeError) -> Self {
        match e {
            CascadeError::DivergentRegime { .. } => CliError::DivergentRegime(e.to_string()),
            other => CliError::InvalidConfig(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::InvalidConfig(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Coverage(args) => cmd_coverage(&args),
        Command::BestBeam(args) => cmd_best_beam(&args),
        Command::BeamSwitch(args) => cmd_beam_switch(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::DumpTree(args) => cmd_dump_tree(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn cmd_coverage(args: &CoverageArgs) -> Result<(), CliError> {
    let solver = args.model.solver()?;
    let mut meta = MetaWriter::new("coverage");
    args.model.describe(&mut meta);
    meta.field("theta_db", args.theta_db.spec());
    let mut body = String::from("theta_db,p_cov\n");
    for db in args.theta_db.values() {
        let p_cov = solver.coverage(db_to_lin(db), 1.0)?;
        writeln!(body, "{db},{p_cov}").unwrap();
    }
    write_artifact(args.out.output.as_deref(), &meta, &body)?;
    Ok(())
}

fn cmd_best_beam(args: &BestBeamArgs) -> Result<(), CliError> {
    let params = args.model.params()?;
    let mut meta = MetaWriter::new("best-beam");
    args.model.describe(&mut meta);
    meta.field("theta_db", args.theta_db.spec());
    meta.field(
        "k",
        args.k
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    let mut body = String::from("theta_db,k,p_best,p_random\n");
    for &k in &args.k {
        let solver = BeamSolver::new(params.clone(), BeamConfig::new(k))?.with_max_k(args.max_k);
        for db in args.theta_db.values() {
            let theta = db_to_lin(db);
            let p_best = solver.best_beam_coverage(theta)?;
            let p_random = solver.random_beam_coverage(theta)?;
            writeln!(body, "{db},{k},{p_best},{p_random}").unwrap();
        }
    }
    write_artifact(args.out.output.as_deref(), &meta, &body)?;
    Ok(())
}

fn cmd_beam_switch(args: &BeamSwitchArgs) -> Result<(), CliError> {
    let params = args.model.params()?;
    let solver = BeamSolver::new(params, BeamConfig::new(args.k))?.with_max_k(args.max_k);
    let theta = db_to_lin(args.theta_db);
    let mut meta = MetaWriter::new("beam-switch");
    args.model.describe(&mut meta);
    meta.field("theta_db", args.theta_db);
    meta.field("k", args.k);
    let mut body = String::from("l,shared_depth,p_conditional,p_conditional_given_outage\n");
    for l in 2..=(1u32 << args.k) {
        let depth = cascade_core::shared_depth(1, l, args.k);
        let p_cond = solver.conditional_switch_coverage(theta, l)?;
        let p_outage = solver.conditional_given_outage(theta, l)?;
        writeln!(body, "{l},{depth},{p_cond},{p_outage}").unwrap();
    }
    write_artifact(args.out.output.as_deref(), &meta, &body)?;
    Ok(())
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

fn simulate_meta(args: &SimulateArgs, command: &str) -> MetaWriter {
    let mut meta = MetaWriter::new(command);
    args.model.describe(&mut meta);
    meta.field("theta_db", args.theta_db.spec());
    meta.field("strategy", Strategy::from(args.strategy).name());
    meta.field("k", args.k);
    meta.field("samples", args.samples);
    meta.field("seed", args.seed);
    meta
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let params = args.model.params()?;
    let config = BeamConfig::new(args.k);
    let theta_db = args.theta_db.values();
    let theta_lin: Vec<f64> = theta_db.iter().map(|&db| db_to_lin(db)).collect();
    let strategy = Strategy::from(args.strategy);
    let estimates = in_pool(args.workers, || {
        estimate_coverage(
            &params,
            &config,
            &theta_lin,
            strategy,
            args.samples,
            args.seed,
        )
    })??;
    let meta = simulate_meta(args, "simulate");
    let mut body = String::from("theta_db,p_cov,std_error,n_samples,seed\n");
    for (db, est) in theta_db.iter().zip(&estimates) {
        writeln!(
            body,
            "{db},{},{},{},{}",
            est.mean, est.std_error, est.sample_count, est.seed
        )
        .unwrap();
    }
    write_artifact(args.out.output.as_deref(), &meta, &body)?;
    Ok(())
}

fn cmd_compare(args: &SimulateArgs) -> Result<(), CliError> {
    let params = args.model.params()?;
    let config = BeamConfig::new(args.k);
    let theta_db = args.theta_db.values();
    let theta_lin: Vec<f64> = theta_db.iter().map(|&db| db_to_lin(db)).collect();
    let strategy = Strategy::from(args.strategy);

    let analytic: Vec<f64> = match strategy {
        Strategy::Omni => {
            let solver = args.model.solver()?;
            theta_lin
                .iter()
                .map(|&t| solver.coverage(t, 1.0))
                .collect::<Result<_, _>>()?
        }
        Strategy::BestBeam | Strategy::RandomBeam => {
            let solver = BeamSolver::new(params.clone(), config)?;
            theta_lin
                .iter()
                .map(|&t| match strategy {
                    Strategy::BestBeam => solver.best_beam_coverage(t),
                    _ => solver.random_beam_coverage(t),
                })
                .collect::<Result<_, _>>()?
        }
    };
    let estimates = in_pool(args.workers, || {
        estimate_coverage(
            &params,
            &config,
            &theta_lin,
            strategy,
            args.samples,
            args.seed,
        )
    })??;

    let meta = simulate_meta(args, "compare");
    let mut body = String::from("theta_db,analytic,mc,std_error,z_score\n");
    let mut worst: Option<(f64, f64)> = None;
    for ((db, a), est) in theta_db.iter().zip(&analytic).zip(&estimates) {
        let z = if est.std_error > 0.0 {
            (est.mean - a) / est.std_error
        } else if (est.mean - a).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        if worst.is_none_or(|(wz, _)| z.abs() > wz.abs()) {
            worst = Some((z, *db));
        }
        writeln!(body, "{db},{a},{},{},{z}", est.mean, est.std_error).unwrap();
    }
    write_artifact(args.out.output.as_deref(), &meta, &body)?;
    if let Some((z, db)) = worst {
        if z.abs() > 4.0 {
            return Err(CliError::OracleDisagreement(format!(
                "analytic and Monte Carlo disagree: |z| = {:.2} at theta = {db} dB",
                z.abs()
            )));
        }
    }
    Ok(())
}

fn cmd_dump_tree(args: &DumpTreeArgs) -> Result<(), CliError> {
    use rand::SeedableRng;
    let params = args.model.params()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
    let tree = sample_tree(&params, &mut rng)?;
    let mut meta = MetaWriter::new("dump-tree");
    args.model.describe(&mut meta);
    meta.field("seed", args.seed);
    write_artifact(args.out.output.as_deref(), &meta, &tree.dump())?;
    Ok(())
}
