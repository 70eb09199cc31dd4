//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::experiments::{
    cap_sweep, degree_of_difficulty, experiment, run_metrics, write_curve_csv, write_experiment,
    write_histogram_csv, write_sweep_csv, ExperimentError,
};
use crate::learners::{
    brute_force_oracle, train_resume, LearnerConfig, LearnerError, Method, Objective, OracleOutcome, QStore,
};
use crate::reward::{
    estimate_factoredness, estimate_learnability, RandomAlternativeSampler, RandomPairSampler, RewardError,
    RewardEvaluator, RewardModel, RewardParams, StrategicCostTable,
};
use crate::scenario::{
    generate_scenario, validate_scenario, CapacityMode, DelayAssignment, FlightId, GenerationError, GeneratorParams,
    Minute, Scenario, ScenarioError,
};
use crate::traffic::{build_graph, compute_demand, detect_hotspots, write_hotspots_csv, TrafficError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "dcb-marl", version, about = "Ground delay assignment by multiagent Q-learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scenario.
    Generate(GenerateArgs),
    /// Check a scenario file and print any violations.
    Validate { scenario: PathBuf },
    /// Demand, hotspots and coordination-graph statistics of a scenario.
    Inspect(InspectArgs),
    /// Train one learner and write its solution, curve and Q-store.
    Train(TrainArgs),
    /// Metrics of a solution file.
    Evaluate(EvaluateArgs),
    /// Exhaustive optimum for small scenarios.
    Oracle(OracleArgs),
    /// Repeated seeded training runs with aggregate statistics.
    Experiment(ExperimentArgs),
    /// Experiments under a range of local max-delay caps.
    Sweep(SweepArgs),
    /// Sampled factoredness and learnability of one agent's reward.
    DiagnoseReward(DiagnoseArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Desk,
    Micro,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub flights: Option<usize>,
    #[arg(long)]
    pub sectors: Option<usize>,
    /// Calibrate capacities to this many initial hotspots.
    #[arg(long)]
    pub target_hotspots: Option<usize>,
    #[command(flatten)]
    pub periods: PeriodArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct PeriodArgs {
    /// Counting period length in minutes.
    #[arg(long)]
    pub period_duration: Option<Minute>,
    /// Minutes between counting period starts.
    #[arg(long)]
    pub period_step: Option<Minute>,
}

impl PeriodArgs {
    fn apply(&self, s: &mut Scenario) {
        if let Some(d) = self.period_duration {
            s.period_duration = d;
        }
        if let Some(st) = self.period_step {
            s.period_step = st;
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct RewardArgs {
    #[arg(long, default_value_t = 20.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 60.0)]
    pub positive_reward: f64,
    #[arg(long, default_value_t = 81.0)]
    pub hotspot_rate: f64,
    /// JSON cost table; light/medium/heavy linear defaults when absent.
    #[arg(long)]
    pub cost_table: Option<PathBuf>,
}

impl RewardArgs {
    fn model(&self) -> Result<RewardModel, CliError> {
        let params = RewardParams {
            lambda: self.lambda,
            positive_reward: self.positive_reward,
            hotspot_rate: self.hotspot_rate,
        };
        params.validate()?;
        let costs = match &self.cost_table {
            Some(p) => StrategicCostTable::load(p)?,
            None => StrategicCostTable::default(),
        };
        Ok(RewardModel::new(params, costs))
    }
}

#[derive(Debug, Args, Clone)]
pub struct LearnArgs {
    #[arg(long, default_value = "edmarl")]
    pub method: Method,
    #[arg(long, default_value_t = 15_000)]
    pub episodes: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.99)]
    pub gamma: f64,
    /// Clamp on the hotspot count in local states.
    #[arg(long, default_value_t = 10)]
    pub hotspot_cap: u32,
}

impl LearnArgs {
    fn config(&self) -> LearnerConfig {
        LearnerConfig {
            alpha: self.alpha,
            gamma: self.gamma,
            episodes: self.episodes,
            hotspot_cap: self.hotspot_cap,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub scenario: PathBuf,
    /// Solution file used for the difficulty score.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    #[command(flatten)]
    pub periods: PeriodArgs,
    /// Directory for demand.csv and hotspots.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub scenario: PathBuf,
    #[command(flatten)]
    pub learn: LearnArgs,
    #[command(flatten)]
    pub reward: RewardArgs,
    #[command(flatten)]
    pub periods: PeriodArgs,
    /// Q-store to continue from.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub scenario: PathBuf,
    pub solution: PathBuf,
    #[command(flatten)]
    pub periods: PeriodArgs,
    /// Directory for histogram.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OracleObjective {
    TotalDelay,
    Reward,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "total-delay")]
    pub objective: OracleObjective,
    #[arg(long, default_value_t = crate::learners::DEFAULT_ORACLE_BUDGET)]
    pub budget: u64,
    #[command(flatten)]
    pub reward: RewardArgs,
    #[command(flatten)]
    pub periods: PeriodArgs,
    /// Write the optimal assignment here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    pub scenario: PathBuf,
    #[command(flatten)]
    pub learn: LearnArgs,
    #[command(flatten)]
    pub reward: RewardArgs,
    #[command(flatten)]
    pub periods: PeriodArgs,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub scenario: PathBuf,
    /// Comma-separated caps in minutes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub caps: Vec<Minute>,
    /// Flights the cap applies to; all regulatable flights when no selector is given.
    #[arg(long, value_delimiter = ',', conflicts_with = "select_fraction")]
    pub select_ids: Vec<String>,
    /// Seeded random share of regulatable flights the cap applies to.
    #[arg(long)]
    pub select_fraction: Option<f64>,
    #[command(flatten)]
    pub learn: LearnArgs,
    #[command(flatten)]
    pub reward: RewardArgs,
    #[command(flatten)]
    pub periods: PeriodArgs,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub agent: String,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// State for learnability; all-zero delays when absent.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[command(flatten)]
    pub reward: RewardArgs,
    #[command(flatten)]
    pub periods: PeriodArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("scenario is invalid:\n{0}")]
    Validation(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Io(_) => EXIT_IO,
            CliError::Other(_) => EXIT_OTHER,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Invalid(report) => CliError::Validation(report.to_string()),
            ScenarioError::Io(_) => CliError::Io(e.to_string()),
            ScenarioError::Parse(_) => CliError::Validation(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<TrafficError> for CliError {
    fn from(e: TrafficError) -> Self {
        match e {
            TrafficError::Scenario(s) => s.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::Io(_) => CliError::Io(e.to_string()),
            RewardError::Traffic(t) => t.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<LearnerError> for CliError {
    fn from(e: LearnerError) -> Self {
        match e {
            LearnerError::Scenario(s) => s.into(),
            LearnerError::Traffic(t) => t.into(),
            LearnerError::Reward(r) => r.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Scenario(s) => s.into(),
            ExperimentError::Traffic(t) => t.into(),
            ExperimentError::Learner(l) => l.into(),
            ExperimentError::Io(_) | ExperimentError::Csv(_) => CliError::Io(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<GenerationError> for CliError {
    fn from(e: GenerationError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("DCB_MARL_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).try_init();
}

fn load_scenario(path: &Path, periods: &PeriodArgs) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(path)?;
    periods.apply(&mut s);
    let report = validate_scenario(&s);
    if !report.is_empty() {
        return Err(CliError::Validation(report.to_string()));
    }
    Ok(s)
}

fn read_solution(path: &Path, s: &Scenario) -> Result<DelayAssignment, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let d = DelayAssignment::read_csv(file).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    d.check_feasible(s)?;
    Ok(d)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn make_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Generate(a) => generate(a, out),
        Command::Validate { scenario } => validate(&scenario, out),
        Command::Inspect(a) => inspect(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Evaluate(a) => evaluate(a, out),
        Command::Oracle(a) => oracle(a, out),
        Command::Experiment(a) => experiment_cmd(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::DiagnoseReward(a) => diagnose(a, out),
    }
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut params = match a.preset {
        Preset::Desk => GeneratorParams::desk(),
        Preset::Micro => GeneratorParams::micro(4, 2, 6),
    };
    if let Some(n) = a.flights {
        params.n_flights = n;
    }
    if let Some(n) = a.sectors {
        params.n_sectors = n;
    }
    if let Some(t) = a.target_hotspots {
        params.capacity = CapacityMode::Calibrated {
            target_hotspots: t,
            tolerance: 1,
        };
    }
    if let Some(d) = a.periods.period_duration {
        params.period_duration = d;
    }
    if let Some(s) = a.periods.period_step {
        params.period_step = s;
    }
    let s = generate_scenario(&params, a.seed)?;
    match a.out {
        Some(path) => {
            s.save(&path)?;
            writeln!(out, "wrote {} ({} flights, {} sectors)", path.display(), s.flights.len(), s.sectors.len())?;
        }
        None => writeln!(out, "{}", s.to_json_string())?,
    }
    Ok(EXIT_OK)
}

fn validate(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let s = Scenario::load(path)?;
    let report = validate_scenario(&s);
    if report.is_empty() {
        writeln!(out, "ok: {} flights, {} sectors", s.flights.len(), s.sectors.len())?;
        Ok(EXIT_OK)
    } else {
        Err(CliError::Validation(report.to_string()))
    }
}

fn inspect(a: InspectArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let s = load_scenario(&a.scenario, &a.periods)?;
    let zero = DelayAssignment::zeros();
    let demand = compute_demand(&s, &zero)?;
    let hotspots = detect_hotspots(&s, &zero)?;
    let graph = build_graph(&s, &hotspots);
    let deg = graph.degree_stats();
    let in_hotspots = graph.vertices.len();
    writeln!(out, "flights: {}", s.flights.len())?;
    writeln!(out, "sectors: {}", s.sectors.len())?;
    writeln!(out, "counting periods: {}", demand.periods.len())?;
    writeln!(out, "hotspots: {}", hotspots.len())?;
    writeln!(out, "flights in hotspots: {in_hotspots}")?;
    writeln!(out, "graph edges: {}", graph.edges.len())?;
    writeln!(
        out,
        "degree: min {} max {} avg {:.3} (non-isolated) avg {:.3} (all)",
        deg.min, deg.max, deg.mean_non_isolated, deg.mean_all
    )?;
    if let Some(p) = &a.solution {
        let sol = read_solution(p, &s)?;
        let m = run_metrics(&s, &sol)?;
        match degree_of_difficulty(m.avg_delay, m.regulated_flights, in_hotspots) {
            Ok(score) => writeln!(out, "difficulty: {score:.4}")?,
            Err(e) => writeln!(out, "difficulty: n/a ({e})")?,
        }
    }
    if let Some(dir) = &a.out {
        make_dir(dir)?;
        demand.write_csv(create(&dir.join("demand.csv"))?)?;
        write_hotspots_csv(&hotspots, create(&dir.join("hotspots.csv"))?)?;
    }
    Ok(EXIT_OK)
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let s = load_scenario(&a.scenario, &a.periods)?;
    let reward = a.reward.model()?;
    let cfg = a.learn.config();
    let resume = a.resume.as_deref().map(QStore::load).transpose()?;
    let result = train_resume(&s, a.learn.method, &cfg, &reward, resume)?;
    make_dir(&a.out)?;
    let seed = cfg.seed;
    result.solution.write_csv(&s, create(&a.out.join(format!("solution_{seed}.csv")))?)?;
    write_curve_csv(&result.curve, create(&a.out.join(format!("curve_{seed}.csv")))?)?;
    result.qstore.save(a.out.join(format!("qstore_{seed}.json")))?;
    let m = run_metrics(&s, &result.solution)?;
    writeln!(
        out,
        "{} seed {seed}: remaining hotspots {}, total delay {}, avg delay {:.3}, regulated flights {}",
        a.learn.method, m.remaining_hotspots, m.total_delay, m.avg_delay, m.regulated_flights
    )?;
    Ok(EXIT_OK)
}

fn evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let s = load_scenario(&a.scenario, &a.periods)?;
    let sol = read_solution(&a.solution, &s)?;
    let m = run_metrics(&s, &sol)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&m).expect("metrics serialise"))?;
    if let Some(dir) = &a.out {
        make_dir(dir)?;
        write_histogram_csv(&m.histogram, create(&dir.join("histogram.csv"))?)?;
    }
    Ok(EXIT_OK)
}

fn oracle(a: OracleArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let s = load_scenario(&a.scenario, &a.periods)?;
    let objective = match a.objective {
        OracleObjective::TotalDelay => Objective::TotalDelay,
        OracleObjective::Reward => Objective::RewardCost(a.reward.model()?),
    };
    match brute_force_oracle(&s, &objective, a.budget)? {
        OracleOutcome::Optimal {
            assignment,
            objective: value,
            evaluated,
        } => {
            match a.objective {
                OracleObjective::TotalDelay => writeln!(out, "optimal total delay {value}")?,
                OracleObjective::Reward => writeln!(
                    out,
                    "optimal reward cost {value} (total delay {})",
                    assignment.total()
                )?,
            }
            for f in &s.flights {
                writeln!(out, "{} {}", f.id, assignment.get(&f.id))?;
            }
            writeln!(out, "evaluated {evaluated} assignments")?;
            if let Some(p) = &a.out {
                assignment.write_csv(&s, create(p)?)?;
            }
            Ok(EXIT_OK)
        }
        OracleOutcome::Infeasible { evaluated } => Err(CliError::Infeasible(format!(
            "infeasible: none of {evaluated} assignments removes every hotspot"
        ))),
    }
}

fn experiment_cmd(a: ExperimentArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let s = load_scenario(&a.scenario, &a.periods)?;
    let reward = a.reward.model()?;
    let report = experiment(&s, a.learn.method, &a.learn.config(), &reward, a.runs, a.jobs)?;
    write_experiment(&report, &s, &a.out)?;
    let sum = &report.summary;
    writeln!(out, "{} runs of {}: {} solved", sum.n_runs, sum.method, sum.solved_runs)?;
    for (name, st) in [("avg_delay", &sum.avg_delay), ("regulated_flights", &sum.regulated_flights)] {
        let p = st.ks_p_value.map_or("n/a".to_string(), |p| format!("{p:.4}"));
        writeln!(
            out,
            "{name}: mean {:.4} std {:.4} median {:.4} ks_p {p}",
            st.mean, st.std, st.median
        )?;
    }
    Ok(EXIT_OK)
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let s = load_scenario(&a.scenario, &a.periods)?;
    let reward = a.reward.model()?;
    let selected: Vec<FlightId> = if !a.select_ids.is_empty() {
        let ids: Vec<FlightId> = a.select_ids.iter().map(FlightId::new).collect();
        if let Some(bad) = ids.iter().find(|id| s.flight(id).is_none()) {
            return Err(CliError::Other(format!("unknown flight {bad}")));
        }
        ids
    } else if let Some(frac) = a.select_fraction {
        if !(0.0..=1.0).contains(&frac) {
            return Err(CliError::Other(format!("select fraction {frac} not in [0, 1]")));
        }
        let mut ids: Vec<FlightId> = s.flights.iter().filter(|f| f.regulatable).map(|f| f.id.clone()).collect();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(a.learn.seed));
        ids.truncate((frac * ids.len() as f64).ceil() as usize);
        ids
    } else {
        s.flights.iter().map(|f| f.id.clone()).collect()
    };
    let rows = cap_sweep(
        &s,
        |f| selected.contains(&f.id),
        &a.caps,
        a.learn.method,
        &a.learn.config(),
        &reward,
        a.runs,
        a.jobs,
    )?;
    make_dir(&a.out)?;
    write_sweep_csv(&rows, create(&a.out.join("sweep.csv"))?)?;
    for r in &rows {
        let oracle = match r.oracle_feasible {
            Some(true) => "feasible",
            Some(false) => "infeasible",
            None => "not enumerated",
        };
        writeln!(
            out,
            "cap {}: solved {}/{} runs, mean remaining hotspots {:.2}, mean avg delay {:.3}, oracle {oracle}",
            r.cap, r.solved_runs, r.n_runs, r.mean_remaining_hotspots, r.mean_avg_delay
        )?;
    }
    Ok(EXIT_OK)
}

fn diagnose(a: DiagnoseArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let s = load_scenario(&a.scenario, &a.periods)?;
    let model = a.reward.model()?;
    let agent = FlightId::new(&a.agent);
    if s.flight(&agent).is_none() {
        return Err(CliError::Other(format!("unknown flight {agent}")));
    }
    let eval = RewardEvaluator::new(&s, &model);
    let state = match &a.state {
        Some(p) => read_solution(p, &s)?,
        None => DelayAssignment::zeros(),
    };
    let factoredness = estimate_factoredness(
        &eval,
        &agent,
        RandomPairSampler::new(&s, agent.clone(), a.seed).take(a.samples),
    )?;
    let learnability = match estimate_learnability(
        &eval,
        &agent,
        &state,
        RandomAlternativeSampler::new(&s, a.seed.wrapping_add(1)).take(a.samples),
    ) {
        Ok(est) => json!({"value": est.value, "used": est.used, "excluded": est.excluded}),
        Err(RewardError::UndefinedRatio(n)) => json!({"value": null, "used": 0, "excluded": n}),
        Err(e) => return Err(e.into()),
    };
    let report = json!({
        "agent": agent,
        "samples": a.samples,
        "factoredness": factoredness,
        "learnability": learnability,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("json"))?;
    Ok(EXIT_OK)
}
