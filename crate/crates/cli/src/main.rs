//! Batch front-end for the blockbet library: parse a flat key=value
//! configuration, run solver / oracle / simulator commands, and emit
//! machine-readable CSV plus human-readable summaries.
//!
//! Exit codes: 0 success, 1 validation error, 2 verification failure (the
//! grid oracle rejects the closed-form equilibrium), 3 I/O error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blockbet::best_response::StrategyBox;
use blockbet::equilibrium::{solve_equilibrium, EquilibriumSet};
use blockbet::model::{user_thresholds, GameParameters, MinerStrategy, UserStrategy};
use blockbet::oracle::{default_tolerance, verify_equilibrium, StrategyGrid};
use blockbet::sim::{
    aggregate_miners_experiment, best_response_dynamics, simulate, SimulationConfig,
    SimulationReport,
};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "blockbet",
    about = "Closed-form equilibria, grid verification, and Monte Carlo simulation for the block-withholding betting game",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print betting odds and the no-profit band for (p, epsilon).
    Odds(CommonArgs),
    /// Solve the closed-form equilibrium and print its regime and box.
    Equilibrium(CommonArgs),
    /// Solve the equilibrium, then check it against the independent grid
    /// oracle; exits 2 if any sampled point shows a profitable deviation.
    Verify(CommonArgs),
    /// Sweep published frequency 0..1 and emit both per-unit bet edges.
    PayoffSurface(CommonArgs),
    /// Sweep epsilon (and a list of p values) and emit the maximum
    /// equilibrium deviation of the published frequency.
    BoundSweep(CommonArgs),
    /// Monte Carlo simulation of one strategy profile.
    Simulate(CommonArgs),
    /// Monte Carlo simulation of a population of miners with hash-rate
    /// shares; also reports the equivalent single miner.
    Aggregate(CommonArgs),
    /// Run damped best-response dynamics and emit the trajectory.
    Dynamics(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value configuration file (one binding per line, `#` comments).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// PRNG seed for simulation commands.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Grid resolution for the verification oracle.
    #[arg(long, value_name = "N")]
    grid_n: Option<usize>,
    /// Tolerance override (regime classification / oracle gain / dynamics).
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,
    /// Write CSV here instead of standard output (summary then goes to
    /// standard output).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Parameter bindings; later bindings override the config file.
    #[arg(value_name = "KEY=VALUE")]
    bindings: Vec<String>,
}

/// Process-level failure classified by exit code.
enum Failure {
    /// Bad input: unknown key, missing key, malformed value, domain error.
    Validation(String),
    /// The oracle found a profitable deviation from the closed form.
    Verification(String),
    /// Reading the config or writing the output failed.
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Verification(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Verification(m) | Failure::Io(m) => m,
        }
    }
}

impl From<blockbet::Error> for Failure {
    fn from(e: blockbet::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            // Usage mistakes are validation errors (exit 1), not clap's
            // native exit 2, which is reserved for verification failures.
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn run(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Odds(args) => cmd_odds(args),
        Command::Equilibrium(args) => cmd_equilibrium(args),
        Command::Verify(args) => cmd_verify(args),
        Command::PayoffSurface(args) => cmd_payoff_surface(args),
        Command::BoundSweep(args) => cmd_bound_sweep(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Aggregate(args) => cmd_aggregate(args),
        Command::Dynamics(args) => cmd_dynamics(args),
    }
}

// ---------------------------------------------------------------------------
// Bindings: flat key=value pairs from a config file plus CLI overrides.

struct Bindings {
    values: BTreeMap<String, String>,
}

impl Bindings {
    fn load(args: &CommonArgs, allowed: &[&str]) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("cannot read config {}: {e}", path.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = split_binding(line).ok_or_else(|| {
                    Failure::Validation(format!(
                        "config {} line {}: expected key=value, got {line:?}",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                values.insert(key.to_string(), value.to_string());
            }
        }
        // Command-line bindings override the file.
        for binding in &args.bindings {
            let (key, value) = split_binding(binding).ok_or_else(|| {
                Failure::Validation(format!("expected key=value, got {binding:?}"))
            })?;
            values.insert(key.to_string(), value.to_string());
        }
        let unknown: Vec<&String> = values
            .keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .collect();
        if !unknown.is_empty() {
            return Err(Failure::Validation(format!(
                "unknown keys: {}; this command accepts: {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", "),
                allowed.join(", ")
            )));
        }
        Ok(Bindings { values })
    }

    fn f64(&self, key: &str) -> Result<f64, Failure> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Failure::Validation(format!("key {key}: expected a number, got {raw:?}")))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, Failure> {
        match self.values.get(key) {
            None => Ok(default),
            Some(_) => self.f64(key),
        }
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, Failure> {
        match self.values.get(key) {
            None => Ok(None),
            Some(_) => self.f64(key).map(Some),
        }
    }

    fn u64(&self, key: &str) -> Result<u64, Failure> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| {
            Failure::Validation(format!(
                "key {key}: expected a non-negative integer, got {raw:?}"
            ))
        })
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, Failure> {
        match self.values.get(key) {
            None => Ok(default),
            Some(_) => self.u64(key),
        }
    }

    fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.values.get(key).map(String::as_str).unwrap_or(default)
    }

    fn require(&self, key: &str) -> Result<&str, Failure> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Failure::Validation(format!("missing required key: {key}")))
    }
}

fn split_binding(raw: &str) -> Option<(&str, &str)> {
    let (key, value) = raw.split_once('=')?;
    let key = key.trim();
    let value = value.trim();
    if key.is_empty() || value.is_empty() {
        None
    } else {
        Some((key, value))
    }
}

const PARAM_KEYS: &[&str] = &["p", "epsilon", "b_d", "b_n", "r_0", "r_w", "c_d", "c_n"];

/// Game parameters from bindings. `b_n` defaults to `b_d`, `r_0` to 0; the
/// library validates ranges.
fn params_from(bindings: &Bindings) -> Result<GameParameters, Failure> {
    let b_d = bindings.f64("b_d")?;
    Ok(GameParameters::builder()
        .p(bindings.f64("p")?)
        .epsilon(bindings.f64("epsilon")?)
        .b_d(b_d)
        .b_n(bindings.f64_or("b_n", b_d)?)
        .r_0(bindings.f64_or("r_0", 0.0)?)
        .r_w(bindings.f64("r_w")?)
        .c_d(bindings.f64("c_d")?)
        .c_n(bindings.f64("c_n")?)
        .build()?)
}

// ---------------------------------------------------------------------------
// Output plumbing: byte-stable CSV plus plain-text summaries.

/// Nine significant digits, scientific notation: the one number format every
/// CSV cell and summary value uses, so artifacts are byte-stable.
fn num(x: f64) -> String {
    format!("{x:.8e}")
}

struct Csv {
    header: &'static str,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn new(header: &'static str) -> Self {
        Csv {
            header,
            rows: Vec::new(),
        }
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        self.rows.push(cells.into_iter().collect());
    }

    fn to_bytes(&self) -> Result<Vec<u8>, Failure> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer
            .write_record(self.header.split(','))
            .map_err(|e| Failure::Io(format!("csv: {e}")))?;
        for row in &self.rows {
            writer
                .write_record(row)
                .map_err(|e| Failure::Io(format!("csv: {e}")))?;
        }
        writer
            .into_inner()
            .map_err(|e| Failure::Io(format!("csv: {e}")))
    }
}

/// Artifact-first emission: CSV to standard output, or to `--out` with the
/// summary on standard output instead.
fn emit_artifact(csv: &Csv, out: Option<&Path>, summary: &str) -> Result<(), Failure> {
    let bytes = csv.to_bytes()?;
    match out {
        None => {
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| Failure::Io(format!("stdout: {e}")))?;
        }
        Some(path) => {
            std::fs::write(path, &bytes)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
            print!("{summary}");
        }
    }
    Ok(())
}

/// Summary-first emission: summary always on standard output, CSV only when
/// `--out` is given.
fn emit_summary(csv: &Csv, out: Option<&Path>, summary: &str) -> Result<(), Failure> {
    if let Some(path) = out {
        let bytes = csv.to_bytes()?;
        std::fs::write(path, &bytes)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    print!("{summary}");
    Ok(())
}

fn describe_interval(name: &str, lo: f64, hi: f64, summary: &mut String) {
    if lo == hi {
        let _ = writeln!(summary, "{name}={lo:.6}");
    } else {
        let _ = writeln!(summary, "{name}=[{lo:.6},{hi:.6}]");
    }
}

fn describe_box(prefix_d: &str, prefix_n: &str, strategy_box: &StrategyBox, summary: &mut String) {
    describe_interval(prefix_d, strategy_box.d.lo, strategy_box.d.hi, summary);
    describe_interval(prefix_n, strategy_box.n.lo, strategy_box.n.hi, summary);
}

fn equilibrium_csv(eq: &EquilibriumSet) -> Csv {
    let mut csv = Csv::new("metric,value");
    csv.row(["regime".to_string(), eq.regime.name().to_string()]);
    for (name, value) in [
        ("omega_d_min", eq.miner_box.d.lo),
        ("omega_d_max", eq.miner_box.d.hi),
        ("omega_n_min", eq.miner_box.n.lo),
        ("omega_n_max", eq.miner_box.n.hi),
        ("lambda_d_min", eq.user_box.d.lo),
        ("lambda_d_max", eq.user_box.d.hi),
        ("lambda_n_min", eq.user_box.n.lo),
        ("lambda_n_max", eq.user_box.n.hi),
    ] {
        csv.row([name.to_string(), num(value)]);
    }
    csv
}

// ---------------------------------------------------------------------------
// Commands.

fn cmd_odds(args: &CommonArgs) -> Result<(), Failure> {
    let bindings = Bindings::load(args, &["p", "epsilon"])?;
    let p = bindings.f64("p")?;
    let epsilon = bindings.f64("epsilon")?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Failure::Validation(format!(
            "p must lie strictly between 0 and 1 (got {p})"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Failure::Validation(format!(
            "epsilon must be finite and > 0 (got {epsilon})"
        )));
    }
    let odds = blockbet::model::betting_odds(p, epsilon);
    let th = user_thresholds(p, epsilon);
    let mut csv = Csv::new("metric,value");
    for (name, value) in [
        ("beta_d", odds.beta_d),
        ("beta_n", odds.beta_n),
        ("p_low", th.p_low),
        ("p_high", th.p_high),
    ] {
        csv.row([name.to_string(), num(value)]);
    }
    let mut summary = String::new();
    let _ = writeln!(summary, "beta_d={}", num(odds.beta_d));
    let _ = writeln!(summary, "beta_n={}", num(odds.beta_n));
    let _ = writeln!(summary, "p_low={}", num(th.p_low));
    let _ = writeln!(summary, "p_high={}", num(th.p_high));
    emit_summary(&csv, args.out.as_deref(), &summary)
}

fn cmd_equilibrium(args: &CommonArgs) -> Result<(), Failure> {
    let bindings = Bindings::load(args, PARAM_KEYS)?;
    let params = params_from(&bindings)?;
    let tol = args.tol.unwrap_or(1e-9);
    let eq = solve_equilibrium(&params, tol)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "regime={}", eq.regime.name());
    describe_box("omega_d", "omega_n", &eq.miner_box, &mut summary);
    describe_box("lambda_d", "lambda_n", &eq.user_box, &mut summary);
    emit_summary(&equilibrium_csv(&eq), args.out.as_deref(), &summary)
}

fn cmd_verify(args: &CommonArgs) -> Result<(), Failure> {
    let bindings = Bindings::load(args, PARAM_KEYS)?;
    let params = params_from(&bindings)?;
    let eq = solve_equilibrium(&params, 1e-9)?;
    let grid = StrategyGrid::new(args.grid_n.unwrap_or(50));
    let tol = args.tol.unwrap_or_else(|| default_tolerance(&params));

    let mut csv = Csv::new("metric,value");
    let mut summary = String::new();
    let _ = writeln!(summary, "regime={}", eq.regime.name());
    let mut worst_gain = f64::NEG_INFINITY;
    let mut all_pass = true;
    for (index, (miner, user)) in eq.sample_points(3).iter().enumerate() {
        let report = verify_equilibrium(miner, user, &params, &grid, tol);
        worst_gain = worst_gain.max(report.max_gain());
        all_pass &= report.passes;
        csv.row([format!("point_{index}_max_gain"), num(report.max_gain())]);
        let _ = writeln!(
            summary,
            "point {index}: omega_d={:.6} lambda_d={:.6} max_gain={} {}",
            miner.omega_d(),
            user.lambda_d(),
            num(report.max_gain()),
            if report.passes { "ok" } else { "REJECTED" }
        );
    }
    csv.row(["tolerance".to_string(), num(tol)]);
    csv.row([
        "verification".to_string(),
        if all_pass { "pass" } else { "fail" }.to_string(),
    ]);
    let _ = writeln!(summary, "tolerance={}", num(tol));
    let _ = writeln!(
        summary,
        "verification={}",
        if all_pass { "pass" } else { "fail" }
    );
    emit_summary(&csv, args.out.as_deref(), &summary)?;
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "oracle found a profitable deviation (worst gain {}, tolerance {})",
            num(worst_gain),
            num(tol)
        )))
    }
}

fn cmd_payoff_surface(args: &CommonArgs) -> Result<(), Failure> {
    let bindings = Bindings::load(args, &["p", "epsilon"])?;
    let p = bindings.f64("p")?;
    let epsilon = bindings.f64("epsilon")?;
    if !(p > 0.0 && p < 1.0) || !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Failure::Validation(format!(
            "need 0 < p < 1 and epsilon > 0 (got p={p}, epsilon={epsilon})"
        )));
    }
    let odds = blockbet::model::betting_odds(p, epsilon);
    let mut csv = Csv::new("P_d,term_d,term_n");
    for i in 0..=1000u32 {
        let p_d = f64::from(i) / 1000.0;
        let term_d = odds.beta_d * p_d - (1.0 - p_d);
        let term_n = odds.beta_n * (1.0 - p_d) - p_d;
        csv.row([num(p_d), num(term_d), num(term_n)]);
    }
    let th = user_thresholds(p, epsilon);
    let summary = format!(
        "rows=1001\np_low={}\np_high={}\n",
        num(th.p_low),
        num(th.p_high)
    );
    emit_artifact(&csv, args.out.as_deref(), &summary)
}

fn cmd_bound_sweep(args: &CommonArgs) -> Result<(), Failure> {
    let bindings = Bindings::load(
        args,
        &[
            "epsilon_min",
            "epsilon_max",
            "epsilon_steps",
            "epsilon_scale",
            "p_list",
        ],
    )?;
    let eps_min = bindings.f64("epsilon_min")?;
    let eps_max = bindings.f64("epsilon_max")?;
    let steps = bindings.u64("epsilon_steps")?;
    let scale = bindings.str_or("epsilon_scale", "linear");
    if !(eps_min > 0.0 && eps_max >= eps_min && eps_max.is_finite()) {
        return Err(Failure::Validation(format!(
            "need 0 < epsilon_min <= epsilon_max (got {eps_min}, {eps_max})"
        )));
    }
    if steps < 2 {
        return Err(Failure::Validation(format!(
            "epsilon_steps must be at least 2 (got {steps})"
        )));
    }
    if scale != "linear" && scale != "log" {
        return Err(Failure::Validation(format!(
            "epsilon_scale must be linear or log (got {scale:?})"
        )));
    }
    let p_values: Vec<f64> = bindings
        .require("p_list")?
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Validation(format!("p_list: expected a number, got {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if p_values.is_empty() || p_values.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Failure::Validation(
            "p_list must hold probabilities strictly between 0 and 1".to_string(),
        ));
    }

    // Rows grouped by epsilon (ascending), then by the given p order, so the
    // p-direction monotonicity is visible in adjacent rows.
    let mut csv = Csv::new("epsilon,p,deviation");
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        let epsilon = match scale {
            "log" => (eps_min.ln() + t * (eps_max.ln() - eps_min.ln())).exp(),
            _ => eps_min + t * (eps_max - eps_min),
        };
        for &p in &p_values {
            // Maximum equilibrium shift of the published frequency above p.
            let deviation = epsilon * (1.0 - p) / (1.0 + epsilon);
            csv.row([num(epsilon), num(p), num(deviation)]);
        }
    }
    let summary = format!("rows={}\n", steps as usize * p_values.len());
    emit_artifact(&csv, args.out.as_deref(), &summary)
}

fn report_csv(report: &SimulationReport) -> Csv {
    let mut csv = Csv::new("metric,value,stderr");
    let zero = num(0.0);
    for (name, value, stderr) in [
        ("published_d", report.published_d as f64, zero.clone()),
        ("published_n", report.published_n as f64, zero.clone()),
        ("attempts", report.attempts as f64, zero.clone()),
        (
            "empirical_p_d",
            report.empirical_p_d,
            num(report.empirical_p_d_stderr),
        ),
        (
            "user_payoff_mean",
            report.user_payoff_mean,
            num(report.user_payoff_stderr),
        ),
        (
            "miner_payoff_mean",
            report.miner_payoff_mean,
            num(report.miner_payoff_stderr),
        ),
        (
            "realized_withhold_cost",
            report.realized_withhold_cost,
            zero.clone(),
        ),
    ] {
        csv.row([name.to_string(), num(value), stderr]);
    }
    csv
}

fn report_summary(report: &SimulationReport) -> String {
    let mut summary = String::new();
    let _ = writeln!(summary, "published_d={}", report.published_d);
    let _ = writeln!(summary, "published_n={}", report.published_n);
    let _ = writeln!(summary, "attempts={}", report.attempts);
    let _ = writeln!(
        summary,
        "empirical_p_d={} (se {})",
        num(report.empirical_p_d),
        num(report.empirical_p_d_stderr)
    );
    let _ = writeln!(
        summary,
        "user_payoff_mean={} (se {})",
        num(report.user_payoff_mean),
        num(report.user_payoff_stderr)
    );
    let _ = writeln!(
        summary,
        "miner_payoff_mean={} (se {})",
        num(report.miner_payoff_mean),
        num(report.miner_payoff_stderr)
    );
    let _ = writeln!(
        summary,
        "realized_withhold_cost={}",
        num(report.realized_withhold_cost)
    );
    summary
}

const SIMULATE_KEYS: &[&str] = &[
    "p",
    "epsilon",
    "b_d",
    "b_n",
    "r_0",
    "r_w",
    "c_d",
    "c_n",
    "omega_d",
    "omega_n",
    "lambda_d",
    "lambda_n",
    "n_blocks",
    "cost_per_attempt",
    "attempt_cap",
];

fn cmd_simulate(args: &CommonArgs) -> Result<(), Failure> {
    let bindings = Bindings::load(args, SIMULATE_KEYS)?;
    let params = params_from(&bindings)?;
    let miner = MinerStrategy::new(bindings.f64("omega_d")?, bindings.f64("omega_n")?)?;
    let user = UserStrategy::new(bindings.f64("lambda_d")?, bindings.f64("lambda_n")?)?;
    let mut config = SimulationConfig::new(
        params,
        miner,
        user,
        bindings.u64("n_blocks")?,
        args.seed.unwrap_or(0),
    );
    if let Some(cost) = bindings.opt_f64("cost_per_attempt")? {
        config = config.with_cost_per_attempt(cost);
    }
    let cap = bindings.u64_or("attempt_cap", config.attempt_cap)?;
    config = config.with_attempt_cap(cap);
    let report = simulate(&config)?;
    emit_artifact(
        &report_csv(&report),
        args.out.as_deref(),
        &report_summary(&report),
    )
}

const AGGREGATE_KEYS: &[&str] = &[
    "p", "epsilon", "b_d", "b_n", "r_0", "r_w", "c_d", "c_n", "shares", "n_blocks",
];

/// Parse `share:omega_d:omega_n` triples separated by commas, e.g.
/// `0.5:0:0,0.5:1:0`.
fn parse_shares(raw: &str) -> Result<Vec<(f64, MinerStrategy)>, Failure> {
    let mut shares = Vec::new();
    for part in raw.split(',') {
        let fields: Vec<&str> = part.trim().split(':').collect();
        if fields.len() != 3 {
            return Err(Failure::Validation(format!(
                "shares: expected share:omega_d:omega_n, got {part:?}"
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Validation(format!("shares: expected a number, got {s:?}")))
        };
        let share = parse(fields[0])?;
        let strategy = MinerStrategy::new(parse(fields[1])?, parse(fields[2])?)?;
        shares.push((share, strategy));
    }
    Ok(shares)
}

fn cmd_aggregate(args: &CommonArgs) -> Result<(), Failure> {
    let bindings = Bindings::load(args, AGGREGATE_KEYS)?;
    let params = params_from(&bindings)?;
    let shares = parse_shares(bindings.require("shares")?)?;
    let (report, equivalent) = aggregate_miners_experiment(
        &shares,
        &params,
        bindings.u64("n_blocks")?,
        args.seed.unwrap_or(0),
    )?;
    let mut csv = report_csv(&report);
    csv.row([
        "equivalent_omega_d".to_string(),
        num(equivalent.omega_d()),
        num(0.0),
    ]);
    csv.row([
        "equivalent_omega_n".to_string(),
        num(equivalent.omega_n()),
        num(0.0),
    ]);
    let mut summary = report_summary(&report);
    let _ = writeln!(summary, "equivalent_omega_d={}", num(equivalent.omega_d()));
    let _ = writeln!(summary, "equivalent_omega_n={}", num(equivalent.omega_n()));
    emit_artifact(&csv, args.out.as_deref(), &summary)
}

const DYNAMICS_KEYS: &[&str] = &[
    "p",
    "epsilon",
    "b_d",
    "b_n",
    "r_0",
    "r_w",
    "c_d",
    "c_n",
    "init_omega_d",
    "init_omega_n",
    "init_lambda_d",
    "init_lambda_n",
    "max_iters",
    "damping",
];

fn cmd_dynamics(args: &CommonArgs) -> Result<(), Failure> {
    let bindings = Bindings::load(args, DYNAMICS_KEYS)?;
    let params = params_from(&bindings)?;
    let init = (
        MinerStrategy::new(
            bindings.f64_or("init_omega_d", 0.0)?,
            bindings.f64_or("init_omega_n", 0.0)?,
        )?,
        UserStrategy::new(
            bindings.f64_or("init_lambda_d", 0.0)?,
            bindings.f64_or("init_lambda_n", 0.0)?,
        )?,
    );
    let max_iters = bindings.u64_or("max_iters", 10_000)? as usize;
    let damping = bindings.f64_or("damping", 0.1)?;
    let tol = args.tol.unwrap_or(1e-6);
    let trace = best_response_dynamics(&params, init, max_iters, damping, tol)?;

    let mut csv = Csv::new("iteration,omega_d,omega_n,lambda_d,lambda_n");
    for (iteration, (miner, user)) in trace.iterates.iter().enumerate() {
        csv.row([
            iteration.to_string(),
            num(miner.omega_d()),
            num(miner.omega_n()),
            num(user.lambda_d()),
            num(user.lambda_n()),
        ]);
    }
    let (miner, user) = trace.final_point;
    let mut summary = String::new();
    let _ = writeln!(summary, "converged={}", trace.converged);
    let _ = writeln!(summary, "iterations={}", trace.iterations());
    let _ = writeln!(summary, "omega_d={:.6}", miner.omega_d());
    let _ = writeln!(summary, "omega_n={:.6}", miner.omega_n());
    let _ = writeln!(summary, "lambda_d={:.6}", user.lambda_d());
    let _ = writeln!(summary, "lambda_n={:.6}", user.lambda_n());
    emit_artifact(&csv, args.out.as_deref(), &summary)
}
