//! Seeded Monte Carlo simulation of block production, withholding, betting
//! settlement and cost accounting, plus best-response learning dynamics.
//!
//! # Reproducibility contract
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`). A run seeds one base
//! generator from the 64-bit seed and gives every block its own independent
//! stream: `stream = block index`. Within a block the draw order is fixed:
//! producer selection (aggregation runs only), miner action, candidate
//! outcomes until one is publishable, then the user's bet. Blocks are summed
//! in fixed-size chunks in block order, so reports are bit-identical across
//! runs and thread counts.

use crate::best_response::{miner_best_response, user_best_response};
use crate::model::{published_distribution, GameParameters, MinerStrategy, UserStrategy};
use crate::oracle::miner_best_response_box;
use crate::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Default per-block cap on candidate draws while forcing an outcome.
pub const DEFAULT_ATTEMPT_CAP: u64 = 1_000_000;

/// Blocks per summation chunk. Fixed (not thread-count dependent) so the
/// floating-point accumulation order never changes.
const CHUNK_BLOCKS: u64 = 65_536;

/// Expected number of discarded candidates per forced publication, times the
/// per-candidate cost: `C_d = c(1-p)/p` when forcing `D`, `C_n = c·p/(1-p)`
/// when forcing non-`D` (the retry count is geometric).
pub fn derive_forcing_costs(cost_per_attempt: f64, p: f64) -> (f64, f64) {
    debug_assert!(cost_per_attempt >= 0.0, "cost_per_attempt must be >= 0");
    debug_assert!(p > 0.0 && p < 1.0, "p must lie strictly between 0 and 1");
    (
        cost_per_attempt * (1.0 - p) / p,
        cost_per_attempt * p / (1.0 - p),
    )
}

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Game parameters. When [`cost_per_attempt`](Self::cost_per_attempt) is
    /// set, its derived forcing costs override `c_d`/`c_n` for analytic
    /// comparisons — see [`SimulationConfig::effective_params`].
    pub params: GameParameters,
    /// The miner's mixed strategy, sampled independently per block.
    pub miner: MinerStrategy,
    /// The user's mixed strategy, sampled independently per block.
    pub user: UserStrategy,
    /// Number of published blocks to simulate (at least 1).
    pub n_blocks: u64,
    /// PRNG seed; identical seeds give bit-identical reports.
    pub seed: u64,
    /// Per-candidate mining cost `c`. `Some(c)` charges `c` for every
    /// discarded candidate and overrides `c_d`/`c_n` via
    /// [`derive_forcing_costs`]; `None` keeps the configured `c_d`/`c_n` and
    /// charges the implied per-discard cost for each forcing mode.
    pub cost_per_attempt: Option<f64>,
    /// Per-block cap on candidate draws (default [`DEFAULT_ATTEMPT_CAP`]).
    pub attempt_cap: u64,
}

impl SimulationConfig {
    /// A config with no per-attempt cost override and the default attempt cap.
    pub fn new(
        params: GameParameters,
        miner: MinerStrategy,
        user: UserStrategy,
        n_blocks: u64,
        seed: u64,
    ) -> Self {
        SimulationConfig {
            params,
            miner,
            user,
            n_blocks,
            seed,
            cost_per_attempt: None,
            attempt_cap: DEFAULT_ATTEMPT_CAP,
        }
    }

    /// Set the per-candidate mining cost (overrides `c_d`/`c_n`).
    pub fn with_cost_per_attempt(mut self, cost: f64) -> Self {
        self.cost_per_attempt = Some(cost);
        self
    }

    /// Set the per-block candidate cap.
    pub fn with_attempt_cap(mut self, cap: u64) -> Self {
        self.attempt_cap = cap;
        self
    }

    /// The parameters the run is analytically equivalent to: when
    /// `cost_per_attempt` is set, `c_d`/`c_n` are replaced by its derived
    /// forcing costs; otherwise the configured parameters unchanged.
    pub fn effective_params(&self) -> GameParameters {
        match self.cost_per_attempt {
            None => self.params,
            Some(c) => {
                let (c_d, c_n) = derive_forcing_costs(c, self.params.p());
                GameParameters::builder()
                    .p(self.params.p())
                    .epsilon(self.params.epsilon())
                    .b_d(self.params.b_d())
                    .b_n(self.params.b_n())
                    .r_0(self.params.r_0())
                    .r_w(self.params.r_w())
                    .c_d(c_d)
                    .c_n(c_n)
                    .build()
                    .expect("replacing costs keeps parameters valid")
            }
        }
    }

    fn validate(&self) -> Result<(), Error> {
        let mut violations = Vec::new();
        if self.n_blocks == 0 {
            violations.push("n_blocks must be at least 1".to_string());
        }
        if self.attempt_cap == 0 {
            violations.push("attempt_cap must be at least 1".to_string());
        }
        if let Some(c) = self.cost_per_attempt {
            if !c.is_finite() || c < 0.0 {
                violations.push(format!(
                    "cost_per_attempt must be finite and >= 0 (got {c})"
                ));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(violations))
        }
    }
}

/// Aggregated results of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationReport {
    /// Published blocks reporting `D`.
    pub published_d: u64,
    /// Published blocks reporting non-`D`; `published_d + published_n`
    /// always equals the configured block count.
    pub published_n: u64,
    /// Total candidate blocks mined, including discarded ones; at least the
    /// block count.
    pub attempts: u64,
    /// `published_d / n_blocks`.
    pub empirical_p_d: f64,
    /// Binomial standard error of [`empirical_p_d`](Self::empirical_p_d).
    pub empirical_p_d_stderr: f64,
    /// Mean per-block user payoff.
    pub user_payoff_mean: f64,
    /// Standard error of the user payoff mean.
    pub user_payoff_stderr: f64,
    /// Mean per-block miner payoff.
    pub miner_payoff_mean: f64,
    /// Standard error of the miner payoff mean.
    pub miner_payoff_stderr: f64,
    /// Total cost charged for discarded candidates. With a uniform
    /// per-attempt cost `c` this equals `(attempts - n_blocks) * c` exactly.
    pub realized_withhold_cost: f64,
}

/// Per-block simulation outcome.
struct BlockResult {
    published_d: bool,
    attempts: u64,
    discards_d: u64,
    discards_n: u64,
    user_payoff: f64,
    miner_payoff_before_cost: f64,
}

/// Running sums over blocks. Addition order is fixed by block order.
#[derive(Default)]
struct Totals {
    published_d: u64,
    attempts: u64,
    discards_d: u64,
    discards_n: u64,
    user_sum: f64,
    user_sq_sum: f64,
    miner_sum: f64,
    miner_sq_sum: f64,
}

impl Totals {
    fn add(&mut self, b: &BlockResult, cost_d: f64, cost_n: f64) {
        self.published_d += u64::from(b.published_d);
        self.attempts += b.attempts;
        self.discards_d += b.discards_d;
        self.discards_n += b.discards_n;
        let block_cost = b.discards_d as f64 * cost_d + b.discards_n as f64 * cost_n;
        let miner = b.miner_payoff_before_cost - block_cost;
        self.user_sum += b.user_payoff;
        self.user_sq_sum += b.user_payoff * b.user_payoff;
        self.miner_sum += miner;
        self.miner_sq_sum += miner * miner;
    }

    fn merge(&mut self, other: &Totals) {
        self.published_d += other.published_d;
        self.attempts += other.attempts;
        self.discards_d += other.discards_d;
        self.discards_n += other.discards_n;
        self.user_sum += other.user_sum;
        self.user_sq_sum += other.user_sq_sum;
        self.miner_sum += other.miner_sum;
        self.miner_sq_sum += other.miner_sq_sum;
    }
}

/// What one candidate chain round must publish.
#[derive(Clone, Copy, PartialEq)]
enum MinerAction {
    Honest,
    ForceD,
    ForceN,
}

/// Sample one block: miner action, candidate draws until publishable, user
/// bet, settlement. Returns the raw per-block outcome (costs are attached by
/// the accumulator so the cost model stays in one place).
fn run_block(
    rng: &mut ChaCha8Rng,
    block_index: u64,
    miner: &MinerStrategy,
    user: &UserStrategy,
    params: &GameParameters,
    attempt_cap: u64,
) -> Result<BlockResult, Error> {
    let action = {
        let u: f64 = rng.gen();
        if u < miner.omega_d() {
            MinerAction::ForceD
        } else if u < miner.omega_d() + miner.omega_n() {
            MinerAction::ForceN
        } else {
            MinerAction::Honest
        }
    };

    let p = params.p();
    let mut attempts: u64 = 0;
    let outcome_d = loop {
        if attempts == attempt_cap {
            return Err(Error::Resource(format!(
                "block {block_index}: forced outcome not mined within {attempt_cap} candidate draws"
            )));
        }
        attempts += 1;
        let candidate_d = rng.gen_bool(p);
        match action {
            MinerAction::Honest => break candidate_d,
            MinerAction::ForceD if candidate_d => break true,
            MinerAction::ForceN if !candidate_d => break false,
            _ => {}
        }
    };
    let discards = attempts - 1;
    let (discards_d, discards_n) = match action {
        MinerAction::ForceD => (discards, 0),
        MinerAction::ForceN => (0, discards),
        MinerAction::Honest => (0, 0),
    };

    let odds = params.odds();
    let user_payoff = {
        let u: f64 = rng.gen();
        if u < user.lambda_d() {
            if outcome_d {
                odds.beta_d * params.b_d()
            } else {
                -params.b_d()
            }
        } else if u < user.lambda_d() + user.lambda_n() {
            if !outcome_d {
                odds.beta_n * params.b_n()
            } else {
                -params.b_n()
            }
        } else {
            0.0
        }
    };

    let miner_payoff_before_cost =
        params.r_0() + if outcome_d { params.r_w() } else { 0.0 } - user_payoff;

    Ok(BlockResult {
        published_d: outcome_d,
        attempts,
        discards_d,
        discards_n,
        user_payoff,
        miner_payoff_before_cost,
    })
}

/// Run `n_blocks` independent block draws in fixed chunks, in parallel, and
/// combine them in block order. `per_block` receives a generator already
/// positioned on the block's private stream.
fn run_chunked<F>(
    n_blocks: u64,
    seed: u64,
    cost_d: f64,
    cost_n: f64,
    per_block: F,
) -> Result<Totals, Error>
where
    F: Fn(&mut ChaCha8Rng, u64) -> Result<BlockResult, Error> + Sync,
{
    let base = ChaCha8Rng::seed_from_u64(seed);
    let n_chunks = n_blocks.div_ceil(CHUNK_BLOCKS);
    let partials: Vec<Result<Totals, Error>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK_BLOCKS;
            let end = (start + CHUNK_BLOCKS).min(n_blocks);
            let mut totals = Totals::default();
            for block in start..end {
                let mut rng = base.clone();
                rng.set_stream(block);
                let result = per_block(&mut rng, block)?;
                totals.add(&result, cost_d, cost_n);
            }
            Ok(totals)
        })
        .collect();

    let mut totals = Totals::default();
    for partial in partials {
        totals.merge(&partial?);
    }
    Ok(totals)
}

/// Standard error of a mean from raw sums; zero when a single sample leaves
/// the spread undefined.
fn stderr_of_mean(sum: f64, sq_sum: f64, n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let n_f = n as f64;
    let mean = sum / n_f;
    let var = ((sq_sum - n_f * mean * mean) / (n_f - 1.0)).max(0.0);
    (var / n_f).sqrt()
}

fn report_from_totals(
    totals: &Totals,
    n_blocks: u64,
    cost_d: f64,
    cost_n: f64,
) -> SimulationReport {
    let n_f = n_blocks as f64;
    let empirical_p_d = totals.published_d as f64 / n_f;
    SimulationReport {
        published_d: totals.published_d,
        published_n: n_blocks - totals.published_d,
        attempts: totals.attempts,
        empirical_p_d,
        empirical_p_d_stderr: (empirical_p_d * (1.0 - empirical_p_d) / n_f).sqrt(),
        user_payoff_mean: totals.user_sum / n_f,
        user_payoff_stderr: stderr_of_mean(totals.user_sum, totals.user_sq_sum, n_blocks),
        miner_payoff_mean: totals.miner_sum / n_f,
        miner_payoff_stderr: stderr_of_mean(totals.miner_sum, totals.miner_sq_sum, n_blocks),
        realized_withhold_cost: totals.discards_d as f64 * cost_d
            + totals.discards_n as f64 * cost_n,
    }
}

/// The cost charged per discarded candidate in each forcing mode. With a
/// uniform per-attempt cost it is that cost in both modes; otherwise the
/// configured per-publication costs are spread over the expected number of
/// discards, so the expected per-forced-block cost equals `c_d` (resp.
/// `c_n`).
fn per_discard_costs(params: &GameParameters, cost_per_attempt: Option<f64>) -> (f64, f64) {
    let p = params.p();
    match cost_per_attempt {
        Some(c) => (c, c),
        None => (params.c_d() * p / (1.0 - p), params.c_n() * (1.0 - p) / p),
    }
}

/// Simulate block production under fixed mixed strategies.
///
/// Per published block: the miner's action is sampled from `(omega_d,
/// omega_n)`; under a forcing action, candidate blocks are drawn
/// Bernoulli(`p`) and discarded until the desired outcome appears (each
/// discard charged per the cost model); the user's bet is sampled from
/// `(lambda_d, lambda_n)` and settled at `beta * b` profit on a win, `-b` on
/// a loss.
///
/// # Errors
///
/// - [`Error::Domain`] for invalid counts or a negative cost.
/// - [`Error::Resource`] if a forced outcome is not mined within the
///   per-block attempt cap.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationReport, Error> {
    config.validate()?;
    let (cost_d, cost_n) = per_discard_costs(&config.params, config.cost_per_attempt);
    let totals = run_chunked(
        config.n_blocks,
        config.seed,
        cost_d,
        cost_n,
        |rng, block| {
            run_block(
                rng,
                block,
                &config.miner,
                &config.user,
                &config.params,
                config.attempt_cap,
            )
        },
    )?;
    Ok(report_from_totals(&totals, config.n_blocks, cost_d, cost_n))
}

/// Simulate a population of miners with fixed hash-rate shares, each playing
/// its own withholding strategy; the user abstains. Returns the pooled
/// report and the share-weighted single-miner strategy the population is
/// equivalent to.
///
/// # Errors
///
/// [`Error::Domain`] if shares are empty, negative, or do not sum to 1
/// (within 1e-9); [`Error::Resource`] as in [`simulate`].
pub fn aggregate_miners_experiment(
    shares: &[(f64, MinerStrategy)],
    params: &GameParameters,
    n_blocks: u64,
    seed: u64,
) -> Result<(SimulationReport, MinerStrategy), Error> {
    if shares.is_empty() {
        return Err(Error::domain("shares must not be empty"));
    }
    let mut violations = Vec::new();
    let mut total = 0.0;
    for (i, (share, _)) in shares.iter().enumerate() {
        if !share.is_finite() || *share < 0.0 {
            violations.push(format!("share {i} must be finite and >= 0 (got {share})"));
        }
        total += share;
    }
    if violations.is_empty() && (total - 1.0).abs() > 1e-9 {
        violations.push(format!("shares must sum to 1 (got {total})"));
    }
    if n_blocks == 0 {
        violations.push("n_blocks must be at least 1".to_string());
    }
    if !violations.is_empty() {
        return Err(Error::Domain(violations));
    }

    let equivalent = {
        let mut d = 0.0;
        let mut n = 0.0;
        for (share, strategy) in shares {
            d += share * strategy.omega_d();
            n += share * strategy.omega_n();
        }
        MinerStrategy::new(d, n).expect("a convex mixture of strategies stays in the simplex")
    };

    let user = UserStrategy::abstain();
    let (cost_d, cost_n) = per_discard_costs(params, None);
    let totals = run_chunked(n_blocks, seed, cost_d, cost_n, |rng, block| {
        let producer = {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = &shares[shares.len() - 1].1;
            for (share, strategy) in shares {
                acc += share;
                if u < acc {
                    chosen = strategy;
                    break;
                }
            }
            chosen
        };
        run_block(rng, block, producer, &user, params, DEFAULT_ATTEMPT_CAP)
    })?;
    Ok((
        report_from_totals(&totals, n_blocks, cost_d, cost_n),
        equivalent,
    ))
}

/// The recorded trajectory of the learning dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTrace {
    /// Every visited point, starting with the initial one.
    pub iterates: Vec<(MinerStrategy, UserStrategy)>,
    /// Whether the run certified convergence (see
    /// [`best_response_dynamics`]).
    pub converged: bool,
    /// The last iterate.
    pub final_point: (MinerStrategy, UserStrategy),
}

impl DynamicsTrace {
    /// Iterations performed (excludes the initial point).
    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }
}

/// Iterations of near-stationarity required before stopping early.
const STATIONARY_WINDOW: u32 = 16;
/// A best-response target jumping farther than this (max norm) between
/// consecutive iterations marks a threshold crossing.
const FLIP_JUMP: f64 = 0.5;

/// Alternating damped best-response dynamics.
///
/// Each iteration the miner moves toward its best response to the current
/// user point, then the user moves toward its best response to the *new*
/// miner point. The moved-toward element of a set-valued response is the
/// projection of the mover's current point onto the response box — the
/// nearest optimal point — so any profile that is already mutually optimal
/// is exactly stationary.
///
/// Step sizes: a constant `damping` fraction until the trajectory first
/// crosses a decision threshold (a best-response target jumps between
/// iterations), then an averaging schedule `1/2, 1/3, 1/4, …` of the
/// remaining distance. Strict-regime trajectories never cross a threshold
/// and keep the geometric constant-damping approach; mixed-regime
/// trajectories, which orbit their equilibrium under any constant step,
/// average their way into it instead (accuracy improves roughly like one
/// over the iteration count — size `max_iters` accordingly).
///
/// The trace reports `converged = true` when one of three certificates
/// holds, in order of strength: the iterate stopped moving exactly (a true
/// fixed point — stops early); both the step and the distance to the
/// current targets stayed below `tol` for [`STATIONARY_WINDOW`] consecutive
/// iterations (stops early); or the final successive-iterate difference is
/// below `tol` in max norm. Otherwise the trace reports `converged = false`
/// — non-convergence is a reported state, not an error.
///
/// # Errors
///
/// [`Error::Domain`] if `c_d = 0` or `c_n = 0` (best responses lose their
/// threshold structure), if `damping` is outside `(0, 1]`, or if `tol` is
/// not strictly positive.
pub fn best_response_dynamics(
    params: &GameParameters,
    init: (MinerStrategy, UserStrategy),
    max_iters: usize,
    damping: f64,
    tol: f64,
) -> Result<DynamicsTrace, Error> {
    let mut violations = Vec::new();
    if params.c_d() == 0.0 || params.c_n() == 0.0 {
        violations
            .push("dynamics requires strictly positive withholding costs c_d, c_n".to_string());
    }
    if !(damping > 0.0 && damping <= 1.0) {
        violations.push(format!("damping must lie in (0, 1] (got {damping})"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        violations.push(format!("tol must be finite and > 0 (got {tol})"));
    }
    if !violations.is_empty() {
        return Err(Error::Domain(violations));
    }

    let (mut miner, mut user) = init;
    let mut iterates = Vec::with_capacity(max_iters.saturating_add(1).min(1 << 20));
    iterates.push((miner, user));

    let mut converged = false;
    let mut stationary_streak: u32 = 0;
    let mut averaging_count: u64 = 0;
    let mut prev_targets: Option<[f64; 4]> = None;
    let mut last_delta = f64::INFINITY;

    for _ in 0..max_iters {
        let miner_box = if user.lambda_n() == 0.0 {
            miner_best_response(&user, params)
                .expect("positive costs and lambda_n = 0 satisfy the closed form's domain")
        } else {
            miner_best_response_box(&user, params)
        };
        let step = if averaging_count == 0 {
            damping
        } else {
            1.0 / (averaging_count as f64 + 1.0)
        };

        let (tm_d, tm_n) = miner_box.project(miner.omega_d(), miner.omega_n());
        let new_miner = MinerStrategy::new(
            miner.omega_d() + step * (tm_d - miner.omega_d()),
            miner.omega_n() + step * (tm_n - miner.omega_n()),
        )
        .expect("a damped move toward a feasible target stays in the simplex");

        let (p_d, _) = published_distribution(&new_miner, params.p());
        let user_box = user_best_response(p_d, params);
        let (tu_d, tu_n) = user_box.project(user.lambda_d(), user.lambda_n());
        let new_user = UserStrategy::new(
            user.lambda_d() + step * (tu_d - user.lambda_d()),
            user.lambda_n() + step * (tu_n - user.lambda_n()),
        )
        .expect("a damped move toward a feasible target stays in the simplex");

        let targets = [tm_d, tm_n, tu_d, tu_n];
        if let Some(prev) = prev_targets {
            let jump = targets
                .iter()
                .zip(prev.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            if jump > FLIP_JUMP && averaging_count == 0 {
                averaging_count = 1;
            }
        }
        if averaging_count > 0 {
            averaging_count += 1;
        }
        prev_targets = Some(targets);

        let delta = [
            new_miner.omega_d() - miner.omega_d(),
            new_miner.omega_n() - miner.omega_n(),
            new_user.lambda_d() - user.lambda_d(),
            new_user.lambda_n() - user.lambda_n(),
        ]
        .iter()
        .map(|d| d.abs())
        .fold(0.0_f64, f64::max);
        let dist_to_target = [
            tm_d - new_miner.omega_d(),
            tm_n - new_miner.omega_n(),
            tu_d - new_user.lambda_d(),
            tu_n - new_user.lambda_n(),
        ]
        .iter()
        .map(|d| d.abs())
        .fold(0.0_f64, f64::max);

        miner = new_miner;
        user = new_user;
        iterates.push((miner, user));
        last_delta = delta;

        if delta == 0.0 {
            converged = true;
            break;
        }
        if delta < tol && dist_to_target < tol {
            stationary_streak += 1;
            if stationary_streak >= STATIONARY_WINDOW {
                converged = true;
                break;
            }
        } else {
            stationary_streak = 0;
        }
    }

    if !converged {
        converged = last_delta < tol;
    }
    Ok(DynamicsTrace {
        final_point: *iterates
            .last()
            .expect("trace holds at least the initial point"),
        iterates,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoffs::{miner_payoff, user_payoff};

    fn exemplar() -> GameParameters {
        GameParameters::builder()
            .p(0.4)
            .epsilon(0.05)
            .b_d(6.0)
            .b_n(6.0)
            .r_w(10.0)
            .c_d(1.2)
            .c_n(0.6)
            .build()
            .unwrap()
    }

    #[test]
    fn forcing_costs_match_the_geometric_retry_model() {
        let (c_d, c_n) = derive_forcing_costs(1.0, 0.4);
        assert!((c_d - 1.5).abs() < 1e-15);
        assert!((c_n - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(derive_forcing_costs(1.0, 0.5), (1.0, 1.0));
        assert_eq!(derive_forcing_costs(0.0, 0.123), (0.0, 0.0));
    }

    #[test]
    fn honest_runs_publish_every_candidate() {
        let config = SimulationConfig::new(
            exemplar(),
            MinerStrategy::honest(),
            UserStrategy::abstain(),
            100_000,
            42,
        );
        let report = simulate(&config).unwrap();
        assert_eq!(report.published_d + report.published_n, 100_000);
        assert_eq!(report.attempts, 100_000);
        assert_eq!(report.realized_withhold_cost, 0.0);
        assert_eq!(report.user_payoff_mean, 0.0);
        // Binomial 4-sigma band around p.
        let sigma = (0.4_f64 * 0.6 / 100_000.0).sqrt();
        assert!((report.empirical_p_d - 0.4).abs() < 4.0 * sigma);
    }

    #[test]
    fn forcing_d_publishes_only_d() {
        let config = SimulationConfig::new(
            exemplar(),
            MinerStrategy::force_d(),
            UserStrategy::abstain(),
            20_000,
            7,
        );
        let report = simulate(&config).unwrap();
        assert_eq!(report.published_d, 20_000);
        assert_eq!(report.empirical_p_d, 1.0);
        assert!(report.attempts >= 20_000);
    }

    #[test]
    fn reports_are_bit_identical_across_runs_and_thread_counts() {
        let config = SimulationConfig::new(
            exemplar(),
            MinerStrategy::new(0.3, 0.2).unwrap(),
            UserStrategy::new(0.4, 0.1).unwrap(),
            200_000,
            0xDEADBEEF,
        )
        .with_cost_per_attempt(0.35);

        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate(&config).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| simulate(&config).unwrap());
        let again = simulate(&config).unwrap();

        for report in [&four, &again] {
            assert_eq!(one.published_d, report.published_d);
            assert_eq!(one.attempts, report.attempts);
            assert_eq!(
                one.user_payoff_mean.to_bits(),
                report.user_payoff_mean.to_bits()
            );
            assert_eq!(
                one.miner_payoff_mean.to_bits(),
                report.miner_payoff_mean.to_bits()
            );
            assert_eq!(
                one.user_payoff_stderr.to_bits(),
                report.user_payoff_stderr.to_bits()
            );
            assert_eq!(
                one.miner_payoff_stderr.to_bits(),
                report.miner_payoff_stderr.to_bits()
            );
            assert_eq!(
                one.realized_withhold_cost.to_bits(),
                report.realized_withhold_cost.to_bits()
            );
        }
    }

    #[test]
    fn withhold_cost_is_exactly_discards_times_unit_cost() {
        let config = SimulationConfig::new(
            exemplar(),
            MinerStrategy::new(0.4, 0.3).unwrap(),
            UserStrategy::abstain(),
            50_000,
            11,
        )
        .with_cost_per_attempt(0.7);
        let report = simulate(&config).unwrap();
        let discards = (report.attempts - 50_000) as f64;
        assert_eq!(report.realized_withhold_cost, discards * 0.7);
        assert!(report.attempts > 50_000);
    }

    #[test]
    fn attempt_cap_is_a_resource_error() {
        let config = SimulationConfig::new(
            exemplar(),
            MinerStrategy::force_d(),
            UserStrategy::abstain(),
            100,
            1,
        )
        .with_attempt_cap(1);
        match simulate(&config) {
            Err(Error::Resource(_)) => {}
            other => panic!("expected Resource error, got {other:?}"),
        }
    }

    /// Empirical payoff means agree with the analytic formulas once the
    /// analytic withholding spend is replaced by the realized one.
    #[test]
    fn payoff_means_are_consistent_with_the_analytic_model() {
        let params = exemplar();
        let miner = MinerStrategy::new(0.25, 0.15).unwrap();
        let user = UserStrategy::new(0.5, 0.2).unwrap();
        let config = SimulationConfig::new(params, miner, user, 200_000, 99);
        let report = simulate(&config).unwrap();

        let analytic_user = user_payoff(&user, &miner, &params);
        assert!(
            (report.user_payoff_mean - analytic_user).abs() < 4.0 * report.user_payoff_stderr,
            "user mean {} vs analytic {} (se {})",
            report.user_payoff_mean,
            analytic_user,
            report.user_payoff_stderr
        );

        // miner_payoff charges omega_d*c_d + omega_n*c_n in expectation;
        // swap in what the run actually spent.
        let analytic_spend = miner.omega_d() * params.c_d() + miner.omega_n() * params.c_n();
        let realized_spend = report.realized_withhold_cost / 200_000.0;
        let analytic_miner = miner_payoff(&user, &miner, &params) + analytic_spend - realized_spend;
        assert!(
            (report.miner_payoff_mean - analytic_miner).abs() < 4.0 * report.miner_payoff_stderr,
            "miner mean {} vs analytic {} (se {})",
            report.miner_payoff_mean,
            analytic_miner,
            report.miner_payoff_stderr
        );
    }

    #[test]
    fn aggregation_pools_to_the_share_weighted_miner() {
        let params = exemplar();
        let shares = [
            (0.5, MinerStrategy::honest()),
            (0.5, MinerStrategy::force_d()),
        ];
        let (report, equivalent) =
            aggregate_miners_experiment(&shares, &params, 200_000, 5).unwrap();
        assert_eq!(equivalent, MinerStrategy::new(0.5, 0.0).unwrap());
        let (analytic_p_d, _) = published_distribution(&equivalent, params.p());
        assert!((analytic_p_d - 0.7).abs() < 1e-15);
        let sigma = (0.7_f64 * 0.3 / 200_000.0).sqrt();
        assert!(
            (report.empirical_p_d - analytic_p_d).abs() < 4.0 * sigma,
            "pooled {} vs analytic {analytic_p_d}",
            report.empirical_p_d
        );
    }

    #[test]
    fn three_way_aggregation_matches_the_mixture_formula() {
        let params = exemplar();
        let third = 1.0 / 3.0;
        let shares = [
            (third, MinerStrategy::force_d()),
            (third, MinerStrategy::force_n()),
            (third, MinerStrategy::honest()),
        ];
        let (report, equivalent) =
            aggregate_miners_experiment(&shares, &params, 200_000, 6).unwrap();
        assert!((equivalent.omega_d() - third).abs() < 1e-15);
        assert!((equivalent.omega_n() - third).abs() < 1e-15);
        let (analytic_p_d, _) = published_distribution(&equivalent, params.p());
        assert!((analytic_p_d - (third + third * 0.4)).abs() < 1e-12);
        let sigma = (analytic_p_d * (1.0 - analytic_p_d) / 200_000.0).sqrt();
        assert!((report.empirical_p_d - analytic_p_d).abs() < 4.0 * sigma);
    }

    #[test]
    fn aggregation_rejects_bad_shares() {
        let params = exemplar();
        let shares = [
            (0.5, MinerStrategy::honest()),
            (0.4, MinerStrategy::force_d()),
        ];
        assert!(matches!(
            aggregate_miners_experiment(&shares, &params, 10, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            aggregate_miners_experiment(&[], &params, 10, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn dynamics_reaches_the_mixed_equilibrium_from_zero() {
        let params = exemplar();
        let init = (MinerStrategy::honest(), UserStrategy::abstain());
        let trace = best_response_dynamics(&params, init, 10_000, 0.1, 1e-4).unwrap();
        assert!(trace.converged);
        assert!(trace.iterations() <= 10_000);
        let (miner, user) = trace.final_point;
        let err = (miner.omega_d() - 0.05 / 1.05)
            .abs()
            .max(miner.omega_n().abs())
            .max((user.lambda_d() - 4.0 / 7.0).abs())
            .max(user.lambda_n().abs());
        assert!(err <= 1e-3, "final point is {err} from the equilibrium");
    }

    #[test]
    fn dynamics_is_stationary_at_the_equilibrium() {
        let params = exemplar();
        let init = (
            MinerStrategy::new(0.05 / 1.05, 0.0).unwrap(),
            UserStrategy::new(4.0 / 7.0, 0.0).unwrap(),
        );
        let trace = best_response_dynamics(&params, init, 10_000, 0.1, 1e-4).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations(), 1, "fixed point certifies immediately");
        assert_eq!(trace.final_point, init);
    }

    #[test]
    fn dynamics_absorbs_into_the_idle_equilibrium() {
        let params = GameParameters::builder()
            .p(0.4)
            .epsilon(0.05)
            .b_d(6.0)
            .b_n(6.0)
            .r_w(1.0)
            .c_d(1.2)
            .c_n(0.6)
            .build()
            .unwrap();
        for (wd, wn, ld, ln) in [
            (0.0, 0.0, 0.0, 0.0),
            (0.7, 0.1, 0.6, 0.2),
            (0.2, 0.6, 0.1, 0.8),
            (0.9, 0.05, 0.3, 0.3),
        ] {
            let init = (
                MinerStrategy::new(wd, wn).unwrap(),
                UserStrategy::new(ld, ln).unwrap(),
            );
            let trace = best_response_dynamics(&params, init, 10_000, 0.1, 1e-4).unwrap();
            assert!(trace.converged, "from ({wd},{wn},{ld},{ln})");
            let (miner, user) = trace.final_point;
            let err = miner
                .omega_d()
                .max(miner.omega_n())
                .max(user.lambda_d())
                .max(user.lambda_n());
            assert!(err <= 1e-2, "from ({wd},{wn},{ld},{ln}): err {err}");
        }
    }

    #[test]
    fn dynamics_reports_nonconvergence_when_cut_short() {
        let params = exemplar();
        let init = (MinerStrategy::honest(), UserStrategy::abstain());
        let trace = best_response_dynamics(&params, init, 3, 0.1, 1e-4).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.iterations(), 3);
    }

    #[test]
    fn dynamics_validates_its_inputs() {
        let params = exemplar();
        let init = (MinerStrategy::honest(), UserStrategy::abstain());
        assert!(matches!(
            best_response_dynamics(&params, init, 10, 0.0, 1e-4),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            best_response_dynamics(&params, init, 10, 1.5, 1e-4),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            best_response_dynamics(&params, init, 10, 0.5, 0.0),
            Err(Error::Domain(_))
        ));
        let free = GameParameters::builder()
            .p(0.4)
            .epsilon(0.05)
            .b_d(6.0)
            .r_w(10.0)
            .c_d(0.0)
            .c_n(0.6)
            .build()
            .unwrap();
        assert!(matches!(
            best_response_dynamics(&free, init, 10, 0.5, 1e-4),
            Err(Error::Domain(_))
        ));
    }

    /// The miner's realized reward per block matches its definition: base
    /// reward plus conditional reward minus the user's winnings minus costs.
    #[test]
    fn per_block_accounting_balances() {
        let params = exemplar();
        let miner = MinerStrategy::new(0.5, 0.0).unwrap();
        let user = UserStrategy::bet_d();
        let config = SimulationConfig::new(params, miner, user, 50_000, 3);
        let report = simulate(&config).unwrap();
        // Zero-sum core: miner mean + user mean = R_w * P_d - cost/block
        // (with R_0 = 0).
        let lhs = report.miner_payoff_mean + report.user_payoff_mean;
        let rhs = 10.0 * report.empirical_p_d - report.realized_withhold_cost / 50_000.0;
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }
}
