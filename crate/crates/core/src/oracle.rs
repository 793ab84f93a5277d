//! Brute-force verification layer: grid-discretized best responses and
//! epsilon-Nash search, independent of the closed-form solutions.
//!
//! Both expected payoffs are affine in each player's own mixed strategy, so a
//! player's best unilateral deviation is always attained at one of their three
//! pure strategies. The oracle exploits that for exact deviation gains while
//! retaining a full strategy grid for discovery-mode searches.

use crate::best_response::{Interval, StrategyBox};
use crate::model::{published_distribution, GameParameters, MinerStrategy, UserStrategy};
use crate::payoffs::{miner_payoff, user_payoff};
use rayon::prelude::*;

/// Relative tie tolerance when collecting argmax vertex sets.
const VERTEX_TIE_TOL: f64 = 1e-9;

/// A magnitude that bounds the payoffs reachable in the game; used to make
/// tolerances scale-free.
pub fn payoff_scale(params: &GameParameters) -> f64 {
    let odds = params.odds();
    params
        .r_w()
        .max(params.b_d() * odds.beta_d)
        .max(params.b_n() * odds.beta_n)
        .max(params.c_d())
        .max(params.c_n())
        .max(1.0)
}

/// Default acceptance tolerance for deviation gains: `payoff_scale * 1e-8`.
pub fn default_tolerance(params: &GameParameters) -> f64 {
    payoff_scale(params) * 1e-8
}

/// Coefficients of the user payoff as an affine function of the user
/// strategy, for a fixed miner strategy:
/// `E[user] = lambda_d * gain_d + lambda_n * gain_n`.
pub fn user_payoff_coefficients(miner: &MinerStrategy, params: &GameParameters) -> (f64, f64) {
    let odds = params.odds();
    let (p_d, p_n) = published_distribution(miner, params.p());
    (
        params.b_d() * (odds.beta_d * p_d - p_n),
        params.b_n() * (odds.beta_n * p_n - p_d),
    )
}

/// Coefficients of the miner payoff as an affine function of the miner
/// strategy, for a fixed user strategy:
/// `E[miner] = base + omega_d * slope_d + omega_n * slope_n`.
pub fn miner_payoff_coefficients(user: &UserStrategy, params: &GameParameters) -> (f64, f64, f64) {
    let odds = params.odds();
    let p = params.p();
    // Derivative of the user's expected winnings with respect to the
    // published-D probability.
    let user_slope = user.lambda_d() * params.b_d() * (odds.beta_d + 1.0)
        - user.lambda_n() * params.b_n() * (odds.beta_n + 1.0);
    let net_reward_slope = params.r_w() - user_slope;
    let base = params.r_0() + p * net_reward_slope + user.lambda_d() * params.b_d()
        - user.lambda_n() * params.b_n() * odds.beta_n;
    let slope_d = (1.0 - p) * net_reward_slope - params.c_d();
    let slope_n = -p * net_reward_slope - params.c_n();
    (base, slope_d, slope_n)
}

/// Pure miner strategies attaining the best response against an arbitrary
/// user strategy, in lexicographic order.
///
/// Because the miner payoff is affine over the strategy simplex its maximum
/// is attained at a vertex; ties (within a small relative tolerance) span the
/// convex hull of the listed vertices. This covers user strategies with
/// `lambda_n > 0`, which the closed-form best response deliberately refuses.
pub fn miner_best_vertices(user: &UserStrategy, params: &GameParameters) -> Vec<MinerStrategy> {
    let (_, slope_d, slope_n) = miner_payoff_coefficients(user, params);
    let best = 0.0_f64.max(slope_d).max(slope_n);
    let tol = VERTEX_TIE_TOL * 1.0_f64.max(slope_d.abs()).max(slope_n.abs());
    let mut vertices = Vec::with_capacity(3);
    if best - 0.0 <= tol {
        vertices.push(MinerStrategy::honest());
    }
    if best - slope_d <= tol {
        vertices.push(MinerStrategy::force_d());
    }
    if best - slope_n <= tol {
        vertices.push(MinerStrategy::force_n());
    }
    vertices
}

/// Uniform discretization of a strategy simplex with step `1/resolution` on
/// each axis; holds every `(i/N, j/N)` with `i + j <= N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategyGrid {
    resolution: usize,
}

impl StrategyGrid {
    /// Create a grid with the given per-axis resolution (at least 1).
    pub fn new(resolution: usize) -> Self {
        assert!(resolution >= 1, "grid resolution must be at least 1");
        StrategyGrid { resolution }
    }

    /// Per-axis resolution `N`.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Number of grid points: `(N + 1)(N + 2) / 2`.
    pub fn len(&self) -> usize {
        (self.resolution + 1) * (self.resolution + 2) / 2
    }

    /// Grids always contain at least the three simplex vertices.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// All grid points in lexicographic order by (first, second) component.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.resolution;
        (0..=n).flat_map(move |i| {
            (0..=(n - i)).map(move |j| (i as f64 / n as f64, j as f64 / n as f64))
        })
    }
}

/// Exhaustive argmax of the user payoff over the grid against a fixed miner
/// strategy. Returns every grid point within `1e-12` of the grid maximum, in
/// lexicographic order.
pub fn grid_user_best_response(
    miner: &MinerStrategy,
    params: &GameParameters,
    grid: &StrategyGrid,
) -> Vec<UserStrategy> {
    assert!(
        grid.resolution() >= 2,
        "best-response grids need resolution >= 2"
    );
    let (gain_d, gain_n) = user_payoff_coefficients(miner, params);
    let payoff = |d: f64, n: f64| d * gain_d + n * gain_n;
    let best = grid
        .points()
        .map(|(d, n)| payoff(d, n))
        .fold(f64::NEG_INFINITY, f64::max);
    grid.points()
        .filter(|&(d, n)| best - payoff(d, n) <= 1e-12)
        .map(|(d, n)| UserStrategy::new(d, n).expect("grid point is a valid strategy"))
        .collect()
}

/// Exhaustive argmax of the miner payoff over the grid against a fixed user
/// strategy. Returns every grid point within `1e-12` of the grid maximum, in
/// lexicographic order.
pub fn grid_miner_best_response(
    user: &UserStrategy,
    params: &GameParameters,
    grid: &StrategyGrid,
) -> Vec<MinerStrategy> {
    assert!(
        grid.resolution() >= 2,
        "best-response grids need resolution >= 2"
    );
    let (_, slope_d, slope_n) = miner_payoff_coefficients(user, params);
    let payoff = |d: f64, n: f64| d * slope_d + n * slope_n;
    let best = grid
        .points()
        .map(|(d, n)| payoff(d, n))
        .fold(f64::NEG_INFINITY, f64::max);
    grid.points()
        .filter(|&(d, n)| best - payoff(d, n) <= 1e-12)
        .map(|(d, n)| MinerStrategy::new(d, n).expect("grid point is a valid strategy"))
        .collect()
}

/// Outcome of checking one candidate strategy profile for the equilibrium
/// property.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport {
    /// The candidate miner strategy.
    pub miner: MinerStrategy,
    /// The candidate user strategy.
    pub user: UserStrategy,
    /// Best unilateral payoff improvement available to the miner. At least
    /// `-1e-12`: the search always includes the candidate itself.
    pub miner_gain: f64,
    /// Best unilateral payoff improvement available to the user.
    pub user_gain: f64,
    /// Whether both gains are within the acceptance tolerance.
    pub passes: bool,
}

impl VerificationReport {
    /// The larger of the two deviation gains.
    pub fn max_gain(&self) -> f64 {
        self.miner_gain.max(self.user_gain)
    }
}

/// Check a candidate profile for the equilibrium property by exhaustive
/// unilateral deviation search.
///
/// Each player's deviations run over the `N`-grid augmented with the
/// candidate's own coordinates and the closed-form critical points (the
/// withholding levels that pin the published distribution to the betting
/// thresholds for the miner; the bet intensities that balance the miner's
/// incentives for the user). Affinity of the payoffs means the grid vertices
/// already bound the true maximum, so the reported gains are exact up to
/// rounding. `passes` holds iff both gains are at most `tol`.
pub fn verify_equilibrium(
    miner: &MinerStrategy,
    user: &UserStrategy,
    params: &GameParameters,
    grid: &StrategyGrid,
    tol: f64,
) -> VerificationReport {
    let odds = params.odds();

    // Miner side: scan omega deviations at the fixed candidate user strategy.
    let candidate_miner_payoff = miner_payoff(user, miner, params);
    let (base, slope_d, slope_n) = miner_payoff_coefficients(user, params);
    let miner_value = |d: f64, n: f64| base + d * slope_d + n * slope_n;
    let mut miner_best = miner_value(miner.omega_d(), miner.omega_n());
    for (d, n) in grid.points() {
        miner_best = miner_best.max(miner_value(d, n));
    }
    // Withholding levels that put the published distribution exactly on the
    // user's betting thresholds.
    let critical_omega = params.epsilon() / (1.0 + params.epsilon());
    miner_best = miner_best.max(miner_value(critical_omega, 0.0));
    miner_best = miner_best.max(miner_value(0.0, critical_omega));
    let miner_gain = miner_best - candidate_miner_payoff;

    // User side: scan lambda deviations at the fixed candidate miner strategy.
    let candidate_user_payoff = user_payoff(user, miner, params);
    let (gain_d, gain_n) = user_payoff_coefficients(miner, params);
    let user_value = |d: f64, n: f64| d * gain_d + n * gain_n;
    let mut user_best = user_value(user.lambda_d(), user.lambda_n());
    for (d, n) in grid.points() {
        user_best = user_best.max(user_value(d, n));
    }
    // Bet intensities at which the miner is indifferent between honesty and
    // either forcing strategy.
    let stake_unit = params.b_d() * (odds.beta_d + 1.0);
    if stake_unit > 0.0 {
        for boundary in [
            params.r_w() - params.c_d() / (1.0 - params.p()),
            params.r_w() + params.c_n() / params.p(),
        ] {
            let lambda = boundary / stake_unit;
            if (0.0..=1.0).contains(&lambda) {
                user_best = user_best.max(user_value(lambda, 0.0));
            }
        }
    }
    let user_gain = user_best - candidate_user_payoff;

    VerificationReport {
        miner: *miner,
        user: *user,
        miner_gain,
        user_gain,
        passes: miner_gain <= tol && user_gain <= tol,
    }
}

/// Search the full grid-by-grid profile space for approximate equilibria.
///
/// Returns every pair of grid strategies whose unilateral deviation gains
/// (computed exactly via the pure-strategy vertices) are both at most `tol`,
/// sorted by the larger gain ascending with lexicographic tie-breaking.
pub fn find_epsilon_nash(
    params: &GameParameters,
    grid: &StrategyGrid,
    tol: f64,
) -> Vec<VerificationReport> {
    assert!(
        grid.resolution() >= 2,
        "epsilon-Nash search needs resolution >= 2"
    );
    assert!(tol > 0.0, "tolerance must be positive");

    // Per miner point: the user's payoff coefficients and best response value.
    struct MinerPoint {
        strategy: MinerStrategy,
        gain_d: f64,
        gain_n: f64,
        user_best: f64,
    }
    // Per user point: the miner's payoff coefficients and best response value.
    struct UserPoint {
        strategy: UserStrategy,
        base: f64,
        slope_d: f64,
        slope_n: f64,
        miner_best: f64,
    }

    let miner_points: Vec<MinerPoint> = grid
        .points()
        .map(|(d, n)| {
            let strategy = MinerStrategy::new(d, n).expect("grid point is a valid strategy");
            let (gain_d, gain_n) = user_payoff_coefficients(&strategy, params);
            MinerPoint {
                strategy,
                gain_d,
                gain_n,
                user_best: 0.0_f64.max(gain_d).max(gain_n),
            }
        })
        .collect();
    let user_points: Vec<UserPoint> = grid
        .points()
        .map(|(d, n)| {
            let strategy = UserStrategy::new(d, n).expect("grid point is a valid strategy");
            let (base, slope_d, slope_n) = miner_payoff_coefficients(&strategy, params);
            UserPoint {
                strategy,
                base,
                slope_d,
                slope_n,
                miner_best: base + 0.0_f64.max(slope_d).max(slope_n),
            }
        })
        .collect();

    let mut reports: Vec<VerificationReport> = miner_points
        .par_iter()
        .flat_map_iter(|mp| {
            let (omega_d, omega_n) = (mp.strategy.omega_d(), mp.strategy.omega_n());
            user_points.iter().filter_map(move |up| {
                let user_gain = mp.user_best
                    - (up.strategy.lambda_d() * mp.gain_d + up.strategy.lambda_n() * mp.gain_n);
                if user_gain > tol {
                    return None;
                }
                let miner_gain =
                    up.miner_best - (up.base + omega_d * up.slope_d + omega_n * up.slope_n);
                if miner_gain > tol {
                    return None;
                }
                Some(VerificationReport {
                    miner: mp.strategy,
                    user: up.strategy,
                    miner_gain,
                    user_gain,
                    passes: true,
                })
            })
        })
        .collect();

    reports.sort_by(|a, b| {
        a.max_gain()
            .total_cmp(&b.max_gain())
            .then(a.miner.omega_d().total_cmp(&b.miner.omega_d()))
            .then(a.miner.omega_n().total_cmp(&b.miner.omega_n()))
            .then(a.user.lambda_d().total_cmp(&b.user.lambda_d()))
            .then(a.user.lambda_n().total_cmp(&b.user.lambda_n()))
    });
    reports
}

/// Exact best-response set of the miner against an arbitrary user strategy,
/// as a strategy box (degenerate unless two corners tie).
///
/// A three-way tie would be the full simplex, which a product box cannot
/// represent; in that measure-zero case the box spanning the honest and
/// force-`D` corners is returned.
pub fn miner_best_response_box(user: &UserStrategy, params: &GameParameters) -> StrategyBox {
    let vertices = miner_best_vertices(user, params);
    let d_max = vertices.iter().map(|v| v.omega_d()).fold(0.0, f64::max);
    let d_min = vertices.iter().map(|v| v.omega_d()).fold(1.0, f64::min);
    let n_max = vertices.iter().map(|v| v.omega_n()).fold(0.0, f64::max);
    let n_min = vertices.iter().map(|v| v.omega_n()).fold(1.0, f64::min);
    if d_max > 0.0 && n_max > 0.0 {
        // Ties involving both forcing corners: keep the box a simplex subset.
        return StrategyBox::new(Interval::new(d_min, d_max), Interval::point(0.0));
    }
    StrategyBox::new(Interval::new(d_min, d_max), Interval::new(n_min, n_max))
}
