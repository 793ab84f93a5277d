//! Exact expected payoffs for both players — the objective functions that
//! best responses, equilibria, the oracle, and the simulator all share.

use crate::model::{published_distribution, GameParameters, MinerStrategy, UserStrategy};

/// Expected payoffs of one strategy profile, from each player's perspective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffPair {
    /// Expected payoff of the betting user.
    pub user: f64,
    /// Expected payoff of the miner.
    pub miner: f64,
}

/// Expected payoff of the betting user:
/// `lambda_d * b_d * (beta_d * P_d - P_n) + lambda_n * b_n * (beta_n * P_n - P_d)`.
///
/// The published distribution is always recomputed from the miner strategy so
/// there is a single source of truth for `P_d`.
pub fn user_payoff(user: &UserStrategy, miner: &MinerStrategy, params: &GameParameters) -> f64 {
    let odds = params.odds();
    let (p_d, p_n) = published_distribution(miner, params.p());
    user.lambda_d() * params.b_d() * (odds.beta_d * p_d - p_n)
        + user.lambda_n() * params.b_n() * (odds.beta_n * p_n - p_d)
}

/// Expected payoff of the miner:
/// `R_0 + P_d * R_w - E[user] - omega_d * C_d - omega_n * C_n`.
///
/// The bet itself is zero-sum, so the user's expected winnings appear here
/// with opposite sign; only block rewards and withholding costs remain when
/// the two payoffs are added.
pub fn miner_payoff(user: &UserStrategy, miner: &MinerStrategy, params: &GameParameters) -> f64 {
    let (p_d, _) = published_distribution(miner, params.p());
    params.r_0() + p_d * params.r_w()
        - user_payoff(user, miner, params)
        - miner.omega_d() * params.c_d()
        - miner.omega_n() * params.c_n()
}

/// Both expected payoffs of a profile at once.
pub fn payoff_pair(
    user: &UserStrategy,
    miner: &MinerStrategy,
    params: &GameParameters,
) -> PayoffPair {
    PayoffPair {
        user: user_payoff(user, miner, params),
        miner: miner_payoff(user, miner, params),
    }
}

/// Expected value of a single maximum bet of size `b` on `D` against an
/// honest miner: `-epsilon * beta_d * b`, always a loss of exactly the house
/// edge. Serves as an independent cross-check on [`user_payoff`].
pub fn single_bet_expectation(b: f64, p: f64, epsilon: f64) -> f64 {
    debug_assert!(b >= 0.0);
    let beta_d = (1.0 - p) / (p + epsilon);
    -epsilon * beta_d * b
}
