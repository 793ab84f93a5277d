//! Model parameters, strategy simplices, and the derived scalar quantities
//! (odds, published distribution, decision thresholds) that every other
//! module consumes.

use crate::Error;

/// Absolute tolerance for boundary comparisons on well-scaled quantities.
///
/// Comparisons against thresholds use this absolutely for magnitudes up to
/// one and relatively above that (see [`nearly_equal`]); knife-edge parameter
/// cases are measure-zero and need an explicit band.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// True when `a` and `b` agree within [`BOUNDARY_TOL`], absolutely for
/// magnitudes up to one and relatively beyond that.
pub fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUNDARY_TOL * 1.0_f64.max(a.abs()).max(b.abs())
}

/// All scalar inputs of the betting game.
///
/// Construct through [`GameParameters::builder`]; construction validates
/// every bound and reports all violations at once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParameters {
    p: f64,
    epsilon: f64,
    b_d: f64,
    b_n: f64,
    r_0: f64,
    r_w: f64,
    c_d: f64,
    c_n: f64,
}

impl GameParameters {
    /// Start building a parameter set. `p`, `epsilon`, and `r_w` are
    /// required; bets and costs default to zero, `r_0` to zero, and `b_n` to
    /// `b_d`.
    pub fn builder() -> ParameterBuilder {
        ParameterBuilder::default()
    }

    /// Natural probability of event `D` under honest mining; strictly inside
    /// (0, 1).
    pub fn p(&self) -> f64 {
        self.p
    }

    /// House edge tilting the betting odds; strictly positive.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Maximum user bet on `D`.
    pub fn b_d(&self) -> f64 {
        self.b_d
    }

    /// Maximum user bet on the complement of `D`.
    pub fn b_n(&self) -> f64 {
        self.b_n
    }

    /// Unconditional base block reward. Stored and reported but never
    /// optimized over: it shifts the miner payoff by a constant.
    pub fn r_0(&self) -> f64 {
        self.r_0
    }

    /// Extra miner winnings when a published block reports `D`; strictly
    /// positive.
    pub fn r_w(&self) -> f64 {
        self.r_w
    }

    /// Expected cost of forcing a `D` block by withholding.
    pub fn c_d(&self) -> f64 {
        self.c_d
    }

    /// Expected cost of forcing a non-`D` block by withholding.
    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    /// Betting odds derived from `p` and `epsilon`.
    pub fn odds(&self) -> Odds {
        betting_odds(self.p, self.epsilon)
    }

    /// The published-`D` band within which an optimal user abstains.
    pub fn user_thresholds(&self) -> UserThresholds {
        user_thresholds(self.p, self.epsilon)
    }
}

/// Builder for [`GameParameters`]. Fields left unset fall back to the
/// documented defaults; `build` validates everything.
#[derive(Debug, Clone, Default)]
pub struct ParameterBuilder {
    p: Option<f64>,
    epsilon: Option<f64>,
    b_d: Option<f64>,
    b_n: Option<f64>,
    r_0: Option<f64>,
    r_w: Option<f64>,
    c_d: Option<f64>,
    c_n: Option<f64>,
}

impl ParameterBuilder {
    /// Natural probability of event `D`; required, must lie strictly in (0, 1).
    pub fn p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    /// House edge; required, must be strictly positive.
    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    /// Maximum bet on `D` (default 0).
    pub fn b_d(mut self, b_d: f64) -> Self {
        self.b_d = Some(b_d);
        self
    }

    /// Maximum bet on the complement (default: equal to `b_d`).
    pub fn b_n(mut self, b_n: f64) -> Self {
        self.b_n = Some(b_n);
        self
    }

    /// Base block reward (default 0).
    pub fn r_0(mut self, r_0: f64) -> Self {
        self.r_0 = Some(r_0);
        self
    }

    /// Extra reward on `D` blocks; required, must be strictly positive.
    pub fn r_w(mut self, r_w: f64) -> Self {
        self.r_w = Some(r_w);
        self
    }

    /// Cost of forcing `D` (default 0).
    pub fn c_d(mut self, c_d: f64) -> Self {
        self.c_d = Some(c_d);
        self
    }

    /// Cost of forcing non-`D` (default 0).
    pub fn c_n(mut self, c_n: f64) -> Self {
        self.c_n = Some(c_n);
        self
    }

    /// Validate and construct. Returns a [`Error::Domain`] naming every
    /// violated bound when any check fails.
    pub fn build(self) -> Result<GameParameters, Error> {
        let mut violations = Vec::new();

        let require = |violations: &mut Vec<String>, field: Option<f64>, name: &str| match field {
            None => {
                violations.push(format!("{name} is required"));
                f64::NAN
            }
            Some(v) if !v.is_finite() => {
                violations.push(format!("{name} must be finite (got {v})"));
                f64::NAN
            }
            Some(v) => v,
        };

        let p = require(&mut violations, self.p, "p");
        let epsilon = require(&mut violations, self.epsilon, "epsilon");
        let r_w = require(&mut violations, self.r_w, "r_w");
        let b_d = require(&mut violations, self.b_d.or(Some(0.0)), "b_d");
        let b_n = require(&mut violations, self.b_n.or(self.b_d).or(Some(0.0)), "b_n");
        let r_0 = require(&mut violations, self.r_0.or(Some(0.0)), "r_0");
        let c_d = require(&mut violations, self.c_d.or(Some(0.0)), "c_d");
        let c_n = require(&mut violations, self.c_n.or(Some(0.0)), "c_n");

        if p.is_finite() && !(p > 0.0 && p < 1.0) {
            violations.push(format!("p must lie strictly between 0 and 1 (got {p})"));
        }
        if epsilon.is_finite() && epsilon <= 0.0 {
            violations.push(format!("epsilon must be strictly positive (got {epsilon})"));
        }
        if r_w.is_finite() && r_w <= 0.0 {
            violations.push(format!("r_w must be strictly positive (got {r_w})"));
        }
        for (value, name) in [(b_d, "b_d"), (b_n, "b_n"), (c_d, "c_d"), (c_n, "c_n")] {
            if value.is_finite() && value < 0.0 {
                violations.push(format!("{name} must be non-negative (got {value})"));
            }
        }

        if violations.is_empty() {
            Ok(GameParameters {
                p,
                epsilon,
                b_d,
                b_n,
                r_0,
                r_w,
                c_d,
                c_n,
            })
        } else {
            Err(Error::Domain(violations))
        }
    }
}

/// Validate a simplex pair: both components in [0, 1] and their sum at most
/// one. A slack of 1e-12 absorbs float drift from arithmetic on valid
/// strategies; accepted values are clamped so the stored invariant is exact.
fn simplex_pair(first: f64, second: f64, names: (&str, &str)) -> Result<(f64, f64), Error> {
    const SLACK: f64 = 1e-12;
    let mut violations = Vec::new();
    for (value, name) in [(first, names.0), (second, names.1)] {
        if !value.is_finite() || !(-SLACK..=1.0 + SLACK).contains(&value) {
            violations.push(format!("{name} must lie in [0, 1] (got {value})"));
        }
    }
    if violations.is_empty() && first + second > 1.0 + SLACK {
        violations.push(format!(
            "{} + {} must not exceed 1 (got {})",
            names.0,
            names.1,
            first + second
        ));
    }
    if !violations.is_empty() {
        return Err(Error::Domain(violations));
    }
    let first = first.clamp(0.0, 1.0);
    let mut second = second.clamp(0.0, 1.0);
    let sum = first + second;
    if sum > 1.0 {
        // Drift is at most one ulp; shave it off the second component.
        second = 1.0 - first;
    }
    Ok((first, second))
}

/// A mixed miner strategy: probabilities of playing force-`D` and
/// force-non-`D`; the remainder is honest mining.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinerStrategy {
    omega_d: f64,
    omega_n: f64,
}

impl MinerStrategy {
    /// Construct a strategy, validating simplex membership.
    pub fn new(omega_d: f64, omega_n: f64) -> Result<Self, Error> {
        let (omega_d, omega_n) = simplex_pair(omega_d, omega_n, ("omega_d", "omega_n"))?;
        Ok(MinerStrategy { omega_d, omega_n })
    }

    /// The honest strategy: never withhold.
    pub fn honest() -> Self {
        MinerStrategy {
            omega_d: 0.0,
            omega_n: 0.0,
        }
    }

    /// The pure strategy that forces every published block to report `D`.
    pub fn force_d() -> Self {
        MinerStrategy {
            omega_d: 1.0,
            omega_n: 0.0,
        }
    }

    /// The pure strategy that forces every published block to report non-`D`.
    pub fn force_n() -> Self {
        MinerStrategy {
            omega_d: 0.0,
            omega_n: 1.0,
        }
    }

    /// Probability of forcing `D`.
    pub fn omega_d(&self) -> f64 {
        self.omega_d
    }

    /// Probability of forcing non-`D`.
    pub fn omega_n(&self) -> f64 {
        self.omega_n
    }

    /// Probability of mining honestly.
    pub fn honest_weight(&self) -> f64 {
        1.0 - self.omega_d - self.omega_n
    }
}

/// A mixed user strategy: probabilities of betting on `D` and on its
/// complement; the remainder abstains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserStrategy {
    lambda_d: f64,
    lambda_n: f64,
}

impl UserStrategy {
    /// Construct a strategy, validating simplex membership.
    pub fn new(lambda_d: f64, lambda_n: f64) -> Result<Self, Error> {
        let (lambda_d, lambda_n) = simplex_pair(lambda_d, lambda_n, ("lambda_d", "lambda_n"))?;
        Ok(UserStrategy { lambda_d, lambda_n })
    }

    /// Never bet.
    pub fn abstain() -> Self {
        UserStrategy {
            lambda_d: 0.0,
            lambda_n: 0.0,
        }
    }

    /// Always bet the maximum on `D`.
    pub fn bet_d() -> Self {
        UserStrategy {
            lambda_d: 1.0,
            lambda_n: 0.0,
        }
    }

    /// Always bet the maximum on the complement of `D`.
    pub fn bet_n() -> Self {
        UserStrategy {
            lambda_d: 0.0,
            lambda_n: 1.0,
        }
    }

    /// Probability of betting on `D`.
    pub fn lambda_d(&self) -> f64 {
        self.lambda_d
    }

    /// Probability of betting on non-`D`.
    pub fn lambda_n(&self) -> f64 {
        self.lambda_n
    }

    /// Probability of abstaining.
    pub fn abstain_weight(&self) -> f64 {
        1.0 - self.lambda_d - self.lambda_n
    }
}

/// Proportional winning odds for bets on `D` and its complement.
///
/// These are the unique factors under which an honest miner earns exactly the
/// house edge from either single bet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Odds {
    /// Payout multiplier for a winning bet on `D`: `(1 - p) / (p + epsilon)`.
    pub beta_d: f64,
    /// Payout multiplier for a winning bet on non-`D`: `p / (1 - p + epsilon)`.
    pub beta_n: f64,
}

/// Compute the betting odds for a given event probability and house edge.
pub fn betting_odds(p: f64, epsilon: f64) -> Odds {
    debug_assert!(p > 0.0 && p < 1.0 && epsilon > 0.0);
    Odds {
        beta_d: (1.0 - p) / (p + epsilon),
        beta_n: p / (1.0 - p + epsilon),
    }
}

/// Distribution of the outcome reported by published blocks under a given
/// miner strategy: `P_d = omega_d + (1 - omega_d - omega_n) * p`, and
/// `P_n = 1 - P_d`.
pub fn published_distribution(strategy: &MinerStrategy, p: f64) -> (f64, f64) {
    debug_assert!(p > 0.0 && p < 1.0);
    let p_d = strategy.omega_d + strategy.honest_weight() * p;
    // Clamp ulp-level drift so downstream probabilities stay in range.
    let p_d = p_d.clamp(0.0, 1.0);
    (p_d, 1.0 - p_d)
}

/// The published-`D` probabilities at which betting on either outcome stops
/// being profitable for the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserThresholds {
    /// Below this value betting on non-`D` profits: `p / (1 + epsilon)`.
    pub p_low: f64,
    /// Above this value betting on `D` profits: `(p + epsilon) / (1 + epsilon)`.
    pub p_high: f64,
}

/// Compute the user's decision thresholds. For every valid parameter set the
/// strict ordering `0 < p_low < p < p_high < 1` holds.
pub fn user_thresholds(p: f64, epsilon: f64) -> UserThresholds {
    debug_assert!(p > 0.0 && p < 1.0 && epsilon > 0.0);
    UserThresholds {
        p_low: p / (1.0 + epsilon),
        p_high: (p + epsilon) / (1.0 + epsilon),
    }
}

/// The miner's decision quantities against a user who bets only on `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinerThresholds {
    /// Expected stake exposure `lambda_d * b_d * (beta_d + 1)`: the amount
    /// that changes hands per unit shift of the published distribution.
    pub stake: f64,
    /// Below this exposure the miner prefers forcing `D`:
    /// `r_w - c_d / (1 - p)`.
    pub low: f64,
    /// Above this exposure the miner prefers forcing non-`D`:
    /// `r_w + c_n / p`.
    pub high: f64,
}

/// Compute the miner's decision thresholds for a given `D`-bet intensity.
pub fn miner_thresholds(params: &GameParameters, lambda_d: f64) -> MinerThresholds {
    debug_assert!((0.0..=1.0).contains(&lambda_d));
    let odds = params.odds();
    MinerThresholds {
        stake: lambda_d * params.b_d() * (odds.beta_d + 1.0),
        low: params.r_w() - params.c_d() / (1.0 - params.p()),
        high: params.r_w() + params.c_n() / params.p(),
    }
}

/// The cheapest miner strategy achieving a target published-`D` probability.
///
/// Exactly one of the two withholding components is active: forcing non-`D`
/// when the target sits below `p`, forcing `D` when it sits above. Any other
/// strategy with the same published distribution spends strictly more on both
/// components.
pub fn canonical_strategy_for_target(p_d_target: f64, p: f64) -> MinerStrategy {
    debug_assert!((0.0..=1.0).contains(&p_d_target));
    debug_assert!(p > 0.0 && p < 1.0);
    if p_d_target >= p {
        MinerStrategy {
            omega_d: (p_d_target - p) / (1.0 - p),
            omega_n: 0.0,
        }
    } else {
        MinerStrategy {
            omega_d: 0.0,
            omega_n: 1.0 - p_d_target / p,
        }
    }
}
