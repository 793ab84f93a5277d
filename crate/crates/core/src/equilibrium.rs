//! Regime classification and closed-form Nash equilibria of the betting game,
//! plus the bound on how far the miner can skew the published distribution.
//!
//! The game's equilibrium structure is governed by two numbers:
//!
//! - the *gap* `r_w - c_d/(1-p)` — what forcing `D` is worth to the miner per
//!   unit of published-probability shift, net of its cost;
//! - the *cap* `b_d * (beta_d + 1)` — the largest stake exposure the user can
//!   put on `D`.
//!
//! Comparing gap against zero and against the cap yields exactly five
//! regimes. In the strict regimes the equilibrium is a single point; at the
//! two knife edges it is a segment of miner strategies paired with one user
//! strategy.

use crate::best_response::{Interval, StrategyBox};
use crate::model::{user_thresholds, GameParameters, MinerStrategy, UserStrategy};
use crate::Error;

/// Default absolute tolerance for boundary-regime classification.
pub const REGIME_TOL: f64 = 1e-9;

/// The five equilibrium regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// The withholding reward is too small to ever force `D`: gap < 0.
    /// Unique equilibrium: honest miner, abstaining user.
    SmallRw,
    /// Knife edge gap = 0: the user never bets; any withholding level up to
    /// `epsilon/(1+epsilon)` is an equilibrium for the miner.
    BoundaryLow,
    /// 0 < gap < cap: unique mixed equilibrium — the miner withholds
    /// `epsilon/(1+epsilon)`, the user bets `gap/cap` on `D`.
    Mixed,
    /// Knife edge gap = cap: the user always bets `D`; any withholding level
    /// from `epsilon/(1+epsilon)` up to 1 is an equilibrium for the miner.
    BoundaryHigh,
    /// The user's stake is too small to deter forcing: cap < gap. Unique
    /// equilibrium: the miner always forces `D`, the user always bets `D`.
    SmallBd,
}

impl Regime {
    /// Short stable machine name (used by the CLI).
    pub fn name(&self) -> &'static str {
        match self {
            Regime::SmallRw => "SmallRw",
            Regime::BoundaryLow => "BoundaryLow",
            Regime::Mixed => "Mixed",
            Regime::BoundaryHigh => "BoundaryHigh",
            Regime::SmallBd => "SmallBd",
        }
    }
}

/// The equilibrium regime's defining quantities.
fn gap_and_cap(params: &GameParameters) -> (f64, f64) {
    let gap = params.r_w() - params.c_d() / (1.0 - params.p());
    let cap = params.b_d() * (params.odds().beta_d + 1.0);
    (gap, cap)
}

/// Classify the parameter set into its equilibrium regime.
///
/// Boundary regimes are declared when the defining difference is within
/// `tol` (absolute). The comparison order (gap vs 0 first, then gap vs cap)
/// makes the classification total even for degenerate stakes (`b_d = 0`
/// resolves to [`Regime::SmallBd`] whenever the gap is positive: with zero
/// stake the user cannot deter forcing).
///
/// # Errors
///
/// [`Error::Domain`] if `c_d = 0` or `c_n = 0` — free withholding removes
/// the cost structure the regime analysis relies on.
pub fn classify_regime(params: &GameParameters, tol: f64) -> Result<Regime, Error> {
    debug_assert!(tol >= 0.0 && tol.is_finite(), "tol must be finite and >= 0");
    if params.c_d() == 0.0 || params.c_n() == 0.0 {
        return Err(Error::domain(
            "regime classification requires strictly positive withholding costs c_d, c_n",
        ));
    }
    let (gap, cap) = gap_and_cap(params);
    let regime = if gap < -tol {
        Regime::SmallRw
    } else if gap.abs() <= tol {
        Regime::BoundaryLow
    } else if (gap - cap).abs() <= tol {
        Regime::BoundaryHigh
    } else if gap < cap {
        Regime::Mixed
    } else {
        Regime::SmallBd
    };
    Ok(regime)
}

/// The complete set of Nash equilibria, as one box of miner strategies paired
/// with one box of user strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSet {
    /// Which regime produced this set.
    pub regime: Regime,
    /// Equilibrium miner strategies.
    pub miner_box: StrategyBox,
    /// Equilibrium user strategies.
    pub user_box: StrategyBox,
    /// True when every (miner, user) pair drawn from the two boxes is jointly
    /// an equilibrium — the set is the full Cartesian product of the boxes.
    /// Holds in all five regimes of this game (in the segment regimes the
    /// user box is a single point, so the product structure is trivial).
    pub cartesian: bool,
}

impl EquilibriumSet {
    /// Evenly spaced equilibrium pairs covering the set: the cross product of
    /// `per_axis` samples along each non-degenerate box axis.
    pub fn sample_points(&self, per_axis: usize) -> Vec<(MinerStrategy, UserStrategy)> {
        let miners = self.miner_box.sample_points(per_axis);
        let users = self.user_box.sample_points(per_axis);
        let mut out = Vec::with_capacity(miners.len() * users.len());
        for &(wd, wn) in &miners {
            for &(ld, ln) in &users {
                out.push((
                    MinerStrategy::new(wd, wn).expect("box points satisfy the simplex"),
                    UserStrategy::new(ld, ln).expect("box points satisfy the simplex"),
                ));
            }
        }
        out
    }
}

/// Solve for the complete equilibrium set.
///
/// Per regime (with `s = epsilon/(1+epsilon)`, gap and cap as in the module
/// docs):
///
/// - `SmallRw` → miner `{(0,0)}`, user `{(0,0)}`;
/// - `BoundaryLow` → miner `[0, s] x {0}`, user `{(0,0)}`;
/// - `Mixed` → miner `{(s, 0)}`, user `{(gap/cap, 0)}`;
/// - `BoundaryHigh` → miner `[s, 1] x {0}`, user `{(1,0)}`;
/// - `SmallBd` → miner `{(1,0)}`, user `{(1,0)}`.
///
/// No equilibrium of this game ever involves `omega_n > 0` or
/// `lambda_n > 0`.
///
/// # Errors
///
/// As [`classify_regime`].
pub fn solve_equilibrium(params: &GameParameters, tol: f64) -> Result<EquilibriumSet, Error> {
    let regime = classify_regime(params, tol)?;
    let (gap, cap) = gap_and_cap(params);
    let s = params.epsilon() / (1.0 + params.epsilon());
    let zero = Interval::point(0.0);
    let (miner_box, user_box) = match regime {
        Regime::SmallRw => (StrategyBox::point(0.0, 0.0), StrategyBox::point(0.0, 0.0)),
        Regime::BoundaryLow => (
            StrategyBox::new(Interval::new(0.0, s), zero),
            StrategyBox::point(0.0, 0.0),
        ),
        Regime::Mixed => (
            StrategyBox::point(s, 0.0),
            StrategyBox::point((gap / cap).clamp(0.0, 1.0), 0.0),
        ),
        Regime::BoundaryHigh => (
            StrategyBox::new(Interval::new(s, 1.0), zero),
            StrategyBox::point(1.0, 0.0),
        ),
        Regime::SmallBd => (StrategyBox::point(1.0, 0.0), StrategyBox::point(1.0, 0.0)),
    };
    Ok(EquilibriumSet {
        regime,
        miner_box,
        user_box,
        cartesian: true,
    })
}

/// How far an equilibrium can push the published-`D` probability above its
/// natural rate `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumBound {
    /// Largest equilibrium withholding level: `epsilon/(1+epsilon)`.
    pub omega_d_max: f64,
    /// Largest equilibrium published-`D` probability:
    /// `(p+epsilon)/(1+epsilon)`.
    pub p_d_max: f64,
    /// The distortion `p_d_max - p = epsilon*(1-p)/(1+epsilon)`.
    pub deviation: f64,
}

/// Evaluate the equilibrium distortion bound.
///
/// Whenever the user's stake cap exceeds the miner's gap, every equilibrium
/// keeps the published-`D` probability within `[p, (p+epsilon)/(1+epsilon)]`.
/// The worst-case distortion `epsilon*(1-p)/(1+epsilon)` vanishes as the
/// house edge `epsilon` shrinks, and shrinks as `p` grows.
///
/// Numerical note: at `p = 0.5, epsilon = 0.1` the distorted probability is
/// `0.6/1.1 = 0.5454…` — a 50-50 event is made to occur about 55% of the
/// time. At `p = 0.5, epsilon = 0.01` the distortion is `0.00495…`, i.e.
/// 0.495% of probability mass — a figure sometimes rounded up to "slightly
/// more than 0.5%", though the exact value is slightly *below* 0.5%.
pub fn equilibrium_bound(p: f64, epsilon: f64) -> EquilibriumBound {
    debug_assert!(p > 0.0 && p < 1.0, "p must lie strictly between 0 and 1");
    debug_assert!(
        epsilon > 0.0 && epsilon.is_finite(),
        "epsilon must be positive"
    );
    EquilibriumBound {
        omega_d_max: epsilon / (1.0 + epsilon),
        p_d_max: (p + epsilon) / (1.0 + epsilon),
        deviation: epsilon * (1.0 - p) / (1.0 + epsilon),
    }
}

/// The published-`D` probability at the largest-distortion equilibrium of
/// `params` — `(p+epsilon)/(1+epsilon)`, also the user's upper betting
/// threshold.
pub fn max_equilibrium_p_d(params: &GameParameters) -> f64 {
    user_thresholds(params.p(), params.epsilon()).p_high
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::published_distribution;
    use crate::oracle::{default_tolerance, verify_equilibrium, StrategyGrid};
    use crate::payoffs::{miner_payoff, user_payoff};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params_with(r_w: f64, b_d: f64) -> GameParameters {
        GameParameters::builder()
            .p(0.4)
            .epsilon(0.05)
            .b_d(b_d)
            .b_n(b_d)
            .r_w(r_w)
            .c_d(1.2)
            .c_n(0.6)
            .build()
            .unwrap()
    }

    #[test]
    fn classifies_all_five_regimes() {
        assert_eq!(
            classify_regime(&params_with(1.0, 6.0), REGIME_TOL).unwrap(),
            Regime::SmallRw
        );
        assert_eq!(
            classify_regime(&params_with(2.0, 6.0), REGIME_TOL).unwrap(),
            Regime::BoundaryLow
        );
        assert_eq!(
            classify_regime(&params_with(10.0, 6.0), REGIME_TOL).unwrap(),
            Regime::Mixed
        );
        assert_eq!(
            classify_regime(&params_with(16.0, 6.0), REGIME_TOL).unwrap(),
            Regime::BoundaryHigh
        );
        assert_eq!(
            classify_regime(&params_with(10.0, 2.0), REGIME_TOL).unwrap(),
            Regime::SmallBd
        );
    }

    #[test]
    fn classification_is_total_for_zero_stake() {
        // b_d = 0 collapses the cap to 0; a positive gap then lands in
        // SmallBd (the strict inequality chain has a hole there, the
        // comparison order does not).
        assert_eq!(
            classify_regime(&params_with(10.0, 0.0), REGIME_TOL).unwrap(),
            Regime::SmallBd
        );
        assert_eq!(
            classify_regime(&params_with(1.0, 0.0), REGIME_TOL).unwrap(),
            Regime::SmallRw
        );
    }

    #[test]
    fn classification_rejects_free_withholding() {
        let params = GameParameters::builder()
            .p(0.4)
            .epsilon(0.05)
            .b_d(6.0)
            .r_w(10.0)
            .c_d(0.0)
            .c_n(0.6)
            .build()
            .unwrap();
        assert!(matches!(
            classify_regime(&params, REGIME_TOL),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn solves_the_strict_regimes_to_points() {
        let small_rw = solve_equilibrium(&params_with(1.0, 6.0), REGIME_TOL).unwrap();
        assert_eq!(small_rw.miner_box, StrategyBox::point(0.0, 0.0));
        assert_eq!(small_rw.user_box, StrategyBox::point(0.0, 0.0));
        assert!(small_rw.cartesian);

        let small_bd = solve_equilibrium(&params_with(10.0, 2.0), REGIME_TOL).unwrap();
        assert_eq!(small_bd.miner_box, StrategyBox::point(1.0, 0.0));
        assert_eq!(small_bd.user_box, StrategyBox::point(1.0, 0.0));
    }

    #[test]
    fn solves_the_mixed_regime_to_the_frozen_point() {
        let eq = solve_equilibrium(&params_with(10.0, 6.0), REGIME_TOL).unwrap();
        assert_eq!(eq.regime, Regime::Mixed);
        assert!((eq.miner_box.d.lo - 0.047_619_047_619_047_62).abs() < 1e-15);
        assert!(eq.miner_box.is_point() && eq.user_box.is_point());
        assert!((eq.user_box.d.lo - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(eq.miner_box.n, Interval::point(0.0));
        assert_eq!(eq.user_box.n, Interval::point(0.0));
    }

    #[test]
    fn solves_the_boundary_regimes_to_segments() {
        let s = 0.05 / 1.05;

        let low = solve_equilibrium(&params_with(2.0, 6.0), REGIME_TOL).unwrap();
        assert_eq!(low.regime, Regime::BoundaryLow);
        assert!((low.miner_box.d.lo - 0.0).abs() < 1e-15);
        assert!((low.miner_box.d.hi - s).abs() < 1e-15);
        assert_eq!(low.user_box, StrategyBox::point(0.0, 0.0));

        let high = solve_equilibrium(&params_with(16.0, 6.0), REGIME_TOL).unwrap();
        assert_eq!(high.regime, Regime::BoundaryHigh);
        assert!((high.miner_box.d.lo - s).abs() < 1e-15);
        assert!((high.miner_box.d.hi - 1.0).abs() < 1e-15);
        assert_eq!(high.user_box, StrategyBox::point(1.0, 0.0));
    }

    #[test]
    fn equilibrium_bound_frozen_values() {
        let b = equilibrium_bound(0.5, 0.1);
        assert!((b.p_d_max - 0.545_454_545_454_545_4).abs() < 1e-12);
        assert!((b.omega_d_max - 0.1 / 1.1).abs() < 1e-15);
        assert!((b.deviation - 0.1 * 0.5 / 1.1).abs() < 1e-15);

        // Vanishing house edge: vanishing distortion.
        assert!(equilibrium_bound(0.5, 1e-12).deviation < 1e-12);

        // Likely events are cheaper to distort.
        let b9 = equilibrium_bound(0.9, 0.1);
        assert!((b9.deviation - 0.009_090_909_090_909_09).abs() < 1e-15);

        // The small-edge distortion is slightly BELOW half a percent.
        let b_small = equilibrium_bound(0.5, 0.01);
        assert!((b_small.deviation - 0.004_950_495_049_504_951).abs() < 1e-15);
        assert!(b_small.deviation < 0.005);
    }

    /// At the mixed equilibrium the user nets exactly zero (the skew winnings
    /// cancel against the house edge) and the miner keeps the block rewards
    /// minus the withholding spend.
    #[test]
    fn mixed_equilibrium_payoff_interpretation() {
        let params = params_with(10.0, 6.0);
        let eq = solve_equilibrium(&params, REGIME_TOL).unwrap();
        let (miner, user) = eq.sample_points(1)[0];

        assert!(user_payoff(&user, &miner, &params).abs() < 1e-10);

        let p_high = user_thresholds(params.p(), params.epsilon()).p_high;
        let expected_miner = p_high * params.r_w() - miner.omega_d() * params.c_d();
        assert!((miner_payoff(&user, &miner, &params) - expected_miner).abs() < 1e-10);

        // The equilibrium published distribution sits exactly at the user's
        // upper threshold.
        let (p_d, _) = published_distribution(&miner, params.p());
        assert!((p_d - p_high).abs() < 1e-12);
        assert!((max_equilibrium_p_d(&params) - p_high).abs() < 1e-15);
    }

    /// Walking b_d down to the upper knife edge, the mixed-regime bet
    /// intensity rises to 1 and joins the always-bet equilibrium on the
    /// other side.
    #[test]
    fn regime_is_continuous_across_the_upper_boundary() {
        let gap = 8.0;
        let beta_d_plus_1 = 0.6 / 0.45 + 1.0;
        let b_star = gap / beta_d_plus_1;

        assert_eq!(
            classify_regime(&params_with(10.0, b_star), REGIME_TOL).unwrap(),
            Regime::BoundaryHigh
        );

        let mut last_lambda = 0.0;
        for k in (1..=50).rev() {
            let b_d = b_star + k as f64 * 1e-4;
            let eq = solve_equilibrium(&params_with(10.0, b_d), REGIME_TOL).unwrap();
            assert_eq!(eq.regime, Regime::Mixed, "k={k}");
            let lambda = eq.user_box.d.lo;
            assert!(lambda > last_lambda, "lambda must rise towards 1");
            last_lambda = lambda;
        }
        assert!(1.0 - last_lambda < 1e-4, "lambda approaches 1 at the edge");

        let below = solve_equilibrium(&params_with(10.0, b_star - 1e-4), REGIME_TOL).unwrap();
        assert_eq!(below.regime, Regime::SmallBd);
        assert_eq!(below.user_box.d.lo, 1.0);
    }

    /// No equilibrium ever involves betting on or forcing non-`D`.
    #[test]
    fn equilibria_never_use_the_n_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0bb5_0010);
        for _ in 0..200 {
            let params = GameParameters::builder()
                .p(rng.gen_range(0.05..=0.95))
                .epsilon(rng.gen_range(0.005..=0.5))
                .b_d(rng.gen_range(0.1..=20.0))
                .b_n(rng.gen_range(0.1..=20.0))
                .r_w(rng.gen_range(0.1..=20.0))
                .c_d(rng.gen_range(0.05..=5.0))
                .c_n(rng.gen_range(0.05..=5.0))
                .build()
                .unwrap();
            let eq = solve_equilibrium(&params, REGIME_TOL).unwrap();
            assert_eq!(eq.miner_box.n, Interval::point(0.0));
            assert_eq!(eq.user_box.n, Interval::point(0.0));
        }
    }

    /// Every sampled point of every fixture regime's equilibrium set passes
    /// the independent oracle check.
    #[test]
    fn fixture_equilibria_pass_the_oracle() {
        let grid = StrategyGrid::new(50);
        for (r_w, b_d) in [
            (1.0, 6.0),
            (2.0, 6.0),
            (10.0, 6.0),
            (16.0, 6.0),
            (10.0, 2.0),
        ] {
            let params = params_with(r_w, b_d);
            let eq = solve_equilibrium(&params, REGIME_TOL).unwrap();
            let tol = default_tolerance(&params);
            for (miner, user) in eq.sample_points(5) {
                let report = verify_equilibrium(&miner, &user, &params, &grid, tol);
                assert!(
                    report.passes,
                    "regime {:?} point ({}, {}), ({}, {}) failed: miner gain {}, user gain {}",
                    eq.regime,
                    miner.omega_d(),
                    miner.omega_n(),
                    user.lambda_d(),
                    user.lambda_n(),
                    report.miner_gain,
                    report.user_gain
                );
            }
        }
    }
}
