//! Closed-form best-response correspondences for both players.
//!
//! Both players' expected payoffs are affine in their own mixed strategy, so
//! a best response is determined by the sign of two slopes. Away from the
//! knife edges the response is a single pure strategy; exactly on an edge a
//! whole segment of strategies ties, so responses are returned as axis-aligned
//! boxes ([`StrategyBox`]) that collapse to points in the generic case.
//!
//! The user's response depends on the published-`D` probability only; the
//! miner's closed form covers users who never bet on non-`D` (`lambda_n = 0`).
//! For general opponents use [`crate::oracle::miner_best_response_box`], which
//! derives the response from vertex enumeration instead.

use crate::model::{miner_thresholds, user_thresholds, GameParameters, UserStrategy};
use crate::Error;

/// Absolute half-width of the knife-edge band. Inputs within this distance of
/// a decision threshold select the set-valued branch. The bands around the
/// two thresholds never merge for realistic inputs (they are `epsilon/(1 +
/// epsilon)` apart on the probability side and `C_d/(1-p) + C_n/p` apart on
/// the exposure side); if they ever did, the lower threshold wins.
pub const EDGE_TOL: f64 = 1e-9;

/// A closed interval within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    /// Lower endpoint.
    pub lo: f64,
    /// Upper endpoint; always `>= lo`.
    pub hi: f64,
}

impl Interval {
    /// An interval from `lo` to `hi`.
    ///
    /// # Panics
    /// In debug builds, if the endpoints are unordered or outside `[0, 1]`.
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(
            (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi,
            "interval [{lo}, {hi}] must be ordered within [0, 1]"
        );
        Interval { lo, hi }
    }

    /// The degenerate interval `[x, x]`.
    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    /// Whether the interval is a single point.
    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Interval width.
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Midpoint of the interval.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Whether `x` lies inside, within `slack` of the endpoints.
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.lo - slack <= x && x <= self.hi + slack
    }

    /// The point of the interval closest to `x`.
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// An axis-aligned box of mixed strategies: a product of one interval per
/// strategy component. Every point of a valid box satisfies the simplex
/// constraint (component sum at most one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyBox {
    /// Interval for the first component (`omega_d` or `lambda_d`).
    pub d: Interval,
    /// Interval for the second component (`omega_n` or `lambda_n`).
    pub n: Interval,
}

impl StrategyBox {
    /// A box from two intervals.
    ///
    /// # Panics
    /// In debug builds, if some corner violates the simplex constraint.
    pub fn new(d: Interval, n: Interval) -> Self {
        debug_assert!(
            d.hi + n.hi <= 1.0 + 1e-12,
            "box corner ({}, {}) violates the simplex constraint",
            d.hi,
            n.hi
        );
        StrategyBox { d, n }
    }

    /// The degenerate box holding the single point `(d, n)`.
    pub fn point(d: f64, n: f64) -> Self {
        Self::new(Interval::point(d), Interval::point(n))
    }

    /// Whether the box is a single point.
    pub fn is_point(&self) -> bool {
        self.d.is_point() && self.n.is_point()
    }

    /// Midpoint of the box.
    pub fn midpoint(&self) -> (f64, f64) {
        (self.d.midpoint(), self.n.midpoint())
    }

    /// Whether `(d, n)` lies inside the box, within `slack` per axis.
    pub fn contains(&self, d: f64, n: f64, slack: f64) -> bool {
        self.d.contains(d, slack) && self.n.contains(n, slack)
    }

    /// The point of the box closest to `(d, n)` (componentwise projection).
    pub fn project(&self, d: f64, n: f64) -> (f64, f64) {
        (self.d.clamp(d), self.n.clamp(n))
    }

    /// Evenly spaced sample points covering the box: `per_axis` values along
    /// each non-degenerate axis (degenerate axes contribute their single
    /// value). Useful for verifying every element of a set-valued response.
    pub fn sample_points(&self, per_axis: usize) -> Vec<(f64, f64)> {
        let axis = |iv: &Interval| -> Vec<f64> {
            if iv.is_point() || per_axis <= 1 {
                vec![iv.lo]
            } else {
                (0..per_axis)
                    .map(|i| iv.lo + iv.width() * i as f64 / (per_axis - 1) as f64)
                    .collect()
            }
        };
        let ds = axis(&self.d);
        let ns = axis(&self.n);
        let mut out = Vec::with_capacity(ds.len() * ns.len());
        for &d in &ds {
            for &n in &ns {
                out.push((d, n));
            }
        }
        out
    }
}

/// The user's best-response set against a published-`D` probability.
///
/// Five cases, driven by where `p_d` falls relative to the thresholds
/// `p_low = p/(1+epsilon)` and `p_high = (p+epsilon)/(1+epsilon)`:
///
/// - below `p_low`: bet everything on non-`D` — `{(0, 1)}`;
/// - between the thresholds: abstain — `{(0, 0)}`;
/// - above `p_high`: bet everything on `D` — `{(1, 0)}`;
/// - exactly at `p_low` (within [`EDGE_TOL`]): every pure-`n` mix ties —
///   `{0} x [0, 1]`;
/// - exactly at `p_high`: every pure-`d` mix ties — `[0, 1] x {0}`.
pub fn user_best_response(p_d: f64, params: &GameParameters) -> StrategyBox {
    debug_assert!(
        (-1e-12..=1.0 + 1e-12).contains(&p_d),
        "p_d must be a probability (got {p_d})"
    );
    let th = user_thresholds(params.p(), params.epsilon());
    if (p_d - th.p_low).abs() <= EDGE_TOL {
        StrategyBox::new(Interval::point(0.0), Interval::new(0.0, 1.0))
    } else if (p_d - th.p_high).abs() <= EDGE_TOL {
        StrategyBox::new(Interval::new(0.0, 1.0), Interval::point(0.0))
    } else if p_d < th.p_low {
        StrategyBox::point(0.0, 1.0)
    } else if p_d > th.p_high {
        StrategyBox::point(1.0, 0.0)
    } else {
        StrategyBox::point(0.0, 0.0)
    }
}

/// The miner's best-response set against a user who only bets on `D`.
///
/// Five cases, driven by where the stake exposure `Lambda = lambda_d * b_d *
/// (beta_d + 1)` falls relative to `Lambda_low = r_w - c_d/(1-p)` and
/// `Lambda_high = r_w + c_n/p`:
///
/// - below `Lambda_low`: force `D` — `{(1, 0)}`;
/// - between: mine honestly — `{(0, 0)}`;
/// - above `Lambda_high`: force non-`D` — `{(0, 1)}`;
/// - exactly at `Lambda_low` (within [`EDGE_TOL`]): every honest/force-`D`
///   mix ties — `[0, 1] x {0}`;
/// - exactly at `Lambda_high`: every honest/force-non-`D` mix ties —
///   `{0} x [0, 1]`.
///
/// # Errors
///
/// - [`Error::Unsupported`] if the user bets on non-`D` (`lambda_n > 0`);
///   no closed form covers that case — use
///   [`crate::oracle::miner_best_response_box`] instead.
/// - [`Error::Domain`] if `c_d = 0` or `c_n = 0`: with free withholding the
///   threshold structure above degenerates.
pub fn miner_best_response(
    user: &UserStrategy,
    params: &GameParameters,
) -> Result<StrategyBox, Error> {
    if params.c_d() == 0.0 || params.c_n() == 0.0 {
        return Err(Error::domain(
            "closed-form miner response requires strictly positive withholding costs c_d, c_n",
        ));
    }
    if user.lambda_n() > 0.0 {
        return Err(Error::Unsupported(format!(
            "closed-form miner response requires lambda_n = 0 (got {}); \
             use the oracle's vertex-enumeration response for general users",
            user.lambda_n()
        )));
    }
    let th = miner_thresholds(params, user.lambda_d());
    let boxed = if (th.stake - th.low).abs() <= EDGE_TOL {
        StrategyBox::new(Interval::new(0.0, 1.0), Interval::point(0.0))
    } else if (th.stake - th.high).abs() <= EDGE_TOL {
        StrategyBox::new(Interval::point(0.0), Interval::new(0.0, 1.0))
    } else if th.stake < th.low {
        StrategyBox::point(1.0, 0.0)
    } else if th.stake > th.high {
        StrategyBox::point(0.0, 1.0)
    } else {
        StrategyBox::point(0.0, 0.0)
    };
    Ok(boxed)
}
