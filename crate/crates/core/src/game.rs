//! Game descriptions: players, payoffs, modes, and the built-in duopolies.
//!
//! A player has a choice interval, a private parameter interval, a utility
//! specification, and one belief family per opponent. Quadratic utilities
//! are stored as coefficient forms that are affine in the parameter and in
//! each opponent choice; that structure is what lets the solver integrate
//! expected payoffs exactly. Arbitrary payoffs go through the `Blackbox`
//! variant and the numerical path.

use std::fmt;
use std::sync::Arc;

use crate::beliefs::{family_extremes, BeliefFamily};
use crate::{Error, Interval, Result};

/// Strategic mode of the game: whether best responses move with or against
/// the opponents' choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Complements,
    Substitutes,
}

/// Affine function of the player's own parameter: `constant + theta * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaAffine {
    pub constant: f64,
    pub theta: f64,
}

impl ThetaAffine {
    pub const ZERO: Self = Self { constant: 0.0, theta: 0.0 };

    pub fn new(constant: f64, theta: f64) -> Self {
        Self { constant, theta }
    }

    pub fn at(&self, theta: f64) -> f64 {
        self.constant + self.theta * theta
    }
}

/// Coefficient that is affine in the player's parameter and in each
/// opponent's choice: `base(theta) + sum_j per_opponent[j](theta) * c_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffForm {
    pub base: ThetaAffine,
    pub per_opponent: Vec<ThetaAffine>,
}

impl CoeffForm {
    pub fn constant(v: f64, n_opponents: usize) -> Self {
        Self { base: ThetaAffine::new(v, 0.0), per_opponent: vec![ThetaAffine::ZERO; n_opponents] }
    }

    /// Value at concrete opponent choices.
    pub fn eval(&self, theta: f64, others: &[f64]) -> f64 {
        self.base.at(theta)
            + self
                .per_opponent
                .iter()
                .zip(others)
                .map(|(k, c)| k.at(theta) * c)
                .sum::<f64>()
    }

    /// Expected value when opponent choices are independent with the given
    /// means; exact because the form is affine in each choice.
    pub fn expected(&self, theta: f64, means: &[f64]) -> f64 {
        self.eval(theta, means)
    }
}

/// Quadratic own-choice payoff `A*c^2 + B*c + D` with coefficient forms.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticUtility {
    pub a: CoeffForm,
    pub b: CoeffForm,
    pub d: CoeffForm,
}

/// Payoff callback `(theta_i, c_i, c_-i) -> utility`.
pub type PayoffFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;

/// Payoff of one player.
#[derive(Clone)]
pub enum UtilitySpec {
    /// `A(theta, c_-i) * c^2 + B(theta, c_-i) * c + D(theta, c_-i)` with
    /// `A < 0` on the whole domain.
    Quadratic(QuadraticUtility),
    /// Arbitrary payoff `(theta_i, c_i, c_-i) -> utility`, evaluated
    /// numerically.
    Blackbox(PayoffFn),
}

impl fmt::Debug for UtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilitySpec::Quadratic(q) => f.debug_tuple("Quadratic").field(q).finish(),
            UtilitySpec::Blackbox(_) => f.write_str("Blackbox(..)"),
        }
    }
}

/// One player: choice interval, parameter interval, payoff, and one belief
/// family per opponent (ordered by ascending opponent index, self skipped).
#[derive(Debug, Clone)]
pub struct PlayerSpec {
    pub choice: Interval,
    pub parameter: Interval,
    pub utility: UtilitySpec,
    pub families: Vec<BeliefFamily>,
}

/// A complete game: mode plus at least two players.
#[derive(Debug, Clone)]
pub struct GameSpec {
    mode: Mode,
    players: Vec<PlayerSpec>,
}

impl GameSpec {
    /// Validates and assembles a game.
    ///
    /// Checks interval sanity, one belief family per opponent on the right
    /// parameter domain, designated family extremes (via `family_extremes`),
    /// and strict concavity of quadratic payoffs (`A < 0` over the whole
    /// domain, checked exactly at the corner points since `A` is affine in
    /// the parameter and each opponent choice).
    pub fn new(mode: Mode, players: Vec<PlayerSpec>) -> Result<Self> {
        if players.len() < 2 {
            return Err(Error::Argument(format!(
                "a game needs at least two players, got {}",
                players.len()
            )));
        }
        let n = players.len();
        for (i, p) in players.iter().enumerate() {
            if p.choice.width() <= 0.0 {
                return Err(Error::Argument(format!(
                    "player {i} choice interval must have positive width"
                )));
            }
            if p.parameter.width() <= 0.0 {
                return Err(Error::Argument(format!(
                    "player {i} parameter interval must have positive width"
                )));
            }
            if p.families.len() != n - 1 {
                return Err(Error::Argument(format!(
                    "player {i} needs {} belief families, got {}",
                    n - 1,
                    p.families.len()
                )));
            }
            for (slot, fam) in p.families.iter().enumerate() {
                let j = opponent_index(i, slot, n);
                let dom = fam.domain();
                let param = players[j].parameter;
                if (dom.0 - param.lo).abs() > 1e-12 || (dom.1 - param.hi).abs() > 1e-12 {
                    return Err(Error::Argument(format!(
                        "player {i} family for opponent {j} lives on [{}, {}], expected [{}, {}]",
                        dom.0, dom.1, param.lo, param.hi
                    )));
                }
                family_extremes(fam)?;
            }
            if let UtilitySpec::Quadratic(q) = &p.utility {
                if q.a.per_opponent.len() != n - 1
                    || q.b.per_opponent.len() != n - 1
                    || q.d.per_opponent.len() != n - 1
                {
                    return Err(Error::Argument(format!(
                        "player {i} quadratic coefficients need {} opponent entries",
                        n - 1
                    )));
                }
                check_concavity(i, p, &players, q)?;
            }
        }
        Ok(Self { mode, players })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn players(&self) -> &[PlayerSpec] {
        &self.players
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    /// Opponent player indices of `i`, in the order of that player's
    /// family/coefficient slots.
    pub fn opponents(&self, i: usize) -> Vec<usize> {
        (0..self.players.len()).filter(|j| *j != i).collect()
    }
}

/// Player index of opponent slot `slot` for player `i` in an `n`-player game.
pub fn opponent_index(i: usize, slot: usize, n: usize) -> usize {
    debug_assert!(slot < n - 1);
    if slot < i {
        slot
    } else {
        slot + 1
    }
}

fn check_concavity(
    i: usize,
    p: &PlayerSpec,
    players: &[PlayerSpec],
    q: &QuadraticUtility,
) -> Result<()> {
    // A is bilinear in (theta, c_j), so its maximum over the box sits at a
    // corner; enumerate them
    let n = players.len();
    let corners = 1_usize << (n - 1);
    for theta in [p.parameter.lo, p.parameter.hi] {
        for mask in 0..corners {
            let others: Vec<f64> = (0..n - 1)
                .map(|slot| {
                    let j = opponent_index(i, slot, n);
                    if mask & (1 << slot) != 0 {
                        players[j].choice.hi
                    } else {
                        players[j].choice.lo
                    }
                })
                .collect();
            let a = q.a.eval(theta, &others);
            if !(a < 0.0) {
                return Err(Error::AssumptionViolation(format!(
                    "player {i} quadratic leading coefficient is {a} at theta {theta}, must be negative"
                )));
            }
        }
    }
    Ok(())
}

/// Evaluates player `i`'s payoff at a parameter, an own choice, and concrete
/// opponent choices (one per opponent slot).
pub fn utility_eval(g: &GameSpec, i: usize, theta: f64, c: f64, others: &[f64]) -> Result<f64> {
    let n = g.players.len();
    if i >= n {
        return Err(Error::Argument(format!("player index {i} out of range for {n} players")));
    }
    let p = &g.players[i];
    if others.len() != n - 1 {
        return Err(Error::Argument(format!(
            "expected {} opponent choices, got {}",
            n - 1,
            others.len()
        )));
    }
    let slack_t = 1e-9 * p.parameter.width().max(1.0);
    if !p.parameter.contains(theta, slack_t) {
        return Err(Error::Domain(format!(
            "parameter {theta} outside [{}, {}]",
            p.parameter.lo, p.parameter.hi
        )));
    }
    let slack_c = 1e-9 * p.choice.width().max(1.0);
    if !p.choice.contains(c, slack_c) {
        return Err(Error::Domain(format!(
            "choice {c} outside [{}, {}]",
            p.choice.lo, p.choice.hi
        )));
    }
    for (slot, cj) in others.iter().enumerate() {
        let j = opponent_index(i, slot, n);
        let cj_int = g.players[j].choice;
        if !cj_int.contains(*cj, 1e-9 * cj_int.width().max(1.0)) {
            return Err(Error::Domain(format!(
                "opponent {j} choice {cj} outside [{}, {}]",
                cj_int.lo, cj_int.hi
            )));
        }
    }
    let u = match &p.utility {
        UtilitySpec::Quadratic(q) => {
            let a = q.a.eval(theta, others);
            let b = q.b.eval(theta, others);
            let d = q.d.eval(theta, others);
            a * c * c + b * c + d
        }
        UtilitySpec::Blackbox(f) => f(theta, c, others),
    };
    if !u.is_finite() {
        return Err(Error::Numeric(format!(
            "payoff evaluated to {u} at theta {theta}, choice {c}"
        )));
    }
    Ok(u)
}

/// The family of halved-uniform densities used by both built-in models:
/// height `alpha` on the lower half of `[lo, hi]` and `2/(hi-lo) - alpha` on
/// the upper half, for `alpha` in `{0, 1/(hi-lo), 2/(hi-lo)}`. The first
/// member concentrates on the upper half and dominates the rest.
fn half_split_family(lo: f64, hi: f64) -> Result<BeliefFamily> {
    let width = hi - lo;
    let mid = 0.5 * (lo + hi);
    let full = 2.0 / width;
    let members = [0.0, 1.0 / width, full]
        .into_iter()
        .map(|alpha| {
            crate::beliefs::PiecewiseConstantDensity::new(
                vec![lo, mid, hi],
                vec![alpha, full - alpha],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    BeliefFamily::new(members, 0, 2)
}

/// Price-competition duopoly with strategic complements.
///
/// Payoff of player 1 is `(p_1 - theta_1)(a - p_1 + p_2)`, parameters on
/// `[0, phi]`, prices on `[0, p_bar]`. Requires `p_bar >= a + phi` so every
/// best response stays interior.
pub fn bertrand_game(a: f64, phi: f64, p_bar: f64) -> Result<GameSpec> {
    if !(a > 0.0) || !(phi > 0.0) {
        return Err(Error::Argument(format!(
            "bertrand needs a > 0 and phi > 0, got a = {a}, phi = {phi}"
        )));
    }
    if p_bar < a + phi {
        return Err(Error::Argument(format!(
            "bertrand needs p_bar >= a + phi, got p_bar = {p_bar} < {}",
            a + phi
        )));
    }
    // (p - theta)(a - p + q) = -p^2 + (a + theta + q) p - theta a - theta q
    let quad = QuadraticUtility {
        a: CoeffForm::constant(-1.0, 1),
        b: CoeffForm {
            base: ThetaAffine::new(a, 1.0),
            per_opponent: vec![ThetaAffine::new(1.0, 0.0)],
        },
        d: CoeffForm {
            base: ThetaAffine::new(0.0, -a),
            per_opponent: vec![ThetaAffine::new(0.0, -1.0)],
        },
    };
    let player = PlayerSpec {
        choice: Interval::new(0.0, p_bar)?,
        parameter: Interval::new(0.0, phi)?,
        utility: UtilitySpec::Quadratic(quad),
        families: vec![half_split_family(0.0, phi)?],
    };
    GameSpec::new(Mode::Complements, vec![player.clone(), player])
}

/// Quantity-competition duopoly with strategic substitutes.
///
/// Payoff of player 1 is `(a - theta_1 (q_1 + q_2) - c) q_1`, parameters on
/// `[phi_lo, phi_hi]`, quantities on `[0, q_bar]`. Requires
/// `q_bar >= (a - c) / (2 phi_lo)` so the round-one upper bound fits.
pub fn cournot_game(a: f64, c: f64, phi_lo: f64, phi_hi: f64, q_bar: f64) -> Result<GameSpec> {
    if !(a > c) || !(c >= 0.0) {
        return Err(Error::Argument(format!(
            "cournot needs a > c >= 0, got a = {a}, c = {c}"
        )));
    }
    if !(phi_lo > 0.0) || !(phi_hi > phi_lo) {
        return Err(Error::Argument(format!(
            "cournot needs 0 < phi_lo < phi_hi, got [{phi_lo}, {phi_hi}]"
        )));
    }
    let needed = (a - c) / (2.0 * phi_lo);
    if q_bar < needed {
        return Err(Error::Argument(format!(
            "cournot needs q_bar >= (a - c) / (2 phi_lo) = {needed}, got {q_bar}"
        )));
    }
    // (a - theta (q + r) - c) q = -theta q^2 + (a - c - theta r) q
    let quad = QuadraticUtility {
        a: CoeffForm {
            base: ThetaAffine::new(0.0, -1.0),
            per_opponent: vec![ThetaAffine::ZERO],
        },
        b: CoeffForm {
            base: ThetaAffine::new(a - c, 0.0),
            per_opponent: vec![ThetaAffine::new(0.0, -1.0)],
        },
        d: CoeffForm::constant(0.0, 1),
    };
    let player = PlayerSpec {
        choice: Interval::new(0.0, q_bar)?,
        parameter: Interval::new(phi_lo, phi_hi)?,
        utility: UtilitySpec::Quadratic(quad),
        families: vec![half_split_family(phi_lo, phi_hi)?],
    };
    GameSpec::new(Mode::Substitutes, vec![player.clone(), player])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::{fosd_compare, PiecewiseConstantDensity};

    #[test]
    fn bertrand_payoff_matches_product_form() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        // (0.5 - 0)(1 - 0.5 + 0) = 0.25
        let u = utility_eval(&g, 0, 0.0, 0.5, &[0.0]).unwrap();
        assert!((u - 0.25).abs() < 1e-15);
        // direct cross-check against the product form at another point
        let u = utility_eval(&g, 1, 0.7, 1.2, &[0.9]).unwrap();
        assert!((u - (1.2 - 0.7) * (1.0 - 1.2 + 0.9)).abs() < 1e-15);
    }

    #[test]
    fn cournot_payoff_matches_product_form() {
        let g = cournot_game(10.0, 2.0, 1.0, 3.0, 8.0).unwrap();
        // (10 - 2*(1+1) - 2)*1 = 4
        let u = utility_eval(&g, 0, 2.0, 1.0, &[1.0]).unwrap();
        assert!((u - 4.0).abs() < 1e-15);
        let u = utility_eval(&g, 1, 2.5, 2.0, &[3.0]).unwrap();
        assert!((u - (10.0 - 2.5 * 5.0 - 2.0) * 2.0).abs() < 1e-12);
    }

    #[test]
    fn built_in_preconditions_are_enforced() {
        assert!(bertrand_game(1.0, 1.0, 1.5).is_err());
        assert!(bertrand_game(-1.0, 1.0, 3.0).is_err());
        // q_bar threshold is (10 - 2) / (2 * 1) = 4
        assert!(cournot_game(10.0, 2.0, 1.0, 3.0, 3.9).is_err());
        assert!(cournot_game(10.0, 2.0, 1.0, 3.0, 4.0).is_ok());
        assert!(cournot_game(10.0, 2.0, 0.0, 3.0, 8.0).is_err());
    }

    #[test]
    fn built_in_families_have_valid_extremes() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let fam = &g.players()[0].families[0];
        assert_eq!(fam.members().len(), 3);
        let top = &fam.members()[fam.max_index()];
        let bot = &fam.members()[fam.min_index()];
        assert!(fosd_compare(top, bot, 1e-12).unwrap().dominates());
        // the designated maximum has mean 3 phi / 4
        assert!((top.mean() - 0.75).abs() < 1e-12);
        assert!((bot.mean() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn domain_violations_are_reported() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        assert!(utility_eval(&g, 0, 2.0, 0.5, &[0.0]).is_err());
        assert!(utility_eval(&g, 0, 0.5, 5.0, &[0.0]).is_err());
        assert!(utility_eval(&g, 0, 0.5, 0.5, &[4.0]).is_err());
        assert!(utility_eval(&g, 2, 0.5, 0.5, &[0.0]).is_err());
    }

    #[test]
    fn positive_leading_coefficient_is_rejected() {
        let q = QuadraticUtility {
            a: CoeffForm::constant(1.0, 1),
            b: CoeffForm::constant(0.0, 1),
            d: CoeffForm::constant(0.0, 1),
        };
        let player = PlayerSpec {
            choice: Interval::new(0.0, 1.0).unwrap(),
            parameter: Interval::new(0.0, 1.0).unwrap(),
            utility: UtilitySpec::Quadratic(q),
            families: vec![BeliefFamily::singleton(
                PiecewiseConstantDensity::uniform(0.0, 1.0).unwrap(),
            )],
        };
        let err = GameSpec::new(Mode::Complements, vec![player.clone(), player]).unwrap_err();
        assert!(matches!(err, Error::AssumptionViolation(_)));
    }
}
