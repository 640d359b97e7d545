//! Round iteration that shrinks per-parameter choice intervals.
//!
//! Each round pairs every player's opponents with extremal composite
//! beliefs (bound function plus family member whose pushforward dominates,
//! or is dominated by, all others) and takes best responses against them.
//! Under complements the high bound responds to the highest composite;
//! under substitutes the high bound responds to the lowest composite, and
//! vice versa. Quadratic games with a leading coefficient that is constant
//! in the parameter, or proportional to it, keep exact closed-form bound
//! functions across rounds (affine and reciprocal-affine respectively);
//! everything else runs per-grid-point searches joined by linear
//! interpolation.

use crate::beliefs::{
    composite_compare, pushforward, ChoiceBelief, PiecewiseConstantDensity,
};
use crate::exec::run_indexed;
use crate::game::{opponent_index, CoeffForm, GameSpec, Mode, ThetaAffine, UtilitySpec};
use crate::piecewise::PiecewiseFn;
use crate::{
    linspace, Error, Execution, Interval, Monotonicity, Result, COMPARE_TOL, GOLDEN_TOL,
    SIMPSON_REL_TOL,
};

/// Which bound of the updated interval is being computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    High,
    Low,
}

/// How best responses interact with the previous round's intervals.
///
/// `Restricted` is the set-iteration semantics: each best response is the
/// argmax over the previous interval, so the unconstrained optimum is
/// clamped, clamps are recorded as clipping events, and rounds are nested.
/// `Unrestricted` is the raw extremal recursion used by the duopoly closed
/// forms: stationary points are kept even when they leave the previous
/// interval or the choice set, and rounds may overshoot before converging
/// to the same interior fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgePolicy {
    #[default]
    Restricted,
    Unrestricted,
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Hard cap on the number of rounds.
    pub max_rounds: usize,
    /// Terminate once the largest per-point bound movement in a round is
    /// below this.
    pub width_tol: f64,
    /// Number of parameter grid points per player.
    pub grid_size: usize,
    pub edge_policy: EdgePolicy,
    pub execution: Execution,
    /// Tolerance for dominance comparisons during member selection.
    pub compare_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_rounds: 200,
            width_tol: 1e-12,
            grid_size: 65,
            edge_policy: EdgePolicy::Restricted,
            execution: Execution::Parallel,
            compare_tol: COMPARE_TOL,
        }
    }
}

/// Lower and upper bound data for one player in one round.
#[derive(Debug, Clone)]
pub struct PlayerBounds {
    /// Parameter grid (shared across rounds).
    pub grid: Vec<f64>,
    /// Bound values at the grid points.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Bound functions over the whole parameter interval. Exact closed
    /// forms when `exact` is true, linear interpolants otherwise.
    pub lower_fn: PiecewiseFn,
    pub upper_fn: PiecewiseFn,
    pub exact: bool,
}

impl PlayerBounds {
    pub fn interval_at(&self, idx: usize) -> Interval {
        Interval { lo: self.lower[idx], hi: self.upper[idx] }
    }
}

/// Bounds of every player after some round.
#[derive(Debug, Clone)]
pub struct BoundProfile {
    pub per_player: Vec<PlayerBounds>,
}

/// Why the solve loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxRounds,
    WidthTolerance,
    FixedPoint,
}

/// One clamped best response: the unconstrained optimum left the feasible
/// interval at this grid point.
#[derive(Debug, Clone, Copy)]
pub struct ClipEvent {
    pub round: usize,
    pub player: usize,
    pub theta: f64,
    pub raw: f64,
    pub clipped: f64,
}

/// Full record of a solve: the profile after every round (index 0 is the
/// initial choice intervals), per-round convergence, and clipping events.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub rounds: Vec<BoundProfile>,
    /// Largest absolute bound movement per round, one entry per computed
    /// round.
    pub convergence: Vec<f64>,
    pub terminated_by: Termination,
    pub clipping_events: Vec<ClipEvent>,
}

/// One row of the tabular trace serialization.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub round: usize,
    pub player: usize,
    pub theta: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IterationTrace {
    /// Number of computed rounds (excluding the initial profile).
    pub fn n_rounds(&self) -> usize {
        self.rounds.len() - 1
    }

    pub fn final_profile(&self) -> &BoundProfile {
        self.rounds.last().expect("trace always holds round 0")
    }

    /// Flattens the trace into `(round, player, theta, lower, upper)` rows.
    pub fn rows(&self) -> Vec<TraceRow> {
        let mut out = Vec::new();
        for (round, profile) in self.rounds.iter().enumerate() {
            for (player, b) in profile.per_player.iter().enumerate() {
                for (idx, theta) in b.grid.iter().enumerate() {
                    out.push(TraceRow {
                        round,
                        player,
                        theta: *theta,
                        lower: b.lower[idx],
                        upper: b.upper[idx],
                    });
                }
            }
        }
        out
    }
}

/// Extremal belief inputs for one player: per opponent slot, the bound
/// function to believe in and the selected family member.
#[derive(Debug, Clone)]
pub struct ExtremalInputs {
    pub beliefs: Vec<ChoiceBelief>,
    pub densities: Vec<PiecewiseConstantDensity>,
    /// Index of the selected member within each opponent family.
    pub members: Vec<usize>,
}

/// Integrates a coefficient form against fixed opponent means.
fn integrate_coeff(form: &CoeffForm, means: &[f64]) -> ThetaAffine {
    let mut constant = form.base.constant;
    let mut theta = form.base.theta;
    for (k, m) in form.per_opponent.iter().zip(means) {
        constant += k.constant * m;
        theta += k.theta * m;
    }
    ThetaAffine { constant, theta }
}

fn belief_means(
    beliefs: &[ChoiceBelief],
    densities: &[PiecewiseConstantDensity],
) -> Result<Vec<f64>> {
    beliefs
        .iter()
        .zip(densities)
        .map(|(b, f)| f.integrate(b.as_fn()))
        .collect()
}

fn validate_belief_profile(
    g: &GameSpec,
    i: usize,
    beliefs: &[ChoiceBelief],
    densities: &[PiecewiseConstantDensity],
    check_range: bool,
) -> Result<()> {
    let n = g.n_players();
    if i >= n {
        return Err(Error::Argument(format!("player index {i} out of range")));
    }
    if beliefs.len() != n - 1 || densities.len() != n - 1 {
        return Err(Error::Argument(format!(
            "expected {} opponent beliefs and densities, got {} and {}",
            n - 1,
            beliefs.len(),
            densities.len()
        )));
    }
    for slot in 0..n - 1 {
        let j = opponent_index(i, slot, n);
        let param = g.players()[j].parameter;
        let slack = 1e-9 * param.width().max(1.0);
        let (blo, bhi) = beliefs[slot].domain();
        if (blo - param.lo).abs() > slack || (bhi - param.hi).abs() > slack {
            return Err(Error::Domain(format!(
                "belief for opponent {j} lives on [{blo}, {bhi}], expected [{}, {}]",
                param.lo, param.hi
            )));
        }
        let (dlo, dhi) = densities[slot].domain();
        if (dlo - param.lo).abs() > slack || (dhi - param.hi).abs() > slack {
            return Err(Error::Domain(format!(
                "density for opponent {j} lives on [{dlo}, {dhi}], expected [{}, {}]",
                param.lo, param.hi
            )));
        }
        if check_range {
            let choice = g.players()[j].choice;
            let (rlo, rhi) = beliefs[slot].range();
            if !choice.contains(rlo, 1e-9) || !choice.contains(rhi, 1e-9) {
                return Err(Error::Domain(format!(
                    "belief values for opponent {j} span [{rlo}, {rhi}], outside [{}, {}]",
                    choice.lo, choice.hi
                )));
            }
        }
    }
    Ok(())
}

/// Expected payoff of player `i` with choice `c`, given one choice belief
/// and one parameter density per opponent.
///
/// Quadratic games integrate exactly through the opponent means; black-box
/// games run adaptive Simpson quadrature over a per-opponent tensor grid,
/// split at density and belief breakpoints, refined to `SIMPSON_REL_TOL`.
pub fn expected_utility(
    g: &GameSpec,
    i: usize,
    theta: f64,
    c: f64,
    beliefs: &[ChoiceBelief],
    densities: &[PiecewiseConstantDensity],
) -> Result<f64> {
    validate_belief_profile(g, i, beliefs, densities, matches!(g.players()[i].utility, UtilitySpec::Blackbox(_)))?;
    let p = &g.players()[i];
    if !p.parameter.contains(theta, 1e-9 * p.parameter.width().max(1.0)) {
        return Err(Error::Domain(format!(
            "parameter {theta} outside [{}, {}]",
            p.parameter.lo, p.parameter.hi
        )));
    }
    match &p.utility {
        UtilitySpec::Quadratic(q) => {
            let means = belief_means(beliefs, densities)?;
            let a = integrate_coeff(&q.a, &means).at(theta);
            let b = integrate_coeff(&q.b, &means).at(theta);
            let d = integrate_coeff(&q.d, &means).at(theta);
            Ok(a * c * c + b * c + d)
        }
        UtilitySpec::Blackbox(_) => {
            quadrature_expected_utility(g, i, theta, c, beliefs, densities)
        }
    }
}

fn quadrature_expected_utility(
    g: &GameSpec,
    i: usize,
    theta: f64,
    c: f64,
    beliefs: &[ChoiceBelief],
    densities: &[PiecewiseConstantDensity],
) -> Result<f64> {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        g: &GameSpec,
        i: usize,
        theta: f64,
        c: f64,
        beliefs: &[ChoiceBelief],
        densities: &[PiecewiseConstantDensity],
        slot: usize,
        fixed: &[f64],
    ) -> Result<f64> {
        if slot == beliefs.len() {
            return crate::game::utility_eval(g, i, theta, c, fixed);
        }
        let belief = &beliefs[slot];
        let density = &densities[slot];
        let mut cuts: Vec<f64> = density.breakpoints().to_vec();
        cuts.extend(belief.as_fn().breakpoints());
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let height = density_height(density, 0.5 * (w[0] + w[1]));
            if height == 0.0 {
                continue;
            }
            let f = |t: f64| -> Result<f64> {
                let mut next = Vec::with_capacity(fixed.len() + 1);
                next.extend_from_slice(fixed);
                next.push(belief.eval(t)?);
                rec(g, i, theta, c, beliefs, densities, slot + 1, &next)
            };
            total += height * adaptive_simpson(&f, w[0], w[1])?;
        }
        Ok(total)
    }
    rec(g, i, theta, c, beliefs, densities, 0, &[])
}

fn density_height(d: &PiecewiseConstantDensity, theta: f64) -> f64 {
    let bp = d.breakpoints();
    let idx = bp.partition_point(|b| *b <= theta).saturating_sub(1).min(d.values().len() - 1);
    d.values()[idx]
}

/// Classic adaptive Simpson with relative refinement target
/// `SIMPSON_REL_TOL`; depth is capped to keep runaway integrands from
/// spinning forever.
fn adaptive_simpson(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    const MAX_DEPTH: usize = 24;
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> Result<f64>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm)?;
        let frm = f(rm)?;
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * eps {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Numeric(format!(
                "quadrature failed to refine on [{a}, {b}] (residual {delta:e})"
            )));
        }
        let half = 0.5 * eps;
        Ok(rec(f, a, m, fa, flm, fm, left, half, depth + 1)?
            + rec(f, m, b, fm, frm, fb, right, half, depth + 1)?)
    }
    let fa = f(a)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let fb = f(b)?;
    let whole = simpson(fa, fm, fb, a, b);
    let eps = SIMPSON_REL_TOL * whole.abs().max(1.0);
    rec(f, a, b, fa, fm, fb, whole, eps, 0)
}

/// A best response: the maximizer over `feasible`, plus the unconstrained
/// stationary point when one was available, and whether clamping happened.
#[derive(Debug, Clone, Copy)]
pub struct BestResponse {
    pub choice: f64,
    pub unconstrained: Option<f64>,
    pub clipped: bool,
}

/// Maximizes player `i`'s expected payoff over `feasible`, which must sit
/// inside the player's choice interval.
///
/// Quadratic payoffs use the closed-form stationary point clamped to
/// `feasible`; black-box payoffs run a golden-section search after a
/// five-point concavity probe (expected utility above both endpoints but
/// below the midpoint raises an assumption violation).
pub fn best_response(
    g: &GameSpec,
    i: usize,
    theta: f64,
    beliefs: &[ChoiceBelief],
    densities: &[PiecewiseConstantDensity],
    feasible: Interval,
) -> Result<BestResponse> {
    let p = &g.players()[i];
    let slack = 1e-9 * p.choice.width().max(1.0);
    if !p.choice.contains_interval(&feasible, slack) {
        return Err(Error::Argument(format!(
            "feasible interval [{}, {}] outside choice interval [{}, {}]",
            feasible.lo, feasible.hi, p.choice.lo, p.choice.hi
        )));
    }
    match &p.utility {
        UtilitySpec::Quadratic(q) => {
            validate_belief_profile(g, i, beliefs, densities, false)?;
            let means = belief_means(beliefs, densities)?;
            let a2 = integrate_coeff(&q.a, &means).at(theta);
            if !(a2 < 0.0) {
                return Err(Error::AssumptionViolation(format!(
                    "integrated leading coefficient is {a2} at theta {theta}, must be negative"
                )));
            }
            let b1 = integrate_coeff(&q.b, &means).at(theta);
            let raw = -b1 / (2.0 * a2);
            let choice = feasible.clamp(raw);
            Ok(BestResponse { choice, unconstrained: Some(raw), clipped: choice != raw })
        }
        UtilitySpec::Blackbox(_) => {
            let eu = |c: f64| expected_utility(g, i, theta, c, beliefs, densities);
            golden_section_max(&eu, feasible)
        }
    }
}

fn golden_section_max(
    f: &dyn Fn(f64) -> Result<f64>,
    feasible: Interval,
) -> Result<BestResponse> {
    let (lo, hi) = (feasible.lo, feasible.hi);
    if hi - lo <= GOLDEN_TOL {
        return Ok(BestResponse { choice: feasible.midpoint(), unconstrained: None, clipped: false });
    }
    // five-point probe: a payoff that dips below both endpoints in the
    // middle cannot be concave in the own choice
    let probes: Vec<f64> = (0..5).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect();
    let values: Vec<f64> = probes.iter().map(|c| f(*c)).collect::<Result<_>>()?;
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let slack = 1e-7 * scale;
    if values[0] > values[2] + slack && values[4] > values[2] + slack {
        return Err(Error::AssumptionViolation(format!(
            "expected utility is higher at both endpoints ({}, {}) than at the midpoint ({}); not concave",
            values[0], values[4], values[2]
        )));
    }
    let gr = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d)?;
        }
    }
    let interior = 0.5 * (a + b);
    // the maximum may sit on the boundary; compare explicitly
    let cands = [interior, lo, hi];
    let mut best = interior;
    let mut best_v = f64::NEG_INFINITY;
    for cand in cands {
        let v = f(cand)?;
        if v > best_v {
            best_v = v;
            best = cand;
        }
    }
    Ok(BestResponse { choice: best, unconstrained: None, clipped: best == lo || best == hi })
}

/// Builds the extremal belief inputs for player `i` from the previous
/// round's bounds.
///
/// Under complements the high bound believes the opponents' upper bound
/// functions paired with the member whose pushforward dominates all others;
/// under substitutes the high bound believes the lower bound functions
/// paired with the member whose pushforward is dominated by all others
/// (lowest composite, since best responses fall in opponent choices).
/// The designated family extreme is tried first, every other member after
/// it; if no member's pushforward is extremal the family violates the
/// ordering assumption and an error names the incomparable pair.
pub fn extremal_composite_inputs(
    g: &GameSpec,
    i: usize,
    prev: &BoundProfile,
    which: Which,
    compare_tol: f64,
) -> Result<ExtremalInputs> {
    let n = g.n_players();
    if i >= n {
        return Err(Error::Argument(format!("player index {i} out of range")));
    }
    let use_upper = match (g.mode(), which) {
        (Mode::Complements, Which::High) => true,
        (Mode::Complements, Which::Low) => false,
        (Mode::Substitutes, Which::High) => false,
        (Mode::Substitutes, Which::Low) => true,
    };
    let want_max = matches!(
        (g.mode(), which),
        (Mode::Complements, Which::High) | (Mode::Substitutes, Which::Low)
    );
    let mut beliefs = Vec::with_capacity(n - 1);
    let mut densities = Vec::with_capacity(n - 1);
    let mut members = Vec::with_capacity(n - 1);
    for slot in 0..n - 1 {
        let j = opponent_index(i, slot, n);
        let bounds = &prev.per_player[j];
        let f = if use_upper { bounds.upper_fn.clone() } else { bounds.lower_fn.clone() };
        let belief = ChoiceBelief::enveloping(f, g.players()[j].choice);
        let family = &g.players()[i].families[slot];
        let composites: Vec<_> = family
            .members()
            .iter()
            .map(|m| pushforward(&belief, m))
            .collect::<Result<_>>()?;
        let preferred = if want_max { family.max_index() } else { family.min_index() };
        let mut order: Vec<usize> = vec![preferred];
        order.extend((0..family.members().len()).filter(|k| *k != preferred));
        let mut chosen = None;
        'candidates: for cand in order {
            for (other, comp) in composites.iter().enumerate() {
                if other == cand {
                    continue;
                }
                let r = composite_compare(&composites[cand], comp, compare_tol)?;
                let ok = if want_max { r.dominates() } else { r.dominated_by() };
                if !ok {
                    continue 'candidates;
                }
            }
            chosen = Some(cand);
            break;
        }
        let Some(chosen) = chosen else {
            // report a concrete incomparable pair for the designated member
            let mut detail = String::new();
            for (other, comp) in composites.iter().enumerate() {
                if other == preferred {
                    continue;
                }
                let r = composite_compare(&composites[preferred], comp, compare_tol)?;
                let ok = if want_max { r.dominates() } else { r.dominated_by() };
                if !ok {
                    detail = format!(
                        "members {preferred} and {other} of player {i}'s family for opponent {j} have incomparable pushforwards ({r:?})"
                    );
                    break;
                }
            }
            return Err(Error::AssumptionViolation(format!(
                "no extremal family member for opponent {j}: {detail}"
            )));
        };
        beliefs.push(belief);
        densities.push(family.members()[chosen].clone());
        members.push(chosen);
    }
    Ok(ExtremalInputs { beliefs, densities, members })
}

/// Per-player candidate bounds produced inside a round, before clamping.
struct RawBound {
    f: PiecewiseFn,
    exact: bool,
}

/// Computes the unconstrained extremal best-response function for one
/// player against fixed extremal inputs.
fn raw_bound_fn(
    g: &GameSpec,
    i: usize,
    inputs: &ExtremalInputs,
    grid: &[f64],
    prev: &PlayerBounds,
    opts: &SolveOptions,
    which: Which,
) -> Result<RawBound> {
    let p = &g.players()[i];
    let theta_int = p.parameter;
    match &p.utility {
        UtilitySpec::Quadratic(q) => {
            let means = belief_means(&inputs.beliefs, &inputs.densities)?;
            let a2 = integrate_coeff(&q.a, &means);
            let b1 = integrate_coeff(&q.b, &means);
            for theta in [theta_int.lo, theta_int.hi] {
                if !(a2.at(theta) < 0.0) {
                    return Err(Error::AssumptionViolation(format!(
                        "integrated leading coefficient is {} at theta {theta}, must be negative",
                        a2.at(theta)
                    )));
                }
            }
            if a2.theta == 0.0 {
                // constant leading coefficient: best response affine in theta
                let denom = 2.0 * a2.constant;
                let f = PiecewiseFn::affine(
                    theta_int.lo,
                    theta_int.hi,
                    -b1.constant / denom,
                    -b1.theta / denom,
                )?;
                Ok(RawBound { f, exact: true })
            } else if a2.constant == 0.0 {
                // leading coefficient proportional to theta: reciprocal-affine
                let denom = 2.0 * a2.theta;
                let f = PiecewiseFn::new(vec![crate::piecewise::Piece {
                    lo: theta_int.lo,
                    hi: theta_int.hi,
                    constant: -b1.theta / denom,
                    slope: 0.0,
                    recip: -b1.constant / denom,
                }])?;
                Ok(RawBound { f, exact: true })
            } else {
                // residual theta dependence outside the piece algebra: keep
                // grid-exact values joined linearly
                let ys: Vec<f64> = grid
                    .iter()
                    .map(|t| -b1.at(*t) / (2.0 * a2.at(*t)))
                    .collect();
                Ok(RawBound { f: PiecewiseFn::from_grid_linear(grid, &ys)?, exact: false })
            }
        }
        UtilitySpec::Blackbox(_) => {
            if opts.edge_policy == EdgePolicy::Unrestricted {
                return Err(Error::Argument(
                    "the unrestricted recursion needs quadratic payoffs; black-box payoffs cannot be evaluated outside the choice set".into(),
                ));
            }
            let results = run_indexed(opts.execution, grid.len(), |t| {
                let feasible = prev.interval_at(t);
                best_response(g, i, grid[t], &inputs.beliefs, &inputs.densities, feasible)
                    .map(|r| r.choice)
            });
            let mut ys = Vec::with_capacity(grid.len());
            for r in results {
                ys.push(r?);
            }
            let _ = which;
            Ok(RawBound { f: PiecewiseFn::from_grid_linear(grid, &ys)?, exact: false })
        }
    }
}

/// Runs one round of the extremal update on `prev`.
///
/// Returns the new profile and the clipping events of this round (tagged
/// with `round`). Bounds are checked for the mode's parameter monotonicity
/// and, under `Restricted`, for nestedness inside `prev`.
pub fn iterate_round(
    g: &GameSpec,
    prev: &BoundProfile,
    opts: &SolveOptions,
    round: usize,
) -> Result<(BoundProfile, Vec<ClipEvent>)> {
    let mut per_player = Vec::with_capacity(g.n_players());
    let mut clips = Vec::new();
    for i in 0..g.n_players() {
        let prev_b = &prev.per_player[i];
        let grid = prev_b.grid.clone();
        let hi_inputs = extremal_composite_inputs(g, i, prev, Which::High, opts.compare_tol)?;
        let lo_inputs = extremal_composite_inputs(g, i, prev, Which::Low, opts.compare_tol)?;
        let raw_hi = raw_bound_fn(g, i, &hi_inputs, &grid, prev_b, opts, Which::High)?;
        let raw_lo = raw_bound_fn(g, i, &lo_inputs, &grid, prev_b, opts, Which::Low)?;

        let (upper_fn, lower_fn, exact) = match opts.edge_policy {
            EdgePolicy::Unrestricted => (raw_hi.f.clone(), raw_lo.f.clone(), raw_hi.exact && raw_lo.exact),
            EdgePolicy::Restricted => {
                let u = raw_hi.f.clamp_between(&prev_b.lower_fn, &prev_b.upper_fn)?;
                let l = raw_lo.f.clamp_between(&prev_b.lower_fn, &prev_b.upper_fn)?;
                (u, l, raw_hi.exact && raw_lo.exact && prev_b.exact)
            }
        };

        let upper: Vec<f64> = grid.iter().map(|t| upper_fn.eval(*t)).collect::<Result<_>>()?;
        let lower: Vec<f64> = grid.iter().map(|t| lower_fn.eval(*t)).collect::<Result<_>>()?;

        if opts.edge_policy == EdgePolicy::Restricted {
            for (idx, theta) in grid.iter().enumerate() {
                for (raw_f, clipped_v) in [(&raw_hi.f, upper[idx]), (&raw_lo.f, lower[idx])] {
                    let raw_v = raw_f.eval(*theta)?;
                    if (raw_v - clipped_v).abs() > 1e-12 * (1.0 + raw_v.abs()) {
                        clips.push(ClipEvent {
                            round,
                            player: i,
                            theta: *theta,
                            raw: raw_v,
                            clipped: clipped_v,
                        });
                    }
                }
                let nest_slack = 1e-6 * (1.0 + prev_b.upper[idx].abs());
                if lower[idx] < prev_b.lower[idx] - nest_slack
                    || upper[idx] > prev_b.upper[idx] + nest_slack
                {
                    return Err(Error::Internal(format!(
                        "round {round} bounds escaped the previous interval at theta {theta} for player {i}"
                    )));
                }
            }
        }

        for (idx, theta) in grid.iter().enumerate() {
            if lower[idx] > upper[idx] + 1e-9 * (1.0 + upper[idx].abs()) {
                return Err(Error::Internal(format!(
                    "round {round} bounds crossed at theta {theta} for player {i}: [{}, {}]",
                    lower[idx], upper[idx]
                )));
            }
        }

        let dir = match g.mode() {
            Mode::Complements => Monotonicity::Increasing,
            Mode::Substitutes => Monotonicity::Decreasing,
        };
        let scale: f64 = upper.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mono_tol = 1e-6 * scale;
        if !upper_fn.is_monotone(dir, mono_tol) || !lower_fn.is_monotone(dir, mono_tol) {
            return Err(Error::AssumptionViolation(format!(
                "round {round} bounds for player {i} are not {:?} in the parameter as the mode requires",
                dir
            )));
        }

        per_player.push(PlayerBounds { grid, lower, upper, lower_fn, upper_fn, exact });
    }
    Ok((BoundProfile { per_player }, clips))
}

/// Initial profile: every player's bounds sit at the choice interval.
fn initial_profile(g: &GameSpec, grid_size: usize) -> Result<BoundProfile> {
    let per_player = g
        .players()
        .iter()
        .map(|p| {
            let grid = linspace(p.parameter.lo, p.parameter.hi, grid_size);
            Ok(PlayerBounds {
                lower: vec![p.choice.lo; grid.len()],
                upper: vec![p.choice.hi; grid.len()],
                lower_fn: PiecewiseFn::constant(p.parameter.lo, p.parameter.hi, p.choice.lo)?,
                upper_fn: PiecewiseFn::constant(p.parameter.lo, p.parameter.hi, p.choice.hi)?,
                grid,
                exact: true,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundProfile { per_player })
}

/// Iterates rounds to convergence and returns the full trace.
pub fn solve(g: &GameSpec, opts: &SolveOptions) -> Result<IterationTrace> {
    if opts.grid_size < 3 {
        return Err(Error::Argument(format!(
            "grid size must be at least 3, got {}",
            opts.grid_size
        )));
    }
    if opts.max_rounds == 0 {
        return Err(Error::Argument("max_rounds must be positive".into()));
    }
    let mut rounds = vec![initial_profile(g, opts.grid_size)?];
    let mut convergence = Vec::new();
    let mut clipping_events = Vec::new();
    let mut terminated_by = Termination::MaxRounds;
    for round in 1..=opts.max_rounds {
        let (next, clips) = iterate_round(g, rounds.last().unwrap(), opts, round)?;
        clipping_events.extend(clips);
        let prev = rounds.last().unwrap();
        let mut movement = 0.0_f64;
        for (pb, nb) in prev.per_player.iter().zip(&next.per_player) {
            for idx in 0..pb.grid.len() {
                movement = movement
                    .max((pb.lower[idx] - nb.lower[idx]).abs())
                    .max((pb.upper[idx] - nb.upper[idx]).abs());
            }
        }
        convergence.push(movement);
        rounds.push(next);
        if movement == 0.0 {
            terminated_by = Termination::FixedPoint;
            break;
        }
        if movement < opts.width_tol {
            terminated_by = Termination::WidthTolerance;
            break;
        }
    }
    Ok(IterationTrace { rounds, convergence, terminated_by, clipping_events })
}

/// Closed-form round-`k` interval of the price duopoly at parameter
/// `theta`: both bounds gain `theta / 2`, the constants contract toward the
/// limit `[a + phi/8, a + 3 phi/8]` at rate `1/2` per round.
pub fn bertrand_round_interval(k: u32, a: f64, phi: f64, p_bar: f64, theta: f64) -> Result<Interval> {
    if k < 1 {
        return Err(Error::Argument("round index must be at least 1".into()));
    }
    let pow = 0.5_f64.powi(k as i32);
    let lo = (1.0 - pow) * a + (0.125 - 0.25 * pow) * phi + 0.5 * theta;
    let hi = (1.0 - pow) * a + (0.375 - 0.75 * pow) * phi + pow * p_bar + 0.5 * theta;
    Ok(Interval { lo, hi })
}

/// Closed-form round-`k` interval of the quantity duopoly at parameter
/// `theta`, from the unrestricted extremal recursion (even and odd rounds
/// alternate which logarithmic constant carries the residual).
pub fn cournot_round_interval(
    k: u32,
    a: f64,
    c: f64,
    phi_lo: f64,
    phi_hi: f64,
    q_bar: f64,
    theta: f64,
) -> Result<Interval> {
    if k < 1 {
        return Err(Error::Argument("round index must be at least 1".into()));
    }
    if !(phi_lo > 0.0) || !(phi_hi > phi_lo) || !(theta > 0.0) || !(a > c) {
        return Err(Error::Argument(format!(
            "invalid closed-form parameters: a={a}, c={c}, phi=[{phi_lo}, {phi_hi}], theta={theta}"
        )));
    }
    let delta = phi_hi - phi_lo;
    let ln_lo = ((phi_hi + phi_lo) / (2.0 * phi_lo)).ln();
    let ln_hi = (2.0 * phi_hi / (phi_hi + phi_lo)).ln();
    let base = (a - c) / (2.0 * theta);
    let coef = (a - c) / (3.0 * delta);
    let pow_k = 0.5_f64.powi(k as i32);
    if k.is_multiple_of(2) {
        let s_full = 1.0 - 0.25_f64.powi((k / 2) as i32);
        let s_prev = 1.0 - 0.25_f64.powi((k / 2 - 1) as i32);
        Ok(Interval {
            lo: base - coef * (2.0 * ln_lo * s_full - ln_hi * s_prev),
            hi: base - coef * (2.0 * ln_hi * s_full - ln_lo * s_prev) + q_bar * pow_k,
        })
    } else {
        let s = 1.0 - 0.25_f64.powi(((k - 1) / 2) as i32);
        Ok(Interval {
            lo: base - coef * (2.0 * ln_lo - ln_hi) * s - q_bar * pow_k,
            hi: base - coef * (2.0 * ln_hi - ln_lo) * s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::BeliefFamily;
    use crate::game::{bertrand_game, cournot_game, PlayerSpec};
    use std::sync::Arc;

    fn options(grid: usize, rounds: usize, policy: EdgePolicy) -> SolveOptions {
        SolveOptions {
            max_rounds: rounds,
            grid_size: grid,
            edge_policy: policy,
            execution: Execution::Sequential,
            ..SolveOptions::default()
        }
    }

    #[test]
    fn expected_utility_matches_frozen_values() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let unit = Interval::new(0.0, 1.0).unwrap();
        let prices = Interval::new(0.0, 3.0).unwrap();
        let beta = ChoiceBelief::constant(unit, 0.0, prices).unwrap();
        let f = PiecewiseConstantDensity::uniform(0.0, 1.0).unwrap();
        let u = expected_utility(&g, 0, 0.0, 0.5, &[beta], &[f]).unwrap();
        assert!((u - 0.25).abs() < 1e-15);

        let g = cournot_game(10.0, 2.0, 1.0, 3.0, 8.0).unwrap();
        let params = Interval::new(1.0, 3.0).unwrap();
        let quantities = Interval::new(0.0, 8.0).unwrap();
        let beta = ChoiceBelief::constant(params, 1.0, quantities).unwrap();
        let f = PiecewiseConstantDensity::uniform(1.0, 3.0).unwrap();
        let u = expected_utility(&g, 0, 2.0, 1.0, &[beta], &[f]).unwrap();
        assert!((u - 4.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_best_response_is_half_the_belief_mean_plus_markup() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let unit = Interval::new(0.0, 1.0).unwrap();
        let prices = Interval::new(0.0, 3.0).unwrap();
        let beta = ChoiceBelief::constant(unit, 3.0, prices).unwrap();
        let f = PiecewiseConstantDensity::uniform(0.0, 1.0).unwrap();
        let r = best_response(&g, 0, 0.0, std::slice::from_ref(&beta), std::slice::from_ref(&f), prices).unwrap();
        assert!((r.choice - 2.0).abs() < 1e-14); // (a + theta + p_bar) / 2
        assert!(!r.clipped);
        let tight = Interval::new(0.0, 1.5).unwrap();
        let r = best_response(&g, 0, 0.0, &[beta], &[f], tight).unwrap();
        assert!(r.clipped);
        assert_eq!(r.choice, 1.5);
    }

    #[test]
    fn bertrand_solver_reproduces_closed_forms() {
        let (a, phi, p_bar) = (1.0, 1.0, 3.0);
        let g = bertrand_game(a, phi, p_bar).unwrap();
        let trace = solve(&g, &options(5, 20, EdgePolicy::Restricted)).unwrap();
        assert!(trace.clipping_events.is_empty());
        for k in 1..=20usize {
            let b = &trace.rounds[k].per_player[0];
            for (idx, theta) in b.grid.iter().enumerate() {
                let exact = bertrand_round_interval(k as u32, a, phi, p_bar, *theta).unwrap();
                assert!(
                    (b.lower[idx] - exact.lo).abs() < 1e-12,
                    "round {k} lower at {theta}: {} vs {}",
                    b.lower[idx],
                    exact.lo
                );
                assert!((b.upper[idx] - exact.hi).abs() < 1e-12);
            }
        }
        // both edge policies agree when the recursion stays interior
        let free = solve(&g, &options(5, 20, EdgePolicy::Unrestricted)).unwrap();
        for k in 0..=20usize {
            let b = &trace.rounds[k].per_player[1];
            let f = &free.rounds[k].per_player[1];
            for idx in 0..b.grid.len() {
                assert!((b.lower[idx] - f.lower[idx]).abs() < 1e-12);
                assert!((b.upper[idx] - f.upper[idx]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cournot_unrestricted_recursion_matches_round_formulas() {
        let (a, c, lo, hi, q_bar) = (10.0, 2.0, 1.0, 3.0, 8.0);
        let g = cournot_game(a, c, lo, hi, q_bar).unwrap();
        let trace = solve(&g, &options(5, 20, EdgePolicy::Unrestricted)).unwrap();
        for k in 1..=20usize {
            let b = &trace.rounds[k].per_player[0];
            for (idx, theta) in b.grid.iter().enumerate() {
                let exact = cournot_round_interval(k as u32, a, c, lo, hi, q_bar, *theta).unwrap();
                assert!(
                    (b.lower[idx] - exact.lo).abs() < 1e-9,
                    "round {k} lower at {theta}: {} vs {}",
                    b.lower[idx],
                    exact.lo
                );
                assert!(
                    (b.upper[idx] - exact.hi).abs() < 1e-9,
                    "round {k} upper at {theta}: {} vs {}",
                    b.upper[idx],
                    exact.hi
                );
            }
        }
    }

    #[test]
    fn cournot_restricted_clips_and_reaches_the_same_limit() {
        let (a, c, lo, hi, q_bar) = (10.0, 2.0, 1.0, 3.0, 8.0);
        let g = cournot_game(a, c, lo, hi, q_bar).unwrap();
        let trace = solve(&g, &options(5, 80, EdgePolicy::Restricted)).unwrap();
        // round 1 lower bound hits the choice floor for theta above 2
        assert!(trace.clipping_events.iter().any(|e| e.round == 1 && e.clipped == 0.0));
        // nested rounds
        for k in 1..trace.rounds.len() {
            let prev = &trace.rounds[k - 1].per_player[0];
            let cur = &trace.rounds[k].per_player[0];
            for idx in 0..cur.grid.len() {
                assert!(cur.lower[idx] >= prev.lower[idx] - 1e-12);
                assert!(cur.upper[idx] <= prev.upper[idx] + 1e-12);
            }
        }
        // same limit as the unrestricted closed form
        let b = &trace.rounds[trace.rounds.len() - 1].per_player[0];
        for (idx, theta) in b.grid.iter().enumerate() {
            let exact = cournot_round_interval(60, a, c, lo, hi, q_bar, *theta).unwrap();
            assert!(
                (b.lower[idx] - exact.lo).abs() < 1e-7,
                "limit lower at {theta}: {} vs {}",
                b.lower[idx],
                exact.lo
            );
            assert!((b.upper[idx] - exact.hi).abs() < 1e-7);
        }
    }

    #[test]
    fn singleton_family_collapses_width_to_zero() {
        let base = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let players: Vec<PlayerSpec> = base
            .players()
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.families = vec![BeliefFamily::singleton(
                    PiecewiseConstantDensity::uniform(0.0, 1.0).unwrap(),
                )];
                p
            })
            .collect();
        let g = GameSpec::new(Mode::Complements, players).unwrap();
        let trace = solve(&g, &options(5, 80, EdgePolicy::Restricted)).unwrap();
        let last = trace.final_profile();
        for b in &last.per_player {
            for idx in 0..b.grid.len() {
                assert!(b.upper[idx] - b.lower[idx] < 1e-6);
            }
        }
    }

    #[test]
    fn grid_refinement_does_not_move_exact_bounds() {
        let g = bertrand_game(2.0, 0.5, 4.0).unwrap();
        let coarse = solve(&g, &options(5, 10, EdgePolicy::Restricted)).unwrap();
        let fine = solve(&g, &options(9, 10, EdgePolicy::Restricted)).unwrap();
        // shared grid points: coarse index t maps to fine index 2 t
        let cb = &coarse.rounds[10].per_player[0];
        let fb = &fine.rounds[10].per_player[0];
        for t in 0..cb.grid.len() {
            assert!((cb.grid[t] - fb.grid[2 * t]).abs() < 1e-12);
            assert!((cb.lower[t] - fb.lower[2 * t]).abs() < 1e-8);
            assert!((cb.upper[t] - fb.upper[2 * t]).abs() < 1e-8);
        }
    }

    #[test]
    fn blackbox_path_agrees_with_exact_path() {
        let (a, phi, p_bar) = (1.0, 1.0, 3.0);
        let exact_game = bertrand_game(a, phi, p_bar).unwrap();
        let players: Vec<PlayerSpec> = exact_game
            .players()
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.utility = UtilitySpec::Blackbox(Arc::new(move |theta, c, others: &[f64]| {
                    (c - theta) * (a - c + others[0])
                }));
                p
            })
            .collect();
        let g = GameSpec::new(Mode::Complements, players).unwrap();
        let opts = options(9, 6, EdgePolicy::Restricted);
        let num = solve(&g, &opts).unwrap();
        let cf = solve(&exact_game, &opts).unwrap();
        for k in 1..=6usize {
            let nb = &num.rounds[k].per_player[0];
            let cb = &cf.rounds[k].per_player[0];
            for idx in 0..nb.grid.len() {
                assert!(
                    (nb.lower[idx] - cb.lower[idx]).abs() < 1e-6,
                    "round {k} lower idx {idx}: {} vs {}",
                    nb.lower[idx],
                    cb.lower[idx]
                );
                assert!((nb.upper[idx] - cb.upper[idx]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn non_concave_blackbox_payoff_is_rejected() {
        let unit = Interval::new(0.0, 1.0).unwrap();
        let player = PlayerSpec {
            choice: unit,
            parameter: unit,
            utility: UtilitySpec::Blackbox(Arc::new(|_, c, _: &[f64]| (c - 0.5).powi(2))),
            families: vec![BeliefFamily::singleton(
                PiecewiseConstantDensity::uniform(0.0, 1.0).unwrap(),
            )],
        };
        let g = GameSpec::new(Mode::Complements, vec![player.clone(), player]).unwrap();
        let beta = ChoiceBelief::constant(unit, 0.5, unit).unwrap();
        let f = PiecewiseConstantDensity::uniform(0.0, 1.0).unwrap();
        let err = best_response(&g, 0, 0.5, &[beta], &[f], unit).unwrap_err();
        assert!(matches!(err, Error::AssumptionViolation(_)));
    }

    #[test]
    fn fixed_point_is_detected_on_degenerate_games() {
        // payoff maximized at the same interior point regardless of beliefs
        let unit = Interval::new(0.0, 1.0).unwrap();
        let quad = crate::game::QuadraticUtility {
            a: CoeffForm::constant(-1.0, 1),
            b: CoeffForm::constant(1.0, 1),
            d: CoeffForm::constant(0.0, 1),
        };
        let player = PlayerSpec {
            choice: unit,
            parameter: unit,
            utility: UtilitySpec::Quadratic(quad),
            families: vec![BeliefFamily::singleton(
                PiecewiseConstantDensity::uniform(0.0, 1.0).unwrap(),
            )],
        };
        let g = GameSpec::new(Mode::Complements, vec![player.clone(), player]).unwrap();
        let trace = solve(&g, &options(5, 50, EdgePolicy::Restricted)).unwrap();
        assert_eq!(trace.terminated_by, Termination::FixedPoint);
        let last = trace.final_profile();
        assert!((last.per_player[0].lower[0] - 0.5).abs() < 1e-12);
        assert!((last.per_player[0].upper[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn round_one_member_selection_tolerates_point_mass_ties() {
        // round 1 beliefs are constant, every member's pushforward is the
        // same point mass, and the designated extremes are still selected
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let p0 = initial_profile(&g, 5).unwrap();
        let hi = extremal_composite_inputs(&g, 0, &p0, Which::High, 1e-9).unwrap();
        assert_eq!(hi.members, vec![0]);
        let lo = extremal_composite_inputs(&g, 0, &p0, Which::Low, 1e-9).unwrap();
        assert_eq!(lo.members, vec![2]);
    }

    #[test]
    fn substitutes_pair_bound_functions_crosswise() {
        let g = cournot_game(10.0, 2.0, 1.0, 3.0, 8.0).unwrap();
        let opts = options(5, 2, EdgePolicy::Unrestricted);
        let trace = solve(&g, &opts).unwrap();
        let p1 = &trace.rounds[1];
        // high bound of round 2 responds to the opponent's round-1 lower
        // bound paired with the dominance-maximal member (mass on high
        // parameters, low opponent choices)
        let hi = extremal_composite_inputs(&g, 0, p1, Which::High, 1e-9).unwrap();
        assert_eq!(hi.members, vec![0]);
        let lo = extremal_composite_inputs(&g, 0, p1, Which::Low, 1e-9).unwrap();
        assert_eq!(lo.members, vec![2]);
        let b1 = &p1.per_player[1];
        assert!((hi.beliefs[0].eval(1.0).unwrap() - b1.lower_fn.eval(1.0).unwrap()).abs() < 1e-12);
        assert!((lo.beliefs[0].eval(1.0).unwrap() - b1.upper_fn.eval(1.0).unwrap()).abs() < 1e-12);
    }
}
