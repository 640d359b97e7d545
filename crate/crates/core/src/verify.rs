//! Numerical falsification of the ordering assumptions and a brute-force
//! finite-grid oracle.
//!
//! Checks report findings instead of erroring: finite-difference sign
//! checks of the payoff cross partials, ordered-quadruple sampling of the
//! increasing-differences inequality, mixture sweeps of best-response
//! continuity, and exact expectation-dominance trials. The oracle replays
//! the literal surviving-set iteration on small grids so the interval
//! shortcut can be compared against ground truth.

use crate::beliefs::{
    composite_compare, pushforward, ChoiceBelief, PiecewiseConstantDensity,
};
use crate::exec::run_indexed;
use crate::game::{opponent_index, utility_eval, GameSpec, Mode};
use crate::piecewise::PiecewiseFn;
use crate::solver::{best_response, expected_utility, BestResponse, IterationTrace};
use crate::{Error, Execution, Interval, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one check. `Inconclusive` marks sampled sweeps that found no
/// violation but cannot certify the property.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// Concrete failing point, reproducible by re-evaluation.
#[derive(Debug, Clone)]
pub struct Witness {
    /// Named coordinates of the violation.
    pub location: Vec<(String, f64)>,
    pub detail: String,
}

/// One named check with its status, tolerance, and summary.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    pub tolerance: f64,
    pub detail: String,
    pub witness: Option<Witness>,
}

/// Collection of check results.
#[derive(Debug, Clone, Default)]
pub struct AssumptionReport {
    pub checks: Vec<CheckReport>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn merge(&mut self, other: AssumptionReport) {
        self.checks.extend(other.checks);
    }

    /// One machine-parsable record per check, witness lines indented.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "Pass",
                CheckStatus::Fail => "Fail",
                CheckStatus::Inconclusive => "Inconclusive",
            };
            out.push_str(&format!(
                "check={} status={} tol={:e} {}\n",
                c.name, status, c.tolerance, c.detail
            ));
            if let Some(w) = &c.witness {
                let coords: Vec<String> =
                    w.location.iter().map(|(k, v)| format!("{k}={v}")).collect();
                out.push_str(&format!("  witness {} {}\n", coords.join(" "), w.detail));
            }
        }
        out
    }
}

/// Central finite-difference estimates of the mixed second partials of one
/// player's payoff at a single point: own choice against own parameter and
/// own choice against each opponent choice.
#[derive(Debug, Clone)]
pub struct CrossPartials {
    pub own_param: f64,
    pub own_opponent: Vec<f64>,
}

/// Estimates the cross partials at `(theta, c, others)` with relative step
/// `h_rel` per axis. Stencil points must stay inside the intervals, so the
/// point must sit at least one step away from every boundary.
pub fn cross_partial_estimates(
    g: &GameSpec,
    i: usize,
    theta: f64,
    c: f64,
    others: &[f64],
    h_rel: f64,
) -> Result<CrossPartials> {
    if !(h_rel > 0.0 && h_rel < 0.25) {
        return Err(Error::Argument(format!("step factor {h_rel} out of (0, 0.25)")));
    }
    let p = &g.players()[i];
    let ht = h_rel * p.parameter.width();
    let hc = h_rel * p.choice.width();
    let u = |th: f64, ch: f64, os: &[f64]| utility_eval(g, i, th, ch, os);
    let own_param = (u(theta + ht, c + hc, others)? - u(theta + ht, c - hc, others)?
        - u(theta - ht, c + hc, others)?
        + u(theta - ht, c - hc, others)?)
        / (4.0 * ht * hc);
    let mut own_opponent = Vec::with_capacity(others.len());
    for slot in 0..others.len() {
        let j = opponent_index(i, slot, g.n_players());
        let hj = h_rel * g.players()[j].choice.width();
        let mut shifted = others.to_vec();
        let mut at = |dc: f64, dj: f64| -> Result<f64> {
            shifted[slot] = others[slot] + dj;
            u(theta, c + dc, &shifted)
        };
        let est = (at(hc, hj)? - at(hc, -hj)? - at(-hc, hj)? + at(-hc, -hj)?)
            / (4.0 * hc * hj);
        own_opponent.push(est);
    }
    Ok(CrossPartials { own_param, own_opponent })
}

/// Interior grid that keeps every stencil point inside `[lo, hi]`.
fn interior_grid(iv: Interval, n: usize, margin_rel: f64) -> Vec<f64> {
    let margin = margin_rel * iv.width();
    crate::linspace(iv.lo + margin, iv.hi - margin, n)
}

/// Sign-checks the mixed second partials on a tensor grid and checks the
/// third-order mixed partial in own choice and two opponent choices is
/// zero (vacuous with a single opponent).
///
/// Under complements both second-order estimates must be nonnegative;
/// under substitutes, nonpositive. The second-order stencil uses `h_rel`
/// relative steps; the third-order stencil uses a hundredfold larger step
/// because its rounding error grows as the cube of the step's inverse.
pub fn check_cross_partials(
    g: &GameSpec,
    grid_size: usize,
    h_rel: f64,
    tol: f64,
) -> Result<AssumptionReport> {
    if grid_size < 2 {
        return Err(Error::Argument("cross-partial grid needs at least 2 points".into()));
    }
    let h3_rel = (h_rel * 100.0).min(0.05);
    let sign = match g.mode() {
        Mode::Complements => 1.0,
        Mode::Substitutes => -1.0,
    };
    let margin = (h3_rel * 1.5).max(h_rel * 2.0);
    let mut worst = f64::INFINITY;
    let mut worst3 = 0.0_f64;
    let mut witness: Option<Witness> = None;
    let mut witness3: Option<Witness> = None;
    let n = g.n_players();
    for i in 0..n {
        let p = &g.players()[i];
        let thetas = interior_grid(p.parameter, grid_size, margin);
        let cs = interior_grid(p.choice, grid_size, margin);
        let opp_grids: Vec<Vec<f64>> = (0..n - 1)
            .map(|s| {
                let j = opponent_index(i, s, n);
                interior_grid(g.players()[j].choice, grid_size, margin)
            })
            .collect();
        let mut others_idx = vec![0usize; n - 1];
        loop {
            let others: Vec<f64> =
                others_idx.iter().zip(&opp_grids).map(|(t, gr)| gr[*t]).collect();
            for &theta in &thetas {
                for &c in &cs {
                    let est = cross_partial_estimates(g, i, theta, c, &others, h_rel)?;
                    let mut entries = vec![("param".to_string(), est.own_param)];
                    for (s, v) in est.own_opponent.iter().enumerate() {
                        entries.push((format!("opponent{s}"), *v));
                    }
                    for (label, v) in entries {
                        let signed = sign * v;
                        if signed < worst {
                            worst = signed;
                            if signed < -tol {
                                let mut location = vec![
                                    ("player".to_string(), i as f64),
                                    ("theta".to_string(), theta),
                                    ("choice".to_string(), c),
                                ];
                                for (s, o) in others.iter().enumerate() {
                                    location.push((format!("opp_choice{s}"), *o));
                                }
                                witness = Some(Witness {
                                    location,
                                    detail: format!(
                                        "{label} cross partial {v} has the wrong sign for {:?}",
                                        g.mode()
                                    ),
                                });
                            }
                        }
                    }
                    // third-order: own choice against every opponent pair
                    for s1 in 0..n - 1 {
                        for s2 in s1 + 1..n - 1 {
                            let v = third_order_estimate(
                                g, i, theta, c, &others, s1, s2, h3_rel,
                            )?;
                            if v.abs() > worst3 {
                                worst3 = v.abs();
                                if v.abs() > tol {
                                    witness3 = Some(Witness {
                                        location: vec![
                                            ("player".to_string(), i as f64),
                                            ("theta".to_string(), theta),
                                            ("choice".to_string(), c),
                                            ("slot_a".to_string(), s1 as f64),
                                            ("slot_b".to_string(), s2 as f64),
                                        ],
                                        detail: format!(
                                            "third-order mixed partial {v} is not zero"
                                        ),
                                    });
                                }
                            }
                        }
                    }
                }
            }
            // advance the opponent-choice tensor index
            let mut k = 0;
            loop {
                if k == others_idx.len() {
                    break;
                }
                others_idx[k] += 1;
                if others_idx[k] < opp_grids[k].len() {
                    break;
                }
                others_idx[k] = 0;
                k += 1;
            }
            if k == others_idx.len() {
                break;
            }
        }
    }
    let mut report = AssumptionReport::default();
    report.checks.push(CheckReport {
        name: "cross_partials_second_order".into(),
        status: if worst < -tol { CheckStatus::Fail } else { CheckStatus::Pass },
        tolerance: tol,
        detail: format!("mode={:?} grid={grid_size} worst_signed_estimate={worst:e}", g.mode()),
        witness,
    });
    let vacuous = g.n_players() == 2;
    report.checks.push(CheckReport {
        name: "cross_partials_third_order".into(),
        status: if worst3 > tol { CheckStatus::Fail } else { CheckStatus::Pass },
        tolerance: tol,
        detail: if vacuous {
            "vacuous with one opponent".into()
        } else {
            format!("largest_magnitude={worst3:e}")
        },
        witness: witness3,
    });
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn third_order_estimate(
    g: &GameSpec,
    i: usize,
    theta: f64,
    c: f64,
    others: &[f64],
    s1: usize,
    s2: usize,
    h_rel: f64,
) -> Result<f64> {
    let n = g.n_players();
    let hc = h_rel * g.players()[i].choice.width();
    let h1 = h_rel * g.players()[opponent_index(i, s1, n)].choice.width();
    let h2 = h_rel * g.players()[opponent_index(i, s2, n)].choice.width();
    let mut total = 0.0;
    for (sc, dc) in [(1.0, hc), (-1.0, -hc)] {
        for (s_1, d1) in [(1.0, h1), (-1.0, -h1)] {
            for (s_2, d2) in [(1.0, h2), (-1.0, -h2)] {
                let mut shifted = others.to_vec();
                shifted[s1] += d1;
                shifted[s2] += d2;
                total += sc * s_1 * s_2 * utility_eval(g, i, theta, c + dc, &shifted)?;
            }
        }
    }
    Ok(total / (8.0 * hc * h1 * h2))
}

// ---------------------------------------------------------------------------
// random sample construction

fn random_breakpoints(rng: &mut ChaCha8Rng, lo: f64, hi: f64, max_interior: usize) -> Vec<f64> {
    let width = hi - lo;
    let k = rng.gen_range(1..=max_interior.max(1));
    let mut cuts = vec![lo, hi];
    for _ in 0..k {
        cuts.push(lo + width * rng.gen_range(0.05..0.95));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * width);
    if *cuts.last().unwrap() != hi {
        cuts.push(hi);
    }
    cuts
}

fn random_density(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Result<PiecewiseConstantDensity> {
    let bp = random_breakpoints(rng, lo, hi, 3);
    let weights: Vec<f64> = (0..bp.len() - 1).map(|_| rng.gen_range(0.1..1.0)).collect();
    PiecewiseConstantDensity::normalized(bp, weights)
}

/// Moves a random fraction of mass rightward; the result dominates `d` in
/// the first-order stochastic order.
fn shift_mass_right(
    rng: &mut ChaCha8Rng,
    d: &PiecewiseConstantDensity,
) -> Result<PiecewiseConstantDensity> {
    let bp = d.breakpoints().to_vec();
    let widths: Vec<f64> = bp.windows(2).map(|w| w[1] - w[0]).collect();
    let mut masses: Vec<f64> =
        d.values().iter().zip(&widths).map(|(v, w)| v * w).collect();
    if masses.len() >= 2 {
        let from = rng.gen_range(0..masses.len() - 1);
        let to = rng.gen_range(from + 1..masses.len());
        let delta = masses[from] * rng.gen_range(0.2..0.9);
        masses[from] -= delta;
        masses[to] += delta;
    }
    let heights: Vec<f64> = masses.iter().zip(&widths).map(|(m, w)| m / w).collect();
    PiecewiseConstantDensity::new(bp, heights)
}

fn random_step_values(rng: &mut ChaCha8Rng, n: usize, codomain: Interval) -> Vec<f64> {
    (0..n)
        .map(|_| codomain.lo + codomain.width() * rng.gen_range(0.0..1.0))
        .collect()
}

/// A pair of ordered inputs for one player: beliefs and densities whose
/// composites satisfy `hi` dominates `lo` slot by slot, built by
/// construction (shared density with pointwise-ordered beliefs, or shared
/// monotone belief with stochastically ordered densities). Used by the
/// increasing-differences check and by property suites exercising
/// best-response monotonicity.
#[derive(Debug, Clone)]
pub struct OrderedInputs {
    pub lo_beliefs: Vec<ChoiceBelief>,
    pub lo_densities: Vec<PiecewiseConstantDensity>,
    pub hi_beliefs: Vec<ChoiceBelief>,
    pub hi_densities: Vec<PiecewiseConstantDensity>,
}

/// Draws an ordered composite-input pair for player `i`. Deterministic in
/// `seed`. The construction is verified by an exact pushforward comparison
/// before returning.
pub fn sample_ordered_inputs(g: &GameSpec, i: usize, seed: u64) -> Result<OrderedInputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n_players();
    if i >= n {
        return Err(Error::Argument(format!("player index {i} out of range")));
    }
    let mut out = OrderedInputs {
        lo_beliefs: Vec::new(),
        lo_densities: Vec::new(),
        hi_beliefs: Vec::new(),
        hi_densities: Vec::new(),
    };
    for slot in 0..n - 1 {
        let j = opponent_index(i, slot, n);
        let param = g.players()[j].parameter;
        let choice = g.players()[j].choice;
        let flavor = rng.gen_range(0..3u8);
        let (b_lo, f_lo, b_hi, f_hi) = match flavor {
            0 => {
                // shared density, pointwise-ordered step beliefs
                let f = random_density(&mut rng, param.lo, param.hi)?;
                let bp = random_breakpoints(&mut rng, param.lo, param.hi, 3);
                let first = random_step_values(&mut rng, bp.len() - 1, choice);
                let second = if rng.gen_bool(0.1) {
                    first.clone() // degenerate: identical beliefs
                } else {
                    random_step_values(&mut rng, bp.len() - 1, choice)
                };
                let lo_vals: Vec<f64> =
                    first.iter().zip(&second).map(|(a, b)| a.min(*b)).collect();
                let hi_vals: Vec<f64> =
                    first.iter().zip(&second).map(|(a, b)| a.max(*b)).collect();
                let b_lo = ChoiceBelief::from_steps(&bp, &lo_vals, choice)?;
                let b_hi = ChoiceBelief::from_steps(&bp, &hi_vals, choice)?;
                (b_lo, f.clone(), b_hi, f)
            }
            1 => {
                // shared increasing belief, stochastically ordered densities
                let bp = random_breakpoints(&mut rng, param.lo, param.hi, 3);
                let mut vals = random_step_values(&mut rng, bp.len() - 1, choice);
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let b = ChoiceBelief::from_steps(&bp, &vals, choice)?;
                let f = random_density(&mut rng, param.lo, param.hi)?;
                let f_dom = shift_mass_right(&mut rng, &f)?;
                (b.clone(), f, b, f_dom)
            }
            _ => {
                // shared decreasing belief: the dominated density yields
                // the higher composite
                let bp = random_breakpoints(&mut rng, param.lo, param.hi, 3);
                let mut vals = random_step_values(&mut rng, bp.len() - 1, choice);
                vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let b = ChoiceBelief::from_steps(&bp, &vals, choice)?;
                let f = random_density(&mut rng, param.lo, param.hi)?;
                let f_dom = shift_mass_right(&mut rng, &f)?;
                (b.clone(), f_dom, b, f)
            }
        };
        let hi_push = pushforward(&b_hi, &f_hi)?;
        let lo_push = pushforward(&b_lo, &f_lo)?;
        let cmp = composite_compare(&hi_push, &lo_push, 1e-12)?;
        if !cmp.dominates() {
            return Err(Error::Internal(format!(
                "constructed composite pair is not ordered (flavor {flavor}, {cmp:?})"
            )));
        }
        out.lo_beliefs.push(b_lo);
        out.lo_densities.push(f_lo);
        out.hi_beliefs.push(b_hi);
        out.hi_densities.push(f_hi);
    }
    Ok(out)
}

/// Samples ordered quadruples (parameter pair, choice pair, ordered
/// composite inputs) and checks the increasing-differences inequality,
/// reversed under substitutes, within tolerance `1e-9` relative.
pub fn check_increasing_differences(
    g: &GameSpec,
    n_samples: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    if n_samples == 0 {
        return Err(Error::Argument("need at least one sample".into()));
    }
    const TOL: f64 = 1e-9;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for trial in 0..n_samples {
        let trial_seed: u64 = master.gen();
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let i = rng.gen_range(0..g.n_players());
        let p = &g.players()[i];
        let mut th = [
            p.parameter.lo + p.parameter.width() * rng.gen_range(0.0..1.0),
            p.parameter.lo + p.parameter.width() * rng.gen_range(0.0..1.0),
        ];
        th.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut cs = [
            p.choice.lo + p.choice.width() * rng.gen_range(0.0..1.0),
            p.choice.lo + p.choice.width() * rng.gen_range(0.0..1.0),
        ];
        cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let inputs = sample_ordered_inputs(g, i, rng.gen())?;
        let hi_diff = expected_utility(g, i, th[1], cs[1], &inputs.hi_beliefs, &inputs.hi_densities)?
            - expected_utility(g, i, th[1], cs[0], &inputs.hi_beliefs, &inputs.hi_densities)?;
        let lo_diff = expected_utility(g, i, th[0], cs[1], &inputs.lo_beliefs, &inputs.lo_densities)?
            - expected_utility(g, i, th[0], cs[0], &inputs.lo_beliefs, &inputs.lo_densities)?;
        let margin = match g.mode() {
            Mode::Complements => hi_diff - lo_diff,
            Mode::Substitutes => lo_diff - hi_diff,
        };
        let scale = 1.0_f64.max(hi_diff.abs()).max(lo_diff.abs());
        let rel = margin / scale;
        if rel < worst {
            worst = rel;
            if rel < -TOL {
                witness = Some(Witness {
                    location: vec![
                        ("player".to_string(), i as f64),
                        ("theta_lo".to_string(), th[0]),
                        ("theta_hi".to_string(), th[1]),
                        ("choice_lo".to_string(), cs[0]),
                        ("choice_hi".to_string(), cs[1]),
                    ],
                    detail: format!(
                        "trial={trial} seed={trial_seed} hi_diff={hi_diff} lo_diff={lo_diff}"
                    ),
                });
            }
        }
    }
    let mut report = AssumptionReport::default();
    report.checks.push(CheckReport {
        name: "increasing_differences".into(),
        status: if worst < -TOL { CheckStatus::Fail } else { CheckStatus::Pass },
        tolerance: TOL,
        detail: format!("mode={:?} samples={n_samples} worst_margin={worst:e}", g.mode()),
        witness,
    });
    Ok(report)
}

/// Sweeps convex mixtures of sampled belief pairs and checks that the best
/// response moves continuously in the mixing weight: adjacent sweep points
/// jump by at most a modulus estimated from the sweep spread, every value
/// between the endpoint responses is attained up to the sweep resolution,
/// and the endpoints reproduce the unmixed best responses. Finding no
/// violation reports `Inconclusive`: a finite sweep cannot certify
/// continuity.
pub fn check_mixture_continuity(
    g: &GameSpec,
    n_samples: usize,
    lambda_grid: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    if lambda_grid < 3 {
        return Err(Error::Argument("mixture sweep needs at least 3 points".into()));
    }
    if n_samples == 0 {
        return Err(Error::Argument("need at least one sample".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let lambdas = crate::linspace(0.0, 1.0, lambda_grid);
    let mut max_jump_ratio = 0.0_f64;
    let mut witness = None;
    let mut status = CheckStatus::Inconclusive;
    'trials: for trial in 0..n_samples {
        let trial_seed: u64 = master.gen();
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let i = rng.gen_range(0..g.n_players());
        let p = &g.players()[i];
        let theta = p.parameter.lo + p.parameter.width() * rng.gen_range(0.0..1.0);
        let n = g.n_players();
        let mut first_b = Vec::new();
        let mut first_f = Vec::new();
        let mut second_b = Vec::new();
        let mut second_f = Vec::new();
        for slot in 0..n - 1 {
            let j = opponent_index(i, slot, n);
            let param = g.players()[j].parameter;
            let choice = g.players()[j].choice;
            for (bs, fs) in [(&mut first_b, &mut first_f), (&mut second_b, &mut second_f)] {
                let bp = random_breakpoints(&mut rng, param.lo, param.hi, 3);
                let vals = random_step_values(&mut rng, bp.len() - 1, choice);
                bs.push(ChoiceBelief::from_steps(&bp, &vals, choice)?);
                fs.push(random_density(&mut rng, param.lo, param.hi)?);
            }
        }
        // sweep the unconstrained stationary point where available: it is
        // the underlying continuous response (quadratic in lambda for
        // quadratic payoffs), and the feasible-interval clamp is a
        // 1-Lipschitz projection of it, so its continuity carries over.
        // Sweeping the clamped value instead would misfire when the clamp
        // saturates: the clamped spread shrinks while the slopes outside
        // the flat stretch stay large, breaking the spread-based modulus.
        let swept = |b: &BestResponse| b.unconstrained.unwrap_or(b.choice);
        let mut responses = Vec::with_capacity(lambdas.len());
        for &lambda in &lambdas {
            let mut bs = Vec::new();
            let mut fs = Vec::new();
            for slot in 0..n - 1 {
                bs.push(crate::beliefs::mix_choice_belief(
                    &first_b[slot],
                    &second_b[slot],
                    lambda,
                )?);
                fs.push(crate::beliefs::mix_density(&first_f[slot], &second_f[slot], lambda)?);
            }
            responses.push(swept(&best_response(g, i, theta, &bs, &fs, p.choice)?));
        }
        // endpoints must reproduce the unmixed best responses
        let direct0 = swept(&best_response(g, i, theta, &first_b, &first_f, p.choice)?);
        let direct1 = swept(&best_response(g, i, theta, &second_b, &second_f, p.choice)?);
        let scale = 1.0_f64.max(direct0.abs()).max(direct1.abs());
        for (lam, (swept, direct)) in
            [(0.0, (responses[0], direct0)), (1.0, (responses[lambda_grid - 1], direct1))]
        {
            if (swept - direct).abs() > 1e-12 * scale {
                status = CheckStatus::Fail;
                witness = Some(Witness {
                    location: vec![
                        ("player".to_string(), i as f64),
                        ("theta".to_string(), theta),
                        ("lambda".to_string(), lam),
                    ],
                    detail: format!(
                        "trial={trial} seed={trial_seed} endpoint mixture {swept} differs from direct best response {direct}"
                    ),
                });
                break 'trials;
            }
        }
        let spread = responses.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - responses.iter().cloned().fold(f64::INFINITY, f64::min);
        let step_bound = 4.0 * spread / (lambda_grid - 1) as f64 + 1e-9 * scale;
        for (t, w) in responses.windows(2).enumerate() {
            let jump = (w[1] - w[0]).abs();
            if spread > 0.0 {
                max_jump_ratio = max_jump_ratio.max(jump / spread);
            }
            if jump > step_bound {
                status = CheckStatus::Fail;
                witness = Some(Witness {
                    location: vec![
                        ("player".to_string(), i as f64),
                        ("theta".to_string(), theta),
                        ("lambda_a".to_string(), lambdas[t]),
                        ("lambda_b".to_string(), lambdas[t + 1]),
                    ],
                    detail: format!(
                        "trial={trial} seed={trial_seed} best response jumps {jump} against modulus {step_bound}"
                    ),
                });
                break 'trials;
            }
        }
        // intermediate-value coverage between the endpoint responses
        let coverage_tol = 2.0 * spread / (lambda_grid - 1) as f64 + 1e-9 * scale;
        for target_idx in 0..5 {
            let v = direct0 + (direct1 - direct0) * target_idx as f64 / 4.0;
            let nearest = responses
                .iter()
                .map(|r| (r - v).abs())
                .fold(f64::INFINITY, f64::min);
            if nearest > coverage_tol {
                status = CheckStatus::Fail;
                witness = Some(Witness {
                    location: vec![
                        ("player".to_string(), i as f64),
                        ("theta".to_string(), theta),
                        ("target".to_string(), v),
                    ],
                    detail: format!(
                        "trial={trial} seed={trial_seed} no sweep point within {coverage_tol} of intermediate target"
                    ),
                });
                break 'trials;
            }
        }
    }
    let mut report = AssumptionReport::default();
    report.checks.push(CheckReport {
        name: "mixture_continuity".into(),
        status,
        tolerance: 1e-9,
        detail: format!(
            "samples={n_samples} lambda_grid={lambda_grid} max_jump_ratio={max_jump_ratio:.3}"
        ),
        witness,
    });
    Ok(report)
}

/// Exact expectation-dominance trials: coordinatewise stochastically
/// ordered product densities against additively separable increasing
/// piecewise-affine functions, integrated exactly. On a product domain,
/// zero mixed second partials force additive separability, so separable
/// test functions cover the full hypothesis class.
pub fn check_expectation_dominance(
    n_trials: usize,
    n_vars: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    if n_vars == 0 {
        return Err(Error::Argument("need at least one coordinate".into()));
    }
    if n_trials == 0 {
        return Err(Error::Argument("need at least one trial".into()));
    }
    const TOL: f64 = 1e-12;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..n_trials).map(|_| master.gen()).collect();
    let margins = run_indexed(Execution::Parallel, n_trials, |t| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds[t]);
        let n = rng.gen_range(1..=n_vars);
        let mut hi_total = 0.0;
        let mut lo_total = 0.0;
        for _ in 0..n {
            let xs = random_breakpoints(&mut rng, 0.0, 1.0, 4);
            let mut y = rng.gen_range(-1.0..1.0);
            let mut ys = vec![y];
            for _ in 1..xs.len() {
                y += rng.gen_range(0.0..1.0);
                ys.push(y);
            }
            let coord_fn = PiecewiseFn::from_grid_linear(&xs, &ys)?;
            let base = random_density(&mut rng, 0.0, 1.0)?;
            let dominating = shift_mass_right(&mut rng, &base)?;
            hi_total += dominating.integrate(&coord_fn)?;
            lo_total += base.integrate(&coord_fn)?;
        }
        let scale = 1.0_f64.max(hi_total.abs()).max(lo_total.abs());
        Ok((hi_total - lo_total) / scale)
    });
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for (t, m) in margins.into_iter().enumerate() {
        let m = m?;
        if m < worst {
            worst = m;
            if m < -TOL {
                witness = Some(Witness {
                    location: vec![("trial".to_string(), t as f64)],
                    detail: format!("seed={} margin={m:e}", seeds[t]),
                });
            }
        }
    }
    let mut report = AssumptionReport::default();
    report.checks.push(CheckReport {
        name: "expectation_dominance".into(),
        status: if worst < -TOL { CheckStatus::Fail } else { CheckStatus::Pass },
        tolerance: TOL,
        detail: format!("trials={n_trials} max_vars={n_vars} worst_margin={worst:e}"),
        witness,
    });
    Ok(report)
}

/// Re-validates the designated stochastic extremes of every belief family
/// in the game. Games built through the public constructor have already
/// passed this; the check keeps the full report self-contained.
pub fn check_family_extremes(g: &GameSpec) -> AssumptionReport {
    let mut report = AssumptionReport::default();
    let mut status = CheckStatus::Pass;
    let mut detail = String::from("all families ordered");
    let mut witness = None;
    'outer: for (i, p) in g.players().iter().enumerate() {
        for (slot, family) in p.families.iter().enumerate() {
            if let Err(e) = crate::beliefs::family_extremes(family) {
                status = CheckStatus::Fail;
                detail = format!("player={i} slot={slot}");
                witness = Some(Witness {
                    location: vec![("player".to_string(), i as f64), ("slot".to_string(), slot as f64)],
                    detail: e.to_string(),
                });
                break 'outer;
            }
        }
    }
    report.checks.push(CheckReport {
        name: "family_extremes".into(),
        status,
        tolerance: crate::COMPARE_TOL,
        detail,
        witness,
    });
    report
}

// ---------------------------------------------------------------------------
// brute-force oracle

/// Finite discretization of a game: per player, a choice grid, a parameter
/// grid, and per (opponent slot, family member) the probability mass each
/// opponent parameter grid point carries (its nearest-neighbor cell mass
/// under the member density).
#[derive(Debug, Clone)]
pub struct DiscretizedGame {
    game: GameSpec,
    players: Vec<DiscretizedPlayer>,
}

#[derive(Debug, Clone)]
pub struct DiscretizedPlayer {
    pub choices: Vec<f64>,
    pub params: Vec<f64>,
    /// `member_mass[slot][member][t]`: mass at the opponent's parameter
    /// grid point `t`.
    pub member_mass: Vec<Vec<Vec<f64>>>,
}

/// Which belief search the oracle runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleSearch {
    /// Selections monotone in the opponent parameter (increasing under
    /// complements, decreasing under substitutes), values spanning the
    /// surviving range.
    Reduced,
    /// Every selection with values in the surviving range. Exponential;
    /// for micro instances only.
    Full,
}

/// Surviving choice indices after each round:
/// `rounds[k][player][param_idx]` is sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRun {
    pub rounds: Vec<Vec<Vec<Vec<usize>>>>,
}

impl DiscretizedGame {
    /// Evenly spaced grids over every player's intervals.
    pub fn from_game(g: &GameSpec, n_choices: usize, n_params: usize) -> Result<Self> {
        if n_choices < 2 || n_params < 2 {
            return Err(Error::Argument("discretization needs at least 2 points per grid".into()));
        }
        let choices: Vec<Vec<f64>> = g
            .players()
            .iter()
            .map(|p| crate::linspace(p.choice.lo, p.choice.hi, n_choices))
            .collect();
        let params: Vec<Vec<f64>> = g
            .players()
            .iter()
            .map(|p| crate::linspace(p.parameter.lo, p.parameter.hi, n_params))
            .collect();
        Self::from_parts(g, choices, params)
    }

    /// Explicit grids; each must be sorted, nonempty, and inside the
    /// player's intervals.
    pub fn from_parts(
        g: &GameSpec,
        choices: Vec<Vec<f64>>,
        params: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = g.n_players();
        if choices.len() != n || params.len() != n {
            return Err(Error::Argument("need one choice and parameter grid per player".into()));
        }
        for (i, p) in g.players().iter().enumerate() {
            for (grid, iv, label) in
                [(&choices[i], p.choice, "choice"), (&params[i], p.parameter, "parameter")]
            {
                if grid.is_empty() {
                    return Err(Error::Argument(format!("empty {label} grid for player {i}")));
                }
                if !grid.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Argument(format!(
                        "{label} grid for player {i} is not strictly increasing"
                    )));
                }
                let slack = 1e-12 * iv.width().max(1.0);
                if grid[0] < iv.lo - slack || grid[grid.len() - 1] > iv.hi + slack {
                    return Err(Error::Argument(format!(
                        "{label} grid for player {i} leaves [{}, {}]",
                        iv.lo, iv.hi
                    )));
                }
            }
        }
        let mut players = Vec::with_capacity(n);
        for i in 0..n {
            let mut member_mass = Vec::new();
            for slot in 0..n - 1 {
                let j = opponent_index(i, slot, n);
                let family = &g.players()[i].families[slot];
                let mut per_member = Vec::with_capacity(family.members().len());
                for m in family.members() {
                    per_member.push(cell_masses(m, &params[j])?);
                }
                member_mass.push(per_member);
            }
            players.push(DiscretizedPlayer {
                choices: choices[i].clone(),
                params: params[i].clone(),
                member_mass,
            });
        }
        Ok(Self { game: g.clone(), players })
    }

    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn players(&self) -> &[DiscretizedPlayer] {
        &self.players
    }
}

/// Mass of the nearest-neighbor cell around each grid point.
fn cell_masses(d: &PiecewiseConstantDensity, grid: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = d.domain();
    let mut cuts = Vec::with_capacity(grid.len() + 1);
    cuts.push(lo);
    for w in grid.windows(2) {
        cuts.push(0.5 * (w[0] + w[1]));
    }
    cuts.push(hi);
    let mut out = Vec::with_capacity(grid.len());
    for w in cuts.windows(2) {
        let a = w[0].clamp(lo, hi);
        let b = w[1].clamp(lo, hi);
        out.push(d.cdf_at(b)? - d.cdf_at(a)?);
    }
    Ok(out)
}

/// Literal surviving-set iteration on the discretized game.
///
/// A choice survives a round at a parameter grid point when it maximizes
/// expected utility over the previous surviving set for some per-opponent
/// pair of (selection of surviving choices, family member). Selection
/// values span the surviving range (its interval completion on the grid);
/// `search` picks monotone-only or exhaustive selection spaces. Each payoff
/// evaluation draws down `budget`; exhausting it aborts with a resource
/// error.
pub fn oracle_rationalizable(
    d: &DiscretizedGame,
    max_rounds: usize,
    search: OracleSearch,
    budget: u64,
) -> Result<OracleRun> {
    if max_rounds == 0 {
        return Err(Error::Argument("max_rounds must be positive".into()));
    }
    let g = &d.game;
    let n = g.n_players();
    let initial: Vec<Vec<Vec<usize>>> = d
        .players
        .iter()
        .map(|p| {
            p.params
                .iter()
                .map(|_| (0..p.choices.len()).collect::<Vec<usize>>())
                .collect()
        })
        .collect();
    let mut rounds = vec![initial];
    let mut budget = budget;
    for _ in 1..=max_rounds {
        let prev = rounds.last().unwrap();
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            next.push(oracle_update_player(d, i, prev, search, &mut budget)?);
        }
        let stable = *prev == next;
        rounds.push(next);
        if stable {
            break;
        }
    }
    // once stable the sets are a fixed point, so later rounds repeat them;
    // fill to the requested horizon without recomputing
    while rounds.len() < max_rounds + 1 {
        let last = rounds.last().unwrap().clone();
        rounds.push(last);
    }
    Ok(OracleRun { rounds })
}

fn oracle_update_player(
    d: &DiscretizedGame,
    i: usize,
    prev: &[Vec<Vec<usize>>],
    search: OracleSearch,
    budget: &mut u64,
) -> Result<Vec<Vec<usize>>> {
    let g = &d.game;
    let n = g.n_players();
    let player = &d.players[i];
    let monotone_increasing = match g.mode() {
        Mode::Complements => true,
        Mode::Substitutes => false,
    };
    // per slot: selections over the opponent parameter grid with values in
    // the surviving index range at each point
    let mut slot_selections: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n - 1);
    for slot in 0..n - 1 {
        let j = opponent_index(i, slot, n);
        let ranges: Vec<(usize, usize)> = prev[j]
            .iter()
            .map(|set| (*set.first().unwrap(), *set.last().unwrap()))
            .collect();
        let selections = match search {
            OracleSearch::Reduced => {
                enumerate_monotone_selections(&ranges, monotone_increasing, budget)?
            }
            OracleSearch::Full => enumerate_all_selections(&ranges, budget)?,
        };
        slot_selections.push(selections);
    }
    let mut out = Vec::with_capacity(player.params.len());
    for (t, &theta) in player.params.iter().enumerate() {
        let feasible = &prev[i][t];
        if feasible.len() == 1 {
            out.push(feasible.clone());
            continue;
        }
        let mut winners = vec![false; feasible.len()];
        let mut combo = ComboIter::new(
            &slot_selections,
            &player.member_mass,
        );
        while let Some((selections, members)) = combo.next() {
            let mut eu = vec![0.0_f64; feasible.len()];
            accumulate_eu(
                d, i, theta, feasible, &selections, &members, 0, 1.0,
                &mut Vec::with_capacity(n - 1), &mut eu, budget,
            )?;
            let best = eu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let tol = 1e-9 * best.abs().max(1.0);
            for (w, v) in winners.iter_mut().zip(&eu) {
                if *v >= best - tol {
                    *w = true;
                }
            }
            if winners.iter().all(|w| *w) {
                break;
            }
        }
        let survivors: Vec<usize> = feasible
            .iter()
            .zip(&winners)
            .filter_map(|(c, w)| w.then_some(*c))
            .collect();
        if survivors.is_empty() {
            return Err(Error::Internal(format!(
                "no surviving choice for player {i} at parameter {theta}"
            )));
        }
        out.push(survivors);
    }
    Ok(out)
}

/// Iterates the cartesian product of per-slot (selection, member) pairs.
struct ComboIter<'a> {
    selections: &'a [Vec<Vec<usize>>],
    masses: &'a [Vec<Vec<f64>>],
    sel_idx: Vec<usize>,
    mem_idx: Vec<usize>,
    done: bool,
}

impl<'a> ComboIter<'a> {
    fn new(selections: &'a [Vec<Vec<usize>>], masses: &'a [Vec<Vec<f64>>]) -> Self {
        Self {
            selections,
            masses,
            sel_idx: vec![0; selections.len()],
            mem_idx: vec![0; selections.len()],
            done: selections.iter().any(|s| s.is_empty()),
        }
    }

    #[allow(clippy::type_complexity)]
    fn next(&mut self) -> Option<(Vec<&'a [usize]>, Vec<&'a [f64]>)> {
        if self.done {
            return None;
        }
        let current: (Vec<&[usize]>, Vec<&[f64]>) = (
            self.sel_idx
                .iter()
                .zip(self.selections)
                .map(|(k, s)| s[*k].as_slice())
                .collect(),
            self.mem_idx
                .iter()
                .zip(self.masses)
                .map(|(k, m)| m[*k].as_slice())
                .collect(),
        );
        // advance mixed-radix counter: member index fastest, then selection
        let mut slot = 0;
        loop {
            if slot == self.sel_idx.len() {
                self.done = true;
                break;
            }
            self.mem_idx[slot] += 1;
            if self.mem_idx[slot] < self.masses[slot].len() {
                break;
            }
            self.mem_idx[slot] = 0;
            self.sel_idx[slot] += 1;
            if self.sel_idx[slot] < self.selections[slot].len() {
                break;
            }
            self.sel_idx[slot] = 0;
            slot += 1;
        }
        Some(current)
    }
}

#[allow(clippy::too_many_arguments)]
fn accumulate_eu(
    d: &DiscretizedGame,
    i: usize,
    theta: f64,
    feasible: &[usize],
    selections: &[&[usize]],
    members: &[&[f64]],
    slot: usize,
    weight: f64,
    others: &mut Vec<f64>,
    eu: &mut [f64],
    budget: &mut u64,
) -> Result<()> {
    if weight == 0.0 {
        return Ok(());
    }
    let g = &d.game;
    let n = g.n_players();
    if slot == selections.len() {
        let player = &d.players[i];
        for (k, &c_idx) in feasible.iter().enumerate() {
            if *budget == 0 {
                return Err(Error::Resource(
                    "oracle evaluation budget exhausted".into(),
                ));
            }
            *budget -= 1;
            eu[k] += weight * utility_eval(g, i, theta, player.choices[c_idx], others)?;
        }
        return Ok(());
    }
    let j = opponent_index(i, slot, n);
    let opp = &d.players[j];
    for (t, &mass) in members[slot].iter().enumerate() {
        let choice = opp.choices[selections[slot][t]];
        others.push(choice);
        accumulate_eu(
            d, i, theta, feasible, selections, members, slot + 1,
            weight * mass, others, eu, budget,
        )?;
        others.pop();
    }
    Ok(())
}

fn enumerate_monotone_selections(
    ranges: &[(usize, usize)],
    increasing: bool,
    budget: &mut u64,
) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(ranges.len());
    rec_monotone(ranges, increasing, 0, None, &mut current, &mut out, budget)?;
    Ok(out)
}

fn rec_monotone(
    ranges: &[(usize, usize)],
    increasing: bool,
    t: usize,
    last: Option<usize>,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    budget: &mut u64,
) -> Result<()> {
    if t == ranges.len() {
        if *budget == 0 {
            return Err(Error::Resource("oracle selection budget exhausted".into()));
        }
        *budget -= 1;
        out.push(current.clone());
        return Ok(());
    }
    let (lo, hi) = ranges[t];
    for v in lo..=hi {
        let ok = match (last, increasing) {
            (None, _) => true,
            (Some(prev), true) => v >= prev,
            (Some(prev), false) => v <= prev,
        };
        if !ok {
            continue;
        }
        current.push(v);
        rec_monotone(ranges, increasing, t + 1, Some(v), current, out, budget)?;
        current.pop();
    }
    Ok(())
}

fn enumerate_all_selections(
    ranges: &[(usize, usize)],
    budget: &mut u64,
) -> Result<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for &(lo, hi) in ranges {
        let mut next = Vec::new();
        for sel in &out {
            for v in lo..=hi {
                if *budget == 0 {
                    return Err(Error::Resource("oracle selection budget exhausted".into()));
                }
                *budget -= 1;
                let mut s = sel.clone();
                s.push(v);
                next.push(s);
            }
        }
        out = next;
    }
    Ok(out)
}

/// Largest distance between the continuous bounds in `trace` and the
/// oracle's surviving-set extremes, over the rounds both runs share.
/// Parameter grids must agree; `choice_step` (the oracle's choice grid
/// spacing) must be positive and is the natural yardstick for the result.
pub fn compare_oracle(
    trace: &IterationTrace,
    d: &DiscretizedGame,
    run: &OracleRun,
    choice_step: f64,
) -> Result<f64> {
    if !(choice_step > 0.0) {
        return Err(Error::Argument("choice_step must be positive".into()));
    }
    let n = d.players.len();
    for i in 0..n {
        let tg = &trace.rounds[0].per_player[i].grid;
        let og = &d.players[i].params;
        if tg.len() != og.len()
            || tg.iter().zip(og).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
        {
            return Err(Error::Argument(format!(
                "parameter grids differ for player {i}"
            )));
        }
    }
    let shared = trace.rounds.len().min(run.rounds.len());
    let mut max_dev = 0.0_f64;
    for k in 0..shared {
        for i in 0..n {
            let bounds = &trace.rounds[k].per_player[i];
            let sets = &run.rounds[k][i];
            for (t, set) in sets.iter().enumerate().take(bounds.grid.len()) {
                let lo_v = d.players[i].choices[*set.first().unwrap()];
                let hi_v = d.players[i].choices[*set.last().unwrap()];
                max_dev = max_dev
                    .max((bounds.lower[t] - lo_v).abs())
                    .max((bounds.upper[t] - hi_v).abs());
            }
        }
    }
    Ok(max_dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{bertrand_game, cournot_game, PlayerSpec};
    use crate::solver::{solve, EdgePolicy, SolveOptions};

    fn solve_opts(grid: usize, rounds: usize) -> SolveOptions {
        SolveOptions {
            max_rounds: rounds,
            grid_size: grid,
            edge_policy: EdgePolicy::Restricted,
            execution: Execution::Sequential,
            ..SolveOptions::default()
        }
    }

    #[test]
    fn cross_partial_estimates_match_analytic_values() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let est = cross_partial_estimates(&g, 0, 0.5, 1.5, &[1.5], 1e-4).unwrap();
        assert!((est.own_param - 1.0).abs() < 1e-4);
        assert!((est.own_opponent[0] - 1.0).abs() < 1e-4);

        let g = cournot_game(10.0, 2.0, 1.0, 3.0, 8.0).unwrap();
        let (theta, q1, q2) = (2.0, 3.0, 1.0);
        let est = cross_partial_estimates(&g, 0, theta, q1, &[q2], 1e-4).unwrap();
        assert!((est.own_param - (-2.0 * q1 - q2)).abs() < 1e-4);
        assert!((est.own_opponent[0] - (-theta)).abs() < 1e-4);
    }

    #[test]
    fn cross_partial_check_passes_and_catches_mislabeling() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let report = check_cross_partials(&g, 5, 1e-4, 1e-6).unwrap();
        assert!(report.passed(), "{}", report.render());

        let mislabeled =
            GameSpec::new(Mode::Substitutes, g.players().to_vec()).unwrap();
        let report = check_cross_partials(&mislabeled, 5, 1e-4, 1e-6).unwrap();
        assert!(!report.passed());
        let failing = report
            .checks
            .iter()
            .find(|c| c.status == CheckStatus::Fail)
            .unwrap();
        assert!(failing.witness.is_some());

        let g = cournot_game(10.0, 2.0, 1.0, 3.0, 8.0).unwrap();
        let report = check_cross_partials(&g, 5, 1e-4, 1e-6).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn increasing_differences_hold_on_built_in_games() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let report = check_increasing_differences(&g, 60, 7).unwrap();
        assert!(report.passed(), "{}", report.render());
        let g = cournot_game(10.0, 2.0, 1.0, 3.0, 8.0).unwrap();
        let report = check_increasing_differences(&g, 60, 7).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn mixture_sweep_is_inconclusive_without_violations() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let report = check_mixture_continuity(&g, 20, 11, 3).unwrap();
        assert!(report.passed());
        assert_eq!(report.checks[0].status, CheckStatus::Inconclusive);
    }

    #[test]
    fn mixture_sweep_spans_the_closed_form_response_range() {
        // constant belief endpoints 0 and p_bar: the best response sweeps
        // the full round-1 interval affinely in the mixing weight
        let (a, phi, p_bar) = (1.0, 1.0, 3.0);
        let g = bertrand_game(a, phi, p_bar).unwrap();
        let unit = Interval::new(0.0, phi).unwrap();
        let prices = Interval::new(0.0, p_bar).unwrap();
        let b0 = ChoiceBelief::constant(unit, 0.0, prices).unwrap();
        let b1 = ChoiceBelief::constant(unit, p_bar, prices).unwrap();
        let f = PiecewiseConstantDensity::uniform(0.0, phi).unwrap();
        let theta = 0.5;
        for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let b = crate::beliefs::mix_choice_belief(&b0, &b1, lambda).unwrap();
            let r = best_response(&g, 0, theta, &[b], std::slice::from_ref(&f), prices)
                .unwrap()
                .choice;
            let expect = (a + theta + lambda * p_bar) / 2.0;
            assert!((r - expect).abs() < 1e-12, "lambda {lambda}: {r} vs {expect}");
        }
    }

    #[test]
    fn expectation_dominance_trials_pass() {
        let report = check_expectation_dominance(60, 3, 11).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn equal_densities_give_equal_expectations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_density(&mut rng, 0.0, 1.0).unwrap();
        let xs = [0.0, 0.4, 1.0];
        let ys = [0.0, 1.0, 1.5];
        let u = PiecewiseFn::from_grid_linear(&xs, &ys).unwrap();
        let a = f.integrate(&u).unwrap();
        let b = f.integrate(&u).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ordered_samples_are_ordered_and_deterministic() {
        let g = cournot_game(10.0, 2.0, 1.0, 3.0, 8.0).unwrap();
        for seed in 0..30u64 {
            let s1 = sample_ordered_inputs(&g, 0, seed).unwrap();
            let s2 = sample_ordered_inputs(&g, 0, seed).unwrap();
            assert_eq!(s1.lo_beliefs.len(), s2.lo_beliefs.len());
            let p1 = pushforward(&s1.hi_beliefs[0], &s1.hi_densities[0]).unwrap();
            let p2 = pushforward(&s2.hi_beliefs[0], &s2.hi_densities[0]).unwrap();
            assert_eq!(p1.thresholds(), p2.thresholds());
        }
    }

    #[test]
    fn single_choice_grid_survives_every_round() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let d = DiscretizedGame::from_parts(
            &g,
            vec![vec![1.5], vec![1.5]],
            vec![vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0]],
        )
        .unwrap();
        let run = oracle_rationalizable(&d, 4, OracleSearch::Reduced, 1_000_000).unwrap();
        for round in &run.rounds {
            for per_player in round {
                for set in per_player {
                    assert_eq!(set, &vec![0usize]);
                }
            }
        }
    }

    #[test]
    fn oracle_sets_are_nested_and_monotone_on_micro_bertrand() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let d = DiscretizedGame::from_game(&g, 9, 3).unwrap();
        let run = oracle_rationalizable(&d, 5, OracleSearch::Reduced, 10_000_000).unwrap();
        for k in 1..run.rounds.len() {
            for i in 0..2 {
                for t in 0..3 {
                    let cur = &run.rounds[k][i][t];
                    let prev = &run.rounds[k - 1][i][t];
                    assert!(cur.iter().all(|c| prev.contains(c)), "round {k} not nested");
                }
                // complements: extremes weakly increase with the parameter
                for t in 1..3 {
                    let a = &run.rounds[k][i][t - 1];
                    let b = &run.rounds[k][i][t];
                    assert!(b.first().unwrap() >= a.first().unwrap());
                    assert!(b.last().unwrap() >= a.last().unwrap());
                }
            }
        }
    }

    #[test]
    fn reduced_and_full_search_agree_on_micro_instances() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let d = DiscretizedGame::from_game(&g, 4, 3).unwrap();
        let reduced = oracle_rationalizable(&d, 4, OracleSearch::Reduced, 10_000_000).unwrap();
        let full = oracle_rationalizable(&d, 4, OracleSearch::Full, 10_000_000).unwrap();
        assert_eq!(reduced, full);
    }

    #[test]
    fn oracle_budget_exhaustion_is_a_resource_error() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let d = DiscretizedGame::from_game(&g, 9, 3).unwrap();
        let err = oracle_rationalizable(&d, 5, OracleSearch::Reduced, 50).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn oracle_brackets_the_continuous_bounds_within_one_step() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let d = DiscretizedGame::from_game(&g, 9, 3).unwrap();
        let run = oracle_rationalizable(&d, 5, OracleSearch::Reduced, 50_000_000).unwrap();
        let trace = solve(&g, &solve_opts(3, 5)).unwrap();
        let step = 3.0 / 8.0;
        let dev = compare_oracle(&trace, &d, &run, step).unwrap();
        assert!(dev <= step + 1e-9, "deviation {dev} exceeds one grid step {step}");
    }

    #[test]
    fn trace_built_from_oracle_extremes_has_zero_deviation() {
        use crate::solver::{BoundProfile, PlayerBounds, Termination};
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let d = DiscretizedGame::from_game(&g, 9, 3).unwrap();
        let run = oracle_rationalizable(&d, 3, OracleSearch::Reduced, 10_000_000).unwrap();
        let rounds: Vec<BoundProfile> = run
            .rounds
            .iter()
            .map(|per_player| BoundProfile {
                per_player: per_player
                    .iter()
                    .enumerate()
                    .map(|(i, sets)| {
                        let grid = d.players()[i].params.clone();
                        let lower: Vec<f64> = sets
                            .iter()
                            .map(|s| d.players()[i].choices[*s.first().unwrap()])
                            .collect();
                        let upper: Vec<f64> = sets
                            .iter()
                            .map(|s| d.players()[i].choices[*s.last().unwrap()])
                            .collect();
                        PlayerBounds {
                            lower_fn: PiecewiseFn::from_grid_linear(&grid, &lower).unwrap(),
                            upper_fn: PiecewiseFn::from_grid_linear(&grid, &upper).unwrap(),
                            grid,
                            lower,
                            upper,
                            exact: false,
                        }
                    })
                    .collect(),
            })
            .collect();
        let trace = IterationTrace {
            rounds,
            convergence: vec![],
            terminated_by: Termination::MaxRounds,
            clipping_events: vec![],
        };
        let dev = compare_oracle(&trace, &d, &run, 3.0 / 8.0).unwrap();
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn family_extremes_check_passes_for_built_ins() {
        let g = cournot_game(10.0, 2.0, 1.0, 3.0, 8.0).unwrap();
        let report = check_family_extremes(&g);
        assert!(report.passed());
    }

    #[test]
    fn report_rendering_is_machine_parsable() {
        let g = bertrand_game(1.0, 1.0, 3.0).unwrap();
        let mislabeled = GameSpec::new(Mode::Substitutes, g.players().to_vec()).unwrap();
        let report = check_cross_partials(&mislabeled, 4, 1e-4, 1e-6).unwrap();
        let text = report.render();
        assert!(text.contains("check=cross_partials_second_order status=Fail"));
        assert!(text.contains("witness"));
    }

    #[test]
    fn three_player_quadratic_game_checks_pass() {
        // symmetric three-player complements game with bilinear spillovers:
        // mixed third-order partial is identically zero
        use crate::beliefs::BeliefFamily;
        use crate::game::{CoeffForm, QuadraticUtility, ThetaAffine, UtilitySpec};
        let unit = Interval::new(0.0, 1.0).unwrap();
        let quad = QuadraticUtility {
            a: CoeffForm::constant(-1.0, 2),
            b: CoeffForm {
                base: ThetaAffine::new(1.0, 1.0),
                per_opponent: vec![ThetaAffine::new(0.25, 0.0); 2],
            },
            d: CoeffForm::constant(0.0, 2),
        };
        let player = PlayerSpec {
            choice: unit,
            parameter: unit,
            utility: UtilitySpec::Quadratic(quad),
            families: vec![
                BeliefFamily::singleton(PiecewiseConstantDensity::uniform(0.0, 1.0).unwrap());
                2
            ],
        };
        let g = GameSpec::new(Mode::Complements, vec![player.clone(), player.clone(), player])
            .unwrap();
        let report = check_cross_partials(&g, 3, 1e-4, 1e-6).unwrap();
        assert!(report.passed(), "{}", report.render());
        let third = report
            .checks
            .iter()
            .find(|c| c.name == "cross_partials_third_order")
            .unwrap();
        assert!(!third.detail.contains("vacuous"));
        let solve_report = solve(&g, &solve_opts(5, 40)).unwrap();
        let last = solve_report.final_profile();
        // interior fixed point: b/2 + spillovers; bounds collapse
        for b in &last.per_player {
            for t in 0..b.grid.len() {
                assert!(b.upper[t] - b.lower[t] < 1e-9);
            }
        }
    }
}
