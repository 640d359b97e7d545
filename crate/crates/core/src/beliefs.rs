//! Parameter densities, choice beliefs, and stochastic-dominance machinery.
//!
//! Parameter beliefs are piecewise-constant densities on a closed interval.
//! Choice beliefs map an opponent's parameter to a choice. Pushing a
//! parameter density through a choice belief produces a composite belief
//! over the opponent's choices, represented by its survival function
//! `S(c') = Pr[choice >= c']`. All dominance comparisons are evaluated
//! exactly on merged breakpoint/threshold sets, which is sufficient because
//! tail masses are piecewise affine between breakpoints and composite
//! survival differences are piecewise monotone between distinguished
//! thresholds for the supported piece shapes.

use crate::piecewise::PiecewiseFn;
use crate::{Error, Interval, Result, COMPARE_TOL, MASS_TOL};

/// Outcome of a first-order dominance comparison.
///
/// `Equal` means the two tail functions coincide within tolerance
/// everywhere; ties count as dominance in both directions, so the
/// `dominates`/`dominated_by` predicates accept `Equal`. `Incomparable`
/// carries one witness threshold for each direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComparisonResult {
    Equal,
    Dominates,
    DominatedBy,
    Incomparable { above_at: f64, below_at: f64 },
}

impl ComparisonResult {
    /// True when the first argument dominates the second (ties included).
    pub fn dominates(&self) -> bool {
        matches!(self, ComparisonResult::Dominates | ComparisonResult::Equal)
    }

    /// True when the first argument is dominated by the second (ties included).
    pub fn dominated_by(&self) -> bool {
        matches!(self, ComparisonResult::DominatedBy | ComparisonResult::Equal)
    }
}

/// Classifies a list of signed tail differences sampled at thresholds.
fn classify(diffs: &[(f64, f64)], tol: f64) -> ComparisonResult {
    let mut above: Option<f64> = None;
    let mut below: Option<f64> = None;
    for (t, d) in diffs {
        if *d > tol && above.is_none() {
            above = Some(*t);
        }
        if *d < -tol && below.is_none() {
            below = Some(*t);
        }
    }
    match (above, below) {
        (None, None) => ComparisonResult::Equal,
        (Some(_), None) => ComparisonResult::Dominates,
        (None, Some(_)) => ComparisonResult::DominatedBy,
        (Some(a), Some(b)) => ComparisonResult::Incomparable { above_at: a, below_at: b },
    }
}

/// Piecewise-constant probability density on a closed interval.
///
/// `values[i]` is the density height on `[breakpoints[i], breakpoints[i+1])`;
/// total mass must be one within `MASS_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstantDensity {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::Argument(format!(
                "density needs one more breakpoint than values, got {} and {}",
                breakpoints.len(),
                values.len()
            )));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Argument(format!(
                    "density breakpoints must strictly increase, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::Argument(format!("density value {v} at piece {i} is invalid")));
            }
        }
        let mass: f64 = values
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::Argument(format!(
                "density mass must be 1 within {MASS_TOL:e}, got {mass}"
            )));
        }
        Ok(Self { breakpoints, values })
    }

    /// Uniform density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![1.0 / (hi - lo)])
    }

    /// Builds a density from nonnegative weights by rescaling to unit mass.
    pub fn normalized(breakpoints: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum();
        if !(total > 0.0) {
            return Err(Error::Argument("weights must carry positive mass".into()));
        }
        Self::new(breakpoints, weights.into_iter().map(|v| v / total).collect())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    /// Exact cumulative mass on `[lo, theta]`.
    pub fn cdf_at(&self, theta: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * (hi - lo).max(1.0);
        if theta < lo - slack || theta > hi + slack {
            return Err(Error::Domain(format!(
                "cdf evaluation point {theta} outside domain [{lo}, {hi}]"
            )));
        }
        let theta = theta.clamp(lo, hi);
        let mut acc = 0.0;
        for (v, w) in self.values.iter().zip(self.breakpoints.windows(2)) {
            if theta >= w[1] {
                acc += v * (w[1] - w[0]);
            } else {
                if theta > w[0] {
                    acc += v * (theta - w[0]);
                }
                break;
            }
        }
        Ok(acc)
    }

    /// Mass of `[theta, hi]`, the upper tail compared by dominance checks.
    pub fn upper_tail(&self, theta: f64) -> Result<f64> {
        Ok(1.0 - self.cdf_at(theta)?)
    }

    /// Exact mean of the density.
    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(v, w)| v * 0.5 * (w[1] * w[1] - w[0] * w[0]))
            .sum()
    }

    /// Exact integral of a piecewise function against this density.
    pub fn integrate(&self, f: &PiecewiseFn) -> Result<f64> {
        let (lo, hi) = self.domain();
        let (flo, fhi) = f.domain();
        let slack = 1e-12 * (hi - lo).max(1.0);
        if (lo - flo).abs() > slack || (hi - fhi).abs() > slack {
            return Err(Error::Domain(format!(
                "density domain [{lo}, {hi}] does not match function domain [{flo}, {fhi}]"
            )));
        }
        let mut cuts = self.breakpoints.clone();
        cuts.extend(f.breakpoints());
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let a = w[0].max(lo);
            let b = w[1].min(hi);
            if b <= a {
                continue;
            }
            let h = self.height_at(0.5 * (a + b));
            if h != 0.0 {
                total += h * f.integral_on(a, b)?;
            }
        }
        Ok(total)
    }

    fn height_at(&self, theta: f64) -> f64 {
        let idx = self
            .breakpoints
            .partition_point(|b| *b <= theta)
            .saturating_sub(1)
            .min(self.values.len() - 1);
        self.values[idx]
    }
}

/// First-order comparison of two densities on the same domain.
///
/// Tail masses are piecewise affine with kinks only at breakpoints, so
/// comparing `Pr[X >= t]` at every merged breakpoint is exact.
pub fn fosd_compare(
    f: &PiecewiseConstantDensity,
    g: &PiecewiseConstantDensity,
    tol: f64,
) -> Result<ComparisonResult> {
    let (flo, fhi) = f.domain();
    let (glo, ghi) = g.domain();
    let slack = 1e-12 * (fhi - flo).max(1.0);
    if (flo - glo).abs() > slack || (fhi - ghi).abs() > slack {
        return Err(Error::Domain(format!(
            "dominance comparison needs identical domains, got [{flo}, {fhi}] vs [{glo}, {ghi}]"
        )));
    }
    let mut ts = f.breakpoints.clone();
    ts.extend_from_slice(&g.breakpoints);
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    let mut diffs = Vec::with_capacity(ts.len());
    for t in ts {
        let t = t.clamp(flo, fhi);
        diffs.push((t, f.upper_tail(t)? - g.upper_tail(t.clamp(glo, ghi))?));
    }
    Ok(classify(&diffs, tol))
}

/// Convex combination of two densities on the same domain; `lambda` 0 or 1
/// returns the corresponding argument exactly.
pub fn mix_density(
    f: &PiecewiseConstantDensity,
    g: &PiecewiseConstantDensity,
    lambda: f64,
) -> Result<PiecewiseConstantDensity> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Argument(format!("mixing weight {lambda} outside [0, 1]")));
    }
    if lambda == 0.0 {
        return Ok(f.clone());
    }
    if lambda == 1.0 {
        return Ok(g.clone());
    }
    let (flo, fhi) = f.domain();
    let (glo, ghi) = g.domain();
    let slack = 1e-12 * (fhi - flo).max(1.0);
    if (flo - glo).abs() > slack || (fhi - ghi).abs() > slack {
        return Err(Error::Domain(format!(
            "mixing needs identical domains, got [{flo}, {fhi}] vs [{glo}, {ghi}]"
        )));
    }
    let mut cuts = f.breakpoints.clone();
    cuts.extend_from_slice(&g.breakpoints);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut values = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        values.push((1.0 - lambda) * f.height_at(mid) + lambda * g.height_at(mid));
    }
    PiecewiseConstantDensity::new(cuts, values)
}

/// A choice belief: a total map from an opponent's parameter interval to
/// that opponent's choices.
///
/// The underlying pieces may be constant, affine, or reciprocal-affine in
/// the parameter; `codomain` is the opponent's choice interval and every
/// evaluated value must lie inside it (checked exactly at construction via
/// piecewise extrema).
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceBelief {
    f: PiecewiseFn,
    codomain: Interval,
}

impl ChoiceBelief {
    /// Wraps a piecewise function after checking its range fits `codomain`.
    pub fn new(f: PiecewiseFn, codomain: Interval) -> Result<Self> {
        let (lo, hi) = f.min_max();
        let slack = 1e-12 * codomain.width().max(1.0);
        if lo < codomain.lo - slack || hi > codomain.hi + slack {
            return Err(Error::Argument(format!(
                "belief values span [{lo}, {hi}], outside choice interval [{}, {}]",
                codomain.lo, codomain.hi
            )));
        }
        Ok(Self { f, codomain })
    }

    /// Constant belief at a single choice.
    pub fn constant(domain: Interval, value: f64, codomain: Interval) -> Result<Self> {
        Self::new(PiecewiseFn::constant(domain.lo, domain.hi, value)?, codomain)
    }

    /// Step belief with `values[i]` on `[breakpoints[i], breakpoints[i+1])`.
    pub fn from_steps(breakpoints: &[f64], values: &[f64], codomain: Interval) -> Result<Self> {
        Self::new(PiecewiseFn::from_steps(breakpoints, values)?, codomain)
    }

    /// Wraps a function without range validation, widening the codomain to
    /// cover it. Used by the solver's unrestricted recursion, where bound
    /// functions may legitimately leave the choice interval.
    pub(crate) fn enveloping(f: PiecewiseFn, codomain: Interval) -> Self {
        let (lo, hi) = f.min_max();
        let codomain = Interval {
            lo: codomain.lo.min(lo),
            hi: codomain.hi.max(hi),
        };
        Self { f, codomain }
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        self.f.eval(theta)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.f.domain()
    }

    pub fn codomain(&self) -> Interval {
        self.codomain
    }

    pub fn as_fn(&self) -> &PiecewiseFn {
        &self.f
    }

    /// Exact range of the belief over its domain.
    pub fn range(&self) -> (f64, f64) {
        self.f.min_max()
    }
}

/// Convex combination of two choice beliefs with equal domains and
/// codomains; `lambda` 0 or 1 returns the corresponding argument exactly.
pub fn mix_choice_belief(a: &ChoiceBelief, b: &ChoiceBelief, lambda: f64) -> Result<ChoiceBelief> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Argument(format!("mixing weight {lambda} outside [0, 1]")));
    }
    if a.codomain != b.codomain {
        return Err(Error::Domain(format!(
            "mixing needs identical codomains, got [{}, {}] vs [{}, {}]",
            a.codomain.lo, a.codomain.hi, b.codomain.lo, b.codomain.hi
        )));
    }
    if lambda == 0.0 {
        return Ok(a.clone());
    }
    if lambda == 1.0 {
        return Ok(b.clone());
    }
    let cells = merged_piece_cells(a.as_fn(), b.as_fn())?;
    let mut pieces = Vec::with_capacity(cells.len());
    for (lo, hi, p, q) in cells {
        pieces.push(crate::piecewise::Piece {
            lo,
            hi,
            constant: (1.0 - lambda) * p.constant + lambda * q.constant,
            slope: (1.0 - lambda) * p.slope + lambda * q.slope,
            recip: (1.0 - lambda) * p.recip + lambda * q.recip,
        });
    }
    ChoiceBelief::new(PiecewiseFn::new(pieces)?, a.codomain)
}

fn merged_piece_cells<'a>(
    a: &'a PiecewiseFn,
    b: &'a PiecewiseFn,
) -> Result<Vec<(f64, f64, crate::piecewise::Piece, crate::piecewise::Piece)>> {
    let (alo, ahi) = a.domain();
    let (blo, bhi) = b.domain();
    let slack = 1e-12 * (ahi - alo).max(1.0);
    if (alo - blo).abs() > slack || (ahi - bhi).abs() > slack {
        return Err(Error::Domain(format!(
            "domain mismatch: [{alo}, {ahi}] vs [{blo}, {bhi}]"
        )));
    }
    let mut cuts = a.breakpoints();
    cuts.extend(b.breakpoints());
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let pa = a.pieces()[a.pieces().partition_point(|p| p.hi <= mid).min(a.pieces().len() - 1)];
        let pb = b.pieces()[b.pieces().partition_point(|p| p.hi <= mid).min(b.pieces().len() - 1)];
        out.push((w[0], w[1], pa, pb));
    }
    Ok(out)
}

/// Composite belief over an opponent's choices: the distribution of
/// `belief(theta)` when `theta` is drawn from a parameter density.
///
/// The survival function `S(c') = Pr[choice >= c']` is evaluated exactly at
/// any threshold from the stored (belief piece, density height) segments;
/// `steps()` tabulates it at the distinguished thresholds, which fully
/// describes it for piecewise-constant beliefs.
#[derive(Debug, Clone)]
pub struct CompositeBelief {
    belief: PiecewiseFn,
    heights: Vec<f64>,
    thresholds: Vec<f64>,
    choice_interval: Interval,
}

/// Pushes a parameter density through a choice belief.
pub fn pushforward(
    beta: &ChoiceBelief,
    f: &PiecewiseConstantDensity,
) -> Result<CompositeBelief> {
    let (blo, bhi) = beta.domain();
    let (dlo, dhi) = f.domain();
    let slack = 1e-12 * (bhi - blo).max(1.0);
    if (blo - dlo).abs() > slack || (bhi - dhi).abs() > slack {
        return Err(Error::Domain(format!(
            "belief domain [{blo}, {bhi}] does not match density domain [{dlo}, {dhi}]"
        )));
    }

    // refine the belief pieces over the density breakpoints so each segment
    // carries a single density height
    let mut cuts = beta.as_fn().breakpoints();
    cuts.extend_from_slice(f.breakpoints());
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut pieces = Vec::with_capacity(cuts.len() - 1);
    let mut heights = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let src = beta.as_fn().pieces()
            [beta.as_fn().pieces().partition_point(|p| p.hi <= mid).min(beta.as_fn().pieces().len() - 1)];
        pieces.push(crate::piecewise::Piece { lo: w[0], hi: w[1], ..src });
        heights.push(f.height_at(mid));
    }
    let refined = PiecewiseFn::new(pieces)?;

    let mut thresholds = refined.distinguished_values();
    thresholds.push(beta.codomain().lo);
    thresholds.push(beta.codomain().hi);
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();

    let out = CompositeBelief {
        belief: refined,
        heights,
        thresholds,
        choice_interval: beta.codomain(),
    };
    let total = out.survival_at(out.choice_interval.lo);
    if (total - 1.0).abs() > MASS_TOL.max(1e-12) {
        return Err(Error::Internal(format!(
            "pushforward mass is {total}, expected 1"
        )));
    }
    Ok(out)
}

impl CompositeBelief {
    /// Exact survival probability `Pr[choice >= c]`.
    pub fn survival_at(&self, c: f64) -> f64 {
        self.belief.superlevel_weighted(c, false, |i| self.heights[i])
    }

    /// Exact strict survival probability `Pr[choice > c]`; the right limit
    /// of [`Self::survival_at`]. Differs from it exactly at atoms, i.e.
    /// choice values the belief holds over a parameter set of positive mass.
    pub fn survival_above(&self, c: f64) -> f64 {
        self.belief.superlevel_weighted(c, true, |i| self.heights[i])
    }

    /// Distinguished thresholds where the survival function can change form.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// `(threshold, survival)` table at the distinguished thresholds, in
    /// ascending threshold order.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        self.thresholds.iter().map(|t| (*t, self.survival_at(*t))).collect()
    }

    /// The choice interval the composite lives on.
    pub fn choice_interval(&self) -> Interval {
        self.choice_interval
    }

    /// Smallest and largest choice values carrying mass.
    pub fn support(&self) -> (f64, f64) {
        self.belief.min_max()
    }
}

/// First-order comparison of two composite beliefs over the same choice
/// interval.
///
/// Both one-sided survival limits are checked at every merged distinguished
/// threshold: survival functions jump at atoms (belief values held over a
/// positive-mass parameter set), and two composites can agree at a jump
/// threshold yet split immediately above it. Between thresholds the survival
/// difference is affine in the threshold for step and affine belief
/// segments, so the endpoint limits decide the sign exactly there; a
/// midpoint sample per cell guards curved (reciprocal) segments.
pub fn composite_compare(
    p: &CompositeBelief,
    q: &CompositeBelief,
    tol: f64,
) -> Result<ComparisonResult> {
    let a = p.choice_interval;
    let b = q.choice_interval;
    let slack = 1e-12 * a.width().max(1.0);
    if (a.lo - b.lo).abs() > slack || (a.hi - b.hi).abs() > slack {
        return Err(Error::Domain(format!(
            "composite comparison needs one choice interval, got [{}, {}] vs [{}, {}]",
            a.lo, a.hi, b.lo, b.hi
        )));
    }
    let mut ts = p.thresholds.clone();
    ts.extend_from_slice(&q.thresholds);
    ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ts.dedup();
    let mut diffs: Vec<(f64, f64)> = Vec::with_capacity(3 * ts.len());
    for w in ts.windows(2) {
        diffs.push((w[0], p.survival_at(w[0]) - q.survival_at(w[0])));
        diffs.push((w[0], p.survival_above(w[0]) - q.survival_above(w[0])));
        let mid = 0.5 * (w[0] + w[1]);
        diffs.push((mid, p.survival_at(mid) - q.survival_at(mid)));
    }
    if let Some(last) = ts.last() {
        diffs.push((*last, p.survival_at(*last) - q.survival_at(*last)));
        diffs.push((*last, p.survival_above(*last) - q.survival_above(*last)));
    }
    Ok(classify(&diffs, tol))
}

/// A finite family of parameter densities about one opponent, with
/// designated dominance-maximal and dominance-minimal members.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefFamily {
    members: Vec<PiecewiseConstantDensity>,
    max_index: usize,
    min_index: usize,
}

impl BeliefFamily {
    pub fn new(
        members: Vec<PiecewiseConstantDensity>,
        max_index: usize,
        min_index: usize,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Argument("belief family needs at least one member".into()));
        }
        if max_index >= members.len() || min_index >= members.len() {
            return Err(Error::Argument(format!(
                "designated indices ({max_index}, {min_index}) out of range for {} members",
                members.len()
            )));
        }
        let d0 = members[0].domain();
        for (i, m) in members.iter().enumerate() {
            let d = m.domain();
            if (d.0 - d0.0).abs() > 1e-12 || (d.1 - d0.1).abs() > 1e-12 {
                return Err(Error::Argument(format!(
                    "family member {i} lives on [{}, {}], expected [{}, {}]",
                    d.0, d.1, d0.0, d0.1
                )));
            }
        }
        Ok(Self { members, max_index, min_index })
    }

    /// Single-member family; the member is trivially both extremes.
    pub fn singleton(member: PiecewiseConstantDensity) -> Self {
        Self { members: vec![member], max_index: 0, min_index: 0 }
    }

    pub fn members(&self) -> &[PiecewiseConstantDensity] {
        &self.members
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn min_index(&self) -> usize {
        self.min_index
    }

    pub fn domain(&self) -> (f64, f64) {
        self.members[0].domain()
    }
}

/// Validates the designated extremes of a family and returns
/// `(dominance-maximal, dominance-minimal)` references.
///
/// Every member must be dominated by the designated maximum and must
/// dominate the designated minimum; otherwise the family cannot drive the
/// extremal round update and an assumption violation naming the offending
/// member and a witness threshold is returned.
pub fn family_extremes(
    family: &BeliefFamily,
) -> Result<(&PiecewiseConstantDensity, &PiecewiseConstantDensity)> {
    let max = &family.members[family.max_index];
    let min = &family.members[family.min_index];
    for (i, m) in family.members.iter().enumerate() {
        let vs_max = fosd_compare(max, m, COMPARE_TOL)?;
        if !vs_max.dominates() {
            let at = match vs_max {
                ComparisonResult::Incomparable { below_at, .. } => below_at,
                _ => f64::NAN,
            };
            return Err(Error::AssumptionViolation(format!(
                "designated maximal member {} does not dominate member {i} (witness threshold {at})",
                family.max_index
            )));
        }
        let vs_min = fosd_compare(min, m, COMPARE_TOL)?;
        if !vs_min.dominated_by() {
            let at = match vs_min {
                ComparisonResult::Incomparable { above_at, .. } => above_at,
                _ => f64::NAN,
            };
            return Err(Error::AssumptionViolation(format!(
                "designated minimal member {} is not dominated by member {i} (witness threshold {at})",
                family.min_index
            )));
        }
    }
    Ok((max, min))
}

#[cfg(test)]
mod tests {
    use super::*;

    // worked-example data: two densities and two step beliefs on [0, 1]
    fn dens_first() -> PiecewiseConstantDensity {
        PiecewiseConstantDensity::new(
            vec![0.0, 0.3, 0.7, 1.0],
            vec![2.0 / 3.0, 1.0 / 4.0, 7.0 / 3.0],
        )
        .unwrap()
    }

    fn dens_second() -> PiecewiseConstantDensity {
        PiecewiseConstantDensity::new(
            vec![0.0, 0.3, 0.7, 1.0],
            vec![1.0 / 3.0, 7.0 / 4.0, 2.0 / 3.0],
        )
        .unwrap()
    }

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn belief_first() -> ChoiceBelief {
        ChoiceBelief::from_steps(&[0.0, 0.3, 0.7, 1.0], &[0.5, 0.3, 0.8], unit()).unwrap()
    }

    fn belief_second() -> ChoiceBelief {
        ChoiceBelief::from_steps(&[0.0, 0.3, 0.7, 1.0], &[0.8, 0.2, 0.5], unit()).unwrap()
    }

    #[test]
    fn cdf_matches_hand_computed_values() {
        assert!((dens_first().cdf_at(0.3).unwrap() - 0.2).abs() < 1e-12);
        assert!((dens_second().cdf_at(0.7).unwrap() - 0.8).abs() < 1e-12);
        assert!((dens_first().cdf_at(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(dens_first().cdf_at(0.0).unwrap(), 0.0);
    }

    #[test]
    fn density_mass_is_enforced() {
        let err = PiecewiseConstantDensity::new(vec![0.0, 1.0], vec![0.9]);
        assert!(err.is_err());
        let ok = PiecewiseConstantDensity::normalized(vec![0.0, 1.0], vec![0.9]).unwrap();
        assert!((ok.cdf_at(1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn example_densities_are_incomparable() {
        let r = fosd_compare(&dens_first(), &dens_second(), 1e-9).unwrap();
        assert!(matches!(r, ComparisonResult::Incomparable { .. }));
    }

    #[test]
    fn fosd_detects_point_mass_dominance() {
        // near-point-mass at the top of the domain dominates the uniform
        let spike = PiecewiseConstantDensity::normalized(
            vec![0.0, 0.999, 1.0],
            vec![0.0, 1.0],
        )
        .unwrap();
        let unif = PiecewiseConstantDensity::uniform(0.0, 1.0).unwrap();
        assert_eq!(fosd_compare(&spike, &unif, 1e-9).unwrap(), ComparisonResult::Dominates);
        assert_eq!(fosd_compare(&unif, &spike, 1e-9).unwrap(), ComparisonResult::DominatedBy);
        assert_eq!(fosd_compare(&unif, &unif, 1e-9).unwrap(), ComparisonResult::Equal);
    }

    #[test]
    fn pushforward_reproduces_survival_tables() {
        // first pair: masses 0.2, 0.1, 0.7 at choices 0.5, 0.3, 0.8
        let p = pushforward(&belief_first(), &dens_first()).unwrap();
        for (c, s) in [(0.0, 1.0), (0.3, 1.0), (0.31, 0.9), (0.5, 0.9), (0.51, 0.7), (0.8, 0.7), (0.81, 0.0)] {
            assert!(
                (p.survival_at(c) - s).abs() < 1e-12,
                "survival at {c} was {}, expected {s}",
                p.survival_at(c)
            );
        }
        // second pair: masses 0.1, 0.7, 0.2 at choices 0.8, 0.2, 0.5
        let q = pushforward(&belief_second(), &dens_second()).unwrap();
        for (c, s) in [(0.0, 1.0), (0.2, 1.0), (0.21, 0.3), (0.5, 0.3), (0.51, 0.1), (0.8, 0.1), (0.81, 0.0)] {
            assert!((q.survival_at(c) - s).abs() < 1e-12);
        }
    }

    #[test]
    fn composite_comparison_dominates_despite_incomparable_densities() {
        let p = pushforward(&belief_first(), &dens_first()).unwrap();
        let q = pushforward(&belief_second(), &dens_second()).unwrap();
        assert_eq!(composite_compare(&p, &q, 1e-12).unwrap(), ComparisonResult::Dominates);
        assert_eq!(composite_compare(&q, &p, 1e-12).unwrap(), ComparisonResult::DominatedBy);
    }

    #[test]
    fn atom_and_ramp_composites_are_ordered_not_equal() {
        // Belief decreasing from 0.1 to 0 over the lower half, flat at 0 on
        // the upper half. A density with all mass on the flat part pushes to
        // a point mass at 0; a density with all mass on the ramp keeps
        // positive values. The survival functions agree at every jump
        // threshold (1 at c=0, 0 at c=0.1) and differ only strictly between
        // thresholds, so the comparison must consult the one-sided limits.
        let ramp = PiecewiseFn::new(vec![
            crate::piecewise::Piece { lo: 0.0, hi: 0.5, constant: 0.1, slope: -0.2, recip: 0.0 },
            crate::piecewise::Piece { lo: 0.5, hi: 1.0, constant: 0.0, slope: 0.0, recip: 0.0 },
        ])
        .unwrap();
        let belief = ChoiceBelief::new(ramp, unit()).unwrap();
        let on_flat =
            PiecewiseConstantDensity::new(vec![0.0, 0.5, 1.0], vec![0.0, 2.0]).unwrap();
        let on_ramp =
            PiecewiseConstantDensity::new(vec![0.0, 0.5, 1.0], vec![2.0, 0.0]).unwrap();
        let atom = pushforward(&belief, &on_flat).unwrap();
        let spread = pushforward(&belief, &on_ramp).unwrap();
        assert_eq!(atom.survival_at(0.0), 1.0);
        assert_eq!(atom.survival_above(0.0), 0.0);
        assert!((spread.survival_above(0.0) - 1.0).abs() < 1e-12);
        assert!((spread.survival_at(0.05) - 0.5).abs() < 1e-12);
        assert_eq!(
            composite_compare(&atom, &spread, 1e-9).unwrap(),
            ComparisonResult::DominatedBy
        );
        assert_eq!(
            composite_compare(&spread, &atom, 1e-9).unwrap(),
            ComparisonResult::Dominates
        );
    }

    #[test]
    fn mix_density_midpoint_has_averaged_heights() {
        let m = mix_density(&dens_first(), &dens_second(), 0.5).unwrap();
        assert!((m.height_at(0.1) - 0.5).abs() < 1e-15);
        assert!((m.height_at(0.5) - 1.0).abs() < 1e-15);
        assert!((m.height_at(0.9) - 1.5).abs() < 1e-15);
        assert_eq!(mix_density(&dens_first(), &dens_second(), 0.0).unwrap(), dens_first());
        assert_eq!(mix_density(&dens_first(), &dens_second(), 1.0).unwrap(), dens_second());
    }

    #[test]
    fn mix_choice_belief_is_exact_at_endpoints_and_convex_between() {
        let a = belief_first();
        let b = belief_second();
        assert_eq!(mix_choice_belief(&a, &b, 0.0).unwrap(), a);
        assert_eq!(mix_choice_belief(&a, &b, 1.0).unwrap(), b);
        let m = mix_choice_belief(&a, &b, 0.25).unwrap();
        assert!((m.eval(0.1).unwrap() - (0.75 * 0.5 + 0.25 * 0.8)).abs() < 1e-15);
        assert!(mix_choice_belief(&a, &b, 1.5).is_err());
    }

    #[test]
    fn belief_values_must_fit_choice_interval() {
        let err = ChoiceBelief::from_steps(&[0.0, 1.0], &[1.5], unit());
        assert!(err.is_err());
    }

    #[test]
    fn pointwise_higher_belief_has_dominating_pushforward() {
        let f = dens_second();
        let lo = belief_second();
        let hi = ChoiceBelief::from_steps(&[0.0, 0.3, 0.7, 1.0], &[0.9, 0.4, 0.5], unit()).unwrap();
        let p = pushforward(&hi, &f).unwrap();
        let q = pushforward(&lo, &f).unwrap();
        assert!(composite_compare(&p, &q, 1e-12).unwrap().dominates());
    }

    #[test]
    fn monotone_belief_turns_fosd_into_composite_dominance() {
        // increasing belief, dominating density: composite must dominate
        let beta = ChoiceBelief::new(
            PiecewiseFn::affine(0.0, 1.0, 0.1, 0.7).unwrap(),
            unit(),
        )
        .unwrap();
        let top = PiecewiseConstantDensity::normalized(vec![0.0, 0.5, 1.0], vec![0.2, 1.8]).unwrap();
        let bot = PiecewiseConstantDensity::normalized(vec![0.0, 0.5, 1.0], vec![1.8, 0.2]).unwrap();
        assert!(fosd_compare(&top, &bot, 1e-12).unwrap().dominates());
        let p = pushforward(&beta, &top).unwrap();
        let q = pushforward(&beta, &bot).unwrap();
        assert!(composite_compare(&p, &q, 1e-12).unwrap().dominates());
        // decreasing belief flips the order
        let beta_dec = ChoiceBelief::new(
            PiecewiseFn::affine(0.0, 1.0, 0.8, -0.7).unwrap(),
            unit(),
        )
        .unwrap();
        let p = pushforward(&beta_dec, &top).unwrap();
        let q = pushforward(&beta_dec, &bot).unwrap();
        assert!(composite_compare(&p, &q, 1e-12).unwrap().dominated_by());
    }

    #[test]
    fn family_extremes_validates_designations() {
        let mid = PiecewiseConstantDensity::uniform(0.0, 1.0).unwrap();
        let top = PiecewiseConstantDensity::normalized(vec![0.0, 0.5, 1.0], vec![0.0, 2.0]).unwrap();
        let bot = PiecewiseConstantDensity::normalized(vec![0.0, 0.5, 1.0], vec![2.0, 0.0]).unwrap();
        let fam = BeliefFamily::new(vec![top.clone(), mid.clone(), bot.clone()], 0, 2).unwrap();
        let (hi, lo) = family_extremes(&fam).unwrap();
        assert_eq!(hi, &top);
        assert_eq!(lo, &bot);

        // the worked-example pair is incomparable, so no designation works
        let bad = BeliefFamily::new(vec![dens_first(), dens_second()], 0, 1).unwrap();
        let err = family_extremes(&bad).unwrap_err();
        assert!(matches!(err, Error::AssumptionViolation(_)));
    }

    #[test]
    fn composite_mass_totals_one_from_any_member() {
        let beta = belief_first();
        for f in [dens_first(), dens_second()] {
            let p = pushforward(&beta, &f).unwrap();
            assert!((p.survival_at(0.0) - 1.0).abs() < 1e-12);
            assert!(p.survival_at(1.0 + 1e-9) == 0.0);
        }
    }
}
