//! Piecewise-function machinery shared by choice beliefs and solver bounds.
//!
//! A `PiecewiseFn` is a total function on a closed interval built from
//! contiguous pieces, each evaluating `constant + slope*x + recip/x`. This
//! three-coefficient family is closed under the solver's round update:
//! affine pieces reproduce best responses whose integrated leading
//! coefficient is constant, reciprocal pieces reproduce those where it
//! scales with the parameter, and integrating `recip/x` against a
//! piecewise-constant density yields the logarithmic terms of the duopoly
//! closed forms exactly.

use crate::{Error, Result};

/// Direction labels for monotonicity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

/// One piece, valid on `[lo, hi)` (the last piece of a function also owns
/// its right endpoint). Value at `x` is `constant + slope*x + recip/x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub constant: f64,
    pub slope: f64,
    pub recip: f64,
}

impl Piece {
    fn validate(&self) -> Result<()> {
        for v in [self.lo, self.hi, self.constant, self.slope, self.recip] {
            if !v.is_finite() {
                return Err(Error::Argument(format!("non-finite piece field in {self:?}")));
            }
        }
        if self.lo >= self.hi {
            return Err(Error::Argument(format!(
                "piece span must have positive width, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.recip != 0.0 && self.lo <= 0.0 && self.hi >= 0.0 {
            return Err(Error::Argument(format!(
                "reciprocal piece spans zero: [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        let r = if self.recip == 0.0 { 0.0 } else { self.recip / x };
        self.constant + self.slope * x + r
    }

    /// Exact integral of the piece expression over `[a, b]`.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let lin = self.constant * (b - a) + 0.5 * self.slope * (b * b - a * a);
        if self.recip == 0.0 {
            lin
        } else {
            lin + self.recip * (b / a).ln()
        }
    }

    /// Interior stationary points of the piece expression within `(a, b)`.
    fn critical_points(&self, a: f64, b: f64) -> Vec<f64> {
        // derivative slope - recip/x^2 vanishes at x^2 = recip/slope
        if self.slope == 0.0 || self.recip == 0.0 {
            return Vec::new();
        }
        let ratio = self.recip / self.slope;
        if ratio <= 0.0 {
            return Vec::new();
        }
        let root = ratio.sqrt();
        [root, -root]
            .into_iter()
            .filter(|x| *x > a && *x < b)
            .collect()
    }

    /// Solutions of `value(x) == target` strictly inside `(a, b)`.
    fn value_roots(&self, target: f64, a: f64, b: f64) -> Vec<f64> {
        let c0 = self.constant - target;
        let mut roots = if self.recip == 0.0 {
            if self.slope == 0.0 {
                Vec::new()
            } else {
                vec![-c0 / self.slope]
            }
        } else {
            // multiply by x (sign-definite on the span): slope*x^2 + c0*x + recip = 0
            quadratic_roots(self.slope, c0, self.recip)
        };
        roots.retain(|x| *x > a && *x < b);
        roots.sort_by(|p, q| p.partial_cmp(q).unwrap());
        roots.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * (p.abs() + q.abs() + 1.0));
        roots
    }

    /// Total length of `{x in [a, b] : value(x) >= target}` (or `> target`
    /// when `strict`). Strictness is only observable where the expression is
    /// constant at the target over a set of positive length.
    fn superlevel_measure(&self, a: f64, b: f64, target: f64, strict: bool) -> f64 {
        let mut cuts = vec![a];
        cuts.extend(self.value_roots(target, a, b));
        cuts.push(b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let v = self.value(mid);
            let included = if strict { v > target } else { v >= target };
            if included {
                total += w[1] - w[0];
            }
        }
        total
    }

    /// Minimum and maximum of the piece expression over `[a, b]`.
    fn extrema(&self, a: f64, b: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut consider = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        consider(self.value(a));
        consider(self.value(b));
        for x in self.critical_points(a, b) {
            consider(self.value(x));
        }
        (lo, hi)
    }
}

/// Real roots of `a*x^2 + b*x + c = 0`, computed with the numerically
/// stable split to avoid cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = if b >= 0.0 { -0.5 * (b + sq) } else { -0.5 * (b - sq) };
    let mut out = vec![q / a];
    if q != 0.0 {
        out.push(c / q);
    }
    out
}

/// Contiguous piecewise function on a closed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFn {
    pieces: Vec<Piece>,
}

impl PiecewiseFn {
    /// Builds a function from contiguous pieces (each `hi` must equal the
    /// next piece's `lo` exactly).
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Argument("piecewise function needs at least one piece".into()));
        }
        for p in &pieces {
            p.validate()?;
        }
        for w in pieces.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(Error::Argument(format!(
                    "pieces are not contiguous: {} then {}",
                    w[0].hi, w[1].lo
                )));
            }
        }
        Ok(Self { pieces })
    }

    pub fn constant(lo: f64, hi: f64, v: f64) -> Result<Self> {
        Self::new(vec![Piece { lo, hi, constant: v, slope: 0.0, recip: 0.0 }])
    }

    pub fn affine(lo: f64, hi: f64, constant: f64, slope: f64) -> Result<Self> {
        Self::new(vec![Piece { lo, hi, constant, slope, recip: 0.0 }])
    }

    pub fn recip_affine(lo: f64, hi: f64, constant: f64, recip: f64) -> Result<Self> {
        Self::new(vec![Piece { lo, hi, constant, slope: 0.0, recip }])
    }

    /// Step function: `values[i]` on `[breakpoints[i], breakpoints[i+1])`.
    pub fn from_steps(breakpoints: &[f64], values: &[f64]) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::Argument(format!(
                "need one more breakpoint than values, got {} and {}",
                breakpoints.len(),
                values.len()
            )));
        }
        let pieces = values
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(v, w)| Piece { lo: w[0], hi: w[1], constant: *v, slope: 0.0, recip: 0.0 })
            .collect();
        Self::new(pieces)
    }

    /// Piecewise-linear interpolant through `(xs[i], ys[i])`.
    pub fn from_grid_linear(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Argument(format!(
                "interpolation needs matching grids of length >= 2, got {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        let mut pieces = Vec::with_capacity(xs.len() - 1);
        for i in 0..xs.len() - 1 {
            let slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            pieces.push(Piece {
                lo: xs[i],
                hi: xs[i + 1],
                constant: ys[i] - slope * xs[i],
                slope,
                recip: 0.0,
            });
        }
        Self::new(pieces)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.pieces[0].lo, self.pieces[self.pieces.len() - 1].hi)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// All piece boundaries, including both domain endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().map(|p| p.lo).collect();
        out.push(self.pieces[self.pieces.len() - 1].hi);
        out
    }

    fn piece_index(&self, x: f64) -> usize {
        let idx = self.pieces.partition_point(|p| p.hi <= x);
        idx.min(self.pieces.len() - 1)
    }

    /// Evaluates the function, allowing a hair of slack at the endpoints.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * (hi - lo).max(1.0);
        if x < lo - slack || x > hi + slack {
            return Err(Error::Domain(format!(
                "evaluation point {x} outside domain [{lo}, {hi}]"
            )));
        }
        let x = x.clamp(lo, hi);
        Ok(self.pieces[self.piece_index(x)].value(x))
    }

    /// Exact integral over `[a, b]` within the domain.
    pub fn integral_on(&self, a: f64, b: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * (hi - lo).max(1.0);
        if a > b || a < lo - slack || b > hi + slack {
            return Err(Error::Domain(format!(
                "integration range [{a}, {b}] outside domain [{lo}, {hi}]"
            )));
        }
        let a = a.clamp(lo, hi);
        let b = b.clamp(lo, hi);
        let mut total = 0.0;
        for p in &self.pieces {
            let left = a.max(p.lo);
            let right = b.min(p.hi);
            if left < right {
                total += p.integral(left, right);
            }
        }
        Ok(total)
    }

    /// Exact minimum and maximum over the whole domain.
    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &self.pieces {
            let (a, b) = p.extrema(p.lo, p.hi);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    /// Total length of `{x : value(x) >= target}` (or `> target` when
    /// `strict`), weighted per piece by `weight(piece index)`. Used for
    /// exact pushforward survival masses; strictness only matters on flat
    /// segments sitting exactly at the target, which carry positive mass.
    pub(crate) fn superlevel_weighted(
        &self,
        target: f64,
        strict: bool,
        weight: impl Fn(usize) -> f64,
    ) -> f64 {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| weight(i) * p.superlevel_measure(p.lo, p.hi, target, strict))
            .sum()
    }

    /// Values at which the survival function of a pushforward can change
    /// shape: piece endpoint values plus interior stationary values.
    pub fn distinguished_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.pieces {
            out.push(p.value(p.lo));
            out.push(p.value(p.hi));
            for x in p.critical_points(p.lo, p.hi) {
                out.push(p.value(x));
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    /// Weak monotonicity in the given direction, with absolute slack `tol`.
    pub fn is_monotone(&self, dir: Monotonicity, tol: f64) -> bool {
        let sign = match dir {
            Monotonicity::Increasing => 1.0,
            Monotonicity::Decreasing => -1.0,
        };
        let mut prev = f64::NEG_INFINITY;
        for p in &self.pieces {
            let mut xs = vec![p.lo];
            let mut crits = p.critical_points(p.lo, p.hi);
            crits.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.extend(crits);
            xs.push(p.hi);
            for x in xs {
                let v = sign * p.value(x);
                if v < prev - tol {
                    return false;
                }
                prev = prev.max(v);
            }
        }
        true
    }

    /// Splits both functions over merged breakpoints; requires equal domains.
    fn merged_cells<'a>(&'a self, other: &'a Self) -> Result<Vec<(f64, f64, &'a Piece, &'a Piece)>> {
        let (a0, a1) = self.domain();
        let (b0, b1) = other.domain();
        let slack = 1e-12 * (a1 - a0).abs().max(1.0);
        if (a0 - b0).abs() > slack || (a1 - b1).abs() > slack {
            return Err(Error::Domain(format!(
                "domain mismatch: [{a0}, {a1}] vs [{b0}, {b1}]"
            )));
        }
        let mut cuts = self.breakpoints();
        cuts.extend(other.breakpoints());
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut cells = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            cells.push((
                w[0],
                w[1],
                &self.pieces[self.piece_index(mid)],
                &other.pieces[other.piece_index(mid)],
            ));
        }
        Ok(cells)
    }

    fn pointwise_select(&self, other: &Self, take_max: bool) -> Result<Self> {
        let mut pieces = Vec::new();
        for (lo, hi, p, q) in self.merged_cells(other)? {
            let diff = Piece {
                lo,
                hi,
                constant: p.constant - q.constant,
                slope: p.slope - q.slope,
                recip: p.recip - q.recip,
            };
            let mut cuts = vec![lo];
            cuts.extend(diff.value_roots(0.0, lo, hi));
            cuts.push(hi);
            for w in cuts.windows(2) {
                if w[1] <= w[0] {
                    continue;
                }
                let mid = 0.5 * (w[0] + w[1]);
                let p_wins = (p.value(mid) >= q.value(mid)) == take_max;
                let src = if p_wins { p } else { q };
                pieces.push(Piece { lo: w[0], hi: w[1], ..*src });
            }
        }
        let mut out = Self::new(pieces)?;
        out.compact();
        Ok(out)
    }

    /// Pointwise maximum of two functions on the same domain.
    pub fn pointwise_max(&self, other: &Self) -> Result<Self> {
        self.pointwise_select(other, true)
    }

    /// Pointwise minimum of two functions on the same domain.
    pub fn pointwise_min(&self, other: &Self) -> Result<Self> {
        self.pointwise_select(other, false)
    }

    /// Clamps the function between a lower and an upper function.
    pub fn clamp_between(&self, lower: &Self, upper: &Self) -> Result<Self> {
        self.pointwise_max(lower)?.pointwise_min(upper)
    }

    /// Merges adjacent pieces with identical coefficients.
    fn compact(&mut self) {
        let mut merged: Vec<Piece> = Vec::with_capacity(self.pieces.len());
        for p in self.pieces.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.constant == p.constant && last.slope == p.slope && last.recip == p.recip {
                    last.hi = p.hi;
                    continue;
                }
            }
            merged.push(p);
        }
        self.pieces = merged;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_function_evaluates_by_left_closed_pieces() {
        let f = PiecewiseFn::from_steps(&[0.0, 0.3, 0.7, 1.0], &[0.5, 0.3, 0.8]).unwrap();
        assert_eq!(f.eval(0.0).unwrap(), 0.5);
        assert_eq!(f.eval(0.3).unwrap(), 0.3);
        assert_eq!(f.eval(0.7).unwrap(), 0.8);
        assert_eq!(f.eval(1.0).unwrap(), 0.8);
        assert!(f.eval(1.5).is_err());
    }

    #[test]
    fn reciprocal_integral_matches_log() {
        let f = PiecewiseFn::recip_affine(1.0, 3.0, 2.0, 4.0).unwrap();
        let exact = 2.0 * 2.0 + 4.0 * (3.0f64 / 1.0).ln();
        assert!((f.integral_on(1.0, 3.0).unwrap() - exact).abs() < 1e-14);
    }

    #[test]
    fn reciprocal_piece_must_avoid_zero() {
        assert!(PiecewiseFn::recip_affine(-1.0, 1.0, 0.0, 1.0).is_err());
        assert!(PiecewiseFn::recip_affine(0.5, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn pointwise_max_splits_at_crossings() {
        let f = PiecewiseFn::affine(0.0, 2.0, 0.0, 1.0).unwrap();
        let g = PiecewiseFn::constant(0.0, 2.0, 1.0).unwrap();
        let h = f.pointwise_max(&g).unwrap();
        assert_eq!(h.eval(0.5).unwrap(), 1.0);
        assert_eq!(h.eval(1.5).unwrap(), 1.5);
        assert_eq!(h.min_max(), (1.0, 2.0));
    }

    #[test]
    fn crossing_of_affine_and_reciprocal_is_found() {
        // x and 1/x cross at x = 1
        let f = PiecewiseFn::affine(0.5, 2.0, 0.0, 1.0).unwrap();
        let g = PiecewiseFn::recip_affine(0.5, 2.0, 0.0, 1.0).unwrap();
        let h = f.pointwise_min(&g).unwrap();
        assert!((h.eval(0.8).unwrap() - 0.8).abs() < 1e-12);
        assert!((h.eval(1.6).unwrap() - 1.0 / 1.6).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_sees_interior_stationary_points() {
        // x + 1/x on [0.5, 2] dips at x = 1, so it is not monotone
        let f = PiecewiseFn::new(vec![Piece {
            lo: 0.5,
            hi: 2.0,
            constant: 0.0,
            slope: 1.0,
            recip: 1.0,
        }])
        .unwrap();
        assert!(!f.is_monotone(Monotonicity::Increasing, 1e-9));
        assert!(!f.is_monotone(Monotonicity::Decreasing, 1e-9));
        let g = PiecewiseFn::recip_affine(1.0, 3.0, 1.0, 2.0).unwrap();
        assert!(g.is_monotone(Monotonicity::Decreasing, 1e-9));
    }

    #[test]
    fn superlevel_measure_handles_steps_and_slopes() {
        let f = PiecewiseFn::from_steps(&[0.0, 0.3, 0.7, 1.0], &[0.5, 0.3, 0.8]).unwrap();
        let m = f.superlevel_weighted(0.4, false, |_| 1.0);
        assert!((m - 0.6).abs() < 1e-14);
        let g = PiecewiseFn::affine(0.0, 1.0, 0.0, 1.0).unwrap();
        let m = g.superlevel_weighted(0.25, false, |_| 1.0);
        assert!((m - 0.75).abs() < 1e-14);
    }

    #[test]
    fn min_max_includes_interior_extrema() {
        let f = PiecewiseFn::new(vec![Piece {
            lo: 0.5,
            hi: 2.0,
            constant: 0.0,
            slope: 1.0,
            recip: 1.0,
        }])
        .unwrap();
        let (lo, hi) = f.min_max();
        assert!((lo - 2.0).abs() < 1e-12); // minimum value 2 at x = 1
        assert!((hi - 2.5).abs() < 1e-12); // attained at both endpoints
    }
}
