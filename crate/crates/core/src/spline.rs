//! Continuous piecewise-linear functions `ℝ → ℝ` with exact coefficients.
//!
//! A [`LinearSpline`] stores the line that extends to `-∞` plus a sorted list
//! of breakpoints, each carrying the jump in slope at that location. Only
//! slope changes are stored, so every value of the type is continuous.
//!
//! All constructors and operations return canonical splines: breakpoint
//! locations are strictly increasing and no slope delta is zero. Under that
//! invariant the breakpoints are exactly the knots of the function.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplineError {
    #[error("spline has {found} breakpoints, at least {required} required")]
    TooFewBreakpoints { required: usize, found: usize },
    #[error("vector spline must have at least one component")]
    EmptyVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Breakpoint {
    pub x: Rational,
    pub slope_delta: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearSpline {
    initial_slope: Rational,
    initial_intercept: Rational,
    breakpoints: Vec<Breakpoint>,
}

impl LinearSpline {
    /// The affine function `slope·x + intercept`.
    pub fn line(slope: Rational, intercept: Rational) -> Self {
        Self {
            initial_slope: slope,
            initial_intercept: intercept,
            breakpoints: Vec::new(),
        }
    }

    pub fn constant(value: Rational) -> Self {
        Self::line(rational::zero(), value)
    }

    pub fn zero() -> Self {
        Self::constant(rational::zero())
    }

    /// `max(0, x)`.
    pub fn relu_unit() -> Self {
        Self::from_parts(
            rational::zero(),
            rational::zero(),
            [(rational::zero(), rational::one())],
        )
    }

    /// Builds a spline from its leftmost line and `(x, slope_delta)` pairs
    /// given in any order. Pairs at equal `x` are summed and zero deltas are
    /// dropped.
    pub fn from_parts<I>(
        initial_slope: Rational,
        initial_intercept: Rational,
        breakpoints: I,
    ) -> Self
    where
        I: IntoIterator<Item = (Rational, Rational)>,
    {
        let mut merged: BTreeMap<Rational, Rational> = BTreeMap::new();
        for (x, delta) in breakpoints {
            *merged.entry(x).or_insert_with(rational::zero) += delta;
        }
        Self {
            initial_slope,
            initial_intercept,
            breakpoints: collect_nonzero(merged),
        }
    }

    pub fn initial_slope(&self) -> &Rational {
        &self.initial_slope
    }

    /// Value at `x = 0` of the line that extends to `-∞`.
    pub fn initial_intercept(&self) -> &Rational {
        &self.initial_intercept
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn knot_count(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn knots(&self) -> Vec<Rational> {
        self.breakpoints.iter().map(|b| b.x.clone()).collect()
    }

    pub fn final_slope(&self) -> Rational {
        self.breakpoints
            .iter()
            .fold(self.initial_slope.clone(), |s, b| s + &b.slope_delta)
    }

    /// Slopes of the `knot_count() + 1` pieces, left to right.
    pub fn slopes(&self) -> Vec<Rational> {
        let mut slopes = Vec::with_capacity(self.breakpoints.len() + 1);
        let mut current = self.initial_slope.clone();
        slopes.push(current.clone());
        for bp in &self.breakpoints {
            current += &bp.slope_delta;
            slopes.push(current.clone());
        }
        slopes
    }

    /// Function values at each breakpoint, left to right.
    pub fn knot_values(&self) -> Vec<Rational> {
        let mut values = Vec::with_capacity(self.breakpoints.len());
        let mut slope = self.initial_slope.clone();
        let mut prev: Option<(&Rational, Rational)> = None;
        for bp in &self.breakpoints {
            let value = match prev {
                None => &self.initial_slope * &bp.x + &self.initial_intercept,
                Some((px, pv)) => pv + &slope * (&bp.x - px),
            };
            values.push(value.clone());
            slope += &bp.slope_delta;
            prev = Some((&bp.x, value));
        }
        values
    }

    pub fn is_constant(&self) -> bool {
        self.breakpoints.is_empty() && self.initial_slope.is_zero()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut value = &self.initial_slope * x + &self.initial_intercept;
        for bp in self.breakpoints.iter().take_while(|b| &b.x < x) {
            value += &bp.slope_delta * (x - &bp.x);
        }
        value
    }

    /// Exact minimum and maximum of the function over its breakpoints.
    pub fn knot_value_range(&self) -> Result<(Rational, Rational), SplineError> {
        let values = self.knot_values();
        let mut iter = values.into_iter();
        let first = iter.next().ok_or(SplineError::TooFewBreakpoints {
            required: 1,
            found: 0,
        })?;
        Ok(iter.fold((first.clone(), first), |(lo, hi), v| {
            if v < lo {
                (v, hi)
            } else if v > hi {
                (lo, v)
            } else {
                (lo, hi)
            }
        }))
    }

    /// `constant + Σ coefficient·f` over `terms`.
    pub fn affine_combine<'a, I>(terms: I, constant: &Rational) -> Self
    where
        I: IntoIterator<Item = (&'a Rational, &'a LinearSpline)>,
    {
        let mut slope = rational::zero();
        let mut intercept = constant.clone();
        let mut merged: BTreeMap<Rational, Rational> = BTreeMap::new();
        for (coefficient, f) in terms {
            if coefficient.is_zero() {
                continue;
            }
            slope += coefficient * &f.initial_slope;
            intercept += coefficient * &f.initial_intercept;
            for bp in &f.breakpoints {
                *merged.entry(bp.x.clone()).or_insert_with(rational::zero) +=
                    coefficient * &bp.slope_delta;
            }
        }
        Self {
            initial_slope: slope,
            initial_intercept: intercept,
            breakpoints: collect_nonzero(merged),
        }
    }

    pub fn scale(&self, coefficient: &Rational) -> Self {
        Self::affine_combine([(coefficient, self)], &rational::zero())
    }

    /// `x ↦ max(0, f(x))`.
    ///
    /// Breakpoints where `f > 0` survive, those where `f < 0` vanish, and
    /// every strict sign change of `f` adds a breakpoint at the exact root.
    pub fn relu(&self) -> Self {
        // Candidate locations: existing breakpoints plus interior roots of
        // each piece. Between consecutive candidates f has constant sign, so
        // the output there is either f or 0.
        let slopes = self.slopes();
        let values = self.knot_values();
        let n = self.breakpoints.len();
        let mut candidates: Vec<Rational> = Vec::with_capacity(2 * n + 1);
        for piece in 0..=n {
            let slope = &slopes[piece];
            if !slope.is_zero() {
                let root = match piece {
                    0 => -&self.initial_intercept / slope,
                    _ => &self.breakpoints[piece - 1].x - &values[piece - 1] / slope,
                };
                let after_left = piece == 0 || root > self.breakpoints[piece - 1].x;
                let before_right = piece == n || root < self.breakpoints[piece].x;
                if after_left && before_right {
                    candidates.push(root);
                }
            }
            if piece < n {
                candidates.push(self.breakpoints[piece].x.clone());
            }
        }

        if candidates.is_empty() {
            // f is constant.
            return Self::constant(rational::relu(&self.initial_intercept));
        }

        // Output slope on each of the candidates.len() + 1 intervals.
        let probe_points = interval_probes(&candidates);
        let mut output_slopes = Vec::with_capacity(probe_points.len());
        let mut piece = 0;
        for probe in &probe_points {
            while piece < n && self.breakpoints[piece].x < *probe {
                piece += 1;
            }
            // f on the piece containing the probe
            let value = match piece {
                0 => &self.initial_slope * probe + &self.initial_intercept,
                _ => &values[piece - 1] + &slopes[piece] * (probe - &self.breakpoints[piece - 1].x),
            };
            let positive = value.is_positive();
            output_slopes.push(if positive {
                slopes[piece].clone()
            } else {
                rational::zero()
            });
        }

        // f can be positive on the left ray with zero slope, so the slope
        // alone does not decide this.
        let left_positive =
            (&self.initial_slope * &probe_points[0] + &self.initial_intercept).is_positive();
        let (initial_slope, initial_intercept) = if left_positive {
            (self.initial_slope.clone(), self.initial_intercept.clone())
        } else {
            (rational::zero(), rational::zero())
        };
        let breakpoints = candidates
            .into_iter()
            .zip(output_slopes.windows(2))
            .map(|(x, w)| Breakpoint {
                x,
                slope_delta: &w[1] - &w[0],
            })
            .filter(|b| !b.slope_delta.is_zero())
            .collect();
        Self {
            initial_slope,
            initial_intercept,
            breakpoints,
        }
    }

    /// Checks the canonical-form invariants. Always true for values built
    /// through this module's API.
    pub fn is_canonical(&self) -> bool {
        self.breakpoints.iter().all(|b| !b.slope_delta.is_zero())
            && self.breakpoints.windows(2).all(|w| w[0].x < w[1].x)
    }
}

fn collect_nonzero(merged: BTreeMap<Rational, Rational>) -> Vec<Breakpoint> {
    merged
        .into_iter()
        .filter(|(_, delta)| !delta.is_zero())
        .map(|(x, slope_delta)| Breakpoint { x, slope_delta })
        .collect()
}

/// One point strictly inside each of the `len + 1` intervals cut by sorted,
/// distinct `points`.
fn interval_probes(points: &[Rational]) -> Vec<Rational> {
    let one = rational::one();
    let two = rational::int(2);
    let mut probes = Vec::with_capacity(points.len() + 1);
    probes.push(&points[0] - &one);
    for w in points.windows(2) {
        probes.push((&w[0] + &w[1]) / &two);
    }
    probes.push(&points[points.len() - 1] + &one);
    probes
}

/// A `ℝ → ℝᵖ` spline, one [`LinearSpline`] per output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorSpline {
    components: Vec<LinearSpline>,
}

impl VectorSpline {
    pub fn new(components: Vec<LinearSpline>) -> Result<Self, SplineError> {
        if components.is_empty() {
            return Err(SplineError::EmptyVector);
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[LinearSpline] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn eval(&self, x: &Rational) -> Vec<Rational> {
        self.components.iter().map(|f| f.eval(x)).collect()
    }

    /// Sorted union of the knots of all components.
    pub fn knot_union(&self) -> Vec<Rational> {
        let mut all: Vec<Rational> = self
            .components
            .iter()
            .flat_map(|f| f.breakpoints.iter().map(|b| b.x.clone()))
            .collect();
        all.sort();
        all.dedup();
        all
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use alloc::vec;
    use proptest::prelude::*;

    fn sawtooth(n: usize, intercept: Rational) -> LinearSpline {
        // -1, 1/2, -1/2, ... slopes with knots at 0..n-1
        let mut bps = Vec::new();
        for j in 0..n {
            let delta = match j {
                0 => ratio(3, 2),
                j if j % 2 == 1 => int(-1),
                _ => int(1),
            };
            bps.push((int(j as i64), delta));
        }
        LinearSpline::from_parts(int(-1), intercept, bps)
    }

    #[test]
    fn eval_identity_and_relu() {
        let id = LinearSpline::line(int(1), int(0));
        assert_eq!(id.eval(&int(5)), int(5));
        let s = LinearSpline::relu_unit();
        assert_eq!(s.eval(&int(-3)), int(0));
        assert_eq!(s.eval(&int(2)), int(2));
        assert_eq!(s.eval(&int(0)), int(0));
    }

    #[test]
    fn affine_identity_and_cancellation() {
        let f = sawtooth(4, ratio(1, 3));
        assert_eq!(LinearSpline::affine_combine([(&int(1), &f)], &int(0)), f);

        let g = LinearSpline::from_parts(int(0), int(0), [(int(1), int(1))]);
        let h = LinearSpline::from_parts(int(0), int(0), [(int(1), ratio(-2, 3))]);
        let sum = LinearSpline::affine_combine([(&int(2), &g), (&int(3), &h)], &int(0));
        assert!(sum.knots().is_empty());
        assert!(sum.is_constant());
    }

    #[test]
    fn empty_combination_is_constant() {
        let c = LinearSpline::affine_combine(core::iter::empty(), &ratio(7, 2));
        assert_eq!(c, LinearSpline::constant(ratio(7, 2)));
    }

    #[test]
    fn relu_of_identity_is_unit() {
        let id = LinearSpline::line(int(1), int(0));
        assert_eq!(id.relu(), LinearSpline::relu_unit());
        assert_eq!(id.relu().initial_slope(), &int(0));
    }

    #[test]
    fn relu_of_negative_constant_vanishes() {
        let f = LinearSpline::constant(int(-1));
        assert_eq!(f.relu(), LinearSpline::zero());
        assert_eq!(
            LinearSpline::constant(int(3)).relu(),
            LinearSpline::constant(int(3))
        );
    }

    #[test]
    fn relu_of_backward_line() {
        // max(0, 2 - x): slope -1 then flat, knot at 2.
        let f = LinearSpline::line(int(-1), int(2));
        let r = f.relu();
        assert_eq!(r.initial_slope(), &int(-1));
        assert_eq!(r.knots(), vec![int(2)]);
        assert_eq!(r.final_slope(), int(0));
    }

    #[test]
    fn relu_root_on_knot_merges() {
        // x for x < 0, 2x for x > 0: the root sits on the knot.
        let f = LinearSpline::from_parts(int(1), int(0), [(int(0), int(1))]);
        assert_eq!(f.relu(), LinearSpline::relu_unit().scale(&int(2)));
        // |x| is nonnegative and passes through unchanged.
        let abs = LinearSpline::from_parts(int(-1), int(0), [(int(0), int(2))]);
        assert_eq!(abs.relu(), abs);
        // -|x - 1| touches zero at its knot from below: relu is zero.
        let g = LinearSpline::from_parts(int(1), int(-1), [(int(1), int(-2))]);
        assert_eq!(g.relu(), LinearSpline::zero());
    }

    #[test]
    fn relu_zero_piece_introduces_no_interior_knot() {
        // f = 0 on [0, 1], slope -1 left, slope 1 right.
        let f = LinearSpline::from_parts(int(-1), int(0), [(int(0), int(1)), (int(1), int(1))]);
        let r = f.relu();
        assert_eq!(r.knots(), vec![int(0), int(1)]);
        assert_eq!(r.slopes(), vec![int(-1), int(0), int(1)]);
    }

    #[test]
    fn relu_of_shifted_sawtooth_brute_force() {
        // Doubled six-knot sawtooth oscillates in [4, 5]; shifting by -9/2
        // makes it straddle zero. Oracle: count slope changes between
        // consecutive points of a rational grid fine enough that every root
        // and knot lands on a grid node.
        let g = sawtooth(6, int(0)).scale(&int(2));
        let g = LinearSpline::affine_combine([(&int(1), &g)], &int(2 * 2));
        assert_eq!(g.knot_value_range().unwrap(), (int(4), int(5)));
        let shifted = LinearSpline::affine_combine([(&int(1), &g)], &ratio(-9, 2));
        let r = shifted.relu();

        let grid: Vec<Rational> = (-32..=80).map(|i| ratio(i, 8)).collect();
        let ys: Vec<Rational> = grid
            .iter()
            .map(|x| rational::relu(&shifted.eval(x)))
            .collect();
        let slopes: Vec<Rational> = (0..grid.len() - 1)
            .map(|i| (&ys[i + 1] - &ys[i]) / (&grid[i + 1] - &grid[i]))
            .collect();
        let oracle_knots: Vec<Rational> = (1..slopes.len())
            .filter(|&i| slopes[i] != slopes[i - 1])
            .map(|i| grid[i].clone())
            .collect();
        assert_eq!(oracle_knots.len(), 10);
        assert_eq!(r.knots(), oracle_knots);
        // three maxima retained, seven roots created
        let retained = r.knots().iter().filter(|x| g.knots().contains(x)).count();
        assert_eq!((retained, r.knot_count() - retained), (3, 7));
    }

    #[test]
    fn knot_value_range_cases() {
        assert_eq!(
            LinearSpline::relu_unit().knot_value_range().unwrap(),
            (int(0), int(0))
        );
        assert_eq!(
            LinearSpline::line(int(1), int(0)).knot_value_range(),
            Err(SplineError::TooFewBreakpoints {
                required: 1,
                found: 0
            })
        );
        assert_eq!(
            sawtooth(8, ratio(-9, 4) + int(2))
                .knot_value_range()
                .unwrap(),
            (ratio(-1, 4), ratio(1, 4))
        );
    }

    #[test]
    fn vector_spline_rejects_empty() {
        assert_eq!(VectorSpline::new(vec![]), Err(SplineError::EmptyVector));
        let v = VectorSpline::new(vec![LinearSpline::relu_unit(), sawtooth(3, int(0))]).unwrap();
        assert_eq!(v.knot_union(), vec![int(0), int(1), int(2)]);
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-40i64..=40, 1i64..=6).prop_map(|(n, d)| ratio(n, d))
    }

    fn arb_spline() -> impl Strategy<Value = LinearSpline> {
        (
            arb_rational(),
            arb_rational(),
            proptest::collection::vec((arb_rational(), arb_rational()), 0..8),
        )
            .prop_map(|(s, b, bps)| LinearSpline::from_parts(s, b, bps))
    }

    proptest! {
        #[test]
        fn combine_is_pointwise_linear(
            f in arb_spline(), g in arb_spline(),
            a in arb_rational(), b in arb_rational(), c in arb_rational(),
            x in arb_rational(),
        ) {
            let h = LinearSpline::affine_combine([(&a, &f), (&b, &g)], &c);
            prop_assert!(h.is_canonical());
            prop_assert_eq!(h.eval(&x), &a * f.eval(&x) + &b * g.eval(&x) + &c);
            for k in f.knots().iter().chain(g.knots().iter()) {
                prop_assert_eq!(h.eval(k), &a * f.eval(k) + &b * g.eval(k) + &c);
            }
        }

        #[test]
        fn relu_is_pointwise_max(f in arb_spline(), xs in proptest::collection::vec(arb_rational(), 1..10)) {
            let r = f.relu();
            prop_assert!(r.is_canonical());
            let probes: Vec<Rational> = xs.iter().cloned().chain(f.knots()).chain(r.knots()).collect();
            for x in probes {
                prop_assert_eq!(r.eval(&x), rational::relu(&f.eval(&x)));
            }
        }

        #[test]
        fn relu_knot_budget_and_idempotence(f in arb_spline()) {
            let r = f.relu();
            prop_assert!(r.knot_count() <= 2 * f.knot_count() + 1);
            prop_assert_eq!(r.relu(), r);
        }

        #[test]
        fn knot_values_match_eval(f in arb_spline()) {
            let values = f.knot_values();
            for (bp, v) in f.breakpoints().iter().zip(values) {
                prop_assert_eq!(f.eval(&bp.x), v);
            }
        }
    }
}
