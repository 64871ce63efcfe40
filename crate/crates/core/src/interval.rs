//! Closed intervals over the extended reals and sound interval arithmetic.
//!
//! Every operation returns an enclosure: whatever scalars are picked from the
//! operand intervals, the scalar result of the operation lies inside the
//! returned interval. Division follows the engine's conventions for zero
//! denominators: `[0,0] / [0,0]` is `[0,0]` (an empty group contributes
//! nothing), a zero-width zero denominator against a nonzero numerator is an
//! error, and a positive-width denominator containing zero widens to
//! `[-inf, +inf]`.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IntervalError {
    #[error("division by the zero interval with a nonzero numerator")]
    DivisionByZeroInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval bounds out of order: [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub const UNBOUNDED: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Smallest interval containing both operands.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> char {
        match self {
            ArithOp::Add => '+',
            ArithOp::Sub => '-',
            ArithOp::Mul => '*',
            ArithOp::Div => '/',
        }
    }
}

// Product that treats 0 * inf as 0, so degenerate zero intervals stay exact
// against unbounded operands.
fn mul_ext(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Sound enclosure of `a op b`.
pub fn interval_apply(op: ArithOp, a: Interval, b: Interval) -> Result<Interval, IntervalError> {
    let (lo, hi) = match op {
        ArithOp::Add => (a.lo + b.lo, a.hi + b.hi),
        ArithOp::Sub => (a.lo - b.hi, a.hi - b.lo),
        ArithOp::Mul => {
            let ps = [
                mul_ext(a.lo, b.lo),
                mul_ext(a.lo, b.hi),
                mul_ext(a.hi, b.lo),
                mul_ext(a.hi, b.hi),
            ];
            (
                ps.iter().copied().fold(f64::INFINITY, f64::min),
                ps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        }
        ArithOp::Div => {
            if b.lo == 0.0 && b.hi == 0.0 {
                if a.lo == 0.0 && a.hi == 0.0 {
                    return Ok(Interval::point(0.0));
                }
                return Err(IntervalError::DivisionByZeroInterval);
            }
            if b.contains(0.0) {
                return Ok(Interval::UNBOUNDED);
            }
            let qs = [a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi];
            (
                qs.iter().copied().fold(f64::INFINITY, f64::min),
                qs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        }
    };
    // Indeterminate endpoint arithmetic (inf - inf, inf / inf) can only come
    // from operands that are themselves unbounded on a side; widening to the
    // unbounded interval stays sound.
    if lo.is_nan() || hi.is_nan() {
        return Ok(Interval::UNBOUNDED);
    }
    Ok(Interval::new(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn division_example_from_count_ratio() {
        let q = interval_apply(
            ArithOp::Div,
            Interval::new(1.0, 2.0),
            Interval::new(1.0, 2.0),
        )
        .unwrap();
        assert_eq!(q, Interval::new(0.5, 2.0));
    }

    #[test]
    fn subtraction_of_zero_point_is_identity() {
        let r =
            interval_apply(ArithOp::Sub, Interval::new(0.5, 2.0), Interval::point(0.0)).unwrap();
        assert_eq!(r, Interval::new(0.5, 2.0));
        let s =
            interval_apply(ArithOp::Add, Interval::new(-3.0, 4.0), Interval::point(0.0)).unwrap();
        assert_eq!(s, Interval::new(-3.0, 4.0));
    }

    #[test]
    fn zero_over_zero_convention() {
        assert_eq!(
            interval_apply(ArithOp::Div, Interval::point(0.0), Interval::point(0.0)),
            Ok(Interval::point(0.0))
        );
        assert_eq!(
            interval_apply(ArithOp::Div, Interval::new(1.0, 2.0), Interval::point(0.0)),
            Err(IntervalError::DivisionByZeroInterval)
        );
        assert_eq!(
            interval_apply(
                ArithOp::Div,
                Interval::new(1.0, 2.0),
                Interval::new(0.0, 3.0)
            ),
            Ok(Interval::UNBOUNDED)
        );
        assert_eq!(
            interval_apply(
                ArithOp::Div,
                Interval::new(1.0, 2.0),
                Interval::new(-1.0, 1.0)
            ),
            Ok(Interval::UNBOUNDED)
        );
    }

    #[test]
    fn multiplication_with_unbounded_operand() {
        let r = interval_apply(ArithOp::Mul, Interval::point(0.0), Interval::UNBOUNDED).unwrap();
        assert_eq!(r, Interval::point(0.0));
    }

    fn small_interval() -> impl Strategy<Value = Interval> {
        (-20i32..=20, 0u32..=15).prop_map(|(lo, width)| {
            let lo = lo as f64 * 0.5;
            Interval::new(lo, lo + width as f64 * 0.5)
        })
    }

    fn op_strategy() -> impl Strategy<Value = ArithOp> {
        prop_oneof![
            Just(ArithOp::Add),
            Just(ArithOp::Sub),
            Just(ArithOp::Mul),
            Just(ArithOp::Div),
        ]
    }

    proptest! {
        // Soundness: any scalar choice inside the operands lands inside the
        // result (respecting the scalar division conventions).
        #[test]
        fn apply_is_sound(
            op in op_strategy(),
            a in small_interval(),
            b in small_interval(),
            ta in 0.0f64..=1.0,
            tb in 0.0f64..=1.0,
        ) {
            let x = a.lo + ta * (a.hi - a.lo);
            let y = b.lo + tb * (b.hi - b.lo);
            if let Ok(enclosure) = interval_apply(op, a, b) {
                let scalar = match op {
                    ArithOp::Add => Some(x + y),
                    ArithOp::Sub => Some(x - y),
                    ArithOp::Mul => Some(x * y),
                    ArithOp::Div if y != 0.0 => Some(x / y),
                    ArithOp::Div if x == 0.0 => Some(0.0),
                    ArithOp::Div => None, // x/0 with x != 0: no defined value
                };
                if let Some(v) = scalar {
                    prop_assert!(enclosure.contains(v),
                        "{x} {} {y} = {v} outside [{}, {}]", op.symbol(), enclosure.lo, enclosure.hi);
                }
            }
        }

        // Monotone widening: enlarging the operands never shrinks the result.
        #[test]
        fn apply_is_monotone(
            op in op_strategy(),
            a in small_interval(),
            b in small_interval(),
            grow in 0.0f64..=3.0,
        ) {
            let a2 = Interval::new(a.lo - grow, a.hi + grow);
            let b2 = Interval::new(b.lo - grow, b.hi + grow);
            if let (Ok(inner), Ok(outer)) =
                (interval_apply(op, a, b), interval_apply(op, a2, b2))
            {
                prop_assert!(inner.subset_of(&outer));
            }
        }
    }
}
