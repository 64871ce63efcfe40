//! Exact scalar and sound interval evaluation of constraint expressions.

use thiserror::Error;

use super::{AggFn, ArithExpr, FilterAggQuery};
use crate::dataset::Dataset;
use crate::interval::{interval_apply, ArithOp, Interval, IntervalError};

/// Result of a filter-aggregate query. `Empty` is the min/max of zero rows;
/// an expression touching an `Empty` leaf makes the candidate invalid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggValue {
    Num(f64),
    Empty,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("division of a nonzero value by zero")]
    UndefinedDivision,
    #[error("no binding for aggregate {0}")]
    UnboundAggregate(usize),
    #[error("aggregate {0} is empty (min/max over no rows)")]
    EmptyAggregate(usize),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// Exact aggregate over the rows (of `ds`) that satisfy `agg.filter`.
///
/// `count` and `sum` of nothing are 0; `min`/`max` of nothing are `Empty`.
pub fn eval_agg_scalar(agg: &FilterAggQuery, ds: &Dataset, rows: &[u32]) -> AggValue {
    let filter: Vec<(usize, &super::FilterCmp)> = agg
        .filter
        .iter()
        .map(|c| (ds.attr_index(&c.attr).expect("validated attribute"), c))
        .collect();
    let input_col = agg
        .input_attr
        .as_deref()
        .map(|a| ds.attr_index(a).expect("validated attribute"));

    let mut count = 0u64;
    let mut sum = 0.0f64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &row in rows {
        let row = row as usize;
        if !filter
            .iter()
            .all(|(col, c)| c.op.test(ds.value(row, *col), c.constant))
        {
            continue;
        }
        count += 1;
        if let Some(col) = input_col {
            let v = ds.value(row, col);
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
    }
    match agg.func {
        AggFn::Count => AggValue::Num(count as f64),
        AggFn::Sum => AggValue::Num(sum),
        AggFn::Min if count > 0 => AggValue::Num(min),
        AggFn::Max if count > 0 => AggValue::Num(max),
        AggFn::Avg if count > 0 => AggValue::Num(sum / count as f64),
        _ => AggValue::Empty,
    }
}

/// Evaluates `expr` with one scalar binding per aggregate id.
///
/// Division by zero yields 0 when the numerator is 0 (an empty group
/// contributes nothing) and is an error otherwise.
pub fn eval_expr_scalar(expr: &ArithExpr, bindings: &[AggValue]) -> Result<f64, EvalError> {
    match expr {
        ArithExpr::Const(v) => Ok(*v),
        ArithExpr::Leaf(id) => match bindings.get(*id) {
            Some(AggValue::Num(v)) => Ok(*v),
            Some(AggValue::Empty) => Err(EvalError::EmptyAggregate(*id)),
            None => Err(EvalError::UnboundAggregate(*id)),
        },
        ArithExpr::Binary { op, left, right } => {
            let l = eval_expr_scalar(left, bindings)?;
            let r = eval_expr_scalar(right, bindings)?;
            match op {
                ArithOp::Add => Ok(l + r),
                ArithOp::Sub => Ok(l - r),
                ArithOp::Mul => Ok(l * r),
                ArithOp::Div => {
                    if r == 0.0 {
                        if l == 0.0 {
                            Ok(0.0)
                        } else {
                            Err(EvalError::UndefinedDivision)
                        }
                    } else {
                        Ok(l / r)
                    }
                }
            }
        }
    }
}

/// Evaluates `expr` with one interval binding per aggregate id. The result
/// encloses every scalar evaluation with bindings drawn from the intervals.
pub fn eval_expr_interval(expr: &ArithExpr, bindings: &[Interval]) -> Result<Interval, EvalError> {
    match expr {
        ArithExpr::Const(v) => Ok(Interval::point(*v)),
        ArithExpr::Leaf(id) => bindings
            .get(*id)
            .copied()
            .ok_or(EvalError::UnboundAggregate(*id)),
        ArithExpr::Binary { op, left, right } => {
            let l = eval_expr_interval(left, bindings)?;
            let r = eval_expr_interval(right, bindings)?;
            Ok(interval_apply(*op, l, r)?)
        }
    }
}
