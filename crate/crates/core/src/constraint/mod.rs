//! Aggregate constraints: filter-aggregate queries combined by an arithmetic
//! expression and compared against a threshold or a closed interval.

mod eval;
mod parser;

pub use eval::{eval_agg_scalar, eval_expr_interval, eval_expr_scalar, AggValue, EvalError};
pub use parser::parse_constraint;

use std::fmt;

use crate::interval::ArithOp;
use crate::query::ComparisonOp;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("syntax error at column {pos}: expected {expected}")]
    Syntax { pos: usize, expected: String },
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("empty range bound: {0} > {1}")]
    EmptyRangeBound(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFn {
    Count,
    Sum,
    Min,
    Max,
    Avg,
}

impl AggFn {
    pub fn name(self) -> &'static str {
        match self {
            AggFn::Count => "count",
            AggFn::Sum => "sum",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Avg => "avg",
        }
    }
}

/// One comparison of a filter conjunction, e.g. `race == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCmp {
    pub attr: String,
    pub op: ComparisonOp,
    pub constant: f64,
}

/// An aggregate over the subset of a query result matching `filter`.
///
/// `avg` never survives parsing: it is rewritten into a sum/count pair, so
/// evaluation and cluster summaries only deal with decomposable functions.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterAggQuery {
    pub id: usize,
    pub func: AggFn,
    pub input_attr: Option<String>,
    pub filter: Vec<FilterCmp>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArithExpr {
    Leaf(usize),
    Const(f64),
    Binary {
        op: ArithOp,
        left: Box<ArithExpr>,
        right: Box<ArithExpr>,
    },
}

impl ArithExpr {
    pub fn binary(op: ArithOp, left: ArithExpr, right: ArithExpr) -> Self {
        ArithExpr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// The comparison side of a constraint: `expr op tau` or `expr in [lo, hi]`
/// with closed endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparison {
    Lt(f64),
    Le(f64),
    Gt(f64),
    Ge(f64),
    InRange(f64, f64),
}

impl Comparison {
    pub fn satisfied(&self, value: f64) -> bool {
        match *self {
            Comparison::Lt(t) => value < t,
            Comparison::Le(t) => value <= t,
            Comparison::Gt(t) => value > t,
            Comparison::Ge(t) => value >= t,
            Comparison::InRange(lo, hi) => lo <= value && value <= hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateConstraint {
    pub expr: ArithExpr,
    pub comparison: Comparison,
    pub aggs: Vec<FilterAggQuery>,
}

/// A conjunction of aggregate constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub constraints: Vec<AggregateConstraint>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<AggregateConstraint>) -> Self {
        assert!(!constraints.is_empty(), "constraint set must be non-empty");
        Self { constraints }
    }

    pub fn single(c: AggregateConstraint) -> Self {
        Self::new(vec![c])
    }
}

fn fmt_cmp_op(op: ComparisonOp) -> &'static str {
    match op {
        ComparisonOp::Lt => "<",
        ComparisonOp::Le => "<=",
        ComparisonOp::Gt => ">",
        ComparisonOp::Ge => ">=",
        ComparisonOp::Eq => "==",
        ComparisonOp::Neq => "!=",
        ComparisonOp::InRange => "in",
    }
}

impl fmt::Display for FilterAggQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.func.name())?;
        let mut wrote = false;
        if let Some(attr) = &self.input_attr {
            write!(f, "{attr}")?;
            wrote = true;
        }
        for (i, c) in self.filter.iter().enumerate() {
            if wrote || i > 0 {
                write!(f, "{}", if i == 0 { ", " } else { " && " })?;
            }
            write!(f, "{} {} {}", c.attr, fmt_cmp_op(c.op), c.constant)?;
        }
        write!(f, ")")
    }
}

impl AggregateConstraint {
    fn fmt_expr(&self, f: &mut fmt::Formatter<'_>, e: &ArithExpr, parent_prec: u8) -> fmt::Result {
        match e {
            ArithExpr::Leaf(id) => write!(f, "{}", self.aggs[*id]),
            ArithExpr::Const(v) => write!(f, "{v}"),
            ArithExpr::Binary { op, left, right } => {
                let prec = match op {
                    ArithOp::Add | ArithOp::Sub => 1,
                    ArithOp::Mul | ArithOp::Div => 2,
                };
                let parens = prec < parent_prec;
                if parens {
                    write!(f, "(")?;
                }
                self.fmt_expr(f, left, prec)?;
                write!(f, " {} ", op.symbol())?;
                // Subtraction and division are left associative; force parens
                // around compound right operands at equal precedence.
                self.fmt_expr(f, right, prec + 1)?;
                if parens {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for AggregateConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_expr(f, &self.expr, 0)?;
        match self.comparison {
            Comparison::Lt(t) => write!(f, " < {t}"),
            Comparison::Le(t) => write!(f, " <= {t}"),
            Comparison::Gt(t) => write!(f, " > {t}"),
            Comparison::Ge(t) => write!(f, " >= {t}"),
            Comparison::InRange(lo, hi) => write!(f, " in [{lo}, {hi}]"),
        }
    }
}
