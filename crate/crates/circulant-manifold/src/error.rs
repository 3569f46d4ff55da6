//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Malformed expression text; `offset` is the byte position in the input.
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    /// An identifier was used as a function but is not one of the known functions.
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { offset: usize, name: String },

    /// A coordinate identifier outside `x1..x4`.
    #[error("variable index out of range at offset {offset}: `{name}` (coordinates are x1..x4)")]
    VariableIndex { offset: usize, name: String },

    /// A named constant was referenced but never bound to a value.
    #[error("unbound constant `{0}`")]
    UnboundConstant(String),

    /// Arithmetic left the function's domain (ln of a non-positive value,
    /// division by zero, ...). Reported instead of propagating NaN.
    #[error("domain error: {0}")]
    Domain(String),

    /// A point with a non-finite coordinate.
    #[error("point has a non-finite coordinate")]
    NonFinitePoint,

    /// Malformed metric specification file.
    #[error("metric file error on line {line}: {message}")]
    MetricFile { line: usize, message: String },

    /// Point rejected by the metric's domain constraints.
    #[error("point {point} outside domain: constraint `{constraint}` violated")]
    OutsideDomain { point: String, constraint: String },

    /// The positivity chain A > C > B > 0 failed at a point.
    #[error("coefficient ordering {relation} violated at point {point}: {lhs} = {lhs_value}, {rhs} = {rhs_value}")]
    Ordering {
        relation: &'static str,
        lhs: &'static str,
        rhs: &'static str,
        lhs_value: f64,
        rhs_value: f64,
        point: String,
    },

    /// Matrix inversion failed.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Rejection sampling found no admitted point within the retry budget.
    #[error("empty sample: no admitted point found in {attempts} attempts")]
    EmptySample { attempts: usize },

    #[error("{0}")]
    Io(String),
}
