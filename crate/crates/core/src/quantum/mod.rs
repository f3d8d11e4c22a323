//! Operator calculus over the canonical commutation relations.

mod expr;
mod leibniz;
mod ops;

pub use expr::{OpTerm, OperatorExpression};
pub use leibniz::{
    derivative_path, differentiate_free, expand_left, expand_right, leibniz_residual,
    leibniz_residual_symbol, localize_operators, ResidualReport,
};
pub use ops::{
    ccr_reduce, ccr_reduce_with, classical_limit, commutator, correspondence_check, divide_by_ih,
    from_normal_symbol, normal_symbol, product, quantize, weyl_symbol, CorrespondenceReport,
    OrderingScheme,
};
