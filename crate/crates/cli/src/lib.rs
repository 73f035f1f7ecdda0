//! IO companion to `dymax-core`: seeded verification campaigns with
//! deterministic CSV output, a key-value configuration format, and the
//! human-readable tree/step-function text format.

// negated float comparisons reject NaN as well; see dymax-core
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod config;
pub mod textfmt;
