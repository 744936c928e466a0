//! Numerical laboratory for short-interval sums of Z′ over the points where
//! θ(t) = πν + π/2, Jacob's-ladder reverse iterations, and the limit
//! functionals built from them.

pub mod dd;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod ladder;
pub mod quadrature;
pub mod roots;
pub mod special_fns;
pub mod sum_asymptotics;
pub mod summation;
pub mod tbar_seq;
pub mod trig_sums;

pub use error::{Error, Result};
pub use functionals::{EquilibriumReport, FermatRational, FunctionalSample};
pub use harness::{Command, OutputFormat, RunConfig, RunOutput};
pub use ladder::{Ladder, LadderChain, LadderConfig, LadderKind, PartitionReport};
pub use quadrature::{QuadratureRule, QuadratureSpec};
pub use special_fns::{EvalConfig, ZValue};
pub use tbar_seq::{Parity, ParityFilter, TbarPoint};
