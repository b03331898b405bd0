//! Generalized sumcheck over an abstract polynomial structure.
//!
//! The protocol in [`protocol`] is written against the
//! [`PolynomialStructure`](structure::PolynomialStructure) interface; the
//! [`mpoly`] module supplies sparse multivariate polynomials over a prime
//! field as the concrete instance. [`adversary`] and [`analysis`] measure
//! how often dishonest provers get through.
//!
//! ```
//! use sumcheck_core::prelude::*;
//!
//! let m = Modulus::new(5).unwrap();
//! let s = MPolyStructure::new(m);
//! let p = MultiPoly::var(m, 1).add(&MultiPoly::var(m, 2)).unwrap();
//! let inst = SumcheckInstance::new(&s, vec![m.zero(), m.one()], p, m.elem(4)).unwrap();
//! let sched = [(1, m.elem(3)), (2, m.elem(2))];
//! let (accept, _) = sumcheck_run(&s, &HonestProver, (), &inst, &m.zero(), &sched, RunMode::Full).unwrap();
//! assert!(accept);
//! ```

pub mod adversary;
pub mod analysis;
pub mod doc;
pub mod error;
pub mod field;
pub mod mpoly;
pub mod protocol;
pub mod structure;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::adversary::{RandomValid, RootPlanting, Strategy, SumFixConstant};
    pub use crate::analysis::{
        bound_report, exact_acceptance, generate_instance, membership, monte_carlo_acceptance, soundness_bound,
        AnalysisConfig, ExactProbability, Execution, GenParams, InstanceKind, ReportMode,
    };
    pub use crate::doc::InstanceDocument;
    pub use crate::error::{Error, Result};
    pub use crate::field::{Fe, Modulus};
    pub use crate::mpoly::{Monomial, MultiPoly, UniPoly, Var};
    pub use crate::protocol::{
        sumcheck_as_generic, sumcheck_run, HonestProver, Prover, RunMode, SumcheckInstance, Transcript,
    };
    pub use crate::structure::{MPolyStructure, PolynomialStructure};
}
