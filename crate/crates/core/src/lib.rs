//! Decides, certifies and numerically cross-checks the asymptotic convergence
//! of positive operator semigroups on finite weighted lattice models.
//!
//! The crate models Banach-lattice structure on weighted `l^p` spaces over a
//! finite atom set, represents positive operators with an explicit
//! kernel-band/singular split, decides divisibility of rational index classes,
//! computes the reversible/stable splitting of bounded positive families and
//! runs a verdict engine whose convergence claims are cross-checked by
//! simulation of the directed net.

pub mod analysis;
pub mod groups;
pub mod jdlg;
pub mod kernels;
pub mod linalg;
pub mod linprog;
pub mod model;
pub mod operator;
pub mod report;
pub mod semigroup;
pub mod space;
pub use analysis::{AnalysisError, AnalysisOptions, VerdictEngine};
pub use groups::{FiniteQuotientHom, GroupError, Rational, RationalGroupClass};
pub use jdlg::{JdlgError, JdlgSplit, TrivialityVerdict};
pub use report::{AnalysisReport, Conclusion, HypothesisStatus};

pub use operator::{MonomialFactorization, OperatorError, SingularTerm, StructuredOperator};
pub use semigroup::{
    Flow, IndexClass, RepresentationKind, SemigroupError, SemigroupRepresentation, Time,
};
pub use space::{Exponent, InducedLattice, LatticeError, LatticeSpace, LatticeVector};
