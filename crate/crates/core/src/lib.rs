//! Numerical toolkit for the stability of the quantum data processing
//! inequality under conditional expectations onto matrix subalgebras.
//!
//! The crate covers dense Hermitian linear algebra, unital *-subalgebras of
//! `M_n(ℂ)` and their structure, relative entropy and related functionals,
//! the Accardi–Cecchini coarse graining and Petz recovery maps, lower bounds
//! on the entropy gap, the fixed-point algebra that parametrizes all equality
//! cases, GNS projections, a classical oracle and a strong subadditivity suite,
//! plus a seeded sweep harness.

pub mod algebra;
pub mod classical;
pub mod config;
pub mod error;
pub mod gns;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod recovery;
pub mod rng;
pub mod stability;
pub mod states;
pub mod structure;
pub mod superop;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenSystem, HermitianMatrix, SpectralFn};
pub use algebra::{FactorDecomposition, Subalgebra};
pub use states::{DensityMatrix, Entropy, PairSpectra, RelModular};
pub use superop::Superoperator;
pub use recovery::{PairContext, PetzResiduals, RecoveryContext};
