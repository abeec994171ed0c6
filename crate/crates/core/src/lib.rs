//! Return-time and hitting-time `L^q` spectra of finite-memory Gibbs
//! processes over a finite alphabet.
//!
//! The crate computes, for a stationary process given by a finite-memory
//! potential, the theoretical spectra (pressure, `L^q` spectrum, Rényi
//! entropies, min-entropy, the critical exponent `q*`, return-time and
//! hitting-time spectra), the large-deviation rate functions of
//! `(1/n) log R_n`, and checks them against exact finite-`n` computations
//! (a pattern automaton coupled with the Markov state) and seeded Monte
//! Carlo simulation.
//!
//! ```
//! use lqreturn::{ModelSpec, PotentialModel, spectra};
//!
//! let spec = ModelSpec::bernoulli(&[2.0 / 3.0, 1.0 / 3.0]);
//! let model = PotentialModel::normalize(&spec).unwrap();
//! let crit = spectra::q_star(&model).unwrap();
//! assert!((crit.q_star + 0.672814).abs() < 1e-4);
//! ```

pub mod error;
pub mod gamma_bounds;
pub mod ldp;
pub mod model;
pub mod montecarlo;
pub mod reduce;
pub mod return_exact;
pub mod spectra;
pub mod words;

mod cycle;
mod perron;

pub use error::{Error, Result};
pub use ldp::{RateFunction, RateKind, RateValue};
pub use model::{ModelKind, ModelSpec, PotentialModel};
pub use montecarlo::{EmpiricalLaw, SimConfig};
pub use return_exact::{LawMode, Moment, ReturnLaw, ZetaValue};
pub use spectra::{CriticalPoint, CurveKind, SpectrumCurve};
pub use words::{Period, Word, WordSpace};
