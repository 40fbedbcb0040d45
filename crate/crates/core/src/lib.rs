//! de Branges spaces built from regular Schrödinger operators on `[0, s]`:
//! spectra, reproducing kernels, Kramer sampling, noise-robust oversampling
//! and aliasing bounds for undersampling.

// Argument guards are negated comparisons so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod kernel;
pub mod numerics;
pub mod output;
pub mod oversampling;
pub mod sampling;
pub mod schrodinger;
pub mod spectrum;
pub mod undersampling;

pub use diagnostics::{BoundReport, BoundSample};
pub use error::{Error, Result};
pub use kernel::{DBFunction, EigenTable};
pub use num_complex::Complex64;
pub use numerics::{Grid, Tolerances};
pub use schrodinger::{Potential, PotentialKind, WaveField};
pub use sampling::SampledFunction;
pub use spectrum::SpectralData;
