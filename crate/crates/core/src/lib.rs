//! # sbm-gft
//!
//! Instance-independent Fourier transforms for signals on graphs sampled from
//! stochastic block models (SBMs).
//!
//! The eigenbasis of the N×N model matrix `W = D A Dᵀ` is obtained from the
//! n×n weighted probability matrix `A_μ = √M A √M` and lifted through the
//! isometry `V = N^{-1/2} D M^{-1/2}`. When the probability matrix is a Cayley
//! matrix on a finite Abelian group, characters of the group give closed-form
//! eigenvectors, and the effect of non-uniform block sizes can be analysed
//! through the reduced system `M̃Γ`.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`group_harmonics`] | finite Abelian groups, characters, Cayley matrices |
//! | [`sbm_model`] | SBM specifications, `M`, `A_μ`, `D`, `V`, `W`, graph sampling |
//! | [`spectral`] | dense and Lanczos eigensolvers, eigenvalue groups, subspace distances |
//! | [`fourier`] | the SBM-driven transform, graph FT, step embedding, Cayley bases |
//! | [`perturbation`] | block-size perturbation bounds and their empirical validation |
//! | [`experiments`] | reproducible Z₅ experiment runners used by the CLI |
//!
//! ```
//! use sbm_gft::{fourier::SbmFourierBasis, sbm_model::SbmSpec, spectral::Tolerances};
//! use nalgebra::DMatrix;
//!
//! let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
//! let spec = SbmSpec::new(a, vec![0.75, 0.25], 4).unwrap();
//! let basis = SbmFourierBasis::new(&spec, &Tolerances::default()).unwrap();
//! // W is the adjacency matrix of the star K_{1,3}.
//! let w = basis.w_eigenvalues();
//! assert!((w[0] - 3f64.sqrt()).abs() < 1e-12);
//! assert!((w[1] + 3f64.sqrt()).abs() < 1e-12);
//! ```

pub mod error;
pub mod experiments;
pub mod fourier;
pub mod group_harmonics;
pub mod io;
pub mod perturbation;
pub mod sbm_model;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex graph signal.
pub type Signal = nalgebra::DVector<Complex64>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
