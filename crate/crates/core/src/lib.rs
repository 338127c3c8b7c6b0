//! Numerics for anisotropic Hörmander spaces on periodic lattices.
//!
//! Function parameters and interpolation parameters ([`params`]), multiplier
//! weights ([`weights`]), spectral fields and norms ([`spectra`]),
//! interpolation with a function parameter ([`interp`]), condition counts for
//! parabolic problems ([`parabolic`]) and the lifting cutoff ([`traces`]).
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

mod jet;
mod quad;

pub mod interp;
pub mod parabolic;
pub mod params;
pub mod spectra;
pub mod traces;
pub mod trial;
pub mod weights;

pub use num_complex::Complex64;

pub use interp::{AdmissiblePair, DiagonalPair, InterpError, SubspacePair, VerificationReport};
pub use parabolic::{compat_count, in_jump_set, BoundaryKind};
pub use params::{build_psi, reiterate, FunctionParam, InterpParam, ParamError};
pub use spectra::{Lattice, SpectralError, SpectralField};
pub use traces::CutoffProfile;
pub use weights::{Anisotropy, RegularityIndex};

/// Gauss–Legendre rules shared with the std companion crate.
pub mod quadrature {
    pub use crate::quad::{gauss_legendre, integrate};
}
