//! Rabi spectroscopy of spin-polarized fermions in tightly confining
//! optical-lattice traps.
//!
//! Atoms frozen into single tubes of a deep lattice interact only through
//! the s-wave channel of the electronic singlet, which is reachable from
//! the initially spin-polarized gas only because the probe drives each
//! axial vibrational mode with a slightly different Rabi frequency. The
//! resulting interaction sidebands (ISB) are modeled here at three levels:
//!
//! * [`spinmodel`] — exact unitary dynamics of N pseudo-spins and the
//!   collective-mode sideband decomposition of the lineshape,
//! * [`thermal`] — finite-temperature two-atom lineshapes, both as
//!   Boltzmann-weighted mode sums and as a closed-form ISB profile,
//! * [`ensemble`] — averaging over the lattice-site distribution with the
//!   Gaussian intensity profile of the lattice beams.
//!
//! [`overlap`] carries the axial-mode overlap integrals and the thermal
//! renormalization of the interaction strength; [`analysis`] holds the
//! standard data-reduction pipeline (binning, reflect-and-subtract,
//! Lorentzian centering) and the least-squares extraction of the singlet
//! scattering length.
//!
//! The crate is `no_std`-compatible (requires `alloc`); all transcendental
//! math goes through `libm` so results are bit-identical across platforms.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod constants;
pub mod ensemble;
pub mod error;
pub mod linalg;
mod math;
pub mod overlap;
pub mod quadrature;
pub mod rng;
pub mod spinmodel;
pub mod thermal;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    from_angular, lamb_dicke, to_angular, Direction, DriveParams, ModeConfiguration, Spectrum,
    SpectrumPoint, ThermalState, TrapGeometry,
};
