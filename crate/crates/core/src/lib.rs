//! Numerical toolkit for the first-order Bogoliubov-de Gennes (BdG) equation
//! on metric star graphs.
//!
//! A star graph has `N` bonds joined at one central vertex; every bond is
//! parametrised by `x ∈ [0, L_j]` with `x = 0` at the vertex. On each bond the
//! four-component spinor obeys
//!
//! ```text
//!         ⎛ 0     -i∂ₓ   Δ₀    0   ⎞
//! H_BdG = ⎜ -i∂ₓ   0     0     Δ₀  ⎟ ,   H_BdG Ψ = E Ψ,
//!         ⎜ Δ₀     0     0     i∂ₓ ⎟
//!         ⎝ 0      Δ₀    i∂ₓ   0   ⎠
//! ```
//!
//! with ħ = v_F = 1. Vertex and bond-end conditions are imposed as
//! `A ψ₁ + B ψ₂ = 0` on stacked boundary traces.
//!
//! Modules:
//!
//! * [`graph`]: geometry, dispersion, mode bases and the differential operator.
//! * [`boundary`]: boundary-condition pairs, trace packing, the boundary form
//!   and self-adjointness validation.
//! * [`secular`]: Θ-matrices, secular determinants and the spectral scan.
//! * [`eigen`]: assembled eigen-spinors, currents and normalisation.
//! * [`transmission`]: vertex transmission and bond scattering matrices.
//! * [`majorana`]: zero-energy solutions and the Y-junction fixture.
//! * [`fd`]: an independent finite-difference discretisation used as oracle.
//! * [`export`]: CSV / JSON writers shared with the command-line front end.

pub mod boundary;
pub mod eigen;
pub mod error;
pub mod export;
pub mod fd;
pub mod graph;
pub mod linalg;
pub mod majorana;
pub mod secular;
pub mod transmission;

pub use boundary::{
    build_kirchhoff_zero_mode_bc, skew_form, trace_vectors, validate, BoundaryConditionPair,
    BoundaryTraceVectors, BoundaryValues, ValidationReport, DEFAULT_RANK_TOL,
};
pub use eigen::{current, kirchhoff_residual, normalize, AssembledState};
pub use error::{Error, Result};
pub use graph::{
    bdg_apply, dispersion, Branch, Dispersion, MetricStarGraph, ModeBasis, ModeCoefficients,
    Spinor, SpinorField, SpinorSample,
};
pub use linalg::{CMatrix, CVector};
pub use majorana::{closed_form_y_junction, solve_zero_modes, zero_mode_evaluate, zero_mode_transmission};
pub use num_complex::Complex64;
pub use secular::{
    build_theta_negative, build_theta_positive, find_spectrum, null_space_coefficients,
    secular_det, ScanOptions, ScanOutcome, SpectralResult,
};
pub use transmission::{build_primed, scattering_matrix, transmission_matrix, PrimedMatrices, TransmissionMatrix};
