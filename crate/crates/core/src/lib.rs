//! Spectral laboratory for damped wave and Schrödinger equations on compact
//! 1-D domains and 2-D rectangles with rough metrics.
//!
//! The pipeline is: [`geometry`] assembles P1 finite-element matrices for the
//! Laplace–Beltrami operator, [`spectral`] turns them into a mass-orthonormal
//! eigenbasis, [`damping`] builds damping profiles (including fat Cantor
//! supports), [`semigroup`] evolves the wave and Schrödinger semigroups in
//! spectral coordinates, [`resolvent`] scans resolvent norms along the
//! imaginary axis, [`inequalities`] estimates observability and Poincaré
//! constants and [`decay`] compares energy curves with logarithmic bounds.
//! The [`cli`] module wires everything into reproducible batch runs.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod damping;
pub mod decay;
pub mod error;
pub mod geometry;
pub mod inequalities;
pub mod linalg;
pub mod resolvent;
pub mod semigroup;
pub mod spectral;


pub use cli::{parse_config, run, RunConfig, RunManifest, Task};
pub use damping::{build_damping, damping_bounds, fat_cantor, DampingProfile, DampingSpec, Region};
pub use decay::{
    bound_stability, burq_exponents, burq_prediction, check_monotone, check_monotone_series, fit_log_decay,
    fit_log_decay_window, scaled_energy, DecayFit, DecayPrediction, MonotoneReport, StabilityReport,
};
pub use error::{Error, Result};
pub use geometry::{assemble, damping_matrix, Boundary, DiscreteOperator, DomainSpec, MetricSpec, Shape};
pub use inequalities::{
    constant_curve, fit_spectral_constants, helmholtz_estimate, poincare_constant, poincare_quotient,
    spectral_constant, unique_continuation_check, ConstantCurve, ConstantPoint, ContinuationReport,
    HelmholtzEstimate, Observability, ObservationSet, ObservationSpec, PoincareConstant,
};
pub use resolvent::{
    affine_upper_envelope, fit_growth, fit_growth_window, helmholtz_solve, knee, required_grid_points,
    required_spacing, resolvent_norm, resolvent_point, scan_m, GrowthFit, GrowthModel, ResolventPoint,
    ResolventScan,
};
pub use semigroup::{
    cayley_propagator, evolve_oracle, evolve_stepped, evolve_stepped_with, log_times, neumann_quotient,
    random_state, schrodinger_energy, schrodinger_generator, wave_energy, wave_generator, EquationKind,
    EvolutionResult, Generator, Method, StepOptions,
};
pub use spectral::{
    eigendecompose, frequency_filter, frequency_filter_with, sobolev_norm, FilterMode, SpectralBasis,
    SpectralCoefficients,
};

pub use num_complex::Complex64;
