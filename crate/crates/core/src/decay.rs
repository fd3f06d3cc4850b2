//! Post-processing of energy curves against logarithmic decay bounds, and
//! the resolvent-growth to decay-rate table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resolvent::{GrowthFit, GrowthModel};
use crate::semigroup::EvolutionResult;

/// Relative tolerance of the monotonicity audit.
pub const MONOTONE_RTOL: f64 = 1e-9;
/// Allowed growth of the windowed maximum between `[T/4, T/2]` and `[T/2, T]`.
pub const STABILITY_TOL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub p: f64,
    /// `max E(t)·log(2+t)^p / ref_norm` over the window.
    pub c_star: f64,
    /// Time at which `c_star` is attained.
    pub t_star: f64,
    pub window: (f64, f64),
    /// Squared reference norm of the initial data.
    pub ref_norm: f64,
    pub bound_satisfied: bool,
}

impl DecayFit {
    pub fn attained_at_window_start(&self) -> bool {
        self.t_star == self.window.0
    }
}

/// `q(t) = E(t)·log(2+t)^p / ref`.
pub fn scaled_energy(result: &EvolutionResult, p: f64) -> Vec<f64> {
    let r = result.initial_sobolev.powi(2);
    result.times.iter().zip(&result.energies).map(|(&t, &e)| e * (2.0 + t).ln().powf(p) / r).collect()
}

/// Default window start.
pub const WINDOW_START: f64 = 1.0;

/// Fit over `[1, T]` (every recorded time when `T < 1`).
pub fn fit_log_decay(result: &EvolutionResult, p: f64) -> Result<DecayFit> {
    let hi = result.times.last().copied().unwrap_or(0.0);
    let lo = if hi >= WINDOW_START { WINDOW_START } else { result.times.first().copied().unwrap_or(0.0) };
    fit_log_decay_window(result, p, lo, hi)
}

pub fn fit_log_decay_window(result: &EvolutionResult, p: f64, lo: f64, hi: f64) -> Result<DecayFit> {
    let ref_norm = result.initial_sobolev.powi(2);
    if !(ref_norm > 0.0) || !ref_norm.is_finite() {
        return Err(Error::HypothesisFailed("initial data has zero reference norm".into()));
    }
    let q = scaled_energy(result, p);
    let (t_star, c_star) = result
        .times
        .iter()
        .zip(&q)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .fold((f64::NAN, f64::NEG_INFINITY), |best, (&t, &v)| if v > best.1 { (t, v) } else { best });
    if t_star.is_nan() {
        return Err(Error::EmptyWindow(format!("no samples in [{lo}, {hi}]")));
    }
    let window_start = result.times.iter().copied().find(|&t| t >= lo).unwrap_or(lo);
    Ok(DecayFit {
        p,
        c_star,
        t_star,
        window: (window_start, hi),
        ref_norm,
        bound_satisfied: c_star.is_finite() && c_star >= 0.0,
    })
}

/// Windowed maxima of `E(t)·log(2+t)^p / ref` on `[T/4, T/2]` and `[T/2, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub early_max: f64,
    pub late_max: f64,
    /// `late_max / early_max`.
    pub ratio: f64,
    pub stable: bool,
}

pub fn bound_stability(result: &EvolutionResult, p: f64) -> Result<StabilityReport> {
    let t_end = result.times.last().copied().unwrap_or(0.0);
    let early = fit_log_decay_window(result, p, t_end / 4.0, t_end / 2.0)?;
    let late = fit_log_decay_window(result, p, t_end / 2.0, t_end)?;
    let ratio = late.c_star / early.c_star;
    Ok(StabilityReport {
        early_max: early.c_star,
        late_max: late.c_star,
        ratio,
        stable: ratio <= 1.0 + STABILITY_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecayPrediction {
    pub model: GrowthModel,
    pub k: u32,
    /// `‖e^{tA}(Id − A)^{-k}‖ ≲ log(2+t)^{-semigroup_exponent}`.
    pub semigroup_exponent: u32,
    /// Exponent for the energy, a squared norm.
    pub energy_exponent: u32,
}

/// Decay exponents implied by a resolvent growth model.
pub fn burq_exponents(model: GrowthModel, k: u32) -> DecayPrediction {
    let semigroup_exponent = match model {
        GrowthModel::Exp => k,
        GrowthModel::ExpSqrt => 2 * k,
    };
    DecayPrediction { model, k, semigroup_exponent, energy_exponent: 2 * semigroup_exponent }
}

pub fn burq_prediction(fit: &GrowthFit, k: u32) -> DecayPrediction {
    burq_exponents(fit.model, k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub monotone: bool,
    /// Largest increase `E[i+1] − E[i]` relative to `E[0]` (0 if none).
    pub max_violation: f64,
    /// Index `i + 1` of the worst increase.
    pub index: Option<usize>,
}

/// Energies nonincreasing up to `MONOTONE_RTOL·E[0]`.
pub fn check_monotone(result: &EvolutionResult) -> MonotoneReport {
    check_monotone_series(&result.energies)
}

pub fn check_monotone_series(energies: &[f64]) -> MonotoneReport {
    let scale = energies.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    let mut index = None;
    for (i, w) in energies.windows(2).enumerate() {
        let up = (w[1] - w[0]) / scale;
        if up > worst {
            worst = up;
            index = Some(i + 1);
        }
    }
    MonotoneReport { monotone: worst <= MONOTONE_RTOL, max_violation: worst, index }
}
