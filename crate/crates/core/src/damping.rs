//! Damping profiles `a(x) ≥ 0` and the constants `α`, `β`, `F` of the
//! sandwich `α·1_F ≤ a ≤ β`.
//!
//! Profiles depend on the first coordinate only; on rectangles they are
//! stripes. Indicator-type profiles (interval unions, fat Cantor sets) keep
//! their exact geometric support so that measures are computed exactly
//! rather than up to a mesh cell per boundary point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Axis, DiscreteOperator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingSpec {
    Constant { value: f64 },
    /// `level` on a finite union of closed intervals, zero elsewhere.
    IntervalUnion { intervals: Vec<(f64, f64)>, level: f64 },
    /// Smooth compactly supported bump of full support `width`.
    Bump { center: f64, width: f64, height: f64 },
    /// `height` on the stage-`level` Smith–Volterra–Cantor set of measure
    /// `measure`.
    FatCantor { level: u32, measure: f64, height: f64 },
}

/// Finite union of closed intervals on the first axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub intervals: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Self { intervals: merged }
    }

    pub fn whole(length: f64) -> Self {
        Self { intervals: vec![(0.0, length)] }
    }

    pub fn contains(&self, x: f64) -> bool {
        let tol = 1e-12 * (1.0 + x.abs());
        self.intervals.iter().any(|&(a, b)| x >= a - tol && x <= b + tol)
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Covered fraction of every element of `axis`.
    pub fn element_fractions(&self, axis: &Axis) -> Vec<f64> {
        axis.elements
            .iter()
            .map(|el| {
                let covered: f64 = self
                    .intervals
                    .iter()
                    .map(|&(a, b)| (b.min(el.x1) - a.max(el.x0)).max(0.0))
                    .sum();
                (covered / el.length()).clamp(0.0, 1.0)
            })
            .collect()
    }
}

/// Stage-`level` Smith–Volterra–Cantor set in `[0, length]` with measure
/// exactly `measure`.
///
/// At stage `j` a centred open interval of length `4^{-j}·L_base` is removed
/// from each of the `2^{j-1}` remaining pieces. `L_base` is chosen so that the
/// pieces left after the last stage have total length `measure`.
pub fn fat_cantor(length: f64, level: u32, measure: f64) -> Result<Region> {
    if !(measure > 0.0 && measure < length) {
        return Err(Error::DampingSpec(format!(
            "fat Cantor measure must lie in (0, {length}), got {measure}"
        )));
    }
    if level == 0 || level > 24 {
        return Err(Error::DampingSpec(format!("fat Cantor level must be in 1..=24, got {level}")));
    }
    let removed_fraction_sum = 0.5 * (1.0 - 0.5f64.powi(level as i32));
    let base = (length - measure) / removed_fraction_sum;
    let mut pieces = vec![(0.0, length)];
    for j in 1..=level {
        let gap = base * 0.25f64.powi(j as i32);
        let mut next = Vec::with_capacity(2 * pieces.len());
        for &(a, b) in &pieces {
            if gap >= b - a {
                return Err(Error::DampingSpec(format!("stage {j} gap {gap} does not fit in piece of length {}", b - a)));
            }
            let c = 0.5 * (a + b);
            next.push((a, c - 0.5 * gap));
            next.push((c + 0.5 * gap, b));
        }
        pieces = next;
    }
    Ok(Region { intervals: pieces })
}

fn bump_value(x: f64, center: f64, width: f64, height: f64) -> f64 {
    let r = (x - center) / (0.5 * width);
    if r.abs() >= 1.0 {
        0.0
    } else {
        height * (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// Nodal damping values with their structural constants.
#[derive(Clone, Debug, PartialEq)]
pub struct DampingProfile {
    pub spec: DampingSpec,
    /// Values at every mesh node (not only free dofs).
    pub nodal: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// Nodes where `a ≥ α`.
    pub f_mask: Vec<bool>,
    pub vol_f: f64,
    /// Riemannian measure of `{a > 0}`.
    pub vol_support: f64,
    /// Exact support for indicator-type profiles.
    pub support: Option<Region>,
    /// Covered fraction of each x-element by `F`.
    pub f_fractions: Vec<f64>,
}

pub fn build_damping(spec: &DampingSpec, op: &DiscreteOperator) -> Result<DampingProfile> {
    let length = op.domain.x_length();
    let (support, height): (Option<Region>, f64) = match spec {
        DampingSpec::Constant { value } => {
            if *value < 0.0 || !value.is_finite() {
                return Err(Error::NegativeDamping(*value));
            }
            (None, *value)
        }
        DampingSpec::IntervalUnion { intervals, level } => {
            if *level < 0.0 || !level.is_finite() {
                return Err(Error::NegativeDamping(*level));
            }
            if intervals.iter().any(|&(a, b)| !(a <= b)) {
                return Err(Error::DampingSpec("intervals must satisfy a <= b".into()));
            }
            let clipped = intervals.iter().map(|&(a, b)| (a.max(0.0), b.min(length))).filter(|(a, b)| a <= b).collect();
            (Some(Region::new(clipped)), *level)
        }
        DampingSpec::Bump { width, height, .. } => {
            if *height < 0.0 || !height.is_finite() {
                return Err(Error::NegativeDamping(*height));
            }
            if !(*width > 0.0) {
                return Err(Error::DampingSpec(format!("bump width must be positive, got {width}")));
            }
            (None, *height)
        }
        DampingSpec::FatCantor { level, measure, height } => {
            if *height < 0.0 || !height.is_finite() {
                return Err(Error::NegativeDamping(*height));
            }
            (Some(fat_cantor(length, *level, *measure)?), *height)
        }
    };
    let value_at = |x: f64| -> f64 {
        match spec {
            DampingSpec::Constant { value } => *value,
            DampingSpec::Bump { center, width, height } => bump_value(x, *center, *width, *height),
            _ => {
                if support.as_ref().is_some_and(|r| r.contains(x)) {
                    height
                } else {
                    0.0
                }
            }
        }
    };
    let nodal: Vec<f64> = op.nodes().iter().map(|p| value_at(p[0])).collect();
    let mut profile = DampingProfile {
        spec: spec.clone(),
        nodal,
        alpha: 0.0,
        beta: 0.0,
        f_mask: vec![false; op.n_nodes()],
        vol_f: 0.0,
        vol_support: 0.0,
        support: if height > 0.0 { support } else { None },
        f_fractions: vec![0.0; op.x_axis().elements.len()],
    };
    profile.compute_bounds(op)?;
    Ok(profile)
}

impl DampingProfile {
    /// Builds a profile from raw nodal values (all mesh nodes).
    pub fn from_nodal(op: &DiscreteOperator, nodal: Vec<f64>) -> Result<Self> {
        if nodal.len() != op.n_nodes() {
            return Err(Error::Mismatch(format!("{} nodal values for {} nodes", nodal.len(), op.n_nodes())));
        }
        if let Some(&v) = nodal.iter().find(|&&v| v < 0.0 || v.is_nan()) {
            return Err(Error::NegativeDamping(v));
        }
        let mut p = DampingProfile {
            spec: DampingSpec::Constant { value: f64::NAN },
            nodal,
            alpha: 0.0,
            beta: 0.0,
            f_mask: vec![false; op.n_nodes()],
            vol_f: 0.0,
            vol_support: 0.0,
            support: None,
            f_fractions: vec![0.0; op.x_axis().elements.len()],
        };
        p.compute_bounds(op)?;
        Ok(p)
    }

    pub fn is_trivial(&self) -> bool {
        self.beta == 0.0
    }

    /// Damping values on the x-axis nodes; in 2-D the profile must be
    /// constant along y.
    pub fn x_profile(&self, op: &DiscreteOperator) -> Result<Vec<f64>> {
        let nx = op.x_axis().n_nodes();
        if self.nodal.len() != op.n_nodes() {
            return Err(Error::Mismatch("damping profile and mesh differ".into()));
        }
        let first = self.nodal[..nx].to_vec();
        if self.nodal.chunks(nx).any(|row| row != first.as_slice()) {
            return Err(Error::Mismatch("2-D damping must depend on x only".into()));
        }
        Ok(first)
    }

    /// Covered fraction of every x-element by `{a ≥ t}` (`{a > 0}` when
    /// `t == 0`).
    fn level_fractions(&self, op: &DiscreteOperator, t: f64) -> Result<Vec<f64>> {
        let axis = op.x_axis();
        if let Some(region) = &self.support {
            return Ok(if t <= self.beta { region.element_fractions(axis) } else { vec![0.0; axis.elements.len()] });
        }
        let a = self.x_profile(op)?;
        let inside = |v: f64| if t == 0.0 { v > 0.0 } else { v >= t };
        Ok(axis
            .elements
            .iter()
            .map(|el| {
                let (ai, aj) = (a[el.nodes[0]], a[el.nodes[1]]);
                match (inside(ai), inside(aj)) {
                    (true, true) => 1.0,
                    (false, false) => 0.0,
                    // Exact measure of the level set of the P1 interpolant.
                    _ if t == 0.0 => 1.0,
                    (true, false) => (ai - t) / (ai - aj),
                    (false, true) => (aj - t) / (aj - ai),
                }
            })
            .collect())
    }

    fn compute_bounds(&mut self, op: &DiscreteOperator) -> Result<()> {
        self.beta = self.nodal.iter().copied().fold(0.0, f64::max);
        if self.beta == 0.0 {
            self.alpha = 0.0;
            self.vol_f = 0.0;
            self.vol_support = 0.0;
            self.f_mask.iter_mut().for_each(|m| *m = false);
            return Ok(());
        }
        self.vol_support = op.measure(&self.level_fractions(op, 0.0)?);
        let mut alpha = self.beta;
        let mut fractions = self.level_fractions(op, alpha)?;
        for j in 0..=60 {
            alpha = self.beta * 0.5f64.powi(j);
            fractions = self.level_fractions(op, alpha)?;
            if op.measure(&fractions) >= 0.5 * self.vol_support {
                break;
            }
        }
        self.alpha = alpha;
        self.vol_f = op.measure(&fractions);
        self.f_fractions = fractions;
        self.f_mask = self.nodal.iter().map(|&v| v >= alpha).collect();
        Ok(())
    }

    /// Riemannian integral `∫ a` of the P1 interpolant.
    pub fn integral(&self, op: &DiscreteOperator) -> f64 {
        let a = match self.x_profile(op) {
            Ok(a) => a,
            Err(_) => return f64::NAN,
        };
        let x: f64 = op.x_axis().elements.iter().map(|el| 0.5 * (a[el.nodes[0]] + a[el.nodes[1]]) * el.volume()).sum();
        x * op.axes()[1..].iter().map(Axis::volume).product::<f64>()
    }
}

/// Returns `(α, β, vol_F)`; fails when the damping vanishes identically.
pub fn damping_bounds(profile: &DampingProfile) -> Result<(f64, f64, f64)> {
    if profile.is_trivial() {
        return Err(Error::TrivialDamping);
    }
    Ok((profile.alpha, profile.beta, profile.vol_f))
}
