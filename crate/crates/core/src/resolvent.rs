//! Resolvent norms on the imaginary axis, the running supremum `M(μ)` and
//! exponential growth envelopes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroup::{EquationKind, Generator};

/// `σ_min ≤ SINGULAR_RTOL · σ_max` is treated as spectrum on the axis.
pub const SINGULAR_RTOL: f64 = 1e-14;
/// A grid value this many times above both neighbours triggers bisection.
pub const PEAK_FACTOR: f64 = 10.0;
const MAX_REFINE_ROUNDS: usize = 8;

/// One evaluation of the weighted resolvent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolventPoint {
    pub tau: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl ResolventPoint {
    pub fn on_axis(&self) -> bool {
        !(self.sigma_min > SINGULAR_RTOL * self.sigma_max)
    }

    /// `1/σ_min`, or `+∞` on the spectrum.
    pub fn norm(&self) -> f64 {
        if self.on_axis() {
            f64::INFINITY
        } else {
            1.0 / self.sigma_min
        }
    }
}

fn shifted(weighted: &DMatrix<Complex64>, tau: f64) -> DMatrix<Complex64> {
    let mut m = weighted.clone();
    for i in 0..m.nrows() {
        m[(i, i)] -= Complex64::new(0.0, tau);
    }
    m
}

fn evaluate(weighted: &DMatrix<Complex64>, tau: f64) -> ResolventPoint {
    let sv = shifted(weighted, tau).singular_values();
    let sigma_min = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let sigma_max = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    ResolventPoint { tau, sigma_min, sigma_max }
}

/// Singular values of `W^{1/2}(G − iτ)W^{-1/2}`.
pub fn resolvent_point(gen: &Generator, tau: f64) -> ResolventPoint {
    evaluate(&gen.weighted(&gen.matrix), tau)
}

/// `‖(G − iτ)⁻¹‖_W`, with `+∞` when `iτ` is (numerically) an eigenvalue.
pub fn resolvent_norm(gen: &Generator, tau: f64) -> f64 {
    resolvent_point(gen, tau).norm()
}

/// Solves `(G − iτ) U = F`.
///
/// Unreduced wave generators go through the Helmholtz equation
/// `(−Λ + τ² − iτC) u = g + (C + iτ) f`, `v = f + iτu`; Schrödinger solves
/// `(−iΛ − C − iτ) ψ = f` directly. Quotient generators use the full block
/// system.
pub fn helmholtz_solve(gen: &Generator, tau: f64, rhs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    if rhs.len() != gen.dim() {
        return Err(Error::Mismatch(format!("right-hand side has length {}, generator {}", rhs.len(), gen.dim())));
    }
    let i_tau = Complex64::new(0.0, tau);
    let solution = match gen.kind {
        EquationKind::Wave if !gen.quotient => {
            let n = gen.modes();
            let lam = gen.eigenvalues();
            let c = gen.coupling();
            let h = DMatrix::from_fn(n, n, |i, j| {
                let diag = if i == j { Complex64::new(tau * tau - lam[i], 0.0) } else { Complex64::new(0.0, 0.0) };
                diag - i_tau * c[(i, j)]
            });
            let f = rhs.rows(0, n).into_owned();
            let g = rhs.rows(n, n).into_owned();
            let cf = c.map(|x| Complex64::new(x, 0.0)) * &f;
            let b = g + cf + &f * i_tau;
            let u = solve_checked(&h, &b, tau)?;
            let v = &f + &u * i_tau;
            let mut out = DVector::zeros(2 * n);
            out.rows_mut(0, n).copy_from(&u);
            out.rows_mut(n, n).copy_from(&v);
            out
        }
        _ => solve_checked(&shifted(&gen.matrix, tau), rhs, tau)?,
    };
    let a = shifted(&gen.matrix, tau);
    let r = (&a * &solution - rhs).norm();
    let scale = a.norm() * solution.norm() + rhs.norm();
    if r > 1e-10 * scale {
        return Err(Error::SpectrumOnAxis { taus: vec![tau] });
    }
    Ok(solution)
}

fn solve_checked(a: &DMatrix<Complex64>, b: &DVector<Complex64>, tau: f64) -> Result<DVector<Complex64>> {
    let sv = a.clone().singular_values();
    let smin = sv.iter().fold(f64::INFINITY, |x, &y| x.min(y));
    let smax = sv.iter().fold(0.0f64, |x, &y| x.max(y));
    if !(smin > SINGULAR_RTOL * smax) {
        return Err(Error::SpectrumOnAxis { taus: vec![tau] });
    }
    a.clone().lu().solve(b).ok_or(Error::SpectrumOnAxis { taus: vec![tau] })
}

/// Resolvent norms over a symmetric `τ` grid with running supremum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolventScan {
    pub kind: EquationKind,
    pub taus: Vec<f64>,
    pub norms: Vec<f64>,
    pub sigma_min: Vec<f64>,
    /// `max { norms[j] : |τ_j| ≤ |τ_i| }`.
    pub running_m: Vec<f64>,
}

/// Frequencies where the undamped generator is singular.
fn resonances(gen: &Generator) -> Vec<f64> {
    match gen.kind {
        EquationKind::Wave => {
            let first = usize::from(gen.quotient);
            gen.eigenvalues()[first..].iter().flat_map(|&l| {
                let w = l.max(0.0).sqrt();
                [w, -w]
            }).collect()
        }
        EquationKind::Schrodinger => gen.eigenvalues().iter().map(|&l| -l).collect(),
    }
}

/// Half of the smallest gap between consecutive distinct resonances in the
/// window (infinite with fewer than two).
pub fn required_spacing(gen: &Generator, mu_max: f64) -> f64 {
    let mut r: Vec<f64> = resonances(gen).into_iter().filter(|t| t.abs() <= mu_max).collect();
    r.sort_by(f64::total_cmp);
    r.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(1.0));
    r.windows(2).map(|w| 0.5 * (w[1] - w[0])).fold(f64::INFINITY, f64::min)
}

/// Grid points needed on `[−μ_max, μ_max]` to resolve the spectral gaps.
pub fn required_grid_points(gen: &Generator, mu_max: f64) -> usize {
    let s = required_spacing(gen, mu_max);
    if s.is_finite() {
        (2.0 * mu_max / s).ceil() as usize + 1
    } else {
        2
    }
}

/// Scans `‖R(τ)‖` on `[−μ_max, μ_max]`.
///
/// The uniform grid is augmented with the undamped resonances and refined
/// by bisection around isolated peaks. Any singular point aborts the scan
/// with every offending `τ`.
pub fn scan_m(gen: &Generator, mu_max: f64, grid_points: usize) -> Result<ResolventScan> {
    if !(mu_max > 0.0) || grid_points < 2 {
        return Err(Error::Config("scan needs mu_max > 0 and at least two grid points".into()));
    }
    let spacing = 2.0 * mu_max / (grid_points - 1) as f64;
    let required = required_spacing(gen, mu_max);
    if spacing > required {
        return Err(Error::GridTooCoarse { spacing, required });
    }
    let weighted = gen.weighted(&gen.matrix);
    let mut taus: Vec<f64> = (0..grid_points).map(|i| -mu_max + spacing * i as f64).collect();
    // Make the grid exactly symmetric.
    for i in 0..grid_points / 2 {
        taus[grid_points - 1 - i] = -taus[i];
    }
    if grid_points % 2 == 1 {
        taus[grid_points / 2] = 0.0;
    }
    taus.extend(resonances(gen).into_iter().filter(|t| t.abs() <= mu_max));
    let mut points = eval_many(&weighted, sorted_unique(taus));

    for _ in 0..MAX_REFINE_ROUNDS {
        let singular: Vec<f64> = points.iter().filter(|p| p.on_axis()).map(|p| p.tau).collect();
        if !singular.is_empty() {
            return Err(Error::SpectrumOnAxis { taus: singular });
        }
        let mut extra = Vec::new();
        for i in 0..points.len() {
            let here = points[i].norm();
            let left = if i > 0 { Some(&points[i - 1]) } else { None };
            let right = points.get(i + 1);
            let nb = left.iter().chain(right.iter()).map(|p| p.norm()).fold(0.0f64, f64::max);
            if here > PEAK_FACTOR * nb {
                for p in left.iter().chain(right.iter()) {
                    extra.push(0.5 * (p.tau + points[i].tau));
                    extra.push(-0.5 * (p.tau + points[i].tau));
                }
            }
        }
        if extra.is_empty() {
            break;
        }
        let known: Vec<f64> = points.iter().map(|p| p.tau).collect();
        extra.retain(|t| t.abs() <= mu_max && !known.iter().any(|k| (k - t).abs() <= 1e-12 * mu_max));
        if extra.is_empty() {
            break;
        }
        points.extend(eval_many(&weighted, sorted_unique(extra)));
        points.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    }
    let singular: Vec<f64> = points.iter().filter(|p| p.on_axis()).map(|p| p.tau).collect();
    if !singular.is_empty() {
        return Err(Error::SpectrumOnAxis { taus: singular });
    }
    Ok(ResolventScan::from_points(gen.kind, &points))
}

fn sorted_unique(mut t: Vec<f64>) -> Vec<f64> {
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(1.0));
    t
}

fn eval_many(weighted: &DMatrix<Complex64>, taus: Vec<f64>) -> Vec<ResolventPoint> {
    if weighted.iter().any(|z| z.im != 0.0) {
        return taus.into_par_iter().map(|t| evaluate(weighted, t)).collect();
    }
    // Real A: A + iτ is the conjugate of A − iτ, so one SVD serves ±τ.
    let mut abs: Vec<f64> = taus.iter().map(|t| t.abs()).collect();
    abs.sort_by(f64::total_cmp);
    abs.dedup();
    let half: Vec<ResolventPoint> = abs.par_iter().map(|&t| evaluate(weighted, t)).collect();
    taus.iter()
        .map(|&t| {
            let i = abs.binary_search_by(|a| a.total_cmp(&t.abs())).expect("|tau| was evaluated");
            ResolventPoint { tau: t, ..half[i] }
        })
        .collect()
}

impl ResolventScan {
    /// Builds a scan from evaluated points sorted by `τ`.
    pub fn from_points(kind: EquationKind, points: &[ResolventPoint]) -> Self {
        let taus: Vec<f64> = points.iter().map(|p| p.tau).collect();
        let norms: Vec<f64> = points.iter().map(|p| p.norm()).collect();
        let sigma_min = points.iter().map(|p| p.sigma_min).collect();
        let mut order: Vec<usize> = (0..taus.len()).collect();
        order.sort_by(|&a, &b| taus[a].abs().total_cmp(&taus[b].abs()));
        let mut running_m = vec![0.0; taus.len()];
        let mut best = 0.0f64;
        let mut i = 0;
        while i < order.len() {
            // Ties in |τ| share one value.
            let mut j = i;
            while j < order.len() && taus[order[j]].abs() == taus[order[i]].abs() {
                best = best.max(norms[order[j]]);
                j += 1;
            }
            for &k in &order[i..j] {
                running_m[k] = best;
            }
            i = j;
        }
        Self { kind, taus, norms, sigma_min, running_m }
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// `(μ, M(μ))` for the nonnegative grid points, ascending.
    pub fn envelope(&self) -> Vec<(f64, f64)> {
        let mut e: Vec<(f64, f64)> = self
            .taus
            .iter()
            .zip(&self.running_m)
            .filter(|(t, _)| **t >= 0.0)
            .map(|(&t, &m)| (t, m))
            .collect();
        e.sort_by(|a, b| a.0.total_cmp(&b.0));
        e
    }

    pub fn min_sigma(&self) -> f64 {
        self.sigma_min.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest relative difference between `‖R(τ)‖` and `‖R(−τ)‖`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &t) in self.taus.iter().enumerate() {
            if let Some(j) = self.taus.iter().position(|&s| s == -t) {
                let (a, b) = (self.norms[i], self.norms[j]);
                worst = worst.max((a - b).abs() / a.max(b));
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    /// `M(μ) ≤ C e^{c|μ|}`.
    Exp,
    /// `M(μ) ≤ C e^{c√|μ|}`.
    ExpSqrt,
}

impl GrowthModel {
    pub fn phi(self, mu: f64) -> f64 {
        match self {
            GrowthModel::Exp => mu.abs(),
            GrowthModel::ExpSqrt => mu.abs().sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub model: GrowthModel,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub c: f64,
    /// Largest log-space slack `log(C e^{cφ}) − log M` on the window.
    pub residual: f64,
    pub window: (f64, f64),
}

impl GrowthFit {
    pub fn envelope(&self, mu: f64) -> f64 {
        self.big_c * (self.c * self.model.phi(mu)).exp()
    }
}

/// Affine upper envelope `y ≤ b + s·x` with `s ≥ 0` minimizing the total
/// slack `Σ (b + s x_i − y_i)`; returns `(b, s)`.
///
/// The optimum is a supporting line of the upper convex hull at the mean
/// abscissa.
pub fn affine_upper_envelope(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.is_empty() || points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return None;
    }
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for q in p {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        if hull.last().is_some_and(|h| h.0 == q.0) {
            hull.pop();
        }
        hull.push(q);
    }
    let ymax = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if hull.len() == 1 {
        return Some((ymax, 0.0));
    }
    let xbar = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let k = hull.windows(2).position(|w| xbar <= w[1].0).unwrap_or(hull.len() - 2);
    let (a, b) = (hull[k], hull[k + 1]);
    let slope = (b.1 - a.1) / (b.0 - a.0);
    if slope <= 0.0 {
        return Some((ymax, 0.0));
    }
    let intercept = points.iter().map(|(x, y)| y - slope * x).fold(f64::NEG_INFINITY, f64::max);
    Some((intercept, slope))
}

/// Growth envelope of `M(μ)` over the whole scanned window.
pub fn fit_growth(scan: &ResolventScan, model: GrowthModel) -> Result<GrowthFit> {
    let hi = scan.taus.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    fit_growth_window(scan, model, 0.0, hi)
}

/// Growth envelope of `M(μ)` restricted to `μ ∈ [lo, hi]`.
pub fn fit_growth_window(scan: &ResolventScan, model: GrowthModel, lo: f64, hi: f64) -> Result<GrowthFit> {
    let pts: Vec<(f64, f64)> = scan
        .envelope()
        .into_iter()
        .filter(|(mu, _)| *mu >= lo && *mu <= hi)
        .map(|(mu, m)| (model.phi(mu), m.ln()))
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyWindow(format!("no scan points with mu in [{lo}, {hi}]")));
    }
    let (b, s) = affine_upper_envelope(&pts)
        .ok_or_else(|| Error::SpectrumOnAxis { taus: vec![] })?;
    let residual = pts.iter().map(|(x, y)| b + s * x - y).fold(0.0f64, f64::max);
    Ok(GrowthFit { model, big_c: b.exp(), c: s, residual, window: (lo, hi) })
}

/// Knee `τ*` of `log M(μ)`: the point farthest above the chord joining the
/// ends of the curve (or the start when the curve is concave-up).
pub fn knee(scan: &ResolventScan) -> f64 {
    let e = scan.envelope();
    if e.len() < 3 {
        return e.first().map_or(0.0, |p| p.0);
    }
    let (x0, y0) = (e[0].0, e[0].1.ln());
    let (x1, y1) = (e[e.len() - 1].0, e[e.len() - 1].1.ln());
    let slope = (y1 - y0) / (x1 - x0);
    e.iter()
        .map(|&(x, m)| (x, m.ln() - (y0 + slope * (x - x0))))
        .fold((x0, f64::NEG_INFINITY), |best, (x, d)| if d > best.1 { (x, d) } else { best })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::{build_damping, DampingSpec};
    use crate::geometry::{assemble, Boundary, DomainSpec, MetricSpec};
    use crate::semigroup::{neumann_quotient, random_state, schrodinger_generator, wave_generator};
    use crate::spectral::eigendecompose;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gens(bc: Boundary, modes: usize, spec: DampingSpec) -> (Generator, Generator) {
        let op = assemble(&DomainSpec::unit_interval(256, bc), &MetricSpec::unit()).unwrap();
        let b = eigendecompose(&op, modes).unwrap();
        let p = build_damping(&spec, &op).unwrap();
        (wave_generator(&b, &p).unwrap(), schrodinger_generator(&b, &p).unwrap())
    }

    fn c(v: f64) -> DampingSpec {
        DampingSpec::Constant { value: v }
    }

    #[test]
    fn undamped_resonance_is_spectrum_on_axis() {
        let (w, _) = gens(Boundary::Dirichlet, 8, c(0.0));
        let lam1 = w.eigenvalues()[0].sqrt();
        assert!(resolvent_norm(&w, lam1).is_infinite());
        let rhs = DVector::from_element(w.dim(), Complex64::new(1.0, 0.0));
        assert!(matches!(helmholtz_solve(&w, lam1, &rhs), Err(Error::SpectrumOnAxis { .. })));
        let mid = 0.5 * (lam1 + w.eigenvalues()[1].sqrt());
        assert!(resolvent_norm(&w, mid).is_finite());
        let near = resolvent_norm(&w, lam1 * (1.0 + 1e-6));
        assert!(near > 1e4 * resolvent_norm(&w, mid));
    }

    #[test]
    fn schrodinger_constant_damping_closed_form() {
        let beta = 0.8;
        let (_, s) = gens(Boundary::Dirichlet, 10, c(beta));
        for tau in [-200.0, -40.0, -9.87, 0.0, 3.0, 50.0] {
            let exact = 1.0 / s.eigenvalues().iter().map(|l| ((l + tau) * (l + tau) + beta * beta).sqrt()).fold(f64::INFINITY, f64::min);
            let got = resolvent_norm(&s, tau);
            assert!((got - exact).abs() <= 1e-10 * exact);
            assert!(got <= 1.0 / beta * (1.0 + 1e-12));
        }
        // τ = 0, single-mode data: ψ = f / (−iλ² − β) per mode.
        let mut f = DVector::from_element(10, Complex64::new(0.0, 0.0));
        f[0] = Complex64::new(1.0, 0.0);
        let psi = helmholtz_solve(&s, 0.0, &f).unwrap();
        let expect = Complex64::new(1.0, 0.0) / Complex64::new(-beta, -s.eigenvalues()[0]);
        assert!((psi[0] - expect).norm() < 1e-12);
        assert!(psi.iter().skip(1).all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn helmholtz_residual_bump_wave() {
        let op = assemble(&DomainSpec::unit_interval(512, Boundary::Dirichlet), &MetricSpec::unit()).unwrap();
        let b = eigendecompose(&op, 64).unwrap();
        let p = build_damping(&DampingSpec::Bump { center: 0.4, width: 0.3, height: 1.0 }, &op).unwrap();
        let g = wave_generator(&b, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rhs = random_state(&mut rng, g.dim());
        let u = helmholtz_solve(&g, 5.0, &rhs).unwrap();
        let a = shifted(&g.matrix, 5.0);
        assert!((&a * &u - &rhs).norm() <= 1e-10 * (a.norm() * u.norm()));
    }

    #[test]
    fn quotient_helmholtz_uses_block_system() {
        let (w, _) = gens(Boundary::Neumann, 8, c(0.5));
        let q = neumann_quotient(&w);
        let rhs = DVector::from_element(q.dim(), Complex64::new(0.3, -0.2));
        let u = helmholtz_solve(&q, 0.0, &rhs).unwrap();
        assert!((shifted(&q.matrix, 0.0) * u - rhs).norm() < 1e-10);
        assert!(resolvent_point(&q, 0.0).sigma_min > 0.0);
    }

    #[test]
    fn scan_of_undamped_wave_reports_resonances() {
        let (w, _) = gens(Boundary::Dirichlet, 6, c(0.0));
        match scan_m(&w, 10.0, 101) {
            Err(Error::SpectrumOnAxis { taus }) => {
                let l1 = w.eigenvalues()[0].sqrt();
                assert!(taus.iter().any(|t| (t - l1).abs() < 1e-12));
                assert!(taus.iter().any(|t| (t + l1).abs() < 1e-12));
            }
            other => panic!("expected spectrum on axis, got {other:?}"),
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let (w, _) = gens(Boundary::Dirichlet, 16, c(1.0));
        assert!(matches!(scan_m(&w, 40.0, 11), Err(Error::GridTooCoarse { .. })));
        let need = required_grid_points(&w, 40.0);
        assert!(scan_m(&w, 40.0, need).is_ok());
    }

    #[test]
    fn damped_scan_invariants() {
        let spec = DampingSpec::IntervalUnion { intervals: vec![(0.0, 0.5)], level: 1.0 };
        let (w, _) = gens(Boundary::Dirichlet, 16, spec);
        let s = scan_m(&w, 40.0, 161).unwrap();
        assert!(s.min_sigma() > 0.0);
        assert!(s.symmetry_defect() <= 1e-10);
        // Mirrored points agree with a direct evaluation.
        for (&t, &sm) in s.taus.iter().zip(&s.sigma_min).step_by(17) {
            assert!((resolvent_point(&w, t).sigma_min - sm).abs() <= 1e-12 * sm.max(1.0));
        }
        for (n, sm) in s.norms.iter().zip(&s.sigma_min) {
            assert!((n * sm - 1.0).abs() <= 1e-10);
        }
        let env = s.envelope();
        assert!(env.windows(2).all(|w| w[1].1 >= w[0].1));
        let fit = fit_growth(&s, GrowthModel::Exp).unwrap();
        assert!(fit.big_c > 0.0 && fit.c >= 0.0 && fit.c.is_finite());
        for (mu, m) in env {
            assert!(m <= fit.envelope(mu) * (1.0 + 1e-12));
        }
        // Certificate of σ_min on random vectors.
        let wm = w.weighted(&w.matrix);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (i, &t) in s.taus.iter().enumerate().step_by(17) {
            let a = shifted(&wm, t);
            for _ in 0..20 {
                let x = random_state(&mut rng, w.dim());
                assert!((&a * &x).norm() >= s.sigma_min[i] * x.norm() * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn bounded_schrodinger_scan_fits_zero_rate() {
        let (_, s) = gens(Boundary::Dirichlet, 8, c(0.5));
        let scan = scan_m(&s, 20.0, 201).unwrap();
        assert!(scan.running_m.iter().all(|&m| m <= 2.0 + 1e-12));
        let fit = fit_growth(&scan, GrowthModel::Exp).unwrap();
        assert!(fit.c >= 0.0);
        assert!(fit.envelope(20.0) >= scan.envelope().last().unwrap().1);
    }

    #[test]
    fn envelope_of_two_increasing_points_is_the_line() {
        let (b, s) = affine_upper_envelope(&[(0.0, 1.0), (2.0, 3.0)]).unwrap();
        assert!((b - 1.0).abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
        let (b, s) = affine_upper_envelope(&[(0.0, 3.0), (2.0, 1.0)]).unwrap();
        assert_eq!((b, s), (3.0, 0.0));
    }

    #[test]
    fn knee_of_piecewise_curve() {
        let pts: Vec<ResolventPoint> = (0..=40)
            .map(|i| {
                let t = i as f64 * 0.5;
                let norm: f64 = if t < 5.0 { 1.0 + t } else { 6.0 + 0.01 * (t - 5.0) };
                ResolventPoint { tau: t, sigma_min: 1.0 / norm, sigma_max: 10.0 }
            })
            .collect();
        let s = ResolventScan::from_points(EquationKind::Wave, &pts);
        assert!((knee(&s) - 5.0).abs() <= 1.0);
    }

    proptest! {
        #[test]
        fn envelope_dominates_and_is_nonnegative(ys in proptest::collection::vec(-5.0f64..5.0, 2..40)) {
            let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64 * 0.3, y)).collect();
            let (b, s) = affine_upper_envelope(&pts).unwrap();
            prop_assert!(s >= 0.0);
            for (x, y) in &pts {
                prop_assert!(b + s * x >= y - 1e-12);
            }
            // Touches at least one point.
            prop_assert!(pts.iter().any(|(x, y)| (b + s * x - y).abs() <= 1e-9));
        }

        #[test]
        fn running_m_is_monotone(norms in proptest::collection::vec(0.1f64..100.0, 3..30)) {
            let n = norms.len();
            let pts: Vec<ResolventPoint> = norms.iter().enumerate()
                .map(|(i, &v)| ResolventPoint { tau: i as f64 - (n / 2) as f64, sigma_min: 1.0 / v, sigma_max: 1e3 })
                .collect();
            let s = ResolventScan::from_points(EquationKind::Schrodinger, &pts);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| s.taus[a].abs().total_cmp(&s.taus[b].abs()));
            for w in idx.windows(2) {
                prop_assert!(s.running_m[w[1]] >= s.running_m[w[0]]);
            }
            for i in 0..n {
                prop_assert!(s.running_m[i] >= s.norms[i]);
            }
        }
    }
}
