//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line; run
//! with `cargo test --test acceptance -- --nocapture --test-threads=1` to see
//! them in order. Tests take a shared lock so wall-clock limits are measured
//! without sibling tests competing for the CPU.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use decaylab::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static LOCK: Mutex<()> = Mutex::new(());

// Pinned tolerances.
const EIG_REL: f64 = 0.01;
const ORTHO_TOL: f64 = 1e-8;
const EIG_RUNTIME_S: f64 = 5.0;
const DISSIPATIVE_TOL: f64 = 1e-10;
const SCHRODINGER_ANCHOR_TOL: f64 = 1e-8;
const MODAL_TOL: f64 = 1e-10;
const STEPPER_REL_TOL: f64 = 1e-6;
const STEPPER_RATIO: (f64, f64) = (3.5, 4.5);
const MONOTONE_TOL: f64 = 1e-9;
const CONSERVE_TOL: f64 = 1e-9;
const SCAN_RUNTIME_S: f64 = 60.0;
const INTERTWINE_TOL: f64 = 1e-10;
const SQRT2_TOL: f64 = 1e-10;
const KAPPA_ORACLE_TOL: f64 = 1e-8;
/// Allowed relative decrease of `κ` between cutoffs, per unit `κ`. Symmetric
/// sets produce exact ties whose computed values differ by O(eps·κ).
const KAPPA_TIE_RTOL: f64 = 1e-14;
const POINCARE_TOL: f64 = 1e-10;
const POINCARE_ATTAIN_TOL: f64 = 1e-8;
const RESOLVENT_SLACK: f64 = 1e-6;
const STABILITY_LIMIT: f64 = 1.05;

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n:>2}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn unit(n_el: usize, bc: Boundary) -> DiscreteOperator {
    assemble(&DomainSpec::unit_interval(n_el, bc), &MetricSpec::unit()).unwrap()
}

fn fat_cantor_damping() -> DampingSpec {
    DampingSpec::FatCantor { level: 4, measure: 0.5, height: 1.0 }
}

fn wave_for(basis: &SpectralBasis, profile: &DampingProfile) -> Generator {
    let g = wave_generator(basis, profile).unwrap();
    if g.boundary.has_zero_mode() {
        neumann_quotient(&g)
    } else {
        g
    }
}

#[test]
fn criterion_01_eigensolver_fidelity() {
    let _g = lock();
    let t0 = Instant::now();
    let op = unit(1024, Boundary::Dirichlet);
    let b = eigendecompose(&op, 10).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let worst = b
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let exact = ((k + 1) as f64 * PI).powi(2);
            (l - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    let ortho = b.orthonormality_error();
    let pass = b.len() == 10 && worst <= EIG_REL && ortho <= ORTHO_TOL && secs <= EIG_RUNTIME_S;
    report(1, pass, format!("max rel eigen error {worst:.2e}, M-orthonormality {ortho:.2e}, {secs:.2}s"));
}

fn random_preset(rng: &mut ChaCha8Rng) -> (DomainSpec, MetricSpec, DampingSpec) {
    let domain = match rng.gen_range(0..3) {
        0 => DomainSpec::unit_interval(128, Boundary::Dirichlet),
        1 => DomainSpec::unit_interval(128, Boundary::Neumann),
        _ => DomainSpec::circle(1.0, 128),
    };
    let metric = if rng.gen_bool(0.5) {
        MetricSpec::Constant { g0: rng.gen_range(0.5..2.0) }
    } else {
        let k = rng.gen_range(3..6);
        MetricSpec::PiecewiseLinear {
            nodes: (0..k).map(|i| (i as f64 / (k - 1) as f64, rng.gen_range(0.5..2.0))).collect(),
        }
    };
    let damping = match rng.gen_range(0..4) {
        0 => DampingSpec::Constant { value: rng.gen_range(0.0..2.0) },
        1 => {
            let a = rng.gen_range(0.0..0.6);
            let b = a + rng.gen_range(0.05..0.4);
            DampingSpec::IntervalUnion { intervals: vec![(a, b)], level: rng.gen_range(0.1..2.0) }
        }
        2 => DampingSpec::Bump {
            center: rng.gen_range(0.2..0.8),
            width: rng.gen_range(0.1..0.4),
            height: rng.gen_range(0.1..3.0),
        },
        _ => DampingSpec::FatCantor {
            level: rng.gen_range(1..6),
            measure: rng.gen_range(0.2..0.8),
            height: rng.gen_range(0.5..2.0),
        },
    };
    (domain, metric, damping)
}

#[test]
fn criterion_02_generator_dissipativity() {
    let _g = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (domain, metric, damping) = random_preset(&mut rng);
        let op = assemble(&domain, &metric).unwrap();
        let basis = eigendecompose(&op, 24).unwrap();
        let profile = build_damping(&damping, &op).unwrap();
        for g in [wave_for(&basis, &profile), schrodinger_generator(&basis, &profile).unwrap()] {
            worst = worst.max(g.sample_dissipativity(&mut rng, 100));
        }
    }
    report(2, worst <= DISSIPATIVE_TOL, format!("max Re<GU,U>_W/|U|^2 over 20 presets x 2 equations x 100 vectors = {worst:.3e}"));
}

#[test]
fn criterion_03_closed_form_anchors() {
    let _g = lock();
    // (a) Schrödinger with a ≡ 1/2.
    let beta = 0.5;
    let op = unit(256, Boundary::Dirichlet);
    let basis = eigendecompose(&op, 32).unwrap();
    let profile = build_damping(&DampingSpec::Constant { value: beta }, &op).unwrap();
    let g = schrodinger_generator(&basis, &profile).unwrap();
    let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
    let r = evolve_oracle(&g, &g.smooth_state(), &times).unwrap();
    let e0 = r.energies[0];
    let dev_a = times
        .iter()
        .zip(&r.energies)
        .map(|(t, e)| (e - (-2.0 * beta * t).exp() * e0).abs() / e0)
        .fold(0.0, f64::max);

    // (b) Wave with a ≡ 1, one mode. The constant metric is calibrated so
    // the discrete eigenvalue is exactly π².
    let h = eigendecompose(&unit(256, Boundary::Dirichlet), 1).unwrap().eigenvalues[0];
    let metric = MetricSpec::Constant { g0: h / (PI * PI) };
    let op = assemble(&DomainSpec::unit_interval(256, Boundary::Dirichlet), &metric).unwrap();
    let basis = eigendecompose(&op, 1).unwrap();
    let profile = build_damping(&DampingSpec::Constant { value: 1.0 }, &op).unwrap();
    let g = wave_generator(&basis, &profile).unwrap();
    let ev = g.spectrum().unwrap();
    let disc = Complex64::new(1.0 - 4.0 * PI * PI, 0.0).sqrt();
    let dev_b = [(-1.0 + disc) / 2.0, (-1.0 - disc) / 2.0]
        .iter()
        .map(|z| ev.iter().map(|e| (e - z).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    report(
        3,
        dev_a <= SCHRODINGER_ANCHOR_TOL && dev_b <= MODAL_TOL,
        format!(
            "(a) max |E_S - e^(-2bt)E_S(0)|/E_S(0) = {dev_a:.2e}; (b) lambda^2 - pi^2 = {:.1e}, modal eigenvalue error {dev_b:.2e}",
            basis.eigenvalues[0] - PI * PI
        ),
    );
}

#[test]
fn criterion_04_stepper_oracle_equivalence() {
    let _g = lock();
    let op = unit(1024, Boundary::Dirichlet);
    let basis = eigendecompose(&op, 64).unwrap();
    let profile = build_damping(&fat_cantor_damping(), &op).unwrap();
    let g = wave_generator(&basis, &profile).unwrap();
    let s0 = g.smooth_state();
    let t_end = 10.0;
    let exact = evolve_oracle(&g, &s0, &[0.0, t_end]).unwrap().final_state;
    let err = |dt: f64| {
        let r = evolve_stepped(&g, &s0, dt, t_end).unwrap();
        g.weighted_norm(&(&r.final_state - &exact)) / g.weighted_norm(&exact)
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    let ratio = e1 / e2;
    let pass = e1 <= STEPPER_REL_TOL && (STEPPER_RATIO.0..=STEPPER_RATIO.1).contains(&ratio);
    report(4, pass, format!("relative error {e1:.3e} (dt=1e-3), {e2:.3e} (dt=5e-4), ratio {ratio:.3}"));
}

#[test]
fn criterion_05_energy_monotonicity() {
    let _g = lock();
    let op = unit(256, Boundary::Dirichlet);
    let basis = eigendecompose(&op, 32).unwrap();
    let presets = [
        fat_cantor_damping(),
        DampingSpec::Constant { value: 0.7 },
        DampingSpec::Bump { center: 0.3, width: 0.2, height: 2.0 },
        DampingSpec::IntervalUnion { intervals: vec![(0.1, 0.2), (0.6, 0.75)], level: 1.5 },
    ];
    let mut worst_violation = 0.0f64;
    for spec in &presets {
        let profile = build_damping(spec, &op).unwrap();
        for g in [wave_generator(&basis, &profile).unwrap(), schrodinger_generator(&basis, &profile).unwrap()] {
            let s0 = g.smooth_state();
            let oracle = evolve_oracle(&g, &s0, &log_times(0.01, 100.0, 200)).unwrap();
            let stepped = evolve_stepped(&g, &s0, 1e-3, 10.0).unwrap();
            for r in [oracle, stepped] {
                worst_violation = worst_violation.max(check_monotone(&r).max_violation);
            }
        }
    }
    let free = build_damping(&DampingSpec::Constant { value: 0.0 }, &op).unwrap();
    let mut drift = 0.0f64;
    for g in [wave_generator(&basis, &free).unwrap(), schrodinger_generator(&basis, &free).unwrap()] {
        let r = evolve_stepped(&g, &g.smooth_state(), 1e-3, 10.0).unwrap();
        assert!(r.times.len() >= 10_001);
        let e0 = r.energies[0];
        drift = drift.max(r.energies.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max));
    }
    report(
        5,
        worst_violation <= MONOTONE_TOL && drift <= CONSERVE_TOL,
        format!("worst relative energy increase {worst_violation:.2e}; undamped drift over 1e4 steps {drift:.2e}"),
    );
}

#[test]
fn criterion_06_resolvent_nonsingularity() {
    let _g = lock();
    let op = unit(1024, Boundary::Dirichlet);
    let basis = eigendecompose(&op, 128).unwrap();
    let profile = build_damping(&fat_cantor_damping(), &op).unwrap();
    let g = wave_generator(&basis, &profile).unwrap();
    let t0 = Instant::now();
    let points = required_grid_points(&g, 50.0).max(512);
    let scan = scan_m(&g, 50.0, points).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let min_sigma = scan.min_sigma();

    let free = build_damping(&DampingSpec::Constant { value: 0.0 }, &op).unwrap();
    let g0 = wave_generator(&basis, &free).unwrap();
    let expected: Vec<f64> = basis.frequencies().into_iter().filter(|&l| l <= 50.0).collect();
    let on_axis = match scan_m(&g0, 50.0, required_grid_points(&g0, 50.0).max(512)) {
        Err(Error::SpectrumOnAxis { taus }) => expected
            .iter()
            .all(|&l| [l, -l].iter().all(|s| taus.iter().any(|t| (t - s).abs() <= 1e-9 * l))),
        _ => false,
    };
    report(
        6,
        min_sigma > 0.0 && on_axis && secs <= SCAN_RUNTIME_S,
        format!(
            "{} points, min sigma_min {min_sigma:.3e}, {secs:.1}s; undamped scan flags +-lambda_k for all {} lambda_k <= 50: {on_axis}",
            scan.len(),
            expected.len()
        ),
    );
}

#[test]
fn criterion_07_neumann_quotient() {
    let _g = lock();
    let op = unit(256, Boundary::Neumann);
    let basis = eigendecompose(&op, 16).unwrap();
    let mut worst = 0.0f64;
    let mut sigma0 = f64::INFINITY;
    for spec in [
        DampingSpec::IntervalUnion { intervals: vec![(0.2, 0.6)], level: 0.8 },
        fat_cantor_damping(),
    ] {
        let profile = build_damping(&spec, &op).unwrap();
        assert!(profile.integral(&op) > 0.0);
        let full = wave_generator(&basis, &profile).unwrap();
        let q = neumann_quotient(&full);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let s0 = random_state(&mut rng, full.dim());
            let t = [0.0, 0.5, 2.0, 5.0];
            let a = evolve_oracle(&full, &s0, &t).unwrap();
            let b = evolve_oracle(&q, &q.project(&s0).unwrap(), &t).unwrap();
            for (sa, sb) in a.states.unwrap().iter().zip(b.states.unwrap().iter()) {
                let d = (q.project(sa).unwrap() - sb).norm() / sb.norm().max(1.0);
                worst = worst.max(d);
            }
        }
        let p = resolvent_point(&q, 0.0);
        sigma0 = sigma0.min(if p.on_axis() { 0.0 } else { p.sigma_min });
    }
    report(
        7,
        worst <= INTERTWINE_TOL && sigma0 > 0.0,
        format!("intertwining defect {worst:.2e}; quotient sigma_min at tau=0 {sigma0:.3e}"),
    );
}

/// `κ(m)` from an independently assembled factor: on each element the P1
/// mass integral splits into mean and slope parts, and the SVD gives σ_min.
fn kappa_oracle(basis: &SpectralBasis, omega: &ObservationSet, m: usize) -> f64 {
    let op = basis.op();
    let axis = op.x_axis();
    let free = op.free_dofs();
    let mut rows = Vec::new();
    for (el, &f) in axis.elements.iter().zip(&omega.fractions) {
        if f == 0.0 {
            continue;
        }
        let w = f * el.volume();
        let at = |node: usize, k: usize| free.iter().position(|&d| d == node).map_or(0.0, |i| basis.vectors[(i, k)]);
        let [i, j] = el.nodes;
        let mean: Vec<f64> = (0..m).map(|k| w.sqrt() * 0.5 * (at(i, k) + at(j, k))).collect();
        let slope: Vec<f64> = (0..m).map(|k| (w / 12.0).sqrt() * (at(i, k) - at(j, k))).collect();
        rows.push(mean);
        rows.push(slope);
    }
    let b = DMatrix::from_fn(rows.len(), m, |r, c| rows[r][c]);
    let s = b.singular_values();
    1.0 / s.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_08_spectral_constant_anchors() {
    let _g = lock();
    // Below λ_1 only the constant mode survives: κ = √(|Ω|/|ω|).
    let op = unit(512, Boundary::Neumann);
    let basis = eigendecompose(&op, 32).unwrap();
    let half = ObservationSet::from_region(&op, &Region::new(vec![(0.25, 0.75)]));
    let below = 0.5 * basis.frequencies()[1];
    let k_half = spectral_constant(&basis, &half, below).unwrap().kappa;
    let sqrt2_err = (k_half - 2f64.sqrt()).abs();

    let whole = ObservationSet::whole(&op);
    let top = *basis.frequencies().last().unwrap();
    let grid: Vec<f64> = (1..=16).map(|i| top * i as f64 / 16.0).collect();
    let whole_curve = constant_curve(&basis, &whole, &grid).unwrap();
    let whole_exact = whole_curve.kappas.iter().all(|&k| k == 1.0);

    let dop = unit(1024, Boundary::Dirichlet);
    let dbasis = eigendecompose(&dop, 48).unwrap();
    let cantor = ObservationSet::from_region(&dop, &fat_cantor(1.0, 4, 0.5).unwrap());
    let dtop = *dbasis.frequencies().last().unwrap();
    let dgrid: Vec<f64> = (1..=48).map(|i| dtop * i as f64 / 48.0).collect();
    let curves = [
        (constant_curve(&basis, &half, &grid).unwrap(), &basis, &half),
        (whole_curve, &basis, &whole),
        (constant_curve(&dbasis, &cantor, &dgrid).unwrap(), &dbasis, &cantor),
    ];
    let mut monotone = true;
    let mut oracle_dev = 0.0f64;
    for (curve, b, omega) in &curves {
        monotone &= curve.kappas.windows(2).all(|w| w[1] >= w[0] * (1.0 - KAPPA_TIE_RTOL * w[0]));
        // Flagged values (κ > 1e8) carry O(eps·κ) error by construction.
        for ((k, &m), &flagged) in curve.kappas.iter().zip(&curve.modes).zip(&curve.flagged) {
            if m > 0 && !flagged {
                oracle_dev = oracle_dev.max((k - kappa_oracle(b, omega, m)).abs() / k);
            }
        }
    }
    report(
        8,
        sqrt2_err <= SQRT2_TOL && whole_exact && monotone && oracle_dev <= KAPPA_ORACLE_TOL,
        format!("|kappa - sqrt2| = {sqrt2_err:.1e}; kappa(M) == 1: {whole_exact}; nondecreasing: {monotone}; oracle rel dev (unflagged) {oracle_dev:.1e}"),
    );
}

#[test]
fn criterion_09_spectral_inequality_envelope() {
    let _g = lock();
    let op = unit(1024, Boundary::Dirichlet);
    let basis = eigendecompose(&op, 40).unwrap();
    let omega = ObservationSet::from_region(&op, &fat_cantor(1.0, 4, 0.5).unwrap());
    let lmax = 30.0 * PI;
    let grid: Vec<f64> = (1..=60).map(|i| lmax * i as f64 / 60.0).collect();
    let curve = constant_curve(&basis, &omega, &grid).unwrap();
    let (c, d) = fit_spectral_constants(&curve).unwrap();
    let dominated = curve
        .lambdas
        .iter()
        .zip(&curve.kappas)
        .all(|(&l, &k)| k.ln() <= c.ln() + d * l + 1e-12 * k.ln().abs().max(1.0));

    let gram = omega.gram(&basis);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::INFINITY;
    for (&kappa, &m) in curve.kappas.iter().zip(&curve.modes) {
        if m == 0 {
            continue;
        }
        for _ in 0..1000 {
            let x = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            let g = gram.view((0, 0), (m, m));
            let restricted = (x.transpose() * g * &x)[(0, 0)].sqrt();
            worst = worst.min(kappa * restricted / x.norm());
        }
    }
    report(
        9,
        dominated && d.is_finite() && worst >= 1.0 - 1e-12,
        format!("envelope kappa <= {c:.3e} e^({d:.4} Lambda) up to 30pi, dominates: {dominated}; min kappa|phi 1_w|/|phi| = {worst:.6}"),
    );
}

#[test]
fn criterion_10_poincare_constant() {
    let _g = lock();
    let op = unit(512, Boundary::Dirichlet);
    let one = build_damping(&DampingSpec::Constant { value: 1.0 }, &op).unwrap();
    let cp1 = poincare_constant(&op, &one).unwrap().value;

    let profile = build_damping(&fat_cantor_damping(), &op).unwrap();
    let cp = poincare_constant(&op, &profile).unwrap();
    let d = damping_matrix(&op, &profile).unwrap();
    let attained = poincare_quotient(&op, &d, &cp.vector);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = op.n_free();
    let mut best = 0.0f64;
    for _ in 0..100_000 {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        best = best.max(poincare_quotient(&op, &d, &u));
    }
    let attain_err = (attained - cp.value).abs() / cp.value;
    report(
        10,
        (cp1 - 1.0).abs() <= POINCARE_TOL && best <= cp.value && attain_err <= POINCARE_ATTAIN_TOL,
        format!(
            "a=1: C_P - 1 = {:.1e}; fat Cantor C_P = {:.6}, best of 1e5 random quotients {best:.6}, eigenvector attains to {attain_err:.1e}",
            cp1 - 1.0,
            cp.value
        ),
    );
}

#[test]
fn criterion_11_schrodinger_positive_frequency_bound() {
    let _g = lock();
    let op = unit(512, Boundary::Dirichlet);
    let basis = eigendecompose(&op, 64).unwrap();
    let presets = [
        DampingSpec::Constant { value: 1.0 },
        DampingSpec::Constant { value: 0.2 },
        DampingSpec::IntervalUnion { intervals: vec![(0.0, 0.3)], level: 1.0 },
        DampingSpec::Bump { center: 0.5, width: 0.3, height: 2.0 },
        fat_cantor_damping(),
    ];
    let taus: Vec<f64> = (0..=400).map(|i| i as f64 * 0.25).collect();
    let mut worst_margin = f64::INFINITY;
    let mut details = Vec::new();
    for spec in &presets {
        let profile = build_damping(spec, &op).unwrap();
        let cp = poincare_constant(&op, &profile).unwrap().value;
        let g = schrodinger_generator(&basis, &profile).unwrap();
        let max_r = taus.iter().map(|&t| resolvent_norm(&g, t)).fold(0.0, f64::max);
        worst_margin = worst_margin.min(2.0 * cp + RESOLVENT_SLACK - max_r);
        details.push(format!("{max_r:.3}<={:.3}", 2.0 * cp));
    }
    report(11, worst_margin >= 0.0, format!("max |R(tau)| vs 2 C_P: {}", details.join(", ")));
}

#[test]
fn criterion_12_decay_bound_form() {
    let _g = lock();
    let op = unit(1024, Boundary::Dirichlet);
    let basis = eigendecompose(&op, 128).unwrap();
    let profile = build_damping(&fat_cantor_damping(), &op).unwrap();
    let times = log_times(1.0, 1000.0, 400);
    let mut parts = Vec::new();
    let mut pass = true;
    for (g, p) in [
        (wave_generator(&basis, &profile).unwrap(), 2.0),
        (schrodinger_generator(&basis, &profile).unwrap(), 4.0),
    ] {
        let r = evolve_oracle(&g, &g.smooth_state(), &times).unwrap();
        let s = bound_stability(&r, p).unwrap();
        pass &= s.ratio <= STABILITY_LIMIT;
        parts.push(format!("{:?} p={p}: late/early = {:.3e}", g.kind, s.ratio));
    }
    report(12, pass, parts.join("; "));
}

#[test]
fn criterion_13_burq_table() {
    let _g = lock();
    let exp = burq_exponents(GrowthModel::Exp, 1);
    let sqrt = burq_exponents(GrowthModel::ExpSqrt, 1);
    let fit = |model| GrowthFit { model, big_c: 1.0, c: 1.0, residual: 0.0, window: (0.0, 1.0) };
    let via_fit = burq_prediction(&fit(GrowthModel::Exp), 1).energy_exponent == 2
        && burq_prediction(&fit(GrowthModel::ExpSqrt), 1).energy_exponent == 4;
    report(
        13,
        exp.energy_exponent == 2 && sqrt.energy_exponent == 4 && via_fit,
        format!("exp,k=1 -> {}; exp-sqrt,k=1 -> {}", exp.energy_exponent, sqrt.energy_exponent),
    );
}

#[test]
fn criterion_14_determinism() {
    let _g = lock();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(
        &cfg,
        r#"{"task": "full_report",
            "domain": {"shape": {"kind": "interval", "length": 1.0}, "boundary": "dirichlet", "elements": 256},
            "damping": {"kind": "fat_cantor", "level": 4, "measure": 0.5, "height": 1.0},
            "numerics": {"modes": 32, "T": 100.0, "tau_max": 30.0, "grid_points": 256, "seed": 42}}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_decaylab"))
            .args(["full_report", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        out
    };
    let (a, b) = (run("a"), run("b"));
    let csvs = ["evolution_wave.csv", "evolution_schrodinger.csv", "scan.csv", "constants.csv", "eigen.csv"];
    let identical = csvs.iter().all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap());
    report(14, identical, format!("{} CSVs byte-identical across two runs: {identical}", csvs.len()));
}
