//! Batch front-end: configuration, task pipelines and run artifacts.

mod config;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{parse_config, Numerics, RunConfig, Task};
pub use output::FileEntry;

use crate::damping::{build_damping, damping_bounds, DampingProfile};
use crate::decay::{
    bound_stability, burq_exponents, burq_prediction, check_monotone, fit_log_decay, DecayFit, DecayPrediction,
    MonotoneReport, StabilityReport,
};
use crate::error::{Error, Result};
use crate::geometry::{assemble, DiscreteOperator};
use crate::inequalities::{
    constant_curve, poincare_constant, unique_continuation_check, ConstantCurve, ObservationSet, ObservationSpec,
};
use crate::resolvent::{fit_growth, fit_growth_window, knee, required_grid_points, scan_m, GrowthFit, GrowthModel, ResolventScan};
use crate::semigroup::{
    evolve_oracle, evolve_stepped_with, log_times, neumann_quotient, random_state, schrodinger_generator,
    wave_generator, EquationKind, EvolutionResult, Generator, Method, StepOptions,
};
use crate::spectral::{eigendecompose, SpectralBasis};
use output::{fmt_f64, ArtifactWriter};

/// Environment variable capping the worker threads of parallel stages.
pub const THREADS_ENV: &str = "DECAYLAB_THREADS";

#[derive(Clone, Debug, Default, Serialize)]
pub struct EvolutionSummary {
    pub method: Option<Method>,
    pub samples: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub ref_norm: f64,
    pub fit: Option<DecayFit>,
    pub stability: Option<StabilityReport>,
    pub monotone: Option<MonotoneReport>,
    pub oracle_fallback: bool,
    pub max_dissipation_quotient: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Derived {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub vol_f: Option<f64>,
    pub damping_integral: Option<f64>,
    pub eigen_max_residual: Option<f64>,
    pub c_p: Option<f64>,
    /// `(C, D)` of `κ(Λ) ≤ C e^{DΛ}`.
    pub kappa_fit: Option<(f64, f64)>,
    pub min_continuation_ratio: Option<f64>,
    pub growth_exp: Option<GrowthFit>,
    pub growth_exp_sqrt: Option<GrowthFit>,
    /// Knee of `M(μ)` and the exponential fit above it.
    pub tau_star: Option<f64>,
    pub growth_high_frequency: Option<GrowthFit>,
    pub min_sigma: Option<f64>,
    pub sigma_certificate_passed: Option<bool>,
    pub burq: Vec<DecayPrediction>,
    pub wave: Option<EvolutionSummary>,
    pub schrodinger: Option<EvolutionSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub task: Task,
    pub config: RunConfig,
    pub versions: BTreeMap<String, String>,
    pub derived: Derived,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub files: Vec<FileEntry>,
}

/// Worker threads requested through `DECAYLAB_THREADS`.
pub fn thread_override() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer (got {v:?})"))),
        },
    }
}

/// Executes `config` and writes its artifacts into `out_dir`. On failure
/// every file created by the run is removed.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunManifest> {
    config.validate()?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_override()? {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?
    };
    let mut writer = ArtifactWriter::create(out_dir)?;
    let result = pool.install(|| Session::new(config).and_then(|mut s| s.execute(&mut writer)));
    match result {
        Ok(manifest) => Ok(manifest),
        Err(e) => {
            writer.rollback();
            Err(e)
        }
    }
}

struct Session<'a> {
    cfg: &'a RunConfig,
    op: DiscreteOperator,
    profile: DampingProfile,
    basis: SpectralBasis,
    derived: Derived,
    timings: BTreeMap<String, f64>,
    report: Vec<String>,
}

impl<'a> Session<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        let mut timings = BTreeMap::new();
        let t0 = Instant::now();
        let op = assemble(&cfg.domain, &cfg.metric)?;
        let profile = build_damping(&cfg.damping, &op)?;
        timings.insert("assemble".into(), t0.elapsed().as_secs_f64());
        let t0 = Instant::now();
        let basis = eigendecompose(&op, cfg.numerics.modes)?;
        timings.insert("eigendecompose".into(), t0.elapsed().as_secs_f64());
        let mut derived = Derived {
            damping_integral: Some(profile.integral(&op)),
            eigen_max_residual: Some(basis.max_residual()),
            ..Derived::default()
        };
        if !profile.is_trivial() {
            derived.alpha = Some(profile.alpha);
            derived.beta = Some(profile.beta);
            derived.vol_f = Some(profile.vol_f);
        }
        Ok(Self { cfg, op, profile, basis, derived, timings, report: Vec::new() })
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f(self)?;
        self.timings.insert(stage.into(), t0.elapsed().as_secs_f64());
        Ok(out)
    }

    fn execute(&mut self, w: &mut ArtifactWriter) -> Result<RunManifest> {
        let task = self.cfg.task;
        log::info!("running {} with {} modes", task.name(), self.basis.len());
        self.report.push(format!("# decaylab report: {}\n", task.name()));
        self.report.push(format!(
            "Mesh: {} nodes, {} free dofs, boundary {:?}; spectral truncation n = {} (max eigen residual {}).\n",
            self.op.n_nodes(),
            self.op.n_free(),
            self.op.boundary(),
            self.basis.len(),
            fmt_f64(self.basis.max_residual())
        ));
        let needs_hypothesis = matches!(task, Task::Poincare | Task::DecayReport | Task::FullReport);
        if needs_hypothesis {
            let (alpha, beta, vol_f) = damping_bounds(&self.profile)?;
            self.report.push(format!(
                "Damping bounds: alpha = {}, beta = {}, vol(F) = {}.\n",
                fmt_f64(alpha),
                fmt_f64(beta),
                fmt_f64(vol_f)
            ));
        }
        match task {
            Task::SimulateWave => self.timed("evolution_wave", |s| s.evolution(w, EquationKind::Wave))?,
            Task::SimulateSchrodinger => {
                self.timed("evolution_schrodinger", |s| s.evolution(w, EquationKind::Schrodinger))?
            }
            Task::ResolventScan => self.timed("scan", |s| s.scan(w))?,
            Task::SpectralConstant => self.timed("constants", |s| s.constants(w))?,
            Task::Poincare => self.timed("poincare", |s| s.poincare())?,
            Task::DecayReport => {
                self.timed("evolution_wave", |s| s.evolution(w, EquationKind::Wave))?;
                self.timed("evolution_schrodinger", |s| s.evolution(w, EquationKind::Schrodinger))?;
                self.timed("scan", |s| s.scan(w))?;
            }
            Task::FullReport => {
                self.timed("evolution_wave", |s| s.evolution(w, EquationKind::Wave))?;
                self.timed("evolution_schrodinger", |s| s.evolution(w, EquationKind::Schrodinger))?;
                self.timed("scan", |s| s.scan(w))?;
                self.timed("constants", |s| s.constants(w))?;
                self.timed("poincare", |s| s.poincare())?;
            }
        }
        let report = self.report.join("\n");
        w.write_text("report.md", &report)?;
        let mut versions = BTreeMap::new();
        versions.insert("decaylab".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("manifest_schema".into(), "1".into());
        let manifest = RunManifest {
            task,
            config: self.cfg.clone(),
            versions,
            derived: self.derived.clone(),
            timings: self.timings.clone(),
            files: w.entries().to_vec(),
        };
        w.write_manifest(&manifest)?;
        Ok(manifest)
    }

    fn wave(&self) -> Result<Generator> {
        let g = wave_generator(&self.basis, &self.profile)?;
        Ok(if g.boundary.has_zero_mode() { neumann_quotient(&g) } else { g })
    }

    fn generator(&self, kind: EquationKind) -> Result<Generator> {
        match kind {
            EquationKind::Wave => self.wave(),
            EquationKind::Schrodinger => schrodinger_generator(&self.basis, &self.profile),
        }
    }

    fn evolution(&mut self, w: &mut ArtifactWriter, kind: EquationKind) -> Result<()> {
        let n = &self.cfg.numerics;
        let g = self.generator(kind)?;
        let s0 = g.smooth_state();
        let result: EvolutionResult = match n.method {
            Method::Oracle => evolve_oracle(&g, &s0, &log_times(1.0_f64.min(n.t_end), n.t_end, n.samples))?,
            Method::Stepper => evolve_stepped_with(
                &g,
                &s0,
                n.dt,
                n.t_end,
                StepOptions { record_every: n.record_every, keep_states: false },
            )?,
        };
        // Energy exponents of the logarithmic bounds: 2 (wave), 4 (Schrödinger).
        let model = match kind {
            EquationKind::Wave => GrowthModel::Exp,
            EquationKind::Schrodinger => GrowthModel::ExpSqrt,
        };
        let p = burq_exponents(model, 1).energy_exponent as f64;
        let fit = fit_log_decay(&result, p)?;
        let stability = bound_stability(&result, p).ok();
        let monotone = check_monotone(&result);
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.numerics.seed);
        let dissipation = g.sample_dissipativity(&mut rng, 100);
        if !monotone.monotone {
            log::warn!("{kind:?} energy increased by {:e} (relative) at sample {:?}", monotone.max_violation, monotone.index);
        }
        let bound = result.bound_curve(fit.c_star, p);
        let name = match kind {
            EquationKind::Wave => "evolution_wave.csv",
            EquationKind::Schrodinger => "evolution_schrodinger.csv",
        };
        let rows: Vec<Vec<String>> = result
            .times
            .iter()
            .zip(&result.energies)
            .zip(&bound)
            .map(|((t, e), b)| vec![fmt_f64(*t), fmt_f64(*e), fmt_f64(*b)])
            .collect();
        w.write_csv(name, &["t", "energy", "bound_curve"], &rows)?;
        let (first, last) = row_range(&result.times, fit.window.0, fit.window.1);
        self.report.push(format!(
            "## {kind:?} evolution ({:?})\n\nE(t) log(2+t)^{p} / ||data||^2 peaks at C_star = {} (t = {}), {name} rows {first}-{last}; \
             ||data||^2 = {}. Energy monotone: {} (worst relative increase {}).{}\n",
            result.method,
            fmt_f64(fit.c_star),
            fmt_f64(fit.t_star),
            fmt_f64(fit.ref_norm),
            monotone.monotone,
            fmt_f64(monotone.max_violation),
            stability
                .map(|s| format!(
                    " Windowed maxima [T/4, T/2] -> [T/2, T]: {} -> {} (ratio {}, stable: {}).",
                    fmt_f64(s.early_max),
                    fmt_f64(s.late_max),
                    fmt_f64(s.ratio),
                    s.stable
                ))
                .unwrap_or_default()
        ));
        let summary = EvolutionSummary {
            method: Some(result.method),
            samples: result.times.len(),
            initial_energy: result.energies[0],
            final_energy: *result.energies.last().unwrap_or(&f64::NAN),
            ref_norm: fit.ref_norm,
            fit: Some(fit),
            stability,
            monotone: Some(monotone),
            oracle_fallback: result.fallback,
            max_dissipation_quotient: dissipation,
        };
        match kind {
            EquationKind::Wave => self.derived.wave = Some(summary),
            EquationKind::Schrodinger => self.derived.schrodinger = Some(summary),
        }
        Ok(())
    }

    fn scan(&mut self, w: &mut ArtifactWriter) -> Result<()> {
        let n = &self.cfg.numerics;
        let g = self.generator(n.equation)?;
        let need = required_grid_points(&g, n.tau_max);
        let points = if n.grid_points < need {
            log::warn!("numerics.grid_points = {} cannot resolve the spectral gaps; using {need}", n.grid_points);
            need
        } else {
            n.grid_points
        };
        let scan: ResolventScan = scan_m(&g, n.tau_max, points)?;
        let exp = fit_growth(&scan, GrowthModel::Exp)?;
        let sqrt = fit_growth(&scan, GrowthModel::ExpSqrt)?;
        let tau_star = knee(&scan);
        let high = fit_growth_window(&scan, GrowthModel::Exp, tau_star, n.tau_max).ok();
        let certificate = sigma_certificate(&g, &scan, self.cfg.numerics.seed);
        let rows: Vec<Vec<String>> = (0..scan.len())
            .map(|i| {
                vec![fmt_f64(scan.taus[i]), fmt_f64(scan.norms[i]), fmt_f64(scan.sigma_min[i]), fmt_f64(scan.running_m[i])]
            })
            .collect();
        w.write_csv("scan.csv", &["tau", "norm", "sigma_min", "running_M"], &rows)?;
        self.report.push(format!(
            "## Resolvent scan ({:?})\n\n{} points on [-{}, {}] (scan.csv rows 1-{}); min sigma_min = {}, max M = {}. \
             Envelopes: M <= {} e^({} |mu|) and M <= {} e^({} sqrt|mu|); knee tau* = {}.\n",
            n.equation,
            scan.len(),
            fmt_f64(n.tau_max),
            fmt_f64(n.tau_max),
            scan.len(),
            fmt_f64(scan.min_sigma()),
            fmt_f64(scan.running_m.iter().copied().fold(0.0, f64::max)),
            fmt_f64(exp.big_c),
            fmt_f64(exp.c),
            fmt_f64(sqrt.big_c),
            fmt_f64(sqrt.c),
            fmt_f64(tau_star)
        ));
        self.derived.burq = vec![burq_prediction(&exp, n.k), burq_prediction(&sqrt, n.k)];
        self.derived.min_sigma = Some(scan.min_sigma());
        self.derived.sigma_certificate_passed = Some(certificate);
        self.derived.growth_exp = Some(exp);
        self.derived.growth_exp_sqrt = Some(sqrt);
        self.derived.tau_star = Some(tau_star);
        self.derived.growth_high_frequency = high;
        Ok(())
    }

    fn observation(&self) -> Result<ObservationSet> {
        let spec = match &self.cfg.observation {
            Some(s) => s.clone(),
            None if self.profile.is_trivial() => ObservationSpec::Whole,
            None => ObservationSpec::DampingSet,
        };
        ObservationSet::from_spec(&self.op, &spec, Some(&self.profile))
    }

    fn constants(&mut self, w: &mut ArtifactWriter) -> Result<()> {
        let omega = self.observation()?;
        let freqs = self.basis.frequencies();
        let grid = match &self.cfg.numerics.lambda_grid {
            Some(g) => g.clone(),
            None => {
                let top = *freqs.last().unwrap_or(&1.0);
                (1..=32).map(|i| top * i as f64 / 32.0).collect()
            }
        };
        let curve: ConstantCurve = constant_curve(&self.basis, &omega, &grid)?;
        let rows: Vec<Vec<String>> = (0..curve.lambdas.len())
            .map(|i| vec![fmt_f64(curve.lambdas[i]), fmt_f64(curve.kappas[i]), u8::from(curve.flagged[i]).to_string()])
            .collect();
        w.write_csv("constants.csv", &["Lambda", "kappa", "flagged"], &rows)?;
        let uc = unique_continuation_check(&self.basis, &omega, self.basis.len())?;
        let rows: Vec<Vec<String>> = (0..self.basis.len())
            .map(|k| vec![k.to_string(), fmt_f64(self.basis.eigenvalues[k]), fmt_f64(uc.ratios[k])])
            .collect();
        w.write_csv("eigen.csv", &["k", "lambda_sq", "r_omega"], &rows)?;
        let fit_text = match curve.fit {
            Some((c, d)) => format!("kappa(Lambda) <= {} e^({} Lambda)", fmt_f64(c), fmt_f64(d)),
            None => "no envelope (every point flagged)".into(),
        };
        self.report.push(format!(
            "## Spectral constants\n\nObservation set of measure {}; {} cutoffs (constants.csv rows 1-{}), {fit_text}; \
             {} flagged. Smallest eigenfunction mass ratio r = {} at k = {} (eigen.csv row {}).\n",
            fmt_f64(omega.measure),
            curve.lambdas.len(),
            curve.lambdas.len(),
            curve.flagged.iter().filter(|&&f| f).count(),
            fmt_f64(uc.min_ratio),
            uc.argmin,
            uc.argmin + 1
        ));
        self.derived.kappa_fit = curve.fit;
        self.derived.min_continuation_ratio = Some(uc.min_ratio);
        Ok(())
    }

    fn poincare(&mut self) -> Result<()> {
        let cp = poincare_constant(&self.op, &self.profile)?;
        self.report.push(format!(
            "## Poincare-type constant\n\nC_P = {} (largest eigenvalue of the pencil (K + M, K + D)); \
             the Schrodinger resolvent bound 2 C_P = {} applies for tau >= 0.\n",
            fmt_f64(cp.value),
            fmt_f64(2.0 * cp.value)
        ));
        self.derived.c_p = Some(cp.value);
        Ok(())
    }
}

/// 1-based data-row range of the samples in `[lo, hi]`.
fn row_range(times: &[f64], lo: f64, hi: f64) -> (usize, usize) {
    let first = times.iter().position(|&t| t >= lo).unwrap_or(0) + 1;
    let last = times.iter().rposition(|&t| t <= hi).unwrap_or(times.len().saturating_sub(1)) + 1;
    (first, last)
}

/// `‖(G − iτ)x‖_W ≥ σ_min ‖x‖_W` on random vectors at a subset of the grid.
fn sigma_certificate(g: &Generator, scan: &ResolventScan, seed: u64) -> bool {
    let wm = g.weighted(&g.matrix);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stride = (scan.len() / 32).max(1);
    (0..scan.len()).step_by(stride).all(|i| {
        let tau = scan.taus[i];
        let mut a = wm.clone();
        for d in 0..a.nrows() {
            a[(d, d)] -= num_complex::Complex64::new(0.0, tau);
        }
        (0..100).all(|_| {
            let x = random_state(&mut rng, g.dim());
            (&a * &x).norm() >= scan.sigma_min[i] * x.norm() * (1.0 - 1e-10)
        })
    })
}

/// Writes the artifacts for `config` to its output directory, honouring an
/// override from the command line.
pub fn run_with_override(config: &RunConfig, out: Option<&Path>) -> Result<(PathBuf, RunManifest)> {
    let dir = config.output_dir(out);
    let m = run(config, &dir)?;
    Ok((dir, m))
}
