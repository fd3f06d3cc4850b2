//! Wave and Schrödinger generators in truncated spectral coordinates, the
//! Neumann quotient, exact and stepped evolution, and the energies.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::damping::DampingProfile;
use crate::error::{Error, Result};
use crate::geometry::Boundary;
use crate::linalg::{complex_eigen, hermitian_max_eigenvalue};
use crate::spectral::SpectralBasis;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Oracle eigenvector condition number above which the matrix exponential
/// is used instead of the eigendecomposition.
pub const ORACLE_CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationKind {
    Wave,
    Schrodinger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Oracle,
    Stepper,
}

/// Generator `G` acting on spectral coefficients.
///
/// Wave states are `(u, v)` stacked, Schrödinger states are `ψ`. The Hilbert
/// norm is `⟨U, U⟩_W = Σ w_i |U_i|²`.
#[derive(Clone, Debug)]
pub struct Generator {
    pub kind: EquationKind,
    pub matrix: DMatrix<Complex64>,
    pub weight: Vec<f64>,
    pub quotient: bool,
    pub boundary: Boundary,
    eigenvalues: Vec<f64>,
    coupling: DMatrix<f64>,
    damping_integral: f64,
}

fn check_mesh(basis: &SpectralBasis, profile: &DampingProfile) -> Result<DMatrix<f64>> {
    if profile.nodal.len() != basis.op().n_nodes() {
        return Err(Error::Mismatch(format!(
            "damping lives on {} nodes, basis on {}",
            profile.nodal.len(),
            basis.op().n_nodes()
        )));
    }
    basis.coupling(profile)
}

/// `G = [[0, I], [−Λ, −C]]` with `C = Eᵀ D E`, in the energy metric
/// `diag(λ_k²) ⊕ I` (weight 1 on a zero mode).
pub fn wave_generator(basis: &SpectralBasis, profile: &DampingProfile) -> Result<Generator> {
    let coupling = check_mesh(basis, profile)?;
    let n = basis.len();
    let lam = &basis.eigenvalues;
    let mut g = DMatrix::from_element(2 * n, 2 * n, ZERO);
    for k in 0..n {
        g[(k, n + k)] = ONE;
        g[(n + k, k)] = Complex64::new(-lam[k], 0.0);
        for j in 0..n {
            g[(n + k, n + j)] = Complex64::new(-coupling[(k, j)], 0.0);
        }
    }
    let mut weight: Vec<f64> = lam.iter().map(|&l| if l > 0.0 { l } else { 1.0 }).collect();
    weight.extend(std::iter::repeat_n(1.0, n));
    Ok(Generator {
        kind: EquationKind::Wave,
        matrix: g,
        weight,
        quotient: false,
        boundary: basis.boundary(),
        eigenvalues: lam.clone(),
        coupling,
        damping_integral: profile.integral(basis.op()),
    })
}

/// `G = −iΛ − C` in `L²`.
pub fn schrodinger_generator(basis: &SpectralBasis, profile: &DampingProfile) -> Result<Generator> {
    let coupling = check_mesh(basis, profile)?;
    let n = basis.len();
    let g = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { Complex64::new(0.0, -basis.eigenvalues[i]) } else { ZERO };
        diag - coupling[(i, j)]
    });
    Ok(Generator {
        kind: EquationKind::Schrodinger,
        matrix: g,
        weight: vec![1.0; n],
        quotient: false,
        boundary: basis.boundary(),
        eigenvalues: basis.eigenvalues.clone(),
        coupling,
        damping_integral: profile.integral(basis.op()),
    })
}

/// Restricts the `u` component of a Neumann/periodic wave generator to the
/// nonconstant modes. Other generators are returned unchanged.
pub fn neumann_quotient(gen: &Generator) -> Generator {
    if gen.kind != EquationKind::Wave || !gen.boundary.has_zero_mode() || gen.quotient {
        log::warn!("quotient only applies to unreduced Neumann/periodic wave generators; unchanged");
        return gen.clone();
    }
    let keep: Vec<usize> = (1..gen.dim()).collect();
    let matrix = gen.matrix.select_rows(&keep).select_columns(&keep);
    Generator {
        matrix,
        weight: keep.iter().map(|&i| gen.weight[i]).collect(),
        quotient: true,
        ..gen.clone()
    }
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of spectral modes `n`.
    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    /// `∫ a √g dx` of the damping this generator was built from.
    pub fn damping_integral(&self) -> f64 {
        self.damping_integral
    }

    /// Mode indices carried by the `u` (wave) or `ψ` component.
    fn first_mode(&self) -> usize {
        usize::from(self.quotient)
    }

    fn split<'a>(&self, state: &'a DVector<Complex64>) -> (&'a [Complex64], &'a [Complex64]) {
        let s = state.as_slice();
        match self.kind {
            EquationKind::Wave => s.split_at(self.modes() - self.first_mode()),
            EquationKind::Schrodinger => (s, &[]),
        }
    }

    fn check_state(&self, state: &DVector<Complex64>) -> Result<()> {
        if state.len() != self.dim() {
            return Err(Error::Mismatch(format!("state has length {}, generator {}", state.len(), self.dim())));
        }
        Ok(())
    }

    /// `Σ λ_k²|u_k|² + Σ |v_k|²` (wave) or `Σ |ψ_k|²`.
    pub fn energy(&self, state: &DVector<Complex64>) -> f64 {
        let (u, v) = self.split(state);
        match self.kind {
            EquationKind::Wave => {
                let lam = &self.eigenvalues[self.first_mode()..];
                let pot: f64 = u.iter().zip(lam).map(|(z, &l)| l * z.norm_sqr()).sum();
                pot + v.iter().map(|z| z.norm_sqr()).sum::<f64>()
            }
            EquationKind::Schrodinger => u.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// Squared `H²×H¹` (wave) or `H²` (Schrödinger) norm.
    pub fn reference_norm_sq(&self, state: &DVector<Complex64>) -> f64 {
        let (u, v) = self.split(state);
        let lam_u = &self.eigenvalues[self.first_mode()..];
        let hu: f64 = u.iter().zip(lam_u).map(|(z, &l)| (1.0 + l).powi(2) * z.norm_sqr()).sum();
        let hv: f64 = v.iter().zip(&self.eigenvalues).map(|(z, &l)| (1.0 + l) * z.norm_sqr()).sum();
        hu + hv
    }

    /// Instantaneous energy loss `−dE/dt = 2 Re(v* C v)` (wave) or `2 ψ* C ψ`.
    pub fn dissipation_rate(&self, state: &DVector<Complex64>) -> f64 {
        let x: &[Complex64] = match self.kind {
            EquationKind::Wave => self.split(state).1,
            EquationKind::Schrodinger => state.as_slice(),
        };
        let mut s = 0.0;
        for (i, xi) in x.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                s += (xi.conj() * xj).re * self.coupling[(i, j)];
            }
        }
        2.0 * s
    }

    pub fn weighted_norm(&self, state: &DVector<Complex64>) -> f64 {
        state.iter().zip(&self.weight).map(|(z, &w)| w * z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `W^{1/2} M W^{-1/2}` for a matrix `M` acting on states.
    pub fn weighted(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let s: Vec<f64> = self.weight.iter().map(|w| w.sqrt()).collect();
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (s[i] / s[j]))
    }

    /// `max Re⟨GU,U⟩_W / ⟨U,U⟩_W` over all `U`.
    pub fn numerical_abscissa(&self) -> f64 {
        hermitian_max_eigenvalue(&self.weighted(&self.matrix))
    }

    /// `Re⟨GU,U⟩_W / ⟨U,U⟩_W`.
    pub fn dissipation_quotient(&self, state: &DVector<Complex64>) -> f64 {
        let gu = &self.matrix * state;
        let num: f64 = gu.iter().zip(state.iter()).zip(&self.weight).map(|((a, b), &w)| w * (a * b.conj()).re).sum();
        num / self.weighted_norm(state).powi(2)
    }

    /// Largest dissipation quotient over `samples` random states.
    pub fn sample_dissipativity<R: Rng>(&self, rng: &mut R, samples: usize) -> f64 {
        (0..samples)
            .map(|_| self.dissipation_quotient(&random_state(rng, self.dim())))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Eigenvalues of `G`.
    pub fn spectrum(&self) -> Result<Vec<Complex64>> {
        let e = complex_eigen(&self.matrix).ok_or_else(|| Error::Eigensolver {
            reason: "Schur decomposition of the generator did not converge".into(),
            residual: f64::NAN,
        })?;
        Ok(e.values.iter().copied().collect())
    }

    /// `Π`: drops the constant `u` mode of a full-length wave state.
    pub fn project(&self, full: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if !self.quotient {
            self.check_state(full)?;
            return Ok(full.clone());
        }
        if full.len() != self.dim() + 1 {
            return Err(Error::Mismatch(format!("expected an unreduced state of length {}", self.dim() + 1)));
        }
        Ok(full.rows(1, self.dim()).into_owned())
    }

    /// Smooth initial data: `u_k = (1+λ_k²)^{-3/2}`, `v_k = (1+λ_k²)^{-1}`
    /// (wave) or `ψ_k = (1+λ_k²)^{-3/2}`.
    pub fn smooth_state(&self) -> DVector<Complex64> {
        let lam_u = &self.eigenvalues[self.first_mode()..];
        let mut s: Vec<Complex64> = lam_u.iter().map(|&l| Complex64::new((1.0 + l).powf(-1.5), 0.0)).collect();
        if self.kind == EquationKind::Wave {
            s.extend(self.eigenvalues.iter().map(|&l| Complex64::new(1.0 / (1.0 + l), 0.0)));
        }
        DVector::from_vec(s)
    }
}

/// Complex state with independent uniform(−1, 1) real and imaginary parts.
pub fn random_state<R: Rng>(rng: &mut R, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Wave energy of a full `(u, v)` state against a basis.
pub fn wave_energy(state: &DVector<Complex64>, basis: &SpectralBasis) -> f64 {
    let n = basis.len();
    assert_eq!(state.len(), 2 * n, "wave state must have 2n entries");
    let pot: f64 = (0..n).map(|k| basis.eigenvalues[k] * state[k].norm_sqr()).sum();
    pot + (n..2 * n).map(|k| state[k].norm_sqr()).sum::<f64>()
}

pub fn schrodinger_energy(state: &DVector<Complex64>) -> f64 {
    state.iter().map(|z| z.norm_sqr()).sum()
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub kind: EquationKind,
    pub method: Method,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// States at `times` when requested.
    pub states: Option<Vec<DVector<Complex64>>>,
    pub final_state: DVector<Complex64>,
    /// `H²×H¹` (wave) or `H²` norm of the initial data.
    pub initial_sobolev: f64,
    /// Oracle fell back to the matrix exponential.
    pub fallback: bool,
}

/// `U(t) = e^{tG} U₀` at each requested time.
///
/// Uses the eigendecomposition of `G` when its eigenvector matrix is well
/// conditioned and the scaling-and-squaring exponential otherwise.
pub fn evolve_oracle(gen: &Generator, state0: &DVector<Complex64>, times: &[f64]) -> Result<EvolutionResult> {
    gen.check_state(state0)?;
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Config("evolution times must be finite, nonnegative and increasing".into()));
    }
    let eig = complex_eigen(&gen.matrix).filter(|e| e.condition <= ORACLE_CONDITION_LIMIT);
    let fallback = eig.is_none();
    if fallback {
        log::warn!("generator eigenvectors are ill conditioned; using the matrix exponential");
    }
    let states: Vec<DVector<Complex64>> = match &eig {
        Some(e) => {
            let coeffs = e.vectors.clone().lu().solve(state0).ok_or_else(|| Error::Eigensolver {
                reason: "singular eigenvector matrix".into(),
                residual: f64::NAN,
            })?;
            times
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        return state0.clone();
                    }
                    let scaled = DVector::from_fn(coeffs.len(), |i, _| coeffs[i] * (e.values[i] * t).exp());
                    &e.vectors * scaled
                })
                .collect()
        }
        None => times
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    state0.clone()
                } else {
                    (&gen.matrix * Complex64::new(t, 0.0)).exp() * state0
                }
            })
            .collect(),
    };
    let energies = states.iter().map(|s| gen.energy(s)).collect();
    let final_state = states.last().cloned().unwrap_or_else(|| state0.clone());
    Ok(EvolutionResult {
        kind: gen.kind,
        method: Method::Oracle,
        times: times.to_vec(),
        energies,
        states: Some(states),
        final_state,
        initial_sobolev: gen.reference_norm_sq(state0).sqrt(),
        fallback,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct StepOptions {
    /// Record every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
    pub keep_states: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { record_every: 1, keep_states: false }
    }
}

/// Implicit-midpoint (Cayley) propagator `(I − dt/2 G)⁻¹ (I + dt/2 G)`.
pub fn cayley_propagator(gen: &Generator, dt: f64) -> Result<DMatrix<Complex64>> {
    let n = gen.dim();
    let h = Complex64::new(0.5 * dt, 0.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let lhs = &id - &gen.matrix * h;
    let rhs = &id + &gen.matrix * h;
    lhs.lu().solve(&rhs).ok_or_else(|| Error::Eigensolver {
        reason: format!("singular implicit-midpoint matrix at dt = {dt}"),
        residual: f64::NAN,
    })
}

/// `round(T/dt)` implicit-midpoint steps, recording every step.
pub fn evolve_stepped(gen: &Generator, state0: &DVector<Complex64>, dt: f64, t_end: f64) -> Result<EvolutionResult> {
    evolve_stepped_with(gen, state0, dt, t_end, StepOptions::default())
}

pub fn evolve_stepped_with(
    gen: &Generator,
    state0: &DVector<Complex64>,
    dt: f64,
    t_end: f64,
    opts: StepOptions,
) -> Result<EvolutionResult> {
    gen.check_state(state0)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("dt must be positive (got {dt})")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Config(format!("T must be nonnegative (got {t_end})")));
    }
    let steps = (t_end / dt).round() as usize;
    let every = opts.record_every.max(1);
    let p = cayley_propagator(gen, dt)?;
    let mut state = state0.clone();
    let mut times = vec![0.0];
    let mut energies = vec![gen.energy(&state)];
    let mut states = opts.keep_states.then(|| vec![state.clone()]);
    let mut next = state.clone();
    for step in 1..=steps {
        next.gemv(ONE, &p, &state, ZERO);
        std::mem::swap(&mut state, &mut next);
        if step % every == 0 || step == steps {
            times.push(step as f64 * dt);
            energies.push(gen.energy(&state));
            if let Some(s) = states.as_mut() {
                s.push(state.clone());
            }
        }
    }
    Ok(EvolutionResult {
        kind: gen.kind,
        method: Method::Stepper,
        times,
        energies,
        states,
        final_state: state,
        initial_sobolev: gen.reference_norm_sq(state0).sqrt(),
        fallback: false,
    })
}

impl EvolutionResult {
    /// `C·ref²/log(2+t)^p` at every recorded time.
    pub fn bound_curve(&self, c_star: f64, p: f64) -> Vec<f64> {
        let r2 = self.initial_sobolev.powi(2);
        self.times.iter().map(|&t| c_star * r2 / (2.0 + t).ln().powf(p)).collect()
    }
}

/// `n` log-spaced times on `[t_lo, t_hi]`, preceded by `t = 0`.
pub fn log_times(t_lo: f64, t_hi: f64, n: usize) -> Vec<f64> {
    let mut t = vec![0.0];
    if n == 1 {
        t.push(t_hi);
        return t;
    }
    let (a, b) = (t_lo.ln(), t_hi.ln());
    t.extend((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()));
    t
}
