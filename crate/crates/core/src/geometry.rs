//! Domains, Lipschitz metrics and P1 finite-element assembly of the
//! Laplace–Beltrami operator.
//!
//! In one dimension the operator is `(1/√g) d/dx (√g g⁻¹ du/dx)`, which gives
//! `K_ij = ∫ √g g⁻¹ φ_i' φ_j' dx` and `M_ij = ∫ √g φ_i φ_j dx`. The metric is
//! sampled once per element at the midpoint. Rectangles are tensor products
//! of two intervals with a constant metric, assembled as Kronecker sums.

use serde::{Deserialize, Serialize};

use crate::damping::DampingProfile;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Interval { length: f64 },
    Circle { circumference: f64 },
    Rectangle { lx: f64, ly: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
    Neumann,
    Periodic,
}

impl Boundary {
    /// Whether constants lie in the kernel of the stiffness matrix.
    pub fn has_zero_mode(self) -> bool {
        !matches!(self, Boundary::Dirichlet)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub shape: Shape,
    pub boundary: Boundary,
    /// Number of elements (per axis for rectangles).
    pub elements: usize,
}

impl DomainSpec {
    pub fn interval(length: f64, elements: usize, boundary: Boundary) -> Self {
        Self { shape: Shape::Interval { length }, boundary, elements }
    }

    pub fn unit_interval(elements: usize, boundary: Boundary) -> Self {
        Self::interval(1.0, elements, boundary)
    }

    pub fn circle(circumference: f64, elements: usize) -> Self {
        Self { shape: Shape::Circle { circumference }, boundary: Boundary::Periodic, elements }
    }

    pub fn rectangle(lx: f64, ly: f64, elements: usize, boundary: Boundary) -> Self {
        Self { shape: Shape::Rectangle { lx, ly }, boundary, elements }
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements < 2 {
            return Err(Error::Domain(format!("need at least 2 elements, got {}", self.elements)));
        }
        let lengths: Vec<f64> = match self.shape {
            Shape::Interval { length } => vec![length],
            Shape::Circle { circumference } => vec![circumference],
            Shape::Rectangle { lx, ly } => vec![lx, ly],
        };
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::Domain(format!("side lengths must be positive, got {lengths:?}")));
        }
        match (&self.shape, self.boundary) {
            (Shape::Circle { .. }, b) if b != Boundary::Periodic => {
                Err(Error::Domain("a circle requires periodic boundary conditions".into()))
            }
            (Shape::Interval { .. } | Shape::Rectangle { .. }, Boundary::Periodic) => {
                Err(Error::Domain("periodic conditions are only available on the circle".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn dimension(&self) -> usize {
        match self.shape {
            Shape::Rectangle { .. } => 2,
            _ => 1,
        }
    }

    /// Side length along the first axis.
    pub fn x_length(&self) -> f64 {
        match self.shape {
            Shape::Interval { length } => length,
            Shape::Circle { circumference } => circumference,
            Shape::Rectangle { lx, .. } => lx,
        }
    }
}

/// Metric coefficient `g(x) > 0` along the first axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Constant { g0: f64 },
    /// Nodal samples `(x, g(x))`, linearly interpolated.
    PiecewiseLinear { nodes: Vec<(f64, f64)> },
}

impl Default for MetricSpec {
    fn default() -> Self {
        MetricSpec::Constant { g0: 1.0 }
    }
}

impl MetricSpec {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MetricSpec::Constant { .. })
    }

    pub fn validate(&self, length: f64) -> Result<()> {
        match self {
            MetricSpec::Constant { g0 } => {
                if !(*g0 > 0.0) || !g0.is_finite() {
                    return Err(Error::NonPositiveMetric { value: *g0, at: 0.0 });
                }
            }
            MetricSpec::PiecewiseLinear { nodes } => {
                if nodes.len() < 2 {
                    return Err(Error::Domain("piecewise-linear metric needs at least two nodes".into()));
                }
                if nodes.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::Domain("metric nodes must have strictly increasing x".into()));
                }
                if let Some(&(x, g)) = nodes.iter().find(|(_, g)| !(*g > 0.0) || !g.is_finite()) {
                    return Err(Error::NonPositiveMetric { value: g, at: x });
                }
                let tol = 1e-12 * length;
                if nodes[0].0 > tol || nodes[nodes.len() - 1].0 < length - tol {
                    return Err(Error::Domain(format!(
                        "metric nodes span [{}, {}] but the domain is [0, {length}]",
                        nodes[0].0,
                        nodes[nodes.len() - 1].0
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MetricSpec::Constant { g0 } => *g0,
            MetricSpec::PiecewiseLinear { nodes } => {
                let k = nodes.partition_point(|&(xn, _)| xn <= x);
                if k == 0 {
                    nodes[0].1
                } else if k == nodes.len() {
                    nodes[k - 1].1
                } else {
                    let (x0, g0) = nodes[k - 1];
                    let (x1, g1) = nodes[k];
                    g0 + (g1 - g0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            MetricSpec::Constant { .. } => 0.0,
            MetricSpec::PiecewiseLinear { nodes } => nodes
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn g_min(&self) -> f64 {
        match self {
            MetricSpec::Constant { g0 } => *g0,
            MetricSpec::PiecewiseLinear { nodes } => nodes.iter().map(|n| n.1).fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub nodes: [usize; 2],
    pub x0: f64,
    pub x1: f64,
    /// `√g` at the midpoint.
    pub sqrt_g: f64,
    /// `g` at the midpoint.
    pub g: f64,
}

impl Element {
    pub fn length(&self) -> f64 {
        self.x1 - self.x0
    }

    /// Riemannian length `√g h`.
    pub fn volume(&self) -> f64 {
        self.sqrt_g * self.length()
    }
}

/// One-dimensional P1 discretization with matrices on all nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub coords: Vec<f64>,
    pub elements: Vec<Element>,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub free: Vec<usize>,
    pub periodic: bool,
    pub length: f64,
}

impl Axis {
    fn build(length: f64, n: usize, boundary: Boundary, metric: &MetricSpec) -> Self {
        let periodic = boundary == Boundary::Periodic;
        let h = length / n as f64;
        let n_nodes = if periodic { n } else { n + 1 };
        let coords: Vec<f64> = (0..n_nodes).map(|i| i as f64 * h).collect();
        let elements: Vec<Element> = (0..n)
            .map(|e| {
                let x0 = e as f64 * h;
                let x1 = if e + 1 == n { length } else { (e + 1) as f64 * h };
                let g = metric.eval(0.5 * (x0 + x1));
                Element { nodes: [e, (e + 1) % n_nodes], x0, x1, sqrt_g: g.sqrt(), g }
            })
            .collect();
        let mut kt = Vec::with_capacity(4 * n);
        let mut mt = Vec::with_capacity(4 * n);
        for el in &elements {
            let hl = el.length();
            let k = el.sqrt_g / el.g / hl;
            let m = el.sqrt_g * hl / 6.0;
            let [i, j] = el.nodes;
            kt.extend([(i, i, k), (j, j, k), (i, j, -k), (j, i, -k)]);
            mt.extend([(i, i, 2.0 * m), (j, j, 2.0 * m), (i, j, m), (j, i, m)]);
        }
        let free = match boundary {
            Boundary::Dirichlet => (1..n_nodes - 1).collect(),
            _ => (0..n_nodes).collect(),
        };
        Self {
            coords,
            stiffness: CsrMatrix::from_triplets(n_nodes, n_nodes, &kt),
            mass: CsrMatrix::from_triplets(n_nodes, n_nodes, &mt),
            elements,
            free,
            periodic,
            length,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    /// `Σ_e w_e M_e` on all nodes of this axis.
    pub fn weighted_mass(&self, element_weights: &[f64]) -> CsrMatrix {
        assert_eq!(element_weights.len(), self.elements.len());
        let mut t = Vec::with_capacity(4 * self.elements.len());
        for (el, &w) in self.elements.iter().zip(element_weights) {
            let m = w * el.sqrt_g * el.length() / 6.0;
            let [i, j] = el.nodes;
            t.extend([(i, i, 2.0 * m), (j, j, 2.0 * m), (i, j, m), (j, i, m)]);
        }
        CsrMatrix::from_triplets(self.n_nodes(), self.n_nodes(), &t)
    }

    /// `∫ √g a φ_i φ_j` with `a` the P1 interpolant of nodal values
    /// (exact for the product of three linear functions).
    pub fn damping_mass(&self, nodal: &[f64]) -> CsrMatrix {
        assert_eq!(nodal.len(), self.n_nodes());
        let mut t = Vec::with_capacity(4 * self.elements.len());
        for el in &self.elements {
            let [i, j] = el.nodes;
            let (ai, aj) = (nodal[i], nodal[j]);
            let s = el.sqrt_g * el.length() / 12.0;
            t.extend([
                (i, i, s * (3.0 * ai + aj)),
                (j, j, s * (ai + 3.0 * aj)),
                (i, j, s * (ai + aj)),
                (j, i, s * (ai + aj)),
            ]);
        }
        CsrMatrix::from_triplets(self.n_nodes(), self.n_nodes(), &t)
    }

    pub fn volume(&self) -> f64 {
        self.elements.iter().map(Element::volume).sum()
    }
}

/// Assembled stiffness and mass matrices on the free degrees of freedom,
/// with the node layout and boundary metadata needed downstream.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteOperator {
    pub domain: DomainSpec,
    pub metric: MetricSpec,
    axes: Vec<Axis>,
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    nodes: Vec<[f64; 2]>,
    free_dofs: Vec<usize>,
}

/// Assembles the P1 Laplace–Beltrami discretization of `domain` with `metric`.
pub fn assemble(domain: &DomainSpec, metric: &MetricSpec) -> Result<DiscreteOperator> {
    domain.validate()?;
    let n = domain.elements;
    match domain.shape {
        Shape::Interval { length } | Shape::Circle { circumference: length } => {
            metric.validate(length)?;
            let axis = Axis::build(length, n, domain.boundary, metric);
            let stiffness = axis.stiffness.restrict(&axis.free);
            let mass = axis.mass.restrict(&axis.free);
            let nodes = axis.coords.iter().map(|&x| [x, 0.0]).collect();
            let free_dofs = axis.free.clone();
            Ok(DiscreteOperator {
                domain: domain.clone(),
                metric: metric.clone(),
                axes: vec![axis],
                stiffness,
                mass,
                nodes,
                free_dofs,
            })
        }
        Shape::Rectangle { lx, ly } => {
            if !metric.is_constant() {
                return Err(Error::UnsupportedMetric);
            }
            metric.validate(lx)?;
            let ax = Axis::build(lx, n, domain.boundary, metric);
            let ay = Axis::build(ly, n, domain.boundary, metric);
            // Node index iy * nx + ix, so y-matrices sit on the left of ⊗.
            let k_full = CsrMatrix::linear_combination(
                1.0,
                &CsrMatrix::kron(&ay.mass, &ax.stiffness),
                1.0,
                &CsrMatrix::kron(&ay.stiffness, &ax.mass),
            );
            let m_full = CsrMatrix::kron(&ay.mass, &ax.mass);
            let nx = ax.n_nodes();
            let free_dofs: Vec<usize> = ay
                .free
                .iter()
                .flat_map(|&iy| ax.free.iter().map(move |&ix| iy * nx + ix))
                .collect();
            let nodes = ay
                .coords
                .iter()
                .flat_map(|&y| ax.coords.iter().map(move |&x| [x, y]))
                .collect();
            Ok(DiscreteOperator {
                domain: domain.clone(),
                metric: metric.clone(),
                stiffness: k_full.restrict(&free_dofs),
                mass: m_full.restrict(&free_dofs),
                axes: vec![ax, ay],
                nodes,
                free_dofs,
            })
        }
    }
}

impl DiscreteOperator {
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn x_axis(&self) -> &Axis {
        &self.axes[0]
    }

    pub fn boundary(&self) -> Boundary {
        self.domain.boundary
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    /// Riemannian volume of the domain.
    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Axis::volume).product()
    }

    pub fn metric_lipschitz(&self) -> f64 {
        self.metric.lipschitz_constant()
    }

    /// Lifts a matrix given on the x-axis nodes to the full node set
    /// (`⊗` with the y-mass in 2-D) and restricts it to the free dofs.
    pub fn lift_x_matrix(&self, x_matrix: &CsrMatrix) -> CsrMatrix {
        let full = match self.axes.len() {
            1 => x_matrix.clone(),
            _ => CsrMatrix::kron(&self.axes[1].mass, x_matrix),
        };
        full.restrict(&self.free_dofs)
    }

    /// `Σ_e w_e M_e` over x-elements (stripes in 2-D), on the free dofs.
    pub fn weighted_mass(&self, x_element_weights: &[f64]) -> CsrMatrix {
        self.lift_x_matrix(&self.x_axis().weighted_mass(x_element_weights))
    }

    /// Riemannian measure of a set described by per-x-element covered
    /// fractions.
    pub fn measure(&self, x_element_weights: &[f64]) -> f64 {
        let x: f64 = self
            .x_axis()
            .elements
            .iter()
            .zip(x_element_weights)
            .map(|(e, w)| w * e.volume())
            .sum();
        x * self.axes[1..].iter().map(Axis::volume).product::<f64>()
    }

    /// Restriction of a nodal vector to the free dofs.
    pub fn to_free(&self, nodal: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&i| nodal[i]).collect()
    }

    /// Extension of a free-dof vector by zeros on eliminated nodes.
    pub fn from_free(&self, free: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        for (&i, &v) in self.free_dofs.iter().zip(free) {
            out[i] = v;
        }
        out
    }

    /// The constant function 1 on the free dofs.
    pub fn ones(&self) -> Vec<f64> {
        vec![1.0; self.n_free()]
    }
}

/// Discrete multiplication operator `D_ij = ∫ √g a φ_i φ_j`, on free dofs.
pub fn damping_matrix(op: &DiscreteOperator, profile: &DampingProfile) -> Result<CsrMatrix> {
    if profile.nodal.len() != op.n_nodes() {
        return Err(Error::Mismatch(format!(
            "damping has {} nodal values but the mesh has {} nodes",
            profile.nodal.len(),
            op.n_nodes()
        )));
    }
    if let Some(&v) = profile.nodal.iter().find(|&&v| v < 0.0 || v.is_nan()) {
        return Err(Error::NegativeDamping(v));
    }
    let x_profile = profile.x_profile(op)?;
    Ok(op.lift_x_matrix(&op.x_axis().damping_mass(&x_profile)))
}
