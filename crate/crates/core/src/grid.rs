//! Discretization of the measure space (X, μ): X = [−L, L] with Lebesgue
//! measure, integrated by composite Gauss-Legendre panels.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schwartz::hermite_row;

/// Margin added to the Hermite turning point √(2N+1) when choosing L.
pub const LADDER_MARGIN: f64 = 8.0;
/// Points per panel on ladder and default grids.
pub const DEFAULT_ORDER: usize = 12;
/// Widest panel allowed on ladder grids; keeps Gaussian tails resolved at 1e-12.
pub const MAX_PANEL_WIDTH: f64 = 0.5;

/// Gauss-Legendre nodes and weights on [−1, 1], ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    half_width: f64,
    panels: usize,
    order: usize,
}

impl QuadratureGrid {
    /// Composite Gauss-Legendre rule with `panels` equal panels of `order`
    /// points on [−L, L].
    pub fn build(half_width: f64, panels: usize, order: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid half-width must be positive and finite, got {half_width}"
            )));
        }
        if panels < 1 {
            return Err(Error::InvalidConfig("grid needs at least one panel".into()));
        }
        if order < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid order must be at least 2, got {order}"
            )));
        }
        let (ref_nodes, ref_weights) = gauss_legendre(order);
        let width = 2.0 * half_width / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            // Centres are computed symmetrically so that the grid is mirror
            // symmetric to rounding.
            let centre = (2.0 * p as f64 + 1.0 - panels as f64) * 0.5 * width;
            for (t, w) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(centre + 0.5 * width * t);
                weights.push(0.5 * width * w);
            }
        }
        Ok(Self {
            nodes,
            weights,
            half_width,
            panels,
            order,
        })
    }

    /// Grid used when nothing else is configured: [−16, 16], 64 panels of 8.
    pub fn default_grid() -> Self {
        Self::build(16.0, 64, DEFAULT_ORDER).expect("static grid parameters")
    }

    /// Grid attached to a ladder stage of truncation N.
    pub fn for_stage(stage: &LadderStage) -> Result<Self> {
        Self::build(stage.half_width, stage.panels, stage.order)
    }

    /// N-point Gauss-Hermite collocation grid for the Hermite functions:
    /// nodes are the zeros of h_N and weights the Christoffel numbers
    /// 1/Σ_{n<N} h_n(x_j)², so that Σ_j w_j h_m(x_j) h_n(x_j) = δ_mn for
    /// m, n < N.
    pub fn gauss_hermite(points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::InvalidConfig("Gauss-Hermite grid needs at least one point".into()));
        }
        // Golub-Welsch: eigenvalues of the Jacobi matrix of the recurrence.
        let jacobi = DMatrix::from_fn(points, points, |r, c| {
            if r.abs_diff(c) == 1 {
                (r.max(c) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        let weights = nodes
            .iter()
            .map(|&x| hermite_row(points, x).iter().map(|h| h * h).sum::<f64>().recip())
            .collect();
        Self::from_parts(nodes, weights)
    }

    /// Degenerate grid over arbitrary nodes with explicit weights, e.g. a
    /// counting measure on a discrete X.
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::dim("grid weights", nodes.len(), weights.len()));
        }
        if nodes.is_empty() {
            return Err(Error::InvalidConfig("grid must have at least one node".into()));
        }
        if nodes.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::InvalidConfig("grid nodes must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidConfig("grid weights must be positive".into()));
        }
        let half_width = nodes.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let len = nodes.len();
        Ok(Self {
            nodes,
            weights,
            half_width,
            panels: len,
            order: 1,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ_j w_j f(x_j), summed in node order.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Node indices belonging to panel `p`.
    pub fn panel_range(&self, p: usize) -> std::ops::Range<usize> {
        p * self.order..(p + 1) * self.order
    }

    /// Samples a function on the nodes.
    pub fn sample<F: Fn(f64) -> Complex64>(&self, f: F) -> GridFunction {
        GridFunction::new(self.nodes.iter().map(|&x| f(x)).collect())
    }

    /// Short textual identity of the grid, used as provenance.
    pub fn fingerprint(&self) -> String {
        format!(
            "L={:.17e};panels={};order={};nodes={}",
            self.half_width,
            self.panels,
            self.order,
            self.len()
        )
    }
}

/// Element of L²(X, μ) sampled on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    /// Values with independent standard-normal real and imaginary parts.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self::new(
            (0..len)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect(),
        )
    }

    pub fn zero(len: usize) -> Self {
        Self::new(vec![Complex64::default(); len])
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub(crate) fn check_grid(&self, grid: &QuadratureGrid) -> Result<()> {
        if self.len() != grid.len() {
            return Err(Error::dim("grid function length", grid.len(), self.len()));
        }
        Ok(())
    }
}

/// Σ_j w_j ξ_j conj(η_j).
pub fn l2x_inner(xi: &GridFunction, eta: &GridFunction, grid: &QuadratureGrid) -> Result<Complex64> {
    xi.check_grid(grid)?;
    eta.check_grid(grid)?;
    Ok(xi
        .values
        .iter()
        .zip(&eta.values)
        .zip(&grid.weights)
        .map(|((a, b), w)| a * b.conj() * *w)
        .sum())
}

pub fn l2x_norm(xi: &GridFunction, grid: &QuadratureGrid) -> Result<f64> {
    xi.check_grid(grid)?;
    Ok(xi
        .values
        .iter()
        .zip(&grid.weights)
        .map(|(a, w)| a.norm_sqr() * w)
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderStage {
    pub truncation: usize,
    pub half_width: f64,
    pub panels: usize,
    pub order: usize,
}

impl LadderStage {
    /// Stage for truncation N with L = √(2N+1) + 8, at least 10·N nodes and
    /// panels no wider than [`MAX_PANEL_WIDTH`].
    pub fn standard(truncation: usize) -> Self {
        let half_width = (2.0 * truncation as f64 + 1.0).sqrt() + LADDER_MARGIN;
        let order = DEFAULT_ORDER;
        let by_count = (10 * truncation).div_ceil(order);
        let by_width = (2.0 * half_width / MAX_PANEL_WIDTH).ceil() as usize;
        let panels = by_count.max(by_width).max(1);
        Self {
            truncation,
            half_width,
            panels,
            order,
        }
    }

    pub fn node_count(&self) -> usize {
        self.panels * self.order
    }
}

/// Sequence of progressively finer discretizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLadder {
    stages: Vec<LadderStage>,
}

impl RefinementLadder {
    pub fn new(stages: Vec<LadderStage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidConfig("ladder needs at least one stage".into()));
        }
        for s in &stages {
            if s.truncation == 0 {
                return Err(Error::InvalidConfig("ladder truncation must be positive".into()));
            }
            let min_l = (2.0 * s.truncation as f64 + 1.0).sqrt();
            if s.half_width < min_l {
                return Err(Error::InvalidConfig(format!(
                    "ladder stage N={} has L={} below the turning point {min_l}",
                    s.truncation, s.half_width
                )));
            }
            QuadratureGrid::build(s.half_width, s.panels, s.order)?;
        }
        for w in stages.windows(2) {
            if w[1].truncation < w[0].truncation {
                return Err(Error::InvalidConfig(
                    "ladder truncations must be nondecreasing".into(),
                ));
            }
            if w[1] == w[0] {
                return Err(Error::InvalidConfig("ladder stages must be distinct".into()));
            }
        }
        let first = stages.first().map(|s| s.truncation);
        let last = stages.last().map(|s| s.truncation);
        if stages.len() > 1 && first == last {
            return Err(Error::InvalidConfig(
                "ladder truncation must increase overall".into(),
            ));
        }
        Ok(Self { stages })
    }

    /// Standard stages for an explicit list of truncations.
    pub fn from_truncations(truncations: &[usize]) -> Result<Self> {
        Self::new(truncations.iter().map(|&n| LadderStage::standard(n)).collect())
    }

    pub fn stages(&self) -> &[LadderStage] {
        &self.stages
    }

    pub fn last(&self) -> &LadderStage {
        self.stages.last().expect("ladder is nonempty")
    }
}

/// Stages N = 8, 16, …, N_max.
pub fn default_ladder(n_max: usize) -> Result<RefinementLadder> {
    if n_max < 8 || !n_max.is_multiple_of(8) || !(n_max / 8).is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "ladder N_max must be 8·2^k, got {n_max}"
        )));
    }
    let mut truncations = Vec::new();
    let mut n = 8;
    while n <= n_max {
        truncations.push(n);
        n *= 2;
    }
    RefinementLadder::from_truncations(&truncations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schwartz::hermite_eval;

    #[test]
    fn gauss_legendre_exactness() {
        let g = QuadratureGrid::build(1.0, 1, 2).unwrap();
        assert!((g.integrate(|x| x * x) - 2.0 / 3.0).abs() < 1e-14);
        for order in 2..=12 {
            let (x, w) = gauss_legendre(order);
            let deg = 2 * order - 1;
            for d in 0..=deg {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((q - exact).abs() < 1e-14, "order {order} degree {d}");
            }
        }
    }

    #[test]
    fn grid_measure_and_invariants() {
        let g = QuadratureGrid::build(5.0, 10, 8).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 10.0).abs() < 1e-12);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes().iter().all(|x| x.abs() <= 5.0));
        assert!(g.weights().iter().all(|&w| w > 0.0));
        let n = g.len();
        for j in 0..n {
            assert!((g.nodes()[j] + g.nodes()[n - 1 - j]).abs() < 1e-14);
            assert!((g.weights()[j] - g.weights()[n - 1 - j]).abs() < 1e-14);
        }
    }

    #[test]
    fn build_rejects_bad_config() {
        assert!(matches!(QuadratureGrid::build(0.0, 2, 4), Err(Error::InvalidConfig(_))));
        assert!(QuadratureGrid::build(-1.0, 2, 4).is_err());
        assert!(QuadratureGrid::build(1.0, 0, 4).is_err());
        assert!(QuadratureGrid::build(1.0, 2, 1).is_err());
    }

    #[test]
    fn default_grid_normalizes_gaussian() {
        let g = QuadratureGrid::default_grid();
        assert!((g.integrate(|x| hermite_eval(0, x).powi(2)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l2x_inner_examples() {
        let g = QuadratureGrid::build(3.0, 4, 4).unwrap();
        let one = g.sample(|_| Complex64::new(1.0, 0.0));
        assert!((l2x_inner(&one, &one, &g).unwrap().re - 6.0).abs() < 1e-14);
        let d = QuadratureGrid::default_grid();
        let h0 = d.sample(|x| Complex64::new(hermite_eval(0, x), 0.0));
        let h1 = d.sample(|x| Complex64::new(hermite_eval(1, x), 0.0));
        assert!(l2x_inner(&h0, &h1, &d).unwrap().norm() < 1e-12);
        assert!(l2x_inner(&h0, &one, &d).is_err());
    }

    #[test]
    fn ladder_shapes() {
        let l = default_ladder(8).unwrap();
        assert_eq!(l.stages().len(), 1);
        let s = l.stages()[0];
        assert_eq!(s.truncation, 8);
        assert!((s.half_width - (17f64.sqrt() + 8.0)).abs() < 1e-14);
        assert!(s.node_count() >= 80);
        let l = default_ladder(32).unwrap();
        assert_eq!(l.stages().len(), 3);
        assert!(l.stages().windows(2).all(|w| w[0].half_width < w[1].half_width));
        assert!(default_ladder(24).is_err());
        assert!(default_ladder(4).is_err());
        assert!(RefinementLadder::new(vec![]).is_err());
    }

    #[test]
    fn every_stage_integrates_top_hermite_function() {
        for stage in default_ladder(64).unwrap().stages() {
            let g = QuadratureGrid::for_stage(stage).unwrap();
            let n = stage.truncation - 1;
            let q = g.integrate(|x| hermite_eval(n, x).powi(2));
            assert!((q - 1.0).abs() < 1e-9, "N={}", stage.truncation);
        }
    }

    #[test]
    fn discrete_grid_from_parts() {
        let g = QuadratureGrid::from_parts(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(g.len(), 3);
        assert!(QuadratureGrid::from_parts(vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(QuadratureGrid::from_parts(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn gauss_hermite_is_discretely_orthonormal() {
        for n in [1, 5, 16, 40] {
            let g = QuadratureGrid::gauss_hermite(n).unwrap();
            assert_eq!(g.len(), n);
            for (a, b) in g.nodes().iter().zip(g.nodes().iter().rev()) {
                assert!((a + b).abs() < 1e-12);
            }
            for x in g.nodes() {
                assert!(hermite_eval(n, *x).abs() < 1e-11, "N={n} x={x}");
            }
            for m in 0..n {
                for k in 0..n {
                    let q: f64 = g
                        .nodes()
                        .iter()
                        .zip(g.weights())
                        .map(|(&x, w)| w * hermite_eval(m, x) * hermite_eval(k, x))
                        .sum();
                    let expected = if m == k { 1.0 } else { 0.0 };
                    assert!((q - expected).abs() < 1e-11, "N={n} ({m},{k}) {q}");
                }
            }
        }
        assert!(QuadratureGrid::gauss_hermite(0).is_err());
    }
}
