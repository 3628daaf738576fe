//! Analysis, synthesis and frame operators of a sampled map, frame bounds,
//! totality / μ-independence diagnostics and ladder classification.
//!
//! With Ω the kernel and W = diag(w_j) the quadrature weights:
//!
//! * analysis   T^× f = Ω c                (grid samples of ⟨f, ω_x⟩)
//! * synthesis  T ξ   = Ω^H W ξ            (pairing slots of ∫ ξ(x) ω_x dμ)
//! * frame op.  S     = Ω^H W Ω = T T^×
//!
//! so that ⟨S f, g⟩ = Σ_j w_j ⟨f, ω_{x_j}⟩ conj⟨g, ω_{x_j}⟩.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog::{sample_kernel, KernelMatrix, MapSpec};
use crate::error::{Error, Result};
use crate::grid::{default_ladder, GridFunction, QuadratureGrid, RefinementLadder};
use crate::linalg::{hermitian_eigenpairs, max_abs, svd, svd_full_right, to_vector, CMatrix, Eigenpairs};
use crate::schwartz::{SeminormIndex, TemperedDistributionSample, TestFunction};

pub fn analysis(kernel: &KernelMatrix, f: &TestFunction) -> Result<GridFunction> {
    if f.truncation() != kernel.truncation() {
        return Err(Error::dim("analysis truncation", kernel.truncation(), f.truncation()));
    }
    let c = to_vector(f.coeffs());
    let xi = kernel.entries() * c;
    Ok(GridFunction::new(xi.iter().copied().collect()))
}

pub fn synthesis(kernel: &KernelMatrix, xi: &GridFunction) -> Result<TemperedDistributionSample> {
    xi.check_grid(kernel.grid())?;
    let omega = kernel.entries();
    let weights = kernel.grid().weights();
    let slots = (0..kernel.truncation())
        .map(|n| {
            (0..kernel.node_count())
                .map(|j| xi.values()[j] * omega[(j, n)].conj() * weights[j])
                .sum()
        })
        .collect();
    Ok(TemperedDistributionSample::new(slots))
}

/// T = Ω^H W as an N×M matrix.
pub fn synthesis_matrix(kernel: &KernelMatrix) -> CMatrix {
    let mut t = kernel.entries().adjoint();
    for (j, w) in kernel.grid().weights().iter().enumerate() {
        t.column_mut(j).iter_mut().for_each(|z| *z *= *w);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOperatorMatrix {
    matrix: CMatrix,
    provenance: String,
}

impl FrameOperatorMatrix {
    pub fn from_matrix(matrix: CMatrix, provenance: impl Into<String>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::dim("frame operator", matrix.nrows(), matrix.ncols()));
        }
        Ok(Self {
            matrix,
            provenance: provenance.into(),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn truncation(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// ‖S − S^H‖_max.
    pub fn hermitian_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// ‖S − I‖_max.
    pub fn identity_defect(&self) -> f64 {
        let n = self.truncation();
        max_abs(&(&self.matrix - CMatrix::identity(n, n)))
    }

    pub fn apply(&self, f: &TestFunction) -> Result<TestFunction> {
        if f.truncation() != self.truncation() {
            return Err(Error::dim("frame operator application", self.truncation(), f.truncation()));
        }
        let v = &self.matrix * to_vector(f.coeffs());
        Ok(TestFunction::new(v.iter().copied().collect()))
    }
}

/// S[m][n] = Σ_j w_j conj(Ω[j][m]) Ω[j][n], summed in node order.
pub fn frame_operator(kernel: &KernelMatrix) -> FrameOperatorMatrix {
    let omega = kernel.entries();
    let weights = kernel.grid().weights();
    let n = kernel.truncation();
    let mut s = CMatrix::zeros(n, n);
    for m in 0..n {
        for k in m..n {
            let mut acc = Complex64::default();
            for (j, w) in weights.iter().enumerate() {
                acc += omega[(j, m)].conj() * omega[(j, k)] * *w;
            }
            s[(m, k)] = acc;
            s[(k, m)] = acc.conj();
        }
    }
    let provenance = format!(
        "{};N={};{}",
        kernel.source().map(MapSpec::label).unwrap_or_else(|| "matrix".into()),
        n,
        kernel.grid().fingerprint()
    );
    FrameOperatorMatrix { matrix: s, provenance }
}

pub fn frame_eigenpairs(s: &FrameOperatorMatrix) -> Result<Eigenpairs> {
    hermitian_eigenpairs(s.matrix())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    /// λ_min(S), the best lower bound on the truncated space.
    pub lower: f64,
    /// λ_max(S).
    pub upper: f64,
}

pub fn frame_bounds(s: &FrameOperatorMatrix) -> Result<FrameBounds> {
    let e = frame_eigenpairs(s)?;
    Ok(FrameBounds {
        lower: e.min(),
        upper: e.max(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalityResult {
    pub total: bool,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Near-annihilated direction when the map is not total.
    pub witness: Option<TestFunction>,
}

impl TotalityResult {
    pub fn ratio(&self) -> f64 {
        if self.sigma_max > 0.0 {
            self.sigma_min / self.sigma_max
        } else {
            0.0
        }
    }
}

/// Injectivity of the analysis map, measured on W^{1/2}Ω.
pub fn totality_test(kernel: &KernelMatrix, threshold: f64) -> Result<TotalityResult> {
    check_threshold(threshold)?;
    let n = kernel.truncation();
    let d = svd_full_right(&kernel.weighted())?;
    let (sigma_min, sigma_max) = (d.sigma_min(), d.sigma_max());
    if sigma_max == 0.0 {
        return Ok(TotalityResult {
            total: false,
            sigma_min,
            sigma_max,
            witness: Some(TestFunction::basis(0, n)),
        });
    }
    let total = sigma_min > threshold * sigma_max;
    let witness = (!total).then(|| {
        let v = d.right_vector(d.singular_values.len() - 1);
        TestFunction::new(v.iter().copied().collect())
    });
    Ok(TotalityResult {
        total,
        sigma_min,
        sigma_max,
        witness,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceResult {
    pub independent: bool,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Grid function nearly annihilated by synthesis when not independent.
    pub witness: Option<GridFunction>,
}

impl IndependenceResult {
    pub fn ratio(&self) -> f64 {
        if self.sigma_max > 0.0 {
            self.sigma_min / self.sigma_max
        } else {
            0.0
        }
    }
}

/// Injectivity of the synthesis map on grid functions, measured on the
/// isometric form Ω^H W^{1/2}. Only meaningful with M ≤ N nodes; a finer grid
/// always leaves a discretization kernel.
pub fn mu_independence_test(kernel: &KernelMatrix, threshold: f64) -> Result<IndependenceResult> {
    check_threshold(threshold)?;
    let (m, n) = (kernel.node_count(), kernel.truncation());
    if m > n {
        return Err(Error::InvalidConfig(format!(
            "mu-independence needs a grid with at most N = {n} nodes, got {m}"
        )));
    }
    let b = kernel.weighted().adjoint();
    let d = svd(&b)?;
    let (sigma_min, sigma_max) = (d.sigma_min(), d.sigma_max());
    let independent = sigma_max > 0.0 && sigma_min > threshold * sigma_max;
    let witness = (!independent).then(|| {
        let v = d.right_vector(d.singular_values.len() - 1);
        // back from W^{1/2}ξ to ξ
        GridFunction::new(
            v.iter()
                .zip(kernel.grid().weights())
                .map(|(z, w)| z / w.sqrt())
                .collect(),
        )
    });
    Ok(IndependenceResult {
        independent,
        sigma_min,
        sigma_max,
        witness,
    })
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::InvalidConfig(format!("threshold must be positive, got {threshold}")));
    }
    Ok(())
}

/// Grid with M = N/2 nodes inside the oscillatory region of h_{N-1}, used for
/// μ-independence and moment-surjectivity diagnostics.
pub fn coarse_grid(truncation: usize) -> Result<QuadratureGrid> {
    let half_width = 0.8 * (2.0 * truncation as f64 + 1.0).sqrt();
    if truncation >= 4 {
        return QuadratureGrid::build(half_width, truncation / 4, 2);
    }
    let count = truncation.max(1);
    let h = 2.0 * half_width / count as f64;
    let nodes = (0..count).map(|i| -half_width + h * (i as f64 + 0.5)).collect();
    QuadratureGrid::from_parts(nodes, vec![h; count])
}

/// Smallest C with ‖analysis(f)‖ ≤ C·p_k(f) on the truncated space:
/// √λ_max(D_k^{-1} S D_k^{-1}) with D_k = diag((1+n)^{k/2}).
pub fn bessel_constant(s: &FrameOperatorMatrix, k: SeminormIndex) -> Result<f64> {
    let n = s.truncation();
    let scale: Vec<f64> = (0..n).map(|i| k.weight(i).sqrt().recip()).collect();
    let m = DMatrix::from_fn(n, n, |r, c| s.matrix()[(r, c)] * (scale[r] * scale[c]));
    let e = hermitian_eigenpairs(&m)?;
    Ok(e.max().max(0.0).sqrt())
}

/// Classification thresholds; every field may be overridden from config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Relative change between the last two stages below which a trend is stable.
    pub stability: f64,
    /// Per-stage ratio at or above which a bound is growing.
    pub growth: f64,
    /// Relative singular-value cutoff for totality and μ-independence.
    pub rank_cutoff: f64,
    /// Relative tolerance for tight (A = B) and Parseval (B = 1).
    pub tight_tolerance: f64,
    /// Largest seminorm index tried for Bessel witnesses.
    pub k_max: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            stability: 0.05,
            growth: 1.3,
            rank_cutoff: 1e-6,
            tight_tolerance: 1e-6,
            k_max: 6,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("thresholds.{name} must be positive, got {v}")))
            }
        };
        positive("stability", self.stability)?;
        positive("rank_cutoff", self.rank_cutoff)?;
        positive("tight_tolerance", self.tight_tolerance)?;
        if !(self.growth.is_finite() && self.growth > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "thresholds.growth must exceed 1, got {}",
                self.growth
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    #[serde(rename = "N")]
    pub truncation: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub nodes: usize,
    #[serde(rename = "A")]
    pub lower: f64,
    #[serde(rename = "B")]
    pub upper: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub total: bool,
    pub mu_independent: bool,
    /// σ_min/σ_max of the coarse-grid synthesis map; absent when it could not
    /// be evaluated (custom kernels on fine grids).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub independence_ratio: Option<f64>,
    /// Bessel constants C_k for k = 0..=k_max.
    #[serde(default)]
    pub bessel_constants: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Bounded,
    Growing,
    Vanishing,
    Drifting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trends {
    pub upper: Trend,
    pub lower: Trend,
    /// Consecutive-stage ratios B_{i+1}/B_i.
    pub upper_ratio: Option<f64>,
    pub lower_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Bessel,
    BoundedBessel,
    Total,
    MuIndependent,
    UpperSemiFrame,
    LowerSemiFrame,
    Frame,
    Tight,
    Parseval,
    GelfandBasis,
    RieszBasis,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Bessel => "bessel",
            Label::BoundedBessel => "bounded_bessel",
            Label::Total => "total",
            Label::MuIndependent => "mu_independent",
            Label::UpperSemiFrame => "upper_semi_frame",
            Label::LowerSemiFrame => "lower_semi_frame",
            Label::Frame => "frame",
            Label::Tight => "tight",
            Label::Parseval => "parseval",
            Label::GelfandBasis => "gelfand_basis",
            Label::RieszBasis => "riesz_basis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselWitness {
    pub k: u32,
    /// C_k at the finest stage.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub map: String,
    pub stages: Vec<StageReport>,
    pub trends: Trends,
    pub bessel_witness: Option<BesselWitness>,
    pub labels: Vec<Label>,
}

impl FrameReport {
    pub fn has(&self, label: Label) -> bool {
        self.labels.contains(&label)
    }

    pub fn last_stage(&self) -> &StageReport {
        self.stages.last().expect("report has at least one stage")
    }
}

/// Everything measured on one ladder stage.
pub fn analyze_stage(
    spec: &MapSpec,
    grid: &QuadratureGrid,
    truncation: usize,
    thresholds: &Thresholds,
) -> Result<StageReport> {
    measure_stage(&sample_kernel(spec, grid, truncation)?, thresholds)
}

/// Stage measurements for an already sampled kernel. μ-independence uses the
/// coarse grid when the kernel's map can be resampled, the kernel itself when
/// it has at most N nodes, and is reported as not evaluated otherwise.
pub fn measure_stage(kernel: &KernelMatrix, thresholds: &Thresholds) -> Result<StageReport> {
    let truncation = kernel.truncation();
    let s = frame_operator(kernel);
    let bounds = frame_bounds(&s)?;
    let totality = totality_test(kernel, thresholds.rank_cutoff)?;
    let independence = match kernel.source() {
        Some(spec) if spec.is_resamplable() => {
            let coarse = sample_kernel(spec, &coarse_grid(truncation)?, truncation)?;
            Some(mu_independence_test(&coarse, thresholds.rank_cutoff)?)
        }
        _ if kernel.node_count() <= truncation => Some(mu_independence_test(kernel, thresholds.rank_cutoff)?),
        _ => None,
    };
    let bessel_constants = (0..=thresholds.k_max)
        .map(|k| bessel_constant(&s, SeminormIndex(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(StageReport {
        truncation,
        half_width: kernel.grid().half_width(),
        nodes: kernel.node_count(),
        lower: bounds.lower,
        upper: bounds.upper,
        sigma_min: totality.sigma_min,
        sigma_max: totality.sigma_max,
        total: totality.total,
        mu_independent: independence.as_ref().is_some_and(|r| r.independent),
        independence_ratio: independence.as_ref().map(IndependenceResult::ratio),
        bessel_constants,
    })
}

/// Smallest N_max of the form 8·2^k used to re-derive trends for a map sampled
/// at truncation N.
pub const MIN_CLASSIFICATION_N: usize = 64;

/// Default ladder 8, 16, … up to max(64, N rounded up to 8·2^k). Trends of
/// slowly converging bounds need several doublings past small N.
pub fn classification_ladder(truncation: usize) -> Result<RefinementLadder> {
    let mut n_max = MIN_CLASSIFICATION_N;
    while n_max < truncation {
        n_max *= 2;
    }
    default_ladder(n_max)
}

/// Classification of a sampled kernel: over [`classification_ladder`] when its
/// map is known, otherwise from the single stage it represents.
pub fn classify_kernel(kernel: &KernelMatrix, thresholds: &Thresholds) -> Result<FrameReport> {
    thresholds.validate()?;
    match kernel.source() {
        Some(spec) if spec.is_resamplable() => {
            classify(spec, &classification_ladder(kernel.truncation())?, thresholds)
        }
        source => {
            let label = source.map(MapSpec::label).unwrap_or_else(|| "matrix".into());
            Ok(classify_stages(label, vec![measure_stage(kernel, thresholds)?], thresholds))
        }
    }
}

fn upper_trend(stages: &[StageReport], t: &Thresholds) -> (Trend, Option<f64>) {
    let values: Vec<f64> = stages.iter().map(|s| s.upper).collect();
    let [.., prev, last] = values[..] else {
        return (Trend::Bounded, None);
    };
    if prev <= 0.0 && last <= 0.0 {
        return (Trend::Bounded, None);
    }
    let ratio = last / prev;
    let rel = (last - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
    if rel <= t.stability {
        return (Trend::Bounded, Some(ratio));
    }
    let growing = values.windows(2).all(|w| w[0] > 0.0 && w[1] / w[0] >= t.growth);
    (if growing { Trend::Growing } else { Trend::Drifting }, Some(ratio))
}

fn lower_trend(stages: &[StageReport], t: &Thresholds) -> (Trend, Option<f64>) {
    let last_stage = stages.last().expect("nonempty");
    let floor = t.rank_cutoff * last_stage.upper;
    if last_stage.lower <= floor || last_stage.lower <= 0.0 {
        return (Trend::Vanishing, None);
    }
    let [.., prev, last] = stages.iter().map(|s| s.lower).collect::<Vec<_>>()[..] else {
        return (Trend::Bounded, None);
    };
    let ratio = last / prev;
    let rel = (last - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
    if rel <= t.stability {
        (Trend::Bounded, Some(ratio))
    } else if prev / last >= t.growth {
        (Trend::Vanishing, Some(ratio))
    } else {
        (Trend::Drifting, Some(ratio))
    }
}

fn bessel_witness(stages: &[StageReport], t: &Thresholds) -> Option<BesselWitness> {
    let constants: Vec<Vec<f64>> = stages.iter().map(|s| s.bessel_constants.clone()).collect();
    witness_from_constants(&constants, t)
}

/// Smallest k whose Bessel constant C_k is finite and does not grow by more
/// than the stability tolerance between the last two stages. `constants[i][k]`
/// is C_k on stage i.
pub fn witness_from_constants(constants: &[Vec<f64>], t: &Thresholds) -> Option<BesselWitness> {
    (0..=t.k_max).find_map(|k| {
        let seq: Vec<f64> = constants.iter().map(|c| c.get(k as usize).copied()).collect::<Option<_>>()?;
        let last = *seq.last()?;
        if !last.is_finite() {
            return None;
        }
        let bounded = match seq[..] {
            [.., prev, last] => last <= prev * (1.0 + t.stability) || (prev == 0.0 && last == 0.0),
            _ => true,
        };
        bounded.then_some(BesselWitness { k, constant: last })
    })
}

/// Runs every ladder stage and assembles the labels from the stabilized trends.
pub fn classify(spec: &MapSpec, ladder: &RefinementLadder, thresholds: &Thresholds) -> Result<FrameReport> {
    thresholds.validate()?;
    spec.validate()?;
    let stages = ladder
        .stages()
        .iter()
        .map(|stage| {
            let grid = QuadratureGrid::for_stage(stage)?;
            analyze_stage(spec, &grid, stage.truncation, thresholds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(classify_stages(spec.label(), stages, thresholds))
}

/// Label assembly from already measured stages.
pub fn classify_stages(map: String, stages: Vec<StageReport>, t: &Thresholds) -> FrameReport {
    let (upper, upper_ratio) = upper_trend(&stages, t);
    let (lower, lower_ratio) = lower_trend(&stages, t);
    let witness = bessel_witness(&stages, t);
    let last = stages.last().expect("nonempty");

    let bessel = witness.is_some();
    let bounded_bessel = bessel && upper == Trend::Bounded;
    let total = last.total;
    let mu_independent = last.mu_independent;
    let upper_semi = bounded_bessel && total;
    let lower_semi = bessel && lower == Trend::Bounded;
    let frame = bounded_bessel && lower_semi;
    let tight = frame && (last.upper - last.lower).abs() <= t.tight_tolerance * last.upper;
    let parseval = tight && (last.upper - 1.0).abs() <= t.tight_tolerance;
    let gelfand = parseval && mu_independent;
    let riesz = frame && mu_independent;

    let labels = [
        (bessel, Label::Bessel),
        (bounded_bessel, Label::BoundedBessel),
        (total, Label::Total),
        (mu_independent, Label::MuIndependent),
        (upper_semi, Label::UpperSemiFrame),
        (lower_semi, Label::LowerSemiFrame),
        (frame, Label::Frame),
        (tight, Label::Tight),
        (parseval, Label::Parseval),
        (gelfand, Label::GelfandBasis),
        (riesz, Label::RieszBasis),
    ]
    .into_iter()
    .filter_map(|(on, l)| on.then_some(l))
    .collect();

    FrameReport {
        map,
        stages,
        trends: Trends {
            upper,
            lower,
            upper_ratio,
            lower_ratio,
        },
        bessel_witness: witness,
        labels,
    }
}
