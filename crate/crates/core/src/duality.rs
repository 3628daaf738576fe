//! Canonical dual frames, duality checks, reconstruction and the
//! Parseval / Gel'fand / Riesz characterizations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{sample_kernel, KernelMatrix};
use crate::error::{Error, Result};
use crate::frame::{
    analysis, classify_kernel, coarse_grid, frame_bounds, frame_eigenpairs, frame_operator,
    mu_independence_test, classification_ladder, synthesis, FrameBounds, Label, Thresholds,
};
use crate::grid::QuadratureGrid;
use crate::linalg::svd;
use crate::schwartz::{inner_product, TestFunction};

/// Seed for the random test vectors used by the duality and Parseval checks.
pub const CHECK_SEED: u64 = 0x5eed_d0a1;
/// Trials used when a defect is computed implicitly.
pub const DEFAULT_TRIALS: usize = 16;
/// Relative eigenvalue cutoff below which S is not inverted.
pub const INVERSION_CUTOFF: f64 = 1e-12;
pub const PARSEVAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DualPair {
    omega: KernelMatrix,
    theta: KernelMatrix,
    duality_defect: f64,
}

impl DualPair {
    /// Pairs two kernels on the same grid and truncation and measures how far
    /// they are from being dual.
    pub fn new(omega: KernelMatrix, theta: KernelMatrix) -> Result<Self> {
        if omega.truncation() != theta.truncation() {
            return Err(Error::dim("dual pair truncation", omega.truncation(), theta.truncation()));
        }
        if omega.grid() != theta.grid() {
            return Err(Error::InvalidConfig("dual pair kernels live on different grids".into()));
        }
        let mut pair = Self {
            omega,
            theta,
            duality_defect: 0.0,
        };
        pair.duality_defect = verify_duality(&pair, DEFAULT_TRIALS)?;
        Ok(pair)
    }

    pub fn omega(&self) -> &KernelMatrix {
        &self.omega
    }

    pub fn theta(&self) -> &KernelMatrix {
        &self.theta
    }

    pub fn duality_defect(&self) -> f64 {
        self.duality_defect
    }
}

/// θ = Ω·S^{-1}, so that analysis_θ(f) = analysis_ω(S^{-1} f).
pub fn canonical_dual(omega: &KernelMatrix) -> Result<DualPair> {
    let s = frame_operator(omega);
    let eig = frame_eigenpairs(&s)?;
    let (lambda_min, lambda_max) = (eig.min(), eig.max());
    if !(lambda_max > 0.0 && lambda_min > INVERSION_CUTOFF * lambda_max) {
        return Err(Error::NotAFrame { lambda_min, lambda_max });
    }
    let s_inv = eig.reassemble(f64::recip);
    let theta = KernelMatrix::new(omega.entries() * s_inv, omega.grid().clone())?;
    DualPair::new(omega.clone(), theta)
}

/// Max over random pairs of |⟨f,g⟩ − Σ_j w_j ξ^θ_f(x_j) conj ξ^ω_g(x_j)| / (‖f‖‖g‖).
/// Each trial checks an independent pair (f, g) and the diagonal pair (f, f).
pub fn verify_duality(pair: &DualPair, trials: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED);
    verify_duality_with(pair, trials, &mut rng)
}

pub fn verify_duality_with<R: Rng + ?Sized>(pair: &DualPair, trials: usize, rng: &mut R) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidConfig("duality check needs at least one trial".into()));
    }
    cross_identity_defect(&pair.theta, &pair.omega, trials, rng)
}

/// Largest normalized violation of ⟨f,g⟩ = Σ_j w_j ξ^a_f conj ξ^b_g.
fn cross_identity_defect<R: Rng + ?Sized>(
    a: &KernelMatrix,
    b: &KernelMatrix,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let n = a.truncation();
    let weights = a.grid().weights();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = TestFunction::random(n, rng);
        let g = TestFunction::random(n, rng);
        let xf = analysis(a, &f)?;
        for h in [&g, &f] {
            let xh = analysis(b, h)?;
            let sum: num_complex::Complex64 = xf
                .values()
                .iter()
                .zip(xh.values())
                .zip(weights)
                .map(|((p, q), w)| p * q.conj() * *w)
                .sum();
            let defect = (inner_product(&f, h)? - sum).norm() / (f.norm() * h.norm());
            worst = worst.max(defect);
        }
    }
    Ok(worst)
}

/// Frame bounds of θ, checked against B_ω^{-1} ≤ A_θ and B_θ ≤ A_ω^{-1}.
pub fn dual_bounds(pair: &DualPair) -> Result<FrameBounds> {
    let omega = frame_bounds(&frame_operator(&pair.omega))?;
    let theta = frame_bounds(&frame_operator(&pair.theta))?;
    if omega.lower <= 0.0 {
        return Err(Error::NotAFrame {
            lambda_min: omega.lower,
            lambda_max: omega.upper,
        });
    }
    let tol = 1e-8 / omega.lower;
    if theta.lower < 1.0 / omega.upper - tol || theta.upper > 1.0 / omega.lower + tol {
        return Err(Error::Numeric(format!(
            "dual bounds [{}, {}] violate [1/B, 1/A] = [{}, {}]",
            theta.lower,
            theta.upper,
            1.0 / omega.upper,
            1.0 / omega.lower
        )));
    }
    Ok(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionOrder {
    /// f = synthesis_θ(analysis_ω(f)).
    ThetaAfterOmega,
    /// f = synthesis_ω(analysis_θ(f)).
    OmegaAfterTheta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub f: TestFunction,
    /// ‖f_rec − f‖/‖f‖, or the absolute error when f = 0.
    pub rel_error: f64,
}

pub fn reconstruct(pair: &DualPair, f: &TestFunction) -> Result<Reconstruction> {
    reconstruct_with(pair, f, ReconstructionOrder::ThetaAfterOmega)
}

pub fn reconstruct_with(pair: &DualPair, f: &TestFunction, order: ReconstructionOrder) -> Result<Reconstruction> {
    let (first, second) = match order {
        ReconstructionOrder::ThetaAfterOmega => (&pair.omega, &pair.theta),
        ReconstructionOrder::OmegaAfterTheta => (&pair.theta, &pair.omega),
    };
    let rec = synthesis(second, &analysis(first, f)?)?.to_test_function();
    let err = rec.sub(f)?.norm();
    let norm = f.norm();
    Ok(Reconstruction {
        f: rec,
        rel_error: if norm > 0.0 { err / norm } else { err },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParsevalCheck {
    pub parseval: bool,
    /// ‖S − I‖_max.
    pub defect: f64,
    /// Worst normalized violation of ⟨f,g⟩ = ∫ξ_f conj ξ_g over random pairs.
    pub pair_defect: f64,
    /// Both routes reach the same conclusion.
    pub routes_agree: bool,
}

pub fn parseval_check(omega: &KernelMatrix) -> Result<ParsevalCheck> {
    let defect = frame_operator(omega).identity_defect();
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED);
    let pair_defect = cross_identity_defect(omega, omega, DEFAULT_TRIALS, &mut rng)?;
    let parseval = defect <= PARSEVAL_TOLERANCE;
    Ok(ParsevalCheck {
        parseval,
        defect,
        pair_defect,
        routes_agree: parseval == (pair_defect <= PARSEVAL_TOLERANCE),
    })
}

/// Kernel used for μ-independence: the map resampled on the coarse grid when
/// possible, the kernel itself when it has at most N nodes.
fn independence_kernel(omega: &KernelMatrix) -> Result<Option<KernelMatrix>> {
    let n = omega.truncation();
    match omega.source() {
        Some(spec) if spec.is_resamplable() => Ok(Some(sample_kernel(spec, &coarse_grid(n)?, n)?)),
        _ if omega.node_count() <= n => Ok(Some(omega.clone())),
        _ => Ok(None),
    }
}

fn mu_independent(omega: &KernelMatrix, threshold: f64) -> Result<Option<bool>> {
    independence_kernel(omega)?
        .map(|k| mu_independence_test(&k, threshold).map(|r| r.independent))
        .transpose()
}

/// Singular values of the weighted synthesis map Ω^H W^{1/2}, descending.
fn weighted_synthesis_singular_values(omega: &KernelMatrix) -> Result<Vec<f64>> {
    Ok(svd(&omega.weighted().adjoint())?.singular_values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GelfandCheck {
    pub gelfand: bool,
    pub parseval: ParsevalCheck,
    /// None when the kernel cannot be tested on a grid with M ≤ N.
    pub mu_independent: Option<bool>,
    /// max |σ_i − 1| over the singular values of the weighted synthesis map.
    pub isometry_defect: f64,
}

pub fn gelfand_check(omega: &KernelMatrix) -> Result<GelfandCheck> {
    let parseval = parseval_check(omega)?;
    let mu = mu_independent(omega, Thresholds::default().rank_cutoff)?;
    let isometry_defect = weighted_synthesis_singular_values(omega)?
        .into_iter()
        .fold(0.0_f64, |acc, s| acc.max((s - 1.0).abs()));
    Ok(GelfandCheck {
        gelfand: parseval.parseval && mu == Some(true),
        parseval,
        mu_independent: mu,
        isometry_defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszCheck {
    pub riesz: bool,
    pub frame: bool,
    pub mu_independent: Option<bool>,
    /// Extreme singular values of the weighted synthesis map.
    pub sigma_min: f64,
    pub sigma_max: f64,
}

pub fn riesz_check(omega: &KernelMatrix) -> Result<RieszCheck> {
    let thresholds = Thresholds::default();
    let frame = classify_kernel(omega, &thresholds)?.has(Label::Frame);
    let mu = mu_independent(omega, thresholds.rank_cutoff)?;
    let sv = weighted_synthesis_singular_values(omega)?;
    Ok(RieszCheck {
        riesz: frame && mu == Some(true),
        frame,
        mu_independent: mu,
        sigma_min: sv.last().copied().unwrap_or(0.0),
        sigma_max: sv.first().copied().unwrap_or(0.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiframeCheck {
    pub holds: bool,
    /// A_θ − 1/B_ω per ladder stage.
    pub margins: Vec<f64>,
}

/// Lower bound of the canonical dual of an upper semi-frame: A_θ ≥ 1/B_ω on
/// every ladder stage (a single stage for kernels that cannot be resampled).
pub fn dual_semiframe_check(pair: &DualPair) -> Result<SemiframeCheck> {
    let thresholds = Thresholds::default();
    let report = classify_kernel(&pair.omega, &thresholds)?;
    if !report.has(Label::UpperSemiFrame) {
        return Err(Error::InvalidConfig(format!(
            "dual semi-frame check needs an upper semi-frame; {} has labels {:?}",
            report.map,
            report.labels.iter().map(|l| l.name()).collect::<Vec<_>>()
        )));
    }
    let mut margins = Vec::new();
    for kernel in ladder_kernels(&pair.omega)? {
        let b_omega = frame_bounds(&frame_operator(&kernel))?.upper;
        let dual = canonical_dual(&kernel)?;
        let a_theta = frame_bounds(&frame_operator(dual.theta()))?.lower;
        margins.push(a_theta - 1.0 / b_omega);
    }
    let holds = margins.iter().all(|&m| m >= -1e-9);
    Ok(SemiframeCheck { holds, margins })
}

/// The kernel's map sampled on each stage of its resampling ladder, or just
/// the kernel itself.
pub(crate) fn ladder_kernels(omega: &KernelMatrix) -> Result<Vec<KernelMatrix>> {
    match omega.source() {
        Some(spec) if spec.is_resamplable() => classification_ladder(omega.truncation())?
            .stages()
            .iter()
            .map(|stage| sample_kernel(spec, &QuadratureGrid::for_stage(stage)?, stage.truncation))
            .collect(),
        _ => Ok(vec![omega.clone()]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::MapSpec;
    use crate::grid::LadderStage;
    use crate::linalg::{max_abs, CMatrix};
    use num_complex::Complex64;

    fn kernel(spec: &MapSpec, n: usize) -> KernelMatrix {
        let grid = QuadratureGrid::for_stage(&LadderStage::standard(n)).unwrap();
        sample_kernel(spec, &grid, n).unwrap()
    }

    fn sine() -> MapSpec {
        MapSpec::weighted_dirac("2+sin(x)").unwrap()
    }

    #[test]
    fn dirac_is_self_dual() {
        let omega = kernel(&MapSpec::dirac(), 16);
        let pair = canonical_dual(&omega).unwrap();
        assert!(max_abs(&(pair.theta().entries() - omega.entries())) <= 1e-10);
        assert!(pair.duality_defect() <= 1e-10);
        let b = dual_bounds(&pair).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-10 && (b.upper - 1.0).abs() < 1e-10);
        let f = TestFunction::random(16, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(reconstruct(&pair, &f).unwrap().rel_error <= 1e-9);
    }

    #[test]
    fn sine_weight_dual() {
        let omega = kernel(&sine(), 16);
        let pair = canonical_dual(&omega).unwrap();
        assert!(pair.duality_defect() <= 1e-8);
        let b = dual_bounds(&pair).unwrap();
        assert!(b.lower >= 1.0 / 9.0 - 1e-8 && b.upper <= 1.0 + 1e-8);

        // S_θ = S^{-1}
        let s = frame_operator(&omega);
        let s_theta = frame_operator(pair.theta());
        let prod = s.matrix() * s_theta.matrix();
        assert!(max_abs(&(prod - CMatrix::identity(16, 16))) <= 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let f = TestFunction::random(16, &mut rng);
            for order in [ReconstructionOrder::ThetaAfterOmega, ReconstructionOrder::OmegaAfterTheta] {
                assert!(reconstruct_with(&pair, &f, order).unwrap().rel_error <= 1e-8);
            }
        }
        let zero = reconstruct(&pair, &TestFunction::zero(16)).unwrap();
        assert_eq!(zero.f, TestFunction::zero(16));
        assert_eq!(zero.rel_error, 0.0);
    }

    #[test]
    fn sine_dual_is_inverse_weight_on_collocation_grid() {
        // On an N-point Gauss-Hermite grid the sampled map is square and
        // discretely orthonormal, so S^{-1} is exactly the inverse
        // multiplication and θ is the 1/(2+sin x)-weighted Dirac kernel.
        let n = 24;
        let grid = QuadratureGrid::gauss_hermite(n).unwrap();
        let omega = sample_kernel(&sine(), &grid, n).unwrap();
        let inverse = sample_kernel(&MapSpec::weighted_dirac("1/(2+sin(x))").unwrap(), &grid, n).unwrap();
        let pair = canonical_dual(&omega).unwrap();
        assert!(max_abs(&(pair.theta().entries() - inverse.entries())) <= 1e-8);
    }

    #[test]
    fn doubled_dual_is_detected() {
        let omega = kernel(&sine(), 8);
        let pair = canonical_dual(&omega).unwrap();
        let doubled = pair.theta().scaled(Complex64::new(2.0, 0.0));
        let bad = DualPair::new(omega, doubled).unwrap();
        assert!((bad.duality_defect() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dual_bounds_scale_inversely() {
        let omega = kernel(&sine(), 8);
        let c = Complex64::new(0.0, 2.0);
        let base = dual_bounds(&canonical_dual(&omega).unwrap()).unwrap();
        let scaled = dual_bounds(&canonical_dual(&omega.scaled(c)).unwrap()).unwrap();
        assert!((scaled.lower * 4.0 - base.lower).abs() <= 1e-10 * base.lower);
        assert!((scaled.upper * 4.0 - base.upper).abs() <= 1e-10 * base.upper);
    }

    #[test]
    fn bump_is_not_a_frame() {
        let omega = kernel(&MapSpec::bump_dirac(-1.0, 1.0).unwrap(), 32);
        assert!(matches!(canonical_dual(&omega), Err(Error::NotAFrame { .. })));
    }

    #[test]
    fn parseval_routes() {
        for (spec, expected) in [(MapSpec::dirac(), true), (MapSpec::fourier(), true), (sine(), false)] {
            let c = parseval_check(&kernel(&spec, 16)).unwrap();
            assert_eq!(c.parseval, expected, "{}", spec.label());
            assert!(c.routes_agree);
        }
    }

    #[test]
    fn gelfand_and_riesz() {
        for spec in [MapSpec::dirac(), MapSpec::fourier()] {
            let g = gelfand_check(&kernel(&spec, 16)).unwrap();
            assert!(g.gelfand && g.isometry_defect < 1e-8, "{g:?}");
        }
        assert!(!gelfand_check(&kernel(&MapSpec::bump_dirac(-1.0, 1.0).unwrap(), 16)).unwrap().gelfand);
        let r = riesz_check(&kernel(&sine(), 16)).unwrap();
        assert!(r.riesz);
        assert!(r.sigma_min >= 1.0 - 1e-9 && r.sigma_max <= 3.0 + 1e-9, "{r:?}");
        assert!(riesz_check(&kernel(&MapSpec::dirac(), 16)).unwrap().riesz);
        assert!(!riesz_check(&kernel(&MapSpec::dirac_derivative(), 16)).unwrap().riesz);
    }

    #[test]
    fn dual_of_dual() {
        let omega = kernel(&sine(), 16);
        let theta = canonical_dual(&omega).unwrap().theta().clone();
        let back = canonical_dual(&theta).unwrap();
        assert!(max_abs(&(back.theta().entries() - omega.entries())) <= 1e-8);
    }

    #[test]
    fn semiframe_dual_lower_bound() {
        for spec in [MapSpec::dirac(), sine()] {
            let pair = canonical_dual(&kernel(&spec, 16)).unwrap();
            let c = dual_semiframe_check(&pair).unwrap();
            assert!(c.holds, "{c:?}");
        }
        let dd = kernel(&MapSpec::dirac_derivative(), 16);
        let pair = canonical_dual(&dd).unwrap();
        assert!(matches!(dual_semiframe_check(&pair), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn mismatched_pair_rejected() {
        let a = kernel(&MapSpec::dirac(), 8);
        let b = kernel(&MapSpec::dirac(), 16);
        assert!(DualPair::new(a.clone(), b.truncated(8).unwrap()).is_err());
        assert!(verify_duality(&canonical_dual(&a).unwrap(), 0).is_err());
    }
}
