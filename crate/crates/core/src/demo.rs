//! Worked examples of the toolkit, each reduced to a pass/fail check.
//!
//! `riggedframes demo` runs these and exits nonzero when any fails.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{sample_kernel, KernelMatrix, MapSpec};
use crate::duality::{canonical_dual, dual_bounds, reconstruct_with, riesz_check, ReconstructionOrder};
use crate::error::Result;
use crate::frame::{
    analysis, classify, coarse_grid, frame_eigenpairs, frame_operator, synthesis, synthesis_matrix,
    totality_test, Label, Thresholds,
};
use crate::grid::{default_ladder, l2x_inner, l2x_norm, GridFunction, LadderStage, QuadratureGrid};
use crate::linalg::{max_abs, CMatrix};
use crate::moment::{continuity_constant, envelope_condition_check, solve_moment};
use crate::schwartz::{fourier_phase, hermite_eval, pair, seminorm, FourierDirection, SeminormIndex, TestFunction};

const SEED: u64 = 2024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn stage_kernel(spec: &MapSpec, n: usize) -> Result<KernelMatrix> {
    sample_kernel(spec, &QuadratureGrid::for_stage(&LadderStage::standard(n))?, n)
}

fn sine() -> MapSpec {
    MapSpec::weighted_dirac("2+sin(x)").expect("static weight")
}

pub fn run_demo() -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        dirac_gelfand()?,
        fourier_gelfand()?,
        sine_riesz()?,
        sine_reconstruction()?,
        derivative_bessel()?,
        quadratic_lower_semi_frame()?,
        bump_bounded_bessel()?,
        dirac_moments()?,
        adjoint_identities()?,
        continuity_constants()?,
    ])
}

fn dirac_gelfand() -> Result<CheckOutcome> {
    let defect = frame_operator(&stage_kernel(&MapSpec::dirac(), 32)?).identity_defect();
    let report = classify(&MapSpec::dirac(), &default_ladder(32)?, &Thresholds::default())?;
    let labels = [Label::Parseval, Label::GelfandBasis, Label::RieszBasis];
    let ok = defect <= 1e-10 && labels.iter().all(|&l| report.has(l));
    Ok(CheckOutcome::new(
        "dirac_gelfand_basis",
        ok,
        format!("|S-I|max = {defect:.2e}, labels = {:?}", names(&report.labels)),
    ))
}

fn fourier_gelfand() -> Result<CheckOutcome> {
    let n = 32;
    let k = stage_kernel(&MapSpec::fourier(), n)?;
    let defect = frame_operator(&k).identity_defect();
    let mut eigen_err: f64 = 0.0;
    for m in 0..n {
        let xi = analysis(&k, &TestFunction::basis(m, n))?;
        let phase = fourier_phase(m, FourierDirection::Forward);
        for (v, &x) in xi.values().iter().zip(k.grid().nodes()) {
            eigen_err = eigen_err.max((v - phase * hermite_eval(m, x)).norm());
        }
    }
    Ok(CheckOutcome::new(
        "fourier_gelfand_basis",
        defect <= 1e-8 && eigen_err <= 1e-10,
        format!("|S-I|max = {defect:.2e}, eigenrelation error = {eigen_err:.2e}"),
    ))
}

fn sine_riesz() -> Result<CheckOutcome> {
    let k = stage_kernel(&sine(), 32)?;
    let eig = frame_eigenpairs(&frame_operator(&k))?;
    let (lo, hi) = (eig.min(), eig.max());
    let riesz = riesz_check(&k)?;
    let dual = dual_bounds(&canonical_dual(&k)?)?;
    let ok = lo >= 1.0 - 1e-9
        && hi <= 9.0 + 1e-9
        && riesz.riesz
        && dual.lower >= 1.0 / 9.0 - 1e-8
        && dual.upper <= 1.0 + 1e-8;
    Ok(CheckOutcome::new(
        "sine_weight_riesz_basis",
        ok,
        format!(
            "spec(S) in [{lo:.6}, {hi:.6}], riesz = {}, dual bounds [{:.6}, {:.6}]",
            riesz.riesz, dual.lower, dual.upper
        ),
    ))
}

fn sine_reconstruction() -> Result<CheckOutcome> {
    let pair = canonical_dual(&stage_kernel(&sine(), 16)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let f = TestFunction::random(16, &mut rng);
        for order in [ReconstructionOrder::ThetaAfterOmega, ReconstructionOrder::OmegaAfterTheta] {
            worst = worst.max(reconstruct_with(&pair, &f, order)?.rel_error);
        }
    }
    Ok(CheckOutcome::new(
        "sine_weight_reconstruction",
        worst <= 1e-8,
        format!("worst relative error = {worst:.2e}"),
    ))
}

/// S of the derivative map: pentadiagonal with diagonal n + 1/2 and
/// S[n][n+2] = −√((n+1)(n+2))/2.
fn derivative_frame_operator(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| {
        let v = if r == c {
            r as f64 + 0.5
        } else if r.abs_diff(c) == 2 {
            let m = r.min(c) as f64;
            -((m + 1.0) * (m + 2.0)).sqrt() / 2.0
        } else {
            0.0
        };
        Complex64::new(v, 0.0)
    })
}

fn derivative_bessel() -> Result<CheckOutcome> {
    let report = classify(&MapSpec::dirac_derivative(), &default_ladder(64)?, &Thresholds::default())?;
    let b: Vec<f64> = report.stages.iter().map(|s| s.upper).collect();
    let growing = b.windows(2).all(|w| w[1] > w[0] && w[1] / w[0] >= 1.5);
    let witness = report.bessel_witness.map(|w| w.k);
    let k = stage_kernel(&MapSpec::dirac_derivative(), 32)?;
    let oracle_err = max_abs(&(frame_operator(&k).matrix() - derivative_frame_operator(32)));
    let ok = growing && witness == Some(1) && oracle_err <= 1e-8 && !report.has(Label::UpperSemiFrame);
    Ok(CheckOutcome::new(
        "dirac_derivative_bessel_not_upper_semi_frame",
        ok,
        format!("B_N = {b:.4?}, witness k = {witness:?}, |S-oracle|max = {oracle_err:.2e}"),
    ))
}

fn quadratic_lower_semi_frame() -> Result<CheckOutcome> {
    let spec = MapSpec::weighted_dirac("1+x^2")?;
    let report = classify(&spec, &default_ladder(64)?, &Thresholds::default())?;
    let a_ok = report.stages.iter().all(|s| s.lower >= 1.0 - 1e-9);
    let b: Vec<f64> = report.stages.iter().map(|s| s.upper).collect();
    let b_ok = b.windows(2).all(|w| w[1] / w[0] >= 3.0);
    Ok(CheckOutcome::new(
        "quadratic_weight_lower_semi_frame",
        a_ok && b_ok && report.has(Label::LowerSemiFrame),
        format!(
            "A_N = {:.4?}, max B_N = {:.4e}",
            report.stages.iter().map(|s| s.lower).collect::<Vec<_>>(),
            b.iter().fold(0.0, |m: f64, v| m.max(*v))
        ),
    ))
}

/// Fraction of ∫|f|² carried by grid nodes outside (a, b).
pub fn mass_outside(f: &TestFunction, grid: &QuadratureGrid, a: f64, b: f64) -> f64 {
    let (mut outside, mut total) = (0.0, 0.0);
    for (&x, &w) in grid.nodes().iter().zip(grid.weights()) {
        let m = w * f.eval(x).norm_sqr();
        total += m;
        if x <= a || x >= b {
            outside += m;
        }
    }
    if total > 0.0 {
        outside / total
    } else {
        0.0
    }
}

fn bump_bounded_bessel() -> Result<CheckOutcome> {
    let spec = MapSpec::bump_dirac(-1.0, 1.0)?;
    let report = classify(&spec, &default_ladder(64)?, &Thresholds::default())?;
    let b_ok = report.stages.iter().all(|s| s.upper <= 1.0 + 1e-9);
    let k = stage_kernel(&spec, 32)?;
    let t = totality_test(&k, 1e-6)?;
    let mass = t
        .witness
        .as_ref()
        .map(|w| mass_outside(w, k.grid(), -1.0, 1.0))
        .unwrap_or(0.0);
    let ok = b_ok && !t.total && mass >= 0.99 && report.has(Label::BoundedBessel);
    Ok(CheckOutcome::new(
        "bump_bounded_bessel_not_total",
        ok,
        format!("max B_N = {:.6}, total = {}, witness mass outside = {mass:.6}", max_of(&report.stages.iter().map(|s| s.upper).collect::<Vec<_>>()), t.total),
    ))
}

fn dirac_moments() -> Result<CheckOutcome> {
    let n = 32;
    let k = sample_kernel(&MapSpec::dirac(), &coarse_grid(n)?, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst_res, mut worst_coset, mut envelope_ok) = (0.0_f64, 0.0_f64, true);
    for _ in 0..50 {
        let f0 = TestFunction::random(n, &mut rng);
        let h = analysis(&k, &f0)?;
        let sol = solve_moment(&k, &h)?;
        worst_res = worst_res.max(sol.residual);
        // f0 is recovered up to ω^⊥: the difference must be annihilated.
        let diff = analysis(&k, &sol.f.sub(&f0)?)?;
        let norm: f64 = diff.values().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        worst_coset = worst_coset.max(norm / f0.norm());
        for kk in 0..=2 {
            let c = envelope_condition_check(&k, &h, SeminormIndex(kk))?;
            envelope_ok &= c.satisfied && c.r <= seminorm(&f0, SeminormIndex(kk)) * (1.0 + 1e-6);
        }
    }
    Ok(CheckOutcome::new(
        "dirac_moment_problem",
        worst_res <= 1e-10 && worst_coset <= 1e-8 && envelope_ok,
        format!("worst residual = {worst_res:.2e}, coset error = {worst_coset:.2e}, envelope ok = {envelope_ok}"),
    ))
}

fn adjoint_identities() -> Result<CheckOutcome> {
    let specs = [
        MapSpec::dirac(),
        MapSpec::fourier(),
        MapSpec::dirac_derivative(),
        sine(),
        MapSpec::weighted_dirac("1+x^2")?,
        MapSpec::bump_dirac(-1.0, 1.0)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut adjoint, mut factor) = (0.0_f64, 0.0_f64);
    for spec in &specs {
        let k = stage_kernel(spec, 16)?;
        for _ in 0..100 {
            let g = TestFunction::random(16, &mut rng);
            let xi = GridFunction::random(k.node_count(), &mut rng);
            let lhs = pair(&g, &synthesis(&k, &xi)?)?.conj();
            let rhs = l2x_inner(&xi, &analysis(&k, &g)?, k.grid())?;
            let scale = 1.0 + g.norm() * l2x_norm(&xi, k.grid())?;
            adjoint = adjoint.max((lhs - rhs).norm() / scale);
        }
        let s = frame_operator(&k);
        factor = factor.max(max_abs(&(synthesis_matrix(&k) * k.entries() - s.matrix())));
    }
    Ok(CheckOutcome::new(
        "adjoint_and_factorization",
        adjoint <= 1e-10 && factor <= 1e-12,
        format!("adjoint defect = {adjoint:.2e}, |S - T T^x|max = {factor:.2e}"),
    ))
}

fn continuity_constants() -> Result<CheckOutcome> {
    let dirac = continuity_constant(&stage_kernel(&MapSpec::dirac(), 32)?, SeminormIndex::L2)?;
    let sine_c = continuity_constant(&stage_kernel(&sine(), 32)?, SeminormIndex::L2)?;
    let mut c0 = Vec::new();
    let mut c1 = Vec::new();
    for n in [8, 16, 32, 64] {
        let k = stage_kernel(&MapSpec::dirac_derivative(), n)?;
        c0.push(continuity_constant(&k, SeminormIndex(0))?);
        c1.push(continuity_constant(&k, SeminormIndex(1))?);
    }
    let growing = c0.windows(2).all(|w| w[1] / w[0] >= 1.3);
    let ok = (dirac - 1.0).abs() <= 1e-8
        && sine_c <= 1.0 + 1e-8
        && c1.iter().all(|c| c.is_finite())
        && growing;
    Ok(CheckOutcome::new(
        "continuity_constants",
        ok,
        format!("dirac C = {dirac:.10}, sine C = {sine_c:.6}, derivative C_0 = {c0:.4?}, C_1 = {c1:.4?}"),
    ))
}

fn names(labels: &[Label]) -> Vec<&'static str> {
    labels.iter().map(|l| l.name()).collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
