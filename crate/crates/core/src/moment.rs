//! The moment problem ⟨f, ω_x⟩ = h(x): least-norm solutions, solvability
//! diagnostics, the envelope condition and continuity constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{sample_kernel, KernelMatrix};
use crate::duality::{canonical_dual, ladder_kernels, DualPair};
use crate::error::{Error, Result};
use crate::frame::{bessel_constant, coarse_grid, frame_operator, witness_from_constants, BesselWitness, Thresholds};
use crate::grid::{l2x_norm, GridFunction};
use crate::linalg::{svd, CMatrix, CVector};
use crate::schwartz::{SeminormIndex, TestFunction};
use num_complex::Complex64;

/// Singular values below this fraction of σ_max are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-10;
/// Residual below which a probe counts as solved.
pub const PROBE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub x: CVector,
    /// (Σ_j w_j |(Ax)_j − b_j|²)^{1/2}.
    pub residual: f64,
    /// Numerical rank of W^{1/2}A.
    pub rank: usize,
}

/// Minimum-norm minimizer of Σ_j w_j |(Ax)_j − b_j|².
pub fn weighted_least_squares(a: &CMatrix, b: &[Complex64], weights: &[f64]) -> Result<LeastSquares> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::dim("least squares right-hand side", m, b.len()));
    }
    if weights.len() != m {
        return Err(Error::dim("least squares weights", m, weights.len()));
    }
    let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
    if !a.iter().all(finite) || !b.iter().all(finite) {
        return Err(Error::Numeric("least squares input has non-finite entries".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Numeric("least squares weights must be finite and nonnegative".into()));
    }
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let wa = CMatrix::from_fn(m, n, |r, c| a[(r, c)] * sqrt_w[r]);
    let wb = CVector::from_fn(m, |r, _| b[r] * sqrt_w[r]);
    let d = svd(&wa)?;
    let rank = d.rank(RANK_CUTOFF);
    let mut x = CVector::zeros(n);
    for k in 0..rank {
        let coeff = d.left_vector(k).dotc(&wb) / d.singular_values[k];
        x += d.right_vector(k) * coeff;
    }
    let residual = (&wa * &x - wb).norm();
    Ok(LeastSquares { x, residual, rank })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSolution {
    pub f: TestFunction,
    /// l2x norm of analysis(f) − h relative to l2x_norm(h); absolute when h = 0.
    pub residual: f64,
    /// The minimum-‖·‖ element of the solution coset f + ω^⊥.
    pub least_norm: bool,
    /// Numerical dimension of ω^⊥ in the truncated space.
    pub null_dim: usize,
}

pub fn solve_moment(kernel: &KernelMatrix, h: &GridFunction) -> Result<MomentSolution> {
    h.check_grid(kernel.grid())?;
    let ls = weighted_least_squares(kernel.entries(), h.values(), kernel.grid().weights())?;
    let h_norm = l2x_norm(h, kernel.grid())?;
    Ok(MomentSolution {
        f: TestFunction::new(ls.x.iter().copied().collect()),
        residual: if h_norm > 0.0 { ls.residual / h_norm } else { ls.residual },
        least_norm: true,
        null_dim: kernel.truncation() - ls.rank,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfDiagnostic {
    /// Fraction of probes solved to [`PROBE_TOLERANCE`].
    pub score: f64,
    pub worst_residual: f64,
}

/// L²-normalized indicators of `count` panels spread evenly over the grid.
/// Supports are disjoint, so the batch is orthonormal; at most one probe per
/// panel is produced.
pub fn panel_probes(kernel: &KernelMatrix, count: usize) -> Vec<GridFunction> {
    let grid = kernel.grid();
    let panels = grid.panels();
    let count = count.min(panels);
    (0..count)
        .map(|i| {
            let p = (2 * i + 1) * panels / (2 * count);
            let range = grid.panel_range(p);
            let mass: f64 = grid.weights()[range.clone()].iter().sum();
            let height = Complex64::new(mass.sqrt().recip(), 0.0);
            let mut values = vec![Complex64::default(); grid.len()];
            values[range].iter_mut().for_each(|v| *v = height);
            GridFunction::new(values)
        })
        .collect()
}

/// Surjectivity of the analysis map measured on a batch of localized probes.
pub fn rf_diagnostic(kernel: &KernelMatrix, probes: usize) -> Result<RfDiagnostic> {
    if probes == 0 {
        return Err(Error::InvalidConfig("rf diagnostic needs at least one probe".into()));
    }
    let batch = panel_probes(kernel, probes);
    let residuals = batch
        .par_iter()
        .map(|h| solve_moment(kernel, h).map(|s| s.residual))
        .collect::<Result<Vec<f64>>>()?;
    let solved = residuals.iter().filter(|&&r| r <= PROBE_TOLERANCE).count();
    Ok(RfDiagnostic {
        score: solved as f64 / residuals.len() as f64,
        worst_residual: residuals.iter().copied().fold(0.0, f64::max),
    })
}

/// Smallest C with p_k(f) ≤ C·‖analysis(f)‖ for least-norm solutions:
/// σ_max(D_k · pinv(W^{1/2}Ω)) with D_k = diag((1+n)^{k/2}).
/// Returns +∞ for a zero kernel.
pub fn continuity_constant(kernel: &KernelMatrix, k: SeminormIndex) -> Result<f64> {
    let d = svd(&kernel.weighted())?;
    let rank = d.rank(RANK_CUTOFF);
    if rank == 0 {
        return Ok(f64::INFINITY);
    }
    let n = kernel.truncation();
    // D_k V_r Σ_r^{-1}; the trailing U_r^H has orthonormal rows and drops out.
    let m = CMatrix::from_fn(n, rank, |r, c| {
        d.v_adjoint[(c, r)].conj() * (k.weight(r).sqrt() / d.singular_values[c])
    });
    Ok(svd(&m)?.sigma_max())
}

/// e_k(x_j) = sup_{p_k(f) ≤ 1} |⟨f, ω_{x_j}⟩| = (Σ_n (1+n)^{-k} |Ω[j][n]|²)^{1/2}.
pub fn envelope(kernel: &KernelMatrix, k: SeminormIndex) -> GridFunction {
    let omega = kernel.entries();
    let values = (0..kernel.node_count())
        .map(|j| {
            let s: f64 = (0..kernel.truncation())
                .map(|n| omega[(j, n)].norm_sqr() / k.weight(n))
                .sum();
            Complex64::new(s.sqrt(), 0.0)
        })
        .collect();
    GridFunction::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub satisfied: bool,
    /// Smallest r with |h| ≤ r·e_k on the grid.
    pub r: f64,
}

pub fn envelope_condition_check(kernel: &KernelMatrix, h: &GridFunction, k: SeminormIndex) -> Result<EnvelopeCheck> {
    h.check_grid(kernel.grid())?;
    let env = envelope(kernel, k);
    let mut r: f64 = 0.0;
    for (hj, ej) in h.values().iter().zip(env.values()) {
        let (num, den) = (hj.norm(), ej.re);
        if num == 0.0 {
            continue;
        }
        r = r.max(if den > 0.0 { num / den } else { f64::INFINITY });
    }
    Ok(EnvelopeCheck {
        satisfied: r.is_finite(),
        r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualBesselCheck {
    pub bessel: bool,
    pub witness: Option<BesselWitness>,
}

/// Number of probes used to certify the Riesz-Fischer precondition.
pub const PRECONDITION_PROBES: usize = 16;

/// Bessel bound for the dual of a Riesz-Fischer map. For maps that can be
/// resampled, the canonical dual is rebuilt on every stage of the
/// classification ladder and a seminorm index whose constant stays bounded is
/// searched; otherwise the pair's own θ is the only stage.
pub fn dual_bessel_check(pair: &DualPair) -> Result<DualBesselCheck> {
    let omega = pair.omega();
    let n = omega.truncation();
    let probe_kernel = match omega.source() {
        Some(spec) if spec.is_resamplable() => sample_kernel(spec, &coarse_grid(n)?, n)?,
        _ if omega.node_count() <= n => omega.clone(),
        _ => {
            return Err(Error::InvalidConfig(
                "dual Bessel check needs a resamplable map or a kernel with at most N nodes".into(),
            ))
        }
    };
    let rf = rf_diagnostic(&probe_kernel, PRECONDITION_PROBES)?;
    if rf.score < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "dual Bessel check needs a Riesz-Fischer map; probe score is {} (worst residual {:e})",
            rf.score, rf.worst_residual
        )));
    }
    let thresholds = Thresholds::default();
    let thetas = if omega.source().is_some_and(|s| s.is_resamplable()) {
        ladder_kernels(omega)?
            .iter()
            .map(|k| canonical_dual(k).map(|p| p.theta().clone()))
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![pair.theta().clone()]
    };
    let constants = thetas
        .iter()
        .map(|theta| {
            let s = frame_operator(theta);
            (0..=thresholds.k_max)
                .map(|k| bessel_constant(&s, SeminormIndex(k)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let witness = witness_from_constants(&constants, &thresholds);
    Ok(DualBesselCheck {
        bessel: witness.is_some(),
        witness,
    })
}
