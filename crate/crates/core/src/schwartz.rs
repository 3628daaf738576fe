//! Finite model of the triple S(R) ⊂ L²(R) ⊂ S×(R).
//!
//! A test function is a truncated expansion in the L²-orthonormal Hermite
//! functions h_0, …, h_{N-1}. The Schwartz topology is modelled by the
//! number-operator seminorms p_k(f) = (Σ (1+n)^k |c_n|²)^{1/2}. A tempered
//! distribution is represented by its N pairing slots, stored so that
//! `pair(f, F) = Σ c_n(f) · conj(slot_n(F))`; for an embedded test function the
//! slots are exactly its coefficients.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// π^{-1/4}, the value of h_0 at the origin.
pub const H0_AT_ZERO: f64 = 0.751_125_544_464_942_5;

/// Orthonormal Hermite function h_n(x), evaluated with the normalized
/// three-term recurrence (stable for large n and |x|).
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = H0_AT_ZERO * (-0.5 * x * x).exp();
    for k in 0..n {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Values h_0(x), …, h_{len-1}(x) in one recurrence sweep.
pub fn hermite_row(len: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    out.push(H0_AT_ZERO * (-0.5 * x * x).exp());
    if len > 1 {
        out.push(x * 2f64.sqrt() * out[0]);
    }
    for k in 1..len.saturating_sub(1) {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Derivatives h_0'(x), …, h_{len-1}'(x) from
/// h_n' = √(n/2)·h_{n-1} − √((n+1)/2)·h_{n+1}. Needs h_len, so it is exact
/// (no truncation) for every index below `len`.
pub fn hermite_derivative_row(len: usize, x: f64) -> Vec<f64> {
    let h = hermite_row(len + 1, x);
    (0..len)
        .map(|n| {
            let nf = n as f64;
            let down = if n > 0 { (nf / 2.0).sqrt() * h[n - 1] } else { 0.0 };
            down - ((nf + 1.0) / 2.0).sqrt() * h[n + 1]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SeminormIndex(pub u32);

impl SeminormIndex {
    pub const L2: SeminormIndex = SeminormIndex(0);

    /// Per-coefficient weight (1+n)^k of p_k².
    pub fn weight(self, n: usize) -> f64 {
        (1.0 + n as f64).powi(self.0 as i32)
    }
}

/// Element of the test-function space, as Hermite coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    coeffs: Vec<Complex64>,
}

impl TestFunction {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero(truncation: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); truncation])
    }

    /// The basis function h_n inside a truncation of size `truncation`.
    pub fn basis(n: usize, truncation: usize) -> Self {
        let mut f = Self::zero(truncation);
        f.coeffs[n] = Complex64::new(1.0, 0.0);
        f
    }

    /// Coefficients with independent standard-normal real and imaginary parts.
    pub fn random<R: Rng + ?Sized>(truncation: usize, rng: &mut R) -> Self {
        Self::new(
            (0..truncation)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect(),
        )
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Point value f(x) = Σ c_n h_n(x).
    pub fn eval(&self, x: f64) -> Complex64 {
        hermite_row(self.truncation(), x)
            .iter()
            .zip(&self.coeffs)
            .map(|(h, c)| c * h)
            .sum()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn sub(&self, other: &TestFunction) -> Result<TestFunction> {
        check_len("test function difference", self.truncation(), other.truncation())?;
        Ok(Self::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        ))
    }
}

/// Tempered distribution seen through its first N pairing slots.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperedDistributionSample {
    pairings: Vec<Complex64>,
}

impl TemperedDistributionSample {
    pub fn new(pairings: Vec<Complex64>) -> Self {
        Self { pairings }
    }

    pub fn zero(truncation: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); truncation])
    }

    /// Regular distribution induced by a test function.
    pub fn embed(f: &TestFunction) -> Self {
        Self::new(f.coeffs.clone())
    }

    /// δ_x, whose pairing with φ is φ(x).
    pub fn dirac(x: f64, truncation: usize) -> Self {
        Self::new(
            hermite_row(truncation, x)
                .into_iter()
                .map(|h| Complex64::new(h, 0.0))
                .collect(),
        )
    }

    pub fn pairings(&self) -> &[Complex64] {
        &self.pairings
    }

    pub fn truncation(&self) -> usize {
        self.pairings.len()
    }

    /// Reads the slots back as a test function; meaningful when the
    /// distribution is regular (e.g. the output of a synthesis map on a frame).
    pub fn to_test_function(&self) -> TestFunction {
        TestFunction::new(self.pairings.clone())
    }
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::dim(context, expected, found));
    }
    Ok(())
}

/// Derivative of a test function in coefficient space, with the coefficient
/// that falls outside the truncation reported separately.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub function: TestFunction,
    /// Coefficient of h_N in f', dropped by the truncation.
    pub spill: Complex64,
}

pub fn derivative_coeffs(f: &TestFunction) -> Derivative {
    let n_len = f.truncation();
    let c = f.coeffs();
    let at = |k: usize| c.get(k).copied().unwrap_or_default();
    // (f')_m = √((m+1)/2)·c_{m+1} − √(m/2)·c_{m-1}
    let coeffs = (0..n_len)
        .map(|m| {
            let mf = m as f64;
            let up = at(m + 1) * ((mf + 1.0) / 2.0).sqrt();
            let down = if m > 0 { at(m - 1) * (mf / 2.0).sqrt() } else { Complex64::default() };
            up - down
        })
        .collect();
    let spill = if n_len > 0 {
        -at(n_len - 1) * (n_len as f64 / 2.0).sqrt()
    } else {
        Complex64::default()
    };
    Derivative {
        function: TestFunction::new(coeffs),
        spill,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierDirection {
    Forward,
    Inverse,
}

/// Fourier transform in the Hermite basis: ĥ_n = (−i)^n h_n.
pub fn fourier_coeffs(f: &TestFunction, direction: FourierDirection) -> TestFunction {
    TestFunction::new(
        f.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * fourier_phase(n, direction))
            .collect(),
    )
}

/// (−i)^n for the forward transform, i^n for the inverse.
pub fn fourier_phase(n: usize, direction: FourierDirection) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let base = match direction {
        FourierDirection::Forward => -i,
        FourierDirection::Inverse => i,
    };
    match n % 4 {
        0 => one,
        1 => base,
        2 => -one,
        _ => -base,
    }
}

/// ⟨f, g⟩, linear in f and conjugate-linear in g.
pub fn inner_product(f: &TestFunction, g: &TestFunction) -> Result<Complex64> {
    check_len("inner product", f.truncation(), g.truncation())?;
    Ok(f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| a * b.conj()).sum())
}

pub fn seminorm(f: &TestFunction, k: SeminormIndex) -> f64 {
    f.coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| k.weight(n) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Duality pairing ⟨f, F⟩ between a test function and a distribution.
pub fn pair(f: &TestFunction, dist: &TemperedDistributionSample) -> Result<Complex64> {
    check_len("duality pairing", f.truncation(), dist.truncation())?;
    Ok(f.coeffs
        .iter()
        .zip(&dist.pairings)
        .map(|(a, b)| a * b.conj())
        .sum())
}
