//! Masses of loop families under the scale-invariant measure on
//! self-avoiding loops, normalized so the bubble family carries weight 1,
//! plus the closed-form one-sided passage probability of the chordal curve.
//!
//! The loop measure assigns to "bubbles around `i` that leave the
//! hyperbolic disc `U_b`" the mass `E[max(0, b − a*)]`, where `a*` is the
//! critical modulus of a unit-rate bubble: by scale invariance the family
//! of bubbles crossing the shell between `U_s` and `U_{s+ds}` has mass
//! `ds`, and a bubble contributes to every shell between its own modulus
//! and `b` ([`shell_mass`] and [`werner_mass`] are the two readings of the
//! same identity). The conformal-radius sandwich `ln(1/r) ≤ a* ≤ ln(4/r)`
//! brackets that mass by two integrals of the exact radius law, which
//! [`werner_mass`] reports alongside the Monte-Carlo estimate.
//!
//! For a simply connected `D ∋ i` (disc normalization: `Φ: D → 𝔻` with
//! `Φ(i) = 0` — equivalently any fixed interior point), the mass of loops
//! around the marked point that exit `D` is `λ·ln Φ′`, with `Φ′ ≥ 1` by
//! the Schwarz lemma; [`mass_outside_domain`] takes that derivative as
//! input, so exact map data (discs, slit discs via the Koebe map) can be
//! fed in directly.
//!
//! [`schramm_q`] is the closed-form probability `½(1 + x/√(1+x²))` that
//! the chordal curve from 0 to ∞ passes to the right of a reference point
//! with angular coordinate `cot θ = x` — the passage formula the
//! unconditioned angle diffusion must reproduce through its absorption
//! probabilities.

use crate::error::{Error, Result};
use crate::geometry::BubbleSample;
use crate::quad::integrate;
use crate::specfun::{radius_cdf, radius_cdf_product, Nome, TruncationPolicy};
use crate::stats::{mean_interval, wilson_interval, Z_95};

/// Normalization and quadrature parameters for measure evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    /// Overall intensity of the loop measure (the bubble normalization is
    /// `λ = 1`).
    pub lambda: f64,
    /// Gauss–Legendre node count for the envelope integrals.
    pub quad_points: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            lambda: 1.0,
            quad_points: 64,
        }
    }
}

impl MeasureConfig {
    /// Validates `λ > 0` and a usable node count.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::domain(format!(
                "measure config: lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if self.quad_points < 2 {
            return Err(Error::domain(format!(
                "measure config: need at least 2 quadrature points, got {}",
                self.quad_points
            )));
        }
        Ok(())
    }
}

/// A Monte-Carlo estimate with a 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    /// The point estimate.
    pub value: f64,
    /// Number of samples behind it.
    pub n: usize,
    /// Lower 95% confidence limit.
    pub ci_low: f64,
    /// Upper 95% confidence limit.
    pub ci_high: f64,
}

impl McEstimate {
    /// Estimate of a probability from `successes` out of `n` trials, with
    /// a Wilson 95% interval (well-behaved at the boundaries).
    pub fn from_bernoulli(successes: usize, n: usize) -> Result<McEstimate> {
        if n == 0 {
            return Err(Error::EmptySamples);
        }
        let (lo, hi) = wilson_interval(successes as u64, n as u64, Z_95)?;
        Ok(McEstimate {
            value: successes as f64 / n as f64,
            n,
            ci_low: lo,
            ci_high: hi,
        })
    }

    /// Estimate of a mean from real-valued samples, with a normal 95%
    /// interval.
    pub fn from_samples(samples: &[f64]) -> Result<McEstimate> {
        let (mean, lo, hi) = mean_interval(samples, Z_95)?;
        Ok(McEstimate {
            value: mean,
            n: samples.len(),
            ci_low: lo,
            ci_high: hi,
        })
    }
}

/// Probability that the chordal curve from 0 to ∞ passes to the right of
/// a reference point with angular coordinate `cot θ = x`:
/// `q(x) = ½(1 + x/√(1 + x²))`.
///
/// # Errors
/// Domain error if `x` is not finite.
pub fn schramm_q(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!(
            "schramm_q: x must be finite, got {x}"
        )));
    }
    Ok(0.5 * (1.0 + x / x.hypot(1.0)))
}

/// Fraction of sampled bubbles that stay inside `U_a`, with a Wilson 95%
/// interval.
///
/// # Errors
/// Domain error unless `a > 0`; empty-sample error without samples.
pub fn bubble_stay_estimate(a: f64, samples: &[BubbleSample]) -> Result<McEstimate> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "bubble_stay_estimate: modulus must be positive and finite, got {a}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let inside = samples.iter().filter(|s| s.a_star < a).count();
    McEstimate::from_bernoulli(inside, samples.len())
}

/// Mass of bubbles around `i` that do not stay inside `U_b`, as the
/// Monte-Carlo estimate `mean(max(0, b − a*))` together with the exact
/// envelope `(lower, upper)` implied by the radius law through the
/// conformal-radius sandwich:
///
/// - `upper = ∫₀^b P(r ≥ e^{−s}) ds` (from `a* ≥ ln(1/r)`),
/// - `lower = ∫_{ln 4}^b P(r ≥ 4e^{−s}) ds` (from `a* ≤ ln(4/r)`).
///
/// The mass is reported in the bubble normalization (`λ` does not enter);
/// as `b → ∞` the estimate grows like `b − E[ln(1/r)] = b − 3`.
///
/// # Errors
/// Domain error unless `b > 0`; empty-sample error without samples.
pub fn werner_mass(
    b: f64,
    samples: &[BubbleSample],
    cfg: &MeasureConfig,
) -> Result<(McEstimate, f64, f64)> {
    cfg.validate()?;
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::domain(format!(
            "werner_mass: modulus must be positive and finite, got {b}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let excess: Vec<f64> = samples.iter().map(|s| (b - s.a_star).max(0.0)).collect();
    let estimate = McEstimate::from_samples(&excess)?;
    let pol = TruncationPolicy::default();
    let nome = |q: f64| Nome::new(q).expect("integrand argument in (0,1]");
    let upper = integrate(
        |s| radius_cdf(nome((-s).exp()), pol).expect("valid nome"),
        0.0,
        b,
        cfg.quad_points,
    );
    let ln4 = 4.0f64.ln();
    let lower = if b <= ln4 {
        0.0
    } else {
        integrate(
            |s| radius_cdf_product(nome(4.0 * (-s).exp()), pol).expect("valid nome"),
            ln4,
            b,
            cfg.quad_points,
        )
    };
    Ok((estimate, lower, upper))
}

/// Mass of loops around the marked interior point of a simply connected
/// domain `D` that exit `D`: `λ·ln φ′`, where `φ′` is the derivative at
/// the marked point of the disc-normalizing map `φ: D → 𝔻` (so `φ′ ≥ 1`).
///
/// # Errors
/// Domain error if `φ′ < 1` (no disc-normalized map contracts) or is not
/// finite.
pub fn mass_outside_domain(phi_prime_0: f64, cfg: &MeasureConfig) -> Result<f64> {
    cfg.validate()?;
    if !(phi_prime_0 >= 1.0) || !phi_prime_0.is_finite() {
        return Err(Error::domain(format!(
            "mass_outside_domain: normalizing derivative must be ≥ 1, got {phi_prime_0}"
        )));
    }
    Ok(cfg.lambda * phi_prime_0.ln())
}

/// Mass of bubbles around `i` whose critical modulus falls in `[x, y]`:
/// `λ·(y − x)` — the shells are uniform in the modulus by scale
/// invariance.
///
/// # Errors
/// Domain error unless `0 < x ≤ y` and both are finite.
pub fn shell_mass(x: f64, y: f64, cfg: &MeasureConfig) -> Result<f64> {
    cfg.validate()?;
    if !(x > 0.0) || !x.is_finite() || !y.is_finite() || y < x {
        return Err(Error::domain(format!(
            "shell_mass: need 0 < x ≤ y finite, got [{x}, {y}]"
        )));
    }
    Ok(cfg.lambda * (y - x))
}
