//! Exact evaluation of the closed-form distributions, bounds, polynomials,
//! and asymptotics attached to the conformal-radius law of a boundary bubble.
//!
//! The central object is the distribution of the conformal radius `r` of a
//! sampled loop, seen from the marked interior point: `P(r ≥ q)` has three
//! equivalent exact forms, all implemented and cross-checked here:
//!
//! - [`radius_cdf_product`]: the triple product `∏ (1 − q^{2n/3})³`,
//! - [`radius_cdf_series`]: the alternating theta-style series
//!   `Σ (−1)ⁿ (2n+1) q^{n(n+1)/3}`,
//! - [`radius_cdf_eta`]: the Dedekind-eta form `q^{−1/8} η(s)³` with nome
//!   `q = e^{2πis}` evaluated on the imaginary axis (threshold `q^{3/2}`),
//! - [`radius_cdf_modular`]: the modular-transformed product, numerically
//!   superior for thresholds near 1 (small modulus).
//!
//! Around it sit the absorption-time survival function ([`survival_tau`]),
//! the Jacobi polynomials `P_n^{(1,−1)}` and the eigenfunction expansion of
//! the angle process's transition density ([`transition_density`]), the
//! small-mass and small-modulus asymptotics, and the two-sided bounds
//! ([`bub_bounds`]) used by the loop-measure quadrature.
//!
//! All series and products are truncated under an explicit
//! [`TruncationPolicy`]. Both have geometric tails, so the first omitted
//! term bounds the truncation error; near `q → 1` the product needs far more
//! than the default 200 factors for full *relative* accuracy — callers that
//! care (tables, quadrature) should pass [`TruncationPolicy::exhaustive`].

use crate::error::{Error, Result};

use std::f64::consts::PI;

/// Stopping rule for infinite products and series.
///
/// A product stops once `|1 − factor| < abs_tol`; a series once
/// `|term| < abs_tol`; both stop unconditionally after `max_terms` terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Absolute threshold on the next factor's deviation from 1 (products)
    /// or on the next term (series). Must be positive.
    pub abs_tol: f64,
    /// Hard cap on the number of terms. Must be at least 1.
    pub max_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            abs_tol: 1e-16,
            max_terms: 200,
        }
    }
}

impl TruncationPolicy {
    /// Policy with a term cap high enough for full convergence of every
    /// product in this module over the whole open unit interval of nomes
    /// representable in `f64` (the worst case, `q = 0.99`, needs ~5,600
    /// factors; thresholds even closer to 1 are served by the modular
    /// route).
    pub fn exhaustive() -> Self {
        TruncationPolicy {
            abs_tol: 1e-16,
            max_terms: 200_000,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::domain("truncation policy: abs_tol must be positive"));
        }
        if self.max_terms == 0 {
            return Err(Error::domain("truncation policy: max_terms must be at least 1"));
        }
        Ok(())
    }
}

/// A nome: a real number strictly inside the open interval (0, 1).
///
/// Constructing a `Nome` is the single domain check for all the radius-law
/// evaluators.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Nome(f64);

impl Nome {
    /// Validates `0 < q < 1`.
    pub fn new(q: f64) -> Result<Self> {
        if q > 0.0 && q < 1.0 {
            Ok(Nome(q))
        } else {
            Err(Error::domain(format!("nome must lie in (0,1), got {q}")))
        }
    }

    /// The underlying value.
    pub fn get(self) -> f64 {
        self.0
    }
}

/// `P(r ≥ q) = ∏_{n≥1} (1 − q^{2n/3})³`, truncated per policy.
///
/// The product form of the conformal-radius law. Strictly decreasing in `q`
/// with values in (0, 1) on the open interval; clamped into [0, 1] against
/// rounding.
pub fn radius_cdf_product(q: Nome, pol: TruncationPolicy) -> Result<f64> {
    pol.check()?;
    let t = (q.get().ln() * (2.0 / 3.0)).exp();
    Ok(cubed_product(t, pol).clamp(0.0, 1.0))
}

/// `∏_{n≥1} (1 − tⁿ)³` for `t ∈ (0,1)`, under the policy's stopping rule.
fn cubed_product(t: f64, pol: TruncationPolicy) -> f64 {
    let mut product = 1.0;
    let mut x = 1.0;
    for _ in 0..pol.max_terms {
        x *= t;
        // (1 - x)^3 differs from 1 by ~3x.
        if 3.0 * x < pol.abs_tol {
            break;
        }
        let f = 1.0 - x;
        product *= f * f * f;
    }
    product
}

/// `P(r ≥ q) = Σ_{n≥0} (−1)ⁿ (2n+1) q^{n(n+1)/3}`, truncated per policy.
///
/// The alternating-series form of the same distribution; the two evaluators
/// agree to better than 1e−12 absolutely across (0, 1) (mutual-oracle
/// property, enforced by tests).
pub fn radius_cdf_series(q: Nome, pol: TruncationPolicy) -> Result<f64> {
    pol.check()?;
    let ln_q = q.get().ln();
    let mut sum = 1.0; // n = 0 term
    let mut sign = -1.0;
    for n in 1..=pol.max_terms as u64 {
        let exponent = ln_q * (n * (n + 1)) as f64 / 3.0;
        let term = (2 * n + 1) as f64 * exponent.exp();
        if term < pol.abs_tol {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Dedekind eta on the imaginary axis: `η(it) = e^{−πt/12} ∏ (1 − e^{−2πnt})`.
///
/// # Errors
/// Domain error unless `t` is positive and finite.
pub fn dedekind_eta(t: f64, pol: TruncationPolicy) -> Result<f64> {
    pol.check()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "dedekind_eta: argument must be positive and finite, got {t}"
        )));
    }
    let q = (-2.0 * PI * t).exp();
    let mut product = 1.0;
    let mut x = 1.0;
    for _ in 0..pol.max_terms {
        x *= q;
        if x < pol.abs_tol {
            break;
        }
        product *= 1.0 - x;
    }
    Ok((-PI * t / 12.0).exp() * product)
}

/// The eta form of the radius law: `q^{−1/8} η(s)³` with `q = e^{2πis}`,
/// `s = it` on the imaginary axis.
///
/// Evaluates the probability that the loop's conformal radius is at least
/// `q^{3/2}`; equivalently `radius_cdf_eta(q) = radius_cdf_product(q^{3/2})`,
/// an identity enforced to 1e−12 by the identity suite.
pub fn radius_cdf_eta(q: Nome, pol: TruncationPolicy) -> Result<f64> {
    let t = -q.get().ln() / (2.0 * PI);
    let eta = dedekind_eta(t, pol)?;
    let value = (-q.get().ln() / 8.0).exp() * eta * eta * eta;
    Ok(value.clamp(0.0, 1.0))
}

/// Modular-transformed evaluation of `P(r ≥ e^{−a})`, accurate for small `a`.
///
/// `P(r ≥ e^{−a}) = e^{a/12} (3π/a)^{3/2} e^{−3π²/(4a)} ∏_{n≥1}(1 − e^{−6π²n/a})³`.
///
/// The direct product needs `O(1/a)` factors as `a ↓ 0` while this form
/// converges after one or two, so it is the preferred route for thresholds
/// near 1. Agrees with [`radius_cdf_product`] to 1e−10 absolutely (identity
/// suite).
///
/// # Errors
/// Domain error unless `a` is positive and finite.
pub fn radius_cdf_modular(a: f64, pol: TruncationPolicy) -> Result<f64> {
    pol.check()?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "radius_cdf_modular: modulus must be positive and finite, got {a}"
        )));
    }
    let x1 = (-6.0 * PI * PI / a).exp();
    let tail = cubed_product(x1, pol);
    let value = (a / 12.0).exp() * (3.0 * PI / a).powf(1.5) * (-3.0 * PI * PI / (4.0 * a)).exp() * tail;
    Ok(value.clamp(0.0, 1.0))
}

/// `P(r ≥ q)` choosing the numerically better route automatically.
///
/// Uses the modular form when the threshold is close to 1 (few terms there),
/// the direct product otherwise. The crossover at `−ln q = 0.8` keeps both
/// branches comfortably inside their fast regimes; the branches agree to
/// 1e−12 near the crossover (tested).
pub fn radius_cdf(q: Nome, pol: TruncationPolicy) -> Result<f64> {
    let a = -q.get().ln();
    if a < 0.8 {
        radius_cdf_modular(a, pol)
    } else {
        radius_cdf_product(q, pol)
    }
}

/// Survival function of the absorption time: `P(τ_π > t)` via the series
/// `Σ_{n≥1} (−1)^{n−1} (2n+1) e^{−t n(n+1)/2}`.
///
/// # Errors
/// Domain error unless `t` is positive and finite.
pub fn survival_tau(t: f64, pol: TruncationPolicy) -> Result<f64> {
    pol.check()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "survival_tau: time must be positive and finite, got {t}"
        )));
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for n in 1..=pol.max_terms as u64 {
        let term = (2 * n + 1) as f64 * (-t * (n * (n + 1)) as f64 / 2.0).exp();
        if term < pol.abs_tol {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Product form of the survival function: `1 − ∏_{n≥1}(1 − e^{−nt})³`.
///
/// Implemented literally as `1 − radius_cdf_product(e^{−3t/2})`, which is the
/// change of variables `r = e^{−3τ/2}` — so this form and the radius law share
/// one truncation behavior exactly. Agrees with the series form within the
/// policy tolerance.
pub fn survival_tau_product(t: f64, pol: TruncationPolicy) -> Result<f64> {
    pol.check()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "survival_tau_product: time must be positive and finite, got {t}"
        )));
    }
    let q = (-1.5 * t).exp();
    if q == 0.0 {
        // Threshold underflows for t beyond ~470; the survival is 0 there.
        return Ok(0.0);
    }
    Ok(1.0 - radius_cdf_product(Nome::new(q)?, pol)?)
}

/// Jacobi polynomial `P_n^{(1,−1)}(x)` by a stable three-term recurrence.
///
/// `P_0 = 1`, `P_1 = 1 + x`, and for `n ≥ 2`
/// `n(n−1) P_n = (2n−1)(n−1) x P_{n−1} − n(n−2) P_{n−2}`.
/// Matches the Rodrigues form (kept as a test oracle). On `[−1, 1]` the
/// values are bounded by `n + 1`, attained at `x = 1`.
///
/// # Errors
/// Domain error if `|x| > 1` or `x` is not finite.
pub fn jacobi_p(n: u32, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "jacobi_p: argument must lie in [-1,1], got {x}"
        )));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0; // P_0
    let mut cur = 1.0 + x; // P_1
    for k in 2..=n {
        let kf = f64::from(k);
        let next = ((2.0 * kf - 1.0) * (kf - 1.0) * x * cur - kf * (kf - 2.0) * prev)
            / (kf * (kf - 1.0));
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Result of a truncated transition-density evaluation.
///
/// For very small times the truncated eigenfunction sum can oscillate below
/// zero; the reported `value` is clamped at 0 while `raw` keeps the signed
/// sum (quadratures must integrate `raw`, not the clamped value), and
/// `negative_truncated` flags a truncation artifact beyond tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionDensity {
    /// `max(raw, 0)` — the reported density value.
    pub value: f64,
    /// The signed truncated sum.
    pub raw: f64,
    /// True when `raw < −abs_tol` (truncation artifact, not a real value).
    pub negative_truncated: bool,
}

/// Transition density `p_t(θ, θ′)` of the conditioned angle process.
///
/// `p_t(θ,θ′) = Σ_{n≥1} e^{−t n(n+1)/2} · n(2n+1)/(2n+2) · p_n(θ) p_n*(θ′)`
/// with `p_n(θ) = P_n^{(1,−1)}(cos θ)` and
/// `p_n*(θ) = p_n(θ) · 2 sin³(θ/2) / cos(θ/2)`.
///
/// `θ = 0` is allowed and uses the analytic entrance limit `p_n(0) = n + 1`
/// instead of evaluating at a small positive angle. The density integrates
/// over `θ′` to the survival function: `∫₀^π p_t(0,θ′) dθ′ = P(τ_π > t)`
/// (quadrature-verified).
///
/// # Errors
/// Domain error unless `t > 0`, `θ ∈ [0, π)` and `θ′ ∈ (0, π)`.
pub fn transition_density(
    t: f64,
    theta: f64,
    theta_p: f64,
    pol: TruncationPolicy,
) -> Result<TransitionDensity> {
    pol.check()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "transition_density: time must be positive and finite, got {t}"
        )));
    }
    if !(0.0..PI).contains(&theta) {
        return Err(Error::domain(format!(
            "transition_density: theta must lie in [0, pi), got {theta}"
        )));
    }
    if !(theta_p > 0.0 && theta_p < PI) {
        return Err(Error::domain(format!(
            "transition_density: theta_p must lie in (0, pi), got {theta_p}"
        )));
    }
    let at_entrance = theta == 0.0;
    let x = theta.cos();
    let xp = theta_p.cos();
    let half = theta_p / 2.0;
    let weight = 2.0 * half.sin().powi(3) / half.cos();

    let mut sum = 0.0;
    // Rolling recurrence states: (P_{n-1}, P_n) at x and at xp.
    let (mut prev, mut cur) = (1.0, 1.0 + x);
    let (mut prev_p, mut cur_p) = (1.0, 1.0 + xp);
    for n in 1..=pol.max_terms as u64 {
        let nf = n as f64;
        let decay = (-t * nf * (nf + 1.0) / 2.0).exp();
        let norm = nf * (2.0 * nf + 1.0) / (2.0 * (nf + 1.0));
        let pn = if at_entrance { nf + 1.0 } else { cur };
        sum += decay * norm * pn * cur_p * weight;

        // |P_m| ≤ m + 1 on [−1,1] bounds the next term.
        let mf = nf + 1.0;
        let next_bound = (-t * mf * (mf + 1.0) / 2.0).exp()
            * (mf * (2.0 * mf + 1.0) / (2.0 * (mf + 1.0)))
            * (mf + 1.0)
            * (mf + 1.0)
            * weight.abs();
        if next_bound < pol.abs_tol {
            break;
        }
        let k = nf + 1.0;
        let next = ((2.0 * k - 1.0) * (k - 1.0) * x * cur - k * (k - 2.0) * prev) / (k * (k - 1.0));
        prev = cur;
        cur = next;
        let next_p =
            ((2.0 * k - 1.0) * (k - 1.0) * xp * cur_p - k * (k - 2.0) * prev_p) / (k * (k - 1.0));
        prev_p = cur_p;
        cur_p = next_p;
    }
    Ok(TransitionDensity {
        value: sum.max(0.0),
        raw: sum,
        negative_truncated: sum < -pol.abs_tol,
    })
}

/// Small-threshold asymptotic of the complementary law: `3 q^{2/3}`.
///
/// `1 − radius_cdf_product(q) ~ 3q^{2/3}` as `q ↓ 0`. Accepts the closed
/// interval boundary `q = 1` as a pure formula evaluation (no asymptotic
/// validity claimed there).
pub fn asymptotic_small_mass(q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain(format!(
            "asymptotic_small_mass: need 0 < q <= 1, got {q}"
        )));
    }
    Ok(3.0 * (q.ln() * (2.0 / 3.0)).exp())
}

/// Small-modulus asymptotic of `P(r ≥ e^{−a})`: `(3π/a)^{3/2} e^{−3π²/(4a)}`.
///
/// The exact modular form [`radius_cdf_modular`] shows the leading correction
/// factor is `e^{a/12}`, so the ratio exact/asymptotic is ≈ 1.025 at
/// `a = 0.3`.
pub fn asymptotic_small_a_tail(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "asymptotic_small_a_tail: modulus must be positive and finite, got {a}"
        )));
    }
    Ok((3.0 * PI / a).powf(1.5) * (-3.0 * PI * PI / (4.0 * a)).exp())
}

/// Two-sided bounds for the probability that a loop fits in the ring of
/// modulus `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubBounds {
    /// `∏ (1 − (4q)^{2n/3})³` with `q = e^{−a}`, valid (and positive) only
    /// for `q < 1/4`; 0 by convention otherwise.
    pub lower: f64,
    /// `∏ (1 − q^{2n/3})³` with `q = e^{−a}`.
    pub upper: f64,
}

/// Sandwich bounds on `P(ℓ ⊂ U_a ∪ {∞})` for the ring of modulus `a`.
///
/// `lower ≤ P ≤ upper` with the products above; the lower bound only holds
/// for `a > ln 4` and is reported as 0 elsewhere.
///
/// # Errors
/// Domain error unless `a` is positive.
pub fn bub_bounds(a: f64, pol: TruncationPolicy) -> Result<BubBounds> {
    pol.check()?;
    if !(a > 0.0) {
        return Err(Error::domain(format!(
            "bub_bounds: modulus must be positive, got {a}"
        )));
    }
    let q = (-a).exp();
    let upper = if q == 0.0 {
        1.0
    } else {
        radius_cdf_product(Nome::new(q)?, pol)?
    };
    let q4 = 4.0 * q;
    let lower = if q4 >= 1.0 {
        0.0
    } else if q4 == 0.0 {
        1.0
    } else {
        radius_cdf_product(Nome::new(q4)?, pol)?
    };
    Ok(BubBounds { lower, upper })
}

/// One row of the deterministic identity table.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    /// Short machine-readable name, e.g. `product_vs_series`.
    pub name: String,
    /// Argument the identity was evaluated at.
    pub arg: f64,
    /// Left-hand side value.
    pub lhs: f64,
    /// Right-hand side value.
    pub rhs: f64,
    /// `|lhs − rhs|`, or distance outside the allowed window for ratio rows.
    pub residual: f64,
    /// Pass threshold for the residual.
    pub tol: f64,
    /// `residual ≤ tol`.
    pub pass: bool,
}

impl IdentityCheck {
    fn new(name: &str, arg: f64, lhs: f64, rhs: f64, tol: f64) -> Self {
        let residual = (lhs - rhs).abs();
        IdentityCheck {
            name: name.to_string(),
            arg,
            lhs,
            rhs,
            residual,
            pass: residual <= tol,
            tol,
        }
    }
}

/// The deterministic identity suite: every closed-form cross-check in this
/// module, evaluated on its canonical grid.
///
/// Covers: product vs series on `q = 0.01, 0.02, …, 0.99`; the eta-form
/// consistency; the eta modular identity on `[0.1, 10]`; survival series vs
/// product; the full modular identity for small modulus; the two asymptotic
/// ratios; and the bounds-ordering table. Used by both the `tables` command
/// and the acceptance suite.
pub fn identity_checks(pol: TruncationPolicy) -> Result<Vec<IdentityCheck>> {
    let mut rows = Vec::new();

    for i in 1..=99u32 {
        let q = Nome::new(f64::from(i) / 100.0)?;
        let lhs = radius_cdf_product(q, pol)?;
        let rhs = radius_cdf_series(q, pol)?;
        rows.push(IdentityCheck::new("product_vs_series", q.get(), lhs, rhs, 1e-12));
    }

    for &qv in &[0.1, 0.5, 0.9] {
        let q = Nome::new(qv)?;
        let lhs = radius_cdf_eta(q, pol)?;
        let rhs = radius_cdf_product(Nome::new(qv.powf(1.5))?, pol)?;
        rows.push(IdentityCheck::new("eta_form_vs_product", qv, lhs, rhs, 1e-12));
    }

    for &t in &[0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let lhs = dedekind_eta(1.0 / t, pol)?;
        let rhs = t.sqrt() * dedekind_eta(t, pol)?;
        rows.push(IdentityCheck::new("eta_modular", t, lhs, rhs, 1e-10));
    }

    for &t in &[0.1, 0.5, 1.0, 2.0, 5.0] {
        let lhs = survival_tau(t, pol)?;
        let rhs = survival_tau_product(t, pol)?;
        rows.push(IdentityCheck::new("survival_series_vs_product", t, lhs, rhs, 1e-12));
    }

    for &a in &[0.2f64, 0.5, 1.0] {
        let lhs = radius_cdf_product(Nome::new((-a).exp())?, pol)?;
        let rhs = radius_cdf_modular(a, pol)?;
        rows.push(IdentityCheck::new("modular_small_modulus", a, lhs, rhs, 1e-10));
    }

    // Ratio rows: residual is the distance of the ratio from 1, tol is the
    // half-width of the allowed window.
    {
        let q = Nome::new(1e-4)?;
        let ratio = (1.0 - radius_cdf_product(q, pol)?) / asymptotic_small_mass(q.get())?;
        rows.push(IdentityCheck::new("small_mass_ratio", q.get(), ratio, 1.0, 0.02));
        let a = 0.3f64;
        let ratio = radius_cdf_product(Nome::new((-a).exp())?, pol)? / asymptotic_small_a_tail(a)?;
        rows.push(IdentityCheck::new("small_modulus_ratio", a, ratio, 1.0, 0.05));
    }

    for &a in &[0.5, (4.0f64).ln(), 1.5, 3.0, 6.0] {
        let b = bub_bounds(a, pol)?;
        // Ordering residual: how far lower exceeds upper (0 when ordered).
        let residual = (b.lower - b.upper).max(0.0);
        rows.push(IdentityCheck {
            name: "bounds_ordering".to_string(),
            arg: a,
            lhs: b.lower,
            rhs: b.upper,
            residual,
            tol: 0.0,
            pass: residual <= 0.0 && (0.0..=1.0).contains(&b.lower) && (0.0..=1.0).contains(&b.upper),
        });
    }

    Ok(rows)
}
