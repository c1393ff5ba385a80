//! Ring domains around the real line, moduli of sampled loops, winding
//! numbers, and the closed-form half-disc restriction factors.
//!
//! The domain family is `U_a = {z ∈ H : |(i + z)/(i − z)| < e^a}`: the
//! upper half-plane minus a closed hyperbolic disc about `i` (a doubly
//! connected ring between the real line and a horizon circle). The Möbius
//! factor [`mobius_abs`] equals `coth(d_H(z, i)/2)`, so the excluded disc
//! shrinks onto `i` as `a` grows and the rings are nested increasingly:
//! `U_a ⊂ U_b` for `a ≤ b`. Euclideanly the horizon circle has centre
//! `i(ρ² + 1)/(ρ² − 1)` and radius `2ρ/(ρ² − 1)` with `ρ = e^a`. The
//! critical modulus of a loop is the smallest `a` with the loop still
//! inside `U_a`: `a* = ln max_k |(i + z_k)/(i − z_k)|` over the sampled
//! points, sharpened by one midpoint-refinement pass near the argmax.
//!
//! A sampled bubble is an open trace: both the entrance toward its
//! boundary attachment and the final closing whisker are cut off (the
//! driver diverges at both ends). The cut ends represent attachment at ∞,
//! so for the winding statistic the trace is closed through a far
//! semicircular arc ([`close_through_infinity`]) and the winding number of
//! the closed polyline around `i` is taken ([`winding_number`]); the raw
//! net turning of the open trace is also available ([`winding_angle`]).
//!
//! The half-disc factors are the closed-form restriction ratios for the
//! region `H ∖ {|z| ≤ ρ}`: `(1 − ρ²)²` for bubbles around `i` and
//! `(1 − ρ²/x²)^{5/8}` for a chordal curve from `x` to ∞, both obtained
//! from the explicit slit maps `z ↦ (z + ρ²/z)/(1 − ρ²)` (fixing `i`) and
//! `z ↦ z + ρ²/z` (fixing ∞) — the exponents are the bubble and chordal
//! restriction exponents of the underlying curve family.

use crate::diffusion::{simulate_lifetime_stream, recover_capacity_driver, SimConfig};
use crate::error::{Error, Result};
use crate::loewner::{chordal_trace_at, CurveTrace};
use crate::LOEWNER_A;

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

/// Ring domain `U_a`: the upper half-plane minus the closed Euclidean
/// disc around `i` whose boundary is the modulus-`a` horizon circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingDomainUa {
    /// Modulus of the ring.
    pub a: f64,
    /// `e^a`, the Möbius-factor threshold of membership.
    pub rho: f64,
    /// Euclidean centre `i(ρ² + 1)/(ρ² − 1) = i·coth(a)` of the excluded
    /// disc.
    pub center: Complex64,
    /// Euclidean radius `2ρ/(ρ² − 1) = 1/sinh(a)` of the excluded disc.
    pub radius: f64,
}

impl RingDomainUa {
    /// Euclidean membership test: strictly above the real line and
    /// strictly outside the excluded disc; on `H` this is equivalent to
    /// `mobius_abs(z) < e^a`.
    pub fn contains(&self, z: Complex64) -> bool {
        z.im > 0.0 && (z - self.center).norm() > self.radius
    }
}

/// The ring domain `U_a` of modulus `a`.
///
/// # Errors
/// Domain error unless `a` is positive and finite.
pub fn u_a(a: f64) -> Result<RingDomainUa> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "u_a: radius must be positive and finite, got {a}"
        )));
    }
    let rho = a.exp();
    let r2 = rho * rho;
    Ok(RingDomainUa {
        a,
        rho,
        center: Complex64::new(0.0, (r2 + 1.0) / (r2 - 1.0)),
        radius: 2.0 * rho / (r2 - 1.0),
    })
}

/// `|(i + z)/(i − z)| = coth(d_H(z, i)/2)`, the Möbius factor grading
/// closeness to `i` (for `Im z ≥ 0` this is ≥ 1, with equality on the
/// real axis, growing to the pole `z = i`, which returns the infinity
/// sentinel).
pub fn mobius_abs(z: Complex64) -> f64 {
    let i = Complex64::new(0.0, 1.0);
    let denom = (i - z).norm();
    if denom == 0.0 {
        return f64::INFINITY;
    }
    (i + z).norm() / denom
}

/// Squared distance from `p` to the segment `[a, b]`.
fn segment_dist_sq(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let ab = b - a;
    let ap = p - a;
    let len_sq = ab.norm_sqr();
    let t = if len_sq == 0.0 {
        0.0
    } else {
        ((ap.re * ab.re + ap.im * ab.im) / len_sq).clamp(0.0, 1.0)
    };
    (ap - ab * t).norm_sqr()
}

/// Distance from the origin to an open polyline (segments included, not
/// just vertices). Infinity for an empty input.
pub fn polyline_min_abs(points: &[Complex64]) -> f64 {
    match points {
        [] => f64::INFINITY,
        [z] => z.norm(),
        _ => points
            .windows(2)
            .map(|w| segment_dist_sq(w[0], w[1], Complex64::new(0.0, 0.0)))
            .fold(f64::INFINITY, f64::min)
            .sqrt(),
    }
}

/// Smallest `a` such that the sampled loop stays inside `U_a`:
/// `ln max mobius_abs` over the vertices, sharpened by one refinement pass
/// that also evaluates the segment midpoints near the vertex argmax (the
/// Möbius factor can peak between samples when the loop passes close to
/// `i`). Returns the infinity sentinel if a vertex hits `i` exactly.
pub fn critical_modulus(trace: &CurveTrace) -> f64 {
    let pts = trace.points();
    let mut best = f64::NEG_INFINITY;
    let mut k_best = 0usize;
    for (k, &z) in pts.iter().enumerate() {
        let m = mobius_abs(z);
        if m > best {
            best = m;
            k_best = k;
        }
    }
    if !best.is_finite() {
        return f64::INFINITY;
    }
    let lo = k_best.saturating_sub(8);
    let hi = (k_best + 8).min(pts.len().saturating_sub(1));
    for j in lo..hi {
        let mid = (pts[j] + pts[j + 1]) * 0.5;
        best = best.max(mobius_abs(mid));
    }
    best.ln()
}

/// Signed winding number of an implicitly closed polyline around `p`, by
/// accumulated turning angle (exact up to rounding, then snapped to the
/// nearest integer).
///
/// # Errors
/// Degenerate error if the polyline has fewer than three vertices or
/// passes through (or within relative tolerance `1e−9` of) `p`.
pub fn winding_number(points: &[Complex64], p: Complex64) -> Result<i32> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!(
            "winding number needs at least 3 vertices, got {}",
            points.len()
        )));
    }
    let scale = points
        .iter()
        .map(|z| (z - p).norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol_sq = (1e-9 * scale) * (1e-9 * scale);
    let mut total = 0.0f64;
    for k in 0..points.len() {
        let a = points[k];
        let b = points[(k + 1) % points.len()];
        if segment_dist_sq(a, b, p) <= tol_sq {
            return Err(Error::Degenerate(
                "winding number undefined: polyline passes through the point".to_string(),
            ));
        }
        let u = a - p;
        let v = b - p;
        let cross = u.re * v.im - u.im * v.re;
        let dot = u.re * v.re + u.im * v.im;
        total += cross.atan2(dot);
    }
    Ok((total / (2.0 * PI)).round() as i32)
}

/// Net turning of an open polyline around `p`, in full turns: the sum of
/// the signed angles subtended at `p` by consecutive segments, divided by
/// 2π. A polyline that traverses a full loop around `p` and stops where it
/// started gives ±1 exactly; an open arc gives the fraction of a turn it
/// subtends.
///
/// # Errors
/// Degenerate error if the polyline has fewer than two vertices or passes
/// through (or within relative tolerance `1e−9` of) `p`.
pub fn winding_angle(points: &[Complex64], p: Complex64) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Degenerate(format!(
            "turning angle needs at least 2 vertices, got {}",
            points.len()
        )));
    }
    let scale = points
        .iter()
        .map(|z| (z - p).norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol_sq = (1e-9 * scale) * (1e-9 * scale);
    let mut total = 0.0f64;
    for w in points.windows(2) {
        if segment_dist_sq(w[0], w[1], p) <= tol_sq {
            return Err(Error::Degenerate(
                "turning angle undefined: polyline passes through the point".to_string(),
            ));
        }
        let u = w[0] - p;
        let v = w[1] - p;
        let cross = u.re * v.im - u.im * v.re;
        let dot = u.re * v.re + u.im * v.im;
        total += cross.atan2(dot);
    }
    Ok(total / (2.0 * PI))
}

/// Closes a trace through an attachment at ∞: the trace vertices are
/// extended by a far semicircular arc of radius `2·max|point|` running
/// from the endpoint's direction back to the start's direction (the
/// returned polyline is meant for [`winding_number`], which closes it
/// implicitly). This represents the cut-off pieces of a curve attached at
/// the far end of the axis: the completion runs through the upper far
/// field, where it can no longer affect the count around any near point.
pub fn close_through_infinity(trace: &CurveTrace) -> Vec<Complex64> {
    let pts = trace.points();
    let r_far = 2.0 * pts.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let arg_up = |z: Complex64| {
        if z.norm() == 0.0 {
            FRAC_PI_2
        } else {
            z.arg().clamp(0.0, PI)
        }
    };
    let phi_end = arg_up(*pts.last().expect("trace is non-empty"));
    let phi_start = arg_up(pts[0]);
    let n_arc = 64usize;
    let mut out = pts.to_vec();
    for k in 0..=n_arc {
        let phi = phi_end + (phi_start - phi_end) * k as f64 / n_arc as f64;
        out.push(Complex64::from_polar(r_far, phi));
    }
    out
}

/// Outcome of checking `ln(1/r) − tol ≤ a* ≤ ln(4/r) + tol`, the growth
/// sandwich tying a loop's conformal radius seen from `i` to its critical
/// modulus (the constant 4 is the distortion bound of schlicht maps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichCheck {
    /// `a* ≥ ln(1/r) − tol`.
    pub lower_ok: bool,
    /// `a* ≤ ln(4/r) + tol`.
    pub upper_ok: bool,
    /// Both sides hold.
    pub pass: bool,
    /// `a* − ln(1/r)` (negative means the lower side failed by that much).
    pub lower_slack: f64,
    /// `ln(4/r) − a*` (negative means the upper side failed by that much).
    pub upper_slack: f64,
}

/// Checks the conformal-radius sandwich for one loop; see [`SandwichCheck`].
///
/// # Errors
/// Domain error unless `r > 0`, `a_star` is finite, and `tol ≥ 0`.
pub fn koebe_sandwich_check(r: f64, a_star: f64, tol: f64) -> Result<SandwichCheck> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!(
            "sandwich check: radius must be positive and finite, got {r}"
        )));
    }
    if !a_star.is_finite() {
        return Err(Error::domain(format!(
            "sandwich check: modulus must be finite, got {a_star}"
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::domain(format!(
            "sandwich check: tolerance must be nonnegative, got {tol}"
        )));
    }
    let lower_slack = a_star - (1.0 / r).ln();
    let upper_slack = (4.0 / r).ln() - a_star;
    let lower_ok = lower_slack >= -tol;
    let upper_ok = upper_slack >= -tol;
    Ok(SandwichCheck {
        lower_ok,
        upper_ok,
        pass: lower_ok && upper_ok,
        lower_slack,
        upper_slack,
    })
}

/// Probability that a bubble around `i` avoids the half-disc
/// `{z ∈ H : |z| ≤ ρ}`: `(1 − ρ²)²`, the squared ∞-derivative of the slit
/// map `(z + ρ²/z)/(1 − ρ²)` that removes the half-disc while fixing `i`.
///
/// # Errors
/// Domain error unless `0 < ρ < 1` (for ρ ≥ 1 the half-disc covers `i`).
pub fn halfdisk_restriction_bubble(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain(format!(
            "half-disc factor: need 0 < rho < 1, got {rho}"
        )));
    }
    let f = 1.0 - rho * rho;
    Ok(f * f)
}

/// Probability that a chordal curve from `x` to ∞ avoids the half-disc
/// `{z ∈ H : |z| ≤ ρ}`: `(1 − ρ²/x²)^{5/8}`, from the 5/8 restriction
/// exponent and the derivative product `Φ′(x)·Φ′(∞)` of the slit map
/// `z + ρ²/z` (the product is invariant under affine renormalizations
/// fixing `x` and ∞).
///
/// # Errors
/// Domain error unless `ρ > 0` and `|x| > ρ`.
pub fn halfdisk_restriction_chordal(x: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::domain(format!(
            "half-disc factor: radius must be positive and finite, got {rho}"
        )));
    }
    if !(x.abs() > rho) {
        return Err(Error::domain(format!(
            "half-disc factor: start point |{x}| must exceed rho = {rho}"
        )));
    }
    Ok((1.0 - rho * rho / (x * x)).powf(0.625))
}

/// One sampled bubble around `i`, reduced to its scalar statistics (the
/// trace is kept only on request — bulk sampling drops it).
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleSample {
    /// Conformal radius `e^{−3τ_π/2}` of the loop's interior seen from `i`.
    pub r: f64,
    /// Critical modulus: smallest `a` with the sampled loop inside `U_a`.
    pub a_star: f64,
    /// Winding number around `i` of the trace closed through a far arc
    /// ([`close_through_infinity`]); ±1 for a well-resolved bubble.
    pub winding: i32,
    /// Distance from the origin to the sampled trace — the statistic for
    /// half-disc avoidance.
    pub min_abs: f64,
    /// The sampled trace, when requested.
    pub trace: Option<CurveTrace>,
}

/// Resolution of the per-bubble trace reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleOptions {
    /// Tip budget for the trace: half the tips are spread uniformly in
    /// radius time (resolving the loop body), half uniformly over the
    /// driver grid (grid samples concentrate where the hull grows
    /// violently, so these resolve the fast stretches), and the recovered
    /// endpoint is always included.
    pub trace_points: usize,
    /// Keep the trace on the returned sample.
    pub keep_trace: bool,
}

impl Default for BubbleOptions {
    fn default() -> Self {
        BubbleOptions {
            trace_points: 400,
            keep_trace: false,
        }
    }
}

/// Samples one bubble around `i` on stream `path_index`: angle path →
/// capacity driver → trace → (r, a*, winding, origin distance).
///
/// # Errors
/// Propagates simulation, recovery, and tracing errors; degenerate traces
/// (winding undefined) are reported, not patched.
pub fn sample_bubble(
    cfg: &SimConfig,
    path_index: u64,
    opts: &BubbleOptions,
) -> Result<BubbleSample> {
    if opts.trace_points < 2 {
        return Err(Error::domain(format!(
            "bubble options: need at least 2 trace points, got {}",
            opts.trace_points
        )));
    }
    let (path, r) = simulate_lifetime_stream(cfg, path_index)?;
    let (driver, states) = recover_capacity_driver(&path, cfg)?;
    let grid = driver.times();
    let g = grid.len();
    let nearest = |t: f64| {
        let hi = grid.partition_point(|&v| v < t).min(g - 1);
        if hi > 0 && t - grid[hi - 1] < grid[hi] - t {
            hi - 1
        } else {
            hi
        }
    };
    // Tip placement: half the budget uniform in radius time (the trace
    // sweeps the loop body at roughly unit angular speed in radius time),
    // half uniform over the driver grid itself (grid samples concentrate
    // where the hull grows violently — the entrance and any graze of the
    // closing angle — so these tips resolve the fast stretches that radius
    // placement cannot see), plus the final sample. The composition always
    // uses the full grid; placement only chooses where tips are reported.
    let n_rad = opts.trace_points / 2;
    let n_grid = opts.trace_points - n_rad;
    let mut indices: Vec<usize> = Vec::with_capacity(opts.trace_points + 1);
    let stride_s = (states.len() / n_rad.max(1)).max(1);
    indices.extend(states.iter().step_by(stride_s).map(|st| nearest(st.t_cap)));
    let stride_g = (g / n_grid.max(1)).max(1);
    indices.extend((0..g).step_by(stride_g));
    indices.push(g - 1);
    indices.sort_unstable();
    indices.dedup();
    let trace = chordal_trace_at(&driver, LOEWNER_A, &indices)?;
    let a_star = critical_modulus(&trace);
    let pts = trace.points();
    let closed = close_through_infinity(&trace);
    let winding = winding_number(&closed, Complex64::new(0.0, 1.0))?;
    let min_abs = polyline_min_abs(pts);
    Ok(BubbleSample {
        r,
        a_star,
        winding,
        min_abs,
        trace: opts.keep_trace.then_some(trace),
    })
}

/// Samples bubbles on streams `0..n_paths`, in path order (parallel, but
/// bit-identical for a given seed regardless of thread count). Traces are
/// dropped unless `opts.keep_trace` is set.
pub fn sample_bubbles(
    cfg: &SimConfig,
    n_paths: usize,
    opts: &BubbleOptions,
) -> Result<Vec<BubbleSample>> {
    cfg.validate()?;
    (0..n_paths)
        .into_par_iter()
        .map(|p| sample_bubble(cfg, p as u64, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // ------------------------------------------------------------------
    // Domains and the Möbius factor.
    // ------------------------------------------------------------------

    #[test]
    fn unit_radius_domain_closed_form() {
        // coth(1) and 1/sinh(1).
        let d = u_a(1.0).unwrap();
        assert_abs_diff_eq!(d.center.im, 1.313_035_285_499_331_3, epsilon = 1e-15);
        assert_abs_diff_eq!(d.center.re, 0.0);
        assert_abs_diff_eq!(d.radius, 0.850_918_128_239_321_5, epsilon = 1e-15);
        assert!(u_a(0.0).is_err());
        assert!(u_a(-1.0).is_err());
        assert!(u_a(f64::INFINITY).is_err());
    }

    #[test]
    fn mobius_factor_landmarks() {
        assert_abs_diff_eq!(mobius_abs(c(0.0, 2.0)), 3.0, epsilon = 1e-15);
        assert_eq!(mobius_abs(c(0.0, 1.0)), f64::INFINITY);
        for &x in &[-7.5, -1.0, 0.0, 0.3, 42.0] {
            assert_abs_diff_eq!(mobius_abs(c(x, 0.0)), 1.0, epsilon = 1e-15);
        }
    }

    proptest! {
        #[test]
        fn mobius_factor_mirror_symmetry(re in -5.0f64..5.0, im in 0.0f64..5.0) {
            let z = c(re, im);
            let mirrored = c(-re, im);
            prop_assert!((mobius_abs(z) - mobius_abs(mirrored)).abs() <= 1e-12 * mobius_abs(z));
        }

        #[test]
        fn euclidean_and_mobius_membership_agree(
            re in -5.0f64..5.0,
            im in 1e-9f64..5.0,
            a in 0.05f64..3.0,
        ) {
            let z = c(re, im);
            let d = u_a(a).unwrap();
            let m = mobius_abs(z);
            // Skip the measure-zero boundary where rounding could differ.
            prop_assume!((m - d.rho).abs() > 1e-9 * d.rho);
            prop_assert_eq!(d.contains(z), m < d.rho);
        }

        #[test]
        fn domains_are_nested(
            re in -5.0f64..5.0,
            im in 0.0f64..5.0,
            a1 in 0.05f64..3.0,
            extra in 0.01f64..2.0,
        ) {
            let z = c(re, im);
            let small = u_a(a1).unwrap();
            let large = u_a(a1 + extra).unwrap();
            prop_assert!(!small.contains(z) || large.contains(z));
        }
    }

    #[test]
    fn membership_agreement_bulk() {
        // Dense deterministic sweep of the same equivalence.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0usize;
        for _ in 0..10_000 {
            let z = c(rng.random_range(-4.0..4.0), rng.random_range(1e-9..4.0));
            let a = rng.random_range(0.05..2.5);
            let d = u_a(a).unwrap();
            let m = mobius_abs(z);
            if (m - d.rho).abs() <= 1e-9 * d.rho {
                continue;
            }
            assert_eq!(d.contains(z), m < d.rho, "disagree at z = {z}, a = {a}");
            checked += 1;
        }
        assert!(checked > 9_900);
    }

    // ------------------------------------------------------------------
    // Critical modulus.
    // ------------------------------------------------------------------

    #[test]
    fn modulus_of_single_points() {
        let trace = CurveTrace::new(vec![0.0], vec![c(0.0, 2.0)]).unwrap();
        assert_abs_diff_eq!(critical_modulus(&trace), 3.0f64.ln(), epsilon = 1e-15);
        let trace = CurveTrace::new(vec![0.0], vec![c(0.0, 1.0)]).unwrap();
        assert_eq!(critical_modulus(&trace), f64::INFINITY);
    }

    #[test]
    fn modulus_refinement_sees_between_vertices() {
        // The segment from −1/2 + 1.2i to 1/2 + 1.2i passes i at distance
        // 0.2 at its midpoint, where the Möbius factor is 11 — far above
        // its vertex values (≈ 4.19). One refinement pass must find it.
        let trace = CurveTrace::new(vec![0.0, 1.0], vec![c(-0.5, 1.2), c(0.5, 1.2)]).unwrap();
        let vertex_only = mobius_abs(c(0.5, 1.2)).ln();
        let refined = critical_modulus(&trace);
        assert_abs_diff_eq!(refined, 11.0f64.ln(), epsilon = 1e-12);
        assert!(refined > vertex_only + 0.9);
    }

    // ------------------------------------------------------------------
    // Winding numbers and closure through ∞.
    // ------------------------------------------------------------------

    fn circle(center: Complex64, radius: f64, n: usize, turns: f64) -> Vec<Complex64> {
        (0..n)
            .map(|k| center + Complex64::from_polar(radius, turns * 2.0 * PI * k as f64 / n as f64))
            .collect()
    }

    #[test]
    fn winding_of_simple_shapes() {
        let p = c(0.2, 0.1);
        let ccw = circle(p, 1.0, 200, 1.0);
        assert_eq!(winding_number(&ccw, p).unwrap(), 1);
        let cw: Vec<_> = ccw.iter().rev().copied().collect();
        assert_eq!(winding_number(&cw, p).unwrap(), -1);
        let double = circle(p, 1.0, 400, 2.0);
        assert_eq!(winding_number(&double, p).unwrap(), 2);
        // A square far from p.
        let square = vec![c(2.0, 0.0), c(3.0, 0.0), c(3.0, 1.0), c(2.0, 1.0)];
        assert_eq!(winding_number(&square, p).unwrap(), 0);
        // Degenerate inputs.
        assert!(winding_number(&ccw[..2], p).is_err());
        assert!(winding_number(&square, c(2.5, 0.0)).is_err());
        assert!(winding_number(&square, c(2.5, 1e-13)).is_err());
    }

    #[test]
    fn closure_detects_pocketed_point() {
        // A trace that runs out at low height, loops around i, and pinches
        // back onto its outbound piece: i is pocketed, winding ±1.
        let mut pts = vec![c(-6.0, 0.01), c(-2.0, 0.15), c(2.0, 0.3)];
        let (deg0, deg1) = (-80.0f64, 255.0f64);
        let steps = 120usize;
        for k in 0..=steps {
            let th = (deg0 + (deg1 - deg0) * k as f64 / steps as f64).to_radians();
            pts.push(c(0.0, 1.0) + Complex64::from_polar(0.9, th));
        }
        let times: Vec<f64> = (0..pts.len()).map(|k| k as f64).collect();
        let trace = CurveTrace::new(times, pts).unwrap();
        let closed = close_through_infinity(&trace);
        assert_eq!(
            winding_number(&closed, c(0.0, 1.0)).unwrap().abs(),
            1,
            "pocketed point must be enclosed"
        );

        // A dome passing over i with both feet on the axis does not pocket
        // it: the loop through ∞ encloses only the region outside the dome.
        let dome: Vec<Complex64> = (0..=100)
            .map(|k| {
                let th = PI - PI * k as f64 / 100.0;
                c(-1.0, 0.0) + Complex64::from_polar(5.0, th)
            })
            .collect();
        let times: Vec<f64> = (0..dome.len()).map(|k| k as f64).collect();
        let trace = CurveTrace::new(times, dome).unwrap();
        let closed = close_through_infinity(&trace);
        assert_eq!(winding_number(&closed, c(0.0, 1.0)).unwrap(), 0);
    }

    // ------------------------------------------------------------------
    // Sandwich check.
    // ------------------------------------------------------------------

    #[test]
    fn sandwich_boundaries_pass_at_zero_tolerance() {
        let r = 0.37;
        let lower = koebe_sandwich_check(r, (1.0 / r).ln(), 0.0).unwrap();
        assert!(lower.pass && lower.lower_ok && lower.upper_ok);
        assert_abs_diff_eq!(lower.lower_slack, 0.0, epsilon = 1e-15);
        let upper = koebe_sandwich_check(r, (4.0 / r).ln(), 0.0).unwrap();
        assert!(upper.pass);
        assert_abs_diff_eq!(upper.upper_slack, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sandwich_reports_the_failing_side() {
        let r = 0.5;
        let low = koebe_sandwich_check(r, (1.0 / r).ln() - 0.2, 0.1).unwrap();
        assert!(!low.pass && !low.lower_ok && low.upper_ok);
        assert_abs_diff_eq!(low.lower_slack, -0.2, epsilon = 1e-12);
        let high = koebe_sandwich_check(r, (4.0 / r).ln() + 0.2, 0.1).unwrap();
        assert!(!high.pass && high.lower_ok && !high.upper_ok);
        assert_abs_diff_eq!(high.upper_slack, -0.2, epsilon = 1e-12);
        let inside = koebe_sandwich_check(r, (2.0 / r).ln(), 0.0).unwrap();
        assert!(inside.pass);
        assert!(koebe_sandwich_check(0.0, 1.0, 0.1).is_err());
        assert!(koebe_sandwich_check(0.5, f64::NAN, 0.1).is_err());
        assert!(koebe_sandwich_check(0.5, 1.0, -0.1).is_err());
    }

    // ------------------------------------------------------------------
    // Half-disc restriction factors and their slit maps.
    // ------------------------------------------------------------------

    #[test]
    fn halfdisk_factors_closed_forms() {
        assert_abs_diff_eq!(
            halfdisk_restriction_bubble(0.3).unwrap(),
            0.8281,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            halfdisk_restriction_chordal(2.0, 0.3).unwrap(),
            0.985_877_553_727_492_5,
            epsilon = 1e-15
        );
        assert!(halfdisk_restriction_bubble(0.0).is_err());
        assert!(halfdisk_restriction_bubble(1.0).is_err());
        assert!(halfdisk_restriction_chordal(0.2, 0.3).is_err());
        assert!(halfdisk_restriction_chordal(2.0, 0.0).is_err());
    }

    #[test]
    fn bubble_slit_map_fixes_i_and_flattens_the_circle() {
        // Φ(z) = (z + ρ²/z)/(1 − ρ²) maps H∖{|z| ≤ ρ} onto H, fixes i, and
        // sends the circular arc to the real axis; its ∞-derivative (in the
        // chart u = −1/z) is 1 − ρ², so the bubble factor is its square.
        let rho = 0.3;
        let phi = |z: Complex64| (z + rho * rho / z) / (1.0 - rho * rho);
        let fixed = phi(c(0.0, 1.0));
        assert_abs_diff_eq!(fixed.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fixed.im, 1.0, epsilon = 1e-15);
        for k in 1..8 {
            let th = PI * k as f64 / 8.0;
            let on_arc = phi(Complex64::from_polar(rho, th));
            assert_abs_diff_eq!(on_arc.im, 0.0, epsilon = 1e-14);
        }
        let h = 1e-6;
        let at_infinity = |u: Complex64| -Complex64::new(1.0, 0.0) / phi(-Complex64::new(1.0, 0.0) / u);
        let deriv = (at_infinity(c(h, 0.0)) - at_infinity(c(-h, 0.0))) / (2.0 * h);
        assert_abs_diff_eq!(deriv.re, 1.0 - rho * rho, epsilon = 1e-9);
        assert_abs_diff_eq!(deriv.im, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            halfdisk_restriction_bubble(rho).unwrap(),
            (deriv.re * deriv.re),
            epsilon = 1e-8
        );
    }

    #[test]
    fn chordal_derivative_product_is_affine_invariant() {
        // The chordal factor is (Φ′(x)·Φ′(∞))^{5/8} for Φ(z) = z + ρ²/z;
        // the derivative product must not change under z ↦ αΦ(z) + β.
        let (x, rho) = (2.0, 0.3);
        let phi = |z: Complex64| z + rho * rho / z;
        let h = 1e-6;
        let product_for = |f: &dyn Fn(Complex64) -> Complex64| {
            let d_x = (f(c(x + h, 0.0)) - f(c(x - h, 0.0))) / (2.0 * h);
            let at_inf = |u: Complex64| -Complex64::new(1.0, 0.0) / f(-Complex64::new(1.0, 0.0) / u);
            let d_inf = (at_inf(c(h, 0.0)) - at_inf(c(-h, 0.0))) / (2.0 * h);
            (d_x * d_inf).re
        };
        let base = product_for(&phi);
        assert_abs_diff_eq!(base, 1.0 - rho * rho / (x * x), epsilon = 1e-8);
        let rescaled = |z: Complex64| phi(z) * 2.3 + Complex64::new(-1.1, 0.0);
        assert_abs_diff_eq!(product_for(&rescaled), base, epsilon = 1e-8);
        assert_abs_diff_eq!(
            halfdisk_restriction_chordal(x, rho).unwrap(),
            base.powf(0.625),
            epsilon = 1e-8
        );
    }

    // ------------------------------------------------------------------
    // Origin distance.
    // ------------------------------------------------------------------

    #[test]
    fn origin_distance_uses_segment_interiors() {
        let pts = vec![c(-1.0, 0.5), c(1.0, 0.5)];
        assert_abs_diff_eq!(polyline_min_abs(&pts), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(polyline_min_abs(&pts[..1]), 1.25f64.sqrt(), epsilon = 1e-15);
        assert_eq!(polyline_min_abs(&[]), f64::INFINITY);
    }

    // ------------------------------------------------------------------
    // End-to-end bubble sampling.
    // ------------------------------------------------------------------

    #[test]
    fn sampled_bubble_is_coherent_and_reproducible() {
        let cfg = SimConfig {
            dt: 2e-4,
            seed: 55,
            ..SimConfig::default()
        };
        let opts = BubbleOptions {
            keep_trace: true,
            ..BubbleOptions::default()
        };
        let b = sample_bubble(&cfg, 3, &opts).unwrap();
        assert!(b.r > 0.0 && b.r < 1.0);
        assert!(b.a_star.is_finite() && b.a_star > 0.0);
        assert_eq!(b.winding.abs(), 1, "bubble must enclose i once");
        assert!(b.min_abs > 0.0 && b.min_abs.is_finite());
        let trace = b.trace.as_ref().expect("trace was requested");
        assert!(trace.len() >= 250);
        assert!(trace.points().iter().all(|z| z.im >= 0.0));
        // The sandwich holds with room at this resolution.
        let check = koebe_sandwich_check(b.r, b.a_star, 0.2).unwrap();
        assert!(
            check.pass,
            "sandwich failed: slacks {} / {}",
            check.lower_slack, check.upper_slack
        );

        let again = sample_bubble(&cfg, 3, &opts).unwrap();
        assert_eq!(b, again);

        let bulk = sample_bubbles(&cfg, 4, &BubbleOptions::default()).unwrap();
        assert_eq!(bulk.len(), 4);
        assert!(bulk.iter().all(|s| s.trace.is_none()));
        assert_eq!(bulk[3].r, sample_bubble(&cfg, 3, &opts).unwrap().r);
    }
}
