//! The driving angle process of a boundary bubble seen from the marked
//! interior point `i`, in radius time, plus reconstruction of the
//! half-plane capacity-time driving function.
//!
//! The state is `v = cos θ ∈ [−1, 1]`, where `cot θ = (x − U)/y` for the
//! tracked image `x + iy` of `i` and driver `U`. In radius time `s` (chosen
//! so the conformal radius seen from `i` decays exactly as `e^{−3s/2}`):
//!
//! - unconditioned: `dv = √(1−v²) dB` — a driftless bounded martingale,
//! - conditioned (to close around `i`): `dv = −(1+v) dt + √(1−v²) dB`,
//!
//! both obtained from the θ-equations by Itô's formula (re-derived in the
//! tests by quadrature against the exact transition density and against the
//! closed-form θ-drifts). The conditioned process enters at `v = 1` (θ = 0,
//! a deterministic first step) and is absorbed at `v = −1` (θ = π, the loop
//! closing); its lifetime `τ_π` gives the conformal radius `r = e^{−3τ_π/2}`.
//!
//! Discretization is Euler–Maruyama with clamping to `[−1, 1]` (clamping is
//! the contract: the clamp makes the absorption boundary reachable), and
//! the absorption time is refined by linear interpolation of the crossing
//! increment, which removes the first-order stepping bias.
//!
//! [`recover_capacity_driver`] converts an angle path back to half-plane
//! data by co-integrating, in radius time,
//! `dy/ds = −(3/4)·y/sin²θ`, `dx/ds = (3/4)·y·cotθ/sin²θ`, and
//! `t_cap(s) = ∫ y²/sin⁴θ ds`, emitting `U = x − y·cot θ` on the
//! accumulated capacity-time grid. The entrance segment θ < theta_cut is
//! not representable (`U → −∞` as θ ↓ 0: the bubble is attached at ∞) and
//! is trimmed; integration starts from `x = 0, y = 1, t_cap = 0` at the
//! first retained sample.
//!
//! Randomness: one 64-bit master seed; path `k` draws from the
//! counter-based stream `k` of a ChaCha generator, so a sample set is
//! bit-identical for a given seed regardless of how many worker threads
//! rayon uses.

use crate::error::{Error, Result};
use crate::loewner::DrivingPath;
use crate::measures::McEstimate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

/// Below this imaginary part the tracked image of `i` counts as collapsed
/// and driver recovery stops (the loop has closed to working precision).
const Y_FLOOR: f64 = 1e-12;

/// Largest capacity-time gap between emitted driver samples. Near the trim
/// start a single radius-time step can carry O(1) capacity (the hull grows
/// violently while the tip is still far from the tracked point), and a
/// slit-map composition renders one wide gap as one macroscopic vertical
/// slit that displaces every later tip; splitting such steps into interior
/// emissions keeps the rendered hull faithful.
///
/// The bound is deliberately absolute, not scaled to the shrinking image
/// height of `i`. A sampled driver is a jump path at the radius-step scale,
/// and rendering it frozen-then-jump preserves the step-scale roughness
/// that the tightest windings of the loop are made of; refining the grid
/// further with interpolated interior values replaces that roughness by an
/// invented smooth glide, and the rendered loop measurably loses its
/// deepest approach (the recovered critical modulus falls below the window
/// that the independently known conformal radius pins).
const CAP_EMIT_MAX: f64 = 0.02;

/// Largest driver increment between emitted driver samples, for the same
/// reason in the horizontal direction: a slit composition treats the driver
/// as constant on each emitted interval and renders an increment as a
/// sideways tip jump, so violent steps are split rather than rendered as
/// one spurious macroscopic kick.
const U_EMIT_MAX: f64 = 2e-3;

/// Ceiling on integration substeps (and hence interior driver emissions)
/// per radius-time step: the emission thresholds above also size the
/// substep counts, which stiffen without bound as the angle grazes π.
const SUBSTEP_CEILING: usize = 16_384;

/// Simulation parameters shared by all path-sampling operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Radius-time step of the Euler scheme.
    pub dt: f64,
    /// Master seed; per-path streams are derived from it.
    pub seed: u64,
    /// Angle below which capacity-time reconstruction is suppressed.
    pub theta_cut: f64,
    /// Radius-time cutoff: paths still alive at this time are an error.
    pub max_time: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-4,
            seed: 7,
            theta_cut: 0.1,
            max_time: 50.0,
        }
    }
}

impl SimConfig {
    /// Validates `dt > 0`, `0 < theta_cut < π`, `max_time > 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::domain(format!(
                "sim config: dt must be positive and finite, got {}",
                self.dt
            )));
        }
        if !(self.theta_cut > 0.0 && self.theta_cut < PI) {
            return Err(Error::domain(format!(
                "sim config: theta_cut must lie in (0, pi), got {}",
                self.theta_cut
            )));
        }
        if !(self.max_time > self.dt) {
            return Err(Error::domain(format!(
                "sim config: max_time must exceed dt, got {}",
                self.max_time
            )));
        }
        Ok(())
    }
}

/// One sampled angle path on the uniform radius-time grid `s_k = k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPath {
    /// Base radius-time step: the sample spacing away from absorption.
    pub dt: f64,
    /// Sample times, starting at 0 and strictly increasing. Steps equal
    /// `dt` until the walk comes within [`REFINE_DELTA`] of absorption,
    /// then shrink in proportion to the remaining distance (floored at
    /// `dt`/[`REFINE_MAX`]) — see [`refined_step`].
    pub times: Vec<f64>,
    /// Samples `v_k = cos θ_k` at `times[k]`; for an absorbed path these
    /// are the values strictly before the crossing step (the last one is
    /// still > −1).
    pub values: Vec<f64>,
    /// Interpolated absorption time at `v = −1`, absent if the path was
    /// stopped early. When present, `tau_pi ∈ [(len−1)·dt, len·dt]`.
    pub tau_pi: Option<f64>,
    /// Whether the path was generated by the conditioned dynamics.
    pub conditioned: bool,
}

impl ThetaPath {
    /// Number of samples.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the path has no samples.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Conformal radius `e^{−3τ_π/2}` of the closed loop, when absorbed.
    pub fn radius(&self) -> Option<f64> {
        self.tau_pi.map(|tau| (-1.5 * tau).exp())
    }

    /// Writes `s,v,theta` rows (with header) to `w`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "s,v,theta")?;
        for (s, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{s},{v},{}", v.clamp(-1.0, 1.0).acos())?;
        }
        Ok(())
    }
}

/// Deterministic per-path RNG: master seed plus counter-based stream index.
pub fn stream_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

#[inline]
fn conditioned_increment(v: f64, dt: f64, noise: f64) -> f64 {
    v - (1.0 + v) * dt + (1.0 - v * v).max(0.0).sqrt() * dt.sqrt() * noise
}

#[inline]
fn unconditioned_increment(v: f64, dt: f64, noise: f64) -> f64 {
    v + (1.0 - v * v).max(0.0).sqrt() * dt.sqrt() * noise
}

/// One Euler–Maruyama step of `dv = −(1+v)dt + √(1−v²)dB`, clamped to
/// `[−1, 1]` (clamping is the contract: it makes `−1` reachable).
#[inline]
pub fn step_conditioned(v: f64, dt: f64, noise: f64) -> f64 {
    conditioned_increment(v, dt, noise).clamp(-1.0, 1.0)
}

/// One Euler–Maruyama step of the driftless `dv = √(1−v²)dB`, clamped to
/// `[−1, 1]`; `v` is a bounded martingale with absorbing endpoints.
#[inline]
pub fn step_unconditioned(v: f64, dt: f64, noise: f64) -> f64 {
    unconditioned_increment(v, dt, noise).clamp(-1.0, 1.0)
}

/// Drift of the unconditioned angle θ itself in radius time: `−½·cot θ`
/// (the Itô image of the driftless `v`-equation under `θ = arccos v`).
pub fn drift_unconditioned_theta(theta: f64) -> f64 {
    -0.5 / theta.tan()
}

/// Drift of the conditioned angle θ in radius time:
/// `cot(θ/2) − ½·cot θ`. The difference from the unconditioned drift is
/// exactly `cot(θ/2) = (d/dθ) ln sin²(θ/2)`, the h-transform term of
/// conditioning on absorption.
pub fn drift_conditioned_theta(theta: f64) -> f64 {
    1.0 / (theta / 2.0).tan() - 0.5 / theta.tan()
}

fn max_steps(cfg: &SimConfig) -> usize {
    (cfg.max_time / cfg.dt).ceil() as usize
}

/// Depth in `1 + v` below which the radius step of the conditioned walk is
/// refined. Near absorption the driving function moves by the order of the
/// tip's distance to `i` per radius step, so a fixed step starves the
/// driver reconstruction of information exactly where the loop closes; the
/// rendered tail then wanders at a scale far above the true remaining
/// growth, flipping windings and blurring the depth of closest approach.
const REFINE_DELTA: f64 = 0.1;

/// Largest refinement factor applied to the base radius step. Refinement
/// proportional to the remaining depth keeps the per-step driver increment
/// a bounded fraction of the local scale; the occupation time of the walk
/// below depth `ε` is O(ε), so the total extra cost is only logarithmic in
/// this factor.
const REFINE_MAX: f64 = 64.0;

/// Radius step at depth `1 + v`: the base step `dt`, shrunk in proportion
/// to the remaining distance to absorption once inside [`REFINE_DELTA`],
/// floored at `dt`/[`REFINE_MAX`].
#[inline]
fn refined_step(dt: f64, v: f64) -> f64 {
    let depth = (1.0 + v).max(0.0);
    dt * (depth / REFINE_DELTA).clamp(1.0 / REFINE_MAX, 1.0)
}

/// Samples one conditioned lifetime on an explicit RNG stream, returning
/// the angle path and the loop's conformal radius `e^{−3τ_π/2}`.
///
/// The path starts at the entrance boundary `v = 1` (θ = 0); the first step
/// is deterministic. The step size is `dt` until the walk comes within
/// [`REFINE_DELTA`] of absorption and proportionally finer below (see
/// [`refined_step`]), so the stored path carries genuine small-scale noise
/// through the end game. Absorption at `v = −1` is detected on the
/// unclamped increment and `τ_π` is linearly interpolated inside the
/// crossing step.
///
/// # Errors
/// [`Error::CutoffExceeded`] if the path is still alive at `max_time`.
pub fn simulate_lifetime_stream(cfg: &SimConfig, path_index: u64) -> Result<(ThetaPath, f64)> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, path_index);
    let hint = 4096.min(max_steps(cfg) + 1);
    let mut times = Vec::with_capacity(hint);
    let mut values = Vec::with_capacity(hint);
    times.push(0.0);
    values.push(1.0);
    let mut v = 1.0f64;
    let mut s = 0.0f64;
    while s < cfg.max_time {
        let ds = refined_step(cfg.dt, v);
        let noise: f64 = StandardNormal.sample(&mut rng);
        let raw = conditioned_increment(v, ds, noise);
        if raw <= -1.0 {
            let tau = s + ds * (v + 1.0) / (v - raw);
            let path = ThetaPath {
                dt: cfg.dt,
                times,
                values,
                tau_pi: Some(tau),
                conditioned: true,
            };
            return Ok((path, (-1.5 * tau).exp()));
        }
        v = raw.min(1.0);
        s += ds;
        times.push(s);
        values.push(v);
    }
    Err(Error::CutoffExceeded {
        max_time: cfg.max_time,
    })
}

/// Samples one conditioned lifetime (stream 0 of the configured seed).
pub fn simulate_lifetime(cfg: &SimConfig) -> Result<(ThetaPath, f64)> {
    simulate_lifetime_stream(cfg, 0)
}

/// Absorption time of one conditioned path, without storing the path.
/// Uses the same refined stepping as [`simulate_lifetime_stream`], so the
/// two agree draw for draw on a given stream.
pub fn sample_tau(cfg: &SimConfig, path_index: u64) -> Result<f64> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, path_index);
    let mut v = 1.0f64;
    let mut s = 0.0f64;
    while s < cfg.max_time {
        let ds = refined_step(cfg.dt, v);
        let noise: f64 = StandardNormal.sample(&mut rng);
        let raw = conditioned_increment(v, ds, noise);
        if raw <= -1.0 {
            return Ok(s + ds * (v + 1.0) / (v - raw));
        }
        v = raw.min(1.0);
        s += ds;
    }
    Err(Error::CutoffExceeded {
        max_time: cfg.max_time,
    })
}

/// Absorption times of paths `0..n_paths`, in path order (parallel, but
/// bit-identical for a given seed regardless of thread count).
pub fn sample_taus(cfg: &SimConfig, n_paths: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    (0..n_paths)
        .into_par_iter()
        .map(|p| sample_tau(cfg, p as u64))
        .collect()
}

/// Conformal radii `e^{−3τ/2}` of paths `0..n_paths`, in path order.
pub fn sample_radii(cfg: &SimConfig, n_paths: usize) -> Result<Vec<f64>> {
    Ok(sample_taus(cfg, n_paths)?
        .into_iter()
        .map(|tau| (-1.5 * tau).exp())
        .collect())
}

/// Monte-Carlo probability that the unconditioned process started at `v0`
/// is absorbed at `v = −1` (θ = π: the curve passes right of `i`).
///
/// Optional stopping on the bounded martingale gives the exact value
/// `(1 − v0)/2`; the estimate comes with a Wilson 95% interval.
///
/// # Errors
/// Domain error unless `v0 ∈ [−1, 1]` and `n_paths ≥ 1`;
/// [`Error::CutoffExceeded`] if any path is still alive at `max_time`.
pub fn absorption_probability(v0: f64, n_paths: usize, cfg: &SimConfig) -> Result<McEstimate> {
    cfg.validate()?;
    if !(-1.0..=1.0).contains(&v0) {
        return Err(Error::domain(format!(
            "absorption_probability: v0 must lie in [-1,1], got {v0}"
        )));
    }
    if n_paths == 0 {
        return Err(Error::EmptySamples);
    }
    if v0 == -1.0 {
        return McEstimate::from_bernoulli(n_paths, n_paths);
    }
    if v0 == 1.0 {
        return McEstimate::from_bernoulli(0, n_paths);
    }
    let hits: Vec<bool> = (0..n_paths)
        .into_par_iter()
        .map(|p| -> Result<bool> {
            let mut rng = stream_rng(cfg.seed, p as u64);
            let mut v = v0;
            for _ in 0..max_steps(cfg) {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let raw = unconditioned_increment(v, cfg.dt, noise);
                if raw <= -1.0 {
                    return Ok(true);
                }
                if raw >= 1.0 {
                    return Ok(false);
                }
                v = raw;
            }
            Err(Error::CutoffExceeded {
                max_time: cfg.max_time,
            })
        })
        .collect::<Result<Vec<bool>>>()?;
    McEstimate::from_bernoulli(hits.iter().filter(|&&h| h).count(), n_paths)
}

/// Half-plane state of the tracked image of `i` along a recovered driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityState {
    /// Radius time elapsed since the first retained sample.
    pub s: f64,
    /// Real part of the image of `i`.
    pub x: f64,
    /// Imaginary part of the image of `i` (positive, nonincreasing).
    pub y: f64,
    /// Accumulated half-plane capacity time (nondecreasing, 0 at the first
    /// retained sample).
    pub t_cap: f64,
}

/// Index of the first sample with `θ ≥ theta_cut` (`v ≤ cos theta_cut`)
/// after the last sample with `θ = 0` exactly.
///
/// The clamped Euler scheme can put a sample back at `v = 1` even after the
/// path has crossed the cut (the continuum process, a Bessel-type repulsion
/// from `θ = 0`, never returns); everything up to the last such touch is
/// still entrance and carries no representable driver, so the retained
/// window starts at the first cut crossing after it.
///
/// # Errors
/// Degenerate error if the path never leaves the entrance cone after its
/// last touch of `θ = 0`.
pub fn retained_start_index(path: &ThetaPath, cfg: &SimConfig) -> Result<usize> {
    let cut = cfg.theta_cut.cos();
    let entrance_end = path
        .values
        .iter()
        .rposition(|&v| v >= 1.0)
        .map_or(0, |j| j + 1);
    path.values[entrance_end..]
        .iter()
        .position(|&v| v <= cut)
        .map(|p| entrance_end + p)
        .ok_or_else(|| Error::Degenerate("angle path never reaches theta_cut".to_string()))
}

/// Right-hand sides of the capacity recovery system at one angle value;
/// state is `(ln y, x, t_cap)`.
#[inline]
fn recovery_rhs(ln_y: f64, v: f64) -> (f64, f64, f64) {
    let sin2 = (1.0 - v * v).max(f64::MIN_POSITIVE);
    let y = ln_y.exp();
    let d_ln_y = -0.75 / sin2;
    let d_x = 0.75 * y * v / (sin2 * sin2.sqrt());
    let d_t = y * y / (sin2 * sin2);
    (d_ln_y, d_x, d_t)
}

/// Reconstructs the half-plane driving function of an angle path.
///
/// The path is trimmed to start at the first sample with `θ ≥ theta_cut`
/// (the entrance segment has `U → −∞` and is not representable) and runs to
/// the end of the path: the last retained radius step carries both the
/// loop's closest approach to `i` and the descent of the tip back toward
/// the axis, so no fixed end trim is applied. A dip below `theta_cut`
/// strictly inside the retained window is integrated normally (the rates
/// stay finite for θ > 0); a return to θ = 0 exactly (`v = 1`, where the
/// driver diverges) restarts the trim after it — see
/// [`retained_start_index`] — so every retained sample has `v < 1`.
///
/// From `x = 0, y = 1, t_cap = 0` at the trimmed start, the system
/// `dy/ds = −(3/4)y/sin²θ`, `dx/ds = (3/4)y·cotθ/sin²θ`,
/// `dt_cap/ds = y²/sin⁴θ` is integrated with Heun's method and adaptive
/// substeps (the rates stiffen near both angle boundaries), and the driver
/// `U = x − y·cot θ` is emitted on the accumulated capacity-time grid.
/// Integration stops early only if the closing loop falls below working
/// precision: the tracked image of `i` collapses (`y < 10⁻¹²`) or the
/// capacity clock stalls at the resolution of `f64`
/// (`dt_cap/ds = (16/9)(dy/ds)²`, so a stalled clock means `y` itself no
/// longer moves).
///
/// The driver grid holds one genuine sample per retained radius-time step,
/// plus interior samples only inside violent steps — those sweeping more
/// than [`CAP_EMIT_MAX`] capacity or [`U_EMIT_MAX`] driver distance — so a
/// slit-map composition never renders one radius step as a single
/// macroscopic slit or kick. Quiet steps are never subdivided: the sampled
/// driver is a jump path at the radius-step scale, and that roughness is
/// what the loop's tightest windings are made of (see [`CAP_EMIT_MAX`]).
/// The state trajectory stays on the radius-time grid of the path (base
/// step plus refined end game): entry `k` of `states` records its radius
/// time since the trimmed start in `s` and matches the driver sample with
/// the same `t_cap`.
///
/// # Errors
/// Degenerate error if the path never reaches `theta_cut` after its last
/// touch of θ = 0, or if the retained window is shorter than two samples.
pub fn recover_capacity_driver(
    path: &ThetaPath,
    cfg: &SimConfig,
) -> Result<(DrivingPath, Vec<CapacityState>)> {
    cfg.validate()?;
    if !(path.dt > 0.0) || !path.dt.is_finite() {
        return Err(Error::domain(format!(
            "angle path: dt must be positive and finite, got {}",
            path.dt
        )));
    }
    if path.times.len() != path.values.len() {
        return Err(Error::domain(format!(
            "angle path: {} times for {} values",
            path.times.len(),
            path.values.len()
        )));
    }
    if path.times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain(
            "angle path: times must be strictly increasing".to_string(),
        ));
    }
    let k0 = retained_start_index(path, cfg)?;
    let vs = &path.values;
    let mut k1 = k0;
    while k1 + 1 < vs.len() && vs[k1 + 1] > -1.0 {
        k1 += 1;
    }
    if k1 == k0 {
        return Err(Error::Degenerate(
            "retained angle window is shorter than two samples".to_string(),
        ));
    }

    let driver_value = |x: f64, y: f64, v: f64| {
        let sin = (1.0 - v * v).max(0.0).sqrt();
        x - y * v / sin
    };

    let mut ln_y = 0.0f64;
    let mut x = 0.0f64;
    let mut t_cap = 0.0f64;
    let mut times = Vec::with_capacity(k1 - k0 + 1);
    let mut drivers = Vec::with_capacity(k1 - k0 + 1);
    let mut states = Vec::with_capacity(k1 - k0 + 1);
    times.push(0.0);
    drivers.push(driver_value(0.0, 1.0, vs[k0]));
    states.push(CapacityState {
        s: 0.0,
        x: 0.0,
        y: 1.0,
        t_cap: 0.0,
    });

    for k in k0..k1 {
        let (va, vb) = (vs[k], vs[k + 1]);
        let ds = path.times[k + 1] - path.times[k];
        // Substeps: bound the stiffest rate (∝ (1−v²)^{−3/2}), the relative
        // change of 1−v² across the step, the capacity swept per substep
        // (the capacity rate y²/(1−v²)² reaches ~1/θ⁴ near the entrance cut,
        // so a single radius step can sweep O(1) capacity there), and the
        // driver increment per substep (∂U/∂v = y(1−v²)^{−3/2}).
        let stiff = |v: f64| {
            let sin2 = (1.0 - v * v).max(f64::MIN_POSITIVE);
            0.75 / (sin2 * sin2.sqrt())
        };
        let rate = stiff(va).max(stiff(vb));
        let sin2_min = (1.0 - va * va).min(1.0 - vb * vb).max(f64::MIN_POSITIVE);
        let y_start = ln_y.exp();
        let rate_t = y_start * y_start / (sin2_min * sin2_min);
        let du_est = y_start * (vb - va).abs() / (sin2_min * sin2_min.sqrt());
        let m_rate = (rate * ds / 0.05).ceil();
        let m_dv = ((vb - va).abs() / (0.02 * sin2_min)).ceil();
        let m_t = (rate_t * ds / (0.5 * CAP_EMIT_MAX)).ceil();
        let m_u = (du_est / U_EMIT_MAX).ceil();
        let m = (m_rate.max(m_dv).max(m_t).max(m_u) as usize).clamp(1, SUBSTEP_CEILING);
        let h = ds / m as f64;
        for i in 0..m {
            let v_i = va + (vb - va) * i as f64 / m as f64;
            let v_j = va + (vb - va) * (i + 1) as f64 / m as f64;
            let (d1_ln_y, d1_x, d1_t) = recovery_rhs(ln_y, v_i);
            let (d2_ln_y, d2_x, d2_t) = recovery_rhs(ln_y + h * d1_ln_y, v_j);
            ln_y += 0.5 * h * (d1_ln_y + d2_ln_y);
            x += 0.5 * h * (d1_x + d2_x);
            t_cap += 0.5 * h * (d1_t + d2_t);
            // Split only violent steps: emit an interior sample when the
            // capacity or driver budget since the last emission is spent.
            // Quiet steps emit nothing here, so the grid keeps one genuine
            // sample per radius step (frozen-then-jump), not a smoothed
            // interpolant. The step boundary itself is always emitted below,
            // together with the state, keeping `states` aligned with the
            // radius grid.
            if i + 1 < m && t_cap > times.last().copied().unwrap_or(0.0) {
                let y_here = ln_y.exp();
                let u_here = driver_value(x, y_here, v_j);
                let cap_due =
                    t_cap - times.last().copied().unwrap_or(0.0) >= 0.5 * CAP_EMIT_MAX;
                let u_due =
                    (u_here - drivers.last().copied().unwrap_or(0.0)).abs() >= U_EMIT_MAX;
                if cap_due || u_due {
                    times.push(t_cap);
                    drivers.push(u_here);
                }
            }
        }
        let y = ln_y.exp();
        if y < Y_FLOOR || !(t_cap > times.last().copied().unwrap_or(0.0)) {
            break;
        }
        times.push(t_cap);
        drivers.push(driver_value(x, y, vb));
        states.push(CapacityState {
            s: path.times[k + 1] - path.times[k0],
            x,
            y,
            t_cap,
        });
    }

    let driver = DrivingPath::new(times, drivers)?;
    Ok((driver, states))
}
