//! Chordal Loewner evolution in the upper half-plane, discretized by
//! vertical-slit elementary maps.
//!
//! A [`DrivingPath`] is a piecewise-constant driver on a strictly increasing
//! capacity-time grid starting at 0. Each step of length `δ` with driver
//! value `c` is resolved exactly: the forward map is
//! `z ↦ c + √((z−c)² + 2aδ)` (the unique conformal map removing a vertical
//! slit, normalized hydrodynamically), and the trace is built from the
//! inverse maps `w ↦ c + √((w−c)² − 2aδ)` composed outward from the tip.
//! Within a step everything — point images, derivatives, half-plane
//! capacity — is exact, so the only approximation is the piecewise-constant
//! driver itself.
//!
//! The capacity normalization is fixed crate-wide at `a = 3/4`
//! ([`crate::LOEWNER_A`]), for which the driving Brownian motion of the
//! curves sampled here has unit variance per unit capacity time.

use crate::error::{Error, Result};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write;

/// A point image is considered swallowed once it comes this close to the
/// current driver value.
pub const SWALLOW_TOL: f64 = 1e-9;

/// Piecewise-constant Loewner driver on a strictly increasing time grid.
///
/// `times[0] == 0` and `values[k]` is the driver value in force on the step
/// ending at `times[k]` (right-endpoint convention); `values[0]` is the seed
/// `U(0)`, which is also the starting point of the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl DrivingPath {
    /// Validates the grid: equal lengths ≥ 2, all finite, times strictly
    /// increasing from exactly 0.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::domain(format!(
                "driving path: {} times vs {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::domain("driving path needs at least 2 samples"));
        }
        if times[0] != 0.0 {
            return Err(Error::domain(format!(
                "driving path must start at time 0, got {}",
                times[0]
            )));
        }
        for pair in times.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::domain(format!(
                    "driving path times must be strictly increasing: {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if times.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::domain("driving path entries must be finite"));
        }
        Ok(DrivingPath { times, values })
    }

    /// Constant driver `U ≡ u` on a uniform grid, producing a straight
    /// vertical slit above `u`.
    pub fn constant(u: f64, total_time: f64, n_steps: usize) -> Result<Self> {
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(Error::domain(format!(
                "constant driver: total_time must be positive, got {total_time}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::domain("constant driver: need at least 1 step"));
        }
        let times = (0..=n_steps)
            .map(|k| total_time * k as f64 / n_steps as f64)
            .collect();
        let values = vec![u; n_steps + 1];
        DrivingPath::new(times, values)
    }

    /// Capacity-time grid.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Driver values, aligned with [`times`](Self::times).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of grid samples (steps + 1).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Never true for a validated path; present for `len` symmetry.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Final capacity time.
    pub fn total_time(&self) -> f64 {
        *self.times.last().expect("validated path is non-empty")
    }

    /// Writes `t_cap,U` rows (with header) to `w`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t_cap,U")?;
        for (t, u) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t},{u}")?;
        }
        Ok(())
    }

    /// Index-uniform thinning to at most `max_samples` samples, always
    /// keeping the first and last. The thinned path drives the same maps at
    /// its retained times up to the step-convention error, at a fraction of
    /// the per-tip cost.
    ///
    /// # Errors
    /// Domain error if `max_samples < 2`.
    pub fn subsample(&self, max_samples: usize) -> Result<DrivingPath> {
        if max_samples < 2 {
            return Err(Error::domain(format!(
                "driving path subsample: need at least 2 samples, got {max_samples}"
            )));
        }
        let n = self.len();
        if n <= max_samples {
            return Ok(self.clone());
        }
        let last = n - 1;
        let kept = (0..max_samples).map(|i| {
            // Round-to-nearest spread of max_samples indices over 0..=last.
            (i * last + (max_samples - 1) / 2) / (max_samples - 1)
        });
        let mut times = Vec::with_capacity(max_samples);
        let mut values = Vec::with_capacity(max_samples);
        let mut prev = usize::MAX;
        for idx in kept {
            if idx == prev {
                continue;
            }
            prev = idx;
            times.push(self.times[idx]);
            values.push(self.values[idx]);
        }
        DrivingPath::new(times, values)
    }

    /// Capacity-uniform thinning to at most `max_samples` samples, always
    /// keeping the first and last. Targets an even spread in time and keeps
    /// the nearest grid sample to each target, so a path whose grid is dense
    /// where the hull grows fast stays dense there after thinning — unlike
    /// [`DrivingPath::subsample`], which counts samples and would starve
    /// exactly those stretches.
    ///
    /// # Errors
    /// Domain error if `max_samples < 2`.
    pub fn subsample_by_time(&self, max_samples: usize) -> Result<DrivingPath> {
        if max_samples < 2 {
            return Err(Error::domain(format!(
                "driving path subsample: need at least 2 samples, got {max_samples}"
            )));
        }
        let n = self.len();
        if n <= max_samples {
            return Ok(self.clone());
        }
        let (t0, t1) = (self.times[0], self.times[n - 1]);
        let mut times = Vec::with_capacity(max_samples);
        let mut values = Vec::with_capacity(max_samples);
        let mut prev = usize::MAX;
        for j in 0..max_samples {
            let target = t0 + (t1 - t0) * j as f64 / (max_samples - 1) as f64;
            let hi = self.times.partition_point(|&t| t < target).min(n - 1);
            let idx = if hi > 0 && target - self.times[hi - 1] < self.times[hi] - target {
                hi - 1
            } else {
                hi
            };
            if idx == prev {
                continue;
            }
            prev = idx;
            times.push(self.times[idx]);
            values.push(self.values[idx]);
        }
        if prev != n - 1 {
            times.push(self.times[n - 1]);
            values.push(self.values[n - 1]);
        }
        DrivingPath::new(times, values)
    }

    /// Thins the path to the samples where either the elapsed time or the
    /// driver movement since the last kept sample reaches its bound, always
    /// keeping the first and last. Unlike the count-based thinnings above,
    /// this bounds both gaps directly: wherever the driver idles, samples
    /// drop out; wherever it sweeps capacity or moves fast, they stay.
    ///
    /// # Errors
    /// Domain error unless both bounds are positive and finite.
    pub fn thin_by_gaps(&self, max_time_gap: f64, max_value_gap: f64) -> Result<DrivingPath> {
        for (name, gap) in [("time", max_time_gap), ("value", max_value_gap)] {
            if !(gap > 0.0) || !gap.is_finite() {
                return Err(Error::domain(format!(
                    "driving path thinning: {name} gap bound must be positive and finite, got {gap}"
                )));
            }
        }
        let n = self.len();
        if n <= 2 {
            return Ok(self.clone());
        }
        let mut times = vec![self.times[0]];
        let mut values = vec![self.values[0]];
        for k in 1..n - 1 {
            if self.times[k] - times.last().expect("non-empty") >= max_time_gap
                || (self.values[k] - values.last().expect("non-empty")).abs() >= max_value_gap
            {
                times.push(self.times[k]);
                values.push(self.values[k]);
            }
        }
        times.push(self.times[n - 1]);
        values.push(self.values[n - 1]);
        DrivingPath::new(times, values)
    }
}

/// A discretized curve in the closed upper half-plane, tagged with the
/// capacity times of its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTrace {
    times: Vec<f64>,
    points: Vec<Complex64>,
}

impl CurveTrace {
    /// Builds a trace, clamping tiny negative imaginary parts (rounding
    /// artifacts of the slit composition) to 0.
    pub fn new(times: Vec<f64>, mut points: Vec<Complex64>) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::domain(format!(
                "curve trace: {} times vs {} points",
                times.len(),
                points.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::domain("curve trace must be non-empty"));
        }
        for p in &mut points {
            if p.im < 0.0 {
                p.im = 0.0;
            }
        }
        Ok(CurveTrace { times, points })
    }

    /// Capacity times of the samples.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Sampled points, `Im ≥ 0`.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True when the trace has no samples (never, once constructed).
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes `t,re,im` rows (with header) to `w`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,re,im")?;
        for (t, p) in self.times.iter().zip(&self.points) {
            writeln!(w, "{t},{},{}", p.re, p.im)?;
        }
        Ok(())
    }
}

/// Square root with image in the closed upper half-plane.
#[inline]
fn sqrt_up(w: Complex64) -> Complex64 {
    let s = w.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

fn check_rate(a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "capacity rate a must be positive and finite, got {a}"
        )));
    }
    Ok(())
}

/// Trace points at a chosen subset of grid indices.
///
/// For each requested index `k` the tip is the composition
/// `φ_1 ∘ … ∘ φ_k` of inverse slit maps evaluated at the driver value
/// `U(t_k)`, costing `O(k)`; requesting a sparse set of indices is how
/// bulk simulations keep tracing affordable. Indices are deduplicated and
/// sorted; each must be a valid grid index.
pub fn chordal_trace_at(driver: &DrivingPath, a: f64, indices: &[usize]) -> Result<CurveTrace> {
    check_rate(a)?;
    let mut idx: Vec<usize> = indices.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if let Some(&last) = idx.last() {
        if last >= driver.len() {
            return Err(Error::domain(format!(
                "trace index {last} out of range for driver with {} samples",
                driver.len()
            )));
        }
    } else {
        return Err(Error::domain("no trace indices requested"));
    }
    let times = driver.times();
    let values = driver.values();
    let mut out_times = Vec::with_capacity(idx.len());
    let mut out_points = Vec::with_capacity(idx.len());
    for &k in &idx {
        let mut w = Complex64::new(values[k], 0.0);
        for j in (1..=k).rev() {
            let c = values[j];
            let delta = times[j] - times[j - 1];
            let d = w - c;
            w = c + sqrt_up(d * d - 2.0 * a * delta);
        }
        out_times.push(times[k]);
        out_points.push(w);
    }
    CurveTrace::new(out_times, out_points)
}

/// Full-resolution trace: one point per grid sample.
pub fn chordal_trace(driver: &DrivingPath, a: f64) -> Result<CurveTrace> {
    let all: Vec<usize> = (0..driver.len()).collect();
    chordal_trace_at(driver, a, &all)
}

/// Trajectory of one interior point under the forward Loewner flow.
#[derive(Debug, Clone)]
pub struct TrackedPoint {
    /// Grid times, truncated at the swallowing step if any.
    pub times: Vec<f64>,
    /// Images `g_t(z₀)`, aligned with `times`.
    pub positions: Vec<Complex64>,
    /// `|g_t′(z₀)|`, aligned with `times`; exact per-step products of the
    /// slit-map derivatives.
    pub abs_deriv: Vec<f64>,
    /// False once the point was swallowed by the hull.
    pub alive: bool,
    /// Time of the step during which the point was swallowed.
    pub swallow_time: Option<f64>,
}

/// Evolves one interior point `z₀` under the forward flow of `driver`.
///
/// Swallowing (the image approaching the driver within [`SWALLOW_TOL`]) is
/// reported in the result, not as an error: the trajectory simply stops
/// there with `alive = false`.
///
/// # Errors
/// Domain error if `z₀` is not strictly inside the upper half-plane.
pub fn evolve_point(driver: &DrivingPath, z: Complex64, a: f64) -> Result<TrackedPoint> {
    check_rate(a)?;
    if !(z.im > 0.0) || !z.is_finite() {
        return Err(Error::domain(format!(
            "evolve_point: start must lie in the open upper half-plane, got {z}"
        )));
    }
    let times = driver.times();
    let values = driver.values();
    let n = driver.len();
    let mut out_times = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    let mut abs_deriv = Vec::with_capacity(n);
    out_times.push(0.0);
    positions.push(z);
    abs_deriv.push(1.0);
    let mut g = z;
    let mut deriv = 1.0f64;
    let mut alive = true;
    let mut swallow_time = None;
    for j in 1..n {
        let c = values[j];
        let delta = times[j] - times[j - 1];
        let d = g - c;
        if d.norm() < SWALLOW_TOL {
            alive = false;
            swallow_time = Some(times[j]);
            break;
        }
        let next = c + sqrt_up(d * d + Complex64::new(2.0 * a * delta, 0.0));
        let denom = next - c;
        // im ≤ tol (not only ≤ 0) also catches points that pass the
        // singularity within one step and would otherwise resurface with a
        // spuriously tiny positive imaginary part.
        if denom.norm() < SWALLOW_TOL || next.im <= SWALLOW_TOL {
            alive = false;
            swallow_time = Some(times[j]);
            break;
        }
        deriv *= d.norm() / denom.norm();
        g = next;
        out_times.push(times[j]);
        positions.push(g);
        abs_deriv.push(deriv);
    }
    Ok(TrackedPoint {
        times: out_times,
        positions,
        abs_deriv,
        alive,
        swallow_time,
    })
}

/// Conformal radius of the point `i` in the complement of the growing hull,
/// normalized to 1 at time 0: `Υ(t) = Im g_t(i) / |g_t′(i)|`.
///
/// # Errors
/// [`Error::PointSwallowed`] if the hull swallows `i` before the driver ends.
pub fn conformal_radius_at_i(driver: &DrivingPath, a: f64) -> Result<Vec<(f64, f64)>> {
    let tracked = evolve_point(driver, Complex64::new(0.0, 1.0), a)?;
    if !tracked.alive {
        return Err(Error::PointSwallowed {
            t: tracked.swallow_time.unwrap_or(f64::NAN),
        });
    }
    Ok(tracked
        .times
        .iter()
        .zip(tracked.positions.iter().zip(&tracked.abs_deriv))
        .map(|(&t, (p, &d))| (t, p.im / d))
        .collect())
}

/// Brownian driver started at `x` on an arbitrary validated grid, with
/// increments of variance `t_{k+1} − t_k` (unit variance per unit capacity
/// time). The RNG is a deterministic counter-mode stream: one `(seed,
/// stream)` pair gives one path, independent of threading.
pub fn brownian_driver_on_grid(
    x: f64,
    times: Vec<f64>,
    seed: u64,
    stream: u64,
) -> Result<DrivingPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut values = Vec::with_capacity(times.len());
    values.push(x);
    let mut u = x;
    for pair in times.windows(2) {
        let dt = pair[1] - pair[0];
        if !(dt > 0.0) {
            return Err(Error::domain(
                "brownian driver: times must be strictly increasing",
            ));
        }
        let noise: f64 = StandardNormal.sample(&mut rng);
        u += dt.sqrt() * noise;
        values.push(u);
    }
    DrivingPath::new(times, values)
}

/// Samples one chordal curve started at `x ∈ ℝ` up to capacity time
/// `t_total` on a uniform grid, with an explicit RNG stream for
/// reproducible bulk runs.
pub fn sample_chordal_sle_stream(
    x: f64,
    t_total: f64,
    n_steps: usize,
    seed: u64,
    stream: u64,
    a: f64,
) -> Result<(DrivingPath, CurveTrace)> {
    check_rate(a)?;
    if !(t_total > 0.0) || !t_total.is_finite() {
        return Err(Error::domain(format!(
            "sample_chordal_sle: horizon must be positive, got {t_total}"
        )));
    }
    if n_steps == 0 {
        return Err(Error::domain("sample_chordal_sle: need at least 1 step"));
    }
    if !x.is_finite() {
        return Err(Error::domain("sample_chordal_sle: start must be finite"));
    }
    let times: Vec<f64> = (0..=n_steps)
        .map(|k| t_total * k as f64 / n_steps as f64)
        .collect();
    let driver = brownian_driver_on_grid(x, times, seed, stream)?;
    let trace = chordal_trace(&driver, a)?;
    Ok((driver, trace))
}

/// Samples one chordal curve started at `x ∈ ℝ` up to capacity time
/// `t_total` on a uniform grid of `n_steps` steps.
pub fn sample_chordal_sle(
    x: f64,
    t_total: f64,
    n_steps: usize,
    seed: u64,
    a: f64,
) -> Result<(DrivingPath, CurveTrace)> {
    sample_chordal_sle_stream(x, t_total, n_steps, seed, 0, a)
}
