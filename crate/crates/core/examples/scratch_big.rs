//! Temporary probe: full-scale batch statistics at acceptance parameters.

use std::time::Instant;

use sle_bubbles::diffusion::SimConfig;
use sle_bubbles::geometry::{halfdisk_restriction_bubble, sample_bubble, BubbleOptions};
use sle_bubbles::measures::{werner_mass, McEstimate, MeasureConfig};

fn main() {
    let cfg = SimConfig {
        dt: 1e-4,
        seed: 1105,
        ..SimConfig::default()
    };
    let opts = BubbleOptions::default();
    let n = 10_000u64;
    let t0 = Instant::now();
    let mut samples = Vec::with_capacity(n as usize);
    let mut w1 = 0usize;
    let mut sw = 0usize;
    for p in 0..n {
        let s = sample_bubble(&cfg, p, &opts).unwrap();
        let lo = (1.0 / s.r).ln();
        let hi = lo + 4f64.ln();
        let sandwich = s.a_star >= lo - 0.05 && s.a_star <= hi + 0.05;
        if s.winding.abs() == 1 {
            w1 += 1;
        }
        if sandwich {
            sw += 1;
        }
        if s.winding.abs() != 1 || !sandwich {
            println!(
                "FAIL p={p} w={} a*={:.4} lo={lo:.4} hi={hi:.4} r={:.6} min_abs={:.4}",
                s.winding, s.a_star, s.r, s.min_abs
            );
        }
        if (p + 1) % 500 == 0 {
            println!(
                "... {} done in {:.0}s  |w|=1 {w1}  sandwich {sw}",
                p + 1,
                t0.elapsed().as_secs_f64()
            );
        }
        samples.push(s);
    }
    let nf = n as f64;
    println!(
        "C6: |w|=1 rate {:.4}  sandwich rate {:.4}  (need both >= 0.99)",
        w1 as f64 / nf,
        sw as f64 / nf
    );
    let rho = 0.3;
    let avoid = samples.iter().filter(|s| s.min_abs > rho).count();
    let est = McEstimate::from_bernoulli(avoid, samples.len()).unwrap();
    let exact = halfdisk_restriction_bubble(rho).unwrap();
    println!(
        "C5 bubble: avoid({rho}) = {:.4} [{:.4}, {:.4}]  exact {:.4}  diff {:+.4}",
        est.value,
        est.ci_low,
        est.ci_high,
        exact,
        est.value - exact
    );
    let mcfg = MeasureConfig::default();
    for b in [1.0f64, 2.0, 4.0] {
        let (est, lo, hi) = werner_mass(b, &samples, &mcfg).unwrap();
        let pass = est.value >= lo - 0.03 && est.value <= hi + 0.03;
        println!(
            "C7 b={b}: est {:.4} [{:.4}, {:.4}]  envelope [{lo:.4}, {hi:.4}]  pass(±0.03): {pass}",
            est.value, est.ci_low, est.ci_high
        );
    }
    let mean_ln_inv_r = samples.iter().map(|s| (1.0 / s.r).ln()).sum::<f64>() / nf;
    println!(
        "sanity: E[ln 1/r] = {:.4} (expect 3)  mean a* = {:.4}  total {:.0}s",
        mean_ln_inv_r,
        samples.iter().map(|s| s.a_star).sum::<f64>() / nf,
        t0.elapsed().as_secs_f64()
    );
}
