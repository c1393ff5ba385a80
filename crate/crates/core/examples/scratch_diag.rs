//! Temporary timing/accuracy probe for bubble batches.

use std::time::Instant;

use sle_bubbles::diffusion::SimConfig;
use sle_bubbles::geometry::{sample_bubble, BubbleOptions};

fn main() {
    let cfg = SimConfig {
        dt: 1e-4,
        seed: 1105,
        ..SimConfig::default()
    };
    let opts = BubbleOptions {
        keep_trace: true,
        ..BubbleOptions::default()
    };
    let t0 = Instant::now();
    let n = 128u64;
    let mut w1 = 0;
    let mut sw = 0;
    let mut sum_a = 0.0;
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
        sum_a += s.a_star;
        if s.winding.abs() != 1 || !sandwich {
            let tr = s.trace.as_ref().unwrap();
            let d_i = tr
                .points()
                .iter()
                .map(|z| (z - num_complex::Complex64::new(0.0, 1.0)).norm())
                .fold(f64::INFINITY, f64::min);
            println!(
                "FAIL p={p} w={} a*={:.4} lo={lo:.4} hi={hi:.4} r={:.5} min|z-i|={d_i:.5} min_abs={:.4} tips={}",
                s.winding,
                s.a_star,
                s.r,
                s.min_abs,
                tr.len()
            );
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "{n} bubbles in {dt:.2}s  ({:.1} ms/bubble)  |w|=1: {w1}/{n}  sandwich: {sw}/{n}  mean a*: {:.3}",
        1e3 * dt / n as f64,
        sum_a / n as f64
    );
}
