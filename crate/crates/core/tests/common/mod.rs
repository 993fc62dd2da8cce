//! Independent reference computations shared by the integration tests.
#![allow(dead_code, clippy::too_many_arguments)]

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_c(r: &mut ChaCha8Rng, scale: f64) -> C64 {
    C64::new(r.gen_range(-scale..scale), r.gen_range(-scale..scale))
}

/// Theta series summed term by term over `|n| <= terms` in the textbook form.
pub fn theta_direct(z: C64, tau: C64, terms: i64) -> C64 {
    let i = C64::i();
    (-terms..=terms)
        .map(|n| {
            let h = n as f64 + 0.5;
            let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            -i * sign * (i * PI * tau * h * h + i * (2.0 * h) * PI * z).exp()
        })
        .sum()
}

/// Lattice sum `sum_q q^n e^{-pi^2 q^2/gamma^2}` over `|q| <= width`.
pub fn gauss_sum_direct(order: u32, gamma: f64, odd_only: bool, width: i64) -> f64 {
    (-width..=width)
        .filter(|q| !odd_only || q.rem_euclid(2) == 1)
        .map(|q| (q as f64).powi(order as i32) * (-PI * PI * (q * q) as f64 / (gamma * gamma)).exp())
        .sum()
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 30)
}

pub type M2 = [[C64; 2]; 2];

pub fn mat_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `exp(m)` by Taylor series with scaling and squaring.
pub fn expm(m: &M2) -> M2 {
    let norm = m.iter().flatten().map(|v| v.norm()).sum::<f64>();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(s);
    let a = m.map(|r| r.map(|v| v * scale));
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut term = [[one, zero], [zero, one]];
    let mut sum = term;
    for k in 1..=30 {
        term = mat_mul(&term, &a).map(|r| r.map(|v| v / k as f64));
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = mat_mul(&sum, &sum);
    }
    sum
}

pub fn mat_dist(a: &M2, b: &M2) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}
