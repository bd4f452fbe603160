#![allow(dead_code)]

use std::f64::consts::PI;

/// Closed-form radial density at `s = gamma t`.
pub fn exact_radial_density(a: f64, s: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    2.0 * a * a.sinh() * (-a * a / (2.0 * s) - s / 2.0).exp() / (s * (2.0 * PI * s).sqrt())
}

/// Simpson integral of `f(a) * density(a)` on `[0, a_max]`.
pub fn exact_expectation(s: f64, f: impl Fn(f64) -> f64) -> f64 {
    let a_max = s + 12.0 * s.sqrt() + 6.0;
    let n = 20_000;
    let h = a_max / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let a = i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a) * exact_radial_density(a, s);
    }
    acc * h / 3.0
}

pub fn exact_mean_var(s: f64) -> (f64, f64) {
    let m = exact_expectation(s, |a| a);
    let m2 = exact_expectation(s, |a| a * a);
    (m, m2 - m * m)
}
