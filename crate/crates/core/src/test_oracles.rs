//! Closed-form references used only by unit tests.

/// `ln sinh(x)` for `x > 0` without overflow.
pub fn ln_sinh(x: f64) -> f64 {
    x + (-(-2.0 * x).exp_m1()).ln() - std::f64::consts::LN_2
}

/// Law of the radial coordinate started at the origin: the heat kernel of the
/// 3-hyperboloid in geodesic polar form,
/// `P_s(a) = 2 a sinh(a) exp(-a^2 / 2s - s/2) / (s sqrt(2 pi s))`, `s = gamma t`.
pub fn hyperbolic_radial_density(s: f64, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let ln = std::f64::consts::LN_2 + a.ln() + ln_sinh(a)
        - a * a / (2.0 * s)
        - 0.5 * s
        - (s * (2.0 * std::f64::consts::PI * s).sqrt()).ln();
    ln.exp()
}

/// Cell averages of the exact law on `n` cells of width `h` (composite Simpson per cell).
pub fn exact_cell_averages(s: f64, h: f64, n: usize) -> Vec<f64> {
    const SUB: usize = 16;
    (0..n)
        .map(|i| {
            let lo = i as f64 * h;
            let dx = h / SUB as f64;
            let mut acc = 0.0;
            for k in 0..=SUB {
                let w = if k == 0 || k == SUB {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * hyperbolic_radial_density(s, lo + k as f64 * dx);
            }
            acc * dx / 3.0 / h
        })
        .collect()
}

/// Mean and variance of the exact law by quadrature on `[0, a_max]`.
pub fn exact_moments(s: f64) -> (f64, f64) {
    let a_max = s + 12.0 * s.sqrt() + 10.0;
    let n = 200_000;
    let h = a_max / n as f64;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let a = (i as f64 + 0.5) * h;
        let p = hyperbolic_radial_density(s, a) * h;
        m0 += p;
        m1 += p * a;
        m2 += p * a * a;
    }
    let mean = m1 / m0;
    (mean, m2 / m0 - mean * mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_law_is_normalized_and_satisfies_cosh_moment() {
        for s in [0.05f64, 0.5, 2.0, 6.0] {
            let a_max = s + 12.0 * s.sqrt() + 10.0;
            let n = 100_000;
            let h = a_max / n as f64;
            let (mut m0, mut mc) = (0.0, 0.0);
            for i in 0..n {
                let a = (i as f64 + 0.5) * h;
                let p = hyperbolic_radial_density(s, a) * h;
                m0 += p;
                mc += p * a.cosh();
            }
            assert!((m0 - 1.0).abs() < 1e-8, "s = {s}: mass {m0}");
            // E[cosh a] = e^{3s/2}
            assert!((mc / (1.5 * s).exp() - 1.0).abs() < 1e-8, "s = {s}");
        }
    }

    #[test]
    fn exact_moments_at_six() {
        let (m, v) = exact_moments(6.0);
        assert!((m - 6.997).abs() < 1e-3, "{m}");
        assert!((v - 5.040).abs() < 1e-3, "{v}");
    }
}
