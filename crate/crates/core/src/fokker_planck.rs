//! Radial Fokker-Planck solver for the spin-purity distribution `P_t(a)`,
//! Gaussian asymptotics, tail probabilities, the erfc collapse bound, and the
//! spin-j trace identity.
//!
//! The solver works on the divergence form
//! `dP/dt = -dF/da`, `F = -(gamma/2) sinh^2(a) d/da (P / sinh^2 a)`,
//! with cell averages on a uniform grid and zero flux at both ends.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use crate::algebra::SpinRep;
use crate::error::{Error, Result};

/// Largest `gamma dt / h` accepted by [`fp_solve`].
pub const CFL_LIMIT: f64 = 0.5;
/// Mass drift that aborts a solve.
pub const MASS_TOL: f64 = 1e-6;
/// Default `gamma t0` for the flat-space warm start.
pub const WARM_START_GAMMA_T: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub a_max: f64,
    pub n_cells: usize,
}

impl RadialGrid {
    pub fn new(a_max: f64, n_cells: usize) -> Result<Self> {
        if !(a_max > 0.0 && a_max.is_finite()) || n_cells < 2 {
            return Err(Error::Domain(format!(
                "grid needs a_max > 0 and at least 2 cells (a_max = {a_max}, n = {n_cells})"
            )));
        }
        Ok(Self { a_max, n_cells })
    }

    /// Grid with spacing close to `h` reaching at least `a_max`.
    pub fn with_spacing(a_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("spacing h = {h} must be positive")));
        }
        let n = (a_max / h).ceil() as usize;
        Self::new(n as f64 * h, n)
    }

    /// Grid covering `gamma T + 8 sqrt(gamma T)` (at least 1) at spacing `h`.
    pub fn for_run(gamma_t: f64, h: f64) -> Result<Self> {
        let reach = (gamma_t + 8.0 * gamma_t.sqrt()).max(1.0);
        Self::with_spacing(reach, h)
    }

    pub fn h(&self) -> f64 {
        self.a_max / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Whether the grid contains `gamma T + 6 sqrt(gamma T)`.
    pub fn contains_run(&self, gamma_t: f64) -> bool {
        self.a_max >= gamma_t + 6.0 * gamma_t.sqrt()
    }

    fn same_as(&self, other: &Self) -> bool {
        self.n_cells == other.n_cells && (self.a_max - other.a_max).abs() <= 1e-12 * self.a_max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialDistribution {
    pub grid: RadialGrid,
    /// Cell-average densities.
    pub values: Vec<f64>,
    pub time: f64,
    pub gamma: f64,
}

impl RadialDistribution {
    pub fn gamma_t(&self) -> f64 {
        self.gamma * self.time
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.h()
    }

    pub fn mean(&self) -> f64 {
        let h = self.grid.h();
        self.values.iter().enumerate().map(|(i, p)| p * self.grid.center(i)).sum::<f64>() * h
            / self.mass()
    }

    /// Variance including the within-cell `h^2 / 12`.
    pub fn variance(&self) -> f64 {
        let h = self.grid.h();
        let m = self.mean();
        let second = self
            .values
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = self.grid.center(i) - m;
                p * (d * d + h * h / 12.0)
            })
            .sum::<f64>()
            * h;
        second / self.mass()
    }

    /// Cell index of the largest density.
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        self.grid.center(i)
    }

    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Domain("L1 distance needs identical grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.h())
    }

    /// CSV dump: `# config: <json>` line, `a,P` header, one row per cell center.
    pub fn write_csv<W: Write>(&self, out: &mut W, config: &serde_json::Value) -> Result<()> {
        writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
        writeln!(out, "a,P")?;
        for (i, p) in self.values.iter().enumerate() {
            writeln!(out, "{},{:.17e}", self.grid.center(i), p)?;
        }
        Ok(())
    }
}

fn normalize(values: &mut [f64], h: f64) -> Result<()> {
    let mass: f64 = values.iter().sum::<f64>() * h;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Domain("distribution has no mass on the grid".into()));
    }
    for v in values.iter_mut() {
        *v /= mass;
    }
    Ok(())
}

/// Maxwell (chi-3) CDF with scale `s`.
fn chi3_cdf(a: f64, s: f64) -> f64 {
    let x = a / s;
    erf(x / std::f64::consts::SQRT_2) - (2.0 / PI).sqrt() * x * (-0.5 * x * x).exp()
}

/// Flat-space radial density `sqrt(2/pi) a^2 exp(-a^2 / 2 gamma t0) / (gamma t0)^{3/2}`
/// as exact cell averages, renormalized on the grid.
pub fn warm_start(gamma: f64, t0: f64, grid: &RadialGrid) -> Result<RadialDistribution> {
    if !(t0 > 0.0) {
        return Err(Error::Domain(format!("warm start needs t0 > 0 (got {t0})")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma = {gamma} must be positive")));
    }
    let s2 = gamma * t0;
    if s2 > 0.05 + 1e-12 {
        return Err(Error::Domain(format!("warm start needs gamma t0 <= 0.05 (got {s2})")));
    }
    let s = s2.sqrt();
    let h = grid.h();
    let mut values: Vec<f64> = (0..grid.n_cells)
        .map(|i| (chi3_cdf((i + 1) as f64 * h, s) - chi3_cdf(i as f64 * h, s)) / h)
        .collect();
    normalize(&mut values, h)?;
    Ok(RadialDistribution {
        grid: *grid,
        values,
        time: t0,
        gamma,
    })
}

/// `sinh(x) / sinh(y)` for positive arguments, overflow-free.
fn sinh_ratio(x: f64, y: f64) -> f64 {
    (x - y).exp() * (-2.0 * x).exp_m1() / (-2.0 * y).exp_m1()
}

/// Face weights `w+_i = (sinh f / sinh c_i)^2`, `w-_i = (sinh f / sinh c_{i+1})^2`
/// for the interior faces `f = (i + 1) h`.
fn face_weights(grid: &RadialGrid) -> (Vec<f64>, Vec<f64>) {
    let h = grid.h();
    let n = grid.n_cells;
    let mut wp = Vec::with_capacity(n - 1);
    let mut wm = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let f = (i + 1) as f64 * h;
        let rp = sinh_ratio(f, grid.center(i));
        let rm = sinh_ratio(f, grid.center(i + 1));
        wp.push(rp * rp);
        wm.push(rm * rm);
    }
    (wp, wm)
}

/// Flux `F` at the interior faces.
pub fn face_fluxes(p: &RadialDistribution) -> Vec<f64> {
    let (wp, wm) = face_weights(&p.grid);
    let k = 0.5 * p.gamma / p.grid.h();
    (0..p.grid.n_cells - 1)
        .map(|i| -k * (wm[i] * p.values[i + 1] - wp[i] * p.values[i]))
        .collect()
}

/// `dP/dt` from the divergence form, zero flux at both ends.
pub fn flux_form_rhs(p: &RadialDistribution) -> Vec<f64> {
    let f = face_fluxes(p);
    let h = p.grid.h();
    (0..p.grid.n_cells)
        .map(|i| {
            let right = if i + 1 < p.grid.n_cells { f[i] } else { 0.0 };
            let left = if i > 0 { f[i - 1] } else { 0.0 };
            -(right - left) / h
        })
        .collect()
}

/// `dP/dt = -gamma d/da (coth a P) + (gamma/2) d^2P/da^2` with centered
/// differences at interior cells; used only to validate the flux form.
pub fn nonconservative_rhs(p: &RadialDistribution) -> Vec<f64> {
    let h = p.grid.h();
    let n = p.grid.n_cells;
    let g = p.gamma;
    let drift = |i: usize| p.values[i] / p.grid.center(i).tanh();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                f64::NAN
            } else {
                let d1 = (drift(i + 1) - drift(i - 1)) / (2.0 * h);
                let d2 = (p.values[i + 1] - 2.0 * p.values[i] + p.values[i - 1]) / (h * h);
                -g * d1 + 0.5 * g * d2
            }
        })
        .collect()
}

/// Advance `p0` to absolute time `t_end` by implicit finite-volume steps of
/// size at most `dt`.
pub fn fp_solve(p0: &RadialDistribution, gamma: f64, t_end: f64, dt: f64) -> Result<RadialDistribution> {
    if (p0.gamma - gamma).abs() > 1e-12 * gamma.abs() {
        return Err(Error::Domain(format!(
            "distribution was built for gamma = {}, solve requested gamma = {gamma}",
            p0.gamma
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt = {dt} must be positive")));
    }
    let h = p0.grid.h();
    let ratio = gamma * dt / h;
    if ratio > CFL_LIMIT * (1.0 + 1e-9) {
        return Err(Error::Cfl {
            ratio,
            limit: CFL_LIMIT,
        });
    }
    let mass0 = p0.mass();
    if (mass0 - 1.0).abs() > MASS_TOL {
        return Err(Error::MassLeak {
            mass: mass0,
            tol: MASS_TOL,
        });
    }
    if t_end < p0.time - 1e-12 {
        return Err(Error::TimeMismatch {
            left: p0.time,
            right: t_end,
        });
    }
    let span = (t_end - p0.time).max(0.0);
    let steps = (span / dt).ceil() as usize;
    let mut p = p0.clone();
    if steps == 0 {
        p.time = t_end;
        return Ok(p);
    }
    let step = span / steps as f64;

    let n = p.grid.n_cells;
    let (wp, wm) = face_weights(&p.grid);
    let c = 0.5 * gamma * step / (h * h);
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n - 1];
    let mut lower = vec![0.0; n - 1];
    for i in 0..n - 1 {
        diag[i] += c * wp[i];
        diag[i + 1] += c * wm[i];
        upper[i] = -c * wm[i];
        lower[i] = -c * wp[i];
    }
    let solver = Tridiagonal::factor(&lower, &diag, &upper);
    for _ in 0..steps {
        p.values = solver.solve(&p.values);
        let mass = p.mass();
        if !mass.is_finite() || (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::MassLeak { mass, tol: MASS_TOL });
        }
    }
    for v in p.values.iter_mut() {
        // the M-matrix solve keeps values non-negative up to rounding
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    p.time = t_end;
    Ok(p)
}

/// Thomas-algorithm factorization of a tridiagonal matrix; `lower[i]` sits at
/// `(i + 1, i)` and `upper[i]` at `(i, i + 1)`.
struct Tridiagonal {
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    denom: Vec<f64>,
}

impl Tridiagonal {
    fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        let mut upper_mod = vec![0.0; n.saturating_sub(1)];
        let mut denom = vec![0.0; n];
        denom[0] = diag[0];
        for i in 0..n - 1 {
            upper_mod[i] = upper[i] / denom[i];
            denom[i + 1] = diag[i + 1] - lower[i] * upper_mod[i];
        }
        Self {
            lower: lower.to_vec(),
            upper_mod,
            denom,
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut y = vec![0.0; n];
        y[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            y[i] = (rhs[i] - self.lower[i - 1] * y[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            y[i] -= self.upper_mod[i] * y[i + 1];
        }
        y
    }
}

/// Warm start at `min(T, t0)` followed by [`fp_solve`] up to `T`.
pub fn solve_from_origin(gamma: f64, t_end: f64, grid: &RadialGrid, dt: f64) -> Result<RadialDistribution> {
    let t0 = (WARM_START_GAMMA_T / gamma).min(t_end);
    let p0 = warm_start(gamma, t0, grid)?;
    fp_solve(&p0, gamma, t_end, dt)
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `exp(-(a - gamma T)^2 / 2 gamma T) / sqrt(2 pi gamma T)` on `a >= 0`, renormalized.
pub fn gaussian_asymptote(gamma: f64, t: f64, grid: &RadialGrid) -> Result<RadialDistribution> {
    let gt = gamma * t;
    if !(gt >= 3.0) {
        return Err(Error::Domain(format!("Gaussian asymptote needs gamma T >= 3 (got {gt})")));
    }
    let sd = gt.sqrt();
    let h = grid.h();
    let mut values: Vec<f64> = (0..grid.n_cells)
        .map(|i| {
            let lo = (i as f64 * h - gt) / sd;
            let hi = ((i + 1) as f64 * h - gt) / sd;
            (normal_cdf(hi) - normal_cdf(lo)) / h
        })
        .collect();
    normalize(&mut values, h)?;
    Ok(RadialDistribution {
        grid: *grid,
        values,
        time: t,
        gamma,
    })
}

/// `ln(1 / sqrt(eps))`, the radial threshold equivalent to purity `eps`.
pub fn purity_threshold(eps: f64) -> f64 {
    -0.5 * eps.ln()
}

/// `Prob(purity > eps) = integral of P over [0, ln(1/sqrt(eps))]`, taken over
/// the cell-average density.
pub fn tail_probability(p: &RadialDistribution, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps = {eps} must lie in (0, 1)")));
    }
    let x = purity_threshold(eps);
    let h = p.grid.h();
    let mut acc = 0.0;
    for (i, v) in p.values.iter().enumerate() {
        let lo = i as f64 * h;
        if lo >= x {
            break;
        }
        let width = (x - lo).min(h);
        acc += v * width;
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErfcBound {
    /// `(gamma T - ln(1/sqrt(eps))) / sqrt(2 gamma T)`.
    pub argument: f64,
    /// `erfc(argument) / 2`.
    pub half_erfc: f64,
    /// `sqrt(2 / (pi gamma T)) exp(-gamma T / 8)`; present when `eps = e^{-gamma T}`.
    pub final_bound: Option<f64>,
}

pub fn erfc_bound(gamma_t: f64, eps: f64) -> Result<ErfcBound> {
    if !(gamma_t > 0.0 && gamma_t.is_finite()) {
        return Err(Error::Domain(format!("gamma T = {gamma_t} must be positive")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps = {eps} must lie in (0, 1)")));
    }
    let x = purity_threshold(eps);
    if !(gamma_t > x) {
        return Err(Error::Domain(format!(
            "bound needs gamma T > ln(1/sqrt(eps)) ({gamma_t} <= {x})"
        )));
    }
    let argument = (gamma_t - x) / (2.0 * gamma_t).sqrt();
    let at_collapse_scale = (eps.ln() + gamma_t).abs() <= 1e-9 * gamma_t;
    Ok(ErfcBound {
        argument,
        half_erfc: 0.5 * erfc(argument),
        final_bound: at_collapse_scale.then(|| (2.0 / (PI * gamma_t)).sqrt() * (-gamma_t / 8.0).exp()),
    })
}

/// `ln Tr e^{2 a J_z} = ln(sinh((2j+1) a) / sinh a)` for `a > 0`.
pub fn ln_trace_exp(a: f64, two_j: u32) -> f64 {
    let k = two_j as f64 + 1.0;
    if a < 1e-8 {
        return k.ln();
    }
    ln_sinh(k * a) - ln_sinh(a)
}

fn ln_sinh(x: f64) -> f64 {
    x + (-(-2.0 * x).exp_m1()).ln() - LN_2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceIdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_error: f64,
    /// Estimated fraction of the right-hand side lost beyond `a_max`.
    pub truncation_fraction: f64,
}

/// `integral P_t(a) Tr e^{2 a J_z} da` against `(2j+1) e^{2 gamma t j(j+1)}`.
pub fn trace_identity_check(p: &RadialDistribution, rep: &SpinRep, gamma: f64, t: f64) -> Result<f64> {
    Ok(trace_identity_report(p, rep.two_j(), gamma, t)?.relative_error)
}

/// Same check by `2j`, allowing the formal `j = 0` case.
pub fn trace_identity_report(
    p: &RadialDistribution,
    two_j: u32,
    gamma: f64,
    t: f64,
) -> Result<TraceIdentityReport> {
    let gt = gamma * t;
    if !(gt <= 1.0 + 1e-12) {
        return Err(Error::Domain(format!("trace identity needs gamma t <= 1 (got {gt})")));
    }
    if two_j > 4 {
        return Err(Error::Domain(format!("trace identity needs j <= 2 (got {})", two_j as f64 / 2.0)));
    }
    if (p.time - t).abs() > 1e-9 * t.max(1.0) || (p.gamma - gamma).abs() > 1e-12 * gamma {
        return Err(Error::TimeMismatch {
            left: p.gamma_t(),
            right: gt,
        });
    }
    let j = two_j as f64 / 2.0;
    let h = p.grid.h();
    let integrand: Vec<f64> = p
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v * h * ln_trace_exp(p.grid.center(i), two_j).exp())
        .collect();
    let lhs: f64 = integrand.iter().sum();
    let rhs = (2.0 * j + 1.0) * (2.0 * gt * j * (j + 1.0)).exp();
    let n = integrand.len();
    let last = integrand[n - 1];
    let prev = integrand[n - 2];
    let tail = if last <= 1e-12 * rhs {
        0.0
    } else if prev > 0.0 && last < prev {
        let r = last / prev;
        last * r / (1.0 - r)
    } else {
        f64::INFINITY
    };
    let fraction = tail / rhs;
    if fraction > 0.1 {
        return Err(Error::TraceTruncation { fraction });
    }
    Ok(TraceIdentityReport {
        lhs,
        rhs,
        relative_error: (lhs / rhs - 1.0).abs(),
        truncation_fraction: fraction,
    })
}

/// Solve from the origin on grids of growing reach until the trace-identity
/// error changes by less than `1e-3`; returns the final report and `a_max`.
pub fn trace_identity_converged(
    gamma: f64,
    t: f64,
    two_j: u32,
    h: f64,
) -> Result<(TraceIdentityReport, f64)> {
    let k = two_j as f64 + 1.0;
    let mut reach = (gamma * t * k + 8.0 * (gamma * t * k).sqrt()).max(2.0);
    let dt = 0.25 * h / gamma;
    let mut previous: Option<TraceIdentityReport> = None;
    for _ in 0..8 {
        let grid = RadialGrid::with_spacing(reach, h)?;
        let p = solve_from_origin(gamma, t, &grid, dt)?;
        match trace_identity_report(&p, two_j, gamma, t) {
            Ok(r) => {
                if let Some(prev) = previous {
                    if (r.relative_error - prev.relative_error).abs() < 1e-3 {
                        return Ok((r, grid.a_max));
                    }
                }
                previous = Some(r);
            }
            Err(Error::TraceTruncation { .. }) => {}
            Err(e) => return Err(e),
        }
        reach *= 1.5;
    }
    Err(Error::TraceTruncation {
        fraction: previous.map_or(f64::INFINITY, |r| r.truncation_fraction),
    })
}
