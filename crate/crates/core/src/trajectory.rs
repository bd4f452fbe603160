//! Seeded Wiener paths and the direct SL(2,C) Kraus integrator.
//!
//! The Kraus operator evolves by `K' = exp(sqrt(gamma) J . dW) K` with exact
//! 2x2 exponentials. The scalar drift `e^{-gamma J^2 dt}` is left out; it only
//! renormalizes within an irrep and is restored where needed.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    defining_dot, det2, exp_hermitian_su2, mat_exp, max_abs, ComplexMatrix, Mat2, SpinRep, Vec3,
};
use crate::cartan::{cartan_decompose_unchecked, lift_kraus_unchecked};
use crate::error::{Error, Result};

/// Largest `gamma * dt` accepted as a weak-measurement step.
pub const MAX_GAMMA_DT: f64 = 0.01;
/// Number of steps between determinant renormalizations.
pub const RENORM_INTERVAL: u64 = 1000;
const MAX_STEPS: f64 = 1e11;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub gamma: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub seed: u64,
    #[serde(default)]
    pub checkpoint_times: Vec<f64>,
}

impl SimConfig {
    pub fn new(gamma: f64, dt: f64, t_total: f64, seed: u64) -> Result<Self> {
        let c = Self {
            gamma,
            dt,
            t_total,
            seed,
            checkpoint_times: vec![t_total],
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_checkpoints(mut self, times: Vec<f64>) -> Result<Self> {
        self.checkpoint_times = times;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma = {} must be positive", self.gamma)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_total >= 0.0 && self.t_total.is_finite()) {
            return Err(Error::InvalidConfig(format!("T = {} must be non-negative", self.t_total)));
        }
        if self.gamma * self.dt > MAX_GAMMA_DT * (1.0 + 1e-9) {
            return Err(Error::InvalidConfig(format!(
                "gamma*dt = {} exceeds the weak-measurement limit {MAX_GAMMA_DT}",
                self.gamma * self.dt
            )));
        }
        self.n_steps()?;
        self.checkpoint_steps()?;
        Ok(())
    }

    pub fn n_steps(&self) -> Result<usize> {
        steps_for(self.t_total, self.dt)
    }

    /// Step index of each checkpoint, in the order given.
    pub fn checkpoint_steps(&self) -> Result<Vec<usize>> {
        let n = self.n_steps()?;
        self.checkpoint_times
            .iter()
            .map(|&t| checkpoint_step(t, self.dt, n))
            .collect()
    }
}

fn steps_for(t_total: f64, dt: f64) -> Result<usize> {
    let n = (t_total / dt).round();
    if !n.is_finite() || n > MAX_STEPS {
        return Err(Error::InvalidConfig(format!(
            "T/dt = {} steps exceeds the supported maximum {MAX_STEPS:e}",
            t_total / dt
        )));
    }
    Ok(n as usize)
}

fn checkpoint_step(t: f64, dt: f64, n_steps: usize) -> Result<usize> {
    let total = n_steps as f64 * dt;
    let tol = 1e-9 * total.max(dt);
    if !t.is_finite() || t < -tol || t > total + tol {
        return Err(Error::CheckpointOutOfRange { t, total });
    }
    Ok(((t / dt).round() as usize).min(n_steps))
}

/// Per-trajectory seed derived from a master seed.
pub fn path_seed(master: u64, index: u64) -> u64 {
    master ^ index
}

/// Lazily generated Wiener increments, components drawn in `(z, x, y)` order.
#[derive(Clone, Debug)]
pub struct WienerStream {
    rng: ChaCha8Rng,
    sqrt_dt: f64,
}

impl WienerStream {
    pub fn new(seed: u64, dt: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            sqrt_dt: dt.sqrt(),
        }
    }

    #[inline]
    pub fn next_increment(&mut self) -> Vec3 {
        let z: f64 = self.rng.sample(StandardNormal);
        let x: f64 = self.rng.sample(StandardNormal);
        let y: f64 = self.rng.sample(StandardNormal);
        [z * self.sqrt_dt, x * self.sqrt_dt, y * self.sqrt_dt]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WienerPath {
    pub dt: f64,
    pub seed: u64,
    pub increments: Vec<Vec3>,
}

impl WienerPath {
    pub fn zero(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            seed: 0,
            increments: vec![[0.0; 3]; n_steps],
        }
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    /// Sub-path covering steps `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            dt: self.dt,
            seed: self.seed,
            increments: self.increments[start..end].to_vec(),
        }
    }

    /// Same Brownian path sampled at `dt / 2`: each increment is split by a
    /// Brownian bridge, `dW1 = dW/2 + sqrt(dt/4) xi`, `dW2 = dW - dW1`.
    pub fn refine(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (0.25 * self.dt).sqrt();
        let mut out = Vec::with_capacity(2 * self.increments.len());
        for dw in &self.increments {
            let mut first = [0.0; 3];
            let mut second = [0.0; 3];
            for c in 0..3 {
                let xi: f64 = rng.sample(StandardNormal);
                first[c] = 0.5 * dw[c] + s * xi;
                second[c] = dw[c] - first[c];
            }
            out.push(first);
            out.push(second);
        }
        Self {
            dt: 0.5 * self.dt,
            seed: self.seed,
            increments: out,
        }
    }
}

pub fn sample_wiener_path(config: &SimConfig) -> Result<WienerPath> {
    config.validate()?;
    let n = config.n_steps()?;
    let mut stream = WienerStream::new(config.seed, config.dt);
    let increments = (0..n).map(|_| stream.next_increment()).collect();
    Ok(WienerPath {
        dt: config.dt,
        seed: config.seed,
        increments,
    })
}

/// Unit-determinant 2x2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrausPoint(Mat2);

impl KrausPoint {
    pub fn new(m: Mat2) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let dev = (det2(&m) - 1.0).norm();
        if dev > 1e-9 {
            return Err(Error::BadDeterminant { deviation: dev });
        }
        Ok(Self(m))
    }

    pub fn from_matrix_unchecked(m: Mat2) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Mat2::identity())
    }

    /// `e^{a J_z}`.
    pub fn radial(a: f64) -> Self {
        Self(crate::cartan::radial_factor(a))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn det_deviation(&self) -> f64 {
        (det2(&self.0) - 1.0).norm()
    }

    pub fn inverse(&self) -> Mat2 {
        let m = &self.0;
        Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det2(m)
    }
}

/// Rescale so the determinant is exactly one up to rounding.
pub fn normalize_det(m: &Mat2) -> Mat2 {
    let d = det2(m);
    m * (Complex64::new(1.0, 0.0) / d.sqrt())
}

/// One step `K' = exp(sqrt(gamma) J . dW) K`.
#[inline]
pub fn step_kraus(k: &KrausPoint, dw: &Vec3, gamma: f64) -> KrausPoint {
    let s = gamma.sqrt();
    let step = exp_hermitian_su2(&[s * dw[0], s * dw[1], s * dw[2]]);
    KrausPoint(step * k.0)
}

/// Sequential integrator that renormalizes the determinant every
/// [`RENORM_INTERVAL`] global steps. Resuming with the same step count keeps
/// runs bitwise composable.
#[derive(Clone, Debug)]
pub struct KrausIntegrator {
    k: KrausPoint,
    sqrt_gamma: f64,
    steps: u64,
}

impl KrausIntegrator {
    pub fn new(gamma: f64) -> Self {
        Self::resume(KrausPoint::identity(), gamma, 0)
    }

    pub fn resume(k: KrausPoint, gamma: f64, steps_done: u64) -> Self {
        Self {
            k,
            sqrt_gamma: gamma.sqrt(),
            steps: steps_done,
        }
    }

    #[inline]
    pub fn step(&mut self, dw: &Vec3) {
        let s = self.sqrt_gamma;
        let step = exp_hermitian_su2(&[s * dw[0], s * dw[1], s * dw[2]]);
        self.k = KrausPoint(step * self.k.0);
        self.steps += 1;
        if self.steps % RENORM_INTERVAL == 0 {
            self.k = KrausPoint(normalize_det(&self.k.0));
        }
    }

    pub fn state(&self) -> &KrausPoint {
        &self.k
    }

    pub fn steps_done(&self) -> u64 {
        self.steps
    }
}

/// Integrate from `K(0) = I`, snapshotting at each checkpoint time.
pub fn integrate_kraus(
    path: &WienerPath,
    gamma: f64,
    checkpoints: &[f64],
) -> Result<Vec<KrausPoint>> {
    integrate_kraus_from(path, gamma, KrausPoint::identity(), checkpoints)
}

pub fn integrate_kraus_from(
    path: &WienerPath,
    gamma: f64,
    k0: KrausPoint,
    checkpoints: &[f64],
) -> Result<Vec<KrausPoint>> {
    let n = path.n_steps();
    let steps = checkpoints
        .iter()
        .map(|&t| checkpoint_step(t, path.dt, n))
        .collect::<Result<Vec<_>>>()?;
    let mut integ = KrausIntegrator::resume(k0, gamma, 0);
    let mut snaps = vec![None; steps.len()];
    let record = |step: usize, k: &KrausPoint, snaps: &mut Vec<Option<KrausPoint>>| {
        for (slot, &s) in snaps.iter_mut().zip(steps.iter()) {
            if s == step {
                *slot = Some(*k);
            }
        }
    };
    record(0, integ.state(), &mut snaps);
    for (i, dw) in path.increments.iter().enumerate() {
        integ.step(dw);
        record(i + 1, integ.state(), &mut snaps);
    }
    Ok(snaps.into_iter().map(|s| s.expect("every checkpoint is reached")).collect())
}

/// Frobenius norm of `(dK K^-1 - (dK K^-1)^2 / 2) - sqrt(gamma) J . dW`.
pub fn mmcsd_residual(k: &KrausPoint, k_next: &KrausPoint, dw: &Vec3, gamma: f64) -> f64 {
    let d = (k_next.0 - k.0) * k.inverse();
    let lhs = d - d * d * Complex64::new(0.5, 0.0);
    let s = gamma.sqrt();
    let rhs = defining_dot(&[s * dw[0], s * dw[1], s * dw[2]]);
    (lhs - rhs).norm()
}

/// `sum_mu eps_mu (J_mu)^2` in the given representation.
pub fn anisotropy_operator(eps: &Vec3, rep: &SpinRep) -> Result<ComplexMatrix> {
    let sum: f64 = eps.iter().sum();
    if sum.abs() > 1e-12 {
        return Err(Error::AnisotropyNotZeroSum(sum));
    }
    if eps.iter().any(|e| !e.is_finite() || *e < -1.0) {
        return Err(Error::Domain(format!("anisotropies {eps:?} must be finite and >= -1")));
    }
    let mut q = DMatrix::zeros(rep.dim(), rep.dim());
    for (mu, e) in eps.iter().enumerate() {
        let g = rep.generator(mu);
        q += g * g * Complex64::new(*e, 0.0);
    }
    Ok(q)
}

/// One anisotropic step. Returns the updated defining-rep Kraus operator and the
/// representation-dependent correction `A`.
pub fn anisotropic_step(
    k: &KrausPoint,
    a_corr: &ComplexMatrix,
    dw: &Vec3,
    gamma: f64,
    eps: &Vec3,
    rep: &SpinRep,
    dt: f64,
) -> Result<(KrausPoint, ComplexMatrix)> {
    let q = anisotropy_operator(eps, rep)?;
    anisotropic_step_with(k, a_corr, dw, gamma, eps, &q, rep, dt)
}

#[allow(clippy::too_many_arguments)]
fn anisotropic_step_with(
    k: &KrausPoint,
    a_corr: &ComplexMatrix,
    dw: &Vec3,
    gamma: f64,
    eps: &Vec3,
    q: &ComplexMatrix,
    rep: &SpinRep,
    dt: f64,
) -> Result<(KrausPoint, ComplexMatrix)> {
    let v = [
        (gamma * (1.0 + eps[0])).sqrt() * dw[0],
        (gamma * (1.0 + eps[1])).sqrt() * dw[1],
        (gamma * (1.0 + eps[2])).sqrt() * dw[2],
    ];
    let k_next = KrausPoint(exp_hermitian_su2(&v) * k.0);
    if max_abs(q) == 0.0 {
        return Ok((k_next, a_corr.clone()));
    }
    let form = cartan_decompose_unchecked(&k_next.0);
    let lift = lift_kraus_unchecked(&form, rep);
    let inv_form = crate::cartan::CartanForm {
        v: form.u.adjoint(),
        a: -form.a,
        u: form.v.adjoint(),
    };
    let lift_inv = lift_kraus_unchecked(&inv_form, rep);
    let gen = &lift_inv * q * &lift * Complex64::new(-gamma * dt, 0.0);
    let a_next = mat_exp(&gen)? * a_corr;
    Ok((k_next, a_next))
}

/// Run the anisotropic update over a whole path from `K = I`, `A = I`.
pub fn integrate_anisotropic(
    path: &WienerPath,
    gamma: f64,
    eps: &Vec3,
    rep: &SpinRep,
) -> Result<(KrausPoint, ComplexMatrix)> {
    let q = anisotropy_operator(eps, rep)?;
    let mut k = KrausPoint::identity();
    let mut a = rep.identity();
    for (i, dw) in path.increments.iter().enumerate() {
        let (kn, an) = anisotropic_step_with(&k, &a, dw, gamma, eps, &q, rep, path.dt)?;
        k = kn;
        a = an;
        if (i as u64 + 1) % RENORM_INTERVAL == 0 {
            k = KrausPoint(normalize_det(&k.0));
        }
    }
    Ok((k, a))
}

pub fn validate_density_matrix(rho: &ComplexMatrix, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::InvalidDensityMatrix(format!(
            "expected {dim}x{dim}, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidDensityMatrix("non-finite entries".into()));
    }
    let herm = max_abs(&(rho - rho.adjoint()));
    if herm > 1e-10 {
        return Err(Error::InvalidDensityMatrix(format!("not Hermitian ({herm:.2e})")));
    }
    let tr = rho.trace();
    if (tr - 1.0).norm() > 1e-10 {
        return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
    }
    let min_eig = rho
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, &e| m.min(e));
    if min_eig < -1e-10 {
        return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min_eig:.3e}")));
    }
    Ok(())
}

/// Monte Carlo of the single-shot Gaussian channel `L(W) rho L(W)^dag`,
/// `L(W) = exp(sqrt(gamma) W J_z - gamma t J_z^2)`, `W ~ N(0, t)`, against the
/// dephasing map `rho_mn -> exp(-gamma t (m-n)^2 / 2) rho_mn`. Returns the max
/// entrywise deviation.
pub fn single_observable_superop_check(
    rep: &SpinRep,
    gamma: f64,
    t: f64,
    rho: &ComplexMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    validate_density_matrix(rho, rep.dim())?;
    if n_samples == 0 {
        return Err(Error::EmptySamples);
    }
    if !(t >= 0.0 && gamma > 0.0) {
        return Err(Error::Domain(format!("need t >= 0 and gamma > 0 (t = {t}, gamma = {gamma})")));
    }
    let d = rep.dim();
    let x = rep.jz();
    let x2 = x * x;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = ComplexMatrix::zeros(d, d);
    let sd = t.sqrt();
    for _ in 0..n_samples {
        let xi: f64 = rng.sample(StandardNormal);
        let w = sd * xi;
        let gen = x * Complex64::new(gamma.sqrt() * w, 0.0) - &x2 * Complex64::new(gamma * t, 0.0);
        let l = mat_exp(&gen)?;
        acc += &l * rho * l.adjoint();
    }
    acc /= Complex64::new(n_samples as f64, 0.0);

    let m = rep.weights();
    let mut err: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            let diff = m[r] - m[c];
            let expected = rho[(r, c)] * (-0.5 * gamma * t * diff * diff).exp();
            err = err.max((acc[(r, c)] - expected).norm());
        }
    }
    Ok(err)
}

pub const CHECKPOINT_COLUMNS: &str =
    "t,k11_re,k11_im,k12_re,k12_im,k21_re,k21_im,k22_re,k22_im";

/// Checkpoint dump: a `# config: <json>` line, the header, then one row per
/// checkpoint with the real and imaginary parts of `K` in row-major order.
pub fn write_checkpoints_csv<W: Write>(
    out: &mut W,
    config: &serde_json::Value,
    times: &[f64],
    points: &[KrausPoint],
) -> Result<()> {
    writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
    writeln!(out, "{CHECKPOINT_COLUMNS}")?;
    for (t, k) in times.iter().zip(points) {
        write!(out, "{t}")?;
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let z = k.matrix()[(r, c)];
            write!(out, ",{:.17e},{:.17e}", z.re, z.im)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
