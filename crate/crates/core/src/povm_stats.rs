//! Trajectory ensembles and the statistical checks built on them:
//! completeness, isotropy, radial law against the Fokker-Planck solution,
//! U/V decorrelation and the empirical collapse tail.

use std::io::Write;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, Mat2, SpinRep, Vec3, Z};
use crate::cartan::{cartan_decompose_unchecked, lift_kraus, PovmDirection};
use crate::coupled_sde::{CoupledScheme, CoupledState, HybridIntegrator};
use crate::error::{Error, Result};
use crate::fokker_planck::{erfc_bound, RadialDistribution};
use crate::trajectory::{path_seed, KrausIntegrator, SimConfig, WienerStream};

/// Upper limit on `n_paths * n_steps` for one ensemble.
pub const MAX_PATH_STEPS: f64 = 1e11;
/// Upper limit on stored `(path, checkpoint)` records.
pub const MAX_RECORDS: usize = 100_000_000;
/// Length, in units of `1/gamma`, of the early window whose Wiener
/// displacement is kept for conditioning.
pub const EARLY_WINDOW_GAMMA_T: f64 = 1.0;
/// Jackknife groups for heavy-tailed means.
pub const JACKKNIFE_GROUPS: usize = 20;
/// Relative jackknife error above which a verdict is inconclusive.
pub const INCONCLUSIVE_REL_STD: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Gauge invariants of one path at one checkpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathRecord {
    pub a: f64,
    /// POVM direction, from the premeasurement unitary.
    pub n_u: Vec3,
    /// Postmeasurement direction, from `V`.
    pub n_v: Vec3,
    pub kraus: Mat2,
}

#[derive(Clone, Debug)]
pub struct EnsembleStats {
    pub config: SimConfig,
    pub n_paths: usize,
    pub checkpoint_times: Vec<f64>,
    /// `records[path][checkpoint]`.
    pub records: Vec<Vec<PathRecord>>,
    /// `dW^z` of the first step of each path.
    pub first_dwz: Vec<f64>,
    /// `W^z` at the end of the early window.
    pub early_wz: Vec<f64>,
}

fn record_of(k: &Mat2) -> PathRecord {
    let f = cartan_decompose_unchecked(k);
    PathRecord {
        a: f.a,
        n_u: f.povm_direction().0,
        n_v: f.postmeasurement_direction().0,
        kraus: *k,
    }
}

fn run_path(config: &SimConfig, steps: &[usize], n_steps: usize, early: usize, index: u64) -> (Vec<PathRecord>, f64, f64) {
    let mut stream = WienerStream::new(path_seed(config.seed, index), config.dt);
    let mut integ = KrausIntegrator::new(config.gamma);
    let mut out: Vec<Option<PathRecord>> = vec![None; steps.len()];
    let snap = |step: usize, k: &Mat2, out: &mut Vec<Option<PathRecord>>| {
        for (slot, &s) in out.iter_mut().zip(steps) {
            if s == step {
                *slot = Some(record_of(k));
            }
        }
    };
    snap(0, integ.state().matrix(), &mut out);
    let (mut first, mut wz) = (0.0, 0.0);
    for i in 1..=n_steps {
        let dw = stream.next_increment();
        if i == 1 {
            first = dw[Z];
        }
        if i <= early {
            wz += dw[Z];
        }
        integ.step(&dw);
        snap(i, integ.state().matrix(), &mut out);
    }
    (out.into_iter().map(|r| r.expect("checkpoint reached")).collect(), first, wz)
}

fn check_resources(config: &SimConfig, n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
    }
    config.validate()?;
    let work = n_paths as f64 * config.n_steps()? as f64;
    if work > MAX_PATH_STEPS {
        return Err(Error::ResourceLimit(format!(
            "n_paths * n_steps = {work:e} exceeds {MAX_PATH_STEPS:e}"
        )));
    }
    let records = n_paths.saturating_mul(config.checkpoint_times.len().max(1));
    if records > MAX_RECORDS {
        return Err(Error::ResourceLimit(format!("{records} records exceed {MAX_RECORDS}")));
    }
    Ok(())
}

/// Map `f` over `0..n` in parallel, in index order. `workers = None` uses the
/// global pool.
pub fn parallel_map<T: Send>(n: usize, workers: Option<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    let job = || (0..n).into_par_iter().map(&f).collect::<Vec<T>>();
    match workers {
        None => Ok(job()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::ResourceLimit(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// `n_paths` trajectories from `K = I`; path `i` uses seed `path_seed(config.seed, i)`.
pub fn run_ensemble(config: &SimConfig, n_paths: usize) -> Result<EnsembleStats> {
    run_ensemble_with_workers(config, n_paths, None)
}

pub fn run_ensemble_with_workers(config: &SimConfig, n_paths: usize, workers: Option<usize>) -> Result<EnsembleStats> {
    check_resources(config, n_paths)?;
    let n_steps = config.n_steps()?;
    let steps = config.checkpoint_steps()?;
    let early = ((EARLY_WINDOW_GAMMA_T / config.gamma / config.dt).round() as usize).clamp(1, n_steps.max(1));
    let results = parallel_map(n_paths, workers, |i| run_path(config, &steps, n_steps, early, i as u64))?;
    let mut records = Vec::with_capacity(n_paths);
    let mut first_dwz = Vec::with_capacity(n_paths);
    let mut early_wz = Vec::with_capacity(n_paths);
    for (r, f, w) in results {
        records.push(r);
        first_dwz.push(f);
        early_wz.push(w);
    }
    Ok(EnsembleStats {
        config: config.clone(),
        n_paths,
        checkpoint_times: config.checkpoint_times.clone(),
        records,
        first_dwz,
        early_wz,
    })
}

/// Radial samples from the coupled-coordinate integrator on the same Wiener
/// streams as [`run_ensemble`]; `result[checkpoint][path]`.
pub fn coupled_radial_samples(config: &SimConfig, n_paths: usize, scheme: CoupledScheme) -> Result<Vec<Vec<f64>>> {
    check_resources(config, n_paths)?;
    let n_steps = config.n_steps()?;
    let steps = config.checkpoint_steps()?;
    let per_path = parallel_map(n_paths, None, |i| {
        let mut stream = WienerStream::new(path_seed(config.seed, i as u64), config.dt);
        let mut h = HybridIntegrator::with_scheme(scheme, CoupledState::radial(0.0), config.gamma, config.dt);
        let mut out = vec![0.0; steps.len()];
        for i in 0..=n_steps {
            if i > 0 {
                h.step(&stream.next_increment());
            }
            for (slot, &s) in out.iter_mut().zip(&steps) {
                if s == i {
                    *slot = h.form().a;
                }
            }
        }
        out
    })?;
    Ok((0..steps.len()).map(|c| per_path.iter().map(|p| p[c]).collect()).collect())
}

impl EnsembleStats {
    pub fn checkpoint_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * t.abs().max(1.0) + 0.5 * self.config.dt;
        self.checkpoint_times
            .iter()
            .position(|&c| (c - t).abs() <= tol)
            .ok_or(Error::CheckpointOutOfRange {
                t,
                total: self.config.t_total,
            })
    }

    pub fn radial_samples(&self, ci: usize) -> Vec<f64> {
        self.records.iter().map(|r| r[ci].a).collect()
    }

    pub fn moments(&self, ci: usize) -> Moments {
        Moments::of(&self.radial_samples(ci))
    }

    pub fn radial_histogram(&self, ci: usize, h: f64, n_bins: usize) -> RadialHistogram {
        RadialHistogram::from_samples(&self.radial_samples(ci), h, n_bins)
    }

    /// Subset of paths as a new ensemble.
    pub fn subset(&self, keep: impl Fn(usize) -> bool) -> EnsembleStats {
        let idx: Vec<usize> = (0..self.n_paths).filter(|&i| keep(i)).collect();
        EnsembleStats {
            config: self.config.clone(),
            n_paths: idx.len(),
            checkpoint_times: self.checkpoint_times.clone(),
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            first_dwz: idx.iter().map(|&i| self.first_dwz[i]).collect(),
            early_wz: idx.iter().map(|&i| self.early_wz[i]).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub std_error: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                variance: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            n,
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
        }
    }
}

/// Densities on `[0, n_bins h)` plus the fraction of samples beyond.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialHistogram {
    pub h: f64,
    pub density: Vec<f64>,
    pub overflow: f64,
}

impl RadialHistogram {
    pub fn from_samples(xs: &[f64], h: f64, n_bins: usize) -> Self {
        let mut counts = vec![0u64; n_bins];
        let mut over = 0u64;
        for &x in xs {
            let b = (x / h).floor();
            if b >= 0.0 && (b as usize) < n_bins {
                counts[b as usize] += 1;
            } else {
                over += 1;
            }
        }
        let n = xs.len().max(1) as f64;
        Self {
            h,
            density: counts.iter().map(|&c| c as f64 / (n * h)).collect(),
            overflow: over as f64 / n,
        }
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.h + self.overflow
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramComparison {
    pub l1: f64,
    /// FP cells merged per histogram bin.
    pub rebin: usize,
    pub bin_width: f64,
    pub n_samples: usize,
    pub overflow: f64,
}

/// Cells per bin: `max(1, floor(sigma / 4h))` with `sigma` from `fp`.
pub fn rebin_factor(fp: &RadialDistribution) -> usize {
    let sigma = fp.variance().max(0.0).sqrt();
    ((sigma / (4.0 * fp.grid.h())).floor() as usize).max(1)
}

/// L1 distance between the histogram of `samples` and `fp`, both on bins of
/// `rebin_factor(fp)` FP cells; mass beyond the grid counts in full.
pub fn histogram_l1(samples: &[f64], fp: &RadialDistribution) -> Result<HistogramComparison> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let r = rebin_factor(fp);
    let h = fp.grid.h();
    let n_bins = fp.values.len() / r;
    let w = r as f64 * h;
    let hist = RadialHistogram::from_samples(samples, w, n_bins);
    let mut l1 = 0.0;
    for (b, d) in hist.density.iter().enumerate() {
        let p: f64 = fp.values[b * r..(b + 1) * r].iter().sum::<f64>() / r as f64;
        l1 += (d - p).abs() * w;
    }
    // FP cells that do not fill a whole bin
    let tail_fp: f64 = fp.values[n_bins * r..].iter().sum::<f64>() * h;
    l1 += (hist.overflow - tail_fp).abs();
    Ok(HistogramComparison {
        l1,
        rebin: r,
        bin_width: w,
        n_samples: samples.len(),
        overflow: hist.overflow,
    })
}

pub fn histogram_vs_fp(stats: &EnsembleStats, fp: &RadialDistribution) -> Result<HistogramComparison> {
    let ci = stats
        .checkpoint_index(fp.time)
        .map_err(|_| Error::TimeMismatch {
            left: fp.time,
            right: stats.config.t_total,
        })?;
    let t = stats.checkpoint_times[ci];
    if (t - fp.time).abs() > 1e-9 * t.abs().max(1.0) || (stats.config.gamma - fp.gamma).abs() > 1e-12 * fp.gamma {
        return Err(Error::TimeMismatch {
            left: fp.time * fp.gamma,
            right: t * stats.config.gamma,
        });
    }
    histogram_l1(&stats.radial_samples(ci), fp)
}

/// Delete-one-group jackknife of a ratio-free mean: returns `(mean, std error)`.
pub fn jackknife_mean(xs: &[f64], groups: usize) -> (f64, f64) {
    let n = xs.len();
    let g = groups.min(n).max(1);
    let total: f64 = xs.iter().sum();
    let mean = total / n as f64;
    if g < 2 {
        return (mean, 0.0);
    }
    let mut sums = vec![0.0; g];
    let mut counts = vec![0usize; g];
    for (i, x) in xs.iter().enumerate() {
        sums[i * g / n] += x;
        counts[i * g / n] += 1;
    }
    let leave: Vec<f64> = (0..g).map(|k| (total - sums[k]) / (n - counts[k]) as f64).collect();
    let lm = leave.iter().sum::<f64>() / g as f64;
    let var = (g - 1) as f64 / g as f64 * leave.iter().map(|v| (v - lm) * (v - lm)).sum::<f64>();
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub two_j: u32,
    pub gamma_t: f64,
    pub n_paths: usize,
    pub eigenvalues: Vec<f64>,
    pub max_deviation: f64,
    /// Jackknife relative std of the normalized trace estimator.
    pub rel_std: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Regime where the default completeness tolerance is meaningful.
pub fn completeness_regime_ok(rep: &SpinRep, gamma_t: f64) -> bool {
    rep.j() <= 1.0 && gamma_t <= 0.5 * (1.0f64).max(1.0 / rep.j()) + 1e-12
}

/// `e^{-2 gamma t j(j+1)} mean lift(K)^dag lift(K)` against the identity.
pub fn completeness_check(stats: &EnsembleStats, rep: &SpinRep, gamma: f64, t: f64, tolerance: f64) -> Result<CompletenessReport> {
    if !completeness_regime_ok(rep, gamma * t) {
        return Err(Error::Domain(format!(
            "completeness at j = {}, gamma t = {} is outside the default regime; use completeness_check_escalated",
            rep.j(),
            gamma * t
        )));
    }
    completeness_check_escalated(stats, rep, gamma, t, tolerance)
}

/// Same check without the regime guard; the caller is responsible for enough paths.
pub fn completeness_check_escalated(
    stats: &EnsembleStats,
    rep: &SpinRep,
    gamma: f64,
    t: f64,
    tolerance: f64,
) -> Result<CompletenessReport> {
    let ci = stats.checkpoint_index(t)?;
    let d = rep.dim();
    let norm = (-2.0 * gamma * t * rep.casimir()).exp();
    let mut acc = ComplexMatrix::zeros(d, d);
    let mut traces = Vec::with_capacity(stats.n_paths);
    for r in &stats.records {
        let f = cartan_decompose_unchecked(&r[ci].kraus);
        let k = lift_kraus(&f, rep)?;
        let e = k.adjoint() * &k;
        traces.push(norm * e.trace().re / d as f64);
        acc += e;
    }
    let m = acc * Complex64::new(norm / stats.n_paths as f64, 0.0);
    let eigenvalues: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    let max_deviation = eigenvalues.iter().fold(0.0f64, |w, e| w.max((e - 1.0).abs()));
    let (mean, se) = jackknife_mean(&traces, JACKKNIFE_GROUPS);
    let rel_std = if mean != 0.0 { se / mean.abs() } else { f64::INFINITY };
    let verdict = if rel_std > INCONCLUSIVE_REL_STD {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(max_deviation <= tolerance)
    };
    Ok(CompletenessReport {
        two_j: rep.two_j(),
        gamma_t: gamma * t,
        n_paths: stats.n_paths,
        eigenvalues,
        max_deviation,
        rel_std,
        tolerance,
        verdict,
    })
}

/// Moment test of uniformity on the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereUniformity {
    pub n: usize,
    pub mean_norm: f64,
    /// `4 / sqrt(N)`.
    pub mean_threshold: f64,
    pub second_moment_eigenvalues: Vec<f64>,
    /// Largest entry of the second-moment matrix in standard errors from `I/3`.
    pub second_moment_max_z: f64,
    pub passed: bool,
}

/// For a uniform direction `Var(n_i^2) = 4/45` and `Var(n_i n_j) = 1/15`.
pub fn sphere_uniformity(dirs: &[Vec3]) -> SphereUniformity {
    let n = dirs.len();
    let nf = n.max(1) as f64;
    let mut mean = [0.0; 3];
    let mut m2 = Matrix3::<f64>::zeros();
    for d in dirs {
        for i in 0..3 {
            mean[i] += d[i] / nf;
            for j in 0..3 {
                m2[(i, j)] += d[i] * d[j] / nf;
            }
        }
    }
    let mean_norm = (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]).sqrt();
    let mut zmax: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let z = if i == j {
                (m2[(i, j)] - 1.0 / 3.0) / (4.0 / 45.0 / nf).sqrt()
            } else {
                m2[(i, j)] / (1.0 / 15.0 / nf).sqrt()
            };
            zmax = zmax.max(z.abs());
        }
    }
    let mut eig: Vec<f64> = m2.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    let mean_threshold = 4.0 / nf.sqrt();
    SphereUniformity {
        n,
        mean_norm,
        mean_threshold,
        second_moment_eigenvalues: eig,
        second_moment_max_z: zmax,
        passed: mean_norm <= mean_threshold && zmax <= 5.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeControl {
    pub condition: String,
    pub n: usize,
    pub mean_norm: f64,
    pub mean_threshold: f64,
    /// True when the biased subsample fails the first-moment test.
    pub detected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub t: f64,
    pub povm: SphereUniformity,
    pub postmeasurement: SphereUniformity,
    /// Paths whose first increment has `dW^z > 0`.
    pub control_first_step: NegativeControl,
    /// Paths whose `W^z` over the first `1/gamma` is positive.
    pub control_early_window: NegativeControl,
}

impl IsotropyReport {
    pub fn passed(&self) -> bool {
        self.povm.passed && self.postmeasurement.passed
    }
}

fn control(stats: &EnsembleStats, ci: usize, condition: &str, keep: impl Fn(usize) -> bool) -> NegativeControl {
    let dirs: Vec<Vec3> = (0..stats.n_paths).filter(|&i| keep(i)).map(|i| stats.records[i][ci].n_u).collect();
    let u = sphere_uniformity(&dirs);
    NegativeControl {
        condition: condition.to_string(),
        n: u.n,
        mean_norm: u.mean_norm,
        mean_threshold: u.mean_threshold,
        detected: u.mean_norm > u.mean_threshold,
    }
}

pub fn isotropy_check(stats: &EnsembleStats, t: f64) -> Result<IsotropyReport> {
    let ci = stats.checkpoint_index(t)?;
    let nu: Vec<Vec3> = stats.records.iter().map(|r| r[ci].n_u).collect();
    let nv: Vec<Vec3> = stats.records.iter().map(|r| r[ci].n_v).collect();
    Ok(IsotropyReport {
        t: stats.checkpoint_times[ci],
        povm: sphere_uniformity(&nu),
        postmeasurement: sphere_uniformity(&nv),
        control_first_step: control(stats, ci, "first dW^z > 0", |i| stats.first_dwz[i] > 0.0),
        control_early_window: control(stats, ci, "W^z(1/gamma) > 0", |i| stats.early_wz[i] > 0.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecorrelationTable {
    pub times: Vec<f64>,
    /// `E[n_U(t_i) . n_U(t_j)]`.
    pub u_corr: Vec<Vec<f64>>,
    pub v_corr: Vec<Vec<f64>>,
}

pub fn uv_decorrelation(stats: &EnsembleStats) -> Result<DecorrelationTable> {
    let k = stats.checkpoint_times.len();
    if k < 2 {
        return Err(Error::InvalidConfig("need at least two checkpoints".into()));
    }
    let dot = |a: &Vec3, b: &Vec3| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let n = stats.n_paths as f64;
    let mut u_corr = vec![vec![0.0; k]; k];
    let mut v_corr = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            u_corr[i][j] = stats.records.iter().map(|r| dot(&r[i].n_u, &r[j].n_u)).sum::<f64>() / n;
            v_corr[i][j] = stats.records.iter().map(|r| dot(&r[i].n_v, &r[j].n_v)).sum::<f64>() / n;
        }
    }
    Ok(DecorrelationTable {
        times: stats.checkpoint_times.clone(),
        u_corr,
        v_corr,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularDrift {
    pub t_from: f64,
    pub t_to: f64,
    pub u_mean_angle: f64,
    pub v_mean_angle: f64,
}

impl AngularDrift {
    pub fn ratio(&self) -> f64 {
        self.v_mean_angle / self.u_mean_angle
    }
}

/// Mean angle moved by `n_U` and by `n_V` between two checkpoints.
pub fn angular_drift(stats: &EnsembleStats, t_from: f64, t_to: f64) -> Result<AngularDrift> {
    let (i, j) = (stats.checkpoint_index(t_from)?, stats.checkpoint_index(t_to)?);
    let n = stats.n_paths as f64;
    let ang = |a: &Vec3, b: &Vec3| PovmDirection(*a).angle_to(&PovmDirection(*b));
    Ok(AngularDrift {
        t_from,
        t_to,
        u_mean_angle: stats.records.iter().map(|r| ang(&r[i].n_u, &r[j].n_u)).sum::<f64>() / n,
        v_mean_angle: stats.records.iter().map(|r| ang(&r[i].n_v, &r[j].n_v)).sum::<f64>() / n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub gamma_t: f64,
    /// Radial threshold `gamma T / 2`.
    pub threshold: f64,
    pub n: usize,
    pub empirical: f64,
    pub std_error: f64,
    /// `sqrt(2 / (pi gamma T)) e^{-gamma T / 8}`; absent for `gamma T <= 0`.
    pub bound: Option<f64>,
}

/// Fraction of paths with `a(T) < gamma T / 2`, i.e. purity above `e^{-gamma T}`.
pub fn purity_tail_empirical(stats: &EnsembleStats, gamma_t: f64) -> Result<TailReport> {
    let ci = stats.checkpoint_index(gamma_t / stats.config.gamma)?;
    let threshold = 0.5 * gamma_t;
    let xs = stats.radial_samples(ci);
    let n = xs.len();
    let hits = xs.iter().filter(|&&a| a < threshold).count();
    let p = hits as f64 / n as f64;
    let bound = if gamma_t > 0.0 {
        erfc_bound(gamma_t, (-gamma_t).exp())?.final_bound
    } else {
        None
    };
    Ok(TailReport {
        gamma_t,
        threshold,
        n,
        empirical: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        bound,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckpointSummary {
    pub t: f64,
    pub gamma_t: f64,
    pub moments: Moments,
    pub histogram: RadialHistogram,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleSummary {
    pub config: SimConfig,
    pub n_paths: usize,
    pub checkpoints: Vec<CheckpointSummary>,
}

/// Summary with histograms of bin width `h` reaching `mean + 8 sd`.
pub fn summarize(stats: &EnsembleStats, h: f64) -> EnsembleSummary {
    let checkpoints = (0..stats.checkpoint_times.len())
        .map(|ci| {
            let m = stats.moments(ci);
            let reach = m.mean + 8.0 * m.variance.sqrt() + h;
            let n_bins = (reach / h).ceil().max(1.0) as usize;
            CheckpointSummary {
                t: stats.checkpoint_times[ci],
                gamma_t: stats.checkpoint_times[ci] * stats.config.gamma,
                moments: m,
                histogram: stats.radial_histogram(ci, h, n_bins),
            }
        })
        .collect();
    EnsembleSummary {
        config: stats.config.clone(),
        n_paths: stats.n_paths,
        checkpoints,
    }
}

pub const PATH_COLUMNS: &str = "path,t,a,nu_z,nu_x,nu_y,nv_z,nv_x,nv_y";

pub fn write_paths_csv<W: Write>(out: &mut W, stats: &EnsembleStats, config: &serde_json::Value) -> Result<()> {
    writeln!(out, "# config: {config}")?;
    writeln!(out, "{PATH_COLUMNS}")?;
    for (p, recs) in stats.records.iter().enumerate() {
        for (r, t) in recs.iter().zip(&stats.checkpoint_times) {
            writeln!(
                out,
                "{p},{t},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                r.a, r.n_u[0], r.n_u[1], r.n_u[2], r.n_v[0], r.n_v[1], r.n_v[2]
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fokker_planck::{solve_from_origin, warm_start, RadialGrid};
    use crate::test_oracles::{exact_cell_averages, exact_moments};
    use crate::trajectory::{integrate_kraus, sample_wiener_path};
    use rand::{Rng, SeedableRng};

    fn config(t: f64, dt: f64, seed: u64, checkpoints: Vec<f64>) -> SimConfig {
        SimConfig::new(1.0, dt, t, seed).unwrap().with_checkpoints(checkpoints).unwrap()
    }

    #[test]
    fn single_path_matches_integrate_kraus() {
        let c = config(0.5, 1e-3, 77, vec![0.1, 0.5]);
        let stats = run_ensemble(&c, 1).unwrap();
        let ks = integrate_kraus(&sample_wiener_path(&c).unwrap(), 1.0, &c.checkpoint_times).unwrap();
        for (r, k) in stats.records[0].iter().zip(&ks) {
            assert_eq!(&r.kraus, k.matrix());
        }
    }

    #[test]
    fn results_independent_of_worker_count() {
        let c = config(0.2, 1e-3, 5, vec![0.2]);
        let a = run_ensemble_with_workers(&c, 16, Some(1)).unwrap();
        let b = run_ensemble_with_workers(&c, 16, Some(3)).unwrap();
        assert_eq!(a.radial_samples(0), b.radial_samples(0));
        assert_eq!(a.early_wz, b.early_wz);
    }

    #[test]
    fn resource_guard() {
        let c = config(10.0, 1e-3, 0, vec![10.0]);
        assert!(matches!(run_ensemble(&c, 20_000_000), Err(Error::ResourceLimit(_))));
        assert!(run_ensemble(&c, 0).is_err());
    }

    #[test]
    fn moments_track_exact_law() {
        // the exact radial law replaces the drift-only "+ ln 2" reference
        let c = config(2.0, 2e-3, 2024, vec![2.0]);
        let stats = run_ensemble(&c, 4000).unwrap();
        let m = stats.moments(0);
        let (em, ev) = exact_moments(2.0);
        assert!((m.mean - em).abs() < 4.0 * m.std_error, "{m:?} vs {em}");
        let var_se = ev * (2.0 / (m.n as f64 - 1.0)).sqrt();
        assert!((m.variance - ev).abs() < 4.0 * var_se, "{} vs {ev}", m.variance);
    }

    #[test]
    fn histogram_self_consistency() {
        // samples drawn from the FP law by inverse CDF land within binning noise
        let grid = RadialGrid::for_run(2.0, 0.01).unwrap();
        let fp = solve_from_origin(1.0, 2.0, &grid, 0.0025).unwrap();
        let h = grid.h();
        let cdf: Vec<f64> = fp
            .values
            .iter()
            .scan(0.0, |s, p| {
                *s += p * h;
                Some(*s)
            })
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = 50_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                let i = cdf.partition_point(|&c| c < u);
                (i as f64 + rng.random::<f64>()) * h
            })
            .collect();
        let cmp = histogram_l1(&samples, &fp).unwrap();
        // expected noise L1 ~ 1.8 sqrt(sigma / (w N))
        let sigma = fp.variance().sqrt();
        let noise = 1.8 * (sigma / (cmp.bin_width * n as f64)).sqrt();
        assert!(cmp.l1 < 2.0 * noise, "{cmp:?} vs noise {noise}");
        assert!(cmp.rebin > 1);
    }

    #[test]
    fn histogram_mass_is_one() {
        let xs = [0.1, 0.5, 0.55, 3.0, 7.0];
        let h = RadialHistogram::from_samples(&xs, 0.25, 8);
        assert!((h.mass() - 1.0).abs() < 1e-15);
        assert!((h.overflow - 0.4).abs() < 1e-15);
    }

    #[test]
    fn histogram_vs_fp_small_time_and_mismatch() {
        let c = config(0.02, 1e-4, 31, vec![0.02]);
        let stats = run_ensemble(&c, 20_000).unwrap();
        let grid = RadialGrid::for_run(0.02, 0.01).unwrap();
        let chi3 = warm_start(1.0, 0.02, &grid).unwrap();
        let cmp = histogram_vs_fp(&stats, &chi3).unwrap();
        assert!(cmp.l1 <= 0.05, "{cmp:?}");
        let other = warm_start(1.0, 0.03, &grid).unwrap();
        assert!(matches!(histogram_vs_fp(&stats, &other), Err(Error::TimeMismatch { .. })));
    }

    #[test]
    fn histogram_vs_fp_against_exact_law() {
        let c = config(2.0, 2e-3, 8, vec![2.0]);
        let stats = run_ensemble(&c, 10_000).unwrap();
        let grid = RadialGrid::for_run(2.0, 0.01).unwrap();
        let mut exact = solve_from_origin(1.0, 2.0, &grid, 0.0025).unwrap();
        exact.values = exact_cell_averages(2.0, grid.h(), grid.n_cells);
        assert!(histogram_vs_fp(&stats, &exact).unwrap().l1 <= 0.05);
    }

    #[test]
    fn jackknife_matches_plain_error_for_iid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let (m, se) = jackknife_mean(&xs, 20);
        let plain = Moments::of(&xs).std_error;
        assert!((m - 0.5).abs() < 5.0 * plain);
        assert!((se / plain - 1.0).abs() < 0.5, "{se} vs {plain}");
    }

    #[test]
    fn completeness_at_zero_time_is_exact() {
        let c = config(0.0, 1e-3, 0, vec![0.0]);
        let stats = run_ensemble(&c, 10).unwrap();
        let r = completeness_check(&stats, &SpinRep::defining(), 1.0, 0.0, 0.05).unwrap();
        assert!(r.max_deviation < 1e-14);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn completeness_spin_half_and_one() {
        let c = config(0.5, 1e-3, 404, vec![0.5]);
        let stats = run_ensemble(&c, 20_000).unwrap();
        for j in [0.5, 1.0] {
            let r = completeness_check(&stats, &SpinRep::new(j).unwrap(), 1.0, 0.5, 0.05).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
            assert!(r.rel_std < 0.05);
        }
        assert!(completeness_check(&stats, &SpinRep::new(2.0).unwrap(), 1.0, 0.5, 0.05).is_err());
    }

    #[test]
    fn uniformity_of_exact_sphere_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let dirs: Vec<Vec3> = (0..10_000)
            .map(|_| {
                let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
                let p: f64 = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                let s = (1.0 - z * z).sqrt();
                [z, s * p.cos(), s * p.sin()]
            })
            .collect();
        let u = sphere_uniformity(&dirs);
        assert!(u.passed, "{u:?}");
        assert!(u.second_moment_eigenvalues.iter().all(|e| (e - 1.0 / 3.0).abs() < 0.02));
        let biased: Vec<Vec3> = dirs.iter().filter(|d| d[Z] > -0.5).copied().collect();
        assert!(!sphere_uniformity(&biased).passed);
    }

    #[test]
    fn isotropy_and_controls() {
        let c = config(3.0, 5e-3, 55, vec![3.0]);
        let stats = run_ensemble(&c, 4000).unwrap();
        let r = isotropy_check(&stats, 3.0).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.control_early_window.detected, "{:?}", r.control_early_window);
    }

    #[test]
    fn decorrelation_diagonal_and_freeze() {
        let c = config(8.0, 5e-3, 21, vec![4.0, 8.0]);
        let stats = run_ensemble(&c, 500).unwrap();
        let t = uv_decorrelation(&stats).unwrap();
        for i in 0..2 {
            assert!((t.u_corr[i][i] - 1.0).abs() < 1e-12);
            assert!((t.v_corr[i][i] - 1.0).abs() < 1e-12);
        }
        let d = angular_drift(&stats, 4.0, 8.0).unwrap();
        assert!(d.u_mean_angle <= 0.1, "{d:?}");
        assert!(d.ratio() >= 10.0, "{d:?}");
        let single = config(1.0, 1e-2, 1, vec![1.0]);
        assert!(uv_decorrelation(&run_ensemble(&single, 2).unwrap()).is_err());
    }

    #[test]
    fn tail_at_zero_and_bound_value() {
        let c = config(8.0, 5e-3, 3, vec![0.0, 8.0]);
        let stats = run_ensemble(&c, 200).unwrap();
        let zero = purity_tail_empirical(&stats, 0.0).unwrap();
        assert_eq!(zero.empirical, 0.0);
        let r = purity_tail_empirical(&stats, 8.0).unwrap();
        assert!((r.bound.unwrap() - 0.1038).abs() < 1e-4);
        assert!(r.empirical <= r.bound.unwrap());
    }

    #[test]
    fn coupled_route_agrees_with_fp() {
        let c = config(1.0, 1e-3, 17, vec![1.0]);
        let samples = coupled_radial_samples(&c, 3000, CoupledScheme::EulerMaruyama).unwrap();
        let grid = RadialGrid::for_run(1.0, 0.01).unwrap();
        let fp = solve_from_origin(1.0, 1.0, &grid, 0.0025).unwrap();
        let l1 = histogram_l1(&samples[0], &fp).unwrap().l1;
        assert!(l1 <= 0.08, "{l1}");
    }

    #[test]
    fn summary_serializes() {
        let c = config(0.5, 1e-3, 1, vec![0.25, 0.5]);
        let stats = run_ensemble(&c, 50).unwrap();
        let s = summarize(&stats, 0.05);
        for cp in &s.checkpoints {
            assert!((cp.histogram.mass() - 1.0).abs() < 1e-12);
        }
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["config"]["T"], 0.5);
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &stats, &json["config"]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2 + 100);
    }
}
