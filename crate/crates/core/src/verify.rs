//! The acceptance criteria as runnable experiments with machine-readable outcomes.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::algebra::{SpinRep, Vec3};
use crate::coherent::{
    estimate_k_local, product_expectation, sample_product_q, scs_povm_resolution, scs_state, SphereDirection,
    SphereQuadrature,
};
use crate::coupled_sde::{cross_validate, CoupledScheme};
use crate::error::{Error, Result};
use crate::fokker_planck::{solve_from_origin, trace_identity_converged, warm_start, RadialGrid};
use crate::geometry::identity_suite;
use crate::povm_stats::{
    angular_drift, completeness_check, histogram_vs_fp, purity_tail_empirical, run_ensemble_with_workers, Verdict,
};
use crate::trajectory::{path_seed, sample_wiener_path, single_observable_superop_check, SimConfig};

pub const CRITERIA: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

/// Thresholds, addressable by name for overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances(pub BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        let ln2 = std::f64::consts::LN_2;
        let pairs = [
            ("c1_mean_lo", 6.0 + ln2 - 0.1),
            ("c1_mean_hi", 6.0 + ln2 + 0.1),
            ("c1_var_lo", 5.1),
            ("c1_var_hi", 6.9),
            ("c2_bound_8", 0.1038),
            ("c2_bound_16", 0.0270),
            ("c3_l1", 0.05),
            ("c4_deviation", 0.05),
            ("c4_rel_std", 0.05),
            ("c5_median_delta_a", 0.05),
            ("c5_median_angle", 0.05),
            ("c5_halving_ratio", std::f64::consts::SQRT_2),
            ("c6_resolution", 1e-10),
            ("c6_negative_control", 1e-3),
            ("c7_residual", 1e-10),
            ("c8_deviation", 0.02),
            ("c9_u_drift", 0.1),
            ("c9_ratio", 10.0),
            ("c10_sigmas", 4.0),
            ("c11_relative_error", 0.05),
        ];
        Self(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match self.0.get_mut(name) {
            Some(v) if value.is_finite() => {
                *v = value;
                Ok(())
            }
            Some(_) => Err(Error::InvalidConfig(format!("tolerance {name} must be finite"))),
            None => Err(Error::InvalidConfig(format!("unknown tolerance {name}"))),
        }
    }
}

/// `Full` uses the stated sample counts; `Quick` divides them for smoke runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Full,
    Quick,
}

impl Scale {
    fn n(self, full: usize, quick: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub scale: Scale,
    pub seed: u64,
    pub tolerances: Tolerances,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            scale: Scale::Full,
            seed: 2024,
            tolerances: Tolerances::default(),
            workers: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub verdict: Verdict,
    pub measured: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn value(&self, key: &str) -> f64 {
        self.measured.get(key).copied().unwrap_or(f64::NAN)
    }

    /// One human-readable line.
    pub fn line(&self) -> String {
        let v = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        let m: Vec<String> = self
            .measured
            .iter()
            .map(|(k, x)| {
                if *x != 0.0 && x.abs() < 1e-3 {
                    format!("{k}={x:.3e}")
                } else {
                    format!("{k}={x:.6}")
                }
            })
            .collect();
        format!("[{v}] criterion {:>2} {}: {} ({:.1}s)", self.id, self.name, m.join(" "), self.seconds)
    }
}

struct Builder {
    measured: BTreeMap<String, f64>,
    thresholds: BTreeMap<String, f64>,
}

impl Builder {
    fn new() -> Self {
        Self {
            measured: BTreeMap::new(),
            thresholds: BTreeMap::new(),
        }
    }

    fn m(&mut self, k: &str, v: f64) {
        self.measured.insert(k.into(), v);
    }

    fn t(&mut self, tol: &Tolerances, k: &str) -> f64 {
        let v = tol.get(k);
        self.thresholds.insert(k.into(), v);
        v
    }
}

fn criterion_seed(master: u64, id: u8) -> u64 {
    master.wrapping_add(1_000_003 * id as u64)
}

fn name_of(id: u8) -> &'static str {
    match id {
        1 => "ballistic mean and diffusive variance",
        2 => "exponential collapse bound",
        3 => "Fokker-Planck and trajectory agreement",
        4 => "POVM completeness",
        5 => "cross-integrator validation",
        6 => "SCS POVM resolution",
        7 => "algebra and geometry identities",
        8 => "superoperator oracle",
        9 => "freeze-out and wander",
        10 => "multiqubit tomography",
        11 => "trace identity",
        _ => "unknown",
    }
}

pub fn run_criterion(id: u8, opts: &VerifyOptions) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let seed = criterion_seed(opts.seed, id);
    let tol = &opts.tolerances;
    let s = opts.scale;
    let mut b = Builder::new();
    let verdict = match id {
        1 => {
            let c = SimConfig::new(1.0, 1e-3, 6.0, seed)?;
            let st = run_ensemble_with_workers(&c, s.n(20_000, 2_000), opts.workers)?;
            let m = st.moments(0);
            b.m("mean_a", m.mean);
            b.m("var_a", m.variance);
            b.m("std_error_mean", m.std_error);
            b.m("n_paths", m.n as f64);
            let (lo, hi) = (b.t(tol, "c1_mean_lo"), b.t(tol, "c1_mean_hi"));
            let (vlo, vhi) = (b.t(tol, "c1_var_lo"), b.t(tol, "c1_var_hi"));
            Verdict::from_bool((lo..=hi).contains(&m.mean) && (vlo..=vhi).contains(&m.variance))
        }
        2 => {
            let c = SimConfig::new(1.0, 1e-3, 16.0, seed)?.with_checkpoints(vec![8.0, 16.0])?;
            let st = run_ensemble_with_workers(&c, s.n(100_000, 10_000), opts.workers)?;
            let r8 = purity_tail_empirical(&st, 8.0)?;
            let r16 = purity_tail_empirical(&st, 16.0)?;
            b.m("prob_8", r8.empirical);
            b.m("prob_16", r16.empirical);
            b.m("formula_8", r8.bound.unwrap_or(f64::NAN));
            b.m("formula_16", r16.bound.unwrap_or(f64::NAN));
            b.m("n_paths", r8.n as f64);
            let (b8, b16) = (b.t(tol, "c2_bound_8"), b.t(tol, "c2_bound_16"));
            Verdict::from_bool(r8.empirical <= b8 && r16.empirical <= b16)
        }
        3 => {
            let n = s.n(50_000, 5_000);
            let h = 0.01;
            let early = SimConfig::new(1.0, 1e-4, 0.02, seed)?;
            let st_early = run_ensemble_with_workers(&early, n, opts.workers)?;
            let chi3 = warm_start(1.0, 0.02, &RadialGrid::for_run(0.02, h)?)?;
            let l_early = histogram_vs_fp(&st_early, &chi3)?.l1;
            let late = SimConfig::new(1.0, 1e-3, 5.0, seed ^ 1)?.with_checkpoints(vec![2.0, 5.0])?;
            let st_late = run_ensemble_with_workers(&late, n, opts.workers)?;
            let mut worst = l_early;
            b.m("l1_0.02", l_early);
            for t in [2.0, 5.0] {
                let fp = solve_from_origin(1.0, t, &RadialGrid::for_run(t, h)?, 0.25 * h)?;
                let l = histogram_vs_fp(&st_late, &fp)?.l1;
                b.m(&format!("l1_{t}"), l);
                worst = worst.max(l);
            }
            b.m("n_paths", n as f64);
            Verdict::from_bool(worst <= b.t(tol, "c3_l1"))
        }
        4 => {
            let c = SimConfig::new(1.0, 1e-3, 0.5, seed)?;
            let st = run_ensemble_with_workers(&c, s.n(100_000, 10_000), opts.workers)?;
            let dev_tol = b.t(tol, "c4_deviation");
            let rel_tol = b.t(tol, "c4_rel_std");
            let mut verdicts = Vec::new();
            for (label, j) in [("half", 0.5), ("one", 1.0)] {
                let r = completeness_check(&st, &SpinRep::new(j)?, 1.0, 0.5, dev_tol)?;
                b.m(&format!("deviation_j_{label}"), r.max_deviation);
                b.m(&format!("rel_std_j_{label}"), r.rel_std);
                verdicts.push(match r.verdict {
                    Verdict::Pass if r.rel_std > rel_tol => Verdict::Inconclusive,
                    v => v,
                });
            }
            b.m("n_paths", st.n_paths as f64);
            combine(&verdicts)
        }
        5 => {
            let n = s.n(100, 20);
            let mut da = Vec::with_capacity(n);
            let mut ang = Vec::with_capacity(n);
            let (mut coarse_a, mut fine_a, mut coarse_ang, mut fine_ang) = (0.0, 0.0, 0.0, 0.0);
            let (mut em_coarse, mut em_fine) = (0.0, 0.0);
            for i in 0..n {
                let c = SimConfig::new(1.0, 1e-4, 3.0, path_seed(seed, i as u64))?;
                let path = sample_wiener_path(&c)?;
                let r = cross_validate(CoupledScheme::SecondOrder, &path, 0.3, 1.0, &[3.0])?;
                let last = *r.deviations.last().expect("final deviation");
                da.push(last.delta_a);
                ang.push(last.povm_angle);
                coarse_a += last.delta_a;
                fine_a += r.refined_final.delta_a;
                coarse_ang += last.povm_angle;
                fine_ang += r.refined_final.povm_angle;
                let em = cross_validate(CoupledScheme::EulerMaruyama, &path, 0.3, 1.0, &[3.0])?;
                em_coarse += em.deviations.last().expect("final deviation").delta_a;
                em_fine += em.refined_final.delta_a;
            }
            let med_a = median(&mut da);
            let med_ang = median(&mut ang);
            let ratio_a = coarse_a / fine_a;
            let ratio_ang = coarse_ang / fine_ang;
            b.m("median_delta_a", med_a);
            b.m("median_povm_angle", med_ang);
            b.m("halving_ratio_delta_a", ratio_a);
            b.m("halving_ratio_angle", ratio_ang);
            b.m("euler_maruyama_halving_ratio_delta_a", em_coarse / em_fine);
            b.m("n_paths", n as f64);
            let ok = med_a <= b.t(tol, "c5_median_delta_a")
                && med_ang <= b.t(tol, "c5_median_angle")
                && ratio_a >= b.t(tol, "c5_halving_ratio")
                && ratio_ang >= tol.get("c5_halving_ratio");
            Verdict::from_bool(ok)
        }
        6 => {
            let mut worst: f64 = 0.0;
            for two_j in 1..=10u32 {
                let rep = SpinRep::from_twice_j(two_j)?;
                worst = worst.max(scs_povm_resolution(&rep, &SphereQuadrature::product(two_j))?);
            }
            let neg = scs_povm_resolution(&SpinRep::new(3.0)?, &SphereQuadrature::product(2))?;
            b.m("max_deviation", worst);
            b.m("negative_control_deviation", neg);
            Verdict::from_bool(worst <= b.t(tol, "c6_resolution") && neg > b.t(tol, "c6_negative_control"))
        }
        7 => {
            let r = identity_suite(10)?;
            b.m("max_residual", r.max_residual());
            b.m("identities_checked", r.rows.len() as f64);
            Verdict::from_bool(r.max_residual() <= b.t(tol, "c7_residual"))
        }
        8 => {
            let rep = SpinRep::new(1.0)?;
            let psi = scs_state(&rep, &SphereDirection::new(std::f64::consts::FRAC_PI_2, 0.0)?)?;
            let rho = &psi * psi.adjoint();
            let dev = single_observable_superop_check(&rep, 1.0, 0.5, &rho, s.n(100_000, 10_000), seed)?;
            b.m("max_deviation", dev);
            Verdict::from_bool(dev <= b.t(tol, "c8_deviation"))
        }
        9 => {
            let c = SimConfig::new(1.0, 1e-3, 8.0, seed)?.with_checkpoints(vec![4.0, 8.0])?;
            let st = run_ensemble_with_workers(&c, s.n(10_000, 1_000), opts.workers)?;
            let d = angular_drift(&st, 4.0, 8.0)?;
            b.m("u_mean_angle", d.u_mean_angle);
            b.m("v_mean_angle", d.v_mean_angle);
            b.m("ratio", d.ratio());
            Verdict::from_bool(d.u_mean_angle <= b.t(tol, "c9_u_drift") && d.ratio() >= b.t(tol, "c9_ratio"))
        }
        10 => {
            let bloch: [Vec3; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.6, -0.48, 0.64]];
            let n = s.n(100_000, 10_000);
            let samples = sample_product_q(&bloch, n, seed)?;
            let sigmas = b.t(tol, "c10_sigmas");
            let (mut worst_z, mut worst_se_ratio): (f64, f64) = (0.0, 0.0);
            let mut ok = true;
            for code in 0..64u8 {
                let string = [code / 16, (code / 4) % 4, code % 4];
                let e = estimate_k_local(&samples, &string)?;
                let truth = product_expectation(&bloch, &string)?;
                let err = (e.estimate - truth).abs();
                let z = if e.std_error > 0.0 { err / e.std_error } else if err == 0.0 { 0.0 } else { f64::INFINITY };
                let cap = 3f64.powi(e.locality() as i32) / (n as f64).sqrt();
                worst_z = worst_z.max(z);
                worst_se_ratio = worst_se_ratio.max(e.std_error / cap);
                ok &= z <= sigmas && e.std_error <= cap;
            }
            b.m("max_error_in_std_errors", worst_z);
            b.m("max_std_error_over_cap", worst_se_ratio);
            b.m("n_samples", n as f64);
            Verdict::from_bool(ok)
        }
        11 => {
            let (r, a_max) = trace_identity_converged(1.0, 0.5, 1, 0.01)?;
            b.m("relative_error", r.relative_error);
            b.m("lhs", r.lhs);
            b.m("rhs", r.rhs);
            b.m("a_max", a_max);
            Verdict::from_bool(r.relative_error <= b.t(tol, "c11_relative_error"))
        }
        _ => return Err(Error::InvalidConfig(format!("no criterion {id}"))),
    };
    Ok(CriterionOutcome {
        id,
        name: name_of(id).to_string(),
        verdict,
        measured: b.measured,
        thresholds: b.thresholds,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn combine(vs: &[Verdict]) -> Verdict {
    if vs.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if vs.contains(&Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub outcomes: Vec<CriterionOutcome>,
    pub overall: Verdict,
}

/// Run the selected criteria in order. An error inside one criterion is
/// reported as its failure rather than aborting the others.
pub fn run_all(ids: &[u8], opts: &VerifyOptions) -> VerifyReport {
    let outcomes: Vec<CriterionOutcome> = ids
        .iter()
        .map(|&id| {
            run_criterion(id, opts).unwrap_or_else(|e| {
                let mut measured = BTreeMap::new();
                measured.insert("error".to_string(), f64::NAN);
                CriterionOutcome {
                    id,
                    name: format!("{} (error: {e})", name_of(id)),
                    verdict: Verdict::Fail,
                    measured,
                    thresholds: BTreeMap::new(),
                    seconds: 0.0,
                }
            })
        })
        .collect();
    let overall = combine(&outcomes.iter().map(|o| o.verdict).collect::<Vec<_>>());
    VerifyReport {
        options: opts.clone(),
        outcomes,
        overall,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            scale: Scale::Quick,
            ..Default::default()
        }
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.set("c3_l1", 0.1).unwrap();
        assert_eq!(t.get("c3_l1"), 0.1);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("c3_l1", f64::NAN).is_err());
        assert!((Tolerances::default().get("c5_halving_ratio") - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cheap_criteria_pass() {
        for id in [6, 7, 11] {
            let o = run_criterion(id, &quick()).unwrap();
            assert_eq!(o.verdict, Verdict::Pass, "{}", o.line());
        }
    }

    #[test]
    fn tomography_quick() {
        let o = run_criterion(10, &quick()).unwrap();
        assert_eq!(o.verdict, Verdict::Pass, "{}", o.line());
    }

    #[test]
    fn unknown_criterion_is_reported() {
        assert!(run_criterion(12, &quick()).is_err());
        let r = run_all(&[12], &quick());
        assert_eq!(r.overall, Verdict::Fail);
    }

    #[test]
    fn combine_order() {
        assert_eq!(combine(&[Verdict::Pass, Verdict::Inconclusive]), Verdict::Inconclusive);
        assert_eq!(combine(&[Verdict::Inconclusive, Verdict::Fail]), Verdict::Fail);
        assert_eq!(combine(&[Verdict::Pass]), Verdict::Pass);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn outcome_line_mentions_verdict() {
        let o = run_criterion(7, &quick()).unwrap();
        let line = o.line();
        assert!(line.starts_with("[PASS] criterion  7"));
        let json = serde_json::to_value(&o).unwrap();
        assert_eq!(json["verdict"], "pass");
    }
}
