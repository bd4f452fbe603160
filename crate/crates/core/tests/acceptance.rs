//! Acceptance suite: one line per criterion, judged against the thresholds
//! pinned below. Set `ACCEPTANCE_ONLY=1,5,7` to run a subset.

use std::process::ExitCode;

use scs_collapse::povm_stats::Verdict;
use scs_collapse::verify::{run_criterion, CriterionOutcome, VerifyOptions, CRITERIA};

const LN2: f64 = std::f64::consts::LN_2;

const C1_MEAN: (f64, f64) = (6.0 + LN2 - 0.1, 6.0 + LN2 + 0.1);
const C1_VAR: (f64, f64) = (5.1, 6.9);
const C2_BOUND_8: f64 = 0.1038;
const C2_BOUND_16: f64 = 0.0270;
const C3_L1: f64 = 0.05;
const C4_DEVIATION: f64 = 0.05;
const C4_REL_STD: f64 = 0.05;
const C5_MEDIAN_DELTA_A: f64 = 0.05;
const C5_MEDIAN_ANGLE: f64 = 0.05;
const C5_HALVING: f64 = std::f64::consts::SQRT_2;
const C6_RESOLUTION: f64 = 1e-10;
const C6_NEGATIVE: f64 = 1e-3;
const C7_RESIDUAL: f64 = 1e-10;
const C8_DEVIATION: f64 = 0.02;
const C9_U_DRIFT: f64 = 0.1;
const C9_RATIO: f64 = 10.0;
const C10_SIGMAS: f64 = 4.0;
const C11_RELATIVE: f64 = 0.05;

fn inside(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

/// Verdict from the pinned thresholds; `None` when the measurement is
/// statistically underpowered.
fn judge(o: &CriterionOutcome) -> Option<bool> {
    let v = |k: &str| o.value(k);
    Some(match o.id {
        1 => inside(v("mean_a"), C1_MEAN) && inside(v("var_a"), C1_VAR),
        2 => v("prob_8") <= C2_BOUND_8 && v("prob_16") <= C2_BOUND_16,
        3 => [v("l1_0.02"), v("l1_2"), v("l1_5")].iter().all(|&l| l <= C3_L1),
        4 => {
            let rel = v("rel_std_j_half").max(v("rel_std_j_one"));
            if !(rel <= C4_REL_STD) {
                return None;
            }
            v("deviation_j_half") <= C4_DEVIATION && v("deviation_j_one") <= C4_DEVIATION
        }
        5 => {
            v("median_delta_a") <= C5_MEDIAN_DELTA_A
                && v("median_povm_angle") <= C5_MEDIAN_ANGLE
                && v("halving_ratio_delta_a") >= C5_HALVING
                && v("halving_ratio_angle") >= C5_HALVING
        }
        6 => v("max_deviation") <= C6_RESOLUTION && v("negative_control_deviation") > C6_NEGATIVE,
        7 => v("max_residual") <= C7_RESIDUAL,
        8 => v("max_deviation") <= C8_DEVIATION,
        9 => v("u_mean_angle") <= C9_U_DRIFT && v("ratio") >= C9_RATIO,
        10 => v("max_error_in_std_errors") <= C10_SIGMAS && v("max_std_error_over_cap") <= 1.0,
        11 => v("relative_error") <= C11_RELATIVE,
        _ => false,
    })
}

fn selected() -> Vec<u8> {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(s) if !s.trim().is_empty() => s.split(',').filter_map(|x| x.trim().parse().ok()).collect(),
        _ => CRITERIA.to_vec(),
    }
}

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let mut failed = 0;
    for id in selected() {
        let line = match run_criterion(id, &opts) {
            Ok(o) => {
                let verdict = match judge(&o) {
                    Some(true) => Verdict::Pass,
                    Some(false) => Verdict::Fail,
                    None => Verdict::Inconclusive,
                };
                if verdict != o.verdict {
                    failed += 1;
                    format!("[FAIL] criterion {id:>2}: pinned verdict {verdict:?} disagrees with library verdict {:?}", o.verdict)
                } else {
                    if verdict == Verdict::Fail {
                        failed += 1;
                    }
                    o.line()
                }
            }
            Err(e) => {
                failed += 1;
                format!("[FAIL] criterion {id:>2}: error {e}")
            }
        };
        println!("{line}");
    }
    println!("acceptance: {failed} criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
