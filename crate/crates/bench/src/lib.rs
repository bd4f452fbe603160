//! Fixtures shared by the kernel benchmarks.

use scs_collapse::algebra::Vec3;
use scs_collapse::fokker_planck::{warm_start, RadialDistribution, RadialGrid};
use scs_collapse::trajectory::{integrate_kraus, sample_wiener_path, KrausPoint, SimConfig, WienerStream};

/// `n` seeded Wiener increments at step `dt`.
pub fn increments(n: usize, dt: f64, seed: u64) -> Vec<Vec3> {
    let mut s = WienerStream::new(seed, dt);
    (0..n).map(|_| s.next_increment()).collect()
}

/// A generic Kraus point reached after `gamma t = 2`.
pub fn typical_kraus() -> KrausPoint {
    let cfg = SimConfig::new(1.0, 1e-3, 2.0, 11).expect("valid config");
    let path = sample_wiener_path(&cfg).expect("path");
    integrate_kraus(&path, cfg.gamma, &[2.0]).expect("integrates")[0]
}

/// Warm-started radial density on the grid used for a `gamma T = 5` run.
pub fn fp_start(h: f64) -> RadialDistribution {
    let grid = RadialGrid::for_run(5.0, h).expect("valid grid");
    warm_start(1.0, 0.01, &grid).expect("warm start")
}
