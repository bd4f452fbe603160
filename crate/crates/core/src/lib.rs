//! Continuous isotropic measurement of a spin: Kraus trajectories on SL(2,C),
//! Cartan coordinates, the radial Fokker-Planck law, spin-coherent-state
//! tooling and the acceptance checks built on them.

pub mod algebra;
pub mod cartan;
pub mod coherent;
pub mod coupled_sde;
pub mod error;
pub mod fokker_planck;
pub mod geometry;
pub mod povm_stats;
pub mod trajectory;
pub mod verify;

pub use algebra::{ComplexMatrix, Mat2, SpinRep, Vec3};
pub use cartan::{cartan_decompose, CartanForm, PovmDirection};
pub use coherent::{SphereDirection, TomographyEstimate};
pub use error::{Error, Result};
pub use fokker_planck::{RadialDistribution, RadialGrid};
pub use povm_stats::{EnsembleStats, Verdict};
pub use trajectory::{KrausIntegrator, KrausPoint, SimConfig, WienerPath, WienerStream};
pub use verify::{CriterionOutcome, Tolerances, VerifyOptions, VerifyReport};

#[cfg(test)]
mod test_oracles;
