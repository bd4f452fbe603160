//! Spin coherent states, their POVM resolution of the identity, Husimi
//! Q-functions, and the product-state Q-sampling tomography estimator.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{mat_exp, max_abs, ComplexMatrix, SpinRep, Vec3, X, Y, Z};
use crate::error::{Error, Result};

/// Direction on the unit sphere in polar coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphereDirection {
    pub theta: f64,
    pub phi: f64,
}

impl SphereDirection {
    /// `phi` is reduced into `[0, 2 pi)`; `theta` must lie in `[0, pi]`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::Domain(format!("theta = {theta} outside [0, pi]")));
        }
        let mut phi = phi.rem_euclid(2.0 * PI);
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        Ok(Self { theta, phi })
    }

    pub fn from_vector(v: &Vec3) -> Result<Self> {
        let r = (v[Z] * v[Z] + v[X] * v[X] + v[Y] * v[Y]).sqrt();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain("zero or non-finite direction".into()));
        }
        let theta = (v[Z] / r).clamp(-1.0, 1.0).acos();
        Self::new(theta, v[Y].atan2(v[X]))
    }

    /// Unit vector in `(z, x, y)` order.
    pub fn unit_vector(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [ct, st * cp, st * sp]
    }
}

/// Product rule on the sphere with weights summing to 1 (uniform measure).
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    pub nodes: Vec<SphereDirection>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // after the loop p1 = P_n(z), p0 = P_{n-1}(z)
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

impl SphereQuadrature {
    /// Gauss-Legendre in `cos theta` with `ceil((L+1)/2)` nodes times a uniform
    /// trapezoid in `phi` with `L+1` nodes; exact for spherical harmonics of degree `<= L`.
    pub fn product(degree: u32) -> Self {
        let n_theta = (degree as usize + 2) / 2;
        let n_phi = degree as usize + 1;
        let (x, w) = gauss_legendre(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (xi, wi) in x.iter().zip(&w) {
            let theta = xi.clamp(-1.0, 1.0).acos();
            for k in 0..n_phi {
                let phi = 2.0 * PI * k as f64 / n_phi as f64;
                nodes.push(SphereDirection { theta, phi });
                weights.push(0.5 * wi / n_phi as f64);
            }
        }
        Self { nodes, weights, degree }
    }

    pub fn integrate(&self, f: impl Fn(&SphereDirection) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(n)).sum()
    }
}

/// `D(n) = exp(-i theta (J_y cos phi - J_x sin phi))`.
pub fn displacement(rep: &SpinRep, n: &SphereDirection) -> Result<ComplexMatrix> {
    let (sp, cp) = n.phi.sin_cos();
    let gen = (rep.jy() * Complex64::new(cp, 0.0) - rep.jx() * Complex64::new(sp, 0.0))
        * Complex64::new(0.0, -n.theta);
    mat_exp(&gen)
}

/// `|j, n> = D(n) |j, z>`.
pub fn scs_state(rep: &SpinRep, n: &SphereDirection) -> Result<DVector<Complex64>> {
    Ok(displacement(rep, n)?.column(0).into_owned())
}

/// `(2j+1) sum_k w_k |n_k><n_k|` minus the identity, max entry.
pub fn scs_povm_resolution(rep: &SpinRep, quad: &SphereQuadrature) -> Result<f64> {
    let d = rep.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for (n, &w) in quad.nodes.iter().zip(&quad.weights) {
        let psi = scs_state(rep, n)?;
        acc += &psi * psi.adjoint() * Complex64::new(w * d as f64, 0.0);
    }
    Ok(max_abs(&(acc - rep.identity())))
}

fn check_hermitian(rho: &ComplexMatrix, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::InvalidDensityMatrix(format!(
            "expected {dim}x{dim}, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let herm = max_abs(&(rho - rho.adjoint()));
    if !(herm <= 1e-10) {
        return Err(Error::InvalidDensityMatrix(format!("not Hermitian ({herm:.2e})")));
    }
    Ok(())
}

/// `Q(n) = (2j+1) <j,n| rho |j,n>`.
pub fn q_function(rep: &SpinRep, rho: &ComplexMatrix, n: &SphereDirection) -> Result<f64> {
    check_hermitian(rho, rep.dim())?;
    let psi = scs_state(rep, n)?;
    let v = (psi.adjoint() * rho * &psi)[(0, 0)];
    Ok(rep.dim() as f64 * v.re)
}

/// `int Q dmu` by quadrature.
pub fn q_integral(rep: &SpinRep, rho: &ComplexMatrix, quad: &SphereQuadrature) -> Result<f64> {
    check_hermitian(rho, rep.dim())?;
    let mut acc = 0.0;
    for (n, &w) in quad.nodes.iter().zip(&quad.weights) {
        acc += w * q_function(rep, rho, n)?;
    }
    Ok(acc)
}

fn orthonormal_frame(m: &Vec3) -> (Vec3, Vec3) {
    // any unit vector not parallel to m, then Gram-Schmidt
    let seed: Vec3 = if m[Z].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d: f64 = (0..3).map(|i| seed[i] * m[i]).sum();
    let mut e1 = [seed[0] - d * m[0], seed[1] - d * m[1], seed[2] - d * m[2]];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|x| *x /= n1);
    // e2 = m x e1 with (z, x, y) cyclic order
    let e2 = [
        m[1] * e1[2] - m[2] * e1[1],
        m[2] * e1[0] - m[0] * e1[2],
        m[0] * e1[1] - m[1] * e1[0],
    ];
    (e1, e2)
}

/// Direction with `cos Theta = 2 sqrt(u) - 1` against `m` and azimuth `2 pi v`.
pub fn q_sample_from_uniforms(m: &Vec3, u: f64, v: f64) -> Vec3 {
    let c = 2.0 * u.sqrt() - 1.0;
    let s = (1.0 - c * c).max(0.0).sqrt();
    let (e1, e2) = orthonormal_frame(m);
    let (sa, ca) = (2.0 * PI * v).sin_cos();
    [0, 1, 2].map(|i| c * m[i] + s * (ca * e1[i] + sa * e2[i]))
}

fn check_bloch(m: &Vec3) -> Result<()> {
    let r = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    if !((r - 1.0).abs() <= 1e-9) {
        return Err(Error::InvalidBloch(r));
    }
    Ok(())
}

/// `samples[s][q]` is the direction drawn for qubit `q` in sample `s`.
pub fn sample_product_q(bloch: &[Vec3], n_samples: usize, seed: u64) -> Result<Vec<Vec<SphereDirection>>> {
    for m in bloch {
        check_bloch(m)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut tuple = Vec::with_capacity(bloch.len());
        for m in bloch {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            tuple.push(SphereDirection::from_vector(&q_sample_from_uniforms(m, u, v))?);
        }
        out.push(tuple);
    }
    Ok(out)
}

/// Per-qubit P-function factor: `Y_0 = 1`, `Y_1 = 3 n_x`, `Y_2 = 3 n_y`, `Y_3 = 3 n_z`.
pub fn y_factor(mu: u8, n: &SphereDirection) -> Result<f64> {
    let v = n.unit_vector();
    match mu {
        0 => Ok(1.0),
        1 => Ok(3.0 * v[X]),
        2 => Ok(3.0 * v[Y]),
        3 => Ok(3.0 * v[Z]),
        _ => Err(Error::Domain(format!("Pauli index {mu} not in 0..=3"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomographyEstimate {
    pub string: Vec<u8>,
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
}

impl TomographyEstimate {
    pub fn locality(&self) -> usize {
        self.string.iter().filter(|&&m| m != 0).count()
    }
}

pub fn estimate_k_local(samples: &[Vec<SphereDirection>], pauli_string: &[u8]) -> Result<TomographyEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut vals = Vec::with_capacity(samples.len());
    for s in samples {
        if s.len() != pauli_string.len() {
            return Err(Error::InvalidConfig(format!(
                "Pauli string has {} qubits, samples have {}",
                pauli_string.len(),
                s.len()
            )));
        }
        let mut p = 1.0;
        for (mu, n) in pauli_string.iter().zip(s) {
            p *= y_factor(*mu, n)?;
        }
        vals.push(p);
    }
    let n = vals.len();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(TomographyEstimate {
        string: pauli_string.to_vec(),
        estimate: mean,
        std_error,
        n,
    })
}

/// `prod_i <sigma_{mu_i}>` for a pure product state with the given Bloch vectors.
pub fn product_expectation(bloch: &[Vec3], pauli_string: &[u8]) -> Result<f64> {
    if bloch.len() != pauli_string.len() {
        return Err(Error::InvalidConfig("string length differs from qubit count".into()));
    }
    let mut p = 1.0;
    for (m, &mu) in bloch.iter().zip(pauli_string) {
        p *= match mu {
            0 => 1.0,
            1 => m[X],
            2 => m[Y],
            3 => m[Z],
            _ => return Err(Error::Domain(format!("Pauli index {mu} not in 0..=3"))),
        };
    }
    Ok(p)
}

pub const SAMPLE_COLUMNS: &str = "qubit_index,theta,phi,sample_index";

pub fn write_samples_csv<W: Write>(out: &mut W, samples: &[Vec<SphereDirection>], config: &serde_json::Value) -> Result<()> {
    writeln!(out, "# config: {config}")?;
    writeln!(out, "{SAMPLE_COLUMNS}")?;
    for (s, tuple) in samples.iter().enumerate() {
        for (q, n) in tuple.iter().enumerate() {
            writeln!(out, "{q},{:.15e},{:.15e},{s}", n.theta, n.phi)?;
        }
    }
    Ok(())
}
