//! Spin-j representations of su(2) and sl(2,C), matrix exponentials, and the
//! adjoint action of SU(2) on the generators.
//!
//! Every three-index object in this crate is ordered `(z, x, y)`: index 0 is
//! the z axis, index 1 is x, index 2 is y. Because `(z, x, y)` is a cyclic
//! permutation of `(x, y, z)`, the antisymmetric symbol keeps its usual form
//! with `levi_civita(0, 1, 2) = 1`.

use nalgebra::{DMatrix, Matrix2, Matrix3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type Mat2 = Matrix2<Complex64>;
/// Real three-vector in `(z, x, y)` component order.
pub type Vec3 = [f64; 3];

pub const Z: usize = 0;
pub const X: usize = 1;
pub const Y: usize = 2;

/// Largest supported `2j`; keeps `e^{2aj}` inside f64 for the radial ranges
/// the simulator produces.
pub const MAX_TWO_J: u32 = 50;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// A spin-j irreducible representation with Hermitian generators `J_z, J_x, J_y`.
///
/// The basis is ordered by descending weight, `m = j, j-1, ..., -j`, so `J_z`
/// is diagonal with entries in that order.
#[derive(Clone, Debug)]
pub struct SpinRep {
    two_j: u32,
    generators: [ComplexMatrix; 3],
}

pub fn build_spin_rep(j: f64) -> Result<SpinRep> {
    SpinRep::new(j)
}

impl SpinRep {
    pub fn new(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !twice.is_finite() || twice < 0.5 || (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::InvalidSpin(j));
        }
        Self::from_twice_j(twice.round() as u32)
    }

    pub fn from_twice_j(two_j: u32) -> Result<Self> {
        if two_j == 0 || two_j > MAX_TWO_J {
            return Err(Error::InvalidSpin(two_j as f64 / 2.0));
        }
        let dim = two_j as usize + 1;
        let j = two_j as f64 / 2.0;
        let mut jz = ComplexMatrix::zeros(dim, dim);
        let mut jplus = ComplexMatrix::zeros(dim, dim);
        for k in 0..dim {
            let m = j - k as f64;
            jz[(k, k)] = Complex64::new(m, 0.0);
            if k > 0 {
                // <m+1| J+ |m>
                let amp = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
                jplus[(k - 1, k)] = Complex64::new(amp, 0.0);
            }
        }
        let jminus = jplus.adjoint();
        let jx = (&jplus + &jminus).map(|z| z * 0.5);
        let jy = (&jplus - &jminus).map(|z| z * Complex64::new(0.0, -0.5));
        Ok(Self {
            two_j,
            generators: [jz, jx, jy],
        })
    }

    pub fn defining() -> Self {
        Self::from_twice_j(1).expect("spin-1/2 is valid")
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn casimir(&self) -> f64 {
        let j = self.j();
        j * (j + 1.0)
    }

    /// Dynkin normalization `lambda_j = 3 / (j (j+1) (2j+1))`, chosen so that
    /// `lambda_j tr(J_mu J_nu) = delta_mu_nu`.
    pub fn dynkin(&self) -> f64 {
        let j = self.j();
        3.0 / (j * (j + 1.0) * (2.0 * j + 1.0))
    }

    pub fn jz(&self) -> &ComplexMatrix {
        &self.generators[Z]
    }

    pub fn jx(&self) -> &ComplexMatrix {
        &self.generators[X]
    }

    pub fn jy(&self) -> &ComplexMatrix {
        &self.generators[Y]
    }

    pub fn generator(&self, axis: usize) -> &ComplexMatrix {
        &self.generators[axis]
    }

    pub fn generators(&self) -> &[ComplexMatrix; 3] {
        &self.generators
    }

    pub fn raising(&self) -> ComplexMatrix {
        self.jx() + self.jy().map(|z| z * I)
    }

    pub fn lowering(&self) -> ComplexMatrix {
        self.jx() - self.jy().map(|z| z * I)
    }

    /// Weights `m = j, j-1, ..., -j` in basis order.
    pub fn weights(&self) -> Vec<f64> {
        let j = self.j();
        (0..self.dim()).map(|k| j - k as f64).collect()
    }

    /// `J . v` for a real `(z, x, y)` vector.
    pub fn dot(&self, v: &Vec3) -> ComplexMatrix {
        self.generators[Z].map(|z| z * v[Z])
            + self.generators[X].map(|z| z * v[X])
            + self.generators[Y].map(|z| z * v[Y])
    }

    pub fn identity(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.dim(), self.dim())
    }
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs2(m: &Mat2) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Defining-representation generators `J_k = sigma_k / 2` in `(z, x, y)` order.
pub fn defining_generators() -> [Mat2; 3] {
    let h = Complex64::new(0.5, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [
        Mat2::new(h, zero, zero, -h),
        Mat2::new(zero, h, h, zero),
        Mat2::new(zero, Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5), zero),
    ]
}

/// `J . v` in the defining representation.
pub fn defining_dot(v: &Vec3) -> Mat2 {
    Mat2::new(
        Complex64::new(0.5 * v[Z], 0.0),
        Complex64::new(0.5 * v[X], -0.5 * v[Y]),
        Complex64::new(0.5 * v[X], 0.5 * v[Y]),
        Complex64::new(-0.5 * v[Z], 0.0),
    )
}

/// `sinh(s)/s`, even in `s`, with a series near the origin.
fn sinhc(s: Complex64) -> Complex64 {
    if s.norm() < 1e-4 {
        let s2 = s * s;
        Complex64::new(1.0, 0.0) + s2 / 6.0 + s2 * s2 / 120.0
    } else {
        s.sinh() / s
    }
}

/// Closed-form exponential of a traceless 2x2 matrix:
/// `e^X = cosh(s) I + sinh(s)/s X` with `s^2 = -det X`.
pub fn exp_traceless2(x: &Mat2) -> Mat2 {
    let det = x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)];
    let s = (-det).sqrt();
    Mat2::identity() * s.cosh() + x * sinhc(s)
}

/// `exp(J . v)` in the defining representation for real `v`.
pub fn exp_hermitian_su2(v: &Vec3) -> Mat2 {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let s = 0.5 * norm;
    let (ch, shc) = if s < 1e-4 {
        let s2 = s * s;
        (1.0 + s2 / 2.0 + s2 * s2 / 24.0, 1.0 + s2 / 6.0 + s2 * s2 / 120.0)
    } else {
        let e = s.exp();
        let ei = 1.0 / e;
        (0.5 * (e + ei), 0.5 * (e - ei) / s)
    };
    // e^{J.v} = cosh(s) I + (sinh(s)/s) (J.v), with (J.v)^2 = s^2 I.
    let c = Complex64::new(ch, 0.0);
    Mat2::new(
        c + 0.5 * shc * v[Z],
        Complex64::new(0.5 * shc * v[X], -0.5 * shc * v[Y]),
        Complex64::new(0.5 * shc * v[X], 0.5 * shc * v[Y]),
        c - 0.5 * shc * v[Z],
    )
}

/// `exp(-i J . v)` in the defining representation for real `v`; an SU(2) element.
pub fn exp_anti_hermitian_su2(v: &Vec3) -> Mat2 {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let s = 0.5 * norm;
    let (c, sc) = if s < 1e-4 {
        let s2 = s * s;
        (1.0 - s2 / 2.0 + s2 * s2 / 24.0, 1.0 - s2 / 6.0 + s2 * s2 / 120.0)
    } else {
        (s.cos(), s.sin() / s)
    };
    // -i (sin(s)/s) (J.v)
    let k = 0.5 * sc;
    Mat2::new(
        Complex64::new(c, -k * v[Z]),
        Complex64::new(-k * v[Y], -k * v[X]),
        Complex64::new(k * v[Y], -k * v[X]),
        Complex64::new(c, k * v[Z]),
    )
}

/// Matrix exponential. Traceless 2x2 inputs take the closed form; everything
/// else goes through Pade scaling-and-squaring.
pub fn mat_exp(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.nrows() != x.ncols() {
        return Err(Error::NonSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if x.nrows() == 2 {
        let tr = x[(0, 0)] + x[(1, 1)];
        let scale = max_abs(x).max(1.0);
        if tr.norm() <= 1e-14 * scale {
            let m = Mat2::new(x[(0, 0)], x[(0, 1)], x[(1, 0)], x[(1, 1)]);
            let e = exp_traceless2(&m);
            return Ok(ComplexMatrix::from_iterator(2, 2, e.iter().copied()));
        }
    }
    let e = x.exp();
    if e.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(e)
}

pub fn det2(m: &Mat2) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Largest of `|V^dag V - I|` (entrywise) and `|det V - 1|`.
pub fn special_unitary_deviation(v: &Mat2) -> f64 {
    let gram = v.adjoint() * v - Mat2::identity();
    max_abs2(&gram).max((det2(v) - 1.0).norm())
}

pub fn check_special_unitary(v: &Mat2, tol: f64) -> Result<()> {
    let dev = special_unitary_deviation(v);
    if dev.is_finite() && dev <= tol {
        Ok(())
    } else {
        Err(Error::NotSpecialUnitary { deviation: dev })
    }
}

/// Rotation matrix `R` with `V J_mu V^{-1} = J_nu R^nu_mu`, rows and columns in
/// `(z, x, y)` order.
pub fn adjoint_rotation(v: &Mat2) -> Result<Matrix3<f64>> {
    check_special_unitary(v, 1e-10)?;
    Ok(adjoint_rotation_unchecked(v))
}

pub fn adjoint_rotation_unchecked(v: &Mat2) -> Matrix3<f64> {
    let gens = defining_generators();
    let vd = v.adjoint();
    let mut r = Matrix3::zeros();
    for mu in 0..3 {
        let conj = v * gens[mu] * vd;
        for nu in 0..3 {
            // tr(J_nu J_nu) = 1/2 in the defining rep
            r[(nu, mu)] = 2.0 * (gens[nu] * conj).trace().re;
        }
    }
    r
}

/// Rotation vector `w = theta n` with `V = exp(-i theta n . J)`, theta in [0, 2pi].
pub fn su2_rotation_vector(v: &Mat2) -> Vec3 {
    // V = cos(theta/2) I - i sin(theta/2) n.sigma
    let c = 0.5 * (v[(0, 0)] + v[(1, 1)]).re;
    // (i/2) tr(sigma_k V) = sin(theta/2) n_k
    let sz = -0.5 * (v[(0, 0)] - v[(1, 1)]).im;
    let sx = -0.5 * (v[(0, 1)] + v[(1, 0)]).im;
    let sy = 0.5 * (v[(1, 0)] - v[(0, 1)]).re;
    let s = (sz * sz + sx * sx + sy * sy).sqrt();
    if s == 0.0 {
        // theta = 0 or 2pi; any axis works
        let theta = if c >= 0.0 { 0.0 } else { 2.0 * std::f64::consts::PI };
        return [theta, 0.0, 0.0];
    }
    let theta = 2.0 * s.atan2(c);
    [theta * sz / s, theta * sx / s, theta * sy / s]
}

/// Lift an SU(2) element to the spin-j representation.
pub fn su2_lift(v: &Mat2, rep: &SpinRep) -> Result<ComplexMatrix> {
    check_special_unitary(v, 1e-9)?;
    Ok(su2_lift_unchecked(v, rep))
}

pub fn su2_lift_unchecked(v: &Mat2, rep: &SpinRep) -> ComplexMatrix {
    let w = su2_rotation_vector(v);
    let gen = rep.dot(&w).map(|z| -I * z);
    // anti-Hermitian generator of bounded norm; exp cannot overflow
    gen.exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartanWeylReport {
    /// Max residual over `[Jz, J+-] = +-J+-` and `[J+, J-] = 2Jz`.
    pub commutator_residual: f64,
    /// Max residual of `e^{x J+} J- e^{-x J+} = J- + 2x Jz - x^2 J+`.
    pub parabolic_residual: f64,
}

impl CartanWeylReport {
    pub fn max_residual(&self) -> f64 {
        self.commutator_residual.max(self.parabolic_residual)
    }
}

pub fn cartan_weyl_check(rep: &SpinRep) -> CartanWeylReport {
    cartan_weyl_check_at(rep, &[0.0, 0.5, 1.7, -1.3])
}

pub fn cartan_weyl_check_at(rep: &SpinRep, xs: &[f64]) -> CartanWeylReport {
    let jp = rep.raising();
    let jm = rep.lowering();
    let jz = rep.jz();
    let r1 = max_abs(&(commutator(jz, &jp) - &jp));
    let r2 = max_abs(&(commutator(jz, &jm) + &jm));
    let r3 = max_abs(&(commutator(&jp, &jm) - jz.map(|z| z * 2.0)));
    let commutator_residual = r1.max(r2).max(r3);

    let mut parabolic_residual: f64 = 0.0;
    for &x in xs {
        let fwd = jp.map(|z| z * x).exp();
        let bwd = jp.map(|z| -z * x).exp();
        let lhs = &fwd * &jm * &bwd;
        let rhs = &jm + jz.map(|z| z * (2.0 * x)) - jp.map(|z| z * (x * x));
        let scale = 1.0 + x * x;
        parabolic_residual = parabolic_residual.max(max_abs(&(lhs - rhs)) / scale);
    }
    CartanWeylReport {
        commutator_residual,
        parabolic_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn taylor_exp(x: &ComplexMatrix, terms: usize) -> ComplexMatrix {
        let n = x.nrows();
        let mut sum = ComplexMatrix::identity(n, n);
        let mut term = ComplexMatrix::identity(n, n);
        for k in 1..terms {
            term = &term * x / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    #[test]
    fn spin_half_matches_pauli() {
        let rep = SpinRep::new(0.5).unwrap();
        assert_eq!(rep.dim(), 2);
        assert!((rep.jz()[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((rep.jz()[(1, 1)] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((rep.jx()[(0, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((rep.jx()[(1, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((rep.dynkin() - 2.0).abs() < 1e-15);
        let gens = defining_generators();
        for k in 0..3 {
            for r in 0..2 {
                for col in 0..2 {
                    assert!((gens[k][(r, col)] - rep.generator(k)[(r, col)]).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn spin_one_casimir() {
        let rep = SpinRep::new(1.0).unwrap();
        let weights = rep.weights();
        assert_eq!(weights, vec![1.0, 0.0, -1.0]);
        let cas = rep.jx() * rep.jx() + rep.jy() * rep.jy() + rep.jz() * rep.jz();
        let diff = cas - rep.identity().map(|z| z * 2.0);
        assert!(max_abs(&diff) < 1e-12);
    }

    #[test]
    fn rejects_bad_spin() {
        assert!(SpinRep::new(0.0).is_err());
        assert!(SpinRep::new(-1.0).is_err());
        assert!(SpinRep::new(0.3).is_err());
        assert!(SpinRep::new(25.5).is_err());
        assert!(SpinRep::new(f64::NAN).is_err());
        assert!(SpinRep::new(25.0).is_ok());
    }

    #[test]
    fn representation_invariants_up_to_j5() {
        for two_j in 1..=10 {
            let rep = SpinRep::from_twice_j(two_j).unwrap();
            let g = rep.generators();
            for a in 0..3 {
                assert!(max_abs(&(&g[a] - g[a].adjoint())) < 1e-12);
                for b in 0..3 {
                    let mut rhs = ComplexMatrix::zeros(rep.dim(), rep.dim());
                    for k in 0..3 {
                        rhs += g[k].map(|z| z * I * levi_civita(a, b, k));
                    }
                    assert!(max_abs(&(commutator(&g[a], &g[b]) - rhs)) < 1e-11);
                    let tr = (&g[a] * &g[b]).trace();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((tr * rep.dynkin() - expect).norm() < 1e-11);
                }
            }
            let cas = &g[0] * &g[0] + &g[1] * &g[1] + &g[2] * &g[2];
            assert!(max_abs(&(cas - rep.identity().map(|z| z * rep.casimir()))) < 1e-11);
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = ComplexMatrix::zeros(3, 3);
        assert!(max_abs(&(mat_exp(&z).unwrap() - ComplexMatrix::identity(3, 3))) < 1e-15);
        let z2 = ComplexMatrix::zeros(2, 2);
        assert!(max_abs(&(mat_exp(&z2).unwrap() - ComplexMatrix::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn exp_of_diagonal_generator() {
        let rep = SpinRep::defining();
        let a = 1.7;
        let e = mat_exp(&rep.jz().map(|z| z * a)).unwrap();
        assert!((e[(0, 0)] - c((a / 2.0).exp(), 0.0)).norm() < 1e-13);
        assert!((e[(1, 1)] - c((-a / 2.0).exp(), 0.0)).norm() < 1e-13);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn exp_rejects_non_square_and_nan() {
        assert!(matches!(
            mat_exp(&ComplexMatrix::zeros(2, 3)),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        ));
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(mat_exp(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn traceless_closed_form_matches_taylor() {
        let samples = [
            [c(0.3, -0.2), c(1.1, 0.4), c(-0.7, 0.9)],
            [c(-1.2, 0.5), c(0.2, -0.8), c(0.6, 0.1)],
            [c(0.0, 1.3), c(0.4, 0.0), c(0.0, -0.5)],
        ];
        for s in samples {
            let x = ComplexMatrix::from_row_slice(2, 2, &[s[0], s[1], s[2], -s[0]]);
            let closed = mat_exp(&x).unwrap();
            let taylor = taylor_exp(&x, 30);
            assert!(max_abs(&(closed - taylor)) < 1e-12);
        }
    }

    #[test]
    fn general_exp_relative_accuracy_large_norm() {
        let rep = SpinRep::new(2.0).unwrap();
        let x = rep.jz().map(|z| z * 5.0);
        let e = mat_exp(&x).unwrap();
        for (k, m) in rep.weights().iter().enumerate() {
            let expect = (5.0 * m).exp();
            assert!(((e[(k, k)].re - expect) / expect).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_and_unitary_fast_paths() {
        let v = [0.4, -1.1, 0.7];
        let gen = defining_dot(&v);
        let full = ComplexMatrix::from_iterator(2, 2, gen.iter().copied());
        let expect = taylor_exp(&full, 40);
        let fast = exp_hermitian_su2(&v);
        for r in 0..2 {
            for col in 0..2 {
                assert!((fast[(r, col)] - expect[(r, col)]).norm() < 1e-13);
            }
        }
        let expect_u = taylor_exp(&full.map(|z| -I * z), 40);
        let fast_u = exp_anti_hermitian_su2(&v);
        for r in 0..2 {
            for col in 0..2 {
                assert!((fast_u[(r, col)] - expect_u[(r, col)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn rotation_of_identity_and_pi_about_z() {
        let r = adjoint_rotation(&Mat2::identity()).unwrap();
        assert!((r - Matrix3::identity()).abs().max() < 1e-15);
        let v = exp_anti_hermitian_su2(&[std::f64::consts::PI, 0.0, 0.0]);
        let r = adjoint_rotation(&v).unwrap();
        let expect = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, -1.0));
        assert!((r - expect).abs().max() < 1e-12);
    }

    #[test]
    fn rotation_rejects_non_unitary() {
        let k = exp_hermitian_su2(&[0.3, 0.0, 0.0]);
        assert!(matches!(
            adjoint_rotation(&k),
            Err(Error::NotSpecialUnitary { .. })
        ));
    }

    #[test]
    fn rotation_vector_near_pi_and_2pi() {
        for theta in [std::f64::consts::PI - 1e-9, std::f64::consts::PI, 3.5, 6.0] {
            let axis = [0.6, 0.0, 0.8];
            let w = [theta * axis[0], theta * axis[1], theta * axis[2]];
            let v = exp_anti_hermitian_su2(&w);
            let back = su2_rotation_vector(&v);
            let v2 = exp_anti_hermitian_su2(&back);
            assert!(max_abs2(&(v - v2)) < 1e-12);
        }
        let minus = -Mat2::identity();
        let rep = SpinRep::new(1.5).unwrap();
        let lift = su2_lift(&minus, &rep).unwrap();
        assert!(max_abs(&(lift + rep.identity())) < 1e-12);
        let rep1 = SpinRep::new(1.0).unwrap();
        let lift1 = su2_lift(&minus, &rep1).unwrap();
        assert!(max_abs(&(lift1 - rep1.identity())) < 1e-12);
    }

    #[test]
    fn lift_of_diagonal_rotation() {
        let phi = 0.83;
        let v = exp_anti_hermitian_su2(&[phi, 0.0, 0.0]);
        let rep = SpinRep::new(2.0).unwrap();
        let lift = su2_lift(&v, &rep).unwrap();
        for (k, m) in rep.weights().iter().enumerate() {
            let expect = Complex64::from_polar(1.0, -phi * m);
            assert!((lift[(k, k)] - expect).norm() < 1e-12);
        }
        let id = su2_lift(&Mat2::identity(), &rep).unwrap();
        assert!(max_abs(&(id - rep.identity())) < 1e-15);
    }

    #[test]
    fn cartan_weyl_relations() {
        let half = SpinRep::new(0.5).unwrap();
        let r = cartan_weyl_check(&half);
        assert!(r.max_residual() <= 1e-13, "{r:?}");
        let r0 = cartan_weyl_check_at(&half, &[0.0]);
        assert_eq!(r0.parabolic_residual, 0.0);
        let two = SpinRep::new(2.0).unwrap();
        let r2 = cartan_weyl_check_at(&two, &[1.7]);
        assert!(r2.max_residual() <= 1e-11, "{r2:?}");
    }
}
