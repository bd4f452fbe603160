//! Cartan (singular-value) and polar forms of SL(2,C) Kraus operators.
//!
//! `K = V e^{a J_z} U` with `V`, `U` in SU(2) and `a >= 0`. The gauge freedom
//! `V -> V e^{-i chi J_z}`, `U -> e^{i chi J_z} U` is fixed per snapshot by
//! making `U[0,0]` real and non-negative; at `a = 0` the form is `(K, 0, I)`.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    adjoint_rotation_unchecked, check_special_unitary, det2, su2_lift_unchecked, ComplexMatrix,
    Mat2, SpinRep, Vec3, Z,
};
use crate::error::{Error, Result};
use crate::trajectory::KrausPoint;

/// Below this value of `2 sinh a` the Kraus operator is treated as unitary.
const DEGENERATE_SPLIT: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartanForm {
    /// Postmeasurement unitary.
    pub v: Mat2,
    /// Radial coordinate on the 3-hyperboloid.
    pub a: f64,
    /// Premeasurement unitary.
    pub u: Mat2,
}

impl CartanForm {
    pub fn identity() -> Self {
        Self {
            v: Mat2::identity(),
            a: 0.0,
            u: Mat2::identity(),
        }
    }

    /// `V diag(e^{a/2}, e^{-a/2}) U` in the defining representation.
    pub fn recompose(&self) -> Mat2 {
        self.v * radial_factor(self.a) * self.u
    }

    /// `W = V U`, the unitary part of the polar decomposition.
    pub fn polar_unitary(&self) -> Mat2 {
        self.v * self.u
    }

    pub fn povm_direction(&self) -> PovmDirection {
        povm_direction(&self.u)
    }

    /// Bloch axis of the postmeasurement state direction, `V sigma_z V^dag`.
    pub fn postmeasurement_direction(&self) -> PovmDirection {
        let r = adjoint_rotation_unchecked(&self.v);
        PovmDirection::from_column(&r, Z)
    }
}

/// `e^{a J_z}` in the defining representation.
pub fn radial_factor(a: f64) -> Mat2 {
    let h = 0.5 * a;
    Mat2::new(
        Complex64::new(h.exp(), 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new((-h).exp(), 0.0),
    )
}

/// Unit Bloch vector in `(z, x, y)` order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmDirection(pub Vec3);

impl PovmDirection {
    fn from_column(r: &Matrix3<f64>, col: usize) -> Self {
        let mut n = [r[(0, col)], r[(1, col)], r[(2, col)]];
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        for c in &mut n {
            *c /= norm;
        }
        Self(n)
    }

    pub fn z(&self) -> f64 {
        self.0[0]
    }

    pub fn x(&self) -> f64 {
        self.0[1]
    }

    pub fn y(&self) -> f64 {
        self.0[2]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    /// Angle to another direction, accurate for nearly parallel vectors.
    pub fn angle_to(&self, other: &Self) -> f64 {
        let d = [
            self.0[0] - other.0[0],
            self.0[1] - other.0[1],
            self.0[2] - other.0[2],
        ];
        let s = [
            self.0[0] + other.0[0],
            self.0[1] + other.0[1],
            self.0[2] + other.0[2],
        ];
        let dn = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let sn = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        2.0 * dn.atan2(sn)
    }
}

pub fn cartan_decompose(k: &KrausPoint) -> Result<CartanForm> {
    let m = k.matrix();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let dev = (det2(m) - 1.0).norm();
    if dev > 1e-8 {
        return Err(Error::BadDeterminant { deviation: dev });
    }
    Ok(cartan_decompose_unchecked(m))
}

/// Decomposition without the determinant guard; `m` must be in SL(2,C).
pub fn cartan_decompose_unchecked(m: &Mat2) -> CartanForm {
    let e = m.adjoint() * m;
    let p = e[(0, 0)].re;
    let r = e[(1, 1)].re;
    let q = e[(0, 1)];
    // eigenvalues e^{+-a}: their difference is 2 sinh a
    let split = ((p - r) * (p - r) + 4.0 * q.norm_sqr()).sqrt();
    if split <= DEGENERATE_SPLIT {
        return CartanForm {
            v: *m,
            a: 0.0,
            u: Mat2::identity(),
        };
    }
    let a = (0.5 * split).asinh();
    let lambda = 0.5 * (p + r + split);

    // eigenvector of E for the top eigenvalue
    let c1 = [q, Complex64::new(lambda - p, 0.0)];
    let c2 = [Complex64::new(lambda - r, 0.0), q.conj()];
    let n1 = c1[0].norm_sqr() + c1[1].norm_sqr();
    let n2 = c2[0].norm_sqr() + c2[1].norm_sqr();
    let (mut psi, norm) = if n1 >= n2 {
        (c1, n1.sqrt())
    } else {
        (c2, n2.sqrt())
    };
    psi[0] /= norm;
    psi[1] /= norm;
    if psi[0].norm() > 0.0 {
        let phase = psi[0].conj() / psi[0].norm();
        psi[0] *= phase;
        psi[1] *= phase;
    } else {
        let phase = psi[1].conj() / psi[1].norm();
        psi[1] *= phase;
    }
    let u = Mat2::new(psi[0].conj(), psi[1].conj(), -psi[1], psi[0]);

    // first column of V = K psi e^{-a/2}; SU(2) fixes the second column
    let scale = (-0.5 * a).exp();
    let mut v0 = (m[(0, 0)] * psi[0] + m[(0, 1)] * psi[1]) * scale;
    let mut v1 = (m[(1, 0)] * psi[0] + m[(1, 1)] * psi[1]) * scale;
    let vn = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
    v0 /= vn;
    v1 /= vn;
    let v = Mat2::new(v0, -v1.conj(), v1, v0.conj());
    CartanForm { v, a, u }
}

/// Radial coordinate only; `a = asinh(|lambda_1 - lambda_2| / 2)` of `K^dag K`.
pub fn radial_coordinate(m: &Mat2) -> f64 {
    let e = m.adjoint() * m;
    let d = e[(0, 0)].re - e[(1, 1)].re;
    let split = (d * d + 4.0 * e[(0, 1)].norm_sqr()).sqrt();
    (0.5 * split).asinh()
}

/// `K = W sqrt(E)` with `W = V U` unitary and `sqrt(E) = U^dag e^{a J_z} U`.
pub fn polar_decompose(k: &KrausPoint) -> Result<(Mat2, Mat2)> {
    let form = cartan_decompose(k)?;
    let w = form.polar_unitary();
    let sqrt_e = form.u.adjoint() * radial_factor(form.a) * form.u;
    Ok((w, sqrt_e))
}

/// POVM element `E = K^dag K`.
pub fn povm_element(k: &KrausPoint) -> Mat2 {
    k.matrix().adjoint() * k.matrix()
}

/// Purity `lambda_2 / lambda_1 = e^{-2a}` of the POVM element; the same in every spin-j.
pub fn purity(a: f64, _rep: &SpinRep) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::NegativeRadial(a));
    }
    Ok((-2.0 * a).exp())
}

/// Unit vector `n` with `U^dag sigma_z U = sigma . n`.
pub fn povm_direction(u: &Mat2) -> PovmDirection {
    let r = adjoint_rotation_unchecked(&u.adjoint());
    PovmDirection::from_column(&r, Z)
}

/// Spin-j Kraus operator `D(V) e^{a J_z} D(U)`.
pub fn lift_kraus(form: &CartanForm, rep: &SpinRep) -> Result<ComplexMatrix> {
    let aj = form.a * rep.j();
    if aj > 300.0 {
        return Err(Error::LiftOverflow(aj));
    }
    check_special_unitary(&form.v, 1e-8)?;
    check_special_unitary(&form.u, 1e-8)?;
    Ok(lift_kraus_unchecked(form, rep))
}

pub(crate) fn lift_kraus_unchecked(form: &CartanForm, rep: &SpinRep) -> ComplexMatrix {
    let lv = su2_lift_unchecked(&form.v, rep);
    let lu = su2_lift_unchecked(&form.u, rep);
    let mut middle = lu;
    for (row, m) in rep.weights().iter().enumerate() {
        let f = (form.a * m).exp();
        for col in 0..rep.dim() {
            middle[(row, col)] *= f;
        }
    }
    lv * middle
}

/// Log singular values `a m`, `m = j..-j`, of the lifted Kraus operator.
/// Available even when the matrix entries themselves would overflow.
pub fn lifted_log_singular_values(form: &CartanForm, rep: &SpinRep) -> Vec<f64> {
    rep.weights().iter().map(|m| form.a * m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{exp_anti_hermitian_su2, max_abs, max_abs2};
    use proptest::prelude::*;

    fn random_su2(w: [f64; 3]) -> Mat2 {
        exp_anti_hermitian_su2(&w)
    }

    fn kp(m: Mat2) -> KrausPoint {
        KrausPoint::new(m).unwrap()
    }

    #[test]
    fn identity_decomposes_trivially() {
        let f = cartan_decompose(&KrausPoint::identity()).unwrap();
        assert_eq!(f.a, 0.0);
        assert!(max_abs2(&(f.u - Mat2::identity())) < 1e-15);
        assert!(max_abs2(&(f.v - Mat2::identity())) < 1e-15);
    }

    #[test]
    fn diagonal_kraus() {
        let e = std::f64::consts::E;
        let m = Mat2::new(
            Complex64::new(e, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0 / e, 0.0),
        );
        let f = cartan_decompose(&kp(m)).unwrap();
        assert!((f.a - 2.0).abs() < 1e-14);
        assert!(max_abs2(&(f.u - Mat2::identity())) < 1e-14);
        assert!(max_abs2(&(f.v - Mat2::identity())) < 1e-14);
    }

    #[test]
    fn construct_then_decompose() {
        let v0 = random_su2([0.4, -2.1, 1.3]);
        let u0 = random_su2([-1.7, 0.2, 0.9]);
        let k = v0 * radial_factor(1.3) * u0;
        let f = cartan_decompose(&kp(k)).unwrap();
        assert!((f.a - 1.3).abs() < 1e-12);
        assert!(max_abs2(&(f.recompose() - k)) < 1e-12);
        let n_true = povm_direction(&u0);
        assert!(f.povm_direction().angle_to(&n_true) < 1e-10);
        assert!(max_abs2(&(f.polar_unitary() - v0 * u0)) < 1e-10);
        assert!(f.u[(0, 0)].im.abs() < 1e-15 && f.u[(0, 0)].re >= 0.0);
    }

    #[test]
    fn south_pole_direction_is_gauge_fixed() {
        // E diagonal with the large eigenvalue in the lower slot: U[0,0] = 0
        let k = radial_factor(0.8) * random_su2([std::f64::consts::PI, 0.0, 0.0]);
        let k = random_su2([0.0, std::f64::consts::PI, 0.0]) * k;
        let f = cartan_decompose(&kp(k)).unwrap();
        assert!(max_abs2(&(f.recompose() - k)) < 1e-12);
        assert!((f.a - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_determinant_and_nan() {
        let m = Mat2::identity() * Complex64::new(2.0, 0.0);
        assert!(matches!(
            cartan_decompose(&KrausPoint::from_matrix_unchecked(m)),
            Err(Error::BadDeterminant { .. })
        ));
        let mut n = Mat2::identity();
        n[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            cartan_decompose(&KrausPoint::from_matrix_unchecked(n)),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn polar_of_unitary_and_positive() {
        let u = random_su2([0.3, 1.2, -0.5]);
        let (w, s) = polar_decompose(&kp(u)).unwrap();
        assert!(max_abs2(&(w - u)) < 1e-12);
        assert!(max_abs2(&(s - Mat2::identity())) < 1e-12);

        let u0 = random_su2([1.0, -0.3, 0.4]);
        let pos = u0.adjoint() * radial_factor(0.9) * u0;
        let (w, s) = polar_decompose(&kp(pos)).unwrap();
        assert!(max_abs2(&(w - Mat2::identity())) < 1e-12);
        assert!(max_abs2(&(s - pos)) < 1e-12);
    }

    #[test]
    fn polar_unitary_leaves_positive_factor() {
        let k = random_su2([0.2, 0.7, -1.9]) * radial_factor(2.4) * random_su2([2.2, -0.4, 0.1]);
        let (w, s) = polar_decompose(&kp(k)).unwrap();
        assert!(max_abs2(&(w * s - k)) < 1e-9);
        let h = w.adjoint() * k;
        assert!(max_abs2(&(h - h.adjoint())) < 1e-9);
        let tr = (h[(0, 0)] + h[(1, 1)]).re;
        let det = det2(&h).re;
        assert!(tr > 0.0 && det > 0.0);
    }

    #[test]
    fn povm_element_spectrum() {
        assert!(max_abs2(&(povm_element(&KrausPoint::identity()) - Mat2::identity())) < 1e-15);
        let k = radial_factor(2.0);
        let e = povm_element(&kp(k));
        assert!((e[(0, 0)].re - 2f64.exp()).abs() < 1e-13);
        assert!((e[(1, 1)].re - (-2f64).exp()).abs() < 1e-15);

        let k = random_su2([0.1, 0.5, 0.3]) * radial_factor(1.1) * random_su2([1.4, 0.0, -0.6]);
        let e = povm_element(&kp(k));
        let herm = nalgebra::Matrix2::new(e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]);
        let eig = herm.symmetric_eigenvalues();
        let (hi, lo) = (eig[0].max(eig[1]), eig[0].min(eig[1]));
        let a = cartan_decompose(&kp(k)).unwrap().a;
        assert!((hi / lo - (2.0 * a).exp()).abs() / (2.0 * a).exp() < 1e-10);
    }

    #[test]
    fn purity_values() {
        let rep = SpinRep::defining();
        assert_eq!(purity(0.0, &rep).unwrap(), 1.0);
        let p = purity(8.0, &rep).unwrap();
        assert!((p - 1.125_351_747_192_591e-7).abs() < 1e-18);
        assert!(matches!(purity(-0.1, &rep), Err(Error::NegativeRadial(_))));
    }

    #[test]
    fn lifted_purity_is_representation_independent() {
        let rep = SpinRep::new(1.5).unwrap();
        let a = 0.7;
        let u = random_su2([0.3, -1.0, 2.0]);
        let lu = su2_lift_unchecked(&u, &rep);
        let mut d = ComplexMatrix::zeros(rep.dim(), rep.dim());
        for (k, m) in rep.weights().iter().enumerate() {
            d[(k, k)] = Complex64::new((2.0 * a * m).exp(), 0.0);
        }
        let e = lu.adjoint() * d * lu;
        let mut eig: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let expected = purity(a, &rep).unwrap();
        assert!((eig[1] / eig[0] - expected).abs() < 1e-10);
    }

    #[test]
    fn povm_direction_examples() {
        let n = povm_direction(&Mat2::identity());
        assert!((n.z() - 1.0).abs() < 1e-15);
        let u = random_su2([0.0, 0.0, std::f64::consts::FRAC_PI_2]);
        let n = povm_direction(&u);
        // U = e^{-i pi/2 J_y}: U^dag sigma_z U = -sigma_x
        assert!((n.x() + 1.0).abs() < 1e-12, "{n:?}");
        let gauge = random_su2([-0.7, 0.0, 0.0]) * u;
        let n2 = povm_direction(&gauge);
        assert!(n.angle_to(&n2) < 1e-12);
    }

    #[test]
    fn lift_examples() {
        let rep = SpinRep::new(1.0).unwrap();
        let id = lift_kraus(&CartanForm::identity(), &rep).unwrap();
        assert!(max_abs(&(id - rep.identity())) < 1e-15);
        let f = CartanForm {
            v: Mat2::identity(),
            a: 1.0,
            u: Mat2::identity(),
        };
        let l = lift_kraus(&f, &rep).unwrap();
        let e = std::f64::consts::E;
        for (k, val) in [e, 1.0, 1.0 / e].iter().enumerate() {
            assert!((l[(k, k)].re - val).abs() < 1e-14);
        }
    }

    #[test]
    fn lift_singular_values_follow_weights() {
        let rep = SpinRep::new(2.0).unwrap();
        let f = CartanForm {
            v: random_su2([1.1, -0.4, 0.8]),
            a: 0.6,
            u: random_su2([-0.2, 2.5, 0.3]),
        };
        let l = lift_kraus(&f, &rep).unwrap();
        let mut sv: Vec<f64> = l.singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (s, logs) in sv.iter().zip(lifted_log_singular_values(&f, &rep)) {
            assert!((s - logs.exp()).abs() / logs.exp() < 1e-8);
        }
    }

    #[test]
    fn lift_overflow_guard() {
        let rep = SpinRep::new(25.0).unwrap();
        let f = CartanForm {
            v: Mat2::identity(),
            a: 13.0,
            u: Mat2::identity(),
        };
        assert!(matches!(lift_kraus(&f, &rep), Err(Error::LiftOverflow(_))));
        assert_eq!(lifted_log_singular_values(&f, &rep)[0], 13.0 * 25.0);
    }

    proptest! {
        #[test]
        fn roundtrip_preserves_invariants(
            wv in prop::array::uniform3(-3.0f64..3.0),
            wu in prop::array::uniform3(-3.0f64..3.0),
            a in 0.01f64..12.0,
        ) {
            let v0 = random_su2(wv);
            let u0 = random_su2(wu);
            let k = v0 * radial_factor(a) * u0;
            let f = cartan_decompose(&KrausPoint::from_matrix_unchecked(k)).unwrap();
            prop_assert!((f.a - a).abs() < 1e-9 * (1.0 + a));
            prop_assert!(f.povm_direction().angle_to(&povm_direction(&u0)) < 1e-9);
            let dw = max_abs2(&(f.polar_unitary() - v0 * u0));
            prop_assert!(dw < 1e-9, "W distance {}", dw);
            let rel = max_abs2(&(f.recompose() - k)) / max_abs2(&k);
            prop_assert!(rel < 1e-9);
        }

        #[test]
        fn povm_element_ignores_postmeasurement_unitary(
            w in prop::array::uniform3(-3.0f64..3.0),
            wk in prop::array::uniform3(-2.0f64..2.0),
            wu in prop::array::uniform3(-3.0f64..3.0),
        ) {
            let k = random_su2(wu) * crate::algebra::exp_hermitian_su2(&wk);
            let omega = random_su2(w);
            let e1 = povm_element(&KrausPoint::from_matrix_unchecked(k));
            let e2 = povm_element(&KrausPoint::from_matrix_unchecked(omega * k));
            prop_assert!(max_abs2(&(e1 - e2)) < 1e-10 * max_abs2(&e1));
        }
    }
}
