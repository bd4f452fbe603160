//! Frame matrices, Killing form, curvature components of the Kraus-operator
//! bundle, and the SL(2,R) torus data.
//!
//! Roman indices label the anti-Hermitian generators `L_a = -i J_a` of the
//! fiber, Greek indices the Hermitian `J_mu`. Both run over `(z, x, y)`.

use std::io::Write;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{commutator, levi_civita, max_abs, ComplexMatrix, SpinRep, X, Y, Z};
use crate::error::{Error, Result};

const NEG_I: Complex64 = Complex64::new(0.0, -1.0);

/// Signature of the bundle metric: the symmetric-space block is `+kappa`, the
/// fiber block `-kappa`. Recorded for reports; no identity here depends on it.
pub const METRIC_SIGNATURE: &str = "(+,+,+,-,-,-)";

#[derive(Clone, Debug, PartialEq)]
pub struct FrameMatrices {
    pub a: f64,
    pub c: Matrix3<f64>,
    pub s: Matrix3<f64>,
    pub p: Matrix3<f64>,
    pub g_frame: Matrix3<f64>,
    pub omega: Matrix3<f64>,
    /// Closed form `diag(1, sinh^2 a, sinh^2 a)`.
    pub g: Matrix3<f64>,
}

pub fn frame_matrices(a: f64) -> Result<FrameMatrices> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if a < 0.0 {
        return Err(Error::NegativeRadial(a));
    }
    let (ch, sh) = (a.cosh(), a.sinh());
    let c = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, ch, ch));
    let mut s = Matrix3::zeros();
    // e^{aJz} L_x e^{-aJz} = L_x cosh a + J_y sinh a
    // e^{aJz} L_y e^{-aJz} = L_y cosh a - J_x sinh a
    s[(Y, X)] = sh;
    s[(X, Y)] = -sh;
    let p = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 0.0, 0.0));
    let g_frame = s + p;
    let omega = c - p;
    let g = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, sh * sh, sh * sh));
    Ok(FrameMatrices {
        a,
        c,
        s,
        p,
        g_frame,
        omega,
        g,
    })
}

impl FrameMatrices {
    /// `G^T kappa G` with `kappa` taken from the traces of the given rep.
    pub fn congruence_metric(&self, rep: &SpinRep) -> Matrix3<f64> {
        self.g_frame.transpose() * killing_matrix(rep) * self.g_frame
    }

    /// Max entrywise gap between the congruence metric and the closed form.
    pub fn metric_residual(&self, rep: &SpinRep) -> f64 {
        (self.congruence_metric(rep) - self.g).amax()
    }

    /// `G^{-1}`, defined for `a > 0`; its nonzero entries are `1` and `+-csch a`.
    pub fn g_frame_inverse(&self) -> Result<Matrix3<f64>> {
        if self.a <= 0.0 {
            return Err(Error::Domain("G is singular at a = 0".into()));
        }
        let csch = 1.0 / self.a.sinh();
        let mut inv = Matrix3::zeros();
        inv[(Z, Z)] = 1.0;
        inv[(X, Y)] = csch;
        inv[(Y, X)] = -csch;
        Ok(inv)
    }
}

/// `kappa_{mu nu} = lambda_j tr(J_mu J_nu)` in the given rep.
pub fn killing_matrix(rep: &SpinRep) -> Matrix3<f64> {
    let lambda = rep.dynkin();
    Matrix3::from_fn(|m, n| lambda * trace_product(rep.generator(m), rep.generator(n)).re)
}

fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    // tr(AB) without forming the product
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn anti_hermitian(rep: &SpinRep, axis: usize) -> ComplexMatrix {
    rep.generator(axis).map(|z| z * NEG_I)
}

/// Max residual of `e^{aJz} L_alpha e^{-aJz} = sum_b L_b C^b_alpha + sum_mu J_mu S^mu_alpha`,
/// scaled by `max(1, max|lhs|)` so that large `a j` does not inflate rounding.
pub fn euler_conjugation_check(a: f64, rep: &SpinRep) -> Result<f64> {
    let f = frame_matrices(a)?;
    let w = rep.weights();
    let mut worst: f64 = 0.0;
    for alpha in 0..3 {
        let l = anti_hermitian(rep, alpha);
        // Jz is diagonal: (e^{aJz} L e^{-aJz})_{mn} = e^{a(m-n)} L_{mn}
        let lhs = ComplexMatrix::from_fn(rep.dim(), rep.dim(), |m, n| l[(m, n)] * (a * (w[m] - w[n])).exp());
        let mut rhs = ComplexMatrix::zeros(rep.dim(), rep.dim());
        for b in 0..3 {
            rhs += anti_hermitian(rep, b) * Complex64::new(f.c[(b, alpha)], 0.0);
            rhs += rep.generator(b) * Complex64::new(f.s[(b, alpha)], 0.0);
        }
        let scale = max_abs(&lhs).max(1.0);
        worst = worst.max(max_abs(&(lhs - rhs)) / scale);
    }
    Ok(worst)
}

/// Max of `|lambda tr(J_mu J_nu) - delta|` and `|1/2 eps_{mu a b} eps_{nu a b} - delta|`.
pub fn killing_form_check(rep: &SpinRep) -> f64 {
    let kappa = killing_matrix(rep);
    let mut worst: f64 = (kappa - Matrix3::identity()).amax();
    for m in 0..3 {
        for n in 0..3 {
            let mut acc = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    acc += levi_civita(m, a, b) * levi_civita(n, a, b);
                }
            }
            let delta = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((0.5 * acc - delta).abs());
        }
    }
    worst
}

pub type Tensor4 = [[[[f64; 3]; 3]; 3]; 3];

fn tensor_from_fn(f: impl Fn(usize, usize, usize, usize) -> f64) -> Tensor4 {
    let mut t = [[[[0.0; 3]; 3]; 3]; 3];
    for (i, ti) in t.iter_mut().enumerate() {
        for (j, tj) in ti.iter_mut().enumerate() {
            for (k, tk) in tj.iter_mut().enumerate() {
                for (l, v) in tk.iter_mut().enumerate() {
                    *v = f(i, j, k, l);
                }
            }
        }
    }
    t
}

fn tensor_gap(x: &Tensor4, y: &Tensor4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    worst = worst.max((x[i][j][k][l] - y[i][j][k][l]).abs());
                }
            }
        }
    }
    worst
}

/// `-1/4 sum_f eps_{p q f} eps_{r s f}`.
fn contraction(p: usize, q: usize, r: usize, s: usize) -> f64 {
    -0.25 * (0..3).map(|f| levi_civita(p, q, f) * levi_civita(r, s, f)).sum::<f64>()
}

/// Curvature components, each stored in the index order of its name.
#[derive(Clone, Debug)]
pub struct CurvatureTables {
    pub two_j: u32,
    /// `R_{cadb} = 1/4 lambda tr([L_a, L_c][L_b, L_d])`.
    pub fiber: Tensor4,
    pub fiber_contraction: Tensor4,
    /// `R_{mu alpha nu beta} = 1/4 lambda tr([J_alpha, J_mu][J_beta, J_nu])`.
    pub base: Tensor4,
    pub base_contraction: Tensor4,
    /// `R_{c a mu alpha} = -1/4 lambda tr([J_alpha, J_mu][L_a, L_c])`.
    pub cross_fiber_base: Tensor4,
    pub cross_fiber_base_contraction: Tensor4,
    /// `R_{alpha a beta b} = -1/4 lambda tr([J_alpha, L_a][J_beta, L_b])`.
    pub cross_mixed: Tensor4,
    pub cross_mixed_contraction: Tensor4,
    /// `lambda tr([J_alpha, J_mu][J_beta, J_nu])`, stored as `[mu][alpha][nu][beta]`.
    pub symmetric_space: Tensor4,
}

pub fn curvature_components(rep: &SpinRep) -> CurvatureTables {
    let lambda = rep.dynkin();
    let l: Vec<ComplexMatrix> = (0..3).map(|a| anti_hermitian(rep, a)).collect();
    let j = rep.generators();
    let comm_ll: Vec<Vec<ComplexMatrix>> = (0..3).map(|a| (0..3).map(|b| commutator(&l[a], &l[b])).collect()).collect();
    let comm_jj: Vec<Vec<ComplexMatrix>> = (0..3).map(|a| (0..3).map(|b| commutator(&j[a], &j[b])).collect()).collect();
    let comm_jl: Vec<Vec<ComplexMatrix>> = (0..3).map(|a| (0..3).map(|b| commutator(&j[a], &l[b])).collect()).collect();
    let tr = |x: &ComplexMatrix, y: &ComplexMatrix| lambda * trace_product(x, y).re;

    let fiber = tensor_from_fn(|c, a, d, b| 0.25 * tr(&comm_ll[a][c], &comm_ll[b][d]));
    let base = tensor_from_fn(|mu, al, nu, be| 0.25 * tr(&comm_jj[al][mu], &comm_jj[be][nu]));
    let cross_fiber_base = tensor_from_fn(|c, a, mu, al| -0.25 * tr(&comm_jj[al][mu], &comm_ll[a][c]));
    let cross_mixed = tensor_from_fn(|al, a, be, b| -0.25 * tr(&comm_jl[al][a], &comm_jl[be][b]));
    let symmetric_space = tensor_from_fn(|mu, al, nu, be| tr(&comm_jj[al][mu], &comm_jj[be][nu]));

    // Structure constants: [L_a, L_c] = eps_{acf} L_f, [J_a, J_m] = i eps_{amf} J_f,
    // [J_a, L_b] = eps_{abf} J_f, and kappa = delta raises indices.
    let fiber_contraction = tensor_from_fn(|c, a, d, b| contraction(a, c, b, d));
    let base_contraction = tensor_from_fn(|mu, al, nu, be| contraction(al, mu, be, nu));
    let cross_fiber_base_contraction = tensor_from_fn(|c, a, mu, al| contraction(al, mu, a, c));
    let cross_mixed_contraction = tensor_from_fn(|al, a, be, b| contraction(al, a, be, b));

    CurvatureTables {
        two_j: rep.two_j(),
        fiber,
        fiber_contraction,
        base,
        base_contraction,
        cross_fiber_base,
        cross_fiber_base_contraction,
        cross_mixed,
        cross_mixed_contraction,
        symmetric_space,
    }
}

impl CurvatureTables {
    /// Max gap between the trace route and the structure-constant route.
    pub fn two_route_residual(&self) -> f64 {
        tensor_gap(&self.fiber, &self.fiber_contraction)
            .max(tensor_gap(&self.base, &self.base_contraction))
            .max(tensor_gap(&self.cross_fiber_base, &self.cross_fiber_base_contraction))
            .max(tensor_gap(&self.cross_mixed, &self.cross_mixed_contraction))
    }

    /// Max of `|symmetric_space - 4 base|`.
    pub fn factor_four_residual(&self) -> f64 {
        let four = tensor_from_fn(|i, j, k, l| 4.0 * self.base[i][j][k][l]);
        tensor_gap(&self.symmetric_space, &four)
    }

    /// Ratio `symmetric_space / base` over components with `|base| > 1e-6`,
    /// returned as `(min, max)`.
    pub fn factor_four_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let b = self.base[i][j][k][l];
                        if b.abs() > 1e-6 {
                            let r = self.symmetric_space[i][j][k][l] / b;
                            lo = lo.min(r);
                            hi = hi.max(r);
                        }
                    }
                }
            }
        }
        (lo, hi)
    }

    /// `R_{cadb} + R_{acdb}` and `R_{cadb} + R_{cabd}`, max over all indices.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for t in [&self.fiber, &self.base] {
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            worst = worst.max((t[i][j][k][l] + t[j][i][k][l]).abs());
                            worst = worst.max((t[i][j][k][l] + t[i][j][l][k]).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// `lambda tr([J_alpha, J_mu][J_beta, J_nu]) = delta_{alpha nu} delta_{mu beta} - delta_{alpha beta} delta_{mu nu}`.
    pub fn su2_identity_residual(&self) -> f64 {
        let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
        let expected = tensor_from_fn(|mu, al, nu, be| d(al, nu) * d(mu, be) - d(al, be) * d(mu, nu));
        tensor_gap(&self.symmetric_space, &expected)
    }
}

/// One row of the identity suite.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityRow {
    pub identity: String,
    pub two_j: u32,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub rows: Vec<IdentityRow>,
    pub metric_signature: String,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.residual))
    }
}

/// Euler conjugation is checked at these radial values.
pub const EULER_SAMPLE_A: [f64; 4] = [0.0, 0.4, 1.3, 3.0];

/// Commutators, Casimir, Dynkin normalization, Cartan-Weyl relations, Euler
/// conjugation, Killing form, frame metric and curvature identities for every
/// `2j` in `1..=max_two_j`.
pub fn identity_suite(max_two_j: u32) -> Result<IdentityReport> {
    let mut rows = Vec::new();
    let mut push = |name: &str, two_j: u32, residual: f64| {
        rows.push(IdentityRow {
            identity: name.to_string(),
            two_j,
            residual,
        })
    };
    for two_j in 1..=max_two_j {
        let rep = SpinRep::from_twice_j(two_j)?;
        let j = rep.generators();
        let i = Complex64::new(0.0, 1.0);

        let mut comm: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let mut rhs = ComplexMatrix::zeros(rep.dim(), rep.dim());
                for c in 0..3 {
                    rhs += &j[c] * (i * levi_civita(a, b, c));
                }
                comm = comm.max(max_abs(&(commutator(&j[a], &j[b]) - rhs)));
            }
        }
        push("commutator [J_a, J_b] = i eps_abc J_c", two_j, comm);

        let cas = &j[Z] * &j[Z] + &j[X] * &j[X] + &j[Y] * &j[Y] - rep.identity() * Complex64::new(rep.casimir(), 0.0);
        push("casimir J^2 = j(j+1)", two_j, max_abs(&cas));

        let dynkin = (killing_matrix(&rep) - Matrix3::identity()).amax();
        push("dynkin lambda_j tr(J_mu J_nu) = delta", two_j, dynkin);

        push("cartan-weyl relations", two_j, crate::algebra::cartan_weyl_check(&rep).max_residual());

        let mut euler: f64 = 0.0;
        for &a in &EULER_SAMPLE_A {
            euler = euler.max(euler_conjugation_check(a, &rep)?);
        }
        push("euler conjugation e^{aJz} L e^{-aJz} = L C + J S", two_j, euler);

        push("killing form", two_j, killing_form_check(&rep));

        let mut metric: f64 = 0.0;
        for &a in &EULER_SAMPLE_A {
            metric = metric.max(frame_matrices(a)?.metric_residual(&rep));
        }
        push("metric G^T kappa G = diag(1, sinh^2, sinh^2)", two_j, metric);

        let curv = curvature_components(&rep);
        push("curvature two-route agreement", two_j, curv.two_route_residual());
        push("curvature factor of 4", two_j, curv.factor_four_residual());
        push("curvature pair antisymmetry", two_j, curv.antisymmetry_residual());
        push("su2 commutator-trace identity", two_j, curv.su2_identity_residual());
    }
    Ok(IdentityReport {
        rows,
        metric_signature: METRIC_SIGNATURE.to_string(),
    })
}

/// Horizontal-to-vertical aspect ratio of the unfolded torus at radius `a`.
pub fn torus_aspect_ratio(a: f64) -> f64 {
    (0.5 * a).tanh()
}

/// Components of a tangent vector of the unfolded torus in the
/// `(psi + phi, psi - phi)` chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartVector {
    pub sum: f64,
    pub diff: f64,
}

impl ChartVector {
    fn new(sum: f64, diff: f64) -> Self {
        Self { sum, diff }
    }

    fn scale(self, k: f64) -> Self {
        Self::new(self.sum * k, self.diff * k)
    }

    fn add(self, o: Self) -> Self {
        Self::new(self.sum + o.sum, self.diff + o.diff)
    }

    /// Angle above the horizontal (`psi - phi`) axis in the drawn picture,
    /// where horizontal lengths are scaled by the aspect ratio.
    pub fn drawn_angle(self, a: f64) -> f64 {
        self.sum.atan2(self.diff * torus_aspect_ratio(a))
    }
}

/// Torus vectors at radius `a > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusVectors {
    /// Right-invariant `L_y`: `d/dpsi` at fixed `phi`.
    pub l_y: ChartVector,
    /// `d/dphi` at fixed `psi`.
    pub e_y: ChartVector,
    pub f_y: ChartVector,
    pub j_x_psi: ChartVector,
    pub grad_y: ChartVector,
    pub null: ChartVector,
}

pub fn torus_vectors(a: f64) -> Result<TorusVectors> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("torus vectors need a > 0, got {a}")));
    }
    let (coth, csch) = (1.0 / a.tanh(), 1.0 / a.sinh());
    let l_y = ChartVector::new(1.0, 1.0);
    let e_y = ChartVector::new(1.0, -1.0);
    let f_y = e_y.add(l_y.scale(-1.0));
    let j_x_psi = l_y.scale(coth).add(e_y.scale(-csch));
    let grad_y = e_y.add(l_y.scale(-a.cosh()));
    let null = l_y.add(j_x_psi);
    Ok(TorusVectors {
        l_y,
        e_y,
        f_y,
        j_x_psi,
        grad_y,
        null,
    })
}

pub const VIZ_COLUMNS: &str = "a,aspect_ratio,psi,d_a_jz,d_a_jx,jxpsi_jz,jxpsi_jx,ly_sum,ly_diff,ey_sum,ey_diff,fy_sum,fy_diff,jxpsi_sum,jxpsi_diff,grad_y_sum,grad_y_diff,null_sum,null_diff,null_angle_deg";

/// One row per `(a, psi)`: `psi` takes `n_points` values on `[-pi, pi)`,
/// where `d_a = J_z cos psi + J_x sin psi` and `J_{x,psi} = J_x cos psi - J_z sin psi`
/// are given in the right-invariant `(J_z, J_x)` basis; the torus vectors are
/// given in the `(psi + phi, psi - phi)` chart.
pub fn sl2r_viz_rows(a_values: &[f64], n_points: usize) -> Result<Vec<Vec<f64>>> {
    if n_points == 0 {
        return Err(Error::InvalidConfig("n_points must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(a_values.len() * n_points);
    for &a in a_values {
        let v = torus_vectors(a)?;
        let ratio = torus_aspect_ratio(a);
        for k in 0..n_points {
            let psi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / n_points as f64;
            let (s, c) = psi.sin_cos();
            rows.push(vec![
                a,
                ratio,
                psi,
                c,
                s,
                -s,
                c,
                v.l_y.sum,
                v.l_y.diff,
                v.e_y.sum,
                v.e_y.diff,
                v.f_y.sum,
                v.f_y.diff,
                v.j_x_psi.sum,
                v.j_x_psi.diff,
                v.grad_y.sum,
                v.grad_y.diff,
                v.null.sum,
                v.null.diff,
                v.null.drawn_angle(a).to_degrees(),
            ]);
        }
    }
    Ok(rows)
}

pub fn sl2r_viz_export<W: Write>(out: &mut W, a_values: &[f64], n_points: usize, config: &serde_json::Value) -> Result<()> {
    let rows = sl2r_viz_rows(a_values, n_points)?;
    writeln!(out, "# config: {config}")?;
    writeln!(out, "{VIZ_COLUMNS}")?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|x| format!("{x:.12e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
