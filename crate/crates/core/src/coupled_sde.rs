//! Coupled SDEs for the Cartan coordinates `(V, a, U)` in the moving frame,
//! with a hybrid hand-off to the direct Kraus integrator near `a = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{adjoint_rotation_unchecked, exp_anti_hermitian_su2, Mat2, Vec3, X, Y, Z};
use crate::cartan::{cartan_decompose_unchecked, povm_direction, CartanForm};
use crate::error::{Error, Result};
use crate::trajectory::{KrausIntegrator, KrausPoint, WienerPath};

/// Smallest radial coordinate the coupled step accepts.
pub const A_FLOOR: f64 = 0.05;
/// Radial coordinate above which a direct-integrated path is handed back.
pub const A_HANDOFF: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledState {
    pub v: Mat2,
    pub a: f64,
    pub u: Mat2,
}

impl CoupledState {
    pub fn radial(a: f64) -> Self {
        Self {
            v: Mat2::identity(),
            a,
            u: Mat2::identity(),
        }
    }

    pub fn from_form(f: &CartanForm) -> Self {
        Self {
            v: f.v,
            a: f.a,
            u: f.u,
        }
    }

    pub fn form(&self) -> CartanForm {
        CartanForm {
            v: self.v,
            a: self.a,
            u: self.u,
        }
    }

    pub fn kraus(&self) -> KrausPoint {
        KrausPoint::from_matrix_unchecked(self.form().recompose())
    }
}

/// `dW_move = R(V)^{-1} dW = R(V)^T dW`.
pub fn moving_frame_increments(dw: &Vec3, v: &Mat2) -> Vec3 {
    let r = adjoint_rotation_unchecked(v);
    let mut out = [0.0; 3];
    for (mu, o) in out.iter_mut().enumerate() {
        *o = r[(0, mu)] * dw[0] + r[(1, mu)] * dw[1] + r[(2, mu)] * dw[2];
    }
    out
}

/// Project a nearly special-unitary 2x2 matrix back onto SU(2) using its first column.
pub fn reunitarize(m: &Mat2) -> Mat2 {
    let a = m[(0, 0)];
    let b = m[(1, 0)];
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    Mat2::new(a, -b.conj(), b, a.conj())
}

/// Per-step update rule for the coupled system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoupledScheme {
    /// Euler-Maruyama in `a` (drift `gamma dt coth a`), first-order group
    /// increments for `U` and `V`.
    #[default]
    EulerMaruyama,
    /// Keeps every term of second order in the increments: the realized
    /// transverse square replaces `gamma dt` in the drift, and the `U`, `V`
    /// increments carry their `dW^z`-cross corrections.
    SecondOrder,
}

/// One Euler-Maruyama step in `a` with exact group exponentials for `U` and `V`.
pub fn step_coupled(s: &CoupledState, dw: &Vec3, gamma: f64, dt: f64) -> Result<CoupledState> {
    step_coupled_with(CoupledScheme::EulerMaruyama, s, dw, gamma, dt)
}

pub fn step_coupled_with(
    scheme: CoupledScheme,
    s: &CoupledState,
    dw: &Vec3,
    gamma: f64,
    dt: f64,
) -> Result<CoupledState> {
    if !(s.a > A_FLOOR) {
        return Err(Error::BelowFloor {
            a: s.a,
            floor: A_FLOOR,
        });
    }
    Ok(step_unchecked(scheme, s, dw, gamma, dt))
}

fn step_unchecked(
    scheme: CoupledScheme,
    s: &CoupledState,
    dw: &Vec3,
    gamma: f64,
    dt: f64,
) -> CoupledState {
    let m = moving_frame_increments(dw, &s.v);
    let sg = gamma.sqrt();
    let y = [sg * m[Z], sg * m[X], sg * m[Y]];
    let (sh, ch) = (s.a.sinh(), s.a.cosh());
    let csch = 1.0 / sh;
    let coth = ch / sh;
    let (a_next, phi_coef, psi_coef) = match scheme {
        CoupledScheme::EulerMaruyama => (s.a + gamma * dt * coth + y[Z], csch, coth),
        CoupledScheme::SecondOrder => (
            s.a + y[Z] + 0.5 * coth * (y[X] * y[X] + y[Y] * y[Y]),
            csch * (1.0 - coth * y[Z]),
            coth - (csch * csch + 0.5) * y[Z],
        ),
    };
    // Jx sqrt(g) dWm^y - Jy sqrt(g) dWm^x, as a (z, x, y) vector
    let dphi = [0.0, y[Y] * phi_coef, -y[X] * phi_coef];
    let dpsi = [0.0, -y[Y] * psi_coef, y[X] * psi_coef];
    // U' = exp(-i dPhi) U, V' = V exp(+i dPsi)
    let u = exp_anti_hermitian_su2(&dphi) * s.u;
    let v = s.v * exp_anti_hermitian_su2(&dpsi);
    CoupledState {
        v: reunitarize(&v),
        a: a_next,
        u: reunitarize(&u),
    }
}

#[derive(Clone, Debug)]
enum Mode {
    Direct(KrausIntegrator),
    Coupled(CoupledState),
}

/// Coupled integrator that runs the direct Kraus update while `a` is near the
/// origin and switches to the Cartan coordinates once `a > A_HANDOFF`.
#[derive(Clone, Debug)]
pub struct HybridIntegrator {
    mode: Mode,
    scheme: CoupledScheme,
    gamma: f64,
    dt: f64,
    handoffs: usize,
}

impl HybridIntegrator {
    pub fn new(start: CoupledState, gamma: f64, dt: f64) -> Self {
        Self::with_scheme(CoupledScheme::EulerMaruyama, start, gamma, dt)
    }

    pub fn with_scheme(scheme: CoupledScheme, start: CoupledState, gamma: f64, dt: f64) -> Self {
        let mut h = Self {
            mode: Mode::Coupled(start),
            scheme,
            gamma,
            dt,
            handoffs: 0,
        };
        if !(start.a > A_FLOOR) {
            h.to_direct(start.kraus());
        }
        h
    }

    fn to_direct(&mut self, k: KrausPoint) {
        self.mode = Mode::Direct(KrausIntegrator::resume(k, self.gamma, 0));
        self.handoffs += 1;
    }

    pub fn step(&mut self, dw: &Vec3) {
        match &mut self.mode {
            Mode::Coupled(s) => {
                let next = step_unchecked(self.scheme, s, dw, self.gamma, self.dt);
                if next.a > A_FLOOR {
                    *s = next;
                } else {
                    let k = crate::trajectory::normalize_det(&next.form().recompose());
                    self.to_direct(KrausPoint::from_matrix_unchecked(k));
                }
            }
            Mode::Direct(integ) => {
                integ.step(dw);
                let f = cartan_decompose_unchecked(integ.state().matrix());
                if f.a > A_HANDOFF {
                    self.mode = Mode::Coupled(CoupledState::from_form(&f));
                    self.handoffs += 1;
                }
            }
        }
    }

    /// Current Cartan form; gauge follows the coupled evolution when coupled.
    pub fn form(&self) -> CartanForm {
        match &self.mode {
            Mode::Coupled(s) => s.form(),
            Mode::Direct(integ) => cartan_decompose_unchecked(integ.state().matrix()),
        }
    }

    pub fn is_coupled(&self) -> bool {
        matches!(self.mode, Mode::Coupled(_))
    }

    pub fn handoffs(&self) -> usize {
        self.handoffs
    }
}

/// Gauge-invariant comparison of two Cartan forms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantDistance {
    pub delta_a: f64,
    pub povm_angle: f64,
    pub w_distance: f64,
}

pub fn invariant_distance(x: &CartanForm, y: &CartanForm) -> InvariantDistance {
    let w = x.polar_unitary() - y.polar_unitary();
    InvariantDistance {
        delta_a: (x.a - y.a).abs(),
        povm_angle: povm_direction(&x.u).angle_to(&povm_direction(&y.u)),
        w_distance: w.iter().fold(0.0f64, |m, z: &Complex64| m.max(z.norm())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub checkpoints: Vec<f64>,
    pub deviations: Vec<InvariantDistance>,
    pub max_delta_a: f64,
    pub max_povm_angle: f64,
    pub max_w_distance: f64,
    /// Final-time deviations on the same Brownian path refined to `dt / 2`.
    pub refined_final: InvariantDistance,
    /// `|da(dt)| / |da(dt/2)|` at the final time.
    pub halving_ratio: f64,
}

/// Run both integrators from `e^{a0 J_z}` over `path` and return the
/// gauge-invariant deviations at each checkpoint.
pub fn compare_on_path(
    scheme: CoupledScheme,
    path: &WienerPath,
    k0_a: f64,
    gamma: f64,
    checkpoints: &[f64],
) -> Result<Vec<InvariantDistance>> {
    let mut steps = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        let s = (t / path.dt).round();
        if !(t >= 0.0) || s as usize > path.n_steps() {
            return Err(Error::CheckpointOutOfRange {
                t,
                total: path.duration(),
            });
        }
        steps.push(s as usize);
    }
    let mut direct = KrausIntegrator::resume(KrausPoint::radial(k0_a), gamma, 0);
    let mut coupled =
        HybridIntegrator::with_scheme(scheme, CoupledState::radial(k0_a), gamma, path.dt);
    let mut out = vec![InvariantDistance::default(); steps.len()];
    for i in 0..=path.n_steps() {
        if i > 0 {
            let dw = &path.increments[i - 1];
            direct.step(dw);
            coupled.step(dw);
        }
        for (slot, &s) in out.iter_mut().zip(&steps) {
            if s == i {
                let fd = cartan_decompose_unchecked(direct.state().matrix());
                *slot = invariant_distance(&fd, &coupled.form());
            }
        }
    }
    Ok(out)
}

pub fn cross_validate(
    scheme: CoupledScheme,
    path: &WienerPath,
    k0_a: f64,
    gamma: f64,
    checkpoints: &[f64],
) -> Result<CrossValidationReport> {
    if !(k0_a >= A_HANDOFF) {
        return Err(Error::Domain(format!(
            "initial radial coordinate {k0_a} must be at least {A_HANDOFF}"
        )));
    }
    let mut times = checkpoints.to_vec();
    let total = path.duration();
    if times.last().map_or(true, |&t| (t - total).abs() > 1e-12 * total.max(1.0)) {
        times.push(total);
    }
    let deviations = compare_on_path(scheme, path, k0_a, gamma, &times)?;
    let refined = path.refine(path.seed ^ 0x9e37_79b9_7f4a_7c15);
    let refined_final = compare_on_path(scheme, &refined, k0_a, gamma, &[total])?[0];
    let last = *deviations.last().expect("final checkpoint present");
    let fold = |f: fn(&InvariantDistance) -> f64| deviations.iter().map(f).fold(0.0, f64::max);
    Ok(CrossValidationReport {
        checkpoints: times,
        max_delta_a: fold(|d| d.delta_a),
        max_povm_angle: fold(|d| d.povm_angle),
        max_w_distance: fold(|d| d.w_distance),
        deviations,
        refined_final,
        halving_ratio: last.delta_a / refined_final.delta_a,
    })
}
