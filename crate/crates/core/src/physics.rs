//! Pointwise model evaluations: energy potential, primitive recovery, dual
//! variables, stresses, physical fluxes, relaxation sources and the eigenvalue
//! estimate for the unified first-order hyperbolic continuum model.
//!
//! State layout used everywhere (16 slots):
//! `(rho*v1..3 | E | A11..A33 row-major | J1..3)`.
//! The extended 17-slot vector prepends the density `rho0*|A|` at slot 0.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

pub const N_SLOTS: usize = 16;
pub const SLOT_MOM: usize = 0;
pub const SLOT_EN: usize = 3;
pub const SLOT_A: usize = 4;
pub const SLOT_J: usize = 13;

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error("inadmissible state{}: rho = {rho}, p = {p}", cell.map(|c| format!(" in cell {c}")).unwrap_or_default())]
    Inadmissible { rho: f64, p: f64, cell: Option<usize> },
    #[error("domain error: {0}")]
    Domain(String),
}

/// Material and model parameters. Relaxation times may be huge (1e20) to
/// freeze the sources, retrieving elastic solids without heat conduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub gamma: f64,
    pub c_v: f64,
    pub c_s: f64,
    pub c_h: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub rho0_ref: f64,
    pub t0_ref: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            gamma: 7.0 / 5.0,
            c_v: 2.5,
            c_s: 0.0,
            c_h: 0.0,
            tau1: 1e20,
            tau2: 1e20,
            rho0_ref: 1.0,
            t0_ref: 1.0,
        }
    }
}

impl ModelParams {
    /// Shear sources / thermal-impulse dynamics are only active for positive
    /// propagation speeds; both pure-fluid limits set them to zero.
    pub fn shear_active(&self) -> bool {
        self.c_s > 0.0
    }

    pub fn thermal_active(&self) -> bool {
        self.c_h > 0.0
    }

    /// Relaxation time reproducing a Navier-Stokes viscosity mu.
    pub fn tau1_from_mu(&self, mu: f64) -> f64 {
        6.0 * mu / (self.rho0_ref * self.c_s * self.c_s)
    }

    /// Relaxation time reproducing a Fourier conductivity kappa.
    pub fn tau2_from_kappa(&self, kappa: f64) -> f64 {
        kappa / (self.rho0_ref * self.t0_ref * self.c_h * self.c_h)
    }
}

/// Conserved state of one cell plus the frozen reference density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub mom: Vec3,
    pub energy: f64,
    pub a: Mat3,
    pub j: Vec3,
    pub rho0: f64,
}

impl State {
    pub fn to_slots(&self) -> [f64; N_SLOTS] {
        let mut u = [0.0; N_SLOTS];
        u[0] = self.mom[0];
        u[1] = self.mom[1];
        u[2] = self.mom[2];
        u[SLOT_EN] = self.energy;
        for i in 0..3 {
            for k in 0..3 {
                u[SLOT_A + 3 * i + k] = self.a[(i, k)];
            }
        }
        u[SLOT_J] = self.j[0];
        u[SLOT_J + 1] = self.j[1];
        u[SLOT_J + 2] = self.j[2];
        u
    }

    pub fn from_slots(u: &[f64; N_SLOTS], rho0: f64) -> Self {
        let mut a = Mat3::zeros();
        for i in 0..3 {
            for k in 0..3 {
                a[(i, k)] = u[SLOT_A + 3 * i + k];
            }
        }
        Self {
            mom: Vec3::new(u[0], u[1], u[2]),
            energy: u[SLOT_EN],
            a,
            j: Vec3::new(u[SLOT_J], u[SLOT_J + 1], u[SLOT_J + 2]),
            rho0,
        }
    }

    pub fn density(&self) -> f64 {
        self.rho0 * self.a.determinant()
    }
}

/// Primitive quantities recovered from a conserved state.
#[derive(Debug, Clone, Copy)]
pub struct Primitives {
    pub rho: f64,
    pub v: Vec3,
    pub p: f64,
    pub temp: f64,
    pub s: f64,
}

/// Derivatives of the total energy with respect to the conserved slots,
/// plus the cofactor duals of the determinant potential.
#[derive(Debug, Clone, Copy)]
pub struct DualSet {
    pub r_rho: f64,
    pub v: Vec3,
    pub temp: f64,
    pub alpha: Mat3,
    pub beta: Vec3,
    pub w: Mat3,
}

/// Metric tensor G = A^T A.
pub fn metric(a: &Mat3) -> Mat3 {
    a.transpose() * a
}

/// Trace-free part of the metric tensor.
pub fn metric_dev(a: &Mat3) -> Mat3 {
    let g = metric(a);
    let tr = g.trace() / 3.0;
    g - Mat3::identity() * tr
}

/// Total energy density E1 + E2 + E3 + E4 from primitive-like arguments.
pub fn total_energy(
    rho: f64,
    v: &Vec3,
    s: f64,
    a: &Mat3,
    j: &Vec3,
    params: &ModelParams,
) -> Result<f64, PhysicsError> {
    if rho <= 0.0 {
        return Err(PhysicsError::Domain(format!("nonpositive density {rho}")));
    }
    let e1 = rho.powf(params.gamma) * (s / params.c_v).exp() / (params.gamma - 1.0);
    let e2 = 0.5 * rho * v.norm_squared();
    let gd = metric_dev(a);
    let e3 = 0.25 * rho * params.c_s * params.c_s * gd.dot(&gd);
    let e4 = 0.5 * params.c_h * params.c_h * rho * j.norm_squared();
    Ok(e1 + e2 + e3 + e4)
}

/// Conserved state assembled from (rho, v, p, A, J); rho0 is stored separately
/// by the caller, here it only fixes the density consistency rho = rho0 |A|.
pub fn state_from_primitives(
    rho: f64,
    v: &Vec3,
    p: f64,
    a: &Mat3,
    j: &Vec3,
    rho0: f64,
    params: &ModelParams,
) -> Result<State, PhysicsError> {
    if rho <= 0.0 || p <= 0.0 {
        return Err(PhysicsError::Inadmissible { rho, p, cell: None });
    }
    let s = params.c_v * (p / rho.powf(params.gamma)).ln();
    let energy = total_energy(rho, v, s, a, j, params)?;
    Ok(State { mom: rho * v, energy, a: *a, j: *j, rho0 })
}

/// Primitive recovery. Density comes from the determinant constraint.
pub fn primitives_from_state(u: &State, params: &ModelParams) -> Result<Primitives, PhysicsError> {
    let rho = u.density();
    if rho <= 0.0 {
        return Err(PhysicsError::Inadmissible { rho, p: f64::NAN, cell: None });
    }
    let v = u.mom / rho;
    let e2 = 0.5 * rho * v.norm_squared();
    let gd = metric_dev(&u.a);
    let e3 = 0.25 * rho * params.c_s * params.c_s * gd.dot(&gd);
    let e4 = 0.5 * params.c_h * params.c_h * rho * u.j.norm_squared();
    let rho_e = u.energy - e2 - e3 - e4;
    let p = (params.gamma - 1.0) * rho_e;
    if p <= 0.0 {
        return Err(PhysicsError::Inadmissible { rho, p, cell: None });
    }
    let temp = p / (rho * (params.gamma - 1.0) * params.c_v);
    let s = params.c_v * (p / rho.powf(params.gamma)).ln();
    Ok(Primitives { rho, v, p, temp, s })
}

/// Cofactor matrix of A: the dual variables of the determinant potential.
/// Satisfies w = |A| A^{-T} for invertible A and w : A = 3 |A|.
pub fn gcl_duals(a: &Mat3) -> Mat3 {
    let c = |i1: usize, j1: usize, i2: usize, j2: usize| a[(i1, j1)] * a[(i2, j2)];
    Mat3::new(
        c(1, 1, 2, 2) - c(1, 2, 2, 1),
        c(1, 2, 2, 0) - c(1, 0, 2, 2),
        c(1, 0, 2, 1) - c(1, 1, 2, 0),
        c(0, 2, 2, 1) - c(0, 1, 2, 2),
        c(0, 0, 2, 2) - c(0, 2, 2, 0),
        c(0, 1, 2, 0) - c(0, 0, 2, 1),
        c(0, 1, 1, 2) - c(0, 2, 1, 1),
        c(0, 2, 1, 0) - c(0, 0, 1, 2),
        c(0, 0, 1, 1) - c(0, 1, 1, 0),
    )
}

/// All dual variables of one admissible state.
pub fn dual_variables(u: &State, params: &ModelParams) -> Result<DualSet, PhysicsError> {
    let prim = primitives_from_state(u, params)?;
    dual_variables_with(u, &prim, params)
}

pub fn dual_variables_with(
    u: &State,
    prim: &Primitives,
    params: &ModelParams,
) -> Result<DualSet, PhysicsError> {
    let rho = prim.rho;
    let gd = metric_dev(&u.a);
    // d(E1)/d(rho) at fixed rho*S, via E1 = rho^gamma exp(S/c_v)/(gamma-1).
    let e1_rho = rho.powf(params.gamma - 1.0)
        * (prim.s / params.c_v).exp()
        * (params.gamma - prim.s / params.c_v)
        / (params.gamma - 1.0);
    let cs2 = params.c_s * params.c_s;
    let ch2 = params.c_h * params.c_h;
    let r_rho = e1_rho - 0.5 * prim.v.norm_squared()
        + 0.25 * cs2 * gd.dot(&gd)
        + 0.5 * ch2 * u.j.norm_squared();
    let alpha = u.a * gd * (rho * cs2);
    let beta = ch2 * rho * u.j;
    Ok(DualSet {
        r_rho,
        v: prim.v,
        temp: prim.temp,
        alpha,
        beta,
        w: gcl_duals(&u.a),
    })
}

/// Shear stress, thermal stress, their work and the heat flux.
pub fn stresses(duals: &DualSet, u: &State) -> (Mat3, Mat3, Vec3, Vec3) {
    let sigma = u.a.transpose() * duals.alpha;
    let phi = u.j * duals.beta.transpose();
    let chi = (sigma + phi).transpose() * duals.v;
    let h = duals.temp * duals.beta;
    (sigma, phi, chi, h)
}

/// Physical flux tensor in direction k (0 or 1), per conserved slot.
/// The distortion and thermal-impulse rows carry gradient-form fluxes:
/// the flux of A_{ik'} in direction k is (A_im v_m) delta_{k k'}.
pub fn physical_flux(
    u: &State,
    prim: &Primitives,
    duals: &DualSet,
    params: &ModelParams,
    k: usize,
) -> [f64; N_SLOTS] {
    let (sigma, phi, chi, h) = stresses(duals, u);
    let v = prim.v;
    let mut f = [0.0; N_SLOTS];
    for i in 0..3 {
        let delta = if i == k { 1.0 } else { 0.0 };
        f[SLOT_MOM + i] = prim.rho * v[i] * v[k] + prim.p * delta + sigma[(i, k)] + phi[(i, k)];
    }
    f[SLOT_EN] = u.energy * v[k] + v[k] * prim.p + chi[k] + h[k];
    let av = u.a * v;
    for i in 0..3 {
        f[SLOT_A + 3 * i + k] = av[i];
    }
    // thermal impulse flux (J_m v_m + T) delta_{k k'}; frozen when c_h = 0
    if params.thermal_active() {
        f[SLOT_J + k] = u.j.dot(&v) + prim.temp;
    }
    f
}

/// Relaxation functions theta1, theta2; callers must gate on activity.
pub fn thetas(u: &State, prim: &Primitives, params: &ModelParams) -> (f64, f64) {
    let det_a = u.a.determinant();
    let z1 = u.rho0 / prim.rho;
    let z2 = u.rho0 * params.t0_ref / (prim.rho * prim.temp);
    let theta1 =
        (1.0 / 3.0) * prim.rho * z1 * params.tau1 * params.c_s * params.c_s * det_a.powf(-5.0 / 3.0);
    let theta2 = prim.rho * z2 * params.tau2 * params.c_h * params.c_h;
    (theta1, theta2)
}

/// Algebraic relaxation sources; only distortion and thermal-impulse slots
/// are nonzero. Inactive subsystems (zero propagation speed) contribute zero.
pub fn sources(u: &State, prim: &Primitives, duals: &DualSet, params: &ModelParams) -> [f64; N_SLOTS] {
    let mut src = [0.0; N_SLOTS];
    let (theta1, theta2) = thetas(u, prim, params);
    if params.shear_active() {
        for i in 0..3 {
            for k in 0..3 {
                src[SLOT_A + 3 * i + k] = -duals.alpha[(i, k)] / theta1;
            }
        }
    }
    if params.thermal_active() {
        for k in 0..3 {
            src[SLOT_J + k] = -duals.beta[k] / theta2;
        }
    }
    src
}

/// Entropy production rate of the sources, alpha:alpha/(theta1 T) + beta.beta/(theta2 T).
pub fn source_entropy_production(
    u: &State,
    prim: &Primitives,
    duals: &DualSet,
    params: &ModelParams,
) -> f64 {
    let (theta1, theta2) = thetas(u, prim, params);
    let mut prod = 0.0;
    if params.shear_active() {
        prod += duals.alpha.dot(&duals.alpha) / (theta1 * prim.temp);
    }
    if params.thermal_active() {
        prod += duals.beta.dot(&duals.beta) / (theta2 * prim.temp);
    }
    prod
}

/// Maximum wave speed estimate.
pub fn max_eigenvalue(prim: &Primitives, params: &ModelParams) -> f64 {
    (params.gamma * prim.p / prim.rho
        + (4.0 / 3.0) * params.c_s * params.c_s
        + params.c_h * params.c_h)
        .sqrt()
}

/// Total entropy from the equation of state: rho S = rho c_v ln(p / rho^gamma).
pub fn entropy_from_eos(rho: f64, p: f64, params: &ModelParams) -> Result<f64, PhysicsError> {
    if rho <= 0.0 || p <= 0.0 {
        return Err(PhysicsError::Domain(format!("nonpositive rho = {rho} or p = {p}")));
    }
    Ok(rho * params.c_v * (p / rho.powf(params.gamma)).ln())
}

/// Second derivative of |A| with respect to the distortion entries, averaged
/// along the straight path between the two interface states. Entries are
/// linear in A, so the midpoint value equals the exact path integral and the
/// Roe property H (A_r - A_l) = w_r - w_l holds to roundoff.
pub fn gcl_hessian_midpoint(a_l: &Mat3, a_r: &Mat3) -> [[f64; 9]; 9] {
    let a = (a_l + a_r) * 0.5;
    let mut h = [[0.0; 9]; 9];
    // d w_{ik} / d A_{jl} = eps_{i j m} eps_{k l n} A_{mn} (cofactor linearity)
    let eps = |i: usize, j: usize, k: usize| -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    for i in 0..3 {
        for k in 0..3 {
            for jj in 0..3 {
                for l in 0..3 {
                    let mut v = 0.0;
                    for m in 0..3 {
                        for n in 0..3 {
                            let e = eps(i, jj, m) * eps(k, l, n);
                            if e != 0.0 {
                                v += e * a[(m, n)];
                            }
                        }
                    }
                    h[3 * i + k][3 * jj + l] = v;
                }
            }
        }
    }
    h
}

/// Quadratic form dA . H . dA of the midpoint Hessian; by the Roe property it
/// equals dA : (w_r - w_l).
pub fn hessian_quadratic_form(a_l: &Mat3, a_r: &Mat3) -> f64 {
    let da = a_r - a_l;
    let dw = gcl_duals(a_r) - gcl_duals(a_l);
    da.dot(&dw)
}

/// Entropy duals of the 17-slot extended state (density slot prepended).
pub fn entropy_duals17(duals: &DualSet) -> [f64; 17] {
    let it = 1.0 / duals.temp;
    let mut r = [0.0; 17];
    r[0] = -duals.r_rho * it;
    for i in 0..3 {
        r[1 + i] = -duals.v[i] * it;
    }
    r[4] = it;
    for i in 0..3 {
        for k in 0..3 {
            r[5 + 3 * i + k] = -duals.alpha[(i, k)] * it;
        }
    }
    for k in 0..3 {
        r[14 + k] = -duals.beta[k] * it;
    }
    r
}

/// Restricted entropy duals: only momentum and thermal-impulse slots carry
/// the thermodynamic correction.
pub fn restricted_duals17(duals: &DualSet) -> [f64; 17] {
    let it = 1.0 / duals.temp;
    let mut r = [0.0; 17];
    for i in 0..3 {
        r[1 + i] = -duals.v[i] * it;
    }
    for k in 0..3 {
        r[14 + k] = -duals.beta[k] * it;
    }
    r
}
