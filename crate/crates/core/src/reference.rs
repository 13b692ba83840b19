//! Reference solutions: exact Euler Riemann solver, 1D radial Euler oracle,
//! the viscous shock profile of Becker, the Taylor–Green vortex, and the
//! isentropic vortex initial condition.

use thiserror::Error;

use crate::physics::{state_from_primitives, Mat3, ModelParams, State, Vec3};

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("vacuum generated: pressure function has no positive root")]
    Vacuum,
    #[error("root not bracketed: {0}")]
    Bracket(String),
    #[error("inadmissible state: rho = {0}, p = {1}")]
    Inadmissible(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannState {
    pub rho: f64,
    pub v1: f64,
    pub v2: f64,
    pub p: f64,
}

impl RiemannState {
    pub fn new(rho: f64, v1: f64, v2: f64, p: f64) -> Self {
        RiemannState { rho, v1, v2, p }
    }
}

fn sound_speed(s: &RiemannState, gamma: f64) -> f64 {
    (gamma * s.p / s.rho).sqrt()
}

/// Pressure function f_K(p) and its derivative for one side of the fan.
fn pressure_fn(p: f64, s: &RiemannState, gamma: f64) -> (f64, f64) {
    let a = sound_speed(s, gamma);
    if p > s.p {
        // shock branch
        let ak = 2.0 / ((gamma + 1.0) * s.rho);
        let bk = (gamma - 1.0) / (gamma + 1.0) * s.p;
        let root = (ak / (p + bk)).sqrt();
        let f = (p - s.p) * root;
        let df = root * (1.0 - 0.5 * (p - s.p) / (p + bk));
        (f, df)
    } else {
        // rarefaction branch
        let ex = (gamma - 1.0) / (2.0 * gamma);
        let f = 2.0 * a / (gamma - 1.0) * ((p / s.p).powf(ex) - 1.0);
        let df = (p / s.p).powf(-(gamma + 1.0) / (2.0 * gamma)) / (s.rho * a);
        (f, df)
    }
}

/// Star-region pressure and velocity (Newton iteration on the pressure
/// function, tolerance 1e-12 relative).
pub fn star_state(
    left: &RiemannState,
    right: &RiemannState,
    gamma: f64,
) -> Result<(f64, f64), ReferenceError> {
    let dv = right.v1 - left.v1;
    // vacuum check: the two rarefaction tails must not separate
    let crit = 2.0 * sound_speed(left, gamma) / (gamma - 1.0)
        + 2.0 * sound_speed(right, gamma) / (gamma - 1.0);
    if crit <= dv {
        return Err(ReferenceError::Vacuum);
    }
    let mut p = 0.5 * (left.p + right.p).max(1e-8);
    // two-rarefaction guess is robust for most data
    let ex = (gamma - 1.0) / (2.0 * gamma);
    let al = sound_speed(left, gamma);
    let ar = sound_speed(right, gamma);
    let tr = (al + ar - 0.5 * (gamma - 1.0) * dv)
        / (al / left.p.powf(ex) + ar / right.p.powf(ex));
    if tr > 0.0 {
        p = tr.powf(1.0 / ex);
    }
    for _ in 0..100 {
        let (fl, dfl) = pressure_fn(p, left, gamma);
        let (fr, dfr) = pressure_fn(p, right, gamma);
        let f = fl + fr + dv;
        let df = dfl + dfr;
        let dp = f / df;
        let mut p_new = p - dp;
        if p_new <= 0.0 {
            p_new = 0.5 * p;
        }
        if (p_new - p).abs() <= 1e-12 * (1.0 + p) {
            p = p_new;
            break;
        }
        p = p_new;
    }
    let (fl, _) = pressure_fn(p, left, gamma);
    let (fr, _) = pressure_fn(p, right, gamma);
    let v = 0.5 * (left.v1 + right.v1) + 0.5 * (fr - fl);
    Ok((p, v))
}

/// Sample the exact solution of the Euler Riemann problem at ξ = x/t. The
/// transverse velocity rides passively with the contact.
pub fn exact_riemann_euler(
    left: &RiemannState,
    right: &RiemannState,
    xi: f64,
    gamma: f64,
) -> Result<RiemannState, ReferenceError> {
    let (p_star, v_star) = star_state(left, right, gamma)?;
    let g1 = (gamma - 1.0) / (gamma + 1.0);
    if xi <= v_star {
        // left of the contact
        let s = left;
        let a = sound_speed(s, gamma);
        if p_star > s.p {
            // left shock
            let speed = s.v1 - a * ((gamma + 1.0) / (2.0 * gamma) * p_star / s.p
                + (gamma - 1.0) / (2.0 * gamma))
                .sqrt();
            if xi <= speed {
                Ok(*s)
            } else {
                let rho = s.rho * ((p_star / s.p + g1) / (g1 * p_star / s.p + 1.0));
                Ok(RiemannState::new(rho, v_star, s.v2, p_star))
            }
        } else {
            // left rarefaction
            let a_star = a * (p_star / s.p).powf((gamma - 1.0) / (2.0 * gamma));
            let head = s.v1 - a;
            let tail = v_star - a_star;
            if xi <= head {
                Ok(*s)
            } else if xi >= tail {
                let rho = s.rho * (p_star / s.p).powf(1.0 / gamma);
                Ok(RiemannState::new(rho, v_star, s.v2, p_star))
            } else {
                let v = 2.0 / (gamma + 1.0) * (a + 0.5 * (gamma - 1.0) * s.v1 + xi);
                let fac = 2.0 / (gamma + 1.0) + g1 / a * (s.v1 - xi);
                let rho = s.rho * fac.powf(2.0 / (gamma - 1.0));
                let p = s.p * fac.powf(2.0 * gamma / (gamma - 1.0));
                Ok(RiemannState::new(rho, v, s.v2, p))
            }
        }
    } else {
        // right of the contact
        let s = right;
        let a = sound_speed(s, gamma);
        if p_star > s.p {
            // right shock
            let speed = s.v1 + a * ((gamma + 1.0) / (2.0 * gamma) * p_star / s.p
                + (gamma - 1.0) / (2.0 * gamma))
                .sqrt();
            if xi >= speed {
                Ok(*s)
            } else {
                let rho = s.rho * ((p_star / s.p + g1) / (g1 * p_star / s.p + 1.0));
                Ok(RiemannState::new(rho, v_star, s.v2, p_star))
            }
        } else {
            // right rarefaction
            let a_star = a * (p_star / s.p).powf((gamma - 1.0) / (2.0 * gamma));
            let head = s.v1 + a;
            let tail = v_star + a_star;
            if xi >= head {
                Ok(*s)
            } else if xi <= tail {
                let rho = s.rho * (p_star / s.p).powf(1.0 / gamma);
                Ok(RiemannState::new(rho, v_star, s.v2, p_star))
            } else {
                let v = 2.0 / (gamma + 1.0) * (-a + 0.5 * (gamma - 1.0) * s.v1 + xi);
                let fac = 2.0 / (gamma + 1.0) - g1 / a * (s.v1 - xi);
                let rho = s.rho * fac.powf(2.0 / (gamma - 1.0));
                let p = s.p * fac.powf(2.0 * gamma / (gamma - 1.0));
                Ok(RiemannState::new(rho, v, s.v2, p))
            }
        }
    }
}

// --- 1D cylindrical Euler oracle ---

/// Radial profile (ρ, u_r, p) at cell centers.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

impl RadialProfile {
    /// Piecewise-constant sample at radius `rq` (clamped to the grid).
    pub fn sample(&self, rq: f64) -> (f64, f64, f64) {
        let dr = self.r[1] - self.r[0];
        let i = (((rq - self.r[0]) / dr).round().max(0.0) as usize).min(self.r.len() - 1);
        (self.rho[i], self.u[i], self.p[i])
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Second-order TVD (minmod, Rusanov flux, Heun in time) solution of the
/// cylindrically symmetric Euler equations with the geometric source d=1,
/// used as the explosion-problem reference.
pub fn radial_euler_reference<F>(
    init: F,
    r_max: f64,
    t_final: f64,
    n_cells: usize,
    gamma: f64,
    cfl: f64,
) -> RadialProfile
where
    F: Fn(f64) -> (f64, f64, f64),
{
    let dr = r_max / n_cells as f64;
    let r: Vec<f64> = (0..n_cells).map(|i| (i as f64 + 0.5) * dr).collect();
    // conserved: (ρ, ρu, E)
    let mut u: Vec<[f64; 3]> = r
        .iter()
        .map(|&ri| {
            let (rho, vel, p) = init(ri);
            [rho, rho * vel, p / (gamma - 1.0) + 0.5 * rho * vel * vel]
        })
        .collect();
    let prim = |c: &[f64; 3]| -> (f64, f64, f64) {
        let rho = c[0];
        let vel = c[1] / rho;
        let p = (gamma - 1.0) * (c[2] - 0.5 * rho * vel * vel);
        (rho, vel, p)
    };
    let flux = |c: &[f64; 3]| -> [f64; 3] {
        let (rho, vel, p) = prim(c);
        [rho * vel, rho * vel * vel + p, vel * (c[2] + p)]
    };
    let geo = |c: &[f64; 3], ri: f64| -> [f64; 3] {
        let (rho, vel, p) = prim(c);
        [
            -rho * vel / ri,
            -rho * vel * vel / ri,
            -vel * (c[2] + p) / ri,
        ]
    };
    let rhs = |u: &Vec<[f64; 3]>| -> Vec<[f64; 3]> {
        let n = u.len();
        // limited slopes with reflective ghost at r=0 and copy at r_max
        let cell = |i: isize| -> [f64; 3] {
            if i < 0 {
                let c = u[(-1 - i) as usize];
                [c[0], -c[1], c[2]]
            } else if i as usize >= n {
                u[n - 1]
            } else {
                u[i as usize]
            }
        };
        let slope = |i: isize| -> [f64; 3] {
            let mut s = [0.0; 3];
            let (cm, c0, cp) = (cell(i - 1), cell(i), cell(i + 1));
            for q in 0..3 {
                s[q] = minmod(c0[q] - cm[q], cp[q] - c0[q]);
            }
            s
        };
        let face_flux = |i: isize| -> [f64; 3] {
            // states at face i+1/2
            let (cl, sl) = (cell(i), slope(i));
            let (cr, sr) = (cell(i + 1), slope(i + 1));
            let ul: [f64; 3] = std::array::from_fn(|q| cl[q] + 0.5 * sl[q]);
            let ur: [f64; 3] = std::array::from_fn(|q| cr[q] - 0.5 * sr[q]);
            let (rl, vl, pl) = prim(&ul);
            let (rr, vr, pr) = prim(&ur);
            let smax = (vl.abs() + (gamma * pl / rl).sqrt())
                .max(vr.abs() + (gamma * pr / rr).sqrt());
            let fl = flux(&ul);
            let fr = flux(&ur);
            std::array::from_fn(|q| 0.5 * (fl[q] + fr[q]) - 0.5 * smax * (ur[q] - ul[q]))
        };
        let mut out = vec![[0.0; 3]; n];
        let mut left = face_flux(-1);
        for i in 0..n {
            let right = face_flux(i as isize);
            let g = geo(&u[i], r[i]);
            for q in 0..3 {
                out[i][q] = -(right[q] - left[q]) / dr + g[q];
            }
            left = right;
        }
        out
    };
    let mut t = 0.0;
    while t < t_final {
        // wave-speed bound
        let mut smax = 0.0f64;
        for c in &u {
            let (rho, vel, p) = prim(c);
            smax = smax.max(vel.abs() + (gamma * p / rho).sqrt());
        }
        let mut dt = cfl * dr / smax;
        if t + dt > t_final {
            dt = t_final - t;
        }
        // Heun
        let k1 = rhs(&u);
        let u1: Vec<[f64; 3]> = u
            .iter()
            .zip(k1.iter())
            .map(|(c, k)| std::array::from_fn(|q| c[q] + dt * k[q]))
            .collect();
        let k2 = rhs(&u1);
        for i in 0..u.len() {
            for q in 0..3 {
                u[i][q] += 0.5 * dt * (k1[i][q] + k2[i][q]);
            }
        }
        t += dt;
        if dt <= 0.0 {
            break;
        }
    }
    let mut rho = Vec::with_capacity(u.len());
    let mut vel = Vec::with_capacity(u.len());
    let mut p = Vec::with_capacity(u.len());
    for c in &u {
        let (a, b, d) = prim(c);
        rho.push(a);
        vel.push(b);
        p.push(d);
    }
    RadialProfile { r, rho, u: vel, p }
}

// --- viscous shock profile ---

/// Dimensionless downstream velocity parameter λ² of the stationary viscous
/// shock.
pub fn becker_lambda_sq(m_s: f64, gamma: f64) -> f64 {
    (1.0 + 0.5 * (gamma - 1.0) * m_s * m_s) / (0.5 * (gamma + 1.0) * m_s * m_s)
}

/// Semi-analytic stationary shock profile (Prandtl number 3/4): dimensionless
/// (ρ̄, v̄, p̄) at the given positions, shock centered at x = 0. The profile
/// satisfies ρ̄ v̄ = 1 identically.
pub fn becker_profile(
    m_s: f64,
    re_s: f64,
    gamma: f64,
    xs: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), ReferenceError> {
    if m_s <= 1.0 {
        return Err(ReferenceError::Bracket(format!(
            "shock Mach number must exceed 1, got {m_s}"
        )));
    }
    let lam2 = becker_lambda_sq(m_s, gamma);
    let rate = 0.75 * re_s * (m_s * m_s - 1.0) / (gamma * m_s * m_s);
    // Solve |v̄−1|/|v̄−λ²|^{λ²} = K0·e^{rate·x} with K0 = ((1−λ²)/2)^{1−λ²}.
    // Parametrize v̄ = λ² + (1−λ²)·σ(t) with the logistic σ, so that both
    // distances to the asymptotes stay relatively accurate; in t the log
    // residual is strictly decreasing and safely bracketed.
    let span = 1.0 - lam2;
    let log_sigma = |t: f64| -> f64 { -(-t).exp().ln_1p() };
    // F(t) = ln(1−v̄) − λ²·ln(v̄−λ²) − ln(K0) − rate·x
    let log_k0 = (1.0 - lam2) * (0.5 * span).ln();
    let mut rho = Vec::with_capacity(xs.len());
    let mut vel = Vec::with_capacity(xs.len());
    let mut pres = Vec::with_capacity(xs.len());
    for &x in xs {
        let target = log_k0 + rate * x;
        let resid = |t: f64| -> f64 {
            span.ln() + log_sigma(-t) - lam2 * (span.ln() + log_sigma(t)) - target
        };
        let reach = (target.abs() + 60.0) / lam2.min(1.0);
        let (mut lo, mut hi) = (-reach, reach);
        let mut t = 0.0;
        for _ in 0..200 {
            t = 0.5 * (lo + hi);
            if resid(t) > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            if hi - lo <= 1e-14 * (1.0 + t.abs()) {
                break;
            }
        }
        let sig = 1.0 / (1.0 + (-t).exp());
        let v = lam2 + span * sig;
        let p = 1.0 - v
            + 0.5 / gamma * (gamma + 1.0) / (gamma - 1.0) * ((v - 1.0) / v) * (v - lam2);
        rho.push(1.0 / v);
        vel.push(v);
        pres.push(p);
    }
    Ok((rho, vel, pres))
}

// --- Taylor–Green vortex ---

/// Exact incompressible solution (v1, v2, p) with additive pressure constant.
pub fn taylor_green_exact(x: [f64; 2], t: f64, nu: f64, c: f64) -> (f64, f64, f64) {
    let decay = (-2.0 * nu * t).exp();
    let v1 = x[0].sin() * x[1].cos() * decay;
    let v2 = -x[0].cos() * x[1].sin() * decay;
    let p = c + 0.25 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * decay * decay;
    (v1, v2, p)
}

// --- isentropic vortex ---

/// Vortex strength used throughout.
pub const VORTEX_EPS: f64 = 5.0;

/// Temperature perturbation of the isentropic vortex centered at (5,5).
pub fn vortex_delta_t(x: [f64; 2], gamma: f64) -> f64 {
    let r2 = (x[0] - 5.0).powi(2) + (x[1] - 5.0).powi(2);
    -(gamma - 1.0) * VORTEX_EPS * VORTEX_EPS / (8.0 * gamma * std::f64::consts::PI.powi(2))
        * (1.0 - r2).exp()
}

/// Primitive fields (ρ, v1, v2, p) of the steady isentropic vortex. The
/// azimuthal velocity perturbation makes the field an exact stationary Euler
/// solution (p/ρ^γ ≡ 1).
pub fn vortex_primitives(x: [f64; 2], gamma: f64) -> (f64, f64, f64, f64) {
    let dt = vortex_delta_t(x, gamma);
    let rho = (1.0 + dt).powf(1.0 / (gamma - 1.0));
    let p = (1.0 + dt).powf(gamma / (gamma - 1.0));
    let r2 = (x[0] - 5.0).powi(2) + (x[1] - 5.0).powi(2);
    let fac = VORTEX_EPS / (2.0 * std::f64::consts::PI) * (0.5 * (1.0 - r2)).exp();
    let v1 = -fac * (x[1] - 5.0);
    let v2 = fac * (x[0] - 5.0);
    (rho, v1, v2, p)
}

/// Vortex state with A = I and the local density frozen as reference.
pub fn vortex_init(x: [f64; 2], params: &ModelParams) -> State {
    let (rho, v1, v2, p) = vortex_primitives(x, params.gamma);
    state_from_primitives(
        rho,
        &Vec3::new(v1, v2, 0.0),
        p,
        &Mat3::identity(),
        &Vec3::zeros(),
        rho,
        params,
    )
    .expect("vortex state is admissible")
}
