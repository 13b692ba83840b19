// scratch probe: entropy-condition numerator behavior as velocity jumps shrink
use hgtc::numerics::{edge_fluxes, EdgeOptions, N17};
use hgtc::physics::{
    dual_variables_with, entropy_duals17, physical_flux, primitives_from_state,
    state_from_primitives, Mat3, ModelParams, State, Vec3, N_SLOTS,
};

fn f17(u: &State, params: &ModelParams, n: &Vec3) -> [f64; N17] {
    let prim = primitives_from_state(u, params).unwrap();
    let duals = dual_variables_with(u, &prim, params).unwrap();
    let mut out = [0.0; N17];
    for k in 0..3 {
        if n[k] == 0.0 {
            continue;
        }
        let f = physical_flux(u, &prim, &duals, params, k);
        for s in 0..N_SLOTS {
            out[s + 1] += f[s] * n[k];
        }
        out[0] += u.rho0 * u.a.determinant() * prim.v[k] * n[k];
    }
    out
}

fn residual_no_thermo(u_l: &State, u_r: &State, n: &Vec3, params: &ModelParams) -> (f64, f64) {
    let opts = EdgeOptions {
        dissipation: false,
        gcl_correction: true,
        thermo_correction: false,
    };
    let rec = edge_fluxes(u_l, u_r, n, params, &opts).unwrap();
    // assemble the 17-slot hat flux: density slot = rho0_l * comp_deta, rest = conservative
    let mut hat = [0.0; N17];
    hat[0] = u_l.rho0 * rec.comp_deta_flux;
    for s in 0..N_SLOTS {
        hat[s + 1] = rec.conservative[s];
    }
    let prim_l = primitives_from_state(u_l, params).unwrap();
    let prim_r = primitives_from_state(u_r, params).unwrap();
    let duals_l = dual_variables_with(u_l, &prim_l, params).unwrap();
    let duals_r = dual_variables_with(u_r, &prim_r, params).unwrap();
    let r_l = entropy_duals17(&duals_l);
    let r_r = entropy_duals17(&duals_r);
    let fl = f17(u_l, params, n);
    let fr = f17(u_r, params, n);
    let mut res = 0.0;
    for s in 0..N17 {
        res += r_l[s] * (hat[s] - fl[s]);
        res += r_r[s] * (fr[s] - hat[s]);
    }
    for s in 0..N_SLOTS {
        res += (r_l[s + 1] + r_r[s + 1]) * rec.fluctuation[s];
    }
    res -= (prim_r.rho * prim_r.s * prim_r.v + duals_r.beta).dot(n)
        - (prim_l.rho * prim_l.s * prim_l.v + duals_l.beta).dot(n);
    // also report the restricted-dual jump norm
    let mut drt2 = 0.0;
    for i in 0..3 {
        let d = -prim_r.v[i] / prim_r.temp + prim_l.v[i] / prim_l.temp;
        drt2 += d * d;
        let db = -duals_r.beta[i] / prim_r.temp + duals_l.beta[i] / prim_l.temp;
        drt2 += db * db;
    }
    (res, drt2.sqrt())
}

fn main() {
    let params = ModelParams {
        gamma: 1.4,
        c_v: 2.5,
        c_s: 0.0,
        c_h: 0.0,
        tau1: 1e20,
        tau2: 1e20,
        ..ModelParams::default()
    };
    let n = Vec3::new(1.0, 0.0, 0.0);
    // two at-rest states with different rho and p (vortex-like thermal gradient)
    for scale in [0.0, 1e-6, 1e-4, 1e-2, 1e-1] {
        let v_l = Vec3::new(0.0, 0.0, 0.0);
        let v_r = Vec3::new(scale, -0.5 * scale, 0.0);
        let u_l =
            state_from_primitives(0.9, &v_l, 0.85, &Mat3::identity(), &Vec3::zeros(), 0.9, &params)
                .unwrap();
        let u_r =
            state_from_primitives(1.0, &v_r, 1.0, &Mat3::identity(), &Vec3::zeros(), 1.0, &params)
                .unwrap();
        let (res, drt) = residual_no_thermo(&u_l, &u_r, &n, &params);
        println!(
            "dv={scale:.0e}: residual={res:+.6e} |dr~|={drt:.3e} implied alpha_s flux={:.3e}",
            if drt > 0.0 { res / drt } else { f64::NAN }
        );
    }
}
