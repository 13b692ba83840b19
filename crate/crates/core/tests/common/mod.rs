//! Shared helpers for integration tests: seeded random admissible states.
#![allow(dead_code)]

use hgtc::physics::{state_from_primitives, Mat3, ModelParams, State, Vec3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random admissible state: distortion near identity (positive determinant),
/// moderate velocity/pressure, small thermal impulse.
pub fn random_state(rng: &mut ChaCha8Rng, params: &ModelParams) -> State {
    let mut a = Mat3::identity();
    for i in 0..3 {
        for k in 0..3 {
            a[(i, k)] += rng.gen_range(-0.25..0.25);
        }
    }
    let rho0: f64 = rng.gen_range(0.5..2.0);
    let rho = rho0 * a.determinant();
    let v = Vec3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let p = rng.gen_range(0.5..2.0);
    let j = if params.c_h > 0.0 {
        Vec3::new(
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
        )
    } else {
        Vec3::zeros()
    };
    state_from_primitives(rho, &v, p, &a, &j, rho0, params).unwrap()
}

pub fn test_params() -> ModelParams {
    ModelParams {
        c_s: 0.8,
        c_h: 0.6,
        tau1: 2.0,
        tau2: 3.0,
        ..ModelParams::default()
    }
}
