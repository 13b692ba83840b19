//! Compatibility monitors, error norms, convergence rates and the per-cell
//! entropy-inequality audit.

use std::fmt::Write as _;

use crate::mesh::Mesh;
use crate::physics::{entropy_from_eos, primitives_from_state, ModelParams, PhysicsError};
use crate::solver::FieldSet;

/// One row of the run's time series.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsSample {
    pub t: f64,
    pub delta_a: f64,
    pub delta_s: f64,
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
    pub min_p: f64,
    pub min_rho: f64,
}

/// δ_A = ‖det A − companion‖∞ and δ_S = ‖companion − ρS(ρ, p)‖∞, where the
/// EOS entropy is evaluated with the companion density ρ0·(det companion)
/// and the cell pressure.
pub fn compatibility_errors(
    fields: &FieldSet,
    params: &ModelParams,
) -> Result<(f64, f64), PhysicsError> {
    let mut delta_a = 0.0f64;
    let mut delta_s = 0.0f64;
    for (i, u) in fields.states.iter().enumerate() {
        delta_a = delta_a.max((u.a.determinant() - fields.det_companion[i]).abs());
        let prim = primitives_from_state(u, params)?;
        let rho_comp = u.rho0 * fields.det_companion[i];
        let rhos_eos = entropy_from_eos(rho_comp, prim.p, params)?;
        delta_s = delta_s.max((fields.rhos_companion[i] - rhos_eos).abs());
    }
    Ok((delta_a, delta_s))
}

/// Full diagnostics row at the current time.
pub fn sample(
    mesh: &Mesh,
    fields: &FieldSet,
    params: &ModelParams,
) -> Result<DiagnosticsSample, PhysicsError> {
    let (delta_a, delta_s) = compatibility_errors(fields, params)?;
    let mut mass = 0.0;
    let mut energy = 0.0;
    let mut entropy = 0.0;
    let mut min_p = f64::INFINITY;
    let mut min_rho = f64::INFINITY;
    for (i, u) in fields.states.iter().enumerate() {
        let area = mesh.cells[i].area;
        let prim = primitives_from_state(u, params)?;
        mass += area * prim.rho;
        energy += area * u.energy;
        entropy += area * prim.rho * prim.s;
        min_p = min_p.min(prim.p);
        min_rho = min_rho.min(prim.rho);
    }
    Ok(DiagnosticsSample {
        t: fields.t,
        delta_a,
        delta_s,
        mass,
        energy,
        entropy,
        min_p,
        min_rho,
    })
}

/// L2 norm of (cell value − exact at barycenter), midpoint quadrature.
pub fn l2_error<F: Fn([f64; 2]) -> f64>(mesh: &Mesh, values: &[f64], exact: F) -> f64 {
    let mut sum = 0.0;
    for (i, cell) in mesh.cells.iter().enumerate() {
        let d = values[i] - exact(cell.barycenter);
        sum += cell.area * d * d;
    }
    sum.sqrt()
}

/// L1 norm of (cell value − exact at barycenter).
pub fn l1_error<F: Fn([f64; 2]) -> f64>(mesh: &Mesh, values: &[f64], exact: F) -> f64 {
    mesh.cells
        .iter()
        .enumerate()
        .map(|(i, c)| c.area * (values[i] - exact(c.barycenter)).abs())
        .sum()
}

/// Successive log-ratio convergence rates; infinite when the finer error
/// vanishes.
pub fn observed_order(resolution: &[f64], errors: &[f64]) -> Vec<f64> {
    assert!(resolution.len() == errors.len() && resolution.len() >= 2);
    let mut out = Vec::with_capacity(resolution.len() - 1);
    for i in 1..resolution.len() {
        assert!(resolution[i] < resolution[i - 1], "resolution must decrease");
        if errors[i] == 0.0 {
            out.push(f64::INFINITY);
        } else {
            out.push((errors[i - 1] / errors[i]).ln() / (resolution[i - 1] / resolution[i]).ln());
        }
    }
    out
}

/// Worst normalized per-cell entropy-inequality value: min over cells of
/// (production + entropy sources) / scale. Non-negative up to roundoff when
/// the scheme is entropy stable.
pub fn entropy_inequality_audit(audit: &[f64], rhos_companion: &[f64]) -> f64 {
    audit
        .iter()
        .zip(rhos_companion.iter())
        .map(|(a, r)| a / (1.0 + r.abs()))
        .fold(f64::INFINITY, f64::min)
}

pub const CSV_HEADER: &str = "t,delta_A,delta_S,mass,energy,entropy,min_p,min_rho";

pub fn diagnostics_csv(samples: &[DiagnosticsSample]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            s.t, s.delta_a, s.delta_s, s.mass, s.energy, s.entropy, s.min_p, s.min_rho
        );
    }
    out
}
