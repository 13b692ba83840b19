//! Global semi-discrete right-hand side, boundary conditions, CFL step
//! control and explicit Runge–Kutta time integration.

use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics::{self, DiagnosticsSample};
use crate::mesh::{Mesh, BOUNDARY};
use crate::numerics::{edge_fluxes, production_redistribution, rusanov_epsilon, EdgeFluxes, EdgeOptions};
use crate::physics::{
    dual_variables_with, max_eigenvalue, primitives_from_state, source_entropy_production,
    sources, ModelParams, PhysicsError, State, Vec3, N_SLOTS, SLOT_A,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cell {cell} became inadmissible at t = {t}: {source}")]
    Inadmissible {
        cell: usize,
        t: f64,
        source: PhysicsError,
    },
    #[error("configuration error: {0}")]
    Config(String),
}

/// Per-cell conserved fields plus the two companion scalars.
#[derive(Debug, Clone)]
pub struct FieldSet {
    pub states: Vec<State>,
    /// Determinant of the distortion evolved by its own conservation law.
    pub det_companion: Vec<f64>,
    /// ρS evolved by the entropy balance law.
    pub rhos_companion: Vec<f64>,
    pub t: f64,
}

impl FieldSet {
    /// Sample an initial condition at the cell barycenters; companions start
    /// consistent with the state (so both compatibility errors are zero).
    pub fn from_sampler<F>(mesh: &Mesh, params: &ModelParams, f: F) -> Result<Self, SolverError>
    where
        F: Fn([f64; 2]) -> State,
    {
        let states: Vec<State> = mesh.cells.iter().map(|c| f(c.barycenter)).collect();
        Self::from_states(states, params)
    }

    pub fn from_states(states: Vec<State>, params: &ModelParams) -> Result<Self, SolverError> {
        let mut det = Vec::with_capacity(states.len());
        let mut rhos = Vec::with_capacity(states.len());
        for (i, u) in states.iter().enumerate() {
            let prim = primitives_from_state(u, params).map_err(|e| SolverError::Inadmissible {
                cell: i,
                t: 0.0,
                source: e,
            })?;
            det.push(u.a.determinant());
            rhos.push(prim.rho * prim.s);
        }
        Ok(FieldSet {
            states,
            det_companion: det,
            rhos_companion: rhos,
            t: 0.0,
        })
    }
}

/// Boundary treatment of one wall of the (axis-aligned) domain.
#[derive(Debug, Clone)]
pub enum BcKind {
    /// Copy the interior state (also used for outflow).
    Transmissive,
    /// Fixed exterior state (inflow).
    Dirichlet(State),
}

/// Per-wall boundary conditions; periodic axes never produce boundary edges,
/// so they need no entry here.
#[derive(Debug, Clone)]
pub struct Boundaries {
    pub x_lo: BcKind,
    pub x_hi: BcKind,
    pub y_lo: BcKind,
    pub y_hi: BcKind,
}

impl Boundaries {
    pub fn transmissive() -> Self {
        Boundaries {
            x_lo: BcKind::Transmissive,
            x_hi: BcKind::Transmissive,
            y_lo: BcKind::Transmissive,
            y_hi: BcKind::Transmissive,
        }
    }

    /// Ghost state across a boundary edge with outward `normal`.
    pub fn resolve(&self, normal: [f64; 2], interior: &State) -> State {
        let kind = if normal[0].abs() >= normal[1].abs() {
            if normal[0] < 0.0 {
                &self.x_lo
            } else {
                &self.x_hi
            }
        } else if normal[1] < 0.0 {
            &self.y_lo
        } else {
            &self.y_hi
        };
        match kind {
            BcKind::Transmissive => *interior,
            BcKind::Dirichlet(s) => *s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RhsOptions {
    pub edge: EdgeOptions,
    /// Relaxation sources inside the RHS (turned off by the split-source
    /// integrator, which handles them separately).
    pub include_sources: bool,
}

impl Default for RhsOptions {
    fn default() -> Self {
        RhsOptions {
            edge: EdgeOptions::default(),
            include_sources: true,
        }
    }
}

/// Output of one RHS evaluation.
#[derive(Debug, Clone)]
pub struct RhsOutput {
    pub du: Vec<[f64; N_SLOTS]>,
    pub ddet: Vec<f64>,
    pub drhos: Vec<f64>,
    /// Per-cell entropy production + entropy sources (inequality audit).
    pub audit: Vec<f64>,
    /// Per-cell max |α_A| over incident edges.
    pub alpha_a: Vec<f64>,
    /// Per-cell max |α_S| over incident edges.
    pub alpha_s: Vec<f64>,
    /// Some production redistribution hit a degenerate cofactor tensor.
    pub degenerate_redistribution: bool,
}

/// One pass over all edges, then a deterministic per-cell gather. The edge
/// loop and the gather are both parallel; the per-cell accumulation order is
/// the stored edge order, so results do not depend on the worker count.
pub fn rhs(
    mesh: &Mesh,
    fields: &FieldSet,
    params: &ModelParams,
    bcs: &Boundaries,
    opts: &RhsOptions,
) -> Result<RhsOutput, SolverError> {
    let records: Vec<EdgeFluxes> = mesh
        .edges
        .par_iter()
        .map(|edge| {
            let u_l = &fields.states[edge.left];
            let n = Vec3::new(edge.normal[0], edge.normal[1], 0.0);
            let result = if edge.right == BOUNDARY {
                let ghost = bcs.resolve(edge.normal, u_l);
                edge_fluxes(u_l, &ghost, &n, params, &opts.edge)
            } else {
                edge_fluxes(u_l, &fields.states[edge.right], &n, params, &opts.edge)
            };
            result.map_err(|e| SolverError::Inadmissible {
                cell: edge.left,
                t: fields.t,
                source: e,
            })
        })
        .collect::<Result<_, _>>()?;

    struct CellOut {
        du: [f64; N_SLOTS],
        ddet: f64,
        drhos: f64,
        audit: f64,
        alpha_a: f64,
        alpha_s: f64,
        degenerate: bool,
    }

    let cells: Vec<CellOut> = (0..mesh.cells.len())
        .into_par_iter()
        .map(|c| -> Result<CellOut, SolverError> {
            let cell = &mesh.cells[c];
            let mut du = [0.0f64; N_SLOTS];
            let mut ddet = 0.0;
            let mut drhos = 0.0;
            let mut pia = 0.0;
            let mut pis = 0.0;
            let mut alpha_a = 0.0f64;
            let mut alpha_s = 0.0f64;
            for &e in &cell.edge_ids {
                let rec = &records[e];
                let edge = &mesh.edges[e];
                let ratio = edge.length / cell.area;
                alpha_a = alpha_a.max(rec.alpha_a.abs());
                alpha_s = alpha_s.max(rec.alpha_s.abs());
                if edge.left == c {
                    for s in 0..N_SLOTS {
                        du[s] -= ratio * (rec.conservative[s] + rec.fluctuation[s]);
                    }
                    ddet -= ratio * rec.comp_deta_flux;
                    drhos -= ratio * rec.comp_rhos_flux_left;
                } else {
                    for s in 0..N_SLOTS {
                        du[s] += ratio * rec.conservative[s];
                        du[s] -= ratio * rec.fluctuation[s];
                    }
                    ddet += ratio * rec.comp_deta_flux;
                    drhos -= ratio * rec.comp_rhos_flux_right;
                }
                pia += ratio * rec.pi_a;
                pis += ratio * rec.pi_s;
            }
            let u = &fields.states[c];
            let adm = |e: PhysicsError| SolverError::Inadmissible {
                cell: c,
                t: fields.t,
                source: e,
            };
            let prim = primitives_from_state(u, params).map_err(adm)?;
            let duals = dual_variables_with(u, &prim, params).map_err(adm)?;
            let mut audit = pis;
            drhos += pis;
            if opts.include_sources {
                let src = sources(u, &prim, &duals, params);
                for s in 0..N_SLOTS {
                    du[s] += src[s];
                }
                let sp = source_entropy_production(u, &prim, &duals, params);
                drhos += sp;
                audit += sp;
            }
            // cell production redistributed over the distortion slots
            let (p, degenerate) = production_redistribution(pia, &u.a);
            let mut ap = 0.0;
            for i in 0..3 {
                for kp in 0..3 {
                    du[SLOT_A + 3 * i + kp] += p[(i, kp)];
                    ap += duals.alpha[(i, kp)] * p[(i, kp)];
                }
            }
            // the redistribution's contraction with the entropy duals is a
            // pure roundoff term (α:w = 0); kept for the exact identity
            drhos -= ap / prim.temp;
            Ok(CellOut {
                du,
                ddet,
                drhos,
                audit,
                alpha_a,
                alpha_s,
                degenerate,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut out = RhsOutput {
        du: Vec::with_capacity(cells.len()),
        ddet: Vec::with_capacity(cells.len()),
        drhos: Vec::with_capacity(cells.len()),
        audit: Vec::with_capacity(cells.len()),
        alpha_a: Vec::with_capacity(cells.len()),
        alpha_s: Vec::with_capacity(cells.len()),
        degenerate_redistribution: false,
    };
    for c in cells {
        out.du.push(c.du);
        out.ddet.push(c.ddet);
        out.drhos.push(c.drhos);
        out.audit.push(c.audit);
        out.alpha_a.push(c.alpha_a);
        out.alpha_s.push(c.alpha_s);
        out.degenerate_redistribution |= c.degenerate;
    }
    Ok(out)
}

/// CFL bound Δt = CFL · min over cells of h / (|v| + |λ| + 2ν/h), where ν is the
/// effective viscosity of the jump dissipation. A Rusanov flux −εΔu acts like
/// a viscous flux with ν = ε·h/2, so the parabolic penalty 2ν/h reduces to
/// the cell ε itself: the largest Rusanov coefficient over the cell's edges
/// (zero when dissipation is off).
pub fn compute_dt(
    mesh: &Mesh,
    fields: &FieldSet,
    params: &ModelParams,
    bcs: &Boundaries,
    cfl: f64,
    dissipation: bool,
) -> Result<f64, SolverError> {
    let prims: Vec<_> = fields
        .states
        .iter()
        .enumerate()
        .map(|(i, u)| {
            primitives_from_state(u, params).map_err(|e| SolverError::Inadmissible {
                cell: i,
                t: fields.t,
                source: e,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut cell_eps = vec![0.0f64; mesh.cells.len()];
    if dissipation {
        for edge in &mesh.edges {
            let pl = &prims[edge.left];
            let eps = if edge.right == BOUNDARY {
                let ghost = bcs.resolve(edge.normal, &fields.states[edge.left]);
                let pg = primitives_from_state(&ghost, params).map_err(|e| {
                    SolverError::Inadmissible {
                        cell: edge.left,
                        t: fields.t,
                        source: e,
                    }
                })?;
                rusanov_epsilon(pl, &pg, params)
            } else {
                rusanov_epsilon(pl, &prims[edge.right], params)
            };
            cell_eps[edge.left] = cell_eps[edge.left].max(eps);
            if edge.right != BOUNDARY {
                cell_eps[edge.right] = cell_eps[edge.right].max(eps);
            }
        }
    }
    let mut dt = f64::INFINITY;
    for (c, cell) in mesh.cells.iter().enumerate() {
        let h = cell.area.sqrt();
        // the sound-type estimate alone underestimates the signal speed for
        // fast bulk flows, so the advective speed is added for the step bound
        let lam = prims[c].v.norm() + max_eigenvalue(&prims[c], params);
        if !lam.is_finite() {
            return Err(SolverError::Config(format!(
                "nonfinite wave speed in cell {c}"
            )));
        }
        dt = dt.min(h / (lam + cell_eps[c]));
    }
    Ok(cfl * dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkOrder {
    One,
    Two,
    Four,
}

impl RkOrder {
    pub fn order(&self) -> usize {
        match self {
            RkOrder::One => 1,
            RkOrder::Two => 2,
            RkOrder::Four => 4,
        }
    }

    /// Butcher coefficients (lower-triangular a, weights b).
    fn tableau(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        match self {
            RkOrder::One => (vec![vec![]], vec![1.0]),
            RkOrder::Two => (vec![vec![], vec![1.0]], vec![0.5, 0.5]),
            RkOrder::Four => (
                vec![vec![], vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
                vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            ),
        }
    }
}

fn advance(base: &FieldSet, stages: &[&RhsOutput], weights: &[f64], dt: f64, t_new: f64) -> FieldSet {
    let n = base.states.len();
    let mut states = Vec::with_capacity(n);
    let mut det = Vec::with_capacity(n);
    let mut rhos = Vec::with_capacity(n);
    for c in 0..n {
        let mut slots = base.states[c].to_slots();
        let mut d = base.det_companion[c];
        let mut r = base.rhos_companion[c];
        for (k, w) in stages.iter().zip(weights.iter()) {
            if *w == 0.0 {
                continue;
            }
            for s in 0..N_SLOTS {
                slots[s] += dt * w * k.du[c][s];
            }
            d += dt * w * k.ddet[c];
            r += dt * w * k.drhos[c];
        }
        states.push(State::from_slots(&slots, base.states[c].rho0));
        det.push(d);
        rhos.push(r);
    }
    FieldSet {
        states,
        det_companion: det,
        rhos_companion: rhos,
        t: t_new,
    }
}

/// One explicit RK step of the 16-slot state and both companions. Returns the
/// new fields and the first-stage RHS (the semi-discrete RHS at the old time,
/// used for diagnostics).
pub fn rk_step(
    mesh: &Mesh,
    fields: &FieldSet,
    params: &ModelParams,
    bcs: &Boundaries,
    opts: &RhsOptions,
    dt: f64,
    order: RkOrder,
) -> Result<(FieldSet, RhsOutput), SolverError> {
    let (a, b) = order.tableau();
    let mut ks: Vec<RhsOutput> = Vec::with_capacity(b.len());
    for (i, row) in a.iter().enumerate() {
        let stage_fields = if i == 0 {
            fields.clone()
        } else {
            let refs: Vec<&RhsOutput> = ks.iter().take(row.len()).collect();
            advance(fields, &refs, row, dt, fields.t + dt * row.iter().sum::<f64>())
        };
        let k = rhs(mesh, &stage_fields, params, bcs, opts)?;
        ks.push(k);
    }
    let refs: Vec<&RhsOutput> = ks.iter().collect();
    let new_fields = advance(fields, &refs, &b, dt, fields.t + dt);
    // loud admissibility check on the accepted state
    for (c, u) in new_fields.states.iter().enumerate() {
        primitives_from_state(u, params).map_err(|e| SolverError::Inadmissible {
            cell: c,
            t: new_fields.t,
            source: e,
        })?;
    }
    let k0 = ks.swap_remove(0);
    Ok((new_fields, k0))
}

/// Integrate the relaxation sources alone over `dt` with per-cell adaptive
/// explicit Euler substeps (split treatment for stiff relaxation times).
/// Companion ρS receives the corresponding entropy production; |A| and the
/// determinant companion are untouched up to the substep error.
pub fn integrate_sources(
    fields: &mut FieldSet,
    params: &ModelParams,
    dt: f64,
) -> Result<(), SolverError> {
    let t = fields.t;
    let updates: Vec<(State, f64)> = fields
        .states
        .par_iter()
        .enumerate()
        .map(|(c, u0)| -> Result<(State, f64), SolverError> {
            let adm = |e: PhysicsError| SolverError::Inadmissible {
                cell: c,
                t,
                source: e,
            };
            let mut u = *u0;
            let mut drhos = 0.0;
            let mut remaining = dt;
            let mut guard = 0usize;
            while remaining > 0.0 {
                let prim = primitives_from_state(&u, params).map_err(adm)?;
                let duals = dual_variables_with(&u, &prim, params).map_err(adm)?;
                let src = sources(&u, &prim, &duals, params);
                // local relaxation rate → stable explicit substep
                let norm_u: f64 = u
                    .to_slots()
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    .sqrt()
                    .max(1e-12);
                let norm_s: f64 = src.iter().map(|x| x * x).sum::<f64>().sqrt();
                let mut h = if norm_s > 0.0 {
                    (0.2 * norm_u / norm_s).min(remaining)
                } else {
                    remaining
                };
                if h < remaining * 1e-9 {
                    h = remaining * 1e-9; // hard floor against runaway loops
                }
                let mut slots = u.to_slots();
                for s in 0..N_SLOTS {
                    slots[s] += h * src[s];
                }
                drhos += h * source_entropy_production(&u, &prim, &duals, params);
                u = State::from_slots(&slots, u.rho0);
                remaining -= h;
                guard += 1;
                if guard > 2_000_000 {
                    return Err(SolverError::Config(format!(
                        "source substepping for cell {c} did not terminate"
                    )));
                }
            }
            Ok((u, drhos))
        })
        .collect::<Result<_, _>>()?;
    for (c, (u, dr)) in updates.into_iter().enumerate() {
        fields.states[c] = u;
        fields.rhos_companion[c] += dr;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub edge: EdgeOptions,
    pub cfl: f64,
    pub rk: RkOrder,
    pub t_final: f64,
    /// Steps between diagnostics rows (the initial and final states are
    /// always sampled).
    pub sample_every: usize,
    /// Integrate relaxation sources by operator splitting with substeps
    /// instead of inside the RK stages (for stiff relaxation times).
    pub split_sources: bool,
    /// Fixed time step instead of the CFL bound (order sweeps).
    pub fixed_dt: Option<f64>,
    pub max_steps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            edge: EdgeOptions::default(),
            cfl: 0.5,
            rk: RkOrder::One,
            t_final: 0.0,
            sample_every: 10,
            split_sources: false,
            fixed_dt: None,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub fields: FieldSet,
    pub samples: Vec<DiagnosticsSample>,
    /// Per-cell max |α_A| over the whole run.
    pub alpha_a: Vec<f64>,
    /// Per-cell max |α_S| over the whole run.
    pub alpha_s: Vec<f64>,
    /// Worst normalized per-cell entropy audit over all sampled steps.
    pub min_audit: f64,
    /// Largest δ_A over all samples.
    pub max_delta_a: f64,
    pub steps: usize,
}

/// Advance to `t_final`, sampling diagnostics on the configured cadence; the
/// last step is clipped so the run lands on the final time exactly.
pub fn run(
    mesh: &Mesh,
    fields: FieldSet,
    params: &ModelParams,
    bcs: &Boundaries,
    opts: &RunOptions,
) -> Result<RunArtifacts, SolverError> {
    let mut fields = fields;
    let rhs_opts = RhsOptions {
        edge: opts.edge.clone(),
        include_sources: !opts.split_sources,
    };
    let mut samples = Vec::new();
    let mut alpha_a = vec![0.0f64; mesh.cells.len()];
    let mut alpha_s = vec![0.0f64; mesh.cells.len()];
    let mut min_audit = f64::INFINITY;
    let mut max_delta_a = 0.0f64;
    let push_sample = |fields: &FieldSet,
                           samples: &mut Vec<DiagnosticsSample>,
                           max_delta_a: &mut f64|
     -> Result<(), SolverError> {
        let s = diagnostics::sample(mesh, fields, params).map_err(|e| {
            SolverError::Inadmissible {
                cell: 0,
                t: fields.t,
                source: e,
            }
        })?;
        *max_delta_a = (*max_delta_a).max(s.delta_a);
        samples.push(s);
        Ok(())
    };
    push_sample(&fields, &mut samples, &mut max_delta_a)?;

    let mut steps = 0usize;
    while fields.t < opts.t_final - 1e-14 * (1.0 + opts.t_final.abs()) {
        if steps >= opts.max_steps {
            return Err(SolverError::Config(format!(
                "exceeded {} steps before reaching t_final",
                opts.max_steps
            )));
        }
        let mut dt = match opts.fixed_dt {
            Some(d) => d,
            None => compute_dt(mesh, &fields, params, bcs, opts.cfl, opts.edge.dissipation)?,
        };
        if fields.t + dt > opts.t_final {
            dt = opts.t_final - fields.t;
        }
        let (mut new_fields, k0) = rk_step(mesh, &fields, params, bcs, &rhs_opts, dt, opts.rk)?;
        if opts.split_sources {
            integrate_sources(&mut new_fields, params, dt)?;
        }
        for c in 0..mesh.cells.len() {
            alpha_a[c] = alpha_a[c].max(k0.alpha_a[c]);
            alpha_s[c] = alpha_s[c].max(k0.alpha_s[c]);
        }
        min_audit =
            min_audit.min(diagnostics::entropy_inequality_audit(&k0.audit, &fields.rhos_companion));
        fields = new_fields;
        steps += 1;
        if opts.sample_every > 0 && steps % opts.sample_every == 0 {
            push_sample(&fields, &mut samples, &mut max_delta_a)?;
        }
    }
    if samples.last().map(|s| s.t) != Some(fields.t) {
        push_sample(&fields, &mut samples, &mut max_delta_a)?;
    }
    Ok(RunArtifacts {
        fields,
        samples,
        alpha_a,
        alpha_s,
        min_audit: if min_audit.is_finite() { min_audit } else { 0.0 },
        max_delta_a,
        steps,
    })
}
