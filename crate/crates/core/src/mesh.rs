//! Polygonal (Voronoi) mesh construction, file I/O and validation.
//!
//! Cells are convex polygons obtained by half-plane clipping against
//! neighbouring seeds; periodic axes are handled with ghost seed copies so
//! that periodic faces become ordinary interior edges.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Marker for the `right` side of a boundary edge.
pub const BOUNDARY: usize = usize::MAX;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("degenerate seeds: points {0} and {1} coincide within tolerance")]
    DuplicateSeeds(usize, usize),
    #[error("need at least 3 seed points, got {0}")]
    TooFewSeeds(usize),
    #[error("domain has non-positive extent")]
    BadDomain,
    #[error("clipping failed for seed {0}: cell collapsed")]
    EmptyCell(usize),
    #[error("unbounded cell for seed {0}: initial polygon side survived clipping")]
    UnboundedCell(usize),
    #[error("periodic face of cell {0} has no partner")]
    UnmatchedFace(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mesh invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2 {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Box2 {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Box2 { lo, hi }
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1]]
    }

    pub fn diameter(&self) -> f64 {
        let e = self.extent();
        (e[0] * e[0] + e[1] * e[1]).sqrt()
    }

    pub fn area(&self) -> f64 {
        let e = self.extent();
        e[0] * e[1]
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub area: f64,
    pub barycenter: [f64; 2],
    pub perimeter: f64,
    pub edge_ids: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub length: f64,
    /// Unit normal oriented from the left cell towards the right cell.
    pub normal: [f64; 2],
    /// Edge midpoint in the left cell's coordinate frame.
    pub midpoint: [f64; 2],
    pub left: usize,
    /// Neighbouring cell id, or [`BOUNDARY`].
    pub right: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex index loops, one per cell.
    pub cell_vertices: Vec<Vec<usize>>,
    pub domain: Box2,
    /// Period per axis; 0 means the axis is not periodic.
    pub periods: [f64; 2],
}

impl Mesh {
    /// Characteristic size √(mean cell area).
    pub fn characteristic_size(&self) -> f64 {
        let total: f64 = self.cells.iter().map(|c| c.area).sum();
        (total / self.cells.len() as f64).sqrt()
    }

    /// Smallest per-cell size √|ω|, used by the time step bound.
    pub fn min_cell_size(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.area.sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Outward normal of `edge` as seen from `cell` (±stored normal).
    pub fn outward_normal(&self, edge: usize, cell: usize) -> [f64; 2] {
        let e = &self.edges[edge];
        if e.left == cell {
            e.normal
        } else {
            [-e.normal[0], -e.normal[1]]
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Worst per-cell ‖Σ |e| n_out‖ / perimeter.
    pub max_closure_residual: f64,
    pub min_area: f64,
    pub min_edge_length: f64,
    pub orientation_consistent: bool,
    pub ok: bool,
}

// --- construction ---

#[derive(Clone, Copy, PartialEq)]
enum SideLabel {
    /// Bisector with a ghost seed (index into the ghost list).
    Neighbor(usize),
    /// Domain wall 0..4 = x-lo, x-hi, y-lo, y-hi.
    Wall(u8),
    /// Side of the initial bounding polygon (must not survive).
    Init,
}

/// Polygon vertex list plus the label of the side leaving each vertex.
struct LabeledPoly {
    pts: Vec<[f64; 2]>,
    labels: Vec<SideLabel>,
}

impl LabeledPoly {
    fn clip_half_plane(&mut self, n: [f64; 2], d: f64, label: SideLabel) {
        let m = self.pts.len();
        if m == 0 {
            return;
        }
        let mut pts = Vec::with_capacity(m + 2);
        let mut labels = Vec::with_capacity(m + 2);
        let inside: Vec<bool> = self
            .pts
            .iter()
            .map(|p| n[0] * p[0] + n[1] * p[1] <= d)
            .collect();
        for i in 0..m {
            let j = (i + 1) % m;
            let (p, q) = (self.pts[i], self.pts[j]);
            let lab = self.labels[i];
            if inside[i] {
                pts.push(p);
                labels.push(lab);
                if !inside[j] {
                    pts.push(intersect(p, q, n, d));
                    labels.push(label);
                }
            } else if inside[j] {
                pts.push(intersect(p, q, n, d));
                labels.push(lab);
            }
        }
        self.pts = pts;
        self.labels = labels;
    }

    /// Remove sides shorter than `tol`, keeping the earlier vertex.
    fn collapse_short_sides(&mut self, tol: f64) {
        loop {
            let m = self.pts.len();
            if m < 4 {
                return;
            }
            let mut shortest = (f64::INFINITY, 0);
            for i in 0..m {
                let j = (i + 1) % m;
                let l = dist(self.pts[i], self.pts[j]);
                if l < shortest.0 {
                    shortest = (l, i);
                }
            }
            if shortest.0 >= tol {
                return;
            }
            let i = shortest.1;
            self.pts.remove((i + 1) % m);
            self.labels.remove(i);
        }
    }

    fn max_dist_from(&self, p: [f64; 2]) -> f64 {
        self.pts
            .iter()
            .map(|q| dist(p, *q))
            .fold(0.0, f64::max)
    }
}

fn intersect(p: [f64; 2], q: [f64; 2], n: [f64; 2], d: f64) -> [f64; 2] {
    let fp = n[0] * p[0] + n[1] * p[1] - d;
    let fq = n[0] * q[0] + n[1] * q[1] - d;
    let t = fp / (fp - fq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

struct GhostSeed {
    pos: [f64; 2],
    cell: usize,
    /// Integer lattice offset of the copy (in periods).
    shift: [i32; 2],
}

/// Uniform bucket grid over the ghost seeds for radius queries.
struct SeedGrid {
    lo: [f64; 2],
    inv_h: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl SeedGrid {
    fn build(seeds: &[GhostSeed]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for s in seeds {
            for a in 0..2 {
                lo[a] = lo[a].min(s.pos[a]);
                hi[a] = hi[a].max(s.pos[a]);
            }
        }
        let span = ((hi[0] - lo[0]).max(hi[1] - lo[1])).max(1e-300);
        let n = ((seeds.len() as f64).sqrt().ceil() as usize).max(1);
        let h = span / n as f64;
        let nx = (((hi[0] - lo[0]) / h).ceil() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / h).ceil() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, s) in seeds.iter().enumerate() {
            let bx = (((s.pos[0] - lo[0]) / h) as usize).min(nx - 1);
            let by = (((s.pos[1] - lo[1]) / h) as usize).min(ny - 1);
            buckets[by * nx + bx].push(i);
        }
        SeedGrid {
            lo,
            inv_h: 1.0 / h,
            nx,
            ny,
            buckets,
        }
    }

    fn within(&self, center: [f64; 2], radius: f64, out: &mut Vec<usize>, seeds: &[GhostSeed]) {
        out.clear();
        let bx0 = (((center[0] - radius - self.lo[0]) * self.inv_h).floor() as i64).max(0) as usize;
        let by0 = (((center[1] - radius - self.lo[1]) * self.inv_h).floor() as i64).max(0) as usize;
        let bx1 = ((((center[0] + radius - self.lo[0]) * self.inv_h).floor() as i64).max(0) as usize)
            .min(self.nx - 1);
        let by1 = ((((center[1] + radius - self.lo[1]) * self.inv_h).floor() as i64).max(0) as usize)
            .min(self.ny - 1);
        for by in by0.min(self.ny - 1)..=by1 {
            for bx in bx0.min(self.nx - 1)..=bx1 {
                for &i in &self.buckets[by * self.nx + bx] {
                    if dist(seeds[i].pos, center) <= radius {
                        out.push(i);
                    }
                }
            }
        }
    }
}

/// Clipped (optionally periodic) Voronoi tessellation of `domain` with the
/// requested number of Lloyd relaxation sweeps.
pub fn build_voronoi(
    seed_points: &[[f64; 2]],
    domain: Box2,
    periodic: [bool; 2],
    lloyd_iterations: usize,
) -> Result<Mesh, MeshError> {
    let mut seeds = seed_points.to_vec();
    for _ in 0..lloyd_iterations {
        let mesh = voronoi_once(&seeds, domain, periodic)?;
        for (i, c) in mesh.cells.iter().enumerate() {
            let mut p = c.barycenter;
            for a in 0..2 {
                if periodic[a] {
                    let ext = domain.hi[a] - domain.lo[a];
                    p[a] = domain.lo[a] + (p[a] - domain.lo[a]).rem_euclid(ext);
                }
            }
            seeds[i] = p;
        }
    }
    voronoi_once(&seeds, domain, periodic)
}

fn voronoi_once(
    seeds: &[[f64; 2]],
    domain: Box2,
    periodic: [bool; 2],
) -> Result<Mesh, MeshError> {
    let n = seeds.len();
    if n < 3 {
        return Err(MeshError::TooFewSeeds(n));
    }
    let ext = domain.extent();
    if ext[0] <= 0.0 || ext[1] <= 0.0 {
        return Err(MeshError::BadDomain);
    }
    let diam = domain.diameter();
    let dup_tol = 1e-12 * diam;

    // ghost copies along periodic axes
    let shifts_x: &[i32] = if periodic[0] { &[-1, 0, 1] } else { &[0] };
    let shifts_y: &[i32] = if periodic[1] { &[-1, 0, 1] } else { &[0] };
    let mut ghosts = Vec::with_capacity(n * shifts_x.len() * shifts_y.len());
    for (c, s) in seeds.iter().enumerate() {
        for &sx in shifts_x {
            for &sy in shifts_y {
                ghosts.push(GhostSeed {
                    pos: [s[0] + sx as f64 * ext[0], s[1] + sy as f64 * ext[1]],
                    cell: c,
                    shift: [sx, sy],
                });
            }
        }
    }
    let grid = SeedGrid::build(&ghosts);
    let spacing = (domain.area() / n as f64).sqrt();

    // duplicate detection (central copies only)
    {
        let mut cand = Vec::new();
        for (i, s) in seeds.iter().enumerate() {
            grid.within(*s, dup_tol.max(1e-300), &mut cand, &ghosts);
            for &g in &cand {
                let gs = &ghosts[g];
                if gs.shift == [0, 0] && gs.cell != i && dist(gs.pos, *s) < dup_tol {
                    return Err(MeshError::DuplicateSeeds(i.min(gs.cell), i.max(gs.cell)));
                }
            }
        }
    }

    let merge_tol = 1e-12 * diam;
    let mut polys: Vec<LabeledPoly> = Vec::with_capacity(n);
    let mut cand = Vec::new();
    for (i, s) in seeds.iter().enumerate() {
        // initial polygon: domain box, stretched by one period along
        // periodic axes so the true cell is never pre-clipped there
        let mut lo = domain.lo;
        let mut hi = domain.hi;
        for a in 0..2 {
            if periodic[a] {
                lo[a] -= ext[a];
                hi[a] += ext[a];
            }
        }
        let init_label = |wall: u8, axis: usize| {
            if periodic[axis] {
                SideLabel::Init
            } else {
                SideLabel::Wall(wall)
            }
        };
        let mut poly = LabeledPoly {
            pts: vec![
                [lo[0], lo[1]],
                [hi[0], lo[1]],
                [hi[0], hi[1]],
                [lo[0], hi[1]],
            ],
            labels: vec![
                init_label(2, 1), // bottom side: y-lo wall
                init_label(1, 0), // right side: x-hi wall
                init_label(3, 1), // top side: y-hi wall
                init_label(0, 0), // left side: x-lo wall
            ],
        };
        // clip against neighbours inside a growing security radius
        let mut radius = 3.0 * spacing;
        loop {
            grid.within(*s, radius, &mut cand, &ghosts);
            cand.sort_by(|a, b| {
                dist(ghosts[*a].pos, *s)
                    .partial_cmp(&dist(ghosts[*b].pos, *s))
                    .unwrap()
            });
            for &g in &cand {
                let gs = &ghosts[g];
                if gs.cell == i && gs.shift == [0, 0] {
                    continue;
                }
                let d2 = dist(gs.pos, *s);
                if d2 < dup_tol {
                    continue; // a duplicate would already have errored
                }
                let nrm = [(gs.pos[0] - s[0]) / d2, (gs.pos[1] - s[1]) / d2];
                let mid = [0.5 * (gs.pos[0] + s[0]), 0.5 * (gs.pos[1] + s[1])];
                let dd = nrm[0] * mid[0] + nrm[1] * mid[1];
                poly.clip_half_plane(nrm, dd, SideLabel::Neighbor(g));
            }
            if poly.pts.len() < 3 {
                return Err(MeshError::EmptyCell(i));
            }
            // any seed beyond 2×(max vertex distance) cannot cut the cell
            let reach = 2.0 * poly.max_dist_from(*s);
            if reach <= radius || radius >= 2.0 * diam {
                break;
            }
            radius = (2.0 * radius).max(1.05 * reach);
        }
        poly.collapse_short_sides(merge_tol);
        if poly.labels.iter().any(|l| *l == SideLabel::Init) {
            return Err(MeshError::UnboundedCell(i));
        }
        polys.push(poly);
    }

    assemble(polys, &ghosts, domain, periodic)
}

/// Merge per-cell polygons into shared vertices and edges.
fn assemble(
    polys: Vec<LabeledPoly>,
    ghosts: &[GhostSeed],
    domain: Box2,
    periodic: [bool; 2],
) -> Result<Mesh, MeshError> {
    let ext = domain.extent();
    let diam = domain.diameter();
    let key_tol = 1e-9 * diam;
    let quant = |p: [f64; 2]| -> (i64, i64) {
        (
            (p[0] / key_tol).round() as i64,
            (p[1] / key_tol).round() as i64,
        )
    };

    // shared vertex pool (vertices live in each cell's own frame, so ghost
    // copies of a periodic vertex stay distinct — as they must for output)
    let mut vertex_ids: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut cell_vertices: Vec<Vec<usize>> = Vec::with_capacity(polys.len());
    for poly in &polys {
        let mut loop_ids = Vec::with_capacity(poly.pts.len());
        for p in &poly.pts {
            let id = *vertex_ids.entry(quant(*p)).or_insert_with(|| {
                vertices.push(*p);
                vertices.len() - 1
            });
            loop_ids.push(id);
        }
        cell_vertices.push(loop_ids);
    }

    // interior edge pairing on (cell pair, copy shift)
    let mut edges: Vec<Edge> = Vec::new();
    let mut cells: Vec<Cell> = Vec::with_capacity(polys.len());
    let mut pair_map: HashMap<(usize, usize, i32, i32), usize> = HashMap::new();
    for (i, poly) in polys.iter().enumerate() {
        let m = poly.pts.len();
        let mut area = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut perimeter = 0.0;
        let mut edge_ids = Vec::with_capacity(m);
        for k in 0..m {
            // pooled coordinates, so the text round trip is exact
            let p = vertices[cell_vertices[i][k]];
            let q = vertices[cell_vertices[i][(k + 1) % m]];
            let cross = p[0] * q[1] - q[0] * p[1];
            area += cross;
            cx += (p[0] + q[0]) * cross;
            cy += (p[1] + q[1]) * cross;
            let len = dist(p, q);
            perimeter += len;
            // outward normal of a CCW polygon side
            let nrm = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            match poly.labels[k] {
                SideLabel::Wall(_) => {
                    edges.push(Edge {
                        length: len,
                        normal: nrm,
                        midpoint: mid,
                        left: i,
                        right: BOUNDARY,
                    });
                    edge_ids.push(edges.len() - 1);
                }
                SideLabel::Neighbor(g) => {
                    let gs = &ghosts[g];
                    let j = gs.cell;
                    if j == i {
                        // a cell touching its own periodic image cannot carry
                        // a single left/right orientation; needs finer seeding
                        return Err(MeshError::Invariant(format!(
                            "cell {i} is adjacent to its own periodic image"
                        )));
                    }
                    // canonical key: lower cell id first, shift as seen from it
                    let key = if i < j {
                        (i, j, gs.shift[0], gs.shift[1])
                    } else {
                        (j, i, -gs.shift[0], -gs.shift[1])
                    };
                    if let Some(&e) = pair_map.get(&key) {
                        if edges[e].left == i {
                            return Err(MeshError::Invariant(format!(
                                "edge between cells {i} and {j} seen twice from the same side"
                            )));
                        }
                        edge_ids.push(e);
                    } else {
                        edges.push(Edge {
                            length: len,
                            normal: nrm,
                            midpoint: mid,
                            left: i,
                            right: j,
                        });
                        pair_map.insert(key, edges.len() - 1);
                        edge_ids.push(edges.len() - 1);
                    }
                }
                SideLabel::Init => unreachable!("checked before assembly"),
            }
        }
        area *= 0.5;
        if area <= 0.0 {
            return Err(MeshError::Invariant(format!(
                "cell {i} has non-positive area {area}"
            )));
        }
        cells.push(Cell {
            area,
            barycenter: [cx / (6.0 * area), cy / (6.0 * area)],
            perimeter,
            edge_ids,
        });
    }
    for (e, edge) in edges.iter().enumerate() {
        if edge.right != BOUNDARY && !cells[edge.right].edge_ids.contains(&e) {
            return Err(MeshError::UnmatchedFace(edge.left));
        }
    }

    let periods = [
        if periodic[0] { ext[0] } else { 0.0 },
        if periodic[1] { ext[1] } else { 0.0 },
    ];
    let mesh = Mesh {
        cells,
        edges,
        vertices,
        cell_vertices,
        domain,
        periods,
    };
    let report = validate(&mesh);
    if !report.ok {
        return Err(MeshError::Invariant(format!(
            "closure {:.3e}, min area {:.3e}, min edge {:.3e}, orientation {}",
            report.max_closure_residual,
            report.min_area,
            report.min_edge_length,
            report.orientation_consistent
        )));
    }
    Ok(mesh)
}

// --- validation ---

pub fn validate(mesh: &Mesh) -> ValidationReport {
    let mut max_closure = 0.0f64;
    let mut min_area = f64::INFINITY;
    for (c, cell) in mesh.cells.iter().enumerate() {
        min_area = min_area.min(cell.area);
        let mut sum = [0.0f64; 2];
        for &e in &cell.edge_ids {
            let n = mesh.outward_normal(e, c);
            sum[0] += mesh.edges[e].length * n[0];
            sum[1] += mesh.edges[e].length * n[1];
        }
        let res = (sum[0] * sum[0] + sum[1] * sum[1]).sqrt() / cell.perimeter;
        max_closure = max_closure.max(res);
    }
    let mut min_edge = f64::INFINITY;
    let mut oriented = true;
    for edge in &mesh.edges {
        min_edge = min_edge.min(edge.length);
        // midpoint is stored in the left cell's frame and Voronoi cells are
        // convex, so the left→right normal must point away from the left
        // barycenter
        let b = mesh.cells[edge.left].barycenter;
        let d = (edge.midpoint[0] - b[0]) * edge.normal[0]
            + (edge.midpoint[1] - b[1]) * edge.normal[1];
        if d <= 0.0 {
            oriented = false;
        }
    }
    let ok = max_closure <= 1e-12 && min_area > 0.0 && min_edge > 0.0 && oriented;
    ValidationReport {
        max_closure_residual: max_closure,
        min_area,
        min_edge_length: min_edge,
        orientation_consistent: oriented,
        ok,
    }
}

// --- seed helpers ---

/// Jittered lattice covering the domain, the usual Voronoi seeding.
pub fn lattice_seeds<R: rand::Rng>(
    nx: usize,
    ny: usize,
    domain: Box2,
    jitter: f64,
    rng: &mut R,
) -> Vec<[f64; 2]> {
    let ext = domain.extent();
    let (dx, dy) = (ext[0] / nx as f64, ext[1] / ny as f64);
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let jx = if jitter > 0.0 {
                rng.gen_range(-jitter..jitter) * dx
            } else {
                0.0
            };
            let jy = if jitter > 0.0 {
                rng.gen_range(-jitter..jitter) * dy
            } else {
                0.0
            };
            out.push([
                domain.lo[0] + (ix as f64 + 0.5) * dx + jx,
                domain.lo[1] + (iy as f64 + 0.5) * dy + jy,
            ]);
        }
    }
    out
}

/// Seed count so that √(mean area) ≈ h.
pub fn seed_counts_for_size(h: f64, domain: Box2) -> (usize, usize) {
    let ext = domain.extent();
    (
        ((ext[0] / h).round() as usize).max(2),
        ((ext[1] / h).round() as usize).max(2),
    )
}

// --- file format ---

/// Plain-text serialization (HGTC-MESH 1).
pub fn save_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("HGTC-MESH 1\n");
    let _ = writeln!(
        out,
        "DOMAIN {:.17e} {:.17e} {:.17e} {:.17e}",
        mesh.domain.lo[0], mesh.domain.lo[1], mesh.domain.hi[0], mesh.domain.hi[1]
    );
    let _ = writeln!(out, "VERTICES {}", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:.17e} {:.17e}", v[0], v[1]);
    }
    let _ = writeln!(out, "CELLS {}", mesh.cells.len());
    for loop_ids in &mesh.cell_vertices {
        let words: Vec<String> = loop_ids.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{}", words.join(" "));
    }
    if mesh.periods[0] > 0.0 || mesh.periods[1] > 0.0 {
        let _ = writeln!(out, "PERIODIC {:.17e} {:.17e}", mesh.periods[0], mesh.periods[1]);
    }
    out
}

/// Parse the HGTC-MESH 1 format and rebuild all derived geometry.
pub fn load_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text.lines().enumerate();
    let perr = |line: usize, msg: &str| MeshError::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };
    let (ln, header) = lines
        .next()
        .ok_or_else(|| perr(0, "empty stream"))?;
    if header.trim() != "HGTC-MESH 1" {
        return Err(perr(ln, "expected header 'HGTC-MESH 1'"));
    }

    let mut domain = None;
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut cell_vertices: Vec<Vec<usize>> = Vec::new();
    let mut periods = [0.0f64; 2];
    while let Some((ln, raw)) = lines.next() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        match words.next().unwrap() {
            "DOMAIN" => {
                let vals: Vec<f64> = words
                    .map(|w| w.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| perr(ln, "bad DOMAIN reals"))?;
                if vals.len() != 4 {
                    return Err(perr(ln, "DOMAIN needs 4 reals"));
                }
                domain = Some(Box2::new([vals[0], vals[1]], [vals[2], vals[3]]));
            }
            "VERTICES" => {
                let count: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| perr(ln, "bad VERTICES count"))?;
                for _ in 0..count {
                    let (vln, vraw) = lines
                        .next()
                        .ok_or_else(|| perr(ln, "truncated vertex block"))?;
                    let vals: Vec<f64> = vraw
                        .split_whitespace()
                        .map(|w| w.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| perr(vln, "bad vertex reals"))?;
                    if vals.len() != 2 {
                        return Err(perr(vln, "vertex needs 2 reals"));
                    }
                    vertices.push([vals[0], vals[1]]);
                }
            }
            "CELLS" => {
                let count: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| perr(ln, "bad CELLS count"))?;
                for _ in 0..count {
                    let (cln, craw) = lines
                        .next()
                        .ok_or_else(|| perr(ln, "truncated cell block"))?;
                    let ids: Vec<usize> = craw
                        .split_whitespace()
                        .map(|w| w.parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| perr(cln, "bad cell vertex index"))?;
                    if ids.len() < 3 {
                        return Err(perr(cln, "cell needs at least 3 vertices"));
                    }
                    for &id in &ids {
                        if id >= vertices.len() {
                            return Err(perr(
                                cln,
                                &format!("cell references missing vertex {id}"),
                            ));
                        }
                    }
                    cell_vertices.push(ids);
                }
            }
            "PERIODIC" => {
                let vals: Vec<f64> = words
                    .map(|w| w.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| perr(ln, "bad PERIODIC reals"))?;
                if vals.len() != 2 {
                    return Err(perr(ln, "PERIODIC needs 2 reals"));
                }
                periods = [vals[0], vals[1]];
            }
            other => return Err(perr(ln, &format!("unknown record '{other}'"))),
        }
    }
    let domain = domain.ok_or_else(|| perr(0, "missing DOMAIN record"))?;
    if cell_vertices.is_empty() {
        return Err(perr(0, "missing CELLS record"));
    }
    mesh_from_polygons(vertices, cell_vertices, domain, periods)
}

/// Derive cells/edges from vertex loops; interior edges are matched by their
/// (periodically wrapped) endpoint positions.
pub fn mesh_from_polygons(
    vertices: Vec<[f64; 2]>,
    cell_vertices: Vec<Vec<usize>>,
    domain: Box2,
    periods: [f64; 2],
) -> Result<Mesh, MeshError> {
    let diam = domain.diameter();
    let key_tol = 1e-9 * diam;
    let wrap_quant = |p: [f64; 2]| -> (i64, i64) {
        let mut w = p;
        for a in 0..2 {
            if periods[a] > 0.0 {
                let mut frac = ((p[a] - domain.lo[a]) / periods[a]).rem_euclid(1.0);
                if (frac - 1.0).abs() * periods[a] < key_tol {
                    frac = 0.0;
                }
                w[a] = domain.lo[a] + frac * periods[a];
            }
        }
        ((w[0] / key_tol).round() as i64, (w[1] / key_tol).round() as i64)
    };

    let mut cells: Vec<Cell> = Vec::with_capacity(cell_vertices.len());
    let mut edges: Vec<Edge> = Vec::new();
    let mut side_map: HashMap<((i64, i64), (i64, i64)), usize> = HashMap::new();
    for (i, loop_ids) in cell_vertices.iter().enumerate() {
        let m = loop_ids.len();
        let mut area = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut perimeter = 0.0;
        let mut edge_ids = Vec::with_capacity(m);
        for k in 0..m {
            let p = vertices[loop_ids[k]];
            let q = vertices[loop_ids[(k + 1) % m]];
            let cross = p[0] * q[1] - q[0] * p[1];
            area += cross;
            cx += (p[0] + q[0]) * cross;
            cy += (p[1] + q[1]) * cross;
            let len = dist(p, q);
            if len <= 0.0 {
                return Err(MeshError::Invariant(format!(
                    "cell {i} has a zero-length side"
                )));
            }
            perimeter += len;
            let nrm = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let (kp, kq) = (wrap_quant(p), wrap_quant(q));
            let key = if kp <= kq { (kp, kq) } else { (kq, kp) };
            if let Some(&e) = side_map.get(&key) {
                if edges[e].right != BOUNDARY {
                    return Err(MeshError::Invariant(format!(
                        "side of cell {i} shared by more than two cells"
                    )));
                }
                edges[e].right = i;
                edge_ids.push(e);
            } else {
                edges.push(Edge {
                    length: len,
                    normal: nrm,
                    midpoint: mid,
                    left: i,
                    right: BOUNDARY,
                });
                side_map.insert(key, edges.len() - 1);
                edge_ids.push(edges.len() - 1);
            }
        }
        area *= 0.5;
        if area <= 0.0 {
            return Err(MeshError::Invariant(format!(
                "cell {i} is not counter-clockwise or degenerate (area {area})"
            )));
        }
        cells.push(Cell {
            area,
            barycenter: [cx / (6.0 * area), cy / (6.0 * area)],
            perimeter,
            edge_ids,
        });
    }

    let mesh = Mesh {
        cells,
        edges,
        vertices,
        cell_vertices,
        domain,
        periods,
    };
    let report = validate(&mesh);
    if !report.ok {
        return Err(MeshError::Invariant(format!(
            "closure {:.3e}, min area {:.3e}, min edge {:.3e}, orientation {}",
            report.max_closure_residual,
            report.min_area,
            report.min_edge_length,
            report.orientation_consistent
        )));
    }
    Ok(mesh)
}
