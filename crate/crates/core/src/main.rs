//! Command-line front end: run configured simulations, generate and validate
//! meshes, and summarize stored diagnostics.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use hgtc::{cli, diagnostics, mesh, solver};

#[derive(Parser)]
#[command(name = "hgtc", about = "Compatible finite volume solver for hyperbolic continuum mechanics")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a config file
    Run {
        /// Path to a `key = value` config file
        config: PathBuf,
        /// Output directory (default: run name next to the config)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in benchmark preset
    Preset {
        /// Preset name (see --list)
        name: String,
        /// Override config keys, e.g. --set h=0.05 --set rk_order=4
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Use the originally reported mesh resolution instead of desk scale
        #[arg(long)]
        paper_scale: bool,
        /// Print the effective config and exit without running
        #[arg(long)]
        print_config: bool,
        /// Output directory (default: ./out_<name>)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mesh utilities
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Summarize stored diagnostics of one or more finished runs
    Report {
        /// Run directories containing diagnostics.csv (and config.cfg)
        dirs: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MeshAction {
    /// Generate a Voronoi mesh and write it to a file
    Gen {
        /// Target cell size
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        /// Domain as "x_lo y_lo x_hi y_hi"
        #[arg(long, default_value = "0 0 1 1")]
        domain: String,
        #[arg(long)]
        periodic_x: bool,
        #[arg(long)]
        periodic_y: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        lloyd: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a mesh file and print its invariant report
    Validate { file: PathBuf },
}

fn main() -> Result<()> {
    match Args::parse().command {
        Command::Run { config, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = cli::parse_config(&text)?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("out_{}", cfg.preset)));
            execute(&cfg, &out)
        }
        Command::Preset {
            name,
            overrides,
            paper_scale,
            print_config,
            out,
        } => {
            let mut cfg = cli::preset(&name)?;
            if paper_scale {
                cfg.h = cli::paper_scale_h(&name)?;
            }
            if !overrides.is_empty() {
                // route overrides through the config parser for validation
                let mut text = cli::serialize_config(&cfg);
                for kv in &overrides {
                    let Some((k, v)) = kv.split_once('=') else {
                        bail!("override '{kv}' is not of the form key=value");
                    };
                    text.push_str(&format!("{} = {}\n", k.trim(), v.trim()));
                }
                cfg = cli::parse_config(&text)?;
            }
            if print_config {
                print!("{}", cli::serialize_config(&cfg));
                return Ok(());
            }
            let out = out.unwrap_or_else(|| PathBuf::from(format!("out_{name}")));
            execute(&cfg, &out)
        }
        Command::Mesh { action } => match action {
            MeshAction::Gen {
                h,
                domain,
                periodic_x,
                periodic_y,
                seed,
                lloyd,
                out,
            } => {
                let nums: Vec<f64> = domain
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .context("parsing --domain")?;
                if nums.len() != 4 {
                    bail!("--domain needs 4 numbers: x_lo y_lo x_hi y_hi");
                }
                let cfg = cli::RunConfig {
                    h,
                    domain: mesh::Box2::new([nums[0], nums[1]], [nums[2], nums[3]]),
                    periodic: [periodic_x, periodic_y],
                    mesh_seed: seed,
                    lloyd,
                    ..cli::preset("vortex")?
                };
                let m = cli::build_mesh(&cfg)?;
                fs::write(&out, mesh::save_mesh(&m))
                    .with_context(|| format!("writing {}", out.display()))?;
                println!(
                    "wrote {} cells ({} edges, h = {:.4}) to {}",
                    m.cells.len(),
                    m.edges.len(),
                    m.characteristic_size(),
                    out.display()
                );
                Ok(())
            }
            MeshAction::Validate { file } => {
                let text = fs::read_to_string(&file)
                    .with_context(|| format!("reading {}", file.display()))?;
                let m = mesh::load_mesh(&text)?;
                let report = mesh::validate(&m);
                println!("cells:              {}", m.cells.len());
                println!("edges:              {}", m.edges.len());
                println!("max closure resid:  {:.3e}", report.max_closure_residual);
                println!("min cell area:      {:.3e}", report.min_area);
                println!("min edge length:    {:.3e}", report.min_edge_length);
                println!("orientation ok:     {}", report.orientation_consistent);
                println!("valid:              {}", report.ok);
                if report.ok {
                    Ok(())
                } else {
                    bail!("mesh invariants violated")
                }
            }
        },
        Command::Report { dirs } => report(&dirs),
    }
}

/// Build the mesh, run the simulation, and write every artifact into `out`.
fn execute(cfg: &cli::RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let m = cli::build_mesh(cfg)?;
    println!(
        "mesh: {} cells, h = {:.4} (target {:.4})",
        m.cells.len(),
        m.characteristic_size(),
        cfg.h
    );
    let fields = cli::initial_fields(cfg, &m)?;
    let bcs = cli::boundaries(cfg)?;
    let opts = cfg.run_options()?;
    let artifacts = solver::run(&m, fields, &cfg.params, &bcs, &opts)?;
    println!(
        "run: {} steps to t = {}, max delta_A = {:.3e}, min entropy audit = {:.3e}",
        artifacts.steps, artifacts.fields.t, artifacts.max_delta_a, artifacts.min_audit
    );

    fs::write(out.join("config.cfg"), cli::serialize_config(cfg))?;
    fs::write(out.join("mesh.txt"), mesh::save_mesh(&m))?;
    fs::write(
        out.join("diagnostics.csv"),
        diagnostics::diagnostics_csv(&artifacts.samples),
    )?;
    let y_mid = 0.5 * (cfg.domain.lo[1] + cfg.domain.hi[1]);
    let cut = cli::write_line_cut(
        &m,
        &artifacts.fields,
        &cfg.params,
        [cfg.domain.lo[0], y_mid],
        [cfg.domain.hi[0], y_mid],
        200,
    )?;
    fs::write(out.join("line_cut.csv"), cut)?;
    let fields_txt = cli::write_cell_fields(
        &m,
        &artifacts.fields,
        &cfg.params,
        Some(&artifacts.alpha_a),
        Some(&artifacts.alpha_s),
        &["rho", "v1", "v2", "p", "detA_minus_density", "alpha_A", "alpha_S"],
    )?;
    fs::write(out.join("fields.txt"), fields_txt)?;
    println!("artifacts written to {}", out.display());
    Ok(())
}

/// Print final diagnostics per run and, when several runs with different mesh
/// sizes are given, the observed convergence orders of the compatibility
/// errors.
fn report(dirs: &[PathBuf]) -> Result<()> {
    if dirs.is_empty() {
        bail!("report needs at least one run directory");
    }
    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    println!("{:<24} {:>10} {:>12} {:>12} {:>14}", "run", "h", "delta_A", "delta_S", "mass drift");
    for dir in dirs {
        let csv = fs::read_to_string(dir.join("diagnostics.csv"))
            .with_context(|| format!("reading diagnostics in {}", dir.display()))?;
        let mut lines = csv.lines();
        let header = lines.next().unwrap_or("");
        if header != diagnostics::CSV_HEADER {
            bail!("{}: unexpected diagnostics header", dir.display());
        }
        let parse_row = |l: &str| -> Option<Vec<f64>> {
            l.split(',').map(|t| t.parse::<f64>().ok()).collect()
        };
        let data: Vec<Vec<f64>> = lines.filter_map(parse_row).collect();
        let (first, last) = match (data.first(), data.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => bail!("{}: empty diagnostics", dir.display()),
        };
        let h = fs::read_to_string(dir.join("config.cfg"))
            .ok()
            .and_then(|cfg| {
                cfg.lines().find_map(|l| {
                    l.strip_prefix("h = ").and_then(|v| v.trim().parse::<f64>().ok())
                })
            })
            .unwrap_or(f64::NAN);
        let mass_drift = (last[3] - first[3]).abs();
        println!(
            "{:<24} {:>10.4} {:>12.4e} {:>12.4e} {:>14.4e}",
            dir.display().to_string(),
            h,
            last[1],
            last[2],
            mass_drift
        );
        rows.push((h, vec![last[1], last[2]]));
    }
    rows.retain(|(h, _)| h.is_finite());
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    if rows.len() >= 2 && rows.windows(2).all(|w| w[1].0 < w[0].0) {
        let hs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        for (qi, label) in ["delta_A", "delta_S"].iter().enumerate() {
            let errs: Vec<f64> = rows.iter().map(|r| r.1[qi]).collect();
            if errs.iter().all(|&e| e > 0.0) {
                let orders = diagnostics::observed_order(&hs, &errs);
                let fmt: Vec<String> = orders.iter().map(|o| format!("{o:.2}")).collect();
                println!("observed order of {}: {}", label, fmt.join(", "));
            }
        }
    }
    Ok(())
}
