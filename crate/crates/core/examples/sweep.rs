// scratch experiment: time-order sweep with the at-rest vortex start
use hgtc::cli::{self, preset};
use hgtc::physics::{state_from_primitives, Mat3, Vec3};
use hgtc::reference::vortex_primitives;
use hgtc::solver::{self, FieldSet};

fn main() {
    let at_rest = std::env::args().any(|a| a == "--rest");
    for n in [1usize, 2, 4] {
        for dt in [8e-3, 4e-3, 2e-3] {
            let mut cfg = preset("vortex").unwrap();
            cfg.h = 1.0 / 3.0;
            cfg.t_final = 1.0;
            cfg.rk_order = n;
            cfg.fixed_dt = Some(dt);
            let mesh = cli::build_mesh(&cfg).unwrap();
            let states: Vec<_> = mesh
                .cells
                .iter()
                .map(|c| {
                    let (rho, v1, v2, p) = vortex_primitives(c.barycenter, cfg.params.gamma);
                    let v = if at_rest {
                        Vec3::zeros()
                    } else {
                        Vec3::new(v1, v2, 0.0)
                    };
                    state_from_primitives(
                        rho,
                        &v,
                        p,
                        &Mat3::identity(),
                        &Vec3::zeros(),
                        rho,
                        &cfg.params,
                    )
                    .unwrap()
                })
                .collect();
            let fields = FieldSet::from_states(states, &cfg.params).unwrap();
            let bcs = cli::boundaries(&cfg).unwrap();
            let opts = cfg.run_options().unwrap();
            let art = solver::run(&mesh, fields, &cfg.params, &bcs, &opts).unwrap();
            let last = art.samples.last().unwrap();
            let amax = art.alpha_s.iter().cloned().fold(0.0f64, f64::max);
            println!(
                "rk{n} dt={dt:.0e}: dA={:.4e} dS={:.4e} max|aS|={amax:.3e}",
                last.delta_a, last.delta_s
            );
            if std::env::args().any(|a| a == "--trace") && n == 4 && dt == 8e-3 {
                for s in &art.samples {
                    println!("  t={:.3} dA={:.3e} dS={:.3e}", s.t, s.delta_a, s.delta_s);
                }
            }
        }
    }
}
