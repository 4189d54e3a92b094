//! Solver budget exploration on one simulated Step-1 instance.

use rand::SeedableRng;
use vcqr::lasso::{fit_step1, lambda_b, SolverOptions};
use vcqr::model::{build_design, QuerySpec};
use vcqr::sim::{calibrate_r2, generate_dataset, SimConfig};

fn main() {
    let mut cfg = SimConfig::default();
    let (cx, cy) = calibrate_r2(&cfg, cfg.pilot_n, cfg.seed).unwrap();
    cfg.c_x = Some(cx);
    cfg.c_y = Some(cy);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let (data, _) = generate_dataset(&cfg, &mut rng);
    let spec = QuerySpec::new(cfg.tau, cfg.u0, cfg.bandwidth(), cfg.kernel).unwrap();
    let design = build_design(&data, &spec).unwrap();
    let lam = lambda_b(&design, &data, cfg.c_b).unwrap();

    for (window, max_iter) in [
        (100usize, 50_000usize),
        (1_000, 50_000),
        (5_000, 50_000),
        (20_000, 100_000),
        (50_000, 300_000),
    ] {
        let opts = SolverOptions {
            stall_window: window,
            max_iter,
            ..SolverOptions::default()
        };
        let t = std::time::Instant::now();
        match fit_step1(&design, &data, lam, &opts) {
            Ok(fit) => println!(
                "window={window:>6} iters={:>7} obj={:.8} gap={:?} kkt={:.3e} b0={:.5} nact={} ({:.2}s)",
                fit.iters,
                fit.objective,
                fit.dual_gap.map(|g| format!("{g:.2e}")),
                fit.kkt_gap,
                fit.b_hat[0],
                fit.active_groups.len(),
                t.elapsed().as_secs_f64()
            ),
            Err(e) => println!("window={window:>6} FAILED: {e} ({:.2}s)", t.elapsed().as_secs_f64()),
        }
    }
}
