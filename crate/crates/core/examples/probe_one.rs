//! Run one replication end to end and print every stage.

use rand::SeedableRng;
use vcqr::model::{build_design, QuerySpec};
use vcqr::pipeline::{run_inference_on_design, PipelineConfig};
use vcqr::sim::{calibrate_r2, generate_dataset, SimConfig};

fn main() {
    let rep: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let mut cfg = SimConfig::default();
    let (cx, cy) = calibrate_r2(&cfg, cfg.pilot_n, cfg.seed).unwrap();
    cfg.c_x = Some(cx);
    cfg.c_y = Some(cy);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep);
    let (data, truth) = generate_dataset(&cfg, &mut rng);
    println!("beta_true = {}", truth.beta_true);
    let spec = QuerySpec::new(cfg.tau, cfg.u0, cfg.bandwidth(), cfg.kernel).unwrap();
    let design = build_design(&data, &spec).unwrap();
    let window = design.weights.iter().filter(|&&w| w > 0.0).count();
    println!("window obs = {window}, lambda checks follow");

    let lam_b = vcqr::lasso::lambda_b(&design, &data, cfg.c_b).unwrap();
    println!("lambda_b = {lam_b:.5}");
    let t0 = std::time::Instant::now();
    let pipe = PipelineConfig::default();
    match vcqr::lasso::fit_step1(&design, &data, lam_b, &pipe.solver) {
        Ok(fit) => {
            println!(
                "step1 ok: iters={} obj={:.6} kkt={:.2e} active={:?} dual_gap={:?} ({:.2}s)",
                fit.iters,
                fit.objective,
                fit.kkt_gap,
                fit.active_groups,
                fit.dual_gap,
                t0.elapsed().as_secs_f64()
            );
            println!("  a-block: {:?}", &fit.b_hat[..2]);
        }
        Err(e) => println!("step1 FAILED: {e}"),
    }

    let t1 = std::time::Instant::now();
    match run_inference_on_design(&design, &data, &pipe) {
        Ok(out) => {
            println!(
                "pipeline ok in {:.2}s; lambda_v={:.4} hp={:.4} hf={:.4} v11_cond={:.2e} step2_iters={} max_block_kkt={:.2e}",
                t1.elapsed().as_secs_f64(),
                out.diagnostics.lambda_v,
                out.diagnostics.h_p,
                out.diagnostics.h_f,
                out.diagnostics.v11_cond,
                out.diagnostics.step2_iters,
                out.diagnostics.step2_max_block_kkt,
            );
            for (kind, res) in &out.results {
                match res {
                    Ok(r) => println!(
                        "  {}: a1={:.4} se={:.4} ci=({:.4},{:.4})",
                        kind.name(),
                        r.a_check[0],
                        (r.sigma_a[[0, 0]] / r.nh).sqrt(),
                        r.ci[0].0,
                        r.ci[0].1
                    ),
                    Err(e) => println!("  {} FAILED: {e}", kind.name()),
                }
            }
        }
        Err(e) => println!("pipeline FAILED: {e}"),
    }
}
