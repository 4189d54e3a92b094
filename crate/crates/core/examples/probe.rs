//! Scratch runner for desk-scale checks of the study harness.

use vcqr::sim::{run_study, Method, SimConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let reps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let r2x: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.7);
    let r2y: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let gamma: u8 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cv: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.02);

    let cfg = SimConfig {
        m_reps: reps,
        r2_x: r2x,
        r2_y: r2y,
        gamma,
        c_v: cv,
        methods: Method::ALL.to_vec(),
        ..SimConfig::default()
    };
    let t0 = std::time::Instant::now();
    match run_study(&cfg) {
        Ok(report) => {
            println!(
                "n={} p={} h={:.4} c_x={:.4} c_y={:.4} beta={:.3} ({:.1}s)",
                report.n,
                report.p,
                report.h,
                report.c_x,
                report.c_y,
                report.beta_true,
                t0.elapsed().as_secs_f64()
            );
            println!(
                "{:<8} {:>8} {:>8} {:>8} {:>6} {:>6}",
                "method", "bias", "sd", "ese", "cr", "m_eff"
            );
            for r in &report.rows {
                println!(
                    "{:<8} {:>8.3} {:>8.3} {:>8.3} {:>6.2} {:>6}",
                    r.method.name(),
                    r.bias,
                    r.sd,
                    r.ese,
                    r.cr,
                    r.m_effective
                );
            }
        }
        Err(e) => {
            eprintln!("study failed: {e}");
            std::process::exit(1);
        }
    }
}
