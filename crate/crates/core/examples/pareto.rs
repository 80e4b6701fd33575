//! Sensing metric and minimum distance across the shaping priority weight.
//!
//! `cargo run --release --example pareto -- 16 mf 64`

use isac_core::exec::Execution;
use isac_core::shaping::{pareto_sweep, SensingMetric};

fn main() -> isac_core::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let m = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(16);
    let metric = match args.get(2).map(String::as_str) {
        Some("rf") => SensingMetric::RfNu2,
        _ => SensingMetric::MfMu4,
    };
    let restarts = args.get(3).and_then(|v| v.parse().ok()).unwrap_or(64);
    let rhos = [0.0, 0.25, 0.5, 0.75, 1.0];
    println!("rho    metric       d_min        restart  kkt");
    for point in pareto_sweep(m, metric, &rhos, restarts, 0, Execution::default())? {
        match point.outcome {
            Ok(r) => println!(
                "{:<6} {:<12.8} {:<12.8} {:<8} {:.1e}",
                point.rho,
                r.sensing_metric_value,
                r.d_min,
                r.restart_index_of_best,
                r.residuals.kkt
            ),
            Err(e) => println!("{:<6} {e}", point.rho),
        }
    }
    Ok(())
}
