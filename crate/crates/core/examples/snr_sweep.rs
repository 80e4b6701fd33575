//! Prints empirical vs closed-form delay MSE for a three-target SNR sweep.
//!
//! `cargo run --release --example snr_sweep -- 64qam pencil 1000`

use isac_core::constellation::Constellation;
use isac_core::estimation::EstimatorKind;
use isac_core::exec::Execution;
use isac_core::harness::{run_sweep, ReceiverChoice, SweepConfig};
use isac_core::sigmodel::OfdmConfig;
use isac_core::theory::SweepAxis;

fn main() -> isac_core::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("qpsk");
    let estimator = match args.get(2).map(String::as_str) {
        Some("periodogram") => EstimatorKind::Periodogram,
        _ => EstimatorKind::MatrixPencil,
    };
    let trials = args.get(3).and_then(|t| t.parse().ok()).unwrap_or(1000);

    let ofdm = OfdmConfig::new(256, 50e6, 0.64e-6)?;
    let mut cfg = SweepConfig::with_defaults(
        ofdm,
        SweepAxis::SnrDb(vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]),
        vec![Constellation::from_name_or_path(name)?],
        ReceiverChoice::Both,
        estimator,
        3,
        0.0,
    )?;
    cfg.trials = trials;
    let result = run_sweep(&cfg, Execution::Parallel)?;
    println!(
        "{:>6} {:>3} {:>2} {:>12} {:>12} {:>8} {:>5}",
        "snr", "rx", "k", "mse", "theory", "dB", "fail"
    );
    for r in &result.records {
        let mse = r.stats.map(|s| s.mse_s2).unwrap_or(f64::NAN);
        println!(
            "{:>6} {:>3} {:>2} {:>12.4e} {:>12.4e} {:>8.2} {:>5}",
            r.sweep_value,
            r.receiver.as_str(),
            r.target_index,
            mse,
            r.theory_mse_s2,
            10.0 * (mse / r.theory_mse_s2).log10(),
            r.failures
        );
    }
    Ok(())
}
