//! The full inference battery on a simulated five-model panel.

use depthstrata::report::{sdh_test, RunConfig};
use depthstrata::rng::derive_seed;
use depthstrata::sim::{simulate, synthetic_panel, SimConfig};
use depthstrata::trajectory::{decay_estimates, DecayRow, ZeroPolicy};

fn main() -> anyhow::Result<()> {
    let base = SimConfig::reference_panel(0.08, 0.06, 0.05, 42);
    let mut rows = Vec::new();
    for m in 0..5 {
        let cfg = SimConfig { seed: derive_seed(base.seed, &format!("model/{m}")), ..base.clone() };
        let model = format!("sim{m}");
        let panel = synthetic_panel(&model, &cfg, &simulate(&cfg)?)?;
        let (est, _) = decay_estimates(&panel, ZeroPolicy::FloorHalfCount)?;
        rows.extend(est.iter().map(|e| DecayRow::new(&model, e)));
    }

    let config = RunConfig { seed: 7, resamples: 2_000, shuffles: 20_000, cv_splits: 200, ..RunConfig::default() };
    let report = sdh_test(&rows, &[], config)?;
    for name in [
        "sim0/spearman_depth",
        "sim0/permutation_monotonicity",
        "pooled/spearman_depth",
        "pooled/partial_spearman",
        "pooled/cluster_bootstrap",
        "pooled/fisher",
        "pooled/mixed/depth_only/depth",
        "pooled/mixed/lr/depth_plus_freq",
    ] {
        if let Some(r) = report.get(name) {
            let ci = match (r.ci_low, r.ci_high) {
                (Some(l), Some(h)) => format!(" [{l:.3}, {h:.3}]"),
                _ => String::new(),
            };
            println!("{name:<34} {:>9.4}{ci} p={:?}", r.estimate, r.p_value);
        }
    }
    println!(
        "{} results, {} skipped, config {}",
        report.results.len(),
        report.skipped.len(),
        &report.config_hash[..12]
    );
    Ok(())
}
