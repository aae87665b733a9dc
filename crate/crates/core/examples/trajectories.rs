//! Decay rates and percent changes from normalized trajectories, then the
//! depth-group means.

use std::collections::BTreeMap;

use depthstrata::features::{primary17, Depth};
use depthstrata::trajectory::{decay_rate, means_by_depth, percent_change, TrajectorySeries, ZeroPolicy};

fn main() -> anyhow::Result<()> {
    // generations 0, 2, ..., 10 of three features
    let times: Vec<f64> = (0..6).map(|k| 2.0 * k as f64).collect();
    let observed: BTreeMap<&str, [f64; 6]> = [
        ("hedging", [1.00, 1.27, 1.59, 1.63, 1.53, 1.44]),
        ("coordination", [1.00, 0.91, 0.82, 0.82, 0.85, 0.86]),
        ("passive_voice", [1.00, 0.49, 0.33, 0.40, 0.45, 0.45]),
    ]
    .into();

    let depth_of: BTreeMap<String, Depth> = primary17().into_iter().map(|f| (f.name, f.depth)).collect();
    let mut pairs = Vec::new();
    for (name, values) in &observed {
        let s = TrajectorySeries::from_values(*name, depth_of[*name], times.clone(), values.to_vec())?;
        let lambda = decay_rate(&s, ZeroPolicy::DropZeros)?;
        let delta = percent_change(&s)?;
        println!("{name:<15} d={} lambda={lambda:+.4}/gen delta={delta:+.1}%", s.depth.get());
        pairs.push((s.depth.get(), delta));
    }
    for (d, m) in means_by_depth(pairs) {
        println!("depth {d}: mean delta {m:+.1}%");
    }
    Ok(())
}
