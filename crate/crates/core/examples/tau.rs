//! Greedy-to-nucleus ratios, the σ they imply, and cross-model agreement.

use depthstrata::features::Depth;
use depthstrata::tau::{cross_model_tau_agreement, TauTable};

fn main() -> anyhow::Result<()> {
    let d = |k| Depth::new(k).expect("depth in range");
    // rates per 1000 tokens: (feature, depth, nucleus, greedy)
    let a = TauTable::from_rates(
        "model_a",
        &[
            ("discourse_markers", d(0), 1.60, 0.08),
            ("hedging", d(0), 1.16, 0.36),
            ("coordination", d(1), 32.12, 18.49),
            ("quotes", d(1), 6.90, 17.10),
            ("passive_voice", d(2), 5.56, 13.24),
            ("parentheses", d(2), 7.27, 8.11),
        ],
    );
    for r in &a.rows {
        let show = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.3}"));
        println!("{:<18} d={} tau={} sigma={}", r.feature, r.depth, show(r.tau), show(r.sigma));
    }

    // a second model with the same ordering but shifted levels
    let mut b = a.clone();
    b.model_id = "model_b".into();
    for r in &mut b.rows {
        r.f_greedy *= 1.2;
        r.tau = r.tau.map(|t| t * 1.2);
        r.sigma = r.tau.map(depthstrata::tau::sigma_from_tau);
    }
    let agree = cross_model_tau_agreement(&[a, b], 0)?;
    println!("Kendall W {:.3}, tau > 1 agreement {:.2}", agree.kendall_w, agree.binary_agreement);
    Ok(())
}
