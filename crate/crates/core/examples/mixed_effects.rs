//! Random-intercept models with feature groups, nested LR tests and the
//! cluster-robust OLS alternative on one simulated pooled panel.

use depthstrata::sim::{simulate_pooled, SimConfig};
use depthstrata::stats::{
    lr_test, mixed_effects_fit, ols_cluster_robust, ClusterBy, MixedFormula, OlsCovariate, RobustKind,
};

fn main() -> anyhow::Result<()> {
    let panel = simulate_pooled(&SimConfig::reference_panel(0.08, 0.06, 0.05, 3), 5)?;
    for formula in [MixedFormula::DepthOnly, MixedFormula::DepthPlusFreq, MixedFormula::DepthPlusSigma] {
        let fit = mixed_effects_fit(&panel, formula)?;
        let (b, se, p) = fit.coef("depth").expect("depth is always fitted");
        println!(
            "{:<17} beta_depth={b:.4} se={se:.4} p={p:.2e} tau2={:.2e} aic={:.1}{}",
            formula.name(),
            fit.tau2,
            fit.aic,
            if fit.singular { " (singular)" } else { "" }
        );
    }
    for full in [MixedFormula::DepthPlusFreq, MixedFormula::DepthPlusSigma] {
        let lr = lr_test(&panel, MixedFormula::DepthOnly, full)?;
        println!("LR depth_only vs {}: stat={:.3} p={:.3} dAIC={:.2}", full.name(), lr.statistic, lr.p, lr.delta_aic);
    }
    for kind in [RobustKind::Cr0, RobustKind::Cr2] {
        let ols = ols_cluster_robust(&panel, &[OlsCovariate::Depth, OlsCovariate::Sigma], ClusterBy::Feature, kind)?;
        let (b, se, p) = ols.coef("depth").expect("depth");
        println!("OLS {kind:?}: depth {b:.4} (se {se:.4}, p {p:.3}), adj R2 {:.3}", ols.r2_adj);
    }
    Ok(())
}
