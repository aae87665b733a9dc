//! Run configuration, the depth-hypothesis test battery and `report.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::PanelSelection;
use crate::io::{sha256_hex, write_atomic};
use crate::rng::derive_seed;
use crate::stats::{
    cluster_bootstrap, cohens_d, fisher_combine, holm_adjust, leave_one_out, lr_test, mann_whitney, mixed_effects_fit,
    monotonicity_statistic, ols_cluster_robust, partial_spearman, per_feature_bootstrap, permutation_test, spearman,
    split_half_cv, steiger_z, ClusterBy, MixedFormula, OlsCovariate, PooledPanel, RobustKind, StatResult,
    TestStatistic,
};
use crate::tau::{cross_model_tau_agreement, TauTable};
use crate::trajectory::{means_by_depth, DecayRow, ZeroPolicy};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// An input file identified by role and content, not by path, so the same
/// data read from different locations gives the same report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_file(role: &str, path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Ok(InputDigest { role: role.to_string(), sha256: sha256_hex(&bytes) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub panel: PanelSelection,
    /// Feature → depth reassignments applied before any statistic.
    pub depth_overrides: BTreeMap<String, u8>,
    pub exclude: Vec<String>,
    pub zero_policy: ZeroPolicy,
    pub seed: u64,
    pub resamples: u64,
    pub shuffles: u64,
    pub cv_splits: usize,
    pub train_frac: f64,
    pub robust: RobustKind,
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: "sdh-test".into(),
            inputs: Vec::new(),
            panel: PanelSelection::Primary17,
            depth_overrides: BTreeMap::new(),
            exclude: Vec::new(),
            zero_policy: ZeroPolicy::default(),
            seed: 0,
            resamples: 10_000,
            shuffles: 100_000,
            cv_splits: 1_000,
            train_frac: 0.6,
            robust: RobustKind::Cr0,
            strict: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples == 0 || self.shuffles == 0 || self.cv_splits == 0 {
            return Err(Error::InvalidArgument("resample, shuffle and split counts must be >= 1".into()));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::InvalidArgument("train_frac must lie in (0, 1)".into()));
        }
        if let Some((f, d)) = self.depth_overrides.iter().find(|(_, d)| **d > 3) {
            return Err(Error::InvalidArgument(format!("depth override {f}={d} is outside 0..=3")));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(&serde_json::to_vec(self)?))
    }
}

/// A procedure that could not run, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub results: Vec<StatResult>,
    pub skipped: Vec<Skipped>,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn new(config: RunConfig) -> Result<Self> {
        Ok(AnalysisReport {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            config_hash: config.hash()?,
            config,
            results: Vec::new(),
            skipped: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn get(&self, name: &str) -> Option<&StatResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_json()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    /// Record `results`, or a skip when the procedure is undefined on this
    /// input. Validation errors propagate.
    fn attempt(&mut self, name: &str, f: impl FnOnce() -> Result<Vec<StatResult>>) -> Result<()> {
        match f() {
            Ok(rs) => {
                for r in rs {
                    if !r.estimate.is_finite() {
                        self.skipped.push(Skipped { name: r.name, reason: "non-finite estimate".into() });
                    } else {
                        self.results.push(r);
                    }
                }
                Ok(())
            }
            Err(e) if e.is_validation() || matches!(e, Error::Io { .. }) => Err(e),
            Err(e) => {
                self.skipped.push(Skipped { name: name.to_string(), reason: e.to_string() });
                Ok(())
            }
        }
    }

    fn skip(&mut self, name: &str, reason: &str) {
        self.skipped.push(Skipped { name: name.into(), reason: reason.into() });
    }
}

/// SHA-256 of the JSON encoding of a statistic's inputs.
pub fn inputs_hash<T: Serialize + ?Sized>(inputs: &T) -> String {
    sha256_hex(&serde_json::to_vec(inputs).expect("plain data serializes"))
}

/// Apply exclusions and depth overrides to decay rows. Both must name
/// features that occur in the rows.
pub fn prepare_rows(rows: &[DecayRow], config: &RunConfig) -> Result<Vec<DecayRow>> {
    let known: BTreeSet<&str> = rows.iter().map(|r| r.feature.as_str()).collect();
    for name in config.depth_overrides.keys().chain(&config.exclude) {
        if !known.contains(name.as_str()) {
            return Err(Error::UnknownFeature(name.clone()));
        }
    }
    Ok(rows
        .iter()
        .filter(|r| !config.exclude.contains(&r.feature))
        .map(|r| {
            let mut r = r.clone();
            if let Some(d) = config.depth_overrides.get(&r.feature) {
                r.depth = *d;
            }
            r
        })
        .collect())
}

/// Feature pairs matched on surface form or frequency but differing in depth.
pub const CRITICAL_PAIRS: [(&str, &str); 3] =
    [("regular_past_ed", "irregular_past"), ("em_dashes", "parentheses"), ("sent_initial_conj", "coordination")];

struct ModelVectors {
    depth: Vec<f64>,
    decay: Vec<f64>,
    lambda: Vec<f64>,
    log_freq: Vec<f64>,
    delta: Vec<f64>,
}

impl ModelVectors {
    fn new(rows: &[&DecayRow]) -> Self {
        ModelVectors {
            depth: rows.iter().map(|r| f64::from(r.depth)).collect(),
            decay: rows.iter().map(|r| -r.lambda).collect(),
            lambda: rows.iter().map(|r| r.lambda).collect(),
            log_freq: rows.iter().map(|r| r.baseline_freq.ln()).collect(),
            delta: rows.iter().map(|r| r.delta_total_pct).collect(),
        }
    }

    fn by_depth(&self, v: &[f64], keep: impl Fn(f64) -> bool) -> Vec<f64> {
        v.iter().zip(&self.depth).filter(|(_, d)| keep(**d)).map(|(x, _)| *x).collect()
    }
}

/// The full battery on decay rows of one or more models. `tau` may be empty.
///
/// Decay is −λ throughout, so the depth hypothesis predicts positive
/// correlations with depth.
pub fn sdh_test(decay: &[DecayRow], tau: &[TauTable], config: RunConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let rows = prepare_rows(decay, &config)?;
    if rows.is_empty() {
        return Err(Error::InsufficientData("no decay rows".into()));
    }
    let mut report = AnalysisReport::new(config)?;
    let cfg = report.config.clone();
    if !cfg.depth_overrides.is_empty() {
        let o: Vec<String> = cfg.depth_overrides.iter().map(|(f, d)| format!("{f}->{d}")).collect();
        report.notes.push(format!("depth overrides applied: {}", o.join(", ")));
    }
    if !cfg.exclude.is_empty() {
        report.notes.push(format!("features excluded: {}", cfg.exclude.join(", ")));
    }
    report.notes.push("decay = -lambda; positive correlations with depth support the hypothesis".into());

    let models: Vec<String> = {
        let mut m: Vec<String> = Vec::new();
        for r in &rows {
            if !m.contains(&r.model_id) {
                m.push(r.model_id.clone());
            }
        }
        m
    };
    let mut model_p: Vec<(String, f64)> = Vec::new();
    for m in &models {
        let mrows: Vec<&DecayRow> = rows.iter().filter(|r| &r.model_id == m).collect();
        if let Some(p) = per_model(&mut report, m, &mrows)? {
            model_p.push((m.clone(), p));
        }
    }

    let pooled = PooledPanel::from_decay(&rows)?.with_tau(|model, feature| {
        // a single τ table is shared by every model
        let t = tau.iter().find(|t| t.model_id == model).or(if tau.len() == 1 { tau.first() } else { None })?;
        t.tau(feature)
    });
    if models.len() < 2 {
        for name in [
            "pooled/spearman_depth",
            "pooled/cluster_bootstrap",
            "pooled/per_feature_ci",
            "pooled/fisher",
            "pooled/holm",
            "pooled/mixed",
            "pooled/joint_ols",
            "pooled/feature_mean_spearman",
        ] {
            report.skip(name, "pooled procedures need >= 2 models");
        }
    } else {
        pooled_block(&mut report, &pooled, &model_p)?;
    }
    if tau.len() >= 2 {
        report.attempt("tau/agreement", || {
            let a = cross_model_tau_agreement(tau, 0)?;
            let h = inputs_hash(tau);
            let mut out = vec![
                StatResult::new("tau/kendall_w", a.kendall_w, a.n_cells / (tau.len() - 1)).inputs(&h),
                StatResult::new("tau/binary_agreement", a.binary_agreement, a.n_cells)
                    .inputs(&h)
                    .notes(format!("reference {}", tau[0].model_id)),
            ];
            for (x, y, r) in a.pairwise {
                out.push(StatResult::new(format!("tau/spearman/{x}/{y}"), r, a.n_cells / (tau.len() - 1)).inputs(&h));
            }
            Ok(out)
        })?;
    }
    Ok(report)
}

/// Per-model block; returns the two-sided Spearman p used for combination.
fn per_model(report: &mut AnalysisReport, m: &str, rows: &[&DecayRow]) -> Result<Option<f64>> {
    let cfg = report.config.clone();
    let v = ModelVectors::new(rows);
    let n = rows.len();
    let key = |s: &str| format!("{m}/{s}");
    let h_depth = inputs_hash(&(&v.depth, &v.decay));
    let mut p_out = None;

    report.attempt(&key("spearman_depth"), || {
        let c = spearman(&v.depth, &v.decay)?;
        p_out = Some(c.p);
        let method = if c.exact { "exact enumeration" } else { "t approximation" };
        Ok(vec![StatResult::new(key("spearman_depth"), c.rho, n).p(c.p).inputs(&h_depth).notes(method)])
    })?;
    report.attempt(&key("spearman_freq"), || {
        let c = spearman(&v.log_freq, &v.decay)?;
        Ok(vec![StatResult::new(key("spearman_freq"), c.rho, n).p(c.p).inputs(inputs_hash(&(&v.log_freq, &v.decay)))])
    })?;
    for (stat, label) in
        [(TestStatistic::Spearman, "permutation_spearman"), (TestStatistic::Monotonicity, "permutation_monotonicity")]
    {
        report.attempt(&key(label), || {
            let seed = derive_seed(cfg.seed, &key(label));
            let r = permutation_test(&v.decay, &v.depth, stat, cfg.shuffles, seed)?;
            Ok(vec![StatResult::new(key(label), r.observed, n)
                .p(r.p)
                .seed(seed)
                .inputs(&h_depth)
                .notes(format!("one-sided, {} shuffles, add-one estimator", r.n_shuffles))])
        })?;
    }
    report.attempt(&key("monotone_groups"), || {
        let s = monotonicity_statistic(&v.decay, &v.depth)?;
        let groups = means_by_depth(rows.iter().map(|r| (r.depth, -r.lambda))).len();
        Ok(vec![StatResult::new(key("monotone_groups"), s, n)
            .inputs(&h_depth)
            .notes(format!("increasing adjacent pairs of {} depth groups", groups))])
    })?;
    report.attempt(&key("cohens_d"), || {
        let a = v.by_depth(&v.lambda, |d| d == 0.0);
        let b = v.by_depth(&v.lambda, |d| d == 2.0);
        let d = cohens_d(&a, &b)?;
        Ok(vec![StatResult::new(key("cohens_d"), d, a.len() + b.len())
            .inputs(inputs_hash(&(&a, &b)))
            .notes("lambda, depth 0 vs depth 2")])
    })?;
    report.attempt(&key("leave_one_out"), || {
        let l = leave_one_out(&v.depth, &v.decay)?;
        let mut out = vec![StatResult::new(key("leave_one_out"), l.full, n)
            .ci(l.min, l.max)
            .inputs(&h_depth)
            .notes(format!("range of rho over drops; most influential: {}", rows[l.most_influential].feature))];
        for (r, rho) in rows.iter().zip(&l.rhos) {
            out.push(StatResult::new(key(&format!("leave_one_out/{}", r.feature)), *rho, n - 1).inputs(&h_depth));
        }
        Ok(out)
    })?;
    report.attempt(&key("partial_spearman"), || {
        let c = partial_spearman(&v.depth, &v.decay, &v.log_freq)?;
        Ok(vec![StatResult::new(key("partial_spearman"), c.rho, n)
            .p(c.p)
            .inputs(inputs_hash(&(&v.depth, &v.decay, &v.log_freq)))
            .notes("rho(depth, decay | log freq)")])
    })?;
    report.attempt(&key("steiger"), || steiger(&key("steiger"), &v, n))?;
    report.attempt(&key("mann_whitney"), || {
        let a = v.by_depth(&v.delta, |d| d == 0.0);
        let b = v.by_depth(&v.delta, |d| d >= 2.0);
        let u = mann_whitney(&a, &b)?;
        let method = if u.exact { "exact" } else { "normal approximation" };
        Ok(vec![StatResult::new(key("mann_whitney"), u.u, a.len() + b.len())
            .p(u.p)
            .inputs(inputs_hash(&(&a, &b)))
            .notes(format!("delta %, depth 0 vs depth >= 2, U of depth 0, {method}"))])
    })?;
    report.attempt(&key("split_half_cv"), || {
        let seed = derive_seed(cfg.seed, &key("split_half_cv"));
        let s = split_half_cv(&v.depth, &v.decay, cfg.train_frac, cfg.cv_splits, seed)?;
        Ok(vec![
            StatResult::new(key("split_half_cv"), s.median_test_rho, n).seed(seed).inputs(&h_depth).notes(format!(
                "median test rho; {} splits, {} skipped, test size {}",
                s.n_splits, s.n_skipped, s.test_size
            )),
            StatResult::new(key("split_half_cv/fraction_positive"), s.fraction_positive, n).seed(seed).inputs(&h_depth),
        ])
    })?;
    report.attempt(&key("group_means"), || {
        let mut out = Vec::new();
        let h = inputs_hash(&(&v.depth, &v.delta, &v.lambda));
        for (label, vals) in [("delta_pct", &v.delta), ("lambda", &v.lambda)] {
            let means = means_by_depth(rows.iter().zip(vals.iter()).map(|(r, x)| (r.depth, *x)));
            for (d, mean) in means {
                let k = rows.iter().filter(|r| r.depth == d).count();
                out.push(StatResult::new(key(&format!("group_mean/{label}/d{d}")), mean, k).inputs(&h));
            }
        }
        Ok(out)
    })?;
    for (a, b) in CRITICAL_PAIRS {
        let (ra, rb) = (rows.iter().find(|r| r.feature == a), rows.iter().find(|r| r.feature == b));
        if let (Some(ra), Some(rb)) = (ra, rb) {
            let name = key(&format!("critical_pair/{a}/{b}"));
            report.results.push(
                StatResult::new(&name, ra.delta_total_pct - rb.delta_total_pct, 2)
                    .inputs(inputs_hash(&(ra, rb)))
                    .notes(format!(
                        "delta % difference; {a} (d={}) {:+.1}, {b} (d={}) {:+.1}",
                        ra.depth, ra.delta_total_pct, rb.depth, rb.delta_total_pct
                    )),
            );
        }
    }
    Ok(p_out)
}

fn steiger(name: &str, v: &ModelVectors, n: usize) -> Result<Vec<StatResult>> {
    let r_dd = spearman(&v.decay, &v.depth)?.rho;
    let r_df = spearman(&v.decay, &v.log_freq)?.rho;
    let r_ff = spearman(&v.depth, &v.log_freq)?.rho;
    let (z, p) = steiger_z(r_dd, r_df, r_ff, n)?;
    Ok(vec![StatResult::new(name, z, n)
        .p(p)
        .inputs(inputs_hash(&(&v.depth, &v.decay, &v.log_freq)))
        .notes(format!(
            "rho(decay, depth) = {r_dd:.4} vs rho(decay, log freq) = {r_df:.4}; depth-freq intercorrelation {r_ff:.4} from the data"
        ))])
}

fn pooled_block(report: &mut AnalysisReport, pooled: &PooledPanel, model_p: &[(String, f64)]) -> Result<()> {
    let cfg = report.config.clone();
    let n = pooled.len();
    let v = ModelVectors {
        depth: pooled.depths(),
        decay: pooled.decays(),
        lambda: pooled.lambdas(),
        log_freq: pooled.rows().iter().map(|r| r.baseline_freq.ln()).collect(),
        delta: Vec::new(),
    };
    let h = inputs_hash(pooled);

    report.attempt("pooled/spearman_depth", || {
        let c = spearman(&v.depth, &v.decay)?;
        Ok(vec![StatResult::new("pooled/spearman_depth", c.rho, n).p(c.p).inputs(&h)])
    })?;
    report.attempt("pooled/spearman_freq", || {
        let c = spearman(&v.log_freq, &v.decay)?;
        Ok(vec![StatResult::new("pooled/spearman_freq", c.rho, n).p(c.p).inputs(&h)])
    })?;
    report.attempt("pooled/partial_spearman", || {
        let c = partial_spearman(&v.depth, &v.decay, &v.log_freq)?;
        Ok(vec![StatResult::new("pooled/partial_spearman", c.rho, n)
            .p(c.p)
            .inputs(&h)
            .notes("rho(depth, decay | log freq)")])
    })?;
    report.attempt("pooled/steiger", || steiger("pooled/steiger", &v, n))?;
    report.attempt("pooled/cluster_bootstrap", || {
        let seed = derive_seed(cfg.seed, "pooled/cluster_bootstrap");
        let b = cluster_bootstrap(pooled, cfg.resamples, seed)?;
        Ok(vec![StatResult::new("pooled/cluster_bootstrap", b.estimate, n)
            .ci(b.ci_low, b.ci_high)
            .seed(seed)
            .inputs(&h)
            .notes(format!("percentile 95% CI over {} model resamples, {} degenerate", b.n_resamples, b.n_failed))])
    })?;
    report.attempt("pooled/per_feature_ci", || {
        let seed = derive_seed(cfg.seed, "pooled/per_feature_ci");
        let cis = per_feature_bootstrap(pooled, cfg.resamples, seed)?;
        let excluding = cis.iter().filter(|c| c.excludes_zero()).count();
        let mut out = vec![StatResult::new("pooled/per_feature_ci/excluding_zero", excluding as f64, cis.len())
            .seed(seed)
            .inputs(&h)];
        for c in cis {
            out.push(
                StatResult::new(format!("pooled/per_feature_ci/{}", c.feature), c.mean, c.n_models)
                    .ci(c.ci_low, c.ci_high)
                    .seed(seed)
                    .inputs(&h)
                    .notes(format!("mean lambda across models, d={}", c.depth)),
            );
        }
        Ok(out)
    })?;
    report.attempt("pooled/feature_mean_spearman", || {
        let means = pooled.feature_means();
        let d: Vec<f64> = means.iter().map(|m| f64::from(m.1)).collect();
        let decay: Vec<f64> = means.iter().map(|m| -m.2).collect();
        let c = spearman(&d, &decay)?;
        Ok(vec![StatResult::new("pooled/feature_mean_spearman", c.rho, means.len())
            .p(c.p)
            .inputs(inputs_hash(&(&d, &decay)))
            .notes("decay averaged over models per feature")])
    })?;
    report.attempt("pooled/fisher", || {
        let ps: Vec<f64> = model_p.iter().map(|x| x.1).collect();
        let f = fisher_combine(&ps)?;
        let adj = holm_adjust(&ps)?;
        let hp = inputs_hash(model_p);
        let mut out =
            vec![StatResult::new("pooled/fisher", f.chi2, ps.len()).p(f.p).inputs(&hp).notes(format!("df = {}", f.df))];
        for ((m, p), a) in model_p.iter().zip(adj) {
            out.push(
                StatResult::new(format!("pooled/holm/{m}"), *p, 1).p(a).inputs(&hp).notes("estimate is the raw p"),
            );
        }
        Ok(out)
    })?;
    let mut formulas = vec![MixedFormula::DepthOnly, MixedFormula::DepthPlusFreq];
    let has_sigma = pooled.rows().iter().any(|r| r.sigma.is_some());
    if has_sigma {
        formulas.push(MixedFormula::DepthPlusSigma);
    }
    for formula in &formulas {
        let name = format!("pooled/mixed/{}", formula.name());
        report.attempt(&name, || {
            let fit = mixed_effects_fit(pooled, *formula)?;
            let mut out = Vec::new();
            let singular = if fit.singular { "; singular fit (feature variance 0)" } else { "" };
            for (i, c) in fit.coef_names.iter().enumerate() {
                out.push(
                    StatResult::new(format!("{name}/{c}"), fit.beta[i], fit.n_obs)
                        .p(fit.p[i])
                        .ci(fit.beta[i] - 1.959963984540054 * fit.se[i], fit.beta[i] + 1.959963984540054 * fit.se[i])
                        .inputs(&h)
                        .notes(format!("se = {}{singular}", fit.se[i])),
                );
            }
            out.push(StatResult::new(format!("{name}/aic"), fit.aic, fit.n_obs).inputs(&h).notes(format!(
                "loglik = {}, groups = {}, tau2 = {}, sigma2 = {}",
                fit.loglik, fit.n_groups, fit.tau2, fit.sigma2
            )));
            Ok(out)
        })?;
    }
    for full in &formulas[1..] {
        let name = format!("pooled/mixed/lr/{}", full.name());
        report.attempt(&name, || {
            let lr = lr_test(pooled, MixedFormula::DepthOnly, *full)?;
            Ok(vec![StatResult::new(&name, lr.statistic, lr.full.n_obs)
                .p(lr.p)
                .inputs(&h)
                .notes(format!("df = {}, delta AIC (full - reduced) = {}", lr.df, lr.delta_aic))])
        })?;
    }
    let covariates = if has_sigma {
        vec![OlsCovariate::Depth, OlsCovariate::Sigma]
    } else {
        vec![OlsCovariate::Depth, OlsCovariate::LogFreq]
    };
    report.attempt("pooled/joint_ols", || {
        let fit = ols_cluster_robust(pooled, &covariates, ClusterBy::Feature, cfg.robust)?;
        let mut out = Vec::new();
        for (i, c) in fit.coef_names.iter().enumerate() {
            out.push(
                StatResult::new(format!("pooled/joint_ols/{c}"), fit.beta[i], fit.n_obs).p(fit.p[i]).inputs(&h).notes(
                    format!("se = {}, {:?}, {} feature clusters, df = {}", fit.se[i], fit.kind, fit.n_clusters, fit.df),
                ),
            );
        }
        out.push(StatResult::new("pooled/joint_ols/r2_adj", fit.r2_adj, fit.n_obs).inputs(&h));
        Ok(out)
    })?;
    if !has_sigma {
        report.notes.push("no tau table: joint regression uses log frequency instead of sigma".into());
    } else if let Some(u) = pooled.rows().iter().find(|r| r.sigma.is_none()) {
        report.notes.push(format!(
            "tau undefined or missing for some rows (e.g. {}/{}); they are left out of sigma models",
            u.model_id, u.feature
        ));
    }
    let cv: Vec<f64> =
        model_p.iter().filter_map(|(m, _)| report.get(&format!("{m}/split_half_cv")).map(|r| r.estimate)).collect();
    report.attempt("pooled/split_half_cv", || {
        if cv.is_empty() {
            return Err(Error::InsufficientData("no per-model split-half results".into()));
        }
        let mut sorted = cv.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(vec![StatResult::new("pooled/split_half_cv", crate::stats::quantile_type7(&sorted, 0.5), cv.len())
            .inputs(inputs_hash(&cv))
            .notes("median over models of the per-model median test rho")])
    })?;
    Ok(())
}

/// Flatten a report into `report.csv` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCsvRow {
    pub name: String,
    pub estimate: Option<f64>,
    pub p_value: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub status: String,
    pub notes: String,
}

pub fn report_rows(report: &AnalysisReport) -> Vec<ReportCsvRow> {
    let mut out: Vec<ReportCsvRow> = report
        .results
        .iter()
        .map(|r| ReportCsvRow {
            name: r.name.clone(),
            estimate: Some(r.estimate),
            p_value: r.p_value,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            n: Some(r.n),
            seed: r.seed,
            status: "ok".into(),
            notes: r.notes.clone(),
        })
        .collect();
    out.extend(report.skipped.iter().map(|s| ReportCsvRow {
        name: s.name.clone(),
        estimate: None,
        p_value: None,
        ci_low: None,
        ci_high: None,
        n: None,
        seed: None,
        status: "skipped".into(),
        notes: s.reason.clone(),
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::primary17;

    /// Two models with λ = −0.1·depth + small feature-specific offsets.
    fn rows() -> Vec<DecayRow> {
        let mut out = Vec::new();
        for m in ["a", "b"] {
            for (k, f) in primary17().iter().enumerate() {
                let d = f.depth.get();
                let jitter = ((k * 7 + m.len() * 3) % 11) as f64 * 1e-3;
                out.push(DecayRow {
                    model_id: m.into(),
                    feature: f.name.clone(),
                    depth: d,
                    lambda: -0.1 * f64::from(d) + jitter + if m == "b" { 0.004 } else { 0.0 },
                    delta_total_pct: -10.0 * f64::from(d) + k as f64,
                    baseline_freq: 1.0 + k as f64,
                });
            }
        }
        out
    }

    fn fast(seed: u64) -> RunConfig {
        RunConfig { seed, resamples: 200, shuffles: 500, cv_splits: 20, ..RunConfig::default() }
    }

    #[test]
    fn battery_runs_and_orients_decay() {
        let r = sdh_test(&rows(), &[], fast(1)).unwrap();
        assert!(r.get("a/spearman_depth").unwrap().estimate > 0.9);
        assert!(r.get("pooled/spearman_depth").unwrap().estimate > 0.9);
        assert!(r.get("pooled/fisher").is_some());
        assert_eq!(r.get("a/monotone_groups").unwrap().estimate, 3.0);
        // no τ: the σ model is skipped and OLS falls back to log frequency
        assert!(r.get("pooled/joint_ols/log_freq_z").is_some());
        assert!(r.skipped.iter().all(|s| !s.reason.is_empty()));
    }

    #[test]
    fn overrides_and_exclusions_are_applied_and_checked() {
        let mut cfg = fast(1);
        cfg.exclude = vec!["subjunctive".into()];
        cfg.depth_overrides.insert("em_dashes".into(), 2);
        let rows = prepare_rows(&rows(), &cfg).unwrap();
        assert_eq!(rows.len(), 32);
        assert!(rows.iter().filter(|r| r.feature == "em_dashes").all(|r| r.depth == 2));
        cfg.exclude.push("nope".into());
        assert!(matches!(sdh_test(&super::tests::rows(), &[], cfg), Err(Error::UnknownFeature(n)) if n == "nope"));
    }

    #[test]
    fn config_hash_tracks_every_field() {
        let a = fast(1);
        let mut b = fast(1);
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.train_frac = 0.5;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), fast(2).hash().unwrap());
    }

    #[test]
    fn json_round_trips_and_rows_cover_skips() {
        let r = sdh_test(&rows(), &[], fast(3)).unwrap();
        let back: AnalysisReport = serde_json::from_slice(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let csv = report_rows(&r);
        assert_eq!(csv.len(), r.results.len() + r.skipped.len());
    }

    #[test]
    fn undefined_procedures_become_skips() {
        let mut r = AnalysisReport::new(fast(0)).unwrap();
        r.attempt("x", || Err(Error::Undefined("constant".into()))).unwrap();
        r.attempt("y", || Ok(vec![StatResult::new("y", f64::NAN, 3)])).unwrap();
        assert!(r.attempt("z", || Err(Error::UnknownFeature("q".into()))).is_err());
        let names: Vec<&str> = r.skipped.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["x", "y"]);
        assert!(r.results.is_empty());
    }
}
