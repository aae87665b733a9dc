use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use depthstrata::aggregates::{csv_rows, series_aggregates, write_aggregates, HapaxBasis};
use depthstrata::corpus::{
    discover_models, ingest_corpus, load_corpus, load_series, read_meta, CorpusMeta, DecodeMode, DecodingParams,
    GenerationSeries, META_FILE,
};
use depthstrata::features::{
    apply_depth_overrides, apply_exclusions, extract_panel, FeatureSpec, PanelSelection, RatePanel,
};
use depthstrata::io::{write_atomic, write_csv};
use depthstrata::report::{report_rows, sdh_test, AnalysisReport, InputDigest, RunConfig};
use depthstrata::sim::{simulate, synthetic_panel, SimConfig, SimTruth};
use depthstrata::stats::RobustKind;
use depthstrata::tau::{compute_tau, half_split_stability, tau_warnings, PromptCounts, TauRow, TauTable};
use depthstrata::trajectory::{
    decay_estimates, read_decay, trajectory_rows, write_decay, write_trajectories, DecayRow, TrajectorySeries,
    ZeroPolicy,
};
use depthstrata::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_STRICT_SKIP: u8 = 3;

#[derive(Parser)]
#[command(name = "depthstrata", version, about = "Depth-stratified decay analysis of self-training corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus directory and copy it into the interchange layout.
    Ingest(IngestArgs),
    /// Feature panel and aggregate metrics for every model under a root.
    Extract(ExtractArgs),
    /// Normalized trajectories and decay rates from a panel.
    Trajectories(TrajectoriesArgs),
    /// Run the depth-hypothesis test battery on decay rates.
    SdhTest(SdhArgs),
    /// Greedy-to-nucleus ratios from a corpus pair.
    Tau(TauArgs),
    /// Simulate panels with known decay dynamics.
    Simulate(SimArgs),
    /// Summarize a report.json as a table.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// primary17, primary17+excluded or heldout5.
    #[arg(long, default_value = "primary17")]
    panel: String,
    /// Reassign a feature's depth, e.g. irregular_past=1. Repeatable.
    #[arg(long = "depth-override", value_name = "FEATURE=D")]
    depth_override: Vec<String>,
    /// Drop a feature. Repeatable.
    #[arg(long)]
    exclude: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit with status 3 when any procedure is skipped.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn overrides(&self) -> Result<BTreeMap<String, u8>> {
        let mut m = BTreeMap::new();
        for o in &self.depth_override {
            let (f, d) =
                o.split_once('=').ok_or_else(|| Error::InvalidArgument(format!("expected FEATURE=D, got {o:?}")))?;
            let d: u8 = d.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad depth in {o:?}")))?;
            m.insert(f.trim().to_string(), d);
        }
        Ok(m)
    }

    fn panel(&self) -> Result<PanelSelection> {
        Ok(self.panel.parse()?)
    }

    fn specs(&self) -> Result<Vec<FeatureSpec>> {
        let mut specs = self.panel()?.features();
        apply_depth_overrides(&mut specs, &self.overrides()?)?;
        apply_exclusions(&mut specs, &self.exclude)?;
        Ok(specs)
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Directory holding documents.jsonl and optionally parses.conllu.
    #[arg(long)]
    input: PathBuf,
    /// Metadata from flags; without it, meta.json in the input directory is used.
    #[arg(long)]
    model_id: Option<String>,
    #[arg(long, default_value_t = 0)]
    generation: u32,
    #[arg(long, default_value = "nucleus")]
    decode_mode: String,
    #[arg(long)]
    top_p: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    top_k: Option<u32>,
    #[arg(long)]
    repetition_penalty: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Root of the interchange tree; the corpus lands in <out>/<model>/gen<k>.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Interchange root: <root>/<model>/gen<k>/.
    #[arg(long)]
    root: PathBuf,
    /// Restrict to these models. Repeatable.
    #[arg(long)]
    model: Vec<String>,
    /// Subsample this many documents per generation, without replacement.
    #[arg(long)]
    sample: Option<usize>,
    /// Hapax ratio over types or tokens.
    #[arg(long, default_value = "types")]
    hapax: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TrajectoriesArgs {
    /// panel.csv from `extract` or `simulate`.
    #[arg(long)]
    panel_csv: PathBuf,
    /// floor (half-count) or drop.
    #[arg(long, default_value = "floor")]
    zero_policy: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SdhArgs {
    #[arg(long)]
    decay: PathBuf,
    /// Optional tau.csv; a single model's table is shared by all models.
    #[arg(long)]
    tau: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    resamples: u64,
    #[arg(long, default_value_t = 100_000)]
    shuffles: u64,
    #[arg(long, default_value_t = 1_000)]
    cv_splits: usize,
    #[arg(long, default_value_t = 0.6)]
    train_frac: f64,
    /// cr0 or cr2.
    #[arg(long, default_value = "cr0")]
    robust: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TauArgs {
    #[arg(long)]
    nucleus: PathBuf,
    #[arg(long)]
    greedy: PathBuf,
    /// Random prompt half-splits for rank stability; needs prompt ids.
    #[arg(long, default_value_t = 0)]
    half_splits: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 0.08)]
    alpha: f64,
    #[arg(long, default_value_t = 0.06)]
    beta: f64,
    #[arg(long, default_value_t = 0.05)]
    noise_sd: f64,
    #[arg(long, default_value_t = 10)]
    generations: u32,
    #[arg(long, default_value_t = 1.1)]
    floor: f64,
    #[arg(long, default_value_t = 5)]
    models: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    report: PathBuf,
    /// Also write report.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_validation));
            ExitCode::from(if validation { EXIT_VALIDATION } else { 1 })
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Extract(a) => extract(a),
        Command::Trajectories(a) => trajectories(a),
        Command::SdhTest(a) => sdh(a),
        Command::Tau(a) => tau(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Report(a) => report(a),
    }
}

fn ingest(a: IngestArgs) -> Result<u8> {
    let meta = match &a.model_id {
        Some(m) => {
            let mode: DecodeMode = serde_json::from_value(serde_json::Value::String(a.decode_mode.clone()))
                .map_err(|_| Error::InvalidArgument(format!("unknown decode mode {:?}", a.decode_mode)))?;
            let mut meta = CorpusMeta::new(m, a.generation, mode);
            meta.seed = a.seed;
            meta.params = DecodingParams {
                top_p: a.top_p,
                temperature: a.temperature,
                top_k: a.top_k,
                repetition_penalty: a.repetition_penalty,
            };
            meta
        }
        None => read_meta(&a.input).with_context(|| format!("no --model-id and no usable {META_FILE}"))?,
    };
    let corpus = ingest_corpus(&a.input, meta).with_context(|| format!("ingesting {}", a.input.display()))?;
    println!(
        "{}: {} documents, {} tokens, parses {}",
        a.input.display(),
        corpus.len(),
        corpus.token_count(),
        if corpus.has_parses() { "present" } else { "absent" }
    );
    if let Some(root) = a.out {
        let dir = root.join(&corpus.meta.model_id).join(format!("gen{}", corpus.meta.generation));
        corpus.export(&dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(0)
}

fn extract(a: ExtractArgs) -> Result<u8> {
    let specs = a.common.specs()?;
    let basis = match a.hapax.as_str() {
        "types" => HapaxBasis::Types,
        "tokens" => HapaxBasis::Tokens,
        other => bail!(Error::InvalidArgument(format!("unknown hapax basis {other:?}"))),
    };
    let models = if a.model.is_empty() { discover_models(&a.root)? } else { a.model.clone() };
    if models.is_empty() {
        bail!(Error::Series(format!("no <model>/gen0 directories under {}", a.root.display())));
    }
    let mut panels = Vec::new();
    let mut aggregates = Vec::new();
    for m in &models {
        let mut series = load_series(&a.root, m).with_context(|| format!("loading {}", a.root.join(m).display()))?;
        if let Some(n) = a.sample {
            let sub = series
                .corpora()
                .iter()
                .map(|c| {
                    c.subsample(
                        n,
                        depthstrata::rng::derive_seed(a.common.seed, &format!("{m}/gen{}", c.meta.generation)),
                    )
                })
                .collect();
            series = GenerationSeries::new(m, sub)?;
        }
        panels.push(extract_panel(&series, &specs).with_context(|| format!("model {m}"))?);
        aggregates.extend(csv_rows(m, &series_aggregates(&series, basis)));
        for p in panels.last().iter().flat_map(|p| p.unusable_features()) {
            eprintln!("warning: {m}: {p} has a zero generation-0 rate and cannot be normalized");
        }
    }
    RatePanel::write_csv(&panels, &a.common.out.join("panel.csv"))?;
    write_aggregates(&a.common.out.join("aggregates.csv"), &aggregates)?;
    println!("wrote panel.csv and aggregates.csv for {} model(s) to {}", models.len(), a.common.out.display());
    Ok(0)
}

fn decay_from_panels(panels: &[RatePanel], policy: ZeroPolicy, out: &Path) -> Result<Vec<DecayRow>> {
    let mut decay = Vec::new();
    let mut traj = Vec::new();
    for p in panels {
        let (est, unusable) = decay_estimates(p, policy)?;
        for u in unusable {
            eprintln!("warning: {}: {u} excluded (zero generation-0 rate)", p.model_id);
        }
        decay.extend(est.iter().map(|e| DecayRow::new(&p.model_id, e)));
        let series: Vec<TrajectorySeries> = (0..p.features.len()).map(|f| TrajectorySeries::from_panel(p, f)).collect();
        traj.extend(trajectory_rows(&p.model_id, &series));
    }
    write_trajectories(&out.join("trajectories.csv"), &traj)?;
    write_decay(&out.join("decay.csv"), &decay)?;
    Ok(decay)
}

fn trajectories(a: TrajectoriesArgs) -> Result<u8> {
    let policy: ZeroPolicy = a.zero_policy.parse()?;
    let mut panels = RatePanel::read_csv(&a.panel_csv).with_context(|| format!("reading {}", a.panel_csv.display()))?;
    let overrides = a.common.overrides()?;
    for p in &mut panels {
        for name in overrides.keys().chain(&a.common.exclude) {
            if p.feature_index(name).is_none() {
                bail!(Error::UnknownFeature(name.clone()));
            }
        }
        for (name, d) in &overrides {
            let i = p.feature_index(name).expect("checked above");
            p.features[i].1 = depthstrata::features::Depth::new(*d)?;
        }
        let keep: Vec<usize> =
            (0..p.features.len()).filter(|&i| !a.common.exclude.contains(&p.features[i].0)).collect();
        *p = RatePanel::new(
            p.model_id.clone(),
            keep.iter().map(|&i| p.features[i].clone()).collect(),
            p.tokens.clone(),
            keep.iter().map(|&i| p.counts[i].clone()).collect(),
        )?;
    }
    let decay = decay_from_panels(&panels, policy, &a.common.out)?;
    println!("wrote trajectories.csv and decay.csv ({} rows) to {}", decay.len(), a.common.out.display());
    Ok(0)
}

fn sdh(a: SdhArgs) -> Result<u8> {
    let decay = read_decay(&a.decay).with_context(|| format!("reading {}", a.decay.display()))?;
    let mut inputs = vec![InputDigest::of_file("decay", &a.decay)?];
    let tau = match &a.tau {
        Some(p) => {
            inputs.push(InputDigest::of_file("tau", p)?);
            TauTable::read_csv(p).with_context(|| format!("reading {}", p.display()))?
        }
        None => Vec::new(),
    };
    let robust: RobustKind = a.robust.parse()?;
    let config = RunConfig {
        command: "sdh-test".into(),
        inputs,
        panel: a.common.panel()?,
        depth_overrides: a.common.overrides()?,
        exclude: a.common.exclude.clone(),
        seed: a.common.seed,
        resamples: a.resamples,
        shuffles: a.shuffles,
        cv_splits: a.cv_splits,
        train_frac: a.train_frac,
        robust,
        strict: a.common.strict,
        ..RunConfig::default()
    };
    let report = sdh_test(&decay, &tau, config)?;
    let path = a.common.out.join("report.json");
    report.write(&path)?;
    println!("{} results, {} skipped; wrote {}", report.results.len(), report.skipped.len(), path.display());
    for s in &report.skipped {
        eprintln!("skipped {}: {}", s.name, s.reason);
    }
    Ok(if a.common.strict && !report.skipped.is_empty() { EXIT_STRICT_SKIP } else { 0 })
}

fn tau(a: TauArgs) -> Result<u8> {
    let specs = a.common.specs()?;
    let n = load_corpus(&a.nucleus).with_context(|| format!("loading {}", a.nucleus.display()))?;
    let g = load_corpus(&a.greedy).with_context(|| format!("loading {}", a.greedy.display()))?;
    for w in tau_warnings(&n, &g) {
        eprintln!("warning: {w}");
    }
    let table = compute_tau(&n, &g, &specs)?;
    for f in table.undefined_features() {
        eprintln!("warning: {f}: zero nucleus rate, tau undefined");
    }
    TauTable::write_csv(std::slice::from_ref(&table), &a.common.out.join("tau.csv"))?;
    let mut skipped = false;
    if a.half_splits > 0 {
        match PromptCounts::from_corpora(&n, &g, &specs)
            .and_then(|c| half_split_stability(&c, a.half_splits, a.common.seed))
        {
            Ok(s) => write_atomic(&a.common.out.join("tau_stability.json"), &serde_json::to_vec_pretty(&s)?)?,
            Err(e) if e.is_validation() => return Err(e.into()),
            Err(e) => {
                eprintln!("skipped half-split stability: {e}");
                skipped = true;
            }
        }
    }
    println!("wrote tau.csv ({} features) to {}", table.rows.len(), a.common.out.display());
    Ok(if a.common.strict && skipped { EXIT_STRICT_SKIP } else { 0 })
}

fn simulate_cmd(a: SimArgs) -> Result<u8> {
    let mut base = SimConfig::reference_panel(a.alpha, a.beta, a.noise_sd, a.common.seed);
    base.generations = a.generations;
    base.amplification_floor = a.floor;
    let keep = a.common.specs()?;
    base.features.retain(|f| keep.iter().any(|s| s.name == f.name));
    for f in &mut base.features {
        f.depth = keep.iter().find(|s| s.name == f.name).expect("retained").depth.get();
    }
    if base.features.is_empty() {
        bail!(Error::InvalidArgument("the selected panel has no simulated features".into()));
    }
    let mut panels = Vec::new();
    let mut tau_rows = Vec::new();
    for m in 0..a.models {
        let mut c = base.clone();
        c.seed = depthstrata::rng::derive_seed(base.seed, &format!("model/{m}"));
        let series = simulate(&c)?;
        let id = format!("sim{m}");
        panels.push(synthetic_panel(&id, &c, &series)?);
        for f in &c.features {
            // a nucleus/greedy pair reproducing the configured σ
            let depth = depthstrata::features::Depth::new(f.depth)?;
            tau_rows.push(TauRow::new(&id, &f.name, depth, f.baseline, f.baseline * (1.0 - f.sigma)));
        }
    }
    let out = &a.common.out;
    RatePanel::write_csv(&panels, &out.join("panel.csv"))?;
    decay_from_panels(&panels, ZeroPolicy::default(), out)?;
    write_csv(&out.join("tau.csv"), &tau_rows)?;
    write_atomic(&out.join("truth.json"), &serde_json::to_vec_pretty(&SimTruth::new(&base))?)?;
    println!(
        "simulated {} model(s); wrote panel.csv, trajectories.csv, decay.csv, tau.csv, truth.json to {}",
        a.models,
        out.display()
    );
    Ok(0)
}

fn report(a: ReportArgs) -> Result<u8> {
    let r = AnalysisReport::read(&a.report).with_context(|| format!("reading {}", a.report.display()))?;
    println!("{} {}  config {}", r.tool, r.version, &r.config_hash[..12]);
    for n in &r.notes {
        println!("note: {n}");
    }
    println!("{:<56} {:>12} {:>12} {:>24}", "statistic", "estimate", "p", "ci");
    for s in &r.results {
        let p = s.p_value.map(|p| format!("{p:.4e}")).unwrap_or_default();
        let ci = match (s.ci_low, s.ci_high) {
            (Some(l), Some(h)) => format!("[{l:.4}, {h:.4}]"),
            _ => String::new(),
        };
        println!("{:<56} {:>12.5} {:>12} {:>24}", s.name, s.estimate, p, ci);
    }
    for s in &r.skipped {
        println!("{:<56} skipped: {}", s.name, s.reason);
    }
    if let Some(out) = a.out {
        write_csv(&out.join("report.csv"), &report_rows(&r))?;
    }
    Ok(0)
}
