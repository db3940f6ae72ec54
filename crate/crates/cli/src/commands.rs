use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use ccm_core::enumeration::plan_for_graph;
use ccm_core::evidence::{combine, log_integral, posterior_probabilities, volume_plan, DegreeLikelihood, IntegralOptions};
use ccm_core::prior_fit::{fit_prior, NamedGraph, DEFAULT_MAX_DEGREE};
use ccm_core::simulate::{replica_seed, sample_network_detailed};
use ccm_core::statistics::{degree_distribution, degree_mixing, type_mixing};
use ccm_core::{
    compute_statistic, EvidenceMethod, EvidenceResult, Graph, LogValue, Mechanism, ModelId, SamplingConfig,
    SimConfig, StatisticKind, StatisticValue, VolumeEstimate, VolumeMethod, VolumePlan,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::graph_json::{parse_graph, write_graph};
use crate::ingest::{self, IngestInputs};
use crate::manifest::{Envelope, ManifestBuilder};
use crate::output::{emit, write_atomic};
use crate::priors::PriorsFile;
use crate::runner::{parallel_map, run_plan};

#[derive(Debug, Parser)]
#[command(name = "ccm-select", version, about = "Bayesian model selection among congruence class network models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a state network from shared-patient and provider files.
    Ingest(IngestArgs),
    /// Node, edge and provider-type counts of a graph.
    Stats(StatsArgs),
    /// Log volume factor of a graph's congruence class.
    Volume(VolumeArgs),
    /// Log evidence of one model.
    Evidence(EvidenceArgs),
    /// Evidence and posterior probabilities for several models.
    Select(SelectArgs),
    /// Fit a model's prior on a directory of networks, leaving one out.
    FitPrior(FitPriorArgs),
    /// Generate synthetic networks.
    Simulate(SimulateArgs),
    /// Statistic tables for plotting.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatisticArg {
    Edges,
    Degdist,
    Typemix,
    Degmix,
}

impl From<StatisticArg> for StatisticKind {
    fn from(s: StatisticArg) -> Self {
        match s {
            StatisticArg::Edges => StatisticKind::EdgeCount,
            StatisticArg::Degdist => StatisticKind::DegreeDistribution,
            StatisticArg::Typemix => StatisticKind::TypeMixing,
            StatisticArg::Degmix => StatisticKind::DegreeMixing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl From<ModelArg> for ModelId {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::M1 => ModelId::M1,
            ModelArg::M2 => ModelId::M2,
            ModelArg::M3 => ModelId::M3,
            ModelArg::M4 => ModelId::M4,
            ModelArg::M5 => ModelId::M5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LikelihoodArg {
    Density,
    Geometric,
}

impl From<LikelihoodArg> for DegreeLikelihood {
    fn from(l: LikelihoodArg) -> Self {
        match l {
            LikelihoodArg::Density => DegreeLikelihood::Density,
            LikelihoodArg::Geometric => DegreeLikelihood::Geometric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismArg {
    Er,
    Exponential,
    Block,
    Degmix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Importance-sampling draws per volume factor.
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
    /// Random seed; required whenever a volume factor is sampled.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Independent random streams the samples are split over. Results depend
    /// on the stream count but not on --jobs.
    #[arg(long, default_value_t = 8)]
    pub streams: u32,
    /// Largest node count counted by exhaustive enumeration instead of
    /// sampling.
    #[arg(long, default_value_t = 8)]
    pub exact_limit: usize,
}

impl SamplingArgs {
    fn config(&self) -> Result<SamplingConfig> {
        if self.jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        if self.streams == 0 {
            return Err(CliError::Usage("--streams must be at least 1".into()));
        }
        if self.samples < 2 {
            return Err(CliError::Usage("--samples must be at least 2".into()));
        }
        let workers = self.streams.min(self.samples.min(u32::MAX as u64) as u32);
        Ok(SamplingConfig { samples: self.samples, seed: self.seed.unwrap_or(0), workers, oracle_limit: self.exact_limit })
    }

    fn record(&self, m: &mut ManifestBuilder, cfg: &SamplingConfig) {
        m.param("samples", &cfg.samples);
        m.param("streams", &cfg.workers);
        m.param("exact_limit", &cfg.oracle_limit);
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Shared-patient file.
    #[arg(long)]
    pub shared: PathBuf,
    /// Provider file.
    #[arg(long)]
    pub providers: PathBuf,
    /// Two-letter state code.
    #[arg(long)]
    pub state: String,
    /// Minimum shared count kept; overrides the config file.
    #[arg(long)]
    pub threshold: Option<u64>,
    /// Keep in-state providers without retained edges.
    #[arg(long)]
    pub include_isolates: bool,
    /// Ingest configuration (delimiters, columns, specialty mapping).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output graph file.
    #[arg(long)]
    pub out: PathBuf,
    /// Summary JSON file; stdout when omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VolumeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub statistic: StatisticArg,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvidenceArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Priors file; not needed for m1.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Replace the m5 Laplace integral by importance sampling with this many
    /// draws (needs --seed).
    #[arg(long)]
    pub m5_mc_samples: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Comma-separated candidate models.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub models: Vec<ModelArg>,
    /// Priors file; not needed when m1 is the only model.
    #[arg(long)]
    pub priors: Option<PathBuf>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub m5_mc_samples: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitPriorArgs {
    /// Directory of graph files; each file stem names a network.
    #[arg(long)]
    pub graphs: PathBuf,
    /// Network left out of the fit (the analysis target).
    #[arg(long)]
    pub exclude: Option<String>,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Degree likelihood recorded with an m3 prior.
    #[arg(long, value_enum, default_value_t = LikelihoodArg::Density)]
    pub likelihood: LikelihoodArg,
    /// Largest degree entering the m5 logistic fits.
    #[arg(long, default_value_t = DEFAULT_MAX_DEGREE)]
    pub max_degree: usize,
    /// Priors file to create or update.
    #[arg(long)]
    pub out: PathBuf,
    /// Fit report JSON; defaults to `<out stem>.<model>.report.json` beside --out.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub mechanism: MechanismArg,
    #[arg(long)]
    pub n: usize,
    /// Edge probability (er).
    #[arg(long)]
    pub p: Option<f64>,
    /// Exponential degree rate (exponential, degmix).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Primary vertices (block).
    #[arg(long)]
    pub n_primary: Option<usize>,
    #[arg(long)]
    pub p_pp: Option<f64>,
    #[arg(long)]
    pub p_ps: Option<f64>,
    #[arg(long)]
    pub p_ss: Option<f64>,
    /// Logistic coefficients b0,b1,b2 (degmix).
    #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true)]
    pub beta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory; receives rep_NNNN.json and simulate.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub kind: StatisticArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status. Errors go to stderr as one JSON line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let err = CliError::Usage(e.render().to_string().trim_end().to_string());
                    eprintln!("{}", err.to_json());
                    err.exit_code()
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Volume(a) => cmd_volume(&a),
        Command::Evidence(a) => cmd_evidence(&a),
        Command::Select(a) => cmd_select(&a),
        Command::FitPrior(a) => cmd_fit_prior(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn load_graph(path: &Path, m: &mut ManifestBuilder) -> Result<Graph> {
    let bytes = read_bytes(path)?;
    m.input("graph", &bytes);
    let text = String::from_utf8(bytes).map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: "graph file is not UTF-8".into(),
    })?;
    m.time("read", || parse_graph(&text, path))
}

fn load_priors(path: Option<&PathBuf>, m: &mut ManifestBuilder) -> Result<PriorsFile> {
    match path {
        None => Ok(PriorsFile::default()),
        Some(p) => {
            let bytes = read_bytes(p)?;
            m.input("priors", &bytes);
            let text = String::from_utf8(bytes).map_err(|_| CliError::Config(format!("{}: not UTF-8", p.display())))?;
            PriorsFile::parse(&text)
        }
    }
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| CliError::Usage(format!("--seed is required: {what} draws random numbers")))
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let (mut cfg, cfg_bytes) = ingest::load_config(a.config.as_ref())?;
    if let Some(t) = a.threshold {
        if t == 0 {
            return Err(CliError::Usage("--threshold must be at least 1".into()));
        }
        cfg.threshold = t;
    }
    cfg.include_isolates |= a.include_isolates;
    let mut m = ManifestBuilder::new("ingest", None);
    m.param("config", &cfg);
    m.param("state", &a.state.trim().to_uppercase());
    if let Some(b) = &cfg_bytes {
        m.input("config", b);
    }
    m.input("shared", &read_bytes(&a.shared)?);
    m.input("providers", &read_bytes(&a.providers)?);
    let inputs = IngestInputs { shared: &a.shared, providers: &a.providers, state: &a.state };
    let (g, summary) = m.time("ingest", || ingest::ingest(&inputs, &cfg))?;
    m.time("write", || write_graph(&a.out, &g))?;
    emit(a.summary.as_deref(), &Envelope { manifest: m.finish(), result: summary })
}

#[derive(Debug, Serialize)]
pub struct GraphStats {
    pub n: usize,
    pub edges: usize,
    pub primary: usize,
    pub specialty: usize,
    pub untyped: usize,
    pub density: f64,
    pub mean_degree: f64,
    pub max_degree: usize,
}

pub fn graph_stats(g: &Graph) -> GraphStats {
    let (primary, specialty, untyped) = g.type_counts();
    let pairs = g.pair_count();
    GraphStats {
        n: g.node_count(),
        edges: g.edge_count(),
        primary,
        specialty,
        untyped,
        density: if pairs == 0 { 0.0 } else { g.edge_count() as f64 / pairs as f64 },
        mean_degree: 2.0 * g.edge_count() as f64 / g.node_count() as f64,
        max_degree: degree_distribution(g).max_degree(),
    }
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let mut m = ManifestBuilder::new("stats", None);
    let g = load_graph(&a.graph, &mut m)?;
    let stats = m.time("stats", || graph_stats(&g));
    emit(a.out.as_deref(), &Envelope { manifest: m.finish(), result: stats })
}

#[derive(Debug, Serialize)]
pub struct VolumeOut {
    pub statistic: &'static str,
    pub n: usize,
    pub log_count: LogValue,
    pub log10_count: Option<f64>,
    pub std_error_log: f64,
    pub method: VolumeMethod,
    pub samples: u64,
}

fn log10_of(v: LogValue) -> Option<f64> {
    (!v.is_zero()).then(|| v.log10())
}

fn cmd_volume(a: &VolumeArgs) -> Result<()> {
    let cfg = a.sampling.config()?;
    let kind = StatisticKind::from(a.statistic);
    let mut m = ManifestBuilder::new("volume", a.sampling.seed);
    a.sampling.record(&mut m, &cfg);
    m.param("statistic", &kind);
    let g = load_graph(&a.graph, &mut m)?;
    let value = compute_statistic(&g, kind)?;
    let plan = plan_for_graph(&g, &value, &cfg)?;
    if matches!(plan, VolumePlan::Sample(_)) {
        require_seed(a.sampling.seed, "this volume factor is sampled")?;
    }
    let v = m.time("volume", || run_plan(plan, a.sampling.jobs))?;
    let out = VolumeOut {
        statistic: kind.short_name(),
        n: g.node_count(),
        log_count: v.log_count,
        log10_count: log10_of(v.log_count),
        std_error_log: v.std_error_log,
        method: v.method,
        samples: v.samples,
    };
    emit(a.sampling_out(), &Envelope { manifest: m.finish(), result: out })
}

impl VolumeArgs {
    fn sampling_out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

/// Evidence in natural log, log10 and `mantissa x 10^exponent` form.
#[derive(Debug, Serialize)]
pub struct EvidenceOut {
    pub model: ModelId,
    pub log_evidence: LogValue,
    pub log10_evidence: Option<f64>,
    pub evidence_scientific: Option<String>,
    pub log_integral: LogValue,
    pub log_volume: LogValue,
    pub std_error_log: f64,
    pub method: EvidenceMethod,
    pub volume_method: VolumeMethod,
    pub volume_samples: u64,
    pub diagnostics: BTreeMap<String, f64>,
}

fn scientific(v: LogValue) -> Option<String> {
    v.scientific().map(|(mantissa, exponent)| format!("{mantissa:.2}e{exponent}"))
}

impl From<&EvidenceResult> for EvidenceOut {
    fn from(r: &EvidenceResult) -> Self {
        Self {
            model: r.model,
            log_evidence: r.log_evidence,
            log10_evidence: log10_of(r.log_evidence),
            evidence_scientific: scientific(r.log_evidence),
            log_integral: r.log_integral,
            log_volume: r.log_volume,
            std_error_log: r.std_error_log(),
            method: r.method,
            volume_method: r.volume.method,
            volume_samples: r.volume.samples,
            diagnostics: r.diagnostics.clone(),
        }
    }
}

/// Integral and volume of one model, volume sampling on `jobs` threads.
fn evaluate(
    g: &Graph,
    prior: &ccm_core::ModelPrior,
    sampling: &SamplingArgs,
    cfg: &SamplingConfig,
    mc_samples: Option<u64>,
    m: &mut ManifestBuilder,
) -> Result<EvidenceResult> {
    let id = prior.id();
    let mut opts = IntegralOptions::default();
    if let Some(s) = mc_samples.filter(|_| id == ModelId::M5) {
        opts.m5_monte_carlo = Some((s, require_seed(sampling.seed, "--m5-mc-samples")?));
    }
    let integral = m.time(&format!("integral_{}", id.name()), || log_integral(g, prior, &opts))?;
    let plan = volume_plan(g, id, cfg)?;
    if matches!(plan, VolumePlan::Sample(_)) {
        require_seed(sampling.seed, &format!("the {} volume factor is sampled", id.name()))?;
    }
    let volume: VolumeEstimate = m.time(&format!("volume_{}", id.name()), || run_plan(plan, sampling.jobs))?;
    Ok(combine(integral, volume))
}

fn cmd_evidence(a: &EvidenceArgs) -> Result<()> {
    let cfg = a.sampling.config()?;
    let id = ModelId::from(a.model);
    let mut m = ManifestBuilder::new("evidence", a.sampling.seed);
    a.sampling.record(&mut m, &cfg);
    m.param("model", &id);
    m.param("m5_mc_samples", &a.m5_mc_samples);
    let g = load_graph(&a.graph, &mut m)?;
    let priors = load_priors(a.prior.as_ref(), &mut m)?;
    let prior = priors.prior(id)?;
    let r = evaluate(&g, &prior, &a.sampling, &cfg, a.m5_mc_samples, &mut m)?;
    emit(a.out.as_deref(), &Envelope { manifest: m.finish(), result: EvidenceOut::from(&r) })
}

#[derive(Debug, Serialize)]
pub struct SelectRow {
    pub model: ModelId,
    pub prior_model_prob: f64,
    pub posterior: f64,
    #[serde(flatten)]
    pub evidence: EvidenceOut,
}

#[derive(Debug, Serialize)]
pub struct SelectOut {
    pub models: Vec<SelectRow>,
    /// Model with the largest posterior probability.
    pub best: ModelId,
}

fn cmd_select(a: &SelectArgs) -> Result<()> {
    let cfg = a.sampling.config()?;
    let ids: Vec<ModelId> = a.models.iter().map(|&m| m.into()).collect();
    for (i, id) in ids.iter().enumerate() {
        if ids[..i].contains(id) {
            return Err(CliError::Usage(format!("model {} listed twice", id.name())));
        }
    }
    let mut m = ManifestBuilder::new("select", a.sampling.seed);
    a.sampling.record(&mut m, &cfg);
    m.param("models", &ids);
    m.param("m5_mc_samples", &a.m5_mc_samples);
    let g = load_graph(&a.graph, &mut m)?;
    let priors = load_priors(a.priors.as_ref(), &mut m)?;
    let specs = priors.specs(&ids)?;
    let mut results = Vec::with_capacity(specs.len());
    for spec in &specs {
        let r = evaluate(&g, &spec.prior, &a.sampling, &cfg, a.m5_mc_samples, &mut m)?;
        results.push((*spec, r));
    }
    let post = posterior_probabilities(&results)?;
    let rows: Vec<SelectRow> = results
        .iter()
        .zip(&post)
        .map(|((spec, r), &p)| SelectRow {
            model: spec.id(),
            prior_model_prob: spec.prior_model_prob,
            posterior: p,
            evidence: EvidenceOut::from(r),
        })
        .collect();
    let best = rows
        .iter()
        .max_by(|x, y| x.posterior.total_cmp(&y.posterior))
        .map(|r| r.model)
        .expect("at least one model");
    emit(a.out.as_deref(), &Envelope { manifest: m.finish(), result: SelectOut { models: rows, best } })
}

/// Graph files in `dir` (`*.json`), sorted by file name.
pub fn graph_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") && path.is_file() {
            let name = path.file_stem().and_then(|s| s.to_str()).map(String::from);
            match name {
                Some(n) if !n.ends_with(".report") => out.push((n, path)),
                _ => {}
            }
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(CliError::Config(format!("{}: no graph files (*.json)", dir.display())));
    }
    Ok(out)
}

fn cmd_fit_prior(a: &FitPriorArgs) -> Result<()> {
    let id = ModelId::from(a.model);
    let mut m = ManifestBuilder::new("fit-prior", None);
    m.param("model", &id);
    m.param("exclude", &a.exclude);
    m.param("likelihood", &DegreeLikelihood::from(a.likelihood));
    m.param("max_degree", &a.max_degree);
    let mut graphs = Vec::new();
    for (name, path) in graph_files(&a.graphs)? {
        let bytes = read_bytes(&path)?;
        m.input(&name, &bytes);
        let text = String::from_utf8(bytes).map_err(|_| CliError::Parse {
            path: path.clone(),
            line: 0,
            message: "graph file is not UTF-8".into(),
        })?;
        graphs.push((name, parse_graph(&text, &path)?));
    }
    let named: Vec<NamedGraph<'_>> = graphs.iter().map(|(n, g)| NamedGraph { name: n, graph: g }).collect();
    let report = m.time("fit", || {
        fit_prior(&named, a.exclude.as_deref(), id, a.likelihood.into(), a.max_degree)
    })?;
    let mut priors = if a.out.exists() {
        let text = std::fs::read_to_string(&a.out).map_err(|e| CliError::io(&a.out, e))?;
        PriorsFile::parse(&text)?
    } else {
        PriorsFile::default()
    };
    priors.set(&report.fitted);
    write_atomic(&a.out, priors.to_toml().as_bytes())?;
    let report_path = a.report.clone().unwrap_or_else(|| {
        let stem = a.out.file_stem().and_then(|s| s.to_str()).unwrap_or("priors");
        a.out.with_file_name(format!("{stem}.{}.report.json", id.name()))
    });
    emit(Some(&report_path), &Envelope { manifest: m.finish(), result: report })
}

fn mechanism(a: &SimulateArgs) -> Result<Mechanism> {
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this mechanism")))
    };
    Ok(match a.mechanism {
        MechanismArg::Er => Mechanism::Er { p: need(a.p, "p")? },
        MechanismArg::Exponential => Mechanism::ExponentialDegree { lambda: need(a.lambda, "lambda")? },
        MechanismArg::Block => Mechanism::BlockMixing {
            n_primary: a.n_primary.ok_or_else(|| CliError::Usage("--n-primary is required for block".into()))?,
            p_pp: need(a.p_pp, "p-pp")?,
            p_ps: need(a.p_ps, "p-ps")?,
            p_ss: need(a.p_ss, "p-ss")?,
        },
        MechanismArg::Degmix => {
            let b = a.beta.as_ref().ok_or_else(|| CliError::Usage("--beta b0,b1,b2 is required for degmix".into()))?;
            Mechanism::DegreeMixingLogistic { lambda: need(a.lambda, "lambda")?, beta: [b[0], b[1], b[2]] }
        }
    })
}

#[derive(Debug, Serialize)]
pub struct ReplicaSummary {
    pub file: String,
    pub seed: u64,
    pub n: usize,
    pub edges: usize,
    pub repaired_mass: u64,
    pub sequential_fallback: bool,
    pub swaps_accepted: u64,
}

#[derive(Debug, Serialize)]
pub struct SimulateOut {
    pub mechanism: Mechanism,
    pub n: usize,
    pub replicas: Vec<ReplicaSummary>,
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let seed = require_seed(a.seed, "simulate")?;
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let mech = mechanism(a)?;
    SimConfig { n: a.n, mechanism: mech, seed }.validate()?;
    let mut m = ManifestBuilder::new("simulate", Some(seed));
    m.param("mechanism", &mech);
    m.param("n", &a.n);
    m.param("reps", &a.reps);
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let sims = m.time("simulate", || {
        parallel_map(a.reps as usize, a.jobs, |r| {
            let s = replica_seed(seed, r as u64);
            sample_network_detailed(&SimConfig { n: a.n, mechanism: mech, seed: s }).map(|sim| (s, sim))
        })
    });
    let mut replicas = Vec::with_capacity(sims.len());
    for (r, sim) in sims.into_iter().enumerate() {
        let (s, sim) = sim?;
        let file = format!("rep_{r:04}.json");
        write_graph(&a.out.join(&file), &sim.graph)?;
        replicas.push(ReplicaSummary {
            file,
            seed: s,
            n: sim.graph.node_count(),
            edges: sim.graph.edge_count(),
            repaired_mass: sim.repaired_mass,
            sequential_fallback: sim.sequential_fallback,
            swaps_accepted: sim.swaps_accepted,
        });
    }
    let out = SimulateOut { mechanism: mech, n: a.n, replicas };
    emit(Some(&a.out.join("simulate.json")), &Envelope { manifest: m.finish(), result: out })
}

/// Table rows for one statistic, as `(column names, rows)`.
pub fn statistic_table(value: &StatisticValue, g: &Graph) -> (Vec<&'static str>, Vec<Vec<u64>>) {
    match value {
        StatisticValue::EdgeCount(e) => (vec!["edges", "pairs"], vec![vec![*e, g.pair_count()]]),
        StatisticValue::DegreeDistribution(d) => {
            (vec!["degree", "count"], d.nonzero().map(|(k, c)| vec![k as u64, c]).collect())
        }
        StatisticValue::TypeMixing(t) => {
            let (p, s, _) = g.type_counts();
            let caps = ccm_core::enumeration::type_block_capacities(p as u64, s as u64);
            // Blocks 0 = primary-primary, 1 = primary-specialty, 2 = specialty-specialty.
            let counts = [t.primary_primary, t.primary_specialty, t.specialty_specialty];
            (vec!["block", "edges", "pairs"], (0..3).map(|b| vec![b as u64, counts[b], caps[b]]).collect())
        }
        StatisticValue::DegreeMixing(dmm) => (
            vec!["k", "l", "edges"],
            dmm.cells().map(|((k, l), c)| vec![k as u64, l as u64, c]).collect(),
        ),
    }
}

#[derive(Debug, Serialize)]
pub struct ReportOut {
    pub kind: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<u64>>,
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let kind = StatisticKind::from(a.kind);
    let mut m = ManifestBuilder::new("report", None);
    m.param("kind", &kind);
    let g = load_graph(&a.graph, &mut m)?;
    let value = match kind {
        StatisticKind::EdgeCount => StatisticValue::EdgeCount(g.edge_count() as u64),
        StatisticKind::DegreeDistribution => StatisticValue::DegreeDistribution(degree_distribution(&g)),
        StatisticKind::TypeMixing => StatisticValue::TypeMixing(type_mixing(&g)?),
        StatisticKind::DegreeMixing => StatisticValue::DegreeMixing(degree_mixing(&g)),
    };
    let (columns, rows) = statistic_table(&value, &g);
    match a.format {
        FormatArg::Json => {
            let out = ReportOut { kind: kind.short_name(), columns, rows };
            emit(a.out.as_deref(), &Envelope { manifest: m.finish(), result: out })
        }
        FormatArg::Csv => {
            let mut text = columns.join(",");
            text.push('\n');
            for row in rows {
                let cells: Vec<String> = row.iter().map(u64::to_string).collect();
                text.push_str(&cells.join(","));
                text.push('\n');
            }
            match &a.out {
                Some(p) => write_atomic(p, text.as_bytes()),
                None => {
                    use std::io::Write;
                    std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
                }
            }
        }
    }
}
