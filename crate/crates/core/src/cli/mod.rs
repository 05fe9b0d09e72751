//! Command-line front end. Every command reads and writes one workspace
//! directory; reruns with the same arguments produce identical files.

mod workspace;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use workspace::{parse_kernel_ref, ManifestEntry, Workspace};

use crate::clustering::{cluster_kernel, pd_against, Linkage};
use crate::error::{Error, Result};
use crate::fusion::{cotrain, kcca, mkl_add, CotrainConfig};
use crate::ingest::{
    parse_word_list, read_call_edges, read_corpus_dir, read_transactions, Preprocessor, DEFAULT_MAX_FILES,
    DEFAULT_MIN_PACKAGE_SIZE,
};
use crate::kernels::{GraphKernel, KernelMatrix, KernelSpec, Normalization, StringKernelConfig, VectorKernel, View};
use crate::matrix_io;
use crate::recommend::{
    binarize_topics, nested_cv, nmf_topics, recommend_links, recommendations_tsv, render_recommendation, CvConfig,
    ItemKind, ItemMatrix, TopicModel, DEFAULT_THRESHOLD, DEFAULT_TOPICS, K_GRID,
};
use crate::retrieval::{fit_retrieval, RetrievalModel, DEFAULT_DIMS, DEFAULT_TOP};
use crate::synth::{generate, NoiseModel, SynthConfig};
use crate::system::{top_level_packages, System};
use crate::tree::Tree;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const EMPTY_INTERSECTION: i32 = 3;
    pub const INSUFFICIENT: i32 = 4;
    pub const EMPTY_QUERY: i32 = 5;
    pub const USAGE: i32 = 64;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Format { .. } | Error::Io { .. } | Error::UnitMismatch(_) => exit::PARSE,
        Error::Asymmetric(_) | Error::NonFinite(_) => exit::PARSE,
        Error::EmptyIntersection(_) | Error::EmptyView(_) => exit::EMPTY_INTERSECTION,
        Error::Insufficient(_) => exit::INSUFFICIENT,
        Error::EmptyQuery => exit::EMPTY_QUERY,
        Error::InvalidArgument(_) | Error::Unknown { .. } => exit::USAGE,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kernelview",
    version,
    about = "Multi-view kernel analysis of software systems"
)]
pub struct Cli {
    /// Workspace directory holding ingested views and all artifacts.
    #[arg(long, global = true, env = "KERNELVIEW_WORKSPACE")]
    pub workspace: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the three views, align them and build the package oracle.
    Ingest(IngestArgs),
    /// Compute kernel matrices of one view.
    Kernel(KernelArgs),
    /// Hierarchically cluster units and score against a reference tree.
    Cluster(ClusterArgs),
    /// Fit an NMF topic model of the source text.
    Topics(TopicsArgs),
    /// Recommend missing calls, co-changes or topics.
    Recommend(RecommendArgs),
    /// Nested cross-validation of link recommendation.
    EvalLinks(EvalArgs),
    /// Cross-modal code search with a free-text query.
    Search(SearchArgs),
    /// Write a synthetic system with planted packages.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// `caller<TAB>callee[<TAB>weight]` lines.
    #[arg(long)]
    pub calls: PathBuf,
    /// `txid<TAB>file,file,...` lines.
    #[arg(long)]
    pub trans: PathBuf,
    /// Directory of source files, one document per unit.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub reserved: Option<PathBuf>,
    /// Transactions touching more files are dropped.
    #[arg(long, default_value_t = DEFAULT_MAX_FILES)]
    pub max_files: usize,
    /// Packages with fewer units are dissolved in the oracle.
    #[arg(long, default_value_t = DEFAULT_MIN_PACKAGE_SIZE)]
    pub min_package: usize,
    /// Workspace to create (overrides --workspace).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub view: View,
    /// Kernel family: ed, led, poly, rbf, bow, cons, spec, exp.
    #[arg(long, required_unless_present = "grid")]
    pub kernel: Option<String>,
    /// Parameter values; one kernel is written per value.
    #[arg(long, num_args = 1..)]
    pub param: Vec<f64>,
    /// Every configuration swept for the view.
    #[arg(long, conflicts_with_all = ["kernel", "param"])]
    pub grid: bool,
    /// Skip the cosine normalization of string kernels.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Single,
    Mkl,
    Cotrain,
    Kcca,
}

#[derive(Debug, Args)]
pub struct FusionArgs {
    /// Kernel references `<view>_<kernel>[_<param>]` or kernel files.
    #[arg(long, num_args = 1..)]
    pub kernels: Vec<String>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Co-training iterations.
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Co-training embedding width; defaults to the number of top-level packages.
    #[arg(long)]
    pub width: Option<usize>,
    /// Kernel CCA subspace dimension; defaults like --width.
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub kappa: f64,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub fusion: FusionArgs,
    #[arg(long, default_value = "average")]
    pub linkage: Linkage,
    /// Reference Newick tree; defaults to the package oracle.
    #[arg(long)]
    pub eval_against: Option<PathBuf>,
    /// Score every single-view kernel of the selected views.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, num_args = 1..)]
    pub view: Vec<View>,
}

#[derive(Debug, Args)]
pub struct TopicsArgs {
    #[arg(long, default_value_t = DEFAULT_TOPICS)]
    pub topics: usize,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Call,
    Change,
    Topic,
}

impl Target {
    fn view(self) -> View {
        match self {
            Target::Call => View::Struct,
            Target::Change => View::Evol,
            Target::Topic => View::Lex,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Target::Call => "call",
            Target::Change => "change",
            Target::Topic => "topic",
        }
    }

    fn default_kernel(self) -> &'static str {
        match self {
            Target::Call => "struct_ed_1",
            Target::Change => "evol_poly_1",
            Target::Topic => "lex_bow",
        }
    }
}

#[derive(Debug, Args)]
pub struct TopicTargetArgs {
    /// Topic share (relative to the unit's strongest topic) that counts as covered.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = DEFAULT_TOPICS)]
    pub topics: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long, value_enum)]
    pub target: Target,
    #[command(flatten)]
    pub fusion: FusionArgs,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[command(flatten)]
    pub topic: TopicTargetArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub target: Target,
    /// Candidate kernels for model selection.
    #[arg(long, num_args = 1..)]
    pub kernels: Vec<String>,
    /// Use every kernel configuration of the selected views as candidates.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, num_args = 1..)]
    pub view: Vec<View>,
    #[arg(long, default_value_t = 10)]
    pub outer: usize,
    #[arg(long, default_value_t = 9)]
    pub inner: usize,
    #[arg(long, num_args = 1.., default_values_t = K_GRID)]
    pub k_grid: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = DEFAULT_TOPICS)]
    pub topics: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = DEFAULT_TOP)]
    pub top: usize,
    #[arg(long, default_value_t = DEFAULT_DIMS)]
    pub dims: usize,
    #[arg(long, default_value_t = 0.1)]
    pub kappa: f64,
    /// Use the raw query kernel row instead of centring it.
    #[arg(long)]
    pub uncentered: bool,
    /// Refit the retrieval model even if one is stored.
    #[arg(long)]
    pub refit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Relocate,
    Scatter,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "relocate")]
    pub model: NoiseArg,
    #[arg(long, default_value_t = 4)]
    pub packages: usize,
    #[arg(long, default_value_t = 10)]
    pub units_per_package: usize,
    /// Noise probability applied to all three views.
    #[arg(long, default_value_t = 0.2)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    let command: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, command) {
        Ok(out) => {
            print!("{out}");
            exit::OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command and returns its stdout text.
pub fn execute(cli: Cli, command: Vec<String>) -> Result<String> {
    if let Command::Synth(a) = &cli.command {
        return synth(a);
    }
    let root = match (&cli.command, &cli.workspace) {
        (Command::Ingest(IngestArgs { out: Some(out), .. }), _) => out.clone(),
        (_, Some(ws)) => ws.clone(),
        _ => {
            return Err(Error::invalid(
                "no workspace given (use --workspace or KERNELVIEW_WORKSPACE)",
            ))
        }
    };
    let ws = Workspace::open(&root)?;
    let ctx = Ctx { ws, command };
    match &cli.command {
        Command::Ingest(a) => ctx.ingest(a),
        Command::Kernel(a) => ctx.kernel(a),
        Command::Cluster(a) => ctx.cluster(a),
        Command::Topics(a) => ctx.topics(a),
        Command::Recommend(a) => ctx.recommend(a),
        Command::EvalLinks(a) => ctx.eval_links(a),
        Command::Search(a) => ctx.search(a),
        Command::Synth(_) => unreachable!("handled above"),
    }
}

fn synth(a: &SynthArgs) -> Result<String> {
    let cfg = SynthConfig {
        model: match a.model {
            NoiseArg::Relocate => NoiseModel::Relocate,
            NoiseArg::Scatter => NoiseModel::Scatter,
        },
        packages: a.packages,
        units_per_package: a.units_per_package,
        call_noise: a.noise,
        change_noise: a.noise,
        text_noise: a.noise,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let s = generate(&cfg)?;
    s.write(&a.out)?;
    Ok(format!(
        "units\t{}\ncalls\t{}\ntransactions\t{}\n",
        s.units.len(),
        s.calls.len(),
        s.transactions.len()
    ))
}

struct Ctx {
    ws: Workspace,
    command: Vec<String>,
}

fn read_words(path: &Path) -> Result<std::collections::HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&text))
}

impl Ctx {
    fn record(&self, artifacts: &[String], seed: u64, grid: Option<Vec<String>>) -> Result<()> {
        self.ws.record(
            artifacts,
            &ManifestEntry {
                command: self.command.clone(),
                seed,
                grid,
            },
        )
    }

    fn ingest(&self, a: &IngestArgs) -> Result<String> {
        let edges = read_call_edges(&a.calls)?;
        let transactions = read_transactions(&a.trans)?;
        let documents = read_corpus_dir(&a.corpus)?;
        let mut pre = Preprocessor::default();
        if let Some(p) = &a.stopwords {
            pre = pre.with_stopwords(read_words(p)?);
        }
        if let Some(p) = &a.reserved {
            pre = pre.with_reserved(read_words(p)?);
        }
        let system = System::assemble(&edges, &transactions, &documents, &pre, a.max_files)?;
        let oracle = system.oracle(a.min_package);
        let mut written = self.ws.save_system(&system, &pre, &oracle)?;
        let summary = format!(
            "units\t{}\ncalls\t{}\ntransactions\t{}\nterms\t{}\nlsi_rank\t{}\npackages\t{}\n",
            system.n(),
            system.calls.edge_count(),
            system.changes.len(),
            system.corpus.tfidf.vocabulary.len(),
            system.corpus.lsi.rank,
            top_level_packages(&oracle),
        );
        written.push(self.ws.write("views/summary.tsv", &summary)?);
        self.record(&written, 0, None)?;
        Ok(summary)
    }

    fn kernel(&self, a: &KernelArgs) -> Result<String> {
        let system = self.ws.load_system()?;
        let specs: Vec<KernelSpec> = if a.grid {
            a.view.grid()
        } else {
            let name = a.kernel.as_deref().expect("clap requires --kernel without --grid");
            if a.param.is_empty() {
                vec![KernelSpec::parse(name, None)?]
            } else {
                a.param
                    .iter()
                    .map(|&p| KernelSpec::parse(name, Some(p)))
                    .collect::<Result<_>>()?
            }
        };
        let specs: Vec<KernelSpec> = specs
            .into_iter()
            .map(|s| match s {
                KernelSpec::String(c) if a.raw => KernelSpec::String(StringKernelConfig::raw(c.variant)),
                other => other,
            })
            .collect();
        let mut out = String::new();
        let mut written = Vec::new();
        for spec in &specs {
            let k = system.kernel(a.view, spec)?;
            let report = k.validate()?;
            let rel = Workspace::kernel_rel(a.view, spec);
            written.push(self.ws.save_kernel(&rel, a.view, spec, &k)?);
            let _ = writeln!(out, "{rel}\t{spec}\tmin_eig={:e}", report.min_eigenvalue);
        }
        let grid = a.grid.then(|| specs.iter().map(|s| s.to_string()).collect());
        self.record(&written, 0, grid)?;
        Ok(out)
    }

    /// Resolves a kernel reference: an existing file, a stored workspace
    /// kernel, or a `<view>_<kernel>[_<param>]` spec computed on the fly.
    fn resolve(&self, system: &System, r: &str) -> Result<KernelMatrix> {
        let direct = Path::new(r);
        if direct.is_file() {
            return self.ws.load_kernel(direct);
        }
        let stored = self.ws.path(&format!("kernels/{r}.csv"));
        if stored.is_file() {
            return self.ws.load_kernel(&stored);
        }
        let (view, spec) = parse_kernel_ref(r)?;
        system.kernel(view, &spec)
    }

    fn default_width(&self, n: usize) -> Result<usize> {
        let packages = top_level_packages(&self.ws.oracle()?);
        Ok(packages.max(2).min(n.saturating_sub(1)).max(1))
    }

    /// Fuses the referenced kernels into one similarity. Returns it plus any
    /// extra report files (name, contents).
    fn fuse(&self, system: &System, f: &FusionArgs, fallback: &str) -> Result<(KernelMatrix, Vec<(String, String)>)> {
        let refs: Vec<String> = if f.kernels.is_empty() {
            vec![fallback.to_string()]
        } else {
            f.kernels.clone()
        };
        let kernels = refs
            .iter()
            .map(|r| self.resolve(system, r))
            .collect::<Result<Vec<_>>>()?;
        let method = f.method.unwrap_or(if kernels.len() == 1 {
            Method::Single
        } else {
            Method::Mkl
        });
        let mut extra = Vec::new();
        let fused = match method {
            Method::Single => {
                if kernels.len() != 1 {
                    return Err(Error::invalid(format!(
                        "method single takes one kernel, got {}",
                        kernels.len()
                    )));
                }
                kernels.into_iter().next().expect("one kernel")
            }
            Method::Mkl => mkl_add(&kernels, Normalization::Trace)?,
            Method::Cotrain => {
                let width = match f.width {
                    Some(w) => w,
                    None => self.default_width(system.n())?,
                };
                let mut cfg = CotrainConfig::new(width);
                cfg.iters = f.iters;
                let emb = cotrain(&kernels, cfg)?;
                let mut drift = String::from("iteration\tdrift\n");
                for (i, d) in emb.drift.iter().enumerate() {
                    let _ = writeln!(drift, "{}\t{:e}", i + 1, d);
                }
                extra.push(("cotrain_drift.tsv".to_string(), drift));
                let tags: Vec<&str> = kernels.iter().map(|k| k.tag.as_str()).collect();
                emb.similarity(&tags.join("+")).with_units(system.units.clone())
            }
            Method::Kcca => {
                let dims = match f.dims {
                    Some(d) => d,
                    None => self.default_width(system.n())?,
                };
                let model = kcca(&kernels, dims, f.kappa)?;
                let mut corr = String::from("component\tcorrelation\n");
                for (i, c) in model.correlations.iter().enumerate() {
                    let _ = writeln!(corr, "{}\t{c:.6}", i + 1);
                }
                extra.push(("kcca_correlations.tsv".to_string(), corr));
                let shared = &model.shared;
                let tags: Vec<&str> = kernels.iter().map(|k| k.tag.as_str()).collect();
                KernelMatrix::new(shared * shared.transpose(), format!("kcca({})", tags.join("+")))
                    .with_units(system.units.clone())
            }
        };
        Ok((fused, extra))
    }

    fn reference(&self, path: &Option<PathBuf>) -> Result<Tree> {
        match path {
            None => self.ws.oracle(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Tree::from_newick(text.trim())
            }
        }
    }

    fn cluster(&self, a: &ClusterArgs) -> Result<String> {
        let system = self.ws.load_system()?;
        let reference = self.reference(&a.eval_against)?;
        let names = system.units.names();
        if a.grid {
            return self.cluster_grid(&system, a, &reference);
        }
        if a.fusion.kernels.is_empty() {
            return Err(Error::invalid("cluster needs --kernels (or --grid)"));
        }
        let (sim, extra) = self.fuse(&system, &a.fusion, "")?;
        let dendrogram = cluster_kernel(&sim, names, a.linkage)?;
        let pd = pd_against(&dendrogram, &reference)?;
        let stem = match a.fusion.method {
            Some(m) => format!("{m:?}").to_lowercase(),
            None if a.fusion.kernels.len() == 1 => "single".to_string(),
            None => "mkl".to_string(),
        };
        let newick = dendrogram.to_newick() + "\n";
        let report = format!("similarity\t{}\nlinkage\t{}\npd\t{pd}\n", sim.tag, a.linkage);
        let mut written = vec![
            self.ws.write(&format!("reports/cluster_{stem}.nwk"), &newick)?,
            self.ws.write(&format!("reports/cluster_{stem}.tsv"), &report)?,
        ];
        for (name, text) in extra {
            written.push(self.ws.write(&format!("reports/{name}"), &text)?);
        }
        self.record(&written, 0, None)?;
        Ok(format!("{newick}pd\t{pd}\n"))
    }

    fn cluster_grid(&self, system: &System, a: &ClusterArgs, reference: &Tree) -> Result<String> {
        let views: Vec<View> = if a.view.is_empty() {
            View::ALL.to_vec()
        } else {
            a.view.clone()
        };
        let mut table = String::from("view\tkernel\tpd\n");
        let mut summary = String::new();
        let mut grid = Vec::new();
        for view in views {
            let mut best: Option<(f64, String)> = None;
            for spec in view.grid() {
                let k = system.kernel(view, &spec)?;
                let pd = pd_against(&cluster_kernel(&k, system.units.names(), a.linkage)?, reference)?;
                let _ = writeln!(table, "{view}\t{spec}\t{pd}");
                grid.push(format!("{view}:{spec}"));
                if best.as_ref().is_none_or(|(b, _)| pd < *b) {
                    best = Some((pd, spec.to_string()));
                }
            }
            if let Some((pd, spec)) = best {
                let _ = writeln!(summary, "best\t{view}\t{spec}\t{pd}");
            }
        }
        table.push_str(&summary);
        let written = vec![self.ws.write("reports/cluster_grid.tsv", &table)?];
        self.record(&written, 0, Some(grid))?;
        Ok(summary)
    }

    fn topic_model(&self, system: &System, topics: usize, seed: u64) -> Result<TopicModel> {
        let w_path = self.ws.path("models/topics/W.csv");
        let h_path = self.ws.path("models/topics/H.csv");
        if w_path.is_file() && h_path.is_file() {
            let w = matrix_io::read_matrix(&w_path, true)?.values;
            let h = matrix_io::read_matrix(&h_path, true)?.values;
            if w.ncols() == topics && w.nrows() == system.n() {
                return Ok(TopicModel {
                    w,
                    h,
                    errors: Vec::new(),
                });
            }
        }
        self.fit_topics(system, topics, 500, seed)
    }

    fn fit_topics(&self, system: &System, topics: usize, iters: usize, seed: u64) -> Result<TopicModel> {
        let model = nmf_topics(&system.corpus.tfidf.matrix, topics, iters, seed)?;
        let ids: Vec<String> = (1..=topics).map(|j| format!("topic{j}")).collect();
        let vocab = &system.corpus.tfidf.vocabulary;
        matrix_io::write_matrix(
            &self.ws.path("models/topics/W.csv"),
            &["unit-topic weights".into()],
            Some(&ids),
            &model.w,
        )?;
        matrix_io::write_matrix(
            &self.ws.path("models/topics/H.csv"),
            &["topic-term weights".into()],
            Some(vocab),
            &model.h,
        )?;
        let mut report = String::new();
        for (j, id) in ids.iter().enumerate() {
            let _ = writeln!(report, "{id}\t{}", model.top_terms(j, vocab, 10).join(" "));
        }
        let written = vec![
            "models/topics/W.csv".to_string(),
            "models/topics/H.csv".to_string(),
            self.ws.write("reports/topics.tsv", &report)?,
        ];
        self.record(&written, seed, None)?;
        Ok(model)
    }

    fn topics(&self, a: &TopicsArgs) -> Result<String> {
        let system = self.ws.load_system()?;
        self.fit_topics(&system, a.topics, a.iters, a.seed)?;
        std::fs::read_to_string(self.ws.path("reports/topics.tsv"))
            .map_err(|e| Error::io(self.ws.path("reports/topics.tsv"), e))
    }

    fn items(&self, system: &System, target: Target, topics: usize, theta: f64, seed: u64) -> Result<ItemMatrix> {
        match target {
            Target::Call => Ok(ItemMatrix::from_call_graph(&system.calls)),
            Target::Change => Ok(ItemMatrix::from_transactions(&system.changes)),
            Target::Topic => {
                let model = self.topic_model(system, topics, seed)?;
                let vocab = &system.corpus.tfidf.vocabulary;
                let descriptions = (0..model.topics())
                    .map(|j| format!("topic{} ({})", j + 1, model.top_terms(j, vocab, 5).join(", ")))
                    .collect();
                binarize_topics(&model, theta, descriptions)
            }
        }
    }

    fn recommend(&self, a: &RecommendArgs) -> Result<String> {
        let system = self.ws.load_system()?;
        let w = self.items(&system, a.target, a.topic.topics, a.topic.theta, a.topic.seed)?;
        debug_assert_eq!(ItemKind::from(a.target), w.kind);
        let (sim, extra) = self.fuse(&system, &a.fusion, a.target.default_kernel())?;
        let recs = recommend_links(&sim.values, &w, a.k, a.threshold)?;
        let names = system.units.names();
        let mut text = String::new();
        for r in &recs {
            let _ = writeln!(text, "{}", render_recommendation(r, names, &w));
        }
        let target = a.target.name();
        let mut written = vec![
            self.ws.write(
                &format!("reports/recommend_{target}.tsv"),
                &recommendations_tsv(&recs, names, &w),
            )?,
            self.ws.write(&format!("reports/recommend_{target}.txt"), &text)?,
        ];
        for (name, body) in extra {
            written.push(self.ws.write(&format!("reports/{name}"), &body)?);
        }
        self.record(&written, a.topic.seed, None)?;
        Ok(text)
    }

    fn eval_links(&self, a: &EvalArgs) -> Result<String> {
        let system = self.ws.load_system()?;
        let w = self.items(&system, a.target, a.topics, a.theta, a.seed)?;
        let mut grid = None;
        let kernels: Vec<KernelMatrix> = if a.grid {
            let views: Vec<View> = if a.view.is_empty() {
                vec![a.target.view()]
            } else {
                a.view.clone()
            };
            let mut names = Vec::new();
            let mut ks = Vec::new();
            for view in views {
                for spec in view.grid() {
                    names.push(format!("{view}:{spec}"));
                    ks.push(system.kernel(view, &spec)?);
                }
            }
            grid = Some(names);
            ks
        } else if a.kernels.is_empty() {
            vec![self.resolve(&system, a.target.default_kernel())?]
        } else {
            a.kernels
                .iter()
                .map(|r| self.resolve(&system, r))
                .collect::<Result<_>>()?
        };
        let cfg = CvConfig {
            outer: a.outer,
            inner: a.inner,
            k_grid: a.k_grid.clone(),
            seed: a.seed,
        };
        let report = nested_cv(&kernels, &w, &cfg)?;
        let target = a.target.name();
        let written = vec![self.ws.write(&format!("reports/eval_{target}.csv"), &report.to_csv())?];
        self.record(&written, a.seed, grid)?;
        Ok(format!(
            "prauc\t{:.6}\nmaxf1\t{:.6}\n",
            report.mean_pr_auc, report.mean_max_f1
        ))
    }

    fn search(&self, a: &SearchArgs) -> Result<String> {
        let dir = self.ws.path("models/retrieval");
        let stored = if a.refit || !dir.join("retrieval.json").is_file() {
            None
        } else {
            let model = RetrievalModel::load(&dir)?;
            (model.cca.dims == a.dims && model.cca.kappa == a.kappa).then_some(model)
        };
        let model = match stored {
            Some(m) => m,
            None => {
                let system = self.ws.load_system()?;
                let others = [
                    system.kernel(View::Struct, &KernelSpec::Graph(GraphKernel::ExpDiffusion(1.0)))?,
                    system.kernel(
                        View::Evol,
                        &KernelSpec::Vector(VectorKernel::Poly { degree: 1, offset: 0.0 }),
                    )?,
                ];
                let model = fit_retrieval(&system.corpus, VectorKernel::Bow, &others, a.dims, a.kappa)?;
                model.save(&dir)?;
                self.record(&["models/retrieval".to_string()], 0, None)?;
                model
            }
        };
        let pre = self.ws.preprocessor()?;
        let hits = model.search(&a.query, &pre, a.top, !a.uncentered)?;
        Ok(model.hits_tsv(&hits))
    }
}

impl From<Target> for ItemKind {
    fn from(t: Target) -> ItemKind {
        match t {
            Target::Call => ItemKind::Callee,
            Target::Change => ItemKind::Transaction,
            Target::Topic => ItemKind::Topic,
        }
    }
}
