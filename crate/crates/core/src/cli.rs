//! The `ncdkit` command line.
//!
//! Every command echoes a `# ncdkit ...` line with its effective settings so
//! a run can be repeated from its output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::compressor::CompressorSpec;
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_run, grid_search, CvConfig, CvInput, Method, ParamGrid, Report, DEFAULT_SEED,
};
use crate::matrix::KernelMatrix;
use crate::ncd::{build_cross_gram, build_gram, write_tsv, GramMatrix};
use crate::svm::{
    read_model, train_multiclass, vector_cross, vector_gram, write_model, KernelKind, KernelSpec,
    SolverOptions, Strategy,
};
use crate::textprep::{load_corpus, Corpus, Stopwords, MAX_STAGE};
use crate::vectorize::{count_vectors, fit_vocabulary, write_libsvm};

#[derive(Debug, Parser)]
#[command(name = "ncdkit", version, about = "Compression-based text classification")]
pub struct Cli {
    /// Worker threads for Gram builds and training.
    #[arg(long, global = true, env = "NCDKIT_WORKERS")]
    pub workers: Option<usize>,

    /// Seed for every random choice (fold assignment).
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply preprocessing stages 1..=STAGE to a corpus.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        stage: u8,
        /// One stopword per line; defaults to the built-in SMART list.
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Write term-count vectors in libsvm format.
    Vectorize {
        /// Corpus at stage 1 or later; its terms define the vocabulary.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Also vectorize this corpus over the same vocabulary.
        #[arg(long, requires = "test_output")]
        test: Option<PathBuf>,
        #[arg(long)]
        test_output: Option<PathBuf>,
    },
    /// Compute a K_NCD Gram matrix.
    Gram {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Build the INPUT × CROSS matrix against this training corpus.
        #[arg(long)]
        cross: Option<PathBuf>,
        /// Also write a TSV copy.
        #[arg(long)]
        tsv: Option<PathBuf>,
        #[command(flatten)]
        compressor: CompressorArgs,
    },
    /// Train a multiclass SVM and write the model.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Precomputed training Gram matrix (ncd kernel only).
        #[arg(long)]
        gram: Option<PathBuf>,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        compressor: CompressorArgs,
        #[command(flatten)]
        prep: PrepArgs,
    },
    /// Predict a corpus with a trained model.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// The corpus the model was trained on.
        #[arg(long)]
        train: PathBuf,
        /// Precomputed INPUT × TRAIN kernel (from `gram --cross`).
        #[arg(long)]
        gram: Option<PathBuf>,
        /// Per-document predictions as TSV.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        compressor: CompressorArgs,
        #[command(flatten)]
        prep: PrepArgs,
    },
    /// Cross-validated grid search on a training corpus.
    Grid {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        gram: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = KernelName::Ncd)]
        kernel: KernelName,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = StrategyName::Ovo)]
        strategy: StrategyName,
        #[arg(long, default_value_t = crate::eval::DEFAULT_FOLDS)]
        folds: usize,
        #[command(flatten)]
        compressor: CompressorArgs,
        #[command(flatten)]
        prep: PrepArgs,
    },
    /// Train on one corpus and report accuracy on another.
    Eval {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Report TSV.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Dataset name for the report.
        #[arg(long, default_value = "dataset")]
        name: String,
        /// Pick parameters by grid search on the training corpus first.
        #[arg(long)]
        select: bool,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = crate::eval::DEFAULT_FOLDS)]
        folds: usize,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        compressor: CompressorArgs,
        #[command(flatten)]
        prep: PrepArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelName {
    Ncd,
    Linear,
    Poly,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyName {
    Ovo,
    Ovr,
}

impl From<StrategyName> for Strategy {
    fn from(s: StrategyName) -> Self {
        match s {
            StrategyName::Ovo => Strategy::OneVsOne,
            StrategyName::Ovr => Strategy::OneVsRest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompressorName {
    Ppm,
    External,
}

#[derive(Debug, Clone, Args)]
pub struct CompressorArgs {
    #[arg(long, value_enum, default_value_t = CompressorName::Ppm)]
    pub compressor: CompressorName,
    #[arg(long, default_value_t = crate::compressor::DEFAULT_ORDER)]
    pub ppm_order: usize,
    /// Command line of a compressor that reads stdin and writes stdout.
    #[arg(long)]
    pub external_cmd: Option<String>,
}

impl CompressorArgs {
    pub fn spec(&self) -> Result<CompressorSpec> {
        let spec = match self.compressor {
            CompressorName::Ppm => CompressorSpec::ppm(self.ppm_order),
            CompressorName::External => {
                let cmd = self.external_cmd.as_deref().ok_or_else(|| {
                    Error::Config("--compressor external needs --external-cmd".into())
                })?;
                CompressorSpec::external(cmd)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = KernelName::Ncd)]
    pub kernel: KernelName,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub coef0: f64,
    #[arg(long, value_enum, default_value_t = StrategyName::Ovo)]
    pub strategy: StrategyName,
}

impl KernelArgs {
    pub fn spec(&self) -> Result<KernelSpec> {
        let spec = match self.kernel {
            KernelName::Ncd => KernelSpec::precomputed(self.c),
            KernelName::Linear => KernelSpec::linear(self.c),
            KernelName::Poly => KernelSpec::polynomial(self.c, self.degree, self.gamma, self.coef0),
            KernelName::Rbf => KernelSpec::gaussian(self.c, self.gamma),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Overrides of the default parameter grid (comma-separated lists).
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long = "grid-C", value_delimiter = ',')]
    pub grid_c: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub grid_degree: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub grid_gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub grid_coef0: Vec<f64>,
}

impl GridArgs {
    pub fn grid(&self) -> ParamGrid {
        let mut g = ParamGrid::default();
        if !self.grid_c.is_empty() {
            g.c = self.grid_c.clone();
        }
        if !self.grid_degree.is_empty() {
            g.degree = self.grid_degree.clone();
        }
        if !self.grid_gamma.is_empty() {
            g.gamma = self.grid_gamma.clone();
        }
        if !self.grid_coef0.is_empty() {
            g.coef0 = self.grid_coef0.clone();
        }
        g
    }
}

/// On-the-fly preprocessing of loaded corpora.
#[derive(Debug, Clone, Args)]
pub struct PrepArgs {
    /// Bring corpora to this stage before use (vector kernels need ≥ 1).
    #[arg(long)]
    pub stage: Option<u8>,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

impl PrepArgs {
    fn load(&self, path: &Path) -> Result<Corpus> {
        let corpus = load_corpus(path)?;
        match self.stage {
            Some(stage) => corpus.to_stage(stage, &stopwords(self.stopwords.as_deref())?),
            None => Ok(corpus),
        }
    }
}

fn stopwords(path: Option<&Path>) -> Result<Stopwords> {
    match path {
        Some(p) => Stopwords::from_file(p),
        None => Ok(Stopwords::smart()),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn vector_kind(name: KernelName) -> Option<KernelKind> {
    match name {
        KernelName::Ncd => None,
        KernelName::Linear => Some(KernelKind::Linear),
        KernelName::Poly => Some(KernelKind::Polynomial),
        KernelName::Rbf => Some(KernelKind::Gaussian),
    }
}

/// Class index of every document of `corpus` in `classes`.
fn class_indices(corpus: &Corpus, classes: &[String]) -> Vec<usize> {
    corpus
        .documents
        .iter()
        .map(|d| classes.binary_search(&d.label).unwrap_or(usize::MAX))
        .collect()
}

fn read_gram_checked(path: &Path, rows: &[String], cols: &[String]) -> Result<KernelMatrix> {
    let gram = GramMatrix::read(path)?;
    if gram.row_ids != rows || gram.col_ids != cols {
        return Err(Error::Format(format!(
            "{} was built for different documents ({}x{}, expected {}x{})",
            path.display(),
            gram.row_ids.len(),
            gram.col_ids.len(),
            rows.len(),
            cols.len()
        )));
    }
    Ok(gram.values)
}

/// Training Gram matrix for `spec` on `train`.
fn train_gram(
    train: &Corpus,
    spec: &KernelSpec,
    gram: Option<&Path>,
    compressor: &CompressorArgs,
    workers: usize,
) -> Result<KernelMatrix> {
    let ids = train.ids();
    match (spec.kind, gram) {
        (KernelKind::Precomputed, Some(path)) => read_gram_checked(path, &ids, &ids),
        (KernelKind::Precomputed, None) => {
            Ok(build_gram(&ids, &train.texts(), &compressor.spec()?, workers)?.0.values)
        }
        (_, Some(_)) => Err(Error::Config(
            "--gram only applies to the ncd kernel".into(),
        )),
        (_, None) => {
            let (vectors, _, space) = crate::eval::scaled_vectors(train, train)?;
            vector_gram(spec, &vectors, &space)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let workers = cli.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Error::Config("--workers must be positive".into()));
    }
    let seed = cli.seed;
    match cli.command {
        Command::Preprocess {
            input,
            output,
            stage,
            stopwords: sw,
        } => {
            if !(1..=MAX_STAGE).contains(&stage) {
                return Err(Error::Config(format!("--stage must be 1..={MAX_STAGE}, got {stage}")));
            }
            let corpus = load_corpus(&input)?.to_stage(stage, &stopwords(sw.as_deref())?)?;
            corpus.write(&output)?;
            println!("# ncdkit preprocess stage={stage} documents={}", corpus.len());
        }
        Command::Vectorize {
            input,
            output,
            test,
            test_output,
        } => {
            let train = load_corpus(&input)?;
            let vocab = fit_vocabulary(&train)?;
            write_libsvm(&output, &train.labels(), &count_vectors(&train, &vocab), &vocab)?;
            if let (Some(test), Some(test_output)) = (test, test_output) {
                let test = load_corpus(&test)?;
                write_libsvm(&test_output, &test.labels(), &count_vectors(&test, &vocab), &vocab)?;
            }
            println!(
                "# ncdkit vectorize p={} vocab_sha256={}",
                vocab.len(),
                vocab.hash()
            );
        }
        Command::Gram {
            input,
            output,
            cross,
            tsv,
            compressor,
        } => {
            let spec = compressor.spec()?;
            let corpus = load_corpus(&input)?;
            let start = Instant::now();
            let (gram, stats) = match cross {
                None => build_gram(&corpus.ids(), &corpus.texts(), &spec, workers)?,
                Some(train_path) => {
                    let train = load_corpus(&train_path)?;
                    build_cross_gram(
                        &corpus.ids(),
                        &corpus.texts(),
                        &train.ids(),
                        &train.texts(),
                        &spec,
                        workers,
                    )?
                }
            };
            let elapsed = start.elapsed().as_secs_f64();
            gram.write(&output)?;
            if let Some(tsv) = tsv {
                write_tsv(&gram, &tsv)?;
            }
            println!("# ncdkit gram compressor=\"{spec}\" workers={workers}");
            println!(
                "rows={} cols={} seconds={elapsed:.3} single_compressions={} concat_compressions={} pairs={}",
                gram.values.rows(),
                gram.values.cols(),
                stats.single_compressions,
                stats.concat_compressions,
                stats.pair_evaluations
            );
        }
        Command::Train {
            input,
            output,
            gram,
            kernel,
            compressor,
            prep,
        } => {
            let spec = kernel.spec()?;
            let train = prep.load(&input)?;
            let k = train_gram(&train, &spec, gram.as_deref(), &compressor, workers)?;
            let labels = class_indices(&train, &train.class_names);
            let model = pool(workers)?.install(|| {
                train_multiclass(
                    &k,
                    &labels,
                    &train.class_names,
                    &spec,
                    kernel.strategy.into(),
                    &SolverOptions::default(),
                )
            })?;
            write_model(&output, &model)?;
            println!(
                "# ncdkit train kernel=\"{spec}\" strategy={} workers={workers}",
                model.strategy.name()
            );
            println!(
                "documents={} models={} train_accuracy={}",
                train.len(),
                model.models.len(),
                model.train_accuracy.unwrap_or(0.0)
            );
        }
        Command::Predict {
            input,
            model,
            train,
            gram,
            output,
            compressor,
            prep,
        } => {
            let model = read_model(&model)?;
            let train = prep.load(&train)?;
            let test = prep.load(&input)?;
            if train.len() != model.train_size {
                return Err(Error::Format(format!(
                    "model was trained on {} documents, --train has {}",
                    model.train_size,
                    train.len()
                )));
            }
            let cross = match (model.kernel.kind, gram) {
                (KernelKind::Precomputed, Some(path)) => {
                    read_gram_checked(&path, &test.ids(), &train.ids())?
                }
                (KernelKind::Precomputed, None) => {
                    build_cross_gram(
                        &test.ids(),
                        &test.texts(),
                        &train.ids(),
                        &train.texts(),
                        &compressor.spec()?,
                        workers,
                    )?
                    .0
                    .values
                }
                (_, Some(_)) => {
                    return Err(Error::Config("--gram only applies to the ncd kernel".into()))
                }
                (_, None) => {
                    let (train_v, test_v, space) = crate::eval::scaled_vectors(&train, &test)?;
                    vector_cross(&model.kernel, &test_v, &train_v, &space)?
                }
            };
            let predicted: Vec<String> = pool(workers)?
                .install(|| model.predict_all(&cross))?
                .into_iter()
                .map(|i| model.class_names[i].clone())
                .collect();
            let truth = test.labels();
            let acc = crate::eval::accuracy(&predicted, &truth);
            if let Some(out) = output {
                let mut text = String::from("id\tpredicted\tlabel\n");
                for ((d, p), t) in test.documents.iter().zip(&predicted).zip(&truth) {
                    text.push_str(&format!("{}\t{p}\t{t}\n", d.id));
                }
                write_text(&out, &text)?;
            }
            println!("# ncdkit predict kernel=\"{}\" workers={workers}", model.kernel);
            println!("documents={} accuracy={acc}", test.len());
        }
        Command::Grid {
            input,
            output,
            gram,
            kernel,
            grid,
            strategy,
            folds,
            compressor,
            prep,
        } => {
            let train = prep.load(&input)?;
            let labels = class_indices(&train, &train.class_names);
            let config = CvConfig {
                folds,
                seed,
                strategy: strategy.into(),
                solver: SolverOptions::default(),
            };
            let grid = grid.grid();
            let report = pool(workers)?.install(|| -> Result<_> {
                match vector_kind(kernel) {
                    None => {
                        let k = train_gram(
                            &train,
                            &KernelSpec::precomputed(1.0),
                            gram.as_deref(),
                            &compressor,
                            workers,
                        )?;
                        grid_search(CvInput::Gram(&k), &labels, &grid, &config)
                    }
                    Some(kind) => {
                        if gram.is_some() {
                            return Err(Error::Config(
                                "--gram only applies to the ncd kernel".into(),
                            ));
                        }
                        let (vectors, _, space) = crate::eval::scaled_vectors(&train, &train)?;
                        grid_search(
                            CvInput::Vectors {
                                vectors: &vectors,
                                space: &space,
                                kind,
                            },
                            &labels,
                            &grid,
                            &config,
                        )
                    }
                }
            })?;
            if let Some(out) = output {
                write_text(&out, &report.to_tsv())?;
            }
            print!("{}", report.to_table());
        }
        Command::Eval {
            train,
            test,
            output,
            name,
            select,
            grid,
            folds,
            kernel,
            compressor,
            prep,
        } => {
            let train = prep.load(&train)?;
            let test = prep.load(&test)?;
            let strategy: Strategy = kernel.strategy.into();
            let mut spec = kernel.spec()?;
            let solver = SolverOptions::default();
            let mut grid_desc = None;
            if select {
                let labels = class_indices(&train, &train.class_names);
                let config = CvConfig {
                    folds,
                    seed,
                    strategy,
                    solver,
                };
                let g = grid.grid();
                let report = pool(workers)?.install(|| -> Result<_> {
                    match vector_kind(kernel.kernel) {
                        None => {
                            let k = train_gram(&train, &spec, None, &compressor, workers)?;
                            grid_search(CvInput::Gram(&k), &labels, &g, &config)
                        }
                        Some(kind) => {
                            let (vectors, _, space) =
                                crate::eval::scaled_vectors(&train, &train)?;
                            grid_search(
                                CvInput::Vectors {
                                    vectors: &vectors,
                                    space: &space,
                                    kind,
                                },
                                &labels,
                                &g,
                                &config,
                            )
                        }
                    }
                })?;
                spec = report.best_row().spec;
                grid_desc = Some(report.grid.clone());
                println!(
                    "selected {} (cv {:.2}%)",
                    spec,
                    100.0 * report.best_row().mean
                );
            }
            let method = match spec.kind {
                KernelKind::Precomputed => Method::Ncd {
                    compressor: compressor.spec()?,
                    c: spec.c,
                },
                _ => Method::Vector(spec),
            };
            let outcome = pool(workers)?
                .install(|| evaluate_run(&name, &train, &test, &method, strategy, &solver, workers))?;
            let report = Report {
                seed,
                grid: grid_desc,
                rows: vec![outcome.row],
            };
            if let Some(out) = output {
                write_text(&out, &report.to_tsv())?;
            }
            print!("{}", report.to_table());
            println!("seconds={:.3}", outcome.seconds);
        }
    }
    Ok(())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}
