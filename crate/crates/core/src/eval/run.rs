use std::fmt::Write as _;
use std::time::Instant;

use crate::compressor::CompressorSpec;
use crate::error::{Error, Result};
use crate::matrix::KernelMatrix;
use crate::ncd::{build_cross_gram, build_gram};
use crate::svm::{
    train_multiclass, vector_cross, vector_gram, KernelSpec, SolverOptions, Strategy,
};
use crate::textprep::Corpus;
use crate::vectorize::{apply_scale, count_vectors, fit_scale, fit_vocabulary, SparseVector};

use super::accuracy;

/// How documents are turned into kernel values.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// `K_NCD` on the raw document bytes with soft-margin constant `c`.
    Ncd { compressor: CompressorSpec, c: f64 },
    /// A classical kernel on scaled term counts.
    Vector(KernelSpec),
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Ncd { compressor, c } => format!("k_ncd C={c} ({compressor})"),
            Method::Vector(spec) => spec.to_string(),
        }
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        match self {
            Method::Ncd { c, .. } => KernelSpec::precomputed(*c),
            Method::Vector(spec) => *spec,
        }
    }

    /// Training Gram matrix and test × train kernel values.
    pub fn kernels(
        &self,
        train: &Corpus,
        test: &Corpus,
        workers: usize,
    ) -> Result<(KernelMatrix, KernelMatrix)> {
        match self {
            Method::Ncd { compressor, .. } => {
                let (train_ids, test_ids) = (train.ids(), test.ids());
                let (train_docs, test_docs) = (train.texts(), test.texts());
                let (gram, _) = build_gram(&train_ids, &train_docs, compressor, workers)?;
                let (cross, _) = build_cross_gram(
                    &test_ids,
                    &test_docs,
                    &train_ids,
                    &train_docs,
                    compressor,
                    workers,
                )?;
                Ok((gram.values, cross.values))
            }
            Method::Vector(spec) => {
                let (train_v, test_v, space) = scaled_vectors(train, test)?;
                Ok((
                    vector_gram(spec, &train_v, &space)?,
                    vector_cross(spec, &test_v, &train_v, &space)?,
                ))
            }
        }
    }
}

/// Counts over the training vocabulary, scaled with the training range.
pub fn scaled_vectors(
    train: &Corpus,
    test: &Corpus,
) -> Result<(Vec<SparseVector>, Vec<SparseVector>, crate::vectorize::ScalingParams)> {
    let vocab = fit_vocabulary(train)?;
    if vocab.is_empty() {
        return Err(Error::DegenerateInput(
            "training corpus has an empty vocabulary".into(),
        ));
    }
    let train_counts = count_vectors(train, &vocab);
    let space = fit_scale(&train_counts)?;
    let scale = |vs: Vec<SparseVector>| -> Result<Vec<SparseVector>> {
        vs.iter().map(|v| apply_scale(v, &space)).collect()
    };
    let train_v = scale(train_counts)?;
    let test_v = scale(count_vectors(test, &vocab))?;
    Ok((train_v, test_v, space))
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub kernel: String,
    pub strategy: Strategy,
    pub train_size: usize,
    pub test_size: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub row: ReportRow,
    pub predictions: Vec<String>,
    pub train_accuracy: f64,
    pub seconds: f64,
}

/// Train on all of `train`, score on `test`.
///
/// Test documents whose class never occurs in training are counted as errors.
pub fn evaluate_run(
    dataset: &str,
    train: &Corpus,
    test: &Corpus,
    method: &Method,
    strategy: Strategy,
    solver: &SolverOptions,
    workers: usize,
) -> Result<RunOutcome> {
    let start = Instant::now();
    let unseen: Vec<&String> = test
        .class_names
        .iter()
        .filter(|c| !train.class_names.contains(c))
        .collect();
    if !unseen.is_empty() {
        log::warn!("test classes absent from training: {unseen:?}");
    }
    let labels: Vec<usize> = train
        .documents
        .iter()
        .map(|d| train.class_names.binary_search(&d.label).unwrap_or(usize::MAX))
        .collect();
    let (gram, cross) = method.kernels(train, test, workers)?;
    let model = train_multiclass(
        &gram,
        &labels,
        &train.class_names,
        &method.kernel_spec(),
        strategy,
        solver,
    )?;
    let predictions: Vec<String> = model
        .predict_all(&cross)?
        .into_iter()
        .map(|i| train.class_names[i].clone())
        .collect();
    let truth = test.labels();
    let acc = accuracy(&predictions, &truth);
    let correct = predictions.iter().zip(&truth).filter(|(p, t)| p == t).count();
    Ok(RunOutcome {
        row: ReportRow {
            dataset: dataset.to_owned(),
            kernel: method.label(),
            strategy,
            train_size: train.len(),
            test_size: test.len(),
            correct,
            accuracy: acc,
        },
        predictions,
        train_accuracy: model.train_accuracy.unwrap_or(0.0),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Results of several runs, with the provenance needed to repeat them.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub grid: Option<String>,
    pub rows: Vec<ReportRow>,
}

impl Report {
    fn header(&self) -> String {
        let mut h = format!("# seed={}", self.seed);
        if let Some(g) = &self.grid {
            let _ = write!(h, " grid={g}");
        }
        h.push('\n');
        h
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header();
        out.push_str("dataset\tkernel\tstrategy\ttrain\ttest\tcorrect\taccuracy\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.dataset,
                r.kernel,
                r.strategy.name(),
                r.train_size,
                r.test_size,
                r.correct,
                r.accuracy
            );
        }
        out
    }

    /// Dataset × kernel grid of test accuracies in percent.
    pub fn to_table(&self) -> String {
        let mut datasets: Vec<&str> = Vec::new();
        let mut kernels: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !datasets.contains(&r.dataset.as_str()) {
                datasets.push(&r.dataset);
            }
            if !kernels.contains(&r.kernel.as_str()) {
                kernels.push(&r.kernel);
            }
        }
        let first = datasets.iter().map(|d| d.len()).max().unwrap_or(0).max(7);
        let mut out = self.header();
        let _ = write!(out, "{:<first$}", "dataset");
        for k in &kernels {
            let _ = write!(out, "  {:>w$}", k, w = k.len().max(7));
        }
        out.push('\n');
        for d in &datasets {
            let _ = write!(out, "{d:<first$}");
            for k in &kernels {
                let cell = self
                    .rows
                    .iter()
                    .find(|r| r.dataset == *d && r.kernel == *k)
                    .map_or_else(|| "-".to_owned(), |r| format!("{:.2}%", 100.0 * r.accuracy));
                let _ = write!(out, "  {:>w$}", cell, w = k.len().max(7));
            }
            out.push('\n');
        }
        out
    }
}
