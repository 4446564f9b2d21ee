//! Cross-validation, grid search and accuracy reporting.

mod grid;
mod run;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::KernelMatrix;
use crate::svm::{train_multiclass, vector_gram, KernelKind, KernelSpec, SolverOptions, Strategy};
use crate::vectorize::{ScalingParams, SparseVector};

pub use grid::ParamGrid;
pub use run::{evaluate_run, scaled_vectors, Method, Report, ReportRow, RunOutcome};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FOLDS: usize = 5;

/// Fraction of positions where `pred` and `truth` agree; `0.0` when empty.
///
/// # Panics
/// If the lengths differ.
pub fn accuracy<T: PartialEq>(pred: &[T], truth: &[T]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "prediction and truth lengths differ");
    if pred.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / pred.len() as f64
}

/// Stratified `k`-fold split of `labels` (class indices).
///
/// Each class is shuffled with a generator seeded from `seed`, then all
/// classes are dealt round-robin into folds by one running counter, so fold
/// sizes differ by at most one and every fold gets its share of each class.
/// Returned folds are sorted.
pub fn kfold_split(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let m = labels.len();
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if k > m {
        return Err(Error::Config(format!("{k} folds for {m} examples")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (class, members) in &mut by_class {
        if members.len() < k {
            log::warn!(
                "class {class} has {} examples, fewer than {k} folds",
                members.len()
            );
        }
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Trains on `train_gram` and predicts the rows of `test_kernel`
/// (test × train), tolerating classes absent from this training subset.
pub(crate) fn fit_predict(
    train_gram: &KernelMatrix,
    train_labels: &[usize],
    n_classes: usize,
    test_kernel: &KernelMatrix,
    spec: &KernelSpec,
    strategy: Strategy,
    opts: &SolverOptions,
) -> Result<Vec<usize>> {
    let mut present: Vec<usize> = train_labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() == 1 {
        return Ok(vec![present[0]; test_kernel.rows()]);
    }
    let mut local = vec![usize::MAX; n_classes];
    for (i, &c) in present.iter().enumerate() {
        local[c] = i;
    }
    let labels: Vec<usize> = train_labels.iter().map(|&c| local[c]).collect();
    let names: Vec<String> = present.iter().map(usize::to_string).collect();
    let model = train_multiclass(train_gram, &labels, &names, spec, strategy, opts)?;
    Ok(model
        .predict_all(test_kernel)?
        .into_iter()
        .map(|i| present[i])
        .collect())
}

/// Data a grid search runs on.
#[derive(Debug, Clone, Copy)]
pub enum CvInput<'a> {
    /// A full training Gram matrix (e.g. `K_NCD`); only `C` is searched.
    Gram(&'a KernelMatrix),
    /// Scaled count vectors with their scaling; the kernel is built per
    /// parameter setting.
    Vectors {
        vectors: &'a [SparseVector],
        space: &'a ScalingParams,
        kind: KernelKind,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub solver: SolverOptions,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: DEFAULT_FOLDS,
            seed: DEFAULT_SEED,
            strategy: Strategy::OneVsOne,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub spec: KernelSpec,
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub rows: Vec<CvRow>,
    pub best: usize,
    pub folds: usize,
    pub seed: u64,
    pub grid: String,
}

impl CvReport {
    pub fn best_row(&self) -> &CvRow {
        &self.rows[self.best]
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# seed={} folds={} grid={}\n", self.seed, self.folds, self.grid);
        out.push_str("kernel\tmean");
        for f in 0..self.folds {
            let _ = write!(out, "\tfold{}", f + 1);
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}\t{}", row.spec, row.mean);
            for a in &row.fold_accuracies {
                let _ = write!(out, "\t{a}");
            }
            out.push('\n');
        }
        out
    }

    /// Aligned summary: the best setting first, then every row.
    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.spec.to_string().len())
            .max()
            .unwrap_or(0)
            .max("kernel".len());
        let mut out = format!("# seed={} folds={} grid={}\n", self.seed, self.folds, self.grid);
        let best = self.best_row();
        let _ = writeln!(out, "best: {} ({:.2}%)", best.spec, 100.0 * best.mean);
        let _ = writeln!(out, "{:<width$}  {:>8}", "kernel", "cv acc");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>7.2}%",
                row.spec.to_string(),
                100.0 * row.mean
            );
        }
        out
    }
}

/// Key of the kernel parameters other than `C`; settings sharing it share a
/// Gram matrix.
fn gram_key(spec: &KernelSpec) -> (Option<u32>, Option<u64>, Option<u64>) {
    (
        spec.degree,
        spec.gamma.map(f64::to_bits),
        spec.coef0.map(f64::to_bits),
    )
}

/// Mean `K`-fold accuracy of every grid combination on the training data.
///
/// The best row is the highest mean; ties go to the earliest combination.
pub fn grid_search(
    input: CvInput<'_>,
    labels: &[usize],
    grid: &ParamGrid,
    config: &CvConfig,
) -> Result<CvReport> {
    let kind = match input {
        CvInput::Gram(_) => KernelKind::Precomputed,
        CvInput::Vectors { kind, .. } => kind,
    };
    let specs = grid.combinations(kind)?;
    let m = labels.len();
    if let CvInput::Gram(g) = input {
        if g.rows() != m || !g.is_square() {
            return Err(Error::Training(format!(
                "Gram matrix is {}x{} for {m} labels",
                g.rows(),
                g.cols()
            )));
        }
    }
    if let CvInput::Vectors { vectors, .. } = input {
        if vectors.len() != m {
            return Err(Error::Training(format!(
                "{} vectors for {m} labels",
                vectors.len()
            )));
        }
    }
    let n_classes = labels.iter().max().map_or(0, |&l| l + 1);
    let folds = kfold_split(labels, config.folds, config.seed)?;
    let train_sets: Vec<Vec<usize>> = folds
        .iter()
        .map(|test| {
            let mut in_test = vec![false; m];
            for &i in test {
                in_test[i] = true;
            }
            (0..m).filter(|&i| !in_test[i]).collect()
        })
        .collect();

    // Group settings by shared Gram matrix, in first-appearance order.
    let mut groups: Vec<((Option<u32>, Option<u64>, Option<u64>), Vec<usize>)> = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let key = gram_key(spec);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(i),
            None => groups.push((key, vec![i])),
        }
    }

    let mut fold_acc: Vec<Vec<f64>> = vec![Vec::new(); specs.len()];
    for (_, members) in &groups {
        let owned;
        let gram = match input {
            CvInput::Gram(g) => g,
            CvInput::Vectors { vectors, space, .. } => {
                owned = vector_gram(&specs[members[0]], vectors, space)?;
                &owned
            }
        };
        let jobs: Vec<(usize, usize)> = members
            .iter()
            .flat_map(|&s| (0..folds.len()).map(move |f| (s, f)))
            .collect();
        let results = jobs
            .par_iter()
            .map(|&(s, f)| {
                let (train, test) = (&train_sets[f], &folds[f]);
                let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
                let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
                let pred = fit_predict(
                    &gram.select(train, train),
                    &train_labels,
                    n_classes,
                    &gram.select(test, train),
                    &specs[s],
                    config.strategy,
                    &config.solver,
                )?;
                Ok(accuracy(&pred, &truth))
            })
            .collect::<Result<Vec<f64>>>()?;
        for (&(s, _), acc) in jobs.iter().zip(results) {
            fold_acc[s].push(acc);
        }
    }

    let rows: Vec<CvRow> = specs
        .into_iter()
        .zip(fold_acc)
        .map(|(spec, fold_accuracies)| {
            let mean = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
            CvRow {
                spec,
                fold_accuracies,
                mean,
            }
        })
        .collect();
    let mut best = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.mean > rows[best].mean {
            best = i;
        }
    }
    Ok(CvReport {
        rows,
        best,
        folds: config.folds,
        seed: config.seed,
        grid: grid.describe(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]), 1.0);
        assert_eq!(accuracy(&[1, 2], &[3, 4]), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]), 0.75);
    }

    #[test]
    fn fold_sizes() {
        let sizes = |m: usize| {
            let mut s: Vec<usize> = kfold_split(&vec![0; m], 5, 1)
                .unwrap()
                .iter()
                .map(Vec::len)
                .collect();
            s.sort_unstable_by(|a, b| b.cmp(a));
            s
        };
        assert_eq!(sizes(10), vec![2; 5]);
        assert_eq!(sizes(11), vec![3, 2, 2, 2, 2]);
    }

    #[test]
    fn fold_errors() {
        assert!(kfold_split(&[0, 1, 0], 5, 1).is_err());
        assert!(kfold_split(&[0, 1, 0], 1, 1).is_err());
    }

    #[test]
    fn fold_determinism() {
        let labels: Vec<usize> = (0..37).map(|i| i % 3).collect();
        assert_eq!(kfold_split(&labels, 5, 9).unwrap(), kfold_split(&labels, 5, 9).unwrap());
        assert_ne!(kfold_split(&labels, 5, 9).unwrap(), kfold_split(&labels, 5, 10).unwrap());
    }

    fn separable() -> (KernelMatrix, Vec<usize>) {
        let xs: Vec<(f64, usize)> = (0..20)
            .map(|i| if i % 2 == 0 { (1.0 + i as f64 * 0.1, 0) } else { (-1.0 - i as f64 * 0.1, 1) })
            .collect();
        let gram = KernelMatrix::from_fn(20, 20, |i, j| xs[i].0 * xs[j].0);
        (gram, xs.iter().map(|x| x.1).collect())
    }

    #[test]
    fn single_combination_grid() {
        let (gram, labels) = separable();
        let report = grid_search(
            CvInput::Gram(&gram),
            &labels,
            &ParamGrid::c_only(vec![1.0]),
            &CvConfig::default(),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.best, 0);
        assert_eq!(report.rows[0].fold_accuracies.len(), 5);
    }

    #[test]
    fn identical_combinations_tie_to_first() {
        let (gram, labels) = separable();
        let report = grid_search(
            CvInput::Gram(&gram),
            &labels,
            &ParamGrid::c_only(vec![2.0, 2.0]),
            &CvConfig::default(),
        )
        .unwrap();
        assert_eq!(report.rows[0].mean, report.rows[1].mean);
        assert_eq!(report.best, 0);
        assert!(report.to_tsv().starts_with("# seed=42 folds=5"));
        assert!(report.to_table().contains("best: precomputed C=2"));
    }

    #[test]
    fn missing_class_in_training_fold() {
        // Class 2 has one example; the fold holding it trains without it.
        let labels = vec![0, 0, 0, 1, 1, 1, 2];
        let gram = KernelMatrix::from_fn(7, 7, |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 });
        let report = grid_search(
            CvInput::Gram(&gram),
            &labels,
            &ParamGrid::c_only(vec![1.0]),
            &CvConfig {
                folds: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(report.rows[0].mean > 0.5);
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(labels in proptest::collection::vec(0usize..4, 5..60), k in 2usize..6, seed in any::<u64>()) {
            prop_assume!(k <= labels.len());
            let folds = kfold_split(&labels, k, seed).unwrap();
            prop_assert_eq!(folds.len(), k);
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for class in 0..4 {
                let total = labels.iter().filter(|&&l| l == class).count() as f64;
                for f in &folds {
                    let here = f.iter().filter(|&&i| labels[i] == class).count() as f64;
                    prop_assert!((here - total / k as f64).abs() < 1.0);
                }
            }
        }
    }
}
