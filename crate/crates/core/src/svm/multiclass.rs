use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::KernelMatrix;
use crate::svm::kernel::KernelSpec;
use crate::svm::smo::{solve_dual, SolverOptions, SvmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    OneVsOne,
    OneVsRest,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::OneVsOne => "ovo",
            Strategy::OneVsRest => "ovr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ovo" => Ok(Strategy::OneVsOne),
            "ovr" => Ok(Strategy::OneVsRest),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

/// One binary machine: `positive` is labelled `+1`, `negative` (or every
/// other class, when `None`) is `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    pub positive: usize,
    pub negative: Option<usize>,
    pub model: SvmModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub strategy: Strategy,
    pub class_names: Vec<String>,
    pub kernel: KernelSpec,
    pub train_size: usize,
    pub models: Vec<BinaryModel>,
    pub train_accuracy: Option<f64>,
}

/// Class with the most votes; ties go to the lowest index.
pub fn vote_winner(votes: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Train on a full Gram matrix whose row `i` belongs to `labels[i]`, an
/// index into `class_names`.
///
/// With two classes both strategies produce the same single machine.
pub fn train_multiclass(
    gram: &KernelMatrix,
    labels: &[usize],
    class_names: &[String],
    kernel: &KernelSpec,
    strategy: Strategy,
    opts: &SolverOptions,
) -> Result<MulticlassModel> {
    kernel.validate()?;
    let classes = class_names.len();
    if classes < 2 {
        return Err(Error::Training(format!(
            "need at least two classes, got {classes}"
        )));
    }
    if gram.rows() != labels.len() || !gram.is_square() {
        return Err(Error::Training(format!(
            "Gram matrix is {}x{} for {} labels",
            gram.rows(),
            gram.cols(),
            labels.len()
        )));
    }
    let mut members = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        members
            .get_mut(l)
            .ok_or_else(|| Error::Training(format!("label index {l} out of range")))?
            .push(i);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::Training(format!(
            "class {:?} has no training examples",
            class_names[empty]
        )));
    }
    if !gram.is_symmetric() {
        return Err(Error::Training("Gram matrix is not symmetric".into()));
    }

    let tasks: Vec<(usize, Option<usize>)> = if classes == 2 {
        vec![(0, Some(1))]
    } else {
        match strategy {
            Strategy::OneVsOne => (0..classes)
                .flat_map(|a| (a + 1..classes).map(move |b| (a, Some(b))))
                .collect(),
            Strategy::OneVsRest => (0..classes).map(|a| (a, None)).collect(),
        }
    };

    let models = tasks
        .par_iter()
        .map(|&(pos, neg)| {
            let (rows, signs): (Vec<usize>, Vec<i8>) = match neg {
                Some(neg) => {
                    let mut rows: Vec<usize> =
                        members[pos].iter().chain(&members[neg]).copied().collect();
                    rows.sort_unstable();
                    let signs = rows
                        .iter()
                        .map(|&r| if labels[r] == pos { 1 } else { -1 })
                        .collect();
                    (rows, signs)
                }
                None => (
                    (0..labels.len()).collect(),
                    labels.iter().map(|&l| if l == pos { 1 } else { -1 }).collect(),
                ),
            };
            let sub = gram.select(&rows, &rows);
            let mut model = solve_dual(&sub, &signs, kernel, opts)?;
            model.remap_indices(&rows);
            Ok(BinaryModel {
                positive: pos,
                negative: neg,
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trained = MulticlassModel {
        strategy,
        class_names: class_names.to_vec(),
        kernel: *kernel,
        train_size: labels.len(),
        models,
        train_accuracy: None,
    };
    let correct = (0..labels.len())
        .filter(|&i| trained.predict(gram.row(i)) == labels[i])
        .count();
    trained.train_accuracy = Some(correct as f64 / labels.len() as f64);
    Ok(trained)
}

impl MulticlassModel {
    /// Votes per class (one-vs-one) for a kernel row against the training set.
    pub fn votes(&self, kernel_row: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.class_names.len()];
        for bm in &self.models {
            let winner = match (bm.model.predict(kernel_row), bm.negative) {
                (1, _) => bm.positive,
                (_, Some(neg)) => neg,
                (_, None) => continue,
            };
            votes[winner] += 1;
        }
        votes
    }

    /// Predicted class index for one kernel row.
    pub fn predict(&self, kernel_row: &[f64]) -> usize {
        // A two-class model is a single pairwise machine under either strategy.
        if self.strategy == Strategy::OneVsOne || self.models.len() == 1 {
            return vote_winner(&self.votes(kernel_row));
        }
        let mut scores = vec![f64::NEG_INFINITY; self.class_names.len()];
        for bm in &self.models {
            scores[bm.positive] = bm.model.decision_value(kernel_row);
        }
        argmax_first(&scores)
    }

    /// Predicted class for every row of a test-by-train kernel matrix.
    pub fn predict_all(&self, kernel: &KernelMatrix) -> Result<Vec<usize>> {
        if kernel.cols() != self.train_size {
            return Err(Error::Format(format!(
                "kernel rows have {} columns, model was trained on {} documents",
                kernel.cols(),
                self.train_size
            )));
        }
        Ok((0..kernel.rows())
            .into_par_iter()
            .map(|i| self.predict(kernel.row(i)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    /// Points around a circle, one cluster per class.
    fn clustered(classes: usize, per: usize) -> (KernelMatrix, Vec<usize>) {
        let mut xs = Vec::new();
        let mut labels = Vec::new();
        for c in 0..classes {
            for k in 0..per {
                let angle = c as f64 * 2.0 * std::f64::consts::PI / classes as f64;
                let r = 1.0 + 0.05 * k as f64;
                xs.push((r * angle.cos(), r * angle.sin()));
                labels.push(c);
            }
        }
        let gram = KernelMatrix::from_fn(xs.len(), xs.len(), |i, j| {
            let d = (xs[i].0 - xs[j].0).powi(2) + (xs[i].1 - xs[j].1).powi(2);
            (-d).exp()
        });
        (gram, labels)
    }

    #[test]
    fn model_counts() {
        let (gram, labels) = clustered(4, 3);
        let spec = KernelSpec::precomputed(10.0);
        let opts = SolverOptions::default();
        let ovo = train_multiclass(&gram, &labels, &names(4), &spec, Strategy::OneVsOne, &opts).unwrap();
        let ovr = train_multiclass(&gram, &labels, &names(4), &spec, Strategy::OneVsRest, &opts).unwrap();
        assert_eq!(ovo.models.len(), 6);
        assert_eq!(ovr.models.len(), 4);
        assert_eq!(ovo.train_accuracy, Some(1.0));
        assert_eq!(ovr.train_accuracy, Some(1.0));
    }

    #[test]
    fn two_classes_single_machine() {
        let (gram, labels) = clustered(2, 4);
        let spec = KernelSpec::precomputed(1.0);
        let opts = SolverOptions::default();
        let ovo = train_multiclass(&gram, &labels, &names(2), &spec, Strategy::OneVsOne, &opts).unwrap();
        let ovr = train_multiclass(&gram, &labels, &names(2), &spec, Strategy::OneVsRest, &opts).unwrap();
        assert_eq!(ovo.models.len(), 1);
        assert_eq!(ovo.models, ovr.models);
        for i in 0..gram.rows() {
            assert_eq!(ovo.predict(gram.row(i)), ovr.predict(gram.row(i)));
        }
    }

    #[test]
    fn support_indices_are_global() {
        let (gram, labels) = clustered(3, 3);
        let spec = KernelSpec::precomputed(5.0);
        let m = train_multiclass(&gram, &labels, &names(3), &spec, Strategy::OneVsOne, &SolverOptions::default()).unwrap();
        for bm in &m.models {
            for &sv in &bm.model.support_indices {
                let l = labels[sv];
                assert!(l == bm.positive || Some(l) == bm.negative);
            }
        }
    }

    #[test]
    fn ties() {
        assert_eq!(vote_winner(&[1, 1, 1]), 0);
        assert_eq!(vote_winner(&[0, 2, 2]), 1);
        assert_eq!(argmax_first(&[0.5, 0.5]), 0);
        assert_eq!(argmax_first(&[-1.0, 0.0, 0.0]), 1);
    }

    #[test]
    fn errors() {
        let (gram, labels) = clustered(2, 2);
        let spec = KernelSpec::precomputed(1.0);
        let opts = SolverOptions::default();
        assert!(train_multiclass(&gram, &[0; 4], &names(1), &spec, Strategy::OneVsOne, &opts).is_err());
        // A declared class with no examples.
        assert!(train_multiclass(&gram, &labels, &names(3), &spec, Strategy::OneVsOne, &opts).is_err());
    }
}
