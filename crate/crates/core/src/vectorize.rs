//! Bag-of-words counts and per-feature `[-1, 1]` scaling.
//!
//! Scaling is min-max over the training matrix read densely, so a column
//! that is absent from some training document has `min = 0`. Absent entries
//! are never stored: after scaling they take the column's *baseline*, the
//! scaled image of zero (often `-1`). [`ScalingParams::dot`] and
//! [`ScalingParams::squared_distance`] account for baselines so kernels see
//! the dense vectors.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::textprep::{tokens, Corpus};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_terms(terms: impl IntoIterator<Item = String>) -> Self {
        let terms: Vec<String> = terms
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { terms, index }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// SHA-256 of the newline-joined terms, hex encoded.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for term in &self.terms {
            hasher.update(term.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// All distinct tokens of the corpus, sorted.
pub fn fit_vocabulary(corpus: &Corpus) -> Result<Vocabulary> {
    if corpus.stage == 0 {
        return Err(Error::Config(
            "vectorizing needs a preprocessed corpus (stage >= 1)".into(),
        ));
    }
    let mut terms = BTreeSet::new();
    for doc in &corpus.documents {
        for t in tokens(&doc.text_lossy()) {
            if !terms.contains(t) {
                terms.insert(t.to_owned());
            }
        }
    }
    Ok(Vocabulary::from_terms(terms))
}

/// Sparse vector with strictly increasing columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Format("sparse columns must be strictly increasing".into()));
            }
        }
        if let Some(&(c, _)) = entries.last() {
            if c >= dim {
                return Err(Error::Format(format!("column {c} out of range {dim}")));
            }
        }
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::Format("sparse values must be finite".into()));
        }
        Ok(SparseVector { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(c, x) in &self.entries {
            v[c] = x;
        }
        v
    }
}

/// Term counts of one document; out-of-vocabulary tokens are dropped.
pub fn count_vector(text: &str, vocab: &Vocabulary) -> SparseVector {
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for t in tokens(text) {
        if let Some(c) = vocab.column(t) {
            *counts.entry(c).or_default() += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts.into_iter().collect();
    entries.sort_unstable_by_key(|&(c, _)| c);
    SparseVector {
        dim: vocab.len(),
        entries,
    }
}

pub fn count_vectors(corpus: &Corpus, vocab: &Vocabulary) -> Vec<SparseVector> {
    corpus
        .documents
        .iter()
        .map(|d| count_vector(&d.text_lossy(), vocab))
        .collect()
}

/// Per-column training range plus the derived baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    mins: Vec<f64>,
    maxs: Vec<f64>,
    baseline: Vec<f64>,
    baseline_sq_sum: f64,
}

impl ScalingParams {
    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn range(&self, column: usize) -> (f64, f64) {
        (self.mins[column], self.maxs[column])
    }

    /// Scaled value of `v` in `column`, clipped to `[-1, 1]`.
    pub fn scale_value(&self, column: usize, v: f64) -> f64 {
        let (lo, hi) = (self.mins[column], self.maxs[column]);
        if hi > lo {
            (-1.0 + 2.0 * (v - lo) / (hi - lo)).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }

    /// Scaled value of an absent (zero) entry.
    pub fn baseline(&self, column: usize) -> f64 {
        self.baseline[column]
    }

    /// Inner product of the dense vectors represented by two scaled vectors.
    pub fn dot(&self, x: &SparseVector, y: &SparseVector) -> f64 {
        let mut sum = self.baseline_sq_sum;
        merge(x, y, |c, a, b| {
            let base = self.baseline[c];
            sum += a.unwrap_or(base) * b.unwrap_or(base) - base * base;
        });
        sum
    }

    pub fn squared_distance(&self, x: &SparseVector, y: &SparseVector) -> f64 {
        let mut sum = 0.0;
        merge(x, y, |c, a, b| {
            let base = self.baseline[c];
            let d = a.unwrap_or(base) - b.unwrap_or(base);
            sum += d * d;
        });
        sum
    }

    /// Identity scaling of `dim` columns: baselines are zero and vectors are
    /// used as-is.
    pub fn identity(dim: usize) -> Self {
        ScalingParams {
            mins: vec![-1.0; dim],
            maxs: vec![1.0; dim],
            baseline: vec![0.0; dim],
            baseline_sq_sum: 0.0,
        }
    }
}

/// Walks the union of the stored columns of `x` and `y` in order.
fn merge(x: &SparseVector, y: &SparseVector, mut f: impl FnMut(usize, Option<f64>, Option<f64>)) {
    let (a, b) = (&x.entries, &y.entries);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(ca, va)), Some(&(cb, vb))) if ca == cb => {
                f(ca, Some(va), Some(vb));
                i += 1;
                j += 1;
            }
            (Some(&(ca, va)), Some(&(cb, _))) if ca < cb => {
                f(ca, Some(va), None);
                i += 1;
            }
            (Some(&(ca, va)), None) => {
                f(ca, Some(va), None);
                i += 1;
            }
            (_, Some(&(cb, vb))) => {
                f(cb, None, Some(vb));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
}

/// Column-wise min and max over the dense training matrix.
pub fn fit_scale(train: &[SparseVector]) -> Result<ScalingParams> {
    let first = train
        .first()
        .ok_or_else(|| Error::Training("cannot fit scaling on an empty matrix".into()))?;
    let dim = first.dim;
    if train.iter().any(|v| v.dim != dim) {
        return Err(Error::Training("vectors have different dimensions".into()));
    }
    let mut mins = vec![f64::INFINITY; dim];
    let mut maxs = vec![f64::NEG_INFINITY; dim];
    let mut stored = vec![0usize; dim];
    for v in train {
        for &(c, x) in &v.entries {
            mins[c] = mins[c].min(x);
            maxs[c] = maxs[c].max(x);
            stored[c] += 1;
        }
    }
    for c in 0..dim {
        if stored[c] < train.len() {
            mins[c] = mins[c].min(0.0);
            maxs[c] = maxs[c].max(0.0);
        }
    }
    let mut params = ScalingParams {
        mins,
        maxs,
        baseline: Vec::new(),
        baseline_sq_sum: 0.0,
    };
    params.baseline = (0..dim).map(|c| params.scale_value(c, 0.0)).collect();
    params.baseline_sq_sum = params.baseline.iter().map(|b| b * b).sum();
    Ok(params)
}

/// Scales the stored entries of `v`; values outside the training range are
/// clipped to `[-1, 1]`.
pub fn apply_scale(v: &SparseVector, params: &ScalingParams) -> Result<SparseVector> {
    if v.dim != params.dim() {
        return Err(Error::Format(format!(
            "vector has {} columns, scaling expects {}",
            v.dim,
            params.dim()
        )));
    }
    Ok(SparseVector {
        dim: v.dim,
        entries: v
            .entries
            .iter()
            .map(|&(c, x)| (c, params.scale_value(c, x)))
            .collect(),
    })
}

/// Writes labelled vectors in libsvm text format (1-based columns) behind a
/// `# p=<dim> vocab_sha256=<hash>` header line.
pub fn write_libsvm(
    path: &Path,
    labels: &[String],
    vectors: &[SparseVector],
    vocab: &Vocabulary,
) -> Result<()> {
    let mut out = format!("# p={} vocab_sha256={}\n", vocab.len(), vocab.hash());
    for (label, v) in labels.iter().zip(vectors) {
        out.push_str(label);
        for &(c, x) in &v.entries {
            let _ = write!(out, " {}:{}", c + 1, x);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{Corpus, Document};
    use proptest::prelude::*;

    fn corpus(texts: &[&str]) -> Corpus {
        let docs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document {
                id: format!("d{i}"),
                label: "x".into(),
                text: t.as_bytes().to_vec(),
                stage: 4,
            })
            .collect();
        Corpus::new(docs, 4).unwrap()
    }

    fn sv(dim: usize, entries: &[(usize, f64)]) -> SparseVector {
        SparseVector::new(dim, entries.to_vec()).unwrap()
    }

    #[test]
    fn vocabulary_is_sorted_and_distinct() {
        let vocab = fit_vocabulary(&corpus(&["b a", "a c"])).unwrap();
        assert_eq!(vocab.terms(), &["a", "b", "c"]);
        assert_eq!(vocab.column("c"), Some(2));
    }

    #[test]
    fn empty_documents_give_empty_vocabulary() {
        let vocab = fit_vocabulary(&corpus(&["", ""])).unwrap();
        assert!(vocab.is_empty());
        let vectors = count_vectors(&corpus(&[""]), &vocab);
        assert_eq!(vectors[0].dim(), 0);
    }

    #[test]
    fn counts() {
        let vocab = Vocabulary::from_terms(["a", "b", "c"].map(String::from));
        assert_eq!(count_vector("a a b", &vocab).entries(), &[(0, 2.0), (1, 1.0)]);
        assert!(count_vector("", &vocab).entries().is_empty());
        let just_a = Vocabulary::from_terms(["a".to_string()]);
        assert!(count_vector("z", &just_a).entries().is_empty());
    }

    #[test]
    fn scaling_examples() {
        let train = vec![sv(1, &[]), sv(1, &[(0, 4.0)])];
        let params = fit_scale(&train).unwrap();
        assert_eq!(params.range(0), (0.0, 4.0));
        assert_eq!(params.scale_value(0, 2.0), 0.0);
        assert_eq!(params.scale_value(0, 0.0), -1.0);
        assert_eq!(params.scale_value(0, 4.0), 1.0);
        assert_eq!(params.scale_value(0, 8.0), 1.0);
        let test = apply_scale(&sv(1, &[(0, 8.0)]), &params).unwrap();
        assert_eq!(test.entries(), &[(0, 1.0)]);
    }

    #[test]
    fn constant_columns_scale_to_zero() {
        let train = vec![sv(2, &[(0, 3.0)]), sv(2, &[(0, 3.0), (1, 1.0)])];
        let params = fit_scale(&train).unwrap();
        assert_eq!(params.scale_value(0, 3.0), 0.0);
        assert_eq!(params.scale_value(0, 100.0), 0.0);
        assert_eq!(params.baseline(0), 0.0);
        assert_eq!(params.baseline(1), -1.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let params = fit_scale(&[sv(2, &[(1, 1.0)])]).unwrap();
        assert!(apply_scale(&sv(3, &[]), &params).is_err());
        assert!(fit_scale(&[]).is_err());
        assert!(SparseVector::new(2, vec![(1, 1.0), (0, 1.0)]).is_err());
        assert!(SparseVector::new(2, vec![(2, 1.0)]).is_err());
    }

    #[test]
    fn libsvm_export() {
        let vocab = Vocabulary::from_terms(["a", "b"].map(String::from));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        write_libsvm(&path, &["pos".into()], &[sv(2, &[(1, 2.0)])], &vocab).unwrap();
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("# p=2 vocab_sha256={}", vocab.hash()));
        assert_eq!(lines.next().unwrap(), "pos 2:2");
    }

    fn random_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..6).prop_flat_map(|dim| {
            proptest::collection::vec(
                proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..20.0], dim),
                1..8,
            )
        })
    }

    fn to_sparse(row: &[f64]) -> SparseVector {
        let entries = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(c, &v)| (c, v))
            .collect();
        SparseVector::new(row.len(), entries).unwrap()
    }

    /// Dense reference: scale every column with the explicit formula.
    fn dense_scaled(rows: &[Vec<f64>], row: &[f64]) -> Vec<f64> {
        (0..row.len())
            .map(|c| {
                let lo = rows.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
                if hi > lo {
                    (-1.0 + 2.0 * (row[c] - lo) / (hi - lo)).clamp(-1.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    proptest! {
        #[test]
        fn training_values_land_in_unit_box(rows in random_matrix()) {
            let sparse: Vec<_> = rows.iter().map(|r| to_sparse(r)).collect();
            let params = fit_scale(&sparse).unwrap();
            for v in &sparse {
                let scaled = apply_scale(v, &params).unwrap();
                prop_assert!(scaled.entries().iter().all(|&(_, x)| (-1.0..=1.0).contains(&x)));
            }
            for c in 0..params.dim() {
                prop_assert!((-1.0..=1.0).contains(&params.baseline(c)));
            }
        }

        #[test]
        fn matches_dense_formula(rows in random_matrix()) {
            let sparse: Vec<_> = rows.iter().map(|r| to_sparse(r)).collect();
            let params = fit_scale(&sparse).unwrap();
            let scaled: Vec<_> = sparse.iter().map(|v| apply_scale(v, &params).unwrap()).collect();
            let dense: Vec<_> = rows.iter().map(|r| dense_scaled(&rows, r)).collect();
            for (i, x) in scaled.iter().enumerate() {
                for (j, y) in scaled.iter().enumerate() {
                    let dot: f64 = dense[i].iter().zip(&dense[j]).map(|(a, b)| a * b).sum();
                    let dist: f64 = dense[i].iter().zip(&dense[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    prop_assert!((params.dot(x, y) - dot).abs() < 1e-9);
                    prop_assert!((params.squared_distance(x, y) - dist).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn count_mass_equals_in_vocabulary_tokens(words in proptest::collection::vec("[a-e]{1,2}", 0..40)) {
            let vocab = Vocabulary::from_terms(["a", "b", "cc", "dd"].map(String::from));
            let text = words.join(" ");
            let v = count_vector(&text, &vocab);
            let mass: f64 = v.entries().iter().map(|&(_, x)| x).sum();
            let expected = words.iter().filter(|w| vocab.column(w).is_some()).count();
            prop_assert_eq!(mass, expected as f64);
        }
    }
}
