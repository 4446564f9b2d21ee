use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::KernelMatrix;
use crate::vectorize::{ScalingParams, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `<x, y>`
    Linear,
    /// `(γ <x, y> + r)^d`
    Polynomial,
    /// `exp(-γ ‖x - y‖²)`
    Gaussian,
    /// Values come from a Gram matrix (e.g. `K_NCD`).
    Precomputed,
}

/// Kernel plus the soft-margin constant `C`.
///
/// A degree may be recorded on a Gaussian kernel (parameter tables sometimes
/// list one) but it never affects the value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub c: f64,
    pub degree: Option<u32>,
    pub gamma: Option<f64>,
    pub coef0: Option<f64>,
}

impl KernelSpec {
    pub fn linear(c: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            c,
            degree: None,
            gamma: None,
            coef0: None,
        }
    }

    pub fn polynomial(c: f64, degree: u32, gamma: f64, coef0: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            c,
            degree: Some(degree),
            gamma: Some(gamma),
            coef0: Some(coef0),
        }
    }

    pub fn gaussian(c: f64, gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Gaussian,
            c,
            degree: None,
            gamma: Some(gamma),
            coef0: None,
        }
    }

    pub fn precomputed(c: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Precomputed,
            c,
            degree: None,
            gamma: None,
            coef0: None,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        let needs = |name: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("{:?} kernel needs {name}", self.kind)))
            }
        };
        let forbids = |name: &str, present: bool| {
            if present {
                Err(Error::Config(format!("{:?} kernel takes no {name}", self.kind)))
            } else {
                Ok(())
            }
        };
        match self.kind {
            KernelKind::Linear | KernelKind::Precomputed => {
                forbids("degree", self.degree.is_some())?;
                forbids("gamma", self.gamma.is_some())?;
                forbids("coef0", self.coef0.is_some())?;
            }
            KernelKind::Polynomial => {
                needs("degree", self.degree.is_some())?;
                needs("gamma", self.gamma.is_some())?;
                needs("coef0", self.coef0.is_some())?;
            }
            KernelKind::Gaussian => {
                needs("gamma", self.gamma.is_some())?;
                forbids("coef0", self.coef0.is_some())?;
            }
        }
        if self.degree == Some(0) {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::Config(format!("gamma must be nonnegative, got {g}")));
            }
        }
        if let Some(r) = self.coef0 {
            if !r.is_finite() {
                return Err(Error::Config("coef0 must be finite".into()));
            }
        }
        Ok(())
    }

    /// Kernel value of two (scaled) vectors.
    ///
    /// # Panics
    /// On a precomputed kernel, which has no vector form.
    pub fn eval(&self, x: &SparseVector, y: &SparseVector, space: &ScalingParams) -> f64 {
        match self.kind {
            KernelKind::Linear => space.dot(x, y),
            KernelKind::Polynomial => {
                let (d, g, r) = (
                    self.degree.unwrap_or(1),
                    self.gamma.unwrap_or(0.0),
                    self.coef0.unwrap_or(0.0),
                );
                (g * space.dot(x, y) + r).powi(d as i32)
            }
            KernelKind::Gaussian => {
                (-self.gamma.unwrap_or(0.0) * space.squared_distance(x, y)).exp()
            }
            KernelKind::Precomputed => panic!("a precomputed kernel cannot evaluate vectors"),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Gaussian => "gaussian",
            KernelKind::Precomputed => "precomputed",
        };
        write!(f, "{name} C={}", self.c)?;
        if let Some(d) = self.degree {
            write!(f, " d={d}")?;
        }
        if let Some(g) = self.gamma {
            write!(f, " gamma={g}")?;
        }
        if let Some(r) = self.coef0 {
            write!(f, " r={r}")?;
        }
        Ok(())
    }
}

fn require_vector_kernel(spec: &KernelSpec) -> Result<()> {
    spec.validate()?;
    if spec.kind == KernelKind::Precomputed {
        return Err(Error::Config(
            "a precomputed kernel needs a Gram matrix, not vectors".into(),
        ));
    }
    Ok(())
}

/// Symmetric Gram matrix of `vectors`.
pub fn vector_gram(
    spec: &KernelSpec,
    vectors: &[SparseVector],
    space: &ScalingParams,
) -> Result<KernelMatrix> {
    require_vector_kernel(spec)?;
    let n = vectors.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| spec.eval(&vectors[i], &vectors[j], space)).collect())
        .collect();
    let mut gram = KernelMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            gram.set(i, i + k, v);
            gram.set(i + k, i, v);
        }
    }
    Ok(gram)
}

/// `|rows| × |cols|` kernel values.
pub fn vector_cross(
    spec: &KernelSpec,
    rows: &[SparseVector],
    cols: &[SparseVector],
    space: &ScalingParams,
) -> Result<KernelMatrix> {
    require_vector_kernel(spec)?;
    let values: Vec<f64> = rows
        .par_iter()
        .flat_map_iter(|x| cols.iter().map(move |y| spec.eval(x, y, space)))
        .collect();
    KernelMatrix::new(rows.len(), cols.len(), values)
}
