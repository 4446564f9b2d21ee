use crate::error::{Error, Result};
use crate::svm::{KernelKind, KernelSpec};

/// Admissible parameter values searched by [`super::grid_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub c: Vec<f64>,
    pub degree: Vec<u32>,
    pub gamma: Vec<f64>,
    pub coef0: Vec<f64>,
}

impl Default for ParamGrid {
    /// `C ∈ {0.01..0.1 step 0.01} ∪ {0.2..3 step 0.1} ∪ {4..20}`,
    /// `d ∈ {1..19}`, `γ ∈ {0, 0.1, .., 1}`, `r ∈ {0..6}`.
    fn default() -> Self {
        // Built from integers so every value is the nearest double to the
        // decimal it names.
        let c = (1..=10)
            .map(|i| f64::from(i) / 100.0)
            .chain((2..=30).map(|i| f64::from(i) / 10.0))
            .chain((4..=20).map(f64::from))
            .collect();
        ParamGrid {
            c,
            degree: (1..=19).collect(),
            gamma: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
            coef0: (0..=6).map(f64::from).collect(),
        }
    }
}

impl ParamGrid {
    /// A grid that only varies `C`.
    pub fn c_only(c: Vec<f64>) -> Self {
        ParamGrid {
            c,
            ..Default::default()
        }
    }

    /// Every combination relevant to `kind`, ordered by `C`, then `d`, `γ`, `r`.
    ///
    /// The Gaussian grid spans `C × γ` only.
    pub fn combinations(&self, kind: KernelKind) -> Result<Vec<KernelSpec>> {
        let mut out = Vec::new();
        for &c in &self.c {
            match kind {
                KernelKind::Linear => out.push(KernelSpec::linear(c)),
                KernelKind::Precomputed => out.push(KernelSpec::precomputed(c)),
                KernelKind::Gaussian => {
                    out.extend(self.gamma.iter().map(|&g| KernelSpec::gaussian(c, g)))
                }
                KernelKind::Polynomial => {
                    for &d in &self.degree {
                        for &g in &self.gamma {
                            for &r in &self.coef0 {
                                out.push(KernelSpec::polynomial(c, d, g, r));
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config(format!("empty parameter grid for {kind:?}")));
        }
        for spec in &out {
            spec.validate()?;
        }
        Ok(out)
    }

    pub fn describe(&self) -> String {
        fn list<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        format!(
            "C={{{}}} d={{{}}} gamma={{{}}} r={{{}}}",
            list(&self.c),
            list(&self.degree),
            list(&self.gamma),
            list(&self.coef0)
        )
    }
}
