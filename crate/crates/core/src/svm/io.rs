//! Line-oriented text format for trained models.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a model
//! read back predicts exactly as the one written.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::svm::kernel::{KernelKind, KernelSpec};
use crate::svm::multiclass::{BinaryModel, MulticlassModel, Strategy};
use crate::svm::smo::SvmModel;

const MAGIC: &str = "ncdkit-model";
const VERSION: u32 = 1;

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| v.to_string())
}

fn kind_name(kind: KernelKind) -> &'static str {
    match kind {
        KernelKind::Linear => "linear",
        KernelKind::Polynomial => "polynomial",
        KernelKind::Gaussian => "gaussian",
        KernelKind::Precomputed => "precomputed",
    }
}

pub fn model_to_string(model: &MulticlassModel) -> String {
    let mut out = String::new();
    let k = &model.kernel;
    // Writing to a String cannot fail.
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "strategy {}", model.strategy.name());
    let _ = writeln!(out, "kernel {}", kind_name(k.kind));
    let _ = writeln!(out, "C {}", k.c);
    let _ = writeln!(out, "degree {}", opt(k.degree));
    let _ = writeln!(out, "gamma {}", opt(k.gamma));
    let _ = writeln!(out, "coef0 {}", opt(k.coef0));
    let _ = writeln!(out, "train_size {}", model.train_size);
    let _ = writeln!(out, "train_accuracy {}", opt(model.train_accuracy));
    let _ = writeln!(out, "classes {}", model.class_names.len());
    for name in &model.class_names {
        let _ = writeln!(out, "class {name}");
    }
    let _ = writeln!(out, "models {}", model.models.len());
    for bm in &model.models {
        let m = &bm.model;
        let neg = bm.negative.map_or_else(|| "rest".to_owned(), |n| n.to_string());
        let _ = writeln!(
            out,
            "model {} {} bias {} objective {} iterations {} converged {} svs {}",
            bm.positive,
            neg,
            m.bias,
            m.objective,
            m.iterations,
            m.converged,
            m.support_indices.len()
        );
        for ((i, a), y) in m.support_indices.iter().zip(&m.alphas).zip(&m.labels) {
            let _ = writeln!(out, "{i} {a} {y}");
        }
    }
    out
}

pub fn write_model(path: &Path, model: &MulticlassModel) -> Result<()> {
    std::fs::write(path, model_to_string(model))
        .map_err(|e| Error::io(format!("writing model {}", path.display()), e))
}

pub fn read_model(path: &Path) -> Result<MulticlassModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading model {}", path.display()), e))?;
    parse_model(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        let (n, line) = self
            .inner
            .next()
            .ok_or_else(|| Error::Format("model file ends early".into()))?;
        self.line = n + 1;
        Ok(line)
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Format(format!("model line {}: {msg}", self.line))
    }

    /// Value of a `key value` line.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.err(format!("expected `{key} ...`"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse {s:?}")))
    }

    fn parse_opt<T: std::str::FromStr>(&self, s: &str) -> Result<Option<T>> {
        if s == "-" {
            Ok(None)
        } else {
            self.parse(s).map(Some)
        }
    }
}

pub fn parse_model(text: &str) -> Result<MulticlassModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let version = lines.field(MAGIC).map_err(|_| Error::Format("not a model file".into()))?;
    if version != VERSION.to_string() {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let strategy = Strategy::parse(lines.field("strategy")?).map_err(|e| lines.err(e))?;
    let kind = match lines.field("kernel")? {
        "linear" => KernelKind::Linear,
        "polynomial" => KernelKind::Polynomial,
        "gaussian" => KernelKind::Gaussian,
        "precomputed" => KernelKind::Precomputed,
        other => return Err(lines.err(format!("unknown kernel {other:?}"))),
    };
    let c = lines.field("C")?;
    let c = lines.parse(c)?;
    let degree = lines.field("degree")?;
    let degree = lines.parse_opt(degree)?;
    let gamma = lines.field("gamma")?;
    let gamma = lines.parse_opt(gamma)?;
    let coef0 = lines.field("coef0")?;
    let coef0 = lines.parse_opt(coef0)?;
    let kernel = KernelSpec {
        kind,
        c,
        degree,
        gamma,
        coef0,
    };
    kernel.validate()?;
    let train_size = lines.field("train_size")?;
    let train_size: usize = lines.parse(train_size)?;
    let acc = lines.field("train_accuracy")?;
    let train_accuracy = lines.parse_opt(acc)?;
    let n_classes = lines.field("classes")?;
    let n_classes: usize = lines.parse(n_classes)?;
    let mut class_names = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        class_names.push(lines.field("class")?.to_owned());
    }
    let n_models = lines.field("models")?;
    let n_models: usize = lines.parse(n_models)?;
    let mut models = Vec::with_capacity(n_models);
    for _ in 0..n_models {
        let header: Vec<&str> = lines.field("model")?.split(' ').collect();
        if header.len() != 12
            || header[2] != "bias"
            || header[4] != "objective"
            || header[6] != "iterations"
            || header[8] != "converged"
            || header[10] != "svs"
        {
            return Err(lines.err("malformed model header"));
        }
        let positive: usize = lines.parse(header[0])?;
        let negative = if header[1] == "rest" {
            None
        } else {
            Some(lines.parse::<usize>(header[1])?)
        };
        if positive >= n_classes || negative.is_some_and(|n| n >= n_classes) {
            return Err(lines.err("class index out of range"));
        }
        let bias = lines.parse(header[3])?;
        let objective = lines.parse(header[5])?;
        let iterations = lines.parse(header[7])?;
        let converged = lines.parse(header[9])?;
        let svs: usize = lines.parse(header[11])?;
        let mut model = SvmModel {
            support_indices: Vec::with_capacity(svs),
            alphas: Vec::with_capacity(svs),
            labels: Vec::with_capacity(svs),
            bias,
            kernel,
            objective,
            iterations,
            converged,
        };
        for _ in 0..svs {
            let line = lines.next_line()?;
            let parts: Vec<&str> = line.split(' ').collect();
            if parts.len() != 3 {
                return Err(lines.err("expected `index alpha label`"));
            }
            let idx: usize = lines.parse(parts[0])?;
            if idx >= train_size {
                return Err(lines.err("support index out of range"));
            }
            let label: i8 = lines.parse(parts[2])?;
            if label != 1 && label != -1 {
                return Err(lines.err("label must be 1 or -1"));
            }
            model.support_indices.push(idx);
            model.alphas.push(lines.parse(parts[1])?);
            model.labels.push(label);
        }
        models.push(BinaryModel {
            positive,
            negative,
            model,
        });
    }
    Ok(MulticlassModel {
        strategy,
        class_names,
        kernel,
        train_size,
        models,
        train_accuracy,
    })
}
