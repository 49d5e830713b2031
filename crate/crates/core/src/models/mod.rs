//! Models behind one numeric prediction contract.

pub mod extraction;
pub mod recommender;
pub mod svm;

use serde::{Deserialize, Serialize};

/// What a model's outputs mean, and so how they become class decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputKind {
    /// Thresholded at 0.5.
    Probability,
    /// Signed decision values, thresholded at 0.
    Margin,
    /// 0/1 labels, thresholded at 0.5.
    ClassLabel,
    /// Bounded score with its own decision threshold.
    Score { threshold: f64 },
}

impl OutputKind {
    pub fn threshold(self) -> f64 {
        match self {
            OutputKind::Probability | OutputKind::ClassLabel => 0.5,
            OutputKind::Margin => 0.0,
            OutputKind::Score { threshold } => threshold,
        }
    }
}

/// Slack for threshold comparisons on averaged scores.
const DECISION_EPS: f64 = 1e-9;

/// Class decision for one output vector: threshold for single-output models,
/// argmax (lowest index on ties) otherwise.
pub fn decide(kind: OutputKind, outputs: &[f64]) -> usize {
    if outputs.len() == 1 {
        usize::from(outputs[0] >= kind.threshold() - DECISION_EPS)
    } else {
        let mut best = 0;
        for (i, &v) in outputs.iter().enumerate().skip(1) {
            if v > outputs[best] {
                best = i;
            }
        }
        best
    }
}

/// Deterministic row-wise model over numeric feature vectors.
pub trait PredictFunction: Sync {
    /// Number of input features.
    fn arity(&self) -> usize;

    fn n_outputs(&self) -> usize {
        1
    }

    fn output_kind(&self) -> OutputKind;

    /// Write the model outputs for `row` into `out` (`out.len() == n_outputs`).
    fn predict_into(&self, row: &[f64], out: &mut [f64]);

    /// `false` when the model must not be invoked concurrently.
    fn concurrent(&self) -> bool {
        true
    }

    fn predict(&self, row: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_outputs()];
        self.predict_into(row, &mut out);
        out
    }

    fn predict_scalar(&self, row: &[f64]) -> f64 {
        self.predict(row)[0]
    }

    fn decide_row(&self, row: &[f64]) -> usize {
        decide(self.output_kind(), &self.predict(row))
    }
}

impl<M: PredictFunction + ?Sized> PredictFunction for &M {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn n_outputs(&self) -> usize {
        (**self).n_outputs()
    }
    fn output_kind(&self) -> OutputKind {
        (**self).output_kind()
    }
    fn predict_into(&self, row: &[f64], out: &mut [f64]) {
        (**self).predict_into(row, out)
    }
    fn concurrent(&self) -> bool {
        (**self).concurrent()
    }
}

/// A closure as a single-output model.
pub struct FnModel<F> {
    arity: usize,
    kind: OutputKind,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnModel<F> {
    pub fn new(arity: usize, kind: OutputKind, f: F) -> Self {
        Self { arity, kind, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> PredictFunction for FnModel<F> {
    fn arity(&self) -> usize {
        self.arity
    }
    fn output_kind(&self) -> OutputKind {
        self.kind
    }
    fn predict_into(&self, row: &[f64], out: &mut [f64]) {
        out[0] = (self.f)(row);
    }
}

/// One output of a multi-output model, as a single-output model.
pub struct SelectOutput<M> {
    pub model: M,
    pub index: usize,
}

impl<M: PredictFunction> PredictFunction for SelectOutput<M> {
    fn arity(&self) -> usize {
        self.model.arity()
    }
    fn output_kind(&self) -> OutputKind {
        self.model.output_kind()
    }
    fn predict_into(&self, row: &[f64], out: &mut [f64]) {
        let mut all = vec![0.0; self.model.n_outputs()];
        self.model.predict_into(row, &mut all);
        out[0] = all[self.index];
    }
    fn concurrent(&self) -> bool {
        self.model.concurrent()
    }
}

/// Share of rows whose decision equals the label.
pub fn accuracy<M: PredictFunction + ?Sized>(model: &M, rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let hits = rows
        .iter()
        .zip(labels)
        .filter(|(r, &l)| model.decide_row(r) == l)
        .count();
    hits as f64 / rows.len() as f64
}
