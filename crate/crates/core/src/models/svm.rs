//! C-SVM classifier trained by SMO on the dual, one-vs-rest for more than two
//! classes.
//!
//! Working-set selection uses the maximal violating pair with second-order
//! gain for the second index, and the bias is taken from the free support
//! vectors (midpoint of the feasible range when there are none).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{OutputKind, PredictFunction};
use crate::data::{ColumnData, Dataset};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelChoice {
    Linear,
    /// `gamma = None` uses `1 / (p * var(X))`.
    Rbf {
        gamma: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub kernel: KernelChoice,
    /// Box constraint.
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            kernel: KernelChoice::Rbf { gamma: None },
            c: 1.0,
            tolerance: 1e-3,
            max_iterations: 100_000,
        }
    }
}

/// One binary machine: `f(x) = sum_i coef_i K(sv_i, x) + bias`, where
/// `coef_i = alpha_i y_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    /// Training row indices of the support vectors.
    pub support_indices: Vec<usize>,
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub kkt_violation: f64,
}

impl BinarySvm {
    pub fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, c)| c * kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
    /// One machine for two classes (positive = `classes[1]`), otherwise one
    /// per class against the rest.
    pub machines: Vec<BinarySvm>,
    pub config: SvmConfig,
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Decision values: one margin for binary models, one per class otherwise.
    pub fn decision_function(&self, x: &[f64]) -> Vec<f64> {
        self.machines.iter().map(|m| m.decision(&self.kernel, x)).collect()
    }

    pub fn predict_class(&self, x: &[f64]) -> usize {
        super::decide(OutputKind::Margin, &self.decision_function(x))
    }

    /// For each machine, the class each of its positive-side rows belongs to.
    pub fn machine_class(&self, machine: usize) -> usize {
        if self.classes.len() == 2 {
            1
        } else {
            machine
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl PredictFunction for SvmModel {
    fn arity(&self) -> usize {
        self.n_features()
    }
    fn n_outputs(&self) -> usize {
        self.machines.len()
    }
    fn output_kind(&self) -> OutputKind {
        OutputKind::Margin
    }
    fn predict_into(&self, row: &[f64], out: &mut [f64]) {
        for (o, m) in out.iter_mut().zip(&self.machines) {
            *o = m.decision(&self.kernel, row);
        }
    }
}

/// Numeric features and class indices from a dataset with a categorical (or
/// numeric) label column.
pub fn features_and_labels(
    data: &Dataset,
    label: &str,
) -> Result<(Vec<Vec<f64>>, Vec<usize>, Vec<String>, Vec<String>)> {
    let features = data.drop_columns(&[label]);
    for c in features.columns() {
        if !matches!(c.data, ColumnData::Numeric(_)) {
            return Err(Error::Column {
                column: c.name.clone(),
                reason: "SVM features must be numeric".into(),
            });
        }
    }
    let raw: Vec<String> = match &data.column(label)?.data {
        ColumnData::Categorical(v) => v.clone(),
        ColumnData::Numeric(v) => v.iter().map(|x| crate::data::format_number(*x)).collect(),
        ColumnData::Codes(v) => v.iter().map(u32::to_string).collect(),
    };
    let (labels, classes) = crate::data::iris::class_indices(&raw);
    let names = features.names().iter().map(|s| s.to_string()).collect();
    Ok((features.to_matrix()?, labels, classes, names))
}

pub fn train_svm(data: &Dataset, label: &str, config: &SvmConfig) -> Result<SvmModel> {
    let (x, y, classes, names) = features_and_labels(data, label)?;
    train_svm_matrix(&x, &y, classes, names, config)
}

pub fn train_svm_matrix(
    x: &[Vec<f64>],
    labels: &[usize],
    classes: Vec<String>,
    feature_names: Vec<String>,
    config: &SvmConfig,
) -> Result<SvmModel> {
    if x.len() != labels.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: labels.len(),
            context: "labels",
        });
    }
    let p = feature_names.len();
    if let Some(r) = x.iter().find(|r| r.len() != p) {
        return Err(Error::Dimension {
            expected: p,
            actual: r.len(),
            context: "feature row",
        });
    }
    if classes.len() < 2 {
        return Err(Error::arg("SVM training needs at least 2 classes"));
    }
    for c in 0..classes.len() {
        let n = labels.iter().filter(|&&l| l == c).count();
        if n < 2 {
            return Err(Error::arg(format!(
                "class `{}` has {n} rows; at least 2 are required",
                classes[c]
            )));
        }
    }
    if !(config.c > 0.0) || !(config.tolerance > 0.0) {
        return Err(Error::arg("C and tolerance must be positive"));
    }
    let kernel = match config.kernel {
        KernelChoice::Linear => Kernel::Linear,
        KernelChoice::Rbf { gamma: Some(g) } if g > 0.0 => Kernel::Rbf { gamma: g },
        KernelChoice::Rbf { gamma: Some(g) } => return Err(Error::arg(format!("gamma must be positive, got {g}"))),
        KernelChoice::Rbf { gamma: None } => Kernel::Rbf {
            gamma: scale_gamma(x, p),
        },
    };
    let gram = gram_matrix(&kernel, x);
    let positives: Vec<usize> = if classes.len() == 2 {
        vec![1]
    } else {
        (0..classes.len()).collect()
    };
    let machines = positives
        .into_iter()
        .map(|pos| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == pos { 1.0 } else { -1.0 }).collect();
            solve_binary(&gram, x, &y, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmModel {
        kernel,
        classes,
        feature_names,
        machines,
        config: *config,
    })
}

fn scale_gamma(x: &[Vec<f64>], p: usize) -> f64 {
    let n = (x.len() * p) as f64;
    let mean = x.iter().flatten().sum::<f64>() / n;
    let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (p as f64 * var)
    } else {
        1.0
    }
}

fn gram_matrix(kernel: &Kernel, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&x[i], &x[j]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

/// Dual: min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0, Q_ij = y_i y_j K_ij.
fn solve_binary(k: &[Vec<f64>], x: &[Vec<f64>], y: &[f64], config: &SvmConfig) -> Result<BinarySvm> {
    let n = y.len();
    let c = config.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_up = |a: f64, yt: f64| if yt > 0.0 { a < c } else { a > 0.0 };
    let is_low = |a: f64, yt: f64| if yt > 0.0 { a > 0.0 } else { a < c };

    let mut iterations = 0;
    let mut violation;
    loop {
        // i: maximal -y G over I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if is_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v >= gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        // j: second-order gain over I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if !is_low(alpha[t], y[t]) {
                continue;
            }
            let v = y[t] * grad[t];
            if v >= gmax2 {
                gmax2 = v;
            }
            if i_sel == usize::MAX {
                continue;
            }
            let diff = gmax + v;
            if diff > 0.0 {
                let quad = k[i_sel][i_sel] + k[t][t] - 2.0 * k[i_sel][t];
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best_obj {
                    best_obj = obj;
                    j_sel = t;
                }
            }
        }
        violation = gmax + gmax2;
        if violation < config.tolerance || i_sel == usize::MAX || j_sel == usize::MAX {
            break;
        }
        if iterations >= config.max_iterations {
            return Err(Error::NotConverged { iterations, violation });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let mut quad = k[i][i] + k[j][j] - 2.0 * k[i][j];
        if quad <= 0.0 {
            quad = TAU;
        }
        let (mut ai, mut aj) = (old_ai, old_aj);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (dai, daj) = (ai - old_ai, aj - old_aj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k[i][t] * dai + y[j] * k[j][t] * daj);
        }
    }

    // bias from free vectors: decision = sum a_i y_i K - rho
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };

    let support_indices: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(BinarySvm {
        support_vectors: support_indices.iter().map(|&t| x[t].clone()).collect(),
        dual_coefficients: support_indices.iter().map(|&t| alpha[t] * y[t]).collect(),
        support_indices,
        bias: -rho,
        iterations,
        kkt_violation: violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::iris;
    use crate::models::accuracy;

    fn blobs() -> (Vec<Vec<f64>>, Vec<usize>) {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.5, 0.2],
            vec![0.2, 0.6],
            vec![3.0, 3.0],
            vec![3.5, 2.8],
            vec![2.7, 3.6],
        ];
        (x, vec![0, 0, 0, 1, 1, 1])
    }

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    fn tight(kernel: KernelChoice) -> SvmConfig {
        SvmConfig {
            kernel,
            c: 10.0,
            tolerance: 1e-8,
            max_iterations: 100_000,
        }
    }

    #[test]
    fn two_point_set_is_separated() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let m = train_svm_matrix(
            &x,
            &[0, 1],
            vec!["a".into(), "b".into()],
            names(2),
            &tight(KernelChoice::Linear),
        );
        // two rows per class are required
        assert!(m.is_err());
        let x = vec![vec![0.0, 1.0], vec![0.0, 1.1], vec![1.0, 0.0], vec![1.1, 0.0]];
        let m = train_svm_matrix(
            &x,
            &[0, 0, 1, 1],
            vec!["a".into(), "b".into()],
            names(2),
            &tight(KernelChoice::Linear),
        )
        .unwrap();
        assert_eq!(accuracy(&m, &x, &[0, 0, 1, 1]), 1.0);
    }

    #[test]
    fn separable_blobs_and_box_constraint() {
        let (x, y) = blobs();
        for kernel in [KernelChoice::Linear, KernelChoice::Rbf { gamma: Some(0.5) }] {
            let cfg = tight(kernel);
            let m = train_svm_matrix(&x, &y, vec!["a".into(), "b".into()], names(2), &cfg).unwrap();
            assert_eq!(accuracy(&m, &x, &y), 1.0);
            assert!(m.machines[0].kkt_violation < cfg.tolerance);
            let sum: f64 = m.machines[0].dual_coefficients.iter().sum();
            assert!(sum.abs() < 1e-9, "y'alpha = {sum}");
            for c in &m.machines[0].dual_coefficients {
                assert!(c.abs() <= cfg.c + 1e-12);
            }
        }
    }

    #[test]
    fn duplicated_rows_give_same_decision_function() {
        let (x, y) = blobs();
        let cfg = tight(KernelChoice::Linear);
        let m1 = train_svm_matrix(&x, &y, vec!["a".into(), "b".into()], names(2), &cfg).unwrap();
        let mut x2 = x.clone();
        x2.extend(x.iter().cloned());
        let mut y2 = y.clone();
        y2.extend(y.iter().copied());
        let m2 = train_svm_matrix(&x2, &y2, vec!["a".into(), "b".into()], names(2), &cfg).unwrap();
        for probe in [[0.0, 0.0], [1.5, 1.5], [4.0, -1.0], [-2.0, 3.0]] {
            let (a, b) = (m1.decision_function(&probe)[0], m2.decision_function(&probe)[0]);
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn row_permutation_invariance() {
        let (x, y) = blobs();
        let cfg = tight(KernelChoice::Rbf { gamma: Some(0.3) });
        let m1 = train_svm_matrix(&x, &y, vec!["a".into(), "b".into()], names(2), &cfg).unwrap();
        let order = [4, 1, 5, 0, 3, 2];
        let xp: Vec<_> = order.iter().map(|&i| x[i].clone()).collect();
        let yp: Vec<_> = order.iter().map(|&i| y[i]).collect();
        let m2 = train_svm_matrix(&xp, &yp, vec!["a".into(), "b".into()], names(2), &cfg).unwrap();
        for probe in [[0.0, 0.0], [1.5, 1.5], [2.0, 3.0]] {
            let (a, b) = (m1.decision_function(&probe)[0], m2.decision_function(&probe)[0]);
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn iris_training_accuracy() {
        let data = iris::load().unwrap();
        let m = train_svm(&data, iris::LABEL, &SvmConfig::default()).unwrap();
        let (x, y, _, _) = features_and_labels(&data, iris::LABEL).unwrap();
        let acc = accuracy(&m, &x, &y);
        assert!(acc >= 0.95, "accuracy {acc}");
        assert_eq!(m.machines.len(), 3);
        let back = SvmModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn non_convergence_reports_violation() {
        let data = iris::load().unwrap();
        let cfg = SvmConfig {
            max_iterations: 2,
            ..SvmConfig::default()
        };
        match train_svm(&data, iris::LABEL, &cfg) {
            Err(Error::NotConverged { iterations, violation }) => {
                assert_eq!(iterations, 2);
                assert!(violation > cfg.tolerance);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_categorical_features() {
        use crate::data::{Column, SchemaTag};
        let d = Dataset::new(
            vec![
                Column::categorical("colour", vec!["r", "g", "r", "g"]),
                Column::categorical("label", vec!["a", "a", "b", "b"]),
            ],
            SchemaTag::Generic,
        )
        .unwrap();
        assert!(train_svm(&d, "label", &SvmConfig::default()).is_err());
    }
}
