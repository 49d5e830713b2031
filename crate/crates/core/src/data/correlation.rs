//! Mixed-type association matrix: Pearson r for numeric pairs, Cramér's V for
//! categorical pairs and the correlation ratio (eta) for mixed pairs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ColumnData, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Identity,
    Pearson,
    CramersV,
    CorrelationRatio,
}

/// Symmetric matrix; `None` marks an undefined entry (e.g. a constant column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub methods: Vec<Vec<Method>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub a: String,
    pub b: String,
    pub value: f64,
    pub method: Method,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.values[i][j]
    }

    /// Largest off-diagonal absolute association.
    pub fn max_off_diagonal(&self) -> Option<Extremum> {
        let mut best: Option<Extremum> = None;
        for i in 0..self.names.len() {
            for j in (i + 1)..self.names.len() {
                if let Some(v) = self.values[i][j] {
                    if best.as_ref().is_none_or(|b| v.abs() > b.value.abs()) {
                        best = Some(Extremum {
                            a: self.names[i].clone(),
                            b: self.names[j].clone(),
                            value: v,
                            method: self.methods[i][j],
                        });
                    }
                }
            }
        }
        best
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("feature");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, n) in self.names.iter().enumerate() {
            out.push_str(n);
            for v in &self.values[i] {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

enum Kind<'a> {
    Numeric(&'a [f64]),
    Categorical(Vec<usize>, usize),
}

fn factorize<T: std::hash::Hash + Eq>(values: impl Iterator<Item = T>) -> (Vec<usize>, usize) {
    let mut seen = HashMap::new();
    let codes = values
        .map(|v| {
            let n = seen.len();
            *seen.entry(v).or_insert(n)
        })
        .collect();
    (codes, seen.len())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Cramér's V without bias correction: `sqrt(chi2 / (n (min(r, c) - 1)))`.
pub fn cramers_v(a: &[usize], ra: usize, b: &[usize], rb: usize) -> Option<f64> {
    let k = ra.min(rb);
    if k < 2 {
        return None;
    }
    let n = a.len() as f64;
    let mut table = vec![0.0f64; ra * rb];
    let mut row = vec![0.0f64; ra];
    let mut col = vec![0.0f64; rb];
    for (&i, &j) in a.iter().zip(b) {
        table[i * rb + j] += 1.0;
        row[i] += 1.0;
        col[j] += 1.0;
    }
    let mut chi2 = 0.0;
    for i in 0..ra {
        for j in 0..rb {
            let expected = row[i] * col[j] / n;
            let d = table[i * rb + j] - expected;
            chi2 += d * d / expected;
        }
    }
    Some((chi2 / (n * (k as f64 - 1.0))).sqrt().clamp(0.0, 1.0))
}

/// Correlation ratio of a numeric variable across categories.
pub fn correlation_ratio(categories: &[usize], n_categories: usize, values: &[f64]) -> Option<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sums = vec![0.0; n_categories];
    let mut counts = vec![0.0; n_categories];
    for (&c, &v) in categories.iter().zip(values) {
        sums[c] += v;
        counts[c] += 1.0;
    }
    let total: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    if total <= 0.0 {
        return None;
    }
    let between: f64 = sums
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0.0)
        .map(|(s, c)| c * (s / c - mean).powi(2))
        .sum();
    Some((between / total).sqrt().clamp(0.0, 1.0))
}

pub fn correlation_matrix(data: &Dataset) -> Result<CorrelationMatrix> {
    if data.n_rows() < 2 {
        return Err(Error::arg("correlation needs at least 2 rows"));
    }
    let kinds: Vec<Kind<'_>> = data
        .columns()
        .iter()
        .map(|c| match &c.data {
            ColumnData::Numeric(v) => Kind::Numeric(v),
            ColumnData::Categorical(v) => {
                let (codes, n) = factorize(v.iter());
                Kind::Categorical(codes, n)
            }
            ColumnData::Codes(v) => {
                let (codes, n) = factorize(v.iter());
                Kind::Categorical(codes, n)
            }
        })
        .collect();
    let p = kinds.len();
    let mut values = vec![vec![None; p]; p];
    let mut methods = vec![vec![Method::Identity; p]; p];
    for i in 0..p {
        values[i][i] = Some(1.0);
        for j in (i + 1)..p {
            let (v, m) = match (&kinds[i], &kinds[j]) {
                (Kind::Numeric(x), Kind::Numeric(y)) => (pearson(x, y), Method::Pearson),
                (Kind::Categorical(a, ra), Kind::Categorical(b, rb)) => (cramers_v(a, *ra, b, *rb), Method::CramersV),
                (Kind::Categorical(c, k), Kind::Numeric(x)) | (Kind::Numeric(x), Kind::Categorical(c, k)) => {
                    (correlation_ratio(c, *k, x), Method::CorrelationRatio)
                }
            };
            values[i][j] = v;
            values[j][i] = v;
            methods[i][j] = m;
            methods[j][i] = m;
        }
    }
    Ok(CorrelationMatrix {
        names: data.names().iter().map(|s| s.to_string()).collect(),
        values,
        methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, SchemaTag};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_association_and_duplicates() {
        let a = vec!["x", "y", "z", "x", "y", "x"];
        let d = Dataset::new(
            vec![
                Column::categorical("a", a.clone()),
                Column::categorical("b", a),
                Column::numeric("n", vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
                Column::numeric("c", vec![2.0; 6]),
            ],
            SchemaTag::Generic,
        )
        .unwrap();
        let m = correlation_matrix(&d).unwrap();
        assert_eq!(m.get("a", "a"), Some(1.0));
        assert!((m.get("a", "b").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.get("n", "c"), None);
        assert_eq!(m.methods[0][2], Method::CorrelationRatio);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
        let top = m.max_off_diagonal().unwrap();
        assert_eq!((top.a.as_str(), top.b.as_str()), ("a", "b"));
    }

    #[test]
    fn independent_columns_have_small_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        let v = cramers_v(&a, 4, &b, 5).unwrap();
        assert!(v < 0.1, "V = {v}");
    }

    #[test]
    fn pearson_known_values() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &[2.0, 4.0, 6.0, 8.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&x, &[8.0, 6.0, 4.0, 2.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_of_perfect_grouping_is_one() {
        let cats = [0, 0, 1, 1];
        let vals = [1.0, 1.0, 5.0, 5.0];
        assert!((correlation_ratio(&cats, 2, &vals).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_rows() {
        let d = Dataset::new(vec![Column::numeric("x", vec![1.0])], SchemaTag::Generic).unwrap();
        assert!(correlation_matrix(&d).is_err());
    }
}
