//! The embedded Iris dataset (150 rows, 4 features, 3 classes).

use super::{Dataset, SchemaTag};
use crate::error::Result;

pub const IRIS_CSV: &str = include_str!("../../assets/iris.csv");
pub const FEATURES: [&str; 4] = ["sepal_length", "sepal_width", "petal_length", "petal_width"];
pub const LABEL: &str = "species";

pub fn load() -> Result<Dataset> {
    Dataset::from_csv_reader(IRIS_CSV.as_bytes(), SchemaTag::Iris)
}

/// Class labels as dense indices in first-occurrence order, plus the names.
pub fn class_indices(labels: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut names: Vec<String> = Vec::new();
    let idx = labels
        .iter()
        .map(|l| match names.iter().position(|n| n == l) {
            Some(i) => i,
            None => {
                names.push(l.clone());
                names.len() - 1
            }
        })
        .collect();
    (idx, names)
}
