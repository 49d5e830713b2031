//! Factorization codebook for categorical columns.
//!
//! Codes are assigned densely from 0 in first-occurrence order. Rules are
//! keyed by column name, so the same codebook serves grouped and ungrouped
//! layouts as long as it was built from (or extended with) both.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Column, ColumnData, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ColumnCodebook {
    pub name: String,
    pub values: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl PartialEq for ColumnCodebook {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.values == other.values
    }
}

impl ColumnCodebook {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i as u32))
            .collect();
    }

    pub fn code(&self, value: &str) -> Option<u32> {
        self.index.get(value).copied()
    }

    pub fn value(&self, code: u32) -> Option<&str> {
        self.values.get(code as usize).map(String::as_str)
    }

    fn insert(&mut self, value: &str) -> u32 {
        if let Some(c) = self.code(value) {
            return c;
        }
        let c = self.values.len() as u32;
        self.values.push(value.to_string());
        self.index.insert(value.to_string(), c);
        c
    }
}

/// Per-column value-to-code maps, kept in column insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodingRules {
    pub columns: Vec<ColumnCodebook>,
}

impl EncodingRules {
    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn get(&self, column: &str) -> Option<&ColumnCodebook> {
        self.columns.iter().find(|c| c.name == column)
    }

    fn get_or_insert(&mut self, column: &str) -> &mut ColumnCodebook {
        match self.columns.iter().position(|c| c.name == column) {
            Some(i) => &mut self.columns[i],
            None => {
                self.columns.push(ColumnCodebook::new(column));
                self.columns.last_mut().unwrap()
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut rules: EncodingRules = serde_json::from_str(text)?;
        for c in &mut rules.columns {
            c.rebuild_index();
        }
        Ok(rules)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnseenPolicy {
    /// Unseen values are an error.
    #[default]
    Strict,
    /// Unseen values get the next free code and the rules are extended.
    FreshCode,
}

/// Encode categorical columns. Without `rules`, a codebook is built by
/// first-occurrence factorization; with `rules`, values are looked up and
/// handled per `policy` when absent. Returns the codebook actually used.
pub fn encode(data: &Dataset, rules: Option<&EncodingRules>, policy: UnseenPolicy) -> Result<(Dataset, EncodingRules)> {
    let building = rules.is_none();
    let mut out_rules = rules.cloned().unwrap_or_default();
    for c in &mut out_rules.columns {
        if c.index.len() != c.values.len() {
            c.rebuild_index();
        }
    }
    let mut columns = Vec::with_capacity(data.n_cols());
    for column in data.columns() {
        let data = match &column.data {
            ColumnData::Categorical(values) => {
                if !building && policy == UnseenPolicy::Strict && out_rules.get(&column.name).is_none() {
                    return Err(Error::Column {
                        column: column.name.clone(),
                        reason: "no encoding rules for this column".into(),
                    });
                }
                let book = out_rules.get_or_insert(&column.name);
                let mut codes = Vec::with_capacity(values.len());
                for v in values {
                    let code = match book.code(v) {
                        Some(c) => c,
                        None if building || policy == UnseenPolicy::FreshCode => book.insert(v),
                        None => {
                            return Err(Error::UnseenValue {
                                column: column.name.clone(),
                                value: v.clone(),
                            })
                        }
                    };
                    codes.push(code);
                }
                ColumnData::Codes(codes)
            }
            other => other.clone(),
        };
        columns.push(Column {
            name: column.name.clone(),
            data,
        });
    }
    Ok((Dataset::new(columns, data.schema_tag)?, out_rules))
}

/// Exact inverse of [`encode`] under the same rules.
pub fn decode(encoded: &Dataset, rules: &EncodingRules) -> Result<Dataset> {
    let mut columns = Vec::with_capacity(encoded.n_cols());
    for column in encoded.columns() {
        let data = match &column.data {
            ColumnData::Codes(codes) => {
                let book = rules.get(&column.name).ok_or_else(|| Error::Column {
                    column: column.name.clone(),
                    reason: "no encoding rules for this column".into(),
                })?;
                ColumnData::Categorical(
                    codes
                        .iter()
                        .map(|&code| {
                            book.value(code).map(str::to_string).ok_or_else(|| Error::UnknownCode {
                                column: column.name.clone(),
                                code,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            other => other.clone(),
        };
        columns.push(Column {
            name: column.name.clone(),
            data,
        });
    }
    Dataset::new(columns, encoded.schema_tag)
}
