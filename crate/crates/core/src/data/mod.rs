//! Tabular data: typed columns, CSV I/O, and the transforms that sit between
//! raw mixed-type records and the numeric feature vectors the explainers use.

pub mod correlation;
pub mod encoding;
pub mod grouping;
pub mod iris;
pub mod merlot;
pub mod wrapped;

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaTag {
    Iris,
    MerlotResources,
    MerlotRatings,
    #[default]
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
    /// Factorized categorical values, see [`encoding`].
    Codes(Vec<u32>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Codes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) => ColumnData::Categorical(rows.iter().map(|&i| v[i].clone()).collect()),
            ColumnData::Codes(v) => ColumnData::Codes(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, values: Vec<S>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Categorical(values.into_iter().map(Into::into).collect()),
        }
    }

    pub fn codes(name: impl Into<String>, values: Vec<u32>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Codes(values),
        }
    }

    pub fn is_categorical(&self) -> bool {
        !matches!(self.data, ColumnData::Numeric(_))
    }
}

/// A borrowed cell of a raw record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'a> {
    Num(f64),
    Text(&'a str),
}

impl<'a> Value<'a> {
    pub fn as_num(&self) -> Option<f64> {
        match *self {
            Value::Num(v) => Some(v),
            Value::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&'a str> {
        match *self {
            Value::Text(s) => Some(s),
            Value::Num(_) => None,
        }
    }
}

/// Rectangular, column-typed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
    pub schema_tag: SchemaTag,
}

impl Dataset {
    pub fn new(columns: Vec<Column>, schema_tag: SchemaTag) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |c| c.data.len());
        let mut names = BTreeSet::new();
        for column in &columns {
            if !names.insert(column.name.as_str()) {
                return Err(Error::Column {
                    column: column.name.clone(),
                    reason: "duplicate column name".into(),
                });
            }
            if column.data.len() != n_rows {
                return Err(Error::Dimension {
                    expected: n_rows,
                    actual: column.data.len(),
                    context: "column length",
                });
            }
            if let ColumnData::Numeric(values) = &column.data {
                if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Column {
                        column: column.name.clone(),
                        reason: format!("non-finite numeric value {bad}"),
                    });
                }
            }
        }
        Ok(Self {
            columns,
            n_rows,
            schema_tag,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Column> {
        self.columns
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match &self.column(name)?.data {
            ColumnData::Numeric(v) => Ok(v),
            _ => Err(Error::Column {
                column: name.into(),
                reason: "expected a numeric column".into(),
            }),
        }
    }

    pub fn categorical(&self, name: &str) -> Result<&[String]> {
        match &self.column(name)?.data {
            ColumnData::Categorical(v) => Ok(v),
            _ => Err(Error::Column {
                column: name.into(),
                reason: "expected a categorical column".into(),
            }),
        }
    }

    pub fn is_encoded(&self) -> bool {
        self.columns.iter().any(|c| matches!(c.data, ColumnData::Codes(_)))
    }

    pub fn row(&self, i: usize) -> Vec<Value<'_>> {
        self.columns
            .iter()
            .map(|c| match &c.data {
                ColumnData::Numeric(v) => Value::Num(v[i]),
                ColumnData::Categorical(v) => Value::Text(&v[i]),
                ColumnData::Codes(v) => Value::Num(f64::from(v[i])),
            })
            .collect()
    }

    /// Rows in the given order (indices may repeat).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n_rows) {
            return Err(Error::arg(format!(
                "row index {bad} out of bounds for {} rows",
                self.n_rows
            )));
        }
        Ok(Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.select(rows),
                })
                .collect(),
            n_rows: rows.len(),
            schema_tag: self.schema_tag,
        })
    }

    pub fn select_columns(&self, names: &[&str]) -> Result<Dataset> {
        let columns = names
            .iter()
            .map(|n| self.column(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(columns, SchemaTag::Generic)
    }

    pub fn drop_columns(&self, names: &[&str]) -> Dataset {
        Dataset {
            columns: self
                .columns
                .iter()
                .filter(|c| !names.contains(&c.name.as_str()))
                .cloned()
                .collect(),
            n_rows: self.n_rows,
            schema_tag: self.schema_tag,
        }
    }

    /// Numeric feature matrix; codes are widened to `f64`, categorical
    /// strings are rejected.
    pub fn to_matrix(&self) -> Result<Vec<Vec<f64>>> {
        for c in &self.columns {
            if let ColumnData::Categorical(_) = c.data {
                return Err(Error::Column {
                    column: c.name.clone(),
                    reason: "categorical column must be encoded before use as a feature".into(),
                });
            }
        }
        Ok((0..self.n_rows)
            .map(|i| {
                self.columns
                    .iter()
                    .map(|c| match &c.data {
                        ColumnData::Numeric(v) => v[i],
                        ColumnData::Codes(v) => f64::from(v[i]),
                        ColumnData::Categorical(_) => unreachable!(),
                    })
                    .collect()
            })
            .collect())
    }

    /// Rebuild a dataset from feature vectors, typing each column like the
    /// same-named column of `template`.
    pub fn from_matrix(template: &Dataset, rows: &[Vec<f64>]) -> Result<Dataset> {
        let mut columns = Vec::with_capacity(template.n_cols());
        for (j, c) in template.columns.iter().enumerate() {
            let data = match c.data {
                ColumnData::Numeric(_) => ColumnData::Numeric(rows.iter().map(|r| r[j]).collect()),
                ColumnData::Codes(_) => ColumnData::Codes(
                    rows.iter()
                        .map(|r| {
                            let v = r[j];
                            if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                                Ok(v as u32)
                            } else {
                                Err(Error::Column {
                                    column: c.name.clone(),
                                    reason: format!("{v} is not a valid code"),
                                })
                            }
                        })
                        .collect::<Result<Vec<_>>>()?,
                ),
                ColumnData::Categorical(_) => {
                    return Err(Error::Column {
                        column: c.name.clone(),
                        reason: "template column is not numeric".into(),
                    })
                }
            };
            columns.push(Column {
                name: c.name.clone(),
                data,
            });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != template.n_cols()) {
            return Err(Error::Dimension {
                expected: template.n_cols(),
                actual: r.len(),
                context: "matrix row",
            });
        }
        Dataset::new(columns, template.schema_tag)
    }

    /// Parse CSV with a header row. A column is numeric when every cell parses
    /// as a finite number, categorical otherwise.
    pub fn from_csv_reader<R: Read>(reader: R, schema_tag: SchemaTag) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for record in rdr.records() {
            let record = record?;
            for (j, field) in record.iter().enumerate() {
                cells[j].push(field.to_string());
            }
        }
        let columns = headers
            .into_iter()
            .zip(cells)
            .map(|(name, values)| {
                let parsed: Option<Vec<f64>> = values
                    .iter()
                    .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                    .collect();
                match parsed {
                    Some(nums) if !values.is_empty() => Column::numeric(name, nums),
                    _ => Column::categorical(name, values),
                }
            })
            .collect();
        Dataset::new(columns, schema_tag)
    }

    pub fn from_csv_path(path: impl AsRef<Path>, schema_tag: SchemaTag) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file), schema_tag)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        let mut record: Vec<String> = Vec::with_capacity(self.n_cols());
        for i in 0..self.n_rows {
            record.clear();
            for c in &self.columns {
                record.push(match &c.data {
                    ColumnData::Numeric(v) => format_number(v[i]),
                    ColumnData::Categorical(v) => v[i].clone(),
                    ColumnData::Codes(v) => v[i].to_string(),
                });
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::arg(e.to_string()))
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Integers print without a trailing `.0` so they round-trip as the same text.
pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}
