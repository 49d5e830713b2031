//! Joining the four discipline level columns into one `disciplines` feature
//! and splitting it back.

use super::{Column, ColumnData, Dataset};
use crate::error::{Error, Result};

pub const LEVEL_COLUMNS: [&str; 4] = [
    "discipline_level_0",
    "discipline_level_1",
    "discipline_level_2",
    "discipline_level_3",
];
pub const GROUPED_COLUMN: &str = "disciplines";
pub const SEPARATOR: char = '/';

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Ungrouped,
    Grouped,
    /// No discipline columns at all.
    Plain,
}

/// Detected by column names.
pub fn layout_of(data: &Dataset) -> Layout {
    layout_of_names(&data.names())
}

pub fn layout_of_names(names: &[&str]) -> Layout {
    if names.contains(&GROUPED_COLUMN) {
        Layout::Grouped
    } else if LEVEL_COLUMNS.iter().all(|l| names.contains(l)) {
        Layout::Ungrouped
    } else {
        Layout::Plain
    }
}

/// Join a path of level values.
pub fn join_levels(levels: &[&str]) -> String {
    levels.join("/")
}

/// Split a grouped value into exactly four levels.
pub fn split_levels(value: &str) -> Result<[&str; 4]> {
    let mut it = value.split(SEPARATOR);
    let mut out = [""; 4];
    for slot in &mut out {
        *slot = it.next().ok_or_else(|| Error::MalformedGroup(value.to_string()))?;
    }
    if it.next().is_some() {
        return Err(Error::MalformedGroup(value.to_string()));
    }
    Ok(out)
}

/// Replace the four level columns with a single `disciplines` column placed
/// where `discipline_level_0` was.
pub fn group_disciplines(data: &Dataset) -> Result<Dataset> {
    let mut levels: Vec<&[String]> = Vec::with_capacity(4);
    for name in LEVEL_COLUMNS {
        match &data.column(name)?.data {
            ColumnData::Categorical(v) => levels.push(v),
            _ => {
                return Err(Error::Column {
                    column: name.into(),
                    reason: "discipline levels must be decoded strings to be grouped".into(),
                })
            }
        }
    }
    let mut joined = Vec::with_capacity(data.n_rows());
    for i in 0..data.n_rows() {
        let row: Vec<&str> = levels.iter().map(|l| l[i].as_str()).collect();
        if let Some(bad) = row.iter().find(|v| v.contains(SEPARATOR)) {
            return Err(Error::Column {
                column: GROUPED_COLUMN.into(),
                reason: format!("level value `{bad}` contains the separator '/'"),
            });
        }
        joined.push(join_levels(&row));
    }
    let mut joined = Some(joined);
    let mut columns = Vec::with_capacity(data.n_cols() - 3);
    for column in data.columns() {
        if column.name == LEVEL_COLUMNS[0] {
            columns.push(Column::categorical(GROUPED_COLUMN, joined.take().unwrap()));
        } else if !LEVEL_COLUMNS.contains(&column.name.as_str()) {
            columns.push(column.clone());
        }
    }
    Dataset::new(columns, data.schema_tag)
}

/// Inverse of [`group_disciplines`].
pub fn ungroup_disciplines(data: &Dataset) -> Result<Dataset> {
    let grouped = match &data.column(GROUPED_COLUMN)?.data {
        ColumnData::Categorical(v) => v,
        _ => {
            return Err(Error::Column {
                column: GROUPED_COLUMN.into(),
                reason: "grouped disciplines must be decoded strings to be ungrouped".into(),
            })
        }
    };
    let mut levels: [Vec<String>; 4] = Default::default();
    for value in grouped {
        for (slot, part) in levels.iter_mut().zip(split_levels(value)?) {
            slot.push(part.to_string());
        }
    }
    let mut levels = Some(levels);
    let mut columns = Vec::with_capacity(data.n_cols() + 3);
    for column in data.columns() {
        if column.name == GROUPED_COLUMN {
            for (name, values) in LEVEL_COLUMNS.iter().zip(levels.take().unwrap()) {
                columns.push(Column::categorical(*name, values));
            }
        } else {
            columns.push(column.clone());
        }
    }
    Dataset::new(columns, data.schema_tag)
}
