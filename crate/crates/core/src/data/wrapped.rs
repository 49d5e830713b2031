//! Predict surface over encoded, possibly grouped rows: decode, ungroup, then
//! call the record-level model.

use super::encoding::{decode, ColumnCodebook, EncodingRules};
use super::grouping::{layout_of, split_levels, ungroup_disciplines, Layout, GROUPED_COLUMN, LEVEL_COLUMNS};
use super::{ColumnData, Dataset, Value};
use crate::error::{Error, Result};
use crate::models::{OutputKind, PredictFunction};

/// A model over raw records, resolved against a column layout once.
pub trait RecordModel: Sync {
    type Bound<'a>: BoundRecord + Sync
    where
        Self: 'a;

    fn bind<'a>(&'a self, columns: &[&str]) -> Result<Self::Bound<'a>>;

    fn output_kind(&self) -> OutputKind;
}

pub trait BoundRecord {
    fn predict(&self, row: &[Value<'_>]) -> f64;
}

/// Raw, ungrouped view of `data`, whatever its encoding and grouping.
pub fn normalize(data: &Dataset, rules: &EncodingRules) -> Result<Dataset> {
    let decoded = if data.is_encoded() {
        decode(data, rules)?
    } else {
        data.clone()
    };
    match layout_of(&decoded) {
        Layout::Grouped => ungroup_disciplines(&decoded),
        _ => Ok(decoded),
    }
}

/// Model outputs for every row, in input order.
pub fn wrapped_predict<M: RecordModel>(data: &Dataset, model: &M, rules: &EncodingRules) -> Result<Vec<f64>> {
    let raw = normalize(data, rules)?;
    let bound = model.bind(&raw.names())?;
    Ok((0..raw.n_rows()).map(|i| bound.predict(&raw.row(i))).collect())
}

enum Slot<'r> {
    Numeric,
    Code(&'r ColumnCodebook),
    Grouped(&'r ColumnCodebook),
}

/// [`wrapped_predict`] as a [`PredictFunction`] over numeric rows laid out
/// like `template` (codes stored as floats).
pub struct WrappedPredict<'m, M: RecordModel + 'm> {
    bound: M::Bound<'m>,
    kind: OutputKind,
    slots: Vec<Slot<'m>>,
    width: usize,
}

impl<'m, M: RecordModel> WrappedPredict<'m, M> {
    pub fn new(model: &'m M, template: &Dataset, rules: &'m EncodingRules) -> Result<Self> {
        let mut slots = Vec::with_capacity(template.n_cols());
        let mut raw_names: Vec<&str> = Vec::new();
        for column in template.columns() {
            let book = || {
                rules.get(&column.name).ok_or_else(|| Error::Column {
                    column: column.name.clone(),
                    reason: "no encoding rules for this column".into(),
                })
            };
            match (&column.data, column.name.as_str()) {
                (ColumnData::Codes(_), GROUPED_COLUMN) => {
                    slots.push(Slot::Grouped(book()?));
                    raw_names.extend(LEVEL_COLUMNS);
                }
                (ColumnData::Codes(_), name) => {
                    slots.push(Slot::Code(book()?));
                    raw_names.push(name);
                }
                (ColumnData::Numeric(_), name) => {
                    slots.push(Slot::Numeric);
                    raw_names.push(name);
                }
                (ColumnData::Categorical(_), _) => {
                    return Err(Error::Column {
                        column: column.name.clone(),
                        reason: "template must be encoded".into(),
                    })
                }
            }
        }
        for slot in &slots {
            if let Slot::Grouped(book) = slot {
                for v in &book.values {
                    split_levels(v)?;
                }
            }
        }
        let bound = model.bind(&raw_names)?;
        Ok(Self {
            bound,
            kind: model.output_kind(),
            width: slots.len(),
            slots,
        })
    }
}

fn code_of(v: f64) -> Option<u32> {
    (v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX)).then_some(v as u32)
}

impl<M: RecordModel> PredictFunction for WrappedPredict<'_, M> {
    fn arity(&self) -> usize {
        self.width
    }

    fn output_kind(&self) -> OutputKind {
        self.kind
    }

    /// Codes missing from the codebook decode to an empty string.
    fn predict_into(&self, row: &[f64], out: &mut [f64]) {
        let mut raw: Vec<Value<'_>> = Vec::with_capacity(self.width + 3);
        for (slot, &v) in self.slots.iter().zip(row) {
            match slot {
                Slot::Numeric => raw.push(Value::Num(v)),
                Slot::Code(book) => raw.push(Value::Text(code_of(v).and_then(|c| book.value(c)).unwrap_or(""))),
                Slot::Grouped(book) => {
                    let levels = code_of(v)
                        .and_then(|c| book.value(c))
                        .and_then(|s| split_levels(s).ok())
                        .unwrap_or([""; 4]);
                    raw.extend(levels.map(Value::Text));
                }
            }
        }
        out[0] = self.bound.predict(&raw);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::encoding::{encode, UnseenPolicy};
    use crate::data::grouping::group_disciplines;
    use crate::data::merlot::synthesize_merlot;
    use crate::models::recommender::{Recommender, UserProfile};

    #[test]
    fn transform_invariance() {
        let (res, _) = synthesize_merlot(120, 1, 11, 0.9).unwrap();
        let rs = Recommender::new(UserProfile::default()).unwrap();
        let direct = wrapped_predict(&res, &rs, &EncodingRules::default()).unwrap();
        let grouped = group_disciplines(&res).unwrap();
        let (enc, rules) = encode(&res, None, UnseenPolicy::Strict).unwrap();
        let (enc_g, rules_g) = encode(&grouped, None, UnseenPolicy::Strict).unwrap();
        assert_eq!(
            wrapped_predict(&grouped, &rs, &EncodingRules::default()).unwrap(),
            direct
        );
        assert_eq!(wrapped_predict(&enc, &rs, &rules).unwrap(), direct);
        assert_eq!(wrapped_predict(&enc_g, &rs, &rules_g).unwrap(), direct);

        for (data, rules) in [(&enc, &rules), (&enc_g, &rules_g)] {
            let f = WrappedPredict::new(&rs, data, rules).unwrap();
            let rows = data.to_matrix().unwrap();
            let via: Vec<f64> = rows.iter().map(|r| f.predict_scalar(r)).collect();
            assert_eq!(via, direct);
        }
    }

    #[test]
    fn single_row() {
        let (res, _) = synthesize_merlot(5, 1, 1, 0.9).unwrap();
        let one = res.select_rows(&[3]).unwrap();
        let rs = Recommender::new(UserProfile::default()).unwrap();
        assert_eq!(wrapped_predict(&one, &rs, &EncodingRules::default()).unwrap().len(), 1);
    }

    #[test]
    fn unknown_code_is_an_error() {
        let (res, _) = synthesize_merlot(5, 1, 1, 0.9).unwrap();
        let (enc, mut rules) = encode(&res, None, UnseenPolicy::Strict).unwrap();
        rules.columns.retain(|c| c.name != "language");
        let rs = Recommender::new(UserProfile::default()).unwrap();
        assert!(wrapped_predict(&enc, &rs, &rules).is_err());
    }
}
