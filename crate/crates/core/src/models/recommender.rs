//! Content-based recommender: an item is recommended when every constrained
//! attribute matches the user's preference sets and the item's age range
//! overlaps the user's.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::OutputKind;
use crate::data::grouping::{LEVEL_COLUMNS, SEPARATOR};
use crate::data::wrapped::{BoundRecord, RecordModel};
use crate::data::{Dataset, Value};
use crate::error::{Error, Result};
use crate::taxonomy::{Aggregation, Clause, Rule, RuleSet};

/// Preference sets. An empty set leaves that attribute unconstrained; the
/// age constraint applies when both bounds are present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    #[serde(default)]
    pub disciplines: BTreeSet<String>,
    #[serde(default)]
    pub language: BTreeSet<String>,
    #[serde(default)]
    pub difficulty: BTreeSet<String>,
    #[serde(default)]
    pub duration: BTreeSet<String>,
    #[serde(default)]
    pub format: BTreeSet<String>,
    #[serde(default, rename = "type")]
    pub kind: BTreeSet<String>,
    #[serde(default)]
    pub min_age: Option<i64>,
    #[serde(default)]
    pub max_age: Option<i64>,
}

fn set(values: &[&str]) -> BTreeSet<String> {
    values.iter().map(|s| s.to_string()).collect()
}

impl Default for UserProfile {
    /// The simulated learner: Business resources in English of medium
    /// difficulty, up to an hour long, as text or video, simulations or
    /// tutorials, for ages 0 to 100.
    fn default() -> Self {
        Self {
            disciplines: set(&["Business"]),
            language: set(&["English"]),
            difficulty: set(&["Medio Alta", "Media"]),
            duration: set(&["0-30", "30-60"]),
            format: set(&["Text", "Video"]),
            kind: set(&["Simulation", "Tutorial"]),
            min_age: Some(0),
            max_age: Some(100),
        }
    }
}

/// Categorical fields the matcher checks, with their profile accessor.
pub const FIELDS: [&str; 6] = ["disciplines", "language", "difficulty", "duration", "format", "type"];
pub const AGE_FIELD: &str = "age";

impl UserProfile {
    pub fn field(&self, name: &str) -> Option<&BTreeSet<String>> {
        Some(match name {
            "disciplines" => &self.disciplines,
            "language" => &self.language,
            "difficulty" => &self.difficulty,
            "duration" => &self.duration,
            "format" => &self.format,
            "type" => &self.kind,
            _ => return None,
        })
    }

    pub fn field_mut(&mut self, name: &str) -> Option<&mut BTreeSet<String>> {
        Some(match name {
            "disciplines" => &mut self.disciplines,
            "language" => &mut self.language,
            "difficulty" => &mut self.difficulty,
            "duration" => &mut self.duration,
            "format" => &mut self.format,
            "type" => &mut self.kind,
            _ => return None,
        })
    }

    pub fn age_range(&self) -> Option<(i64, i64)> {
        self.min_age.zip(self.max_age)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.min_age, self.max_age) {
            (Some(lo), Some(hi)) if lo > hi => Err(Error::arg(format!("profile min_age {lo} exceeds max_age {hi}"))),
            (Some(_), None) | (None, Some(_)) => {
                Err(Error::arg("profile age constraint needs both min_age and max_age"))
            }
            _ => {
                if self.constrained_fields().is_empty() {
                    Err(Error::arg("profile constrains no attribute"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Names of the constrained attributes, in matching order.
    pub fn constrained_fields(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = FIELDS
            .iter()
            .copied()
            .filter(|f| !self.field(f).unwrap().is_empty())
            .collect();
        if self.age_range().is_some() {
            out.push(AGE_FIELD);
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: UserProfile = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

/// Whether a discipline path (levels separated by `/`) falls under any of the
/// preferred paths; a preferred `Business` matches every level-0 Business item.
fn discipline_matches(preferred: &BTreeSet<String>, levels: &[&str]) -> bool {
    preferred.iter().any(|p| {
        p.split(SEPARATOR)
            .enumerate()
            .all(|(i, seg)| levels.get(i).is_some_and(|l| *l == seg))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub recommended: bool,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleRendering {
    /// One rule, one membership clause per constrained attribute.
    #[default]
    Membership,
    /// Disjunctions expanded: one rule per combination of single values.
    Expanded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommender {
    pub profile: UserProfile,
    /// Minimum average rating gate, applied by [`recommender_predict_rated`].
    #[serde(default)]
    pub min_average_rating: Option<f64>,
}

impl Recommender {
    pub fn new(profile: UserProfile) -> Result<Self> {
        profile.validate()?;
        Ok(Self {
            profile,
            min_average_rating: None,
        })
    }
}

/// Column positions resolved against one raw schema.
pub struct BoundRecommender<'a> {
    profile: &'a UserProfile,
    fields: Vec<(&'static str, Vec<usize>)>,
    age: Option<(usize, usize, i64, i64)>,
    total: f64,
}

impl RecordModel for Recommender {
    type Bound<'a> = BoundRecommender<'a>;

    fn bind<'a>(&'a self, columns: &[&str]) -> Result<BoundRecommender<'a>> {
        let find = |name: &str| {
            columns
                .iter()
                .position(|c| *c == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let mut fields = Vec::new();
        for f in self.profile.constrained_fields() {
            if f == AGE_FIELD {
                continue;
            }
            let idx = if f == "disciplines" {
                LEVEL_COLUMNS.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?
            } else {
                vec![find(f)?]
            };
            fields.push((f, idx));
        }
        let age = match self.profile.age_range() {
            Some((lo, hi)) => Some((find("min_age")?, find("max_age")?, lo, hi)),
            None => None,
        };
        let total = (fields.len() + usize::from(age.is_some())) as f64;
        Ok(BoundRecommender {
            profile: &self.profile,
            fields,
            age,
            total,
        })
    }

    fn output_kind(&self) -> OutputKind {
        OutputKind::Score { threshold: 1.0 }
    }
}

impl BoundRecommender<'_> {
    /// Number of satisfied constraints.
    pub fn matches(&self, row: &[Value<'_>]) -> usize {
        let mut hits = 0;
        for (name, idx) in &self.fields {
            let set = self.profile.field(name).unwrap();
            let ok = if *name == "disciplines" {
                let levels: Vec<&str> = idx.iter().map(|&i| row[i].as_text().unwrap_or("")).collect();
                discipline_matches(set, &levels)
            } else {
                row[idx[0]].as_text().is_some_and(|v| set.contains(v))
            };
            hits += usize::from(ok);
        }
        if let Some((lo_i, hi_i, lo, hi)) = self.age {
            if let (Some(a), Some(b)) = (row[lo_i].as_num(), row[hi_i].as_num()) {
                hits += usize::from(a <= hi as f64 && b >= lo as f64);
            }
        }
        hits
    }
}

impl BoundRecord for BoundRecommender<'_> {
    fn predict(&self, row: &[Value<'_>]) -> f64 {
        self.matches(row) as f64 / self.total
    }
}

/// Decisions and match-ratio scores for raw, ungrouped item rows.
pub fn recommender_predict(items: &Dataset, recommender: &Recommender) -> Result<Vec<Recommendation>> {
    let names = items.names();
    let bound = recommender.bind(&names)?;
    Ok((0..items.n_rows())
        .map(|i| {
            let row = items.row(i);
            let hits = bound.matches(&row);
            Recommendation {
                recommended: hits as f64 == bound.total,
                score: hits as f64 / bound.total,
            }
        })
        .collect())
}

/// [`recommender_predict`] plus the optional minimum-average-rating gate;
/// items need an `id` column matching the ratings' `resource` column.
pub fn recommender_predict_rated(
    items: &Dataset,
    ratings: &Dataset,
    recommender: &Recommender,
) -> Result<Vec<Recommendation>> {
    let mut out = recommender_predict(items, recommender)?;
    if let Some(min) = recommender.min_average_rating {
        let mut sums: HashMap<i64, (f64, f64)> = HashMap::new();
        for (r, v) in ratings.numeric("resource")?.iter().zip(ratings.numeric("rating")?) {
            let e = sums.entry(*r as i64).or_default();
            e.0 += v;
            e.1 += 1.0;
        }
        for (rec, id) in out.iter_mut().zip(items.numeric("id")?) {
            let avg = sums.get(&(*id as i64)).map(|(s, n)| s / n);
            if avg.is_none_or(|a| a < min) {
                rec.recommended = false;
            }
        }
    }
    Ok(out)
}

/// The matcher's own conditions as IF-THEN rules.
pub fn recommender_rules(profile: &UserProfile, rendering: RuleRendering) -> Result<RuleSet> {
    profile.validate()?;
    let fields = profile.constrained_fields();
    let mut universe: Vec<&str> = FIELDS.to_vec();
    universe.push(AGE_FIELD);
    let age_clause = match profile.age_range() {
        Some((lo, hi)) => Some(Clause::overlaps(AGE_FIELD, lo as f64, hi as f64)?),
        None => None,
    };
    let categorical: Vec<(&str, Vec<&String>)> = fields
        .iter()
        .filter(|f| **f != AGE_FIELD)
        .map(|f| (*f, profile.field(f).unwrap().iter().collect()))
        .collect();
    let rules = match rendering {
        RuleRendering::Membership => {
            let mut clauses = categorical
                .iter()
                .map(|(f, vals)| Clause::one_of(*f, vals.iter().map(|s| s.as_str())))
                .collect::<Result<Vec<_>>>()?;
            clauses.extend(age_clause);
            vec![Rule::new(clauses, "recommended")?]
        }
        RuleRendering::Expanded => {
            let mut combos: Vec<Vec<Clause>> = vec![Vec::new()];
            for (f, vals) in &categorical {
                let mut next = Vec::with_capacity(combos.len() * vals.len());
                for prefix in &combos {
                    for v in vals {
                        let mut c = prefix.clone();
                        c.push(Clause::one_of(*f, [v.as_str()])?);
                        next.push(c);
                    }
                }
                combos = next;
            }
            combos
                .into_iter()
                .map(|mut c| {
                    c.extend(age_clause.clone());
                    Rule::new(c, "recommended")
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    RuleSet::new(rules, universe, Aggregation::Average)
}

/// Count of recommended items per decision, for reporting.
pub fn decision_counts(recs: &[Recommendation]) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for r in recs {
        *m.entry(if r.recommended {
            "recommended"
        } else {
            "not_recommended"
        })
        .or_insert(0) += 1;
    }
    m
}
