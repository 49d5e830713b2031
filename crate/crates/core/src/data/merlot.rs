//! MERLOT-schema resources and ratings: vocabularies, a seeded synthetic
//! generator, and the ratings-to-resources right join.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grouping::LEVEL_COLUMNS;
use super::{Column, ColumnData, Dataset, SchemaTag};
use crate::error::{Error, Result};

pub const RESOURCE_COLUMNS: [&str; 12] = [
    "id",
    "type",
    "language",
    "difficulty",
    "format",
    "duration",
    "min_age",
    "max_age",
    "discipline_level_0",
    "discipline_level_1",
    "discipline_level_2",
    "discipline_level_3",
];
pub const RATING_COLUMNS: [&str; 3] = ["id", "rating", "resource"];

/// Resource columns the recommender reads, in schema order.
pub const FEATURE_COLUMNS: [&str; 11] = [
    "type",
    "language",
    "difficulty",
    "format",
    "duration",
    "min_age",
    "max_age",
    "discipline_level_0",
    "discipline_level_1",
    "discipline_level_2",
    "discipline_level_3",
];

pub const ABSENT: &str = "Absent";

// (value, weight). Weights shape how often the default profile's
// preferences occur.
pub const TYPES: [(&str, f64); 8] = [
    ("Tutorial", 0.35),
    ("Simulation", 0.35),
    ("Presentation", 0.10),
    ("Animation", 0.05),
    ("Assessment Tool", 0.05),
    ("Case Study", 0.04),
    ("Collection", 0.03),
    ("Drill and Practice", 0.03),
];
pub const LANGUAGES: [(&str, f64); 5] = [
    ("English", 0.85),
    ("Spanish", 0.06),
    ("French", 0.04),
    ("Italian", 0.03),
    ("German", 0.02),
];
pub const DIFFICULTIES: [(&str, f64); 5] = [
    ("Bassa", 0.12),
    ("Medio Bassa", 0.14),
    ("Media", 0.38),
    ("Medio Alta", 0.32),
    ("Alta", 0.04),
];
pub const FORMATS: [(&str, f64); 5] = [
    ("Text", 0.45),
    ("Video", 0.25),
    ("Website", 0.20),
    ("Audio", 0.05),
    ("Image", 0.05),
];
pub const DURATIONS: [(&str, f64); 4] = [("0-30", 0.45), ("30-60", 0.30), ("60-120", 0.15), ("120+", 0.10)];
const MIN_AGES: [(i64, f64); 6] = [(5, 0.05), (10, 0.10), (12, 0.10), (14, 0.25), (16, 0.15), (18, 0.35)];
const AGE_SPANS: [(i64, f64); 6] = [(2, 0.30), (4, 0.15), (6, 0.15), (10, 0.20), (20, 0.10), (40, 0.10)];

type Branch = (&'static str, &'static [&'static str]);

/// Level 0 with its weight and level 1 -> level 2 branches.
pub const DISCIPLINES: [(&str, f64, &[Branch]); 8] = [
    (
        "Business",
        0.40,
        &[
            ("Economics", &["Micro", "Macro", "Econometrics"]),
            ("Management", &["Strategy", "Operations", "Leadership"]),
            ("Finance", &["Investments", "Corporate Finance", "Banking"]),
            ("Marketing", &["Advertising", "Consumer Behavior", "Market Research"]),
        ],
    ),
    (
        "Humanities",
        0.10,
        &[
            ("History", &["Area Studies", "Ancient History", "Modern History"]),
            ("Philosophy", &["Ethics", "Logic", "Metaphysics"]),
            ("Literature", &["Poetry", "Drama", "Fiction"]),
        ],
    ),
    (
        "Mathematics and Statistics",
        0.10,
        &[
            ("Mathematics", &["Geometry and Topology", "Algebra", "Calculus"]),
            ("Statistics", &["Probability", "Inference", "Regression"]),
        ],
    ),
    (
        "Science and Technology",
        0.12,
        &[
            ("Physics", &["Electricity and Magnetism", "Mechanics", "Mathematics"]),
            (
                "Chemistry",
                &["Organic Chemistry", "Inorganic Chemistry", "Physical Chemistry"],
            ),
            ("Biology", &["Genetics", "Ecology", "Cell Biology"]),
            ("Computer Science", &["Programming", "Networks", "Databases"]),
        ],
    ),
    (
        "Education",
        0.08,
        &[
            (
                "Teacher Education",
                &["Assessment", "Curriculum", "Classroom Management"],
            ),
            (
                "Educational Technology",
                &["E-Learning", "Instructional Design", "Multimedia"],
            ),
        ],
    ),
    (
        "Arts",
        0.06,
        &[
            ("Music", &["Theory", "Composition", "Performance"]),
            ("Visual Arts", &["Painting", "Sculpture", "Photography"]),
        ],
    ),
    (
        "Social Sciences",
        0.08,
        &[
            ("Psychology", &["Cognitive", "Developmental", "Social Psychology"]),
            ("Sociology", &["Social Theory", "Demography", "Criminology"]),
            (
                "Political Science",
                &["International Relations", "Public Policy", "Comparative Politics"],
            ),
        ],
    ),
    (
        "Health Sciences",
        0.06,
        &[
            ("Nursing", &["Clinical Practice", "Patient Care", "Pharmacology"]),
            ("Public Health", &["Epidemiology", "Nutrition", "Global Health"]),
        ],
    ),
];

/// Level 3 leaves for known level 2 values; others use [`GENERIC_LEAVES`].
const LEAVES: [(&str, &[&str]); 4] = [
    ("Area Studies", &["Africa", "Asia", "Europe"]),
    ("Geometry and Topology", &["Euclidean Geometry", "Topology"]),
    ("Electricity and Magnetism", &["Circuits", "Electrostatics"]),
    ("Micro", &["Game Theory", "Consumer Theory"]),
];
const GENERIC_LEAVES: [&str; 2] = ["Introductory", "Advanced"];
const ABSENT_LEAF_PROBABILITY: f64 = 0.4;

pub fn vocabulary(column: &str) -> Option<Vec<&'static str>> {
    fn names<T>(table: &[(&'static str, T)]) -> Vec<&'static str> {
        table.iter().map(|(n, _)| *n).collect()
    }
    Some(match column {
        "type" => names(&TYPES),
        "language" => names(&LANGUAGES),
        "difficulty" => names(&DIFFICULTIES),
        "format" => names(&FORMATS),
        "duration" => names(&DURATIONS),
        "discipline_level_0" => DISCIPLINES.iter().map(|d| d.0).collect(),
        "discipline_level_1" => DISCIPLINES.iter().flat_map(|d| d.2.iter().map(|b| b.0)).collect(),
        "discipline_level_2" => DISCIPLINES
            .iter()
            .flat_map(|d| d.2.iter().flat_map(|b| b.1.iter().copied()))
            .collect(),
        "discipline_level_3" => {
            let mut v: Vec<&str> = vec![ABSENT];
            v.extend(GENERIC_LEAVES);
            v.extend(LEAVES.iter().flat_map(|l| l.1.iter().copied()));
            v
        }
        _ => return None,
    })
}

/// Check every categorical cell of a resources table against the vocabulary.
pub fn validate_resources(resources: &Dataset) -> Result<()> {
    for name in RESOURCE_COLUMNS {
        let column = resources.column(name)?;
        if let Some(vocab) = vocabulary(name) {
            let values = resources.categorical(name)?;
            if let Some(bad) = values.iter().find(|v| !vocab.contains(&v.as_str())) {
                return Err(Error::UnseenValue {
                    column: name.into(),
                    value: bad.clone(),
                });
            }
        } else if column.is_categorical() {
            return Err(Error::Column {
                column: name.into(),
                reason: "expected a numeric column".into(),
            });
        }
    }
    Ok(())
}

fn weighted<'a, T: Copy>(table: &'a [(T, f64)]) -> impl Fn(&mut ChaCha8Rng) -> T + 'a {
    let dist = WeightedIndex::new(table.iter().map(|(_, w)| *w)).expect("static weights");
    move |rng| table[dist.sample(rng)].0
}

/// Generate `(resources, ratings)` tables. Level 1 stays inside level 0's
/// subtree with probability `planted_correlation`, otherwise it is drawn
/// from all level 1 values.
pub fn synthesize_merlot(
    n_resources: usize,
    n_ratings: usize,
    rng_seed: u64,
    planted_correlation: f64,
) -> Result<(Dataset, Dataset)> {
    if n_resources == 0 || n_ratings == 0 {
        return Err(Error::arg("resource and rating counts must be at least 1"));
    }
    if !(0.0..=1.0).contains(&planted_correlation) {
        return Err(Error::OutOfRange {
            name: "planted_correlation",
            value: planted_correlation,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let pick_type = weighted(&TYPES);
    let pick_language = weighted(&LANGUAGES);
    let pick_difficulty = weighted(&DIFFICULTIES);
    let pick_format = weighted(&FORMATS);
    let pick_duration = weighted(&DURATIONS);
    let pick_min_age = weighted(&MIN_AGES);
    let pick_span = weighted(&AGE_SPANS);
    let level0_dist = WeightedIndex::new(DISCIPLINES.iter().map(|d| d.1)).expect("static weights");
    let all_branches: Vec<&Branch> = DISCIPLINES.iter().flat_map(|d| d.2.iter()).collect();

    let mut cols: Vec<Vec<String>> = (0..9).map(|_| Vec::with_capacity(n_resources)).collect();
    let mut min_age = Vec::with_capacity(n_resources);
    let mut max_age = Vec::with_capacity(n_resources);
    for _ in 0..n_resources {
        cols[0].push(pick_type(&mut rng).to_string());
        cols[1].push(pick_language(&mut rng).to_string());
        cols[2].push(pick_difficulty(&mut rng).to_string());
        cols[3].push(pick_format(&mut rng).to_string());
        cols[4].push(pick_duration(&mut rng).to_string());
        let lo = pick_min_age(&mut rng);
        min_age.push(lo as f64);
        max_age.push((lo + pick_span(&mut rng)) as f64);

        let (level0, _, branches) = DISCIPLINES[level0_dist.sample(&mut rng)];
        let branch = if rng.gen::<f64>() < planted_correlation {
            branches.choose(&mut rng).unwrap()
        } else {
            *all_branches.choose(&mut rng).unwrap()
        };
        let level2 = *branch.1.choose(&mut rng).unwrap();
        let level3 = if rng.gen::<f64>() < ABSENT_LEAF_PROBABILITY {
            ABSENT
        } else {
            let leaves = LEAVES
                .iter()
                .find(|l| l.0 == level2)
                .map_or(&GENERIC_LEAVES[..], |l| l.1);
            *leaves.choose(&mut rng).unwrap()
        };
        cols[5].push(level0.to_string());
        cols[6].push(branch.0.to_string());
        cols[7].push(level2.to_string());
        cols[8].push(level3.to_string());
    }
    let mut it = cols.into_iter();
    let mut next = || it.next().unwrap();
    let resources = Dataset::new(
        vec![
            Column::numeric("id", (0..n_resources).map(|i| i as f64).collect()),
            Column::categorical("type", next()),
            Column::categorical("language", next()),
            Column::categorical("difficulty", next()),
            Column::categorical("format", next()),
            Column::categorical("duration", next()),
            Column::numeric("min_age", min_age),
            Column::numeric("max_age", max_age),
            Column::categorical(LEVEL_COLUMNS[0], next()),
            Column::categorical(LEVEL_COLUMNS[1], next()),
            Column::categorical(LEVEL_COLUMNS[2], next()),
            Column::categorical(LEVEL_COLUMNS[3], next()),
        ],
        SchemaTag::MerlotResources,
    )?;

    let rating_weights = [(1.0, 0.05), (2.0, 0.10), (3.0, 0.25), (4.0, 0.35), (5.0, 0.25)];
    let pick_rating = weighted(&rating_weights);
    let mut pairs: Vec<(usize, f64)> = (0..n_ratings)
        .map(|_| (rng.gen_range(0..n_resources), pick_rating(&mut rng)))
        .collect();
    pairs.sort_by_key(|p| p.0);
    let ratings = Dataset::new(
        vec![
            Column::numeric("id", (0..n_ratings).map(|i| i as f64).collect()),
            Column::numeric("rating", pairs.iter().map(|p| p.1).collect()),
            Column::numeric("resource", pairs.iter().map(|p| p.0 as f64).collect()),
        ],
        SchemaTag::MerlotRatings,
    )?;
    Ok((resources, ratings))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub data: Dataset,
    /// Ratings rows whose resource id has no match; their resource fields are
    /// filled with `Absent` / `0`.
    pub unmatched: Vec<usize>,
}

/// Right join of resources onto ratings on `resource = id`: one output row
/// per ratings row, ratings columns first.
pub fn merge_resources_ratings(resources: &Dataset, ratings: &Dataset) -> Result<Merged> {
    let ids = resources.numeric("id")?;
    let keys = ratings.numeric("resource")?;
    let index: HashMap<i64, usize> = ids.iter().enumerate().map(|(i, &v)| (v as i64, i)).collect();
    let mut unmatched = Vec::new();
    let rows: Vec<Option<usize>> = keys
        .iter()
        .enumerate()
        .map(|(r, k)| {
            let hit = index.get(&(*k as i64)).copied();
            if hit.is_none() {
                unmatched.push(r);
            }
            hit
        })
        .collect();
    if !unmatched.is_empty() {
        log::warn!(
            "{} ratings reference missing resources; their resource fields are marked absent",
            unmatched.len()
        );
    }
    let mut columns: Vec<Column> = ratings.columns().to_vec();
    for column in resources.columns() {
        if column.name == "id" {
            continue;
        }
        if ratings.has_column(&column.name) {
            return Err(Error::Column {
                column: column.name.clone(),
                reason: "present in both tables".into(),
            });
        }
        let data = match &column.data {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|r| r.map_or(0.0, |i| v[i])).collect()),
            ColumnData::Categorical(v) => ColumnData::Categorical(
                rows.iter()
                    .map(|r| r.map_or_else(|| ABSENT.to_string(), |i| v[i].clone()))
                    .collect(),
            ),
            ColumnData::Codes(_) => {
                return Err(Error::Column {
                    column: column.name.clone(),
                    reason: "decode resources before merging".into(),
                })
            }
        };
        columns.push(Column {
            name: column.name.clone(),
            data,
        });
    }
    Ok(Merged {
        data: Dataset::new(columns, SchemaTag::Generic)?,
        unmatched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::correlation::correlation_matrix;

    #[test]
    fn generated_rows_follow_the_vocabulary() {
        for seed in [0, 1, 42] {
            let (res, rat) = synthesize_merlot(300, 900, seed, 0.95).unwrap();
            assert_eq!(res.names(), RESOURCE_COLUMNS.to_vec());
            assert_eq!(rat.names(), RATING_COLUMNS.to_vec());
            validate_resources(&res).unwrap();
            let ids = res.numeric("id").unwrap();
            for r in rat.numeric("resource").unwrap() {
                assert!(ids.contains(r));
            }
            for (lo, hi) in res
                .numeric("min_age")
                .unwrap()
                .iter()
                .zip(res.numeric("max_age").unwrap())
            {
                assert!(lo <= hi);
            }
            for r in rat.numeric("rating").unwrap() {
                assert!((1.0..=5.0).contains(r));
            }
        }
    }

    #[test]
    fn table_two_values_are_in_vocabulary() {
        let rows = [
            ("type", "Presentation"),
            ("difficulty", "Medio Bassa"),
            ("difficulty", "Medio Alta"),
            ("difficulty", "Bassa"),
            ("format", "Website"),
            ("duration", "0-30"),
            ("duration", "30-60"),
            ("discipline_level_0", "Mathematics and Statistics"),
            ("discipline_level_1", "History"),
            ("discipline_level_2", "Area Studies"),
            ("discipline_level_2", "Mathematics"),
            ("discipline_level_3", "Africa"),
            ("discipline_level_3", "Euclidean Geometry"),
            ("discipline_level_3", "Circuits"),
            ("discipline_level_3", "Absent"),
        ];
        for (col, value) in rows {
            assert!(vocabulary(col).unwrap().contains(&value), "{col}: {value}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synthesize_merlot(50, 120, 7, 0.9).unwrap();
        let b = synthesize_merlot(50, 120, 7, 0.9).unwrap();
        assert_eq!(a, b);
        let c = synthesize_merlot(50, 120, 8, 0.9).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn planted_association() {
        let (res, _) = synthesize_merlot(2000, 10, 3, 0.95).unwrap();
        let m = correlation_matrix(&res.select_columns(&LEVEL_COLUMNS[..2]).unwrap()).unwrap();
        let v = m.get(LEVEL_COLUMNS[0], LEVEL_COLUMNS[1]).unwrap();
        assert!(v >= 0.9, "V = {v}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(synthesize_merlot(0, 1, 0, 0.5).is_err());
        assert!(synthesize_merlot(1, 1, 0, 1.5).is_err());
    }

    #[test]
    fn right_join_cardinality() {
        let (res, rat) = synthesize_merlot(20, 60, 5, 0.9).unwrap();
        let merged = merge_resources_ratings(&res, &rat).unwrap();
        assert_eq!(merged.data.n_rows(), 60);
        assert!(merged.unmatched.is_empty());
        assert_eq!(merged.data.names()[..3], ["id", "rating", "resource"]);

        let ratings = Dataset::new(
            vec![
                Column::numeric("id", vec![0.0, 1.0, 2.0, 3.0]),
                Column::numeric("rating", vec![4.0, 3.0, 5.0, 2.0]),
                Column::numeric("resource", vec![0.0, 0.0, 0.0, 99.0]),
            ],
            SchemaTag::MerlotRatings,
        )
        .unwrap();
        let merged = merge_resources_ratings(&res, &ratings).unwrap();
        assert_eq!(merged.unmatched, vec![3]);
        let types = merged.data.categorical("type").unwrap();
        assert_eq!(types[0], types[2]);
        assert_eq!(types[3], ABSENT);

        let empty = ratings.select_rows(&[]).unwrap();
        assert_eq!(merge_resources_ratings(&res, &empty).unwrap().data.n_rows(), 0);
    }
}
