use proptest::prelude::*;

use xaitax::data::correlation::{correlation_matrix, cramers_v};
use xaitax::data::encoding::{decode, encode, EncodingRules, UnseenPolicy};
use xaitax::data::grouping::{group_disciplines, ungroup_disciplines, GROUPED_COLUMN, LEVEL_COLUMNS};
use xaitax::data::merlot::{merge_resources_ratings, synthesize_merlot, validate_resources, vocabulary};
use xaitax::data::wrapped::{wrapped_predict, WrappedPredict};
use xaitax::data::{Column, Dataset, SchemaTag};
use xaitax::models::recommender::{Recommender, UserProfile, FIELDS};
use xaitax::models::PredictFunction;

fn table() -> impl Strategy<Value = Dataset> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec("[a-c]{0,2}", n),
            prop::collection::vec(-1e6..1e6f64, n),
            prop::collection::vec(prop::sample::select(vec!["x", "y,z", "\"q\"", " "]), n),
        )
            .prop_map(|(a, b, c)| {
                Dataset::new(
                    vec![
                        Column::categorical("a", a),
                        Column::numeric("b", b),
                        Column::categorical("c", c),
                    ],
                    SchemaTag::Generic,
                )
                .unwrap()
            })
    })
}

fn subset(column: &'static str) -> impl Strategy<Value = Vec<String>> {
    let vocab = vocabulary(column).unwrap();
    let n = vocab.len();
    prop::collection::vec(any::<bool>(), n).prop_map(move |keep| {
        vocab
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(v, _)| v.to_string())
            .collect()
    })
}

fn profile() -> impl Strategy<Value = UserProfile> {
    (
        subset("discipline_level_0"),
        subset("language"),
        subset("difficulty"),
        subset("duration"),
        subset("format"),
        subset("type"),
        prop::option::of((0i64..40, 0i64..60)),
    )
        .prop_map(|(d, l, df, du, f, t, age)| UserProfile {
            disciplines: d.into_iter().collect(),
            language: l.into_iter().collect(),
            difficulty: df.into_iter().collect(),
            duration: du.into_iter().collect(),
            format: f.into_iter().collect(),
            kind: t.into_iter().collect(),
            min_age: age.map(|(lo, _)| lo),
            max_age: age.map(|(lo, w)| lo + w),
        })
        .prop_filter("needs a constraint", |p| p.validate().is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_decode_round_trip(data in table()) {
        let (enc, rules) = encode(&data, None, UnseenPolicy::Strict).unwrap();
        prop_assert!(enc.is_encoded());
        prop_assert_eq!(&decode(&enc, &rules).unwrap(), &data);
        let again = EncodingRules::from_json(&rules.to_json().unwrap()).unwrap();
        let (enc2, _) = encode(&data, Some(&again), UnseenPolicy::Strict).unwrap();
        prop_assert_eq!(enc2, enc);
    }

    #[test]
    fn csv_round_trip(data in table()) {
        let text = data.to_csv_string().unwrap();
        let back = Dataset::from_csv_reader(text.as_bytes(), SchemaTag::Generic).unwrap();
        prop_assert_eq!(back.n_rows(), data.n_rows());
        prop_assert_eq!(back.numeric("b").unwrap(), data.numeric("b").unwrap());
    }

    #[test]
    fn group_ungroup_round_trip(seed in any::<u64>(), n in 1usize..80, rho in 0.0..=1.0f64) {
        let (res, _) = synthesize_merlot(n, 1, seed, rho).unwrap();
        let grouped = group_disciplines(&res).unwrap();
        prop_assert!(grouped.has_column(GROUPED_COLUMN));
        prop_assert!(LEVEL_COLUMNS.iter().all(|c| !grouped.has_column(c)));
        prop_assert_eq!(grouped.n_cols(), res.n_cols() - 3);
        prop_assert_eq!(ungroup_disciplines(&grouped).unwrap(), res);
    }

    #[test]
    fn synthesis_is_valid_and_deterministic(seed in any::<u64>(), n in 1usize..60, m in 1usize..80) {
        let (res, rat) = synthesize_merlot(n, m, seed, 0.95).unwrap();
        validate_resources(&res).unwrap();
        prop_assert_eq!(res.n_rows(), n);
        prop_assert_eq!(rat.n_rows(), m);
        for r in rat.numeric("rating").unwrap() {
            prop_assert!((1.0..=5.0).contains(r));
        }
        let (res2, rat2) = synthesize_merlot(n, m, seed, 0.95).unwrap();
        prop_assert_eq!(res, res2);
        prop_assert_eq!(rat, rat2);
    }

    #[test]
    fn merge_keeps_one_row_per_rating(seed in any::<u64>(), n in 1usize..40, m in 1usize..80) {
        let (res, rat) = synthesize_merlot(n, m, seed, 0.9).unwrap();
        let merged = merge_resources_ratings(&res, &rat).unwrap();
        prop_assert_eq!(merged.data.n_rows(), m);
        prop_assert!(merged.unmatched.is_empty());
    }

    #[test]
    fn prediction_ignores_representation(seed in any::<u64>(), p in profile()) {
        let (res, _) = synthesize_merlot(60, 1, seed, 0.9).unwrap();
        let rs = Recommender::new(p).unwrap();
        let direct = wrapped_predict(&res, &rs, &EncodingRules::default()).unwrap();
        let grouped = group_disciplines(&res).unwrap();
        for data in [&res, &grouped] {
            let (enc, rules) = encode(data, None, UnseenPolicy::Strict).unwrap();
            prop_assert_eq!(&wrapped_predict(data, &rs, &EncodingRules::default()).unwrap(), &direct);
            prop_assert_eq!(&wrapped_predict(&enc, &rs, &rules).unwrap(), &direct);
            let f = WrappedPredict::new(&rs, &enc, &rules).unwrap();
            let via: Vec<f64> = enc.to_matrix().unwrap().iter().map(|r| f.predict_scalar(r)).collect();
            prop_assert_eq!(&via, &direct);
        }
    }
}

#[test]
fn fresh_codes_extend_rules() {
    let a = Dataset::new(vec![Column::categorical("a", vec!["x", "y"])], SchemaTag::Generic).unwrap();
    let b = Dataset::new(vec![Column::categorical("a", vec!["y", "z"])], SchemaTag::Generic).unwrap();
    let (_, rules) = encode(&a, None, UnseenPolicy::Strict).unwrap();
    assert!(encode(&b, Some(&rules), UnseenPolicy::Strict).is_err());
    let (enc, extended) = encode(&b, Some(&rules), UnseenPolicy::FreshCode).unwrap();
    assert_eq!(decode(&enc, &extended).unwrap(), b);
    assert_eq!(extended.get("a").unwrap().code("z"), Some(2));
}

#[test]
fn planted_correlation_shows_in_cramers_v() {
    let (res, _) = synthesize_merlot(2000, 1, 3, 0.95).unwrap();
    let m = correlation_matrix(&res).unwrap();
    let strong = m.get("discipline_level_0", "discipline_level_1").unwrap();
    assert!(strong >= 0.8, "{strong}");
    let (res, _) = synthesize_merlot(2000, 1, 3, 0.0).unwrap();
    let m = correlation_matrix(&res).unwrap();
    let weak = m.get("discipline_level_0", "discipline_level_1").unwrap();
    assert!(weak < strong, "{weak} vs {strong}");
}

#[test]
fn cramers_v_oracles() {
    assert_eq!(cramers_v(&[0, 1, 0, 1], 2, &[0, 1, 0, 1], 2), Some(1.0));
    assert!(cramers_v(&[0, 0, 1, 1], 2, &[0, 1, 0, 1], 2).unwrap().abs() < 1e-12);
    assert_eq!(cramers_v(&[0, 0, 0], 1, &[0, 1, 0], 2), None);
}

#[test]
fn fields_cover_feature_columns() {
    let (res, _) = synthesize_merlot(3, 1, 0, 0.9).unwrap();
    for f in FIELDS {
        if f != "disciplines" {
            assert!(res.has_column(f), "{f}");
        }
    }
}
