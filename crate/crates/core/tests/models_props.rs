use proptest::prelude::*;

use xaitax::data::iris;
use xaitax::data::merlot::{synthesize_merlot, vocabulary};
use xaitax::models::extraction::extract_rules;
use xaitax::models::recommender::{recommender_predict, recommender_rules, Recommender, RuleRendering, UserProfile};
use xaitax::models::svm::{features_and_labels, train_svm, train_svm_matrix, SvmConfig, SvmModel};
use xaitax::models::{decide, OutputKind, PredictFunction};
use xaitax::taxonomy::{ruleset_complexity, Condition};

fn all(column: &str) -> std::collections::BTreeSet<String> {
    vocabulary(column).unwrap().into_iter().map(String::from).collect()
}

fn universal() -> UserProfile {
    UserProfile {
        disciplines: all("discipline_level_0"),
        language: all("language"),
        difficulty: all("difficulty"),
        duration: all("duration"),
        format: all("format"),
        kind: all("type"),
        min_age: Some(0),
        max_age: Some(1000),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn universal_profile_recommends_everything(seed in any::<u64>()) {
        let (res, _) = synthesize_merlot(80, 1, seed, 0.9).unwrap();
        let recs = recommender_predict(&res, &Recommender::new(universal()).unwrap()).unwrap();
        prop_assert!(recs.iter().all(|r| r.recommended && r.score == 1.0));
    }

    #[test]
    fn widening_a_constraint_never_lowers_scores(seed in any::<u64>(), field in 0usize..5, pick in any::<prop::sample::Index>()) {
        let (res, _) = synthesize_merlot(80, 1, seed, 0.9).unwrap();
        let narrow = UserProfile::default();
        let mut wide = narrow.clone();
        let (name, column) = [
            ("language", "language"),
            ("difficulty", "difficulty"),
            ("duration", "duration"),
            ("format", "format"),
            ("type", "type"),
        ][field];
        let vocab = vocabulary(column).unwrap();
        wide.field_mut(name).unwrap().insert(pick.get(&vocab).to_string());
        let a = recommender_predict(&res, &Recommender::new(narrow).unwrap()).unwrap();
        let b = recommender_predict(&res, &Recommender::new(wide).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y.score >= x.score);
            prop_assert!(y.recommended || !x.recommended);
        }
    }
}

fn iris_model() -> (SvmModel, Vec<Vec<f64>>, Vec<usize>) {
    let data = iris::load().unwrap();
    let model = train_svm(&data, iris::LABEL, &SvmConfig::default()).unwrap();
    let (x, y, _, _) = features_and_labels(&data, iris::LABEL).unwrap();
    (model, x, y)
}

#[test]
fn svm_fits_iris() {
    let (model, x, y) = iris_model();
    assert_eq!(model.n_outputs(), 3);
    let acc = x.iter().zip(&y).filter(|(r, &c)| model.predict_class(r) == c).count() as f64 / 150.0;
    assert!(acc >= 0.9, "{acc}");
    for r in &x {
        assert_eq!(model.predict_class(r), decide(OutputKind::Margin, &model.predict(r)));
    }
}

#[test]
fn svm_ignores_row_order() {
    let (model, x, y) = iris_model();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.reverse();
    order.rotate_left(37);
    let px: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let py: Vec<usize> = order.iter().map(|&i| y[i]).collect();
    let other = train_svm_matrix(
        &px,
        &py,
        model.classes.clone(),
        model.feature_names.clone(),
        &SvmConfig::default(),
    )
    .unwrap();
    let mut agree = 0;
    for r in &x {
        let a = model.decision_function(r);
        let b = other.decision_function(r);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 0.05, "{a:?} vs {b:?}");
        }
        agree += usize::from(model.predict_class(r) == other.predict_class(r));
    }
    assert!(agree >= 148, "{agree}");
}

#[test]
fn svm_json_round_trip() {
    let (model, x, _) = iris_model();
    let back = SvmModel::from_json(&model.to_json().unwrap()).unwrap();
    for r in &x {
        assert_eq!(model.decision_function(r), back.decision_function(r));
    }
}

#[test]
fn extracted_rules_contain_their_points() {
    let (model, _, _) = iris_model();
    let data = iris::load().unwrap();
    for k in [1, 3] {
        let ex = extract_rules(&model, &data, iris::LABEL, k).unwrap();
        assert!(!ex.rules.is_empty());
        for r in &ex.rules {
            assert_eq!(r.rule.len(), 4);
            assert_eq!(r.rule.label, model.classes[r.class]);
            for (j, clause) in r.rule.clauses.iter().enumerate() {
                assert!(clause.contains(r.support_vector[j]) && clause.contains(r.prototype[j]));
                assert!(matches!(clause.condition, Condition::Interval { .. }));
            }
        }
        let set = ex.rule_set(&model.feature_names, Default::default()).unwrap();
        assert_eq!(ruleset_complexity(&set).unwrap(), 3.0);
    }
}

#[test]
fn recommender_rules_complexity() {
    let membership = recommender_rules(&UserProfile::default(), RuleRendering::Membership).unwrap();
    assert_eq!(membership.len(), 1);
    assert_eq!(ruleset_complexity(&membership).unwrap(), 6.0);
    let expanded = recommender_rules(&UserProfile::default(), RuleRendering::Expanded).unwrap();
    assert_eq!(expanded.len(), 16);
    assert_eq!(ruleset_complexity(&expanded).unwrap(), 6.0);
}
