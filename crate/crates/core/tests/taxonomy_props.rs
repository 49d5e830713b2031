use proptest::prelude::*;

use xaitax::taxonomy::{
    explainability, rule_complexity, ruleset_complexity, total_explainability, total_two, understandability,
    Aggregation, Clause, DeclineFamily, Rule, RuleSet, UnderstandabilityParams,
};

fn family() -> impl Strategy<Value = DeclineFamily> {
    prop_oneof![Just(DeclineFamily::Gaussian), Just(DeclineFamily::Sht)]
}

fn rule_from(features: &[usize]) -> Rule {
    let clauses = features
        .iter()
        .map(|f| Clause::interval(format!("f{f}"), 0.0, 1.0).unwrap())
        .collect();
    Rule::new(clauses, "c").unwrap()
}

fn universe() -> Vec<String> {
    (0..6).map(|f| format!("f{f}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn tot_symmetric_bounded_with_identity(a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let t = total_two(a, b).unwrap();
        prop_assert_eq!(t, total_two(b, a).unwrap());
        prop_assert!(t >= a.max(b) - 1e-12 && t <= 1.0);
        prop_assert!((total_two(a, 0.0).unwrap() - a).abs() <= 1e-12);
        prop_assert!((t - (1.0 - (1.0 - a) * (1.0 - b))).abs() <= 1e-12);
    }

    #[test]
    fn tot_monotony(mut v in prop::array::uniform3(0.0..=1.0f64)) {
        v.sort_by(f64::total_cmp);
        prop_assert!(total_two(v[0], v[1]).unwrap() <= total_two(v[1], v[2]).unwrap() + 1e-12);
    }

    #[test]
    fn recursion_matches_closed_form_and_permutations(values in prop::collection::vec(0.0..=1.0f64, 1..12)) {
        let rec = total_explainability(&values).unwrap();
        let closed = 1.0 - values.iter().map(|v| 1.0 - v).product::<f64>();
        prop_assert!((rec - closed).abs() <= 1e-12);
        let mut rev = values.clone();
        rev.reverse();
        prop_assert!((total_explainability(&rev).unwrap() - rec).abs() <= 1e-12);
    }

    #[test]
    fn understandability_monotone(w in 0.0..50.0f64, dw in 0.0..5.0f64, b in 0.1..20.0f64, db in 0.0..5.0f64, fam in family()) {
        let u = |w: f64, b: f64| understandability(w, &UnderstandabilityParams::new(b, fam).unwrap()).unwrap();
        prop_assert!(u(w + dw, b) <= u(w, b));
        prop_assert!(u(w, b + db) >= u(w, b));
        prop_assert!(u(w, b) > 0.0 || w / b > 30.0);
        prop_assert!(u(w, b) <= 1.0);
    }

    #[test]
    fn explainability_monotone(i in 0.0..=1.0f64, c in 0.0..=1.0f64, w in 0.0..20.0f64, d in 0.0..0.5f64, fam in family()) {
        let p = UnderstandabilityParams::new(3.0, fam).unwrap();
        let e = |i: f64, c: f64, w: f64| explainability(i, c, w, &p).unwrap().explainability;
        let base = e(i, c, w);
        prop_assert!(e((i + d).min(1.0), c, w) >= base);
        prop_assert!(e(i, (c + d).min(1.0), w) >= base);
        prop_assert!(e(i, c, w + d) <= base);
        let a = explainability(i, c, w, &p).unwrap();
        prop_assert!((a.explainability - a.interpretability * a.completeness * a.understandability).abs() <= 1e-12);
    }

    #[test]
    fn complexity_ignores_clause_order(features in prop::collection::vec(0usize..6, 1..10), seed in any::<u64>()) {
        let rule = rule_from(&features);
        let mut shuffled = features.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let other = rule_from(&shuffled);
        let set = RuleSet::new(vec![rule.clone(), other.clone()], universe(), Aggregation::Average).unwrap();
        prop_assert_eq!(rule_complexity(&rule, &set).unwrap(), rule_complexity(&other, &set).unwrap());
    }
}

#[test]
fn complexity_hand_values() {
    let set = |r: Rule| RuleSet::new(vec![r], universe(), Aggregation::Average).unwrap();
    for (features, expected) in [
        (vec![0, 1, 2, 3], 3.0),
        (vec![0], 0.0),
        (vec![0, 0, 1], 3.0),
        (vec![0, 0], 2.0),
    ] {
        let r = rule_from(&features);
        assert_eq!(rule_complexity(&r, &set(r.clone())).unwrap(), expected, "{features:?}");
    }
}

#[test]
fn ruleset_aggregations() {
    let a = rule_from(&[0, 1, 2, 3]);
    let b = rule_from(&[2, 3, 4, 5]);
    let avg = RuleSet::new(vec![a.clone(), b.clone()], universe(), Aggregation::Average).unwrap();
    let sum = RuleSet::new(vec![a, b], universe(), Aggregation::Sum).unwrap();
    assert_eq!(ruleset_complexity(&avg).unwrap(), 3.0);
    assert_eq!(ruleset_complexity(&sum).unwrap(), 6.0);
    let empty = RuleSet::new(vec![], universe(), Aggregation::Average);
    assert!(empty.is_err() || ruleset_complexity(&empty.unwrap()).is_err());
}

#[test]
fn rule_outside_universe_rejected() {
    let r = rule_from(&[9]);
    assert!(RuleSet::new(vec![r], universe(), Aggregation::Average).is_err());
}

#[test]
fn understandability_anchors() {
    for fam in DeclineFamily::ALL {
        for b in [0.5, 1.0, 3.0, 10.0] {
            let p = UnderstandabilityParams::new(b, fam).unwrap();
            assert_eq!(understandability(0.0, &p).unwrap(), 1.0);
        }
    }
    let g = understandability(
        3.0,
        &UnderstandabilityParams::new(3.0, DeclineFamily::Gaussian).unwrap(),
    )
    .unwrap();
    assert!((g - (-1.0f64 / 9.0).exp()).abs() < 1e-15);
    let s = understandability(3.0, &UnderstandabilityParams::new(3.0, DeclineFamily::Sht).unwrap()).unwrap();
    assert!((s - (1.0 - (1.0f64 / 3.0).tanh().powi(2))).abs() < 1e-15);
    assert!(UnderstandabilityParams::new(0.0, DeclineFamily::Gaussian).is_err());
}

#[test]
fn explainability_cases() {
    let p = UnderstandabilityParams::new(3.0, DeclineFamily::Gaussian).unwrap();
    assert_eq!(explainability(1.0, 1.0, 0.0, &p).unwrap().explainability, 1.0);
    assert!((explainability(1.0, 1.0, 3.0, &p).unwrap().explainability - 0.8948).abs() < 1e-4);
    assert_eq!(explainability(0.0, 0.7, 2.0, &p).unwrap().explainability, 0.0);
    assert!(explainability(1.2, 1.0, 0.0, &p).is_err());
    assert_eq!(explainability(1.0 + 1e-10, 1.0, 0.0, &p).unwrap().interpretability, 1.0);
}

#[test]
fn total_examples() {
    assert_eq!(total_two(0.5, 0.5).unwrap(), 0.75);
    assert_eq!(total_two(1.0, 0.3).unwrap(), 1.0);
    assert_eq!(total_explainability(&[0.4]).unwrap(), 0.4);
    assert_eq!(total_explainability(&[0.5, 0.5, 0.5]).unwrap(), 0.875);
    assert!(total_explainability(&[]).is_err());
    assert!(total_two(-0.1, 0.5).is_err());
}
