//! Interval rules from an SVM: each support vector is paired with the nearest
//! prototype of its own class and the axis-aligned box spanning the two
//! becomes one IF-THEN rule.

use serde::{Deserialize, Serialize};

use super::svm::{features_and_labels, SvmModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::taxonomy::{Aggregation, Clause, Rule, RuleSet};

/// A rule together with the points that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedRule {
    pub rule: Rule,
    pub class: usize,
    pub support_vector: Vec<f64>,
    pub prototype: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub rules: Vec<ExtractedRule>,
    /// Per class, the prototypes used.
    pub prototypes: Vec<Vec<Vec<f64>>>,
}

impl Extraction {
    pub fn rule_set(&self, feature_names: &[String], aggregation: Aggregation) -> Result<RuleSet> {
        RuleSet::new(
            self.rules.iter().map(|r| r.rule.clone()).collect(),
            feature_names.iter().cloned(),
            aggregation,
        )
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn centroid(points: &[&Vec<f64>]) -> Vec<f64> {
    let p = points[0].len();
    let mut c = vec![0.0; p];
    for x in points {
        for (ci, xi) in c.iter_mut().zip(x.iter()) {
            *ci += xi;
        }
    }
    c.iter_mut().for_each(|v| *v /= points.len() as f64);
    c
}

/// Deterministic k-medoids: farthest-first seeding from the point nearest
/// the centroid, then alternate assignment and medoid update.
pub fn k_medoids(points: &[&Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = points.len();
    let k = k.min(n).max(1);
    let c = centroid(points);
    let first = (0..n)
        .min_by(|&a, &b| dist2(points[a], &c).total_cmp(&dist2(points[b], &c)))
        .unwrap();
    let mut medoids = vec![first];
    while medoids.len() < k {
        let next = (0..n)
            .filter(|i| !medoids.contains(i))
            .max_by(|&a, &b| {
                let da = medoids
                    .iter()
                    .map(|&m| dist2(points[a], points[m]))
                    .fold(f64::INFINITY, f64::min);
                let db = medoids
                    .iter()
                    .map(|&m| dist2(points[b], points[m]))
                    .fold(f64::INFINITY, f64::min);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .unwrap();
        medoids.push(next);
    }
    for _ in 0..100 {
        let assign: Vec<usize> = (0..n)
            .map(|i| {
                (0..k)
                    .min_by(|&a, &b| {
                        dist2(points[i], points[medoids[a]]).total_cmp(&dist2(points[i], points[medoids[b]]))
                    })
                    .unwrap()
            })
            .collect();
        let mut changed = false;
        for (slot, m) in medoids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assign[i] == slot).collect();
            if members.is_empty() {
                continue;
            }
            let best = *members
                .iter()
                .min_by(|&&a, &&b| {
                    let ca: f64 = members.iter().map(|&j| dist2(points[a], points[j]).sqrt()).sum();
                    let cb: f64 = members.iter().map(|&j| dist2(points[b], points[j]).sqrt()).sum();
                    ca.total_cmp(&cb).then(a.cmp(&b))
                })
                .unwrap();
            if best != *m {
                *m = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    medoids.into_iter().map(|i| points[i].clone()).collect()
}

/// Hyper-rectangle rules from support vectors and same-class prototypes.
///
/// `n_prototypes_per_class == 1` uses the class centroid, larger values use
/// that many medoids. Support vectors of every binary subproblem take part,
/// each labelled with its own class; duplicate rules are dropped.
pub fn extract_rules_matrix(
    model: &SvmModel,
    x: &[Vec<f64>],
    labels: &[usize],
    n_prototypes_per_class: usize,
) -> Result<Extraction> {
    if n_prototypes_per_class == 0 {
        return Err(Error::arg("at least one prototype per class is required"));
    }
    if x.len() != labels.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: labels.len(),
            context: "labels",
        });
    }
    let n_classes = model.classes.len();
    let mut prototypes = Vec::with_capacity(n_classes);
    for class in 0..n_classes {
        let members: Vec<&Vec<f64>> = x
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == class)
            .map(|(r, _)| r)
            .collect();
        if members.is_empty() {
            return Err(Error::arg(format!("class `{}` has no rows", model.classes[class])));
        }
        prototypes.push(if n_prototypes_per_class == 1 {
            vec![centroid(&members)]
        } else {
            k_medoids(&members, n_prototypes_per_class)
        });
    }

    let mut rules: Vec<ExtractedRule> = Vec::new();
    for machine in &model.machines {
        for &row in &machine.support_indices {
            let sv = x
                .get(row)
                .ok_or_else(|| Error::arg(format!("support vector row {row} is outside the supplied data")))?;
            let class = labels[row];
            let proto = prototypes[class]
                .iter()
                .min_by(|a, b| dist2(sv, a).total_cmp(&dist2(sv, b)))
                .unwrap();
            let clauses = model
                .feature_names
                .iter()
                .enumerate()
                .map(|(j, name)| Clause::interval(name.clone(), sv[j].min(proto[j]), sv[j].max(proto[j])))
                .collect::<Result<Vec<_>>>()?;
            let rule = Rule::new(clauses, model.classes[class].clone())?;
            if !rules.iter().any(|r| r.rule == rule) {
                rules.push(ExtractedRule {
                    rule,
                    class,
                    support_vector: sv.clone(),
                    prototype: proto.clone(),
                });
            }
        }
    }
    for class in 0..n_classes {
        if !rules.iter().any(|r| r.class == class) {
            return Err(Error::arg(format!(
                "class `{}` has no support vectors",
                model.classes[class]
            )));
        }
    }
    Ok(Extraction { rules, prototypes })
}

pub fn extract_rules(
    model: &SvmModel,
    data: &Dataset,
    label: &str,
    n_prototypes_per_class: usize,
) -> Result<Extraction> {
    let (x, labels, classes, _) = features_and_labels(data, label)?;
    if classes != model.classes {
        return Err(Error::arg("data classes differ from the model's classes"));
    }
    extract_rules_matrix(model, &x, &labels, n_prototypes_per_class)
}

/// Box rule for a single support vector / prototype pair.
pub fn box_rule(feature_names: &[String], sv: &[f64], prototype: &[f64], label: &str) -> Result<Rule> {
    let clauses = feature_names
        .iter()
        .enumerate()
        .map(|(j, n)| Clause::interval(n.clone(), sv[j].min(prototype[j]), sv[j].max(prototype[j])))
        .collect::<Result<Vec<_>>>()?;
    Rule::new(clauses, label)
}
