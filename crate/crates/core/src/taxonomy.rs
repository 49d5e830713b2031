//! Quantitative explainability taxonomy.
//!
//! Rules are conjunctions of clauses. Their complexity grows with the clause
//! count and with repeated clauses on the same feature; understandability
//! declines sigmoidally with complexity relative to a user's tolerable
//! complexity `omega_b`; explainability is the product of interpretability,
//! completeness and understandability; and several explanations compose
//! through the complement-product operator [`total_two`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack accepted around the `[0, 1]` bounds before clamping.
pub const RANGE_SLACK: f64 = 1e-9;

/// Clamp `value` into `[0, 1]`, accepting values within [`RANGE_SLACK`] of
/// the bounds.
pub fn unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() || !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(value.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition {
    /// `lower <= feature <= upper`; `None` stands for an unbounded side.
    Interval { lower: Option<f64>, upper: Option<f64> },
    /// Categorical membership `feature in {values}`.
    OneOf { values: Vec<String> },
    /// Interval overlap between the item range and `[lower, upper]`.
    Overlaps { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub feature: String,
    pub condition: Condition,
}

impl Clause {
    pub fn interval(feature: impl Into<String>, lower: f64, upper: f64) -> Result<Self> {
        let feature = feature.into();
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::arg(format!(
                "clause on `{feature}` has invalid bounds [{lower}, {upper}]"
            )));
        }
        let finite = |v: f64| v.is_finite().then_some(v);
        Ok(Self {
            feature,
            condition: Condition::Interval {
                lower: finite(lower),
                upper: finite(upper),
            },
        })
    }

    pub fn one_of<I, S>(feature: impl Into<String>, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let feature = feature.into();
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        if values.is_empty() {
            return Err(Error::arg(format!("membership clause on `{feature}` is empty")));
        }
        Ok(Self {
            feature,
            condition: Condition::OneOf { values },
        })
    }

    pub fn overlaps(feature: impl Into<String>, lower: f64, upper: f64) -> Result<Self> {
        let feature = feature.into();
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::arg(format!(
                "overlap clause on `{feature}` has invalid bounds [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            feature,
            condition: Condition::Overlaps { lower, upper },
        })
    }

    /// Whether a numeric value satisfies an interval clause.
    pub fn contains(&self, value: f64) -> bool {
        match &self.condition {
            Condition::Interval { lower, upper } => {
                lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u)
            }
            _ => false,
        }
    }
}

/// Bound for display: rounded to 9 decimals, always with a fractional part.
fn bound(v: f64) -> String {
    format!("{:?}", (v * 1e9).round() / 1e9)
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.condition {
            Condition::Interval { lower, upper } => match (lower, upper) {
                (Some(l), Some(u)) => write!(f, "{} <= {} <= {}", bound(*l), self.feature, bound(*u)),
                (Some(l), None) => write!(f, "{} >= {}", self.feature, bound(*l)),
                (None, Some(u)) => write!(f, "{} <= {}", self.feature, bound(*u)),
                (None, None) => write!(f, "{} is any", self.feature),
            },
            Condition::OneOf { values } => {
                if values.len() == 1 {
                    write!(f, "{} = {}", self.feature, values[0])
                } else {
                    write!(f, "{} IN {{{}}}", self.feature, values.join(", "))
                }
            }
            Condition::Overlaps { lower, upper } => {
                write!(f, "{} OVERLAPS [{lower}, {upper}]", self.feature)
            }
        }
    }
}

/// An IF-THEN rule: a conjunction of clauses implying a class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub clauses: Vec<Clause>,
    pub label: String,
}

impl Rule {
    pub fn new(clauses: Vec<Clause>, label: impl Into<String>) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::Empty("rule clauses"));
        }
        Ok(Self {
            clauses,
            label: label.into(),
        })
    }

    /// `|R|`, the number of conjoined clauses.
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// The set of distinct features the rule's clauses refer to.
    pub fn features(&self) -> BTreeSet<&str> {
        self.clauses.iter().map(|c| c.feature.as_str()).collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IF ")?;
        for (i, clause) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " AND ")?;
            }
            write!(f, "{clause}")?;
        }
        write!(f, " THEN {}", self.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Sum,
    #[default]
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub feature_universe: BTreeSet<String>,
    #[serde(default)]
    pub aggregation: Aggregation,
}

impl RuleSet {
    /// Build a rule set, checking every clause's feature against the universe.
    pub fn new<I, S>(rules: Vec<Rule>, feature_universe: I, aggregation: Aggregation) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let feature_universe: BTreeSet<String> = feature_universe.into_iter().map(Into::into).collect();
        for rule in &rules {
            check_rule(rule, &feature_universe)?;
        }
        Ok(Self {
            rules,
            feature_universe,
            aggregation,
        })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Human-readable IF-THEN listing, one rule per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str(&rule.to_string());
            out.push('\n');
        }
        out
    }
}

fn check_rule(rule: &Rule, universe: &BTreeSet<String>) -> Result<()> {
    if rule.is_empty() {
        return Err(Error::Empty("rule clauses"));
    }
    for clause in &rule.clauses {
        if !universe.contains(&clause.feature) {
            return Err(Error::arg(format!(
                "feature `{}` is not part of the rule set's feature universe",
                clause.feature
            )));
        }
    }
    Ok(())
}

/// Complexity of a single rule: `(|R| / #S) * (|R| - 1)`.
pub fn rule_complexity(rule: &Rule, context: &RuleSet) -> Result<f64> {
    check_rule(rule, &context.feature_universe)?;
    let len = rule.len() as f64;
    let distinct = rule.features().len() as f64;
    Ok(len / distinct * (len - 1.0))
}

/// Sum or mean of the per-rule complexities, per the set's aggregation mode.
pub fn ruleset_complexity(rules: &RuleSet) -> Result<f64> {
    if rules.is_empty() {
        return Err(Error::Empty("rule set"));
    }
    let mut total = 0.0;
    for rule in &rules.rules {
        total += rule_complexity(rule, rules)?;
    }
    Ok(match rules.aggregation {
        Aggregation::Sum => total,
        Aggregation::Average => total / rules.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclineFamily {
    /// `exp(-(w / 3 w_b)^2)`
    #[default]
    Gaussian,
    /// `1 - tanh^2(w / 3 w_b)`
    Sht,
}

impl DeclineFamily {
    pub const ALL: [DeclineFamily; 2] = [DeclineFamily::Gaussian, DeclineFamily::Sht];

    pub fn name(self) -> &'static str {
        match self {
            DeclineFamily::Gaussian => "gaussian",
            DeclineFamily::Sht => "sht",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnderstandabilityParams {
    pub omega_b: f64,
    pub family: DeclineFamily,
}

impl UnderstandabilityParams {
    pub fn new(omega_b: f64, family: DeclineFamily) -> Result<Self> {
        if !(omega_b.is_finite() && omega_b > 0.0) {
            return Err(Error::arg(format!("omega_b must be positive, got {omega_b}")));
        }
        Ok(Self { omega_b, family })
    }
}

pub fn understandability(omega: f64, params: &UnderstandabilityParams) -> Result<f64> {
    if !(params.omega_b.is_finite() && params.omega_b > 0.0) {
        return Err(Error::arg(format!("omega_b must be positive, got {}", params.omega_b)));
    }
    if omega.is_nan() || omega < 0.0 {
        return Err(Error::arg(format!("complexity must be non-negative, got {omega}")));
    }
    let x = omega / (3.0 * params.omega_b);
    Ok(match params.family {
        DeclineFamily::Gaussian => (-x * x).exp(),
        DeclineFamily::Sht => {
            let t = x.tanh();
            1.0 - t * t
        }
    })
}

/// The `(I, C, w, U, E)` bundle describing one explanation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplanationAssessment {
    pub interpretability: f64,
    pub completeness: f64,
    pub complexity: f64,
    pub understandability: f64,
    pub explainability: f64,
}

pub fn explainability(
    interpretability: f64,
    completeness: f64,
    omega: f64,
    params: &UnderstandabilityParams,
) -> Result<ExplanationAssessment> {
    let interpretability = unit_interval("interpretability", interpretability)?;
    let completeness = unit_interval("completeness", completeness)?;
    let understandability = understandability(omega, params)?;
    Ok(ExplanationAssessment {
        interpretability,
        completeness,
        complexity: omega,
        understandability,
        explainability: interpretability * completeness * understandability,
    })
}

/// Total explainability of two explanations.
pub fn total_two(e1: f64, e2: f64) -> Result<f64> {
    let e1 = unit_interval("e1", e1)?;
    let e2 = unit_interval("e2", e2)?;
    let (hi, lo) = if e1 >= e2 { (e1, e2) } else { (e2, e1) };
    Ok(hi + (1.0 - hi) * lo)
}

/// Recursive composition over an ordered list: `E_1 = v_1`,
/// `E_k = Tot(v_k, E_{k-1})`.
pub fn total_explainability(values: &[f64]) -> Result<f64> {
    let (first, rest) = values.split_first().ok_or(Error::Empty("explainability values"))?;
    let mut acc = unit_interval("e1", *first)?;
    for &v in rest {
        acc = total_two(v, acc)?;
    }
    Ok(acc)
}

/// `points` evenly spaced values over `[min, max]`.
pub fn linspace(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        n => (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect(),
    }
}
