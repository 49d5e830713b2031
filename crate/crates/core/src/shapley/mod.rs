//! Shapley attributions: exact enumeration, KernelSHAP, grouped players, and
//! stratified background sampling.

mod background;
mod exact;
mod kernel;

pub use background::{stratified_background, stratified_indices};
pub use exact::{exact_shapley, exact_shapley_grouped, exact_shapley_outputs, EXACT_LIMIT};
pub use kernel::{grouped_shap, kernel_shap, kernel_shap_outputs, shapley_kernel_weight, KERNEL_LIMIT};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::PredictFunction;

/// Rows standing in for "feature absent".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSet {
    pub feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    /// Class of each row when the set was drawn by stratification.
    #[serde(default)]
    pub strata: Option<Vec<usize>>,
}

impl BackgroundSet {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("background set"));
        }
        for r in &rows {
            if r.len() != feature_names.len() {
                return Err(Error::Dimension {
                    expected: feature_names.len(),
                    actual: r.len(),
                    context: "background row",
                });
            }
        }
        Ok(Self {
            feature_names,
            rows,
            strata: None,
        })
    }

    /// Feature names `x0, x1, ...`.
    pub fn unnamed(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        Self::new((0..p).map(|j| format!("x{j}")).collect(), rows)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.feature_names.len()
    }

    pub fn mean_row(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.arity()];
        for r in &self.rows {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.rows.len() as f64);
        m
    }

    /// Mean model output over the rows.
    pub fn mean_prediction<M: PredictFunction + ?Sized>(&self, model: &M) -> Vec<f64> {
        let k = model.n_outputs();
        let mut acc = vec![0.0; k];
        let mut out = vec![0.0; k];
        for r in &self.rows {
            model.predict_into(r, &mut out);
            for (a, o) in acc.iter_mut().zip(&out) {
                *a += o;
            }
        }
        acc.iter_mut().for_each(|v| *v /= self.rows.len() as f64);
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub members: Vec<usize>,
}

/// Players of a grouped game: disjoint feature sets covering every feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    groups: Vec<Group>,
    arity: usize,
}

impl Partition {
    pub fn new(groups: Vec<Group>, arity: usize) -> Result<Self> {
        let mut seen = vec![false; arity];
        for g in &groups {
            if g.members.is_empty() {
                return Err(Error::arg(format!("group `{}` is empty", g.name)));
            }
            for &m in &g.members {
                match seen.get_mut(m) {
                    None => {
                        return Err(Error::arg(format!(
                            "group `{}` references feature {m} of {arity}",
                            g.name
                        )))
                    }
                    Some(true) => return Err(Error::arg(format!("feature {m} belongs to more than one group"))),
                    Some(s) => *s = true,
                }
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::arg(format!("feature {j} belongs to no group")));
        }
        Ok(Self { groups, arity })
    }

    pub fn singletons(feature_names: &[String]) -> Self {
        Self {
            groups: feature_names
                .iter()
                .enumerate()
                .map(|(j, n)| Group {
                    name: n.clone(),
                    members: vec![j],
                })
                .collect(),
            arity: feature_names.len(),
        }
    }

    /// Groups given by member names; features not mentioned stay singletons,
    /// in feature order, with each named group placed at its first member.
    pub fn from_names(feature_names: &[String], groups: &[(&str, &[&str])]) -> Result<Self> {
        let index = |n: &str| {
            feature_names
                .iter()
                .position(|f| f == n)
                .ok_or_else(|| Error::MissingColumn(n.to_string()))
        };
        let mut owner: Vec<Option<usize>> = vec![None; feature_names.len()];
        let mut named = Vec::new();
        for (gi, (name, members)) in groups.iter().enumerate() {
            let mut idx = members.iter().map(|m| index(m)).collect::<Result<Vec<_>>>()?;
            idx.sort_unstable();
            for &i in &idx {
                if owner[i].replace(gi).is_some() {
                    return Err(Error::arg(format!(
                        "feature `{}` belongs to more than one group",
                        feature_names[i]
                    )));
                }
            }
            named.push(Group {
                name: name.to_string(),
                members: idx,
            });
        }
        let mut out = Vec::new();
        let mut placed = vec![false; groups.len()];
        for (j, o) in owner.iter().enumerate() {
            match o {
                None => out.push(Group {
                    name: feature_names[j].clone(),
                    members: vec![j],
                }),
                Some(g) if !placed[*g] => {
                    placed[*g] = true;
                    out.push(named[*g].clone());
                }
                Some(_) => {}
            }
        }
        Self::new(out, feature_names.len())
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.groups.iter().all(|g| g.members.len() == 1)
    }

    pub fn names(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.name.clone()).collect()
    }
}

/// Per-player attributions for one instance and one model output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyAttribution {
    pub feature_names: Vec<String>,
    pub phi: Vec<f64>,
    pub phi0: f64,
    /// Model output at the instance.
    pub prediction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grouping: Option<Vec<Group>>,
}

impl ShapleyAttribution {
    /// `phi0 + sum(phi) - prediction`.
    pub fn additivity_gap(&self) -> f64 {
        self.phi0 + self.phi.iter().sum::<f64>() - self.prediction
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `feature,phi,phi0`, one record per feature.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["feature", "phi", "phi0"])?;
        for (n, p) in self.feature_names.iter().zip(&self.phi) {
            w.write_record([n.as_str(), &format!("{p:?}"), &format!("{:?}", self.phi0)])?;
        }
        String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).map_err(|e| Error::arg(e.to_string()))
    }
}

/// Sample budget for KernelSHAP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Every non-trivial coalition.
    Full,
    /// At most this many coalitions; at or above `2^M - 2` means `Full`.
    Samples(usize),
}

impl Default for Budget {
    fn default() -> Self {
        Budget::Samples(1 << 11)
    }
}

/// How absent players get their values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imputation {
    /// Average over every background row.
    #[default]
    BackgroundMean,
    /// One background row drawn per coalition.
    SingleDraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KernelShapConfig {
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub imputation: Imputation,
}

/// Coalition game over a model, an instance, and a background.
pub(crate) struct Game<'a, M: ?Sized> {
    pub model: &'a M,
    pub instance: &'a [f64],
    pub background: &'a BackgroundSet,
    pub players: Vec<Vec<usize>>,
    pub imputation: Imputation,
    pub seed: u64,
}

impl<'a, M: PredictFunction + ?Sized> Game<'a, M> {
    pub fn new(
        model: &'a M,
        instance: &'a [f64],
        background: &'a BackgroundSet,
        players: Vec<Vec<usize>>,
        imputation: Imputation,
        seed: u64,
    ) -> Result<Self> {
        let p = model.arity();
        if instance.len() != p {
            return Err(Error::Dimension {
                expected: p,
                actual: instance.len(),
                context: "instance",
            });
        }
        if background.arity() != p {
            return Err(Error::Dimension {
                expected: p,
                actual: background.arity(),
                context: "background",
            });
        }
        if background.is_empty() {
            return Err(Error::Empty("background set"));
        }
        Ok(Self {
            model,
            instance,
            background,
            players,
            imputation,
            seed,
        })
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.model.n_outputs()
    }

    fn fill(&self, z: &mut [f64], mask: u64) {
        for (i, members) in self.players.iter().enumerate() {
            if mask >> i & 1 == 1 {
                for &m in members {
                    z[m] = self.instance[m];
                }
            }
        }
    }

    /// Expected model output with the players in `mask` fixed to the instance.
    pub fn value(&self, mask: u64) -> Vec<f64> {
        let k = self.n_outputs();
        let mut out = vec![0.0; k];
        let mut acc = vec![0.0; k];
        let mut z = vec![0.0; self.instance.len()];
        match self.imputation {
            Imputation::BackgroundMean => {
                for row in self.background.rows() {
                    z.copy_from_slice(row);
                    self.fill(&mut z, mask);
                    self.model.predict_into(&z, &mut out);
                    for (a, o) in acc.iter_mut().zip(&out) {
                        *a += o;
                    }
                }
                acc.iter_mut().for_each(|v| *v /= self.background.len() as f64);
                acc
            }
            Imputation::SingleDraw => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(mask);
                let row = &self.background.rows()[rng.gen_range(0..self.background.len())];
                z.copy_from_slice(row);
                self.fill(&mut z, mask);
                self.model.predict_into(&z, &mut out);
                out
            }
        }
    }

    /// Values of many coalitions, in order; parallel unless the model opts out.
    pub fn values(&self, masks: &[u64]) -> Vec<Vec<f64>>
    where
        M: Sync,
    {
        if self.model.concurrent() && masks.len() > 1 {
            masks.par_iter().map(|&m| self.value(m)).collect()
        } else {
            masks.iter().map(|&m| self.value(m)).collect()
        }
    }

    pub fn phi0(&self) -> Vec<f64> {
        self.background.mean_prediction(self.model)
    }

    pub fn prediction(&self) -> Vec<f64> {
        self.model.predict(self.instance)
    }
}

pub(crate) fn singleton_players(p: usize) -> Vec<Vec<usize>> {
    (0..p).map(|j| vec![j]).collect()
}

/// One attribution per model output from per-output phi columns.
pub(crate) fn assemble(
    names: Vec<String>,
    phi: Vec<Vec<f64>>,
    phi0: Vec<f64>,
    prediction: Vec<f64>,
    grouping: Option<Vec<Group>>,
) -> Vec<ShapleyAttribution> {
    phi.into_iter()
        .zip(phi0)
        .zip(prediction)
        .map(|((phi, phi0), prediction)| ShapleyAttribution {
            feature_names: names.clone(),
            phi,
            phi0,
            prediction,
            grouping: grouping.clone(),
        })
        .collect()
}

/// Mean absolute attribution per player.
pub fn mean_abs_importance(attributions: &[ShapleyAttribution]) -> Result<Vec<f64>> {
    let first = attributions.first().ok_or(Error::Empty("attributions"))?;
    let m = first.phi.len();
    let mut acc = vec![0.0; m];
    for a in attributions {
        if a.phi.len() != m {
            return Err(Error::Dimension {
                expected: m,
                actual: a.phi.len(),
                context: "attribution",
            });
        }
        for (s, p) in acc.iter_mut().zip(&a.phi) {
            *s += p.abs();
        }
    }
    acc.iter_mut().for_each(|v| *v /= attributions.len() as f64);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_validation() {
        let g = |n: &str, m: Vec<usize>| Group {
            name: n.into(),
            members: m,
        };
        assert!(Partition::new(vec![g("a", vec![0]), g("b", vec![1, 2])], 3).is_ok());
        assert!(Partition::new(vec![g("a", vec![0]), g("b", vec![0, 1, 2])], 3).is_err());
        assert!(Partition::new(vec![g("a", vec![0])], 2).is_err());
        assert!(Partition::new(vec![g("a", vec![0, 3])], 2).is_err());
    }

    #[test]
    fn partition_from_names() {
        let names: Vec<String> = ["a", "l0", "b", "l1"].iter().map(|s| s.to_string()).collect();
        let p = Partition::from_names(&names, &[("levels", &["l1", "l0"])]).unwrap();
        assert_eq!(p.names(), vec!["a", "levels", "b"]);
        assert_eq!(p.groups()[1].members, vec![1, 3]);
    }

    #[test]
    fn csv_export() {
        let a = ShapleyAttribution {
            feature_names: vec!["x".into(), "y".into()],
            phi: vec![0.5, -0.25],
            phi0: 1.0,
            prediction: 1.25,
            grouping: None,
        };
        assert_eq!(a.to_csv().unwrap(), "feature,phi,phi0\nx,0.5,1.0\ny,-0.25,1.0\n");
        assert_eq!(a.additivity_gap(), 0.0);
        let back: ShapleyAttribution = serde_json::from_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }
}
