//! End-to-end case studies: the Iris SVM with extracted rules, and the
//! MERLOT-schema recommender with grouped SHAP. Each run returns a report
//! and can write `summary.json`, `curves/*.csv`, `plots/*.svg`, `rules/*.txt`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::correlation::{correlation_matrix, CorrelationMatrix, Extremum};
use crate::data::encoding::{encode, UnseenPolicy};
use crate::data::grouping::{group_disciplines, LEVEL_COLUMNS};
use crate::data::merlot::{merge_resources_ratings, synthesize_merlot, validate_resources, FEATURE_COLUMNS};
use crate::data::wrapped::WrappedPredict;
use crate::data::{iris, Dataset, SchemaTag};
use crate::error::{Error, Result, StageExt};
use crate::fidelity::{
    default_grid, keep_absolute_resample, keep_positive_mask, keep_positive_resample, FidelityCurve, Resample,
};
use crate::models::extraction::extract_rules;
use crate::models::recommender::{
    recommender_predict_rated, recommender_rules, Recommender, RuleRendering, UserProfile,
};
use crate::models::svm::{features_and_labels, train_svm, SvmConfig, SvmModel};
use crate::models::{accuracy, PredictFunction};
use crate::plot::{bar_plot, line_plot, Series};
use crate::shapley::{
    kernel_shap, kernel_shap_outputs, mean_abs_importance, stratified_background, stratified_indices, Budget,
    Imputation, KernelShapConfig, ShapleyAttribution,
};
use crate::taxonomy::{
    explainability, linspace, rule_complexity, ruleset_complexity, total_two, understandability, Aggregation,
    DeclineFamily, RuleSet, UnderstandabilityParams,
};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "XAITAX_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmegaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for OmegaGrid {
    fn default() -> Self {
        Self {
            min: 0.5,
            max: 10.0,
            points: 64,
        }
    }
}

impl OmegaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) || self.points < 2 {
            return Err(Error::arg(format!(
                "omega_b grid needs 0 < min < max and at least 2 points, got [{}, {}] x {}",
                self.min, self.max, self.points
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrisConfig {
    pub svm: SvmConfig,
    pub prototypes_per_class: usize,
}

impl Default for IrisConfig {
    fn default() -> Self {
        Self {
            svm: SvmConfig::default(),
            prototypes_per_class: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MerlotConfig {
    /// Resources CSV; synthesized when absent.
    pub resources: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub n_resources: usize,
    pub n_ratings: usize,
    pub planted_correlation: f64,
    pub explained_items: usize,
    /// Discipline levels are grouped when any pair reaches this Cramér's V.
    pub grouping_threshold: f64,
    pub profile: UserProfile,
    pub rule_rendering: RuleRendering,
    pub min_average_rating: Option<f64>,
}

impl Default for MerlotConfig {
    fn default() -> Self {
        Self {
            resources: None,
            ratings: None,
            n_resources: 500,
            n_ratings: 2000,
            planted_correlation: 0.95,
            explained_items: 100,
            grouping_threshold: 0.8,
            profile: UserProfile::default(),
            rule_rendering: RuleRendering::Membership,
            min_average_rating: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub omega_b: OmegaGrid,
    /// Family used for the headline explainability figures.
    pub family: DeclineFamily,
    pub aggregation: Aggregation,
    pub background_fraction: f64,
    pub budget: Budget,
    pub imputation: Imputation,
    pub resample: Resample,
    /// Fractions of features kept; one point per feature count when absent.
    pub metric_grid: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,
    pub iris: IrisConfig,
    pub merlot: MerlotConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            omega_b: OmegaGrid::default(),
            family: DeclineFamily::Gaussian,
            aggregation: Aggregation::Average,
            background_fraction: 0.1,
            budget: Budget::default(),
            imputation: Imputation::BackgroundMean,
            resample: Resample::Full,
            metric_grid: None,
            output_dir: None,
            iris: IrisConfig::default(),
            merlot: MerlotConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: PipelineConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.omega_b.validate()?;
        if !(self.background_fraction > 0.0 && self.background_fraction <= 1.0) {
            return Err(Error::OutOfRange {
                name: "background_fraction",
                value: self.background_fraction,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if self.iris.prototypes_per_class == 0 {
            return Err(Error::arg("prototypes_per_class must be at least 1"));
        }
        if self.merlot.explained_items == 0 {
            return Err(Error::arg("explained_items must be at least 1"));
        }
        if let Some(g) = &self.metric_grid {
            FidelityCurve::new(
                crate::fidelity::MetricKind::KeepAbsoluteResample,
                g.clone(),
                vec![0.0; g.len()],
            )?;
        }
        self.merlot.profile.validate()
    }

    /// Output directory: the environment override, then the configured
    /// directory, then `out/<pipeline>`.
    pub fn resolve_output_dir(&self, pipeline: &str) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self
                .output_dir
                .clone()
                .unwrap_or_else(|| Path::new("out").join(pipeline)),
        }
    }

    fn shap(&self) -> KernelShapConfig {
        KernelShapConfig {
            budget: self.budget,
            seed: self.seed,
            imputation: self.imputation,
        }
    }

    fn resample(&self) -> Resample {
        match self.resample {
            Resample::Sampled { draws, .. } => Resample::Sampled { draws, seed: self.seed },
            r => r,
        }
    }

    fn grid(&self, m: usize) -> Vec<f64> {
        self.metric_grid.clone().unwrap_or_else(|| default_grid(m))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_abs_phi: f64,
}

/// Features by descending importance, ties by original order.
fn ranked_importance(names: &[String], values: &[f64]) -> Vec<FeatureImportance> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .map(|j| FeatureImportance {
            feature: names[j].clone(),
            mean_abs_phi: values[j],
        })
        .collect()
}

/// `E = I * C * U` of the white-box rules over the omega_b grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainabilitySweep {
    pub family: DeclineFamily,
    pub rule_complexity: f64,
    pub interpretability: f64,
    pub completeness: f64,
    pub omega_b: Vec<f64>,
    pub explainability: Vec<f64>,
}

/// `Tot(U(omega; omega_b), xi)` over the omega_b grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalSweep {
    pub family: DeclineFamily,
    pub rule_complexity: f64,
    pub shap_explainability: f64,
    pub omega_b: Vec<f64>,
    pub understandability: Vec<f64>,
    pub total_explainability: Vec<f64>,
    pub min_total: f64,
    pub max_total: f64,
}

fn explainability_sweep(omega: f64, grid: &[f64], family: DeclineFamily) -> Result<ExplainabilitySweep> {
    let e = grid
        .iter()
        .map(|&b| Ok(explainability(1.0, 1.0, omega, &UnderstandabilityParams::new(b, family)?)?.explainability))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExplainabilitySweep {
        family,
        rule_complexity: omega,
        interpretability: 1.0,
        completeness: 1.0,
        omega_b: grid.to_vec(),
        explainability: e,
    })
}

fn total_sweep(omega: f64, xi: f64, grid: &[f64], family: DeclineFamily) -> Result<TotalSweep> {
    let u = grid
        .iter()
        .map(|&b| understandability(omega, &UnderstandabilityParams::new(b, family)?))
        .collect::<Result<Vec<_>>>()?;
    let t = u.iter().map(|&v| total_two(v, xi)).collect::<Result<Vec<_>>>()?;
    Ok(TotalSweep {
        family,
        rule_complexity: omega,
        shap_explainability: xi,
        omega_b: grid.to_vec(),
        min_total: t.iter().copied().fold(f64::INFINITY, f64::min),
        max_total: t.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        understandability: u,
        total_explainability: t,
    })
}

fn sweeps_csv(header: &str, grid: &[f64], columns: &[&[f64]]) -> String {
    let mut out = format!("{header}\n");
    for (i, b) in grid.iter().enumerate() {
        out.push_str(&format!("{b:?}"));
        for c in columns {
            out.push_str(&format!(",{:?}", c[i]));
        }
        out.push('\n');
    }
    out
}

fn importance_csv(imp: &[FeatureImportance]) -> String {
    let mut out = String::from("feature,mean_abs_phi\n");
    for f in imp {
        out.push_str(&format!("{},{:?}\n", f.feature, f.mean_abs_phi));
    }
    out
}

fn attributions_csv(instances: &[usize], attributions: &[ShapleyAttribution]) -> String {
    let mut out = String::from("instance,feature,phi,phi0\n");
    for (i, a) in instances.iter().zip(attributions) {
        for (n, p) in a.feature_names.iter().zip(&a.phi) {
            out.push_str(&format!("{i},{n},{p:?},{:?}\n", a.phi0));
        }
    }
    out
}

struct Artifacts {
    files: Vec<(String, String)>,
}

impl Artifacts {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, path: &str, content: String) {
        self.files.push((path.to_string(), content));
    }

    fn write(self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for (rel, content) in self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, content)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn fidelity_plot(title: &str, curve: &FidelityCurve, y_label: &str) -> String {
    let (x, label): (Vec<f64>, &str) = match &curve.features_kept {
        Some(k) => (k.iter().map(|&v| v as f64).collect(), "features kept"),
        None => (curve.fractions.clone(), "fraction of features kept"),
    };
    line_plot(
        &format!("{title} (AUC {:.3})", curve.auc),
        label,
        y_label,
        &[Series {
            name: curve.metric.name(),
            x: &x,
            y: &curve.scores,
        }],
        true,
    )
}

fn sweep_plot(title: &str, y_label: &str, series: &[(&str, &[f64], &[f64])]) -> String {
    let s: Vec<Series<'_>> = series.iter().map(|(n, x, y)| Series { name: n, x, y }).collect();
    line_plot(title, "omega_b", y_label, &s, false)
}

fn map_items<M, T, F>(model: &M, n: usize, f: F) -> Result<Vec<T>>
where
    M: PredictFunction + ?Sized,
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if model.concurrent() {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

// ---------------------------------------------------------------- Iris

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmSummary {
    pub classes: Vec<String>,
    pub kernel: String,
    pub support_vectors_per_machine: Vec<usize>,
    pub training_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSummary {
    pub count: usize,
    pub aggregation: Aggregation,
    pub per_rule_complexity_min: f64,
    pub per_rule_complexity_max: f64,
    pub rule_complexity: f64,
}

fn rule_summary(rules: &RuleSet) -> Result<RuleSummary> {
    let per = rules
        .rules
        .iter()
        .map(|r| rule_complexity(r, rules))
        .collect::<Result<Vec<_>>>()?;
    Ok(RuleSummary {
        count: rules.len(),
        aggregation: rules.aggregation,
        per_rule_complexity_min: per.iter().copied().fold(f64::INFINITY, f64::min),
        per_rule_complexity_max: per.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        rule_complexity: ruleset_complexity(rules)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    pub features: Vec<String>,
    pub background_rows: usize,
    pub explained: usize,
    pub budget: Budget,
    pub imputation: Imputation,
    pub max_additivity_gap: f64,
    pub importance: Vec<FeatureImportance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeepAbsoluteSummary {
    pub curve: FidelityCurve,
    pub auc: f64,
    pub top2_accuracy: f64,
    pub model_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrisSummary {
    pub pipeline: String,
    pub seed: u64,
    pub model: SvmSummary,
    pub rules: RuleSummary,
    pub explainability: Vec<ExplainabilitySweep>,
    pub shap: ShapSummary,
    pub keep_absolute: KeepAbsoluteSummary,
    pub total_explainability: Vec<TotalSweep>,
}

pub struct IrisRun {
    pub summary: IrisSummary,
    pub model: SvmModel,
    pub rules: RuleSet,
    /// Per instance, attributions of the predicted class output.
    pub attributions: Vec<ShapleyAttribution>,
}

pub fn run_iris_pipeline(config: &PipelineConfig) -> Result<IrisRun> {
    config.validate()?;
    let data = iris::load().stage("load")?;
    let (x, labels, classes, names) = features_and_labels(&data, iris::LABEL).stage("load")?;
    let model = train_svm(&data, iris::LABEL, &config.iris.svm).stage("train")?;
    let model_accuracy = accuracy(&model, &x, &labels);

    let extraction = extract_rules(&model, &data, iris::LABEL, config.iris.prototypes_per_class).stage("rules")?;
    let rules = extraction.rule_set(&names, config.aggregation).stage("rules")?;
    let rule_stats = rule_summary(&rules).stage("rules")?;
    let omega = rule_stats.rule_complexity;

    let grid_b = config.omega_b.values();
    let explain = DeclineFamily::ALL
        .iter()
        .map(|&f| explainability_sweep(omega, &grid_b, f))
        .collect::<Result<Vec<_>>>()
        .stage("explainability")?;

    let background = stratified_background(names.clone(), &x, &labels, config.background_fraction, config.seed)
        .stage("background")?;
    let shap_cfg = config.shap();
    let per_instance: Vec<Vec<ShapleyAttribution>> = map_items(&model, x.len(), |i| {
        kernel_shap_outputs(&model, &x[i], &background, &shap_cfg)
    })
    .stage("shap")?;
    let max_gap = per_instance
        .iter()
        .flatten()
        .map(|a| a.additivity_gap().abs())
        .fold(0.0, f64::max);
    let mut importance = vec![0.0; names.len()];
    for outputs in &per_instance {
        for a in outputs {
            for (s, p) in importance.iter_mut().zip(&a.phi) {
                *s += p.abs();
            }
        }
    }
    importance.iter_mut().for_each(|v| *v /= per_instance.len() as f64);
    let predicted: Vec<ShapleyAttribution> = per_instance
        .iter()
        .zip(&x)
        .map(|(outs, xi)| outs[model.predict_class(xi)].clone())
        .collect();

    let grid = config.grid(names.len());
    let curve = keep_absolute_resample(&model, &x, &labels, &predicted, &background, &grid, config.resample())
        .stage("keep_absolute")?;
    let top2 = curve
        .score_at_count(2)
        .ok_or_else(|| Error::arg("metric grid has no point with exactly 2 features kept"))
        .stage("keep_absolute")?;
    let auc = curve.auc;

    let totals = DeclineFamily::ALL
        .iter()
        .map(|&f| total_sweep(omega, auc, &grid_b, f))
        .collect::<Result<Vec<_>>>()
        .stage("total_explainability")?;

    let summary = IrisSummary {
        pipeline: "iris".into(),
        seed: config.seed,
        model: SvmSummary {
            classes: classes.clone(),
            kernel: format!("{:?}", model.kernel),
            support_vectors_per_machine: model.machines.iter().map(|m| m.support_indices.len()).collect(),
            training_accuracy: model_accuracy,
        },
        rules: rule_stats,
        explainability: explain,
        shap: ShapSummary {
            features: names.clone(),
            background_rows: background.len(),
            explained: x.len(),
            budget: config.budget,
            imputation: config.imputation,
            max_additivity_gap: max_gap,
            importance: ranked_importance(&names, &importance),
        },
        keep_absolute: KeepAbsoluteSummary {
            auc,
            top2_accuracy: top2,
            model_accuracy,
            curve,
        },
        total_explainability: totals,
    };
    Ok(IrisRun {
        summary,
        model,
        rules,
        attributions: predicted,
    })
}

fn sweep_artifacts(a: &mut Artifacts, prefix: &str, explain: Option<&[ExplainabilitySweep]>, totals: &[TotalSweep]) {
    if let Some(explain) = explain {
        let grid = &explain[0].omega_b;
        let cols: Vec<&[f64]> = explain.iter().map(|s| s.explainability.as_slice()).collect();
        let header = format!(
            "omega_b,{}",
            explain.iter().map(|s| s.family.name()).collect::<Vec<_>>().join(",")
        );
        a.add(
            &format!("curves/{prefix}_explainability.csv"),
            sweeps_csv(&header, grid, &cols),
        );
        let series: Vec<(&str, &[f64], &[f64])> = explain
            .iter()
            .map(|s| (s.family.name(), s.omega_b.as_slice(), s.explainability.as_slice()))
            .collect();
        a.add(
            &format!("plots/{prefix}_explainability.svg"),
            sweep_plot(
                &format!(
                    "Explainability of the rules (omega = {:.2})",
                    explain[0].rule_complexity
                ),
                "E",
                &series,
            ),
        );
    }
    let grid = &totals[0].omega_b;
    let mut cols: Vec<&[f64]> = Vec::new();
    let mut header = String::from("omega_b");
    for t in totals {
        header.push_str(&format!(",u_{0},total_{0}", t.family.name()));
        cols.push(&t.understandability);
        cols.push(&t.total_explainability);
    }
    a.add(
        &format!("curves/{prefix}_total_explainability.csv"),
        sweeps_csv(&header, grid, &cols),
    );
    let series: Vec<(&str, &[f64], &[f64])> = totals
        .iter()
        .map(|s| (s.family.name(), s.omega_b.as_slice(), s.total_explainability.as_slice()))
        .collect();
    a.add(
        &format!("plots/{prefix}_total_explainability.svg"),
        sweep_plot(
            &format!("Total explainability, xi = {:.3}", totals[0].shap_explainability),
            "Tot(U, xi)",
            &series,
        ),
    );
}

impl IrisRun {
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)? + "\n")
    }

    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let s = &self.summary;
        let mut a = Artifacts::new();
        a.add("summary.json", self.summary_json()?);
        a.add("rules/iris_rules.txt", self.rules.to_text());
        a.add(
            "rules/iris_rules.json",
            serde_json::to_string_pretty(&self.rules)? + "\n",
        );
        a.add("curves/iris_keep_absolute.csv", s.keep_absolute.curve.to_csv());
        a.add(
            "plots/iris_keep_absolute.svg",
            fidelity_plot("Iris keep-absolute (resample)", &s.keep_absolute.curve, "accuracy"),
        );
        a.add("curves/iris_importance.csv", importance_csv(&s.shap.importance));
        let (labels, values): (Vec<String>, Vec<f64>) = s
            .shap
            .importance
            .iter()
            .map(|f| (f.feature.clone(), f.mean_abs_phi))
            .unzip();
        a.add(
            "plots/iris_importance.svg",
            bar_plot(
                "Iris feature importance",
                "mean |phi| summed over classes",
                &labels,
                &values,
            ),
        );
        let idx: Vec<usize> = (0..self.attributions.len()).collect();
        a.add(
            "curves/iris_attributions.csv",
            attributions_csv(&idx, &self.attributions),
        );
        sweep_artifacts(&mut a, "iris", Some(&s.explainability), &s.total_explainability);
        a.write(dir).stage("write")
    }
}

// ---------------------------------------------------------------- MERLOT

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub source: String,
    pub resources: usize,
    pub ratings: usize,
    pub unmatched_ratings: usize,
    pub training_rows: usize,
    pub training_positive_rate: f64,
    pub items_recommended: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub threshold: f64,
    pub max_discipline_cramers_v: f64,
    pub grouping_applied: bool,
    pub max_before: Option<Extremum>,
    pub max_after: Option<Extremum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommenderRuleSummary {
    pub rendering: RuleRendering,
    pub count: usize,
    pub rule_complexity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MerlotSummary {
    pub pipeline: String,
    pub seed: u64,
    pub data: DataSummary,
    pub correlation: CorrelationSummary,
    pub shap: ShapSummary,
    pub explained_positive: usize,
    pub keep_absolute: KeepAbsoluteSummary,
    pub keep_positive_mask: FidelityCurve,
    pub keep_positive_resample: FidelityCurve,
    pub rules: RecommenderRuleSummary,
    pub total_explainability: Vec<TotalSweep>,
}

pub struct MerlotRun {
    pub summary: MerlotSummary,
    pub correlation_before: CorrelationMatrix,
    pub correlation_after: Option<CorrelationMatrix>,
    pub rules: RuleSet,
    pub explained_items: Vec<usize>,
    pub attributions: Vec<ShapleyAttribution>,
}

fn max_discipline_v(m: &CorrelationMatrix) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in LEVEL_COLUMNS.iter().enumerate() {
        for b in &LEVEL_COLUMNS[i + 1..] {
            if let Some(v) = m.get(a, b) {
                best = best.max(v);
            }
        }
    }
    best
}

/// Load the configured CSVs or synthesize the tables.
pub fn merlot_inputs(config: &PipelineConfig) -> Result<(Dataset, Dataset, String)> {
    let m = &config.merlot;
    match (&m.resources, &m.ratings) {
        (Some(r), Some(t)) => Ok((
            Dataset::from_csv_path(r, SchemaTag::MerlotResources)?,
            Dataset::from_csv_path(t, SchemaTag::MerlotRatings)?,
            "files".into(),
        )),
        (None, None) => {
            let (r, t) = synthesize_merlot(m.n_resources, m.n_ratings, config.seed, m.planted_correlation)?;
            Ok((r, t, "synthetic".into()))
        }
        _ => Err(Error::arg("resources and ratings paths must be given together")),
    }
}

pub fn run_merlot_pipeline(config: &PipelineConfig, resources: &Dataset, ratings: &Dataset) -> Result<MerlotRun> {
    run_merlot_pipeline_from(config, resources, ratings, "supplied")
}

pub fn run_merlot_pipeline_default(config: &PipelineConfig) -> Result<MerlotRun> {
    let (r, t, source) = merlot_inputs(config).stage("load")?;
    run_merlot_pipeline_from(config, &r, &t, &source)
}

fn run_merlot_pipeline_from(
    config: &PipelineConfig,
    resources: &Dataset,
    ratings: &Dataset,
    source: &str,
) -> Result<MerlotRun> {
    config.validate()?;
    let mc = &config.merlot;
    validate_resources(resources).stage("load")?;
    let mut recommender = Recommender::new(mc.profile.clone()).stage("recommender")?;
    recommender.min_average_rating = mc.min_average_rating;

    let merged = merge_resources_ratings(resources, ratings).stage("merge")?;
    let training_raw = merged.data.select_columns(&FEATURE_COLUMNS).stage("merge")?;
    let items_raw = resources.select_columns(&FEATURE_COLUMNS).stage("merge")?;

    let before = correlation_matrix(&training_raw).stage("correlation")?;
    let disc_v = max_discipline_v(&before);
    let grouping_applied = disc_v >= mc.grouping_threshold;
    let (training, items) = if grouping_applied {
        (
            group_disciplines(&training_raw).stage("grouping")?,
            group_disciplines(&items_raw).stage("grouping")?,
        )
    } else {
        (training_raw.clone(), items_raw.clone())
    };
    let after = if grouping_applied {
        Some(correlation_matrix(&training).stage("correlation")?)
    } else {
        None
    };

    let train_decisions = recommender_predict_rated(&with_ids(&training_raw, &merged.data)?, ratings, &recommender)
        .stage("recommender")?;
    let train_labels: Vec<usize> = train_decisions.iter().map(|r| usize::from(r.recommended)).collect();
    let item_decisions =
        recommender_predict_rated(&with_ids(&items_raw, resources)?, ratings, &recommender).stage("recommender")?;
    let item_labels: Vec<usize> = item_decisions.iter().map(|r| usize::from(r.recommended)).collect();

    let (train_enc, rules) = encode(&training, None, UnseenPolicy::Strict).stage("encode")?;
    let (items_enc, rules) = encode(&items, Some(&rules), UnseenPolicy::FreshCode).stage("encode")?;
    let names: Vec<String> = train_enc.names().iter().map(|s| s.to_string()).collect();
    let train_x = train_enc.to_matrix().stage("encode")?;
    let items_x = items_enc.to_matrix().stage("encode")?;

    let background = stratified_background(
        names.clone(),
        &train_x,
        &train_labels,
        config.background_fraction,
        config.seed,
    )
    .stage("background")?;

    let n_items = items_x.len();
    let explained: Vec<usize> = if mc.explained_items >= n_items {
        (0..n_items).collect()
    } else {
        stratified_indices(&item_labels, mc.explained_items as f64 / n_items as f64, config.seed)
            .stage("select_items")?
    };
    let ex_x: Vec<Vec<f64>> = explained.iter().map(|&i| items_x[i].clone()).collect();
    let ex_labels: Vec<usize> = explained.iter().map(|&i| item_labels[i]).collect();

    let model = WrappedPredict::new(&recommender, &items_enc, &rules).stage("shap")?;
    let shap_cfg = config.shap();
    let attributions: Vec<ShapleyAttribution> = map_items(&model, ex_x.len(), |i| {
        kernel_shap(&model, &ex_x[i], &background, &shap_cfg)
    })
    .stage("shap")?;
    let max_gap = attributions
        .iter()
        .map(|a| a.additivity_gap().abs())
        .fold(0.0, f64::max);
    let importance = mean_abs_importance(&attributions).stage("shap")?;

    let grid = config.grid(names.len());
    let resample = config.resample();
    let curve = keep_absolute_resample(&model, &ex_x, &ex_labels, &attributions, &background, &grid, resample)
        .stage("keep_absolute")?;
    let top2 = curve
        .score_at_count(2)
        .ok_or_else(|| Error::arg("metric grid has no point with exactly 2 features kept"))
        .stage("keep_absolute")?;
    let kp_mask = keep_positive_mask(&model, &ex_x, &attributions, &background, &grid).stage("keep_positive")?;
    let kp_res =
        keep_positive_resample(&model, &ex_x, &attributions, &background, &grid, resample).stage("keep_positive")?;
    let model_accuracy = accuracy(&model, &ex_x, &ex_labels);

    let rs_rules = recommender_rules(&mc.profile, mc.rule_rendering).stage("rules")?;
    let rs_rules = RuleSet::new(rs_rules.rules, rs_rules.feature_universe, config.aggregation).stage("rules")?;
    let omega_m = ruleset_complexity(&rs_rules).stage("rules")?;
    let xi = curve.auc;
    let grid_b = config.omega_b.values();
    let totals = DeclineFamily::ALL
        .iter()
        .map(|&f| total_sweep(omega_m, xi, &grid_b, f))
        .collect::<Result<Vec<_>>>()
        .stage("total_explainability")?;

    let summary = MerlotSummary {
        pipeline: "merlot".into(),
        seed: config.seed,
        data: DataSummary {
            source: source.into(),
            resources: resources.n_rows(),
            ratings: ratings.n_rows(),
            unmatched_ratings: merged.unmatched.len(),
            training_rows: train_x.len(),
            training_positive_rate: train_labels.iter().sum::<usize>() as f64 / train_labels.len().max(1) as f64,
            items_recommended: item_labels.iter().sum(),
        },
        correlation: CorrelationSummary {
            threshold: mc.grouping_threshold,
            max_discipline_cramers_v: disc_v,
            grouping_applied,
            max_before: before.max_off_diagonal(),
            max_after: after.as_ref().and_then(|m| m.max_off_diagonal()),
        },
        shap: ShapSummary {
            features: names.clone(),
            background_rows: background.len(),
            explained: explained.len(),
            budget: config.budget,
            imputation: config.imputation,
            max_additivity_gap: max_gap,
            importance: ranked_importance(&names, &importance),
        },
        explained_positive: ex_labels.iter().sum(),
        keep_absolute: KeepAbsoluteSummary {
            auc: xi,
            top2_accuracy: top2,
            model_accuracy,
            curve,
        },
        keep_positive_mask: kp_mask,
        keep_positive_resample: kp_res,
        rules: RecommenderRuleSummary {
            rendering: mc.rule_rendering,
            count: rs_rules.len(),
            rule_complexity: omega_m,
        },
        total_explainability: totals,
    };
    Ok(MerlotRun {
        summary,
        correlation_before: before,
        correlation_after: after,
        rules: rs_rules,
        explained_items: explained,
        attributions,
    })
}

/// `features` with the `id` column of `source` attached, for the rating gate.
fn with_ids(features: &Dataset, source: &Dataset) -> Result<Dataset> {
    let mut cols = features.columns().to_vec();
    if source.has_column("resource") {
        let ids = source.numeric("resource")?.to_vec();
        cols.push(crate::data::Column::numeric("id", ids));
    } else {
        cols.push(source.column("id")?.clone());
    }
    Dataset::new(cols, features.schema_tag)
}

impl MerlotRun {
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)? + "\n")
    }

    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let s = &self.summary;
        let mut a = Artifacts::new();
        a.add("summary.json", self.summary_json()?);
        a.add("rules/merlot_rules.txt", self.rules.to_text());
        a.add(
            "rules/merlot_rules.json",
            serde_json::to_string_pretty(&self.rules)? + "\n",
        );
        a.add(
            "curves/merlot_correlation_before.csv",
            self.correlation_before.to_csv_string(),
        );
        if let Some(m) = &self.correlation_after {
            a.add("curves/merlot_correlation_after.csv", m.to_csv_string());
        }
        a.add("curves/merlot_keep_absolute.csv", s.keep_absolute.curve.to_csv());
        a.add(
            "plots/merlot_keep_absolute.svg",
            fidelity_plot(
                "Recommender keep-absolute (resample)",
                &s.keep_absolute.curve,
                "accuracy",
            ),
        );
        a.add("curves/merlot_keep_positive_mask.csv", s.keep_positive_mask.to_csv());
        a.add(
            "curves/merlot_keep_positive_resample.csv",
            s.keep_positive_resample.to_csv(),
        );
        let kp = line_plot(
            "Recommender keep-positive",
            "fraction of features kept",
            "mean score",
            &[
                Series {
                    name: "mask",
                    x: &s.keep_positive_mask.fractions,
                    y: &s.keep_positive_mask.scores,
                },
                Series {
                    name: "resample",
                    x: &s.keep_positive_resample.fractions,
                    y: &s.keep_positive_resample.scores,
                },
            ],
            true,
        );
        a.add("plots/merlot_keep_positive.svg", kp);
        a.add("curves/merlot_importance.csv", importance_csv(&s.shap.importance));
        let (labels, values): (Vec<String>, Vec<f64>) = s
            .shap
            .importance
            .iter()
            .map(|f| (f.feature.clone(), f.mean_abs_phi))
            .unzip();
        a.add(
            "plots/merlot_importance.svg",
            bar_plot("Recommender feature importance", "mean |phi|", &labels, &values),
        );
        a.add(
            "curves/merlot_attributions.csv",
            attributions_csv(&self.explained_items, &self.attributions),
        );
        sweep_artifacts(&mut a, "merlot", None, &s.total_explainability);
        a.write(dir).stage("write")
    }
}
