use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use xaitax::data::correlation::correlation_matrix;
use xaitax::data::grouping::{group_disciplines, layout_of, Layout};
use xaitax::data::merlot::synthesize_merlot;
use xaitax::data::{iris, Dataset, SchemaTag};
use xaitax::models::extraction::extract_rules;
use xaitax::models::recommender::{recommender_rules, RuleRendering, UserProfile};
use xaitax::models::svm::{features_and_labels, train_svm, SvmConfig, SvmModel};
use xaitax::pipeline::{run_iris_pipeline, run_merlot_pipeline_default, PipelineConfig};
use xaitax::shapley::{exact_shapley_outputs, kernel_shap_outputs, stratified_background, Budget, KernelShapConfig};
use xaitax::taxonomy::{
    explainability, ruleset_complexity, total_explainability, total_two, understandability, Aggregation, DeclineFamily,
    RuleSet, UnderstandabilityParams,
};
use xaitax::{Error, Result};

// Writes that ignore a closed stdout (e.g. piped into `head`).
macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "xaitax",
    version,
    about = "Explainability metrics, Shapley attributions and case-study pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iris SVM case study: rules, SHAP, keep-absolute curve, total explainability.
    Iris(PipelineArgs),
    /// Recommender case study on MERLOT-schema data (synthesized unless files are given).
    Merlot(MerlotArgs),
    /// Shapley values for one Iris instance.
    Explain(ExplainArgs),
    /// Print extracted SVM rules or the recommender's rules with their complexity.
    Rules(RulesArgs),
    /// Taxonomy metrics.
    Metrics {
        #[command(subcommand)]
        metric: Metric,
    },
    /// Association matrix of a CSV file.
    Correlate(CorrelateArgs),
    /// Write synthetic MERLOT-schema resources.csv and ratings.csv.
    Synth(SynthArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $XAITAX_OUT_DIR, then config, then out/<pipeline>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    omega_b_min: Option<f64>,
    #[arg(long)]
    omega_b_max: Option<f64>,
    #[arg(long)]
    omega_b_points: Option<usize>,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    background_fraction: Option<f64>,
    /// Coalition budget: a count or `full`.
    #[arg(long, value_parser = parse_budget)]
    budget: Option<Budget>,
    #[arg(long, value_enum)]
    aggregation: Option<AggregationArg>,
    #[arg(long)]
    prototypes: Option<usize>,
}

#[derive(Args)]
struct MerlotArgs {
    #[command(flatten)]
    common: PipelineArgs,
    #[arg(long, requires = "ratings")]
    resources: Option<PathBuf>,
    #[arg(long, requires = "resources")]
    ratings: Option<PathBuf>,
    #[arg(long)]
    n_resources: Option<usize>,
    #[arg(long)]
    n_ratings: Option<usize>,
    #[arg(long)]
    explained_items: Option<usize>,
    /// User profile JSON.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, value_enum)]
    rendering: Option<RenderingArg>,
    #[arg(long)]
    min_average_rating: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Sht,
}

impl From<FamilyArg> for DeclineFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gaussian => DeclineFamily::Gaussian,
            FamilyArg::Sht => DeclineFamily::Sht,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Sum,
    Average,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Sum => Aggregation::Sum,
            AggregationArg::Average => Aggregation::Average,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderingArg {
    Membership,
    Expanded,
}

impl From<RenderingArg> for RuleRendering {
    fn from(r: RenderingArg) -> Self {
        match r {
            RenderingArg::Membership => RuleRendering::Membership,
            RenderingArg::Expanded => RuleRendering::Expanded,
        }
    }
}

fn parse_budget(s: &str) -> std::result::Result<Budget, String> {
    if s.eq_ignore_ascii_case("full") {
        Ok(Budget::Full)
    } else {
        s.parse::<usize>()
            .map(Budget::Samples)
            .map_err(|_| format!("expected a count or `full`, got `{s}`"))
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum ModelArg {
    IrisSvm,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long, value_enum, default_value = "iris-svm")]
    model: ModelArg,
    /// Saved SVM JSON used instead of training on Iris.
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// Row of the Iris table to explain.
    #[arg(long)]
    instance: usize,
    #[arg(long, conflicts_with = "kernel")]
    exact: bool,
    #[arg(long)]
    kernel: bool,
    #[arg(long, value_parser = parse_budget, default_value = "2048")]
    budget: Budget,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    background_fraction: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum FormatArg {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct RulesArgs {
    /// Recommender profile JSON; the Iris SVM rules are printed when absent.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Use the built-in default profile.
    #[arg(long, conflicts_with = "profile")]
    default_profile: bool,
    #[arg(long, value_enum, default_value = "membership")]
    rendering: RenderingArg,
    #[arg(long, default_value_t = 1)]
    prototypes: usize,
    #[arg(long, value_enum, default_value = "average")]
    aggregation: AggregationArg,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Also save the trained SVM as JSON.
    #[arg(long)]
    save_model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Metric {
    /// Total explainability of two values.
    Tot { e1: f64, e2: f64 },
    /// Recursive total explainability of a list.
    Total {
        #[arg(required = true, num_args = 1..)]
        values: Vec<f64>,
    },
    /// Understandability of a complexity.
    Understandability {
        omega: f64,
        #[arg(long)]
        omega_b: f64,
        #[arg(long, value_enum, default_value = "gaussian")]
        family: FamilyArg,
    },
    /// `E = I * C * U`.
    Explainability {
        #[arg(long)]
        interpretability: f64,
        #[arg(long)]
        completeness: f64,
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        omega_b: f64,
        #[arg(long, value_enum, default_value = "gaussian")]
        family: FamilyArg,
    },
    /// Complexity of a rule set saved as JSON.
    Complexity { rules: PathBuf },
}

#[derive(Args)]
struct CorrelateArgs {
    input: PathBuf,
    /// Join discipline level columns first.
    #[arg(long)]
    group: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    resources: usize,
    #[arg(long, default_value_t = 2000)]
    ratings: usize,
    #[arg(long, default_value_t = 0.95)]
    planted_correlation: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn pipeline_config(a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut c = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = &a.out {
        c.output_dir = Some(v.clone());
    }
    if let Some(v) = a.omega_b_min {
        c.omega_b.min = v;
    }
    if let Some(v) = a.omega_b_max {
        c.omega_b.max = v;
    }
    if let Some(v) = a.omega_b_points {
        c.omega_b.points = v;
    }
    if let Some(v) = a.family {
        c.family = v.into();
    }
    if let Some(v) = a.background_fraction {
        c.background_fraction = v;
    }
    if let Some(v) = a.budget {
        c.budget = v;
    }
    if let Some(v) = a.aggregation {
        c.aggregation = v.into();
    }
    if let Some(v) = a.prototypes {
        c.iris.prototypes_per_class = v;
    }
    c.validate()?;
    Ok(c)
}

/// An explicit `--out` wins over the environment override.
fn output_dir(args: &PipelineArgs, config: &PipelineConfig, pipeline: &str) -> PathBuf {
    args.out.clone().unwrap_or_else(|| config.resolve_output_dir(pipeline))
}

fn headline(config: &PipelineConfig, totals: &[xaitax::pipeline::TotalSweep]) -> f64 {
    totals
        .iter()
        .find(|t| t.family == config.family)
        .map_or(f64::NAN, |t| t.min_total)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Iris(args) => {
            let config = pipeline_config(&args)?;
            let run = run_iris_pipeline(&config)?;
            let dir = output_dir(&args, &config, "iris");
            run.write_artifacts(&dir)?;
            let s = &run.summary;
            outln!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "output_dir": dir,
                    "rule_complexity": s.rules.rule_complexity,
                    "keep_absolute_auc": s.keep_absolute.auc,
                    "keep_absolute_top2_accuracy": s.keep_absolute.top2_accuracy,
                    "min_total_explainability": headline(&config, &s.total_explainability),
                }))?
            );
        }
        Command::Merlot(args) => {
            let mut config = pipeline_config(&args.common)?;
            let m = &mut config.merlot;
            if let (Some(r), Some(t)) = (&args.resources, &args.ratings) {
                m.resources = Some(r.clone());
                m.ratings = Some(t.clone());
            }
            if let Some(v) = args.n_resources {
                m.n_resources = v;
            }
            if let Some(v) = args.n_ratings {
                m.n_ratings = v;
            }
            if let Some(v) = args.explained_items {
                m.explained_items = v;
            }
            if let Some(p) = &args.profile {
                m.profile = UserProfile::from_json(&fs::read_to_string(p)?)?;
            }
            if let Some(r) = args.rendering {
                m.rule_rendering = r.into();
            }
            if args.min_average_rating.is_some() {
                m.min_average_rating = args.min_average_rating;
            }
            config.validate()?;
            let run = run_merlot_pipeline_default(&config)?;
            let dir = output_dir(&args.common, &config, "merlot");
            run.write_artifacts(&dir)?;
            let s = &run.summary;
            outln!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "output_dir": dir,
                    "grouping_applied": s.correlation.grouping_applied,
                    "top_feature": s.shap.importance.first().map(|f| f.feature.clone()),
                    "keep_absolute_xi": s.keep_absolute.auc,
                    "keep_absolute_top2_accuracy": s.keep_absolute.top2_accuracy,
                    "recommender_rule_complexity": s.rules.rule_complexity,
                    "min_total_explainability": headline(&config, &s.total_explainability),
                }))?
            );
        }
        Command::Explain(args) => explain(args)?,
        Command::Rules(args) => rules(args)?,
        Command::Metrics { metric } => metrics(metric)?,
        Command::Correlate(args) => {
            let mut data = Dataset::from_csv_path(&args.input, SchemaTag::Generic)?;
            if args.group && layout_of(&data) == Layout::Ungrouped {
                data = group_disciplines(&data)?;
            }
            let m = correlation_matrix(&data)?;
            match args.format {
                FormatArg::Json => outln!(
                    "{}",
                    serde_json::to_string_pretty(&json!({ "matrix": m, "max_off_diagonal": m.max_off_diagonal() }))?
                ),
                _ => out!("{}", m.to_csv_string()),
            }
        }
        Command::Synth(args) => {
            let (res, rat) = synthesize_merlot(args.resources, args.ratings, args.seed, args.planted_correlation)?;
            fs::create_dir_all(&args.out)?;
            res.write_csv_path(args.out.join("resources.csv"))?;
            rat.write_csv_path(args.out.join("ratings.csv"))?;
        }
    }
    Ok(())
}

fn iris_model(file: &Option<PathBuf>) -> Result<SvmModel> {
    match file {
        Some(p) => SvmModel::load(p),
        None => train_svm(&iris::load()?, iris::LABEL, &SvmConfig::default()),
    }
}

fn explain(args: ExplainArgs) -> Result<()> {
    let ModelArg::IrisSvm = args.model;
    let data = iris::load()?;
    let (x, labels, _, names) = features_and_labels(&data, iris::LABEL)?;
    let model = iris_model(&args.model_file)?;
    if model.feature_names != names {
        return Err(Error::InvalidArgument(
            "model features differ from the Iris columns".into(),
        ));
    }
    let row = x
        .get(args.instance)
        .ok_or_else(|| Error::InvalidArgument(format!("instance {} out of range 0..{}", args.instance, x.len())))?;
    let bg = stratified_background(names, &x, &labels, args.background_fraction, args.seed)?;
    let attributions = if args.exact {
        exact_shapley_outputs(&model, row, &bg)?
    } else {
        let cfg = KernelShapConfig {
            budget: args.budget,
            seed: args.seed,
            ..Default::default()
        };
        kernel_shap_outputs(&model, row, &bg, &cfg)?
    };
    match args.format {
        FormatArg::Csv => {
            for (class, a) in model.classes.iter().zip(&attributions) {
                outln!("# output {class}");
                out!("{}", a.to_csv()?);
            }
        }
        _ => {
            let outputs: Vec<_> = model
                .classes
                .iter()
                .zip(&attributions)
                .map(|(c, a)| json!({ "output": c, "attribution": a }))
                .collect();
            outln!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "instance": args.instance,
                    "method": if args.exact { "exact" } else { "kernel" },
                    "outputs": outputs,
                }))?
            );
        }
    }
    Ok(())
}

fn rules(args: RulesArgs) -> Result<()> {
    let aggregation: Aggregation = args.aggregation.into();
    let set = if args.profile.is_some() || args.default_profile {
        let profile = match &args.profile {
            Some(p) => UserProfile::from_json(&fs::read_to_string(p)?)?,
            None => UserProfile::default(),
        };
        let r = recommender_rules(&profile, args.rendering.into())?;
        RuleSet::new(r.rules, r.feature_universe, aggregation)?
    } else {
        let data = iris::load()?;
        let model = train_svm(&data, iris::LABEL, &SvmConfig::default())?;
        if let Some(p) = &args.save_model {
            model.save(p)?;
        }
        let ex = extract_rules(&model, &data, iris::LABEL, args.prototypes)?;
        ex.rule_set(&model.feature_names, aggregation)?
    };
    let omega = ruleset_complexity(&set)?;
    match args.format {
        FormatArg::Json => outln!(
            "{}",
            serde_json::to_string_pretty(&json!({ "rule_complexity": omega, "rules": set }))?
        ),
        _ => {
            out!("{}", set.to_text());
            outln!("# rules: {}, rule complexity ({:?}): {omega}", set.len(), aggregation);
        }
    }
    Ok(())
}

fn metrics(metric: Metric) -> Result<()> {
    let value = match metric {
        Metric::Tot { e1, e2 } => total_two(e1, e2)?,
        Metric::Total { values } => total_explainability(&values)?,
        Metric::Understandability { omega, omega_b, family } => {
            understandability(omega, &UnderstandabilityParams::new(omega_b, family.into())?)?
        }
        Metric::Explainability {
            interpretability,
            completeness,
            omega,
            omega_b,
            family,
        } => {
            let a = explainability(
                interpretability,
                completeness,
                omega,
                &UnderstandabilityParams::new(omega_b, family.into())?,
            )?;
            outln!("{}", serde_json::to_string_pretty(&a)?);
            return Ok(());
        }
        Metric::Complexity { rules } => {
            let set: RuleSet = serde_json::from_str(&fs::read_to_string(rules)?)?;
            let set = RuleSet::new(set.rules, set.feature_universe, set.aggregation)?;
            ruleset_complexity(&set)?
        }
    };
    outln!("{value}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
