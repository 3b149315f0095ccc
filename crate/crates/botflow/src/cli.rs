//! Command-line grammar and command execution.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use botflow_core::eval::{cross_scenario_eval, hyperparam_sweep, repeated_eval, EvalPlan};
use botflow_core::features::build_dataset;
use botflow_core::model::{train, Family, HyperParams, ModelArtifact, ModelParams, Predictor};
use botflow_core::select::{
    backward_elimination, correlation_matrix, filter_select, pca, DEFAULT_FILTER_THRESHOLD,
    DEFAULT_REDUNDANCY_THRESHOLD,
};
use botflow_core::summary::{summarize, ABSENT};
use botflow_core::synth::{generate_scenario, SynthConfig};
use botflow_core::{Dataset, Timestamp, WindowConfig, DEFAULT_SEED};

use crate::io;
use crate::report::{fmt_metric, push_repeated, push_single, Format, Header, Table, METRIC_COLUMNS};

/// Bad command-line input detected after parsing; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(
    name = "botflow",
    version,
    about = "NetFlow botnet detection: windows, features, classifiers, reports"
)]
pub struct Cli {
    /// Worker threads; defaults to the number of cores. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Report format written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Logreg,
    Svm,
    Rf,
    Gboost,
    Nn,
}

impl ModelKind {
    pub fn family(self) -> Family {
        match self {
            ModelKind::Logreg => Family::LogReg,
            ModelKind::Svm => Family::LinearSvm,
            ModelKind::Rf => Family::RandomForest,
            ModelKind::Gboost => Family::GradientBoosting,
            ModelKind::Nn => Family::DenseNn,
        }
    }
}

/// Model family and hyperparameter overrides. Flags that do not apply to
/// the chosen family are rejected.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Classifier family.
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Logistic regression inverse regularization strength.
    #[arg(long = "c")]
    pub c: Option<String>,
    /// Weight of the non-botnet class.
    #[arg(long)]
    pub w0: Option<String>,
    /// Weight of the botnet class.
    #[arg(long)]
    pub w1: Option<String>,
    #[arg(long)]
    pub max_iter: Option<String>,
    /// SVM regularization strength.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub l1_ratio: Option<String>,
    /// SVM penalty: l1, l2 or elasticnet.
    #[arg(long)]
    pub penalty: Option<String>,
    /// SVM feature map: linear, poly or rbf.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub degree: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub rff_dim: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    /// Number of trees (forest) or boosting stages.
    #[arg(long)]
    pub trees: Option<String>,
    /// Tree depth bound; `none` for unbounded forest trees.
    #[arg(long)]
    pub max_depth: Option<String>,
    #[arg(long)]
    pub max_features: Option<String>,
    /// Boosting loss: deviance or exponential.
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    /// Hidden layer widths separated by `x`, e.g. 256x128.
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub momentum: Option<String>,
    /// Seed of the model's own randomness (shuffles, bootstrap, init).
    #[arg(long)]
    pub model_seed: Option<String>,
    /// Any hyperparameter as key=value; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ModelArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let flags: [(&'static str, &Option<String>); 21] = [
            ("c", &self.c),
            ("w0", &self.w0),
            ("w1", &self.w1),
            ("max_iter", &self.max_iter),
            ("alpha", &self.alpha),
            ("l1_ratio", &self.l1_ratio),
            ("penalty", &self.penalty),
            ("kernel", &self.kernel),
            ("degree", &self.degree),
            ("gamma", &self.gamma),
            ("rff_dim", &self.rff_dim),
            ("epochs", &self.epochs),
            ("n_trees", &self.trees),
            ("max_depth", &self.max_depth),
            ("max_features", &self.max_features),
            ("loss", &self.loss),
            ("learning_rate", &self.learning_rate),
            ("batch_size", &self.batch_size),
            ("hidden", &self.hidden),
            ("momentum", &self.momentum),
            ("seed", &self.model_seed),
        ];
        flags
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    /// Hyperparameters of `base` (or the family defaults) with every
    /// override applied.
    pub fn resolve(&self, base: Option<HyperParams>, fallback: Option<ModelKind>) -> Result<HyperParams> {
        let mut hp = match (self.model, base) {
            (Some(kind), Some(b)) if b.family() == kind.family() => b,
            (Some(kind), _) => HyperParams::default_for(kind.family()),
            (None, Some(b)) => b,
            (None, None) => match fallback {
                Some(kind) => HyperParams::default_for(kind.family()),
                None => return Err(usage("--model is required")),
            },
        };
        for (k, v) in self.overrides() {
            hp.set(k, v)
                .map_err(|e| usage(format!("--{}: {e}", k.replace('_', "-"))))?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            hp.set(k.trim(), v.trim()).map_err(|e| usage(e.to_string()))?;
        }
        hp.validate().map_err(|e| usage(e.to_string()))?;
        Ok(hp)
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    /// Fraction of rows used for training in each run.
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub train_frac: f64,
    /// Number of random splits; run i uses seed + i.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Base split seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Also print one row per run.
    #[arg(long)]
    pub per_run: bool,
}

impl PlanArgs {
    fn plan(&self, bootstrap_factor: Option<usize>) -> EvalPlan {
        EvalPlan {
            train_frac: self.train_frac,
            n_runs: self.runs,
            seed: self.seed,
            bootstrap_factor,
        }
    }

    fn describe(&self, h: &mut Header) {
        h.push("train_frac", self.train_frac)
            .push("runs", self.runs)
            .push("seed", self.seed);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectMethod {
    Filter,
    Backward,
    Importance,
    Pca,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse statistics and per-column summaries of a flow file.
    Summarize { flows: PathBuf },
    /// Window a flow file and write the 22-feature CSV.
    Extract {
        flows: PathBuf,
        /// Window width in seconds.
        #[arg(long, default_value_t = 120.0)]
        width: f64,
        /// Window stride in seconds.
        #[arg(long, default_value_t = 60.0)]
        stride: f64,
        /// Window origin; defaults to the earliest flow start.
        #[arg(long)]
        origin: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train on every row of a feature file and save the model.
    Train {
        features: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Repeated random-split evaluation, retraining in every run.
    Eval {
        features: PathBuf,
        /// Take family and hyperparameters from a saved model.
        #[arg(long)]
        model_file: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Evaluate the cartesian product of hyperparameter grids.
    Sweep {
        features: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// KEY=V1,V2,...; may be repeated.
        #[arg(long, required = true)]
        grid: Vec<String>,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Train on one scenario, test on another.
    Crossscen {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Compare plain training with bootstrap-enlarged training splits.
    BootstrapEval {
        features: PathBuf,
        /// Training split is resampled to factor x its size.
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        factor: u64,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Feature selection and analysis.
    Select {
        features: PathBuf,
        #[arg(long, value_enum)]
        method: SelectMethod,
        /// Minimum |r| with the label (filter).
        #[arg(long, default_value_t = DEFAULT_FILTER_THRESHOLD)]
        threshold: f64,
        /// Inter-feature |r| above which the weaker feature is dropped (filter).
        #[arg(long, default_value_t = DEFAULT_REDUNDANCY_THRESHOLD)]
        redundancy: f64,
        /// Number of principal components (pca).
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Split seed (backward).
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
        /// Directory for tidy CSV side outputs (correlations, projections).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Generate a synthetic flow file.
    Synth {
        /// JSON config; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn hp_json(hp: &HyperParams) -> String {
    serde_json::to_string(hp).expect("hyperparameters serialize")
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let ds = io::load_features(path)?;
    log::info!("{}: {} rows, {} features", path.display(), ds.n_rows(), ds.n_features());
    Ok(ds)
}

fn scenario_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Runs one parsed command and returns the report text.
pub fn execute(cli: &Cli) -> Result<String> {
    let fmt = cli.format;
    let (header, body) = match &cli.command {
        Command::Summarize { flows } => cmd_summarize(flows, fmt)?,
        Command::Extract {
            flows,
            width,
            stride,
            origin,
            output,
        } => cmd_extract(flows, *width, *stride, origin.as_deref(), output)?,
        Command::Train {
            features,
            model,
            output,
        } => cmd_train(features, model, output, fmt)?,
        Command::Eval {
            features,
            model_file,
            model,
            plan,
        } => cmd_eval(features, model_file.as_deref(), model, plan, fmt)?,
        Command::Sweep {
            features,
            model,
            grid,
            plan,
        } => cmd_sweep(features, model, grid, plan, fmt)?,
        Command::Crossscen { train, test, model } => cmd_crossscen(train, test, model, fmt)?,
        Command::BootstrapEval {
            features,
            factor,
            model,
            plan,
        } => cmd_bootstrap(features, *factor as usize, model, plan, fmt)?,
        Command::Select {
            features,
            method,
            threshold,
            redundancy,
            k,
            seed,
            model,
            out_dir,
        } => cmd_select(
            features,
            *method,
            *threshold,
            *redundancy,
            *k,
            *seed,
            model,
            out_dir.as_deref(),
            fmt,
        )?,
        Command::Synth { config, seed, output } => cmd_synth(config.as_deref(), *seed, output)?,
    };
    let mut out = header.render();
    if !body.is_empty() {
        out.push_str(&body);
    }
    Ok(out)
}

fn cmd_summarize(flows: &Path, fmt: Format) -> Result<(Header, String)> {
    let table = io::load_scenario(flows)?;
    let stats = summarize(&table);
    let mut h = Header::new("summarize");
    h.push("input", flows.display())
        .push("accepted", table.parse_stats.accepted)
        .push("rejected", table.parse_stats.rejected);
    for (row, reason) in &table.parse_stats.first_rejections {
        h.push("rejection", format!("row {row}: {}", reason.code()));
    }
    let mut numeric = Table::new(&["column", "min", "max", "mean", "std", "median", "q3"]).titled("numeric columns");
    for (col, s) in &stats.numeric {
        let cells = match s {
            Some(s) => [s.min, s.max, s.mean, s.std, s.median, s.q3]
                .map(|v| format!("{v:.6}"))
                .to_vec(),
            None => vec![ABSENT.to_string(); 6],
        };
        let mut row = vec![col.to_string()];
        row.extend(cells);
        numeric.push(row);
    }
    let mut cat = Table::new(&["column", "distinct", "rank", "value", "count"]).titled("categorical columns");
    for (col, s) in &stats.categorical {
        if s.top.is_empty() {
            cat.push(vec![
                col.to_string(),
                s.distinct.to_string(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
        for (i, (v, n)) in s.top.iter().enumerate() {
            cat.push(vec![
                col.to_string(),
                s.distinct.to_string(),
                (i + 1).to_string(),
                v.clone(),
                n.to_string(),
            ]);
        }
    }
    let body = format!("{}\n{}", numeric.render(fmt), cat.render(fmt));
    h.push("rows", stats.row_count);
    Ok((h, body))
}

fn cmd_extract(flows: &Path, width: f64, stride: f64, origin: Option<&str>, output: &Path) -> Result<(Header, String)> {
    let mut cfg = WindowConfig::from_secs(width, stride).map_err(|e| usage(e.to_string()))?;
    if let Some(o) = origin {
        cfg = cfg.with_origin(Timestamp::parse(o).ok_or_else(|| usage(format!("--origin: cannot parse {o:?}")))?);
    }
    let table = io::load_scenario(flows)?;
    let ds = build_dataset(&table, &cfg).with_context(|| format!("extracting features from {}", flows.display()))?;
    io::save_features(output, &ds)?;
    let mut h = Header::new("extract");
    h.push("input", flows.display())
        .push("width_secs", cfg.width_secs())
        .push("stride_secs", cfg.stride_secs())
        .push(
            "origin",
            ds.meta
                .window
                .and_then(|w| w.origin)
                .map_or_else(|| ABSENT.to_string(), |t| t.to_string()),
        )
        .push("accepted_flows", table.parse_stats.accepted)
        .push("rejected_flows", table.parse_stats.rejected)
        .push("rows", ds.n_rows())
        .push("botnet_rows", ds.positives())
        .push("output", output.display());
    Ok((h, String::new()))
}

fn train_metrics(model: &ModelArtifact, ds: &Dataset) -> Result<botflow_core::Metrics> {
    Ok(botflow_core::eval::prf1(ds.labels(), &model.predict(ds)?, None)?)
}

fn cmd_train(features: &Path, args: &ModelArgs, output: &Path, fmt: Format) -> Result<(Header, String)> {
    let hp = args.resolve(None, None)?;
    let ds = load_dataset(features)?;
    let model = train(&ds, &hp)?;
    io::save_model(output, &model)?;
    let m = train_metrics(&model, &ds)?;
    let mut h = Header::new("train");
    h.push("input", features.display())
        .push("model", hp.family())
        .push("hyperparams", hp_json(&hp))
        .push("output", output.display());
    let mut t = Table::new(&["Botnet", "Size", "Botnet‰", "Stat", "Train P", "Train R", "Train f1"]);
    t.push(vec![
        scenario_name(features),
        ds.n_rows().to_string(),
        crate::report::fmt_permille(&ds),
        "fit".into(),
        fmt_metric(m.precision),
        fmt_metric(m.recall),
        fmt_metric(m.f1),
    ]);
    Ok((h, t.render(fmt)))
}

fn cmd_eval(
    features: &Path,
    model_file: Option<&Path>,
    args: &ModelArgs,
    plan: &PlanArgs,
    fmt: Format,
) -> Result<(Header, String)> {
    let base = match model_file {
        Some(p) => Some(io::load_model(p)?.hyperparams),
        None => None,
    };
    let hp = args.resolve(base, None)?;
    let ds = load_dataset(features)?;
    let rm = repeated_eval(&ds, &hp, &plan.plan(None))?;
    let mut h = Header::new("eval");
    h.push("input", features.display())
        .push("model", hp.family())
        .push("hyperparams", hp_json(&hp));
    if let Some(p) = model_file {
        h.push("model_file", p.display());
    }
    plan.describe(&mut h);
    let mut t = Table::new(&METRIC_COLUMNS);
    push_repeated(&mut t, &scenario_name(features), &ds, &rm, plan.per_run);
    Ok((h, t.render(fmt)))
}

/// Expands `key=v1,v2` grids into their cartesian product, first key slowest.
pub fn expand_grid(base: &HyperParams, grid: &[String]) -> Result<Vec<(String, HyperParams)>> {
    let mut axes = Vec::new();
    for g in grid {
        let (k, vs) = g
            .split_once('=')
            .ok_or_else(|| usage(format!("--grid expects KEY=V1,V2,..., got {g:?}")))?;
        let values: Vec<&str> = vs.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(usage(format!("--grid {k}: no values")));
        }
        axes.push((k.trim(), values));
    }
    let mut points: Vec<(Vec<String>, HyperParams)> = vec![(Vec::new(), base.clone())];
    for (k, values) in &axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for (label, hp) in &points {
            for v in values {
                let mut hp = hp.clone();
                hp.set(k, v).map_err(|e| usage(e.to_string()))?;
                let mut label = label.clone();
                label.push(format!("{k}={v}"));
                next.push((label, hp));
            }
        }
        points = next;
    }
    Ok(points.into_iter().map(|(l, hp)| (l.join(";"), hp)).collect())
}

fn cmd_sweep(
    features: &Path,
    args: &ModelArgs,
    grid: &[String],
    plan: &PlanArgs,
    fmt: Format,
) -> Result<(Header, String)> {
    let base = args.resolve(None, None)?;
    let points = expand_grid(&base, grid)?;
    let ds = load_dataset(features)?;
    let result = hyperparam_sweep(&ds, &points, &plan.plan(None))?;
    let mut h = Header::new("sweep");
    h.push("input", features.display())
        .push("model", base.family())
        .push("hyperparams", hp_json(&base));
    for g in grid {
        h.push("grid", g);
    }
    plan.describe(&mut h);
    let mut t = Table::new(&[
        "Point",
        "Train P",
        "Train R",
        "Train f1",
        "Test P",
        "Test R",
        "Test f1",
        "Test f1 std",
        "Best",
    ]);
    for (i, p) in result.points.iter().enumerate() {
        let best = if result.best == Some(i) { "*" } else { "" };
        match &p.result {
            Ok(r) => t.push(vec![
                p.label.clone(),
                fmt_metric(r.train.precision.mean),
                fmt_metric(r.train.recall.mean),
                fmt_metric(r.train.f1.mean),
                fmt_metric(r.test.precision.mean),
                fmt_metric(r.test.recall.mean),
                fmt_metric(r.test.f1.mean),
                fmt_metric(r.test.f1.std),
                best.into(),
            ]),
            Err(e) => {
                let mut row = vec![p.label.clone()];
                row.extend(std::iter::repeat_n(ABSENT.to_string(), 7));
                row.push(format!("error: {e}"));
                t.push(row);
            }
        }
    }
    Ok((h, t.render(fmt)))
}

fn cmd_crossscen(train_path: &Path, test_path: &Path, args: &ModelArgs, fmt: Format) -> Result<(Header, String)> {
    let hp = args.resolve(None, None)?;
    let train_ds = load_dataset(train_path)?;
    let test_ds = load_dataset(test_path)?;
    let r = cross_scenario_eval(&train_ds, &test_ds, &hp)?;
    let mut h = Header::new("crossscen");
    h.push("train", train_path.display())
        .push("test", test_path.display())
        .push("model", hp.family())
        .push("hyperparams", hp_json(&hp));
    let mut t = Table::new(&METRIC_COLUMNS);
    let name = format!("{} -> {}", scenario_name(train_path), scenario_name(test_path));
    push_single(&mut t, &name, &test_ds, "single", &r.train, &r.test);
    Ok((h, t.render(fmt)))
}

fn cmd_bootstrap(
    features: &Path,
    factor: usize,
    args: &ModelArgs,
    plan: &PlanArgs,
    fmt: Format,
) -> Result<(Header, String)> {
    let hp = args.resolve(None, Some(ModelKind::Rf))?;
    let ds = load_dataset(features)?;
    let base = repeated_eval(&ds, &hp, &plan.plan(None))?;
    let boosted = repeated_eval(&ds, &hp, &plan.plan(Some(factor)))?;
    let mut h = Header::new("bootstrap-eval");
    h.push("input", features.display())
        .push("model", hp.family())
        .push("hyperparams", hp_json(&hp))
        .push("factor", factor);
    plan.describe(&mut h);
    let mut t = Table::new(&METRIC_COLUMNS);
    let name = scenario_name(features);
    push_repeated(&mut t, &format!("{name} x1"), &ds, &base, plan.per_run);
    push_repeated(&mut t, &format!("{name} x{factor}"), &ds, &boosted, plan.per_run);
    Ok((h, t.render(fmt)))
}

#[allow(clippy::too_many_arguments)]
fn cmd_select(
    features: &Path,
    method: SelectMethod,
    threshold: f64,
    redundancy: f64,
    k: usize,
    seed: u64,
    args: &ModelArgs,
    out_dir: Option<&Path>,
    fmt: Format,
) -> Result<(Header, String)> {
    let ds = load_dataset(features)?;
    let names = ds.feature_names().to_vec();
    let mut h = Header::new("select");
    h.push("input", features.display());
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let write_side = |name: &str, table: &Table| -> Result<()> {
        if let Some(dir) = out_dir {
            let path = dir.join(name);
            std::fs::write(&path, table.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    };
    let body = match method {
        SelectMethod::Filter => {
            h.push("method", "filter")
                .push("threshold", threshold)
                .push("redundancy", redundancy);
            let sel = filter_select(&ds, threshold, redundancy)?;
            let mut t = Table::new(&["feature", "r_label", "status"]);
            for (j, name) in names.iter().enumerate() {
                let status = if sel.excluded_constant.contains(&j) {
                    "constant"
                } else if sel.pruned.contains(&j) {
                    "kept"
                } else if sel.relevant.contains(&j) {
                    "redundant"
                } else {
                    "below-threshold"
                };
                let r = sel.label_correlation[j].map_or_else(|| ABSENT.to_string(), |r| format!("{r:.6}"));
                t.push(vec![name.clone(), r, status.into()]);
            }
            let cm = correlation_matrix(&ds)?;
            let mut tidy = Table::new(&["row", "col", "r"]);
            for (a, b, r) in cm.tidy() {
                tidy.push(vec![a.into(), b.into(), format!("{r}")]);
            }
            write_side("correlation.csv", &tidy)?;
            write_side("label_correlation.csv", &t)?;
            t.render(fmt)
        }
        SelectMethod::Backward => {
            let hp = args.resolve(None, Some(ModelKind::Rf))?;
            h.push("method", "backward")
                .push("model", hp.family())
                .push("hyperparams", hp_json(&hp))
                .push("seed", seed);
            let trace = backward_elimination(&ds, &hp, seed)?;
            let mut t = Table::new(&["step", "n_features", "f1", "removed"]);
            for (i, s) in trace.steps.iter().enumerate() {
                t.push(vec![
                    i.to_string(),
                    s.features.len().to_string(),
                    fmt_metric(s.f1),
                    s.removed.map_or_else(String::new, |j| names[j].clone()),
                ]);
            }
            let kept: Vec<&str> = trace.final_step().features.iter().map(|&j| names[j].as_str()).collect();
            write_side("backward_steps.csv", &t)?;
            format!("{}\nfinal subset: {}\n", t.render(fmt), kept.join(","))
        }
        SelectMethod::Importance => {
            let hp = args.resolve(None, Some(ModelKind::Rf))?;
            if hp.family() != Family::RandomForest {
                return Err(usage("importance selection needs --model rf"));
            }
            h.push("method", "importance")
                .push("model", hp.family())
                .push("hyperparams", hp_json(&hp));
            let model = train(&ds, &hp)?;
            let ModelParams::Forest(forest) = &model.parameters else {
                bail!("forest training returned a different model kind");
            };
            let mut order: Vec<usize> = (0..names.len()).collect();
            order.sort_by(|&a, &b| {
                forest.feature_importances[b]
                    .total_cmp(&forest.feature_importances[a])
                    .then(a.cmp(&b))
            });
            let mut t = Table::new(&["rank", "feature", "importance"]);
            for (rank, j) in order.into_iter().enumerate() {
                t.push(vec![
                    (rank + 1).to_string(),
                    names[j].clone(),
                    format!("{:.6}", forest.feature_importances[j]),
                ]);
            }
            write_side("importance.csv", &t)?;
            t.render(fmt)
        }
        SelectMethod::Pca => {
            h.push("method", "pca").push("k", k);
            let p = pca(&ds, k)?;
            let mut t = Table::new(&["component", "eigenvalue", "ratio", "cumulative"]);
            let mut cum = 0.0;
            for (i, r) in p.explained_variance_ratio.iter().enumerate() {
                cum += r;
                t.push(vec![
                    format!("PC{}", i + 1),
                    format!("{:.6}", p.eigenvalues[i]),
                    format!("{r:.6}"),
                    format!("{cum:.6}"),
                ]);
            }
            let mut cols = vec!["feature".to_string()];
            cols.extend((1..=k).map(|i| format!("PC{i}")));
            let mut loadings = Table::new(&cols).titled("loadings");
            for (j, name) in names.iter().enumerate() {
                let mut row = vec![name.clone()];
                row.extend(p.components.iter().map(|c| format!("{:.6}", c[j])));
                loadings.push(row);
            }
            let mut proj_cols = vec!["label".to_string()];
            proj_cols.extend((1..=k).map(|i| format!("PC{i}")));
            let mut proj = Table::new(&proj_cols);
            for i in 0..ds.n_rows() {
                let mut row = vec![ds.labels()[i].to_string()];
                row.extend(p.projected_row(i).iter().map(|v| format!("{v}")));
                proj.push(row);
            }
            write_side("pca_projection.csv", &proj)?;
            write_side("pca_loadings.csv", &loadings)?;
            format!("{}\n{}", t.render(fmt), loadings.render(fmt))
        }
    };
    Ok((h, body))
}

fn cmd_synth(config: Option<&Path>, seed: Option<u64>, output: &Path) -> Result<(Header, String)> {
    let mut cfg = match config {
        Some(p) => io::load_synth_config(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let table = generate_scenario(&cfg).map_err(|e| usage(e.to_string()))?;
    io::save_flows(output, &table)?;
    let botnet = table.records.iter().filter(|r| r.is_botnet()).count();
    let mut h = Header::new("synth");
    h.push("config", serde_json::to_string(&cfg).expect("config serializes"))
        .push("flows", table.len())
        .push("botnet_flows", botnet)
        .push("output", output.display());
    Ok((h, String::new()))
}

/// Human-readable description of where the report went, for stderr.
pub fn describe_threads(threads: Option<usize>) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "worker threads: {}",
        threads.map_or_else(|| "all cores".to_string(), |n| n.to_string())
    );
    s
}
