use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use plrank::estimation::{self, sample_rankings, FitConfig, FitMethod};
use plrank::io::{self, Dataset, Labels};
use plrank::metrics::AveragingMode;
use plrank::pl::{rank_from_weights, WeightVector};
use plrank::ranker::{self, Architecture, TrainConfig};
use plrank::synth::{self, LabelledInstance, SyntheticConfig};
use plrank::{default_labels, seeded_rng};

use crate::args::{EvaluateArgs, FitArgs, PredictArgs, SampleArgs, SynthArgs, TrainArgs};
use crate::error::{in_file, CliError};

pub type CliResult<T> = Result<T, CliError>;

/// Settings shared by every subcommand.
pub struct Context {
    pub seed: u64,
    pub quiet: bool,
    pub output: Option<PathBuf>,
}

impl Context {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    /// Writes the primary output to `--output` or stdout.
    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.output {
            Some(path) => write_file(path, |w| Ok(w.write_all(text.as_bytes())?)),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                lock.write_all(text.as_bytes())
                    .and_then(|_| lock.flush())
                    .map_err(|e| CliError::Io(format!("stdout: {e}")))
            }
        }
    }
}

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::missing(flag))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> plrank::Result<()>,
) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    body(&mut writer).map_err(in_file(path))?;
    writer.flush().map_err(|e| CliError::io(path, e))
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    io::read_dataset(open(path)?).map_err(in_file(path))
}

pub fn synth(ctx: &Context, args: SynthArgs) -> CliResult<()> {
    let out = required(args.out.or_else(|| ctx.output.clone()), "out")?;
    let base = if args.low_noise.unwrap_or(false) {
        SyntheticConfig::low_noise()
    } else {
        SyntheticConfig::default()
    };
    let temperature_range = match args.temperature_range {
        None => base.labeller_temperature_range,
        Some(v) if v.len() == 2 => [v[0], v[1]],
        Some(_) => {
            return Err(CliError::validation(
                "invalid value for `labeller_temperature_range`: expected `lo,hi`",
            ))
        }
    };
    let config = SyntheticConfig {
        n_classes: args.n_classes.unwrap_or(base.n_classes),
        input_dim: args.input_dim.unwrap_or(base.input_dim),
        n_objects: args.n_objects.unwrap_or(base.n_objects),
        orientations_per_object: args.orientations.unwrap_or(base.orientations_per_object),
        n_labellers: args.n_labellers.unwrap_or(base.n_labellers),
        labeller_coverage: args.coverage.unwrap_or(base.labeller_coverage),
        labeller_temperature_range: temperature_range,
        labeller_bias_scale: args.bias_scale.unwrap_or(base.labeller_bias_scale),
        feature_noise: args.feature_noise.unwrap_or(base.feature_noise),
        orientation_spread: args.orientation_spread.unwrap_or(base.orientation_spread),
        score_scale: args.score_scale.unwrap_or(base.score_scale),
        bias_spread: args.bias_spread.unwrap_or(base.bias_spread),
        seed: ctx.seed,
    };
    config.validate()?;
    let labels = Labels::new(
        args.labels
            .unwrap_or_else(|| default_labels(config.n_classes)),
    )?;
    if labels.len() != config.n_classes {
        return Err(CliError::validation(format!(
            "invalid value for `labels`: {} names for {} classes",
            labels.len(),
            config.n_classes
        )));
    }

    let (records, truth) = synth::generate_dataset(&config)?;
    let dataset = Dataset {
        labels,
        input_dim: config.input_dim,
        records,
    };
    write_file(&out, |w| io::write_dataset(w, &dataset))?;
    let truth_path = truth_path(&out);
    write_file(&truth_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &truth).map_err(std::io::Error::from)?;
        Ok(writeln!(w)?)
    })?;
    ctx.info(format!(
        "wrote {} labelled rankings for {} views to {} (ground truth: {})",
        dataset.records.len(),
        truth.instances.len(),
        out.display(),
        truth_path.display()
    ));
    Ok(())
}

/// `<out>.truth.json`.
pub fn truth_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".truth.json");
    PathBuf::from(name)
}

pub fn fit(ctx: &Context, args: FitArgs) -> CliResult<()> {
    let path = required(args.data, "data")?;
    let defaults = FitConfig::default();
    let config = FitConfig {
        method: args
            .method
            .as_deref()
            .unwrap_or("mm")
            .parse::<FitMethod>()?,
        max_iters: args.max_iters.unwrap_or(defaults.max_iters),
        tolerance: args.tolerance.unwrap_or(defaults.tolerance),
        smoothing: args.smoothing.unwrap_or(defaults.smoothing),
        learning_rate: args.learning_rate.unwrap_or(defaults.learning_rate),
        seed: ctx.seed,
    };
    config.validate()?;
    let dataset = load_dataset(&path)?;
    let rankings: Vec<_> = dataset.records.iter().map(|r| r.ranking.clone()).collect();
    if rankings.is_empty() {
        return Err(CliError::validation(format!(
            "{}: no rankings",
            path.display()
        )));
    }
    let result = estimation::fit(&rankings, &config)?;
    if !result.converged {
        ctx.info(format!(
            "warning: no convergence after {} iterations",
            result.iterations
        ));
    }

    let mut text = String::new();
    text.push_str(&format!(
        "method: {}\nrankings: {}\niterations: {}\nconverged: {}\nlog_likelihood: {}\n",
        args.method.as_deref().unwrap_or("mm"),
        rankings.len(),
        result.iterations,
        result.converged,
        result.final_log_likelihood
    ));
    for class in rank_from_weights(&result.weights).as_slice() {
        text.push_str(&format!(
            "{}\t{}\n",
            dataset.labels.name(*class),
            result.weights[*class]
        ));
    }
    ctx.emit(&text)
}

pub fn train(ctx: &Context, args: TrainArgs) -> CliResult<()> {
    let train_path = required(args.train, "train")?;
    let model_out = required(args.model_out, "model-out")?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        learning_rate: args.lr.unwrap_or(defaults.learning_rate),
        l2_lambda: args.l2.unwrap_or(defaults.l2_lambda),
        epochs: args.epochs.unwrap_or(defaults.epochs),
        batch_size: args.batch_size.unwrap_or(defaults.batch_size),
        seed: ctx.seed,
        init_scale: args.init_scale.unwrap_or(defaults.init_scale),
    };
    config.validate()?;
    let architecture: Architecture = args.arch.as_deref().unwrap_or("linear").parse()?;
    let hidden_dim = args.hidden_dim.unwrap_or(16);

    let train_set = load_dataset(&train_path)?;
    let test_set = match &args.test {
        Some(path) => {
            let test = load_dataset(path)?;
            check_compatible(&train_set, &test, path)?;
            Some(test)
        }
        None => None,
    };

    let model = ranker::init_model(
        architecture,
        train_set.input_dim,
        hidden_dim,
        train_set.n_classes(),
        ctx.seed,
        config.init_scale,
    )?;
    let (model, history) = ranker::train(model, &train_set.records, &config)?;
    write_file(&model_out, |w| {
        io::write_model(w, &model, &train_set.labels)
    })?;

    let mut text = format!(
        "architecture: {}\nepochs: {}\ntrain_records: {}\nfinal_train_loss: {}\n",
        architecture.name(),
        config.epochs,
        train_set.records.len(),
        history.train_loss.last().copied().unwrap_or(f64::NAN),
    );
    if let Some(test) = &test_set {
        let report = ranker::evaluate_model(&model, &test.records, AveragingMode::Pair)?;
        text.push_str(&format!(
            "test_pairs: {}\ntest_mean_overlap_accuracy: {}\n",
            report.n_pairs, report.mean_overlap_accuracy
        ));
    }
    ctx.info(format!("model written to {}", model_out.display()));
    ctx.emit(&text)
}

fn check_compatible(train: &Dataset, test: &Dataset, path: &Path) -> CliResult<()> {
    if test.input_dim != train.input_dim {
        return Err(CliError::validation(format!(
            "{}: input_dim {} differs from training input_dim {}",
            path.display(),
            test.input_dim,
            train.input_dim
        )));
    }
    if test.labels != train.labels {
        return Err(CliError::validation(format!(
            "{}: labels differ from the training labels",
            path.display()
        )));
    }
    Ok(())
}

pub fn predict(ctx: &Context, args: PredictArgs) -> CliResult<()> {
    let model_path = required(args.model, "model")?;
    let data_path = required(args.data, "data")?;
    let (model, labels) = io::read_model(open(&model_path)?).map_err(in_file(&model_path))?;
    let dataset = load_dataset(&data_path)?;
    if dataset.input_dim != model.input_dim() {
        return Err(CliError::validation(format!(
            "{}: input_dim {} does not match the model's {}",
            data_path.display(),
            dataset.input_dim,
            model.input_dim()
        )));
    }
    let predictions = ranker::predict_instances(&model, &dataset.records)?;
    let mut buf = Vec::new();
    io::write_predictions(&mut buf, &labels, &predictions)?;
    ctx.emit(&String::from_utf8(buf).expect("predictions are UTF-8"))
}

/// Re-expresses reference rankings in the class order of `labels`.
fn remap_references(
    dataset: Dataset,
    labels: &Labels,
    path: &Path,
) -> CliResult<Vec<LabelledInstance>> {
    if dataset.labels == *labels {
        return Ok(dataset.records);
    }
    let mut same_set: Vec<&String> = dataset.labels.names().iter().collect();
    let mut other: Vec<&String> = labels.names().iter().collect();
    same_set.sort();
    other.sort();
    if same_set != other {
        return Err(CliError::validation(format!(
            "{}: label set differs from the predictions' labels",
            path.display()
        )));
    }
    dataset
        .records
        .into_iter()
        .map(|mut r| {
            let names = dataset.labels.ranking_names(&r.ranking);
            r.ranking = labels.ranking_from_names(&names)?;
            Ok(r)
        })
        .collect()
}

pub fn evaluate(ctx: &Context, args: EvaluateArgs) -> CliResult<()> {
    let pred_path = required(args.predictions, "predictions")?;
    let ref_path = required(args.references, "references")?;
    let mode: AveragingMode = args.mode.as_deref().unwrap_or("pair").parse()?;
    let predictions = io::read_predictions(open(&pred_path)?).map_err(in_file(&pred_path))?;
    let references = load_dataset(&ref_path)?;
    let references = remap_references(references, &predictions.labels, &ref_path)?;
    let report = ranker::evaluate_predictions(&predictions.predictions, &references, mode)?;
    ctx.emit(&format!("{}\n", report.to_json()))
}

pub fn sample(ctx: &Context, args: SampleArgs) -> CliResult<()> {
    let raw = required(args.weights, "weights")?;
    let weights = WeightVector::normalized(&raw)?;
    let count = args.count.unwrap_or(1);
    let labels = Labels::new(args.labels.unwrap_or_else(|| default_labels(weights.len())))?;
    if labels.len() != weights.len() {
        return Err(CliError::validation(format!(
            "invalid value for `labels`: {} names for {} weights",
            labels.len(),
            weights.len()
        )));
    }
    let mut rng = seeded_rng(ctx.seed);
    let mut text = String::new();
    for r in sample_rankings(&weights, count, &mut rng) {
        text.push_str(&serde_json::to_string(&labels.ranking_names(&r)).expect("names serialize"));
        text.push('\n');
    }
    ctx.emit(&text)
}
