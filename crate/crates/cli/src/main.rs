use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::bail;
use clap::{Parser, Subcommand, ValueEnum};

use railtex_core::metrics::render_json;
use railtex_core::pipeline::{self, ModelFile, RunConfig};
use railtex_core::ClassifierKind;

#[derive(Parser)]
#[command(name = "railtex", version, about = "Rail surface classification from texture features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Knn,
    Rf,
    Svm,
    All,
}

impl ClassifierArg {
    fn kinds(self) -> Vec<ClassifierKind> {
        match self {
            ClassifierArg::Knn => vec![ClassifierKind::Knn],
            ClassifierArg::Rf => vec![ClassifierKind::Rf],
            ClassifierArg::Svm => vec![ClassifierKind::Svm],
            ClassifierArg::All => ClassifierKind::ALL.to_vec(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset (defective, healthy, junction).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        per_class: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
    },
    /// Extract features for every image in the dataset to a CSV file.
    Extract {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the configured classifiers on the training split.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Evaluate on the test split and write reports; trains first if the
    /// model file is missing or was built with other settings.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Defaults to the classifiers named in the config.
        #[arg(long, value_enum)]
        classifier: Option<ClassifierArg>,
    },
    /// Classify one image with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        image: PathBuf,
        #[arg(long, value_enum)]
        classifier: Option<ClassifierArg>,
    },
    /// Re-render a JSON report or comparison as text.
    Report {
        #[arg(long)]
        json: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth {
            out,
            per_class,
            seed,
            width,
            height,
        } => {
            let written = pipeline::generate_synthetic_dataset(&out, per_class, seed, width, height)
                .map_err(|e| e.at_stage("synth"))?;
            println!("wrote {} images to {}", written.len(), out.display());
        }
        Command::Extract { config, out } => {
            let cfg = RunConfig::load(&config).map_err(|e| e.at_stage("config"))?;
            let n = pipeline::run_extract(&cfg, &out)?;
            println!("wrote {n} feature rows to {}", out.display());
        }
        Command::Train { config, model } => {
            let cfg = RunConfig::load(&config).map_err(|e| e.at_stage("config"))?;
            let m = pipeline::run_train(&cfg)?;
            m.save(&model).map_err(|e| e.at_stage("model"))?;
            let kinds: Vec<&str> = m.kinds().iter().map(|k| k.label()).collect();
            println!(
                "trained {} on {} classes, {} PCA components; model written to {}",
                kinds.join(", "),
                m.class_names.len(),
                m.pca.n_components(),
                model.display()
            );
        }
        Command::Eval {
            config,
            model,
            classifier,
        } => {
            let cfg = RunConfig::load(&config).map_err(|e| e.at_stage("config"))?;
            let kinds = classifier.map(ClassifierArg::kinds).unwrap_or_default();
            let outcome = pipeline::run_eval(&cfg, &model, &kinds)?;
            if outcome.model_reused {
                println!("using model {}", model.display());
            } else {
                println!("trained and saved model {}", model.display());
            }
            print!("{}", outcome.comparison_text);
            println!("reports written to {}", cfg.report_dir.display());
        }
        Command::Predict {
            model,
            image,
            classifier,
        } => {
            let m = ModelFile::load(&model).map_err(|e| e.at_stage("model"))?;
            let kind = match classifier {
                None => None,
                Some(ClassifierArg::All) => bail!("predict: choose a single classifier"),
                Some(c) => c.kinds().first().copied(),
            };
            let p = pipeline::predict_image(&m, &image, kind)?;
            println!("class: {}", p.class_name);
            println!("classifier: {}", p.classifier.label());
            let scores: Vec<String> = m
                .class_names
                .iter()
                .zip(&p.scores)
                .map(|(c, s)| format!("{c}={s:.6}"))
                .collect();
            println!("scores: {}", scores.join(" "));
        }
        Command::Report { json } => {
            let text = fs::read_to_string(&json).map_err(|source| {
                railtex_core::Error::Io {
                    path: json.clone(),
                    source,
                }
                .at_stage("report")
            })?;
            print!("{}", render_json(&text).map_err(|e| e.in_file(&json).at_stage("report"))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
