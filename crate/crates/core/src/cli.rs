//! `specmap` command line: inspect, stats, classify, assess, synth, compare.
//!
//! Exit status is 0 on success, 2 on usage errors (one-line diagnostic on
//! stderr) and 1 on runtime failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::assessment::{build_confusion, format_report};
use crate::classifiers::{
    classify_image, read_model, train_mlp, write_model, Classifier, ClassifierConfig, Method,
    MlpHyper,
};
use crate::compare::{run_compare, CompareConfig};
use crate::error::Error;
use crate::raster_io::{
    parse_roi, read_bsq, read_layout, read_map, with_suffix, write_map, BandStack, RasterLayout,
};
use crate::signatures::{extract_signatures, read_signatures, write_signatures};
use crate::synthesis::{generate_scene, read_scene_spec, write_scene};

#[derive(Debug, Parser)]
#[command(name = "specmap", version, about = "Supervised multispectral pixel classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a layout sidecar and the file size it implies
    Info {
        #[arg(long)]
        layout: PathBuf,
    },
    /// Extract class signatures from training regions
    Stats {
        #[command(flatten)]
        input: ImageArgs,
        #[arg(long)]
        roi: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also train a network on the regions and write it here
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        mlp: MlpArgs,
    },
    /// Classify every pixel with one decision rule
    Classify {
        #[arg(long)]
        method: String,
        #[command(flatten)]
        input: ImageArgs,
        #[arg(long)]
        sig: PathBuf,
        /// Trained network (required for `--method mlp`)
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long, default_value = "classified")]
        out: PathBuf,
    },
    /// Build the error matrix of a classified map against ground truth
    Assess {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        legend: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic scene from a scene spec
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train, classify and assess all six methods, then rank them
    Compare {
        #[command(flatten)]
        input: ImageArgs,
        #[arg(long)]
        roi: PathBuf,
        #[arg(long, conflicts_with = "split")]
        truth: Option<PathBuf>,
        /// Fraction of each class kept for training when no truth file is given
        #[arg(long)]
        split: Option<f64>,
        /// Seed for `--split`
        #[arg(long = "seed", default_value_t = 0)]
        split_seed: u64,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ImageArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    layout: PathBuf,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Reject pixels farther than this (mindist: DN distance; mahalanobis: d²)
    #[arg(long)]
    threshold: Option<f64>,
    /// Reject pixels whose best spectral angle exceeds this many degrees
    #[arg(long)]
    angle_threshold: Option<f64>,
    /// Reject pixels whose best network activation is below this
    #[arg(long)]
    min_activation: Option<f64>,
    /// Diagonal ridge for near-singular covariances
    #[arg(long)]
    ridge: Option<f64>,
}

#[derive(Debug, Args)]
struct MlpArgs {
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long = "mlp-seed")]
    mlp_seed: Option<u64>,
}

impl ThresholdArgs {
    fn config(&self) -> Result<ClassifierConfig, Failure> {
        let cfg = ClassifierConfig {
            max_distance_threshold: self.threshold,
            max_angle_threshold_deg: self.angle_threshold,
            min_activation_threshold: self.min_activation,
            covariance_ridge: self.ridge,
            workers: 0,
        };
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        cfg.with_workers_from_env().map_err(|e| Failure::Usage(e.to_string()))
    }
}

impl MlpArgs {
    fn hyper(&self, layout: &RasterLayout) -> MlpHyper {
        let d = MlpHyper::defaults_for(layout.bands);
        MlpHyper {
            hidden: self.hidden.unwrap_or(d.hidden),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            epochs: self.epochs.unwrap_or(d.epochs),
            seed: self.mlp_seed.unwrap_or(d.seed),
            input_scale: layout.max_value(),
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load_image(args: &ImageArgs) -> Result<(RasterLayout, BandStack), Failure> {
    let layout = read_layout(&args.layout)?;
    let image = read_bsq(&args.image, &layout)?;
    Ok((layout, image))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(Error::io(path, e)))
}

/// Parses `argv` (including the program name) and runs one subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("usage error");
            eprintln!("{line}");
            return 2;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Info { layout } => {
            let l = read_layout(&layout)?;
            print!("{}", l.to_sidecar(&[]));
            println!("record_length: {}", l.record_length());
            println!("expected_file_size: {}", l.expected_file_size());
        }

        Command::Stats {
            input,
            roi,
            out,
            model,
            mlp,
        } => {
            let (layout, image) = load_image(&input)?;
            let regions = parse_roi(&roi, image.rows(), image.cols())?;
            let sigs = extract_signatures(&image, &regions)?;
            write_signatures(&out, &sigs)?;
            println!("{} classes, {} bands -> {}", sigs.len(), sigs.bands(), out.display());
            if let Some(path) = model {
                let net = train_mlp(&image, &regions, &mlp.hyper(&layout))?;
                write_model(&path, &net)?;
                println!("network {:?} -> {}", net.layer_sizes(), path.display());
            }
        }

        Command::Classify {
            method,
            input,
            sig,
            model,
            thresholds,
            out,
        } => {
            let method: Method = method.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let cfg = thresholds.config()?;
            let sigs = read_signatures(&sig)?;
            let classifier = match (method, model) {
                (Method::NeuralNetwork, Some(path)) => {
                    Classifier::from_model(&read_model(&path)?, sigs.legend(), &cfg)?
                }
                (Method::NeuralNetwork, None) => {
                    return Err(Failure::Usage("--method mlp requires --model".into()))
                }
                (m, _) => Classifier::new(m, &sigs, &cfg)?,
            };
            if classifier.applied_ridges().iter().any(|&r| r > 0.0) {
                log::warn!("near-singular covariance regularized with ridge {:?}", classifier.applied_ridges());
            }
            let (_, image) = load_image(&input)?;
            let map = classify_image(&image, &classifier)?;
            let files = write_map(&map, &out)?;
            let unclassified = map.labels().iter().filter(|&&l| l == 0).count();
            println!(
                "{method}: {} pixels, {unclassified} unclassified -> {}",
                map.labels().len(),
                files.labels.display()
            );
        }

        Command::Assess {
            map,
            legend,
            truth,
            out,
        } => {
            let map = read_map(&map, &legend)?;
            let truth = parse_roi(&truth, map.rows(), map.cols())?;
            let cm = build_confusion(&map, &truth)?;
            let names: Vec<String> = truth.classes().iter().map(|c| c.name.clone()).collect();
            let report = format_report(&cm, &names)?;
            write_text(&out, &report)?;
            print!("{report}");
        }

        Command::Synth { spec, out } => {
            let spec = read_scene_spec(&spec)?;
            let scene = generate_scene(&spec)?;
            write_scene(&scene, &spec, &out)?;
            println!(
                "{}x{}x{} scene, {} classes, seed {} -> {}.bsq",
                spec.bands,
                spec.rows,
                spec.cols,
                spec.classes.len(),
                spec.seed,
                out.display()
            );
        }

        Command::Compare {
            input,
            roi,
            truth,
            split,
            split_seed,
            thresholds,
            out,
        } => {
            let classifier = thresholds.config()?;
            let (layout, image) = load_image(&input)?;
            let regions = parse_roi(&roi, image.rows(), image.cols())?;
            let (train, test) = match truth {
                Some(path) => (regions, parse_roi(&path, image.rows(), image.cols())?),
                None => regions.split(split.unwrap_or(0.5), split_seed)?,
            };
            let mut cfg = CompareConfig::defaults_for(layout.bands);
            cfg.classifier = classifier;
            cfg.mlp.input_scale = layout.max_value();
            let comparison = run_compare(&image, &train, &test, &cfg)?;
            for o in &comparison.outcomes {
                if let Ok(score) = &o.result {
                    write_map(&score.map, with_suffix(&out, &format!(".{}", o.method)))?;
                }
            }
            let text = comparison.to_text();
            let report_path = with_suffix(&out, ".txt");
            write_text(&report_path, &text)?;
            println!("{}", text.lines().last().unwrap_or_default());
        }
    }
    Ok(())
}
