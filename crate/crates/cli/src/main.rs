use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use fcsmoke::baseline::{enhance_with, Method};
use fcsmoke::eval::{
    evaluate, evaluate_saturation, extract_dataset_features, load_manifest, EvalMethod, EvalParams,
    EvalReport, FeatureCache, FeatureTable,
};
use fcsmoke::image::{load_image, save_png};
use fcsmoke::saturation::SatMethod;
use fcsmoke::svm::{label_for_score, train, LinearModel, SvmParams};
use fcsmoke::wls::Preconditioner;
use fcsmoke::Error;

#[derive(Parser)]
#[command(
    name = "fcsmoke",
    version,
    about = "Frame enhancement and smoke classification"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance one image and write it as PNG.
    Enhance {
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: PipelineOpts,
    },
    /// Extract GM-LoG features for every image of a manifest.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: PipelineOpts,
    },
    /// Train a linear SVM on a feature CSV.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 10_000.0)]
        c: f64,
        #[arg(long)]
        model: PathBuf,
    },
    /// Score a feature CSV with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on one manifest, test on another, write a JSON report.
    Evaluate {
        #[arg(long)]
        train_manifest: PathBuf,
        #[arg(long)]
        test_manifest: PathBuf,
        #[arg(long, value_parser = parse_eval_method)]
        method: EvalMethod,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 10_000.0)]
        c: f64,
        #[command(flatten)]
        opts: PipelineOpts,
    },
    /// Run a saturation-histogram classifier over a manifest.
    Baseline {
        #[arg(long, value_parser = parse_sat_method)]
        method: SatMethod,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0.35)]
        tc: f64,
    },
    /// Write the ROC points of a report as CSV.
    Roc {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct PipelineOpts {
    /// Fine-scale WLS smoothing.
    #[arg(long, default_value_t = 0.125)]
    lambda1: f64,
    /// Coarse-scale WLS smoothing.
    #[arg(long, default_value_t = 0.5)]
    lambda2: f64,
    /// Relative residual at which the WLS solver stops.
    #[arg(long, default_value_t = 1e-6)]
    solver_tol: f64,
    #[arg(long, value_parser = parse_preconditioner, default_value = "incomplete_cholesky")]
    preconditioner: Preconditioner,
    /// Fraction of images allowed to fail before a batch aborts.
    #[arg(long, default_value_t = 0.01)]
    max_failures: f64,
    /// Reuse features computed by earlier runs with the same configuration.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl PipelineOpts {
    fn params(&self) -> EvalParams {
        let mut p = EvalParams::default();
        let fc = &mut p.pipeline.enhance.fc;
        fc.lambda1 = self.lambda1;
        fc.lambda2 = self.lambda2;
        fc.wls.solver_tol = self.solver_tol;
        fc.wls.preconditioner = self.preconditioner;
        p.pipeline.max_failure_fraction = self.max_failures;
        p
    }

    fn cache(&self) -> anyhow::Result<Option<FeatureCache>> {
        Ok(self.cache_dir.as_deref().map(FeatureCache::new).transpose()?)
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_eval_method(s: &str) -> Result<EvalMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sat_method(s: &str) -> Result<SatMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_preconditioner(s: &str) -> Result<Preconditioner, String> {
    match s {
        "jacobi" => Ok(Preconditioner::Jacobi),
        "incomplete_cholesky" | "ic0" => Ok(Preconditioner::IncompleteCholesky),
        _ => Err(format!(
            "unknown preconditioner '{s}' (jacobi, incomplete_cholesky)"
        )),
    }
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Enhance {
            method,
            input,
            out,
            opts,
        } => {
            let img = load_image(&input)?;
            let enhanced = enhance_with(&img, method, &opts.params().pipeline.enhance)?;
            save_png(&enhanced, &out)?;
        }
        Command::Features {
            manifest,
            method,
            out,
            opts,
        } => {
            let manifest = load_manifest(&manifest)?;
            let ex =
                extract_dataset_features(&manifest, method, &opts.params().pipeline, opts.cache()?.as_ref())?;
            for f in &ex.failures {
                eprintln!("failed: {}: {}", f.path.display(), f.error);
            }
            ex.table.write_csv(&out)?;
        }
        Command::Train { features, c, model } => {
            let table = FeatureTable::read_csv(&features)?;
            let params = SvmParams {
                c,
                ..SvmParams::default()
            };
            let m = train(&table.features(), &table.labels(), &params)?;
            write(&model, &m.to_text())?;
        }
        Command::Predict { model, features, out } => {
            let text = fs::read_to_string(&model).map_err(|e| Error::Io {
                path: model,
                source: e,
            })?;
            let model = LinearModel::from_text(&text)?;
            let table = FeatureTable::read_csv(&features)?;
            let mut csv = String::from("image_path,label,score,predicted\n");
            for row in &table.rows {
                let score = model.decision_score(&row.values)?;
                csv.push_str(&format!(
                    "{},{},{score},{}\n",
                    row.path.display(),
                    row.label,
                    label_for_score(score)
                ));
            }
            write(&out, &csv)?;
        }
        Command::Evaluate {
            train_manifest,
            test_manifest,
            method,
            report,
            c,
            opts,
        } => {
            let train_m = load_manifest(&train_manifest)?;
            let test_m = load_manifest(&test_manifest)?;
            let mut params = opts.params();
            params.svm.c = c;
            let r = evaluate(&train_m, &test_m, method, &params, opts.cache()?.as_ref())?;
            write(&report, &r.to_json()?)?;
            eprintln!(
                "{}: accuracy {:.4}, f1 {:.4}, auc {:.4}, eer {:.4}",
                r.method, r.accuracy, r.f1, r.auc, r.eer
            );
        }
        Command::Baseline {
            method,
            manifest,
            report,
            tc,
        } => {
            let manifest = load_manifest(&manifest)?;
            let mut params = EvalParams::default();
            params.saturation.t_c = tc;
            let r = evaluate_saturation(&manifest, method, &params)?;
            write(&report, &r.to_json()?)?;
            eprintln!(
                "{}: accuracy {:.4}, f1 {:.4}, auc {:.4}, eer {:.4}",
                r.method, r.accuracy, r.f1, r.auc, r.eer
            );
        }
        Command::Roc { report, out } => {
            let text = fs::read_to_string(&report).map_err(|e| Error::Io {
                path: report,
                source: e,
            })?;
            write(&out, &EvalReport::from_json(&text)?.roc_csv())?;
        }
    }
    Ok(())
}

/// 1 for bad arguments, 3 when a solver gives up, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::InvalidArgument(_)) => 1,
        Some(Error::Convergence { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
