//! Command-line driver: dataset generation, estimation, evaluation, and the
//! two trend experiments (view-count ablation, camera-wiggle sweep).
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on data errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mvpose_core::error::Error;
use mvpose_core::harness::{
    run_ablate_views, run_curve, run_estimate, run_eval, run_gen, run_wiggle_sweep,
    EstimateOptions, EvalSplit, ExperimentConfig, ViewsUsed,
};
use mvpose_core::sim::CameraRigSpec;

#[derive(Parser)]
#[command(name = "mvpose", version, about = "Multi-view RGB-D 6D pose estimation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// JSON experiment config; flags below override individual fields.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    scenes: Option<usize>,

    /// Camera rig: fixed-ring, wiggle-ring, or sphere-quadrant.
    #[arg(long)]
    rig: Option<String>,

    /// Views fused per estimate: a count or "sweep".
    #[arg(long)]
    views: Option<String>,

    /// Oracle offset noise sigma in meters.
    #[arg(long)]
    sigma_offsets: Option<f64>,

    /// Camera position wiggle sigma in meters (wiggle-ring rigs).
    #[arg(long)]
    sigma_wiggle: Option<f64>,

    /// Oracle label flip rate in [0, 1].
    #[arg(long)]
    label_flip: Option<f64>,

    #[arg(long)]
    samples_per_view: Option<usize>,

    /// Which scenes to estimate: "test" or "all".
    #[arg(long)]
    split: Option<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<ExperimentConfig, Error> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(scenes) = self.scenes {
            config.scene_count = scenes;
        }
        if let Some(rig) = &self.rig {
            config.rig = parse_rig(rig, self.sigma_wiggle)?;
        } else if let Some(sigma) = self.sigma_wiggle {
            config.rig = match config.rig {
                CameraRigSpec::FixedRing { count, radius, height }
                | CameraRigSpec::WiggleRing { count, radius, height, .. } => {
                    CameraRigSpec::WiggleRing {
                        count,
                        radius,
                        height,
                        position_sigma: sigma,
                    }
                }
                other => other,
            };
        }
        if let Some(views) = &self.views {
            config.views_used = parse_views(views)?;
        }
        if let Some(sigma) = self.sigma_offsets {
            config.oracle.offset_sigma = sigma;
        }
        if let Some(rate) = self.label_flip {
            config.oracle.label_flip_rate = rate;
        }
        if let Some(n) = self.samples_per_view {
            config.samples_per_view = n;
        }
        if let Some(split) = &self.split {
            config.eval_split = parse_split(split)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn estimate_options(&self) -> Result<EstimateOptions, Error> {
        Ok(EstimateOptions {
            views: self.views.as_deref().map(parse_views).transpose()?,
            offset_sigma: self.sigma_offsets,
            label_flip_rate: self.label_flip,
            samples_per_view: self.samples_per_view,
            seed: self.seed,
            eval_split: self.split.as_deref().map(parse_split).transpose()?,
        })
    }
}

fn parse_rig(name: &str, sigma_wiggle: Option<f64>) -> Result<CameraRigSpec, Error> {
    match name {
        "fixed-ring" | "fixed_ring" => Ok(CameraRigSpec::default_fixed_ring()),
        "wiggle-ring" | "wiggle_ring" => Ok(CameraRigSpec::default_wiggle_ring(
            sigma_wiggle.unwrap_or(0.005),
        )),
        "sphere-quadrant" | "sphere_quadrant" => Ok(CameraRigSpec::default_sphere_quadrant()),
        other => Err(Error::Config(format!(
            "unknown rig {other:?}; expected fixed-ring, wiggle-ring, or sphere-quadrant"
        ))),
    }
}

fn parse_views(value: &str) -> Result<ViewsUsed, Error> {
    if value == "sweep" {
        return Ok(ViewsUsed::Sweep);
    }
    value
        .parse::<usize>()
        .map(ViewsUsed::K)
        .map_err(|_| Error::Config(format!("--views expects a count or \"sweep\", got {value:?}")))
}

fn parse_split(value: &str) -> Result<EvalSplit, Error> {
    match value {
        "test" => Ok(EvalSplit::Test),
        "all" => Ok(EvalSplit::All),
        other => Err(Error::Config(format!(
            "--split expects \"test\" or \"all\", got {other:?}"
        ))),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-view dataset.
    Gen {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the estimation pipeline over a generated dataset.
    Estimate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate estimates against dataset ground truth.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Restrict to combinations of this view count.
        #[arg(long)]
        k: Option<usize>,
    },
    /// View-count ablation: gen + estimate sweep + one eval per k.
    AblateViews {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Camera-wiggle robustness sweep over position sigmas.
    WiggleSweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated wiggle sigmas in meters, e.g. "0,0.002,0.005,0.01".
        #[arg(long, default_value = "0,0.002,0.005,0.01")]
        sigma_list: String,
    },
    /// Accuracy-threshold curves from a saved distances.json.
    Curve {
        #[arg(long)]
        distances: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Gen { config, out } => {
            let config = config.build()?;
            let record = run_gen(&config, &out)?;
            println!(
                "generated {} scenes under {} ({:.1} s)",
                record.scene_count,
                out.display(),
                record.timings_ms["gen_total"] / 1e3
            );
        }
        Command::Estimate { dataset, out, config } => {
            let options = config.estimate_options()?;
            let record = run_estimate(&dataset, &out, &options)?;
            println!(
                "estimated {} scenes → {} files ({:.2} scenes/s)",
                record.scene_count,
                record.outputs.len(),
                record.timings_ms["scenes_per_sec"]
            );
        }
        Command::Eval { dataset, estimates, out, k } => {
            let report = run_eval(&dataset, &estimates, &out, k)?;
            println!("class                 ADD-S AUC  ADD(-S) AUC   <2cm   (-S)<2cm");
            for row in report.per_class.iter().chain([&report.overall]) {
                println!(
                    "{:<20} {:>9.2} {:>12.2} {:>7.2} {:>9.2}",
                    row.name, row.add_s_auc, row.adds_auc, row.add_s_below_2cm, row.adds_below_2cm
                );
            }
        }
        Command::AblateViews { config, out } => {
            let config = config.build()?;
            let rows = run_ablate_views(&config, &out)?;
            println!("k    ADD-S AUC  ADD(-S) AUC");
            for (k, report) in &rows {
                println!(
                    "{:<4} {:>9.2} {:>12.2}",
                    k, report.overall.add_s_auc, report.overall.adds_auc
                );
            }
            println!("table: {}", out.join("ablate_views.csv").display());
        }
        Command::WiggleSweep { config, out, sigma_list } => {
            let config = config.build()?;
            let sigmas: Vec<f64> = sigma_list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad sigma {s:?} in --sigma-list")))
                })
                .collect::<Result<_, _>>()?;
            let rows = run_wiggle_sweep(&config, &sigmas, &out)?;
            println!("sigma_m   ADD-S AUC  ADD(-S) AUC");
            for (sigma, report) in &rows {
                println!(
                    "{:<9.4} {:>9.2} {:>12.2}",
                    sigma, report.overall.add_s_auc, report.overall.adds_auc
                );
            }
            println!("table: {}", out.join("wiggle_sweep.csv").display());
        }
        Command::Curve { distances, out } => {
            run_curve(&distances, &out)?;
            println!("curves written under {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
