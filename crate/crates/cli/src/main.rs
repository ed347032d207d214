//! Command-line driver: simulate synthetic instances, run selections and
//! threshold sweeps, fit or evaluate density-ratio providers, and summarize
//! raw trial records.

mod data;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use shiftsel::harness::{
    build_instance, records_from_tsv, records_to_tsv, run_experiment_on, summaries_to_tsv,
    summarize_records, thetas_to_tsv, ExperimentConfig,
};
use shiftsel::mdre::{fit_mdre, MdreConfig};
use shiftsel::ratio::{
    exact_ratio, fit_smoothed, max_ratio_bound, ProductCategorical, RatioProvider,
};
use shiftsel::selection::{select, Backend, LabeledData, Menu};
use shiftsel::sim::sequence_to_string;
use shiftsel::{apply_g, GSample};

#[derive(Parser)]
#[command(
    name = "shiftsel",
    version,
    about = "Distribution-shift-aware selection of design configurations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOverrides {
    /// Experiment config file (structured key-value text).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the selection error rate alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Restrict the run to one backend.
    #[arg(long)]
    backend: Option<String>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and export its datasets and distributions.
    Simulate(CommonOverrides),
    /// Run one selection from previously simulated data files.
    Select {
        #[command(flatten)]
        common: CommonOverrides,
        /// Directory produced by `simulate`.
        #[arg(long)]
        data: PathBuf,
        /// Threshold tau; defaults to the first tau in the config.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Run the multi-trial threshold sweep experiment.
    Sweep(CommonOverrides),
    /// Evaluate or fit a density-ratio provider.
    Ratios(RatiosArgs),
    /// Recompute summary tables from raw records.
    Report {
        /// Records file produced by `sweep`.
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RatiosArgs {
    /// exact | smoothed | mdre
    #[arg(long)]
    mode: String,
    /// Design distribution file (exact mode).
    #[arg(long)]
    design: Option<PathBuf>,
    /// Labeled distribution file (exact mode).
    #[arg(long)]
    labeled: Option<PathBuf>,
    /// File of design-drawn sequences (smoothed and mdre modes).
    #[arg(long)]
    design_seqs: Option<PathBuf>,
    /// File of labeled-distribution sequences (smoothed and mdre modes).
    #[arg(long)]
    labeled_seqs: Option<PathBuf>,
    /// Alphabet size (smoothed and mdre modes).
    #[arg(long)]
    alphabet: Option<usize>,
    /// Sequences to evaluate, one per line.
    #[arg(long)]
    seqs: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(common: &CommonOverrides) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    if let Some(seed) = common.seed {
        cfg.experiment.master_seed = seed;
    }
    if let Some(alpha) = common.alpha {
        cfg.experiment.alpha = alpha;
    }
    if let Some(trials) = common.trials {
        cfg.experiment.trials = trials;
    }
    if let Some(backend) = &common.backend {
        cfg.experiment.backends = vec![backend.parse::<Backend>()?];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn cmd_simulate(common: &CommonOverrides) -> Result<()> {
    let cfg = load_config(common)?;
    let instance = build_instance(&cfg)?;
    let out = &common.out;

    write_file(
        out,
        "instance.toml",
        &data::instance_to_toml(&cfg, &instance)?,
    )?;
    write_file(
        out,
        "theta.tsv",
        &thetas_to_tsv(&instance.thetas(), &instance),
    )?;
    write_file(out, "labeled_dist.txt", &instance.labeled_dist.to_text())?;

    let labeled = data::simulate_labeled(&cfg, &instance);
    write_file(out, "labeled.tsv", &data::labeled_to_tsv(&labeled))?;

    for (c, config) in instance.configs.iter().enumerate() {
        write_file(
            out,
            &format!("design_{}.txt", config.id),
            &config.design.to_text(),
        )?;
        let batch = data::simulate_designs(&cfg, &instance, c);
        write_file(
            out,
            &format!("designs_{}.tsv", config.id),
            &data::designs_to_tsv(&batch),
        )?;
    }
    println!(
        "simulated instance with {} configurations into {}",
        instance.configs.len(),
        out.display()
    );
    Ok(())
}

fn cmd_select(common: &CommonOverrides, data_dir: &Path, tau: Option<f64>) -> Result<()> {
    let cfg = load_config(common)?;
    let backend = cfg.experiment.backends[0];
    let mut crit = cfg.criterion.criterion()?;
    crit.tau = match tau {
        Some(t) => t,
        None => cfg.criterion.taus()?[0],
    };

    let manifest = data::read_instance_manifest(&data_dir.join("instance.toml"))?;
    let labeled_dist =
        ProductCategorical::from_text(&fs::read_to_string(data_dir.join("labeled_dist.txt"))?)?;
    let labeled = data::labeled_from_tsv(
        &fs::read_to_string(data_dir.join("labeled.tsv"))?,
        manifest.alphabet,
    )?;

    let menu = Menu::new(manifest.config_ids.clone())?;
    let mut design_g = BTreeMap::new();
    let mut labeled_g = BTreeMap::new();
    for id in &manifest.config_ids {
        let design_dist = ProductCategorical::from_text(&fs::read_to_string(
            data_dir.join(format!("design_{id}.txt")),
        )?)?;
        let preds = data::design_predictions_from_tsv(
            &fs::read_to_string(data_dir.join(format!("designs_{id}.tsv")))?,
            manifest.alphabet,
        )?;
        design_g.insert(id.clone(), apply_g(&crit, &preds));

        let mut samples = Vec::with_capacity(labeled.len());
        for (x, y, pred) in &labeled {
            let w = exact_ratio(&design_dist, &labeled_dist, x)?;
            samples.push(GSample::from_raw(&crit, *y, *pred, w));
        }
        let bound = max_ratio_bound(&design_dist, &labeled_dist)?;
        labeled_g.insert(id.clone(), LabeledData::with_ratio_bound(samples, bound));
    }

    let report = select(
        &menu,
        &design_g,
        &labeled_g,
        &crit,
        cfg.experiment.alpha,
        backend,
        &cfg.bound,
    )?;
    let text = report.to_toml_string();
    let path = write_file(&common.out, "report.toml", &text)?;
    println!("selected {:?} -> {}", report.selected, path.display());
    Ok(())
}

fn cmd_sweep(common: &CommonOverrides) -> Result<()> {
    let cfg = load_config(common)?;
    let instance = build_instance(&cfg)?;
    let output = run_experiment_on(&cfg, &instance)?;
    let out = &common.out;
    write_file(out, "records.tsv", &records_to_tsv(&output.records))?;
    write_file(out, "summary.tsv", &summaries_to_tsv(&output.summaries))?;
    write_file(out, "theta.tsv", &thetas_to_tsv(&output.thetas, &instance))?;
    write_file(out, "config.toml", &cfg.to_toml_string())?;
    println!(
        "{} trials x {} taus x {} backends -> {}",
        cfg.experiment.trials,
        cfg.criterion.taus()?.len(),
        cfg.experiment.backends.len(),
        out.display()
    );
    Ok(())
}

fn build_provider(args: &RatiosArgs) -> Result<(RatioProvider, usize)> {
    match args.mode.as_str() {
        "exact" => {
            let (design, labeled) = match (&args.design, &args.labeled) {
                (Some(d), Some(l)) => (
                    ProductCategorical::from_text(&fs::read_to_string(d)?)?,
                    ProductCategorical::from_text(&fs::read_to_string(l)?)?,
                ),
                _ => bail!("exact mode needs --design and --labeled distribution files"),
            };
            let alphabet = design.alphabet();
            Ok((RatioProvider::Exact { design, labeled }, alphabet))
        }
        "smoothed" | "mdre" => {
            let alphabet = args
                .alphabet
                .with_context(|| format!("{} mode needs --alphabet", args.mode))?;
            let (dseqs, lseqs) = match (&args.design_seqs, &args.labeled_seqs) {
                (Some(d), Some(l)) => (
                    data::read_sequences(d, alphabet)?,
                    data::read_sequences(l, alphabet)?,
                ),
                _ => bail!("{} mode needs --design-seqs and --labeled-seqs", args.mode),
            };
            if dseqs.is_empty() || lseqs.is_empty() {
                bail!("{} mode needs nonempty sequence files", args.mode);
            }
            let sites = dseqs[0].len();
            if args.mode == "smoothed" {
                let design = fit_smoothed(&dseqs, sites, alphabet)?;
                let labeled = fit_smoothed(&lseqs, sites, alphabet)?;
                Ok((RatioProvider::Smoothed { design, labeled }, alphabet))
            } else {
                let classes = vec![
                    ("labeled".to_string(), lseqs),
                    ("design".to_string(), dseqs),
                ];
                let model = fit_mdre(&classes, sites, alphabet, &MdreConfig::default())?;
                Ok((
                    RatioProvider::Classifier {
                        model,
                        numerator: "design".into(),
                        denominator: "labeled".into(),
                    },
                    alphabet,
                ))
            }
        }
        other => bail!("unknown ratios mode {other:?}; use exact, smoothed, or mdre"),
    }
}

fn cmd_ratios(args: &RatiosArgs) -> Result<()> {
    let (provider, alphabet) = build_provider(args)?;
    let mut lines = String::new();
    if let Some(bound) = provider.exact_bound() {
        lines.push_str(&format!("# ratio_bound {}\n", bound?));
    }
    if let RatioProvider::Classifier { model, .. } = &provider {
        lines.push_str(&format!(
            "# epochs {} grad_norm {}\n",
            model.epochs_run(),
            model.final_grad_norm()
        ));
    }
    lines.push_str("sequence\tratio\n");
    for x in &data::read_sequences(&args.seqs, alphabet)? {
        lines.push_str(&format!(
            "{}\t{}\n",
            sequence_to_string(x),
            provider.ratio(x)?
        ));
    }
    match &args.out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(path, &lines)?;
            println!("wrote {}", path.display());
        }
        None => print!("{lines}"),
    }
    Ok(())
}

fn cmd_report(records: &Path, out: &Path) -> Result<()> {
    let parsed = records_from_tsv(&fs::read_to_string(records)?)?;
    let summaries = summarize_records(&parsed);
    let path = write_file(out, "summary.tsv", &summaries_to_tsv(&summaries))?;
    println!("{} summary rows -> {}", summaries.len(), path.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(common) => cmd_simulate(common),
        Command::Select { common, data, tau } => cmd_select(common, data, *tau),
        Command::Sweep(common) => cmd_sweep(common),
        Command::Ratios(args) => cmd_ratios(args),
        Command::Report { records, out } => cmd_report(records, out),
    }
}
