//! `sidma`: command-line front end of the sparse-IDMA lab.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sparse_idma::de::{de_threshold, write_threshold_csv, LoadModel, ThresholdConfig, ThresholdRow};
use sparse_idma::ldpc::Protograph;
use sparse_idma::optimizer::{optimize_ensemble_resumable, EnsembleSearch, EnsembleTarget};
use sparse_idma::presets::{code_for_rate, Preset};
use sparse_idma::sim::{
    curve_from_rows, curve_is_monotone, find_min_ebn0, merge_results, read_results_csv, write_curve_csv,
    write_results_csv, MonteCarlo, PointEvaluator, PointResult, PupeEstimate, ResultRow, Scheme, SchemeLabel,
    SimConfig,
};
use sparse_idma::tx::{ChannelMode, RepetitionDD};

#[derive(Parser)]
#[command(name = "sidma", version, about = "Sparse-IDMA unsourced random access lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate PUPE at one operating point.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// CSV output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search the minimum Eb/N0 meeting the PUPE target (exit 2 if none).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Per-point CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Users-versus-Eb/N0 curve CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Density-evolution threshold of the configured ensemble.
    Threshold {
        #[command(flatten)]
        common: Common,
        /// Protograph file ("rows cols" then the matrix); preset code otherwise.
        #[arg(long)]
        proto: Option<PathBuf>,
        /// Evaluate one user on a BPSK channel instead of the MAC ensemble.
        #[arg(long)]
        single_user: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Differential-evolution search for a protograph of a given shape.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        /// Lifting factor.
        #[arg(long)]
        z: usize,
        /// Threshold evaluations.
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        /// Also search nu over repetition factors 1 and 2.
        #[arg(long)]
        search_nu: bool,
        #[arg(long)]
        single_user: bool,
        /// Protograph files injected into the initial population.
        #[arg(long)]
        start: Vec<PathBuf>,
        /// Resumable checkpoint file.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// JSON result; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge result CSVs and derive the required-Eb/N0 curve.
    Report {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    ka: Option<usize>,
    #[arg(long = "ebn0-db", allow_negative_numbers = true)]
    ebn0_db: Option<f64>,
    /// awgn or rayleigh.
    #[arg(long)]
    channel: Option<ChannelMode>,
    /// sparse or idma75.
    #[arg(long)]
    preset: Option<Preset>,
    /// P1 / P2 ratio at a single point.
    #[arg(long)]
    split: Option<f64>,
    /// Repetition distribution, e.g. "0.12,0.88".
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => SimConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.ka {
            cfg.k_a = v;
        }
        if let Some(v) = self.ebn0_db {
            cfg.ebn0_db = v;
        }
        if let Some(v) = self.channel {
            cfg.channel = v;
        }
        if let Some(v) = self.preset {
            cfg.preset = v;
        }
        if let Some(v) = self.split {
            cfg.split_ratio = v;
        }
        if let Some(v) = &self.nu {
            cfg.nu = Some(parse_nu(v)?);
        }
        if let Some(v) = self.rate {
            cfg.rate = Some(v);
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_nu(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad nu coefficient {t:?}"))
        })
        .collect()
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn label(cfg: &SimConfig, scheme: &Scheme) -> SchemeLabel {
    SchemeLabel {
        k_a: cfg.k_a,
        rate: scheme.rate,
        nu: scheme.dd.to_string(),
        channel: cfg.channel.to_string(),
        preset: cfg.preset.to_string(),
    }
}

fn simulate(common: &Common, out: Option<&Path>) -> Result<ExitCode> {
    let cfg = common.config()?;
    let scheme = Scheme::from_config(&cfg)?;
    let eval = MonteCarlo {
        config: &cfg,
        scheme: &scheme,
    };
    let start = std::time::Instant::now();
    let estimate = eval.evaluate(cfg.ebn0_db, cfg.split_ratio)?;
    let (p1, p2) = cfg.layout.powers_for_ebn0(cfg.ebn0_db, cfg.split_ratio)?;
    let point = PointResult {
        ebn0_db: cfg.ebn0_db,
        split_ratio: cfg.split_ratio,
        p1,
        p2,
        estimate,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    eprintln!(
        "K_a={} Eb/N0={} dB: Pe={:.5} [{:.5}, {:.5}] over {} trials, {} collisions, {} missed detections",
        cfg.k_a,
        cfg.ebn0_db,
        estimate.pe,
        estimate.ci_lo,
        estimate.ci_hi,
        estimate.trials,
        estimate.collisions,
        estimate.missed_detections
    );
    write_results_csv(&[ResultRow::new(&label(&cfg, &scheme), &point)], sink(out)?)?;
    Ok(ExitCode::SUCCESS)
}

/// Logs every evaluated point to stderr.
struct Progress<'a>(&'a dyn PointEvaluator);

impl PointEvaluator for Progress<'_> {
    fn evaluate(&self, ebn0_db: f64, split_ratio: f64) -> sparse_idma::Result<PupeEstimate> {
        let e = self.0.evaluate(ebn0_db, split_ratio)?;
        eprintln!(
            "{ebn0_db:.2} dB split {split_ratio}: Pe {:.4} [{:.4}, {:.4}] over {} trials{}",
            e.pe,
            e.ci_lo,
            e.ci_hi,
            e.trials,
            if e.aborted { " (aborted)" } else { "" }
        );
        Ok(e)
    }
}

fn sweep(common: &Common, out: Option<&Path>, curve: Option<&Path>) -> Result<ExitCode> {
    let cfg = common.config()?;
    let scheme = Scheme::from_config(&cfg)?;
    let eval = MonteCarlo {
        config: &cfg,
        scheme: &scheme,
    };
    let res = find_min_ebn0(&Progress(&eval), &cfg.grid, cfg.epsilon(), &cfg.layout)?;
    let lab = label(&cfg, &scheme);
    let rows: Vec<ResultRow> = res.points.iter().map(|p| ResultRow::new(&lab, p)).collect();
    write_results_csv(&rows, sink(out)?)?;
    if let Some(path) = curve {
        write_curve_csv(&curve_from_rows(&rows, cfg.epsilon()), File::create(path)?)?;
    }
    match (res.feasible, res.best) {
        (true, Some(b)) => {
            eprintln!(
                "required Eb/N0 = {} dB at P1/P2 = {} (P1 = {:.6}, P2 = {:.6}), Pe = {:.5}",
                res.min_ebn0_db, b.split_ratio, b.p1, b.p2, b.estimate.pe
            );
            Ok(ExitCode::SUCCESS)
        }
        (_, best) => {
            let pe = best.map_or(f64::NAN, |b| b.estimate.pe);
            eprintln!("infeasible on the grid; best Pe = {pe:.5}");
            Ok(ExitCode::from(2))
        }
    }
}

fn threshold(common: &Common, proto: Option<&Path>, single_user: bool, out: Option<&Path>) -> Result<ExitCode> {
    let cfg = common.config()?;
    let (rate, dd) = cfg.preset.defaults(cfg.k_a)?;
    let rate = cfg.rate.unwrap_or(rate);
    let dd = match &cfg.nu {
        Some(nu) => RepetitionDD::new(nu.clone())?,
        None => dd,
    };
    let preset = code_for_rate(rate)?;
    let (proto, n) = match proto {
        Some(p) => {
            let proto = read_proto(p)?;
            let n = preset.z * proto.num_vars();
            (proto, n)
        }
        None => (preset.protograph()?, preset.n()),
    };
    let rate = proto.design_rate();
    let (tcfg, dd) = if single_user {
        let search = EnsembleSearch::new(
            proto.num_checks(),
            proto.num_vars(),
            n / proto.num_vars(),
            EnsembleTarget::SingleUser,
        );
        let dd = RepetitionDD::regular(1);
        (search.threshold_config(&dd)?, dd)
    } else {
        let tcfg = ThresholdConfig::system(cfg.layout, cfg.split_ratio, cfg.k_a, n, &dd, LoadModel::Poisson)?;
        (tcfg, dd)
    };
    let t = de_threshold(&proto, &dd, &tcfg)?;
    eprintln!("threshold {} dB after {} recursions", t.ebn0_db, t.evaluations);
    let row = ThresholdRow {
        proto_hash: proto.content_hash(),
        nu: dd.to_string(),
        k_a: if single_user { 1 } else { cfg.k_a },
        rate,
        threshold_db: t.ebn0_db,
        iterations: t.iterations,
    };
    write_threshold_csv(&[row], sink(out)?)?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn optimize(
    common: &Common,
    rows: usize,
    cols: usize,
    z: usize,
    budget: usize,
    search_nu: bool,
    single_user: bool,
    start: &[PathBuf],
    checkpoint: Option<&Path>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let cfg = common.config()?;
    let target = if single_user {
        EnsembleTarget::SingleUser
    } else {
        EnsembleTarget::System {
            layout: cfg.layout,
            k_users: cfg.k_a,
            split_ratio: cfg.split_ratio,
        }
    };
    let mut search = EnsembleSearch::new(rows, cols, z, target);
    if single_user {
        search.nu_support = vec![1];
    } else if !search_nu {
        let (_, dd) = cfg.preset.defaults(cfg.k_a)?;
        let nu = match &cfg.nu {
            Some(nu) => nu.clone(),
            None => dd.coefficients().to_vec(),
        };
        search.fixed_nu = Some(nu);
    }
    let start_nu = match &search.fixed_nu {
        Some(nu) => nu.clone(),
        None => {
            let top = search.nu_support.iter().copied().max().unwrap_or(1);
            RepetitionDD::regular(top).coefficients().to_vec()
        }
    };
    let mut seeds = Vec::new();
    for p in start {
        let proto: Protograph = read_proto(p)?;
        let m: Vec<Vec<i64>> = proto
            .rows()
            .iter()
            .map(|r| r.iter().map(|&e| i64::from(e)).collect())
            .collect();
        seeds.push((m, start_nu.clone()));
    }
    let res = optimize_ensemble_resumable(&search, budget, cfg.seed, &seeds, checkpoint)?;
    eprintln!(
        "best threshold {} dB after {} evaluations, {} generations",
        res.best.threshold_db, res.evaluations, res.generations
    );
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &res.best)?;
    writeln!(w)?;
    Ok(ExitCode::SUCCESS)
}

fn read_proto(path: &Path) -> Result<Protograph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.parse()?)
}

fn report(inputs: &[PathBuf], out: Option<&Path>, curve: Option<&Path>, epsilon: f64) -> Result<ExitCode> {
    if inputs.is_empty() {
        bail!("no input CSVs given");
    }
    let mut tables = Vec::new();
    for p in inputs {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        tables.push(read_results_csv(f)?);
    }
    let rows = merge_results(tables);
    write_results_csv(&rows, sink(out)?)?;
    let c = curve_from_rows(&rows, epsilon);
    if !curve_is_monotone(&c) {
        eprintln!("note: required Eb/N0 is not monotone in K_a for some scheme");
    }
    if let Some(path) = curve {
        write_curve_csv(&c, File::create(path)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { common, out } => simulate(common, out.as_deref()),
        Command::Sweep { common, out, curve } => sweep(common, out.as_deref(), curve.as_deref()),
        Command::Threshold {
            common,
            proto,
            single_user,
            out,
        } => threshold(common, proto.as_deref(), *single_user, out.as_deref()),
        Command::Optimize {
            common,
            rows,
            cols,
            z,
            budget,
            search_nu,
            single_user,
            start,
            checkpoint,
            out,
        } => optimize(
            common,
            *rows,
            *cols,
            *z,
            *budget,
            *search_nu,
            *single_user,
            start,
            checkpoint.as_deref(),
            out.as_deref(),
        ),
        Command::Report {
            inputs,
            out,
            curve,
            epsilon,
        } => report(inputs, out.as_deref(), curve.as_deref(), *epsilon),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
