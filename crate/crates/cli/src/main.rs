use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use poisson_deconv::experiment::{self, ExperimentConfig, Preset, SolverKind};
use poisson_deconv::io;
use poisson_deconv::operators::{gaussian_sigma, ConvKernel, PatchDictionary};

#[derive(Parser)]
#[command(name = "poisson-deconv", version, about = "Poisson deconvolution experiments (RL, sparse RL, RLTV)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded experiment and write metrics and traces.
    Run(RunArgs),
    /// Blur kernels.
    Kernels {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Dictionaries.
    Dict {
        #[command(subcommand)]
        action: DictAction,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key = value config file.
    config: Option<PathBuf>,
    /// Start from a preset instead of a config file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<Preset>,
    /// l1 weight of every SRL solver.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    n_trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated solver list (rl, rltv, srl).
    #[arg(long)]
    solver: Option<String>,
    /// Write per-trial truth, data and reconstructions.
    #[arg(long)]
    dump_trials: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for trials (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum KernelAction {
    /// Write the 1-D Gaussian and 2-D inverse-quadratic kernels as matrix text.
    Dump {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Gaussian -3 dB cutoff in units of pi.
        #[arg(long, default_value_t = 0.2)]
        cutoff: f64,
    },
}

#[derive(Subcommand)]
enum DictAction {
    /// Summarize an atom file.
    Info {
        atoms: PathBuf,
        /// Image size used to count patches and coefficients.
        #[arg(long, num_args = 2, value_names = ["ROWS", "COLS"])]
        image: Option<Vec<usize>>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Kernels { action: KernelAction::Dump { out_dir, cutoff } } => dump_kernels(&out_dir, cutoff),
        Command::Dict { action: DictAction::Info { atoms, image } } => dict_info(&atoms, image.as_deref()),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match (&args.config, args.preset) {
        (Some(path), _) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(p)) => ExperimentConfig::preset(p),
        (None, None) => bail!("give a config file or --preset"),
    };
    if let Some(list) = &args.solver {
        cfg.set("solvers", list)?;
    }
    if let Some(l) = args.lambda {
        let mut any = false;
        for s in cfg.solvers.iter_mut().filter(|s| s.kind == SolverKind::Srl) {
            s.config.lambda = l;
            any = true;
        }
        if !any {
            bail!("--lambda given but no srl solver is configured");
        }
    }
    if let Some(n) = args.n_trials {
        cfg.n_trials = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.dump_trials {
        cfg.dump_trials = true;
    }
    if let Some(d) = args.out_dir {
        cfg.out_dir = d;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    for kv in &args.overrides {
        let (k, v) = kv.split_once('=').with_context(|| format!("`{kv}` is not key=value"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    let start = Instant::now();
    let result = experiment::run_to_dir(&cfg)?;
    println!(
        "{} trials of {} (seed {}) in {:.1}s -> {}",
        cfg.n_trials,
        cfg.preset,
        cfg.seed,
        start.elapsed().as_secs_f64(),
        cfg.out_dir.display()
    );
    println!("{:<6} {:>14} {:>12} {:>10} {:>10}  oracle", "solver", "nmse", "stderr", "ssim", "stderr");
    for s in &result.summaries {
        let r = &s.report;
        println!(
            "{:<6} {:>14.6e} {:>12.3e} {:>10.4} {:>10.4}  {}",
            s.kind.name(),
            r.nmse_mean,
            r.nmse_stderr,
            r.ssim_mean,
            r.ssim_stderr,
            s.oracle
        );
    }
    Ok(())
}

fn dump_kernels(out_dir: &std::path::Path, cutoff: f64) -> Result<()> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let gauss = ConvKernel::gaussian_1d(cutoff * std::f64::consts::PI)?;
    let g_path = out_dir.join("gaussian_1d.txt");
    io::write_kernel(&g_path, &gauss)?;
    println!(
        "{}: {} taps, sigma {:.6}",
        g_path.display(),
        gauss.rows(),
        gaussian_sigma(cutoff * std::f64::consts::PI)
    );
    let iq = ConvKernel::inverse_quadratic_2d();
    let q_path = out_dir.join("inverse_quadratic_15x15.txt");
    io::write_kernel(&q_path, &iq)?;
    println!("{}: {}x{} taps, normalized", q_path.display(), iq.rows(), iq.cols());
    Ok(())
}

fn dict_info(path: &std::path::Path, image: Option<&[usize]>) -> Result<()> {
    let atoms = io::read_atoms(path).with_context(|| format!("reading {}", path.display()))?;
    let (pr, pc) = atoms.patch_size();
    let norms: Vec<f64> = (0..atoms.num_atoms())
        .map(|a| atoms.atom(a).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let max = norms.iter().copied().fold(0.0, f64::max);
    println!("patch size       {pr}x{pc}");
    println!("atoms            {}", atoms.num_atoms());
    println!("stride           {}", atoms.stride());
    println!("overcompleteness {}", atoms.overcompleteness());
    println!("atom l2 norms    [{min:.6}, {max:.6}]");
    if let Some(&[rows, cols]) = image {
        let dict = PatchDictionary::new(atoms, rows, cols)?;
        println!("patches          {} on {rows}x{cols}", dict.num_patches());
        println!("coefficients     {}", dict.layout().len());
    }
    Ok(())
}
