//! Seeded Monte Carlo experiments: synthesize ground truth, blur, add Poisson
//! noise, reconstruct with each configured solver and average the metrics.

mod config;

use std::fs;
use std::path::Path;

use rayon::prelude::*;

pub use config::{DictKind, Dimension, ExperimentConfig, ImageSetup, Preset, SignalSetup, SolverKind, SolverSpec};

use crate::array::Image;
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::{nmse, ssim, MetricReport, SSIM_K1, SSIM_K2, SSIM_WINDOW};
use crate::operators::{ConvKernel, Dictionary, ForwardModel, HaarDictionary, PatchAtoms, PatchDictionary, SplineDictionary};
use crate::simulate::{self, rng_for_trial, TrialSpec};
use crate::solvers::{run_solver, Method, StopRule, TraceRecord};

/// Trial index of the stream that draws synthetic patch atoms.
const ATOM_STREAM: u64 = u64::MAX;

/// Operators and fixed inputs shared by all trials.
pub struct Setup {
    pub kernel: ConvKernel,
    pub model: ForwardModel,
    /// 2-D ground truth before intensity scaling.
    pub image: Option<Image>,
}

impl Setup {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let kernel = match (&cfg.kernel, cfg.dimension) {
            (Some(p), _) => io::read_kernel(p)?,
            (None, Dimension::OneD) => ConvKernel::gaussian_1d(cfg.signal.cutoff * std::f64::consts::PI)?,
            (None, Dimension::TwoD) => ConvKernel::inverse_quadratic_2d(),
        };
        match cfg.dimension {
            Dimension::OneD => {
                let dict = HaarDictionary::new(cfg.signal.len, &cfg.signal.haar_levels)?;
                let model = ForwardModel::new(kernel.clone(), Dictionary::Haar(dict))?;
                Ok(Self { kernel, model, image: None })
            }
            Dimension::TwoD => {
                let im = &cfg.image;
                let image = match &im.image {
                    Some(p) => io::read_image(p)?,
                    None => simulate::phantom(im.phantom_size, im.phantom_size),
                };
                let (rows, cols) = image.shape();
                let dict = match im.dictionary {
                    DictKind::Splines => Dictionary::Spline(SplineDictionary::new(rows, cols, im.spline_levels)?),
                    DictKind::Patches => {
                        let atoms = match &im.atoms {
                            Some(p) => io::read_atoms(p)?,
                            None => PatchAtoms::synthetic(
                                im.patch_size,
                                im.patch_size,
                                im.num_atoms,
                                im.patch_stride,
                                &mut rng_for_trial(cfg.seed, ATOM_STREAM),
                            )?,
                        };
                        Dictionary::Patch(PatchDictionary::new(atoms, rows, cols)?)
                    }
                };
                let model = ForwardModel::new(kernel.clone(), dict)?;
                Ok(Self { kernel, model, image: Some(image) })
            }
        }
    }
}

/// Ground truth and measurement of one trial.
#[derive(Clone, Debug)]
pub struct TrialData {
    pub truth: Image,
    pub data: Image,
}

/// Draws the ground truth and Poisson data of trial `trial`.
pub fn trial_data(cfg: &ExperimentConfig, setup: &Setup, trial: usize) -> Result<TrialData> {
    let mut rng = rng_for_trial(cfg.seed, trial as u64);
    match cfg.dimension {
        Dimension::OneD => {
            let spec = TrialSpec {
                seed: cfg.seed,
                n_trials: cfg.n_trials,
                sparsity: cfg.signal.sparsity,
                peak: cfg.signal.peak,
                peak_on: cfg.signal.peak_on,
            };
            spec.validate()?;
            let fraction = spec.draw_sparsity(&mut rng);
            let Dictionary::Haar(dict) = setup.model.dictionary() else {
                unreachable!("1-D setups use the Haar dictionary")
            };
            let (_, truth) = simulate::synth_sparse_signal(fraction, spec.peak, spec.peak_on, dict, &setup.kernel, &mut rng)?;
            let data = simulate::poisson_sample(&setup.kernel.conv_forward(&truth)?, &mut rng);
            Ok(TrialData { truth, data })
        }
        Dimension::TwoD => {
            let image = setup.image.as_ref().expect("2-D setups carry an image");
            let blurred = setup.kernel.conv_forward(image)?;
            let (intensity, alpha) = simulate::scale_to_snr(&blurred, cfg.image.snr_db)?;
            let truth = image.scale(alpha)?;
            let data = simulate::poisson_sample(&intensity, &mut rng);
            Ok(TrialData { truth, data })
        }
    }
}

/// One solver's result on one trial.
#[derive(Clone, Debug)]
pub struct SolverOutcome {
    pub nmse: f64,
    pub ssim: f64,
    pub iteration: usize,
    pub trace: Vec<TraceRecord>,
    pub image: Image,
}

/// Runs every configured solver on one trial.
pub fn run_trial(cfg: &ExperimentConfig, setup: &Setup, trial: usize) -> Result<(TrialData, Vec<SolverOutcome>)> {
    let td = trial_data(cfg, setup, trial)?;
    let mut outcomes = Vec::with_capacity(cfg.solvers.len());
    for s in &cfg.solvers {
        let method = match s.kind {
            SolverKind::Rl => Method::Rl(&setup.kernel),
            SolverKind::Rltv => Method::Rltv(&setup.kernel),
            SolverKind::Srl => Method::Srl(&setup.model),
        };
        let sol = run_solver(method, &td.data, &s.config, Some(&td.truth))?;
        outcomes.push(SolverOutcome {
            nmse: nmse(&td.truth, &sol.image)?,
            ssim: ssim(&td.truth, &sol.image)?,
            iteration: sol.iteration,
            trace: sol.trace.records,
            image: sol.image,
        });
    }
    Ok((td, outcomes))
}

/// Trial-averaged results of one solver.
#[derive(Clone, Debug)]
pub struct SolverSummary {
    pub kind: SolverKind,
    pub oracle: bool,
    pub report: MetricReport,
    /// Per-trial NMSE of the returned iterate, in trial order.
    pub nmse: Vec<f64>,
    pub ssim: Vec<f64>,
    /// Per-iteration means over trials; shorter traces are extended with
    /// their final record.
    pub trace: Vec<TraceRecord>,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub summaries: Vec<SolverSummary>,
}

impl ExperimentResult {
    pub fn summary(&self, kind: SolverKind) -> Option<&SolverSummary> {
        self.summaries.iter().find(|s| s.kind == kind)
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = format!(
            "# ssim: {SSIM_WINDOW}x{SSIM_WINDOW} uniform window ({SSIM_WINDOW}x1 for signals), C1=({SSIM_K1}L)^2, C2=({SSIM_K2}L)^2, L=max of both images\n{}\n",
            MetricReport::CSV_HEADER
        );
        for s in &self.summaries {
            out.push_str(&s.report.csv_row(s.kind.name(), s.oracle));
            out.push('\n');
        }
        out
    }
}

fn average_traces(traces: &[&[TraceRecord]]) -> Vec<TraceRecord> {
    let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    let n = traces.len() as f64;
    (0..len)
        .map(|i| {
            let at = |t: &&[TraceRecord]| t[i.min(t.len() - 1)];
            let mean = |f: &dyn Fn(&TraceRecord) -> f64| traces.iter().map(|t| f(&at(t))).sum::<f64>() / n;
            let has_nmse = traces.iter().all(|t| at(t).nmse.is_some());
            TraceRecord {
                iter: i + 1,
                objective: mean(&|r| r.objective),
                rel_change: mean(&|r| r.rel_change),
                nmse: has_nmse.then(|| mean(&|r| r.nmse.unwrap_or(0.0))),
            }
        })
        .collect()
}

/// Runs all trials and aggregates; writes nothing.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_with(cfg, |_, _, _| Ok(()))
}

/// Runs all trials, calling `on_trial` with each finished trial in completion
/// order. Aggregates are independent of scheduling.
pub fn run_with<F>(cfg: &ExperimentConfig, on_trial: F) -> Result<ExperimentResult>
where
    F: Fn(usize, &TrialData, &[SolverOutcome]) -> Result<()> + Sync,
{
    cfg.validate()?;
    let setup = Setup::build(cfg)?;
    let work = |t: usize| -> Result<Vec<SolverOutcome>> {
        let (td, outcomes) = run_trial(cfg, &setup, t)?;
        on_trial(t, &td, &outcomes)?;
        Ok(outcomes)
    };
    let trials: Vec<Vec<SolverOutcome>> = if cfg.jobs == 1 {
        (0..cfg.n_trials).map(work).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..cfg.n_trials).into_par_iter().map(work).collect::<Result<_>>())?
    };
    let summaries = cfg
        .solvers
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let nmse: Vec<f64> = trials.iter().map(|o| o[k].nmse).collect();
            let ssim: Vec<f64> = trials.iter().map(|o| o[k].ssim).collect();
            let traces: Vec<&[TraceRecord]> = trials.iter().map(|o| o[k].trace.as_slice()).collect();
            Ok(SolverSummary {
                kind: s.kind,
                oracle: s.config.stop == StopRule::NmseOptimal,
                report: MetricReport::from_trials(&nmse, &ssim)?,
                trace: average_traces(&traces),
                nmse,
                ssim,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentResult { summaries })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the experiment and writes `metrics.csv`, `trace_<solver>.csv` and,
/// with `dump_trials`, per-trial truth, data and reconstructions under
/// `out_dir`.
pub fn run_to_dir(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let result = run_with(cfg, |t, td, outcomes| {
        if !cfg.dump_trials {
            return Ok(());
        }
        io::write_matrix(dir.join(format!("truth_{t}.txt")), &td.truth)?;
        io::write_matrix(dir.join(format!("data_{t}.txt")), &td.data)?;
        for (s, o) in cfg.solvers.iter().zip(outcomes) {
            io::write_pgm(dir.join(format!("recon_{}_{t}.pgm", s.kind.name())), &o.image)?;
        }
        Ok(())
    })?;
    write(&dir.join("metrics.csv"), &result.metrics_csv())?;
    for s in &result.summaries {
        write(&dir.join(format!("trace_{}.csv", s.kind.name())), &crate::solvers::trace_csv(&s.trace))?;
    }
    Ok(result)
}
