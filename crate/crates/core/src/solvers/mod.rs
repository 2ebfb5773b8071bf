//! Iterative reconstruction: Richardson-Lucy (RL), sparse RL (SRL) on
//! dictionary coefficients, and RL with a total-variation prior (RLTV).

mod objective;
mod steps;
pub mod tv;

use std::fmt;
use std::str::FromStr;

use crate::array::{distance, CoeffStack, Image};
use crate::error::{Error, Result};
use crate::metrics::nmse;
use crate::operators::{ConvKernel, ForwardModel};

pub use objective::{gradient_map, map_objective, map_objective_weighted, ml_objective, ml_objective_l1};
pub use steps::{rl_step, rltv_step, srl_step, RLTV_DENOM_FLOOR};

use objective::{check_shape, poisson_energy};

/// When an iterative run stops and which iterate it returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// Stop once `||x+ - x|| / ||x||` falls below `epsilon_stop`.
    RelativeChange,
    /// Run `max_iters` steps and return the iterate with the smallest NMSE
    /// against a known ground truth. Only possible in simulation.
    NmseOptimal,
}

impl FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" | "relative_change" => Ok(StopRule::RelativeChange),
            "nmse_optimal" | "oracle" => Ok(StopRule::NmseOptimal),
            other => Err(Error::Config(format!("unknown stop rule `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Weight of the l1 penalty on SRL coefficients.
    pub lambda: f64,
    /// Weight of the RLTV curvature term.
    pub gamma_tv: f64,
    pub epsilon_stop: f64,
    pub max_iters: usize,
    pub eps_div: f64,
    /// Floor on the gradient magnitude in the TV curvature.
    pub eps_tv: f64,
    pub stop: StopRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            gamma_tv: 0.002,
            epsilon_stop: 1e-4,
            max_iters: 1000,
            eps_div: crate::array::EPS_DIV,
            eps_tv: 1e-8,
            stop: StopRule::RelativeChange,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be a nonnegative real");
        }
        if !(self.gamma_tv.is_finite() && self.gamma_tv >= 0.0) {
            return bad("gamma_tv must be a nonnegative real");
        }
        if !(self.epsilon_stop > 0.0 && self.epsilon_stop < 1.0) {
            return bad("epsilon_stop must lie in (0, 1)");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.eps_div > 0.0 && self.eps_tv > 0.0) {
            return bad("eps_div and eps_tv must be positive");
        }
        Ok(())
    }
}

/// The reconstruction scheme and its operator.
#[derive(Clone, Copy, Debug)]
pub enum Method<'a> {
    Rl(&'a ConvKernel),
    Srl(&'a ForwardModel),
    Rltv(&'a ConvKernel),
}

impl Method<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Rl(_) => "rl",
            Method::Srl(_) => "srl",
            Method::Rltv(_) => "rltv",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
    NmseOptimal,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
            Termination::NmseOptimal => "nmse_optimal",
        })
    }
}

/// State after iteration `iter` (1-based).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    pub rel_change: f64,
    pub nmse: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    pub terminated_by: Termination,
}

impl SolverTrace {
    pub const CSV_HEADER: &'static str = "iter,objective,rel_change,nmse";

    pub fn to_csv(&self) -> String {
        trace_csv(&self.records)
    }
}

/// CSV text with [`SolverTrace::CSV_HEADER`]; NMSE left blank when absent.
pub fn trace_csv(records: &[TraceRecord]) -> String {
    let mut out = String::from(SolverTrace::CSV_HEADER);
    out.push('\n');
    for r in records {
        let nmse = r.nmse.map(|v| format!("{v:.12e}")).unwrap_or_default();
        out.push_str(&format!("{},{:.12e},{:.12e},{}\n", r.iter, r.objective, r.rel_change, nmse));
    }
    out
}

#[derive(Clone, Debug)]
pub struct Solution {
    /// Reconstructed image (`Phi c` for SRL).
    pub image: Image,
    /// Final coefficients for SRL.
    pub coefficients: Option<CoeffStack>,
    /// Iteration that produced the returned iterate.
    pub iteration: usize,
    pub trace: SolverTrace,
    /// The returned iterate was chosen using the ground truth.
    pub oracle: bool,
}

enum State {
    Pixels(Image),
    Coeffs(CoeffStack),
}

impl State {
    fn values(&self) -> &[f64] {
        match self {
            State::Pixels(f) => f.as_slice(),
            State::Coeffs(c) => c.as_slice(),
        }
    }
}

/// Image estimate and blurred model intensity of a state.
struct Observed {
    estimate: Image,
    model: Image,
}

/// Runs `method` on data `g`, starting from a flat image of the data mean
/// (RL, RLTV) or from unit coefficients (SRL).
pub fn run_solver(method: Method<'_>, g: &Image, cfg: &SolverConfig, ground_truth: Option<&Image>) -> Result<Solution> {
    cfg.validate()?;
    if cfg.stop == StopRule::NmseOptimal && ground_truth.is_none() {
        return Err(Error::MissingGroundTruth);
    }
    let shape = match method {
        Method::Rl(_) | Method::Rltv(_) => g.shape(),
        Method::Srl(m) => m.image_shape(),
    };
    check_shape(shape, g)?;
    if let Some(t) = ground_truth {
        check_shape(shape, t)?;
    }

    let observe = |s: &State| -> Result<Observed> {
        match (method, s) {
            (Method::Rl(h) | Method::Rltv(h), State::Pixels(f)) => Ok(Observed {
                estimate: f.clone(),
                model: h.conv_forward(f)?,
            }),
            (Method::Srl(m), State::Coeffs(c)) => {
                let (estimate, model) = m.forward_parts(c)?;
                Ok(Observed { estimate, model })
            }
            _ => unreachable!("state kind follows the method"),
        }
    };
    let step = |s: &State, obs: &Observed| -> Result<State> {
        match (method, s) {
            (Method::Rl(h), State::Pixels(f)) => Ok(State::Pixels(steps::rl_update(g, h, f, &obs.model, cfg)?)),
            (Method::Rltv(h), State::Pixels(f)) => Ok(State::Pixels(steps::rltv_update(g, h, f, &obs.model, cfg)?)),
            (Method::Srl(m), State::Coeffs(c)) => Ok(State::Coeffs(steps::srl_update(g, m, c, &obs.model, cfg)?)),
            _ => unreachable!("state kind follows the method"),
        }
    };
    let objective = |s: &State, obs: &Observed| -> f64 {
        let data = poisson_energy(g, &obs.model);
        match (method, s) {
            (Method::Rl(_), _) => data,
            (Method::Rltv(_), State::Pixels(f)) => data + cfg.gamma_tv * tv::total_variation(f),
            (Method::Srl(_), State::Coeffs(c)) => data + cfg.lambda * c.l1_norm(),
            _ => unreachable!("state kind follows the method"),
        }
    };

    let mut state = match method {
        Method::Rl(_) | Method::Rltv(_) => State::Pixels(Image::filled(g.rows(), g.cols(), g.sum() / g.len() as f64)),
        Method::Srl(m) => State::Coeffs(CoeffStack::ones(m.layout())),
    };
    let mut obs = observe(&state)?;
    let mut records = Vec::new();
    let mut terminated_by = match cfg.stop {
        StopRule::RelativeChange => Termination::MaxIters,
        StopRule::NmseOptimal => Termination::NmseOptimal,
    };
    let mut best: Option<(f64, usize, State, Image)> = None;

    for iter in 1..=cfg.max_iters {
        let next = step(&state, &obs)?;
        let next_obs = observe(&next)?;
        let norm = distance(state.values(), &vec![0.0; state.values().len()]);
        let diff = distance(next.values(), state.values());
        let rel_change = if norm > 0.0 {
            diff / norm
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let err = ground_truth.map(|t| nmse(t, &next_obs.estimate)).transpose()?;
        records.push(TraceRecord {
            iter,
            objective: objective(&next, &next_obs),
            rel_change,
            nmse: err,
        });
        state = next;
        obs = next_obs;

        match cfg.stop {
            StopRule::RelativeChange => {
                if rel_change < cfg.epsilon_stop {
                    terminated_by = Termination::Converged;
                    break;
                }
            }
            StopRule::NmseOptimal => {
                let e = err.expect("ground truth checked above");
                if best.as_ref().is_none_or(|b| e < b.0) {
                    let kept = match &state {
                        State::Pixels(f) => State::Pixels(f.clone()),
                        State::Coeffs(c) => State::Coeffs(c.clone()),
                    };
                    best = Some((e, iter, kept, obs.estimate.clone()));
                }
            }
        }
    }

    let trace = SolverTrace { records, terminated_by };
    let (iteration, state, image) = match best {
        Some((_, iter, s, img)) => (iter, s, img),
        None => (trace.records.len(), state, obs.estimate),
    };
    Ok(Solution {
        image,
        coefficients: match state {
            State::Coeffs(c) => Some(c),
            State::Pixels(_) => None,
        },
        iteration,
        trace,
        oracle: cfg.stop == StopRule::NmseOptimal,
    })
}
