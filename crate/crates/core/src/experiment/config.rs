use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::operators::DEFAULT_HAAR_LEVELS;
use crate::simulate::PeakTarget;
use crate::solvers::{SolverConfig, StopRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    OnedHigh,
    OnedLow,
    TwodSplines,
    TwodPatches,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::OnedHigh, Preset::OnedLow, Preset::TwodSplines, Preset::TwodPatches, Preset::Custom];

    pub fn name(self) -> &'static str {
        match self {
            Preset::OnedHigh => "oned_high",
            Preset::OnedLow => "oned_low",
            Preset::TwodSplines => "twod_splines",
            Preset::TwodPatches => "twod_patches",
            Preset::Custom => "custom",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Rl,
    Rltv,
    Srl,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Rl => "rl",
            SolverKind::Rltv => "rltv",
            SolverKind::Srl => "srl",
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rl" => Ok(SolverKind::Rl),
            "rltv" => Ok(SolverKind::Rltv),
            "srl" => Ok(SolverKind::Srl),
            other => Err(Error::Config(format!("unknown solver `{other}` (expected rl, rltv or srl)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    OneD,
    TwoD,
}

/// Dictionary used by SRL in 2-D experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DictKind {
    Splines,
    Patches,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSpec {
    pub kind: SolverKind,
    pub config: SolverConfig,
}

/// 1-D sparse-signal setup.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalSetup {
    pub len: usize,
    pub haar_levels: Vec<u32>,
    /// -3 dB cutoff of the Gaussian blur, in units of pi.
    pub cutoff: f64,
    pub peak: f64,
    pub peak_on: PeakTarget,
    pub sparsity: (f64, f64),
}

/// 2-D image setup.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageSetup {
    /// Ground-truth image; the bundled phantom when absent.
    pub image: Option<PathBuf>,
    pub phantom_size: usize,
    pub snr_db: f64,
    pub dictionary: DictKind,
    pub spline_levels: usize,
    /// Atom file; synthetic atoms when absent.
    pub atoms: Option<PathBuf>,
    pub patch_size: usize,
    pub num_atoms: usize,
    pub patch_stride: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub dimension: Dimension,
    pub seed: u64,
    pub n_trials: usize,
    pub solvers: Vec<SolverSpec>,
    pub signal: SignalSetup,
    pub image: ImageSetup,
    /// Blur kernel file overriding the preset kernel.
    pub kernel: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub dump_trials: bool,
    /// Worker threads for trials; 0 uses all cores.
    pub jobs: usize,
}

fn solver_defaults(kind: SolverKind, dimension: Dimension) -> SolverConfig {
    let base = SolverConfig::default();
    match (kind, dimension) {
        (SolverKind::Rl | SolverKind::Rltv, Dimension::OneD) => SolverConfig {
            stop: StopRule::NmseOptimal,
            max_iters: 500,
            ..base
        },
        (SolverKind::Rl | SolverKind::Rltv, Dimension::TwoD) => SolverConfig {
            stop: StopRule::NmseOptimal,
            max_iters: 150,
            ..base
        },
        (SolverKind::Srl, Dimension::OneD) => SolverConfig { lambda: 0.2, ..base },
        (SolverKind::Srl, Dimension::TwoD) => SolverConfig { lambda: 0.1, ..base },
    }
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let dimension = match preset {
            Preset::TwodSplines | Preset::TwodPatches => Dimension::TwoD,
            _ => Dimension::OneD,
        };
        let kinds: &[SolverKind] = match preset {
            Preset::OnedHigh | Preset::OnedLow => &[SolverKind::Rl, SolverKind::Srl],
            Preset::TwodSplines | Preset::TwodPatches => &[SolverKind::Rl, SolverKind::Rltv, SolverKind::Srl],
            Preset::Custom => &[],
        };
        Self {
            preset,
            dimension,
            seed: 0,
            n_trials: 200,
            solvers: kinds
                .iter()
                .map(|&kind| SolverSpec { kind, config: solver_defaults(kind, dimension) })
                .collect(),
            signal: SignalSetup {
                len: 128,
                haar_levels: DEFAULT_HAAR_LEVELS.to_vec(),
                cutoff: 0.2,
                peak: if preset == Preset::OnedLow { 32.0 } else { 256.0 },
                peak_on: PeakTarget::Blurred,
                sparsity: (0.015, 0.03),
            },
            image: ImageSetup {
                image: None,
                phantom_size: 128,
                snr_db: 15.0,
                dictionary: if preset == Preset::TwodPatches { DictKind::Patches } else { DictKind::Splines },
                spline_levels: 4,
                atoms: None,
                patch_size: 16,
                num_atoms: 512,
                patch_stride: 8,
            },
            kernel: None,
            out_dir: PathBuf::from("out"),
            dump_trials: false,
            jobs: 1,
        }
    }

    /// Parses `key = value` lines. `experiment` (or `preset`) selects the
    /// defaults; every other key overrides them, in file order.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(name, i + 1, "expected `key = value`"))?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let preset = pairs
            .iter()
            .rev()
            .find(|(_, k, _)| k == "experiment" || k == "preset")
            .map(|(_, _, v)| v.parse())
            .transpose()?
            .unwrap_or(Preset::Custom);
        let mut cfg = Self::preset(preset);
        for (line, k, v) in &pairs {
            if k == "experiment" || k == "preset" {
                continue;
            }
            cfg.set(k, v).map_err(|e| match e {
                Error::Config(msg) => Error::parse(name, *line, msg),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        // relative input paths are resolved against the config file
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.kernel, &mut cfg.image.image, &mut cfg.image.atoms].into_iter().flatten() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    fn solver_mut(&mut self, kind: SolverKind) -> Result<&mut SolverConfig> {
        self.solvers
            .iter_mut()
            .find(|s| s.kind == kind)
            .map(|s| &mut s.config)
            .ok_or_else(|| Error::Config(format!("solver `{}` is not in the solver list", kind.name())))
    }

    /// Applies one `key = value` setting. Solver fields use `<solver>.<field>`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
        }
        fn path(value: &str) -> Option<PathBuf> {
            (!value.is_empty()).then(|| PathBuf::from(value))
        }
        if let Some((solver, field)) = key.split_once('.') {
            let kind: SolverKind = solver.parse()?;
            let c = self.solver_mut(kind)?;
            match field {
                "lambda" => c.lambda = num(key, value)?,
                "gamma_tv" => c.gamma_tv = num(key, value)?,
                "epsilon_stop" => c.epsilon_stop = num(key, value)?,
                "max_iters" => c.max_iters = num(key, value)?,
                "eps_div" => c.eps_div = num(key, value)?,
                "eps_tv" => c.eps_tv = num(key, value)?,
                "stop" => c.stop = value.parse()?,
                _ => return Err(Error::Config(format!("unknown solver field `{field}`"))),
            }
            return Ok(());
        }
        match key {
            "dimension" => {
                self.dimension = match value {
                    "1d" => Dimension::OneD,
                    "2d" => Dimension::TwoD,
                    _ => return Err(Error::Config(format!("dimension must be 1d or 2d, not `{value}`"))),
                }
            }
            "seed" => self.seed = num(key, value)?,
            "n_trials" => self.n_trials = num(key, value)?,
            "solvers" => {
                let mut solvers = Vec::new();
                for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let kind: SolverKind = name.parse()?;
                    if solvers.iter().any(|s: &SolverSpec| s.kind == kind) {
                        return Err(Error::Config(format!("solver `{name}` listed twice")));
                    }
                    let config = self
                        .solvers
                        .iter()
                        .find(|s| s.kind == kind)
                        .map(|s| s.config)
                        .unwrap_or_else(|| solver_defaults(kind, self.dimension));
                    solvers.push(SolverSpec { kind, config });
                }
                self.solvers = solvers;
            }
            "signal_len" => self.signal.len = num(key, value)?,
            "haar_levels" => {
                self.signal.haar_levels = value
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "cutoff" => self.signal.cutoff = num(key, value)?,
            "peak" => self.signal.peak = num(key, value)?,
            "peak_on" => {
                self.signal.peak_on = match value {
                    "blurred" => PeakTarget::Blurred,
                    "signal" => PeakTarget::Signal,
                    _ => return Err(Error::Config(format!("peak_on must be blurred or signal, not `{value}`"))),
                }
            }
            "sparsity_min" => self.signal.sparsity.0 = num(key, value)?,
            "sparsity_max" => self.signal.sparsity.1 = num(key, value)?,
            "image" => self.image.image = path(value),
            "phantom_size" => self.image.phantom_size = num(key, value)?,
            "snr_db" => self.image.snr_db = num(key, value)?,
            "dictionary" => {
                self.image.dictionary = match value {
                    "splines" => DictKind::Splines,
                    "patches" => DictKind::Patches,
                    _ => return Err(Error::Config(format!("dictionary must be splines or patches, not `{value}`"))),
                }
            }
            "spline_levels" => self.image.spline_levels = num(key, value)?,
            "atoms" => self.image.atoms = path(value),
            "patch_size" => self.image.patch_size = num(key, value)?,
            "num_atoms" => self.image.num_atoms = num(key, value)?,
            "patch_stride" => self.image.patch_stride = num(key, value)?,
            "kernel" => self.kernel = path(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "dump_trials" => self.dump_trials = num(key, value)?,
            "jobs" => self.jobs = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Checks parameters and that referenced input files exist.
    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::Config("at least one solver is required".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be positive".into()));
        }
        for s in &self.solvers {
            s.config.validate()?;
        }
        for p in [&self.kernel, &self.image.image, &self.image.atoms].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        match self.dimension {
            Dimension::OneD => {
                let (lo, hi) = self.signal.sparsity;
                if !(lo > 0.0 && lo <= hi && hi <= 0.1) {
                    return Err(Error::Config(format!("sparsity range ({lo}, {hi}) must lie in (0, 0.1]")));
                }
                if !(self.signal.peak > 0.0 && self.signal.peak.is_finite()) {
                    return Err(Error::Config("peak must be positive".into()));
                }
                if !(self.signal.cutoff > 0.0 && self.signal.cutoff < 1.0) {
                    return Err(Error::Config("cutoff must lie in (0, 1) (units of pi)".into()));
                }
            }
            Dimension::TwoD => {
                if !self.image.snr_db.is_finite() {
                    return Err(Error::Config("snr_db must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_protocol() {
        let hi = ExperimentConfig::preset(Preset::OnedHigh);
        assert_eq!(hi.signal.len, 128);
        assert_eq!(hi.signal.haar_levels, vec![2, 3, 4, 5]);
        assert_eq!(hi.signal.cutoff, 0.2);
        assert_eq!(hi.signal.peak, 256.0);
        assert_eq!(hi.n_trials, 200);
        let srl = hi.solvers.iter().find(|s| s.kind == SolverKind::Srl).unwrap();
        assert_eq!(srl.config.lambda, 0.2);
        assert_eq!(ExperimentConfig::preset(Preset::OnedLow).signal.peak, 32.0);
        let tw = ExperimentConfig::preset(Preset::TwodSplines);
        assert_eq!(tw.dimension, Dimension::TwoD);
        assert_eq!(tw.image.snr_db, 15.0);
        let kinds: Vec<_> = tw.solvers.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![SolverKind::Rl, SolverKind::Rltv, SolverKind::Srl]);
        assert_eq!(tw.solvers[2].config.lambda, 0.1);
        assert_eq!(tw.solvers[1].config.gamma_tv, 0.002);
        assert_eq!(tw.solvers[0].config.stop, StopRule::NmseOptimal);
        assert_eq!(ExperimentConfig::preset(Preset::TwodPatches).image.dictionary, DictKind::Patches);
    }

    #[test]
    fn parse_overrides_in_order() {
        let text = "# run\nn_trials = 7\nexperiment = oned_low\nsrl.lambda = 0.5\nrl.max_iters=30\nseed=9 # trailing\n";
        let cfg = ExperimentConfig::parse(text, "c").unwrap();
        assert_eq!(cfg.preset, Preset::OnedLow);
        assert_eq!((cfg.n_trials, cfg.seed), (7, 9));
        assert_eq!(cfg.solvers[1].config.lambda, 0.5);
        assert_eq!(cfg.solvers[0].config.max_iters, 30);
    }

    #[test]
    fn parse_errors_carry_line() {
        match ExperimentConfig::parse("experiment = oned_high\nbogus = 1\n", "c") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::parse("experiment = nope\n", "c").is_err());
        assert!(ExperimentConfig::parse("experiment = oned_high\nrltv.gamma_tv = 1\n", "c").is_err());
        assert!(ExperimentConfig::parse("no equals sign\n", "c").is_err());
    }

    #[test]
    fn solver_list_keeps_known_settings() {
        let mut cfg = ExperimentConfig::preset(Preset::OnedHigh);
        cfg.set("srl.lambda", "0.3").unwrap();
        cfg.set("solvers", "srl, rltv").unwrap();
        assert_eq!(cfg.solvers[0].config.lambda, 0.3);
        assert_eq!(cfg.solvers[1].kind, SolverKind::Rltv);
        assert!(cfg.set("solvers", "rl,rl").is_err());
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig::preset(Preset::Custom).validate().is_err());
        let mut cfg = ExperimentConfig::preset(Preset::OnedHigh);
        assert!(cfg.validate().is_ok());
        cfg.kernel = Some(PathBuf::from("/nonexistent/kernel.txt"));
        assert!(cfg.validate().is_err());
    }
}
