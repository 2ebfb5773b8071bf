//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use poisson_deconv::experiment::{self, ExperimentConfig, ExperimentResult, Preset, SolverKind};
use poisson_deconv::operators::{ConvKernel, Dictionary, ForwardModel, HaarDictionary, PatchAtoms, PatchDictionary, SplineDictionary};
use poisson_deconv::simulate::{poisson_sample, sample_poisson};
use poisson_deconv::solvers::{gradient_map, map_objective, ml_objective, rl_step, rltv_step, srl_step};
use poisson_deconv::{CoeffStack, Image, MetricReport, SolverConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_coeffs(rng: &mut ChaCha8Rng, model: &ForwardModel, lo: f64, hi: f64) -> CoeffStack {
    let layout = model.layout();
    CoeffStack::new(layout, (0..layout.len()).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize, hi: f64) -> Image {
    Image::from_fn(rows, cols, |_, _| rng.random::<f64>() * hi).unwrap()
}

fn adjoint_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gauss = ConvKernel::gaussian_1d(0.2 * std::f64::consts::PI).unwrap();
    let iq = ConvKernel::inverse_quadratic_2d();
    let atoms = PatchAtoms::synthetic(16, 16, 512, 8, &mut rng).unwrap();
    let models = [
        ("haar1d", ForwardModel::new(gauss, Dictionary::Haar(HaarDictionary::new(128, &[2, 3, 4, 5]).unwrap())).unwrap()),
        ("spline2d", ForwardModel::new(iq.clone(), Dictionary::Spline(SplineDictionary::new(32, 32, 3).unwrap())).unwrap()),
        ("patch", ForwardModel::new(iq, Dictionary::Patch(PatchDictionary::new(atoms, 64, 64).unwrap())).unwrap()),
    ];
    let mut worst = 0.0f64;
    for (name, m) in &models {
        let (rows, cols) = m.image_shape();
        for _ in 0..100 {
            let c = random_coeffs(&mut rng, m, 0.0, 1.0);
            let y = random_image(&mut rng, rows, cols, 1.0);
            let ac = m.forward(&c).unwrap();
            let lhs = ac.inner(&y).unwrap();
            let rhs = c.inner(&m.adjoint(&y).unwrap()).unwrap();
            let ratio = (lhs - rhs).abs() / (ac.norm2() * y.norm2());
            worst = worst.max(ratio);
            if ratio > 1e-10 {
                return Err(format!("{name}: |<Ac,y> - <c,A*y>| / (|Ac||y|) = {ratio:.3e}"));
            }
        }
    }
    Ok(format!("300 pairs, worst normalized mismatch {worst:.2e}"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = ForwardModel::new(
        ConvKernel::inverse_quadratic(2).normalize(),
        Dictionary::Spline(SplineDictionary::new(16, 16, 2).unwrap()),
    )
    .unwrap();
    let lambda = 0.1;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let truth = random_coeffs(&mut rng, &model, 0.1, 3.0);
        let g = poisson_sample(&model.forward(&truth).unwrap(), &mut rng);
        let c = random_coeffs(&mut rng, &model, 0.1, 3.0);
        let grad = gradient_map(&g, &model, &c, lambda).unwrap();
        for (i, (&x, &gi)) in c.as_slice().iter().zip(&grad).enumerate() {
            let energy = |d: f64| {
                let mut p = c.clone();
                p.set(i, x + d).unwrap();
                map_objective(&g, &model, &p, lambda).unwrap()
            };
            // fourth-order central difference
            let h = 1e-2 * x;
            let fd = (8.0 * (energy(h) - energy(-h)) - (energy(2.0 * h) - energy(-2.0 * h))) / (12.0 * h);
            worst = worst.max((fd - gi).abs() / gi.abs());
        }
    }
    check(worst < 1e-5, format!("20 points x 512 coordinates, worst relative error {worst:.2e}"))
}

fn rl_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = SolverConfig::default();
    for inst in 0..50 {
        let half = rng.random_range(1..4);
        let taps: Vec<f64> = (0..(2 * half + 1) * (2 * half + 1)).map(|_| rng.random::<f64>()).collect();
        let h = ConvKernel::new(2 * half + 1, 2 * half + 1, taps).unwrap().normalize();
        let truth = random_image(&mut rng, 16, 16, 50.0);
        let g = poisson_sample(&h.conv_forward(&truth).unwrap(), &mut rng);
        let mut f = Image::filled(16, 16, g.sum() / 256.0);
        let mut e = ml_objective(&g, &h, &f).unwrap();
        for t in 1..=50 {
            f = rl_step(&g, &h, &f, &cfg).unwrap();
            if f.as_slice().iter().any(|v| *v < 0.0) {
                return Err(format!("instance {inst}, iteration {t}: negative pixel"));
            }
            if (f.sum() - g.sum()).abs() > 1e-8 * g.sum() {
                return Err(format!("instance {inst}, iteration {t}: mass {} vs {}", f.sum(), g.sum()));
            }
            let next = ml_objective(&g, &h, &f).unwrap();
            if next > e + 1e-12 * e.abs() {
                return Err(format!("instance {inst}, iteration {t}: objective rose {e} -> {next}"));
            }
            e = next;
        }
    }
    Ok("50 instances x 50 iterations: nonnegative, mass-preserving, monotone".into())
}

fn srl_zero_freezing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let models = [
        ForwardModel::new(
            ConvKernel::gaussian_1d(0.2 * std::f64::consts::PI).unwrap(),
            Dictionary::Haar(HaarDictionary::new(128, &[2, 3, 4, 5]).unwrap()),
        )
        .unwrap(),
        ForwardModel::new(ConvKernel::inverse_quadratic(3).normalize(), Dictionary::Spline(SplineDictionary::new(16, 16, 3).unwrap())).unwrap(),
    ];
    let cfg = SolverConfig { lambda: 0.2, ..SolverConfig::default() };
    let mut frozen = 0;
    for m in &models {
        for _ in 0..5 {
            let (rows, cols) = m.image_shape();
            let g = poisson_sample(&random_image(&mut rng, rows, cols, 30.0), &mut rng);
            let mut c = random_coeffs(&mut rng, m, 0.5, 2.0);
            let zeros: Vec<usize> = (0..c.len()).filter(|_| rng.random::<f64>() < 0.2).collect();
            for &i in &zeros {
                c.set(i, 0.0).unwrap();
            }
            for t in 1..=200 {
                c = srl_step(&g, m, &c, &cfg).unwrap();
                if let Some(&i) = zeros.iter().find(|&&i| c.as_slice()[i].to_bits() != 0) {
                    return Err(format!("coefficient {i} left zero at iteration {t}"));
                }
            }
            frozen += zeros.len();
        }
    }
    Ok(format!("{frozen} zeroed coefficients stayed +0.0 over 200 iterations"))
}

fn run_preset(preset: Preset, n_trials: usize, seed: u64) -> (ExperimentResult, Duration) {
    let mut cfg = ExperimentConfig::preset(preset);
    cfg.n_trials = n_trials;
    cfg.seed = seed;
    let start = Instant::now();
    let res = experiment::run(&cfg).unwrap();
    (res, start.elapsed())
}

fn oned_experiment() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for preset in [Preset::OnedHigh, Preset::OnedLow] {
        let (res, took) = run_preset(preset, 50, 2026);
        let rl = res.summary(SolverKind::Rl).unwrap();
        let srl = res.summary(SolverKind::Srl).unwrap();
        let curve: Vec<f64> = srl.trace.iter().map(|r| r.nmse.unwrap()).collect();
        let steps = curve.len() - 1;
        let nonincreasing = curve.windows(2).filter(|w| w[1] <= w[0]).count();
        let frac = nonincreasing as f64 / steps as f64;
        let better = srl.report.nmse_mean < rl.report.nmse_mean;
        let fast = took < Duration::from_secs(300);
        ok &= better && frac >= 0.98 && fast;
        lines.push(format!(
            "{preset}: srl {:.4e} vs oracle rl {:.4e} ({}), srl curve non-increasing in {nonincreasing}/{steps} steps ({:.1}%, {}), {:.0}s",
            srl.report.nmse_mean,
            rl.report.nmse_mean,
            if better { "ok" } else { "NOT lower" },
            100.0 * frac,
            if frac >= 0.98 { "ok" } else { "below 98%" },
            took.as_secs_f64()
        ));
    }
    check(ok, lines.join("; "))
}

fn gap(a: &MetricReport, b: &MetricReport, nmse: bool) -> (f64, f64) {
    if nmse {
        (b.nmse_mean - a.nmse_mean, a.nmse_stderr.hypot(b.nmse_stderr))
    } else {
        (a.ssim_mean - b.ssim_mean, a.ssim_stderr.hypot(b.ssim_stderr))
    }
}

fn twod_ordering() -> Outcome {
    let (res, took) = run_preset(Preset::TwodSplines, 20, 2026);
    let r = |k| res.summary(k).unwrap().report;
    let (rl, rltv, srl) = (r(SolverKind::Rl), r(SolverKind::Rltv), r(SolverKind::Srl));
    let mut ok = took < Duration::from_secs(900);
    let mut parts = vec![format!(
        "nmse srl {:.4e} rltv {:.4e} rl {:.4e}; ssim srl {:.4} rltv {:.4} rl {:.4}",
        srl.nmse_mean, rltv.nmse_mean, rl.nmse_mean, srl.ssim_mean, rltv.ssim_mean, rl.ssim_mean
    )];
    for (label, better, worse, nmse) in [
        ("nmse srl<rltv", &srl, &rltv, true),
        ("nmse rltv<rl", &rltv, &rl, true),
        ("ssim srl>rltv", &srl, &rltv, false),
        ("ssim rltv>rl", &rltv, &rl, false),
    ] {
        let (d, se) = gap(better, worse, nmse);
        let pass = d > 2.0 * se;
        ok &= pass;
        parts.push(format!("{label} gap {:.2} SE{}", d / se, if pass { "" } else { " (FAIL)" }));
    }
    parts.push(format!("{:.0}s", took.as_secs_f64()));
    check(ok, parts.join("; "))
}

fn poisson_sampler() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let mut parts = Vec::new();
    let mut ok = true;
    for mean in [0.5, 5.0, 32.0, 256.0] {
        let draws: Vec<u64> = (0..n).map(|_| sample_poisson(mean, &mut rng)).collect();
        let pmf = Poisson::new(mean).unwrap();
        let max = *draws.iter().max().unwrap() as usize;
        let mut counts = vec![0usize; max + 1];
        for &d in &draws {
            counts[d as usize] += 1;
        }
        // bins with expected count >= 5; tails pooled into the edge bins
        let expected = |k: usize| n as f64 * pmf.pmf(k as u64);
        let mut lo = 0;
        while expected(lo) < 5.0 {
            lo += 1;
        }
        let mut hi = lo;
        while expected(hi + 1) >= 5.0 {
            hi += 1;
        }
        let mut stat = 0.0;
        for k in lo..=hi {
            let (obs, exp) = if k == lo {
                (counts.iter().take(lo + 1).sum::<usize>() as f64, n as f64 * pmf.cdf(lo as u64))
            } else if k == hi {
                (counts.iter().skip(hi).sum::<usize>() as f64, n as f64 * (1.0 - pmf.cdf(hi as u64 - 1)))
            } else {
                (counts[k] as f64, expected(k))
            };
            stat += (obs - exp).powi(2) / exp;
        }
        let df = (hi - lo) as f64;
        let p = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
        ok &= p > 0.001;
        parts.push(format!("mean {mean}: p={p:.3}"));
        if mean == 256.0 {
            let xs: Vec<f64> = draws.iter().map(|&d| d as f64).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            let good = (m / mean - 1.0).abs() < 0.01 && (v / mean - 1.0).abs() < 0.01;
            ok &= good;
            parts.push(format!("sample mean {m:.2}, variance {v:.2}"));
        }
    }
    check(ok, parts.join("; "))
}

fn reduction_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let delta = ConvKernel::delta();
    let blur = ConvKernel::inverse_quadratic(3).normalize();
    for _ in 0..20 {
        let g = Image::from_fn(16, 16, |_, _| rng.random_range(0..60) as f64).unwrap();
        let f = random_image(&mut rng, 16, 16, 30.0).add(&Image::filled(16, 16, 0.1)).unwrap();
        let m = ForwardModel::new(delta.clone(), Dictionary::Identity { rows: 16, cols: 16 }).unwrap();
        let c = CoeffStack::new(m.layout(), f.as_slice().to_vec()).unwrap();
        let cfg = SolverConfig { lambda: 0.0, gamma_tv: 0.0, ..SolverConfig::default() };
        let a = srl_step(&g, &m, &c, &cfg).unwrap();
        let b = rl_step(&g, &delta, &f, &cfg).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            worst = worst.max((x - y).abs() / y.abs().max(1.0));
        }
        if rltv_step(&g, &blur, &f, &cfg).unwrap() != rl_step(&g, &blur, &f, &cfg).unwrap() {
            return Err("rltv_step with gamma 0 differs from rl_step".into());
        }
    }
    check(
        worst <= 1e-14,
        format!("srl(lambda=0, identity, delta) vs rl worst {worst:.1e}; rltv(gamma=0) == rl bitwise"),
    )
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for preset in [Preset::OnedHigh, Preset::OnedLow, Preset::TwodSplines, Preset::TwodPatches] {
        let mut outputs = Vec::new();
        for (run, jobs) in [(0, 1), (1, 2)] {
            let mut cfg = ExperimentConfig::preset(preset);
            cfg.n_trials = 3;
            cfg.seed = 99;
            cfg.jobs = jobs;
            cfg.image.phantom_size = 48;
            for s in &mut cfg.solvers {
                s.config.max_iters = s.config.max_iters.min(40);
            }
            cfg.out_dir = tmp.path().join(format!("{preset}_{run}"));
            experiment::run_to_dir(&cfg).unwrap();
            outputs.push(read_outputs(&cfg.out_dir));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{preset}: outputs differ between runs"));
        }
        compared += outputs[0].len();
    }
    Ok(format!("4 presets, {compared} csv files byte-identical across runs (1 and 2 workers)"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("adjoint suite", adjoint_suite),
        ("gradient check", gradient_check),
        ("RL invariants", rl_invariants),
        ("SRL zero-freezing", srl_zero_freezing),
        ("1-D experiment", oned_experiment),
        ("2-D ordering", twod_ordering),
        ("Poisson sampler", poisson_sampler),
        ("reduction identities", reduction_identities),
        ("determinism", determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("[PASS] criterion {n} ({name}): {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("[FAIL] criterion {n} ({name}): {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
