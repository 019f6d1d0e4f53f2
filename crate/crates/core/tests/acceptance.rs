//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tamed_langevin::drift::{check_dissipativity, DriftKind, DriftSpec, Verdict, DEFAULT_DIRECTIONS, DEFAULT_RADII};
use tamed_langevin::harness::{run_experiment, Algorithm, ChainRecord, ExperimentSpec};
use tamed_langevin::kernels::{run_chain, Adjustment, KernelConfig, RunSpec, DEFAULT_DIVERGENCE_THRESHOLD};
use tamed_langevin::potentials::{
    make_double_well, make_ginzburg_landau, make_ill_conditioned_gaussian, make_linear_gaussian, TargetModel,
    DEFAULT_GL_ALPHA, DEFAULT_GL_LAMBDA, DEFAULT_GL_TAU,
};
use tamed_langevin::stats::{rate_regression, reference_moment_double_well};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn spec(text: &str) -> ExperimentSpec {
    let s = ExperimentSpec::from_toml_str(text).unwrap();
    s.validate().unwrap();
    s
}

fn cell(chains: &[ChainRecord], a: Algorithm, gamma: f64) -> Vec<&ChainRecord> {
    chains.iter().filter(|c| c.algorithm == a && c.gamma == gamma).collect()
}

fn second_moments(chains: &[&ChainRecord], coordinate: usize) -> Vec<f64> {
    chains
        .iter()
        .filter(|c| !c.result.excluded)
        .map(|c| c.result.estimate(coordinate).unwrap().mean_sq)
        .collect()
}

fn double_well_oracle() -> Outcome {
    let t = Instant::now();
    let v100 = reference_moment_double_well(100, 2).unwrap();
    let t100 = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let v1000 = reference_moment_double_well(1000, 2).unwrap();
    let t1000 = t.elapsed().as_secs_f64();
    Outcome {
        name: "double-well reference oracle",
        pass: (v100 - 0.104).abs() <= 0.002 && (v1000 - 0.032).abs() <= 0.002 && t100 < 1.0 && t1000 < 1.0,
        detail: format!(
            "d=100: {v100:.6} (0.104 +/- 0.002, {t100:.3} s); d=1000: {v1000:.6} (0.032 +/- 0.002, {t1000:.3} s); limit 1 s each"
        ),
    }
}

fn tulac_consistency() -> Outcome {
    let s = spec(
        r#"
algorithms = ["TULAc"]
step_sizes = [0.001]
n_steps = 100000
n_chains = 10
master_seed = 101
tracked_coordinates = [0]
[model]
name = "double_well"
dimension = 100
[[starts]]
kind = "origin"
"#,
    );
    let t = Instant::now();
    let out = run_experiment(&s).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let reference = reference_moment_double_well(100, 2).unwrap();
    let c = cell(&out.chains, Algorithm::Tulac, 0.001);
    let m2 = second_moments(&c, 0);
    let err = mean(&m2) - reference;
    let n_div = c.iter().filter(|c| c.result.diverged).count();
    Outcome {
        name: "TULAc consistency (double well d=100, gamma=1e-3)",
        pass: err.abs() <= 0.01 && n_div == 0 && m2.len() == 10 && secs <= 180.0,
        detail: format!(
            "mean second-moment error of coordinate 0 = {err:+.5} (limit +/- 0.01), {n_div}/10 diverged, {secs:.1} s (limit 180 s)"
        ),
    }
}

fn stability_contrast() -> Outcome {
    let s = spec(
        r#"
algorithms = ["ULA", "TULA", "TULAc"]
step_sizes = [0.1]
n_steps = 100000
n_chains = 10
master_seed = 102
[model]
name = "double_well"
dimension = 100
[[starts]]
kind = "axis"
radius = 100.0
"#,
    );
    let out = run_experiment(&s).unwrap();
    let reference = reference_moment_double_well(100, 2).unwrap();
    let ula = cell(&out.chains, Algorithm::Ula, 0.1);
    let ula_div = ula.iter().filter(|c| c.result.diverged).count();
    let mut pass = ula_div == 10;
    let mut detail = format!("ULA {ula_div}/10 diverged (want 10)");
    for a in [Algorithm::Tula, Algorithm::Tulac] {
        let c = cell(&out.chains, a, 0.1);
        let n_div = c.iter().filter(|c| c.result.diverged).count();
        let e0 = mean(&second_moments(&c, 0)) - reference;
        let e99 = mean(&second_moments(&c, 99)) - reference;
        pass &= n_div == 0 && e0.abs() <= 0.05 && e99.abs() <= 0.05;
        detail += &format!(
            "; {a} {n_div}/10 diverged (want 0), second-moment error coord 0 = {e0:+.4}, coord 99 = {e99:+.4} (limit 0.05)"
        );
    }
    Outcome {
        name: "stability contrast (double well d=100, x0=(100,0,...), gamma=0.1)",
        pass,
        detail,
    }
}

fn partial_taming_threshold() -> Outcome {
    let model = make_double_well(100).unwrap();
    let drift = DriftSpec::new(DriftKind::PartialDoubleWell, model.clone()).unwrap();
    let half = check_dissipativity(&drift, 0.5, &DEFAULT_RADII, DEFAULT_DIRECTIONS, 5).unwrap();
    let one = check_dissipativity(&drift, 1.0, &DEFAULT_RADII, DEFAULT_DIRECTIONS, 5).unwrap();
    let mut pass = half.verdict == Verdict::Satisfied && one.verdict != Verdict::Satisfied;
    let mut detail = format!("dissipativity gamma=0.5: {:?}, gamma=1.0: {:?}", half.verdict, one.verdict);

    let mut x0 = vec![0.0; 100];
    x0[0] = 100.0;
    let mut guard_trips = 0;
    for (gamma, escapes) in [(0.5, false), (1.0, true)] {
        let config = KernelConfig::new(drift.clone(), gamma, Adjustment::None).unwrap();
        let mut final_norms = Vec::new();
        let mut n_div = 0;
        for seed in 0..10 {
            let mut state = tamed_langevin::kernels::ChainState::new(&x0, 1000 + seed).unwrap();
            for _ in 0..10_000 {
                state.step(&config);
                if state.diverged() {
                    break;
                }
            }
            n_div += state.diverged() as usize;
            final_norms.push(state.position().iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        let lo = final_norms.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = final_norms.iter().cloned().fold(0.0, f64::max);
        if escapes {
            guard_trips = n_div;
            pass &= lo > 5.0 * 100.0;
            detail += &format!("; gamma=1.0: |X_1e4| in [{lo:.0}, {hi:.0}] (want > 500 for all 10 chains)");
        } else {
            pass &= n_div == 0 && hi < 100.0;
            detail += &format!("; gamma=0.5: {n_div}/10 diverged, |X_1e4| in [{lo:.1}, {hi:.1}] (want < 100)");
        }
    }
    println!(
        "INFO  partial taming gamma=1.0: {guard_trips}/10 chains reach the {DEFAULT_DIVERGENCE_THRESHOLD:e} norm guard within 1e4 steps; escape is measured on the final norm"
    );
    Outcome {
        name: "partial-taming threshold (double well d=100)",
        pass,
        detail,
    }
}

fn ill_conditioned() -> Outcome {
    let s = spec(
        r#"
algorithms = ["ULA", "TULAc"]
step_sizes = [0.01]
n_steps = 100000
n_chains = 10
master_seed = 103
[model]
name = "ill_conditioned_gaussian"
dimension = 100
smallest_variance = 1e-5
[[starts]]
kind = "origin"
"#,
    );
    let out = run_experiment(&s).unwrap();
    let ula_div = cell(&out.chains, Algorithm::Ula, 0.01)
        .iter()
        .filter(|c| c.result.diverged)
        .count();
    let row = out
        .rows
        .iter()
        .find(|r| r.algorithm == Algorithm::Ula && r.coordinate == 99 && r.moment_order == 2)
        .unwrap();
    let c = cell(&out.chains, Algorithm::Tulac, 0.01);
    let m2 = second_moments(&c, 99);
    let err = if m2.is_empty() { f64::NAN } else { mean(&m2) - 1.0 };
    Outcome {
        name: "ill-conditioned Gaussian (d=100, gamma=1e-2)",
        pass: ula_div == 10 && row.summary.is_empty() && err.abs() <= 0.1,
        detail: format!(
            "ULA {ula_div}/10 diverged (want 10), empty summary = {}; TULAc coordinate 99 second-moment error = {err:+.4} over {} chains (limit 0.1)",
            row.summary.is_empty(),
            m2.len()
        ),
    }
}

fn bias_rate() -> Outcome {
    let gammas = [0.02, 0.05, 0.1, 0.2];
    let s = spec(
        r#"
algorithms = ["ULA"]
step_sizes = [0.02, 0.05, 0.1, 0.2]
n_steps = 1000000
n_chains = 20
master_seed = 104
[model]
name = "gaussian"
dimension = 1
variances = [1.0]
[[starts]]
kind = "origin"
"#,
    );
    let out = run_experiment(&s).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    let mut empirical = Vec::new();
    let mut oracle = Vec::new();
    for g in gammas {
        let m2 = second_moments(&cell(&out.chains, Algorithm::Ula, g), 0);
        let bias = mean(&m2) - 1.0;
        let se = sd(&m2) / (m2.len() as f64).sqrt();
        let exact = 2.0 / (2.0 - g) - 1.0;
        let z = (bias - exact) / se;
        pass &= m2.len() == 20 && z.abs() <= 4.0;
        detail.push(format!("gamma={g}: bias {bias:.5} vs {exact:.5} ({z:+.2} SE)"));
        empirical.push((g, bias));
        oracle.push((g, exact));
    }
    let fit = rate_regression(&oracle).unwrap();
    pass &= (fit.slope - 1.0).abs() <= 0.05;
    let emp = rate_regression(&empirical).map(|f| f.slope).unwrap_or(f64::NAN);
    Outcome {
        name: "bias rate (ULA, unit Gaussian d=1)",
        pass,
        detail: format!(
            "{}; oracle slope {:.4} (1 +/- 0.05); empirical slope {emp:.4}",
            detail.join(", "),
            fit.slope
        ),
    }
}

fn fd_relative_error(model: &TargetModel, x: &[f64]) -> f64 {
    let g = model.gradient(x).unwrap();
    let mut y = x.to_vec();
    let scale = g.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        y[i] = x[i] + h;
        let up = model.potential(&y).unwrap();
        y[i] = x[i] - h;
        let down = model.potential(&y).unwrap();
        y[i] = x[i];
        worst = worst.max(((up - down) / (2.0 * h) - g[i]).abs());
    }
    worst / scale
}

fn taming_bounds() -> Outcome {
    let models = [
        make_linear_gaussian(10).unwrap(),
        make_ill_conditioned_gaussian(10, 1e-5).unwrap(),
        make_double_well(10).unwrap(),
        make_ginzburg_landau(3, DEFAULT_GL_TAU, DEFAULT_GL_ALPHA, DEFAULT_GL_LAMBDA).unwrap(),
    ];
    let gammas = [1e-3, 1e-2, 1e-1, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut violations = 0;
    let mut worst_close = 0.0_f64;
    let mut worst_bound = 0.0_f64;
    let mut worst_fd = 0.0_f64;
    for model in &models {
        let d = model.dimension();
        let global = DriftSpec::new(DriftKind::TamedGlobal, model.clone()).unwrap();
        let coord = DriftSpec::new(DriftKind::TamedCoordinatewise, model.clone()).unwrap();
        for i in 0..1000 {
            let scale = 10f64.powf(rng.random_range(-2.0..3.0));
            let x: Vec<f64> = (0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let gamma = gammas[i % gammas.len()];
            let grad = model.gradient(&x).unwrap();
            let g2: f64 = grad.iter().map(|v| v * v).sum();
            for spec in [&global, &coord] {
                let h = spec.eval(&x, gamma).unwrap();
                let diff = h.iter().zip(&grad).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let rhs = gamma * g2;
                if diff > rhs + 1e-12 * rhs.max(1.0) {
                    violations += 1;
                }
                if rhs > 0.0 {
                    worst_close = worst_close.max(diff / rhs);
                }
            }
            let hc = coord.eval(&x, gamma).unwrap();
            let bound = gamma * hc.iter().map(|v| v * v).sum::<f64>().sqrt();
            if bound > (d as f64).sqrt() + 1e-12 {
                violations += 1;
            }
            worst_bound = worst_bound.max(bound / (d as f64).sqrt());

            let fd_x: Vec<f64> = x.iter().map(|v| v / scale * 10f64.powf(rng.random_range(-1.0..1.0))).collect();
            let fd = fd_relative_error(model, &fd_x);
            if fd > 1e-5 {
                violations += 1;
            }
            worst_fd = worst_fd.max(fd);
        }
    }
    Outcome {
        name: "taming bound property suite (4 models x 1000 points)",
        pass: violations == 0,
        detail: format!(
            "{violations} violations; max |H-grad U|/(gamma |grad U|^2) = {worst_close:.6}, max gamma|H_c|/sqrt(d) = {worst_bound:.6}, max FD relative error = {worst_fd:.2e} (limit 1e-5)"
        ),
    }
}

fn mh_invariance() -> Outcome {
    let model = make_linear_gaussian(1).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, (kind, adj, label)) in [
        (DriftKind::Raw, Adjustment::MetropolisLangevin, "MALA"),
        (DriftKind::TamedGlobal, Adjustment::MetropolisLangevin, "TMALA"),
        (DriftKind::TamedCoordinatewise, Adjustment::MetropolisLangevin, "TMALAc"),
        (DriftKind::Raw, Adjustment::MetropolisRandomWalk, "RWM"),
    ]
    .into_iter()
    .enumerate()
    {
        let drift = DriftSpec::new(kind, model.clone()).unwrap();
        let config = KernelConfig::new(drift, 0.1, adj).unwrap();
        let r = run_chain(&config, &[0.0], 200 + i as u64, &RunSpec::new(1_000_000, vec![0])).unwrap();
        let e = r.estimate(0).unwrap();
        let se = e.mean_sq_mcse.unwrap();
        let z = (e.mean_sq - 1.0) / se;
        pass &= !r.excluded && z.abs() <= 4.0;
        detail.push(format!(
            "{label}: {:.4} ({z:+.2} SE, acceptance {:.3})",
            e.mean_sq,
            r.acceptance_rate.unwrap()
        ));
    }
    Outcome {
        name: "MH invariance (unit Gaussian d=1, gamma=0.1, 1e6 steps)",
        pass,
        detail: detail.join(", "),
    }
}

fn determinism() -> Outcome {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/dw_small.toml");
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        let out_dir = dir.path().join(format!("w{workers}"));
        let status = Command::new(env!("CARGO_BIN_EXE_tula"))
            .args(["run", config.to_str().unwrap(), "--workers", workers, "--format", "csv", "--out-dir"])
            .arg(&out_dir)
            .env("RUST_LOG", "error")
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push(std::fs::read(out_dir.join("summary.csv")).unwrap());
    }
    Outcome {
        name: "determinism (dw_small, workers 1 vs 8)",
        pass: outputs[0] == outputs[1] && !outputs[0].is_empty(),
        detail: format!(
            "{} and {} bytes, identical = {}",
            outputs[0].len(),
            outputs[1].len(),
            outputs[0] == outputs[1]
        ),
    }
}

fn main() {
    let criteria: [fn() -> Outcome; 9] = [
        double_well_oracle,
        tulac_consistency,
        stability_contrast,
        partial_taming_threshold,
        ill_conditioned,
        bias_rate,
        taming_bounds,
        mh_invariance,
        determinism,
    ];
    let mut failed = 0;
    for f in criteria {
        let o = f();
        println!("{}  {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += !o.pass as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
