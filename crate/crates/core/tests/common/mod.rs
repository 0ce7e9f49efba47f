#![allow(dead_code)]

use dynblockade::cli::preset_waveform;
use dynblockade::dynamics::{simulate, InitialState, DEFAULT_STEP};
use dynblockade::optimizer::OptimizationProblem;
use dynblockade::oracle::propagate_amplitudes;
use dynblockade::{Amplitudes, HarmonicCoupling, Staircase, SystemParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const WEAK_U: f64 = 2.0 * PI * 1e-2;

pub fn strong_params() -> SystemParams {
    SystemParams::symmetric(1.0, 5.0)
}

pub fn weak_params() -> SystemParams {
    SystemParams::symmetric(WEAK_U, PI)
}

pub fn strong_problem() -> OptimizationProblem {
    OptimizationProblem::new(strong_params(), 0.1, 1.0, 2.6, 3)
}

pub fn weak_problem() -> OptimizationProblem {
    OptimizationProblem::new(weak_params(), 0.1, 0.95, 1.2, 3)
}

pub fn table(name: &str) -> HarmonicCoupling {
    preset_waveform(name).unwrap()
}

pub fn max_diff(a: &Amplitudes, b: &Amplitudes) -> f64 {
    a.to_array().iter().zip(b.to_array()).map(|(x, y): (&Complex64, Complex64)| (x - y).norm()).fold(0.0, f64::max)
}

/// Random staircase with 1..=8 steps on a random horizon, values in `[0, 5]`.
pub fn random_staircase(rng: &mut ChaCha8Rng) -> Staircase {
    let n = rng.random_range(1..=8);
    let mut edges = vec![0.0];
    for _ in 0..n {
        let last = *edges.last().unwrap();
        edges.push(last + rng.random_range(0.05..0.6));
    }
    let values = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
    Staircase::new(edges, values).unwrap()
}

/// Largest amplitude deviation between the manifold integrator and the
/// matrix-exponential propagator over `cases` random staircases.
pub fn oracle_deviation(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let s = random_staircase(&mut rng);
        let u1 = rng.random_range(0.0..2.0);
        let u2 = rng.random_range(0.0..2.0);
        let z0 = rng.random_range(-0.5..1.0);
        let params = SystemParams { kappa: 1.0, u1, u2, jmax: 5.0 };
        let (init, one, two) = InitialState::from_imbalance(0.1, z0).unwrap();
        let tr = simulate(&init.weights(), one, two, &s, &params, s.edges(), DEFAULT_STEP).unwrap();
        let a0 = tr.amplitudes(0);
        for (k, &tau) in s.edges().iter().enumerate().skip(1) {
            let prefix = Staircase::new(s.edges()[..=k].to_vec(), s.values()[..k].to_vec()).unwrap();
            let exact = propagate_amplitudes(&a0, u1, u2, &prefix).unwrap();
            worst = worst.max(max_diff(&tr.amplitudes_at(tau).unwrap(), &exact));
        }
    }
    worst
}

/// Small configurations covering every command.
pub fn cheap_configs() -> Vec<(&'static str, String, Vec<&'static str>)> {
    let problem = r#""problem":{"params":{"u1":0.0628318530718,"u2":0.0628318530718,"jmax":3.14159265359},
        "z0":0.95,"tau_T":1.2,"p":2,"restarts":2,"max_evals":120,"box_grid":400,"audit_grid":2000}"#;
    vec![
        ("replay", r#"{"mode":"replay"}"#.to_string(), vec!["--preset", "example2"]),
        (
            "simulate",
            r#"{"mode":"simulate","system":{"u1":1,"u2":1,"jmax":5},"initial":{"alpha1":0.1,"z0":1},
                "waveform":{"constant":5},"tau_end":1.0}"#
                .to_string(),
            vec![],
        ),
        ("baseline", r#"{"mode":"baseline","system":{"u1":1,"u2":1,"jmax":5},"initial":{"alpha1":0.1,"z0":1}}"#.to_string(), vec![]),
        ("optimize", format!(r#"{{"mode":"optimize",{problem}}}"#), vec!["--seed", "3"]),
        ("sweep", format!(r#"{{"mode":"sweep",{problem},"sweep":{{"tau_T":[1.0],"p":[1,2]}}}}"#), vec![]),
        ("robustness", format!(r#"{{"mode":"robustness",{problem},"waveform":"example2","robustness":{{"points":5}}}}"#), vec![]),
        ("twotime", r#"{"mode":"twotime","twotime":{"points":21}}"#.to_string(), vec!["--preset", "example2"]),
    ]
}

/// Runs the binary on a config document, writing into `out`.
pub fn run_cli(mode: &str, config: &str, out: &std::path::Path, extra: &[&str]) -> std::process::Output {
    let cfg = out.with_extension("json");
    std::fs::write(&cfg, config).unwrap();
    std::process::Command::new(env!("CARGO_BIN_EXE_dynblockade"))
        .arg(mode)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

/// Every file under `dir`, sorted by name, with its bytes.
pub fn snapshot(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}
