#![allow(dead_code)]

use ndarray::{Array1, Array2};
use nncs_reach::config::{Config, Loaded};
use nncs_reach::geometry::{StarSet, StarUnion};
use nncs_reach::interval::{Interval, IntervalBox};
use nncs_reach::network::{Layer, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

/// Seeded dense ReLU network with the given widths, ReLU between layers.
pub fn random_net(widths: &[usize], seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    for (i, pair) in widths.windows(2).enumerate() {
        let (n_in, n_out) = (pair[0], pair[1]);
        let w = Array2::from_shape_fn((n_out, n_in), |_| rng.random_range(-1.0..1.0));
        let b = Array1::from_shape_fn(n_out, |_| rng.random_range(-0.5..0.5));
        layers.push(Layer::affine(w, b));
        if i + 2 < widths.len() {
            layers.push(Layer::Relu);
        }
    }
    Network::new(widths[0], layers).unwrap()
}

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn load_scenario(name: &str) -> Loaded {
    Config::load(&repo_root().join("scenarios").join(name)).unwrap()
}

/// Two-sided check of an exact star image on `samples` draws each way.
///
/// Forward: images of input samples lie in the union. Backward: every leaf
/// point equals the network applied to the input point with the same
/// latent coefficients. Returns the number of violations.
pub fn exactness_violations(net: &Network, input: &StarSet, union: &StarUnion, samples: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..samples {
        let alpha = input.sample_latent(&mut rng, 1000).expect("feasible input");
        let y = net.eval(&input.point_at(&alpha)).unwrap();
        // witness: a leaf admitting the same α maps it to y; the LP only
        // decides the rare points on leaf boundaries
        let witnessed = union.iter().any(|leaf| {
            leaf.satisfies(&alpha, 1e-9) && leaf.point_at(&alpha).iter().zip(&y).all(|(a, b)| (a - b).abs() <= 1e-8)
        });
        if !witnessed && !union.contains_point(&y, 1e-8).unwrap() {
            bad += 1;
        }
    }
    let per_leaf = samples.div_ceil(union.len().max(1));
    for leaf in union.iter() {
        for alpha in polytope_points(leaf, per_leaf, &mut rng) {
            let want = net.eval(&input.point_at(&alpha)).unwrap();
            let got = leaf.point_at(&alpha);
            if want.iter().zip(&got).any(|(a, b)| (a - b).abs() > 1e-8) {
                bad += 1;
            }
        }
    }
    bad
}

/// Random feasible latent vectors of `star`: convex combinations of LP
/// vertices in random directions. Works for thin polytopes where rejection
/// sampling stalls.
pub fn polytope_points<R: Rng>(star: &StarSet, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let p = star.latent_dim();
    let lp = star.latent_lp();
    let Some(prep) = lp.prepare().unwrap() else { return vec![] };
    let vertices: Vec<Vec<f64>> = (0..2 * p + 2)
        .map(|_| {
            let c: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
            prep.minimize(&c).unwrap().x
        })
        .collect();
    (0..n)
        .map(|_| {
            let w: Vec<f64> = vertices.iter().map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let total: f64 = w.iter().sum();
            (0..p).map(|j| vertices.iter().zip(&w).map(|(v, wi)| v[j] * wi / total).sum()).collect()
        })
        .collect()
}

/// Random `(p, θ, φ)` star with correlated generators and one constraint.
pub fn random_taxi_star<R: Rng>(rng: &mut R) -> StarSet {
    let center = Array1::from(vec![rng.random_range(-8.0..8.0), rng.random_range(-0.3..0.3), rng.random_range(-0.25..0.25)]);
    let scale = [0.8, 0.06, 0.05];
    let basis = Array2::from_shape_fn((3, 3), |(i, _)| rng.random_range(-1.0..1.0) * scale[i]);
    let cmat = Array2::from_shape_fn((1, 3), |_| rng.random_range(-1.0..1.0));
    let latent = IntervalBox::new(vec![Interval::new(-1.0, 1.0); 3]);
    StarSet::new(center, basis, cmat, Array1::from(vec![0.3]), latent).unwrap()
}

/// Pinned CLI runs: arguments (without `--output-dir`), produced file and
/// golden file under `tests/goldens`.
pub const CLI_GOLDENS: &[(&[&str], &str, &str)] = &[
    (&["forward", "--config", "scenarios/taxi.json"], "forward.json", "taxi_forward.json"),
    (&["backward", "--config", "scenarios/brake.json", "--m", "2"], "safe.csv", "brake_backward_m2_safe.csv"),
    (&["backward", "--config", "scenarios/brake_fine.json", "--m", "2"], "safe.csv", "brake_fine_backward_m2_safe.csv"),
    (&["simulate", "--config", "scenarios/brake.json"], "simulate.json", "brake_simulate.json"),
];

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/goldens")
}

/// Runs the CLI binary from the repo root, writing into `out`.
pub fn run_cli(args: &[&str], out: &std::path::Path) -> i32 {
    std::process::Command::new(env!("CARGO_BIN_EXE_nncs-reach"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .current_dir(repo_root())
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}
