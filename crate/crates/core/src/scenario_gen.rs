//! Deterministic generation of the small surrogate networks shipped with
//! the scenarios.
//!
//! Each surrogate is an MLP regressed with full-batch Adam on samples from
//! a seeded generator. Input and output normalization are folded into the
//! first and last affine layers, so the saved network works in physical
//! units.

use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::interval::IntervalBox;
use crate::network::{Layer, Network};

pub const TAXI_SEED: u64 = 7;
pub const BRAKE_SEED: u64 = 11;

/// Regression problem and optimizer settings.
#[derive(Debug, Clone)]
pub struct TrainSpec {
    pub domain: IntervalBox,
    pub hidden: Vec<usize>,
    pub samples: usize,
    pub epochs: usize,
    pub lr: f64,
}

pub fn taxi_spec() -> TrainSpec {
    let deg = std::f64::consts::PI / 180.0;
    TrainSpec {
        domain: IntervalBox::from_bounds(&[(-11.0, 11.0), (-30.0 * deg, 30.0 * deg), (-0.8, 0.8), (-0.8, 0.8)]),
        hidden: vec![8, 8],
        samples: 1024,
        epochs: 4000,
        lr: 0.01,
    }
}

pub fn brake_spec() -> TrainSpec {
    TrainSpec {
        domain: IntervalBox::from_bounds(&[(0.0, 60.0), (0.0, 30.0), (-0.01, 0.01), (-0.01, 0.01), (-0.01, 0.01), (-0.01, 0.01)]),
        hidden: vec![10, 10],
        samples: 1024,
        epochs: 3000,
        lr: 0.01,
    }
}

/// Ideal observation of `(p, θ)` perturbed by the two latents.
pub fn taxi_target(x: &[f64]) -> Vec<f64> {
    let (p, theta, z1, z2) = (x[0], x[1], x[2], x[3]);
    vec![p + 0.4 * z1 - 0.1 * z2 * z2, theta + 0.015 * z2 + 0.005 * z1 * z2]
}

/// Pre-clamp brake command from `(d, v, z1..z4)`, squashed to
/// `[-0.5, 1.5]`; the shipped network clamps it to `[0, 1]`.
pub fn brake_target(x: &[f64]) -> Vec<f64> {
    let (d, v) = (x[0], x[1]);
    let z = &x[2..6];
    let t = -0.1 + 2.0 * v / (d + 5.0) + 2.0 * z[0] - z[1] + 0.5 * z[2] + 0.5 * z[3];
    vec![t.clamp(-0.5, 1.5)]
}

pub fn gen_taxi_surrogate(seed: u64) -> Network {
    train_mlp(&taxi_spec(), taxi_target, seed)
}

pub fn gen_brake_surrogate(seed: u64) -> Network {
    let pre = train_mlp(&brake_spec(), brake_target, seed);
    let clamp = Network::from_json_str(r#"{"in_dim":1,"layers":[{"type":"clamp","lo":0.0,"hi":1.0}]}"#)
        .expect("static clamp network");
    pre.then(&clamp).expect("shapes agree")
}

struct Mlp {
    w: Vec<Array2<f64>>,
    b: Vec<Array1<f64>>,
}

/// Fits `target` over `spec.domain` and returns the network in physical
/// units.
pub fn train_mlp(spec: &TrainSpec, target: impl Fn(&[f64]) -> Vec<f64>, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = spec.domain.dim();
    let in_mid = Array1::from(spec.domain.center());
    let in_rad = Array1::from(spec.domain.radii());

    let mut xs = Array2::zeros((spec.samples, n_in));
    for mut row in xs.rows_mut() {
        for (v, iv) in row.iter_mut().zip(spec.domain.iter()) {
            *v = iv.lo + rng.random::<f64>() * iv.width();
        }
    }
    let ys_raw: Vec<Vec<f64>> = xs.rows().into_iter().map(|r| target(&r.to_vec())).collect();
    let n_out = ys_raw[0].len();
    let ys = Array2::from_shape_vec((spec.samples, n_out), ys_raw.into_iter().flatten().collect()).expect("rectangular");
    let out_mid = ys.mean_axis(Axis(0)).expect("nonempty");
    let out_scale = ys.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 { s } else { 1.0 });

    let xn = (&xs - &in_mid) / &in_rad;
    let yn = (&ys - &out_mid) / &out_scale;

    let mut widths = vec![n_in];
    widths.extend(&spec.hidden);
    widths.push(n_out);
    let mut mlp = Mlp { w: Vec::new(), b: Vec::new() };
    for pair in widths.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let scale = (2.0 / fan_in as f64).sqrt();
        // Box–Muller normal draws keep this dependent only on `rand`.
        let w = Array2::from_shape_fn((fan_out, fan_in), |_| {
            let (u1, u2): (f64, f64) = (rng.random::<f64>().max(1e-300), rng.random());
            scale * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        });
        mlp.w.push(w);
        mlp.b.push(Array1::zeros(fan_out));
    }
    adam(&mut mlp, &xn, &yn, spec.epochs, spec.lr);

    // fold normalization into the first and last layers
    let last = mlp.w.len() - 1;
    let first_w = &mlp.w[0] / &in_rad;
    let first_b = &mlp.b[0] - &first_w.dot(&in_mid);
    mlp.w[0] = first_w;
    mlp.b[0] = first_b;
    let col = out_scale.view().insert_axis(Axis(1));
    mlp.w[last] = &mlp.w[last] * &col;
    mlp.b[last] = &mlp.b[last] * &out_scale + &out_mid;

    let mut layers = Vec::new();
    for (i, (w, b)) in mlp.w.into_iter().zip(mlp.b).enumerate() {
        layers.push(Layer::affine(w, b));
        if i < last {
            layers.push(Layer::Relu);
        }
    }
    Network::new(n_in, layers).expect("trained shapes are consistent")
}

fn adam(mlp: &mut Mlp, x: &Array2<f64>, y: &Array2<f64>, epochs: usize, lr: f64) {
    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let n = x.nrows() as f64;
    let mut mw: Vec<Array2<f64>> = mlp.w.iter().map(|w| Array2::zeros(w.dim())).collect();
    let mut vw = mw.clone();
    let mut mb: Vec<Array1<f64>> = mlp.b.iter().map(|b| Array1::zeros(b.len())).collect();
    let mut vb = mb.clone();
    for t in 1..=epochs {
        // forward, keeping activations (rows are samples)
        let mut acts = vec![x.clone()];
        for (i, (w, b)) in mlp.w.iter().zip(&mlp.b).enumerate() {
            let mut z = acts[i].dot(&w.t()) + b;
            if i + 1 < mlp.w.len() {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        let mut delta = (&acts[mlp.w.len()] - y) * (2.0 / n);
        // linear decay to a tenth of the initial rate
        let rate = lr * (1.0 - 0.9 * (t - 1) as f64 / epochs as f64);
        let step = rate * (1.0 - b2.powi(t as i32)).sqrt() / (1.0 - b1.powi(t as i32));
        for i in (0..mlp.w.len()).rev() {
            let gw = delta.t().dot(&acts[i]);
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&mlp.w[i]);
                back.zip_mut_with(&acts[i], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
            mw[i] = &mw[i] * b1 + &gw * (1.0 - b1);
            vw[i] = &vw[i] * b2 + &gw.mapv(|g| g * g) * (1.0 - b2);
            mb[i] = &mb[i] * b1 + &gb * (1.0 - b1);
            vb[i] = &vb[i] * b2 + &gb.mapv(|g| g * g) * (1.0 - b2);
            let uw = &mw[i] / &vw[i].mapv(|v| v.sqrt() + eps) * step;
            let ub = &mb[i] / &vb[i].mapv(|v| v.sqrt() + eps) * step;
            mlp.w[i] -= &uw;
            mlp.b[i] -= &ub;
        }
    }
}

/// Pinned evaluations of a generated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Golden {
    pub sha256: String,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

pub fn network_hash(net: &Network) -> String {
    hex::encode(Sha256::digest(net.to_json_string().as_bytes()))
}

pub fn golden_record(net: &Network, inputs: Vec<Vec<f64>>) -> Result<Golden> {
    let outputs = inputs.iter().map(|x| net.eval(x)).collect::<Result<Vec<_>>>()?;
    Ok(Golden { sha256: network_hash(net), inputs, outputs })
}

/// Evaluation points for the goldens: the domain center plus seeded
/// uniform draws.
pub fn golden_inputs(domain: &IntervalBox, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![domain.center()];
    for _ in 1..count {
        out.push(domain.iter().map(|iv| iv.lo + rng.random::<f64>() * iv.width()).collect());
    }
    out
}

/// Writes `taxi_surrogate.json`, `brake_surrogate.json` and their
/// `.golden.json` companions into `dir`.
pub fn write_networks(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let nets = [
        ("taxi_surrogate", gen_taxi_surrogate(TAXI_SEED), taxi_spec().domain),
        ("brake_surrogate", gen_brake_surrogate(BRAKE_SEED), brake_spec().domain),
    ];
    for (name, net, domain) in nets {
        net.save(dir.join(format!("{name}.json")))?;
        let golden = golden_record(&net, golden_inputs(&domain, 8, 99))?;
        std::fs::write(dir.join(format!("{name}.golden.json")), serde_json::to_string_pretty(&golden)? + "\n")?;
    }
    Ok(())
}

/// Worst absolute error of `net` against `target` on seeded samples.
pub fn fit_error(net: &Network, domain: &IntervalBox, target: impl Fn(&[f64]) -> Vec<f64>, samples: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for x in golden_inputs(domain, samples, seed) {
        let y = net.eval(&x).expect("domain matches network");
        for (a, b) in y.iter().zip(target(&x)) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}
