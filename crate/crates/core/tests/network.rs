mod common;

use common::{random_net, repo_root};
use ndarray::{array, Array1};
use nncs_reach::dynamics::{brake_affine, brake_step, BrakeParams, BRAKE_DECEL_BIAS, BRAKE_DECEL_GAIN};
use nncs_reach::network::Network;
use nncs_reach::scenario_gen::{
    gen_brake_surrogate, gen_taxi_surrogate, network_hash, Golden, BRAKE_SEED, TAXI_SEED,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn golden(name: &str) -> (Network, Golden) {
    let dir = repo_root().join("scenarios/networks");
    let net = Network::load(dir.join(format!("{name}.json"))).unwrap();
    let text = std::fs::read_to_string(dir.join(format!("{name}.golden.json"))).unwrap();
    (net, serde_json::from_str(&text).unwrap())
}

#[test]
fn shipped_networks_match_goldens() {
    for (name, regenerated) in [
        ("taxi_surrogate", gen_taxi_surrogate(TAXI_SEED)),
        ("brake_surrogate", gen_brake_surrogate(BRAKE_SEED)),
    ] {
        let (net, g) = golden(name);
        assert_eq!(network_hash(&net), g.sha256, "{name}");
        assert_eq!(network_hash(&regenerated), g.sha256, "{name} regenerated");
        for (x, y) in g.inputs.iter().zip(&g.outputs) {
            let got = net.eval(x).unwrap();
            for (a, b) in got.iter().zip(y) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{name}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn json_round_trip_is_lossless() {
    let net = random_net(&[3, 7, 4, 2], 12);
    let back = Network::from_json_str(&net.to_json_string()).unwrap();
    assert_eq!(back, net);
    let dir = tempfile::tempdir().unwrap();
    net.save(dir.path().join("n.json")).unwrap();
    assert_eq!(Network::load(dir.path().join("n.json")).unwrap(), net);
}

#[test]
fn malformed_networks_are_rejected() {
    assert!(Network::from_json_str(r#"{"in_dim":2,"layers":[{"type":"affine","w":[[1,2,3]],"b":[0]}]}"#).is_err());
    assert!(Network::from_json_str(r#"{"in_dim":1,"layers":[{"type":"tanh"}]}"#).is_err());
    assert!(Network::from_json_str(r#"{"in_dim":1,"layers":[],"extra":1}"#).is_err());
}

#[test]
fn clamp_layer_is_lowered_exactly() {
    let net = Network::from_json_str(r#"{"in_dim":1,"layers":[{"type":"clamp","lo":0.0,"hi":1.0}]}"#).unwrap();
    for x in [-2.0, -0.0, 0.3, 1.0, 7.5] {
        assert_eq!(net.eval(&[x]).unwrap()[0], f64::clamp(x, 0.0, 1.0));
    }
}

#[test]
fn deceleration_row_matches_closed_form() {
    let net = gen_brake_surrogate(BRAKE_SEED);
    let decel = net.append_affine(&array![[BRAKE_DECEL_GAIN]], &array![BRAKE_DECEL_BIAS]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let x = [rng.random_range(0.0..60.0), rng.random_range(0.0..30.0), 0.0, 0.0, 0.0, 0.0];
        let u = net.eval(&x).unwrap()[0];
        assert!((decel.eval(&x).unwrap()[0] - (0.009 * u + 0.0042)).abs() < 1e-12);
    }
}

#[test]
fn passthrough_carries_state_exactly() {
    let net = random_net(&[4, 6, 2], 5);
    let pt = net.build_state_passthrough(2).unwrap();
    let wide = net.passthrough(2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y = net.eval(&x[..4]).unwrap();
        assert_eq!(pt.eval(&x[..4]).unwrap(), [&x[..2], &y[..]].concat());
        let w = wide.eval(&[&x[..4], &x[4..5]].concat()).unwrap();
        assert_eq!(w[..3], [x[0], x[1], x[4]]);
        assert_eq!(w[3..], y[..]);
    }
}

#[test]
fn unrolled_braking_equals_iterated_period_map() {
    let net = gen_brake_surrogate(BRAKE_SEED);
    let params = BrakeParams { dt: 0.05, substeps: 2 };
    let dynamics = brake_affine(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for m in 1..=3 {
        let unrolled = net.unroll_affine_system(&dynamics, m, 4).unwrap();
        assert_eq!(unrolled.in_dim(), 2 + 4 * m);
        for _ in 0..1000 {
            let x0 = vec![rng.random_range(0.0..60.0), rng.random_range(1.0..30.0)];
            let zs: Vec<f64> = (0..4 * m).map(|_| rng.random_range(-0.01..0.01)).collect();
            let mut x = x0.clone();
            for j in 0..m {
                let u = net.eval(&[&x[..], &zs[4 * j..4 * j + 4]].concat()).unwrap();
                x = dynamics.step(&x, &u);
            }
            let got = unrolled.eval(&[&x0[..], &zs[..]].concat()).unwrap();
            for (a, b) in got.iter().zip(&x) {
                assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "m = {m}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn affine_braking_matches_floored_step_while_moving() {
    let p = BrakeParams { dt: 0.05, substeps: 3 };
    let dynamics = brake_affine(&p);
    let (a, b, c) = dynamics.period_map();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let x = [rng.random_range(0.0..60.0), rng.random_range(0.1..30.0)];
        let u = rng.random_range(0.0..1.0);
        let exact = brake_step(x, u, &p);
        let y = a.dot(&Array1::from(x.to_vec())) + b.dot(&array![u]) + &c;
        assert!((y[0] - exact[0]).abs() < 1e-12 && (y[1] - exact[1]).abs() < 1e-12);
    }
    // u = 0: the constant term is the substep-fold bias
    assert!((c[1] + 3.0 * BRAKE_DECEL_BIAS * p.dt).abs() < 1e-15);
    let want = array![[1.0, -3.0 * p.dt], [0.0, 1.0]];
    assert!((&a - &want).iter().all(|e| e.abs() < 1e-15));
}
