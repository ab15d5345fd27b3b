mod common;

use nncs_reach::config::Config;
use nncs_reach::reach::{EgressPolicy, Engine};

#[test]
fn shipped_scenarios_load() {
    for name in ["taxi.json", "brake.json", "brake_fine.json", "pole.json"] {
        let loaded = common::load_scenario(name);
        loaded.scenario.validate().unwrap();
        let r0 = loaded.r0.expect("shipped scenarios carry r0");
        assert!(r0.is_subset_of(loaded.scenario.grid.bounds()), "{name}");
        assert!(loaded.output_dir.is_some());
    }
}

#[test]
fn braking_scenarios_use_layer_composition_and_absorbing_faces() {
    for name in ["brake.json", "brake_fine.json"] {
        let sc = common::load_scenario(name).scenario;
        assert_eq!(sc.engine, Engine::IbpComposed);
        assert_eq!(sc.egress[0], [EgressPolicy::Unsafe, EgressPolicy::Absorbing]);
        assert_eq!(sc.egress[1], [EgressPolicy::Absorbing; 2]);
        assert_eq!(sc.grid.counts(), [25, 25]);
        assert_eq!(sc.latent_box.dim(), 4);
    }
}

#[test]
fn missing_files_are_errors() {
    assert!(Config::load(&common::repo_root().join("scenarios/nope.json")).is_err());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let text = std::fs::read_to_string(common::repo_root().join("scenarios/taxi.json")).unwrap();
    std::fs::write(&cfg, text).unwrap();
    // the network path is relative to the config file, which is now elsewhere
    assert!(Config::load(&cfg).is_err());
}
