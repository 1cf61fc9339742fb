use std::path::PathBuf;

use hypowalk::config::RunConfig;
use hypowalk::marketdata::{generate_synthetic, SynthSpec};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn sample_run_config_matches_defaults() {
    let mut c = RunConfig::load(&configs().join("run.toml")).unwrap();
    assert_eq!(c.data.benchmark.as_deref(), Some("BENCH"));
    assert!(c.data.dir.as_ref().unwrap().ends_with("data"));
    c.data.dir = None;
    c.data.benchmark = None;
    c.run.output_dir = "out".into();
    assert_eq!(c, RunConfig::default());
}

#[test]
fn sample_synth_spec_generates() {
    let text = std::fs::read_to_string(configs().join("synth.toml")).unwrap();
    let spec: SynthSpec = toml::from_str(&text).unwrap();
    let panel = generate_synthetic(&spec, 1).unwrap();
    assert_eq!((panel.num_symbols(), panel.num_days()), (21, 1000));
}
