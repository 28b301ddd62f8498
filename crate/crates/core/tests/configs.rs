//! Every shipped config parses and validates.

use std::fs;
use std::path::Path;

use sipcond::config::ExperimentConfig;
use sipcond::verify::adjudicate::AdjudicationConfig;

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if name.starts_with("adjudication") {
            let cfg: AdjudicationConfig = toml::from_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!cfg.experiments.is_empty(), "{name}");
        } else {
            let cfg = ExperimentConfig::from_toml_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            cfg.plan().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        seen += 1;
    }
    assert!(seen >= 6, "only {seen} configs found");
}

#[test]
fn default_adjudication_manifest_matches_the_built_in_default() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/adjudication.toml");
    let cfg: AdjudicationConfig = toml::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(toml::to_string(&cfg).unwrap(), toml::to_string(&AdjudicationConfig::default()).unwrap());
}
