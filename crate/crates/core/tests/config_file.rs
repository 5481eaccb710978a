use pitchopt_core::config::{RunConfig, KEYS};

const REFERENCE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/reference.conf");

#[test]
fn shipped_reference_file_matches_built_in_defaults() {
    let loaded = RunConfig::load(REFERENCE).unwrap();
    let built_in = RunConfig::reference();
    assert_eq!(loaded.to_string(), built_in.to_string());
    assert_eq!(loaded.fixed, built_in.fixed);
    assert_eq!(loaded.variable, built_in.variable);
    assert_eq!(loaded.plant.calibration, built_in.plant.calibration);
}

#[test]
fn shipped_reference_file_sets_every_key() {
    let text = std::fs::read_to_string(REFERENCE).unwrap();
    for key in KEYS {
        assert!(
            text.lines()
                .any(|l| l.split('=').next().unwrap().trim() == *key),
            "missing {key}"
        );
    }
}

#[test]
fn missing_file_is_reported() {
    let err = RunConfig::load("/nonexistent/pitchopt.conf").unwrap_err();
    assert!(err.to_string().contains("/nonexistent/pitchopt.conf"));
}
