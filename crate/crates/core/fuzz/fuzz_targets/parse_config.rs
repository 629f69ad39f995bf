#![no_main]

use std::path::Path;

use kuradyn::config::{ExperimentConfig, Model};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ExperimentConfig::from_toml(text) else {
        return;
    };
    let again = ExperimentConfig::from_toml(&cfg.to_toml()).expect("echoed config parses");
    // NaN fields compare unequal, so compare the echoed text instead.
    assert_eq!(again.to_toml(), cfg.to_toml());
    // Graph files are never read from fuzz input.
    if cfg.graph.path.is_none() {
        for model in [Model::Krw, Model::Drc, Model::Averaged] {
            let _ = cfg.resolve(model, Path::new("/nonexistent"));
        }
    }
});
