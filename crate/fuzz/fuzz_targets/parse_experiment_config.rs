#![no_main]

use cylevy::cli::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_json(text) else { return };
    let again = ExperimentConfig::from_json(&cfg.to_json()).expect("printed config parses");
    assert_eq!(cfg, again);
    if let Some(c) = &cfg.check {
        let _ = c.validate();
    }
    if let Some(d) = &cfg.dichotomy {
        let _ = d.validate();
    }
    if let Some(s) = &cfg.solve {
        let _ = s.validate();
    }
    if let Some(c) = &cfg.converge {
        let _ = c.validate();
    }
});
