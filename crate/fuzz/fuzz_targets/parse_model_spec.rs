#![no_main]

use cylevy::cylnoise::ModelSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = ModelSpec::from_json(text) {
        let again = ModelSpec::from_json(&spec.to_json()).expect("printed spec parses");
        assert_eq!(spec, again);
        // no base dir, so law files are refused rather than read
        let _ = spec.build(None);
    }
});
