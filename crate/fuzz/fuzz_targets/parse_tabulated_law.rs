#![no_main]

use cylevy::levy1d::TabulatedLaw;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(law) = TabulatedLaw::parse(text) {
        let again = TabulatedLaw::parse(&law.to_text()).expect("printed law parses");
        assert_eq!(law, again);
        for p in [0.0, 0.25, 0.5, 1.0] {
            let _ = law.quantile(p);
        }
    }
});
