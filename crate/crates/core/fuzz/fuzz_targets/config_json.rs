#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = dustfall::io::RunConfig::from_json(text) {
            // canonical form must parse back to the same hash
            let again = dustfall::io::RunConfig::from_json(&cfg.canonical_json()).expect("canonical form parses");
            assert_eq!(cfg.hash(), again.hash());
        }
    }
});
