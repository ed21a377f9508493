#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = dustfall::io::parse_samples_csv(text) {
            assert_eq!(s.q.len(), s.lambda.len());
            let _ = dustfall::inversion::posterior_summary(&s, 0.2);
        }
    }
});
