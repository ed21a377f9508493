#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(series) = dustfall::io::parse_wind_csv(text) {
            let times = series.times();
            assert!(times.windows(2).all(|w| w[0] < w[1]));
            assert!(series.speeds().iter().all(|s| s.is_finite() && *s >= 0.0));
        }
    }
});
