#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(map) = dustfall::io::parse_forward_map_csv(text) {
            assert_eq!(map.matrix.nrows(), map.grid.nx() * map.grid.ny());
            assert_eq!(map.matrix.ncols(), map.sources.len());
        }
    }
});
