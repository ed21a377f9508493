//! Writes the bundled synthetic month of wind records:
//! `cargo run -p dustfall --example sample_wind > data/sample_wind.csv`

use dustfall::io::{write_wind_csv, Provenance};
use dustfall::synthetic::bimodal_wind;

const SEED: u64 = 2002;
/// 2002-06-01T00:00:00Z
const START: f64 = 1_022_889_600.0;

fn main() -> dustfall::Result<()> {
    let w = bimodal_wind(START, 30.0 * 86400.0, 600.0, SEED)?;
    print!("{}", write_wind_csv(&w, &Provenance::new("none", Some(SEED))));
    Ok(())
}
