//! Seeded synthetic wind records for tests, examples and bundled data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::wind::{wrap_direction, SeriesKind, WindRecord, WindSeries};

/// Noisy anemometer-like record alternating between a north-westerly and a
/// south-easterly regime, with a diurnal speed cycle.
///
/// Regimes persist for several hours on average; speeds are clamped at zero
/// so occasional calms occur.
pub fn bimodal_wind(start: f64, duration: f64, step: f64, seed: u64) -> Result<WindSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir_noise = Normal::new(0.0, 18.0).expect("valid normal");
    let speed_noise = Normal::new(0.0, 0.6).expect("valid normal");
    let n = (duration / step).floor() as usize + 1;
    // mean regime length of six hours
    let p_switch = step / (6.0 * 3600.0);
    let mut north_west = rng.random_bool(0.5);
    let mut drift = 0.0;
    let mut records = Vec::with_capacity(n);
    for m in 0..n {
        let t = start + m as f64 * step;
        if rng.random_bool(p_switch.min(1.0)) {
            north_west = !north_west;
        }
        drift = 0.9 * drift + 0.1 * dir_noise.sample(&mut rng);
        let centre = if north_west { 315.0 } else { 135.0 };
        let dir = wrap_direction(centre + drift + dir_noise.sample(&mut rng));
        let hour = ((t - start) / 3600.0) % 24.0;
        let mean = 2.6 + 1.2 * (std::f64::consts::TAU * (hour - 9.0) / 24.0).sin();
        let speed = (mean + speed_noise.sample(&mut rng)).max(0.0);
        records.push(WindRecord { time: t, speed, direction: dir });
    }
    let mut s = WindSeries::new(records, SeriesKind::Raw)?;
    s.station = Some("synthetic".into());
    Ok(s)
}

/// Constant speed with direction `mean_dir + amplitude sin(2 pi t / period)`.
pub fn meandering_wind(speed: f64, mean_dir: f64, amplitude: f64, period: f64, duration: f64, step: f64) -> Result<WindSeries> {
    WindSeries::from_fn(0.0, duration, step, |t| {
        (speed, wrap_direction(mean_dir + amplitude * (std::f64::consts::TAU * t / period).sin()))
    })
}

/// Smooth wind cycling between the two regimes of [`bimodal_wind`], without
/// noise: direction swings between 315 and 135 degrees every `half_period`
/// seconds and speed follows a diurnal cycle.
pub fn smooth_bimodal_wind(duration: f64, step: f64, half_period: f64) -> Result<WindSeries> {
    WindSeries::from_fn(0.0, duration, step, |t| {
        let phase = (std::f64::consts::PI * t / half_period).sin();
        let dir = 225.0 + 90.0 * phase.signum() * phase.abs().powf(0.3);
        let hour = (t / 3600.0) % 24.0;
        let speed = 2.6 + 1.2 * (std::f64::consts::TAU * (hour - 9.0) / 24.0).sin();
        (speed, wrap_direction(dir))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wind::{angular_distance, windrose_histogram, DEFAULT_SPEED_EDGES};

    #[test]
    fn bimodal_directions() {
        let w = bimodal_wind(0.0, 30.0 * 86400.0, 600.0, 5).unwrap();
        assert_eq!(w.len(), 30 * 144 + 1);
        let near = |c: f64| w.directions().iter().filter(|&&d| angular_distance(d, c) < 60.0).count();
        let (nw, se) = (near(315.0), near(135.0));
        assert!(nw + se > 9 * w.len() / 10);
        assert!(nw > w.len() / 5 && se > w.len() / 5);
        let rose = windrose_histogram(&w, 16, &DEFAULT_SPEED_EDGES).unwrap();
        assert_eq!(rose.total() as usize, w.len());
    }

    #[test]
    fn seeded_generation_repeats() {
        let a = bimodal_wind(100.0, 86400.0, 600.0, 1).unwrap();
        let b = bimodal_wind(100.0, 86400.0, 600.0, 1).unwrap();
        assert_eq!(a.records(), b.records());
    }

    #[test]
    fn meander_stays_in_band() {
        let w = meandering_wind(3.0, 270.0, 40.0, 7200.0, 86400.0, 600.0).unwrap();
        assert!(w.directions().iter().all(|&d| angular_distance(d, 270.0) <= 40.0 + 1e-9));
    }

    #[test]
    fn smooth_bimodal_switches() {
        let w = smooth_bimodal_wind(2.0 * 86400.0, 600.0, 6.0 * 3600.0).unwrap();
        let d = w.directions();
        assert!(d.iter().any(|&x| angular_distance(x, 315.0) < 5.0));
        assert!(d.iter().any(|&x| angular_distance(x, 135.0) < 5.0));
    }
}
