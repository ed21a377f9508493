//! Anemometer records: storage, time interpolation, angular unwrapping and
//! wind-rose tabulation. Smoothing lives in [`regularize`].

mod regularize;

pub use regularize::{regularize_wind, KernelRidge1d, RegularizeOptions, RegularizeReport, Selection};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One anemometer sample. `direction` is the meteorological direction the
/// wind blows FROM, degrees clockwise from north.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindRecord {
    /// Seconds since the Unix epoch.
    pub time: f64,
    pub speed: f64,
    pub direction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    Raw,
    Regularized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindSeries {
    records: Vec<WindRecord>,
    pub kind: SeriesKind,
    pub station: Option<String>,
}

/// Cartesian components `(u_x, u_y)` of a wind of `speed` blowing from
/// `direction_deg` (+y is north).
pub fn wind_components(speed: f64, direction_deg: f64) -> (f64, f64) {
    let th = direction_deg.to_radians();
    (-speed * th.sin(), -speed * th.cos())
}

/// Inverse of [`wind_components`]: `(speed, direction_deg)` with direction in `[0, 360)`.
pub fn speed_direction(ux: f64, uy: f64) -> (f64, f64) {
    let speed = ux.hypot(uy);
    if speed == 0.0 {
        return (0.0, 0.0);
    }
    (speed, wrap_direction((-ux).atan2(-uy).to_degrees()))
}

/// Map an angle in degrees onto `[0, 360)`.
pub fn wrap_direction(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Continuous version of an angle sequence: each step is replaced by its
/// representative in `(-180, 180]` before cumulative summation.
pub fn unwrap_direction(dirs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(dirs.len());
    let Some(&first) = dirs.first() else {
        return out;
    };
    out.push(first);
    let mut acc = first;
    for w in dirs.windows(2) {
        let mut d = (w[1] - w[0]).rem_euclid(360.0);
        if d > 180.0 {
            d -= 360.0;
        }
        acc += d;
        out.push(acc);
    }
    out
}

/// Circular mean direction in degrees, `[0, 360)`. Returns 0 for an empty input.
pub fn circular_mean(dirs: &[f64]) -> f64 {
    let (s, c) = dirs.iter().fold((0.0, 0.0), |(s, c), d| {
        let r = d.to_radians();
        (s + r.sin(), c + r.cos())
    });
    if s == 0.0 && c == 0.0 {
        return 0.0;
    }
    wrap_direction(s.atan2(c).to_degrees())
}

/// Smallest absolute angular difference, degrees.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

impl WindSeries {
    pub fn new(records: Vec<WindRecord>, kind: SeriesKind) -> Result<Self> {
        for (n, r) in records.iter().enumerate() {
            if !(r.time.is_finite() && r.speed.is_finite() && r.direction.is_finite()) {
                return Err(Error::NonFinite(format!("wind record {n}")));
            }
            if r.speed < 0.0 {
                return Err(invalid(format!("wind record {n}: negative speed {}", r.speed)));
            }
        }
        if let Some(n) = records.windows(2).position(|w| w[1].time <= w[0].time) {
            return Err(invalid(format!(
                "wind timestamps must be strictly increasing (record {})",
                n + 1
            )));
        }
        let records = records
            .into_iter()
            .map(|r| WindRecord { direction: wrap_direction(r.direction), ..r })
            .collect();
        Ok(WindSeries { records, kind, station: None })
    }

    /// Uniformly sampled series with constant speed and direction.
    pub fn constant(speed: f64, direction: f64, start: f64, end: f64, step: f64) -> Result<Self> {
        Self::from_fn(start, end, step, |_| (speed, direction))
    }

    /// Uniformly sampled series from a closure returning `(speed, direction)`.
    pub fn from_fn(start: f64, end: f64, step: f64, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        if !(step > 0.0) || !(end >= start) {
            return Err(invalid("from_fn needs step > 0 and end >= start"));
        }
        let n = ((end - start) / step).ceil() as usize;
        let records = (0..=n)
            .map(|m| {
                let t = start + m as f64 * step;
                let (speed, direction) = f(t);
                WindRecord { time: t, speed, direction }
            })
            .collect();
        Self::new(records, SeriesKind::Raw)
    }

    pub fn records(&self) -> &[WindRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn start(&self) -> Option<f64> {
        self.records.first().map(|r| r.time)
    }

    pub fn end(&self) -> Option<f64> {
        self.records.last().map(|r| r.time)
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.speed).collect()
    }

    pub fn directions(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.direction).collect()
    }

    /// Reference wind components at time `t`, linearly interpolated between
    /// records. Fails outside the covered period or across a gap longer than
    /// `max_gap` seconds.
    pub fn components_at(&self, t: f64, max_gap: f64) -> Result<(f64, f64)> {
        let recs = &self.records;
        let (first, last) = match (recs.first(), recs.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::WindCoverage { t, reason: "empty wind series".into() }),
        };
        if t < first.time || t > last.time {
            return Err(Error::WindCoverage {
                t,
                reason: format!("series covers [{}, {}]", first.time, last.time),
            });
        }
        let hi = recs.partition_point(|r| r.time < t);
        if recs[hi].time == t {
            return Ok(wind_components(recs[hi].speed, recs[hi].direction));
        }
        let (a, b) = (&recs[hi - 1], &recs[hi]);
        let gap = b.time - a.time;
        if gap > max_gap {
            return Err(Error::WindCoverage {
                t,
                reason: format!("gap of {gap} s exceeds the {max_gap} s interpolation limit"),
            });
        }
        let w = (t - a.time) / gap;
        let (ax, ay) = wind_components(a.speed, a.direction);
        let (bx, by) = wind_components(b.speed, b.direction);
        Ok((ax + w * (bx - ax), ay + w * (by - ay)))
    }

    pub fn with_kind(mut self, kind: SeriesKind) -> Self {
        self.kind = kind;
        self
    }
}

/// Counts per (direction sector, speed bin).
#[derive(Debug, Clone, PartialEq)]
pub struct WindRose {
    /// Sector width is `360 / n_sectors`; sector 0 is centred on north.
    pub n_sectors: usize,
    /// Bin edges; the last bin is open-ended.
    pub speed_edges: Vec<f64>,
    /// `counts[sector][bin]`.
    pub counts: Vec<Vec<u64>>,
}

impl WindRose {
    pub fn sector_width(&self) -> f64 {
        360.0 / self.n_sectors as f64
    }

    pub fn sector_start(&self, sector: usize) -> f64 {
        wrap_direction(sector as f64 * self.sector_width() - 0.5 * self.sector_width())
    }

    pub fn sector_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|c| c.iter().sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.sector_totals().iter().sum()
    }
}

pub const DEFAULT_SPEED_EDGES: [f64; 6] = [0.0, 1.0, 2.0, 4.0, 6.0, 8.0];

/// Tabulate a wind rose. Speeds below the first edge fall into the first bin.
pub fn windrose_histogram(series: &WindSeries, n_sectors: usize, speed_edges: &[f64]) -> Result<WindRose> {
    if n_sectors < 4 {
        return Err(invalid(format!("windrose needs at least 4 sectors, got {n_sectors}")));
    }
    if speed_edges.is_empty() || speed_edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("speed bin edges must be non-empty and strictly increasing"));
    }
    let width = 360.0 / n_sectors as f64;
    let mut counts = vec![vec![0u64; speed_edges.len()]; n_sectors];
    for r in series.records() {
        let sector = (((r.direction + 0.5 * width) / width).floor() as usize) % n_sectors;
        let bin = speed_edges.partition_point(|&e| e <= r.speed).saturating_sub(1);
        counts[sector][bin] += 1;
    }
    Ok(WindRose { n_sectors, speed_edges: speed_edges.to_vec(), counts })
}
