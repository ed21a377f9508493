use std::fmt::Write as _;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use nalgebra::DMatrix;

use super::Provenance;
use crate::error::{Error, Result};
use crate::fvm::PointSource;
use crate::grid::{DepositionField, Field3, Grid3};
use crate::inversion::{ForwardMap, PosteriorSamples};
use crate::wind::{SeriesKind, WindRecord, WindRose, WindSeries};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-comment, non-blank lines with their 1-based line numbers, and the
/// `key=value` pairs found in `#` comments.
fn split_lines(text: &str) -> (Vec<(usize, &str)>, Vec<(String, String)>) {
    let mut data = Vec::new();
    let mut meta = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(c) = line.strip_prefix('#') {
            for tok in c.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    meta.push((k.to_string(), v.to_string()));
                }
            }
        } else if !line.is_empty() {
            data.push((n + 1, line));
        }
    }
    (data, meta)
}

fn meta_get<'a>(meta: &'a [(String, String)], key: &str) -> Option<&'a str> {
    meta.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn parse_f64(line: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| parse_err(line, format!("bad {what} {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite {what}")));
    }
    Ok(v)
}

/// Seconds since the Unix epoch from epoch seconds or an ISO-8601 time
/// (offsets honoured, naive times taken as UTC).
pub fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp() as f64 + dt.timestamp_subsec_nanos() as f64 * 1e-9);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            let u = dt.and_utc();
            return Some(u.timestamp() as f64 + u.timestamp_subsec_nanos() as f64 * 1e-9);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)).map(|d| d.and_utc().timestamp() as f64)
}

pub const WIND_HEADER: &str = "timestamp,speed_mps,direction_deg";

/// Parses `timestamp,speed_mps,direction_deg` records.
pub fn parse_wind_csv(text: &str) -> Result<WindSeries> {
    let (lines, meta) = split_lines(text);
    let mut it = lines.into_iter();
    let (hl, header) = it.next().ok_or_else(|| parse_err(1, "empty wind file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != WIND_HEADER.split(',').collect::<Vec<_>>() {
        return Err(parse_err(hl, format!("expected header {WIND_HEADER:?}, found {header:?}")));
    }
    let mut records = Vec::new();
    for (n, line) in it {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(parse_err(n, format!("expected 3 fields, found {}", f.len())));
        }
        let time = parse_timestamp(f[0]).ok_or_else(|| parse_err(n, format!("bad timestamp {:?}", f[0])))?;
        let speed = parse_f64(n, f[1], "speed")?;
        let direction = parse_f64(n, f[2], "direction")?;
        if speed < 0.0 {
            return Err(parse_err(n, "negative speed"));
        }
        records.push(WindRecord { time, speed, direction });
    }
    if let Some(n) = records.windows(2).position(|w| w[1].time <= w[0].time) {
        return Err(parse_err(0, format!("timestamps not strictly increasing at record {}", n + 2)));
    }
    let kind = if meta_get(&meta, "regularized") == Some("true") { SeriesKind::Regularized } else { SeriesKind::Raw };
    let mut s = WindSeries::new(records, kind)?;
    s.station = meta_get(&meta, "station").map(str::to_string);
    Ok(s)
}

pub fn write_wind_csv(series: &WindSeries, prov: &Provenance) -> String {
    let mut s = prov.header("#");
    if series.kind == SeriesKind::Regularized {
        s.push_str("# regularized=true\n");
    }
    if let Some(st) = &series.station {
        let _ = writeln!(s, "# station={}", st.replace(char::is_whitespace, "_"));
    }
    s.push_str(WIND_HEADER);
    s.push('\n');
    for r in series.records() {
        let _ = writeln!(s, "{},{},{}", r.time, r.speed, r.direction);
    }
    s
}

pub fn write_windrose_csv(rose: &WindRose, prov: &Provenance) -> String {
    let mut s = prov.header("#");
    s.push_str("sector_start_deg,speed_bin_lo,speed_bin_hi,count\n");
    for (sec, row) in rose.counts.iter().enumerate() {
        for (b, c) in row.iter().enumerate() {
            let lo = rose.speed_edges[b];
            let hi = rose.speed_edges.get(b + 1).map_or("inf".to_string(), |v| v.to_string());
            let _ = writeln!(s, "{},{},{},{}", rose.sector_start(sec), lo, hi, c);
        }
    }
    s
}

/// One row per cell: `i,j,k,x,y,z,value`.
pub fn write_field_csv(f: &Field3, prov: &Provenance) -> String {
    let g = f.grid;
    let mut s = prov.header("#");
    s.push_str("i,j,k,x,y,z,value\n");
    for k in 0..g.nz() {
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let _ = writeln!(s, "{i},{j},{k},{},{},{},{}", g.center(0, i), g.center(1, j), g.center(2, k), f.get(i, j, k));
            }
        }
    }
    s
}

/// One row per ground cell: `i,j,k,x,y,z,value` with `k = 0`, `z = 0`.
pub fn write_deposition_csv(w: &DepositionField, prov: &Provenance) -> String {
    write_ground_table(&w.grid, &[("value", &w.values)], prov)
}

/// Ground-cell table with several value columns.
pub fn write_ground_table(g: &Grid3, columns: &[(&str, &[f64])], prov: &Provenance) -> String {
    let mut s = prov.header("#");
    s.push_str("i,j,k,x,y,z");
    for (name, _) in columns {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let n = i + g.nx() * j;
            let _ = write!(s, "{i},{j},0,{},{},0", g.center(0, i), g.center(1, j));
            for (_, v) in columns {
                let _ = write!(s, ",{}", v[n]);
            }
            s.push('\n');
        }
    }
    s
}

fn grid_meta(g: &Grid3) -> String {
    format!(
        "# grid origin={},{},{} extent={},{},{} cells={},{},{}\n",
        g.origin[0], g.origin[1], g.origin[2], g.extent[0], g.extent[1], g.extent[2], g.cells[0], g.cells[1], g.cells[2]
    )
}

fn parse_triple<T: std::str::FromStr>(v: &str, what: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 3 {
        return Err(parse_err(0, format!("{what} needs three comma-separated values")));
    }
    let p = |s: &str| s.parse::<T>().map_err(|_| parse_err(0, format!("bad {what} value {s:?}")));
    Ok([p(parts[0])?, p(parts[1])?, p(parts[2])?])
}

/// Forward map as CSV: grid and run metadata in `#` lines, a source table,
/// then one row per ground cell with one column per source.
pub fn write_forward_map_csv(map: &ForwardMap, prov: &Provenance) -> String {
    let mut s = prov.header("#");
    s.push_str(&grid_meta(&map.grid));
    let _ = writeln!(s, "# duration={} input_sha256={}", map.duration, map.input_hash);
    for (j, src) in map.sources.iter().enumerate() {
        let _ = writeln!(
            s,
            "# source={},{},{},{},{}",
            j,
            src.name.replace([',', ' '], "_"),
            src.position[0],
            src.position[1],
            src.position[2]
        );
    }
    s.push_str("cell");
    for j in 0..map.n_sources() {
        let _ = write!(s, ",f{j}");
    }
    s.push('\n');
    for r in 0..map.matrix.nrows() {
        let _ = write!(s, "{r}");
        for j in 0..map.n_sources() {
            let _ = write!(s, ",{}", map.matrix[(r, j)]);
        }
        s.push('\n');
    }
    s
}

pub fn parse_forward_map_csv(text: &str) -> Result<ForwardMap> {
    let (lines, meta) = split_lines(text);
    let origin: [f64; 3] = parse_triple(meta_get(&meta, "origin").ok_or_else(|| parse_err(0, "missing grid origin"))?, "origin")?;
    let extent: [f64; 3] = parse_triple(meta_get(&meta, "extent").ok_or_else(|| parse_err(0, "missing grid extent"))?, "extent")?;
    let cells: [usize; 3] = parse_triple(meta_get(&meta, "cells").ok_or_else(|| parse_err(0, "missing grid cells"))?, "cells")?;
    let grid = Grid3::new(origin, extent, cells)?;
    let duration = meta_get(&meta, "duration").and_then(|v| v.parse::<f64>().ok()).unwrap_or(0.0);
    let input_hash = meta_get(&meta, "input_sha256").unwrap_or("").to_string();
    let mut sources = Vec::new();
    for (k, v) in &meta {
        if k != "source" {
            continue;
        }
        let f: Vec<&str> = v.split(',').collect();
        if f.len() != 5 {
            return Err(parse_err(0, format!("bad source line {v:?}")));
        }
        let p = |s: &str| parse_f64(0, s, "source coordinate");
        sources.push(PointSource::new(f[1], [p(f[2])?, p(f[3])?, p(f[4])?], 1.0));
    }
    let mut it = lines.into_iter();
    let (hl, header) = it.next().ok_or_else(|| parse_err(1, "missing column header"))?;
    let nq = header.split(',').count().saturating_sub(1);
    if nq == 0 || nq != sources.len() {
        return Err(parse_err(hl, format!("{nq} map columns for {} sources", sources.len())));
    }
    let nxy = grid.nx() * grid.ny();
    let mut m = DMatrix::zeros(nxy, nq);
    let mut seen = 0;
    for (n, line) in it {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != nq + 1 {
            return Err(parse_err(n, format!("expected {} fields, found {}", nq + 1, f.len())));
        }
        let r: usize = f[0].trim().parse().map_err(|_| parse_err(n, "bad cell index"))?;
        if r != seen || r >= nxy {
            return Err(parse_err(n, format!("cell index {r} out of order")));
        }
        for j in 0..nq {
            m[(r, j)] = parse_f64(n, f[j + 1], "map entry")?;
        }
        seen += 1;
    }
    if seen != nxy {
        return Err(parse_err(0, format!("expected {nxy} cells, found {seen}")));
    }
    let map = ForwardMap { grid, sources, matrix: m, duration, input_hash };
    map.validate()?;
    Ok(map)
}

/// Chain as CSV: `iter,q0,...,lambda`.
pub fn write_samples_csv(s: &PosteriorSamples, prov: &Provenance) -> String {
    let mut out = prov.header("#");
    let nq = s.q.first().map_or(0, Vec::len);
    out.push_str("iter");
    for j in 0..nq {
        let _ = write!(out, ",q{j}");
    }
    out.push_str(",lambda\n");
    for (k, (q, l)) in s.q.iter().zip(&s.lambda).enumerate() {
        let _ = write!(out, "{k}");
        for v in q {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{l}");
    }
    out
}

pub fn parse_samples_csv(text: &str) -> Result<PosteriorSamples> {
    let (lines, meta) = split_lines(text);
    let seed = meta_get(&meta, "seed").and_then(|v| v.parse().ok()).unwrap_or(0);
    let mut it = lines.into_iter();
    let (hl, header) = it.next().ok_or_else(|| parse_err(1, "missing column header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "iter" || cols[cols.len() - 1] != "lambda" {
        return Err(parse_err(hl, "expected header iter,q0,...,lambda"));
    }
    let nq = cols.len() - 2;
    let (mut q, mut lambda) = (Vec::new(), Vec::new());
    for (n, line) in it {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != nq + 2 {
            return Err(parse_err(n, format!("expected {} fields, found {}", nq + 2, f.len())));
        }
        q.push(f[1..=nq].iter().map(|v| parse_f64(n, v, "rate")).collect::<Result<Vec<_>>>()?);
        let l = parse_f64(n, f[nq + 1], "lambda")?;
        if !(l > 0.0) {
            return Err(parse_err(n, "lambda must be positive"));
        }
        lambda.push(l);
    }
    Ok(PosteriorSamples { q, lambda, seed })
}

/// Observations as CSV: `receptor,value`.
pub fn parse_observations_csv(text: &str) -> Result<Vec<(String, f64)>> {
    let (lines, _) = split_lines(text);
    let mut it = lines.into_iter();
    let (hl, header) = it.next().ok_or_else(|| parse_err(1, "missing column header"))?;
    if header.replace(' ', "") != "receptor,value" {
        return Err(parse_err(hl, "expected header receptor,value"));
    }
    it.map(|(n, line)| {
        let (id, v) = line.split_once(',').ok_or_else(|| parse_err(n, "expected 2 fields"))?;
        Ok((id.trim().to_string(), parse_f64(n, v, "observation")?))
    })
    .collect()
}

/// Generic table writer; every value column has the same length.
pub fn write_table(header: &[&str], rows: &[Vec<String>], prov: &Provenance) -> String {
    let mut s = prov.header("#");
    s.push_str(&header.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}
