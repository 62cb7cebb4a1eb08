//! CSV readers for the tabular inputs:
//!
//! - time series: header `timestamp,<id>,<id>,...`; one row per step;
//!   empty cells or `NA` mark missing observations
//! - locations: header `id,x,y`
//! - origin-destination flows: header `origin,dest,flow`, one directed
//!   pair per row
//! - adjacency: either headerless (square 0/1 body, ids assigned
//!   0..n-1) or with a full id header row and id column

use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::builders::{ODMatrix, TimeSeriesSet};
use crate::error::{Error, Result};
use crate::geometry::GeoPoint;
use crate::graph::AdjacencyMatrix;

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::BadTable {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn records(path: &Path) -> Result<Vec<StringRecord>> {
    let bytes = std::fs::read(path).map_err(|source| Error::FileIo {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(bytes.as_slice());
    let mut out = Vec::new();
    for record in reader.records() {
        out.push(record.map_err(|e| bad(path, e.to_string()))?);
    }
    Ok(out)
}

fn parse_id(path: &Path, context: &str, text: &str) -> Result<i64> {
    text.parse::<i64>()
        .map_err(|_| bad(path, format!("{context}: expected an integer id, got {text:?}")))
}

fn parse_real(path: &Path, context: &str, text: &str) -> Result<f64> {
    let value: f64 = text
        .parse()
        .map_err(|_| bad(path, format!("{context}: expected a number, got {text:?}")))?;
    if !value.is_finite() {
        return Err(bad(path, format!("{context}: non-finite value {text:?}")));
    }
    Ok(value)
}

fn expect_width(path: &Path, row: usize, record: &StringRecord, want: usize) -> Result<()> {
    if record.len() != want {
        return Err(bad(
            path,
            format!("row {row}: {} fields, expected {want}", record.len()),
        ));
    }
    Ok(())
}

/// Series in header order: the first column is the timestamp (ignored
/// beyond alignment), every other header cell is a node id.
pub fn read_series_csv(path: &Path) -> Result<Vec<(i64, Vec<Option<f64>>)>> {
    let rows = records(path)?;
    let header = rows
        .first()
        .ok_or_else(|| bad(path, "empty file"))?;
    if header.len() < 2 {
        return Err(bad(path, "header needs a timestamp column and at least one id"));
    }
    let ids: Vec<i64> = header
        .iter()
        .skip(1)
        .enumerate()
        .map(|(i, cell)| parse_id(path, &format!("header column {}", i + 2), cell))
        .collect::<Result<_>>()?;
    let mut series: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(rows.len() - 1); ids.len()];
    for (r, record) in rows.iter().enumerate().skip(1) {
        expect_width(path, r + 1, record, header.len())?;
        for (c, cell) in record.iter().skip(1).enumerate() {
            let value = if cell.is_empty() || cell == "NA" {
                None
            } else {
                Some(parse_real(
                    path,
                    &format!("row {} column {}", r + 1, c + 2),
                    cell,
                )?)
            };
            series[c].push(value);
        }
    }
    Ok(ids.into_iter().zip(series).collect())
}

/// `id,x,y` rows, one located node each.
pub fn read_locations_csv(path: &Path) -> Result<Vec<(i64, GeoPoint)>> {
    let rows = records(path)?;
    let header = rows
        .first()
        .ok_or_else(|| bad(path, "empty file"))?;
    let names: Vec<String> = header.iter().map(|c| c.to_ascii_lowercase()).collect();
    if names != ["id", "x", "y"] {
        return Err(bad(path, "expected header id,x,y"));
    }
    let mut out = Vec::with_capacity(rows.len() - 1);
    for (r, record) in rows.iter().enumerate().skip(1) {
        expect_width(path, r + 1, record, 3)?;
        let id = parse_id(path, &format!("row {}", r + 1), &record[0])?;
        let x = parse_real(path, &format!("row {} column x", r + 1), &record[1])?;
        let y = parse_real(path, &format!("row {} column y", r + 1), &record[2])?;
        out.push((id, GeoPoint::new(x, y)?));
    }
    Ok(out)
}

/// `origin,dest,flow` rows, one directed flow each.
pub fn read_od_csv(path: &Path) -> Result<Vec<(i64, i64, f64)>> {
    let rows = records(path)?;
    let header = rows
        .first()
        .ok_or_else(|| bad(path, "empty file"))?;
    let names: Vec<String> = header.iter().map(|c| c.to_ascii_lowercase()).collect();
    if names != ["origin", "dest", "flow"] {
        return Err(bad(path, "expected header origin,dest,flow"));
    }
    let mut out = Vec::with_capacity(rows.len() - 1);
    for (r, record) in rows.iter().enumerate().skip(1) {
        expect_width(path, r + 1, record, 3)?;
        let origin = parse_id(path, &format!("row {} origin", r + 1), &record[0])?;
        let dest = parse_id(path, &format!("row {} dest", r + 1), &record[1])?;
        let flow = parse_real(path, &format!("row {} flow", r + 1), &record[2])?;
        out.push((origin, dest, flow));
    }
    Ok(out)
}

/// A 0/1 adjacency matrix. When the top-left cell is empty or not a
/// number the first row and column are read as ids (and must agree);
/// otherwise the whole body is the matrix and ids run 0..n-1.
pub fn read_adjacency_csv(path: &Path) -> Result<AdjacencyMatrix> {
    let rows = records(path)?;
    let first = rows
        .first()
        .ok_or_else(|| bad(path, "empty file"))?;
    let corner = first.get(0).unwrap_or("");
    let with_header = corner.is_empty() || corner.parse::<f64>().is_err();

    if with_header {
        let ids: Vec<i64> = first
            .iter()
            .skip(1)
            .enumerate()
            .map(|(i, cell)| parse_id(path, &format!("header column {}", i + 2), cell))
            .collect::<Result<_>>()?;
        let n = ids.len();
        if rows.len() != n + 1 {
            return Err(bad(
                path,
                format!("{} data rows for {n} header ids", rows.len() - 1),
            ));
        }
        let mut body = Vec::with_capacity(n);
        for (r, record) in rows.iter().enumerate().skip(1) {
            expect_width(path, r + 1, record, n + 1)?;
            let row_id = parse_id(path, &format!("row {}", r + 1), &record[0])?;
            if row_id != ids[r - 1] {
                return Err(bad(
                    path,
                    format!(
                        "row id {row_id} does not match column id {} at position {}",
                        ids[r - 1],
                        r
                    ),
                ));
            }
            let mut entries = Vec::with_capacity(n);
            for (c, cell) in record.iter().skip(1).enumerate() {
                entries.push(parse_real(
                    path,
                    &format!("row {} column {}", r + 1, c + 2),
                    cell,
                )?);
            }
            body.push(entries);
        }
        AdjacencyMatrix::validate(&body, ids)
    } else {
        let n = rows.len();
        let mut body = Vec::with_capacity(n);
        for (r, record) in rows.iter().enumerate() {
            expect_width(path, r + 1, record, n)?;
            let mut entries = Vec::with_capacity(n);
            for (c, cell) in record.iter().enumerate() {
                entries.push(parse_real(
                    path,
                    &format!("row {} column {}", r + 1, c + 1),
                    cell,
                )?);
            }
            body.push(entries);
        }
        AdjacencyMatrix::validate(&body, (0..n as i64).collect())
    }
}

/// Join a series file with a locations file on id. Locations without a
/// series are ignored; a series without a location is an error.
pub fn load_time_series(series_path: &Path, locations_path: &Path) -> Result<TimeSeriesSet> {
    let series = read_series_csv(series_path)?;
    let locations: std::collections::BTreeMap<i64, GeoPoint> =
        read_locations_csv(locations_path)?.into_iter().collect();
    let mut entries = Vec::with_capacity(series.len());
    for (id, values) in series {
        let location = *locations.get(&id).ok_or_else(|| {
            bad(locations_path, format!("no location for series id {id}"))
        })?;
        entries.push((id, location, values));
    }
    TimeSeriesSet::new(entries)
}

/// Join an OD flow file with a zones file on id.
pub fn load_od_matrix(od_path: &Path, zones_path: &Path) -> Result<ODMatrix> {
    let zones = read_locations_csv(zones_path)?;
    let entries = read_od_csv(od_path)?;
    ODMatrix::new(zones, &entries)
}
