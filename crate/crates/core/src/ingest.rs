//! Photo and location file parsing, plus the great-circle radius join.
//!
//! Both inputs are UTF-8 CSV with a mandatory header row. LF and CRLF line
//! endings are accepted and fields may use RFC-4180 quoting.

use std::collections::HashSet;
use std::io::Read;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

pub const PHOTO_HEADER: [&str; 7] = [
    "photo_id",
    "owner_id",
    "latitude",
    "longitude",
    "views",
    "favorites",
    "comments",
];

pub const LOCATION_HEADER: [&str; 5] = ["location_id", "name", "latitude", "longitude", "rating"];

/// A WGS84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidParam(format!("latitude {lat} outside [-90, 90]")));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidParam(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoMeta {
    pub photo_id: String,
    pub owner_id: String,
    pub point: GeoPoint,
    pub views: u64,
    pub favorites: u64,
    pub comments: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRecord {
    pub location_id: String,
    pub name: String,
    pub point: GeoPoint,
    pub label: ClassLabel,
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let half_dlat = (lat2 - lat1) / 2.0;
    let half_dlon = (b.lon - a.lon).to_radians() / 2.0;
    let h = half_dlat.sin().powi(2) + lat1.cos() * lat2.cos() * half_dlon.sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

fn csv_reader<R: Read>(input: R, expected: &[&str]) -> Result<csv::Reader<R>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers()?;
    if headers.is_empty() && expected.is_empty() {
        return Ok(reader);
    }
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), found.join(",")),
        });
    }
    Ok(reader)
}

struct Row<'r> {
    record: &'r csv::StringRecord,
    line: u64,
}

impl Row<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn field(&self, index: usize) -> &str {
        self.record.get(index).unwrap_or("").trim()
    }

    fn count(&self, index: usize, name: &str) -> Result<u64> {
        let raw = self.field(index);
        raw.parse::<u64>()
            .map_err(|_| self.err(format!("{name} must be a non-negative integer, got `{raw}`")))
    }

    fn real(&self, index: usize, name: &str) -> Result<f64> {
        let raw = self.field(index);
        raw.parse::<f64>()
            .map_err(|_| self.err(format!("{name} is not a number: `{raw}`")))
    }

    fn point(&self, lat_index: usize) -> Result<GeoPoint> {
        let lat = self.real(lat_index, "latitude")?;
        let lon = self.real(lat_index + 1, "longitude")?;
        GeoPoint::new(lat, lon).map_err(|e| self.err(e.to_string()))
    }

    fn id(&self, index: usize, name: &str) -> Result<String> {
        let raw = self.field(index);
        if raw.is_empty() {
            return Err(self.err(format!("{name} is empty")));
        }
        Ok(raw.to_string())
    }
}

fn for_each_row<R: Read>(input: R, header: &[&str], mut f: impl FnMut(Row<'_>) -> Result<()>) -> Result<()> {
    let mut reader = csv_reader(input, header)?;
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(Error::Parse {
                    line,
                    message: e.to_string(),
                });
            }
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0).is_some_and(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        f(Row { record: &record, line })?;
    }
    Ok(())
}

/// Parses a photo metadata CSV, preserving file order.
pub fn parse_photos<R: Read>(input: R) -> Result<Vec<PhotoMeta>> {
    let mut photos = Vec::new();
    let mut seen = HashSet::new();
    for_each_row(input, &PHOTO_HEADER, |row| {
        let photo = PhotoMeta {
            photo_id: row.id(0, "photo_id")?,
            owner_id: row.id(1, "owner_id")?,
            point: row.point(2)?,
            views: row.count(4, "views")?,
            favorites: row.count(5, "favorites")?,
            comments: row.count(6, "comments")?,
        };
        if !seen.insert(photo.photo_id.clone()) {
            return Err(Error::DuplicateId {
                kind: "photo",
                id: photo.photo_id,
                line: row.line,
            });
        }
        photos.push(photo);
        Ok(())
    })?;
    Ok(photos)
}

/// Parses a location CSV, validating each rating against the class grid.
pub fn parse_locations<R: Read>(input: R) -> Result<Vec<LocationRecord>> {
    let mut locations = Vec::new();
    let mut seen = HashSet::new();
    for_each_row(input, &LOCATION_HEADER, |row| {
        let label: ClassLabel = row.field(4).parse().map_err(|e: Error| row.err(e.to_string()))?;
        let location = LocationRecord {
            location_id: row.id(0, "location_id")?,
            name: row.field(1).to_string(),
            point: row.point(2)?,
            label,
        };
        if !seen.insert(location.location_id.clone()) {
            return Err(Error::DuplicateId {
                kind: "location",
                id: location.location_id,
                line: row.line,
            });
        }
        locations.push(location);
        Ok(())
    })?;
    Ok(locations)
}

/// Photos per location id, in location input order.
pub type Assignments<'a> = IndexMap<String, Vec<&'a PhotoMeta>>;

/// Assigns every photo to each location whose closed radius disk contains it.
///
/// A photo may land under several locations. Locations without photos map to
/// an empty list, and photos keep their input order within each location.
pub fn assign_photos<'a>(
    photos: &'a [PhotoMeta],
    locations: &[LocationRecord],
    radius_m: f64,
) -> Result<Assignments<'a>> {
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(Error::InvalidParam(format!("radius must be positive, got {radius_m}")));
    }
    // Meridional arc never exceeds the great-circle distance.
    let max_dlat = (radius_m / EARTH_RADIUS_M).to_degrees();
    let lists: Vec<Vec<&PhotoMeta>> = locations
        .par_iter()
        .map(|loc| {
            photos
                .iter()
                .filter(|p| (p.point.lat - loc.point.lat).abs() <= max_dlat * (1.0 + 1e-9))
                .filter(|p| haversine_m(p.point, loc.point) <= radius_m)
                .collect()
        })
        .collect();
    Ok(locations.iter().map(|l| l.location_id.clone()).zip(lists).collect())
}
