use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An aesthetic rating class on the half-point grid 2.0..=5.0.
///
/// Stored as a count of half points so ordering and equality are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassLabel(u8);

impl ClassLabel {
    pub const MIN_HALF_POINTS: u8 = 4;
    pub const MAX_HALF_POINTS: u8 = 10;

    /// All seven admissible ratings in ascending order.
    pub fn all() -> impl Iterator<Item = ClassLabel> {
        (Self::MIN_HALF_POINTS..=Self::MAX_HALF_POINTS).map(ClassLabel)
    }

    pub fn from_rating(rating: f64) -> Result<Self> {
        let doubled = rating * 2.0;
        if !doubled.is_finite() || doubled.fract() != 0.0 {
            return Err(Error::InvalidRating(rating.to_string()));
        }
        let halves = doubled as i64;
        if !(Self::MIN_HALF_POINTS as i64..=Self::MAX_HALF_POINTS as i64).contains(&halves) {
            return Err(Error::InvalidRating(rating.to_string()));
        }
        Ok(ClassLabel(halves as u8))
    }

    pub fn rating(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// Half-point code, usable as a stable small integer id.
    pub fn code(self) -> u8 {
        self.0
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.rating())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let value: f64 = s.trim().parse().map_err(|_| Error::InvalidRating(s.to_string()))?;
        ClassLabel::from_rating(value)
    }
}

impl Serialize for ClassLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.rating())
    }
}

impl<'de> Deserialize<'de> for ClassLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rating = f64::deserialize(deserializer)?;
        ClassLabel::from_rating(rating).map_err(serde::de::Error::custom)
    }
}
