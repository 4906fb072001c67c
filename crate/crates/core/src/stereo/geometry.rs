use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewingGeometry {
    pub interpupillary_distance_m: f64,
    pub screen_distance_m: f64,
}

impl Default for ViewingGeometry {
    fn default() -> Self {
        Self {
            interpupillary_distance_m: 0.06,
            screen_distance_m: 1.0,
        }
    }
}

impl ViewingGeometry {
    pub fn new(interpupillary_distance_m: f64, screen_distance_m: f64) -> Result<Self> {
        let g = Self {
            interpupillary_distance_m,
            screen_distance_m,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.interpupillary_distance_m > 0.0 && self.screen_distance_m > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "distances must be positive: {self:?}"
            )));
        }
        if self.screen_distance_m <= self.interpupillary_distance_m {
            return Err(Error::InvalidGeometry(format!(
                "screen distance {} m must exceed interpupillary distance {} m",
                self.screen_distance_m, self.interpupillary_distance_m
            )));
        }
        Ok(())
    }
}

/// Angle between the two lines of sight fixating a point `distance_m` away,
/// in radians.
pub fn vergence_angle(distance_m: f64, geometry: &ViewingGeometry) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::NonPositiveDistance(distance_m));
    }
    Ok(2.0 * (geometry.interpupillary_distance_m / (2.0 * distance_m)).atan())
}

/// Signed separation of the left and right images on the screen plane for an
/// object at `object_depth_m`. Negative (crossed) in front of the screen,
/// positive (uncrossed) behind it.
pub fn screen_disparity(object_depth_m: f64, geometry: &ViewingGeometry) -> Result<f64> {
    if !(object_depth_m > 0.0) {
        return Err(Error::NonPositiveDistance(object_depth_m));
    }
    let ipd = geometry.interpupillary_distance_m;
    if object_depth_m.is_infinite() {
        return Ok(ipd);
    }
    Ok(ipd * (object_depth_m - geometry.screen_distance_m) / object_depth_m)
}

/// Closed depth interval in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthRange {
    pub min_m: f64,
    pub max_m: f64,
}

impl DepthRange {
    pub const fn new(min_m: f64, max_m: f64) -> Self {
        Self { min_m, max_m }
    }

    pub fn contains(&self, depth_m: f64) -> bool {
        depth_m >= self.min_m && depth_m <= self.max_m
    }

    fn overlaps(&self, other: &DepthRange) -> bool {
        self.min_m <= other.max_m && other.min_m <= self.max_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthClass {
    ComfortClose,
    ComfortFar,
    NoComfortClose,
    NoComfortFar,
    Flat,
    OutOfProtocol,
}

/// Apparent-depth ranges inside and outside the zone of comfort for a viewer
/// one meter from the screen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortZoneSpec {
    pub comfort_close: DepthRange,
    pub comfort_far: DepthRange,
    pub no_comfort_close: DepthRange,
    pub no_comfort_far: DepthRange,
    pub flat_depth_m: f64,
}

impl Default for ComfortZoneSpec {
    fn default() -> Self {
        Self {
            comfort_close: DepthRange::new(0.75, 0.85),
            comfort_far: DepthRange::new(1.3, 1.6),
            no_comfort_close: DepthRange::new(0.35, 0.45),
            no_comfort_far: DepthRange::new(4.0, 6.0),
            flat_depth_m: 1.0,
        }
    }
}

impl ComfortZoneSpec {
    pub fn ranges(&self) -> [(DepthClass, DepthRange); 4] {
        [
            (DepthClass::ComfortClose, self.comfort_close),
            (DepthClass::ComfortFar, self.comfort_far),
            (DepthClass::NoComfortClose, self.no_comfort_close),
            (DepthClass::NoComfortFar, self.no_comfort_far),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = self.ranges();
        for (i, (ca, a)) in ranges.iter().enumerate() {
            if !(a.min_m > 0.0 && a.min_m <= a.max_m) {
                return Err(Error::InvalidGeometry(format!("bad range {ca:?}: {a:?}")));
            }
            if a.contains(self.flat_depth_m) {
                return Err(Error::InvalidGeometry(format!("flat depth inside {ca:?}")));
            }
            for (cb, b) in &ranges[i + 1..] {
                if a.overlaps(b) {
                    return Err(Error::InvalidGeometry(format!("{ca:?} overlaps {cb:?}")));
                }
            }
        }
        Ok(())
    }
}

pub fn classify_depth(depth_m: f64, spec: &ComfortZoneSpec) -> Result<DepthClass> {
    if !(depth_m > 0.0) {
        return Err(Error::NonPositiveDistance(depth_m));
    }
    if (depth_m - spec.flat_depth_m).abs() <= 1e-9 {
        return Ok(DepthClass::Flat);
    }
    Ok(spec
        .ranges()
        .iter()
        .find(|(_, r)| r.contains(depth_m))
        .map(|(c, _)| *c)
        .unwrap_or(DepthClass::OutOfProtocol))
}
