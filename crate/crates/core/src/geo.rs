//! Flat-earth, north-referenced pixel geolocation.
//!
//! Offsets from the image center are scaled by the ground sample distance,
//! rotated by the platform heading into east/north meters, and converted to
//! degrees with a fixed 111 320 m per degree of latitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::Event;
use crate::model::GeoMeta;

pub const METERS_PER_DEGREE: f64 = 111_320.0;

/// Beyond this latitude the local-tangent model is refused.
pub const MAX_ABS_LATITUDE: f64 = 89.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

fn check_latitude(g: &GeoMeta) -> Result<()> {
    if !(g.center_lat.abs() < MAX_ABS_LATITUDE) {
        return Err(Error::invalid(
            "geo.center_lat",
            format!("|{}| >= {MAX_ABS_LATITUDE}: flat-earth model invalid near the poles", g.center_lat),
        ));
    }
    Ok(())
}

fn wrap_lon(lon: f64) -> f64 {
    if (-180.0..=180.0).contains(&lon) {
        lon
    } else {
        (lon + 180.0).rem_euclid(360.0) - 180.0
    }
}

pub fn pixel_to_geo(g: &GeoMeta, frame_w: f64, frame_h: f64, px: (f64, f64)) -> Result<GeoPoint> {
    check_latitude(g)?;
    let e = (px.0 - frame_w / 2.0) * g.gsd_m_per_px;
    let n = (frame_h / 2.0 - px.1) * g.gsd_m_per_px;
    let (sin, cos) = g.heading_deg.to_radians().sin_cos();
    let east = e * cos + n * sin;
    let north = n * cos - e * sin;
    let lat = g.center_lat + north / METERS_PER_DEGREE;
    let lon = g.center_lon + east / (METERS_PER_DEGREE * g.center_lat.to_radians().cos());
    Ok(GeoPoint {
        lat,
        lon: wrap_lon(lon),
    })
}

/// Inverse of [`pixel_to_geo`].
pub fn geo_to_pixel(g: &GeoMeta, frame_w: f64, frame_h: f64, p: GeoPoint) -> Result<(f64, f64)> {
    check_latitude(g)?;
    let north = (p.lat - g.center_lat) * METERS_PER_DEGREE;
    let dlon = wrap_lon(p.lon - g.center_lon);
    let east = dlon * METERS_PER_DEGREE * g.center_lat.to_radians().cos();
    let (sin, cos) = g.heading_deg.to_radians().sin_cos();
    // transpose of the heading rotation
    let e = east * cos - north * sin;
    let n = east * sin + north * cos;
    Ok((
        frame_w / 2.0 + e / g.gsd_m_per_px,
        frame_h / 2.0 - n / g.gsd_m_per_px,
    ))
}

/// Attaches a location at the anchor box center. Without metadata, or when
/// the model refuses the latitude, the event stays ungeolocated.
pub fn geolocate_event(mut ev: Event, g: Option<&GeoMeta>, frame_w: f64, frame_h: f64) -> Event {
    ev.geo = g.and_then(|g| pixel_to_geo(g, frame_w, frame_h, ev.anchor_bbox.center()).ok());
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(heading_deg: f64) -> GeoMeta {
        GeoMeta {
            center_lat: 0.0,
            center_lon: 10.0,
            gsd_m_per_px: 0.5,
            heading_deg,
        }
    }

    #[test]
    fn center_is_exact() {
        let g = GeoMeta { center_lat: 38.9, center_lon: -77.03, gsd_m_per_px: 0.3, heading_deg: 123.0 };
        let p = pixel_to_geo(&g, 1280.0, 720.0, (640.0, 360.0)).unwrap();
        assert_eq!((p.lat, p.lon), (38.9, -77.03));
    }

    #[test]
    fn east_offset_north_up() {
        let p = pixel_to_geo(&meta(0.0), 1000.0, 1000.0, (600.0, 500.0)).unwrap();
        assert_eq!(p.lat, 0.0);
        assert!((p.lon - (10.0 + 4.4915e-4)).abs() < 1e-8);
        assert!((p.lon - 10.0 - 50.0 / METERS_PER_DEGREE).abs() < 1e-15);
    }

    #[test]
    fn heading_east_turns_image_right_south() {
        let p = pixel_to_geo(&meta(90.0), 1000.0, 1000.0, (600.0, 500.0)).unwrap();
        assert!((p.lat + 4.4915e-4).abs() < 1e-8);
        assert!((p.lon - 10.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_polar_latitudes() {
        let g = GeoMeta { center_lat: 89.95, ..meta(0.0) };
        assert!(pixel_to_geo(&g, 100.0, 100.0, (0.0, 0.0)).is_err());
        assert!(geo_to_pixel(&g, 100.0, 100.0, GeoPoint { lat: 0.0, lon: 0.0 }).is_err());
    }

    #[test]
    fn round_trip_near_antimeridian() {
        let g = GeoMeta { center_lat: 10.0, center_lon: 179.9999, gsd_m_per_px: 1.0, heading_deg: 30.0 };
        let p = pixel_to_geo(&g, 1000.0, 1000.0, (990.0, 20.0)).unwrap();
        assert!(p.lon <= 180.0 && p.lon >= -180.0);
        let (x, y) = geo_to_pixel(&g, 1000.0, 1000.0, p).unwrap();
        assert!((x - 990.0).abs() < 1e-4 && (y - 20.0).abs() < 1e-4);
    }
}
