//! Coordinates, a small WKT subset, centroids and the two distance metrics
//! used by the pipeline.
//!
//! Two distances coexist on purpose. [`degree_distance`] is the planar
//! Euclidean distance in degree space and is what the `fsq_osm_distance`
//! output column stores. [`haversine_m`] is the great-circle distance in
//! meters on a sphere of radius [`EARTH_RADIUS_M`] and drives the join
//! radius and the graph edge weights.

use std::fmt;

use thiserror::Error;

/// Mean Earth radius used for every great-circle computation.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters spanned by one degree of latitude on the [`EARTH_RADIUS_M`] sphere.
pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    OutOfRange { lat: f64, lon: f64 },
    #[error("WKT parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("unsupported WKT geometry type `{0}` (only POINT, LINESTRING and POLYGON)")]
    Unsupported(String),
    #[error("invalid geometry: {0}")]
    Invalid(String),
}

/// A WGS 84 latitude/longitude pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    /// Rejects non-finite values and anything outside `[-90, 90] x [-180, 180]`.
    /// Negative zero is stored as positive zero.
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::OutOfRange { lat, lon });
        }
        Ok(Self {
            lat: lat + 0.0,
            lon: lon + 0.0,
        })
    }

    #[inline]
    pub fn lat(&self) -> f64 {
        self.lat
    }

    #[inline]
    pub fn lon(&self) -> f64 {
        self.lon
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(GeoPoint),
    LineString(Vec<GeoPoint>),
    /// Single exterior ring, explicitly closed.
    Polygon(Vec<GeoPoint>),
}

impl Geometry {
    pub fn line_string(vertices: Vec<GeoPoint>) -> Result<Self, GeoError> {
        if vertices.len() < 2 {
            return Err(GeoError::Invalid(format!(
                "LINESTRING needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        Ok(Geometry::LineString(vertices))
    }

    pub fn polygon(ring: Vec<GeoPoint>) -> Result<Self, GeoError> {
        if ring.len() < 4 {
            return Err(GeoError::Invalid(format!(
                "POLYGON ring needs at least 4 vertices, got {}",
                ring.len()
            )));
        }
        if ring.first() != ring.last() {
            return Err(GeoError::Invalid("POLYGON ring is not closed".into()));
        }
        Ok(Geometry::Polygon(ring))
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        match self {
            Geometry::Point(p) => std::slice::from_ref(p),
            Geometry::LineString(v) | Geometry::Polygon(v) => v,
        }
    }
}

/// Planar Euclidean distance in degree space, `sqrt(dlat^2 + dlon^2)`.
pub fn degree_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    (a.lat - b.lat).hypot(a.lon - b.lon)
}

/// Great-circle distance in meters (haversine formula).
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let half_dphi = (phi2 - phi1) / 2.0;
    let half_dlambda = (b.lon - a.lon).to_radians() / 2.0;
    let h = half_dphi.sin().powi(2) + phi1.cos() * phi2.cos() * half_dlambda.sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Representative point of a geometry, computed in planar degree space.
///
/// Lines use the length-weighted mean of segment midpoints, polygons the
/// shoelace area centroid. Zero-length lines and zero-area rings fall back
/// to the vertex mean (the closing vertex of a ring is counted once).
pub fn centroid(geom: &Geometry) -> GeoPoint {
    match geom {
        Geometry::Point(p) => *p,
        Geometry::LineString(v) => {
            let (mut sx, mut sy, mut total) = (0.0, 0.0, 0.0);
            for w in v.windows(2) {
                let len = degree_distance(w[0], w[1]);
                sx += len * (w[0].lon + w[1].lon) / 2.0;
                sy += len * (w[0].lat + w[1].lat) / 2.0;
                total += len;
            }
            if total > 0.0 {
                clamp_to_bbox(v, sy / total, sx / total)
            } else {
                vertex_mean(v)
            }
        }
        Geometry::Polygon(ring) => {
            // Shift to the first vertex so large coordinates don't swamp the cross products.
            let (x0, y0) = (ring[0].lon, ring[0].lat);
            let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
            for w in ring.windows(2) {
                let (x1, y1) = (w[0].lon - x0, w[0].lat - y0);
                let (x2, y2) = (w[1].lon - x0, w[1].lat - y0);
                let cross = x1 * y2 - x2 * y1;
                a2 += cross;
                cx += (x1 + x2) * cross;
                cy += (y1 + y2) * cross;
            }
            if a2 != 0.0 && a2.is_finite() {
                clamp_to_bbox(ring, y0 + cy / (3.0 * a2), x0 + cx / (3.0 * a2))
            } else {
                vertex_mean(&ring[..ring.len() - 1])
            }
        }
    }
}

fn vertex_mean(v: &[GeoPoint]) -> GeoPoint {
    let n = v.len() as f64;
    let lat = v.iter().map(|p| p.lat).sum::<f64>() / n;
    let lon = v.iter().map(|p| p.lon).sum::<f64>() / n;
    clamp_to_bbox(v, lat, lon)
}

// Rounding can push a mean a few ulps past the extreme vertex.
fn clamp_to_bbox(v: &[GeoPoint], lat: f64, lon: f64) -> GeoPoint {
    let (mut lo_lat, mut hi_lat, mut lo_lon, mut hi_lon) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in v {
        lo_lat = lo_lat.min(p.lat);
        hi_lat = hi_lat.max(p.lat);
        lo_lon = lo_lon.min(p.lon);
        hi_lon = hi_lon.max(p.lon);
    }
    GeoPoint {
        lat: lat.clamp(lo_lat, hi_lat) + 0.0,
        lon: lon.clamp(lo_lon, hi_lon) + 0.0,
    }
}

/// Formats a coordinate with at most 12 significant digits, no exponent.
pub fn format_coord(v: f64) -> String {
    let rounded: f64 = format!("{v:.11e}").parse().expect("float formatting round-trips");
    format!("{}", rounded + 0.0)
}

/// Hex-encoded little-endian EWKB of a point with SRID 4326, the textual
/// form PostGIS prints for a `geometry(Point, 4326)` value.
pub fn point_ewkb_hex(p: GeoPoint) -> String {
    let mut bytes = Vec::with_capacity(25);
    bytes.push(1u8);
    bytes.extend_from_slice(&0x2000_0001u32.to_le_bytes());
    bytes.extend_from_slice(&4326u32.to_le_bytes());
    bytes.extend_from_slice(&p.lon.to_le_bytes());
    bytes.extend_from_slice(&p.lat.to_le_bytes());
    bytes.iter().map(|b| format!("{b:02X}")).collect()
}

/// Serializes to WKT, lon-first.
pub fn format_wkt(geom: &Geometry) -> String {
    fn coords(v: &[GeoPoint]) -> String {
        v.iter()
            .map(|p| format!("{} {}", format_coord(p.lon), format_coord(p.lat)))
            .collect::<Vec<_>>()
            .join(", ")
    }
    match geom {
        Geometry::Point(p) => format!("POINT({} {})", format_coord(p.lon), format_coord(p.lat)),
        Geometry::LineString(v) => format!("LINESTRING({})", coords(v)),
        Geometry::Polygon(v) => format!("POLYGON(({}))", coords(v)),
    }
}

/// Parses `POINT(lon lat)`, `LINESTRING(lon lat, ...)` or `POLYGON((lon lat, ...))`.
pub fn parse_wkt(text: &str) -> Result<Geometry, GeoError> {
    let mut p = WktParser { src: text, pos: 0 };
    p.skip_ws();
    let start = p.pos;
    let keyword = p.word();
    if keyword.is_empty() {
        return Err(p.error("expected geometry type"));
    }
    let geom = match keyword.to_ascii_uppercase().as_str() {
        "POINT" => {
            p.expect('(')?;
            let pt = p.coordinate()?;
            p.expect(')')?;
            Geometry::Point(pt)
        }
        "LINESTRING" => {
            p.expect('(')?;
            let v = p.coordinate_list()?;
            p.expect(')')?;
            Geometry::line_string(v)?
        }
        "POLYGON" => {
            p.expect('(')?;
            p.expect('(')?;
            let v = p.coordinate_list()?;
            p.expect(')')?;
            p.skip_ws();
            if p.peek() == Some(',') {
                return Err(GeoError::Unsupported("POLYGON with interior rings".into()));
            }
            p.expect(')')?;
            Geometry::polygon(v)?
        }
        other => {
            let upper = other.to_ascii_uppercase();
            if matches!(
                upper.as_str(),
                "MULTIPOINT" | "MULTILINESTRING" | "MULTIPOLYGON" | "GEOMETRYCOLLECTION"
            ) {
                return Err(GeoError::Unsupported(upper));
            }
            return Err(GeoError::Parse {
                position: start,
                message: format!("unknown geometry type `{other}`"),
            });
        }
    };
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(geom)
}

struct WktParser<'a> {
    src: &'a str,
    pos: usize,
}

impl WktParser<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek().filter(|c| c.is_whitespace()) {
            self.pos += c.len_utf8();
        }
    }

    fn word(&mut self) -> &str {
        let start = self.pos;
        while let Some(c) = self.peek().filter(|c| c.is_ascii_alphabetic()) {
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn error(&self, message: &str) -> GeoError {
        let found = match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        };
        GeoError::Parse {
            position: self.pos,
            message: format!("{message}, found {found}"),
        }
    }

    fn expect(&mut self, want: char) -> Result<(), GeoError> {
        self.skip_ws();
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{want}`")))
        }
    }

    fn number(&mut self) -> Result<f64, GeoError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self
            .peek()
            .filter(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        {
            self.pos += c.len_utf8();
        }
        let tok = &self.src[start..self.pos];
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                Err(self.error("expected a decimal number"))
            }
        }
    }

    fn coordinate(&mut self) -> Result<GeoPoint, GeoError> {
        let lon = self.number()?;
        let lat = self.number()?;
        self.skip_ws();
        if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.') {
            return Err(GeoError::Unsupported("coordinates with Z/M dimensions".into()));
        }
        GeoPoint::new(lat, lon)
    }

    fn coordinate_list(&mut self) -> Result<Vec<GeoPoint>, GeoError> {
        let mut out = vec![self.coordinate()?];
        loop {
            self.skip_ws();
            if self.peek() != Some(',') {
                return Ok(out);
            }
            self.pos += 1;
            out.push(self.coordinate()?);
        }
    }
}
