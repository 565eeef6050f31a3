//! Seeded synthetic two-source fixtures with known ground truth.
//!
//! [`synthetic`] lays out 200 Foursquare POIs on a jittered grid around
//! Atlanta, roughly 1 km apart so no two sites can interact at the join
//! radius. Each site is one of:
//!
//! * a true pair: OSM partner 5-45 m away with a lightly edited name
//!   (Levenshtein similarity >= 0.5),
//! * a near miss: same name, but the partner sits 60-200 m away,
//! * a name mismatch: partner 5-45 m away under an unrelated name
//!   (Levenshtein similarity < 0.5),
//! * a lone POI with no OSM partner. Some of these carry OSM decoys that the
//!   reader must drop: highway features, nameless features and rows with
//!   broken geometry.
//!
//! OSM partners use a mix of explicit coordinates, polygon footprints and
//! line geometries so centroid derivation is exercised.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geo::{format_wkt, haversine_m, GeoPoint, Geometry, EARTH_RADIUS_M};
use crate::similarity::levenshtein_similarity;

pub const FIXTURE_SEED: u64 = 20_251_016;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    True,
    NearMiss,
    NameMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedPair {
    pub fsq_id: String,
    pub osm_id: String,
    pub kind: PairKind,
    pub distance_m: f64,
    pub fsq_name: String,
    pub osm_name: String,
}

#[derive(Debug, Clone)]
pub struct SyntheticFixture {
    pub fsq_csv: String,
    pub osm_csv: String,
    pub planted: Vec<PlantedPair>,
    pub fsq_count: usize,
    pub osm_rows: usize,
}

impl SyntheticFixture {
    pub fn true_pairs(&self) -> impl Iterator<Item = &PlantedPair> {
        self.planted.iter().filter(|p| p.kind == PairKind::True)
    }

    /// Writes `fsq.csv` and `osm.csv` into `dir`, returning their paths.
    pub fn write_to(&self, dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
        let fsq = dir.join("fsq.csv");
        let osm = dir.join("osm.csv");
        fs::write(&fsq, &self.fsq_csv)?;
        fs::write(&osm, &self.osm_csv)?;
        Ok((fsq, osm))
    }
}

const FSQ_HEADER: &str = "fsq_place_id,name,latitude,longitude,address,locality,region,postcode,country,tel,website,category_labels,date_created";
const OSM_HEADER: &str = "osm_id,class,type,name,address,extratags,geometry,latitude,longitude";

const FIRST: [&str; 20] = [
    "Golden",
    "Blue",
    "Peachtree",
    "Magnolia",
    "Red",
    "Silver",
    "Piedmont",
    "Old",
    "Little",
    "Grand",
    "Sunny",
    "Royal",
    "Green",
    "Copper",
    "Northside",
    "Velvet",
    "Iron",
    "Maple",
    "Crescent",
    "Harbor",
];
const SECOND: [&str; 20] = [
    "Dragon", "Oak", "Lantern", "Fox", "Bridge", "Garden", "Mill", "Anchor", "Star", "Pine", "Rooster", "Willow",
    "Sparrow", "Barrel", "Compass", "Meadow", "Tiger", "Kettle", "Orchard", "Falcon",
];
const KIND: [&str; 10] = [
    "Cafe", "Bakery", "Pharmacy", "Books", "Grill", "Hardware", "Deli", "Salon", "Market", "Tavern",
];
const UNRELATED: [&str; 12] = [
    "Quikmart",
    "Zephyr Vet",
    "Bus Depot",
    "Xerox Copy",
    "Hydrant",
    "Yoga Hut",
    "Laundromat",
    "Post Box",
    "Jiffy Lube",
    "Kwik Fix",
    "ATM",
    "Vape Zone",
];
const CLASSES: [(&str, &str); 5] = [
    ("amenity", "cafe"),
    ("shop", "bakery"),
    ("amenity", "pharmacy"),
    ("shop", "books"),
    ("amenity", "restaurant"),
];

fn hex_id(rng: &mut ChaCha8Rng) -> String {
    (0..24)
        .map(|_| char::from_digit(rng.random_range(0..16), 16).unwrap())
        .collect()
}

fn round7(v: f64) -> f64 {
    (v * 1e7).round() / 1e7
}

/// Point reached by travelling `distance_m` from `from` along `bearing` (radians).
fn destination(from: GeoPoint, bearing: f64, distance_m: f64) -> GeoPoint {
    let delta = distance_m / EARTH_RADIUS_M;
    let phi1 = from.lat().to_radians();
    let lambda1 = from.lon().to_radians();
    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * bearing.cos()).asin();
    let lambda2 = lambda1 + (bearing.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
    GeoPoint::new(round7(phi2.to_degrees()), round7(lambda2.to_degrees())).expect("small offsets stay in range")
}

// Offset partner point whose rounded distance falls inside [lo, hi].
fn offset_point(rng: &mut ChaCha8Rng, from: GeoPoint, lo: f64, hi: f64) -> (GeoPoint, f64) {
    loop {
        let bearing = rng.random_range(0.0..std::f64::consts::TAU);
        let p = destination(from, bearing, rng.random_range(lo..hi));
        let d = haversine_m(from, p);
        if (lo..=hi).contains(&d) {
            return (p, d);
        }
    }
}

fn edited_name(rng: &mut ChaCha8Rng, name: &str) -> String {
    match rng.random_range(0..6) {
        0 => name.to_uppercase(),
        1 => {
            // drop one character
            let chars: Vec<char> = name.chars().collect();
            let i = rng.random_range(0..chars.len());
            chars
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, c)| c)
                .collect()
        }
        2 => name.replacen(' ', "  ", 1),
        3 => format!("{name} LLC"),
        4 => {
            // swap two neighbors
            let mut chars: Vec<char> = name.chars().collect();
            let i = rng.random_range(0..chars.len() - 1);
            chars.swap(i, i + 1);
            chars.into_iter().collect()
        }
        _ => name.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct OsmRow<'a> {
    id: u64,
    class: (&'a str, &'a str),
    name: &'a str,
    point: GeoPoint,
}

fn push_osm(out: &mut String, rng: &mut ChaCha8Rng, row: &OsmRow<'_>) {
    let (class, kind) = row.class;
    let address = format!("\"city\"=>\"Atlanta\", \"postcode\"=>\"303{:02}\"", row.id % 100);
    let extratags = format!("\"source\"=>\"survey\", \"ref\"=>\"{}\"", row.id % 997);
    let (lat, lon) = (row.point.lat(), row.point.lon());
    let (geometry, lat_s, lon_s) = match rng.random_range(0..3) {
        0 => (
            format_wkt(&Geometry::Point(row.point)),
            lat.to_string(),
            lon.to_string(),
        ),
        1 => {
            // square footprint centered on the point
            let h = 0.00005;
            let ring = [(-h, -h), (-h, h), (h, h), (h, -h), (-h, -h)]
                .iter()
                .map(|&(dy, dx)| GeoPoint::new(lat + dy, lon + dx).unwrap())
                .collect();
            (format_wkt(&Geometry::Polygon(ring)), String::new(), String::new())
        }
        _ => {
            let h = 0.00004;
            let line = vec![
                GeoPoint::new(lat, lon - h).unwrap(),
                GeoPoint::new(lat, lon + h).unwrap(),
            ];
            (format_wkt(&Geometry::LineString(line)), String::new(), String::new())
        }
    };
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{}",
        row.id,
        class,
        kind,
        csv_field(row.name),
        csv_field(&address),
        csv_field(&extratags),
        csv_field(&geometry),
        lat_s,
        lon_s
    )
    .unwrap();
}

/// The 200-POI fixture with 80 true pairs, 40 near misses and 40 name mismatches.
pub fn synthetic(seed: u64) -> SyntheticFixture {
    const SITES: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fsq = format!("{FSQ_HEADER}\n");
    let mut osm = format!("{OSM_HEADER}\n");
    let mut planted = Vec::new();
    let mut osm_rows = 0;
    let mut next_osm_id: u64 = 100_000_000;

    // Site kinds in a shuffled but seed-determined order.
    let mut kinds: Vec<Option<PairKind>> = std::iter::repeat_n(Some(PairKind::True), 80)
        .chain(std::iter::repeat_n(Some(PairKind::NearMiss), 40))
        .chain(std::iter::repeat_n(Some(PairKind::NameMismatch), 40))
        .chain(std::iter::repeat_n(None, 40))
        .collect();
    for i in (1..kinds.len()).rev() {
        kinds.swap(i, rng.random_range(0..=i));
    }

    let mut used_names = std::collections::HashSet::new();
    for (site, kind) in kinds.into_iter().enumerate() {
        let (row, col) = (site / 20, site % 20);
        let center = GeoPoint::new(
            round7(33.70 + row as f64 * 0.010 + rng.random_range(-0.002..0.002)),
            round7(-84.45 + col as f64 * 0.012 + rng.random_range(-0.002..0.002)),
        )
        .unwrap();

        let name = loop {
            let n = format!(
                "{} {} {}",
                FIRST[rng.random_range(0..FIRST.len())],
                SECOND[rng.random_range(0..SECOND.len())],
                KIND[rng.random_range(0..KIND.len())]
            );
            if used_names.insert(n.clone()) {
                break n;
            }
        };
        let fsq_id = hex_id(&mut rng);
        writeln!(
            fsq,
            "{},{},{},{},{},Atlanta,GA,303{:02},US,(404) 555-{:04},,{},2012-0{}-1{}",
            fsq_id,
            csv_field(&name),
            center.lat(),
            center.lon(),
            csv_field(&format!("{} Main St NE", 100 + site)),
            site % 100,
            rng.random_range(0..10_000),
            csv_field(&format!("['Retail > {}']", name.rsplit(' ').next().unwrap())),
            1 + site % 9,
            site % 10
        )
        .unwrap();

        let class = CLASSES[site % CLASSES.len()];
        let Some(kind) = kind else {
            // Lone POI; every fourth one gets a decoy that the OSM reader drops.
            let decoy = match site % 4 {
                0 => Some(("highway", "residential", name.as_str(), false)),
                1 => Some(("amenity", "cafe", "", false)),
                2 => Some(("amenity", "cafe", name.as_str(), true)),
                _ => None,
            };
            if let Some((class, ty, decoy_name, broken)) = decoy {
                let (p, _) = offset_point(&mut rng, center, 5.0, 20.0);
                let geometry = if broken {
                    format!("POINT({} north)", p.lon())
                } else {
                    format_wkt(&Geometry::Point(p))
                };
                writeln!(
                    osm,
                    "{next_osm_id},{class},{ty},{},,,{},,",
                    csv_field(decoy_name),
                    csv_field(&geometry)
                )
                .unwrap();
                next_osm_id += 1;
                osm_rows += 1;
            }
            continue;
        };

        let (lo, hi) = match kind {
            PairKind::NearMiss => (60.0, 200.0),
            _ => (5.0, 45.0),
        };
        let (partner, distance_m) = offset_point(&mut rng, center, lo, hi);
        let osm_name = match kind {
            PairKind::True => loop {
                let n = edited_name(&mut rng, &name);
                if levenshtein_similarity(&name, &n).value() >= 0.5 {
                    break n;
                }
            },
            PairKind::NearMiss => name.clone(),
            PairKind::NameMismatch => loop {
                let n = UNRELATED[rng.random_range(0..UNRELATED.len())].to_string();
                if levenshtein_similarity(&name, &n).value() < 0.5 {
                    break n;
                }
            },
        };
        let osm_id = next_osm_id;
        next_osm_id += 1;
        push_osm(
            &mut osm,
            &mut rng,
            &OsmRow {
                id: osm_id,
                class,
                name: &osm_name,
                point: partner,
            },
        );
        osm_rows += 1;
        planted.push(PlantedPair {
            fsq_id,
            osm_id: osm_id.to_string(),
            kind,
            distance_m,
            fsq_name: name,
            osm_name,
        });
    }

    SyntheticFixture {
        fsq_csv: fsq,
        osm_csv: osm,
        planted,
        fsq_count: SITES,
        osm_rows,
    }
}

/// A small Nuuk fixture in which one Foursquare place ("Brugseni") has two
/// OSM counterparts within the radius, plus three singly matched places.
pub fn duplicate_fixture() -> SyntheticFixture {
    let fsq = "\
fsq_place_id,name,latitude,longitude,locality,country
4f1d2c3b4a5968778695a4b3,Brugseni,64.1814,-51.6941,Nuuk,GL
5a6b7c8d9e0f1a2b3c4d5e6f,Hotel Hans Egede,64.1755,-51.7381,Nuuk,GL
6b7c8d9e0f1a2b3c4d5e6f7a,Cafe Inuk,64.1846,-51.7222,Nuuk,GL
7c8d9e0f1a2b3c4d5e6f7a8b,Pisiffik,64.1702,-51.7105,Nuuk,GL
";
    let osm = "\
osm_id,class,type,name,address,extratags,geometry,latitude,longitude
180978036,shop,supermarket,Brugseni,,,POINT(-51.6942 64.1815),,
1913382879,shop,convenience,Brugseni Nuuk,,,\"POLYGON((-51.69405 64.18125, -51.69385 64.18125, -51.69385 64.18135, -51.69405 64.18135, -51.69405 64.18125))\",,
200000001,tourism,hotel,Hotel Hans Egede,,,POINT(-51.7380 64.1756),,
200000002,amenity,cafe,Café Inuk,,,POINT(-51.7221 64.1846),,
200000003,shop,supermarket,Pisiffik,,,POINT(-51.7104 64.1702),,
";
    let pair = |fsq_id: &str, osm_id: &str, fsq_name: &str, osm_name: &str| PlantedPair {
        fsq_id: fsq_id.into(),
        osm_id: osm_id.into(),
        kind: PairKind::True,
        distance_m: f64::NAN,
        fsq_name: fsq_name.into(),
        osm_name: osm_name.into(),
    };
    SyntheticFixture {
        fsq_csv: fsq.into(),
        osm_csv: osm.into(),
        planted: vec![
            pair("4f1d2c3b4a5968778695a4b3", "180978036", "Brugseni", "Brugseni"),
            pair("4f1d2c3b4a5968778695a4b3", "1913382879", "Brugseni", "Brugseni Nuuk"),
            pair(
                "5a6b7c8d9e0f1a2b3c4d5e6f",
                "200000001",
                "Hotel Hans Egede",
                "Hotel Hans Egede",
            ),
            pair("6b7c8d9e0f1a2b3c4d5e6f7a", "200000002", "Cafe Inuk", "Café Inuk"),
            pair("7c8d9e0f1a2b3c4d5e6f7a8b", "200000003", "Pisiffik", "Pisiffik"),
        ],
        fsq_count: 4,
        osm_rows: 5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = synthetic(7);
        let b = synthetic(7);
        assert_eq!(a.fsq_csv, b.fsq_csv);
        assert_eq!(a.osm_csv, b.osm_csv);
        assert_ne!(a.fsq_csv, synthetic(8).fsq_csv);
    }

    #[test]
    fn planted_counts() {
        let f = synthetic(FIXTURE_SEED);
        let count = |k| f.planted.iter().filter(|p| p.kind == k).count();
        assert_eq!(count(PairKind::True), 80);
        assert_eq!(count(PairKind::NearMiss), 40);
        assert_eq!(count(PairKind::NameMismatch), 40);
        assert_eq!(f.fsq_csv.lines().count(), 201);
        for p in &f.planted {
            let lev = levenshtein_similarity(&p.fsq_name, &p.osm_name).value();
            match p.kind {
                PairKind::True => assert!(p.distance_m < 50.0 && lev >= 0.5, "{p:?}"),
                PairKind::NearMiss => assert!((60.0..=200.0).contains(&p.distance_m)),
                PairKind::NameMismatch => assert!(p.distance_m < 50.0 && lev < 0.5, "{p:?}"),
            }
        }
    }
}
