//! Uniform-grid spatial index with exact radius and k-nearest-neighbor queries.
//!
//! Points are bucketed by `(floor(lon / cell), floor(lat / cell))`. Queries
//! compute a conservative cell window from the spherical geometry of the
//! search region and then filter candidates with [`haversine_m`], so results
//! are identical to a brute-force scan. Ties on distance are broken by
//! ascending ordinal.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::geo::{haversine_m, GeoPoint, EARTH_RADIUS_M};

/// Caller-assigned identifier of an indexed point (typically its input position).
pub type Ordinal = usize;

/// Approximate meters per degree used to size grid cells.
const CELL_METERS_PER_DEGREE: f64 = 111_195.0;

/// Relative slack added to query windows so rounding never drops a boundary point.
const WINDOW_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("index radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("cell size must be positive and finite, got {0}")]
    InvalidCellSize(f64),
    #[error("query radius {requested} m exceeds the {built} m radius the index was built for")]
    RadiusExceedsBuild { requested: f64, built: f64 },
}

/// Exact neighbor queries over a fixed point set.
pub trait NeighborIndex {
    /// Points with `haversine_m <= radius_m`, sorted by distance then ordinal.
    fn radius_query(&self, center: GeoPoint, radius_m: f64) -> Result<Vec<(Ordinal, f64)>, IndexError>;

    /// The `k` nearest points (excluding `exclude`), sorted by distance then ordinal.
    fn knn_query(&self, center: GeoPoint, k: usize, exclude: Option<Ordinal>) -> Vec<(Ordinal, f64)>;
}

type Cell = (i64, i64);

#[derive(Debug, Clone)]
pub struct GridIndex {
    cell_deg: f64,
    radius_m: f64,
    buckets: HashMap<Cell, Vec<(Ordinal, GeoPoint)>>,
    len: usize,
    // Inclusive bounds of occupied cells: (min_col, max_col, min_row, max_row).
    extent: Option<(i64, i64, i64, i64)>,
}

/// Builds an index whose cells are sized for radius queries up to `radius_m`.
pub fn build_index<I>(points: I, radius_m: f64) -> Result<GridIndex, IndexError>
where
    I: IntoIterator<Item = (Ordinal, GeoPoint)>,
{
    if !(radius_m > 0.0 && radius_m.is_finite()) {
        return Err(IndexError::InvalidRadius(radius_m));
    }
    Ok(GridIndex::from_points(
        points,
        radius_m / CELL_METERS_PER_DEGREE,
        radius_m,
    ))
}

impl GridIndex {
    /// Builds an index with an explicit cell edge length in degrees. Radius
    /// queries are then accepted up to the equivalent distance in meters.
    pub fn with_cell_deg<I>(points: I, cell_deg: f64) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = (Ordinal, GeoPoint)>,
    {
        if !(cell_deg > 0.0 && cell_deg.is_finite()) {
            return Err(IndexError::InvalidCellSize(cell_deg));
        }
        Ok(Self::from_points(points, cell_deg, cell_deg * CELL_METERS_PER_DEGREE))
    }

    fn from_points<I>(points: I, cell_deg: f64, radius_m: f64) -> Self
    where
        I: IntoIterator<Item = (Ordinal, GeoPoint)>,
    {
        let mut index = Self {
            cell_deg,
            radius_m,
            buckets: HashMap::new(),
            len: 0,
            extent: None,
        };
        for (ordinal, p) in points {
            let (col, row) = index.cell_of(p);
            index.buckets.entry((col, row)).or_default().push((ordinal, p));
            index.len += 1;
            index.extent = Some(match index.extent {
                None => (col, col, row, row),
                Some((c0, c1, r0, r1)) => (c0.min(col), c1.max(col), r0.min(row), r1.max(row)),
            });
        }
        index
    }

    pub fn cell_deg(&self) -> f64 {
        self.cell_deg
    }

    pub fn radius_m(&self) -> f64 {
        self.radius_m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    fn cell_of(&self, p: GeoPoint) -> Cell {
        (
            (p.lon() / self.cell_deg).floor() as i64,
            (p.lat() / self.cell_deg).floor() as i64,
        )
    }

    // Every point within `radius_m` of `center` (and possibly others), with distances.
    fn window_candidates(&self, center: GeoPoint, radius_m: f64) -> Vec<(Ordinal, f64)> {
        let Some((min_col, max_col, min_row, max_row)) = self.extent else {
            return Vec::new();
        };
        let delta = radius_m / EARTH_RADIUS_M;
        let dlat = delta.to_degrees() * (1.0 + WINDOW_SLACK) + WINDOW_SLACK;
        let (lat_lo, lat_hi) = (center.lat() - dlat, center.lat() + dlat);
        let row_lo = ((lat_lo / self.cell_deg).floor() as i64).max(min_row);
        let row_hi = ((lat_hi / self.cell_deg).floor() as i64).min(max_row);

        let cos_lat = center.lat().to_radians().cos();
        let (col_lo, col_hi) = if lat_lo <= -90.0 || lat_hi >= 90.0 || delta.sin() >= cos_lat {
            (min_col, max_col)
        } else {
            // Widest longitude offset reachable inside the spherical cap.
            let dlon = (delta.sin() / cos_lat).asin().to_degrees() * (1.0 + WINDOW_SLACK) + WINDOW_SLACK;
            (
                (((center.lon() - dlon) / self.cell_deg).floor() as i64).max(min_col),
                (((center.lon() + dlon) / self.cell_deg).floor() as i64).min(max_col),
            )
        };
        if row_lo > row_hi || col_lo > col_hi {
            return Vec::new();
        }

        let mut out = Vec::new();
        let mut take = |bucket: &Vec<(Ordinal, GeoPoint)>| {
            for &(ordinal, p) in bucket {
                let d = haversine_m(center, p);
                if d <= radius_m {
                    out.push((ordinal, d));
                }
            }
        };
        let window_cells = (row_hi - row_lo + 1) as u128 * (col_hi - col_lo + 1) as u128;
        if window_cells > self.buckets.len() as u128 {
            for (&(col, row), bucket) in &self.buckets {
                if (col_lo..=col_hi).contains(&col) && (row_lo..=row_hi).contains(&row) {
                    take(bucket);
                }
            }
        } else {
            for row in row_lo..=row_hi {
                for col in col_lo..=col_hi {
                    if let Some(bucket) = self.buckets.get(&(col, row)) {
                        take(bucket);
                    }
                }
            }
        }
        out
    }

    // Lower bound on the distance from `center` to any point whose cell lies
    // outside the block of Chebyshev radius `ring` around `home`.
    fn outside_block_bound(&self, center: GeoPoint, home: Cell, ring: i64) -> f64 {
        let c = self.cell_deg;
        let (col, row) = home;

        let below = if ((row - ring) as f64) * c <= -90.0 {
            f64::INFINITY
        } else {
            center.lat() - (row - ring) as f64 * c
        };
        let above = if ((row + ring + 1) as f64) * c > 90.0 {
            f64::INFINITY
        } else {
            (row + ring + 1) as f64 * c - center.lat()
        };
        let lat_gap = below.min(above).max(0.0);
        let lat_bound = lat_gap.to_radians() * EARTH_RADIUS_M;

        let left_empty = ((col - ring) as f64) * c <= -180.0;
        let right_empty = ((col + ring + 1) as f64) * c > 180.0;
        let lon_bound = if left_empty && right_empty {
            f64::INFINITY
        } else {
            let mut gap = f64::INFINITY;
            if !left_empty {
                gap = gap.min(center.lon() - (col - ring) as f64 * c);
            }
            if !right_empty {
                gap = gap.min((col + ring + 1) as f64 * c - center.lon());
            }
            // Longitudes beyond the block may wrap around the antimeridian.
            gap = gap.min(180.0 - center.lon().abs()).clamp(0.0, 90.0);
            let s = center.lat().to_radians().cos() * gap.to_radians().sin();
            s.clamp(0.0, 1.0).asin() * EARTH_RADIUS_M
        };

        lat_bound.min(lon_bound)
    }
}

#[derive(Debug, Clone, Copy)]
struct Ranked(f64, Ordinal);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

fn sort_by_distance(v: &mut [(Ordinal, f64)]) {
    v.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
}

impl NeighborIndex for GridIndex {
    fn radius_query(&self, center: GeoPoint, radius_m: f64) -> Result<Vec<(Ordinal, f64)>, IndexError> {
        if radius_m.is_nan() || radius_m < 0.0 {
            return Err(IndexError::InvalidRadius(radius_m));
        }
        if radius_m > self.radius_m {
            return Err(IndexError::RadiusExceedsBuild {
                requested: radius_m,
                built: self.radius_m,
            });
        }
        let mut out = self.window_candidates(center, radius_m);
        sort_by_distance(&mut out);
        Ok(out)
    }

    fn knn_query(&self, center: GeoPoint, k: usize, exclude: Option<Ordinal>) -> Vec<(Ordinal, f64)> {
        let Some((min_col, max_col, min_row, max_row)) = self.extent else {
            return Vec::new();
        };
        if k == 0 {
            return Vec::new();
        }
        let home = self.cell_of(center);
        let mut best: BinaryHeap<Ranked> = BinaryHeap::with_capacity(k + 1);
        let offer = |bucket: &Vec<(Ordinal, GeoPoint)>, best: &mut BinaryHeap<Ranked>| {
            for &(ordinal, p) in bucket {
                if Some(ordinal) == exclude {
                    continue;
                }
                let cand = Ranked(haversine_m(center, p), ordinal);
                if best.len() < k {
                    best.push(cand);
                } else if cand < *best.peek().expect("heap is full") {
                    best.pop();
                    best.push(cand);
                }
            }
        };

        let mut ring: i64 = 0;
        loop {
            let ring_cells = if ring == 0 { 1 } else { 8 * ring as u128 };
            if ring_cells > self.buckets.len() as u128 {
                // Sparse remainder: scanning buckets beats walking empty ring cells.
                for (&(col, row), bucket) in &self.buckets {
                    if (col - home.0).abs().max((row - home.1).abs()) >= ring {
                        offer(bucket, &mut best);
                    }
                }
                break;
            }

            let (col_lo, col_hi) = ((home.0 - ring).max(min_col), (home.0 + ring).min(max_col));
            for row in (home.1 - ring).max(min_row)..=(home.1 + ring).min(max_row) {
                let edge_row = (row - home.1).abs() == ring;
                if edge_row {
                    for col in col_lo..=col_hi {
                        if let Some(bucket) = self.buckets.get(&(col, row)) {
                            offer(bucket, &mut best);
                        }
                    }
                } else {
                    for col in [home.0 - ring, home.0 + ring] {
                        if (col_lo..=col_hi).contains(&col) {
                            if let Some(bucket) = self.buckets.get(&(col, row)) {
                                offer(bucket, &mut best);
                            }
                        }
                    }
                }
            }

            let covers_all = home.0 - ring <= min_col
                && home.0 + ring >= max_col
                && home.1 - ring <= min_row
                && home.1 + ring >= max_row;
            if covers_all {
                break;
            }
            if best.len() == k {
                let kth = best.peek().expect("heap is full").0;
                let bound = self.outside_block_bound(center, home, ring);
                if kth < bound * (1.0 - WINDOW_SLACK) {
                    break;
                }
            }
            ring += 1;
        }

        let mut out: Vec<(Ordinal, f64)> = best.into_iter().map(|Ranked(d, o)| (o, d)).collect();
        sort_by_distance(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn rejects_bad_radius() {
        assert_eq!(
            build_index(Vec::new(), 0.0).unwrap_err(),
            IndexError::InvalidRadius(0.0)
        );
        assert!(build_index(Vec::new(), -5.0).is_err());
        assert!(build_index(Vec::new(), f64::NAN).is_err());
        assert!(GridIndex::with_cell_deg(Vec::new(), 0.0).is_err());
    }

    #[test]
    fn empty_index() {
        let idx = build_index(Vec::new(), 50.0).unwrap();
        assert_eq!(idx.bucket_count(), 0);
        assert!(idx.radius_query(pt(0.0, 0.0), 50.0).unwrap().is_empty());
        assert!(idx.knn_query(pt(0.0, 0.0), 3, None).is_empty());
    }

    #[test]
    fn single_point() {
        let p = pt(33.77, -84.35);
        let idx = build_index(vec![(7, p)], 50.0).unwrap();
        assert_eq!(idx.radius_query(p, 1.0).unwrap(), vec![(7, 0.0)]);
        assert_eq!(idx.radius_query(p, 0.0).unwrap(), vec![(7, 0.0)]);
        assert!(idx.radius_query(pt(33.78, -84.35), 50.0).unwrap().is_empty());
    }

    #[test]
    fn radius_contract() {
        let idx = build_index(vec![(0, pt(0.0, 0.0))], 50.0).unwrap();
        assert!(matches!(
            idx.radius_query(pt(0.0, 0.0), 50.5),
            Err(IndexError::RadiusExceedsBuild { .. })
        ));
    }

    #[test]
    fn bucket_coordinates() {
        let idx = GridIndex::with_cell_deg(vec![(0, pt(1.5, -0.5))], 1.0).unwrap();
        assert!(idx.buckets.contains_key(&(-1, 1)));
    }

    #[test]
    fn knn_small_cases() {
        let a = pt(10.0, 10.0);
        let b = pt(10.001, 10.0);
        let idx = build_index(vec![(0, a), (1, b)], 50.0).unwrap();
        let nn = idx.knn_query(a, 1, Some(0));
        assert_eq!(nn.len(), 1);
        assert_eq!(nn[0].0, 1);
        let all = idx.knn_query(a, 10, None);
        assert_eq!(all.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn knn_ties_break_by_ordinal() {
        let c = pt(0.0, 0.0);
        let pts = vec![(5, pt(0.0, 0.001)), (2, pt(0.0, -0.001)), (9, pt(0.0, 0.001))];
        let idx = build_index(pts, 50.0).unwrap();
        let got: Vec<_> = idx.knn_query(c, 2, None).into_iter().map(|x| x.0).collect();
        assert_eq!(got, vec![2, 5]);
    }

    #[test]
    fn knn_across_antimeridian() {
        let pts = vec![(0, pt(0.0, 179.999)), (1, pt(0.0, -179.999)), (2, pt(0.0, 170.0))];
        let idx = build_index(pts, 50.0).unwrap();
        let got = idx.knn_query(pt(0.0, 179.999), 1, Some(0));
        assert_eq!(got[0].0, 1);
    }

    #[test]
    fn polar_radius_query() {
        let pts = vec![(0, pt(89.9999, 0.0)), (1, pt(89.9999, 180.0)), (2, pt(89.99, 45.0))];
        let idx = build_index(pts, 50.0).unwrap();
        let got: Vec<_> = idx
            .radius_query(pt(90.0, 0.0), 50.0)
            .unwrap()
            .into_iter()
            .map(|x| x.0)
            .collect();
        assert_eq!(got, vec![0, 1]);
    }
}
