//! CSV surfaces: source POI tables in, matched table and edge list out.
//!
//! Source tables are streamed row by row. Every header is prefixed with the
//! source prefix (`fsq_` / `osm_`) unless it already carries it, and the
//! [`SourceSchema`] column names are resolved against the prefixed header.
//! Rows without a usable name or with an excluded class are skipped; rows
//! that cannot be parsed are appended to a `<input>.rejects.csv` sidecar
//! with a reason, and reading continues.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::conflation::MatchedPoi;
use crate::geo::{centroid, haversine_m, parse_wkt, point_ewkb_hex, GeoPoint};
use crate::graph::GraphEdge;
use crate::similarity::{normalize_name, SimilarityScore};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{column}` in {source_name}")]
    MissingColumn { column: String, source_name: String },
    #[error("line {line}: {reason}")]
    Row { line: u64, reason: String },
}

impl IngestError {
    fn io(path: &Path, source: io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Source columns that were not promoted to record fields, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Attributes {
    columns: Arc<[String]>,
    values: Vec<String>,
}

impl Attributes {
    pub fn new(columns: Arc<[String]>, values: Vec<String>) -> Self {
        assert_eq!(columns.len(), values.len(), "attribute arity mismatch");
        Self { columns, values }
    }

    pub fn empty() -> Self {
        Self {
            columns: Arc::from(Vec::new()),
            values: Vec::new(),
        }
    }

    pub fn get(&self, column: &str) -> Option<&str> {
        self.columns
            .iter()
            .position(|c| c == column)
            .map(|i| self.values[i].as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.columns
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().map(String::as_str))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One source row.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiRecord {
    pub id: String,
    pub name: String,
    pub point: GeoPoint,
    pub attributes: Attributes,
}

/// How a source table maps onto [`PoiRecord`] fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceSchema {
    pub id_column: String,
    pub name_column: String,
    pub lat_column: String,
    pub lon_column: String,
    pub geometry_column: Option<String>,
    pub class_column: Option<String>,
    pub prefix: String,
}

impl SourceSchema {
    /// Foursquare open places export: `fsq_place_id,name,latitude,longitude,...`.
    pub fn foursquare() -> Self {
        Self {
            id_column: "fsq_place_id".into(),
            name_column: "name".into(),
            lat_column: "latitude".into(),
            lon_column: "longitude".into(),
            geometry_column: None,
            class_column: None,
            prefix: "fsq_".into(),
        }
    }

    /// Nominatim `place` table export. Coordinates come from `latitude` /
    /// `longitude` when present, otherwise from the centroid of `geometry` (WKT).
    pub fn openstreetmap() -> Self {
        Self {
            id_column: "osm_id".into(),
            name_column: "name".into(),
            lat_column: "latitude".into(),
            lon_column: "longitude".into(),
            geometry_column: Some("geometry".into()),
            class_column: Some("class".into()),
            prefix: "osm_".into(),
        }
    }

    pub fn prefixed(&self, column: &str) -> String {
        if column.starts_with(&self.prefix) {
            column.to_string()
        } else {
            format!("{}{}", self.prefix, column)
        }
    }
}

/// Row filter applied while reading.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SourceFilter {
    /// Class values (case-insensitive) whose rows are skipped.
    pub excluded_classes: Vec<String>,
}

impl SourceFilter {
    /// Named features that are not highways.
    pub fn openstreetmap() -> Self {
        Self {
            excluded_classes: vec!["highway".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub rows_in: u64,
    pub rows_yielded: u64,
    pub rows_skipped: u64,
    pub rows_rejected: u64,
    pub skipped_missing_name: u64,
    pub skipped_excluded_class: u64,
}

impl IngestStats {
    pub fn is_balanced(&self) -> bool {
        self.rows_in == self.rows_yielded + self.rows_skipped + self.rows_rejected
    }
}

/// Default sidecar path for rows that could not be parsed.
pub fn rejects_path(input: &Path) -> PathBuf {
    let mut s = input.as_os_str().to_owned();
    s.push(".rejects.csv");
    PathBuf::from(s)
}

// Writes `line,reason,record` rows, creating the file on the first reject.
struct RejectSink {
    path: Option<PathBuf>,
    writer: Option<csv::Writer<BufWriter<File>>>,
}

impl RejectSink {
    fn push(&mut self, line: u64, reason: &str, record: &[&str]) -> Result<(), IngestError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        if self.writer.is_none() {
            let file = File::create(path).map_err(|e| IngestError::io(path, e))?;
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            w.write_record(["line", "reason", "record"])?;
            self.writer = Some(w);
        }
        let mut raw = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        raw.write_record(record)?;
        let raw = raw.into_inner().map_err(|e| IngestError::io(path, e.into_error()))?;
        let raw = String::from_utf8_lossy(&raw);
        let line = line.to_string();
        let w = self.writer.as_mut().expect("writer created above");
        w.write_record([line.as_str(), reason, raw.trim_end_matches('\n')])?;
        Ok(())
    }

    fn flush(&mut self) -> Result<(), IngestError> {
        if let (Some(w), Some(path)) = (self.writer.as_mut(), &self.path) {
            w.flush().map_err(|e| IngestError::io(path, e))?;
        }
        Ok(())
    }
}

struct ColumnMap {
    id: usize,
    name: usize,
    lat: Option<usize>,
    lon: Option<usize>,
    geometry: Option<usize>,
    class: Option<usize>,
    // Indices of passthrough columns, aligned with `attr_columns`.
    attr_idx: Vec<usize>,
    attr_columns: Arc<[String]>,
}

impl ColumnMap {
    fn resolve(header: &csv::StringRecord, schema: &SourceSchema, source_name: &str) -> Result<Self, IngestError> {
        let names: Vec<String> = header.iter().map(|h| schema.prefixed(h.trim())).collect();
        let find = |col: &str| {
            let want = schema.prefixed(col);
            names.iter().position(|n| *n == want)
        };
        let require = |col: &str| {
            find(col).ok_or_else(|| IngestError::MissingColumn {
                column: schema.prefixed(col),
                source_name: source_name.to_string(),
            })
        };

        let id = require(&schema.id_column)?;
        let name = require(&schema.name_column)?;
        let lat = find(&schema.lat_column);
        let lon = find(&schema.lon_column);
        let geometry = match &schema.geometry_column {
            Some(g) => find(g),
            None => None,
        };
        if geometry.is_none() {
            require(&schema.lat_column)?;
            require(&schema.lon_column)?;
        }
        let class = match &schema.class_column {
            Some(c) => find(c),
            None => None,
        };

        let promoted = [Some(id), Some(name), lat, lon];
        let attr_idx: Vec<usize> = (0..names.len()).filter(|i| !promoted.contains(&Some(*i))).collect();
        let attr_columns: Arc<[String]> = attr_idx.iter().map(|&i| names[i].clone()).collect();
        Ok(Self {
            id,
            name,
            lat,
            lon,
            geometry,
            class,
            attr_idx,
            attr_columns,
        })
    }
}

enum RowOutcome {
    Record(PoiRecord),
    SkipName,
    SkipClass,
    Reject(String),
}

/// Streaming reader over a source POI table.
pub struct PoiReader<R: Read> {
    csv: csv::Reader<R>,
    columns: ColumnMap,
    filter: Option<SourceFilter>,
    rejects: RejectSink,
    stats: IngestStats,
    row: csv::StringRecord,
    done: bool,
}

/// Opens `path` for streaming. Unparseable rows go to [`rejects_path`]`(path)`.
pub fn read_poi_csv(
    path: &Path,
    schema: &SourceSchema,
    filter: Option<SourceFilter>,
) -> Result<PoiReader<BufReader<File>>, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    PoiReader::new(
        BufReader::new(file),
        schema,
        filter,
        Some(rejects_path(path)),
        &path.display().to_string(),
    )
}

impl<R: Read> PoiReader<R> {
    /// `rejects`: sidecar path, or `None` to only count rejected rows.
    pub fn new(
        reader: R,
        schema: &SourceSchema,
        filter: Option<SourceFilter>,
        rejects: Option<PathBuf>,
        source_name: &str,
    ) -> Result<Self, IngestError> {
        let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = csv.headers()?.clone();
        let columns = ColumnMap::resolve(&header, schema, source_name)?;
        Ok(Self {
            csv,
            columns,
            filter,
            rejects: RejectSink {
                path: rejects,
                writer: None,
            },
            stats: IngestStats::default(),
            row: csv::StringRecord::new(),
            done: false,
        })
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    fn classify(&self) -> RowOutcome {
        let row = &self.row;
        let cols = &self.columns;
        let field = |i: usize| row.get(i).unwrap_or("");

        let name = field(cols.name).trim();
        if normalize_name(name).is_empty() {
            return RowOutcome::SkipName;
        }
        if let (Some(filter), Some(ci)) = (&self.filter, cols.class) {
            let class = field(ci).trim();
            if filter.excluded_classes.iter().any(|x| x.eq_ignore_ascii_case(class)) {
                return RowOutcome::SkipClass;
            }
        }
        let id = field(cols.id).trim();
        if id.is_empty() {
            return RowOutcome::Reject("empty id".into());
        }

        let lat = cols.lat.map(|i| field(i).trim()).filter(|s| !s.is_empty());
        let lon = cols.lon.map(|i| field(i).trim()).filter(|s| !s.is_empty());
        let point = match (lat, lon) {
            (Some(lat), Some(lon)) => {
                let (Ok(lat), Ok(lon)) = (lat.parse::<f64>(), lon.parse::<f64>()) else {
                    return RowOutcome::Reject(format!("unparseable coordinates ({lat}, {lon})"));
                };
                match GeoPoint::new(lat, lon) {
                    Ok(p) => p,
                    Err(e) => return RowOutcome::Reject(e.to_string()),
                }
            }
            _ => match cols.geometry.map(|i| field(i).trim()).filter(|s| !s.is_empty()) {
                Some(wkt) => match parse_wkt(wkt) {
                    Ok(g) => centroid(&g),
                    Err(e) => return RowOutcome::Reject(e.to_string()),
                },
                None => return RowOutcome::Reject("no coordinates".into()),
            },
        };

        let values = cols.attr_idx.iter().map(|&i| field(i).to_string()).collect();
        RowOutcome::Record(PoiRecord {
            id: id.to_string(),
            name: name.to_string(),
            point,
            attributes: Attributes::new(cols.attr_columns.clone(), values),
        })
    }
}

impl<R: Read> Iterator for PoiReader<R> {
    type Item = Result<PoiRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let read = self.csv.read_record(&mut self.row);
            let line = self
                .row
                .position()
                .map_or_else(|| self.csv.position().line(), |p| p.line());
            match read {
                Ok(false) => {
                    self.done = true;
                    return self.rejects.flush().err().map(Err);
                }
                Ok(true) => {}
                Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
                Err(e) => {
                    self.stats.rows_in += 1;
                    self.stats.rows_rejected += 1;
                    let line = e.position().map_or(line, |p| p.line());
                    if let Err(err) = self.rejects.push(line, &e.to_string(), &[]) {
                        return Some(Err(err));
                    }
                    continue;
                }
            }
            self.stats.rows_in += 1;
            match self.classify() {
                RowOutcome::Record(r) => {
                    self.stats.rows_yielded += 1;
                    return Some(Ok(r));
                }
                RowOutcome::SkipName => {
                    self.stats.rows_skipped += 1;
                    self.stats.skipped_missing_name += 1;
                }
                RowOutcome::SkipClass => {
                    self.stats.rows_skipped += 1;
                    self.stats.skipped_excluded_class += 1;
                }
                RowOutcome::Reject(reason) => {
                    self.stats.rows_rejected += 1;
                    let fields: Vec<&str> = self.row.iter().collect();
                    if let Err(err) = self.rejects.push(line, &reason, &fields) {
                        return Some(Err(err));
                    }
                }
            }
        }
        None
    }
}

/// Output columns of the matched table, after the leading `poi_id`.
pub const MATCH_COLUMNS: [&str; 40] = [
    "fsq_place_id",
    "fsq_name",
    "fsq_latitude",
    "fsq_longitude",
    "fsq_address",
    "fsq_locality",
    "fsq_region",
    "fsq_postcode",
    "fsq_admin_region",
    "fsq_post_town",
    "fsq_po_box",
    "fsq_country",
    "fsq_date_created",
    "fsq_date_refreshed",
    "fsq_date_closed",
    "fsq_tel",
    "fsq_website",
    "fsq_email",
    "fsq_facebook_id",
    "fsq_instagram",
    "fsq_twitter",
    "fsq_category_ids",
    "fsq_category_labels",
    "fsq_placemaker_url",
    "fsq_unresolved_flags",
    "fsq_bbox",
    "fsq_geom",
    "osm_id",
    "osm_class",
    "osm_type",
    "osm_name",
    "osm_address",
    "osm_extratags",
    "osm_geometry",
    "osm_latitude",
    "osm_longitude",
    "osm_geom",
    "fsq_osm_name_similarity_score_trg",
    "fsq_osm_name_similarity_score_lev",
    "fsq_osm_distance",
];

/// Optional trailing column with the great-circle distance in meters.
pub const DISTANCE_M_COLUMN: &str = "fsq_osm_distance_m";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchesFormat {
    pub include_distance_m: bool,
}

impl MatchesFormat {
    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["poi_id"];
        h.extend(MATCH_COLUMNS);
        if self.include_distance_m {
            h.push(DISTANCE_M_COLUMN);
        }
        h
    }
}

/// The output row for one match, in [`MatchesFormat::header`] order.
pub fn match_row(m: &MatchedPoi, format: &MatchesFormat) -> Vec<String> {
    let side = |rec: &PoiRecord, col: &str, prefix: &str| -> String {
        match &col[prefix.len()..] {
            "place_id" | "id" => rec.id.clone(),
            "name" => rec.name.clone(),
            "latitude" => rec.point.lat().to_string(),
            "longitude" => rec.point.lon().to_string(),
            "geom" => point_ewkb_hex(rec.point),
            _ => rec.attributes.get(col).unwrap_or("").to_string(),
        }
    };
    let mut row = Vec::with_capacity(MATCH_COLUMNS.len() + 2);
    row.push(m.poi_id.to_string());
    for col in MATCH_COLUMNS {
        row.push(match col {
            "fsq_osm_name_similarity_score_trg" => m.sim_trg.to_string(),
            "fsq_osm_name_similarity_score_lev" => m.sim_lev.to_string(),
            "fsq_osm_distance" => m.distance_deg.to_string(),
            c if c.starts_with("fsq_") => side(&m.fsq, c, "fsq_"),
            c => side(&m.osm, c, "osm_"),
        });
    }
    if format.include_distance_m {
        row.push(m.distance_m.to_string());
    }
    row
}

/// Writes rows sorted by `poi_id` and returns the row count.
pub fn write_matches<W: Write>(writer: W, rows: &[MatchedPoi], format: &MatchesFormat) -> Result<usize, IngestError> {
    let mut sorted: Vec<&MatchedPoi> = rows.iter().collect();
    sorted.sort_by_key(|m| m.poi_id);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(format.header())?;
    for m in &sorted {
        w.write_record(match_row(m, format))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(sorted.len())
}

/// Atomically writes the matched table to `path`.
pub fn write_matches_csv(path: &Path, rows: &[MatchedPoi], format: &MatchesFormat) -> Result<usize, IngestError> {
    write_atomic(path, |w| write_matches(w, rows, format))
}

/// Writes to a temporary file next to `path` and renames it into place.
pub fn write_atomic<T>(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&mut File>) -> Result<T, IngestError>,
) -> Result<T, IngestError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| IngestError::io(path, e))?;
    let out = {
        let mut w = BufWriter::new(tmp.as_file_mut());
        let out = body(&mut w)?;
        w.flush().map_err(|e| IngestError::io(path, e))?;
        out
    };
    tmp.persist(path).map_err(|e| IngestError::io(path, e.error))?;
    Ok(out)
}

/// Reads a matched table written by [`write_matches_csv`].
pub fn read_matches_csv(path: &Path) -> Result<Vec<MatchedPoi>, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_matches(BufReader::new(file), &path.display().to_string())
}

pub fn read_matches<R: Read>(reader: R, source_name: &str) -> Result<Vec<MatchedPoi>, IngestError> {
    let mut csv = csv::Reader::from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn {
                column: name.to_string(),
                source_name: source_name.to_string(),
            })
    };
    let poi_id = col("poi_id")?;
    let trg = col("fsq_osm_name_similarity_score_trg")?;
    let lev = col("fsq_osm_name_similarity_score_lev")?;
    let dist = col("fsq_osm_distance")?;
    let sides = [
        (
            col("fsq_place_id")?,
            col("fsq_name")?,
            col("fsq_latitude")?,
            col("fsq_longitude")?,
            "fsq_",
        ),
        (
            col("osm_id")?,
            col("osm_name")?,
            col("osm_latitude")?,
            col("osm_longitude")?,
            "osm_",
        ),
    ];
    let computed = [poi_id, trg, lev, dist];
    let attrs: Vec<(Vec<usize>, Arc<[String]>)> = sides
        .iter()
        .map(|&(id, name, lat, lon, prefix)| {
            let idx: Vec<usize> = (0..header.len())
                .filter(|i| header[*i].starts_with(prefix) && !header[*i].starts_with("fsq_osm_"))
                .filter(|i| ![id, name, lat, lon].contains(i) && !computed.contains(i))
                .collect();
            let names: Arc<[String]> = idx.iter().map(|&i| header[i].clone()).collect();
            (idx, names)
        })
        .collect();

    let mut out = Vec::new();
    let mut row = csv::StringRecord::new();
    while csv.read_record(&mut row)? {
        let line = row.position().map_or(0, |p| p.line());
        let bad = |reason: String| IngestError::Row { line, reason };
        let num = |i: usize| -> Result<f64, IngestError> {
            row[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("`{}` is not a number", &row[i])))
        };
        let score = |i: usize| -> Result<SimilarityScore, IngestError> {
            SimilarityScore::new(num(i)?).ok_or_else(|| bad(format!("score `{}` outside [0, 1]", &row[i])))
        };
        let mut recs = Vec::with_capacity(2);
        for (k, &(id, name, lat, lon, _)) in sides.iter().enumerate() {
            let point = GeoPoint::new(num(lat)?, num(lon)?).map_err(|e| bad(e.to_string()))?;
            let (idx, names) = &attrs[k];
            recs.push(Arc::new(PoiRecord {
                id: row[id].to_string(),
                name: row[name].to_string(),
                point,
                attributes: Attributes::new(names.clone(), idx.iter().map(|&i| row[i].to_string()).collect()),
            }));
        }
        let osm = recs.pop().expect("two sides");
        let fsq = recs.pop().expect("two sides");
        let poi_id = row[poi_id]
            .trim()
            .parse::<u64>()
            .map_err(|_| bad(format!("poi_id `{}` is not a positive integer", &row[poi_id])))?;
        out.push(MatchedPoi {
            poi_id,
            distance_deg: num(dist)?,
            distance_m: haversine_m(fsq.point, osm.point),
            sim_trg: score(trg)?,
            sim_lev: score(lev)?,
            fsq,
            osm,
        });
    }
    Ok(out)
}

pub const EDGE_HEADER: [&str; 3] = ["fsq_place_id_source", "fsq_place_id_destination", "distance_m"];

/// Writes edges sorted by (source, distance, destination), distances to 2 decimals.
pub fn write_edges<W: Write>(writer: W, edges: &[GraphEdge]) -> Result<usize, IngestError> {
    let mut sorted: Vec<&GraphEdge> = edges.iter().collect();
    sorted.sort_by(|a, b| {
        a.source
            .cmp(&b.source)
            .then(a.distance_m.total_cmp(&b.distance_m))
            .then(a.destination.cmp(&b.destination))
    });
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(EDGE_HEADER)?;
    for e in &sorted {
        w.write_record([
            e.source.as_str(),
            e.destination.as_str(),
            &format!("{:.2}", e.distance_m),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(sorted.len())
}

/// Atomically writes the edge list to `path`.
pub fn write_edges_csv(path: &Path, edges: &[GraphEdge]) -> Result<usize, IngestError> {
    write_atomic(path, |w| write_edges(w, edges))
}
