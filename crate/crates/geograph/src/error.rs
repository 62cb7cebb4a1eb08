//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    // ---- geometry / model ----
    #[error("coordinate is not finite: ({x}, {y})")]
    NonFiniteCoordinate { x: f64, y: f64 },
    #[error("geographic coordinate out of range: ({x}, {y}) (expected lon in [-180,180], lat in [-90,90])")]
    GeographicRange { x: f64, y: f64 },
    #[error("polyline must have at least one part")]
    EmptyPolyline,
    #[error("polyline part {part} has {len} points, need at least 2")]
    ShortPolylinePart { part: usize, len: usize },

    // ---- schema / features ----
    #[error("field name is empty")]
    EmptyFieldName,
    #[error("field name {0:?} exceeds 10 characters")]
    FieldNameTooLong(String),
    #[error("duplicate field name {0:?} (names are case-insensitive)")]
    DuplicateFieldName(String),
    #[error("field {0:?}: nonzero decimals only allowed on real fields")]
    InvalidDecimals(String),
    #[error("field {0:?}: width must be positive")]
    ZeroFieldWidth(String),
    #[error("feature has {got} attributes, schema declares {expected}")]
    AttributeArityMismatch { got: usize, expected: usize },
    #[error("attribute {name:?}: value kind {got} does not match declared kind {expected}")]
    AttributeKindMismatch {
        name: String,
        got: &'static str,
        expected: &'static str,
    },
    #[error("feature geometry does not match collection geometry kind {expected}")]
    GeometryKindMismatch { expected: &'static str },
    #[error("feature has no geometry")]
    NullGeometry,
    #[error("operation requires a non-empty feature collection")]
    EmptyCollection,

    // ---- graph ----
    #[error("unknown node id {0}")]
    UnknownNode(i64),
    #[error("self-loop rejected on node {0}")]
    SelfLoop(i64),
    #[error("edge weight is not finite")]
    NonFiniteWeight,
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("adjacency matrix is not square: row {row} has {got} entries, expected {expected}")]
    NonSquareMatrix {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("adjacency matrix has {ids} ids for {n} rows")]
    MatrixIdCountMismatch { ids: usize, n: usize },
    #[error("adjacency entry ({row},{col}) is {value}, expected 0 or 1")]
    MatrixEntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("adjacency matrix asymmetric: entry ({row},{col}) = {value} but ({col},{row}) = {mirror}")]
    AsymmetricMatrix {
        row: usize,
        col: usize,
        value: u8,
        mirror: u8,
    },
    #[error("adjacency matrix has nonzero diagonal at ({0},{0})")]
    NonzeroDiagonal(usize),
    #[error("duplicate id {0} in adjacency matrix")]
    DuplicateMatrixId(i64),

    // ---- shapefile ----
    #[error("bad shapefile file code {0} (expected 9994)")]
    BadFileCode(i32),
    #[error("bad shapefile version {0} (expected 1000)")]
    BadFileVersion(i32),
    #[error("unsupported shape type {0}")]
    UnsupportedShapeType(i32),
    #[error("record {record}: shape type {got} conflicts with file shape type {expected}")]
    RecordShapeTypeMismatch {
        record: usize,
        got: i32,
        expected: i32,
    },
    #[error("truncated shapefile: {0}")]
    TruncatedShapefile(String),
    #[error("shapefile index mismatch: {0}")]
    IndexMismatch(String),
    #[error("attribute table has {dbf} records but shape index implies {shx}")]
    RecordCountMismatch { dbf: usize, shx: usize },
    #[error("bad attribute table: {0}")]
    BadAttributeTable(String),
    #[error("unknown attribute field type code {0:?}")]
    UnknownFieldType(char),
    #[error("field {name:?}: value {value:?} exceeds declared width {width}")]
    FieldOverflow {
        name: String,
        value: String,
        width: u8,
    },
    #[error("cannot write a collection with an empty schema")]
    EmptySchema,

    // ---- OSM ----
    #[error("invalid OSM XML: {0}")]
    OsmXml(String),
    #[error("OSM document root is <{0}>, expected <osm>")]
    NotOsmRoot(String),
    #[error("duplicate OSM node id {0}")]
    DuplicateOsmNode(i64),
    #[error("duplicate OSM way id {0}")]
    DuplicateOsmWay(i64),
    #[error("OSM way {way} references missing node {node}")]
    MissingNodeRef { way: i64, node: i64 },
    #[error("OSM way {way} has {refs} node references, need at least 2")]
    ShortWay { way: i64, refs: usize },

    // ---- extraction ----
    #[error("negative tolerance {0}")]
    NegativeTolerance(f64),
    #[error("connection index {index} out of range for {features} features")]
    ConnectionIndexOutOfRange { index: usize, features: usize },

    // ---- metrics ----
    #[error("weighted traversal requires positive edge weights; edge {{{u},{v}}} has weight {weight}")]
    NonpositiveWeight { u: i64, v: i64, weight: f64 },
    #[error("metric {metric:?} does not cover node {node}")]
    MetricCoverageMismatch { metric: String, node: i64 },
    #[error("metric value must be finite: {metric:?} at node {node}")]
    NonFiniteMetric { metric: String, node: i64 },

    // ---- builders ----
    #[error("series length mismatch: {left} vs {right}")]
    SeriesLengthMismatch { left: usize, right: usize },
    #[error("time series must have at least 2 observations")]
    ShortSeries,
    #[error("non-finite sample in series {id} at position {index}")]
    NonFiniteSample { id: i64, index: usize },
    #[error("duplicate series id {0}")]
    DuplicateSeriesId(i64),
    #[error("duplicate zone id {0}")]
    DuplicateZone(i64),
    #[error("non-finite flow from zone {origin} to zone {dest}")]
    NonFiniteFlow { origin: i64, dest: i64 },
    #[error("threshold must be finite")]
    NonFiniteThreshold,
    #[error("correlation threshold {0} outside [-1, 1]")]
    ThresholdOutOfRange(f64),
    #[error("flow threshold {0} must be nonnegative")]
    NegativeFlowThreshold(f64),
    #[error("negative flow {flow} from zone {origin} to zone {dest}")]
    NegativeFlow { origin: i64, dest: i64, flow: f64 },
    #[error("duplicate directed flow entry {origin} -> {dest}")]
    DuplicateFlowEntry { origin: i64, dest: i64 },
    #[error("flow references unknown zone {0}")]
    UnknownZone(i64),
    #[error("points collection has no integer field named \"id\"")]
    MissingIdField,
    #[error("duplicate id {0} among points")]
    DuplicatePointId(i64),
    #[error("point record {0} has a null id")]
    NullPointId(usize),
    #[error("id {0} present in matrix but not among points")]
    MatrixIdNotInPoints(i64),
    #[error("point id {0} absent from adjacency matrix")]
    PointIdNotInMatrix(i64),
    #[error("point with id {0} has null or non-point geometry")]
    PointWithoutLocation(i64),

    // ---- tabular input ----
    #[error("bad table {path:?}: {reason}")]
    BadTable { path: String, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),

    // ---- export ----
    #[error("attribute names collide after 10-character truncation: {0}")]
    TruncatedNameCollision(String),
    #[error("attribute name {0:?} is reserved in graph documents")]
    ReservedAttributeName(String),
    #[error("bad graph document: {0}")]
    BadGraphDocument(String),

    // ---- plumbing ----
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    FileIo {
        path: String,
        source: std::io::Error,
    },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for defects in this toolkit rather than in the input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}
