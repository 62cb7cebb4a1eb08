//! Bidirectional conversion between GIS vector data and graphs.
//!
//! One direction ingests ESRI shapefiles or OSM extracts, detects which
//! features touch, and produces a graph whose nodes keep their map
//! positions, ready for degree / clustering / shortest-path / betweenness
//! analysis. The other direction takes a graph (or a point layer plus an
//! adjacency matrix, or correlation / flow thresholding over tabular
//! data) and writes shapefile and GeoJSON layers that any GIS can draw.

pub mod builders;
pub mod cli;
pub mod error;
pub mod export;
pub mod extract;
pub mod feature;
pub mod geojson;
pub mod geometry;
pub mod graph;
pub mod metrics;
pub mod osm;
pub mod shapefile;
pub mod tables;

pub use builders::{
    correlation_network, flow_network, graph_from_adjacency, pearson, ODMatrix, Threshold,
    TimeSeriesSet,
};
pub use error::{Error, Result};
pub use export::{edges_to_features, nodes_to_features};
pub use extract::{
    build_spatial_index, features_to_geograph, find_connections, representative_point,
    Connection, ConnectionList, ConnectionMode, SpatialIndex,
};
pub use feature::{
    AttrValue, CoordMode, Feature, FeatureCollection, FieldDef, FieldKind, FieldSchema, Geometry,
    GeometryKind,
};
pub use geometry::{BoundingBox, GeoPoint, PolyLine};
pub use geojson::{from_geojson, to_geojson};
pub use graph::{AdjacencyMatrix, Edge, GeoGraph, Node};
pub use metrics::{
    attach_metrics, betweenness, betweenness_with_threads, clustering_coefficient, degree,
    shortest_paths, MetricVector, ShortestPaths,
};
pub use osm::{
    aggregate_streets, parse_osm, split_ways_at_crossroads, AggregatedStreets, OsmNode, OsmWay,
    TagFilter, WaySegment,
};
pub use shapefile::{read_dbf_schema, read_shapefile, write_shapefile, ShapefileTriplet};
pub use tables::{
    load_od_matrix, load_time_series, read_adjacency_csv, read_locations_csv, read_od_csv,
    read_series_csv,
};
