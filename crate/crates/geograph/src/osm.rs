//! OSM XML ingestion: parse nodes and ways, split ways at crossroads,
//! and aggregate the resulting segments into street features.
//!
//! A crossroad is a node that sits in the interior of a way and is used
//! by at least two retained ways. Endpoint-shared nodes join streets
//! without splitting them. Segments that share a normalized name merge
//! into one feature wherever they are; unnamed segments merge only with
//! unnamed segments they touch.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::error::{Error, Result};
use crate::extract::{Connection, ConnectionList};
use crate::feature::{
    AttrValue, CoordMode, Feature, FeatureCollection, FieldDef, FieldKind, FieldSchema, Geometry,
    GeometryKind,
};
use crate::geometry::{GeoPoint, PolyLine};
use crate::graph::GeoGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct OsmNode {
    pub osm_id: i64,
    pub location: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OsmWay {
    pub osm_id: i64,
    pub node_refs: Vec<i64>,
    pub tags: BTreeMap<String, String>,
}

/// A run of a way between crossroads (or way ends). `node_refs` aligns
/// one-to-one with the points of the single-part geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct WaySegment {
    pub way_id: i64,
    pub source: i64,
    pub target: i64,
    pub node_refs: Vec<i64>,
    pub geometry: PolyLine,
    pub name: Option<String>,
    pub closed: bool,
}

/// Which ways to keep when building a street network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TagFilter {
    /// Keep every way.
    Any,
    /// Keep ways bearing this tag key, whatever the value.
    HasKey(String),
    /// Keep ways whose tag `key` has one of the listed values.
    KeyValues(String, Vec<String>),
}

impl TagFilter {
    /// The conventional street-network filter.
    pub fn default_highway() -> Self {
        TagFilter::HasKey("highway".to_string())
    }

    /// Parse a filter expression: `*` keeps everything, `key` keeps ways
    /// with that tag, `key=a|b` keeps ways whose tag equals one of the
    /// listed values.
    pub fn parse(expr: &str) -> Result<Self> {
        let expr = expr.trim();
        if expr.is_empty() {
            return Err(Error::OsmXml("empty way filter expression".into()));
        }
        if expr == "*" {
            return Ok(TagFilter::Any);
        }
        match expr.split_once('=') {
            None => Ok(TagFilter::HasKey(expr.to_string())),
            Some((key, values)) => {
                let key = key.trim();
                if key.is_empty() {
                    return Err(Error::OsmXml(format!(
                        "way filter {expr:?} has an empty tag key"
                    )));
                }
                let values: Vec<String> =
                    values.split('|').map(|v| v.trim().to_string()).collect();
                if values.iter().any(String::is_empty) {
                    return Err(Error::OsmXml(format!(
                        "way filter {expr:?} has an empty tag value"
                    )));
                }
                Ok(TagFilter::KeyValues(key.to_string(), values))
            }
        }
    }

    pub fn matches(&self, tags: &BTreeMap<String, String>) -> bool {
        match self {
            TagFilter::Any => true,
            TagFilter::HasKey(key) => tags.contains_key(key),
            TagFilter::KeyValues(key, values) => {
                tags.get(key).is_some_and(|v| values.iter().any(|w| w == v))
            }
        }
    }
}

/// Casefold, trim, and collapse internal whitespace. Returns None for
/// names that are empty after normalization.
pub fn normalize_name(raw: &str) -> Option<String> {
    let folded = raw.to_lowercase();
    let collapsed: Vec<&str> = folded.split_whitespace().collect();
    if collapsed.is_empty() {
        None
    } else {
        Some(collapsed.join(" "))
    }
}

fn xml_err(e: impl std::fmt::Display) -> Error {
    Error::OsmXml(e.to_string())
}

fn attr_map(e: &BytesStart) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for att in e.attributes() {
        let att = att.map_err(xml_err)?;
        let key = String::from_utf8_lossy(att.key.as_ref()).into_owned();
        let value = att.unescape_value().map_err(xml_err)?.into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn require_i64(attrs: &HashMap<String, String>, key: &str, element: &str) -> Result<i64> {
    let raw = attrs
        .get(key)
        .ok_or_else(|| Error::OsmXml(format!("<{element}> without {key:?} attribute")))?;
    raw.parse().map_err(|_| {
        Error::OsmXml(format!("<{element}> {key}={raw:?} is not an integer"))
    })
}

fn require_f64(attrs: &HashMap<String, String>, key: &str, element: &str) -> Result<f64> {
    let raw = attrs
        .get(key)
        .ok_or_else(|| Error::OsmXml(format!("<{element}> without {key:?} attribute")))?;
    raw.parse().map_err(|_| {
        Error::OsmXml(format!("<{element}> {key}={raw:?} is not a number"))
    })
}

/// Parse an OSM XML document. Nodes and ways come back in document
/// order; every way has at least two node refs and all refs resolve.
pub fn parse_osm(xml: &[u8]) -> Result<(Vec<OsmNode>, Vec<OsmWay>)> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();

    let mut saw_root = false;
    let mut nodes: Vec<OsmNode> = Vec::new();
    let mut ways: Vec<OsmWay> = Vec::new();
    let mut node_ids: BTreeSet<i64> = BTreeSet::new();
    let mut way_ids: BTreeSet<i64> = BTreeSet::new();
    // A way under construction: (id, refs, tags).
    let mut open_way: Option<(i64, Vec<i64>, BTreeMap<String, String>)> = None;

    loop {
        let event = reader.read_event_into(&mut buf).map_err(xml_err)?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let name = e.name().as_ref().to_vec();
                let empty = matches!(event, Event::Empty(_));
                match name.as_slice() {
                    b"osm" => {
                        if saw_root {
                            return Err(Error::OsmXml("nested <osm> element".into()));
                        }
                        saw_root = true;
                    }
                    _ if !saw_root => {
                        return Err(Error::NotOsmRoot(
                            String::from_utf8_lossy(&name).into_owned(),
                        ));
                    }
                    b"node" => {
                        let attrs = attr_map(e)?;
                        let id = require_i64(&attrs, "id", "node")?;
                        let lat = require_f64(&attrs, "lat", "node")?;
                        let lon = require_f64(&attrs, "lon", "node")?;
                        if !node_ids.insert(id) {
                            return Err(Error::DuplicateOsmNode(id));
                        }
                        nodes.push(OsmNode {
                            osm_id: id,
                            location: GeoPoint::new_geographic(lon, lat)?,
                        });
                    }
                    b"way" => {
                        let attrs = attr_map(e)?;
                        let id = require_i64(&attrs, "id", "way")?;
                        if !way_ids.insert(id) {
                            return Err(Error::DuplicateOsmWay(id));
                        }
                        if empty {
                            return Err(Error::ShortWay { way: id, refs: 0 });
                        }
                        open_way = Some((id, Vec::new(), BTreeMap::new()));
                    }
                    b"nd" => {
                        if let Some((_, refs, _)) = open_way.as_mut() {
                            let attrs = attr_map(e)?;
                            refs.push(require_i64(&attrs, "ref", "nd")?);
                        }
                    }
                    b"tag" => {
                        if let Some((_, _, tags)) = open_way.as_mut() {
                            let attrs = attr_map(e)?;
                            let k = attrs.get("k").cloned().ok_or_else(|| {
                                Error::OsmXml("<tag> without \"k\" attribute".into())
                            })?;
                            let v = attrs.get("v").cloned().ok_or_else(|| {
                                Error::OsmXml("<tag> without \"v\" attribute".into())
                            })?;
                            tags.insert(k, v);
                        }
                    }
                    // Bounds, relations, members and anything else are ignored.
                    _ => {}
                }
            }
            Event::End(ref e) => {
                if e.name().as_ref() == b"way" {
                    if let Some((id, refs, tags)) = open_way.take() {
                        if refs.len() < 2 {
                            return Err(Error::ShortWay {
                                way: id,
                                refs: refs.len(),
                            });
                        }
                        ways.push(OsmWay {
                            osm_id: id,
                            node_refs: refs,
                            tags,
                        });
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if !saw_root {
        return Err(Error::OsmXml("document has no <osm> root element".into()));
    }
    for way in &ways {
        for &r in &way.node_refs {
            if !node_ids.contains(&r) {
                return Err(Error::MissingNodeRef {
                    way: way.osm_id,
                    node: r,
                });
            }
        }
    }
    Ok((nodes, ways))
}

/// Split every retained way at its crossroads. A node splits a way when
/// it is positionally interior to that way and used by at least two
/// retained ways.
pub fn split_ways_at_crossroads(
    nodes: &[OsmNode],
    ways: &[OsmWay],
    filter: &TagFilter,
) -> Result<Vec<WaySegment>> {
    let locations: HashMap<i64, GeoPoint> =
        nodes.iter().map(|n| (n.osm_id, n.location)).collect();
    let retained: Vec<&OsmWay> = ways.iter().filter(|w| filter.matches(&w.tags)).collect();

    // How many distinct retained ways use each node.
    let mut usage: HashMap<i64, u32> = HashMap::new();
    for way in &retained {
        let distinct: BTreeSet<i64> = way.node_refs.iter().copied().collect();
        for id in distinct {
            *usage.entry(id).or_insert(0) += 1;
        }
    }

    let mut segments = Vec::new();
    for way in &retained {
        let name = way.tags.get("name").and_then(|n| normalize_name(n));
        let refs = &way.node_refs;
        let mut cut_points = vec![0usize];
        for (i, id) in refs.iter().enumerate() {
            if i > 0 && i + 1 < refs.len() && usage.get(id).copied().unwrap_or(0) >= 2 {
                cut_points.push(i);
            }
        }
        cut_points.push(refs.len() - 1);

        for pair in cut_points.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let seg_refs: Vec<i64> = refs[a..=b].to_vec();
            let points: Vec<GeoPoint> = seg_refs
                .iter()
                .map(|id| {
                    locations.get(id).copied().ok_or(Error::MissingNodeRef {
                        way: way.osm_id,
                        node: *id,
                    })
                })
                .collect::<Result<_>>()?;
            let source = seg_refs[0];
            let target = *seg_refs.last().unwrap();
            segments.push(WaySegment {
                way_id: way.osm_id,
                source,
                target,
                geometry: PolyLine::single(points)?,
                name: name.clone(),
                closed: source == target,
                node_refs: seg_refs,
            });
        }
    }
    Ok(segments)
}

/// Streets as features: name-merged (or connectivity-merged when
/// unnamed) way segments, plus which features share at least one node.
#[derive(Debug, Clone)]
pub struct AggregatedStreets {
    /// One polyline feature per street; the single "name" attribute is
    /// null for unnamed street groups.
    pub features: FeatureCollection,
    /// Feature index pairs (i < j) sharing at least one OSM node.
    pub connections: Vec<(usize, usize)>,
    /// Per feature: the OSM nodes it passes through and their locations.
    pub feature_nodes: Vec<BTreeMap<i64, GeoPoint>>,
}

/// Disjoint-set over segment indices, used to group unnamed segments.
struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, i: usize) -> usize {
        if self.0[i] != i {
            let root = self.find(self.0[i]);
            self.0[i] = root;
        }
        self.0[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Merge way segments into street features. Segments with equal
/// normalized names merge globally; unnamed segments merge with the
/// unnamed segments they share a node with. Features appear in order of
/// their first contributing segment.
pub fn aggregate_streets(segments: &[WaySegment]) -> Result<AggregatedStreets> {
    // Group keys: named streets by name, unnamed by connected component.
    let mut uf = UnionFind::new(segments.len());
    let mut node_to_unnamed: HashMap<i64, usize> = HashMap::new();
    for (i, seg) in segments.iter().enumerate() {
        if seg.name.is_none() {
            for &id in &seg.node_refs {
                match node_to_unnamed.get(&id) {
                    Some(&j) => uf.union(i, j),
                    None => {
                        node_to_unnamed.insert(id, i);
                    }
                }
            }
        }
    }

    #[derive(PartialEq, Eq, PartialOrd, Ord)]
    enum GroupKey {
        Named(String),
        Unnamed(usize),
    }

    let mut group_of: HashMap<usize, usize> = HashMap::new(); // segment -> feature
    let mut key_to_feature: BTreeMap<GroupKey, usize> = BTreeMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        let key = match &seg.name {
            Some(name) => GroupKey::Named(name.clone()),
            None => GroupKey::Unnamed(uf.find(i)),
        };
        let feature = *key_to_feature.entry(key).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[feature].push(i);
        group_of.insert(i, feature);
    }

    // Feature attributes: just the street name. Width fits the longest
    // name present (DBF caps a field at 254 bytes).
    let max_name_len = segments
        .iter()
        .filter_map(|s| s.name.as_ref())
        .map(|n| n.chars().count())
        .max()
        .unwrap_or(0);
    let name_width = max_name_len.clamp(1, 254) as u8;
    let schema = FieldSchema::new(vec![FieldDef::new(
        "name",
        FieldKind::Text,
        name_width,
        0,
    )])?;
    let mut features =
        FeatureCollection::new(schema, GeometryKind::PolyLine, CoordMode::Geographic);
    let mut feature_nodes: Vec<BTreeMap<i64, GeoPoint>> = Vec::new();

    for segs in &members {
        let mut parts = Vec::new();
        let mut node_map = BTreeMap::new();
        let mut name: Option<&str> = None;
        for &si in segs {
            let seg = &segments[si];
            parts.extend(seg.geometry.parts().iter().cloned());
            for (id, p) in seg.node_refs.iter().zip(seg.geometry.parts()[0].iter()) {
                node_map.insert(*id, *p);
            }
            name = name.or(seg.name.as_deref());
        }
        let attr = match name {
            Some(n) => AttrValue::Text(n.to_string()),
            None => AttrValue::Null,
        };
        features.push(Feature {
            geometry: Some(Geometry::PolyLine(PolyLine::new(parts)?)),
            attributes: vec![attr],
        })?;
        feature_nodes.push(node_map);
    }

    // Two features connect when any OSM node appears in both.
    let mut node_to_features: BTreeMap<i64, BTreeSet<usize>> = BTreeMap::new();
    for (fi, node_map) in feature_nodes.iter().enumerate() {
        for &id in node_map.keys() {
            node_to_features.entry(id).or_default().insert(fi);
        }
    }
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for features_here in node_to_features.values() {
        let list: Vec<usize> = features_here.iter().copied().collect();
        for (a, &i) in list.iter().enumerate() {
            for &j in &list[a + 1..] {
                pairs.insert((i, j));
            }
        }
    }

    Ok(AggregatedStreets {
        features,
        connections: pairs.into_iter().collect(),
        feature_nodes,
    })
}

impl AggregatedStreets {
    /// Build the street graph: one node per feature, one edge per
    /// connection, witnessed at the lowest shared OSM node.
    pub fn to_geograph(&self) -> Result<GeoGraph> {
        let mut connections = Vec::with_capacity(self.connections.len());
        for &(i, j) in &self.connections {
            let shared = self.feature_nodes[i]
                .iter()
                .find(|(id, _)| self.feature_nodes[j].contains_key(id));
            let (_, &witness) = shared.ok_or_else(|| {
                Error::Internal(format!(
                    "connected features {i} and {j} share no node"
                ))
            })?;
            connections.push(Connection { i, j, witness });
        }
        crate::extract::features_to_geograph(
            &self.features,
            &ConnectionList::new(connections)?,
        )
    }
}
