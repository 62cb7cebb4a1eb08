//! GeoJSON as the graph interchange format: nodes become Point
//! features keyed by a `node_id` property, edges become two-point
//! LineString features keyed by `source`, `target`, and `weight`.
//! Output is deterministic (sorted keys, nodes then edges, each in
//! ascending order), so serialize -> parse -> serialize is byte-stable.

use std::collections::BTreeMap;

use serde_json::{json, Map, Number, Value};

use crate::error::{Error, Result};
use crate::feature::AttrValue;
use crate::geometry::GeoPoint;
use crate::graph::GeoGraph;

/// Property names the writer owns; attributes may not use them.
const NODE_RESERVED: [&str; 1] = ["node_id"];
const EDGE_RESERVED: [&str; 3] = ["source", "target", "weight"];

fn attr_to_json(value: &AttrValue) -> Value {
    match value {
        AttrValue::Null => Value::Null,
        AttrValue::Integer(i) => Value::Number((*i).into()),
        AttrValue::Real(r) => Number::from_f64(*r).map_or(Value::Null, Value::Number),
        AttrValue::Text(t) => Value::String(t.clone()),
        AttrValue::Logical(b) => Value::Bool(*b),
    }
}

fn json_to_attr(value: &Value, context: &str) -> Result<AttrValue> {
    match value {
        Value::Null => Ok(AttrValue::Null),
        Value::Bool(b) => Ok(AttrValue::Logical(*b)),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(AttrValue::Integer(i))
            } else if let Some(r) = n.as_f64() {
                Ok(AttrValue::Real(r))
            } else {
                Err(Error::BadGraphDocument(format!(
                    "{context}: number {n} fits neither integer nor real"
                )))
            }
        }
        Value::String(s) => Ok(AttrValue::Text(s.clone())),
        other => Err(Error::BadGraphDocument(format!(
            "{context}: unsupported property value {other}"
        ))),
    }
}

fn check_reserved(attrs: &BTreeMap<String, AttrValue>, reserved: &[&str]) -> Result<()> {
    for key in attrs.keys() {
        if reserved.contains(&key.as_str()) {
            return Err(Error::ReservedAttributeName(key.clone()));
        }
    }
    Ok(())
}

/// Serialize the graph as a GeoJSON FeatureCollection document.
pub fn to_geojson(g: &GeoGraph) -> Result<String> {
    let mut features = Vec::with_capacity(g.node_count() + g.edge_count());
    for (id, node) in g.nodes() {
        check_reserved(&node.attributes, &NODE_RESERVED)?;
        let mut properties = Map::new();
        properties.insert("node_id".to_string(), Value::Number(id.into()));
        for (k, v) in &node.attributes {
            properties.insert(k.clone(), attr_to_json(v));
        }
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [node.location.x, node.location.y],
            },
            "properties": Value::Object(properties),
        }));
    }
    for (u, v, edge) in g.edges() {
        check_reserved(&edge.attributes, &EDGE_RESERVED)?;
        let a = g
            .node(u)
            .ok_or_else(|| Error::Internal(format!("edge endpoint {u} has no node")))?;
        let b = g
            .node(v)
            .ok_or_else(|| Error::Internal(format!("edge endpoint {v} has no node")))?;
        let mut properties = Map::new();
        properties.insert("source".to_string(), Value::Number(u.into()));
        properties.insert("target".to_string(), Value::Number(v.into()));
        properties.insert(
            "weight".to_string(),
            Number::from_f64(edge.weight).map_or(Value::Null, Value::Number),
        );
        for (k, val) in &edge.attributes {
            properties.insert(k.clone(), attr_to_json(val));
        }
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [[a.location.x, a.location.y], [b.location.x, b.location.y]],
            },
            "properties": Value::Object(properties),
        }));
    }
    let document = json!({
        "type": "FeatureCollection",
        "features": features,
    });
    serde_json::to_string_pretty(&document)
        .map_err(|e| Error::Internal(format!("serializing graph document: {e}")))
}

fn bad(reason: impl Into<String>) -> Error {
    Error::BadGraphDocument(reason.into())
}

fn as_object<'a>(value: &'a Value, context: &str) -> Result<&'a Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| bad(format!("{context}: expected an object")))
}

fn coordinate_pair(value: &Value, context: &str) -> Result<GeoPoint> {
    let parts = value
        .as_array()
        .ok_or_else(|| bad(format!("{context}: expected a coordinate array")))?;
    if parts.len() != 2 {
        return Err(bad(format!(
            "{context}: expected two coordinates, got {}",
            parts.len()
        )));
    }
    let x = parts[0]
        .as_f64()
        .ok_or_else(|| bad(format!("{context}: non-numeric x")))?;
    let y = parts[1]
        .as_f64()
        .ok_or_else(|| bad(format!("{context}: non-numeric y")))?;
    GeoPoint::new(x, y)
}

/// Parse a graph from a GeoJSON document produced by [`to_geojson`] or
/// any collection following the same property conventions.
pub fn from_geojson(text: &str) -> Result<GeoGraph> {
    let document: Value =
        serde_json::from_str(text).map_err(|e| bad(format!("invalid JSON: {e}")))?;
    let root = as_object(&document, "document")?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(bad("document type must be \"FeatureCollection\""));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing features array"))?;

    // Nodes first so edges can arrive in any order.
    let mut g = GeoGraph::new();
    let mut edge_features = Vec::new();
    let empty = Map::new();
    for (i, feature) in features.iter().enumerate() {
        let context = format!("feature {i}");
        let feature = as_object(feature, &context)?;
        if feature.get("type").and_then(Value::as_str) != Some("Feature") {
            return Err(bad(format!("{context}: type must be \"Feature\"")));
        }
        let geometry = as_object(
            feature
                .get("geometry")
                .ok_or_else(|| bad(format!("{context}: missing geometry")))?,
            &format!("{context} geometry"),
        )?;
        let properties = match feature.get("properties") {
            Some(Value::Null) | None => &empty,
            Some(v) => as_object(v, &format!("{context} properties"))?,
        };
        match geometry.get("type").and_then(Value::as_str) {
            Some("Point") => {
                let location = coordinate_pair(
                    geometry
                        .get("coordinates")
                        .ok_or_else(|| bad(format!("{context}: missing coordinates")))?,
                    &context,
                )?;
                let id = properties
                    .get("node_id")
                    .and_then(Value::as_i64)
                    .ok_or_else(|| bad(format!("{context}: missing integer node_id")))?;
                if g.contains_node(id) {
                    return Err(bad(format!("{context}: duplicate node_id {id}")));
                }
                let mut attributes = BTreeMap::new();
                for (k, v) in properties {
                    if k == "node_id" {
                        continue;
                    }
                    attributes.insert(k.clone(), json_to_attr(v, &context)?);
                }
                g.add_node(id, location, attributes);
            }
            Some("LineString") => edge_features.push((i, properties.clone())),
            Some(other) => {
                return Err(bad(format!(
                    "{context}: unsupported geometry type {other:?}"
                )))
            }
            None => return Err(bad(format!("{context}: geometry has no type"))),
        }
    }

    for (i, properties) in edge_features {
        let context = format!("feature {i}");
        let source = properties
            .get("source")
            .and_then(Value::as_i64)
            .ok_or_else(|| bad(format!("{context}: missing integer source")))?;
        let target = properties
            .get("target")
            .and_then(Value::as_i64)
            .ok_or_else(|| bad(format!("{context}: missing integer target")))?;
        let weight = properties
            .get("weight")
            .and_then(Value::as_f64)
            .ok_or_else(|| bad(format!("{context}: missing numeric weight")))?;
        if g.edge(source, target).is_some() {
            return Err(bad(format!(
                "{context}: duplicate edge {source}-{target}"
            )));
        }
        let mut attributes = BTreeMap::new();
        for (k, v) in &properties {
            if EDGE_RESERVED.contains(&k.as_str()) {
                continue;
            }
            attributes.insert(k.clone(), json_to_attr(v, &context)?);
        }
        g.add_edge(source, target, weight, attributes)?;
    }
    Ok(g)
}
