//! Turn graphs back into GIS layers: one point per node, one two-point
//! polyline per edge, with attribute schemas synthesized from the data.
//!
//! Field kinds are inferred per attribute name: integer when every
//! value is a whole number, real when every value is numeric, text
//! otherwise. Attribute names longer than the 10-character DBF limit
//! are truncated; a collision after truncation is an error because the
//! names are user-facing identifiers.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::feature::{
    AttrValue, CoordMode, Feature, FeatureCollection, FieldDef, FieldKind, FieldSchema, Geometry,
    GeometryKind,
};
use crate::geometry::PolyLine;
use crate::graph::GeoGraph;

/// Column names owned by the exporters.
const NODE_RESERVED: [&str; 1] = ["node_id"];
const EDGE_RESERVED: [&str; 3] = ["source", "target", "weight"];

/// Largest magnitude at which every whole f64 is exactly an integer.
const INTEGRAL_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

const REAL_DECIMALS: u8 = 6;

fn truncate_name(name: &str) -> String {
    name.chars().take(10).collect()
}

/// Map full attribute names to DBF-safe ones, failing loudly when two
/// names become indistinguishable.
fn truncated_names<'a>(
    names: impl Iterator<Item = &'a str>,
    reserved: &[&str],
) -> Result<BTreeMap<String, String>> {
    let mut by_short: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for name in names {
        if reserved.contains(&name) {
            return Err(Error::ReservedAttributeName(name.to_string()));
        }
        by_short
            .entry(truncate_name(name))
            .or_default()
            .push(name.to_string());
    }
    let mut mapping = BTreeMap::new();
    for (short, fulls) in by_short {
        if fulls.len() > 1 {
            return Err(Error::TruncatedNameCollision(format!(
                "{} -> {short:?}",
                fulls
                    .iter()
                    .map(|n| format!("{n:?}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        mapping.insert(fulls.into_iter().next().unwrap(), short);
    }
    Ok(mapping)
}

/// What one attribute column holds across all records.
#[derive(Default)]
struct ColumnProfile {
    any: bool,
    all_numeric: bool,
    all_integral: bool,
    max_text: usize,
    max_int: usize,
    max_real_whole: usize,
}

impl ColumnProfile {
    fn new() -> Self {
        ColumnProfile {
            all_numeric: true,
            all_integral: true,
            ..Default::default()
        }
    }

    fn observe(&mut self, value: &AttrValue) {
        let (numeric, integral) = match value {
            AttrValue::Null => return,
            AttrValue::Integer(_) => (true, true),
            AttrValue::Real(r) => (
                true,
                r.fract() == 0.0 && r.abs() <= INTEGRAL_LIMIT,
            ),
            AttrValue::Text(_) | AttrValue::Logical(_) => (false, false),
        };
        self.any = true;
        self.all_numeric &= numeric;
        self.all_integral &= numeric && integral;
        match value {
            AttrValue::Integer(i) => {
                self.max_int = self.max_int.max(format!("{i}").len());
                self.max_real_whole = self.max_real_whole.max(format!("{}", i).len());
            }
            AttrValue::Real(r) => {
                if self.all_integral {
                    self.max_int = self.max_int.max(format!("{}", *r as i64).len());
                }
                self.max_real_whole = self
                    .max_real_whole
                    .max(format!("{:.0}", r.trunc()).len());
            }
            _ => {}
        }
        self.max_text = self.max_text.max(text_form(value).len());
    }

    fn kind(&self) -> FieldKind {
        if !self.any {
            FieldKind::Text
        } else if self.all_integral {
            FieldKind::Integer
        } else if self.all_numeric {
            FieldKind::Real
        } else {
            FieldKind::Text
        }
    }

    fn field(&self, name: &str) -> FieldDef {
        match self.kind() {
            FieldKind::Integer => {
                FieldDef::new(name, FieldKind::Integer, self.max_int.max(1) as u8, 0)
            }
            FieldKind::Real => FieldDef::new(
                name,
                FieldKind::Real,
                (self.max_real_whole + 2 + REAL_DECIMALS as usize).min(254) as u8,
                REAL_DECIMALS,
            ),
            _ => FieldDef::new(
                name,
                FieldKind::Text,
                self.max_text.clamp(1, 254) as u8,
                0,
            ),
        }
    }

    fn convert(&self, value: &AttrValue) -> AttrValue {
        match (self.kind(), value) {
            (_, AttrValue::Null) => AttrValue::Null,
            (FieldKind::Integer, AttrValue::Integer(i)) => AttrValue::Integer(*i),
            (FieldKind::Integer, AttrValue::Real(r)) => AttrValue::Integer(*r as i64),
            (FieldKind::Real, AttrValue::Integer(i)) => AttrValue::Real(*i as f64),
            (FieldKind::Real, AttrValue::Real(r)) => AttrValue::Real(*r),
            (_, other) => AttrValue::Text(text_form(other)),
        }
    }
}

fn text_form(value: &AttrValue) -> String {
    match value {
        AttrValue::Null => String::new(),
        AttrValue::Integer(i) => format!("{i}"),
        AttrValue::Real(r) => format!("{r}"),
        AttrValue::Text(t) => t.clone(),
        AttrValue::Logical(b) => if *b { "true" } else { "false" }.to_string(),
    }
}

fn profile_columns<'a>(
    rows: impl Iterator<Item = &'a BTreeMap<String, AttrValue>>,
) -> BTreeMap<String, ColumnProfile> {
    let rows: Vec<&BTreeMap<String, AttrValue>> = rows.collect();
    let names: BTreeSet<&str> = rows
        .iter()
        .flat_map(|attrs| attrs.keys().map(String::as_str))
        .collect();
    let mut profiles: BTreeMap<String, ColumnProfile> = names
        .into_iter()
        .map(|n| (n.to_string(), ColumnProfile::new()))
        .collect();
    for attrs in rows {
        for (name, value) in attrs {
            profiles.get_mut(name).unwrap().observe(value);
        }
    }
    profiles
}

fn id_width(ids: impl Iterator<Item = i64>) -> u8 {
    ids.map(|id| format!("{id}").len())
        .max()
        .unwrap_or(1)
        .max(1) as u8
}

/// One point per node, ordered by id, carrying a `node_id` column plus
/// every node attribute.
pub fn nodes_to_features(g: &GeoGraph) -> Result<FeatureCollection> {
    let profiles = profile_columns(g.nodes().map(|(_, n)| &n.attributes));
    let mapping = truncated_names(profiles.keys().map(String::as_str), &NODE_RESERVED)?;

    let mut fields = vec![FieldDef::new(
        "node_id",
        FieldKind::Integer,
        id_width(g.node_ids()),
        0,
    )];
    for (name, profile) in &profiles {
        fields.push(profile.field(&mapping[name]));
    }
    let schema = FieldSchema::new(fields)?;
    let mut c = FeatureCollection::new(schema, GeometryKind::Point, CoordMode::Planar);
    for (id, node) in g.nodes() {
        let mut attrs = vec![AttrValue::Integer(id)];
        for (name, profile) in &profiles {
            let value = node.attributes.get(name).unwrap_or(&AttrValue::Null);
            attrs.push(profile.convert(value));
        }
        c.push(Feature {
            geometry: Some(Geometry::Point(node.location)),
            attributes: attrs,
        })?;
    }
    Ok(c)
}

/// One straight two-point polyline per edge, ordered by (u, v), with
/// `source`, `target`, and `weight` columns plus every edge attribute.
pub fn edges_to_features(g: &GeoGraph) -> Result<FeatureCollection> {
    let profiles = profile_columns(g.edges().map(|(_, _, e)| &e.attributes));
    let mapping = truncated_names(profiles.keys().map(String::as_str), &EDGE_RESERVED)?;

    let ids: Vec<i64> = g.node_ids().collect();
    let max_weight_whole = g
        .edges()
        .map(|(_, _, e)| format!("{:.0}", e.weight.trunc()).len())
        .max()
        .unwrap_or(1);
    let mut fields = vec![
        FieldDef::new(
            "source",
            FieldKind::Integer,
            id_width(ids.iter().copied()),
            0,
        ),
        FieldDef::new(
            "target",
            FieldKind::Integer,
            id_width(ids.iter().copied()),
            0,
        ),
        FieldDef::new(
            "weight",
            FieldKind::Real,
            (max_weight_whole + 2 + REAL_DECIMALS as usize).min(254) as u8,
            REAL_DECIMALS,
        ),
    ];
    for (name, profile) in &profiles {
        fields.push(profile.field(&mapping[name]));
    }
    let schema = FieldSchema::new(fields)?;
    let mut c = FeatureCollection::new(schema, GeometryKind::PolyLine, CoordMode::Planar);
    for (u, v, edge) in g.edges() {
        let a = g
            .node(u)
            .ok_or_else(|| Error::Internal(format!("edge endpoint {u} has no node")))?;
        let b = g
            .node(v)
            .ok_or_else(|| Error::Internal(format!("edge endpoint {v} has no node")))?;
        let mut attrs = vec![
            AttrValue::Integer(u),
            AttrValue::Integer(v),
            AttrValue::Real(edge.weight),
        ];
        for (name, profile) in &profiles {
            let value = edge.attributes.get(name).unwrap_or(&AttrValue::Null);
            attrs.push(profile.convert(value));
        }
        c.push(Feature {
            geometry: Some(Geometry::PolyLine(PolyLine::single(vec![
                a.location, b.location,
            ])?)),
            attributes: attrs,
        })?;
    }
    Ok(c)
}
