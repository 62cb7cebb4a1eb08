//! The GIS layer abstraction: typed attribute schemas, features and
//! feature collections.
//!
//! Schemas mirror what a dBASE attribute table can carry, which is why
//! field names are capped at 10 characters and every field declares a
//! width and decimal count up front.

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, GeoPoint, PolyLine};

/// Declared kind of an attribute field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Integer,
    Real,
    Text,
    Logical,
}

impl FieldKind {
    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::Integer => "integer",
            FieldKind::Real => "real",
            FieldKind::Text => "text",
            FieldKind::Logical => "logical",
        }
    }
}

/// One field declaration: name (max 10 chars), kind, width, decimals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDef {
    pub name: String,
    pub kind: FieldKind,
    pub width: u8,
    pub decimals: u8,
}

impl FieldDef {
    pub fn new(name: impl Into<String>, kind: FieldKind, width: u8, decimals: u8) -> Self {
        FieldDef {
            name: name.into(),
            kind,
            width,
            decimals,
        }
    }
}

/// Ordered list of field declarations with unique (case-insensitive) names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSchema {
    fields: Vec<FieldDef>,
}

impl FieldSchema {
    pub fn new(fields: Vec<FieldDef>) -> Result<Self> {
        let mut seen: Vec<String> = Vec::with_capacity(fields.len());
        for f in &fields {
            if f.name.is_empty() {
                return Err(Error::EmptyFieldName);
            }
            if f.name.chars().count() > 10 {
                return Err(Error::FieldNameTooLong(f.name.clone()));
            }
            if f.width == 0 {
                return Err(Error::ZeroFieldWidth(f.name.clone()));
            }
            if f.decimals != 0 && f.kind != FieldKind::Real {
                return Err(Error::InvalidDecimals(f.name.clone()));
            }
            let lower = f.name.to_lowercase();
            if seen.contains(&lower) {
                return Err(Error::DuplicateFieldName(f.name.clone()));
            }
            seen.push(lower);
        }
        Ok(FieldSchema { fields })
    }

    pub fn fields(&self) -> &[FieldDef] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Case-insensitive lookup, returning the field position.
    pub fn position_of(&self, name: &str) -> Option<usize> {
        self.fields
            .iter()
            .position(|f| f.name.eq_ignore_ascii_case(name))
    }
}

/// An attribute cell. `Null` is a missing value of any declared kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Logical(bool),
}

impl AttrValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AttrValue::Null => "null",
            AttrValue::Integer(_) => "integer",
            AttrValue::Real(_) => "real",
            AttrValue::Text(_) => "text",
            AttrValue::Logical(_) => "logical",
        }
    }

    pub fn matches(&self, kind: FieldKind) -> bool {
        matches!(
            (self, kind),
            (AttrValue::Null, _)
                | (AttrValue::Integer(_), FieldKind::Integer)
                | (AttrValue::Real(_), FieldKind::Real)
                | (AttrValue::Text(_), FieldKind::Text)
                | (AttrValue::Logical(_), FieldKind::Logical)
        )
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            AttrValue::Integer(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Integer(v) => Some(*v as f64),
            AttrValue::Real(v) => Some(*v),
            _ => None,
        }
    }
}

/// Feature geometry: a point or a polyline.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(GeoPoint),
    PolyLine(PolyLine),
}

impl Geometry {
    pub fn bbox(&self) -> BoundingBox {
        match self {
            Geometry::Point(p) => BoundingBox::of_point(p),
            Geometry::PolyLine(pl) => *pl.bbox(),
        }
    }
}

/// What a collection's features are allowed to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Point,
    PolyLine,
}

impl GeometryKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeometryKind::Point => "point",
            GeometryKind::PolyLine => "polyline",
        }
    }
}

/// Whether coordinates are planar units or lon/lat degrees. Metadata only;
/// geographic mode adds range validation, nothing is ever reprojected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordMode {
    Planar,
    Geographic,
}

/// Geometry plus one attribute value per schema field. Geometry may be
/// absent (a null shape).
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub geometry: Option<Geometry>,
    pub attributes: Vec<AttrValue>,
}

impl Feature {
    pub fn new(geometry: Option<Geometry>, attributes: Vec<AttrValue>) -> Self {
        Feature {
            geometry,
            attributes,
        }
    }
}

/// An ordered set of features under one schema and geometry kind.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCollection {
    schema: FieldSchema,
    geometry_kind: GeometryKind,
    mode: CoordMode,
    features: Vec<Feature>,
}

impl FeatureCollection {
    pub fn new(schema: FieldSchema, geometry_kind: GeometryKind, mode: CoordMode) -> Self {
        FeatureCollection {
            schema,
            geometry_kind,
            mode,
            features: Vec::new(),
        }
    }

    pub fn schema(&self) -> &FieldSchema {
        &self.schema
    }

    pub fn geometry_kind(&self) -> GeometryKind {
        self.geometry_kind
    }

    pub fn mode(&self) -> CoordMode {
        self.mode
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Validating append: geometry must match the collection kind (or be
    /// null), attribute arity and kinds must match the schema, and in
    /// geographic mode every vertex must be inside lon/lat range.
    pub fn push(&mut self, feature: Feature) -> Result<()> {
        match (&feature.geometry, self.geometry_kind) {
            (None, _) => {}
            (Some(Geometry::Point(_)), GeometryKind::Point) => {}
            (Some(Geometry::PolyLine(_)), GeometryKind::PolyLine) => {}
            _ => {
                return Err(Error::GeometryKindMismatch {
                    expected: self.geometry_kind.name(),
                })
            }
        }
        if self.mode == CoordMode::Geographic {
            if let Some(g) = &feature.geometry {
                self.check_geographic(g)?;
            }
        }
        if feature.attributes.len() != self.schema.len() {
            return Err(Error::AttributeArityMismatch {
                got: feature.attributes.len(),
                expected: self.schema.len(),
            });
        }
        for (value, field) in feature.attributes.iter().zip(self.schema.fields()) {
            if !value.matches(field.kind) {
                return Err(Error::AttributeKindMismatch {
                    name: field.name.clone(),
                    got: value.kind_name(),
                    expected: field.kind.name(),
                });
            }
        }
        self.features.push(feature);
        Ok(())
    }

    fn check_geographic(&self, g: &Geometry) -> Result<()> {
        let check = |p: &GeoPoint| GeoPoint::new_geographic(p.x, p.y).map(|_| ());
        match g {
            Geometry::Point(p) => check(p),
            Geometry::PolyLine(pl) => {
                for part in pl.parts() {
                    for p in part {
                        check(p)?;
                    }
                }
                Ok(())
            }
        }
    }

    /// Componentwise min/max over all non-null geometry. `None` when the
    /// collection has no geometry at all.
    pub fn bbox(&self) -> Option<BoundingBox> {
        let mut acc: Option<BoundingBox> = None;
        for f in &self.features {
            if let Some(g) = &f.geometry {
                let b = g.bbox();
                acc = Some(match acc {
                    Some(prev) => prev.merge(&b),
                    None => b,
                });
            }
        }
        acc
    }
}
