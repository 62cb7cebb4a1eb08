//! The ESRI shapefile triplet: .shp geometry, .shx index, .dbf
//! attributes. Readers are strict (every declared length is verified)
//! and writers are deterministic, so identical collections produce
//! byte-identical files.

pub mod dbf;
pub mod shp;

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::feature::{CoordMode, Feature, FeatureCollection, FieldSchema};

pub use dbf::{format_integer, format_real, normalize_value};

/// The three sibling files as byte sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapefileTriplet {
    pub shp: Vec<u8>,
    pub shx: Vec<u8>,
    pub dbf: Vec<u8>,
}

/// Resolve a stem (or any one of the triplet's paths) into the three
/// sibling paths. A trailing .shp/.shx/.dbf extension is dropped; any
/// other dot in the name is kept.
fn sibling_paths(stem: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let stem = match stem.extension().and_then(|e| e.to_str()) {
        Some(ext) if matches!(ext.to_ascii_lowercase().as_str(), "shp" | "shx" | "dbf") => {
            stem.with_extension("")
        }
        _ => stem.to_path_buf(),
    };
    let mut name = stem.into_os_string();
    let base = name.clone();
    name.push(".shp");
    let shp = PathBuf::from(name);
    let mut name = base.clone();
    name.push(".shx");
    let shx = PathBuf::from(name);
    let mut name = base;
    name.push(".dbf");
    (shp, shx, PathBuf::from(name))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::FileIo {
        path: path.display().to_string(),
        source,
    })
}

/// Write `bytes` to `path` atomically: the data lands under a temporary
/// name in the target directory and is renamed into place, so readers
/// never observe a half-written file.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let io_err = |source| Error::FileIo {
        path: path.display().to_string(),
        source,
    };
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

impl ShapefileTriplet {
    /// Serialize a collection without touching the filesystem.
    pub fn encode(collection: &FeatureCollection) -> Result<Self> {
        if collection.schema().is_empty() {
            return Err(Error::EmptySchema);
        }
        let geometries: Vec<_> = collection
            .features()
            .iter()
            .map(|f| f.geometry.as_ref())
            .collect();
        let (shp, shx) = shp::encode(collection.geometry_kind(), &geometries, collection.bbox());
        let dbf = dbf::encode(
            collection.schema(),
            collection.features().iter().map(|f| f.attributes.as_slice()),
        )?;
        Ok(ShapefileTriplet { shp, shx, dbf })
    }

    /// Load the three sibling files of `stem`.
    pub fn read_from(stem: &Path) -> Result<Self> {
        let (shp, shx, dbf) = sibling_paths(stem);
        Ok(ShapefileTriplet {
            shp: read_file(&shp)?,
            shx: read_file(&shx)?,
            dbf: read_file(&dbf)?,
        })
    }

    /// Write the three sibling files of `stem`, each atomically.
    pub fn write_to(&self, stem: &Path) -> Result<()> {
        let (shp, shx, dbf) = sibling_paths(stem);
        atomic_write(&shp, &self.shp)?;
        atomic_write(&shx, &self.shx)?;
        atomic_write(&dbf, &self.dbf)?;
        Ok(())
    }
}

/// Decode a triplet into a feature collection plus any warnings raised
/// along the way (discarded measure values, deleted or non-ASCII
/// attribute records). Coordinates are interpreted per `mode`.
pub fn read_shapefile(
    triplet: &ShapefileTriplet,
    mode: CoordMode,
) -> Result<(FeatureCollection, Vec<String>)> {
    let (kind, geometries, mut warnings) = shp::decode(&triplet.shp, &triplet.shx)?;
    let (schema, rows, dbf_warnings) = dbf::decode(&triplet.dbf)?;
    warnings.extend(dbf_warnings);
    if rows.len() != geometries.len() {
        return Err(Error::RecordCountMismatch {
            dbf: rows.len(),
            shx: geometries.len(),
        });
    }
    let mut collection = FeatureCollection::new(schema, kind, mode);
    for (geometry, attributes) in geometries.into_iter().zip(rows) {
        collection.push(Feature {
            geometry,
            attributes,
        })?;
    }
    Ok((collection, warnings))
}

/// Serialize a collection and write it under `stem`.
pub fn write_shapefile(collection: &FeatureCollection, stem: &Path) -> Result<ShapefileTriplet> {
    let triplet = ShapefileTriplet::encode(collection)?;
    triplet.write_to(stem)?;
    Ok(triplet)
}

/// Parse only the field descriptors of an attribute table.
pub fn read_dbf_schema(dbf_bytes: &[u8]) -> Result<FieldSchema> {
    dbf::decode_schema(dbf_bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::{AttrValue, FieldDef, FieldKind, Geometry, GeometryKind};
    use crate::geometry::GeoPoint;

    fn point_collection() -> FeatureCollection {
        let schema =
            FieldSchema::new(vec![FieldDef::new("id", FieldKind::Integer, 10, 0)]).unwrap();
        let mut c = FeatureCollection::new(schema, GeometryKind::Point, CoordMode::Planar);
        c.push(Feature {
            geometry: Some(Geometry::Point(GeoPoint::new(10.0, 20.0).unwrap())),
            attributes: vec![AttrValue::Integer(7)],
        })
        .unwrap();
        c
    }

    #[test]
    fn handcrafted_point_roundtrip() {
        let c = point_collection();
        let triplet = ShapefileTriplet::encode(&c).unwrap();
        let (back, warnings) = read_shapefile(&triplet, CoordMode::Planar).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(back.features().len(), 1);
        assert_eq!(
            back.features()[0].geometry,
            Some(Geometry::Point(GeoPoint::new(10.0, 20.0).unwrap()))
        );
        assert_eq!(back.features()[0].attributes, vec![AttrValue::Integer(7)]);
        assert_eq!(back, c);
    }

    #[test]
    fn empty_collection_roundtrip() {
        let schema =
            FieldSchema::new(vec![FieldDef::new("id", FieldKind::Integer, 10, 0)]).unwrap();
        let c = FeatureCollection::new(schema, GeometryKind::PolyLine, CoordMode::Planar);
        let triplet = ShapefileTriplet::encode(&c).unwrap();
        let (back, _) = read_shapefile(&triplet, CoordMode::Planar).unwrap();
        assert!(back.features().is_empty());
        assert_eq!(back.geometry_kind(), GeometryKind::PolyLine);
    }

    #[test]
    fn record_count_mismatch_detected() {
        let c = point_collection();
        let mut triplet = ShapefileTriplet::encode(&c).unwrap();
        // Rewrite the .dbf record count to 2.
        triplet.dbf[4..8].copy_from_slice(&2u32.to_le_bytes());
        // The table itself now under-runs; widen it so only the pairing fails.
        let record = triplet.dbf[65..76].to_vec();
        let eof = triplet.dbf.pop().unwrap();
        triplet.dbf.extend_from_slice(&record);
        triplet.dbf.push(eof);
        assert!(matches!(
            read_shapefile(&triplet, CoordMode::Planar),
            Err(Error::RecordCountMismatch { dbf: 2, shx: 1 })
        ));
    }

    #[test]
    fn file_roundtrip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("layer");
        let c = point_collection();
        let written = write_shapefile(&c, &stem).unwrap();
        let loaded = ShapefileTriplet::read_from(&stem).unwrap();
        assert_eq!(written, loaded);
        // Passing any sibling path works too.
        let via_shp = ShapefileTriplet::read_from(&stem.with_extension("shp")).unwrap();
        assert_eq!(written, via_shp);
    }

    #[test]
    fn identical_input_identical_bytes() {
        let c = point_collection();
        let a = ShapefileTriplet::encode(&c).unwrap();
        let b = ShapefileTriplet::encode(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn schema_readback() {
        let c = point_collection();
        let triplet = ShapefileTriplet::encode(&c).unwrap();
        let schema = read_dbf_schema(&triplet.dbf).unwrap();
        assert_eq!(schema.fields().len(), 1);
        assert_eq!(schema.fields()[0].name, "id");
        assert_eq!(schema.fields()[0].kind, FieldKind::Integer);
    }
}
