//! Main (.shp) and index (.shx) file encoding and decoding.
//!
//! Both files open with the same 100-byte header: file code 9994
//! big-endian at offset 0, file length in 16-bit words big-endian at
//! offset 24, version 1000 little-endian at offset 28, shape type
//! little-endian at offset 32, then the double-precision extent. Record
//! headers are big-endian (1-based record number, content length in
//! words); record contents are little-endian.

use byteorder::{BigEndian, LittleEndian, WriteBytesExt};

use crate::error::{Error, Result};
use crate::feature::{Geometry, GeometryKind};
use crate::geometry::{BoundingBox, GeoPoint, PolyLine};

const FILE_CODE: i32 = 9994;
const VERSION: i32 = 1000;
const HEADER_LEN: usize = 100;

const TYPE_NULL: i32 = 0;
const TYPE_POINT: i32 = 1;
const TYPE_POLYLINE: i32 = 3;
const TYPE_POINT_Z: i32 = 11;
const TYPE_POLYLINE_Z: i32 = 13;
const TYPE_POINT_M: i32 = 21;
const TYPE_POLYLINE_M: i32 = 23;

/// Byte-slice reader with bounds-checked primitive accessors. Every
/// failure carries a short description of what was being read.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::TruncatedShapefile(format!(
                "unexpected end of data while reading {what} at byte {}",
                self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn be_i32(&mut self, what: &str) -> Result<i32> {
        Ok(i32::from_be_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn le_i32(&mut self, what: &str) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn le_f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

fn kind_to_code(kind: GeometryKind) -> i32 {
    match kind {
        GeometryKind::Point => TYPE_POINT,
        GeometryKind::PolyLine => TYPE_POLYLINE,
    }
}

/// Map a file-level shape type code to the geometry kind it carries and
/// whether the variant has measure/height payload to discard.
fn code_to_kind(code: i32) -> Result<(GeometryKind, bool)> {
    match code {
        TYPE_POINT => Ok((GeometryKind::Point, false)),
        TYPE_POLYLINE => Ok((GeometryKind::PolyLine, false)),
        TYPE_POINT_Z | TYPE_POINT_M => Ok((GeometryKind::Point, true)),
        TYPE_POLYLINE_Z | TYPE_POLYLINE_M => Ok((GeometryKind::PolyLine, true)),
        other => Err(Error::UnsupportedShapeType(other)),
    }
}

fn write_header(out: &mut Vec<u8>, length_words: i32, shape_type: i32, bbox: Option<&BoundingBox>) {
    out.write_i32::<BigEndian>(FILE_CODE).unwrap();
    for _ in 0..5 {
        out.write_i32::<BigEndian>(0).unwrap();
    }
    out.write_i32::<BigEndian>(length_words).unwrap();
    out.write_i32::<LittleEndian>(VERSION).unwrap();
    out.write_i32::<LittleEndian>(shape_type).unwrap();
    let (x0, y0, x1, y1) = match bbox {
        Some(b) => (b.min_x, b.min_y, b.max_x, b.max_y),
        None => (0.0, 0.0, 0.0, 0.0),
    };
    for v in [x0, y0, x1, y1, 0.0, 0.0, 0.0, 0.0] {
        out.write_f64::<LittleEndian>(v).unwrap();
    }
}

fn encode_record_content(geometry: Option<&Geometry>) -> Vec<u8> {
    let mut content = Vec::new();
    match geometry {
        None => {
            content.write_i32::<LittleEndian>(TYPE_NULL).unwrap();
        }
        Some(Geometry::Point(p)) => {
            content.write_i32::<LittleEndian>(TYPE_POINT).unwrap();
            content.write_f64::<LittleEndian>(p.x).unwrap();
            content.write_f64::<LittleEndian>(p.y).unwrap();
        }
        Some(Geometry::PolyLine(line)) => {
            content.write_i32::<LittleEndian>(TYPE_POLYLINE).unwrap();
            let b = line.bbox();
            for v in [b.min_x, b.min_y, b.max_x, b.max_y] {
                content.write_f64::<LittleEndian>(v).unwrap();
            }
            content
                .write_i32::<LittleEndian>(line.parts().len() as i32)
                .unwrap();
            content
                .write_i32::<LittleEndian>(line.num_points() as i32)
                .unwrap();
            let mut start = 0i32;
            for part in line.parts() {
                content.write_i32::<LittleEndian>(start).unwrap();
                start += part.len() as i32;
            }
            for part in line.parts() {
                for p in part {
                    content.write_f64::<LittleEndian>(p.x).unwrap();
                    content.write_f64::<LittleEndian>(p.y).unwrap();
                }
            }
        }
    }
    content
}

/// Encode geometries into paired .shp and .shx byte sequences.
pub fn encode(
    kind: GeometryKind,
    geometries: &[Option<&Geometry>],
    bbox: Option<BoundingBox>,
) -> (Vec<u8>, Vec<u8>) {
    let shape_type = kind_to_code(kind);

    let mut records = Vec::with_capacity(geometries.len());
    let mut total_content = 0usize;
    for g in geometries {
        let content = encode_record_content(*g);
        total_content += 8 + content.len();
        records.push(content);
    }

    let shp_len_words = ((HEADER_LEN + total_content) / 2) as i32;
    let shx_len_words = ((HEADER_LEN + 8 * records.len()) / 2) as i32;

    let mut shp = Vec::with_capacity(HEADER_LEN + total_content);
    let mut shx = Vec::with_capacity(HEADER_LEN + 8 * records.len());
    write_header(&mut shp, shp_len_words, shape_type, bbox.as_ref());
    write_header(&mut shx, shx_len_words, shape_type, bbox.as_ref());

    for (i, content) in records.iter().enumerate() {
        let offset_words = (shp.len() / 2) as i32;
        let length_words = (content.len() / 2) as i32;
        shx.write_i32::<BigEndian>(offset_words).unwrap();
        shx.write_i32::<BigEndian>(length_words).unwrap();
        shp.write_i32::<BigEndian>((i + 1) as i32).unwrap();
        shp.write_i32::<BigEndian>(length_words).unwrap();
        shp.extend_from_slice(content);
    }
    (shp, shx)
}

struct Header {
    shape_type: i32,
}

fn read_header(bytes: &[u8], which: &str) -> Result<Header> {
    let mut r = Reader::new(bytes);
    let code = r.be_i32(&format!("{which} file code"))?;
    if code != FILE_CODE {
        return Err(Error::BadFileCode(code));
    }
    for _ in 0..5 {
        r.be_i32("reserved header words")?;
    }
    let length_words = r.be_i32(&format!("{which} file length"))?;
    let version = r.le_i32(&format!("{which} version"))?;
    if version != VERSION {
        return Err(Error::BadFileVersion(version));
    }
    let shape_type = r.le_i32(&format!("{which} shape type"))?;
    for i in 0..8 {
        r.le_f64(&format!("{which} extent word {i}"))?;
    }
    if length_words as usize * 2 != bytes.len() {
        return Err(Error::TruncatedShapefile(format!(
            "{which} header declares {} bytes but file holds {}",
            length_words as usize * 2,
            bytes.len()
        )));
    }
    Ok(Header { shape_type })
}

/// Decode a point record body (after the shape type word). Extra
/// measure/height payload is skipped and counted.
fn decode_point(r: &mut Reader, record: usize, skipped: &mut usize, end: usize) -> Result<GeoPoint> {
    let x = r.le_f64(&format!("record {record} x"))?;
    let y = r.le_f64(&format!("record {record} y"))?;
    if r.pos < end {
        *skipped += end - r.pos;
        r.take(end - r.pos, "measure/height payload")?;
    }
    GeoPoint::new(x, y)
}

fn decode_polyline(
    r: &mut Reader,
    record: usize,
    skipped: &mut usize,
    end: usize,
) -> Result<PolyLine> {
    for _ in 0..4 {
        r.le_f64(&format!("record {record} extent"))?;
    }
    let num_parts = r.le_i32(&format!("record {record} part count"))?;
    let num_points = r.le_i32(&format!("record {record} point count"))?;
    if num_parts <= 0 || num_points < 0 {
        return Err(Error::TruncatedShapefile(format!(
            "record {record} declares {num_parts} parts and {num_points} points"
        )));
    }
    let mut starts = Vec::with_capacity(num_parts as usize);
    for i in 0..num_parts {
        starts.push(r.le_i32(&format!("record {record} part {i} start"))?);
    }
    let mut points = Vec::with_capacity(num_points as usize);
    for i in 0..num_points {
        let x = r.le_f64(&format!("record {record} point {i} x"))?;
        let y = r.le_f64(&format!("record {record} point {i} y"))?;
        points.push(GeoPoint::new(x, y)?);
    }
    if r.pos < end {
        *skipped += end - r.pos;
        r.take(end - r.pos, "measure/height payload")?;
    }

    let mut parts = Vec::with_capacity(starts.len());
    for (i, &start) in starts.iter().enumerate() {
        let stop = if i + 1 < starts.len() {
            starts[i + 1]
        } else {
            num_points
        };
        if start < 0 || stop < start || stop > num_points {
            return Err(Error::TruncatedShapefile(format!(
                "record {record} part {i} spans points {start}..{stop} of {num_points}"
            )));
        }
        parts.push(points[start as usize..stop as usize].to_vec());
    }
    PolyLine::new(parts)
}

/// Decode a .shp file against its .shx index. Returns the file-level
/// geometry kind, per-record geometries (None for null shapes), and
/// warnings (currently only the measure/height discard notice).
pub fn decode(
    shp: &[u8],
    shx: &[u8],
) -> Result<(GeometryKind, Vec<Option<Geometry>>, Vec<String>)> {
    let shp_header = read_header(shp, ".shp")?;
    let shx_header = read_header(shx, ".shx")?;
    if shx_header.shape_type != shp_header.shape_type {
        return Err(Error::IndexMismatch(format!(
            ".shx shape type {} differs from .shp shape type {}",
            shx_header.shape_type, shp_header.shape_type
        )));
    }
    let (kind, has_extra) = code_to_kind(shp_header.shape_type)?;

    if !(shx.len() - HEADER_LEN).is_multiple_of(8) {
        return Err(Error::IndexMismatch(format!(
            ".shx record section holds {} bytes, not a multiple of 8",
            shx.len() - HEADER_LEN
        )));
    }
    let record_count = (shx.len() - HEADER_LEN) / 8;

    let mut geometries = Vec::with_capacity(record_count);
    let mut skipped_bytes = 0usize;
    let mut mz_records = 0usize;
    let mut r = Reader::new(shp);
    r.pos = HEADER_LEN;

    for record in 0..record_count {
        let idx = &shx[HEADER_LEN + 8 * record..HEADER_LEN + 8 * record + 8];
        let idx_offset = i32::from_be_bytes(idx[..4].try_into().unwrap());
        let idx_length = i32::from_be_bytes(idx[4..].try_into().unwrap());
        if idx_offset as usize * 2 != r.pos {
            return Err(Error::IndexMismatch(format!(
                "record {record}: .shx offset {} words, .shp record begins at {} words",
                idx_offset,
                r.pos / 2
            )));
        }

        let number = r.be_i32(&format!("record {record} number"))?;
        if number != (record + 1) as i32 {
            return Err(Error::TruncatedShapefile(format!(
                "record {record} carries number {number}, expected {}",
                record + 1
            )));
        }
        let length_words = r.be_i32(&format!("record {record} content length"))?;
        if length_words != idx_length {
            return Err(Error::IndexMismatch(format!(
                "record {record}: .shx length {idx_length} words, .shp header says {length_words}"
            )));
        }
        let end = r.pos + length_words as usize * 2;
        if end > shp.len() {
            return Err(Error::TruncatedShapefile(format!(
                "record {record} content runs past end of file"
            )));
        }

        let record_type = r.le_i32(&format!("record {record} shape type"))?;
        let before = skipped_bytes;
        let geometry = if record_type == TYPE_NULL {
            None
        } else if record_type == shp_header.shape_type {
            Some(match kind {
                GeometryKind::Point => {
                    Geometry::Point(decode_point(&mut r, record, &mut skipped_bytes, end)?)
                }
                GeometryKind::PolyLine => {
                    Geometry::PolyLine(decode_polyline(&mut r, record, &mut skipped_bytes, end)?)
                }
            })
        } else {
            return Err(Error::RecordShapeTypeMismatch {
                record,
                got: record_type,
                expected: shp_header.shape_type,
            });
        };
        if skipped_bytes > before {
            mz_records += 1;
        }
        if r.pos != end {
            return Err(Error::TruncatedShapefile(format!(
                "record {record} content shorter than its declared length"
            )));
        }
        geometries.push(geometry);
    }

    if r.remaining() != 0 {
        return Err(Error::IndexMismatch(format!(
            ".shp holds {} bytes beyond the records listed in .shx",
            r.remaining()
        )));
    }

    let mut warnings = Vec::new();
    if has_extra && skipped_bytes > 0 {
        warnings.push(format!(
            "discarded measure/height values ({skipped_bytes} bytes across {mz_records} records) from shape type {}",
            shp_header.shape_type
        ));
    }
    Ok((kind, geometries, warnings))
}
