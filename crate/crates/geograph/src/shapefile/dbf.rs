//! DBF (dBASE level 5) attribute table encoding and decoding.
//!
//! Layout: 32-byte header (version 0x03), one 32-byte descriptor per
//! field, a 0x0D terminator, then fixed-width records each prefixed by a
//! deletion flag byte, and a 0x1A end marker. Numbers are stored as
//! right-justified space-padded text, so a written real is only as
//! precise as its declared decimal count; `normalize_value` computes the
//! post-roundtrip form of any attribute without touching disk.
//!
//! Text is ASCII; bytes >= 0x80 pass through opaquely (each byte becomes
//! the code point of the same value) and are flagged with a warning.

use std::io::{Cursor, Read};

use byteorder::{LittleEndian, WriteBytesExt};

use crate::error::{Error, Result};
use crate::feature::{AttrValue, FieldDef, FieldKind, FieldSchema};

/// Header date written into every table. Fixed so identical inputs
/// produce byte-identical outputs regardless of wall-clock time.
const HEADER_DATE: [u8; 3] = [100, 1, 1]; // 2000-01-01, years since 1900

const VERSION: u8 = 0x03;
const FIELD_TERMINATOR: u8 = 0x0D;
const EOF_MARKER: u8 = 0x1A;
const FLAG_ACTIVE: u8 = 0x20;
const FLAG_DELETED: u8 = 0x2A;

/// Render an integer the way the table stores it.
pub fn format_integer(value: i64, width: u8) -> String {
    format!("{:>width$}", value, width = width as usize)
}

/// Render a real the way the table stores it: fixed-point with the
/// declared number of decimals.
pub fn format_real(value: f64, width: u8, decimals: u8) -> String {
    format!(
        "{:>width$.prec$}",
        value,
        width = width as usize,
        prec = decimals as usize
    )
}

/// The value an attribute becomes after one write/read cycle. Integers
/// and text survive as-is (given they fit); reals are quantized to the
/// field's decimal count. Errors mirror the writer's overflow checks.
pub fn normalize_value(value: &AttrValue, field: &FieldDef) -> Result<AttrValue> {
    let bytes = encode_value(value, field)?;
    decode_value(&bytes, field, 0, &mut Vec::new())
}

fn overflow(field: &FieldDef, rendered: &str) -> Error {
    Error::FieldOverflow {
        name: field.name.clone(),
        value: rendered.to_string(),
        width: field.width,
    }
}

/// Encode one attribute into its fixed-width cell.
fn encode_value(value: &AttrValue, field: &FieldDef) -> Result<Vec<u8>> {
    let w = field.width as usize;
    let cell = match (field.kind, value) {
        (_, AttrValue::Null) => match field.kind {
            FieldKind::Logical => "?".to_string(),
            _ => " ".repeat(w),
        },
        (FieldKind::Integer, AttrValue::Integer(v)) => format_integer(*v, field.width),
        (FieldKind::Real, AttrValue::Real(v)) => {
            if !v.is_finite() {
                return Err(Error::BadAttributeTable(format!(
                    "field {:?}: non-finite real {v}",
                    field.name
                )));
            }
            format_real(*v, field.width, field.decimals)
        }
        (FieldKind::Real, AttrValue::Integer(v)) => {
            format_real(*v as f64, field.width, field.decimals)
        }
        (FieldKind::Text, AttrValue::Text(s)) => {
            let mut out = Vec::with_capacity(w);
            for ch in s.chars() {
                let code = ch as u32;
                if code > 0xFF {
                    return Err(Error::BadAttributeTable(format!(
                        "field {:?}: character {ch:?} cannot be stored in a single-byte text cell",
                        field.name
                    )));
                }
                out.push(code as u8);
            }
            if out.len() > w {
                return Err(overflow(field, s));
            }
            out.resize(w, b' ');
            return Ok(out);
        }
        (FieldKind::Logical, AttrValue::Logical(b)) => {
            if *b { "T" } else { "F" }.to_string()
        }
        (kind, other) => {
            return Err(Error::AttributeKindMismatch {
                name: field.name.clone(),
                expected: kind.name(),
                got: other.kind_name(),
            })
        }
    };
    if cell.len() > w {
        return Err(overflow(field, cell.trim()));
    }
    Ok(cell.into_bytes())
}

/// Decode one fixed-width cell. `record` is only used in diagnostics.
fn decode_value(
    bytes: &[u8],
    field: &FieldDef,
    record: usize,
    warnings: &mut Vec<String>,
) -> Result<AttrValue> {
    match field.kind {
        FieldKind::Text => {
            let mut text = String::with_capacity(bytes.len());
            let mut opaque = false;
            for &b in bytes {
                if b >= 0x80 {
                    opaque = true;
                }
                text.push(b as char);
            }
            let trimmed = text.trim_end_matches(' ');
            if trimmed.is_empty() {
                return Ok(AttrValue::Null);
            }
            if opaque {
                warnings.push(format!(
                    "record {record}: field {:?} contains non-ASCII bytes, passed through opaquely",
                    field.name
                ));
            }
            Ok(AttrValue::Text(trimmed.to_string()))
        }
        FieldKind::Integer | FieldKind::Real => {
            let text = std::str::from_utf8(bytes).map_err(|_| {
                Error::BadAttributeTable(format!(
                    "record {record}: field {:?} holds non-numeric bytes",
                    field.name
                ))
            })?;
            let trimmed = text.trim();
            if trimmed.is_empty() {
                return Ok(AttrValue::Null);
            }
            if field.kind == FieldKind::Integer {
                let v: i64 = trimmed.parse().map_err(|_| {
                    Error::BadAttributeTable(format!(
                        "record {record}: field {:?} holds {trimmed:?}, expected an integer",
                        field.name
                    ))
                })?;
                Ok(AttrValue::Integer(v))
            } else {
                let v: f64 = trimmed.parse().map_err(|_| {
                    Error::BadAttributeTable(format!(
                        "record {record}: field {:?} holds {trimmed:?}, expected a number",
                        field.name
                    ))
                })?;
                Ok(AttrValue::Real(v))
            }
        }
        FieldKind::Logical => match bytes.first().copied().unwrap_or(b'?') {
            b'T' | b't' | b'Y' | b'y' => Ok(AttrValue::Logical(true)),
            b'F' | b'f' | b'N' | b'n' => Ok(AttrValue::Logical(false)),
            b'?' | b' ' => Ok(AttrValue::Null),
            other => Err(Error::BadAttributeTable(format!(
                "record {record}: field {:?} holds byte 0x{other:02X}, expected a logical flag",
                field.name
            ))),
        },
    }
}

fn kind_to_type_code(kind: FieldKind) -> u8 {
    match kind {
        FieldKind::Integer | FieldKind::Real => b'N',
        FieldKind::Text => b'C',
        FieldKind::Logical => b'L',
    }
}

/// Serialize a whole table.
pub fn encode<'a, R>(schema: &FieldSchema, rows: R) -> Result<Vec<u8>>
where
    R: IntoIterator<Item = &'a [AttrValue]>,
    R::IntoIter: ExactSizeIterator,
{
    if schema.is_empty() {
        return Err(Error::EmptySchema);
    }
    let rows = rows.into_iter();
    let record_size: usize = 1 + schema
        .fields()
        .iter()
        .map(|f| f.width as usize)
        .sum::<usize>();
    let header_size = 32 + 32 * schema.len() + 1;

    let mut out = Vec::with_capacity(header_size + rows.len() * record_size + 1);
    out.push(VERSION);
    out.extend_from_slice(&HEADER_DATE);
    out.write_u32::<LittleEndian>(rows.len() as u32)?;
    out.write_u16::<LittleEndian>(header_size as u16)?;
    out.write_u16::<LittleEndian>(record_size as u16)?;
    out.extend_from_slice(&[0u8; 20]);

    for field in schema.fields() {
        let mut name = [0u8; 11];
        name[..field.name.len()].copy_from_slice(field.name.as_bytes());
        out.extend_from_slice(&name);
        out.push(kind_to_type_code(field.kind));
        out.extend_from_slice(&[0u8; 4]);
        out.push(field.width);
        out.push(field.decimals);
        out.extend_from_slice(&[0u8; 14]);
    }
    out.push(FIELD_TERMINATOR);

    for row in rows {
        if row.len() != schema.len() {
            return Err(Error::AttributeArityMismatch {
                expected: schema.len(),
                got: row.len(),
            });
        }
        out.push(FLAG_ACTIVE);
        for (value, field) in row.iter().zip(schema.fields()) {
            out.extend_from_slice(&encode_value(value, field)?);
        }
    }
    out.push(EOF_MARKER);
    Ok(out)
}

/// Parse just the field descriptors of a table.
pub fn decode_schema(bytes: &[u8]) -> Result<FieldSchema> {
    let (schema, _, _, _) = decode_header(bytes)?;
    Ok(schema)
}

fn decode_header(bytes: &[u8]) -> Result<(FieldSchema, usize, usize, usize)> {
    let mut cur = Cursor::new(bytes);
    let mut fixed = [0u8; 12];
    cur.read_exact(&mut fixed)
        .map_err(|_| Error::BadAttributeTable("shorter than the 32-byte header".into()))?;
    if fixed[0] != VERSION {
        return Err(Error::BadAttributeTable(format!(
            "unsupported version byte 0x{:02X} (expected 0x03)",
            fixed[0]
        )));
    }
    let record_count = u32::from_le_bytes([fixed[4], fixed[5], fixed[6], fixed[7]]) as usize;
    let header_size = u16::from_le_bytes([fixed[8], fixed[9]]) as usize;
    let record_size = u16::from_le_bytes([fixed[10], fixed[11]]) as usize;
    if header_size < 33 || !(header_size - 33).is_multiple_of(32) {
        return Err(Error::BadAttributeTable(format!(
            "header size {header_size} does not fit 32-byte field descriptors"
        )));
    }
    let field_count = (header_size - 33) / 32;
    if bytes.len() < header_size {
        return Err(Error::BadAttributeTable(format!(
            "declared header size {header_size} exceeds table size {}",
            bytes.len()
        )));
    }

    let mut defs = Vec::with_capacity(field_count);
    for i in 0..field_count {
        let at = 32 + 32 * i;
        let desc = &bytes[at..at + 32];
        let name_len = desc[..11].iter().position(|&b| b == 0).unwrap_or(11);
        let name = std::str::from_utf8(&desc[..name_len])
            .map_err(|_| {
                Error::BadAttributeTable(format!("field {i}: name is not valid ASCII"))
            })?
            .to_string();
        let type_code = desc[11] as char;
        let width = desc[16];
        let decimals = desc[17];
        let kind = match type_code {
            'C' => FieldKind::Text,
            'L' => FieldKind::Logical,
            'N' if decimals == 0 => FieldKind::Integer,
            'N' => FieldKind::Real,
            'F' => FieldKind::Real,
            other => return Err(Error::UnknownFieldType(other)),
        };
        let decimals = if kind == FieldKind::Real { decimals } else { 0 };
        defs.push(FieldDef::new(&name, kind, width, decimals));
    }
    let schema = FieldSchema::new(defs)?;

    let declared: usize = 1 + schema
        .fields()
        .iter()
        .map(|f| f.width as usize)
        .sum::<usize>();
    if record_size != declared {
        return Err(Error::BadAttributeTable(format!(
            "record size {record_size} does not match field widths (expected {declared})"
        )));
    }
    Ok((schema, record_count, header_size, record_size))
}

/// Parse a whole table into rows. Deleted records are kept (they still
/// pair 1:1 with shape records) but flagged with a warning.
pub fn decode(bytes: &[u8]) -> Result<(FieldSchema, Vec<Vec<AttrValue>>, Vec<String>)> {
    let (schema, record_count, header_size, record_size) = decode_header(bytes)?;
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(record_count);
    let mut at = header_size;
    for record in 0..record_count {
        if at + record_size > bytes.len() {
            return Err(Error::BadAttributeTable(format!(
                "record {record} runs past the end of the table"
            )));
        }
        let flag = bytes[at];
        match flag {
            FLAG_ACTIVE => {}
            FLAG_DELETED => warnings.push(format!("record {record} is marked deleted")),
            other => {
                return Err(Error::BadAttributeTable(format!(
                    "record {record}: deletion flag byte 0x{other:02X} is neither active nor deleted"
                )))
            }
        }
        let mut row = Vec::with_capacity(schema.len());
        let mut offset = at + 1;
        for field in schema.fields() {
            let cell = &bytes[offset..offset + field.width as usize];
            row.push(decode_value(cell, field, record, &mut warnings)?);
            offset += field.width as usize;
        }
        rows.push(row);
        at += record_size;
    }
    // Tolerate a single 0x1A end marker and nothing else after the data.
    let tail = &bytes[at..];
    if !(tail.is_empty() || tail == [EOF_MARKER]) {
        return Err(Error::BadAttributeTable(format!(
            "{} unexpected trailing bytes after the last record",
            tail.len()
        )));
    }
    Ok((schema, rows, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enc(schema: &FieldSchema, rows: &[Vec<AttrValue>]) -> crate::error::Result<Vec<u8>> {
        encode(schema, rows.iter().map(Vec::as_slice))
    }

    fn id_schema() -> FieldSchema {
        FieldSchema::new(vec![FieldDef::new("id", FieldKind::Integer, 10, 0)]).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = enc(&id_schema(), &[vec![AttrValue::Integer(7)]]).unwrap();
        assert_eq!(bytes[0], 0x03);
        assert_eq!(&bytes[1..4], &[100, 1, 1]);
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u16::from_le_bytes(bytes[8..10].try_into().unwrap()), 65);
        assert_eq!(u16::from_le_bytes(bytes[10..12].try_into().unwrap()), 11);
        assert_eq!(bytes[64], 0x0D);
        assert_eq!(*bytes.last().unwrap(), 0x1A);
    }

    #[test]
    fn integer_right_justified() {
        let bytes = enc(&id_schema(), &[vec![AttrValue::Integer(7)]]).unwrap();
        let record = &bytes[65..76];
        assert_eq!(record[0], 0x20);
        assert_eq!(&record[1..], b"         7");
    }

    #[test]
    fn real_fixed_point() {
        assert_eq!(format_real(2.5, 8, 3), "   2.500");
        assert_eq!(format_integer(-42, 6), "   -42");
    }

    #[test]
    fn roundtrip_mixed_kinds() {
        let schema = FieldSchema::new(vec![
            FieldDef::new("id", FieldKind::Integer, 10, 0),
            FieldDef::new("ratio", FieldKind::Real, 12, 4),
            FieldDef::new("name", FieldKind::Text, 20, 0),
            FieldDef::new("open", FieldKind::Logical, 1, 0),
        ])
        .unwrap();
        let rows = vec![
            vec![
                AttrValue::Integer(-5),
                AttrValue::Real(3.25),
                AttrValue::Text("Rua A".into()),
                AttrValue::Logical(true),
            ],
            vec![
                AttrValue::Null,
                AttrValue::Null,
                AttrValue::Null,
                AttrValue::Null,
            ],
        ];
        let bytes = enc(&schema, &rows).unwrap();
        let (schema2, rows2, warnings) = decode(&bytes).unwrap();
        assert_eq!(schema2, schema);
        assert_eq!(rows2, rows);
        assert!(warnings.is_empty());
    }

    #[test]
    fn schema_readback_maps_type_codes() {
        let schema = FieldSchema::new(vec![
            FieldDef::new("id", FieldKind::Integer, 10, 0),
            FieldDef::new("w", FieldKind::Real, 24, 11),
        ])
        .unwrap();
        let bytes = enc(&schema, &[]).unwrap();
        let back = decode_schema(&bytes).unwrap();
        assert_eq!(back, schema);
    }

    #[test]
    fn f_type_code_reads_as_real() {
        let schema = id_schema();
        let mut bytes = enc(&schema, &[vec![AttrValue::Integer(3)]]).unwrap();
        bytes[32 + 11] = b'F';
        let (schema2, rows, _) = decode(&bytes).unwrap();
        assert_eq!(schema2.fields()[0].kind, FieldKind::Real);
        assert_eq!(rows[0][0], AttrValue::Real(3.0));
    }

    #[test]
    fn overflow_is_an_error_not_truncation() {
        let schema = FieldSchema::new(vec![FieldDef::new("id", FieldKind::Integer, 3, 0)]).unwrap();
        let err = enc(&schema, &[vec![AttrValue::Integer(12345)]]).unwrap_err();
        assert!(matches!(err, Error::FieldOverflow { width: 3, .. }));

        let schema = FieldSchema::new(vec![FieldDef::new("s", FieldKind::Text, 4, 0)]).unwrap();
        let err = enc(&schema, &[vec![AttrValue::Text("abcde".into())]]).unwrap_err();
        assert!(matches!(err, Error::FieldOverflow { .. }));
    }

    #[test]
    fn normalize_quantizes_reals() {
        let field = FieldDef::new("r", FieldKind::Real, 12, 2);
        let n = normalize_value(&AttrValue::Real(1.0 / 3.0), &field).unwrap();
        assert_eq!(n, AttrValue::Real(0.33));
        let field = FieldDef::new("r", FieldKind::Real, 24, 11);
        let n = normalize_value(&AttrValue::Real(2.5), &field).unwrap();
        assert_eq!(n, AttrValue::Real(2.5));
    }

    #[test]
    fn high_bytes_pass_through_with_warning() {
        let schema = FieldSchema::new(vec![FieldDef::new("s", FieldKind::Text, 6, 0)]).unwrap();
        let bytes = enc(&schema, &[vec![AttrValue::Text("Caf\u{e9}".into())]]).unwrap();
        let (_, rows, warnings) = decode(&bytes).unwrap();
        assert_eq!(rows[0][0], AttrValue::Text("Caf\u{e9}".into()));
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("non-ASCII"));
    }

    #[test]
    fn deleted_record_kept_with_warning() {
        let bytes = {
            let mut b = enc(&id_schema(), &[vec![AttrValue::Integer(1)]]).unwrap();
            b[65] = 0x2A;
            b
        };
        let (_, rows, warnings) = decode(&bytes).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(warnings[0].contains("deleted"));
    }

    #[test]
    fn all_spaces_reads_as_null() {
        let schema = FieldSchema::new(vec![FieldDef::new("s", FieldKind::Text, 3, 0)]).unwrap();
        let bytes = enc(&schema, &[vec![AttrValue::Text("   ".into())]]).unwrap();
        let (_, rows, _) = decode(&bytes).unwrap();
        assert_eq!(rows[0][0], AttrValue::Null);
    }

    #[test]
    fn wide_character_rejected() {
        let schema = FieldSchema::new(vec![FieldDef::new("s", FieldKind::Text, 8, 0)]).unwrap();
        let err = enc(&schema, &[vec![AttrValue::Text("\u{1F600}".into())]]).unwrap_err();
        assert!(matches!(err, Error::BadAttributeTable(_)));
    }
}
