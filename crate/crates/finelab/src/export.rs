//! JSON and CSV writers for reports and fields.
//!
//! JSON is pretty-printed with struct field order preserved. Non-finite
//! floats, which plain JSON cannot hold, are written as the strings `"inf"`,
//! `"-inf"` and `"NaN"`. CSV floats use the shortest representation that
//! parses back to the same value.

use std::io::Write;
use std::path::Path;

use finelab_core::fine::{ShrinkPoint, WienerTerm};
use serde::ser::{self, Serialize, Serializer};
use serde_json::Value;

use crate::error::RunError;

/// Serializes `T` with non-finite floats mapped to strings.
pub struct Lossless<'a, T: ?Sized>(pub &'a T);

impl<T: Serialize + ?Sized> Serialize for Lossless<'_, T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(Wrap(s))
    }
}

fn nonfinite(v: f64) -> &'static str {
    if v.is_nan() {
        "NaN"
    } else if v > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

struct Wrap<S>(S);

macro_rules! forward {
    ($($name:ident($ty:ty)),* $(,)?) => {
        $(fn $name(self, v: $ty) -> Result<S::Ok, S::Error> { self.0.$name(v) })*
    };
}

impl<S: Serializer> Serializer for Wrap<S> {
    type Ok = S::Ok;
    type Error = S::Error;
    type SerializeSeq = Wrap<S::SerializeSeq>;
    type SerializeTuple = Wrap<S::SerializeTuple>;
    type SerializeTupleStruct = Wrap<S::SerializeTupleStruct>;
    type SerializeTupleVariant = Wrap<S::SerializeTupleVariant>;
    type SerializeMap = Wrap<S::SerializeMap>;
    type SerializeStruct = Wrap<S::SerializeStruct>;
    type SerializeStructVariant = Wrap<S::SerializeStructVariant>;

    forward!(
        serialize_bool(bool),
        serialize_i8(i8),
        serialize_i16(i16),
        serialize_i32(i32),
        serialize_i64(i64),
        serialize_i128(i128),
        serialize_u8(u8),
        serialize_u16(u16),
        serialize_u32(u32),
        serialize_u64(u64),
        serialize_u128(u128),
        serialize_char(char),
        serialize_str(&str),
        serialize_bytes(&[u8]),
    );

    fn serialize_f32(self, v: f32) -> Result<S::Ok, S::Error> {
        self.serialize_f64(f64::from(v))
    }

    fn serialize_f64(self, v: f64) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            self.0.serialize_f64(v)
        } else {
            self.0.serialize_str(nonfinite(v))
        }
    }

    fn serialize_none(self) -> Result<S::Ok, S::Error> {
        self.0.serialize_none()
    }

    fn serialize_some<T: Serialize + ?Sized>(self, v: &T) -> Result<S::Ok, S::Error> {
        self.0.serialize_some(&Lossless(v))
    }

    fn serialize_unit(self) -> Result<S::Ok, S::Error> {
        self.0.serialize_unit()
    }

    fn serialize_unit_struct(self, name: &'static str) -> Result<S::Ok, S::Error> {
        self.0.serialize_unit_struct(name)
    }

    fn serialize_unit_variant(self, name: &'static str, idx: u32, variant: &'static str) -> Result<S::Ok, S::Error> {
        self.0.serialize_unit_variant(name, idx, variant)
    }

    fn serialize_newtype_struct<T: Serialize + ?Sized>(self, name: &'static str, v: &T) -> Result<S::Ok, S::Error> {
        self.0.serialize_newtype_struct(name, &Lossless(v))
    }

    fn serialize_newtype_variant<T: Serialize + ?Sized>(
        self,
        name: &'static str,
        idx: u32,
        variant: &'static str,
        v: &T,
    ) -> Result<S::Ok, S::Error> {
        self.0.serialize_newtype_variant(name, idx, variant, &Lossless(v))
    }

    fn serialize_seq(self, len: Option<usize>) -> Result<Self::SerializeSeq, S::Error> {
        self.0.serialize_seq(len).map(Wrap)
    }

    fn serialize_tuple(self, len: usize) -> Result<Self::SerializeTuple, S::Error> {
        self.0.serialize_tuple(len).map(Wrap)
    }

    fn serialize_tuple_struct(self, name: &'static str, len: usize) -> Result<Self::SerializeTupleStruct, S::Error> {
        self.0.serialize_tuple_struct(name, len).map(Wrap)
    }

    fn serialize_tuple_variant(
        self,
        name: &'static str,
        idx: u32,
        variant: &'static str,
        len: usize,
    ) -> Result<Self::SerializeTupleVariant, S::Error> {
        self.0.serialize_tuple_variant(name, idx, variant, len).map(Wrap)
    }

    fn serialize_map(self, len: Option<usize>) -> Result<Self::SerializeMap, S::Error> {
        self.0.serialize_map(len).map(Wrap)
    }

    fn serialize_struct(self, name: &'static str, len: usize) -> Result<Self::SerializeStruct, S::Error> {
        self.0.serialize_struct(name, len).map(Wrap)
    }

    fn serialize_struct_variant(
        self,
        name: &'static str,
        idx: u32,
        variant: &'static str,
        len: usize,
    ) -> Result<Self::SerializeStructVariant, S::Error> {
        self.0.serialize_struct_variant(name, idx, variant, len).map(Wrap)
    }

    fn is_human_readable(&self) -> bool {
        self.0.is_human_readable()
    }
}

macro_rules! compound {
    ($trait:ident, $method:ident) => {
        impl<S: ser::$trait> ser::$trait for Wrap<S> {
            type Ok = S::Ok;
            type Error = S::Error;
            fn $method<T: Serialize + ?Sized>(&mut self, v: &T) -> Result<(), S::Error> {
                self.0.$method(&Lossless(v))
            }
            fn end(self) -> Result<S::Ok, S::Error> {
                self.0.end()
            }
        }
    };
}

compound!(SerializeSeq, serialize_element);
compound!(SerializeTuple, serialize_element);
compound!(SerializeTupleStruct, serialize_field);
compound!(SerializeTupleVariant, serialize_field);

impl<S: ser::SerializeMap> ser::SerializeMap for Wrap<S> {
    type Ok = S::Ok;
    type Error = S::Error;
    fn serialize_key<T: Serialize + ?Sized>(&mut self, k: &T) -> Result<(), S::Error> {
        self.0.serialize_key(&Lossless(k))
    }
    fn serialize_value<T: Serialize + ?Sized>(&mut self, v: &T) -> Result<(), S::Error> {
        self.0.serialize_value(&Lossless(v))
    }
    fn end(self) -> Result<S::Ok, S::Error> {
        self.0.end()
    }
}

macro_rules! fields {
    ($trait:ident) => {
        impl<S: ser::$trait> ser::$trait for Wrap<S> {
            type Ok = S::Ok;
            type Error = S::Error;
            fn serialize_field<T: Serialize + ?Sized>(&mut self, key: &'static str, v: &T) -> Result<(), S::Error> {
                self.0.serialize_field(key, &Lossless(v))
            }
            fn skip_field(&mut self, key: &'static str) -> Result<(), S::Error> {
                self.0.skip_field(key)
            }
            fn end(self) -> Result<S::Ok, S::Error> {
                self.0.end()
            }
        }
    };
}

fields!(SerializeStruct);
fields!(SerializeStructVariant);

/// Converts a value to JSON, keeping non-finite floats as strings.
pub fn to_value<T: Serialize + ?Sized>(value: &T) -> Value {
    serde_json::to_value(Lossless(value)).expect("reports serialize to JSON")
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&Lossless(value)).expect("reports serialize to JSON");
    out.push(b'\n');
    out
}

/// Removes top-level keys from a JSON object and returns their numeric
/// arrays, in the order asked. Used to move fields out of reports into CSV.
pub fn take_arrays(value: &mut Value, keys: &[&str]) -> Vec<(String, Vec<f64>)> {
    let Value::Object(map) = value else { return Vec::new() };
    keys.iter()
        .filter_map(|&k| {
            let v = map.shift_remove(k)?;
            let xs = v.as_array()?.iter().map(json_f64).collect::<Option<Vec<f64>>>()?;
            Some((k.to_string(), xs))
        })
        .collect()
}

fn json_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV");
    for row in rows {
        w.write_record(&row).expect("in-memory CSV");
    }
    w.into_inner().expect("in-memory CSV")
}

/// `node_id,value` table.
pub fn field_csv(ids: &[u64], values: &[f64]) -> Vec<u8> {
    assert_eq!(ids.len(), values.len(), "field length differs from node count");
    csv_bytes(&["node_id", "value"], ids.iter().zip(values).map(|(id, v)| vec![id.to_string(), fmt_f64(*v)]))
}

pub fn terms_csv(terms: &[WienerTerm]) -> Vec<u8> {
    csv_bytes(
        &["j", "r_j", "cap_num", "cap_den", "t_j", "partial_sum"],
        terms.iter().map(|t| {
            vec![
                t.j.to_string(),
                fmt_f64(t.r_j),
                fmt_f64(t.cap_num),
                fmt_f64(t.cap_den),
                fmt_f64(t.t_j),
                fmt_f64(t.partial_sum),
            ]
        }),
    )
}

pub fn shrink_csv(points: &[ShrinkPoint]) -> Vec<u8> {
    csv_bytes(&["rho", "capacity"], points.iter().map(|s| vec![fmt_f64(s.rho), fmt_f64(s.capacity)]))
}

#[derive(Debug, thiserror::Error)]
pub enum ReadFieldError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Parses a `node_id,value` table back into ids and values.
pub fn read_field_csv(bytes: &[u8]) -> Result<(Vec<u64>, Vec<f64>), ReadFieldError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["node_id", "value"] {
        return Err(ReadFieldError::Row { row: 0, message: "expected header `node_id,value`".into() });
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| ReadFieldError::Row { row: k + 1, message: format!("invalid {what}") };
        ids.push(rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("node id"))?);
        values.push(rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("value"))?);
    }
    Ok((ids, values))
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| RunError::io(path, e))?;
    f.write_all(bytes).map_err(|e| RunError::io(path, e))
}
