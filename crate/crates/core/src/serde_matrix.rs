//! Serde adapters that write matrices as row-major nested arrays.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::numerics::{matrix_from_rows, matrix_to_rows, Matrix, Vector};

pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
    matrix_to_rows(m).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
    let rows = Vec::<Vec<f64>>::deserialize(d)?;
    matrix_from_rows(&rows).map_err(serde::de::Error::custom)
}

pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        let vals = Vec::<f64>::deserialize(d)?;
        Ok(Vector::from_vec(vals))
    }
}
