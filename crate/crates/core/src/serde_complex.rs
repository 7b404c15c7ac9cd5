//! `[re, im]` pair encoding for complex values in JSON documents.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

fn pair(c: &Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn from_pair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(pair).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?.into_iter().map(from_pair).collect())
    }
}

pub mod vec2 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<Complex64>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|row| row.iter().map(pair).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Complex64>>, D::Error> {
        Ok(Vec::<Vec<[f64; 2]>>::deserialize(d)?
            .into_iter()
            .map(|row| row.into_iter().map(from_pair).collect())
            .collect())
    }
}

pub mod vec3 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<Vec<Complex64>>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|m| {
                m.iter()
                    .map(|row| row.iter().map(pair).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Vec<Vec<Vec<Complex64>>>, D::Error> {
        Ok(Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?
            .into_iter()
            .map(|m| {
                m.into_iter()
                    .map(|row| row.into_iter().map(from_pair).collect())
                    .collect()
            })
            .collect())
    }
}
