//! Serde helpers for floats that may be infinite.
//!
//! JSON has no infinity, so `+inf`/`-inf` are written as the strings
//! `"inf"`/`"-inf"` and read back from either form. NaN becomes `null`.

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Wire {
    Num(f64),
    Text(String),
}

fn encode(v: f64) -> Option<Wire> {
    if v.is_nan() {
        None
    } else if v == f64::INFINITY {
        Some(Wire::Text("inf".into()))
    } else if v == f64::NEG_INFINITY {
        Some(Wire::Text("-inf".into()))
    } else {
        Some(Wire::Num(v))
    }
}

fn decode<E: de::Error>(w: Option<Wire>) -> Result<f64, E> {
    match w {
        None => Ok(f64::NAN),
        Some(Wire::Num(v)) => Ok(v),
        Some(Wire::Text(t)) => match t.as_str() {
            "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
            "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
            "nan" | "NaN" => Ok(f64::NAN),
            other => Err(E::custom(format!("expected a number or \"inf\", got {other:?}"))),
        },
    }
}

/// `#[serde(with = "f64_inf")]` for plain `f64` fields.
pub mod f64_inf {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        encode(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        decode(Option::<Wire>::deserialize(d)?)
    }
}

/// `#[serde(with = "opt_f64")]` for `Option<f64>`; `None` is `null`.
pub mod opt_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.and_then(encode).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Wire>::deserialize(d)? {
            None => Ok(None),
            w => decode(w).map(Some),
        }
    }
}

/// `#[serde(with = "vec_f64_inf")]` for `Vec<f64>`.
pub mod vec_f64_inf {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| encode(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Option<Wire>>::deserialize(d)?.into_iter().map(decode).collect()
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct Probe {
        #[serde(with = "super::f64_inf")]
        a: f64,
        #[serde(with = "super::opt_f64")]
        b: Option<f64>,
        #[serde(with = "super::vec_f64_inf")]
        c: Vec<f64>,
    }

    #[test]
    fn infinities_round_trip() {
        let p = Probe {
            a: f64::INFINITY,
            b: None,
            c: vec![0.1, f64::NEG_INFINITY, 1e300],
        };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"a":"inf","b":null,"c":[0.1,"-inf",1e+300]}"#);
        assert_eq!(serde_json::from_str::<Probe>(&s).unwrap(), p);
        let q: Probe = serde_json::from_str(r#"{"a":2.5,"b":"inf","c":[]}"#).unwrap();
        assert_eq!(q.b, Some(f64::INFINITY));
        assert!(serde_json::from_str::<Probe>(r#"{"a":"lots","b":null,"c":[]}"#).is_err());
    }
}
