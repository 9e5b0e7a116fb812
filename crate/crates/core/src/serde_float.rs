//! Serializes `f64` so that infinities and NaN survive a JSON round trip:
//! finite values stay numbers, the others become `"inf"`, `"-inf"` or `"nan"`.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Number(f64),
    Text(String),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    match Repr::deserialize(d)? {
        Repr::Number(v) => Ok(v),
        Repr::Text(t) => match t.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(de::Error::custom(format!("invalid float {other:?}"))),
        },
    }
}

#[cfg(test)]
mod tests {
    #[derive(serde::Serialize, serde::Deserialize)]
    struct W(#[serde(with = "super")] f64);

    #[test]
    fn non_finite_roundtrip() {
        for v in [1.5, f64::INFINITY, f64::NEG_INFINITY] {
            let text = serde_json::to_string(&W(v)).unwrap();
            assert_eq!(serde_json::from_str::<W>(&text).unwrap().0, v);
        }
        let text = serde_json::to_string(&W(f64::NAN)).unwrap();
        assert!(serde_json::from_str::<W>(&text).unwrap().0.is_nan());
        assert!(serde_json::from_str::<W>("\"big\"").is_err());
    }
}
