//! JSON model files and number formatting for reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::open::Hole;
use crate::shift::{parse_word, CylinderFunction, MarkovShift};

/// `{"transitions": [[...]], "labels": [...]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub transitions: Vec<Vec<f64>>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

/// `{"order": n, "values": {"01": 2.0}, "lattice": 1.0 | null}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CeilingFile {
    pub order: usize,
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub lattice: Option<f64>,
}

/// `{"word": "000"}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoleFile {
    pub word: String,
}

impl ModelFile {
    pub fn into_shift(self) -> Result<MarkovShift> {
        match self.labels {
            Some(labels) => MarkovShift::with_labels(&self.transitions, labels),
            None => MarkovShift::new(&self.transitions),
        }
    }
}

impl CeilingFile {
    pub fn into_function(self, shift: &MarkovShift) -> Result<CylinderFunction> {
        let mut values = BTreeMap::new();
        for (key, v) in self.values {
            let w = parse_word(shift.labels(), &key).map_err(Error::InvalidInput)?;
            if w.len() != self.order {
                return Err(Error::InvalidInput(format!(
                    "ceiling key '{key}' has length {}, expected {}",
                    w.len(),
                    self.order
                )));
            }
            values.insert(w.symbols().to_vec(), v);
        }
        let f = CylinderFunction::new(shift, self.order, values)?;
        match self.lattice {
            Some(l) => f.with_lattice(l),
            None => Ok(f),
        }
    }

    pub fn from_function(shift: &MarkovShift, f: &CylinderFunction) -> Self {
        let values = f
            .values()
            .iter()
            .map(|(w, v)| (w.iter().map(|&s| shift.labels()[s].as_str()).collect(), *v))
            .collect();
        CeilingFile {
            order: f.order(),
            values,
            lattice: f.lattice(),
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn load_shift(path: &Path) -> Result<MarkovShift> {
    read_json::<ModelFile>(path)?.into_shift()
}

pub fn load_ceiling(path: &Path, shift: &MarkovShift) -> Result<CylinderFunction> {
    read_json::<CeilingFile>(path)?.into_function(shift)
}

pub fn load_hole(path: &Path, shift: &MarkovShift) -> Result<Hole> {
    Hole::parse(shift, &read_json::<HoleFile>(path)?.word)
}

/// Binary64 at 17 significant digits; infinities as `inf`/`-inf`.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// A JSON number carrying exactly the digits of [`fmt17`]; non-finite values become strings.
pub fn json_f64(x: f64) -> serde_json::Value {
    if x.is_finite() {
        let n: serde_json::Number = fmt17(x).parse().expect("formatted float parses");
        serde_json::Value::Number(n)
    } else {
        serde_json::Value::String(fmt17(x))
    }
}

pub fn json_f64s(xs: &[f64]) -> serde_json::Value {
    serde_json::Value::Array(xs.iter().map(|x| json_f64(*x)).collect())
}

/// Render rows as CSV with [`fmt17`] cells.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(f64::INFINITY), "inf");
        assert_eq!(json_f64(2.0).to_string(), "2.0000000000000000e+0");
        assert_eq!(json_f64(f64::INFINITY), serde_json::json!("inf"));
        let back: f64 = fmt17(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn ceiling_round_trip() {
        let shift = MarkovShift::full(2);
        let text = r#"{"order": 2, "values": {"00": 1, "01": 2, "10": 1, "11": 3}, "lattice": 1.0}"#;
        let f = serde_json::from_str::<CeilingFile>(text).unwrap().into_function(&shift).unwrap();
        assert_eq!(f.value(&[1, 1]), 3.0);
        let back = CeilingFile::from_function(&shift, &f).into_function(&shift).unwrap();
        assert_eq!(back, f);
        let bad = r#"{"order": 1, "values": {"0": 1}}"#;
        assert!(serde_json::from_str::<CeilingFile>(bad).unwrap().into_function(&shift).is_err());
    }
}
