//! Verification reports and sweep tables.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// A parameter value recorded in a report.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum ParamValue {
    Int(i64),
    Num(f64),
    Text(String),
    List(Vec<f64>),
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Num(v)
    }
}
impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}
impl From<usize> for ParamValue {
    fn from(v: usize) -> Self {
        ParamValue::Int(v as i64)
    }
}
impl From<u64> for ParamValue {
    fn from(v: u64) -> Self {
        ParamValue::Int(v as i64)
    }
}
impl From<u32> for ParamValue {
    fn from(v: u32) -> Self {
        ParamValue::Int(v as i64)
    }
}
impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(String::from(v))
    }
}
impl From<Vec<f64>> for ParamValue {
    fn from(v: Vec<f64>) -> Self {
        ParamValue::List(v)
    }
}

#[cfg(feature = "serde")]
mod finite {
    //! Non-finite floats are written as `null` and read back as NaN.
    use alloc::collections::BTreeMap;
    use alloc::string::String;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn ser<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn de<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }

    pub fn ser_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            if v.is_finite() {
                map.serialize_entry(k, v)?;
            } else {
                map.serialize_entry(k, &Option::<f64>::None)?;
            }
        }
        map.end()
    }

    pub fn de_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let m = BTreeMap::<String, Option<f64>>::deserialize(d)?;
        Ok(m.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
    }
}

/// Outcome of one named check.
///
/// `pass` holds iff every fitted value listed in `limits` respects its bound
/// (see [`VerificationReport::finish`]).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationReport {
    pub check: String,
    pub params: BTreeMap<String, ParamValue>,
    pub seed: u64,
    pub samples: u64,
    #[cfg_attr(feature = "serde", serde(serialize_with = "finite::ser", deserialize_with = "finite::de"))]
    pub ratio_min: f64,
    #[cfg_attr(feature = "serde", serde(serialize_with = "finite::ser", deserialize_with = "finite::de"))]
    pub ratio_max: f64,
    #[cfg_attr(feature = "serde", serde(serialize_with = "finite::ser_map", deserialize_with = "finite::de_map"))]
    pub fitted: BTreeMap<String, f64>,
    #[cfg_attr(feature = "serde", serde(serialize_with = "finite::ser", deserialize_with = "finite::de"))]
    pub threshold: f64,
    pub pass: bool,
    pub runtime_ms: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub notes: Vec<String>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub warnings: Vec<String>,
    /// Named pass conditions, in evaluation order.
    #[cfg_attr(feature = "serde", serde(default))]
    pub conditions: Vec<Condition>,
}

/// One pass condition of a report: `value` must lie in `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Condition {
    pub name: String,
    #[cfg_attr(feature = "serde", serde(serialize_with = "finite::ser", deserialize_with = "finite::de"))]
    pub value: f64,
    #[cfg_attr(feature = "serde", serde(serialize_with = "finite::ser", deserialize_with = "finite::de"))]
    pub lo: f64,
    #[cfg_attr(feature = "serde", serde(serialize_with = "finite::ser", deserialize_with = "finite::de"))]
    pub hi: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(check: &str, seed: u64) -> Self {
        VerificationReport {
            check: String::from(check),
            params: BTreeMap::new(),
            seed,
            samples: 0,
            ratio_min: f64::INFINITY,
            ratio_max: 0.0,
            fitted: BTreeMap::new(),
            threshold: f64::NAN,
            pass: false,
            runtime_ms: 0,
            notes: Vec::new(),
            warnings: Vec::new(),
            conditions: Vec::new(),
        }
    }

    pub fn param<V: Into<ParamValue>>(&mut self, k: &str, v: V) -> &mut Self {
        self.params.insert(String::from(k), v.into());
        self
    }

    pub fn fit(&mut self, k: &str, v: f64) -> &mut Self {
        self.fitted.insert(String::from(k), v);
        self
    }

    pub fn note(&mut self, s: &str) -> &mut Self {
        self.notes.push(String::from(s));
        self
    }

    pub fn warn(&mut self, s: String) -> &mut Self {
        self.warnings.push(s);
        self
    }

    /// Folds one ratio into `ratio_min`/`ratio_max` and counts a sample.
    pub fn observe(&mut self, r: f64) {
        self.samples += 1;
        if r.is_nan() {
            self.ratio_max = f64::NAN;
            return;
        }
        self.ratio_min = self.ratio_min.min(r);
        if !self.ratio_max.is_nan() {
            self.ratio_max = self.ratio_max.max(r);
        }
    }

    /// Adds a condition `lo <= value <= hi` (NaN never passes).
    pub fn require(&mut self, name: &str, value: f64, lo: f64, hi: f64) -> &mut Self {
        let pass = value >= lo && value <= hi;
        self.conditions.push(Condition { name: String::from(name), value, lo, hi, pass });
        self
    }

    /// Sets `pass` from the conditions; a report without conditions fails.
    pub fn finish(&mut self) -> &mut Self {
        self.pass = !self.conditions.is_empty() && self.conditions.iter().all(|c| c.pass);
        self
    }

    pub fn failed_conditions(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.pass)
    }
}

/// One plot-ready row: inputs, the two compared quantities and their ratio.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub index: u64,
    pub inputs: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// A named table of [`SweepRow`]s.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sweep {
    pub name: String,
    pub input_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl Sweep {
    pub fn new(name: &str, inputs: &[&str]) -> Self {
        Sweep {
            name: String::from(name),
            input_names: inputs.iter().map(|s| String::from(*s)).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, inputs: Vec<f64>, lhs: f64, rhs: f64) {
        let index = self.rows.len() as u64;
        self.rows.push(SweepRow { index, inputs, lhs, rhs, ratio: lhs / rhs });
    }
}

/// A report with the sweeps that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub report: VerificationReport,
    pub sweeps: Vec<Sweep>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_requires_conditions() {
        let mut r = VerificationReport::new("x", 1);
        r.finish();
        assert!(!r.pass);
        r.require("a", 1.0, 0.0, 2.0).finish();
        assert!(r.pass);
        r.require("b", f64::NAN, 0.0, 2.0).finish();
        assert!(!r.pass);
        assert_eq!(r.failed_conditions().count(), 1);
    }

    #[test]
    fn observe_tracks_extremes() {
        let mut r = VerificationReport::new("x", 1);
        for v in [2.0, 0.5, 3.0] {
            r.observe(v);
        }
        assert_eq!((r.samples, r.ratio_min, r.ratio_max), (3, 0.5, 3.0));
    }
}
