//! Check records shared by every verifier, and the report envelope emitted by
//! the command line.

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

/// Formats a float with 17 significant digits; non-finite values become `null`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

pub(crate) fn serialize_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    let raw = RawValue::from_string(format_f64(*v)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

/// A named numeric quantity attached to a record.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub name: String,
    pub value: f64,
}

impl Serialize for Residual {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct F(f64);
        impl Serialize for F {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                serialize_f64(&self.0, s)
            }
        }
        let mut st = s.serialize_struct("Residual", 2)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("value", &F(self.value))?;
        st.end()
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    /// The statement this record certifies.
    pub reference: String,
    pub passed: bool,
    pub witness: Option<String>,
    pub residuals: Vec<Residual>,
}

impl CheckRecord {
    pub fn new(id: impl Into<String>, reference: impl Into<String>, passed: bool) -> Self {
        Self {
            id: id.into(),
            reference: reference.into(),
            passed,
            witness: None,
            residuals: Vec::new(),
        }
    }

    pub fn pass(id: impl Into<String>, reference: impl Into<String>) -> Self {
        Self::new(id, reference, true)
    }

    pub fn fail(id: impl Into<String>, reference: impl Into<String>, witness: impl Into<String>) -> Self {
        Self::new(id, reference, false).with_witness(witness)
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> Self {
        self.witness = Some(witness.into());
        self
    }

    pub fn with_residual(mut self, name: impl Into<String>, value: f64) -> Self {
        self.residuals.push(Residual {
            name: name.into(),
            value,
        });
        self
    }

    /// Passes iff `value <= bound`; records the value and the bound.
    pub fn bounded(id: impl Into<String>, reference: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(id, reference, value <= bound)
            .with_residual("value", value)
            .with_residual("bound", bound)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| r.name != "bound")
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }
}

/// Report of one command run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config_digest: String,
    pub records: Vec<CheckRecord>,
    pub exit_status: i32,
}

impl Report {
    pub fn new(command: impl Into<String>, config_digest: impl Into<String>, records: Vec<CheckRecord>) -> Self {
        let exit_status = if records.iter().all(|r| r.passed) { 0 } else { 1 };
        Self {
            command: command.into(),
            config_digest: config_digest.into(),
            records,
            exit_status,
        }
    }

    pub fn passed(&self) -> bool {
        self.exit_status == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("command: {}\nconfig: {}\n", self.command, self.config_digest);
        for r in &self.records {
            out.push_str(&format!(
                "[{}] {} ({})",
                if r.passed { "PASS" } else { "FAIL" },
                r.id,
                r.reference
            ));
            for res in &r.residuals {
                out.push_str(&format!(" {}={}", res.name, format_f64(res.value)));
            }
            if let Some(w) = &r.witness {
                out.push_str(&format!(" witness: {w}"));
            }
            out.push('\n');
        }
        out.push_str(&format!("exit status: {}\n", self.exit_status));
        out
    }
}

/// All records pass.
pub fn all_pass(records: &[CheckRecord]) -> bool {
    records.iter().all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(f64::INFINITY), "null");
        let r = CheckRecord::pass("x", "y").with_residual("r", 0.25);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"value\":2.5000000000000000e-1"), "{json}");
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["residuals"][0]["value"].as_f64(), Some(0.25));
    }

    #[test]
    fn exit_status_tracks_failures() {
        let ok = Report::new("c", "d", vec![CheckRecord::pass("a", "r")]);
        assert_eq!(ok.exit_status, 0);
        let bad = Report::new(
            "c",
            "d",
            vec![CheckRecord::pass("a", "r"), CheckRecord::fail("b", "r", "w")],
        );
        assert_eq!(bad.exit_status, 1);
        assert!(bad.to_text().contains("[FAIL] b"));
    }
}
