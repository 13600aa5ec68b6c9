use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Slack allowed when comparing a measured value against its bound.
pub const VERIFY_TOL: f64 = 1e-6;

/// One bound evaluated at one parameter point, optionally checked against a
/// measurement.
///
/// `measured_lower` and `measured_upper` sandwich the measured quantity
/// (they coincide for exactly computable quantities). Upper-bound claims are
/// tested with the lower end, so `satisfied = measured_lower ≤ bound + tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub bound_value: f64,
    pub measured_lower: Option<f64>,
    pub measured_upper: Option<f64>,
    pub satisfied: Option<bool>,
    /// `bound − measured_lower`.
    pub margin: Option<f64>,
    /// Dimensions, tolerances and iteration counts behind the row.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, inputs: &[(&str, f64)], bound_value: f64) -> Self {
        Self {
            name: name.into(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            bound_value,
            measured_lower: None,
            measured_upper: None,
            satisfied: None,
            margin: None,
            provenance: BTreeMap::new(),
        }
    }

    pub fn with_measurement(mut self, lower: f64, upper: f64, tol: f64) -> Self {
        self.measured_lower = Some(lower);
        self.measured_upper = Some(upper);
        self.satisfied = Some(lower <= self.bound_value + tol);
        self.margin = Some(self.bound_value - lower);
        self
    }

    pub fn with_provenance(mut self, entries: &[(&str, f64)]) -> Self {
        self.provenance.extend(entries.iter().map(|(k, v)| (k.to_string(), *v)));
        self
    }

    pub fn violated(&self) -> bool {
        self.satisfied == Some(false)
    }
}

/// `x` with 12 significant digits, no exponent for moderate magnitudes.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci.split('e').nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    if (-5..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let (mantissa, e) = sci.split_once('e').unwrap_or((&sci, "0"));
        let m = if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
        format!("{m}e{e}")
    }
}

pub fn write_json_lines(reports: &[BoundReport], mut out: impl Write) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// CSV with columns `name, <inputs…>, bound, measured_lower, measured_upper,
/// satisfied, margin, <provenance…>`; input and provenance columns are the
/// sorted union over all rows, empty where a row lacks them.
pub fn write_csv(reports: &[BoundReport], mut out: impl Write) -> Result<()> {
    let inputs: BTreeSet<&str> = reports.iter().flat_map(|r| r.inputs.keys().map(String::as_str)).collect();
    let prov: BTreeSet<&str> = reports.iter().flat_map(|r| r.provenance.keys().map(String::as_str)).collect();
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();

    let mut header = vec!["name"];
    header.extend(inputs.iter());
    header.extend(["bound", "measured_lower", "measured_upper", "satisfied", "margin"]);
    header.extend(prov.iter());
    writeln!(out, "{}", header.join(","))?;

    for r in reports {
        let mut row = vec![csv_field(&r.name)];
        row.extend(inputs.iter().map(|k| opt(r.inputs.get(*k).copied())));
        row.push(format_float(r.bound_value));
        row.push(opt(r.measured_lower));
        row.push(opt(r.measured_upper));
        row.push(r.satisfied.map(|s| s.to_string()).unwrap_or_default());
        row.push(opt(r.margin));
        row.extend(prov.iter().map(|k| opt(r.provenance.get(*k).copied())));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
