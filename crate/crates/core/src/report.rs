//! Report data types and a canonical JSON emitter: object keys sorted, floats
//! rendered with 17 significant digits, so identical analyses produce
//! byte-identical report files on every platform.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisStatus {
    Holds,
    Fails,
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub status: HypothesisStatus,
    pub witness: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    StronglyConvergent,
    NoNontrivialUnimodularEigenvalue,
    NoVerdict,
}

impl Conclusion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Conclusion::StronglyConvergent => "strongly-convergent",
            Conclusion::NoNontrivialUnimodularEigenvalue => {
                "no-nontrivial-unimodular-eigenvalue"
            }
            Conclusion::NoVerdict => "no-verdict",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub rule: String,
    pub applicable: bool,
    pub conclusion: Conclusion,
    /// names of the hypotheses consumed by an applicable verdict; all of them
    /// must have status `holds`
    pub consumed: Vec<String>,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueEntry {
    /// per-generator eigenvalue tuple as `[re, im]` pairs
    pub per_generator: Vec<[f64; 2]>,
    /// continuous time: the generator eigenvalue `mu` with `lambda_t = exp(t mu)`
    pub generator_exponent: Option<[f64; 2]>,
    pub trivial: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub chain: String,
    pub probes: usize,
    pub horizon: usize,
    pub achieved_residual: f64,
    pub time_to_tolerance: Option<f64>,
    pub cross_check: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpaceSummary {
    pub dimension: usize,
    pub exponent: String,
    pub pure_atomic: bool,
    pub order_continuous_norm: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub version: String,
    pub space: SpaceSummary,
    pub kind: String,
    pub index_class: Value,
    pub hypotheses: Vec<Hypothesis>,
    pub verdicts: Vec<Verdict>,
    pub conclusion: Conclusion,
    pub limit_projection: Option<Vec<Vec<f64>>>,
    pub eigenvalues: Vec<EigenvalueEntry>,
    pub simulation: Option<SimulationSummary>,
    pub options: Value,
}

impl AnalysisReport {
    pub fn hypothesis(&self, name: &str) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.name == name)
    }

    pub fn verdict(&self, rule: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.rule == rule)
    }

    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut out = String::new();
        write_canonical(&value, 0, &mut out);
        out.push('\n');
        out
    }
}

fn write_canonical(value: &Value, indent: usize, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string escapes"));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                newline(indent + 1, out);
                write_canonical(item, indent + 1, out);
            }
            newline(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                newline(indent + 1, out);
                out.push_str(&serde_json::to_string(key).expect("key escapes"));
                out.push_str(": ");
                write_canonical(&map[*key], indent + 1, out);
            }
            newline(indent, out);
            out.push('}');
        }
    }
}

fn newline(indent: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// Fixed 17-significant-digit scientific notation; platform independent.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "\"nan\"".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "\"inf\"".into() } else { "\"-inf\"".into() };
    }
    format!("{x:.16e}")
}

/// Canonical rendering of an arbitrary JSON value (used for report fragments).
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, 0, &mut out);
    out
}
