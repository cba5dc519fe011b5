//! Registry of named, seeded experiments over the `bqsm` harnesses and the
//! machinery that runs one and renders its result as CSV or JSON.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Map, Value};

mod experiments;

pub use experiments::registry;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Failures of a run, by exit status.
#[derive(Debug)]
pub enum RunError {
    /// Unknown experiment, malformed or unknown parameter, or a library
    /// error rejecting the inputs.
    Parameter(String),
    /// Writing the output failed.
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Parameter(_) => 2,
            RunError::Io(_) => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            RunError::Parameter(m) => json!({"error": "parameter", "message": m}),
            RunError::Io(m) => json!({"error": "io", "message": m}),
        }
    }
}

impl From<bqsm::Error> for RunError {
    fn from(e: bqsm::Error) -> Self {
        RunError::Parameter(e.to_string())
    }
}

impl From<bqsm::QError> for RunError {
    fn from(e: bqsm::QError) -> Self {
        RunError::Parameter(e.to_string())
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub type Runner = fn(&Params, u64) -> RunResult<Outcome>;

#[derive(Clone)]
pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    /// Acceptance criterion reproduced by this experiment, if any.
    pub criterion: Option<u8>,
    pub params: Vec<ParamSpec>,
    pub run: Runner,
}

impl Experiment {
    pub fn schema(&self) -> Value {
        json!({
            "name": self.name,
            "description": self.description,
            "criterion": self.criterion,
            "params": self.params,
        })
    }
}

pub fn find(name: &str) -> Option<Experiment> {
    registry().into_iter().find(|e| e.name == name)
}

/// Experiments whose name contains `filter`.
pub fn list(filter: &str) -> Vec<Experiment> {
    registry().into_iter().filter(|e| e.name.contains(filter)).collect()
}

/// Resolved parameters: the declared defaults overridden by user values.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

fn bad<T>(name: &str, raw: &str, what: &str) -> RunResult<T> {
    Err(RunError::Parameter(format!("parameter {name} = {raw:?} is not {what}")))
}

impl Params {
    /// Rejects keys the experiment does not declare.
    pub fn resolve(exp: &Experiment, user: &BTreeMap<String, String>) -> RunResult<Self> {
        let mut values: BTreeMap<String, String> =
            exp.params.iter().map(|p| (p.name.to_string(), p.default.to_string())).collect();
        for (k, v) in user {
            if !values.contains_key(k) {
                let known: Vec<&str> = exp.params.iter().map(|p| p.name).collect();
                return Err(RunError::Parameter(format!(
                    "unknown parameter {k} for {} (known: {})",
                    exp.name,
                    known.join(", ")
                )));
            }
            values.insert(k.clone(), v.clone());
        }
        Ok(Self { values })
    }

    pub fn raw(&self, name: &str) -> &str {
        self.values.get(name).map(String::as_str).unwrap_or_else(|| panic!("undeclared parameter {name}"))
    }

    pub fn usize(&self, name: &str) -> RunResult<usize> {
        let r = self.raw(name);
        r.trim().parse().or_else(|_| bad(name, r, "a non-negative integer"))
    }

    pub fn u64(&self, name: &str) -> RunResult<u64> {
        let r = self.raw(name);
        r.trim().parse().or_else(|_| bad(name, r, "a non-negative integer"))
    }

    pub fn f64(&self, name: &str) -> RunResult<f64> {
        let r = self.raw(name);
        match r.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => bad(name, r, "a finite number"),
        }
    }

    pub fn usize_list(&self, name: &str) -> RunResult<Vec<usize>> {
        let r = self.raw(name);
        r.split(',').map(|s| s.trim().parse().or_else(|_| bad(name, r, "a comma-separated integer list"))).collect()
    }

    pub fn text(&self, name: &str) -> &str {
        self.raw(name).trim()
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.values.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
    }
}

/// Result of one experiment: a table and a summary. `violations` counts
/// checked bounds or criteria that failed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub rows: Vec<Map<String, Value>>,
    pub summary: Map<String, Value>,
    pub violations: usize,
}

impl Outcome {
    pub fn push(&mut self, row: Value) {
        match row {
            Value::Object(m) => self.rows.push(m),
            other => panic!("row must be an object, got {other}"),
        }
    }

    pub fn set(&mut self, key: &str, v: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(v).expect("summary values serialize"));
    }

    /// Records a check; a failed check counts as a violation.
    pub fn check(&mut self, ok: bool) -> bool {
        if !ok {
            self.violations += 1;
        }
        ok
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> RunResult<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(RunError::Parameter(format!("unknown format {s} (csv or json)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub format: Format,
}

/// Rounds to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    if !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(f) = n.as_f64() {
                *v = serde_json::Number::from_f64(round12(f)).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Runs a spec and renders the output; the flag is false when a bound or
/// criterion check failed.
pub fn execute(spec: &ExperimentSpec) -> RunResult<(String, bool)> {
    let exp = find(&spec.name).ok_or_else(|| RunError::Parameter(format!("unknown experiment {}", spec.name)))?;
    let params = Params::resolve(&exp, &spec.params)?;
    let outcome = (exp.run)(&params, spec.seed)?;
    let header = json!({
        "experiment": exp.name,
        "params": params.to_json(),
        "seed": spec.seed,
        "format": spec.format,
    });
    let mut summary = Value::Object(outcome.summary.clone());
    summary["violations"] = json!(outcome.violations);
    summary["passed"] = json!(outcome.passed());
    round_value(&mut summary);
    let mut rows: Vec<Value> = outcome.rows.iter().cloned().map(Value::Object).collect();
    rows.iter_mut().for_each(round_value);
    let text = match spec.format {
        Format::Json => {
            let doc = json!({
                "toolkit": "bqsm",
                "version": TOOLKIT_VERSION,
                "spec": header,
                "summary": summary,
                "rows": rows,
            });
            serde_json::to_string_pretty(&doc).expect("output serializes") + "\n"
        }
        Format::Csv => {
            let mut columns: Vec<String> = Vec::new();
            for r in &rows {
                for k in r.as_object().expect("rows are objects").keys() {
                    if !columns.contains(k) {
                        columns.push(k.clone());
                    }
                }
            }
            let mut out = format!("# bqsm {TOOLKIT_VERSION}\n# spec: {header}\n# summary: {summary}\n");
            let mut w = csv::Writer::from_writer(Vec::new());
            if !columns.is_empty() {
                w.write_record(&columns).map_err(|e| RunError::Io(e.to_string()))?;
                for r in &rows {
                    let rec: Vec<String> = columns.iter().map(|c| r.get(c).map(cell).unwrap_or_default()).collect();
                    w.write_record(&rec).map_err(|e| RunError::Io(e.to_string()))?;
                }
            }
            out.push_str(&String::from_utf8(w.into_inner().map_err(|e| RunError::Io(e.to_string()))?).expect("utf8"));
            out
        }
    };
    Ok((text, outcome.passed()))
}

/// Runs an experiment by name with string parameters, returning the raw
/// outcome.
pub fn run_named(name: &str, params: &[(&str, &str)], seed: u64) -> RunResult<Outcome> {
    let exp = find(name).ok_or_else(|| RunError::Parameter(format!("unknown experiment {name}")))?;
    let user = params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let p = Params::resolve(&exp, &user)?;
    (exp.run)(&p, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(0.0), 0.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let exp = find("qkd-thresholds").unwrap();
        let mut user = BTreeMap::new();
        user.insert("bogus".to_string(), "1".to_string());
        assert!(matches!(Params::resolve(&exp, &user), Err(RunError::Parameter(_))));
    }

    #[test]
    fn registry_names_unique_and_criteria_covered() {
        let reg = registry();
        let mut names: Vec<&str> = reg.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), reg.len());
        for c in 1..=17u8 {
            assert!(reg.iter().any(|e| e.criterion == Some(c)), "criterion {c} has no experiment");
        }
    }
}
