use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use bqsm_cli::{execute, list, ExperimentSpec, Format, RunError, RunResult};
use clap::Parser;
use serde_json::{json, Value};

/// Runs a registered experiment, or `list [FILTER]` to show the registry.
#[derive(Parser, Debug)]
#[command(name = "bqsm", version)]
struct Cli {
    /// Experiment name (alternative to --experiment), or `list`.
    name: Option<String>,
    /// Extra `--key value` pairs, treated like `--param key=value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    extra: Vec<String>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    /// Repeatable `key=value`.
    #[arg(long = "param")]
    params: Vec<String>,
    /// JSON file with any of `experiment`, `seed`, `format`, `out`, `params`.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn perr<T>(msg: impl Into<String>) -> RunResult<T> {
    Err(RunError::Parameter(msg.into()))
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(value_text).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

struct Resolved {
    spec: ExperimentSpec,
    out: Option<PathBuf>,
}

fn resolve(mut cli: Cli) -> RunResult<Option<Resolved>> {
    let mut params: BTreeMap<String, String> = BTreeMap::new();
    let (mut experiment, mut seed, mut format, mut out) = (None, None, None, None);
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).or_else(|e| perr(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Value = serde_json::from_str(&text).or_else(|e| perr(format!("bad config {}: {e}", path.display())))?;
        let obj = cfg.as_object().ok_or_else(|| RunError::Parameter("config must be a JSON object".into()))?;
        for (k, v) in obj {
            match k.as_str() {
                "experiment" => experiment = v.as_str().map(str::to_string),
                "seed" => seed = Some(v.as_u64().ok_or_else(|| RunError::Parameter("config seed must be a u64".into()))?),
                "format" => format = v.as_str().map(str::to_string),
                "out" => out = v.as_str().map(PathBuf::from),
                "params" => {
                    let p = v.as_object().ok_or_else(|| RunError::Parameter("config params must be an object".into()))?;
                    params.extend(p.iter().map(|(k, v)| (k.clone(), value_text(v))));
                }
                other => return perr(format!("unknown config key {other}")),
            }
        }
    }
    if cli.name.as_deref() == Some("list") {
        let filter = cli.extra.first().cloned().unwrap_or_default();
        let items: Vec<Value> = list(&filter).iter().map(|e| e.schema()).collect();
        println!("{}", serde_json::to_string_pretty(&json!(items)).expect("listing serializes"));
        return Ok(None);
    }
    let mut extra = std::mem::take(&mut cli.extra).into_iter();
    while let Some(flag) = extra.next() {
        let Some(key) = flag.strip_prefix("--") else { return perr(format!("unexpected argument {flag}")) };
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => (key.to_string(), extra.next().ok_or_else(|| RunError::Parameter(format!("--{key} needs a value")))?),
        };
        match key.as_str() {
            "seed" => cli.seed = Some(value.parse().or_else(|_| perr(format!("bad seed {value}")))?),
            "out" => cli.out = Some(PathBuf::from(value)),
            "format" => cli.format = Some(value),
            "experiment" => cli.experiment = Some(value),
            _ => {
                params.insert(key, value);
            }
        }
    }
    for kv in &cli.params {
        let Some((k, v)) = kv.split_once('=') else { return perr(format!("--param {kv} is not key=value")) };
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    let name = match (cli.experiment.or(cli.name), experiment) {
        (Some(n), _) | (None, Some(n)) => n,
        (None, None) => return perr("no experiment given (use --experiment NAME or `list`)"),
    };
    let seed = cli.seed.or(seed).ok_or_else(|| RunError::Parameter("--seed is required".into()))?;
    let format = Format::parse(cli.format.or(format).as_deref().unwrap_or("csv"))?;
    Ok(Some(Resolved { spec: ExperimentSpec { name, params, seed, format }, out: cli.out.or(out) }))
}

fn run(cli: Cli) -> RunResult<bool> {
    let Some(r) = resolve(cli)? else { return Ok(true) };
    let (text, passed) = execute(&r.spec)?;
    match &r.out {
        Some(path) => std::fs::write(path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if !passed {
        eprintln!("{}", json!({"error": "bound_violation", "experiment": r.spec.name}));
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                eprintln!("{}", json!({"error": "parameter", "message": e.to_string()}));
                return ExitCode::from(2);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
