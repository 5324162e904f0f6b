//! `jr`: exact fundamental-lemma checks, Weil representation checks and
//! archimedean special values from JSON problem specs or flags.

mod commands;

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use commands::{cell, dispatch, parse_spec, CliError, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "jr", version, about = "Exact orbital-integral, Weil-representation and archimedean checks")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Residue characteristic.
    #[arg(long, global = true)]
    p: Option<u64>,
    /// Squarefree nonresidue defining the unramified extension.
    #[arg(long, global = true, allow_hyphen_values = true)]
    d: Option<i64>,
    /// Rank.
    #[arg(long, global = true)]
    m: Option<u64>,
    /// Largest moment valuation in sweeps.
    #[arg(long, global = true)]
    max_valuation: Option<u64>,
    /// Numerical tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Worker threads (overridden by JR_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for randomized commands; recorded in every report.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
struct Raw {
    /// Command parameters as a JSON object; flags override its keys.
    #[arg(long)]
    params: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a problem spec `{"command": .., "params": {..}}` from FILE or stdin.
    Run { file: Option<PathBuf> },
    /// Orbital integral on the symmetric side as a Laurent polynomial.
    OrbGl(Raw),
    /// Unitary lattice count.
    OrbU(Raw),
    /// Fundamental-lemma comparison for one invariant vector.
    FlCheck {
        #[command(flatten)]
        raw: Raw,
        /// Comma-separated characteristic polynomial coefficients, low to high.
        #[arg(long, allow_hyphen_values = true)]
        charpoly: Option<String>,
        /// Comma-separated moments.
        #[arg(long, allow_hyphen_values = true)]
        moments: Option<String>,
    },
    /// Fundamental-lemma sweep over a grid of invariant vectors.
    FlSweep(Raw),
    /// Cayley reduction with its identities and lift round trip.
    Reduce(Raw),
    /// Fourier involution and Weil-constant checks on a random space.
    WeilCheck {
        #[command(flatten)]
        raw: Raw,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        phase_level: Option<u64>,
    },
    /// Archimedean orbital integral of the Gaussian.
    Arch {
        #[command(flatten)]
        raw: Raw,
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long)]
        deriv: bool,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
    },
    /// Two-sided evaluation of the rank-one global functional equation.
    TateFe {
        #[command(flatten)]
        raw: Raw,
        #[arg(long, allow_hyphen_values = true)]
        disc: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long)]
        truncation: Option<u64>,
    },
}

const SEEDED: [&str; 2] = ["fl-sweep", "weil-check"];

fn parse_json(text: &str, what: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Schema(format!("{what}: {e}")))
}

fn raw_params(raw: &Raw) -> Result<Map<String, Value>, CliError> {
    match &raw.params {
        None => Ok(Map::new()),
        Some(t) => match parse_json(t, "--params")? {
            Value::Object(m) => Ok(m),
            _ => Err(CliError::Schema("--params must be a JSON object".into())),
        },
    }
}

fn list(s: &str) -> Value {
    Value::Array(s.split(',').map(|x| Value::String(x.trim().to_string())).collect())
}

fn set<T: Into<Value>>(m: &mut Map<String, Value>, k: &str, v: Option<T>) {
    if let Some(v) = v {
        m.insert(k.to_string(), v.into());
    }
}

/// Command name and merged params.
fn resolve(cli: &Cli) -> Result<(String, Map<String, Value>), CliError> {
    let (name, mut params) = match &cli.command {
        None | Some(Command::Run { .. }) => {
            let file = match &cli.command {
                Some(Command::Run { file }) => file.clone(),
                _ => None,
            };
            let text = match file {
                Some(f) if f.as_os_str() != "-" => std::fs::read_to_string(&f)?,
                _ => {
                    let mut s = String::new();
                    std::io::stdin().read_to_string(&mut s)?;
                    s
                }
            };
            let (cmd, params) = parse_spec(&parse_json(&text, "spec")?)?;
            (cmd, params.as_object().cloned().unwrap_or_default())
        }
        Some(Command::OrbGl(r)) => ("orb-gl".into(), raw_params(r)?),
        Some(Command::OrbU(r)) => ("orb-u".into(), raw_params(r)?),
        Some(Command::FlSweep(r)) => ("fl-sweep".into(), raw_params(r)?),
        Some(Command::Reduce(r)) => ("reduce".into(), raw_params(r)?),
        Some(Command::FlCheck { raw, charpoly, moments }) => {
            let mut m = raw_params(raw)?;
            set(&mut m, "charpoly", charpoly.as_deref().map(list));
            set(&mut m, "moments", moments.as_deref().map(list));
            ("fl-check".into(), m)
        }
        Some(Command::WeilCheck { raw, samples, phase_level }) => {
            let mut m = raw_params(raw)?;
            set(&mut m, "samples", *samples);
            set(&mut m, "phase_level", *phase_level);
            ("weil-check".into(), m)
        }
        Some(Command::Arch { raw, xi, s, deriv, a, b, theta }) => {
            let mut m = raw_params(raw)?;
            set(&mut m, "xi", *xi);
            set(&mut m, "s", *s);
            if *deriv {
                m.insert("deriv".into(), Value::Bool(true));
            }
            set(&mut m, "a", *a);
            set(&mut m, "b", *b);
            set(&mut m, "theta", *theta);
            ("arch".into(), m)
        }
        Some(Command::TateFe { raw, disc, s, truncation }) => {
            let mut m = raw_params(raw)?;
            set(&mut m, "disc", *disc);
            set(&mut m, "s", *s);
            set(&mut m, "truncation", *truncation);
            ("tate-fe".into(), m)
        }
    };
    set(&mut params, "p", cli.p);
    set(&mut params, "d", cli.d);
    set(&mut params, "m", cli.m);
    set(&mut params, "max_valuation", cli.max_valuation);
    set(&mut params, "tolerance", cli.tolerance);
    Ok((name, params))
}

fn render(cli: &Cli, name: &str, params: Map<String, Value>, seed: u64, out: &Outcome) -> Result<String, CliError> {
    let verdict = out.verdict.map(|v| if v { "PASS" } else { "FAIL" });
    match cli.format {
        Format::Json => {
            let mut report = json!({ "command": name, "params": params, "seed": seed, "result": out.result });
            if let Some(v) = verdict {
                report["verdict"] = json!(v);
            }
            Ok(serde_json::to_string_pretty(&report).expect("JSON values serialize") + "\n")
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
            match &out.rows {
                Some(rows) if !rows.is_empty() => {
                    let header: Vec<&String> = rows[0].keys().collect();
                    w.write_record(&header).map_err(io)?;
                    for r in rows {
                        w.write_record(header.iter().map(|k| cell(&r[k.as_str()]))).map_err(io)?;
                    }
                }
                _ => {
                    w.write_record(["key", "value"]).map_err(io)?;
                    w.write_record(["command", name]).map_err(io)?;
                    w.write_record(["seed", &seed.to_string()]).map_err(io)?;
                    if let Some(obj) = out.result.as_object() {
                        for (k, v) in obj {
                            w.write_record([k.as_str(), &cell(v)]).map_err(io)?;
                        }
                    }
                    if let Some(v) = verdict {
                        w.write_record(["verdict", v]).map_err(io)?;
                    }
                }
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
            Ok(String::from_utf8(bytes).expect("CSV of UTF-8 cells"))
        }
    }
}

fn run(cli: &Cli) -> Result<(String, Option<bool>), CliError> {
    let jobs = match std::env::var("JR_JOBS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| CliError::Schema(format!("JR_JOBS: not a count: {v:?}")))?),
        Err(_) => cli.jobs,
    };
    if let Some(n) = jobs {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let (name, mut params) = resolve(cli)?;
    let seed = match cli.seed {
        Some(s) => s,
        None => match params.get("seed") {
            Some(v) => v.as_u64().ok_or_else(|| CliError::Schema("seed: expected a nonnegative integer".into()))?,
            None => 0,
        },
    };
    if SEEDED.contains(&name.as_str()) {
        params.insert("seed".into(), json!(seed));
    } else {
        // Deterministic commands only record the seed.
        params.remove("seed");
    }
    let out = dispatch(&name, &Value::Object(params.clone()))?;
    Ok((render(cli, &name, params, seed, &out)?, out.verdict))
}

/// 1 for a FAIL verdict, 0 otherwise.
fn verdict_exit_code(verdict: Option<bool>) -> u8 {
    match verdict {
        Some(false) => 1,
        _ => 0,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, verdict)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(verdict_exit_code(verdict))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(verdict_exit_code(Some(false)), 1);
        assert_eq!(verdict_exit_code(Some(true)), 0);
        assert_eq!(verdict_exit_code(None), 0);
        assert_eq!(CliError::Schema(String::new()).exit_code(), 2);
        assert_eq!(CliError::Precondition(String::new()).exit_code(), 3);
    }

    #[test]
    fn fail_verdict_renders() {
        let cli = Cli::parse_from(["jr", "fl-sweep"]);
        let out = Outcome { result: json!({"x": 1}), rows: None, verdict: Some(false) };
        let text = render(&cli, "fl-sweep", Map::new(), 7, &out).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["verdict"], "FAIL");
        assert_eq!(v["seed"], 7);
    }
}
