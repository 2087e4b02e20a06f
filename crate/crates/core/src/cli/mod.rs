//! Command-line front end: configuration, orchestration and byte-stable outputs.

pub mod config;
pub mod format;

mod commands;
mod verify;

use serde::Serialize;
use serde_json::Value;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::Error;
pub use config::{Alpha, RunConfig, Tolerances};
use format::sci;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Basis,
    HEval,
    Solve,
    Landscape,
    Sigma,
    Audit,
    Resolvent,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::HEval => "h-eval",
            Command::Solve => "solve",
            Command::Landscape => "landscape",
            Command::Sigma => "sigma",
            Command::Audit => "audit",
            Command::Resolvent => "resolvent",
            Command::Verify => "verify",
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Failure of a command, with the stage that raised it.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical { stage: String, error: Error },
    Verification(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical { .. } => EXIT_NUMERICAL,
            Failure::Verification(_) => EXIT_VERIFICATION,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical { stage, error } => write!(f, "numerical failure in {stage}: {error}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

/// Attach a stage name to a library error. Input problems map to config
/// errors, everything else to numerical failures.
pub(crate) fn stage<T>(name: &str, r: crate::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| match e {
        Error::Config(m) => Failure::Config(m),
        Error::InvalidDomain(_) | Error::InvalidParameter(_) | Error::OutsideDomain(_) | Error::EmptyInterior { .. } | Error::Disconnected { .. } => {
            Failure::Config(format!("{name}: {e}"))
        }
        error => Failure::Numerical { stage: name.to_string(), error },
    })
}

/// Files produced by a command, written only after all computation is done.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body.into_bytes()));
    }

    pub fn bytes(&mut self, name: &str, body: Vec<u8>) {
        self.files.push((name.to_string(), body));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        self.text(name, to_json(value));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|f| f.0.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_slice())
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => out.push_str(&if x.is_finite() { sci(x) } else { "null".into() }),
            _ => out.push_str(&n.to_string()),
        },
        Value::Array(a) if !a.is_empty() => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if !m.is_empty() => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Pretty JSON with sorted keys, `%.12e` floats, null for non-finite values
/// and a final newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report serializes");
    let mut s = String::new();
    write_value(&v, 0, &mut s);
    s.push('\n');
    s
}

/// Run one command and collect its outputs. Verification failures still
/// return the outputs so the report can be written.
pub fn execute(command: Command, cfg: &RunConfig) -> (Outputs, std::result::Result<(), Failure>) {
    let mut out = Outputs::default();
    out.json("config.json", &cfg.resolved());
    let r = match command {
        Command::Basis => commands::basis(cfg, &mut out),
        Command::HEval => commands::h_eval(cfg, &mut out),
        Command::Solve => commands::solve(cfg, &mut out),
        Command::Landscape => commands::landscape(cfg, &mut out),
        Command::Sigma => commands::sigma(cfg, &mut out),
        Command::Audit => commands::audit(cfg, &mut out),
        Command::Resolvent => commands::resolvent(cfg, &mut out),
        Command::Verify => verify::verify(cfg, &mut out),
    };
    (out, r)
}

/// Load, run and write; returns the process exit code.
pub fn run(command: Command, config: &Path, out_dir: Option<PathBuf>) -> i32 {
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", Failure::Config(e.to_string()));
            return EXIT_CONFIG;
        }
    };
    let dir = out_dir.or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let (outputs, result) = execute(command, &cfg);
    let write_ok = match &result {
        Ok(()) | Err(Failure::Verification(_)) => outputs.write(&dir),
        Err(_) => Ok(()),
    };
    if let Err(e) = write_ok {
        eprintln!("numerical failure in output: {e}");
        return EXIT_NUMERICAL;
    }
    match result {
        Ok(()) => {
            for name in outputs.names() {
                println!("{}", dir.join(name).display());
            }
            EXIT_OK
        }
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_are_fixed_width_and_keys_sorted() {
        let v = serde_json::json!({"b": 0.1, "a": [1, 2.5e-300, f64::NAN]});
        let s = to_json(&v);
        assert_eq!(s, "{\n  \"a\": [\n    1,\n    2.500000000000e-300,\n    null\n  ],\n  \"b\": 1.000000000000e-01\n}\n");
    }
}
