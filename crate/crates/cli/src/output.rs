//! Exit codes, the run manifest and CSV emission.

use std::fmt::Display;
use std::hash::Hasher;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use fnv::FnvHasher;
use lqreturn::{Error, ModelSpec, PotentialModel};

use crate::Common;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidModel(_) | Error::Domain(_) => EXIT_INPUT,
            Error::NonConvergence(_) | Error::InsufficientSamples(_) => EXIT_NUMERIC,
            Error::BudgetExceeded { .. } => EXIT_BUDGET,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// FNV-1a 64 of the canonical JSON of a model spec.
pub fn digest(spec: &ModelSpec) -> String {
    let mut h = FnvHasher::default();
    h.write(spec.to_canonical_json().as_bytes());
    format!("{:016x}", h.finish())
}

pub struct Loaded {
    pub model: PotentialModel,
    pub digest: String,
}

pub fn load_model(common: &Common) -> Result<Loaded, Failure> {
    let path = common
        .model
        .as_ref()
        .ok_or_else(|| Failure::input("--model is required for this command"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let spec = ModelSpec::from_json(&text)?;
    let model = PotentialModel::normalize(&spec)?;
    Ok(Loaded {
        digest: digest(&spec),
        model,
    })
}

/// Shortest round-trip rendering (exponent form outside `[1e-5, 1e16)`),
/// with `inf`/`-inf`/`nan` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::input(format!("cannot parse {what} value {t:?}")))
        })
        .collect()
}

/// A CSV document with `#` header lines.
pub struct Report {
    started: Instant,
    seed: u64,
    digest: Option<String>,
    header: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(common: &Common, digest: Option<&str>, columns: &[&str]) -> Self {
        Report {
            started: Instant::now(),
            seed: common.seed,
            digest: digest.map(str::to_string),
            header: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Display) {
        self.header.push(format!("{key}={value}"));
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.columns.len());
        self.rows.push(fields);
    }

    fn body(&self) -> Result<Vec<u8>, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Failure::numeric(format!("csv encoding failed: {e}"));
        w.write_record(&self.columns).map_err(fail)?;
        for r in &self.rows {
            w.write_record(r).map_err(fail)?;
        }
        w.into_inner()
            .map_err(|e| Failure::numeric(format!("csv encoding failed: {e}")))
    }

    pub fn render(&self) -> Result<Vec<u8>, Failure> {
        let mut out = Vec::new();
        let command: Vec<String> = std::env::args().collect();
        let _ = writeln!(out, "# lqreturn {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# command: {}", command.join(" "));
        if let Some(d) = &self.digest {
            let _ = writeln!(out, "# model_fnv1a64: {d}");
        }
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# wall_time_s: {:.3}", self.started.elapsed().as_secs_f64());
        for h in &self.header {
            let _ = writeln!(out, "# {h}");
        }
        out.extend(self.body()?);
        Ok(out)
    }

    pub fn emit(&self, path: Option<&Path>) -> Result<(), Failure> {
        write_bytes(path, &self.render()?)
    }
}

pub fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::input(format!("cannot write output: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_rendering() {
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(-2.0), "-2.0");
        assert_eq!(num(2.5e20), "2.5e20");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NAN), "nan");
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(Error::Domain("x".into())).code, EXIT_INPUT);
        assert_eq!(Failure::from(Error::NonConvergence("x".into())).code, EXIT_NUMERIC);
        let budget = Error::BudgetExceeded {
            what: "w",
            needed: 2,
            cap: 1,
        };
        assert_eq!(Failure::from(budget).code, EXIT_BUDGET);
    }

    #[test]
    fn digest_is_stable() {
        let spec = ModelSpec::bernoulli(&[0.5, 0.5]);
        assert_eq!(digest(&spec), digest(&spec.clone()));
        assert_ne!(digest(&spec), digest(&ModelSpec::bernoulli(&[0.4, 0.6])));
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("-1, 0.5,2", "q").unwrap(), vec![-1.0, 0.5, 2.0]);
        assert!(parse_list("1,x", "q").is_err());
    }
}
