use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use onreg::class::{ClassFile, FunctionClass};
use onreg::exec::stream_rng;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(onreg::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<onreg::Error> for CliError {
    fn from(e: onreg::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub enum Outcome {
    Passed,
    Failed(String),
}

impl Outcome {
    pub fn failed_if(condition: bool, reason: impl FnOnce() -> String) -> Self {
        if condition {
            Outcome::Failed(reason())
        } else {
            Outcome::Passed
        }
    }
}

pub type CommandResult = Result<(Vec<u8>, Outcome), CliError>;

pub fn emit(out: Option<&Path>, csv: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => std::io::stdout().lock().write_all(csv)?,
    }
    Ok(())
}

/// `a..b` (half open) or a comma-separated list.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>, String> {
    let seeds: Vec<u64> = if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|e| format!("bad seed range `{spec}`: {e}"))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|e| format!("bad seed range `{spec}`: {e}"))?;
        (a..b).collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse().map_err(|e| format!("bad seed `{s}`: {e}")))
            .collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err("the seed list is empty".into());
    }
    Ok(seeds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForecasterKind {
    Finite,
    Vaw,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ClassArgs {
    /// Class file: `{"domain_size": m, "functions": {"name": [..]}}`.
    #[arg(long)]
    pub class: Option<PathBuf>,
    /// Size of the random class used when no file is given.
    #[arg(long, default_value_t = 4)]
    pub class_size: usize,
    /// Domain of the random class used when no file is given.
    #[arg(long, default_value_t = 8)]
    pub domain: usize,
}

impl ClassArgs {
    /// The class file, or a uniform random class drawn from stream 0 of `seed`.
    pub fn load(&self, seed: u64) -> Result<Arc<FunctionClass>, CliError> {
        match &self.class {
            Some(path) => Ok(Arc::new(ClassFile::load(path)?.into_class()?)),
            None => {
                if self.class_size == 0 || self.domain == 0 {
                    return Err(usage("--class-size and --domain must be positive"));
                }
                Ok(Arc::new(FunctionClass::random(
                    &mut stream_rng(seed, 0),
                    self.class_size,
                    self.domain,
                )))
            }
        }
    }
}

pub fn table(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    onreg::report::write_table(&mut out, header, rows)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5, 7").unwrap(), vec![5, 7]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
