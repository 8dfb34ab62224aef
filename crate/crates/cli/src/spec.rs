//! Run specification: command-line flags merged over an optional key=value
//! file merged over defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use poisson_control::{ModelParams, Variant};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Probe {
    Conjecture,
    Fluid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    Infinite,
    Finite,
    ObserverMm1,
    ObserverMminf,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Infinite => Variant::ControllerInfinite,
            VariantArg::Finite => Variant::ControllerFinite,
            VariantArg::ObserverMm1 => Variant::ObserverMM1,
            VariantArg::ObserverMminf => Variant::ObserverMMInf,
        }
    }
}

/// Flags shared by every subcommand. All optional so that a config file can
/// fill the gaps.
#[derive(Clone, Debug, Default, Args)]
pub struct Flags {
    /// key=value file with the same keys as the long flags
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub smax: Option<usize>,
    /// Largest queue length in emitted tables and oracle truncations
    #[arg(long)]
    pub qmax: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    pub probe: Option<Probe>,
    /// a:b:steps, log-spaced and inclusive
    #[arg(long = "nu-range")]
    pub nu_range: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Add a simulation run to `validate`
    #[arg(long)]
    pub simulate: bool,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub command: String,
    pub variant: VariantArg,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub smax: Option<usize>,
    pub qmax: Option<usize>,
    pub tol: f64,
    pub seed: u64,
    pub format: Format,
    pub out: Option<String>,
    pub probe: Option<Probe>,
    pub nu_range: Option<String>,
    pub horizon: f64,
    pub batches: usize,
    pub replications: usize,
    pub simulate: bool,
}

pub const KEYS: [&str; 17] = [
    "command",
    "variant",
    "lambda",
    "mu",
    "nu",
    "smax",
    "qmax",
    "tol",
    "seed",
    "format",
    "out",
    "probe",
    "nu-range",
    "horizon",
    "batches",
    "replications",
    "simulate",
];

fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped values").get_name().to_string()
}

fn parse_enum<T: ValueEnum>(key: &str, s: &str) -> Result<T, CliError> {
    T::from_str(s, false).map_err(|_| CliError::Invalid(format!("bad value `{s}` for `{key}`")))
}

fn parse_num<T: FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.parse()
        .map_err(|_| CliError::Invalid(format!("bad value `{s}` for `{key}`")))
}

/// Parses a flat key=value file. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key=value", n + 1)))?;
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(CliError::Invalid(format!("config line {}: unknown key `{k}`", n + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

impl RunSpec {
    /// Merges `flags` over `file` over defaults.
    pub fn resolve(command: &str, flags: &Flags, file: &BTreeMap<String, String>) -> Result<RunSpec, CliError> {
        let get = |k: &str| file.get(k).map(String::as_str);
        let num = |k: &str| -> Result<Option<f64>, CliError> { get(k).map(|s| parse_num(k, s)).transpose() };
        let int = |k: &str| -> Result<Option<usize>, CliError> { get(k).map(|s| parse_num(k, s)).transpose() };
        let variant = match flags.variant {
            Some(v) => v,
            None => match get("variant") {
                Some(s) => parse_enum("variant", s)?,
                None => return Err(CliError::Invalid("no variant given (--variant or config file)".into())),
            },
        };
        let format = match flags.format {
            Some(f) => f,
            None => get("format")
                .map(|s| parse_enum("format", s))
                .transpose()?
                .unwrap_or(Format::Csv),
        };
        let probe = match flags.probe {
            Some(p) => Some(p),
            None => get("probe").map(|s| parse_enum("probe", s)).transpose()?,
        };
        let smax = flags.smax.or(int("smax")?).or(match variant {
            VariantArg::Finite => Some(2),
            _ => None,
        });
        let simulate = flags.simulate
            || get("simulate")
                .map(|s| parse_num::<bool>("simulate", s))
                .transpose()?
                .unwrap_or(false);
        Ok(RunSpec {
            command: command.to_string(),
            variant,
            lambda: flags.lambda.or(num("lambda")?).unwrap_or(1.0),
            mu: flags.mu.or(num("mu")?).unwrap_or(1.0),
            nu: flags.nu.or(num("nu")?).unwrap_or(1.0),
            smax,
            qmax: flags.qmax.or(int("qmax")?),
            tol: flags.tol.or(num("tol")?).unwrap_or(1e-12),
            seed: match flags.seed {
                Some(s) => s,
                None => get("seed").map(|s| parse_num("seed", s)).transpose()?.unwrap_or(1),
            },
            format,
            out: flags.out.clone().or(get("out").map(str::to_string)),
            probe,
            nu_range: flags.nu_range.clone().or(get("nu-range").map(str::to_string)),
            horizon: flags.horizon.or(num("horizon")?).unwrap_or(1e5),
            batches: flags.batches.or(int("batches")?).unwrap_or(30),
            replications: flags.replications.or(int("replications")?).unwrap_or(1),
            simulate,
        })
    }

    pub fn load(command: &str, flags: &Flags) -> Result<RunSpec, CliError> {
        let file = match &flags.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        RunSpec::resolve(command, flags, &file)
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let (l, m, n) = (self.lambda, self.mu, self.nu);
        let p = match (self.variant, self.smax) {
            (VariantArg::Finite, Some(s)) => ModelParams::finite(l, m, n, s),
            (VariantArg::Finite, None) => unreachable!("finite variant always has a default smax"),
            (v, Some(_)) => {
                return Err(CliError::Invalid(format!(
                    "--smax does not apply to variant {}",
                    enum_name(&v)
                )))
            }
            (VariantArg::Infinite, None) => ModelParams::infinite(l, m, n),
            (VariantArg::ObserverMm1, None) => ModelParams::observer_mm1(l, m, n),
            (VariantArg::ObserverMminf, None) => ModelParams::observer_mminf(l, m, n),
        };
        p.validate_for_simulation()?;
        Ok(p)
    }

    /// The spec as key=value lines, readable back by [`parse_config`].
    /// Floats use the shortest representation that parses back exactly.
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("command", self.command.clone());
        put("variant", enum_name(&self.variant));
        put("lambda", self.lambda.to_string());
        put("mu", self.mu.to_string());
        put("nu", self.nu.to_string());
        if let Some(v) = self.smax {
            put("smax", v.to_string());
        }
        if let Some(v) = self.qmax {
            put("qmax", v.to_string());
        }
        put("tol", format!("{:e}", self.tol));
        put("seed", self.seed.to_string());
        put("format", enum_name(&self.format));
        if let Some(v) = &self.out {
            put("out", v.clone());
        }
        if let Some(v) = &self.probe {
            put("probe", enum_name(v));
        }
        if let Some(v) = &self.nu_range {
            put("nu-range", v.clone());
        }
        put("horizon", format!("{:e}", self.horizon));
        put("batches", self.batches.to_string());
        put("replications", self.replications.to_string());
        put("simulate", self.simulate.to_string());
        s
    }

    /// Reads back the output of [`RunSpec::to_config`].
    pub fn from_config(text: &str) -> Result<RunSpec, CliError> {
        let file = parse_config(text)?;
        let command = file
            .get("command")
            .cloned()
            .ok_or_else(|| CliError::Invalid("config has no command".into()))?;
        RunSpec::resolve(&command, &Flags::default(), &file)
    }
}

/// `a:b:steps` as `steps` log-spaced values from `a` to `b`, both included.
pub fn parse_nu_range(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Invalid(format!("--nu-range wants a:b:steps, got `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) || n == 0 || (n == 1 && a != b) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let (la, lb) = (a.ln(), b.ln());
    Ok((0..n)
        .map(|k| {
            if k == 0 {
                a
            } else if k == n - 1 {
                b
            } else {
                (la + (lb - la) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}
