//! Run configuration: flags override the TOML file, which overrides the
//! environment, which overrides built-in defaults.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use dilute_cw::cumulants::PressureSource;
use dilute_cw::export::Format;
use dilute_cw::verify::Profile;
use dilute_cw::xprec::DEFAULT_DIGITS;
use dilute_cw::{validate_params, ModelParams, Precision};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::CommonArgs;

pub const PRECISION_ENV: &str = "DILUTE_CW_PRECISION";
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_INVARIANT: u8 = 4;

/// Error reported to the user as JSON on stderr.
#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: "ConfigError".into(),
            message: message.into(),
            code: EXIT_CONFIG,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            kind: "IoError".into(),
            message: format!("{}: {err}", path.display()),
            code: EXIT_CONFIG,
        }
    }

    pub fn report(&self) -> ExitCode {
        let body = json!({
            "error": self.kind,
            "message": self.message,
            "exit_code": self.code,
        });
        eprintln!("{body}");
        ExitCode::from(self.code)
    }
}

impl From<dilute_cw::Error> for CliError {
    fn from(e: dilute_cw::Error) -> Self {
        Self {
            kind: e.kind().into(),
            message: e.to_string(),
            code: if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERICAL
            },
        }
    }
}

/// Mirror of the flags, read from a TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(rename = "N")]
    n: Option<i64>,
    #[serde(rename = "N_schedule")]
    n_schedule: Option<Vec<i64>>,
    p: Option<f64>,
    p_schedule: Option<String>,
    beta: Option<f64>,
    h0: Option<f64>,
    #[serde(rename = "J")]
    j: Option<usize>,
    #[serde(rename = "R")]
    r: Option<f64>,
    #[serde(rename = "K")]
    k: Option<usize>,
    source: Option<String>,
    precision_digits: Option<u32>,
    out: Option<PathBuf>,
    format: Option<String>,
    profile: Option<String>,
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// `p(N) = c N^{-gamma}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PSchedule {
    pub c: f64,
    pub gamma: f64,
}

impl PSchedule {
    /// Parses `c,gamma`; `gamma < 2/3` keeps `p^3 N^2` growing.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [c, gamma] = parts.as_slice() else {
            return Err(CliError::config(format!(
                "p-schedule `{s}` must be `c,gamma`"
            )));
        };
        let c: f64 = c.parse().map_err(|_| {
            CliError::config(format!("p-schedule coefficient `{c}` is not a number"))
        })?;
        let gamma: f64 = gamma.parse().map_err(|_| {
            CliError::config(format!("p-schedule exponent `{gamma}` is not a number"))
        })?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(CliError::config(format!(
                "p-schedule coefficient must be positive, got {c}"
            )));
        }
        if !(0.0..2.0 / 3.0).contains(&gamma) {
            return Err(CliError::config(format!(
                "p-schedule exponent must satisfy 0 <= gamma < 2/3, got {gamma}"
            )));
        }
        Ok(Self { c, gamma })
    }

    pub fn at(&self, n: i64) -> f64 {
        self.c * (n as f64).powf(-self.gamma)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub n: Option<i64>,
    pub n_schedule: Option<Vec<i64>>,
    pub p: Option<f64>,
    pub p_schedule: Option<PSchedule>,
    pub beta: Option<f64>,
    pub h0: f64,
    pub j: Option<usize>,
    pub r: Option<f64>,
    pub k: Option<usize>,
    pub source: Option<PressureSource>,
    pub precision: Precision,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub profile: Profile,
}

fn parse_source(s: &str) -> Result<PressureSource, CliError> {
    match s {
        "exact" => Ok(PressureSource::Exact),
        "asymptotic" => Ok(PressureSource::Asymptotic),
        other => Err(CliError::config(format!(
            "unknown source `{other}` (expected exact or asymptotic)"
        ))),
    }
}

fn env_digits() -> Result<Option<u32>, CliError> {
    match std::env::var(PRECISION_ENV) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                CliError::config(format!("{PRECISION_ENV}=`{v}` is not a digit count"))
            })
        }
        Err(_) => Ok(None),
    }
}

pub fn resolve(
    command: &'static str,
    args: &CommonArgs,
    profile: Option<String>,
    n_schedule: Option<Vec<i64>>,
) -> Result<RunConfig, CliError> {
    let file = match &args.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };

    let p = args.p.or(file.p);
    let p_schedule = args
        .p_schedule
        .clone()
        .or(file.p_schedule)
        .map(|s| PSchedule::parse(&s))
        .transpose()?;
    if p.is_some() && p_schedule.is_some() {
        return Err(CliError::config("give either p or p-schedule, not both"));
    }
    let digits = match args.precision_digits.or(file.precision_digits) {
        Some(d) => d,
        None => env_digits()?.unwrap_or(DEFAULT_DIGITS),
    };
    let format = args
        .format
        .clone()
        .or(file.format)
        .map(|f| f.parse::<Format>().map_err(CliError::config))
        .transpose()?
        .unwrap_or(Format::Csv);
    let profile = profile
        .or(file.profile)
        .map(|p| p.parse::<Profile>().map_err(CliError::config))
        .transpose()?
        .unwrap_or(Profile::Quick);
    let source = args
        .source
        .clone()
        .or(file.source)
        .map(|s| parse_source(&s))
        .transpose()?;
    let h0 = args.h0.or(file.h0).unwrap_or(0.0);

    Ok(RunConfig {
        command,
        n: args.n.or(file.n),
        n_schedule: n_schedule.or(file.n_schedule),
        p,
        p_schedule,
        beta: args.beta.or(file.beta),
        h0,
        j: args.j.or(file.j),
        r: args.r.or(file.r),
        k: args.k.or(file.k),
        source,
        precision: Precision::from_digits(digits),
        out: args.out.clone().or(file.out),
        format,
        profile,
    })
}

impl RunConfig {
    pub fn require_n(&self) -> Result<i64, CliError> {
        self.n
            .ok_or_else(|| CliError::config("missing required parameter N"))
    }

    pub fn require_beta(&self) -> Result<f64, CliError> {
        self.beta
            .ok_or_else(|| CliError::config("missing required parameter beta"))
    }

    /// Edge probability at size `n`: schedule, fixed value, or 1.
    pub fn p_at(&self, n: i64) -> f64 {
        match (self.p_schedule, self.p) {
            (Some(s), _) => s.at(n),
            (None, Some(p)) => p,
            (None, None) => 1.0,
        }
    }

    pub fn model_at(&self, n: i64, h0: f64) -> Result<ModelParams, CliError> {
        Ok(validate_params(n, self.p_at(n), self.require_beta()?, h0)?)
    }

    pub fn model(&self) -> Result<ModelParams, CliError> {
        self.model_at(self.require_n()?, self.h0)
    }

    /// Provenance block common to all commands.
    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "N": self.n,
            "N_schedule": self.n_schedule,
            "p": self.p,
            "p_schedule": self.p_schedule.map(|s| json!({"c": s.c, "gamma": s.gamma})),
            "beta": self.beta,
            "h0": self.h0,
            "precision_digits": self.precision.digits(),
            "format": match self.format { Format::Csv => "csv", Format::Json => "json" },
            "out": self.out.as_ref().map(|p| p.display().to_string()),
        })
    }
}
