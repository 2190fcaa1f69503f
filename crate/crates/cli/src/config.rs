use std::path::{Path, PathBuf};

use gridfn::experiments::{self, Config};
use serde_json::Value;

use crate::{Format, RunArgs};

/// A usage or configuration problem; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

/// Everything a `run` invocation needs after merging file and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiments: Vec<String>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub config: Config,
}

#[derive(Default)]
struct FileConfig {
    experiments: Vec<String>,
    out: Option<PathBuf>,
    format: Option<Format>,
    config: Config,
}

pub fn load_run_config(args: &RunArgs) -> Result<RunConfig, ConfigError> {
    let file = match &args.config {
        Some(path) => read_file_config(path)?,
        None => FileConfig::default(),
    };
    let mut config = file.config;
    apply_flags(&mut config, args);
    config.validate().map_err(|e| ConfigError(strip_prefix(e.to_string())))?;

    let experiments = if args.all {
        experiments::catalog().iter().map(|e| e.name.to_string()).collect()
    } else if !args.experiments.is_empty() {
        args.experiments.clone()
    } else {
        file.experiments
    };
    if experiments.is_empty() {
        return Err(ConfigError("experiment: no experiment selected (use --experiment or --all)".into()));
    }
    let known = experiments::catalog();
    if let Some(bad) = experiments.iter().find(|name| !known.iter().any(|e| e.name == name.as_str())) {
        return Err(ConfigError(format!("experiment: unknown experiment `{bad}` (see `gridfn list`)")));
    }
    Ok(RunConfig {
        experiments,
        out: args.out.clone().or(file.out),
        format: args.format.or(file.format).unwrap_or(Format::Csv),
        config,
    })
}

fn strip_prefix(message: String) -> String {
    message.strip_prefix("invalid argument: ").map(str::to_string).unwrap_or(message)
}

fn read_file_config(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("config: cannot read {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("config: {} is not valid JSON: {e}", path.display())))?;
    let Some(object) = value.as_object_mut() else {
        return Err(ConfigError("config: top level must be a JSON object".into()));
    };
    let experiments = match object.remove("experiment") {
        None => Vec::new(),
        Some(Value::String(s)) => vec![s],
        Some(Value::Array(items)) => items
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Ok(s),
                other => Err(ConfigError(format!("experiment: expected a string, got {other}"))),
            })
            .collect::<Result<_, _>>()?,
        Some(other) => {
            return Err(ConfigError(format!("experiment: expected a string or an array of strings, got {other}")))
        }
    };
    let out = match object.remove("out") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(other) => return Err(ConfigError(format!("out: expected a path string, got {other}"))),
    };
    let format = match object.remove("format") {
        None => None,
        Some(v) => Some(serde_json::from_value::<Format>(v).map_err(|e| ConfigError(format!("format: {e}")))?),
    };
    let config: Config = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ConfigError(format!("{path}: {}", e.into_inner()))
    })?;
    Ok(FileConfig { experiments, out, format, config })
}

fn apply_flags(config: &mut Config, args: &RunArgs) {
    if args.levels.is_some() {
        config.levels = args.levels;
    }
    if args.base.is_some() {
        config.base = args.base;
    }
    if args.window.is_some() {
        config.window = args.window;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.tol.is_some() {
        config.tol = args.tol;
    }
    if let Some(c) = args.battery_count {
        config.battery_count = c;
    }
    if let Some(r) = &args.radii {
        config.radii = Some([r[0], r[1]]);
    }
    if args.window_steps.is_some() {
        config.window_steps = args.window_steps;
    }
    if let Some(b) = args.bins {
        config.bins = b;
    }
    if args.cutoff.is_some() {
        config.cutoff = args.cutoff;
    }
    if let Some(m) = args.method {
        config.method = m.into();
    }
    if args.dt.is_some() {
        config.dt = args.dt;
    }
    if args.final_time.is_some() {
        config.final_time = args.final_time;
    }
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(r) = args.ramp {
        config.ramp = r.into();
    }
}
