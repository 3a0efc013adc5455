//! Flat `key = value` configuration files.
//!
//! One key per line, `#` starts a comment, lists are comma separated. Keys
//! are the field names of the network parameters, the simulation config and
//! the experiment spec. Anything else is rejected.

use std::path::{Path, PathBuf};

use txcap_core::{ExperimentSpec, Mode};

#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

pub const KEYS: &[&str] = &[
    "lambda",
    "d",
    "alpha",
    "theta",
    "beta",
    "L",
    "mode",
    "region_radius",
    "trials",
    "seed",
    "stream_count",
    "figure_id",
    "lambdas",
    "antennas",
    "epsilons",
    "modes",
    "channel_trials",
    "target_events",
    "min_trials",
    "max_trials",
    "auto_radius",
    "upper_samples",
    "output",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("bad value `{value}` for `{key}`: {e}"))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// Sets one field of `spec` from its textual value.
pub fn apply(spec: &mut ExperimentSpec, key: &str, value: &str) -> Result<(), String> {
    let b = &mut spec.base;
    let s = &mut spec.sim;
    match key {
        "lambda" => b.lambda = parse(key, value)?,
        "d" => b.d = parse(key, value)?,
        "alpha" => b.alpha = parse(key, value)?,
        "theta" => b.theta = parse(key, value)?,
        "beta" => b.beta = parse(key, value)?,
        "L" => b.antennas = parse(key, value)?,
        "mode" => s.mode = parse(key, value)?,
        "region_radius" => s.region_radius = parse(key, value)?,
        "trials" => s.trials = parse(key, value)?,
        "seed" => s.seed = parse(key, value)?,
        "stream_count" => s.stream_count = parse(key, value)?,
        "figure_id" => spec.figure_id = parse(key, value)?,
        "lambdas" => spec.lambdas = parse_list(key, value)?,
        "antennas" => spec.antennas = parse_list(key, value)?,
        "epsilons" => spec.epsilons = parse_list(key, value)?,
        "modes" => spec.modes = parse_list::<Mode>(key, value)?,
        "channel_trials" => spec.channel_trials = parse(key, value)?,
        "target_events" => spec.target_events = parse(key, value)?,
        "min_trials" => spec.min_trials = parse(key, value)?,
        "max_trials" => spec.max_trials = parse(key, value)?,
        "auto_radius" => spec.auto_radius = parse(key, value)?,
        "upper_samples" => spec.upper_samples = parse(key, value)?,
        "output" => spec.output = Some(PathBuf::from(value)),
        other => {
            return Err(format!(
                "unknown key `{other}` (known: {})",
                KEYS.join(", ")
            ))
        }
    }
    Ok(())
}

/// A parsed config file: `(line number, key, value)` in file order.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub entries: Vec<(usize, String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError {
                    line: i + 1,
                    message: format!("unknown key `{key}` (known: {})", KEYS.join(", ")),
                });
            }
            entries.push((i + 1, key.to_owned(), value.trim().to_owned()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Last value given for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(_, k, _)| k == key)
            .map(|(_, _, v)| v.as_str())
    }

    pub fn apply(&self, spec: &mut ExperimentSpec) -> Result<(), ConfigError> {
        for (line, key, value) in &self.entries {
            apply(spec, key, value).map_err(|message| ConfigError {
                line: *line,
                message,
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use txcap_core::FigureId;

    #[test]
    fn parses_every_kind_of_value() {
        let mut spec = ExperimentSpec::new(FigureId::Fig1);
        let text = "# comment\nlambda = 0.02\nL=3  # trailing\nmode = channel\nlambdas = 0.01, 0.02\nmodes = effective\nauto_radius = true\n\nfigure_id = fig3\n";
        let file = ConfigFile::parse(text).unwrap();
        assert_eq!(file.get("figure_id"), Some("fig3"));
        file.apply(&mut spec).unwrap();
        assert_eq!(spec.base.lambda, 0.02);
        assert_eq!(spec.base.antennas, 3);
        assert_eq!(spec.sim.mode, Mode::Channel);
        assert_eq!(spec.lambdas, vec![0.01, 0.02]);
        assert_eq!(spec.modes, vec![Mode::Effective]);
        assert!(spec.auto_radius);
        assert_eq!(spec.figure_id, FigureId::Fig3);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = ConfigFile::parse("lambda = 0.1\nlamda = 0.2\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("lamda"));
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let mut spec = ExperimentSpec::new(FigureId::Fig1);
        assert!(ConfigFile::parse("lambda 0.1").is_err());
        let file = ConfigFile::parse("trials = many").unwrap();
        assert_eq!(file.apply(&mut spec).unwrap_err().line, 1);
    }
}
