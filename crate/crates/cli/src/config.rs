//! TOML experiment files: one subcommand, its flags, and a graph given by
//! a generator section or a file.
//!
//! ```toml
//! command = "spectrum"
//! seed = 7
//! format = "csv"
//! out = "k3.csv"
//!
//! [graph]
//! kind = "complete"
//! n = 3
//!
//! [params]
//! count = 2
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use clap::Parser;
use conformal_core::{generate, GeneratorSpec};
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliError, CliResult};
use crate::output::Format;
use crate::{Cli, Command};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GeneratorSpec>,
    /// Subcommand flags without the leading dashes.
    #[serde(default)]
    pub params: BTreeMap<String, toml::Value>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| usage(format!("bad config: {e}")))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn flag_value(key: &str, v: &toml::Value) -> CliResult<Option<String>> {
        Ok(Some(match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => format!("{f:?}"),
            toml::Value::Boolean(true) => return Ok(None),
            toml::Value::Array(items) => items
                .iter()
                .map(|i| Self::flag_value(key, i).map(|s| s.unwrap_or_default()))
                .collect::<CliResult<Vec<_>>>()?
                .join(","),
            _ => return Err(usage(format!("unsupported value for `{key}`"))),
        }))
    }

    /// The equivalent command line (without any graph flag when a generator is given).
    pub fn argv(&self) -> CliResult<Vec<String>> {
        if self.command == "run" || self.command == "gen" && self.graph.is_some() {
            return Err(usage(format!("`{}` cannot be driven by a config with a [graph] section", self.command)));
        }
        let mut args = vec!["conformal-lab".to_string(), self.command.clone()];
        for (k, v) in &self.params {
            if matches!(v, toml::Value::Boolean(false)) {
                continue;
            }
            args.push(format!("--{k}"));
            if let Some(s) = Self::flag_value(k, v)? {
                args.push(s);
            }
        }
        args.extend(["--seed".into(), self.seed.to_string()]);
        if let Some(out) = &self.out {
            args.extend(["--out".into(), out.clone()]);
        }
        if let Some(f) = self.format {
            args.extend(["--format".into(), if f == Format::Csv { "csv" } else { "json" }.into()]);
        }
        match (&self.graph_file, &self.graph) {
            (Some(_), Some(_)) => return Err(usage("give either graph_file or [graph], not both")),
            (Some(path), None) => args.extend(["--graph".into(), path.clone()]),
            _ => {}
        }
        Ok(args)
    }
}

pub fn run_file(path: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let cfg = ExperimentConfig::parse(&text)?;
    let cli = Cli::try_parse_from(cfg.argv()?).map_err(|e| usage(format!("config flags: {e}")))?;
    if matches!(cli.command, Command::Run(_)) {
        return Err(usage("configs cannot nest `run`"));
    }
    let preset = cfg.graph.as_ref().map(generate).transpose()?;
    crate::commands::execute(cli.command, preset.as_ref())
}
