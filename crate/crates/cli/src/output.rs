use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

use crate::args::{Format, ModelArgs, OutputArgs};
use crate::CliError;

/// Everything needed to replay a run; echoed into JSON reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub scenario: Option<String>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub r: Option<usize>,
    pub replicates: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub gamma: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub format: Format,
    pub output: Option<PathBuf>,
    /// Command-specific settings.
    pub options: BTreeMap<&'static str, Value>,
}

impl RunConfig {
    pub fn new(command: &'static str, out: &OutputArgs, default_format: Format) -> Self {
        Self {
            command,
            scenario: None,
            config: None,
            seed: None,
            r: None,
            replicates: None,
            sizes: None,
            gamma: None,
            t: None,
            t_grid: None,
            format: out.format.unwrap_or(default_format),
            output: out.output.clone(),
            options: BTreeMap::new(),
        }
    }

    pub fn with_model(mut self, m: &ModelArgs) -> Self {
        self.scenario = m.scenario.clone();
        self.config = m.config.clone();
        self.sizes = m.sizes.clone();
        self.t = m.t;
        self.t_grid = m.t_grid.clone();
        self
    }

    pub fn option(&mut self, key: &'static str, value: impl Serialize) {
        self.options
            .insert(key, serde_json::to_value(value).expect("serializable option"));
    }
}

/// A result in both encodings.
pub struct Report {
    pub result: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Preformatted CSV, used instead of `header`/`rows` when present.
    pub csv: Option<String>,
}

impl Report {
    pub fn new(result: impl Serialize, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        Self {
            result: serde_json::to_value(result).expect("serializable result"),
            header,
            rows,
            csv: None,
        }
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

pub fn render(config: &RunConfig, report: Report) -> Result<String, CliError> {
    match config.format {
        Format::Json => {
            let doc = serde_json::json!({ "config": config, "result": report.result });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => match report.csv {
            Some(csv) => Ok(csv),
            None => Ok(resamplex::reproduce::to_csv(&report.header, &report.rows)?),
        },
    }
}

pub fn emit(config: &RunConfig, report: Report) -> Result<(), CliError> {
    let text = render(config, report)?;
    match &config.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}
