//! CSV and summary writers. Numbers use Rust's shortest round-trip format,
//! so identical results give byte-identical files.

use std::fs;
use std::path::Path;

use crate::RunError;

/// Keys every summary reports, `NA` when a subcommand does not compute them.
pub const HEADLINE_KEYS: [&str; 7] = [
    "theorem_case",
    "lambda_hat",
    "lambda_se",
    "inf_V",
    "qsd_tv_check",
    "decay_slope",
    "decay_r2",
];

pub const CONFIG_MARKER: &str = "# resolved config";

#[derive(Debug, Default)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    fn render(&self) -> String {
        let mut text = String::from("status = ok\n");
        let value = |key: &str| self.entries.iter().find(|(k, _)| k == key).map(|e| e.1.as_str());
        for key in HEADLINE_KEYS {
            text.push_str(&format!("{key} = {}\n", value(key).unwrap_or("NA")));
        }
        for (k, v) in self.entries.iter().filter(|(k, _)| !HEADLINE_KEYS.contains(&k.as_str())) {
            text.push_str(&format!("{k} = {v}\n"));
        }
        text
    }

    /// Writes `summary.txt` with the resolved config appended after
    /// [`CONFIG_MARKER`], and the config alone as `config.toml`.
    pub fn write(&self, dir: &Path, config_toml: &str) -> Result<(), RunError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.txt"), format!("{}{CONFIG_MARKER}\n{config_toml}", self.render()))?;
        fs::write(dir.join("config.toml"), config_toml)?;
        Ok(())
    }
}

pub fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(name)).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> RunError {
    RunError::Io(std::io::Error::other(e.to_string()))
}

/// Header names `prefix_0, …, prefix_{n−1}`.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}_{i}")).collect()
}

pub fn write_failure(dir: &Path, kind: &str, code: u8, reason: &str) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("summary.txt"),
        format!("status = error\nerror_kind = {kind}\nexit_code = {code}\nreason = {reason}\n"),
    )
}
