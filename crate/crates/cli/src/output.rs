//! Solution files and atomic writes.

use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::CliError;

/// Named blocks of numbers, stored as `block,index,value` rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Solution {
    blocks: Vec<(String, Vec<f64>)>,
}

impl Solution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, values: impl IntoIterator<Item = f64>) {
        self.blocks.push((name.into(), values.into_iter().collect()));
    }

    pub fn blocks(&self) -> &[(String, Vec<f64>)] {
        &self.blocks
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.blocks.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// The block `name`, which must have `len` entries.
    pub fn require(&self, name: &str, len: usize) -> Result<&[f64], CliError> {
        let values = self
            .get(name)
            .ok_or_else(|| CliError::Solution(format!("missing block `{name}`")))?;
        if values.len() != len {
            return Err(CliError::Solution(format!(
                "block `{name}` has {} entries, the problem needs {len}",
                values.len()
            )));
        }
        Ok(values)
    }

    /// A one-entry block holding a positive step size.
    pub fn step(&self) -> Result<f64, CliError> {
        let step = self.require("step", 1)?[0];
        if !(step > 0.0 && step.is_finite()) {
            return Err(CliError::Solution(format!("step must be positive, found {step}")));
        }
        Ok(step)
    }

    /// Values print with the shortest representation that parses back to
    /// the same `f64`.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["block", "index", "value"]).expect("in-memory write");
        for (name, values) in &self.blocks {
            for (i, v) in values.iter().enumerate() {
                writer
                    .write_record([name.as_str(), &i.to_string(), &v.to_string()])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn from_csv_str(text: &str) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| CliError::Solution(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["block", "index", "value"] {
            return Err(CliError::Solution(format!(
                "expected header block,index,value, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut out = Solution::new();
        for (row, record) in reader.records().enumerate() {
            let line = row + 2;
            let record = record.map_err(|e| CliError::Solution(format!("line {line}: {e}")))?;
            let name = &record[0];
            let index: usize = record[1]
                .parse()
                .map_err(|e| CliError::Solution(format!("line {line}: index `{}`: {e}", &record[1])))?;
            let value: f64 = record[2]
                .parse()
                .map_err(|e| CliError::Solution(format!("line {line}: value `{}`: {e}", &record[2])))?;
            let block = match out.blocks.last_mut() {
                Some((n, values)) if n == name => values,
                _ => {
                    if out.get(name).is_some() {
                        return Err(CliError::Solution(format!("line {line}: block `{name}` is split")));
                    }
                    out.blocks.push((name.to_string(), Vec::new()));
                    &mut out.blocks.last_mut().expect("just pushed").1
                }
            };
            if index != block.len() {
                return Err(CliError::Solution(format!(
                    "line {line}: block `{name}` expects index {}, found {index}",
                    block.len()
                )));
            }
            block.push(value);
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
        Self::from_csv_str(&text)
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
    let context = || format!("cannot write {}", path.display());
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(context(), e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(context(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(context(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(context(), e.error))?;
    Ok(())
}
