use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutputDir { root: root.to_path_buf(), written: vec![] })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Column-oriented CSV; all columns must have the same length.
    pub fn csv(&mut self, name: &str, header: &[String], columns: &[Vec<f64>]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        let rows = columns.first().map_or(0, Vec::len);
        for r in 0..rows {
            w.write_record(columns.iter().map(|c| fmt_num(c[r])))?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn report<T: Serialize>(&mut self, name: &str, doc: &T) -> Result<(), CliError> {
        let value = toml::Value::try_from(doc).map_err(|e| CliError::Io(format!("serializing {name}: {e}")))?;
        let mut text = String::new();
        if let toml::Value::Table(t) = &value {
            emit_table(&mut text, "", t);
        }
        let path = self.path(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn raw(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

/// TOML float literal; always carries a `.` or exponent so it reads back as a float.
fn toml_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = fmt_num(v);
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn inline(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(f) => toml_float(*f),
        toml::Value::Array(a) => format!("[{}]", a.iter().map(inline).collect::<Vec<_>>().join(", ")),
        toml::Value::Table(t) => format!(
            "{{ {} }}",
            t.iter().map(|(k, v)| format!("{} = {}", toml::Value::String(k.clone()), inline(v))).collect::<Vec<_>>().join(", ")
        ),
        other => other.to_string(),
    }
}

fn is_table_array(v: &toml::Value) -> bool {
    matches!(v, toml::Value::Array(a) if !a.is_empty() && a.iter().all(toml::Value::is_table))
}

/// Writes scalars and inline arrays first, then sub-tables and arrays of tables.
fn emit_table(out: &mut String, prefix: &str, t: &toml::Table) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    for (k, v) in t {
        if !v.is_table() && !is_table_array(v) {
            out.push_str(&format!("{k} = {}\n", inline(v)));
        }
    }
    for (k, v) in t {
        match v {
            toml::Value::Table(sub) => {
                out.push_str(&format!("\n[{}]\n", key(k)));
                emit_table(out, &key(k), sub);
            }
            toml::Value::Array(items) if is_table_array(v) => {
                for item in items {
                    out.push_str(&format!("\n[[{}]]\n", key(k)));
                    if let toml::Value::Table(sub) = item {
                        emit_table(out, &key(k), sub);
                    }
                }
            }
            _ => {}
        }
    }
}
