//! Output plumbing: report JSON (rounded, with an optional raw sidecar)
//! and CSV files.

use std::path::PathBuf;

use serde_json::Value;

/// Rounds every number in a JSON tree to 10 significant digits so reports
/// are stable to read; the raw sidecar keeps the exact values.
pub fn round_values(value: &Value) -> Value {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if f.is_finite() && n.as_i64().is_none() && n.as_u64().is_none() {
                    let rounded = format!("{f:.10e}").parse::<f64>().unwrap_or(f);
                    return serde_json::json!(rounded);
                }
            }
            value.clone()
        }
        Value::Array(items) => Value::Array(items.iter().map(round_values).collect()),
        Value::Object(map) => {
            Value::Object(map.iter().map(|(k, v)| (k.clone(), round_values(v))).collect())
        }
        _ => value.clone(),
    }
}

pub struct Emitter {
    dir: PathBuf,
    raw: bool,
}

impl Emitter {
    pub fn new(dir: Option<&str>, raw: bool) -> std::io::Result<Self> {
        let dir = PathBuf::from(dir.unwrap_or("."));
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, raw })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_report(&self, name: &str, report: &Value) -> std::io::Result<PathBuf> {
        let path = self.path(&format!("{name}.json"));
        let rounded = round_values(report);
        std::fs::write(&path, serde_json::to_string_pretty(&rounded).expect("serializable"))?;
        if self.raw {
            let raw_path = self.path(&format!("{name}.raw.json"));
            std::fs::write(&raw_path, serde_json::to_string_pretty(report).expect("serializable"))?;
        }
        println!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_text(&self, name: &str, body: &str) -> std::io::Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, body)?;
        println!("wrote {}", path.display());
        Ok(path)
    }
}
