//! Run reports and their serialisations.

use std::io::Write;
use std::path::Path;

use qgnn::verify::Check;
use serde::Serialize;
use serde_json::Value;

use crate::config::OutputFormat;
use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Cost {
    /// `−Re⟨out|Y⟩` on the normalised output and label states.
    pub inner_product: f64,
    /// Classical reference, softmax over the class columns.
    pub cross_entropy: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub seed: Option<u64>,
    pub fidelity: Option<f64>,
    pub postselect_probability: Option<f64>,
    pub qubits: Option<usize>,
    pub cost: Option<Cost>,
    pub resources: Option<Value>,
    pub training: Option<Value>,
    pub assertions: Vec<Check>,
}

impl Report {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Self {
            schema: SCHEMA,
            command: command.into(),
            seed,
            fidelity: None,
            postselect_probability: None,
            qubits: None,
            cost: None,
            resources: None,
            training: None,
            assertions: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    /// One row per assertion.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,pass,detail\n");
        for c in &self.assertions {
            out.push_str(&format!("{},{},\"{}\"\n", c.name, c.pass, c.detail.replace('"', "\"\"")));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}", self.command);
        if let Some(s) = self.seed {
            out.push_str(&format!(" (seed {s})"));
        }
        out.push('\n');
        let mut field = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push_str(&format!("  {k:<24}{v}\n"));
            }
        };
        field("fidelity", self.fidelity.map(|f| format!("{f:.15}")));
        field("postselect probability", self.postselect_probability.map(|p| format!("{p:.6e}")));
        field("qubits", self.qubits.map(|q| q.to_string()));
        if let Some(c) = &self.cost {
            field("cost (inner product)", Some(format!("{:.9}", c.inner_product)));
            field("cost (cross entropy)", c.cross_entropy.map(|x| format!("{x:.9}")));
        }
        if let Some(t) = &self.training {
            field("initial cost", t.get("costs").and_then(|c| c.get(0)).map(Value::to_string));
            field("best cost", t.get("best_cost").map(Value::to_string));
        }
        for c in &self.assertions {
            out.push_str(&format!("{} {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Text => self.to_text(),
        }
    }
}

/// Writes `text` to `out`, or stdout when absent. Files are replaced
/// atomically.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    let Some(path) = out else {
        let mut stdout = std::io::stdout().lock();
        return stdout.write_all(text.as_bytes()).map_err(|e| CliError::Runtime(e.into()));
    };
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Runtime(anyhow::anyhow!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("run-sgc", Some(7));
        r.fidelity = Some(1.0);
        r.assertions.push(Check::fidelity("fidelity", 1.0, 1e-9));
        r
    }

    #[test]
    fn json_has_schema_and_nulls() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["schema"], 1);
        assert!(v["cost"].is_null());
        assert_eq!(v["assertions"][0]["pass"], true);
    }

    #[test]
    fn csv_quotes_detail() {
        let csv = sample().to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().starts_with("fidelity,true,\""));
    }

    #[test]
    fn emit_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        emit("one", Some(&path)).unwrap();
        emit("two", Some(&path)).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
