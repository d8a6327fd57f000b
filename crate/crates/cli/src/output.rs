//! CSV documents with `#` metadata lines above and below the table.

use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::CliError;

pub const UNITS: &str =
    "energies in units of J, times in units of 1/J, temperatures in units of J/k_B (hbar = k_B = 1)";

pub struct Document {
    header: Vec<String>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl Document {
    pub fn new(command: &str, config: &RunConfig, columns: &[&'static str]) -> Self {
        let mut header = vec![
            format!("{} {} {command}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            format!("units: {UNITS}"),
        ];
        if config.timestamp {
            let secs =
                std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            header.push(format!("generated_unix: {secs}"));
        }
        header.push("config:".into());
        header.extend(config.to_toml().lines().map(|l| if l.is_empty() { String::new() } else { format!("  {l}") }));
        Document { header, columns: columns.to_vec(), rows: Vec::new(), footer: Vec::new() }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.header.push(line.into());
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.columns.len());
        self.rows.push(fields);
    }

    pub fn footer(&mut self, key: &str, value: &serde_json::Value) {
        self.footer.push(format!("{key}: {value}"));
    }

    pub fn render(&self) -> Result<Vec<u8>, CliError> {
        let mut out = Vec::new();
        for line in &self.header {
            if line.is_empty() {
                writeln!(out, "#")?;
            } else {
                writeln!(out, "# {line}")?;
            }
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns).map_err(csv_err)?;
            for r in &self.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
        for line in &self.footer {
            writeln!(out, "# {line}")?;
        }
        Ok(out)
    }

    pub fn emit(&self, path: Option<&Path>) -> Result<(), CliError> {
        let bytes = self.render()?;
        match path {
            Some(p) => {
                std::fs::write(p, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))
            }
            None => {
                std::io::stdout().lock().write_all(&bytes)?;
                Ok(())
            }
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let mut d = Document::new("test", &RunConfig::default(), &["a", "b"]);
        d.row(vec![num(1.5), "x, y".into()]);
        d.footer("fit", &serde_json::json!({"j_inf": 0.5}));
        let text = String::from_utf8(d.render().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# spin1-entangle-cli"));
        assert!(lines.iter().any(|l| l.starts_with("# units:")));
        assert!(lines.iter().any(|l| l.contains("chain_lens = [4, 6, 8, 10]")));
        let body: Vec<&str> = lines.iter().copied().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec!["a,b", "1.5,\"x, y\""]);
        assert_eq!(*lines.last().unwrap(), "# fit: {\"j_inf\":0.5}");
    }

    #[test]
    fn number_format_round_trips() {
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(2.220446049250313e-16), "2.220446049250313e-16");
        assert_eq!(num(0.0), "0");
        for x in [1.0 / 3.0, -7.5e-9, 1e20, 0.018392045440425518] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
