use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy)]
pub enum Format {
    Text,
    Json,
    Csv,
    Dot,
}

/// Rounds to 9 significant digits; non-finite values become `null`.
pub fn float(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

pub fn fmt_float(x: f64) -> String {
    match float(x) {
        Value::Number(n) => n.to_string(),
        _ => format!("{x}"),
    }
}

/// One command's output in every supported format.
#[derive(Debug)]
pub struct Report {
    fields: Map<String, Value>,
    summary: Option<Vec<(&'static str, String)>>,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    dot: Option<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut fields = Map::new();
        fields.insert("schema_version".into(), SCHEMA_VERSION.into());
        fields.insert("command".into(), command.into());
        Self {
            fields,
            summary: None,
            header: Vec::new(),
            rows: Vec::new(),
            dot: None,
        }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.fields.insert(key.into(), value);
    }

    /// Replaces the default `key: value` text rendering.
    pub fn summary(&mut self, lines: Vec<(&'static str, String)>) {
        self.summary = Some(lines);
    }

    pub fn table<R: Into<Vec<String>>>(
        &mut self,
        header: &[&'static str],
        rows: impl IntoIterator<Item = R>,
    ) {
        self.header = header.to_vec();
        self.rows = rows.into_iter().map(Into::into).collect();
    }

    pub fn set_dot(&mut self, dot: String) {
        self.dot = Some(dot);
    }

    pub fn render(&self, format: Format) -> Result<String, String> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&Value::Object(self.fields.clone()))
                    .map_err(|e| e.to_string())?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut s = self.header.join(",");
                s.push('\n');
                for row in &self.rows {
                    s.push_str(
                        &row.iter()
                            .map(|c| csv_cell(c))
                            .collect::<Vec<_>>()
                            .join(","),
                    );
                    s.push('\n');
                }
                Ok(s)
            }
            Format::Dot => self
                .dot
                .clone()
                .ok_or_else(|| "no graph to export".to_string()),
            Format::Text => Ok(self.text()),
        }
    }

    fn text(&self) -> String {
        let mut s = String::new();
        match &self.summary {
            Some(lines) => {
                for (k, v) in lines {
                    s.push_str(&format!("{k}: {v}\n"));
                }
            }
            None => {
                for (k, v) in &self.fields {
                    if k == "schema_version" || k == "command" {
                        continue;
                    }
                    let shown = match v {
                        Value::String(x) => x.clone(),
                        other => other.to_string(),
                    };
                    s.push_str(&format!("{k}: {shown}\n"));
                }
            }
        }
        s
    }
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}
