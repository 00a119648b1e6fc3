use serde_json::{json, Map, Value};

/// One command's results.
#[derive(Debug, Clone)]
pub struct Section {
    pub title: &'static str,
    pub lines: Vec<String>,
    pub data: Map<String, Value>,
    pub passed: bool,
}

impl Section {
    pub fn new(title: &'static str) -> Self {
        Section { title, lines: Vec::new(), data: Map::new(), passed: true }
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.data.insert(key.to_string(), value.into());
    }

    pub fn fail(&mut self, reason: impl Into<String>) {
        let reason = reason.into();
        self.lines.push(format!("FAILED: {reason}"));
        let failures = self.data.entry("failures").or_insert_with(|| Value::Array(Vec::new()));
        if let Value::Array(items) = failures {
            items.push(Value::String(reason));
        }
        self.passed = false;
    }
}

/// Text and JSON rendering of a run. The JSON body depends only on the
/// config and the seed.
#[derive(Debug, Clone)]
pub struct Report {
    pub system: String,
    pub seed: u64,
    pub command: String,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.sections.iter().all(|s| s.passed)
    }

    pub fn section(&self, title: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.title == title)
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("system: {}\ncommand: {}\nseed: {}\n", self.system, self.command, self.seed);
        for s in &self.sections {
            out.push_str(&format!("\n== {} ==\n", s.title));
            for l in &s.lines {
                out.push_str("  ");
                out.push_str(l);
                out.push('\n');
            }
            out.push_str(&format!("  status: {}\n", if s.passed { "pass" } else { "fail" }));
        }
        out.push_str(&format!("\noverall: {}\n", if self.passed() { "pass" } else { "fail" }));
        out
    }

    pub fn to_json(&self) -> Value {
        let mut sections = Map::new();
        for s in &self.sections {
            let mut body = s.data.clone();
            body.insert("passed".into(), Value::Bool(s.passed));
            sections.insert(s.title.to_string(), Value::Object(body));
        }
        json!({
            "system": self.system,
            "command": self.command,
            "seed": self.seed,
            "passed": self.passed(),
            "sections": sections,
        })
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("report serializes")
    }
}
