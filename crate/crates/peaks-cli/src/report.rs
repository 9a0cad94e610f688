//! Plain-text reports. Headline numbers use two decimals; the appendix keeps every digit.

use std::fmt::Write;

#[derive(Default)]
pub struct Report {
    lines: Vec<String>,
    appendix: Vec<(String, String)>,
}

impl Report {
    pub fn title(&mut self, t: &str) {
        if !self.lines.is_empty() {
            self.lines.push(String::new());
        }
        self.lines.push(format!("== {t}"));
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key} = {value}"));
    }

    /// Two-decimal headline with the full value kept for the appendix.
    pub fn real(&mut self, key: &str, v: f64) {
        self.kv(key, format!("{v:.2}"));
        self.exact(key, v);
    }

    pub fn exact(&mut self, key: &str, v: impl std::fmt::Debug) {
        self.appendix.push((key.to_string(), format!("{v:?}")));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
        if !self.appendix.is_empty() {
            let _ = writeln!(out, "\n== full precision");
            for (k, v) in &self.appendix {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }
}

pub fn indices(v: &[usize]) -> String {
    const SHOWN: usize = 12;
    let head: Vec<String> = v.iter().take(SHOWN).map(usize::to_string).collect();
    if v.len() > SHOWN {
        format!("[{}, ... ({} total)]", head.join(", "), v.len())
    } else {
        format!("[{}]", head.join(", "))
    }
}
