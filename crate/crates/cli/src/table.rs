//! Row-oriented output as CSV or JSON. Failed rows keep their abscissa and
//! carry the error text in the last column.

use gibbslab::report::{float, object, to_json};
use serde_json::Value;

use crate::Format;

pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<(Vec<Value>, Option<String>)>,
}

impl Table {
    /// `columns` excludes the trailing `error` column.
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<Value>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push((cells, None));
    }

    /// A row holding only the leading `key` cells and an error message.
    pub fn push_error(&mut self, key: Vec<Value>, err: impl ToString) {
        self.rows.push((key, Some(err.to_string())));
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push_str(",error\n");
        for (cells, err) in &self.rows {
            let mut line: Vec<String> = (0..self.columns.len())
                .map(|i| cells.get(i).map_or(String::new(), cell))
                .collect();
            line.push(err.as_deref().map_or(String::new(), quote));
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self) -> String {
        let rows = self
            .rows
            .iter()
            .map(|(cells, err)| {
                let mut pairs: Vec<(&str, Value)> = self
                    .columns
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (c, cells.get(i).cloned().unwrap_or(Value::Null)))
                    .collect();
                pairs.push(("error", err.clone().map_or(Value::Null, Value::String)));
                object(pairs)
            })
            .collect();
        to_json(&Value::Array(rows))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => u8::from(*b).to_string(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.to_string(),
            (_, Some(i)) => i.to_string(),
            _ => float(n.as_f64().unwrap()),
        },
        Value::String(s) => quote(s),
        other => quote(&other.to_string()),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gibbslab::report::num;

    #[test]
    fn csv_and_json_agree_on_layout() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![num(0.5), num(f64::INFINITY)]);
        t.push_error(vec![num(1.0)], "out of range, sorry");
        assert_eq!(
            t.render(Format::Csv),
            "x,y,error\n5.0000000000000000e-1,inf,\n1.0000000000000000e0,,\"out of range, sorry\"\n"
        );
        let json = t.render(Format::Json);
        assert!(json.contains("\"y\": null"));
        assert!(json.contains("\"y\": \"inf\""));
        assert_eq!(Table::new(&["s"]).render(Format::Csv), "s,error\n");
    }
}
