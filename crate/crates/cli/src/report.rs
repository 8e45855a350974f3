//! Output model and its CSV/JSON renderings.
//!
//! CSV: `#` metadata lines (command, effective config, then extras), a
//! header row and data rows; numbers carry 9 significant digits and a
//! missing value is an empty cell. JSON: one top-level object.

use serde_json::{json, Map, Value};

use crate::args::Format;

pub enum Body {
    /// Column-oriented rows, e.g. a curve.
    Table {
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
    },
    /// One flat record.
    Record(Map<String, Value>),
}

pub struct Report {
    pub command: &'static str,
    /// Effective parameters after merging flags, config and defaults.
    pub config: Value,
    pub metadata: Vec<(String, Value)>,
    pub body: Body,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = format!("# command: {}\n# config: {}\n", self.command, self.config);
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {}\n", cell(v)));
        }
        let (columns, rows): (Vec<String>, Vec<Vec<Value>>) = match &self.body {
            Body::Table { columns, rows } => (columns.clone(), rows.clone()),
            Body::Record(map) => (map.keys().cloned().collect(), vec![map.values().cloned().collect()]),
        };
        out.push_str(&columns.join(","));
        out.push('\n');
        for row in rows {
            out.push_str(&row.iter().map(cell).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> String {
        let mut top = Map::new();
        top.insert("command".into(), json!(self.command));
        top.insert("config".into(), self.config.clone());
        if !self.metadata.is_empty() {
            top.insert(
                "metadata".into(),
                Value::Object(self.metadata.iter().cloned().collect()),
            );
        }
        match &self.body {
            Body::Table { columns, rows } => {
                let points = rows
                    .iter()
                    .map(|row| Value::Object(columns.iter().cloned().zip(row.iter().cloned()).collect()))
                    .collect();
                top.insert("points".into(), Value::Array(points));
            }
            Body::Record(map) => top.extend(map.clone()),
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("JSON values serialize");
        s.push('\n');
        s
    }
}

/// One CSV cell. Arrays are `;`-joined.
fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => u.to_string(),
            (_, Some(i), _) => i.to_string(),
            (_, _, Some(x)) => sig9(x),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(cell).collect::<Vec<_>>().join(";"),
        Value::Object(_) => v.to_string(),
    }
}

/// `x` with 9 significant digits, like C's `%.9g`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A float as a JSON number, or null when absent or not finite.
pub fn num(x: Option<f64>) -> Value {
    x.filter(|v| v.is_finite()).map_or(Value::Null, |v| json!(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(0.3), "0.3");
        assert_eq!(sig9(0.6025302279579304), "0.602530228");
        assert_eq!(sig9(30.220267443), "30.2202674");
        assert_eq!(sig9(-1.5), "-1.5");
        assert_eq!(sig9(123456789.4), "123456789");
        assert_eq!(sig9(1234567890.0), "1.23456789e9");
        assert_eq!(sig9(1.0e-7), "1e-7");
        assert_eq!(sig9(0.000123456789012), "0.000123456789");
        // rounding carries into the exponent
        assert_eq!(sig9(9.999999999), "10");
    }

    #[test]
    fn csv_and_json_rendering() {
        let r = Report {
            command: "demo",
            config: json!({"p": 0.3}),
            metadata: vec![("edge".into(), json!(1.0 / 3.0))],
            body: Body::Table {
                columns: vec!["rate".into(), "d".into()],
                rows: vec![vec![json!(0.1), Value::Null], vec![json!(2u64), json!([1.0, 0.5])]],
            },
        };
        let csv = r.render(Format::Csv);
        assert_eq!(
            csv,
            "# command: demo\n# config: {\"p\":0.3}\n# edge: 0.333333333\nrate,d\n0.1,\n2,1;0.5\n"
        );
        let v: Value = serde_json::from_str(&r.render(Format::Json)).unwrap();
        assert_eq!(v["points"][0]["d"], Value::Null);
        assert_eq!(v["metadata"]["edge"], json!(1.0 / 3.0));
    }
}
