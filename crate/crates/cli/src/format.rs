//! Fixed float formatting and a minimal CSV reader/writer.

use crate::error::{CliError, CliResult};

/// Shortest round-trip representation; scientific notation outside
/// `[1e-5, 1e16)` so that no value needs more than 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    /// Empty cells are `None`.
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// UTF-8, LF line endings, header first.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&c| fmt_opt(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> CliResult<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Usage("empty CSV".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>()
                            .map(Some)
                            .map_err(|_| CliError::Usage(format!("bad number '{c}' on data line {}", i + 1)))
                    }
                })
                .collect::<CliResult<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(CliError::Usage(format!("data line {} has {} cells", i + 1, row.len())));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    /// `[{column: value}, ...]` with missing and non-finite values as `null`.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(h, &c)| (h.clone(), c.map_or(serde_json::Value::Null, serde_json::Value::from)))
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }

    pub fn from_json(header: &[&str], value: &serde_json::Value) -> CliResult<Self> {
        let bad = || CliError::Usage("JSON data is not an array of row objects".into());
        let mut table = Table::new(header);
        for row in value.as_array().ok_or_else(bad)? {
            let obj = row.as_object().ok_or_else(bad)?;
            table.push(
                header
                    .iter()
                    .map(|h| obj.get(*h).and_then(serde_json::Value::as_f64))
                    .collect(),
            );
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_forms() {
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(1.5), "1.5");
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1e-7), "1e-7");
        assert_eq!(fmt_f64(-2.5e20), "-2.5e20");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(0.1 + 0.2), "0.30000000000000004");
    }

    #[test]
    fn csv_cells() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Some(1.0), None]);
        t.push(vec![Some(f64::INFINITY), Some(-3e-9)]);
        let text = t.to_csv();
        assert_eq!(text, "a,b\n1,\ninf,-3e-9\n");
        assert_eq!(Table::from_csv(&text).unwrap(), t);
        assert!(Table::from_csv("a,b\n1\n").is_err());
    }
}
