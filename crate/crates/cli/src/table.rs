use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    /// Empty CSV field, JSON `null`.
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Rows with a fixed header, rendered as CSV or as a JSON array of objects.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format!("{v:?}"),
                    Cell::Text(s) => s.clone(),
                    Cell::Missing => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(k, c)| {
                        let v = match c {
                            Cell::Num(v) => Number::from_f64(*v).map_or(Value::Null, Value::Number),
                            Cell::Text(s) => Value::String(s.clone()),
                            Cell::Missing => Value::Null,
                        };
                        (k.to_string(), v)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_formats() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.5.into(), "x".into()]);
        t.push(vec![f64::NAN.into(), "y".into()]);
        t.push(vec![None.into(), "z".into()]);
        assert_eq!(t.to_csv(), "a,b\n1.5,x\nNaN,y\n,z\n");
        let mut tiny = Table::new(&["v"]);
        tiny.push(vec![1e-17.into()]);
        tiny.push(vec![2.0.into()]);
        assert_eq!(tiny.to_csv(), "v\n1e-17\n2.0\n");
        let v: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v[0]["a"], 1.5);
        assert!(v[1]["a"].is_null());
        assert!(v[2]["a"].is_null());
    }
}
