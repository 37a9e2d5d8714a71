use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

/// Rounds to 12 significant digits; the JSON writer then prints the
/// shortest decimal that round-trips.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round12).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_json(mut v: Value) -> String {
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("values are serializable");
    s.push('\n');
    s
}

pub fn fmt_float(x: f64) -> String {
    let r = round12(x);
    if r.is_finite() {
        format!("{r:?}")
    } else {
        "nan".into()
    }
}

/// Comma-separated table with a header row.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn write_to<W: Write>(&self, w: W) -> io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r)?;
        }
        wr.flush()
    }

    pub fn render(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

pub fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    File::create(path)?.write_all(contents.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding() {
        assert_eq!(round12(3.999999987081234), 3.99999998708);
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(round12(-1.0e-300), -1.0e-300);
        assert_eq!(round12(0.0), 0.0);
        assert_eq!(to_json(json!({"a": 0.1 + 0.2, "b": [1, 2.000000000000004]})), "{\n  \"a\": 0.3,\n  \"b\": [\n    1,\n    2.0\n  ]\n}\n");
    }

    #[test]
    fn table_quotes_fields() {
        let mut t = Table::new(["a", "b"]);
        t.rows.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.render(), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn prefix_extension() {
        assert_eq!(with_extension(Path::new("out/run.v1"), "json"), PathBuf::from("out/run.v1.json"));
    }
}
