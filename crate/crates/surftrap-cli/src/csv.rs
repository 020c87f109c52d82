//! Deterministic CSV output: `# key=value` comment lines, one column header
//! line, then rows with numbers at 12 significant digits.

use std::io::{self, Write};

/// Scientific notation with 12 significant digits; negative zero prints as
/// zero so equal results give equal bytes.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if v == 0.0 {
        format!("{:.11e}", 0.0)
    } else {
        format!("{v:.11e}")
    }
}

/// A table cell.
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
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

pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    /// Starts the output with the library version and command name.
    pub fn new(mut out: W, command: &str) -> io::Result<Self> {
        writeln!(out, "# surftrap_version={}", surftrap::VERSION)?;
        writeln!(out, "# command={command}")?;
        Ok(CsvWriter { out, columns: 0 })
    }

    /// A `# key=value` line; line breaks in the value are flattened.
    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> io::Result<()> {
        let v = value.to_string().replace(['\n', '\r'], " ");
        writeln!(self.out, "# {key}={v}")
    }

    pub fn meta_num(&mut self, key: &str, value: f64) -> io::Result<()> {
        self.meta(key, num(value))
    }

    pub fn columns(&mut self, names: &[&str]) -> io::Result<()> {
        self.columns = names.len();
        writeln!(self.out, "{}", names.join(","))
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> io::Result<()> {
        debug_assert_eq!(cells.len(), self.columns);
        let text: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Num(v) => num(v),
                Cell::Text(s) => s.replace([',', '\n', '\r'], ";"),
            })
            .collect();
        writeln!(self.out, "{}", text.join(","))
    }

    pub fn nums(&mut self, values: &[f64]) -> io::Result<()> {
        self.row(values.iter().map(|&v| Cell::Num(v)).collect())
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-0.0), num(0.0));
        assert_eq!(num(-1.234567890123456e-7), "-1.23456789012e-7");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn layout() {
        let mut w = CsvWriter::new(Vec::new(), "demo").unwrap();
        w.meta("g", 0.5).unwrap();
        w.columns(&["a", "b"]).unwrap();
        w.row(vec![1.0.into(), "x,y".into()]).unwrap();
        let s = String::from_utf8(w.finish().unwrap()).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# surftrap_version="));
        assert_eq!(lines[1..], ["# command=demo", "# g=0.5", "a,b", "1.00000000000e0,x;y"]);
    }
}
