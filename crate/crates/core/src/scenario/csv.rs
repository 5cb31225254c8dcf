use std::fmt::Write;

/// `%.12g`-style formatting: 12 significant digits, trailing zeros removed,
/// exponent notation outside `[1e-4, 1e12)`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        return format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let digits = (11 - exp).max(0) as usize;
    trim(&format!("{x:.digits$}")).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Comma-separated table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| format_number(v)).collect());
    }

    /// Row whose cells are already formatted (empty cells allowed).
    pub fn push_cells(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (123456.789, "123456.789"),
            (1e-5, "1e-05"),
            (1.5e12, "1.5e+12"),
            (999999999999.0, "999999999999"),
            (0.000123, "0.000123"),
            (0.88372093023255, "0.883720930233"),
        ];
        for (x, s) in cases {
            assert_eq!(format_number(x), s, "{x}");
        }
    }

    #[test]
    fn renders_header_and_rows() {
        let mut t = CsvTable::new(["time", "H_output"]);
        t.push(&[0.0, -1.0]);
        t.push(&[0.5, 0.25]);
        assert_eq!(t.render(), "time,H_output\n0,-1\n0.5,0.25\n");
    }
}
