//! Plain-text report rendering: CSV tables with a versioned header line and
//! numbers printed with exactly 12 significant digits.

/// Version stamped into every CSV header line.
pub const CSV_VERSION: u32 = 1;

/// Renders `x` with 12 significant digits. Magnitudes in `[1e-5, 1e12)` use
/// positional notation, everything else scientific. Trailing zeros are kept
/// so every cell carries the same precision.
pub fn fmt_sig12(x: f64) -> String {
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
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .expect("scientific rendering has an exponent");
    if (-5..12).contains(&exp) {
        format!("{:.*}", (11 - exp) as usize, x)
    } else {
        sci
    }
}

/// A CSV document: `#` comment lines (format tag first), a header row and
/// data rows.
#[derive(Clone, Debug)]
pub struct CsvTable {
    notes: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self {
            notes: vec![format!("format=expsieve/{kind}/v{CSV_VERSION}")],
            header: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for n in &self.notes {
            out.push_str("# ");
            out.push_str(n);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig12(1.0), "1.00000000000");
        assert_eq!(fmt_sig12(2f64.sqrt()), "1.41421356237");
        assert_eq!(fmt_sig12(-0.5), "-0.500000000000");
        assert_eq!(fmt_sig12(123456.789), "123456.789000");
        assert_eq!(fmt_sig12(9.999999999999999), "10.0000000000");
        assert_eq!(fmt_sig12(1e-7), "1.00000000000e-7");
        assert_eq!(fmt_sig12(6.02e23), "6.02000000000e23");
        assert_eq!(fmt_sig12(0.0), "0");
        assert_eq!(fmt_sig12(f64::NAN), "nan");
    }

    #[test]
    fn table_layout() {
        let mut t = CsvTable::new("demo", &["a", "b"]);
        t.note("x=1");
        t.row(vec!["1".into(), fmt_sig12(0.25)]);
        assert_eq!(
            t.render(),
            "# format=expsieve/demo/v1\n# x=1\na,b\n1,0.250000000000\n"
        );
    }
}
