//! Plain-text console tables.

pub use metapop::montecarlo::sig6;

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    pub fn pairs(title: &str, pairs: &[(String, String)]) -> Self {
        let mut t = Table::new([title, ""]);
        for (k, v) in pairs {
            t.row([k.clone(), v.clone()]);
        }
        t
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (k, w) in widths.iter().enumerate().take(cols) {
                let cell = cells.get(k).map_or("", String::as_str);
                s.push_str(&format!("{cell:<w$}"));
                if k + 1 < cols {
                    s.push_str("  ");
                }
            }
            s.trim_end().to_string()
        };
        let mut out = vec![line(&self.header)];
        out.push(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.extend(self.rows.iter().map(|r| line(r)));
        out.join("\n")
    }

    pub fn print(&self) {
        println!("{}\n", self.render());
    }
}

/// Formats a CSV cell for the console, shortening full-precision floats.
pub fn shorten(cell: &str) -> String {
    match cell.parse::<f64>() {
        Ok(v) if cell.contains('.') || cell.contains('e') => sig6(v),
        _ => cell.to_string(),
    }
}
