//! CSV output: `# key: value` metadata lines, a header row, then data rows
//! with every number in shortest round-trip form.

use crate::oracle::Oracle;
use hgm_core::steppers::SolutionTable;
use hgm_core::Real;
use std::io::{Read, Write};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        CsvTable { metadata: Vec::new(), header, rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_reals<R: Real>(&mut self, row: &[R]) {
        self.rows.push(row.iter().map(|x| x.to_shortest_string()).collect());
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> csv::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {}", v.replace('\n', " "))?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn read_from<Rd: Read>(mut input: Rd) -> csv::Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let metadata = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.trim_start_matches('#').trim().split_once(": ").map(|(k, v)| (k.to_string(), v.to_string())))
            .collect();
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r.records().map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect())).collect::<csv::Result<_>>()?;
        Ok(CsvTable { metadata, header, rows })
    }

    /// Parse column `j` at precision `R`.
    pub fn column_values<R: Real>(&self, j: usize) -> Option<Vec<R>> {
        self.rows.iter().map(|r| r.get(j).and_then(|s| R::parse_literal(s))).collect()
    }
}

/// Column names `f, f', f'', …` (then `f^(k)` beyond the third derivative).
pub fn state_header(dim: usize) -> Vec<String> {
    (0..dim)
        .map(|j| match j {
            0..=3 => format!("f{}", "'".repeat(j)),
            _ => format!("f^({j})"),
        })
        .collect()
}

/// The trajectory as CSV; with a reference, adds `reference` and `rel_error`
/// columns for the first component, computed by `reference(t)`.
pub fn solution_csv<R: Real>(table: &SolutionTable<R>, reference: Option<(&Oracle<R>, &dyn Fn(R) -> Option<R>)>) -> CsvTable {
    let dim = table.states.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend(state_header(dim));
    if reference.is_some() {
        header.push("reference".into());
        header.push("rel_error".into());
    }
    let mut csv = CsvTable::new(header);
    csv.meta("stepper", &table.meta.stepper).meta("digits", table.meta.digits).meta("backend", R::NAME);
    if let Some((oracle, _)) = reference {
        csv.meta("oracle", oracle.name());
    }
    for d in &table.meta.diagnostics {
        csv.meta("diagnostic", d);
    }
    for (t, state) in table.times.iter().zip(&table.states) {
        let mut row: Vec<String> = std::iter::once(*t).chain(state.iter().copied()).map(|x| x.to_shortest_string()).collect();
        if let Some((_, f)) = reference {
            match f(*t) {
                Some(r) => {
                    row.push(r.to_shortest_string());
                    let rel = if r == R::zero() { "nan".to_string() } else { ((state[0] - r) / r).abs().to_shortest_string() };
                    row.push(rel);
                }
                None => {
                    row.push("nan".into());
                    row.push("nan".into());
                }
            }
        }
        csv.rows.push(row);
    }
    csv
}
