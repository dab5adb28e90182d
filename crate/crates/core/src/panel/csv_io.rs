//! CSV dialect: comma separated, UTF-8, mandatory header row, `.` decimal
//! separator, empty cell = absent optional value. Unknown columns are
//! ignored.

use super::{BalanceLevels, FirmYearRecord, Panel, PanelError, SchemaMode};
use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

pub const FLOW_REQUIRED: [&str; 5] = ["firm_id", "year", "total_assets", "investment", "cash_flow"];
pub const FLOW_OPTIONAL: [&str; 8] = [
    "d_ltd",
    "d_capital_stock",
    "depreciation",
    "dividends",
    "d_working_capital",
    "d_ofa",
    "d_total_assets",
    "d_total_funds",
];
pub const LEVEL_REQUIRED: [&str; 5] = FLOW_REQUIRED;
pub const LEVEL_OPTIONAL: [&str; 7] = [
    "ltd",
    "capital_stock",
    "working_capital",
    "ofa",
    "total_funds",
    "depreciation",
    "dividends",
];

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(headers: &csv::StringRecord) -> Result<Self, PanelError> {
        let mut index = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            let name = h.trim_start_matches('\u{feff}').trim().to_string();
            if index.insert(name.clone(), i).is_some() {
                return Err(PanelError::DuplicateColumn(name));
            }
        }
        Ok(Self { index })
    }

    fn require(&self, names: &[&str]) -> Result<(), PanelError> {
        match names.iter().find(|n| !self.index.contains_key(**n)) {
            Some(n) => Err(PanelError::MissingColumn(n.to_string())),
            None => Ok(()),
        }
    }
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    columns: &'a Columns,
    line: u64,
}

impl Row<'_> {
    fn cell(&self, name: &str) -> Option<&str> {
        let i = *self.columns.index.get(name)?;
        self.record.get(i).map(str::trim).filter(|s| !s.is_empty())
    }

    fn error(&self, column: &str, value: &str) -> PanelError {
        PanelError::ParseError {
            row: self.line,
            column: column.to_string(),
            value: value.to_string(),
        }
    }

    fn text(&self, name: &str) -> Result<String, PanelError> {
        self.cell(name).map(str::to_string).ok_or_else(|| self.error(name, ""))
    }

    fn year(&self) -> Result<i32, PanelError> {
        let v = self.cell("year").ok_or_else(|| self.error("year", ""))?;
        v.parse().map_err(|_| self.error("year", v))
    }

    fn optional(&self, name: &str) -> Result<Option<f64>, PanelError> {
        match self.cell(name) {
            None => Ok(None),
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(self.error(name, v)),
            },
        }
    }

    fn money(&self, name: &str) -> Result<f64, PanelError> {
        self.optional(name)?.ok_or_else(|| self.error(name, ""))
    }
}

fn parse_record(row: &Row, mode: SchemaMode) -> Result<FirmYearRecord, PanelError> {
    let mut r = FirmYearRecord::new(
        row.text("firm_id")?,
        row.year()?,
        row.money("total_assets")?,
        row.money("investment")?,
        row.money("cash_flow")?,
    );
    r.depreciation = row.optional("depreciation")?;
    r.dividends = row.optional("dividends")?;
    match mode {
        SchemaMode::Flow => {
            r.d_ltd = row.optional("d_ltd")?;
            r.d_capital_stock = row.optional("d_capital_stock")?;
            r.d_working_capital = row.optional("d_working_capital")?;
            r.d_ofa = row.optional("d_ofa")?;
            r.d_total_assets = row.optional("d_total_assets")?;
            r.d_total_funds = row.optional("d_total_funds")?;
        }
        SchemaMode::Level => {
            r.levels = Some(BalanceLevels {
                ltd: row.optional("ltd")?,
                capital_stock: row.optional("capital_stock")?,
                working_capital: row.optional("working_capital")?,
                ofa: row.optional("ofa")?,
                total_funds: row.optional("total_funds")?,
            });
        }
    }
    Ok(r)
}

/// Parses a panel from any reader. Row numbers in errors are 1-based file
/// lines, so the header is line 1.
pub fn read_csv<R: Read>(reader: R, mode: SchemaMode, provenance: &str) -> Result<Panel, PanelError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| PanelError::Csv {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let columns = Columns::new(&headers)?;
    columns.require(match mode {
        SchemaMode::Flow => &FLOW_REQUIRED,
        SchemaMode::Level => &LEVEL_REQUIRED,
    })?;

    let mut records = Vec::new();
    let mut raw = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut raw) {
            Ok(false) => break,
            Ok(true) => {
                let line = raw.position().map_or(0, |p| p.line());
                let row = Row {
                    record: &raw,
                    columns: &columns,
                    line,
                };
                records.push(parse_record(&row, mode)?);
            }
            Err(e) => {
                let row = e.position().map_or(0, |p| p.line());
                return Err(PanelError::Csv {
                    row,
                    message: e.to_string(),
                });
            }
        }
    }
    Panel::new(records, provenance, mode)
}

pub fn read_csv_str(text: &str, mode: SchemaMode) -> Result<Panel, PanelError> {
    read_csv(text.as_bytes(), mode, "inline")
}

/// Reads a panel file; its stem becomes the provenance label.
pub fn ingest_csv(path: impl AsRef<Path>, mode: SchemaMode) -> Result<Panel, PanelError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| PanelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(std::io::BufReader::new(file), mode, &label)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the panel in its own schema. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_csv<W: Write>(panel: &Panel, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    match panel.schema_mode() {
        SchemaMode::Flow => {
            w.write_record(FLOW_REQUIRED.iter().chain(FLOW_OPTIONAL.iter()))?;
            for r in panel.records() {
                w.write_record([
                    r.firm_id.clone(),
                    r.year.to_string(),
                    r.total_assets.to_string(),
                    r.investment.to_string(),
                    r.cash_flow.to_string(),
                    cell(r.d_ltd),
                    cell(r.d_capital_stock),
                    cell(r.depreciation),
                    cell(r.dividends),
                    cell(r.d_working_capital),
                    cell(r.d_ofa),
                    cell(r.d_total_assets),
                    cell(r.d_total_funds),
                ])?;
            }
        }
        SchemaMode::Level => {
            w.write_record(LEVEL_REQUIRED.iter().chain(LEVEL_OPTIONAL.iter()))?;
            for r in panel.records() {
                let l = r.levels.unwrap_or_default();
                w.write_record([
                    r.firm_id.clone(),
                    r.year.to_string(),
                    r.total_assets.to_string(),
                    r.investment.to_string(),
                    r.cash_flow.to_string(),
                    cell(l.ltd),
                    cell(l.capital_stock),
                    cell(l.working_capital),
                    cell(l.ofa),
                    cell(l.total_funds),
                    cell(r.depreciation),
                    cell(r.dividends),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
