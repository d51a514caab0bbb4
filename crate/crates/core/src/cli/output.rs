//! Result tables: CSV with a metadata sidecar, or a single JSON document.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::{ExperimentConfig, Format};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    /// Non-finite numbers are undefined and become empty.
    pub fn num(v: f64) -> Cell {
        if v.is_finite() {
            Cell::Num(v)
        } else {
            Cell::Empty
        }
    }

    /// Shortest representation that parses back to the same `f64`.
    fn csv_text(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Bool(b) => json!(b),
            Cell::Text(t) => json!(t),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(t) => t.parse().ok(),
            _ => None,
        }
    }
}

/// A rectangular result: every row has one cell per column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Builds a table from named cells. Columns follow `schema`; names missing
    /// from a row are left empty.
    pub fn from_named(schema: &[&str], named_rows: Vec<Vec<(&'static str, Cell)>>) -> Table {
        let rows = named_rows
            .into_iter()
            .map(|named| {
                schema
                    .iter()
                    .map(|c| named.iter().find(|(n, _)| n == c).map(|(_, v)| v.clone()).unwrap_or(Cell::Empty))
                    .collect()
            })
            .collect();
        Table { columns: schema.iter().map(|s| s.to_string()).collect(), rows }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        self.column(name).map(|i| &self.rows[row][i])
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_text)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn to_json(&self, config: &ExperimentConfig) -> Vec<u8> {
        let doc = json!({
            "metadata": metadata(self, config),
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        let mut out = serde_json::to_vec_pretty(&doc).expect("json value serializes");
        out.push(b'\n');
        out
    }

    /// Reads a CSV written by [`Table::to_csv`]. Cells come back as text.
    pub fn from_csv(bytes: &[u8]) -> Result<Table, String> {
        let mut r = csv::Reader::from_reader(bytes);
        let columns = r.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            rows.push(rec.iter().map(|t| if t.is_empty() { Cell::Empty } else { Cell::Text(t.to_string()) }).collect());
        }
        Ok(Table { columns, rows })
    }

    /// Reads the `columns`/`rows` part of a JSON result document.
    pub fn from_json(bytes: &[u8]) -> Result<Table, String> {
        let doc: Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
        let columns: Vec<String> =
            serde_json::from_value(doc["columns"].clone()).map_err(|e| format!("columns: {e}"))?;
        let raw = doc["rows"].as_array().ok_or("missing rows array")?;
        let mut rows = Vec::with_capacity(raw.len());
        for r in raw {
            let cells = r.as_array().ok_or("row is not an array")?;
            if cells.len() != columns.len() {
                return Err(format!("row has {} cells, expected {}", cells.len(), columns.len()));
            }
            rows.push(
                cells
                    .iter()
                    .map(|v| match v {
                        Value::Null => Cell::Empty,
                        Value::Bool(b) => Cell::Bool(*b),
                        Value::Number(n) => {
                            n.as_u64().map(Cell::Int).unwrap_or_else(|| Cell::Num(n.as_f64().unwrap_or(f64::NAN)))
                        }
                        Value::String(s) => Cell::Text(s.clone()),
                        other => Cell::Text(other.to_string()),
                    })
                    .collect(),
            );
        }
        Ok(Table { columns, rows })
    }
}

/// `(name, unit, meaning)` for every column the runner can emit.
pub const COLUMN_DOCS: &[(&str, &str, &str)] = &[
    ("n", "antennas", "number of base-station antennas"),
    ("m", "users", "number of single-antenna users, round(delta*n)"),
    ("delta", "ratio", "users per antenna m/n"),
    ("lambda", "", "regularization weight from the params block"),
    ("a", "amplitude", "box bound A from the params block; \"inf\" if unbounded"),
    ("l", "amplitude", "quantization level L"),
    ("sigma2", "power", "receiver noise variance"),
    ("rho", "", "target-symbol scaling from the params block"),
    ("snr_tx_db", "dB", "target transmit SNR, when given"),
    ("tau", "", "saddle point tau"),
    ("beta", "", "saddle point beta"),
    ("alpha", "", "clipping slope 1/tau + 2 lambda/beta"),
    ("phi", "", "min-max objective value at the saddle point"),
    ("boundary_regime", "bool", "true when delta=1, lambda=0 and A is unbounded"),
    ("p_bar", "power", "asymptotic per-antenna power delta*tau^2 - rho"),
    ("box_lambda", "", "lambda used by the box precoder (tuned if tune is box/both)"),
    ("box_rho", "", "rho used by the box precoder (tuned if tune is box/both)"),
    ("box_tau", "", "saddle tau for the box precoder"),
    ("box_beta", "", "saddle beta for the box precoder"),
    ("box_alpha", "", "clipping slope for the box precoder"),
    ("box_phi", "", "min-max objective value for the box precoder"),
    ("box_p_bar", "power", "asymptotic per-antenna power of the box precoder"),
    ("box_sdnr_lb", "linear", "asymptotic SDNR lower bound of the box precoder"),
    ("box_ber", "probability", "asymptotic BER of the box precoder"),
    ("box_varsigma", "", "receiver scaling of the box precoder"),
    ("box_dist_std", "", "standard deviation of the Gaussian distortion, box precoder"),
    ("box_sig_coef", "", "signal coefficient of the distortion law, box precoder"),
    ("quant_lambda", "", "lambda used by the quantized precoder (tuned if tune is quant/both)"),
    ("quant_a", "amplitude", "A used by the quantized precoder (tuned if tune is quant/both)"),
    ("quant_tau", "", "saddle tau for the quantized precoder (rho = 1)"),
    ("quant_beta", "", "saddle beta for the quantized precoder (rho = 1)"),
    ("quant_alpha", "", "clipping slope for the quantized precoder"),
    ("quant_xi", "", "signal coefficient of the quantized distortion law"),
    ("quant_zeta", "power", "distortion variance of the quantized precoder"),
    ("quant_sdnr_lb", "linear", "asymptotic SDNR lower bound of the quantized precoder"),
    ("quant_ber", "probability", "asymptotic BER of the quantized precoder"),
    ("quant_kappa", "", "receiver scaling of the quantized precoder"),
    ("bussgang_theta", "", "Bussgang gain of the quantizer"),
    ("bussgang_noise_var", "power", "effective noise variance under the Bussgang model"),
    ("bussgang_ber", "probability", "BER predicted by the Bussgang model"),
    ("trials", "count", "Monte Carlo realizations per row"),
    ("emp_ber_box", "probability", "empirical BER, box precoder"),
    ("emp_ber_box_se", "probability", "standard error of emp_ber_box"),
    ("emp_sdnr_lb_box", "linear", "empirical SDNR lower bound, box precoder"),
    ("emp_sdnr_avg_box", "linear", "empirical per-user-averaged SDNR, box precoder"),
    ("emp_p_b", "power", "empirical per-antenna power |x|^2/n, box precoder"),
    ("emp_p_b_se", "power", "standard error of emp_p_b"),
    ("emp_mse_box", "power", "empirical scaled distortion error, box precoder"),
    ("emp_w2_box", "", "Wasserstein-2 distance of the box distortion law to theory"),
    ("emp_ber_quant", "probability", "empirical BER, quantized precoder"),
    ("emp_ber_quant_se", "probability", "standard error of emp_ber_quant"),
    ("emp_sdnr_lb_quant", "linear", "empirical SDNR lower bound, quantized precoder"),
    ("emp_sdnr_avg_quant", "linear", "empirical per-user-averaged SDNR, quantized precoder"),
    ("emp_p_q", "power", "empirical per-antenna power, quantized precoder (always L^2)"),
    ("emp_mse_quant", "power", "empirical scaled distortion error, quantized precoder"),
    ("emp_mse_quant_se", "power", "standard error of emp_mse_quant"),
    ("emp_w2_quant", "", "Wasserstein-2 distance of the quantized distortion law to theory"),
    ("emp_w2_empty_class", "bool", "a symbol class had no users in some trial"),
    ("note", "", "why cells of this row are empty, if any are"),
];

fn metadata(table: &Table, config: &ExperimentConfig) -> Value {
    let cols: Vec<Value> = table
        .columns
        .iter()
        .map(|c| {
            let (unit, meaning) =
                COLUMN_DOCS.iter().find(|(n, ..)| n == c).map(|(_, u, m)| (*u, *m)).unwrap_or(("", ""));
            json!({"name": c, "unit": unit, "description": meaning})
        })
        .collect();
    json!({
        "tool": "boxquant",
        "version": env!("CARGO_PKG_VERSION"),
        "rows": table.rows.len(),
        "config": config,
        "columns": cols,
    })
}

/// Path of the metadata sidecar for a CSV at `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

#[derive(Debug)]
pub struct WriteError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), WriteError> {
    std::fs::write(path, bytes).map_err(|source| WriteError { path: path.to_path_buf(), source })
}

/// Writes the table to `path` (plus sidecar for CSV), or to stdout.
pub fn emit(table: &Table, config: &ExperimentConfig, path: Option<&Path>, format: Format) -> Result<(), WriteError> {
    match (path, format) {
        (Some(p), Format::Csv) => {
            write_file(p, &table.to_csv())?;
            let mut meta = serde_json::to_vec_pretty(&metadata(table, config)).expect("json value serializes");
            meta.push(b'\n');
            write_file(&sidecar_path(p), &meta)
        }
        (Some(p), Format::Json) => write_file(p, &table.to_json(config)),
        (None, fmt) => {
            let bytes = if fmt == Format::Csv { table.to_csv() } else { table.to_json(config) };
            std::io::stdout().write_all(&bytes).map_err(|source| WriteError { path: PathBuf::from("<stdout>"), source })
        }
    }
}
