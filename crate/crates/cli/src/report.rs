//! CSV run reports, one row per (dataset, k) plus an average row.

use num_rational::Ratio;
use thiserror::Error;

pub const COLUMNS: [&str; 8] = [
    "dataset",
    "k",
    "power_cost",
    "wirelength_with_ls",
    "ls_number",
    "ilo_percent",
    "white_space_percent",
    "runtime_seconds",
];

pub const AVG_LABEL: &str = "Avg";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub k: usize,
    pub power_cost: i64,
    pub wirelength_with_ls: i64,
    pub ls_number: usize,
    pub ilo_percent: Ratio<i64>,
    pub white_space_percent: Ratio<i64>,
    pub runtime_seconds: f64,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("header does not match the report columns")]
    Header,
    #[error("row {row}: bad value `{value}` in column {column}")]
    Value { row: usize, column: &'static str, value: String },
}

/// Rounds half away from zero to `places` decimals.
pub fn format_decimal(r: Ratio<i128>, places: u32) -> String {
    let scale = 10i128.pow(places);
    let scaled = (r * Ratio::from_integer(scale)).round().to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let a = scaled.abs();
    if places == 0 {
        return format!("{sign}{a}");
    }
    format!("{sign}{}.{:0width$}", a / scale, a % scale, width = places as usize)
}

/// Exact value of a decimal string such as `26.07` or `-3`.
pub fn parse_decimal(s: &str) -> Option<Ratio<i64>> {
    let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let den = 10i64.checked_pow(frac.len() as u32)?;
    let num = format!("{int}{frac}").parse::<i64>().ok()?;
    Some(Ratio::new(if neg { -num } else { num }, den))
}

fn wide(r: Ratio<i64>) -> Ratio<i128> {
    Ratio::new(*r.numer() as i128, *r.denom() as i128)
}

fn mean_int(values: impl Iterator<Item = i128>, n: i128) -> String {
    let m = Ratio::new(values.sum::<i128>(), n);
    if m.is_integer() {
        m.to_integer().to_string()
    } else {
        format_decimal(m, 2)
    }
}

fn record(row: &ReportRow) -> [String; 8] {
    [
        row.dataset.clone(),
        row.k.to_string(),
        row.power_cost.to_string(),
        row.wirelength_with_ls.to_string(),
        row.ls_number.to_string(),
        format_decimal(wide(row.ilo_percent), 2),
        format_decimal(wide(row.white_space_percent), 2),
        format!("{:.3}", row.runtime_seconds),
    ]
}

fn average(rows: &[ReportRow]) -> [String; 8] {
    let n = rows.len() as i128;
    let k = if rows.iter().all(|r| r.k == rows[0].k) { rows[0].k.to_string() } else { String::new() };
    let mean_ratio = |f: fn(&ReportRow) -> Ratio<i64>| {
        format_decimal(rows.iter().map(|r| wide(f(r))).sum::<Ratio<i128>>() / Ratio::from_integer(n), 2)
    };
    [
        AVG_LABEL.to_string(),
        k,
        mean_int(rows.iter().map(|r| r.power_cost as i128), n),
        mean_int(rows.iter().map(|r| r.wirelength_with_ls as i128), n),
        mean_int(rows.iter().map(|r| r.ls_number as i128), n),
        mean_ratio(|r| r.ilo_percent),
        mean_ratio(|r| r.white_space_percent),
        format!("{:.3}", rows.iter().map(|r| r.runtime_seconds).sum::<f64>() / n as f64),
    ]
}

/// Header, one line per row, then the average row. Empty input yields the
/// header alone.
pub fn emit_report(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record(record(r)).expect("in-memory write");
    }
    if !rows.is_empty() {
        w.write_record(average(rows)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Reads the data rows of a report, skipping the average row.
pub fn parse_report(text: &str) -> Result<Vec<ReportRow>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    if r.headers()?.iter().ne(COLUMNS) {
        return Err(ReportError::Header);
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if &rec[0] == AVG_LABEL {
            continue;
        }
        let bad = |c: usize| ReportError::Value { row: i + 1, column: COLUMNS[c], value: rec[c].to_string() };
        rows.push(ReportRow {
            dataset: rec[0].to_string(),
            k: rec[1].parse().map_err(|_| bad(1))?,
            power_cost: rec[2].parse().map_err(|_| bad(2))?,
            wirelength_with_ls: rec[3].parse().map_err(|_| bad(3))?,
            ls_number: rec[4].parse().map_err(|_| bad(4))?,
            ilo_percent: parse_decimal(&rec[5]).ok_or_else(|| bad(5))?,
            white_space_percent: parse_decimal(&rec[6]).ok_or_else(|| bad(6))?,
            runtime_seconds: rec[7].parse().map_err(|_| bad(7))?,
        });
    }
    Ok(rows)
}

/// Column-aligned rendering of [`emit_report`] output.
pub fn pretty(rows: &[ReportRow]) -> String {
    let mut table: Vec<Vec<String>> = vec![COLUMNS.iter().map(|s| s.to_string()).collect()];
    table.extend(rows.iter().map(|r| record(r).to_vec()));
    if !rows.is_empty() {
        table.push(average(rows).to_vec());
    }
    let widths: Vec<usize> = (0..COLUMNS.len()).map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (v, &w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
