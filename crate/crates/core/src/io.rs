//! CSV and JSON formats: option chains in, calibration results, priced
//! chains and error tables out.
//!
//! Data rows are numbered from 1, not counting the header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::IoError;
use crate::types::{
    validate_chain, CalibrationResult, ErrorReport, MarketContext, ModelKind, ModelParams,
    OptionChain, OptionQuote,
};

pub const CHAIN_COLUMNS: [&str; 7] = [
    "expiry_label",
    "maturity_years",
    "strike",
    "style",
    "mid_price",
    "futures_price",
    "rate",
];

pub const PRICED_COLUMNS: [&str; 6] = [
    "expiry_label",
    "strike",
    "market_price",
    "model_price",
    "abs_error",
    "rel_error",
];

pub const ERROR_COLUMNS: [&str; 7] = ["model", "scope", "n", "rmse", "mae", "mape", "msle"];

fn column_indices<const N: usize>(
    headers: &csv::StringRecord,
    names: &[&str; N],
) -> Result<[usize; N], IoError> {
    let mut idx = [0; N];
    for (slot, name) in idx.iter_mut().zip(names) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| IoError::MissingColumn(name.to_string()))?;
    }
    Ok(idx)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, line: usize) -> Result<T, IoError>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).unwrap_or("").trim();
    raw.parse().map_err(|e| IoError::RowParse {
        line,
        reason: format!("{name} `{raw}`: {e}"),
    })
}

pub fn parse_chain_csv(path: &Path) -> Result<OptionChain, IoError> {
    parse_chain(BufReader::new(File::open(path)?))
}

/// Reads and validates an option chain. Every row must carry the same
/// futures price and rate.
pub fn parse_chain<R: Read>(reader: R) -> Result<OptionChain, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let [label, maturity, strike, style, price, futures, rate] = column_indices(&headers, &CHAIN_COLUMNS)?;

    let mut ctx: Option<(f64, f64)> = None;
    let mut quotes = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| IoError::RowParse { line, reason: e.to_string() })?;
        let row_ctx = (
            field::<f64>(&rec, futures, "futures_price", line)?,
            field::<f64>(&rec, rate, "rate", line)?,
        );
        match ctx {
            None => ctx = Some(row_ctx),
            Some(c) if c != row_ctx => return Err(IoError::InconsistentContext(line)),
            _ => {}
        }
        quotes.push(OptionQuote {
            strike: field(&rec, strike, "strike", line)?,
            maturity: field(&rec, maturity, "maturity_years", line)?,
            price: field(&rec, price, "mid_price", line)?,
            style: field(&rec, style, "style", line)?,
            expiry_label: rec.get(label).unwrap_or("").to_string(),
        });
    }
    let (spot, rate) = ctx.ok_or(IoError::EmptyFile)?;
    let context = MarketContext::new(spot, rate).map_err(|e| IoError::InvalidChain(e.to_string()))?;
    let chain = OptionChain::new(context, quotes);
    let violations = validate_chain(&chain);
    if !violations.is_empty() {
        let detail: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(IoError::InvalidChain(detail.join("; ")));
    }
    Ok(chain)
}

pub fn write_chain_csv(chain: &OptionChain, path: &Path) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_chain(chain, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_chain<W: Write>(chain: &OptionChain, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CHAIN_COLUMNS)?;
    let (spot, rate) = (chain.context.spot.to_string(), chain.context.rate.to_string());
    for q in &chain.quotes {
        w.write_record([
            q.expiry_label.as_str(),
            &q.maturity.to_string(),
            &q.strike.to_string(),
            q.style.as_str(),
            &q.price.to_string(),
            &spot,
            &rate,
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CalibrationRecord {
    model: String,
    expiry_label: String,
    params: IndexMap<String, f64>,
    objective: f64,
    converged: bool,
    iterations: usize,
}

impl From<&CalibrationResult> for CalibrationRecord {
    fn from(r: &CalibrationResult) -> Self {
        CalibrationRecord {
            model: r.params.kind().tag().to_string(),
            expiry_label: r.expiry_label.clone(),
            params: r.params.named().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            objective: r.objective,
            converged: r.converged,
            iterations: r.iterations,
        }
    }
}

impl TryFrom<CalibrationRecord> for CalibrationResult {
    type Error = IoError;

    fn try_from(rec: CalibrationRecord) -> Result<Self, IoError> {
        let mismatch = |reason: String| IoError::ParamsMismatch { model: rec.model.clone(), reason };
        let kind: ModelKind = rec.model.parse().map_err(mismatch)?;
        let names: Vec<&str> = kind.bounds().iter().map(|b| b.name).collect();
        let got: Vec<&str> = rec.params.keys().map(String::as_str).collect();
        if names != got {
            return Err(mismatch(format!("expected parameters {names:?}, found {got:?}")));
        }
        let values: Vec<f64> = rec.params.values().copied().collect();
        Ok(CalibrationResult {
            params: ModelParams::from_slice(kind, &values),
            objective: rec.objective,
            converged: rec.converged,
            iterations: rec.iterations,
            expiry_label: rec.expiry_label,
        })
    }
}

pub fn write_calibration_json(results: &[CalibrationResult], path: &Path) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_calibration(results, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_calibration<W: Write>(results: &[CalibrationResult], mut writer: W) -> Result<(), IoError> {
    let records: Vec<CalibrationRecord> = results.iter().map(Into::into).collect();
    serde_json::to_writer_pretty(&mut writer, &records)?;
    writeln!(writer)?;
    Ok(())
}

pub fn read_calibration_json(path: &Path) -> Result<Vec<CalibrationResult>, IoError> {
    read_calibration(BufReader::new(File::open(path)?))
}

pub fn read_calibration<R: Read>(reader: R) -> Result<Vec<CalibrationResult>, IoError> {
    let records: Vec<CalibrationRecord> = serde_json::from_reader(reader)?;
    records.into_iter().map(TryInto::try_into).collect()
}

/// One row of a priced-chain file.
#[derive(Debug, Clone, PartialEq)]
pub struct PricedRow {
    pub expiry_label: String,
    pub strike: f64,
    pub market_price: f64,
    pub model_price: f64,
    pub abs_error: f64,
    /// Absent when the market price is zero.
    pub rel_error: Option<f64>,
}

impl PricedRow {
    pub fn new(quote: &OptionQuote, model_price: f64) -> Self {
        let abs_error = (model_price - quote.price).abs();
        PricedRow {
            expiry_label: quote.expiry_label.clone(),
            strike: quote.strike,
            market_price: quote.price,
            model_price,
            abs_error,
            rel_error: (quote.price != 0.0).then(|| abs_error / quote.price.abs()),
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_priced_chain_csv(
    quotes: &[OptionQuote],
    model_prices: &[f64],
    path: &Path,
) -> Result<(), IoError> {
    if quotes.len() != model_prices.len() {
        return Err(IoError::InvalidChain(format!(
            "{} quotes but {} model prices",
            quotes.len(),
            model_prices.len()
        )));
    }
    let rows: Vec<PricedRow> = quotes.iter().zip(model_prices).map(|(q, &m)| PricedRow::new(q, m)).collect();
    let mut w = BufWriter::new(File::create(path)?);
    write_priced(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_priced<W: Write>(rows: &[PricedRow], writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PRICED_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.expiry_label.clone(),
            r.strike.to_string(),
            r.market_price.to_string(),
            r.model_price.to_string(),
            r.abs_error.to_string(),
            opt(r.rel_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_priced_chain_csv(path: &Path) -> Result<Vec<PricedRow>, IoError> {
    read_priced(BufReader::new(File::open(path)?))
}

pub fn read_priced<R: Read>(reader: R) -> Result<Vec<PricedRow>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let [label, strike, market, model, abs, rel] = column_indices(&headers, &PRICED_COLUMNS)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| IoError::RowParse { line, reason: e.to_string() })?;
        let rel_error = match rec.get(rel).unwrap_or("") {
            "" => None,
            _ => Some(field(&rec, rel, "rel_error", line)?),
        };
        rows.push(PricedRow {
            expiry_label: rec.get(label).unwrap_or("").to_string(),
            strike: field(&rec, strike, "strike", line)?,
            market_price: field(&rec, market, "market_price", line)?,
            model_price: field(&rec, model, "model_price", line)?,
            abs_error: field(&rec, abs, "abs_error", line)?,
            rel_error,
        });
    }
    Ok(rows)
}

/// Error reports as CSV, one row per (model, scope).
pub fn write_error_csv<W: Write>(rows: &[(ModelKind, ErrorReport)], writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ERROR_COLUMNS)?;
    for (kind, r) in rows {
        w.write_record([
            kind.tag().to_string(),
            r.scope.clone(),
            r.n.to_string(),
            r.rmse.to_string(),
            r.mae.to_string(),
            opt(r.mape),
            opt(r.msle),
        ])?;
    }
    w.flush()?;
    Ok(())
}
