use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Bar, MarketDataError, PanelData, SymbolMeta};

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Longest run of missing trading days that is forward-filled.
    pub max_gap_days: usize,
    /// Drop rows that break bar invariants instead of failing the load.
    pub reject_invalid_rows: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            max_gap_days: 5,
            reject_invalid_rows: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SymbolLoadReport {
    pub symbol: String,
    pub file: String,
    pub sha256: String,
    pub rows_read: usize,
    pub rows_filled: usize,
    pub rows_rejected: usize,
    pub rows_trimmed: usize,
}

/// Summary of a load, serialized as the load report JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub symbols: usize,
    pub calendar_days: usize,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub rows_read: usize,
    pub rows_filled: usize,
    pub rows_rejected: usize,
    pub rows_trimmed: usize,
    pub per_symbol: Vec<SymbolLoadReport>,
}

impl LoadReport {
    /// Per-file content hashes keyed by symbol.
    pub fn fingerprint(&self) -> BTreeMap<String, String> {
        self.per_symbol
            .iter()
            .map(|s| (s.symbol.clone(), s.sha256.clone()))
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    symbol: String,
    sector: String,
    file: String,
}

#[derive(Debug, Deserialize)]
struct BarRow {
    date: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    volume: f64,
}

fn io_err(path: &Path, source: std::io::Error) -> MarketDataError {
    MarketDataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> MarketDataError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path, source),
        kind => MarketDataError::Malformed {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

struct RawSeries {
    meta: SymbolMeta,
    report: SymbolLoadReport,
    bars: Vec<Bar>,
}

fn read_series(meta: SymbolMeta, path: &Path, opts: &LoadOptions) -> Result<RawSeries, MarketDataError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut report = SymbolLoadReport {
        symbol: meta.symbol.clone(),
        file: path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        ..Default::default()
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let expected = ["date", "open", "high", "low", "close", "volume"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(MarketDataError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut bars: Vec<Bar> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: BarRow = rec
            .deserialize(Some(&headers))
            .map_err(|e| MarketDataError::Malformed {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| MarketDataError::Malformed {
            path: path.to_path_buf(),
            line,
            message: format!("bad date {:?}: {e}", row.date),
        })?;
        report.rows_read += 1;
        let bar = Bar {
            date,
            open: row.open,
            high: row.high,
            low: row.low,
            close: row.close,
            volume: row.volume,
        };
        if let Err(reason) = bar.validate() {
            if opts.reject_invalid_rows {
                report.rows_rejected += 1;
                continue;
            }
            return Err(MarketDataError::InvalidBar {
                path: path.to_path_buf(),
                line,
                reason,
            });
        }
        if bars.last().is_some_and(|prev| prev.date >= date) {
            return Err(MarketDataError::NonIncreasingDate {
                path: path.to_path_buf(),
                line,
                date,
            });
        }
        bars.push(bar);
    }
    if bars.is_empty() {
        return Err(MarketDataError::EmptySeries(meta.symbol));
    }
    Ok(RawSeries { meta, report, bars })
}

/// Loads a universe manifest (`symbol,sector,file`) and its bar files.
///
/// The calendar is the union of all observed dates inside the intersection
/// of the symbols' date ranges. Missing days are forward-filled with
/// zero-volume carry bars up to `max_gap_days` in a row; longer runs fail.
pub fn load_panel(
    manifest: &Path,
    data_dir: &Path,
    opts: &LoadOptions,
) -> Result<(PanelData, LoadReport), MarketDataError> {
    let file = fs::File::open(manifest).map_err(|e| io_err(manifest, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut rows: Vec<ManifestRow> = Vec::new();
    let mut seen = BTreeSet::new();
    for rec in rdr.deserialize::<ManifestRow>() {
        let row = rec.map_err(|e| csv_err(manifest, e))?;
        if !seen.insert(row.symbol.clone()) {
            return Err(MarketDataError::DuplicateSymbol(row.symbol));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MarketDataError::Malformed {
            path: manifest.to_path_buf(),
            line: 1,
            message: "manifest lists no symbols".into(),
        });
    }

    let mut raw = Vec::with_capacity(rows.len());
    for row in rows {
        let path: PathBuf = data_dir.join(&row.file);
        let meta = SymbolMeta {
            symbol: row.symbol,
            sector: row.sector,
        };
        raw.push(read_series(meta, &path, opts)?);
    }

    let start = raw.iter().map(|r| r.bars[0].date).max().unwrap();
    let end = raw.iter().map(|r| r.bars[r.bars.len() - 1].date).min().unwrap();
    if start > end {
        return Err(MarketDataError::EmptyIntersection);
    }
    let calendar: Vec<NaiveDate> = raw
        .iter()
        .flat_map(|r| r.bars.iter().map(|b| b.date))
        .filter(|d| *d >= start && *d <= end)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut universe = Vec::with_capacity(raw.len());
    let mut all_bars = Vec::with_capacity(raw.len());
    let mut per_symbol = Vec::with_capacity(raw.len());
    for mut series in raw {
        let (aligned, filled, trimmed) = align(&series, &calendar, opts.max_gap_days)?;
        series.report.rows_filled = filled;
        series.report.rows_trimmed = trimmed;
        universe.push(series.meta);
        all_bars.push(aligned);
        per_symbol.push(series.report);
    }

    let report = LoadReport {
        symbols: universe.len(),
        calendar_days: calendar.len(),
        first_date: calendar.first().copied(),
        last_date: calendar.last().copied(),
        rows_read: per_symbol.iter().map(|s| s.rows_read).sum(),
        rows_filled: per_symbol.iter().map(|s| s.rows_filled).sum(),
        rows_rejected: per_symbol.iter().map(|s| s.rows_rejected).sum(),
        rows_trimmed: per_symbol.iter().map(|s| s.rows_trimmed).sum(),
        per_symbol,
    };
    let panel = PanelData::new(universe, calendar, all_bars)?;
    Ok((panel, report))
}

fn align(
    series: &RawSeries,
    calendar: &[NaiveDate],
    max_gap: usize,
) -> Result<(Vec<Bar>, usize, usize), MarketDataError> {
    let bars = &series.bars;
    let mut out = Vec::with_capacity(calendar.len());
    let mut filled = 0;
    let mut i = 0;
    let mut last: Option<Bar> = None;
    // rows before the common start only seed the carry price
    while i < bars.len() && bars[i].date < calendar[0] {
        last = Some(bars[i]);
        i += 1;
    }
    let mut trimmed = i;
    let mut run = 0usize;
    for &day in calendar {
        if i < bars.len() && bars[i].date == day {
            out.push(bars[i]);
            last = Some(bars[i]);
            i += 1;
            run = 0;
        } else {
            let prev = last.ok_or_else(|| {
                MarketDataError::InvalidPanel(format!("{} has no bar on or before {day}", series.meta.symbol))
            })?;
            run += 1;
            if run > max_gap {
                // count the whole run for the message
                let missing = calendar
                    .iter()
                    .filter(|d| **d > prev.date)
                    .take_while(|d| bars.get(i).is_none_or(|b| b.date != **d))
                    .count();
                return Err(MarketDataError::GapTooLarge {
                    symbol: series.meta.symbol.clone(),
                    after: prev.date,
                    missing,
                    max_gap,
                });
            }
            out.push(Bar::carry(day, prev.close));
            filled += 1;
        }
    }
    trimmed += bars.len() - i;
    Ok((out, filled, trimmed))
}

fn format_bar_row(b: &Bar) -> [String; 6] {
    [
        b.date.format("%Y-%m-%d").to_string(),
        b.open.to_string(),
        b.high.to_string(),
        b.low.to_string(),
        b.close.to_string(),
        b.volume.to_string(),
    ]
}

/// Writes `universe.csv` plus one `<SYMBOL>.csv` per symbol. Floats use
/// shortest round-trip formatting, so reloading reproduces the panel exactly.
pub fn write_panel(panel: &PanelData, out_dir: &Path) -> Result<PathBuf, MarketDataError> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let manifest = out_dir.join("universe.csv");
    let mut mw = csv::Writer::from_path(&manifest).map_err(|e| csv_err(&manifest, e))?;
    mw.write_record(["symbol", "sector", "file"])
        .map_err(|e| csv_err(&manifest, e))?;
    for (i, meta) in panel.universe().iter().enumerate() {
        let file = format!("{}.csv", meta.symbol);
        mw.write_record([meta.symbol.as_str(), meta.sector.as_str(), file.as_str()])
            .map_err(|e| csv_err(&manifest, e))?;
        let path = out_dir.join(&file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(["date", "open", "high", "low", "close", "volume"])
            .map_err(|e| csv_err(&path, e))?;
        for b in panel.series(i) {
            w.write_record(format_bar_row(b)).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    mw.flush().map_err(|e| io_err(&manifest, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;

    fn weekdays(n: usize) -> Vec<NaiveDate> {
        let mut d = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
        let mut out = Vec::new();
        while out.len() < n {
            use chrono::Datelike;
            if d.weekday().num_days_from_monday() < 5 {
                out.push(d);
            }
            d = d.succ_opt().unwrap();
        }
        out
    }

    fn write_series(dir: &Path, name: &str, days: &[NaiveDate], skip: &[usize]) {
        let mut s = String::from("date,open,high,low,close,volume\n");
        for (i, d) in days.iter().enumerate() {
            if skip.contains(&i) {
                continue;
            }
            let c = 100.0 + i as f64;
            writeln!(s, "{d},{},{},{},{c},1000", c - 0.5, c + 1.0, c - 1.0).unwrap();
        }
        fs::write(dir.join(name), s).unwrap();
    }

    fn write_manifest(dir: &Path, rows: &[(&str, &str)]) -> PathBuf {
        let mut s = String::from("symbol,sector,file\n");
        for (sym, file) in rows {
            writeln!(s, "{sym},Tech,{file}").unwrap();
        }
        let p = dir.join("universe.csv");
        fs::write(&p, s).unwrap();
        p
    }

    #[test]
    fn clean_two_symbol_load() {
        let dir = tempfile::tempdir().unwrap();
        let days = weekdays(30);
        write_series(dir.path(), "A.csv", &days, &[]);
        write_series(dir.path(), "B.csv", &days[3..], &[]);
        let m = write_manifest(dir.path(), &[("A", "A.csv"), ("B", "B.csv")]);
        let (panel, report) = load_panel(&m, dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(panel.num_symbols(), 2);
        assert_eq!(panel.num_days(), 27);
        assert_eq!(panel.calendar()[0], days[3]);
        assert_eq!(report.rows_trimmed, 3);
        assert_eq!(report.rows_filled, 0);
        assert_eq!(report.per_symbol[0].sha256.len(), 64);

        let (again, _) = load_panel(&m, dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(panel, again);
    }

    #[test]
    fn small_gap_is_forward_filled() {
        let dir = tempfile::tempdir().unwrap();
        let days = weekdays(30);
        write_series(dir.path(), "A.csv", &days, &[]);
        write_series(dir.path(), "B.csv", &days, &[10, 11, 12, 13, 14]);
        let m = write_manifest(dir.path(), &[("A", "A.csv"), ("B", "B.csv")]);
        let (panel, report) = load_panel(&m, dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(report.rows_filled, 5);
        let b = panel.series(1);
        assert_eq!(b[12].volume, 0.0);
        assert_eq!(b[12].close, b[9].close);
        assert_eq!(b[12].open, b[9].close);
    }

    #[test]
    fn six_day_gap_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let days = weekdays(30);
        write_series(dir.path(), "A.csv", &days, &[]);
        write_series(dir.path(), "B.csv", &days, &[10, 11, 12, 13, 14, 15]);
        let m = write_manifest(dir.path(), &[("A", "A.csv"), ("B", "B.csv")]);
        let err = load_panel(&m, dir.path(), &LoadOptions::default()).unwrap_err();
        match err {
            MarketDataError::GapTooLarge {
                symbol,
                missing,
                max_gap,
                after,
            } => {
                assert_eq!(symbol, "B");
                assert_eq!(missing, 6);
                assert_eq!(max_gap, 5);
                assert_eq!(after, days[9]);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn low_above_high_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let days = weekdays(5);
        write_series(dir.path(), "A.csv", &days, &[]);
        let mut s = fs::read_to_string(dir.path().join("A.csv")).unwrap();
        s.push_str("2021-01-11,10,9,11,10,5\n");
        fs::write(dir.path().join("A.csv"), s).unwrap();
        let m = write_manifest(dir.path(), &[("A", "A.csv")]);
        let err = load_panel(&m, dir.path(), &LoadOptions::default()).unwrap_err();
        match &err {
            MarketDataError::InvalidBar { line, .. } => assert_eq!(*line, 7),
            other => panic!("unexpected {other}"),
        }
        assert!(err.to_string().contains("A.csv:7"));

        let lenient = LoadOptions {
            reject_invalid_rows: true,
            ..Default::default()
        };
        let (_, report) = load_panel(&m, dir.path(), &lenient).unwrap();
        assert_eq!(report.rows_rejected, 1);
    }

    #[test]
    fn missing_file_and_malformed_row() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_manifest(dir.path(), &[("A", "nope.csv")]);
        let err = load_panel(&m, dir.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, MarketDataError::Io { .. }));
        assert!(err.to_string().contains("nope.csv"));

        fs::write(
            dir.path().join("nope.csv"),
            "date,open,high,low,close,volume\n2021-01-04,1,2,x,1,1\n",
        )
        .unwrap();
        let err = load_panel(&m, dir.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, MarketDataError::Malformed { line: 2, .. }), "{err}");
    }

    #[test]
    fn write_then_load_round_trips() {
        let spec = crate::marketdata::SynthSpec {
            symbols: 3,
            days: 40,
            ..Default::default()
        };
        let panel = crate::marketdata::generate_synthetic(&spec, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = write_panel(&panel, dir.path()).unwrap();
        let (back, _) = load_panel(&m, dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(panel, back);
    }
}
