use std::path::PathBuf;

use raformer_core::metrics::{AGGREGATE_ID, CSV_HEADER};

use crate::error::{CliError, CliResult};

pub const METRICS: [&str; 3] = ["PSNR", "PSNR*", "SSIM"];

/// One parsed metric CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportInput {
    pub label: String,
    /// `(video_id, [psnr, psnr_star, ssim])`, aggregate row included.
    pub rows: Vec<(String, [Option<f64>; 3])>,
}

impl ReportInput {
    fn row(&self, id: &str) -> Option<&[Option<f64>; 3]> {
        self.rows.iter().find(|(v, _)| v == id).map(|(_, m)| m)
    }
}

/// Splits `label=path` at the first `=`; a bare path is labelled by its
/// file stem. Paths containing `=` therefore need an explicit label.
pub fn parse_input_arg(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => {
            (label.to_string(), PathBuf::from(path))
        }
        _ => {
            let path = PathBuf::from(arg);
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (label, path)
        }
    }
}

fn parse_value(field: &str, optional: bool, what: &str) -> CliResult<Option<f64>> {
    if field.is_empty() && optional {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|_| CliError::schema(format!("{what}: {field:?} is not a number")))
}

/// Parses a metric CSV, rejecting anything but the exact metric schema.
pub fn parse_csv(label: &str, text: &str) -> CliResult<ReportInput> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::schema(format!("{label}: {e}")))?;
    let header: Vec<&str> = header.iter().collect();
    if header.join(",") != CSV_HEADER {
        return Err(CliError::schema(format!(
            "{label}: header {:?} is not {CSV_HEADER:?}",
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::schema(format!("{label}: {e}")))?;
        let line = i + 2;
        if record.len() != 4 {
            return Err(CliError::schema(format!(
                "{label} line {line}: expected 4 fields, found {}",
                record.len()
            )));
        }
        let what = |col: &str| format!("{label} line {line} {col}");
        rows.push((
            record[0].to_string(),
            [
                parse_value(&record[1], false, &what("psnr"))?,
                parse_value(&record[2], true, &what("psnr_star"))?,
                parse_value(&record[3], false, &what("ssim"))?,
            ],
        ));
    }
    if rows.last().map(|(id, _)| id.as_str()) != Some(AGGREGATE_ID) {
        return Err(CliError::schema(format!("{label}: last row must be {AGGREGATE_ID}")));
    }
    Ok(ReportInput {
        label: label.to_string(),
        rows,
    })
}

pub fn load_inputs(args: &[String]) -> CliResult<Vec<ReportInput>> {
    if args.is_empty() {
        return Err(CliError::config("report needs at least one csv"));
    }
    args.iter()
        .map(|arg| {
            let (label, path) = parse_input_arg(arg);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            parse_csv(&label, &text)
        })
        .collect()
}

fn fmt_value(v: Option<f64>, bold: bool) -> String {
    match v {
        None => "-".into(),
        Some(x) if bold => format!("**{x:.4}**"),
        Some(x) => format!("{x:.4}"),
    }
}

/// Flags the maximum of each candidate set (all higher-is-better metrics).
/// Nothing is flagged when fewer than two values are present.
pub fn best_flags(values: &[Option<f64>]) -> Vec<bool> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.len() < 2 {
        return vec![false; values.len()];
    }
    let best = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // compare at printed precision so visually tied cells are all bold
    let key = |x: f64| format!("{x:.4}");
    values
        .iter()
        .map(|v| v.is_some_and(|x| key(x) == key(best)))
        .collect()
}

fn render(header: Vec<String>, body: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                let pad = w - c.chars().count();
                if i == 0 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = line(&header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for row in &body {
        out.push_str(&line(row));
    }
    out
}

/// One column group per input, one row per video (aggregate last).
/// The best value of each metric within a row is bolded.
pub fn by_video(inputs: &[ReportInput]) -> String {
    let mut ids: Vec<&str> = Vec::new();
    for input in inputs {
        for (id, _) in &input.rows {
            if id != AGGREGATE_ID && !ids.contains(&id.as_str()) {
                ids.push(id);
            }
        }
    }
    ids.push(AGGREGATE_ID);

    let mut header = vec!["video_id".to_string()];
    for input in inputs {
        for m in METRICS {
            header.push(if inputs.len() == 1 { m.to_string() } else { format!("{} {m}", input.label) });
        }
    }
    let body = ids
        .iter()
        .map(|id| {
            let mut cells = vec![id.to_string()];
            let per_input: Vec<Option<&[Option<f64>; 3]>> = inputs.iter().map(|i| i.row(id)).collect();
            let flags: Vec<Vec<bool>> = (0..3)
                .map(|m| best_flags(&per_input.iter().map(|r| r.and_then(|v| v[m])).collect::<Vec<_>>()))
                .collect();
            for (k, r) in per_input.iter().enumerate() {
                for m in 0..3 {
                    cells.push(fmt_value(r.and_then(|v| v[m]), flags[m][k]));
                }
            }
            cells
        })
        .collect();
    render(header, body)
}

/// One row per input labelled by its label, using the aggregate row.
/// The best value in each metric column is bolded.
pub fn by_row(inputs: &[ReportInput]) -> String {
    let aggs: Vec<[Option<f64>; 3]> = inputs
        .iter()
        .map(|i| *i.row(AGGREGATE_ID).expect("parse_csv requires an aggregate row"))
        .collect();
    let flags: Vec<Vec<bool>> = (0..3)
        .map(|m| best_flags(&aggs.iter().map(|a| a[m]).collect::<Vec<_>>()))
        .collect();
    let mut header = vec!["setting".to_string()];
    header.extend(METRICS.iter().map(|m| m.to_string()));
    let body = inputs
        .iter()
        .zip(&aggs)
        .enumerate()
        .map(|(k, (input, agg))| {
            let mut cells = vec![input.label.clone()];
            cells.extend((0..3).map(|m| fmt_value(agg[m], flags[m][k])));
            cells
        })
        .collect();
    render(header, body)
}

pub fn run(args: &[String], rows: bool) -> CliResult<String> {
    let inputs = load_inputs(args)?;
    Ok(if rows { by_row(&inputs) } else { by_video(&inputs) })
}
