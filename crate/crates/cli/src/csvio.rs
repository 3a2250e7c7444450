//! Strict CSV reading and deterministic writing.
//!
//! Data files carry a header row (`x1,…,xp,y` for level data, `x1,…,xp`
//! for prediction points), '.' decimals and no thousands separators.
//! Lines starting with `#` are metadata and are skipped on read.

use std::path::Path;

use anyhow::{bail, Context, Result};
use bayhem::{DesignMatrix, LevelData, Prediction};

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))
}

fn parse_rows(path: &Path, expect_cols: Option<usize>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = open_reader(path)?;
    let headers: Vec<String> = rdr
        .headers()
        .with_context(|| format!("{}: missing header row", path.display()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if let Some(n) = expect_cols {
        if headers.len() != n {
            bail!(
                "{}: expected {n} columns, header has {}",
                path.display(),
                headers.len()
            );
        }
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row_no = i + 1; // 1-based data row
        let record = record.with_context(|| format!("{} row {row_no}", path.display()))?;
        let mut row = Vec::with_capacity(headers.len());
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().with_context(|| {
                format!(
                    "{} row {row_no}: non-numeric value '{}' in column {}",
                    path.display(),
                    cell,
                    headers.get(j).map(String::as_str).unwrap_or("?")
                )
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok((headers, rows))
}

fn check_x_headers(path: &Path, headers: &[String], p: usize) -> Result<()> {
    for (j, h) in headers.iter().take(p).enumerate() {
        let want = format!("x{}", j + 1);
        if h != &want {
            bail!(
                "{}: column {} is '{h}', expected '{want}'",
                path.display(),
                j + 1
            );
        }
    }
    Ok(())
}

/// Read one level's `x1..xp,y` file.
pub fn read_level(path: &Path, level_index: usize) -> Result<LevelData> {
    let (headers, rows) = parse_rows(path, None)?;
    if headers.len() < 2 {
        bail!(
            "{}: need at least one input column and one output column",
            path.display()
        );
    }
    let p = headers.len() - 1;
    check_x_headers(path, &headers, p)?;
    if headers[p] != "y" {
        bail!(
            "{}: last column is '{}', expected 'y'",
            path.display(),
            headers[p]
        );
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let xs: Vec<Vec<f64>> = rows.iter().map(|r| r[..p].to_vec()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[p]).collect();
    let x = DesignMatrix::from_rows(&xs).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    if let Some((i, j)) = x.duplicate_rows() {
        bail!(
            "{}: rows {} and {} hold identical design points",
            path.display(),
            i + 1,
            j + 1
        );
    }
    LevelData::new(x, ys, level_index).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// Read a prediction-points file with `p` input columns.
pub fn read_points(path: &Path, p: usize) -> Result<DesignMatrix> {
    let (headers, rows) = parse_rows(path, None)?;
    if headers.len() < p {
        bail!(
            "{}: model needs {p} input columns, file has {}",
            path.display(),
            headers.len()
        );
    }
    check_x_headers(path, &headers, p)?;
    if rows.is_empty() {
        return Ok(DesignMatrix::empty(p));
    }
    let xs: Vec<Vec<f64>> = rows.iter().map(|r| r[..p].to_vec()).collect();
    DesignMatrix::from_rows(&xs).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// Render predictions as `x1..xp,mean,variance` rows at full precision.
pub fn format_predictions(meta: &str, x: &DesignMatrix, pred: Option<&Prediction>) -> String {
    let mut s = String::from(meta);
    for j in 1..=x.ncols() {
        s.push_str(&format!("x{j},"));
    }
    s.push_str("mean,variance\n");
    if let Some(pred) = pred {
        for (i, row) in x.rows_iter().enumerate() {
            for v in row {
                s.push_str(&format!("{v:.16e},"));
            }
            s.push_str(&format!(
                "{:.16e},{:.16e}\n",
                pred.mean[i], pred.variance[i]
            ));
        }
    }
    s
}
