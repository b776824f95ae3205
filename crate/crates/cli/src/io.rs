//! Matrix and right-hand-side files: Matrix Market (array or coordinate, real
//! or integer, general or symmetric) and plain CSV.

use std::fs;
use std::path::Path;

use importance_sgd::numerics::DenseMatrix;
use importance_sgd::sgd::fmt_real;

use crate::error::{CliError, CliResult};

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn is_matrix_market(text: &str) -> bool {
    text.trim_start().starts_with("%%MatrixMarket")
}

/// Reads a dense matrix. Files starting with `%%MatrixMarket` are parsed as
/// Matrix Market; anything else as comma-separated rows with an optional
/// non-numeric header line.
pub fn read_matrix(path: &Path) -> CliResult<DenseMatrix> {
    let text = read_text(path)?;
    if is_matrix_market(&text) {
        parse_matrix_market(path, &text)
    } else {
        parse_csv(path, &text)
    }
}

/// Reads a right-hand side: Matrix Market with one column, or one value per
/// line (an optional non-numeric header is skipped).
pub fn read_rhs(path: &Path) -> CliResult<Vec<f64>> {
    let text = read_text(path)?;
    let m = if is_matrix_market(&text) {
        parse_matrix_market(path, &text)?
    } else {
        parse_csv(path, &text)?
    };
    if m.cols() != 1 {
        return Err(parse_err(path, 1, format!("expected a single column, found {}", m.cols())));
    }
    Ok(m.as_slice().to_vec())
}

fn parse_number(path: &Path, line: usize, field: &str) -> CliResult<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("not a number: {:?}", field.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value {v}")));
    }
    Ok(v)
}

fn parse_csv(path: &Path, text: &str) -> CliResult<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if !seen_data && fields.iter().any(|f| f.trim().parse::<f64>().is_err()) {
            // Header line.
            seen_data = true;
            continue;
        }
        seen_data = true;
        let row = fields
            .iter()
            .map(|f| parse_number(path, idx + 1, f))
            .collect::<CliResult<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    idx + 1,
                    format!("row has {} fields, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}

fn parse_matrix_market(path: &Path, text: &str) -> CliResult<DenseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, banner) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() < 5 || tokens[1] != "matrix" {
        return Err(parse_err(path, 1, format!("unsupported banner {banner:?}")));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(path, 1, format!("unsupported format {other:?}"))),
    };
    if !matches!(tokens[3].as_str(), "real" | "integer" | "double") {
        return Err(parse_err(path, 1, format!("unsupported field {:?}", tokens[3])));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(path, 1, format!("unsupported symmetry {other:?}"))),
    };
    let mut data = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = data.next().ok_or_else(|| parse_err(path, 2, "missing size line"))?;
    let dims = size
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| parse_err(path, size_line, format!("bad size {t:?}"))))
        .collect::<CliResult<Vec<_>>>()?;
    let expected = if coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(parse_err(path, size_line, format!("size line needs {expected} integers")));
    }
    let (m, n) = (dims[0], dims[1]);
    if symmetric && m != n {
        return Err(parse_err(path, size_line, "symmetric matrix must be square"));
    }
    let mut dense = vec![0.0; m * n];
    if coordinate {
        let nnz = dims[2];
        let mut count = 0;
        for (ln, l) in data {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(path, ln, "coordinate entry needs row, column and value"));
            }
            let idx = |t: &str, bound: usize| -> CliResult<usize> {
                match t.parse::<usize>() {
                    Ok(v) if (1..=bound).contains(&v) => Ok(v - 1),
                    _ => Err(parse_err(path, ln, format!("index {t:?} out of range 1..={bound}"))),
                }
            };
            let (i, j) = (idx(f[0], m)?, idx(f[1], n)?);
            let v = parse_number(path, ln, f[2])?;
            dense[i * n + j] = v;
            if symmetric {
                dense[j * n + i] = v;
            }
            count += 1;
        }
        if count != nnz {
            return Err(parse_err(path, size_line, format!("declared {nnz} entries, found {count}")));
        }
    } else {
        // Column-major; the symmetric form stores the lower triangle only.
        let slots: Vec<(usize, usize)> = (0..n)
            .flat_map(|j| (if symmetric { j } else { 0 }..m).map(move |i| (i, j)))
            .collect();
        let mut count = 0;
        for (ln, l) in data {
            for tok in l.split_whitespace() {
                let &(i, j) = slots
                    .get(count)
                    .ok_or_else(|| parse_err(path, ln, "more values than the declared size"))?;
                let v = parse_number(path, ln, tok)?;
                dense[i * n + j] = v;
                if symmetric {
                    dense[j * n + i] = v;
                }
                count += 1;
            }
        }
        if count != slots.len() {
            return Err(parse_err(
                path,
                size_line,
                format!("declared {} values, found {count}", slots.len()),
            ));
        }
    }
    Ok(DenseMatrix::new(m, n, dense)?)
}

/// Writes `A` as headerless CSV with full precision.
pub fn matrix_to_csv(a: &DenseMatrix) -> String {
    let mut s = String::new();
    for row in a.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| fmt_real(*v)).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

pub fn vector_to_lines(v: &[f64]) -> String {
    v.iter().map(|x| fmt_real(*x) + "\n").collect()
}
