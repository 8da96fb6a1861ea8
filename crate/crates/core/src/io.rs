//! Dense matrices on disk and synthetic planted instances.
//!
//! Readers accept MatrixMarket (`coordinate` or `array`; `real`, `integer`
//! or `pattern`; `general` or `symmetric`) and headerless CSV. Writers emit
//! MatrixMarket `array real general` with shortest round-trip float text,
//! so a write followed by a read reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Reads a matrix, choosing the format from the first line.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, path)
}

/// Reads a matrix and rejects non-square input.
pub fn read_square_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let x = read_matrix(path.as_ref())?;
    if x.nrows() != x.ncols() {
        return Err(Error::Shape(format!(
            "{}: expected a square matrix, got {}×{}",
            path.as_ref().display(),
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(x)
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<Array2<f64>> {
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(text, path)
    } else {
        parse_csv(text, path)
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_f64(tok: &str, path: &Path, line: usize) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("invalid number '{}'", tok.trim())))
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

fn parse_matrix_market(text: &str, path: &Path) -> Result<Array2<f64>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines.next().expect("nonempty by caller");
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[1] != "matrix" {
        return Err(parse_err(
            path,
            hline,
            "expected '%%MatrixMarket matrix <format> <field> <symmetry>'",
        ));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => {
            return Err(parse_err(
                path,
                hline,
                format!("unsupported format '{other}'"),
            ))
        }
    };
    let field = match tokens[3].as_str() {
        "real" | "double" | "integer" => Field::Real,
        "pattern" if coordinate => Field::Pattern,
        other => {
            return Err(parse_err(
                path,
                hline,
                format!("unsupported field '{other}'"),
            ))
        }
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(parse_err(
                path,
                hline,
                format!("unsupported symmetry '{other}'"),
            ))
        }
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sline, size) = data
        .next()
        .ok_or_else(|| parse_err(path, hline, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(path, sline, "invalid size line"))?;
    let (rows, cols) = match (coordinate, dims.as_slice()) {
        (true, [r, c, _]) | (false, [r, c]) => (*r, *c),
        _ => {
            return Err(parse_err(
                path,
                sline,
                "wrong number of entries on the size line",
            ))
        }
    };
    if symmetric && rows != cols {
        return Err(parse_err(
            path,
            sline,
            "symmetric storage requires a square matrix",
        ));
    }
    let mut out = Array2::zeros((rows, cols));

    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (line, l) in data {
            let toks: Vec<&str> = l.split_whitespace().collect();
            let want = if field == Field::Pattern { 2 } else { 3 };
            if toks.len() != want {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected {want} fields, found {}", toks.len()),
                ));
            }
            let idx = |t: &str, bound: usize| -> Result<usize> {
                let i: usize = t
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("invalid index '{t}'")))?;
                if i == 0 || i > bound {
                    return Err(parse_err(
                        path,
                        line,
                        format!("index {i} out of range 1..={bound}"),
                    ));
                }
                Ok(i - 1)
            };
            let (i, j) = (idx(toks[0], rows)?, idx(toks[1], cols)?);
            let v = if field == Field::Pattern {
                1.0
            } else {
                parse_f64(toks[2], path, line)?
            };
            out[[i, j]] = v;
            if symmetric {
                out[[j, i]] = v;
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(
                path,
                sline,
                format!("header declares {nnz} entries, found {seen}"),
            ));
        }
    } else {
        // Column-major; symmetric storage lists the lower triangle only.
        let mut slots = Vec::new();
        for j in 0..cols {
            let start = if symmetric { j } else { 0 };
            for i in start..rows {
                slots.push((i, j));
            }
        }
        let mut values = Vec::with_capacity(slots.len());
        let mut last_line = sline;
        for (line, l) in data {
            for tok in l.split_whitespace() {
                values.push(parse_f64(tok, path, line)?);
            }
            last_line = line;
        }
        if values.len() != slots.len() {
            return Err(parse_err(
                path,
                last_line,
                format!("expected {} values, found {}", slots.len(), values.len()),
            ));
        }
        for ((i, j), v) in slots.into_iter().zip(values) {
            out[[i, j]] = v;
            if symmetric {
                out[[j, i]] = v;
            }
        }
    }
    Ok(out)
}

fn parse_csv(text: &str, path: &Path) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        if l.trim().is_empty() {
            continue;
        }
        let row = l
            .split(',')
            .map(|t| parse_f64(t, path, line))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    line,
                    format!("row has {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "empty matrix"));
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(
        Array2::from_shape_vec((m, n), rows.into_iter().flatten().collect())
            .expect("rectangular rows"),
    )
}

/// Shortest text that parses back to exactly `v`, in positional notation
/// for moderate magnitudes and scientific notation otherwise.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// MatrixMarket `array real general` text.
pub fn matrix_market_string(a: &Array2<f64>) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    writeln!(s, "{} {}", a.nrows(), a.ncols()).unwrap();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(s, "{}", format_f64(a[[i, j]])).unwrap();
        }
    }
    s
}

pub fn write_matrix(path: impl AsRef<Path>, a: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_market_string(a)).map_err(|e| Error::io(path, e))
}

/// One integer per line; unassigned rows are written as `-1`.
pub fn write_labels(path: impl AsRef<Path>, labels: &[Option<usize>]) -> Result<()> {
    let path = path.as_ref();
    let mut s = String::new();
    for l in labels {
        match l {
            Some(k) => writeln!(s, "{k}").unwrap(),
            None => s.push_str("-1\n"),
        }
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<Option<usize>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: i64 = l
                .trim()
                .parse()
                .map_err(|_| parse_err(path, i + 1, format!("invalid label '{}'", l.trim())))?;
            Ok(usize::try_from(v).ok())
        })
        .collect()
}

/// A planted instance `X = U* V* U*ᵀ + E`.
#[derive(Clone, Debug)]
pub struct SynthInstance {
    pub x: Array2<f64>,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub labels: Vec<usize>,
}

/// Planted-community generator.
///
/// Rows are dealt into `r` communities (every community nonempty) in a
/// seeded random order; `U*` is the 0/1 membership matrix. `V*` has unit
/// diagonal, and each off-diagonal pair is an interaction of strength
/// uniform in `[0.05, 0.3)` with probability `density`, else zero. The noise
/// `E` is symmetric with entries uniform in `[0, noise_level · mean(U*V*U*ᵀ))`.
pub fn synth_instance(
    m: usize,
    r: usize,
    noise_level: f64,
    density: f64,
    seed: u64,
) -> Result<SynthInstance> {
    if r == 0 || r > m {
        return Err(Error::Parameter(format!("rank {r} must lie in 1..={m}")));
    }
    if !(noise_level >= 0.0 && noise_level.is_finite()) {
        return Err(Error::Parameter(format!(
            "noise level {noise_level} must be nonnegative"
        )));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Parameter(format!(
            "density {density} must lie in (0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut labels = vec![0; m];
    for (pos, &row) in order.iter().enumerate() {
        labels[row] = pos % r;
    }
    let mut u = Array2::zeros((m, r));
    for (row, &c) in labels.iter().enumerate() {
        u[[row, c]] = 1.0;
    }
    let mut v = Array2::eye(r);
    for i in 0..r {
        for j in i + 1..r {
            if rng.gen::<f64>() < density {
                let w = rng.gen_range(0.05..0.3);
                v[[i, j]] = w;
                v[[j, i]] = w;
            }
        }
    }
    let clean = u.dot(&v).dot(&u.t());
    let mut x = clean.clone();
    if noise_level > 0.0 {
        let mag = noise_level * clean.mean().unwrap_or(0.0);
        for i in 0..m {
            for j in i..m {
                let e = mag * rng.gen::<f64>();
                x[[i, j]] += e;
                if i != j {
                    x[[j, i]] += e;
                }
            }
        }
    }
    Ok(SynthInstance { x, u, v, labels })
}
