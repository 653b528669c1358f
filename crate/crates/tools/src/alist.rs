//! Parity-check matrices in the MacKay "alist" text format.
//!
//! Layout: `n m`, then `max_col_deg max_row_deg`, then the n column degrees,
//! the m row degrees, one line of 1-based check indices per variable, and one
//! line of 1-based variable indices per check. Irregular rows are padded with
//! zeros up to the stated maximum; padding zeros are accepted anywhere after
//! the real entries on read.

use std::fs;
use std::path::Path;

use jointlp_core::code::TannerGraph;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlistError {
    #[error("alist header malformed: {0}")]
    Header(&'static str),
    #[error("degree list inconsistent: {0}")]
    Degrees(&'static str),
    #[error("index out of range: {got} not in 1..={max}")]
    IndexRange { got: i64, max: usize },
    #[error("repeated index {index} in {side} {row}")]
    Repeated { side: &'static str, row: usize, index: usize },
    #[error("column and row adjacency disagree at variable {0}")]
    Mismatch(usize),
    #[error("graph rejected: {0}")]
    Graph(#[from] jointlp_core::code::CodeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Streaming integer reader over whitespace-separated tokens.
struct Tokens<'a> {
    iter: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Self { iter: text.split_whitespace() }
    }

    fn next_int(&mut self, what: &'static str) -> Result<i64, AlistError> {
        let tok = self.iter.next().ok_or(AlistError::Header(what))?;
        tok.parse::<i64>().map_err(|_| AlistError::Header(what))
    }
}

pub fn parse_alist(text: &str) -> Result<TannerGraph, AlistError> {
    let mut toks = Tokens::new(text);
    let n = toks.next_int("missing n")?;
    let m = toks.next_int("missing m")?;
    if n <= 0 || m <= 0 {
        return Err(AlistError::Header("n and m must be positive"));
    }
    let (n, m) = (n as usize, m as usize);
    let max_col = toks.next_int("missing max column degree")?;
    let max_row = toks.next_int("missing max row degree")?;
    if max_col < 0 || max_row < 0 {
        return Err(AlistError::Header("negative max degree"));
    }

    let mut col_degs = Vec::with_capacity(n);
    for _ in 0..n {
        let d = toks.next_int("truncated column degree list")?;
        if d < 0 || d > max_col {
            return Err(AlistError::Degrees("column degree outside 0..=max"));
        }
        col_degs.push(d as usize);
    }
    let mut row_degs = Vec::with_capacity(m);
    for _ in 0..m {
        let d = toks.next_int("truncated row degree list")?;
        if d < 0 || d > max_row {
            return Err(AlistError::Degrees("row degree outside 0..=max"));
        }
        row_degs.push(d as usize);
    }

    // Adjacency blocks. Real entries are 1-based; zeros are padding. A short
    // line is only detectable via the degree lists, so entries are counted.
    let mut read_block = |count: usize,
                          degs: &[usize],
                          max: usize,
                          limit: usize,
                          side: &'static str|
     -> Result<Vec<Vec<usize>>, AlistError> {
        let mut rows = Vec::with_capacity(count);
        for (r, &deg) in degs.iter().enumerate().take(count) {
            let mut row = Vec::with_capacity(deg);
            for k in 0..max {
                let v = toks.next_int("truncated adjacency block")?;
                if v == 0 {
                    if k < deg {
                        return Err(AlistError::Degrees("padding zero before stated degree"));
                    }
                    continue;
                }
                if k >= deg {
                    return Err(AlistError::Degrees("entry beyond stated degree"));
                }
                if v < 0 || v as usize > limit {
                    return Err(AlistError::IndexRange { got: v, max: limit });
                }
                let idx = v as usize - 1;
                if row.contains(&idx) {
                    return Err(AlistError::Repeated { side, row: r, index: idx });
                }
                row.push(idx);
            }
            rows.push(row);
        }
        Ok(rows)
    };

    let cols = read_block(n, &col_degs, max_col as usize, m, "column")?;
    let rows = read_block(m, &row_degs, max_row as usize, n, "row")?;

    let graph = TannerGraph::from_checks(n, rows)?;
    for (i, col) in cols.iter().enumerate() {
        let mut expect = graph.var_checks(i).to_vec();
        let mut got = col.clone();
        expect.sort_unstable();
        got.sort_unstable();
        if expect != got {
            return Err(AlistError::Mismatch(i));
        }
    }
    Ok(graph)
}

pub fn to_alist(graph: &TannerGraph) -> String {
    let n = graph.num_vars();
    let m = graph.num_checks();
    let max_col = (0..n).map(|i| graph.var_checks(i).len()).max().unwrap_or(0);
    let max_row = (0..m).map(|j| graph.check_vars(j).len()).max().unwrap_or(0);
    let mut out = String::new();
    out.push_str(&format!("{} {}\n{} {}\n", n, m, max_col, max_row));
    let degs = |list: Vec<usize>| -> String {
        list.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ")
    };
    out.push_str(&degs((0..n).map(|i| graph.var_checks(i).len()).collect()));
    out.push('\n');
    out.push_str(&degs((0..m).map(|j| graph.check_vars(j).len()).collect()));
    out.push('\n');
    let mut block = |lists: Vec<&[usize]>, width: usize| {
        for list in lists {
            let mut entries: Vec<String> = list.iter().map(|v| (v + 1).to_string()).collect();
            while entries.len() < width {
                entries.push("0".into());
            }
            out.push_str(&entries.join(" "));
            out.push('\n');
        }
    };
    block((0..n).map(|i| graph.var_checks(i)).collect(), max_col);
    block((0..m).map(|j| graph.check_vars(j)).collect(), max_row);
    out
}

pub fn load_alist(path: &Path) -> Result<TannerGraph, AlistError> {
    parse_alist(&fs::read_to_string(path)?)
}

pub fn save_alist(path: &Path, graph: &TannerGraph) -> Result<(), AlistError> {
    Ok(fs::write(path, to_alist(graph))?)
}
