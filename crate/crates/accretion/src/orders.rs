//! Learning-order files: one run per line, `[b,b,b,b,b] [a,a,a,a,a]` with a
//! bootstrap list followed by an accretion order. Blank lines and lines
//! starting with `#` are skipped.

use std::path::Path;

use accretion_core::ClassId;

use crate::error::{AppError, Result};

pub const DIGITS: usize = 10;
pub const LIST_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderLine {
    /// 1-based line number in the source text.
    pub line: usize,
    pub bootstrap: Vec<ClassId>,
    pub order: Vec<ClassId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct OrderParseError {
    pub line: usize,
    pub message: String,
}

fn parse_list(s: &str) -> std::result::Result<(Vec<ClassId>, &str), String> {
    let s = s.trim_start();
    let rest = s.strip_prefix('[').ok_or_else(|| format!("expected `[`, found `{}`", head(s)))?;
    let end = rest.find(']').ok_or("missing `]`")?;
    let mut list = Vec::new();
    for item in rest[..end].split(',') {
        let item = item.trim();
        let d: u32 = item.parse().map_err(|_| format!("`{item}` is not a digit"))?;
        if d as usize >= DIGITS {
            return Err(format!("digit {d} is outside 0-9"));
        }
        list.push(d as ClassId);
    }
    if list.len() != LIST_LEN {
        return Err(format!("expected {LIST_LEN} digits, found {}", list.len()));
    }
    Ok((list, &rest[end + 1..]))
}

fn head(s: &str) -> &str {
    s.get(..s.len().min(12)).unwrap_or(s)
}

fn parse_line(text: &str) -> std::result::Result<(Vec<ClassId>, Vec<ClassId>), String> {
    let (bootstrap, rest) = parse_list(text)?;
    let (order, rest) = parse_list(rest)?;
    if !rest.trim().is_empty() {
        return Err(format!("unexpected trailing text `{}`", head(rest.trim())));
    }
    let mut seen = [false; DIGITS];
    for &d in bootstrap.iter().chain(&order) {
        if std::mem::replace(&mut seen[d as usize], true) {
            return Err(format!("digit {d} appears more than once"));
        }
    }
    Ok((bootstrap, order))
}

pub fn parse_orders(text: &str) -> std::result::Result<Vec<OrderLine>, OrderParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (bootstrap, order) = parse_line(t).map_err(|message| OrderParseError { line: i + 1, message })?;
        out.push(OrderLine {
            line: i + 1,
            bootstrap,
            order,
        });
    }
    Ok(out)
}

pub fn read_orders_file(path: &Path) -> Result<Vec<OrderLine>> {
    let text = std::fs::read_to_string(path).map_err(AppError::io(path))?;
    parse_orders(&text).map_err(|e| AppError::Orders {
        path: path.to_path_buf(),
        line: e.line,
        message: e.message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_whitespace_tolerant_lines() {
        let v = parse_orders("# comment\n\n [0, 1,2,3,4]   [ 9,5,8,7,6 ]\n[1,9,3,0,7] [2,5,6,8,4]").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].line, 3);
        assert_eq!(v[0].bootstrap, vec![0, 1, 2, 3, 4]);
        assert_eq!(v[0].order, vec![9, 5, 8, 7, 6]);
        assert_eq!(v[1].line, 4);
    }

    #[test]
    fn rejects_digit_ten_with_line_number() {
        let e = parse_orders("[0,1,2,3,4] [9,5,8,7,6]\n[0,1,2,3,4] [10,5,8,7,6]").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("10"), "{}", e.message);
    }

    #[test]
    fn rejects_overlap_wrong_length_and_garbage() {
        for bad in [
            "[0,1,2,3,4] [4,5,6,7,8]",
            "[0,1,2,3] [4,5,6,7,8]",
            "[0,1,2,3,4] [5,6,7,8,9] x",
            "[0,1,2,3,4]",
            "0,1,2,3,4 5,6,7,8,9",
            "[0,1,a,3,4] [5,6,7,8,9]",
        ] {
            assert_eq!(parse_orders(bad).unwrap_err().line, 1, "{bad}");
        }
    }
}
