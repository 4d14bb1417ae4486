//! MacKay alist text format.
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: 1-based row indices of each column, zero-padded>
//! <m lines: 1-based column indices of each row, zero-padded>
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{LdpcCode, LdpcError};

fn err(line: usize, reason: impl Into<String>) -> LdpcError {
    LdpcError::Alist {
        line,
        reason: reason.into(),
    }
}

struct Lines<'a> {
    inner: core::iter::Enumerate<core::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as integers, with its 1-based line number.
    fn next(&mut self, what: &str) -> Result<(usize, Vec<usize>), LdpcError> {
        for (i, text) in self.inner.by_ref() {
            self.last = i + 1;
            if text.trim().is_empty() {
                continue;
            }
            let nums = text
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| err(i + 1, format!("not a non-negative integer: {t:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok((i + 1, nums));
        }
        Err(err(self.last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn exact(&mut self, what: &str, count: usize) -> Result<(usize, Vec<usize>), LdpcError> {
        let (line, v) = self.next(what)?;
        if v.len() != count {
            return Err(err(line, format!("expected {count} values for {what}, found {}", v.len())));
        }
        Ok((line, v))
    }
}

/// Reads `deg` indices in `1..=limit` followed by optional zero padding up to `max_deg`.
fn index_list(
    lines: &mut Lines<'_>,
    what: &str,
    deg: usize,
    max_deg: usize,
    limit: usize,
) -> Result<Vec<usize>, LdpcError> {
    let (line, v) = lines.next(what)?;
    if v.len() != deg && v.len() != max_deg {
        return Err(err(line, format!("{what} lists {} entries, degree is {deg}", v.len())));
    }
    let mut out = Vec::with_capacity(deg);
    for (i, &x) in v.iter().enumerate() {
        if i < deg {
            if x == 0 || x > limit {
                return Err(err(line, format!("index {x} outside 1..={limit} in {what}")));
            }
            if out.contains(&(x - 1)) {
                return Err(err(line, format!("index {x} repeated in {what}")));
            }
            out.push(x - 1);
        } else if x != 0 {
            return Err(err(line, format!("padding after degree {deg} must be 0, found {x}")));
        }
    }
    Ok(out)
}

/// Parses an alist parity-check matrix. Redundant checks are kept, so
/// `k = n − rank(H)`.
pub fn load_alist(text: &str, code_id: impl Into<String>) -> Result<LdpcCode, LdpcError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (l1, nm) = lines.exact("n m", 2)?;
    let (n, m) = (nm[0], nm[1]);
    if n == 0 || m == 0 {
        return Err(err(l1, "matrix dimensions must be positive"));
    }
    let (l2, maxd) = lines.exact("maximum degrees", 2)?;
    let (col_max, row_max) = (maxd[0], maxd[1]);
    let (l3, col_deg) = lines.exact("column degrees", n)?;
    let (l4, row_deg) = lines.exact("row degrees", m)?;
    if col_deg.iter().max() != Some(&col_max) {
        return Err(err(l3, format!("column degrees do not peak at declared maximum {col_max}")));
    }
    if row_deg.iter().max() != Some(&row_max) {
        return Err(err(l4, format!("row degrees do not peak at declared maximum {row_max}")));
    }
    if col_max > m || row_max > n {
        return Err(err(l2, "maximum degree exceeds matrix size"));
    }
    if col_deg.iter().sum::<usize>() != row_deg.iter().sum::<usize>() {
        return Err(err(l4, "row and column degree totals differ"));
    }
    let mut by_col = vec![Vec::new(); m];
    for (j, &d) in col_deg.iter().enumerate() {
        for r in index_list(&mut lines, &format!("column {}", j + 1), d, col_max, m)? {
            by_col[r].push(j as u32);
        }
    }
    let mut checks = Vec::with_capacity(m);
    for (i, &d) in row_deg.iter().enumerate() {
        let what = format!("row {}", i + 1);
        let mut row: Vec<u32> = index_list(&mut lines, &what, d, row_max, n)?
            .into_iter()
            .map(|c| c as u32)
            .collect();
        row.sort_unstable();
        by_col[i].sort_unstable();
        if row != by_col[i] {
            return Err(err(lines.last, format!("{what} disagrees with the column lists")));
        }
        checks.push(row);
    }
    LdpcCode::from_checks_redundant(code_id, n, checks)
}

/// Writes H in alist form with zero padding.
pub fn to_alist(code: &LdpcCode) -> String {
    let n = code.n();
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, row) in code.checks().iter().enumerate() {
        for &c in row {
            cols[c as usize].push(r);
        }
    }
    let col_max = cols.iter().map(Vec::len).max().unwrap_or(0);
    let row_max = code.checks().iter().map(Vec::len).max().unwrap_or(0);
    let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", n, code.m());
    let _ = writeln!(out, "{col_max} {row_max}");
    let _ = writeln!(out, "{}", join(&mut cols.iter().map(Vec::len)));
    let _ = writeln!(out, "{}", join(&mut code.checks().iter().map(Vec::len)));
    for c in &cols {
        let pad = col_max - c.len();
        let _ = writeln!(out, "{}", join(&mut c.iter().map(|r| r + 1).chain(core::iter::repeat_n(0, pad))));
    }
    for r in code.checks() {
        let pad = row_max - r.len();
        let _ = writeln!(
            out,
            "{}",
            join(&mut r.iter().map(|&c| c as usize + 1).chain(core::iter::repeat_n(0, pad)))
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::make_regular_qc_ldpc;

    const TOY: &str = "6 3\n2 4\n1 2 1 2 1 1\n4 3 1\n1 0\n1 2\n2 0\n1 2\n3 0\n1 0\n1 2 4 6\n2 3 4\n5\n";

    #[test]
    fn toy_matrix_transcribed() {
        let code = load_alist(TOY, "toy").unwrap();
        assert_eq!(code.n(), 6);
        assert_eq!(code.checks(), &[vec![0, 1, 3, 5], vec![1, 2, 3], vec![4]]);
        assert_eq!(code.k(), 3);
    }

    #[test]
    fn export_then_load_is_identity() {
        for seed in 1..4 {
            let code = make_regular_qc_ldpc(8, 4, 8, seed).unwrap();
            let back = load_alist(&to_alist(&code), code.code_id()).unwrap();
            assert_eq!(back, code);
        }
        let toy = load_alist(TOY, "toy").unwrap();
        assert_eq!(load_alist(&to_alist(&toy), "toy").unwrap(), toy);
    }

    #[test]
    fn out_of_range_index_names_line() {
        let zero = TOY.replace("1 2 4 6", "0 2 4 6");
        let e = load_alist(&zero, "t").unwrap_err();
        assert!(matches!(e, LdpcError::Alist { line: 11, .. }), "{e}");
        let big = TOY.replace("2 3 4\n", "2 3 7\n");
        assert!(matches!(load_alist(&big, "t"), Err(LdpcError::Alist { line: 12, .. })));
        let col = TOY.replace("3 0\n", "4 0\n");
        assert!(matches!(load_alist(&col, "t"), Err(LdpcError::Alist { line: 9, .. })));
    }

    #[test]
    fn malformed_counts() {
        assert!(matches!(load_alist("6\n", "t"), Err(LdpcError::Alist { line: 1, .. })));
        let short = TOY.replace("1 2 1 2 1 1", "1 2 1 2 1");
        assert!(matches!(load_alist(&short, "t"), Err(LdpcError::Alist { line: 3, .. })));
        let truncated: String = TOY.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(load_alist(&truncated, "t").is_err());
        let mismatch = TOY.replace("\n5\n", "\n6\n");
        assert!(load_alist(&mismatch, "t").is_err());
    }
}
