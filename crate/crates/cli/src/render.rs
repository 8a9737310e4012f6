//! Plain-text rendering.

use frobforge::report::ConditionReport;

/// One aligned line per condition, then a verdict.
pub fn report_text(title: &str, rep: &ConditionReport) -> String {
    let rows: Vec<Vec<String>> = rep
        .conditions
        .iter()
        .map(|c| vec![c.name.clone(), if c.pass { "PASS".into() } else { "FAIL".into() }, c.nonzero_terms.to_string(), c.detail.clone()])
        .collect();
    let mut out = format!("{title}:\n");
    out.push_str(&table_text(&["condition", "result", "terms", "detail"], &rows));
    let failed = rep.failures();
    if failed.is_empty() {
        out.push_str(&format!("all {} conditions pass\n", rep.len()));
    } else {
        out.push_str(&format!("{} of {} conditions fail: {}\n", failed.len(), rep.len(), failed.join(", ")));
    }
    out
}

/// Left-aligned columns separated by two spaces; trailing blanks trimmed.
pub fn table_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (cell, w) in cells.iter().zip(&widths) {
            s.push_str(cell);
            s.push_str(&" ".repeat(w - cell.chars().count() + 2));
        }
        format!("{}\n", s.trim_end())
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_align() {
        let t = table_text(&["a", "bb"], &[vec!["xyz".into(), "1".into()]]);
        assert_eq!(t, "a    bb\nxyz  1\n");
    }
}
