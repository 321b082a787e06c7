//! Plain-text tables for `--format table`.

use dateform::crossval::{CorpusStats, CrossvalReport};

use crate::EngineOutput;

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    let mut out = line(header.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

pub fn detect_table(outputs: &[EngineOutput]) -> String {
    let mut rows = Vec::new();
    for o in outputs {
        match o {
            EngineOutput::Found(r) => {
                for (rank, c) in r.candidates.iter().enumerate() {
                    rows.push(vec![
                        r.engine.name().to_string(),
                        (rank + 1).to_string(),
                        c.format.to_string(),
                        c.locale.clone(),
                        format!("{:.4}", c.error_rate),
                        format!("{:.4}", c.score),
                    ]);
                }
            }
            EngineOutput::Missing { engine, error, .. } => {
                rows.push(vec![engine.name().to_string(), "-".into(), format!("({error})"), "".into(), "".into(), "".into()]);
            }
        }
    }
    table(&["engine", "rank", "format", "locale", "error_rate", "score"], &rows)
}

pub fn crossval_table(r: &CrossvalReport) -> String {
    let mut out = table(
        &["columns", "compared", "matches", "match_rate"],
        &[vec![
            r.total_columns.to_string(),
            r.both_detected.to_string(),
            r.match_count.to_string(),
            format!("{:.4}", r.match_rate),
        ]],
    );
    if !r.discrepancies.is_empty() {
        out.push('\n');
        let rows: Vec<Vec<String>> = r
            .discrepancies
            .iter()
            .map(|d| {
                vec![
                    d.column.clone(),
                    d.mdl_format.clone().unwrap_or_else(|| "-".into()),
                    d.nlp_format.clone().unwrap_or_else(|| "-".into()),
                    format!("{:?}", d.category),
                ]
            })
            .collect();
        out.push_str(&table(&["column", "mdl", "nlp", "category"], &rows));
    }
    if !r.column_errors.is_empty() {
        out.push('\n');
        let rows: Vec<Vec<String>> = r.column_errors.iter().map(|e| vec![e.column.clone(), e.error.clone()]).collect();
        out.push_str(&table(&["column", "error"], &rows));
    }
    out
}

pub fn stats_table(s: &CorpusStats) -> String {
    table(
        &["records", "error_rate", "analysis_micros", "validation_micros", "median_not_null"],
        &[vec![
            s.records.to_string(),
            format!("{:.4}", s.error_rate),
            format!("{:.2}", s.analysis_micros),
            format!("{:.3}", s.validation_micros),
            format!("{}", s.median_not_null),
        ]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligns_columns() {
        let t = table(&["a", "bb"], &[vec!["xxx".into(), "y".into()]]);
        assert_eq!(t, "a    bb\nxxx  y\n");
    }
}
