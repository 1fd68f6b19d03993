//! Plain-text numeric tables: a matrix format (one tab-separated row per
//! line) used for query sets and projections, and the embedding-table format
//! (token followed by its coordinates, tab-separated).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fusion::EmbeddingTable;

fn parse_float(field: &str, path: String) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Schema {
        path,
        message: format!("\"{field}\" is not a decimal number"),
    })
}

/// Parses a rectangular matrix; every line is one row.
pub fn parse_matrix_str(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = line
            .split('\t')
            .enumerate()
            .map(|(col, field)| parse_float(field, format!("line {}, column {}", line_no + 1, col + 1)))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Schema {
                    path: format!("line {}", line_no + 1),
                    message: format!("row has {} columns, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn parse_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    parse_matrix_str(&std::fs::read_to_string(path)?)
}

/// Shortest round-trip decimal per entry, tab separators, trailing newline.
pub fn render_matrix(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        for (i, value) in row.iter().enumerate() {
            if i > 0 {
                out.push('\t');
            }
            write!(out, "{value}").expect("writing to a string cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(rows: &[Vec<f64>], path: &Path) -> Result<()> {
    std::fs::write(path, render_matrix(rows))?;
    Ok(())
}

/// Parses an embedding table: each line is a token followed by its
/// coordinates, tab-separated.
pub fn parse_embedding_table_str(text: &str) -> Result<EmbeddingTable> {
    let mut entries = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let token = fields
            .next()
            .filter(|t| !t.is_empty())
            .ok_or_else(|| Error::Schema {
                path: format!("line {}", line_no + 1),
                message: "missing token".into(),
            })?;
        let vector = fields
            .enumerate()
            .map(|(col, field)| parse_float(field, format!("line {}, column {}", line_no + 1, col + 2)))
            .collect::<Result<Vec<f64>>>()?;
        entries.push((token.to_string(), vector));
    }
    EmbeddingTable::from_entries(entries)
}

pub fn parse_embedding_table(path: &Path) -> Result<EmbeddingTable> {
    parse_embedding_table_str(&std::fs::read_to_string(path)?)
}

pub fn render_embedding_table(table: &EmbeddingTable) -> String {
    let mut out = String::new();
    for (token, vector) in table.entries() {
        out.push_str(token);
        for value in vector {
            write!(out, "\t{value}").expect("writing to a string cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn write_embedding_table(table: &EmbeddingTable, path: &Path) -> Result<()> {
    std::fs::write(path, render_embedding_table(table))?;
    Ok(())
}
