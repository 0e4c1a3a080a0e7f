//! Plain-text hypergraph and label files.
//!
//! Hypergraph:
//! ```text
//! HSBM <d> <n> <edge_count>
//! <v1> <v2> ... <vd>        one edge per line, 1-based ids, increasing,
//! ...                       lines in lexicographic order
//! ```
//! Labels:
//! ```text
//! LABELS <n> <k>
//! <label>                   one 1-based label per node
//! ```

use std::io::{BufRead, Write};

use crate::error::{HsbmError, Result};
use crate::model::{Assignment, Hypergraph};

pub fn write_hypergraph<W: Write>(h: &Hypergraph, mut w: W) -> Result<()> {
    writeln!(w, "HSBM {} {} {}", h.d(), h.n(), h.edge_count())?;
    let mut line = String::new();
    for e in h.edges() {
        line.clear();
        for (i, v) in e.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&(v + 1).to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn header_fields<R: BufRead>(
    lines: &mut std::io::Lines<R>,
    tag: &str,
    count: usize,
) -> Result<Vec<usize>> {
    let first = lines
        .next()
        .ok_or_else(|| HsbmError::parse(1, "empty input"))??;
    let mut parts = first.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(HsbmError::parse(1, format!("expected header starting with {tag}")));
    }
    let fields: Vec<usize> = parts
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| HsbmError::parse(1, format!("bad header field {s:?}")))
        })
        .collect::<Result<_>>()?;
    if fields.len() != count {
        return Err(HsbmError::parse(
            1,
            format!("{tag} header needs {count} fields, found {}", fields.len()),
        ));
    }
    Ok(fields)
}

pub fn read_hypergraph<R: BufRead>(r: R) -> Result<Hypergraph> {
    let mut lines = r.lines();
    let header = header_fields(&mut lines, "HSBM", 3)?;
    let (d, n, m) = (header[0], header[1], header[2]);
    if d == 0 {
        return Err(HsbmError::parse(1, "order must be positive"));
    }
    let mut edges = Vec::with_capacity(m);
    let mut previous: Option<Vec<usize>> = None;
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let edge: Vec<usize> = line
            .split_whitespace()
            .map(|s| match s.parse::<usize>() {
                Ok(v) if v >= 1 && v <= n => Ok(v - 1),
                Ok(v) => Err(HsbmError::parse(lineno, format!("node id {v} outside 1..={n}"))),
                Err(_) => Err(HsbmError::parse(lineno, format!("bad node id {s:?}"))),
            })
            .collect::<Result<_>>()?;
        if edge.len() != d {
            return Err(HsbmError::parse(
                lineno,
                format!("edge has {} nodes, expected {d}", edge.len()),
            ));
        }
        if edge.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HsbmError::parse(lineno, "node ids must be strictly increasing"));
        }
        if let Some(prev) = &previous {
            if *prev >= edge {
                return Err(HsbmError::parse(lineno, "edges must be in strictly increasing lexicographic order"));
            }
        }
        previous = Some(edge.clone());
        edges.push(edge);
    }
    if edges.len() != m {
        return Err(HsbmError::parse(
            edges.len() + 2,
            format!("header announces {m} edges, found {}", edges.len()),
        ));
    }
    Hypergraph::new(n, d, edges)
}

pub fn write_assignment<W: Write>(a: &Assignment, mut w: W) -> Result<()> {
    writeln!(w, "LABELS {} {}", a.len(), a.k())?;
    for &l in a.labels() {
        writeln!(w, "{}", l + 1)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_assignment<R: BufRead>(r: R) -> Result<Assignment> {
    let mut lines = r.lines();
    let header = header_fields(&mut lines, "LABELS", 2)?;
    let (n, k) = (header[0], header[1]);
    let mut labels = Vec::with_capacity(n);
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<usize>() {
            Ok(l) if l >= 1 && l <= k => labels.push(l - 1),
            _ => return Err(HsbmError::parse(lineno, format!("bad label {t:?} (expected 1..={k})"))),
        }
    }
    if labels.len() != n {
        return Err(HsbmError::parse(
            labels.len() + 2,
            format!("header announces {n} labels, found {}", labels.len()),
        ));
    }
    Assignment::new(labels, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypergraph_text_is_exact() {
        let h = Hypergraph::new(4, 3, vec![vec![1, 2, 3], vec![0, 1, 2]]).unwrap();
        let mut buf = Vec::new();
        write_hypergraph(&h, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "HSBM 3 4 2\n1 2 3\n2 3 4\n");
        assert_eq!(read_hypergraph(&buf[..]).unwrap(), h);
    }

    #[test]
    fn labels_round_trip() {
        let a = Assignment::new(vec![0, 2, 1, 0], 3).unwrap();
        let mut buf = Vec::new();
        write_assignment(&a, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "LABELS 4 3\n1\n3\n2\n1\n");
        assert_eq!(read_assignment(&buf[..]).unwrap(), a);
    }

    #[test]
    fn malformed_edge_reports_line() {
        let text = "HSBM 3 5 2\n1 2 3\n2 x 4\n";
        match read_hypergraph(text.as_bytes()) {
            Err(HsbmError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "HSBM 3 5 1\n1 2\n";
        assert!(matches!(read_hypergraph(text.as_bytes()), Err(HsbmError::Parse { line: 2, .. })));
        let text = "HSBM 3 5 2\n2 3 4\n1 2 3\n";
        assert!(matches!(read_hypergraph(text.as_bytes()), Err(HsbmError::Parse { line: 3, .. })));
        let text = "GRAPH 3 5 2\n";
        assert!(matches!(read_hypergraph(text.as_bytes()), Err(HsbmError::Parse { line: 1, .. })));
    }

    #[test]
    fn bad_labels_rejected() {
        assert!(read_assignment("LABELS 2 2\n1\n3\n".as_bytes()).is_err());
        assert!(read_assignment("LABELS 3 2\n1\n2\n".as_bytes()).is_err());
    }
}
