use std::io::{BufRead, Write};

use super::Graph;
use crate::error::{Error, Result};

/// One `u v` line per undirected edge, 0-indexed, `u < v`.
pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> std::io::Result<()> {
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// Parse an edge list; blank lines and `#` comments are skipped. The node
/// count is one more than the largest index seen.
pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
    let mut lists: Vec<Vec<u32>> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let parse = |tok: Option<&str>| -> Result<u32> {
            tok.and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected `u v`, got `{body}`") })
        };
        let mut toks = body.split_whitespace();
        let (u, v) = (parse(toks.next())?, parse(toks.next())?);
        if toks.next().is_some() {
            return Err(Error::Parse { line: i + 1, msg: "trailing tokens".into() });
        }
        let need = u.max(v) as usize + 1;
        if lists.len() < need {
            lists.resize(need, Vec::new());
        }
        lists[u as usize].push(v);
        lists[v as usize].push(u);
    }
    Graph::from_adjacency(lists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_regular_graph;
    use crate::rng::RandomSource;

    #[test]
    fn round_trip() {
        let g = random_regular_graph(40, 6, &mut RandomSource::new(1, 1)).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&c| c == b'\n').count(), 40 * 6 / 2);
        assert_eq!(read_edge_list(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn k4_text() {
        let text = "# K4\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n";
        let g = read_edge_list(text.as_bytes()).unwrap();
        assert_eq!(g, Graph::complete(4));
        let mut out = Vec::new();
        write_edge_list(&g, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text.trim_start_matches("# K4\n"));
    }

    #[test]
    fn malformed() {
        assert!(matches!(read_edge_list("0 1\n1 x\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(read_edge_list("0 1\n1 2\n".as_bytes()).is_err()); // not regular
        assert!(read_edge_list("0 0\n".as_bytes()).is_err());
    }
}
