//! `id1,id2,weight` edge lists.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};

use super::{CollabGraph, GraphBuilder, PersonId};

/// Parses an edge list. Blank lines, `#` comments and an optional
/// `id1,id2,weight` header are skipped.
pub fn parse_edge_list(reader: impl Read) -> Result<CollabGraph> {
    let mut b = GraphBuilder::new();
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::parse(format!("edge line {}", n + 1), e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let location = format!("edge line {}", n + 1);
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(location, "expected id1,id2,weight"));
        }
        if n == 0 && fields == ["id1", "id2", "weight"] {
            continue;
        }
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(&location, format!("bad weight `{}`", fields[2])))?;
        let a = PersonId::new(fields[0]).map_err(|_| Error::parse(&location, "empty id"))?;
        let c = PersonId::new(fields[1]).map_err(|_| Error::parse(&location, "empty id"))?;
        b.add_edge(a, c, w)
            .map_err(|e| Error::parse(&location, e.to_string()))?;
    }
    Ok(b.build())
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<CollabGraph> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(file)
}

/// One line per edge, in id order. Weights use the shortest round-trip
/// representation.
pub fn format_edge_list(g: &CollabGraph) -> String {
    let mut out = String::new();
    for (i, j, w) in g.edges() {
        out.push_str(&format!("{},{},{}\n", g.id(i), g.id(j), w));
    }
    out
}

pub fn write_edge_list(g: &CollabGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_edge_list(g)).map_err(|e| Error::io(path, e))
}
