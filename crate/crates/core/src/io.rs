//! Plain-text graph and weight files.
//!
//! Graph files hold `n m` on the first line followed by `m` lines `u v`
//! (0-indexed). Weight files hold one real per line. Reals are written with
//! the shortest representation that parses back to the same bits.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{ConformalWeight, Graph};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn two_ints(s: &str, line: usize) -> Result<(usize, usize)> {
    let mut it = s.split_ascii_whitespace();
    let mut next = || -> Result<usize> {
        let tok = it.next().ok_or_else(|| parse_err(line, "expected two integers"))?;
        tok.parse().map_err(|_| parse_err(line, format!("not an integer: {tok:?}")))
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(parse_err(line, "trailing tokens"));
    }
    Ok((a, b))
}

pub fn read_graph(reader: impl BufRead) -> Result<Graph> {
    let mut lines = reader.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty graph file"))?;
    let (n, m) = two_ints(&header?, ln)?;
    let mut edges = Vec::with_capacity(m);
    for (ln, l) in lines {
        edges.push(two_ints(&l?, ln)?);
    }
    if edges.len() != m {
        return Err(parse_err(0, format!("header declares {m} edges, found {}", edges.len())));
    }
    Graph::from_edges(n, &edges)
}

pub fn graph_to_string(g: &Graph) -> String {
    let mut s = String::with_capacity(12 * (g.m() + 1));
    writeln!(s, "{} {}", g.n(), g.m()).unwrap();
    for (u, v) in g.edges() {
        writeln!(s, "{u} {v}").unwrap();
    }
    s
}

pub fn write_graph(g: &Graph, mut out: impl Write) -> Result<()> {
    out.write_all(graph_to_string(g).as_bytes())?;
    Ok(())
}

pub fn read_weight(reader: impl BufRead, n: usize) -> Result<ConformalWeight> {
    let mut values = Vec::with_capacity(n);
    for (i, l) in reader.lines().enumerate() {
        let l = l?;
        let t = l.trim();
        if t.is_empty() {
            continue;
        }
        values.push(t.parse::<f64>().map_err(|_| parse_err(i + 1, format!("not a real: {t:?}")))?);
    }
    if values.len() != n {
        return Err(parse_err(0, format!("expected {n} weights, found {}", values.len())));
    }
    ConformalWeight::new(values)
}

pub fn weight_to_string(w: &ConformalWeight) -> String {
    let mut s = String::new();
    for v in w.values() {
        writeln!(s, "{v:?}").unwrap();
    }
    s
}

pub fn write_weight(w: &ConformalWeight, mut out: impl Write) -> Result<()> {
    out.write_all(weight_to_string(w).as_bytes())?;
    Ok(())
}
