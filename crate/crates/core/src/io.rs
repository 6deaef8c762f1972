//! File formats: graphs as JSON, networks as plain text, and JSON output with
//! every float written to 17 significant digits.
//!
//! Graph file:
//!
//! ```text
//! { "vertices": 2, "edges": [ { "u": 0, "v": 1, "c": 1.0 } ], "killing": [1.0, 1.0] }
//! ```
//!
//! Network file: a header line `eulerian` or `even`, then one `x y count`
//! line per nonzero count (oriented pairs for Eulerian networks, unordered
//! pairs for even ones). Several networks are separated by lines holding
//! `--`. Blank lines and text after `#` are ignored.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedGraph};
use crate::networks::{EulerianNetwork, EvenNetwork};
use crate::soup::DiscreteLoop;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: usize,
    edges: Vec<Edge>,
    killing: Vec<f64>,
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    WeightedGraph::new(file.vertices, file.edges, file.killing)
}

pub fn read_graph(path: &Path) -> Result<WeightedGraph> {
    parse_graph(&std::fs::read_to_string(path)?)
}

pub fn graph_to_json(g: &WeightedGraph) -> String {
    let file = GraphFile {
        vertices: g.vertex_count(),
        edges: g.edges().to_vec(),
        killing: g.killing().to_vec(),
    };
    to_json(&file)
}

/// `v` with 17 significant digits, e.g. `3.3333333333333331e-1`.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// serde_json formatter that writes floats through [`fmt17`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with 17-digit floats. Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkFile {
    Eulerian(Vec<EulerianNetwork>),
    Even(Vec<EvenNetwork>),
}

/// Parses a network file against `g`. Every count must sit on an edge of
/// `g`; Eulerian/even balance is left to the consumer.
pub fn parse_networks(g: &WeightedGraph, text: &str) -> Result<NetworkFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty network file".into(),
    })?;
    let even = match header {
        "eulerian" => false,
        "even" => true,
        other => {
            return Err(Error::Parse {
                line: header_line,
                msg: format!("expected header `eulerian` or `even`, found `{other}`"),
            })
        }
    };
    let mut records: Vec<Vec<(usize, usize, u32)>> = vec![Vec::new()];
    for (line, l) in lines {
        if l == "--" {
            records.push(Vec::new());
            continue;
        }
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `x y count`, found `{l}`"),
            });
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad {what} `{s}`"),
            })
        };
        let (x, y, c) = (
            num(fields[0], "vertex")?,
            num(fields[1], "vertex")?,
            num(fields[2], "count")?,
        );
        let n = g.vertex_count() as u64;
        if x >= n || y >= n {
            return Err(Error::Parse {
                line,
                msg: format!("vertex out of range 0..{n}"),
            });
        }
        let c = u32::try_from(c).map_err(|_| Error::Parse {
            line,
            msg: "count too large".into(),
        })?;
        if !g.is_edge(x as usize, y as usize) {
            return Err(Error::Parse {
                line,
                msg: format!("({x}, {y}) is not an edge"),
            });
        }
        records
            .last_mut()
            .expect("nonempty")
            .push((x as usize, y as usize, c));
    }
    if even {
        records
            .iter()
            .map(|r| EvenNetwork::from_triples(g, r))
            .collect::<Result<_>>()
            .map(NetworkFile::Even)
    } else {
        records
            .iter()
            .map(|r| EulerianNetwork::from_triples(g, r))
            .collect::<Result<_>>()
            .map(NetworkFile::Eulerian)
    }
}

pub fn read_networks(g: &WeightedGraph, path: &Path) -> Result<NetworkFile> {
    parse_networks(g, &std::fs::read_to_string(path)?)
}

pub fn write_eulerian(nets: &[EulerianNetwork]) -> String {
    let mut out = String::from("eulerian\n");
    for (i, k) in nets.iter().enumerate() {
        if i > 0 {
            out.push_str("--\n");
        }
        let n = k.vertex_count();
        for x in 0..n {
            for y in 0..n {
                let c = k.get(x, y);
                if c > 0 {
                    let _ = writeln!(out, "{x} {y} {c}");
                }
            }
        }
    }
    out
}

pub fn write_even(nets: &[EvenNetwork]) -> String {
    let mut out = String::from("even\n");
    for (i, k) in nets.iter().enumerate() {
        if i > 0 {
            out.push_str("--\n");
        }
        let n = k.vertex_count();
        for x in 0..n {
            for y in x + 1..n {
                let c = k.get(x, y);
                if c > 0 {
                    let _ = writeln!(out, "{x} {y} {c}");
                }
            }
        }
    }
    out
}

/// One line per loop: its vertices in canonical rotation.
pub fn write_loops(loops: &[DiscreteLoop]) -> String {
    let mut out = String::new();
    for l in loops {
        let verts: Vec<String> = l.vertices().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "loop {}", verts.join(" "));
    }
    out
}
