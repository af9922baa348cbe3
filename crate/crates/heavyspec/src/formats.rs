//! On-disk formats.
//!
//! Graph text format, one record per line, `#` starts a comment:
//!
//! ```text
//! n 3
//! m 1.0 2.0 1.0
//! e 0 1 0.5
//! e 1 2 3.0 0
//! ```
//!
//! `n` comes first, `m` lines append vertex measures, `e u v weight [color]`
//! adds an edge. Numbers are written in shortest round-trip form, so a
//! read-write cycle reproduces the text exactly.
//!
//! Coloring text format: `n <N>` followed by one `c v0 v1 ...` line per color,
//! listing the directed cycle in order, with a trailing `r` when the cycle was
//! reversed by the orientation coin.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use heavyspec_core::expander::ClusterWiring;
use heavyspec_core::homogenization::{Corridor, MacroNetwork, NodeRole};
use heavyspec_core::inverse::{SpectralTarget, WeightSolution};
use heavyspec_core::topology::{ColorAssignment, ColorRecord, SurfaceModel};
use heavyspec_core::{GraphBuilder, MeasuredGraph};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    File { path: String, source: Box<FormatError> },
    #[error(transparent)]
    Core(#[from] heavyspec_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    TomlRead(#[from] toml::de::Error),
    #[error(transparent)]
    TomlWrite(#[from] toml::ser::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;

fn parse_error(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| FormatError::File { path: path.display().to_string(), source: Box::new(e) })
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn field<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| parse_error(line, format!("missing {what}")))?;
    token.parse().map_err(|_| parse_error(line, format!("bad {what} `{token}`")))
}

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

pub fn graph_to_text(g: &MeasuredGraph) -> String {
    let mut out = String::new();
    writeln!(out, "n {}", g.vertex_count()).unwrap();
    out.push('m');
    for &x in g.measures() {
        out.push(' ');
        out.push_str(&fmt_f64(x));
    }
    out.push('\n');
    for e in g.edges() {
        write!(out, "e {} {} {}", e.u, e.v, fmt_f64(e.weight)).unwrap();
        if let Some(c) = e.color {
            write!(out, " {c}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn graph_from_text(text: &str) -> Result<MeasuredGraph> {
    let mut count: Option<usize> = None;
    let mut builder: Option<GraphBuilder> = None;
    let mut measures = Vec::new();
    for (line, tokens) in records(text) {
        let mut it = tokens.iter().copied();
        match it.next().unwrap() {
            "n" => {
                if count.is_some() {
                    return Err(parse_error(line, "duplicate `n` record"));
                }
                count = Some(field(it.next(), line, "vertex count")?);
            }
            "m" => {
                let n = count.ok_or_else(|| parse_error(line, "`m` before `n`"))?;
                if builder.is_some() {
                    return Err(parse_error(line, "`m` after the first edge"));
                }
                for token in it.by_ref() {
                    measures.push(field::<f64>(Some(token), line, "measure")?);
                }
                if measures.len() > n {
                    return Err(parse_error(line, format!("more than {n} measures")));
                }
            }
            "e" => {
                let n = count.ok_or_else(|| parse_error(line, "`e` before `n`"))?;
                if builder.is_none() {
                    if measures.len() != n {
                        return Err(parse_error(line, format!("expected {n} measures, got {}", measures.len())));
                    }
                    builder = Some(GraphBuilder::new(std::mem::take(&mut measures)));
                }
                let u: usize = field(it.next(), line, "endpoint")?;
                let v: usize = field(it.next(), line, "endpoint")?;
                let w: f64 = field(it.next(), line, "weight")?;
                let b = builder.as_mut().unwrap();
                match it.next() {
                    Some(c) => b.add_colored_edge(u, v, w, field(Some(c), line, "color")?),
                    None => b.add_edge(u, v, w),
                }
                .map_err(|e| parse_error(line, e.to_string()))?;
            }
            other => return Err(parse_error(line, format!("unknown record `{other}`"))),
        }
        if let Some(extra) = it.next() {
            return Err(parse_error(line, format!("trailing token `{extra}`")));
        }
    }
    let n = count.ok_or_else(|| parse_error(0, "missing `n` record"))?;
    let builder = match builder {
        Some(b) => b,
        None if measures.len() == n => GraphBuilder::new(measures),
        None => return Err(parse_error(0, format!("expected {n} measures, got {}", measures.len()))),
    };
    Ok(builder.build()?)
}

pub fn coloring_to_text(ca: &ColorAssignment) -> String {
    let mut out = format!("n {}\n", ca.vertex_count());
    for (cycle, &rev) in ca.cycles().iter().zip(ca.reversed()) {
        out.push('c');
        for v in cycle {
            write!(out, " {v}").unwrap();
        }
        if rev {
            out.push_str(" r");
        }
        out.push('\n');
    }
    out
}

pub fn coloring_from_text(text: &str) -> Result<ColorAssignment> {
    let mut n: Option<usize> = None;
    let mut cycles = Vec::new();
    let mut reversed = Vec::new();
    for (line, tokens) in records(text) {
        match tokens[0] {
            "n" if tokens.len() == 2 && n.is_none() => n = Some(field(Some(tokens[1]), line, "vertex count")?),
            "c" => {
                let (body, rev) = match tokens.last() {
                    Some(&"r") => (&tokens[1..tokens.len() - 1], true),
                    _ => (&tokens[1..], false),
                };
                cycles.push(body.iter().map(|t| field(Some(t), line, "vertex")).collect::<Result<Vec<usize>>>()?);
                reversed.push(rev);
            }
            other => return Err(parse_error(line, format!("unexpected record `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| parse_error(0, "missing `n` record"))?;
    Ok(ColorAssignment::from_cycles(n, cycles, reversed)?)
}

/// Everything of a [`MacroNetwork`] except its graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSidecar {
    pub m: usize,
    pub block_nodes: usize,
    pub corridors: Vec<Corridor>,
    pub color_assignment: ColorRecord,
    pub wirings: Vec<ClusterWiring>,
    /// Role of every node, in node order.
    pub roles: Vec<NodeRole>,
}

impl NetworkSidecar {
    pub fn of(net: &MacroNetwork) -> Self {
        Self {
            m: net.m,
            block_nodes: net.block_nodes,
            corridors: net.corridors.clone(),
            color_assignment: net.color_assignment.clone().into(),
            wirings: net.wirings.clone(),
            roles: net.roles.clone(),
        }
    }

    pub fn join(self, graph: MeasuredGraph) -> Result<MacroNetwork> {
        if self.roles.len() != graph.vertex_count() {
            return Err(heavyspec_core::Error::DimensionMismatch { expected: graph.vertex_count(), got: self.roles.len() }.into());
        }
        Ok(MacroNetwork {
            graph,
            m: self.m,
            roles: self.roles,
            corridors: self.corridors,
            color_assignment: self.color_assignment.try_into()?,
            wirings: self.wirings,
            block_nodes: self.block_nodes,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    in_file(path, fs::read_to_string(path).map_err(Into::into).and_then(|s| Ok(serde_json::from_str(&s)?)))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    in_file(path, to_json(value).and_then(|s| Ok(fs::write(path, s)?)))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// Reads a graph in the text format, or the JSON form when the file ends in `.json`.
pub fn read_graph(path: &Path) -> Result<MeasuredGraph> {
    if is_json(path) {
        return read_json(path);
    }
    in_file(path, fs::read_to_string(path).map_err(Into::into).and_then(|s| graph_from_text(&s)))
}

pub fn write_graph(path: &Path, g: &MeasuredGraph) -> Result<()> {
    if is_json(path) {
        return write_json(path, g);
    }
    in_file(path, fs::write(path, graph_to_text(g)).map_err(Into::into))
}

pub fn read_coloring(path: &Path) -> Result<ColorAssignment> {
    if is_json(path) {
        return read_json(path);
    }
    in_file(path, fs::read_to_string(path).map_err(Into::into).and_then(|s| coloring_from_text(&s)))
}

pub fn write_coloring(path: &Path, ca: &ColorAssignment) -> Result<()> {
    in_file(path, fs::write(path, coloring_to_text(ca)).map_err(Into::into))
}

/// Writes the graph in the text format to `graph` and the bookkeeping to `sidecar` (JSON).
pub fn write_network(graph: &Path, sidecar: &Path, net: &MacroNetwork) -> Result<()> {
    write_graph(graph, &net.graph)?;
    write_json(sidecar, &NetworkSidecar::of(net))
}

pub fn read_network(graph: &Path, sidecar: &Path) -> Result<MacroNetwork> {
    let g = read_graph(graph)?;
    let s: NetworkSidecar = read_json(sidecar)?;
    in_file(sidecar, s.join(g))
}

pub fn read_weights(path: &Path) -> Result<WeightSolution> {
    read_json(path)
}

/// Reads a target list from JSON, or from TOML for any other extension.
pub fn read_target(path: &Path) -> Result<SpectralTarget> {
    let t: SpectralTarget = if is_json(path) {
        read_json(path)?
    } else {
        in_file(path, fs::read_to_string(path).map_err(Into::into).and_then(|s| Ok(toml::from_str(&s)?)))?
    };
    in_file(path, t.validate().map_err(Into::into))?;
    Ok(t)
}

pub fn read_surface(path: &Path) -> Result<SurfaceModel> {
    let s: SurfaceModel = read_json(path)?;
    in_file(path, SurfaceModel::new(s.dual_graph.clone(), s.vertex_genera.clone()).map_err(Into::into))
}

#[cfg(test)]
mod tests {
    use super::*;
    use heavyspec_core::topology::walecki_decomposition;

    #[test]
    fn text_graph_example() {
        let g = graph_from_text("# path\nn 3\nm 1 2.5 1\ne 0 1 0.5\ne 1 2 3 1\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.measures(), &[1.0, 2.5, 1.0]);
        assert_eq!(g.weight(1, 2), Some(3.0));
        assert_eq!(g.edges()[1].color, Some(1));
        assert_eq!(graph_to_text(&g), "n 3\nm 1.0 2.5 1.0\ne 0 1 0.5\ne 1 2 3.0 1\n");
    }

    #[test]
    fn text_graph_without_edges() {
        let g = graph_from_text("n 2\nm 1\nm 4\n").unwrap();
        assert_eq!(g.measures(), &[1.0, 4.0]);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn text_graph_errors_carry_lines() {
        let cases = [
            ("m 1\n", 1),
            ("n 2\nm 1 1\ne 0 5 1\n", 3),
            ("n 2\nm 1 1 1\n", 2),
            ("n 2\nm 1 x\n", 2),
            ("n 2\nm 1 1\ne 0 1 -1\n", 3),
            ("n 2\nm 1 1\nq\n", 3),
            ("n 2\nm 1 1\ne 0 1 1 2 9\n", 3),
        ];
        for (text, want) in cases {
            match graph_from_text(text) {
                Err(FormatError::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(graph_from_text("n 3\nm 1 1\n").is_err());
        assert!(graph_from_text("").is_err());
    }

    #[test]
    fn extreme_values_round_trip() {
        let g = MeasuredGraph::new(vec![1e-300, 0.1 + 0.2, 1e300], [(0, 1, 5e-324), (1, 2, f64::MAX)]).unwrap();
        let text = graph_to_text(&g);
        let back = graph_from_text(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(graph_to_text(&back), text);
    }

    #[test]
    fn coloring_round_trip() {
        for seed in 0..5 {
            let ca = walecki_decomposition(9, seed).unwrap();
            let text = coloring_to_text(&ca);
            assert_eq!(text.lines().filter(|l| l.starts_with('c')).count(), 4);
            assert_eq!(coloring_from_text(&text).unwrap(), ca);
        }
    }

    #[test]
    fn coloring_rejects_invalid_cycles() {
        assert!(coloring_from_text("n 5\nc 0 1 2 3 4\nc 0 1 3 2 4\n").is_err());
        assert!(coloring_from_text("c 0 1 2\n").is_err());
    }
}
