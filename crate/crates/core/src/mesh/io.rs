//! Plain-text mesh files.
//!
//! ```text
//! mesh2d v1 Q1
//! nodes 4
//! 0 0.0 0.0
//! ...
//! elements 1
//! 0 0 0 1 2 3
//! set contact 0 0 1
//! set dirichlet 0 2 3
//! ```
//!
//! Blank lines and `#` comments are ignored. Node and element ids must run
//! `0..count` in order. A `dirichlet` set becomes fully-prescribed entries
//! driven by motion number `k` (its rank among dirichlet sets); a `neumann`
//! set is a chain whose segments get zero traction until a scenario assigns
//! one; a `contact` set is a chain named `contact<k>`.

use std::fmt::Write as _;
use std::path::Path;

use super::{
    BoundarySets, Components, ContactChain, DirichletEntry, Element, ElementKind, Mesh2D, MeshError,
    NeumannEntry,
};
use crate::Vec2;

pub fn load_mesh(path: &Path) -> Result<(Mesh2D, BoundarySets), MeshError> {
    let text = std::fs::read_to_string(path).map_err(|e| MeshError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_mesh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.last = i + 1;
            return Some((i + 1, line.split_whitespace().collect()));
        }
        None
    }
}

fn err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T, MeshError> {
    tok.parse().map_err(|_| err(line, format!("bad {what} `{tok}`")))
}

fn counted<'a>(lines: &mut Lines<'a>, keyword: &str) -> Result<usize, MeshError> {
    let Some((ln, toks)) = lines.next() else {
        return Err(err(lines.last + 1, format!("expected `{keyword} <count>`")));
    };
    if toks.len() != 2 || toks[0] != keyword {
        return Err(err(ln, format!("expected `{keyword} <count>`")));
    }
    num(ln, toks[1], "count")
}

pub fn parse_mesh(text: &str) -> Result<(Mesh2D, BoundarySets), MeshError> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty mesh file"))?;
    if header.len() != 3 || header[0] != "mesh2d" || header[1] != "v1" {
        return Err(err(ln, "expected header `mesh2d v1 <Q1|Q2>`"));
    }
    let kind: ElementKind = header[2].parse().map_err(|m: String| err(ln, m))?;
    let nen = kind.nodes_per_element();

    let n_nodes = counted(&mut lines, "nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for k in 0..n_nodes {
        let (ln, t) = lines.next().ok_or_else(|| err(lines.last + 1, "missing node line"))?;
        if t.len() != 3 {
            return Err(err(ln, "node line must be `id x y`"));
        }
        let id: usize = num(ln, t[0], "node id")?;
        if id != k {
            return Err(err(ln, format!("node id {id} out of sequence (expected {k})")));
        }
        let (x, y): (f64, f64) = (num(ln, t[1], "coordinate")?, num(ln, t[2], "coordinate")?);
        if !x.is_finite() || !y.is_finite() {
            return Err(err(ln, "non-finite coordinate"));
        }
        nodes.push(Vec2::new(x, y));
    }

    let n_elem = counted(&mut lines, "elements")?;
    let mut elements = Vec::with_capacity(n_elem);
    for k in 0..n_elem {
        let (ln, t) = lines.next().ok_or_else(|| err(lines.last + 1, "missing element line"))?;
        if t.len() != 2 + nen {
            return Err(err(ln, format!("{kind} element needs {nen} nodes, got {}", t.len().saturating_sub(2))));
        }
        let id: usize = num(ln, t[0], "element id")?;
        if id != k {
            return Err(err(ln, format!("element id {id} out of sequence (expected {k})")));
        }
        let body = num(ln, t[1], "body id")?;
        let conn = t[2..].iter().map(|s| num(ln, s, "node id")).collect::<Result<Vec<usize>, _>>()?;
        elements.push(Element { nodes: conn, body });
    }
    let mesh = Mesh2D { kind, nodes, elements };
    mesh.validate()?;

    let mut sets = BoundarySets::default();
    let (mut n_dir, mut n_con) = (0, 0);
    while let Some((ln, t)) = lines.next() {
        if t.len() < 3 || t[0] != "set" {
            return Err(err(ln, "expected `set <dirichlet|neumann|contact> <body> <node ids...>`"));
        }
        let body: usize = num(ln, t[2], "body id")?;
        let ids = t[3..].iter().map(|s| num(ln, s, "node id")).collect::<Result<Vec<usize>, _>>()?;
        if let Some(bad) = ids.iter().find(|&&n| n >= mesh.nodes.len()) {
            return Err(err(ln, format!("unknown node {bad}")));
        }
        match t[1] {
            "dirichlet" => {
                sets.dirichlet.extend(ids.iter().map(|&node| DirichletEntry {
                    node,
                    components: Components::Both,
                    motion: n_dir,
                }));
                n_dir += 1;
            }
            "neumann" => {
                let step = if kind == ElementKind::Q2 { 2 } else { 1 };
                if ids.len() < step + 1 || (ids.len() - 1) % step != 0 {
                    return Err(err(ln, "neumann chain has an incomplete segment"));
                }
                for s in (0..ids.len() - 1).step_by(step) {
                    sets.neumann.push(NeumannEntry {
                        segment: ids[s..=s + step].to_vec(),
                        traction: Vec2::zeros(),
                    });
                }
            }
            "contact" => {
                sets.contact.push(ContactChain { body, name: format!("contact{n_con}"), nodes: ids });
                n_con += 1;
            }
            other => return Err(err(ln, format!("unknown set kind `{other}`"))),
        }
    }
    sets.validate(&mesh)?;
    Ok((mesh, sets))
}

/// Serializes a mesh and its boundary sets in the format read by
/// [`parse_mesh`]. Dirichlet components and Neumann tractions are not part of
/// the format and are dropped.
pub fn write_mesh(mesh: &Mesh2D, sets: &BoundarySets) -> String {
    let mut s = String::new();
    let bodies = mesh.node_bodies();
    writeln!(s, "mesh2d v1 {}", mesh.kind).unwrap();
    writeln!(s, "nodes {}", mesh.nodes.len()).unwrap();
    for (i, p) in mesh.nodes.iter().enumerate() {
        writeln!(s, "{i} {:e} {:e}", p.x, p.y).unwrap();
    }
    writeln!(s, "elements {}", mesh.elements.len()).unwrap();
    for (i, e) in mesh.elements.iter().enumerate() {
        let conn: Vec<String> = e.nodes.iter().map(|n| n.to_string()).collect();
        writeln!(s, "{i} {} {}", e.body, conn.join(" ")).unwrap();
    }
    let n_motion = sets.dirichlet.iter().map(|d| d.motion + 1).max().unwrap_or(0);
    for m in 0..n_motion {
        let ids: Vec<usize> = sets.dirichlet.iter().filter(|d| d.motion == m).map(|d| d.node).collect();
        if let Some(&first) = ids.first() {
            let list: Vec<String> = ids.iter().map(|n| n.to_string()).collect();
            writeln!(s, "set dirichlet {} {}", bodies[first], list.join(" ")).unwrap();
        }
    }
    for n in &sets.neumann {
        let list: Vec<String> = n.segment.iter().map(|n| n.to_string()).collect();
        writeln!(s, "set neumann {} {}", bodies[n.segment[0]], list.join(" ")).unwrap();
    }
    for c in &sets.contact {
        let list: Vec<String> = c.nodes.iter().map(|n| n.to_string()).collect();
        writeln!(s, "set contact {} {}", c.body, list.join(" ")).unwrap();
    }
    s
}
