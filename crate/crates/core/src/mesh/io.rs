//! Plain-text mesh format.
//!
//! ```text
//! nodes N elements E boundary B kind {tri|quad}
//! x y                  (N lines)
//! i j k [l]            (E lines, 0-based node indices)
//! i j tagname          (B lines)
//! ```

use std::fmt::Write as _;

use super::{BoundaryTag, ElementKind, Mesh};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        message: message.into(),
    })
}

fn field<F: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<F> {
    match tok {
        Some(t) => t
            .parse()
            .or_else(|_| parse_err(line, format!("cannot parse {what} from `{t}`"))),
        None => parse_err(line, format!("missing {what}")),
    }
}

/// Parses a mesh document. Clockwise elements are reoriented; validation
/// failures are reported with the offending line number.
pub fn load_mesh<T: Real>(source: &str) -> Result<Mesh<T>> {
    let mut lines = source
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let Some((hline, header)) = lines.next() else {
        return parse_err(1, "empty mesh document");
    };
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 8
        || tok[0] != "nodes"
        || tok[2] != "elements"
        || tok[4] != "boundary"
        || tok[6] != "kind"
    {
        return parse_err(
            hline,
            "expected `nodes N elements E boundary B kind {tri|quad}`",
        );
    }
    let n: usize = field(Some(tok[1]), hline, "node count")?;
    let ne: usize = field(Some(tok[3]), hline, "element count")?;
    let nb: usize = field(Some(tok[5]), hline, "boundary count")?;
    let kind: ElementKind = tok[7]
        .parse()
        .or_else(|_| parse_err(hline, format!("unknown element kind `{}`", tok[7])))?;
    let nen = kind.nodes_per_element();

    let mut next = |what: &str| -> Result<(usize, &str)> {
        lines.next().ok_or_else(|| Error::Parse {
            line: source.lines().count() + 1,
            message: format!("unexpected end of document while reading {what}"),
        })
    };

    let mut coords = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = next("nodes")?;
        let mut it = l.split_whitespace();
        let x: T = field(it.next(), ln, "x coordinate")?;
        let y: T = field(it.next(), ln, "y coordinate")?;
        if it.next().is_some() {
            return parse_err(ln, "node line must hold exactly two coordinates");
        }
        coords.push([x, y]);
    }

    let mut elements = Vec::with_capacity(ne);
    let mut element_lines = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = next("elements")?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| field(Some(t), ln, "node index"))
            .collect::<Result<_>>()?;
        if idx.len() != nen {
            return parse_err(
                ln,
                format!("expected {nen} node indices, found {}", idx.len()),
            );
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return parse_err(
                ln,
                format!("node index {bad} out of range (mesh has {n} nodes)"),
            );
        }
        elements.push(idx);
        element_lines.push(ln);
    }

    let mut boundary = Vec::with_capacity(nb);
    let mut boundary_lines = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = next("boundary edges")?;
        let mut it = l.split_whitespace();
        let i: usize = field(it.next(), ln, "edge node")?;
        let j: usize = field(it.next(), ln, "edge node")?;
        let Some(tag) = it.next() else {
            return parse_err(ln, "missing boundary tag");
        };
        if i >= n || j >= n {
            return parse_err(
                ln,
                format!("boundary node out of range (mesh has {n} nodes)"),
            );
        }
        boundary.push((i, j, BoundaryTag::new(tag)));
        boundary_lines.push(ln);
    }
    if let Some((ln, _)) = lines.next() {
        return parse_err(ln, "trailing content after the declared sections");
    }

    let at = |line: usize| {
        move |e: Error| Error::Parse {
            line,
            message: e.to_string(),
        }
    };
    for (e, el) in elements.iter().enumerate() {
        Mesh::check_element(kind, &coords, e, el).map_err(at(element_lines[e]))?;
    }
    let mut mesh = Mesh::from_elements(kind, coords, elements).map_err(at(hline))?;
    for ((i, j, tag), ln) in boundary.into_iter().zip(boundary_lines) {
        mesh.attach_boundary_edge(i, j, tag).map_err(at(ln))?;
    }
    Ok(mesh)
}

/// Serializes a mesh; coordinates use the shortest round-trip representation
/// so `load_mesh(save_mesh(m))` reproduces them bit-exactly.
pub fn save_mesh<T: Real>(mesh: &Mesh<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "nodes {} elements {} boundary {} kind {}",
        mesh.node_count(),
        mesh.element_count(),
        mesh.boundary_edges().len(),
        mesh.kind().name()
    );
    for p in mesh.coords() {
        let _ = writeln!(out, "{} {}", p[0], p[1]);
    }
    for el in mesh.elements() {
        let s: Vec<String> = el.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{}", s.join(" "));
    }
    for b in mesh.boundary_edges() {
        let _ = writeln!(out, "{} {} {}", b.nodes[0], b.nodes[1], b.tag);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::StructuredSpec;

    const TRI: &str =
        "nodes 3 elements 1 boundary 3 kind tri\n0 0\n1 0\n0 1\n0 1 2\n0 1 a\n1 2 b\n2 0 c\n";

    #[test]
    fn single_triangle() {
        let m = load_mesh::<f64>(TRI).unwrap();
        assert_eq!(m.element_count(), 1);
        assert_eq!(m.element_area(0), 0.5);
    }

    #[test]
    fn clockwise_triangle_is_fixed() {
        let doc = "nodes 3 elements 1 boundary 0 kind tri\n0 0\n1 0\n0 1\n0 2 1\n";
        let m = load_mesh::<f64>(doc).unwrap();
        assert_eq!(m.element_area(0), 0.5);
    }

    #[test]
    fn out_of_range_node_reports_line() {
        let doc = "nodes 3 elements 1 boundary 0 kind tri\n0 0\n1 0\n0 1\n0 1 99\n";
        match load_mesh::<f64>(doc) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_element_reports_line() {
        let doc = "nodes 3 elements 1 boundary 0 kind tri\n0 0\n1 0\n2 0\n0 1 2\n";
        match load_mesh::<f64>(doc) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("degenerate"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_counts() {
        assert!(load_mesh::<f64>("nodes x elements 1 boundary 0 kind tri\n").is_err());
        assert!(
            load_mesh::<f64>("nodes 4 elements 1 boundary 0 kind tri\n0 0\n1 0\n0 1\n0 1 2\n")
                .is_err()
        );
        assert!(load_mesh::<f64>("nodes 3 elements 1 boundary 0 kind hex\n").is_err());
    }

    #[test]
    fn round_trip_structured() {
        let m = StructuredSpec::new(3, 5, 0.3, 0.7)
            .tri()
            .build::<f64>()
            .unwrap();
        let back = load_mesh::<f64>(&save_mesh(&m)).unwrap();
        assert_eq!(back.coords(), m.coords());
        assert!(back.elements().eq(m.elements()));
        assert_eq!(back.boundary_edges(), m.boundary_edges());
    }
}
