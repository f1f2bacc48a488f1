//! Plain-text field files.
//!
//! ```text
//! # minigraph-field v1, mesh=polar_annulus, dims=65x16
//! 0,0,1.0500000000000000e0,0.0000000000000000e0,3.1317...e-1
//! ```
//!
//! One row per node in storage order: `i, j, x1, x2, value`. Values carry 17
//! significant digits, so finite doubles round-trip bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use minigraph::{Error, Mesh, Result, ScalarField};

pub const VERSION: &str = "v1";
const MAGIC: &str = "# minigraph-field";

pub fn header(mesh: &Mesh) -> String {
    format!("{MAGIC} {VERSION}, mesh={}, dims={}", mesh.type_name(), mesh.dims_label())
}

pub fn to_string(u: &ScalarField) -> String {
    let mesh = u.mesh();
    let mut out = header(mesh);
    out.push('\n');
    for (k, v) in u.values().iter().enumerate() {
        let (i, j) = mesh.logical(k);
        let x = mesh.node_coords(k);
        writeln!(out, "{i},{j},{:.16e},{:.16e},{v:.16e}", x[0], x[1]).expect("writing to a String");
    }
    out
}

/// Mesh type and dims declared in a header line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub mesh_type: String,
    pub dims: String,
}

pub fn parse_header(line: &str) -> Result<Header> {
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Format(format!("not a minigraph field file (header {line:?})")))?;
    let mut parts = rest.split(',').map(str::trim);
    let version = parts.next().unwrap_or_default();
    if version == "v0" {
        return Err(Error::Format(
            "field file version v0 is no longer read: v0 rows lacked node coordinates. \
             Re-export the field with this tool, or insert the x1,x2 columns after i,j \
             and change the header to v1"
                .into(),
        ));
    }
    if version != VERSION {
        return Err(Error::Format(format!("unsupported field file version {version:?}, expected {VERSION}")));
    }
    let mut mesh_type = None;
    let mut dims = None;
    for p in parts {
        match p.split_once('=') {
            Some(("mesh", v)) => mesh_type = Some(v.to_string()),
            Some(("dims", v)) => dims = Some(v.to_string()),
            _ => return Err(Error::Format(format!("unrecognized header entry {p:?}"))),
        }
    }
    match (mesh_type, dims) {
        (Some(mesh_type), Some(dims)) => Ok(Header { mesh_type, dims }),
        _ => Err(Error::Format("header must declare mesh= and dims=".into())),
    }
}

/// Parses a field written for `mesh`. The header, the row order and the node
/// coordinates must all agree with the mesh.
pub fn from_str(text: &str, mesh: &Mesh) -> Result<ScalarField> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| Error::Format("empty field file".into()))?;
    let head = parse_header(first.trim())?;
    if head.mesh_type != mesh.type_name() {
        return Err(Error::Format(format!(
            "file holds a {} field, expected {}",
            head.mesh_type,
            mesh.type_name()
        )));
    }
    if head.dims != mesh.dims_label() {
        return Err(Error::Format(format!("file dims {} differ from mesh dims {}", head.dims, mesh.dims_label())));
    }
    let mut values = Vec::with_capacity(mesh.num_nodes());
    for (lineno, line) in lines {
        let k = values.len();
        let bad = |msg: &str| Error::Format(format!("line {}: {msg}", lineno + 1));
        if k >= mesh.num_nodes() {
            return Err(bad("more rows than mesh nodes"));
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(bad(&format!("expected 5 columns, found {}", cols.len())));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad index {s:?}")));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
        let (i, j) = (idx(cols[0])?, idx(cols[1])?);
        if (i, j) != mesh.logical(k) {
            return Err(bad(&format!("node ({i}, {j}) out of order, expected {:?}", mesh.logical(k))));
        }
        let x = mesh.node_coords(k);
        for (c, want) in [num(cols[2])?, num(cols[3])?].into_iter().zip(x) {
            if (c - want).abs() > 1e-12 * (1.0 + want.abs()) {
                return Err(bad(&format!("coordinate {c} does not match the mesh node at {want}")));
            }
        }
        values.push(num(cols[4])?);
    }
    if values.len() != mesh.num_nodes() {
        return Err(Error::Format(format!("found {} rows, mesh has {} nodes", values.len(), mesh.num_nodes())));
    }
    ScalarField::new(*mesh, values)
}

pub fn read(path: &Path, mesh: &Mesh) -> Result<ScalarField> {
    let text = fs::read_to_string(path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    from_str(&text, mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> Mesh {
        Mesh::PolarAnnulus { r: [1.0, 2.0], nr: 7, ntheta: 6 }
    }

    #[test]
    fn header_format() {
        assert_eq!(header(&mesh()), "# minigraph-field v1, mesh=polar_annulus, dims=7x6");
        let h = parse_header("# minigraph-field v1, mesh=box, dims=9x9").unwrap();
        assert_eq!((h.mesh_type.as_str(), h.dims.as_str()), ("box", "9x9"));
        assert!(parse_header("# minigraph-field v1, mesh=box").is_err());
        assert!(parse_header("# minigraph-field v2, mesh=box, dims=9x9").is_err());
    }

    #[test]
    fn rejects_out_of_order_rows_and_bad_coordinates() {
        let m = mesh();
        let text = to_string(&ScalarField::constant(m, 1.0).unwrap());
        let mut rows: Vec<&str> = text.lines().collect();
        rows.swap(1, 2);
        assert!(matches!(from_str(&rows.join("\n"), &m), Err(Error::Format(_))));
        let shifted = text.replacen("0,0,1.0000000000000000e0", "0,0,1.5000000000000000e0", 1);
        assert!(matches!(from_str(&shifted, &m), Err(Error::Format(_))));
        let truncated: Vec<&str> = text.lines().take(5).collect();
        assert!(matches!(from_str(&truncated.join("\n"), &m), Err(Error::Format(_))));
    }
}
