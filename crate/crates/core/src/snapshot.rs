//! KVFLOW1 field snapshots.
//!
//! Line 1: `KVFLOW1 <kind> <m> <n1> ... <nm>`; then one line per node in
//! row-major grid order holding the m contravariant components. Values are
//! written in shortest round-trip form, so read(write(x)) == x bitwise.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{KvError, Result};
use crate::fields::VectorField;
use crate::manifold::{Manifold, ManifoldKind};

pub const MAGIC: &str = "KVFLOW1";

/// A parsed snapshot, not yet bound to a manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub kind: ManifoldKind,
    pub resolution: Vec<usize>,
    pub field: VectorField,
}

impl Snapshot {
    /// Check the header against `manifold` and hand back the field.
    pub fn into_field(self, manifold: &Manifold) -> Result<VectorField> {
        if self.kind != manifold.kind() || self.resolution != manifold.spec.resolution {
            return Err(KvError::Snapshot(format!(
                "snapshot is {} {:?}, manifold is {} {:?}",
                self.kind,
                self.resolution,
                manifold.kind(),
                manifold.spec.resolution
            )));
        }
        Ok(self.field)
    }
}

pub fn to_string(x: &VectorField, manifold: &Manifold) -> String {
    let m = x.dim();
    let mut s = format!("{MAGIC} {} {m}", manifold.kind());
    for n in &manifold.spec.resolution {
        let _ = write!(s, " {n}");
    }
    s.push('\n');
    for node in 0..x.node_count() {
        let vals: Vec<String> = x.at(node).iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&vals.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse(text: &str) -> Result<Snapshot> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| KvError::Snapshot("empty file".into()))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some(MAGIC) {
        return Err(KvError::Snapshot(format!("missing {MAGIC} header")));
    }
    let kind: ManifoldKind = tok
        .next()
        .ok_or_else(|| KvError::Snapshot("missing manifold kind".into()))?
        .parse()?;
    let m: usize = tok
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| KvError::Snapshot("missing or invalid dimension".into()))?;
    if m != kind.dim() {
        return Err(KvError::Snapshot(format!("{kind} has dimension {}, header says {m}", kind.dim())));
    }
    let resolution: Vec<usize> = tok
        .map(|t| t.parse().map_err(|_| KvError::Snapshot(format!("invalid resolution `{t}`"))))
        .collect::<Result<_>>()?;
    if resolution.len() != m {
        return Err(KvError::Snapshot(format!("expected {m} resolution entries, got {}", resolution.len())));
    }
    let nodes: usize = resolution.iter().product();
    let mut data = Vec::with_capacity(nodes * m);
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for t in line.split(' ') {
            let v: f64 = t
                .parse()
                .map_err(|_| KvError::Snapshot(format!("line {}: invalid number `{t}`", i + 2)))?;
            data.push(v);
        }
        if data.len() - before != m {
            return Err(KvError::Snapshot(format!(
                "line {}: expected {m} components, got {}",
                i + 2,
                data.len() - before
            )));
        }
        count += 1;
    }
    if count != nodes {
        return Err(KvError::Snapshot(format!("expected {nodes} node lines, got {count}")));
    }
    Ok(Snapshot {
        kind,
        resolution,
        field: VectorField::from_data(m, data)?,
    })
}

pub fn read(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).map_err(|e| KvError::io(path, e))?;
    parse(&text)
}

pub fn write(path: &Path, x: &VectorField, manifold: &Manifold) -> Result<()> {
    write_atomic(path, to_string(x, manifold).as_bytes())
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| KvError::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| KvError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| KvError::io(&tmp, e))?;
    f.sync_all().map_err(|e| KvError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| KvError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::analytic::random_bandlimited;
    use crate::manifold::{build_manifold, ManifoldSpec};

    #[test]
    fn round_trip_is_bitwise() {
        let m = build_manifold(&ManifoldSpec::new(ManifoldKind::UnitSphereS2, &[8, 16])).unwrap();
        let x = random_bandlimited(&m, 3);
        let back = parse(&to_string(&x, &m)).unwrap().into_field(&m).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let m = build_manifold(&ManifoldSpec::new(ManifoldKind::FlatTorusT2, &[8, 8])).unwrap();
        let other = build_manifold(&ManifoldSpec::new(ManifoldKind::FlatTorusT2, &[8, 10])).unwrap();
        let x = random_bandlimited(&m, 1);
        assert!(parse(&to_string(&x, &m)).unwrap().into_field(&other).is_err());
        assert!(parse("KVFLOW2 flat_torus_t2 2 8 8\n").is_err());
        let truncated: String = to_string(&x, &m).lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(parse(&truncated).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.kvf");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
