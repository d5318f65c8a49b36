//! Policy checkpoint format.
//!
//! Binary file: a magic line, then one section per parameter table. Each
//! section is an ASCII header `section <name> <dim0>[x<dim1>...]\n` followed
//! by the row-major payload as little-endian 64-bit floats. `token_logits`
//! is stored flat because vocabulary subspaces may differ in size.
//!
//! A text manifest alongside lists section names, shapes, and the SHA-256 of
//! the binary payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::arena::ArenaSpec;
use crate::error::{Error, Result};
use crate::policy::PolicyParams;

const MAGIC: &str = "hintflow-checkpoint v1";

struct Section {
    name: &'static str,
    shape: Vec<usize>,
    values: Vec<f64>,
}

fn sections_of(policy: &PolicyParams) -> Vec<Section> {
    let n = policy.lang_logits.len();
    let lang: Vec<f64> = policy.lang_logits.iter().flatten().copied().collect();
    let token: Vec<f64> = policy.token_logits.iter().flatten().copied().collect();
    let families = policy.answer_logits.first().map_or(0, Vec::len);
    let answers = policy
        .answer_logits
        .first()
        .and_then(|f| f.first())
        .map_or(0, Vec::len);
    let answer: Vec<f64> = policy
        .answer_logits
        .iter()
        .flat_map(|f| f.iter().flatten())
        .copied()
        .collect();
    vec![
        Section { name: "format_logit", shape: vec![1], values: vec![policy.format_logit] },
        Section { name: "lang_logits", shape: vec![n, n], values: lang },
        Section { name: "token_logits", shape: vec![token.len()], values: token },
        Section { name: "answer_logits", shape: vec![n, families, answers], values: answer },
    ]
}

fn shape_str(shape: &[usize]) -> String {
    shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

/// Writes `<path>` and `<path>.manifest`.
pub fn save(policy: &PolicyParams, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    writeln!(buf, "{MAGIC}")?;
    let sections = sections_of(policy);
    for s in &sections {
        writeln!(buf, "section {} {}", s.name, shape_str(&s.shape))?;
        for v in &s.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        writeln!(buf)?;
    }
    let digest = hex_digest(&buf);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, &buf)?;

    let mut manifest = String::new();
    for s in &sections {
        manifest.push_str(&format!("{} {}\n", s.name, shape_str(&s.shape)));
    }
    manifest.push_str(&format!("sha256 {digest}\n"));
    fs::write(manifest_path(path), manifest)?;
    Ok(())
}

pub fn manifest_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".manifest");
    os.into()
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads a checkpoint and validates its shapes against the arena spec.
pub fn load(path: &Path, spec: &ArenaSpec) -> Result<PolicyParams> {
    let bytes = fs::read(path)?;
    let mut cursor = 0usize;

    let magic = read_line(&bytes, &mut cursor)?;
    if magic != MAGIC {
        return Err(Error::Parse(format!("bad checkpoint magic: `{magic}`")));
    }

    let mut template = PolicyParams::init(spec);
    let expected = sections_of(&template);
    let mut loaded: Vec<Vec<f64>> = Vec::new();
    for want in &expected {
        let header = read_line(&bytes, &mut cursor)?;
        let mut parts = header.split_whitespace();
        let tag = parts.next().unwrap_or("");
        let name = parts.next().unwrap_or("");
        let shape = parts.next().unwrap_or("");
        if tag != "section" || name != want.name {
            return Err(Error::Parse(format!(
                "expected section `{}`, found `{header}`",
                want.name
            )));
        }
        if shape != shape_str(&want.shape) {
            return Err(Error::Config(format!(
                "checkpoint section `{name}` has shape {shape}, config expects {}",
                shape_str(&want.shape)
            )));
        }
        let count = want.values.len();
        let need = count * 8;
        if cursor + need > bytes.len() {
            return Err(Error::Parse(format!("truncated payload in section `{name}`")));
        }
        let mut values = Vec::with_capacity(count);
        for i in 0..count {
            let start = cursor + i * 8;
            let v = f64::from_le_bytes(bytes[start..start + 8].try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite value in section `{name}`")));
            }
            values.push(v);
        }
        cursor += need;
        let newline = read_line(&bytes, &mut cursor)?;
        if !newline.is_empty() {
            return Err(Error::Parse(format!("malformed section terminator after `{name}`")));
        }
        loaded.push(values);
    }

    template.format_logit = loaded[0][0];
    fill_rows(&mut template.lang_logits, &loaded[1]);
    fill_rows(&mut template.token_logits, &loaded[2]);
    let mut it = loaded[3].iter().copied();
    for fam in &mut template.answer_logits {
        for row in fam {
            for x in row {
                *x = it.next().expect("shape-checked payload");
            }
        }
    }
    Ok(template)
}

fn fill_rows(rows: &mut [Vec<f64>], flat: &[f64]) {
    let mut it = flat.iter().copied();
    for row in rows {
        for x in row {
            *x = it.next().expect("shape-checked payload");
        }
    }
}

fn read_line(bytes: &[u8], cursor: &mut usize) -> Result<String> {
    let rest = &bytes[*cursor..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Parse("unterminated line in checkpoint".into()))?;
    let line = std::str::from_utf8(&rest[..end])
        .map_err(|_| Error::Parse("non-utf8 header in checkpoint".into()))?
        .to_string();
    *cursor += end + 1;
    Ok(line)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::stream_rng;
    use rand::Rng;

    #[test]
    fn save_load_round_trip() {
        let spec = ArenaSpec::default();
        let mut policy = PolicyParams::init(&spec);
        let mut rng = stream_rng(1, 2, 3, 4);
        for i in 0..policy.param_count() {
            policy.set_flat(i, rng.gen::<f64>() * 4.0 - 2.0);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.ckpt");
        save(&policy, &path).unwrap();
        let loaded = load(&path, &spec).unwrap();
        assert_eq!(policy, loaded);

        let manifest = std::fs::read_to_string(manifest_path(&path)).unwrap();
        assert!(manifest.contains("format_logit 1"));
        assert!(manifest.contains("lang_logits 6x6"));
        assert!(manifest.contains("answer_logits 6x4x8"));
        assert!(manifest.lines().last().unwrap().starts_with("sha256 "));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let spec = ArenaSpec::default();
        let policy = PolicyParams::init(&spec);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.ckpt");
        save(&policy, &path).unwrap();

        let mut other = ArenaSpec::default();
        other.languages.pop();
        match load(&path, &other) {
            Err(Error::Config(msg)) => assert!(msg.contains("shape")),
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn garbage_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"not a checkpoint\n").unwrap();
        assert!(load(&path, &ArenaSpec::default()).is_err());
    }
}
