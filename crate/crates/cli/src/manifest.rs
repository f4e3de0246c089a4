//! Run manifests: every command records its inputs (with digests), config,
//! seed, and output list; outputs embed the manifest digest so results are
//! traceable to the exact invocation that produced them.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub struct RunManifest {
    value: Value,
}

impl RunManifest {
    pub fn new(
        command: &str,
        inputs: &[(&str, &[u8])],
        config: Value,
        seed: u64,
        outputs: &[&str],
    ) -> Self {
        let inputs: Vec<Value> = inputs
            .iter()
            .map(|(path, bytes)| json!({"path": path, "sha256": sha256_hex(bytes)}))
            .collect();
        let mut map = Map::new();
        map.insert("command".into(), json!(command));
        map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        map.insert("inputs".into(), json!(inputs));
        map.insert("config".into(), config);
        map.insert("seed".into(), json!(seed));
        map.insert("outputs".into(), json!(outputs));
        Self { value: Value::Object(map) }
    }

    /// Canonical serialized form (sorted keys, pretty).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(&self.value).expect("manifest serializes");
        bytes.push(b'\n');
        bytes
    }

    /// Digest of the canonical form; outputs reference this.
    pub fn digest(&self) -> String {
        sha256_hex(&self.to_bytes())
    }
}

/// Rounds to 12 significant digits so serialized numbers are stable and
/// fine-grained enough to verify 1e-9 tolerances downstream.
pub fn sig12(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.11e}").parse().unwrap_or(x)
    } else {
        x
    }
}

/// Fixed-format float for CSV cells: 12 significant digits, scientific.
pub fn csv_num(x: f64) -> String {
    format!("{x:.11e}")
}
