//! Checkpoint files.
//!
//! Layout: one ASCII header line followed by a canonical JSON payload.
//!
//! ```text
//! DGN-CHECKPOINT <version> sha256=<hex digest of the payload bytes>
//! {"format_version":1,"network":{...}}
//! ```
//!
//! The payload holds the network config (including truncation and
//! surrogate choices), every weight matrix row-major, and the init seed.
//! Floats are written in shortest round-trip form, so loading is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::Network;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "DGN-CHECKPOINT";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Payload {
    format_version: u32,
    network: Network,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode_checkpoint(net: &Network) -> Result<String> {
    if !net.params.is_finite() {
        return Err(Error::InvalidParam {
            name: "params",
            reason: "cannot checkpoint non-finite weights".into(),
        });
    }
    let payload = serde_json::to_string(&Payload {
        format_version: CHECKPOINT_VERSION,
        network: net.clone(),
    })?;
    Ok(format!(
        "{MAGIC} {CHECKPOINT_VERSION} sha256={}\n{payload}\n",
        sha256_hex(payload.as_bytes())
    ))
}

pub fn decode_checkpoint(text: &str) -> Result<Network> {
    let (header, rest) = text.split_once('\n').ok_or(Error::Checksum)?;
    let mut parts = header.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::Parse {
            path: "checkpoint".into(),
            line: 1,
            reason: "missing checkpoint header".into(),
        });
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse {
            path: "checkpoint".into(),
            line: 1,
            reason: "bad version field".into(),
        })?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let digest = parts
        .next()
        .and_then(|d| d.strip_prefix("sha256="))
        .ok_or(Error::Checksum)?;
    let payload = rest.strip_suffix('\n').unwrap_or(rest);
    if sha256_hex(payload.as_bytes()) != digest {
        return Err(Error::Checksum);
    }
    let p: Payload = serde_json::from_str(payload)?;
    if p.format_version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            found: p.format_version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let n = p.network;
    Network::new(n.config, n.params, n.seed)
}

pub fn save_checkpoint(net: &Network, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(net)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Network> {
    decode_checkpoint(&fs::read_to_string(path)?)
}

/// Digest of the encoded checkpoint; stable for identical networks.
pub fn checkpoint_digest(net: &Network) -> Result<String> {
    Ok(sha256_hex(encode_checkpoint(net)?.as_bytes()))
}
